// Temporary tuning probe; removed before release.
use gtp_core::game::Strategy;
use gtp_core::sim::{self, nominal_strategy, zone_entry_time, zone_exit_time, RunMode};
use std::path::Path;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let path = Path::new(&args[1]);
    let sc = sim::load_scenario(path).unwrap();
    let ctx = sc.to_context().unwrap();
    let layout = sc.intersection();

    let s_v = nominal_strategy(&sc.layout, &sc.ego.route());
    let s_o = nominal_strategy(&sc.layout, &sc.opponent.route());
    let ego = ctx.prepare(0, &s_v, None).unwrap();
    let opp = ctx.prepare(1, &s_o, None).unwrap();

    println!("ego path len {:.2}", ego.path.total_length());
    println!("opp path len {:.2}", opp.path.total_length());
    println!(
        "ego zone entry {:?} exit {:?}",
        zone_entry_time(&ego.traj, &layout),
        zone_exit_time(&ego.traj, &layout)
    );
    println!(
        "opp zone entry {:?} exit {:?}",
        zone_entry_time(&opp.traj, &layout),
        zone_exit_time(&opp.traj, &layout)
    );

    // ego crossing of the opponent's lane (layout frame x = -l/2 for a
    // north->south opponent)
    let lane_x = -0.5 * sc.layout.lane_width;
    let ego_cross = ego
        .traj
        .states
        .iter()
        .find(|st| st.pose.x <= lane_x)
        .map(|st| st.t);
    let opp_cross_of_that_y = ego_cross.and_then(|tc| {
        let y_at = ego
            .traj
            .states
            .iter()
            .find(|st| st.t >= tc)
            .map(|st| st.pose.y)
            .unwrap_or(0.0);
        opp.traj
            .states
            .iter()
            .find(|st| st.pose.y <= y_at)
            .map(|st| (st.t, y_at))
    });
    println!("ego crosses opp lane at t {ego_cross:?}");
    println!("opp reaches that y at {opp_cross_of_that_y:?}");

    let (q_v, q_o, min_gtc, t_crit) = ctx.pair_eval(&ego, &opp).unwrap();
    println!("nominal pair: min_gtc {min_gtc:.3} at t {t_crit:.2}");
    println!(
        "  q_v: i_safe {:.3} i_eff {:.3} penalty {:.1}",
        q_v.i_safe, q_v.i_eff, q_v.penalty
    );
    println!(
        "  q_o: i_safe {:.3} i_eff {:.3} penalty {:.1}",
        q_o.i_safe, q_o.i_eff, q_o.penalty
    );

    // ego crossing-time range achievable by strategy extremes
    println!("\ncrossing-time probes (ego strategies):");
    for (name, st) in [
        ("nominal", s_v),
        (
            "fast-wide",
            Strategy {
                x2: -1.0,
                y2: -1.5,
                x3: -9.0,
                y3: 1.75,
            },
        ),
        (
            "slow-tight",
            Strategy {
                x2: 3.0,
                y2: 3.0,
                x3: -3.6,
                y3: 1.0,
            },
        ),
        (
            "deep-slow",
            Strategy {
                x2: 3.2,
                y2: -0.5,
                x3: -3.6,
                y3: 2.6,
            },
        ),
    ] {
        match ctx.prepare(0, &st, None) {
            Ok(p) => {
                let cross = p
                    .traj
                    .states
                    .iter()
                    .find(|s| s.pose.x <= lane_x)
                    .map(|s| s.t);
                let entry = zone_entry_time(&p.traj, &layout);
                let (qv, _, gap, _) = ctx.pair_eval(&p, &opp).unwrap();
                println!(
                    "  {name}: entry {entry:?} cross {cross:?} viol-pen {:.1} gap {gap:.2} jump_viol {:.3}",
                    qv.penalty, p.geom_violation
                );
            }
            Err(e) => println!("  {name}: error {e}"),
        }
    }

    if args.len() > 2 && args[2] == "gtp" {
        let t0 = std::time::Instant::now();
        let report = sim::run(&sc, RunMode::Gtp).unwrap();
        println!(
            "\nGTP: decision {:?} j {:.4} min_gtc {:.3} elapsed {:.1?}",
            report.outcome.decision,
            report.outcome.j_value,
            report.min_gtc,
            t0.elapsed()
        );
        println!(
            "  ego strategy {:?}",
            report.outcome.s_v.as_array()
        );
        println!("  q_v penalty {:.2} q_o penalty {:.2}", report.outcome.q_v.penalty, report.outcome.q_o.penalty);
        println!(
            "  ego zone entry {:?} opp exit {:?} stop {:?}",
            zone_entry_time(&report.trace_ego, &layout),
            zone_exit_time(&report.trace_opp, &layout),
            report.stop_interval
        );
    }
}
