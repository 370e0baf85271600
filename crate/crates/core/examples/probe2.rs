// Temporary instrumentation; removed before release.
use gtp_core::collision::{pair_violations, closest_point_on_polyline};
use gtp_core::sim::{self, nominal_strategy};
use std::path::Path;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let sc = sim::load_scenario(Path::new(&args[1])).unwrap();
    let ctx = sc.to_context().unwrap();
    let layout = sc.intersection();
    let s_v = nominal_strategy(&sc.layout, &sc.ego.route());
    let s_o = nominal_strategy(&sc.layout, &sc.opponent.route());
    let ego = ctx.prepare(0, &s_v, None).unwrap();
    let opp = ctx.prepare(1, &s_o, None).unwrap();

    // lane violations alone
    let (worst_i, worst_v) = ego
        .geom
        .lane_violation
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let st = &ego.traj.states[worst_i];
    println!(
        "worst ego lane violation {:.4} at t={:.1} pose=({:.2},{:.2},{:.3}) speed {:.2} in_zone={}",
        worst_v, st.t, st.pose.x, st.pose.y, st.pose.theta, st.speed,
        layout.in_conflict_zone([st.pose.x, st.pose.y])
    );
    if worst_v > 0.0 {
        let z = &ego.geom.zones[worst_i];
        println!("zone: center ({:.2},{:.2}) theta {:.3} D {:.2} d {:.2}", z.center[0], z.center[1], z.theta, z.semi_major, z.semi_minor);
        for b in &layout.lane_boundaries {
            let q = closest_point_on_polyline(b, z.center);
            let m = z.margin(q);
            if m < 1.0 {
                println!("  boundary {:?}.. closest ({:.2},{:.2}) margin {:.4}", &b[0], q[0], q[1], m);
            }
        }
    }

    let viol = pair_violations(&ego.geom, &opp.geom).unwrap();
    let (wi, wv) = viol.iter().enumerate().fold((0, 0.0f64), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    println!("worst pair violation {:.4} at index {} t={:.1}", wv, wi, ego.traj.states[wi].t);
    let lane_at = ego.geom.lane_violation[wi];
    println!("  lane part {:.4}", lane_at);
    let z = &ego.geom.zones[wi];
    println!("  ego pose ({:.2},{:.2},{:.3}) v={:.2} D={:.2}", z.center[0], z.center[1], z.theta, ego.traj.states[wi].speed, z.semi_major);
    for v in &opp.geom.footprints[wi].vertices {
        let m = z.margin(*v);
        if m < 1.0 { println!("  opp vertex ({:.2},{:.2}) margin {:.4}", v[0], v[1], m); }
    }
    println!("  opp pose ({:.2},{:.2})", opp.traj.states[wi].pose.x, opp.traj.states[wi].pose.y);
}
