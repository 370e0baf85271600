use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gtp_core::geometry::{fit_g1, Pose};
use gtp_core::sim::{self, RunMode, SimError};

#[derive(Parser)]
#[command(
    name = "gtp",
    about = "Two-vehicle intersection negotiation simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario and write traces, report and plots.
    Run {
        /// Scenario file (TOML).
        scenario: PathBuf,
        /// nominal: fixed default paths; gtp: solve the game.
        #[arg(long, default_value = "gtp")]
        mode: RunMode,
        /// Override the solver seed from the scenario file.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the sampling step (seconds).
        #[arg(long)]
        dt: Option<f64>,
        /// CSV file with x,y columns, drawn over the scene plot.
        #[arg(long)]
        overlay: Option<PathBuf>,
    },
    /// Re-check every derived field of a run report.
    Verify {
        /// report.json produced by `gtp run`.
        report: PathBuf,
    },
    /// Fit a single clothoid between two oriented poses (debug tool).
    Fit {
        /// Start pose as x,y,theta.
        #[arg(long, value_parser = parse_pose)]
        from: Pose,
        /// End pose as x,y,theta.
        #[arg(long, value_parser = parse_pose)]
        to: Pose,
    },
}

fn parse_pose(text: &str) -> Result<Pose, String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err("expected x,y,theta".into());
    }
    let mut vals = [0.0; 3];
    for (i, p) in parts.iter().enumerate() {
        vals[i] = p
            .trim()
            .parse::<f64>()
            .map_err(|e| format!("component {i}: {e}"))?;
    }
    Ok(Pose::new(vals[0], vals[1], vals[2]))
}

fn load_overlay(path: &Path) -> Result<Vec<[f64; 2]>, SimError> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| SimError::Parse {
        path: path.display().to_string(),
        message: "empty overlay file".into(),
    })?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let ix = cols.iter().position(|c| *c == "x");
    let iy = cols.iter().position(|c| *c == "y");
    let (ix, iy) = match (ix, iy) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(SimError::Parse {
                path: path.display().to_string(),
                message: "overlay header must contain x and y columns".into(),
            })
        }
    };
    let mut pts = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let parse = |idx: usize| -> Result<f64, SimError> {
            fields
                .get(idx)
                .and_then(|f| f.trim().parse::<f64>().ok())
                .ok_or_else(|| SimError::Parse {
                    path: path.display().to_string(),
                    message: format!("row {}: bad number", n + 2),
                })
        };
        pts.push([parse(ix)?, parse(iy)?]);
    }
    Ok(pts)
}

fn run_cmd(cli: Cli) -> Result<(), SimError> {
    match cli.cmd {
        Cmd::Run {
            scenario,
            mode,
            seed,
            out,
            dt,
            overlay,
        } => {
            let mut sc = sim::load_scenario(&scenario)?;
            if let Some(seed) = seed {
                sc.solver.seed = seed;
            }
            if let Some(dt) = dt {
                sc.dt = dt;
                sc.validate()?;
            }
            let overlay_pts = overlay.as_deref().map(load_overlay).transpose()?;
            let report = sim::run(&sc, mode)?;
            let files = sim::emit(&report, &out, overlay_pts.as_deref())?;
            println!(
                "mode={mode:?} decision={:?} min_gtc={:.3} m t_crit={:.2} s j={:.6}",
                report.outcome.decision, report.min_gtc, report.t_crit, report.outcome.j_value
            );
            if let Some((t1, t2)) = report.stop_interval {
                println!("stop interval: t1={t1:.2} s t2={t2:.2} s");
            }
            if let Some(t) = report.collision_t {
                println!("collision at t={t:.2} s");
            }
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Cmd::Verify { report } => {
            let rep = sim::load_report(&report)?;
            let checks = sim::verify_report(&rep);
            let mut all_ok = true;
            for (name, ok) in &checks {
                println!("{}: {name}", if *ok { "PASS" } else { "FAIL" });
                all_ok &= ok;
            }
            if all_ok {
                Ok(())
            } else {
                Err(SimError::Inconsistent("one or more checks failed".into()))
            }
        }
        Cmd::Fit { from, to } => {
            let seg = fit_g1(&from, &to).map_err(|e| SimError::Validation {
                field: "fit".into(),
                message: e.to_string(),
            })?;
            println!(
                "kappa0 = {:.9} 1/m\nsharpness = {:.9} 1/m^2\nlength = {:.9} m",
                seg.kappa0, seg.sharpness, seg.length
            );
            let end = seg.end_pose();
            println!(
                "endpoint = ({:.9}, {:.9}, {:.9})",
                end.x, end.y, end.theta
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_cmd(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
