//! Scenario ingestion, end-to-end runs, and artifact emission.
//!
//! A scenario file is TOML: layout, two vehicles, payoff weights, safety-zone
//! parameters and solver settings, with documented defaults for everything
//! optional. `run` either simulates fixed default paths (nominal mode, to
//! expose the unresolved conflict) or solves the game and simulates the
//! equilibrium trajectories including any yield hold. `emit` writes CSV
//! traces, a JSON report and SVG plots; identical runs produce byte-identical
//! files.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collision::{self, VehicleDims, ZoneParams};
use crate::game::{
    solve_gnep, Decision, GameContext, GameError, GameOutcome, MotionLimits, Route, ScenarioGame,
    SolverConfig, Strategy, StrategyBounds, VehicleSetup,
};
use crate::geometry::{Arm, IntersectionLayout, TurnKind};
use crate::motion::TimedTrajectory;
use crate::payoff::PayoffWeights;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("{path}: parse error: {message}")]
    Parse { path: String, message: String },
    #[error("invalid scenario: {field}: {message}")]
    Validation { field: String, message: String },
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("report inconsistency: {0}")]
    Inconsistent(String),
}

impl SimError {
    /// Process exit code contract: 1 validation, 2 infeasible, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Parse { .. } | SimError::Validation { .. } | SimError::Inconsistent(_) => 1,
            SimError::Game(GameError::InfeasibleScenario { .. }) => 2,
            SimError::Game(_) => 2,
            SimError::Io { .. } => 3,
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> SimError {
    SimError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// One vehicle as declared in the scenario file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSpec {
    pub approach: Arm,
    pub exit: Arm,
    #[serde(default)]
    pub start_offset: f64,
    /// Entry staggering, seconds; may be negative (enters earlier).
    #[serde(default)]
    pub entry_delay: f64,
    pub length: f64,
    pub wheelbase: f64,
    /// Body width; defaults to the wheelbase.
    #[serde(default)]
    pub width: Option<f64>,
    /// Per-vehicle cruise limit; defaults to the global speed limit.
    #[serde(default)]
    pub v_max: Option<f64>,
}

impl VehicleSpec {
    pub fn dims(&self) -> VehicleDims {
        VehicleDims {
            length: self.length,
            wheelbase: self.wheelbase,
            width: self.width.unwrap_or(self.wheelbase),
        }
    }

    pub fn route(&self) -> Route {
        Route {
            approach: self.approach,
            exit: self.exit,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutSpec {
    pub lane_width: f64,
    pub approach_distance: f64,
    #[serde(default = "default_exit_distance")]
    pub exit_distance: f64,
}

fn default_exit_distance() -> f64 {
    40.0
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightSpec {
    pub w1: f64,
    pub w2: f64,
    pub lambda: f64,
    pub g_crit: f64,
    pub v_max: f64,
}

impl Default for WeightSpec {
    fn default() -> Self {
        Self {
            w1: 0.5,
            w2: 0.5,
            lambda: 1e3,
            g_crit: 2.0,
            v_max: 13.0,
        }
    }
}

/// Knobs of the game evaluation outside the payoff weights.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GameTunables {
    /// Junction curvature jumps beyond this count as violations, 1/m.
    pub kappa_jump_tol: f64,
    /// Yield search horizon, seconds.
    pub yield_horizon: f64,
    /// Length of the p3 corridor on the exit lane, meters.
    pub corridor_len: f64,
    /// Front gap kept to the conflict zone when stopping, meters.
    pub stop_gap: f64,
}

impl Default for GameTunables {
    fn default() -> Self {
        Self {
            kappa_jump_tol: 0.15,
            yield_horizon: 30.0,
            corridor_len: 25.0,
            stop_gap: 0.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    #[serde(default)]
    description: Option<String>,
    #[serde(default = "default_dt")]
    dt: f64,
    #[serde(default = "default_ttc")]
    ttc: f64,
    #[serde(default = "default_d_safe")]
    d_safe: f64,
    layout: LayoutSpec,
    #[serde(default)]
    weights: WeightSpec,
    ego: VehicleSpec,
    opponent: VehicleSpec,
    #[serde(default)]
    limits: MotionLimits,
    #[serde(default)]
    solver: SolverConfig,
    #[serde(default)]
    game: GameTunables,
    #[serde(default)]
    bounds: Option<BoundsSpec>,
}

fn default_dt() -> f64 {
    0.1
}
fn default_ttc() -> f64 {
    2.0
}
fn default_d_safe() -> f64 {
    0.2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSpec {
    pub ego: Option<StrategyBounds>,
    pub opponent: Option<StrategyBounds>,
}

/// Fully validated scenario with every default filled in. Serialized
/// verbatim into the run report as the effective-configuration echo.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub description: Option<String>,
    pub dt: f64,
    pub ttc: f64,
    pub d_safe: f64,
    pub layout: LayoutSpec,
    pub weights: WeightSpec,
    pub ego: VehicleSpec,
    pub opponent: VehicleSpec,
    pub limits: MotionLimits,
    pub solver: SolverConfig,
    pub game: GameTunables,
    pub bounds: Option<BoundsSpec>,
}

fn invalid(field: &str, message: impl Into<String>) -> SimError {
    SimError::Validation {
        field: field.into(),
        message: message.into(),
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt > 0.0) {
            return Err(invalid("dt", "must be positive"));
        }
        if !(self.ttc >= 0.0) {
            return Err(invalid("ttc", "must be non-negative"));
        }
        if !(self.d_safe >= 0.0) {
            return Err(invalid("d_safe", "must be non-negative"));
        }
        if !(self.layout.lane_width > 0.0) {
            return Err(invalid("layout.lane_width", "must be positive"));
        }
        if !(self.layout.approach_distance > 0.0) {
            return Err(invalid("layout.approach_distance", "must be positive"));
        }
        if !(self.layout.exit_distance > self.game.corridor_len) {
            return Err(invalid(
                "layout.exit_distance",
                "must exceed game.corridor_len",
            ));
        }
        let w = self.payoff_weights();
        w.validate()
            .map_err(|e| invalid("weights", e.to_string()))?;
        for (name, v) in [("ego", &self.ego), ("opponent", &self.opponent)] {
            v.dims()
                .validate()
                .map_err(|e| invalid(&format!("{name}.dims"), e.to_string()))?;
            v.route()
                .turn_kind()
                .map_err(|e| invalid(&format!("{name}.route"), e.to_string()))?;
            let max_offset = self.layout.approach_distance;
            if !(0.0..max_offset).contains(&v.start_offset) {
                return Err(invalid(
                    &format!("{name}.start_offset"),
                    format!("must lie in [0, {max_offset}) (before the turn area)"),
                ));
            }
            if let Some(vm) = v.v_max {
                if !(vm > 0.0) {
                    return Err(invalid(&format!("{name}.v_max"), "must be positive"));
                }
            }
            if !v.entry_delay.is_finite() {
                return Err(invalid(&format!("{name}.entry_delay"), "must be finite"));
            }
        }
        if !(self.limits.a_lat_max > 0.0) {
            return Err(invalid("limits.a_lat_max", "must be positive"));
        }
        if !(self.limits.a_long_max > 0.0) {
            return Err(invalid("limits.a_long_max", "must be positive"));
        }
        self.solver
            .validate()
            .map_err(|e| invalid("solver", e.to_string()))?;
        Ok(())
    }

    pub fn payoff_weights(&self) -> PayoffWeights {
        PayoffWeights {
            w1: self.weights.w1,
            w2: self.weights.w2,
            lambda: self.weights.lambda,
            g_crit: self.weights.g_crit,
            v_max: self.weights.v_max,
        }
    }

    pub fn intersection(&self) -> IntersectionLayout {
        IntersectionLayout::cross_with(
            self.layout.lane_width,
            self.layout.approach_distance,
            self.layout.exit_distance,
        )
    }

    /// Entry delays normalized to non-negative holds (the earlier vehicle
    /// departs at t = 0), rounded to the time grid.
    pub fn entry_waits(&self) -> [f64; 2] {
        let base = self.ego.entry_delay.min(self.opponent.entry_delay).min(0.0);
        let snap = |delay: f64| ((delay - base) / self.dt).round() * self.dt;
        [snap(self.ego.entry_delay), snap(self.opponent.entry_delay)]
    }

    pub fn to_context(&self) -> Result<GameContext, SimError> {
        self.validate()?;
        let waits = self.entry_waits();
        let global_v_max = self.weights.v_max;
        let vehicle = |spec: &VehicleSpec, wait: f64| VehicleSetup {
            route: spec.route(),
            dims: spec.dims(),
            start_offset: spec.start_offset,
            entry_wait: wait,
            v_max: spec.v_max.unwrap_or(global_v_max),
        };
        Ok(GameContext {
            layout: self.intersection(),
            vehicles: [vehicle(&self.ego, waits[0]), vehicle(&self.opponent, waits[1])],
            weights: self.payoff_weights(),
            zone: ZoneParams {
                ttc: self.ttc,
                d_safe: self.d_safe,
            },
            dt: self.dt,
            limits: self.limits,
            kappa_jump_tol: self.game.kappa_jump_tol,
            yield_horizon: self.game.yield_horizon,
            corridor_len: self.game.corridor_len,
            stop_gap: self.game.stop_gap,
        })
    }
}

/// Parse and validate a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario, SimError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let raw: RawScenario = toml::from_str(&text).map_err(|e| SimError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let scenario = Scenario {
        description: raw.description,
        dt: raw.dt,
        ttc: raw.ttc,
        d_safe: raw.d_safe,
        layout: raw.layout,
        weights: raw.weights,
        ego: raw.ego,
        opponent: raw.opponent,
        limits: raw.limits,
        solver: raw.solver,
        game: raw.game,
        bounds: raw.bounds,
    };
    scenario.validate()?;
    Ok(scenario)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Nominal,
    Gtp,
}

impl std::str::FromStr for RunMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nominal" => Ok(RunMode::Nominal),
            "gtp" => Ok(RunMode::Gtp),
            other => Err(format!("unknown mode '{other}' (expected nominal or gtp)")),
        }
    }
}

/// Everything one run produces; serialized as report.json.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: RunMode,
    /// Effective configuration, defaults included.
    pub scenario: Scenario,
    pub outcome: GameOutcome,
    pub trace_ego: TimedTrajectory,
    pub trace_opp: TimedTrajectory,
    pub gtc_curve: Vec<(f64, f64)>,
    pub t_crit: f64,
    pub min_gtc: f64,
    /// First instant with zero gap, when the run contains a collision.
    pub collision_t: Option<f64>,
    /// Stop window (t1, t2) of the ego vehicle; present iff the decision is
    /// a yield.
    pub stop_interval: Option<(f64, f64)>,
}

/// Fixed default waypoints of the nominal (unoptimized) path: p2 at the
/// crossing of the approach and exit centerlines, p3 on the exit centerline
/// just past the conflict zone. Canonical-frame coordinates.
pub fn nominal_strategy(layout: &LayoutSpec, route: &Route) -> Strategy {
    let l = layout.lane_width;
    match route.turn_kind().expect("validated route") {
        TurnKind::LeftTurn => Strategy {
            x2: 0.5 * l,
            y2: 0.5 * l,
            x3: -l,
            y3: 0.5 * l,
        },
        TurnKind::Straight => Strategy {
            x2: 0.5 * l,
            y2: 0.0,
            x3: 0.5 * l,
            y3: l + 5.0,
        },
        TurnKind::RightTurn => Strategy {
            x2: 0.5 * l,
            y2: -0.5 * l,
            x3: l + 5.0,
            y3: -0.5 * l,
        },
    }
}

fn stop_interval_from_trace(trace: &TimedTrajectory) -> Option<(f64, f64)> {
    let mut t1 = None;
    let mut t2 = None;
    for st in &trace.states {
        if st.speed == 0.0 && st.arc > 1e-6 {
            if t1.is_none() {
                t1 = Some(st.t);
            }
            t2 = Some(st.t);
        }
    }
    match (t1, t2) {
        (Some(a), Some(b)) if b > a => Some((a, b)),
        _ => None,
    }
}

/// First instant the vehicle's center is inside the conflict zone.
pub fn zone_entry_time(trace: &TimedTrajectory, layout: &IntersectionLayout) -> Option<f64> {
    trace
        .states
        .iter()
        .find(|st| layout.in_conflict_zone([st.pose.x, st.pose.y]))
        .map(|st| st.t)
}

/// Last instant the vehicle's center is inside the conflict zone.
pub fn zone_exit_time(trace: &TimedTrajectory, layout: &IntersectionLayout) -> Option<f64> {
    trace
        .states
        .iter()
        .rev()
        .find(|st| layout.in_conflict_zone([st.pose.x, st.pose.y]))
        .map(|st| st.t)
}

/// Execute one scenario run.
pub fn run(scenario: &Scenario, mode: RunMode) -> Result<RunReport, SimError> {
    let ctx = scenario.to_context()?;
    let game = ScenarioGame::new(ctx);

    let (outcome, ego_prep, opp_prep) = match mode {
        RunMode::Nominal => {
            let s_v = nominal_strategy(&scenario.layout, &scenario.ego.route());
            let s_o = nominal_strategy(&scenario.layout, &scenario.opponent.route());
            let ego = game.ctx.prepare(0, &s_v, None)?;
            let opp = game.ctx.prepare(1, &s_o, None)?;
            let (q_v, q_o, _, _) = game.ctx.pair_eval(&ego, &opp)?;
            let outcome = GameOutcome {
                s_v,
                s_o,
                j_value: 0.0,
                q_v,
                q_o,
                decision: Decision::Proceed,
                certificate: [0.0, 0.0],
            };
            (outcome, ego, opp)
        }
        RunMode::Gtp => {
            let bounds_v = scenario
                .bounds
                .as_ref()
                .and_then(|b| b.ego)
                .map_or_else(|| game.ctx.default_bounds(0), Ok)?;
            let bounds_o = scenario
                .bounds
                .as_ref()
                .and_then(|b| b.opponent)
                .map_or_else(|| game.ctx.default_bounds(1), Ok)?;
            let outcome = solve_gnep(&game, &bounds_v, &bounds_o, &scenario.solver)?;
            let (ego, opp) = game.executed_trajectories(&outcome)?;
            (outcome, ego, opp)
        }
    };

    let series = collision::gtc_series(
        &ego_prep.traj,
        &opp_prep.traj,
        &scenario.ego.dims(),
        &scenario.opponent.dims(),
    )
    .map_err(|e| SimError::Inconsistent(e.to_string()))?;
    let collision_t = series
        .samples
        .iter()
        .find(|&&(_, g)| g <= 0.0)
        .map(|&(t, _)| t);

    let stop_interval = match outcome.decision {
        Decision::Yield { .. } => stop_interval_from_trace(&ego_prep.traj),
        Decision::Proceed => None,
    };

    // proceed safety: re-verify the constraints from the raw trajectories
    if mode == RunMode::Gtp && outcome.decision == Decision::Proceed {
        let violations = collision::constraint_values(
            &ego_prep.traj,
            &opp_prep.traj,
            &scenario.ego.dims(),
            &scenario.opponent.dims(),
            &game.ctx.layout,
            game.ctx.zone,
        )
        .map_err(|e| SimError::Inconsistent(e.to_string()))?;
        if violations.iter().any(|&v| v > 0.0) {
            return Err(SimError::Inconsistent(
                "proceed decision with violated constraints".into(),
            ));
        }
        if series.min_gtc < scenario.weights.g_crit {
            return Err(SimError::Inconsistent(format!(
                "proceed decision with min gap {} below g_crit",
                series.min_gtc
            )));
        }
    }
    if let Decision::Yield { .. } = outcome.decision {
        if stop_interval.is_none() {
            return Err(SimError::Inconsistent(
                "yield decision without a stop interval in the trace".into(),
            ));
        }
    }

    Ok(RunReport {
        mode,
        scenario: scenario.clone(),
        outcome,
        trace_ego: ego_prep.traj,
        trace_opp: opp_prep.traj,
        gtc_curve: series.samples,
        t_crit: series.t_crit,
        min_gtc: series.min_gtc,
        collision_t,
        stop_interval,
    })
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), SimError> {
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(bytes).map_err(|e| io_err(path, e))?;
    Ok(())
}

fn trace_csv(trace: &TimedTrajectory) -> String {
    let mut out = String::from("t,x,y,theta,speed\n");
    for st in &trace.states {
        let _ = writeln!(
            out,
            "{:.6},{:.6},{:.6},{:.6},{:.6}",
            st.t, st.pose.x, st.pose.y, st.pose.theta, st.speed
        );
    }
    out
}

/// Write all artifacts of a run into `out_dir`: trace_ego.csv,
/// trace_opp.csv, gtc.csv, report.json, scene.svg, gtc.svg.
pub fn emit(
    report: &RunReport,
    out_dir: &Path,
    overlay: Option<&[[f64; 2]]>,
) -> Result<Vec<PathBuf>, SimError> {
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let mut written = Vec::new();

    let mut save = |name: &str, bytes: &[u8]| -> Result<PathBuf, SimError> {
        let path = out_dir.join(name);
        write_atomic(&path, bytes)?;
        Ok(path)
    };

    written.push(save("trace_ego.csv", trace_csv(&report.trace_ego).as_bytes())?);
    written.push(save("trace_opp.csv", trace_csv(&report.trace_opp).as_bytes())?);

    let mut gtc_csv = String::from("t,gtc\n");
    for &(t, g) in &report.gtc_curve {
        let _ = writeln!(gtc_csv, "{t:.6},{g:.6}");
    }
    written.push(save("gtc.csv", gtc_csv.as_bytes())?);

    let mut json = serde_json::to_string_pretty(report)
        .map_err(|e| SimError::Inconsistent(format!("report serialization failed: {e}")))?;
    json.push('\n');
    written.push(save("report.json", json.as_bytes())?);

    written.push(save("scene.svg", scene_svg(report, overlay).as_bytes())?);
    written.push(save("gtc.svg", gtc_svg(report).as_bytes())?);
    Ok(written)
}

/// Load a run report back from JSON.
pub fn load_report(path: &Path) -> Result<RunReport, SimError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| SimError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Re-check every derived field of a report against its traces. Returns the
/// list of (check name, passed) pairs; errors only on I/O or parse trouble.
pub fn verify_report(report: &RunReport) -> Vec<(&'static str, bool)> {
    let mut checks = Vec::new();

    let recomputed_min = report
        .gtc_curve
        .iter()
        .map(|&(_, g)| g)
        .fold(f64::INFINITY, f64::min);
    checks.push((
        "min_gtc equals the minimum of gtc_curve",
        (recomputed_min - report.min_gtc).abs() < 1e-12,
    ));

    let t_crit_ok = report
        .gtc_curve
        .iter()
        .find(|&&(_, g)| (g - report.min_gtc).abs() < 1e-12)
        .map(|&(t, _)| (t - report.t_crit).abs() < 1e-9)
        .unwrap_or(false);
    checks.push(("t_crit is the earliest minimum instant", t_crit_ok));

    let series = collision::gtc_series(
        &report.trace_ego,
        &report.trace_opp,
        &report.scenario.ego.dims(),
        &report.scenario.opponent.dims(),
    );
    let curve_ok = match series {
        Ok(s) => {
            s.samples.len() == report.gtc_curve.len()
                && s.samples
                    .iter()
                    .zip(&report.gtc_curve)
                    .all(|(a, b)| (a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9)
        }
        Err(_) => false,
    };
    checks.push(("gtc_curve recomputes from the traces", curve_ok));

    let stop_ok = match (report.outcome.decision, report.stop_interval) {
        (Decision::Yield { .. }, Some((t1, t2))) => {
            t1 < t2 && stop_interval_from_trace(&report.trace_ego) == Some((t1, t2))
        }
        (Decision::Proceed, None) => true,
        _ => false,
    };
    checks.push(("stop_interval matches decision and trace", stop_ok));

    let grid_ok = [&report.trace_ego, &report.trace_opp].iter().all(|tr| {
        tr.states.windows(2).all(|w| {
            ((w[1].t - w[0].t) - tr.dt).abs() < 1e-9
        })
    });
    checks.push(("traces lie on the dt grid", grid_ok));

    if report.mode == RunMode::Gtp && report.outcome.decision == Decision::Proceed {
        let zone = ZoneParams {
            ttc: report.scenario.ttc,
            d_safe: report.scenario.d_safe,
        };
        let layout = report.scenario.intersection();
        let feasible = collision::constraint_values(
            &report.trace_ego,
            &report.trace_opp,
            &report.scenario.ego.dims(),
            &report.scenario.opponent.dims(),
            &layout,
            zone,
        )
        .map(|v| v.iter().all(|&x| x == 0.0))
        .unwrap_or(false);
        checks.push((
            "proceed decision holds all constraints",
            feasible
                && report.outcome.q_v.penalty == 0.0
                && report.outcome.q_o.penalty == 0.0
                && report.min_gtc >= report.scenario.weights.g_crit,
        ));
    }
    checks
}

// ---------------------------------------------------------------------------
// SVG rendering

struct Frame {
    min_x: f64,
    max_y: f64,
    scale: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn new(min_x: f64, max_x: f64, min_y: f64, max_y: f64, px: f64) -> Self {
        let scale = px / (max_x - min_x).max(max_y - min_y).max(1.0);
        Self {
            min_x,
            max_y,
            scale,
            width: (max_x - min_x) * scale,
            height: (max_y - min_y) * scale,
        }
    }

    fn map(&self, p: [f64; 2]) -> (f64, f64) {
        (
            (p[0] - self.min_x) * self.scale,
            (self.max_y - p[1]) * self.scale,
        )
    }

    fn polyline(&self, pts: impl Iterator<Item = [f64; 2]>) -> String {
        let mut s = String::new();
        for p in pts {
            let (x, y) = self.map(p);
            let _ = write!(s, "{x:.3},{y:.3} ");
        }
        s.trim_end().to_string()
    }
}

fn scene_svg(report: &RunReport, overlay: Option<&[[f64; 2]]>) -> String {
    let layout = report.scenario.intersection();
    let l = layout.lane_width;
    let mut min_x = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    for tr in [&report.trace_ego, &report.trace_opp] {
        for st in &tr.states {
            min_x = min_x.min(st.pose.x);
            max_x = max_x.max(st.pose.x);
            min_y = min_y.min(st.pose.y);
            max_y = max_y.max(st.pose.y);
        }
    }
    let pad = 4.0 * l;
    let frame = Frame::new(min_x - pad, max_x + pad, min_y - pad, max_y + pad, 900.0);

    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"0 0 {:.3} {:.3}\">\n",
        frame.width, frame.height, frame.width, frame.height
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"#fafafa\"/>\n");

    // conflict zone
    let zone_pts = frame.polyline(layout.conflict_zone.iter().cloned());
    let _ = writeln!(
        svg,
        "<polygon points=\"{zone_pts}\" fill=\"#f2d7d5\" stroke=\"#c0392b\" stroke-width=\"1\" stroke-dasharray=\"4 3\"/>"
    );
    // lane boundaries
    for boundary in &layout.lane_boundaries {
        let pts = frame.polyline(boundary.iter().cloned());
        let _ = writeln!(
            svg,
            "<polyline points=\"{pts}\" fill=\"none\" stroke=\"#95a5a6\" stroke-width=\"1\"/>"
        );
    }
    if let Some(extra) = overlay {
        let pts = frame.polyline(extra.iter().cloned());
        let _ = writeln!(
            svg,
            "<polyline class=\"overlay\" points=\"{pts}\" fill=\"none\" stroke=\"#8e44ad\" stroke-width=\"1.5\" stroke-dasharray=\"6 3\"/>"
        );
    }
    for (class, tr, color) in [
        ("ego", &report.trace_ego, "#d62728"),
        ("opp", &report.trace_opp, "#2ca02c"),
    ] {
        let pts = frame.polyline(tr.states.iter().map(|s| [s.pose.x, s.pose.y]));
        let _ = writeln!(
            svg,
            "<polyline class=\"{class}\" points=\"{pts}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>"
        );
    }
    // footprints at the critical instant
    for (tr, dims, color) in [
        (&report.trace_ego, report.scenario.ego.dims(), "#d62728"),
        (&report.trace_opp, report.scenario.opponent.dims(), "#2ca02c"),
    ] {
        if let Some(idx) = tr.index_of(report.t_crit) {
            let obb = collision::footprint(&tr.states[idx].pose, &dims);
            let pts = frame.polyline(obb.vertices.iter().cloned());
            let _ = writeln!(
                svg,
                "<polygon class=\"footprint\" points=\"{pts}\" fill=\"{color}\" fill-opacity=\"0.35\" stroke=\"{color}\" stroke-width=\"1.5\"/>"
            );
        }
    }
    let _ = writeln!(
        svg,
        "<text x=\"10\" y=\"20\" font-family=\"monospace\" font-size=\"14\">mode={:?} min_gtc={:.3} m t_crit={:.2} s</text>",
        report.mode, report.min_gtc, report.t_crit
    );
    svg.push_str("</svg>\n");
    svg
}

fn gtc_svg(report: &RunReport) -> String {
    let w = 860.0;
    let h = 420.0;
    let ml = 60.0;
    let mb = 40.0;
    let mt = 20.0;
    let mr = 20.0;
    let t0 = report.gtc_curve.first().map(|p| p.0).unwrap_or(0.0);
    let t1 = report.gtc_curve.last().map(|p| p.0).unwrap_or(1.0);
    let g_max = report
        .gtc_curve
        .iter()
        .map(|p| p.1)
        .fold(report.scenario.weights.g_crit, f64::max)
        * 1.05
        + 1e-9;
    let sx = |t: f64| ml + (t - t0) / (t1 - t0).max(1e-9) * (w - ml - mr);
    let sy = |g: f64| h - mb - g / g_max * (h - mt - mb);

    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w} {h}\">\n"
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n");
    // axes
    let _ = writeln!(
        svg,
        "<line x1=\"{ml}\" y1=\"{:.3}\" x2=\"{:.3}\" y2=\"{:.3}\" stroke=\"#333\"/>",
        h - mb,
        w - mr,
        h - mb
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{:.3}\" stroke=\"#333\"/>",
        h - mb
    );
    // curve
    let mut pts = String::new();
    for &(t, g) in &report.gtc_curve {
        let _ = write!(pts, "{:.3},{:.3} ", sx(t), sy(g));
    }
    let _ = writeln!(
        svg,
        "<polyline class=\"gtc\" points=\"{}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\"/>",
        pts.trim_end()
    );
    // critical threshold
    let gc = report.scenario.weights.g_crit;
    let _ = writeln!(
        svg,
        "<line class=\"g-crit\" x1=\"{ml}\" y1=\"{:.3}\" x2=\"{:.3}\" y2=\"{:.3}\" stroke=\"#c0392b\" stroke-dasharray=\"6 4\"/>",
        sy(gc),
        w - mr,
        sy(gc)
    );
    let _ = writeln!(
        svg,
        "<text x=\"{:.3}\" y=\"{:.3}\" font-family=\"monospace\" font-size=\"12\" fill=\"#c0392b\">g_crit = {gc:.2} m</text>",
        ml + 6.0,
        sy(gc) - 5.0
    );
    if let Some((s1, s2)) = report.stop_interval {
        for (class, t, label) in [("t1-marker", s1, "t1"), ("t2-marker", s2, "t2")] {
            let _ = writeln!(
                svg,
                "<line class=\"{class}\" x1=\"{:.3}\" y1=\"{mt}\" x2=\"{:.3}\" y2=\"{:.3}\" stroke=\"#8e44ad\" stroke-dasharray=\"3 3\"/>",
                sx(t),
                sx(t),
                h - mb
            );
            let _ = writeln!(
                svg,
                "<text x=\"{:.3}\" y=\"{:.3}\" font-family=\"monospace\" font-size=\"12\" fill=\"#8e44ad\">{label}={t:.2}s</text>",
                sx(t) + 3.0,
                mt + 14.0
            );
        }
    }
    // critical instant marker
    let _ = writeln!(
        svg,
        "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"4\" fill=\"#1f77b4\"/>",
        sx(report.t_crit),
        sy(report.min_gtc)
    );
    let _ = writeln!(
        svg,
        "<text x=\"{:.3}\" y=\"{:.3}\" font-family=\"monospace\" font-size=\"12\">time (s)</text>",
        0.5 * w,
        h - 10.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"8\" y=\"{:.3}\" font-family=\"monospace\" font-size=\"12\" transform=\"rotate(-90 8 {:.3})\">gap to collision (m)</text>",
        0.6 * h,
        0.6 * h
    );
    svg.push_str("</svg>\n");
    svg
}
