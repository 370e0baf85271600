//! Two-player generalized Nash equilibrium core.
//!
//! Each player's strategy is the 4 coordinates of its two free waypoints.
//! The equilibrium gap `J(s_v, s_o)` sums, per player, the largest payoff
//! improvement available through a unilateral deviation (clamped at zero);
//! it vanishes exactly at equilibria. The supremum over the continuous
//! strategy set is approximated by probing the current swarm's per-player
//! projections plus fresh uniform samples, and a particle swarm over the
//! 8-dimensional joint space minimizes the sampled gap. The final answer
//! carries an independent deviation-round certificate.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collision::{self, TrajectoryGeometry, VehicleDims, ZoneParams};
use crate::geometry::{
    build_turn_path, Arm, GeometryError, IntersectionLayout, PathSpec, TurnKind, WaypointSet,
};
use crate::motion::{
    average_speed, sample_stop_and_go, sample_trajectory, speed_profile_with_bounds, MotionError,
    TimedTrajectory,
};
use crate::numeric::wrap_angle;
use crate::payoff::{self, PayoffBreakdown, PayoffWeights};

/// Floor of the infeasible-geometry sentinel payoff.
pub const SENTINEL_FLOOR: f64 = 1e6;

#[derive(Debug, Error)]
pub enum GameError {
    #[error("strategy bounds are empty in coordinate {0}")]
    EmptyBounds(usize),
    #[error("invalid solver config: {0}")]
    BadConfig(&'static str),
    #[error("u-turn routes are not supported (approach {0:?}, exit {1:?})")]
    UnsupportedRoute(Arm, Arm),
    #[error("no feasible yield wait within {horizon} s")]
    InfeasibleScenario { horizon: f64 },
    #[error("payoff context does not model yielding")]
    YieldUnsupported,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Motion(#[from] MotionError),
}

/// One player's 4 decision variables: the free waypoint coordinates,
/// expressed in the canonical (south-approach) frame of its route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    pub x2: f64,
    pub y2: f64,
    pub x3: f64,
    pub y3: f64,
}

impl Strategy {
    pub fn from_array(a: [f64; 4]) -> Self {
        Self {
            x2: a[0],
            y2: a[1],
            x3: a[2],
            y3: a[3],
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.x2, self.y2, self.x3, self.y3]
    }

    pub fn waypoints(&self) -> WaypointSet {
        WaypointSet {
            p2: [self.x2, self.y2],
            p3: [self.x3, self.y3],
        }
    }

    fn key(&self) -> [u64; 4] {
        [
            self.x2.to_bits(),
            self.y2.to_bits(),
            self.x3.to_bits(),
            self.y3.to_bits(),
        ]
    }
}

/// Per-coordinate closed intervals for a strategy.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StrategyBounds {
    pub min: [f64; 4],
    pub max: [f64; 4],
}

impl StrategyBounds {
    pub fn validate(&self) -> Result<(), GameError> {
        for i in 0..4 {
            if !(self.min[i] <= self.max[i])
                || !self.min[i].is_finite()
                || !self.max[i].is_finite()
            {
                return Err(GameError::EmptyBounds(i));
            }
        }
        Ok(())
    }

    pub fn contains(&self, s: &Strategy) -> bool {
        let a = s.as_array();
        (0..4).all(|i| a[i] >= self.min[i] - 1e-9 && a[i] <= self.max[i] + 1e-9)
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Strategy {
        let mut a = [0.0; 4];
        for i in 0..4 {
            a[i] = if self.max[i] > self.min[i] {
                rng.gen_range(self.min[i]..self.max[i])
            } else {
                self.min[i]
            };
        }
        Strategy::from_array(a)
    }
}

/// Particle swarm settings; also the knobs of the deviation sampling that
/// approximates the supremum in the gap function.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub swarm_size: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub seed: u64,
    pub deviation_samples: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            swarm_size: 64,
            iterations: 200,
            inertia: 0.729,
            cognitive: 1.49445,
            social: 1.49445,
            seed: 42,
            deviation_samples: 256,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), GameError> {
        if self.swarm_size < 2 {
            return Err(GameError::BadConfig("swarm_size must be at least 2"));
        }
        if self.iterations < 1 {
            return Err(GameError::BadConfig("iterations must be at least 1"));
        }
        if self.deviation_samples < 1 {
            return Err(GameError::BadConfig("deviation_samples must be at least 1"));
        }
        Ok(())
    }
}

/// Discrete outcome of the negotiation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Decision {
    Proceed,
    Yield { wait_time: f64 },
}

/// Equilibrium strategies, gap value, payoffs and the discrete decision.
/// On a yield, `s_v` is the best response executed after the hold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameOutcome {
    pub s_v: Strategy,
    pub s_o: Strategy,
    pub j_value: f64,
    pub q_v: PayoffBreakdown,
    pub q_o: PayoffBreakdown,
    pub decision: Decision,
    /// Largest unilateral improvement found in the final deviation round,
    /// per player.
    pub certificate: [f64; 2],
}

/// Ego strategy and hold duration resolved by the yield fallback.
pub struct YieldResolution {
    pub strategy: Strategy,
    pub wait_time: f64,
    pub q_v: PayoffBreakdown,
    pub q_o: PayoffBreakdown,
}

/// Payoff oracle for the solver. Implementations may cache aggressively;
/// `begin_iteration` marks cache epochs.
pub trait GamePayoff {
    fn begin_iteration(&self) {}

    /// Scalar payoffs (minimized). `None` marks infeasible geometry, which
    /// the solver maps to a large finite sentinel.
    fn eval(&self, s_v: &Strategy, s_o: &Strategy) -> (Option<f64>, Option<f64>);

    /// Full payoff terms for reporting.
    fn breakdown(&self, s_v: &Strategy, s_o: &Strategy) -> (PayoffBreakdown, PayoffBreakdown);

    /// Whether the joint strategy clears the proceed gate (feasible and
    /// sufficiently separated). Abstract games are always feasible.
    fn proceed_gate(&self, s_v: &Strategy, s_o: &Strategy) -> bool {
        let _ = (s_v, s_o);
        true
    }

    /// Resolve the smallest feasible hold for the ego player against a fixed
    /// opponent strategy.
    fn resolve_yield(
        &self,
        s_o: &Strategy,
        config: &SolverConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<YieldResolution, GameError> {
        let _ = (s_o, config, rng);
        Err(GameError::YieldUnsupported)
    }
}

fn sentinel(max_feasible_q: f64) -> f64 {
    SENTINEL_FLOOR.max(2.0 * max_feasible_q)
}

/// Sampled equilibrium gap: per player, the largest improvement any probe
/// strategy offers over the current one, clamped at zero, summed over both
/// players. Zero at a sampled equilibrium; never negative.
pub fn ni_gap<P: GamePayoff>(
    s_v: &Strategy,
    s_o: &Strategy,
    ctx: &P,
    probes_v: &[Strategy],
    probes_o: &[Strategy],
) -> f64 {
    ni_gap_scored(s_v, s_o, ctx, probes_v, probes_o, &mut 0.0).j
}

#[derive(Clone, Copy, Debug)]
struct Score {
    j: f64,
    q_v: f64,
    q_o: f64,
}

impl Score {
    fn better_than(&self, other: &Score, a: &[f64; 8], b: &[f64; 8]) -> bool {
        match self.j.total_cmp(&other.j) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
        match self.q_v.total_cmp(&other.q_v) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
        match self.q_o.total_cmp(&other.q_o) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
        for i in 0..8 {
            match a[i].total_cmp(&b[i]) {
                std::cmp::Ordering::Less => return true,
                std::cmp::Ordering::Greater => return false,
                std::cmp::Ordering::Equal => {}
            }
        }
        false
    }
}

fn ni_gap_scored<P: GamePayoff>(
    s_v: &Strategy,
    s_o: &Strategy,
    ctx: &P,
    probes_v: &[Strategy],
    probes_o: &[Strategy],
    max_feasible_q: &mut f64,
) -> Score {
    let observe = |q: Option<f64>, max_q: &mut f64| -> f64 {
        match q {
            Some(v) => {
                if v.abs() > *max_q {
                    *max_q = v.abs();
                }
                v
            }
            None => sentinel(*max_q),
        }
    };
    let (qv_raw, qo_raw) = ctx.eval(s_v, s_o);
    let q_v = observe(qv_raw, max_feasible_q);
    let q_o = observe(qo_raw, max_feasible_q);

    let mut best_v = q_v;
    for probe in probes_v {
        let (q, _) = ctx.eval(probe, s_o);
        let q = observe(q, max_feasible_q);
        if q < best_v {
            best_v = q;
        }
    }
    let mut best_o = q_o;
    for probe in probes_o {
        let (_, q) = ctx.eval(s_v, probe);
        let q = observe(q, max_feasible_q);
        if q < best_o {
            best_o = q;
        }
    }
    Score {
        j: (q_v - best_v).max(0.0) + (q_o - best_o).max(0.0),
        q_v,
        q_o,
    }
}

fn split(joint: &[f64; 8]) -> (Strategy, Strategy) {
    (
        Strategy::from_array([joint[0], joint[1], joint[2], joint[3]]),
        Strategy::from_array([joint[4], joint[5], joint[6], joint[7]]),
    )
}

/// Minimize the sampled equilibrium gap over the joint strategy space with a
/// seeded particle swarm, certify the answer with a final deviation round,
/// then resolve the discrete decision.
pub fn solve_gnep<P: GamePayoff>(
    ctx: &P,
    bounds_v: &StrategyBounds,
    bounds_o: &StrategyBounds,
    config: &SolverConfig,
) -> Result<GameOutcome, GameError> {
    bounds_v.validate()?;
    bounds_o.validate()?;
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let lo: Vec<f64> = bounds_v.min.iter().chain(bounds_o.min.iter()).cloned().collect();
    let hi: Vec<f64> = bounds_v.max.iter().chain(bounds_o.max.iter()).cloned().collect();
    let n = config.swarm_size;

    let mut positions: Vec<[f64; 8]> = (0..n)
        .map(|_| {
            let mut p = [0.0; 8];
            for i in 0..8 {
                p[i] = if hi[i] > lo[i] {
                    rng.gen_range(lo[i]..hi[i])
                } else {
                    lo[i]
                };
            }
            p
        })
        .collect();
    let mut velocities = vec![[0.0f64; 8]; n];
    let mut pbest = positions.clone();
    let mut gbest: Option<([f64; 8], Score)> = None;
    let mut max_feasible_q = 0.0f64;

    for _ in 0..config.iterations {
        ctx.begin_iteration();
        let mut probes_v: Vec<Strategy> = positions.iter().map(|p| split(p).0).collect();
        let mut probes_o: Vec<Strategy> = positions.iter().map(|p| split(p).1).collect();
        for _ in 0..config.deviation_samples {
            probes_v.push(bounds_v.sample(&mut rng));
        }
        for _ in 0..config.deviation_samples {
            probes_o.push(bounds_o.sample(&mut rng));
        }

        let score_of = |p: &[f64; 8], max_q: &mut f64| {
            let (sv, so) = split(p);
            ni_gap_scored(&sv, &so, ctx, &probes_v, &probes_o, max_q)
        };

        // score current positions and re-score the personal/global bests
        // under this iteration's probe sets so comparisons are commensurate
        let cur_scores: Vec<Score> = positions
            .iter()
            .map(|p| score_of(p, &mut max_feasible_q))
            .collect();
        let pb_scores: Vec<Score> = pbest
            .iter()
            .map(|p| score_of(p, &mut max_feasible_q))
            .collect();
        let mut gb = gbest
            .as_ref()
            .map(|(p, _)| (*p, score_of(p, &mut max_feasible_q)));

        for i in 0..n {
            let keep_new = cur_scores[i].better_than(&pb_scores[i], &positions[i], &pbest[i]);
            let (cand_pos, cand_score) = if keep_new {
                (positions[i], cur_scores[i])
            } else {
                (pbest[i], pb_scores[i])
            };
            pbest[i] = cand_pos;
            match &gb {
                Some((gp, gs)) if !cand_score.better_than(gs, &cand_pos, gp) => {}
                _ => gb = Some((cand_pos, cand_score)),
            }
        }
        gbest = gb;

        let gbest_pos = gbest.as_ref().map(|(p, _)| *p).unwrap_or(pbest[0]);
        for i in 0..n {
            for d in 0..8 {
                let r1: f64 = rng.gen();
                let r2: f64 = rng.gen();
                velocities[i][d] = config.inertia * velocities[i][d]
                    + config.cognitive * r1 * (pbest[i][d] - positions[i][d])
                    + config.social * r2 * (gbest_pos[d] - positions[i][d]);
                positions[i][d] = (positions[i][d] + velocities[i][d]).clamp(lo[d], hi[d]);
            }
        }
    }

    let (gb_pos, _) = gbest.expect("iterations >= 1 always sets a global best");
    let (s_v, s_o) = split(&gb_pos);

    // independent certificate: a fresh deviation round per player
    ctx.begin_iteration();
    let cert_probes_v: Vec<Strategy> = (0..config.deviation_samples)
        .map(|_| bounds_v.sample(&mut rng))
        .collect();
    let cert_probes_o: Vec<Strategy> = (0..config.deviation_samples)
        .map(|_| bounds_o.sample(&mut rng))
        .collect();
    let observe = |q: Option<f64>| q.unwrap_or(sentinel(max_feasible_q));
    let (qv_raw, qo_raw) = ctx.eval(&s_v, &s_o);
    let q_v_own = observe(qv_raw);
    let q_o_own = observe(qo_raw);
    let mut best_v = q_v_own;
    for probe in &cert_probes_v {
        best_v = best_v.min(observe(ctx.eval(probe, &s_o).0));
    }
    let mut best_o = q_o_own;
    for probe in &cert_probes_o {
        best_o = best_o.min(observe(ctx.eval(&s_v, probe).1));
    }
    let certificate = [(q_v_own - best_v).max(0.0), (q_o_own - best_o).max(0.0)];
    let j_value = certificate[0] + certificate[1];

    if ctx.proceed_gate(&s_v, &s_o) {
        let (q_v, q_o) = ctx.breakdown(&s_v, &s_o);
        Ok(GameOutcome {
            s_v,
            s_o,
            j_value,
            q_v,
            q_o,
            decision: Decision::Proceed,
            certificate,
        })
    } else {
        let resolution = ctx.resolve_yield(&s_o, config, &mut rng)?;
        Ok(GameOutcome {
            s_v: resolution.strategy,
            s_o,
            j_value,
            q_v: resolution.q_v,
            q_o: resolution.q_o,
            decision: Decision::Yield {
                wait_time: resolution.wait_time,
            },
            certificate,
        })
    }
}

/// Route of one vehicle through the junction.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Route {
    pub approach: Arm,
    pub exit: Arm,
}

impl Route {
    pub fn turn_kind(&self) -> Result<TurnKind, GameError> {
        let diff = wrap_angle(self.exit.exit_heading() - self.approach.approach_heading());
        if (diff - std::f64::consts::FRAC_PI_2).abs() < 1e-9 {
            Ok(TurnKind::LeftTurn)
        } else if (diff + std::f64::consts::FRAC_PI_2).abs() < 1e-9 {
            Ok(TurnKind::RightTurn)
        } else if diff.abs() < 1e-9 {
            Ok(TurnKind::Straight)
        } else {
            Err(GameError::UnsupportedRoute(self.approach, self.exit))
        }
    }

    /// Exit heading expressed in the canonical (south-approach) frame.
    pub fn canonical_exit_heading(&self) -> f64 {
        wrap_angle(self.exit.exit_heading() + self.approach.rotation_to_canonical())
    }
}

/// Longitudinal/lateral acceleration limits of the speed profile.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MotionLimits {
    pub a_lat_max: f64,
    pub a_long_max: f64,
}

impl Default for MotionLimits {
    fn default() -> Self {
        Self {
            a_lat_max: 2.0,
            a_long_max: 2.5,
        }
    }
}

/// Static setup of one vehicle in the scenario.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VehicleSetup {
    pub route: Route,
    pub dims: VehicleDims,
    /// Arc length into the built path where the vehicle starts at t = 0.
    pub start_offset: f64,
    /// Normalized hold before departure (entry staggering), seconds, >= 0.
    pub entry_wait: f64,
    /// Per-vehicle cruise limit; at most the global speed limit.
    pub v_max: f64,
}

/// Everything needed to score a joint strategy: layout, vehicles, weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameContext {
    pub layout: IntersectionLayout,
    pub vehicles: [VehicleSetup; 2],
    pub weights: PayoffWeights,
    pub zone: ZoneParams,
    pub dt: f64,
    pub limits: MotionLimits,
    /// Junction curvature jumps above this threshold count as constraint
    /// violations (drivability limit on instantaneous steering change).
    pub kappa_jump_tol: f64,
    /// Yield search horizon, seconds.
    pub yield_horizon: f64,
    /// Length of the waypoint corridor on the exit lane.
    pub corridor_len: f64,
    /// Gap the ego keeps between its front and the conflict zone when
    /// stopping to yield.
    pub stop_gap: f64,
}

/// Prepared (built, sampled, precomputed) trajectory of one player.
pub struct PreparedTrajectory {
    pub traj: TimedTrajectory,
    pub geom: TrajectoryGeometry,
    pub i_eff: f64,
    /// Constraint magnitude from junction curvature jumps beyond tolerance.
    pub geom_violation: f64,
    pub path: PathSpec,
}

impl GameContext {
    /// Default strategy bounds of a player: p2 ranges over the conflict-zone
    /// box, p3 over a corridor on the exit-lane centerline (±lane_width/4
    /// laterally), all in the route's canonical frame.
    pub fn default_bounds(&self, player: usize) -> Result<StrategyBounds, GameError> {
        let l = self.layout.lane_width;
        let route = self.vehicles[player].route;
        let exit = route.canonical_exit_heading();
        let (s, c) = exit.sin_cos();
        let dir = [c, s];
        let right = [s, -c];
        let mut x_lo = f64::INFINITY;
        let mut x_hi = f64::NEG_INFINITY;
        let mut y_lo = f64::INFINITY;
        let mut y_hi = f64::NEG_INFINITY;
        for along in [l, l + self.corridor_len] {
            for lat in [0.5 * l - 0.25 * l, 0.5 * l + 0.25 * l] {
                let x = dir[0] * along + right[0] * lat;
                let y = dir[1] * along + right[1] * lat;
                x_lo = x_lo.min(x);
                x_hi = x_hi.max(x);
                y_lo = y_lo.min(y);
                y_hi = y_hi.max(y);
            }
        }
        Ok(StrategyBounds {
            min: [-l, -l, x_lo, y_lo],
            max: [l, l, x_hi, y_hi],
        })
    }

    /// Build the layout-frame path for one player's strategy, along with the
    /// junction-curvature constraint magnitude.
    pub fn build_player_path(
        &self,
        player: usize,
        strategy: &Strategy,
    ) -> Result<(PathSpec, f64), GeometryError> {
        let setup = &self.vehicles[player];
        let turn = setup
            .route
            .turn_kind()
            .map_err(|_| GeometryError::Infeasible("unsupported route".into()))?;
        let exit = setup.route.canonical_exit_heading();
        let canonical = build_turn_path(&self.layout, &strategy.waypoints(), exit, turn)?;
        let jump = canonical.max_curvature_jump();
        let violation = (jump - self.kappa_jump_tol).max(0.0);
        let rotation = -setup.route.approach.rotation_to_canonical();
        let path = canonical.rotated(rotation).trim_from(setup.start_offset)?;
        Ok((path, violation))
    }

    /// Prepare a player's trajectory: build, profile, sample, precompute
    /// collision geometry. `hold` optionally inserts a stop at the conflict
    /// zone entrance for the given duration.
    pub fn prepare(
        &self,
        player: usize,
        strategy: &Strategy,
        hold: Option<f64>,
    ) -> Result<PreparedTrajectory, GameError> {
        let setup = &self.vehicles[player];
        let (path, geom_violation) = self.build_player_path(player, strategy)?;
        let traj = match hold {
            None => {
                let profile = speed_profile_with_bounds(
                    &path,
                    setup.v_max,
                    self.limits.a_lat_max,
                    self.limits.a_long_max,
                    setup.v_max,
                    setup.v_max,
                )?;
                sample_trajectory(&path, &profile, self.dt, setup.entry_wait, 0.0)?
            }
            Some(wait) => {
                let s_stop = self.stop_arc(&path).ok_or_else(|| {
                    GameError::Geometry(GeometryError::Infeasible(
                        "path does not reach the conflict zone".into(),
                    ))
                })?;
                sample_stop_and_go(
                    &path,
                    self.dt,
                    s_stop,
                    wait,
                    setup.entry_wait,
                    setup.v_max,
                    self.limits.a_lat_max,
                    self.limits.a_long_max,
                    0.0,
                )?
            }
        };
        let geom = TrajectoryGeometry::new(&traj, &setup.dims, &self.layout, self.zone)
            .map_err(|e| GameError::Motion(MotionError::Geometry(GeometryError::Infeasible(e.to_string()))))?;
        let v_bar = average_speed(&traj)?;
        let i_eff = (self.weights.v_max - v_bar).abs() / self.weights.v_max;
        Ok(PreparedTrajectory {
            traj,
            geom,
            i_eff,
            geom_violation,
            path,
        })
    }

    /// Arc length where the vehicle should stop to yield: just before its
    /// footprint reaches the conflict zone.
    pub fn stop_arc(&self, path: &PathSpec) -> Option<f64> {
        let entry = self.zone_entry_arc(path)?;
        let margin = 0.5 * self.vehicles[0].dims.length + self.stop_gap;
        let s = entry - margin;
        if s > 1e-6 {
            Some(s)
        } else {
            None
        }
    }

    /// First arc length at which the path's point enters the conflict zone.
    pub fn zone_entry_arc(&self, path: &PathSpec) -> Option<f64> {
        let total = path.total_length();
        let step = 0.25;
        let mut s = 0.0;
        let mut prev = 0.0;
        while s <= total {
            let (pose, _) = path.eval(s).ok()?;
            if self.layout.in_conflict_zone([pose.x, pose.y]) {
                // bisect between prev and s
                let mut lo = prev;
                let mut hi = s;
                for _ in 0..40 {
                    let mid = 0.5 * (lo + hi);
                    let (p, _) = path.eval(mid).ok()?;
                    if self.layout.in_conflict_zone([p.x, p.y]) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                return Some(hi);
            }
            prev = s;
            s += step;
        }
        None
    }

    /// Pairwise payoffs of both players for prepared trajectories.
    pub fn pair_eval(
        &self,
        pv: &PreparedTrajectory,
        po: &PreparedTrajectory,
    ) -> Result<(PayoffBreakdown, PayoffBreakdown, f64, f64), GameError> {
        let (min_gtc, t_crit) = collision::pair_min_gtc(&pv.geom, &po.geom)
            .map_err(|e| GameError::Motion(MotionError::Geometry(GeometryError::Infeasible(e.to_string()))))?;
        let i_safe = (-min_gtc / self.weights.g_crit).exp();
        let viol_v = collision::pair_violations(&pv.geom, &po.geom)
            .map_err(|e| GameError::Motion(MotionError::Geometry(GeometryError::Infeasible(e.to_string()))))?
            .into_iter()
            .fold(0.0f64, f64::max)
            .max(pv.geom_violation);
        let viol_o = collision::pair_violations(&po.geom, &pv.geom)
            .map_err(|e| GameError::Motion(MotionError::Geometry(GeometryError::Infeasible(e.to_string()))))?
            .into_iter()
            .fold(0.0f64, f64::max)
            .max(po.geom_violation);
        let q_v = payoff::compose(i_safe, pv.i_eff, &[viol_v], &self.weights)
            .map_err(|_| GameError::BadConfig("invalid weights"))?;
        let q_o = payoff::compose(i_safe, po.i_eff, &[viol_o], &self.weights)
            .map_err(|_| GameError::BadConfig("invalid weights"))?;
        Ok((q_v, q_o, min_gtc, t_crit))
    }
}

type PrepCache = HashMap<[u64; 4], Option<Rc<PreparedTrajectory>>>;

/// Scenario-backed payoff oracle with per-iteration trajectory caching.
pub struct ScenarioGame {
    pub ctx: GameContext,
    preps: [RefCell<PrepCache>; 2],
}

impl ScenarioGame {
    pub fn new(ctx: GameContext) -> Self {
        Self {
            ctx,
            preps: [RefCell::new(HashMap::new()), RefCell::new(HashMap::new())],
        }
    }

    fn prepared(&self, player: usize, s: &Strategy) -> Option<Rc<PreparedTrajectory>> {
        let key = s.key();
        if let Some(hit) = self.preps[player].borrow().get(&key) {
            return hit.clone();
        }
        let prep = self.ctx.prepare(player, s, None).ok().map(Rc::new);
        self.preps[player].borrow_mut().insert(key, prep.clone());
        prep
    }

    /// Both players' payoff breakdowns for a joint strategy, plus the
    /// minimum gap and its instant. Standalone entry point for callers
    /// outside the solver loop.
    pub fn payoff_of(
        &self,
        s_v: &Strategy,
        s_o: &Strategy,
    ) -> Option<(PayoffBreakdown, PayoffBreakdown, f64, f64)> {
        let pv = self.prepared(0, s_v)?;
        let po = self.prepared(1, s_o)?;
        self.ctx.pair_eval(&pv, &po).ok()
    }

    fn sentinel_breakdown(&self) -> PayoffBreakdown {
        let f = self.ctx.weights.w1 + self.ctx.weights.w2;
        PayoffBreakdown {
            i_safe: 1.0,
            i_eff: 1.0,
            f,
            penalty: SENTINEL_FLOOR - f,
            q: SENTINEL_FLOOR,
        }
    }
}

impl GamePayoff for ScenarioGame {
    fn begin_iteration(&self) {
        self.preps[0].borrow_mut().clear();
        self.preps[1].borrow_mut().clear();
    }

    fn eval(&self, s_v: &Strategy, s_o: &Strategy) -> (Option<f64>, Option<f64>) {
        match self.payoff_of(s_v, s_o) {
            Some((q_v, q_o, _, _)) => (Some(q_v.q), Some(q_o.q)),
            None => (None, None),
        }
    }

    fn breakdown(&self, s_v: &Strategy, s_o: &Strategy) -> (PayoffBreakdown, PayoffBreakdown) {
        match self.payoff_of(s_v, s_o) {
            Some((q_v, q_o, _, _)) => (q_v, q_o),
            None => (self.sentinel_breakdown(), self.sentinel_breakdown()),
        }
    }

    fn proceed_gate(&self, s_v: &Strategy, s_o: &Strategy) -> bool {
        match self.payoff_of(s_v, s_o) {
            Some((q_v, q_o, min_gtc, _)) => {
                q_v.penalty == 0.0 && q_o.penalty == 0.0 && min_gtc >= self.ctx.weights.g_crit
            }
            None => false,
        }
    }

    /// Smallest wait on the dt grid whose best found response is feasible:
    /// linear scan over wait with a short best-response swarm per step.
    fn resolve_yield(
        &self,
        s_o: &Strategy,
        config: &SolverConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<YieldResolution, GameError> {
        let opp = self
            .prepared(1, s_o)
            .ok_or(GameError::Geometry(GeometryError::Infeasible(
                "opponent strategy is infeasible".into(),
            )))?;
        let bounds = self.ctx.default_bounds(0)?;
        let swarm = config.swarm_size.div_ceil(4).max(6);
        let iters = config.iterations.div_ceil(5).max(8);
        let steps = (self.ctx.yield_horizon / self.ctx.dt).round() as usize;
        for step in 0..=steps {
            let wait = step as f64 * self.ctx.dt;
            if let Some(res) = self.best_response_with_hold(&opp, &bounds, wait, swarm, iters, rng)
            {
                return Ok(res);
            }
        }
        Err(GameError::InfeasibleScenario {
            horizon: self.ctx.yield_horizon,
        })
    }
}

impl ScenarioGame {
    /// Best feasible ego response against a fixed opponent trajectory with a
    /// stop of duration `wait` at the zone entrance. Returns None when the
    /// best response found still violates the gate.
    fn best_response_with_hold(
        &self,
        opp: &PreparedTrajectory,
        bounds: &StrategyBounds,
        wait: f64,
        swarm: usize,
        iters: usize,
        rng: &mut ChaCha8Rng,
    ) -> Option<YieldResolution> {
        #[derive(Clone, Copy)]
        struct Cand {
            q: f64,
            feasible: bool,
        }
        let eval = |s: &Strategy| -> Cand {
            match self.ctx.prepare(0, s, Some(wait)) {
                Ok(prep) => match self.ctx.pair_eval(&prep, opp) {
                    Ok((q_v, _, min_gtc, _)) => {
                        // the opponent trajectory is given; only its pairwise
                        // terms against the ego must stay clean
                        let opp_pairwise = collision::pair_violations(&opp.geom, &prep.geom)
                            .map(|v| v.into_iter().fold(0.0f64, f64::max))
                            .unwrap_or(f64::INFINITY);
                        Cand {
                            q: q_v.q,
                            feasible: q_v.penalty == 0.0
                                && opp_pairwise == 0.0
                                && min_gtc >= self.ctx.weights.g_crit,
                        }
                    }
                    Err(_) => Cand {
                        q: SENTINEL_FLOOR,
                        feasible: false,
                    },
                },
                Err(_) => Cand {
                    q: SENTINEL_FLOOR,
                    feasible: false,
                },
            }
        };

        let mut positions: Vec<Strategy> = (0..swarm).map(|_| bounds.sample(rng)).collect();
        let mut velocities = vec![[0.0f64; 4]; swarm];
        let mut pbest = positions.clone();
        let mut pbest_c: Vec<Cand> = pbest.iter().map(&eval).collect();
        let mut gbest = 0usize;
        for i in 1..swarm {
            if pbest_c[i].q < pbest_c[gbest].q {
                gbest = i;
            }
        }
        let mut gbest_pos = pbest[gbest];
        let mut gbest_c = pbest_c[gbest];
        for _ in 0..iters {
            for i in 0..swarm {
                let mut arr = positions[i].as_array();
                let pb = pbest[i].as_array();
                let gb = gbest_pos.as_array();
                for d in 0..4 {
                    let r1: f64 = rng.gen();
                    let r2: f64 = rng.gen();
                    velocities[i][d] = 0.729 * velocities[i][d]
                        + 1.49445 * r1 * (pb[d] - arr[d])
                        + 1.49445 * r2 * (gb[d] - arr[d]);
                    arr[d] = (arr[d] + velocities[i][d]).clamp(bounds.min[d], bounds.max[d]);
                }
                positions[i] = Strategy::from_array(arr);
                let c = eval(&positions[i]);
                if c.q < pbest_c[i].q {
                    pbest[i] = positions[i];
                    pbest_c[i] = c;
                    if c.q < gbest_c.q {
                        gbest_pos = positions[i];
                        gbest_c = c;
                    }
                }
            }
        }
        if !gbest_c.feasible {
            return None;
        }
        let prep = self.ctx.prepare(0, &gbest_pos, Some(wait)).ok()?;
        let (q_v, q_o, _, _) = self.ctx.pair_eval(&prep, opp).ok()?;
        Some(YieldResolution {
            strategy: gbest_pos,
            wait_time: wait,
            q_v,
            q_o,
        })
    }

    /// Rebuild the executed trajectories of a solved outcome.
    pub fn executed_trajectories(
        &self,
        outcome: &GameOutcome,
    ) -> Result<(PreparedTrajectory, PreparedTrajectory), GameError> {
        let hold = match outcome.decision {
            Decision::Proceed => None,
            Decision::Yield { wait_time } => Some(wait_time),
        };
        let ego = self.ctx.prepare(0, &outcome.s_v, hold)?;
        let opp = self.ctx.prepare(1, &outcome.s_o, None)?;
        Ok((ego, opp))
    }
}
