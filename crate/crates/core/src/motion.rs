//! Time parameterization of geometric paths.
//!
//! Speed is derived deterministically from geometry: pointwise capped at
//! `sqrt(a_lat_max/|κ|)` and smoothed by forward/backward passes limiting
//! longitudinal acceleration, so the 4-D waypoint strategy stays the complete
//! decision variable. Trajectories are sampled on a fixed time grid with an
//! optional hold-in-place prefix.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, PathSpec, Pose};

#[derive(Debug, Error)]
pub enum MotionError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("wait time must be non-negative")]
    NegativeWait,
    #[error("empty trajectory")]
    EmptyTrajectory,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Arc-length speed profile over one path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpeedProfile {
    /// (arc_length, speed) samples, arc length strictly increasing from 0 to
    /// the path length.
    pub samples: Vec<(f64, f64)>,
    pub v_max: f64,
    pub a_lat_max: f64,
}

impl SpeedProfile {
    /// Linear interpolation; clamps outside the sampled range.
    pub fn speed_at(&self, s: f64) -> f64 {
        let samples = &self.samples;
        if s <= samples[0].0 {
            return samples[0].1;
        }
        if s >= samples[samples.len() - 1].0 {
            return samples[samples.len() - 1].1;
        }
        let idx = samples.partition_point(|&(x, _)| x <= s);
        let (s0, v0) = samples[idx - 1];
        let (s1, v1) = samples[idx];
        let t = (s - s0) / (s1 - s0);
        v0 + t * (v1 - v0)
    }

    pub fn exit_speed(&self) -> f64 {
        self.samples.last().map(|&(_, v)| v).unwrap_or(0.0)
    }
}

/// One sampled state of a timed trajectory.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrajState {
    pub t: f64,
    pub pose: Pose,
    pub speed: f64,
    /// Cumulative arc length along the path at this instant.
    pub arc: f64,
}

/// Time-sampled states on a fixed grid; the currency of collision checking.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimedTrajectory {
    pub dt: f64,
    pub states: Vec<TrajState>,
    /// Hold-in-place prefix duration before departure.
    pub wait_time: f64,
    /// Exact kinematic arrival instant at the path end. The sampling grid
    /// rounds up to the next grid point; time statistics use this value so
    /// they do not depend on the grid resolution.
    pub arrival_t: f64,
}

impl TimedTrajectory {
    pub fn t_start(&self) -> f64 {
        self.states.first().map(|s| s.t).unwrap_or(0.0)
    }

    pub fn t_end(&self) -> f64 {
        self.states.last().map(|s| s.t).unwrap_or(0.0)
    }

    pub fn duration(&self) -> f64 {
        self.arrival_t.min(self.t_end()) - self.t_start()
    }

    /// State index for grid instant `t`, if on the grid and in range.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let rel = (t - self.t_start()) / self.dt;
        let idx = rel.round();
        if (rel - idx).abs() > 1e-6 {
            return None;
        }
        let idx = idx as isize;
        if idx < 0 || idx as usize >= self.states.len() {
            None
        } else {
            Some(idx as usize)
        }
    }
}

fn validate_limits(v_max: f64, a_lat_max: f64, a_long_max: f64) -> Result<(), MotionError> {
    if !(v_max > 0.0) {
        return Err(MotionError::NonPositive("v_max"));
    }
    if !(a_lat_max > 0.0) {
        return Err(MotionError::NonPositive("a_lat_max"));
    }
    if !(a_long_max > 0.0) {
        return Err(MotionError::NonPositive("a_long_max"));
    }
    Ok(())
}

/// Curvature-capped speed profile with boundary speeds `v_max` at both ends.
pub fn speed_profile(
    path: &PathSpec,
    v_max: f64,
    a_lat_max: f64,
    a_long_max: f64,
) -> Result<SpeedProfile, MotionError> {
    speed_profile_with_bounds(path, v_max, a_lat_max, a_long_max, v_max, v_max)
}

/// Same as [`speed_profile`] but with explicit entry/exit boundary speeds.
pub fn speed_profile_with_bounds(
    path: &PathSpec,
    v_max: f64,
    a_lat_max: f64,
    a_long_max: f64,
    v_entry: f64,
    v_exit: f64,
) -> Result<SpeedProfile, MotionError> {
    validate_limits(v_max, a_lat_max, a_long_max)?;
    if v_entry < 0.0 || v_exit < 0.0 {
        return Err(MotionError::NonPositive("boundary speed"));
    }
    let total = path.total_length();
    let n = ((total / 0.5).ceil() as usize).max(2) + 1;
    let ds = total / (n - 1) as f64;
    let mut samples: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let s = (i as f64 * ds).min(total);
            let (_, kappa) = path.eval(s).expect("in-range arc length");
            let cap = if kappa.abs() < 1e-12 {
                v_max
            } else {
                v_max.min((a_lat_max / kappa.abs()).sqrt())
            };
            (s, cap)
        })
        .collect();
    samples[0].1 = samples[0].1.min(v_entry);
    samples[n - 1].1 = samples[n - 1].1.min(v_exit);
    // forward pass: accelerate no harder than a_long_max
    for i in 1..n {
        let reachable = (samples[i - 1].1.powi(2) + 2.0 * a_long_max * ds).sqrt();
        if samples[i].1 > reachable {
            samples[i].1 = reachable;
        }
    }
    // backward pass: brake no harder than a_long_max
    for i in (0..n - 1).rev() {
        let reachable = (samples[i + 1].1.powi(2) + 2.0 * a_long_max * ds).sqrt();
        if samples[i].1 > reachable {
            samples[i].1 = reachable;
        }
    }
    Ok(SpeedProfile {
        samples,
        v_max,
        a_lat_max,
    })
}

/// Sample a path/profile pair on the grid `t_start + k·dt`.
///
/// The vehicle holds the path's start pose at speed 0 for `wait_time`, then
/// tracks the profile. Arc length advances by trapezoidal integration of the
/// profile speed; the final state lands exactly at the path end.
pub fn sample_trajectory(
    path: &PathSpec,
    profile: &SpeedProfile,
    dt: f64,
    wait_time: f64,
    t_start: f64,
) -> Result<TimedTrajectory, MotionError> {
    if !(dt > 0.0) {
        return Err(MotionError::NonPositive("dt"));
    }
    if wait_time < 0.0 {
        return Err(MotionError::NegativeWait);
    }
    let total = path.total_length();
    let start_pose = path.eval(0.0)?.0;
    let mut states = Vec::new();
    let wait_steps = (wait_time / dt).round() as usize;
    debug_assert!((wait_steps as f64 * dt - wait_time).abs() < 1e-6);
    for k in 0..wait_steps {
        states.push(TrajState {
            t: t_start + k as f64 * dt,
            pose: start_pose,
            speed: 0.0,
            arc: 0.0,
        });
    }
    let mut s = 0.0;
    let mut k = wait_steps;
    let mut arrival_t = t_start + wait_steps as f64 * dt;
    loop {
        let v_here = profile.speed_at(s);
        states.push(TrajState {
            t: t_start + k as f64 * dt,
            pose: path.eval(s)?.0,
            speed: v_here,
            arc: s,
        });
        if s >= total - 1e-9 {
            break;
        }
        // implicit trapezoidal step: Δs = dt·(v(s) + v(s+Δs))/2
        let mut step = v_here * dt;
        for _ in 0..32 {
            let next = (s + step).min(total);
            let refined = 0.5 * dt * (v_here + profile.speed_at(next));
            if (refined - step).abs() < 1e-13 {
                step = refined;
                break;
            }
            step = refined;
        }
        let t_here = t_start + k as f64 * dt;
        if step < 1e-9 {
            // stalled (zero-speed interior sample); nudge to the path end
            arrival_t = t_here + dt;
            s = total;
        } else if s + step >= total {
            // partial final step: solve the trapezoid for the exact arrival
            let remaining = total - s;
            let v_end = profile.speed_at(total);
            let pace = 0.5 * (v_here + v_end);
            arrival_t = t_here + if pace > 1e-12 { remaining / pace } else { dt };
            s = total;
        } else {
            s += step;
            arrival_t = t_here + dt;
        }
        k += 1;
    }
    Ok(TimedTrajectory {
        dt,
        states,
        wait_time: wait_steps as f64 * dt,
        arrival_t,
    })
}

/// Drive to `s_stop`, hold there for `wait_time`, then continue to the path
/// end. Boundary speeds are zero at the stop on both sides.
pub fn sample_stop_and_go(
    path: &PathSpec,
    dt: f64,
    s_stop: f64,
    wait_time: f64,
    entry_wait: f64,
    v_max: f64,
    a_lat_max: f64,
    a_long_max: f64,
    t_start: f64,
) -> Result<TimedTrajectory, MotionError> {
    let total = path.total_length();
    if !(s_stop > 1e-6 && s_stop < total - 1e-6) {
        return Err(MotionError::Geometry(GeometryError::OutOfRange {
            s: s_stop,
            length: total,
        }));
    }
    let head_path = {
        let mut p = path.clone();
        let mut consumed = 0.0;
        let mut segments = Vec::new();
        for seg in &p.segments {
            if consumed + seg.length <= s_stop + 1e-12 {
                segments.push(*seg);
                consumed += seg.length;
            } else if consumed < s_stop {
                let mut cut = *seg;
                cut.length = s_stop - consumed;
                segments.push(cut);
                consumed = s_stop;
            }
        }
        p.segments = segments;
        p
    };
    let tail_path = path.trim_from(s_stop)?;
    let head_profile =
        speed_profile_with_bounds(&head_path, v_max, a_lat_max, a_long_max, v_max, 0.0)?;
    let head = sample_trajectory(&head_path, &head_profile, dt, entry_wait, t_start)?;
    let tail_profile =
        speed_profile_with_bounds(&tail_path, v_max, a_lat_max, a_long_max, 0.0, v_max)?;
    let head_end = head.t_end();
    let tail = sample_trajectory(&tail_path, &tail_profile, dt, wait_time, head_end + dt)?;
    let arrival_t = tail.arrival_t;
    let mut states = head.states;
    states.extend(tail.states.into_iter().map(|mut st| {
        st.arc += s_stop;
        st
    }));
    Ok(TimedTrajectory {
        dt,
        states,
        wait_time: entry_wait,
        arrival_t,
    })
}

/// Time-weighted mean speed (trapezoidal) over the full duration, wait
/// prefix included. Integration stops at the exact arrival instant so the
/// result is stable under grid refinement.
pub fn average_speed(traj: &TimedTrajectory) -> Result<f64, MotionError> {
    if traj.states.is_empty() {
        return Err(MotionError::EmptyTrajectory);
    }
    if traj.states.len() == 1 {
        return Ok(traj.states[0].speed);
    }
    let horizon = traj.arrival_t.min(traj.t_end());
    let duration = horizon - traj.t_start();
    if !(duration > 0.0) {
        return Ok(traj.states[0].speed);
    }
    let mut integral = 0.0;
    for w in traj.states.windows(2) {
        if w[0].t >= horizon {
            break;
        }
        if w[1].t <= horizon {
            integral += 0.5 * (w[0].speed + w[1].speed) * (w[1].t - w[0].t);
        } else {
            // partial interval ending at the arrival instant
            integral += 0.5 * (w[0].speed + w[1].speed) * (horizon - w[0].t);
        }
    }
    Ok(integral / duration)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{
        build_turn_path, ClothoidSegment, IntersectionLayout, TurnKind, WaypointSet,
    };
    use std::f64::consts::PI;

    fn straight_path(len: f64) -> PathSpec {
        PathSpec {
            segments: vec![ClothoidSegment::straight(Pose::new(0.0, 0.0, 0.0), len)],
            kind: TurnKind::Straight,
        }
    }

    fn left_turn() -> PathSpec {
        let layout = IntersectionLayout::cross(3.5, 80.0);
        let w = WaypointSet {
            p2: [0.3, 0.2],
            p3: [-4.0, 1.75],
        };
        build_turn_path(&layout, &w, PI, TurnKind::LeftTurn).unwrap()
    }

    #[test]
    fn straight_path_runs_at_v_max() {
        let profile = speed_profile(&straight_path(100.0), 13.0, 2.0, 2.5).unwrap();
        for &(_, v) in &profile.samples {
            assert_eq!(v, 13.0);
        }
    }

    #[test]
    fn circular_path_is_curvature_capped() {
        let path = PathSpec {
            segments: vec![ClothoidSegment {
                start: Pose::new(0.0, 0.0, 0.0),
                kappa0: 0.2,
                sharpness: 0.0,
                length: 30.0,
            }],
            kind: TurnKind::Straight,
        };
        let profile = speed_profile(&path, 13.0, 2.0, 2.5).unwrap();
        let mid = profile.speed_at(15.0);
        assert!((mid - (2.0f64 / 0.2).sqrt()).abs() < 1e-9, "mid = {mid}");
    }

    #[test]
    fn turn_profile_respects_both_caps() {
        let path = left_turn();
        let profile = speed_profile(&path, 13.0, 2.0, 2.5).unwrap();
        for &(s, v) in &profile.samples {
            let kappa = path.eval(s).unwrap().1;
            assert!(v <= 13.0 + 1e-9);
            if kappa.abs() > 1e-12 {
                assert!(
                    v <= (2.0 / kappa.abs()).sqrt() + 1e-9,
                    "cap violated at s={s}: v={v}, kappa={kappa}"
                );
            }
        }
        // longitudinal acceleration between samples within bounds
        for w in profile.samples.windows(2) {
            let ds = w[1].0 - w[0].0;
            let dv2 = w[1].1 * w[1].1 - w[0].1 * w[0].1;
            assert!(dv2.abs() <= 2.0 * 2.5 * ds + 1e-6);
        }
    }

    #[test]
    fn rejects_non_positive_limits() {
        let p = straight_path(10.0);
        assert!(speed_profile(&p, 0.0, 2.0, 2.5).is_err());
        assert!(speed_profile(&p, 13.0, -1.0, 2.5).is_err());
    }

    #[test]
    fn constant_speed_traversal_state_count() {
        let path = straight_path(130.0);
        let profile = speed_profile(&path, 13.0, 2.0, 2.5).unwrap();
        let traj = sample_trajectory(&path, &profile, 0.1, 0.0, 0.0).unwrap();
        assert_eq!(traj.states.len(), 101);
        assert!((traj.duration() - 10.0).abs() < 1e-9);
        let last = traj.states.last().unwrap();
        assert!((last.arc - 130.0).abs() < 1e-9);
        assert!((last.speed - 13.0).abs() < 1e-12);
    }

    #[test]
    fn wait_prefix_holds_pose() {
        let path = straight_path(130.0);
        let profile = speed_profile(&path, 13.0, 2.0, 2.5).unwrap();
        let traj = sample_trajectory(&path, &profile, 0.1, 2.0, 0.0).unwrap();
        for st in &traj.states[..20] {
            assert_eq!(st.speed, 0.0);
            assert_eq!(st.pose.x, 0.0);
            assert_eq!(st.arc, 0.0);
        }
        assert!(traj.states[20].speed > 0.0);
    }

    #[test]
    fn wait_additivity() {
        let path = left_turn();
        let profile = speed_profile(&path, 13.0, 2.0, 2.5).unwrap();
        let base = sample_trajectory(&path, &profile, 0.1, 0.0, 0.0).unwrap();
        let waited = sample_trajectory(&path, &profile, 0.1, 3.0, 0.0).unwrap();
        assert!((waited.duration() - base.duration() - 3.0).abs() < 1e-9);
        for (a, b) in base.states.iter().zip(&waited.states[30..]) {
            assert!((a.t + 3.0 - b.t).abs() < 1e-9);
            assert!((a.arc - b.arc).abs() < 1e-12);
            assert!((a.speed - b.speed).abs() < 1e-12);
        }
    }

    #[test]
    fn arc_length_steps_are_trapezoidally_consistent() {
        let path = left_turn();
        let profile = speed_profile(&path, 13.0, 2.0, 2.5).unwrap();
        let traj = sample_trajectory(&path, &profile, 0.1, 0.0, 0.0).unwrap();
        let mut prev: Option<&TrajState> = None;
        for st in &traj.states {
            if let Some(p) = prev {
                let ds = st.arc - p.arc;
                assert!(ds >= -1e-12, "arc length must not decrease");
                if st.arc < path.total_length() - 1e-9 {
                    let trapz = 0.5 * (p.speed + st.speed) * traj.dt;
                    assert!(
                        (ds - trapz).abs() < 1e-6 * traj.dt,
                        "step inconsistency {} at t={}",
                        ds - trapz,
                        st.t
                    );
                }
            }
            prev = Some(st);
        }
    }

    #[test]
    fn average_speed_basics() {
        let path = straight_path(130.0);
        let profile = speed_profile(&path, 13.0, 2.0, 2.5).unwrap();
        let traj = sample_trajectory(&path, &profile, 0.1, 0.0, 0.0).unwrap();
        assert!((average_speed(&traj).unwrap() - 13.0).abs() < 1e-12);
    }

    #[test]
    fn average_speed_equal_duration_mean() {
        // 10 s at 0 then 10 s at 10, with the boundary sample at the
        // midpoint value so the trapezoid matches the exact mean
        let mut states = Vec::new();
        for k in 0..=200 {
            let t = k as f64 * 0.1;
            let speed = if t < 10.0 {
                0.0
            } else if t == 10.0 {
                5.0
            } else {
                10.0
            };
            states.push(TrajState {
                t,
                pose: Pose::new(0.0, 0.0, 0.0),
                speed,
                arc: 0.0,
            });
        }
        let traj = TimedTrajectory {
            dt: 0.1,
            states,
            wait_time: 10.0,
            arrival_t: 20.0,
        };
        assert!((average_speed(&traj).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn average_speed_matches_quadrature_on_smooth_profile() {
        let path = left_turn();
        let profile = speed_profile(&path, 13.0, 2.0, 2.5).unwrap();
        let traj = sample_trajectory(&path, &profile, 0.1, 0.0, 0.0).unwrap();
        // independent accumulation in reverse order over the kinematic span
        let horizon = traj.arrival_t;
        let mut integral = 0.0;
        for w in traj.states.windows(2).rev() {
            if w[0].t >= horizon {
                continue;
            }
            let hi = w[1].t.min(horizon);
            integral += (hi - w[0].t) * 0.5 * (w[1].speed + w[0].speed);
        }
        let expect = integral / horizon;
        assert!((average_speed(&traj).unwrap() - expect).abs() < 1e-9);
    }

    #[test]
    fn average_speed_stable_under_refinement() {
        let path = left_turn();
        let profile = speed_profile(&path, 13.0, 2.0, 2.5).unwrap();
        let coarse = sample_trajectory(&path, &profile, 0.1, 0.0, 0.0).unwrap();
        let fine = sample_trajectory(&path, &profile, 0.05, 0.0, 0.0).unwrap();
        let a = average_speed(&coarse).unwrap();
        let b = average_speed(&fine).unwrap();
        assert!((a - b).abs() < 1e-3, "a={a} b={b}");
    }

    #[test]
    fn stop_and_go_inserts_interior_stop() {
        let path = left_turn();
        let traj =
            sample_stop_and_go(&path, 0.1, 70.0, 2.0, 0.0, 13.0, 2.0, 2.5, 0.0).unwrap();
        // find the zero-speed run
        let zero: Vec<&TrajState> = traj
            .states
            .iter()
            .filter(|st| st.speed == 0.0 && st.t > 0.0)
            .collect();
        assert!(!zero.is_empty());
        let t1 = zero.first().unwrap().t;
        let t2 = zero.last().unwrap().t;
        assert!(t1 > 0.0 && t2 - t1 >= 2.0 - 1e-9);
        for st in &zero {
            assert!((st.arc - 70.0).abs() < 1e-9);
        }
        // continues to the path end afterwards
        let last = traj.states.last().unwrap();
        assert!((last.arc - path.total_length()).abs() < 1e-9);
    }

    #[test]
    fn empty_trajectory_is_an_error() {
        let traj = TimedTrajectory {
            dt: 0.1,
            states: vec![],
            wait_time: 0.0,
            arrival_t: 0.0,
        };
        assert!(matches!(
            average_speed(&traj),
            Err(MotionError::EmptyTrajectory)
        ));
    }
}
