//! Scalarization of trajectories into player payoffs (lower is better).
//!
//! Efficiency measures shortfall from the speed limit; safety is the worst
//! exponential of the gap-to-collision over the interaction window;
//! constraint violations enter through a linear penalty, so the total is
//! `q = w1·i_safe + w2·i_eff + λ·max(0, C)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collision::{self, CollisionError, GtcSeries, VehicleDims, ZoneParams};
use crate::geometry::IntersectionLayout;
use crate::motion::{average_speed, MotionError, TimedTrajectory};

#[derive(Debug, Error)]
pub enum PayoffError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("negative average speed {0}")]
    NegativeSpeed(f64),
    #[error("empty gap series")]
    EmptySeries,
    #[error("weight {name} = {value} outside [0, 1]")]
    WeightRange { name: &'static str, value: f64 },
    #[error(transparent)]
    Collision(#[from] CollisionError),
    #[error(transparent)]
    Motion(#[from] MotionError),
}

/// Weights and thresholds of the payoff.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PayoffWeights {
    /// Safety weight ∈ [0, 1].
    pub w1: f64,
    /// Efficiency weight ∈ [0, 1].
    pub w2: f64,
    /// Penalty coefficient, > 0.
    pub lambda: f64,
    /// Critical gap threshold, meters.
    pub g_crit: f64,
    /// Speed limit, m/s.
    pub v_max: f64,
}

impl PayoffWeights {
    pub fn validate(&self) -> Result<(), PayoffError> {
        for (name, value) in [("w1", self.w1), ("w2", self.w2)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(PayoffError::WeightRange { name, value });
            }
        }
        if !(self.lambda > 0.0) {
            return Err(PayoffError::NonPositive("lambda"));
        }
        if !(self.g_crit > 0.0) {
            return Err(PayoffError::NonPositive("g_crit"));
        }
        if !(self.v_max > 0.0) {
            return Err(PayoffError::NonPositive("v_max"));
        }
        Ok(())
    }
}

/// All terms of one player's payoff; `q = f + penalty` exactly.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PayoffBreakdown {
    pub i_safe: f64,
    pub i_eff: f64,
    pub f: f64,
    pub penalty: f64,
    pub q: f64,
}

/// Relative shortfall from the speed limit: `|v_max − v̄| / v_max`.
pub fn efficiency_indicator(v_bar: f64, v_max: f64) -> Result<f64, PayoffError> {
    if !(v_max > 0.0) {
        return Err(PayoffError::NonPositive("v_max"));
    }
    if v_bar < 0.0 {
        return Err(PayoffError::NegativeSpeed(v_bar));
    }
    Ok((v_max - v_bar).abs() / v_max)
}

/// Worst-case exponential closeness over the window:
/// `min_t exp(−gtc(t)/g_crit)`, which is `exp(−min_gtc/g_crit)`.
pub fn safety_indicator(series: &[(f64, f64)], g_crit: f64) -> Result<f64, PayoffError> {
    if series.is_empty() {
        return Err(PayoffError::EmptySeries);
    }
    if !(g_crit > 0.0) {
        return Err(PayoffError::NonPositive("g_crit"));
    }
    let min_gtc = series.iter().map(|&(_, g)| g).fold(f64::INFINITY, f64::min);
    Ok((-min_gtc / g_crit).exp())
}

/// Weighted objective `w1·i_safe + w2·i_eff`.
pub fn objective(i_safe: f64, i_eff: f64, w: &PayoffWeights) -> f64 {
    w.w1 * i_safe + w.w2 * i_eff
}

/// Linear penalty on the aggregate violation (the maximum entry): zero when
/// no entry is positive, otherwise `lambda · max violation`.
pub fn penalty(violations: &[f64], lambda: f64) -> Result<f64, PayoffError> {
    if !(lambda > 0.0) {
        return Err(PayoffError::NonPositive("lambda"));
    }
    let worst = violations.iter().cloned().fold(0.0f64, f64::max);
    Ok(if worst > 0.0 { lambda * worst } else { 0.0 })
}

/// Full payoff of the ego vehicle given both trajectories. `extra_violation`
/// carries trajectory-level constraint terms (e.g. junction curvature jumps)
/// that are not per-instant.
pub fn player_payoff(
    tv: &TimedTrajectory,
    to: &TimedTrajectory,
    dims_v: &VehicleDims,
    dims_o: &VehicleDims,
    layout: &IntersectionLayout,
    zone: ZoneParams,
    w: &PayoffWeights,
    extra_violation: f64,
) -> Result<(PayoffBreakdown, GtcSeries), PayoffError> {
    w.validate()?;
    let series = collision::gtc_series(tv, to, dims_v, dims_o)?;
    let i_safe = safety_indicator(&series.samples, w.g_crit)?;
    let v_bar = average_speed(tv)?;
    let i_eff = efficiency_indicator(v_bar, w.v_max)?;
    let mut violations = collision::constraint_values(tv, to, dims_v, dims_o, layout, zone)?;
    violations.push(extra_violation);
    let breakdown = compose(i_safe, i_eff, &violations, w)?;
    Ok((breakdown, series))
}

/// Assemble the breakdown from precomputed indicator values.
pub fn compose(
    i_safe: f64,
    i_eff: f64,
    violations: &[f64],
    w: &PayoffWeights,
) -> Result<PayoffBreakdown, PayoffError> {
    let f = objective(i_safe, i_eff, w);
    let pen = penalty(violations, w.lambda)?;
    Ok(PayoffBreakdown {
        i_safe,
        i_eff,
        f,
        penalty: pen,
        q: f + pen,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weights() -> PayoffWeights {
        PayoffWeights {
            w1: 0.5,
            w2: 0.5,
            lambda: 1e3,
            g_crit: 2.0,
            v_max: 13.0,
        }
    }

    #[test]
    fn efficiency_cases() {
        assert_eq!(efficiency_indicator(13.0, 13.0).unwrap(), 0.0);
        assert_eq!(efficiency_indicator(0.0, 13.0).unwrap(), 1.0);
        assert!((efficiency_indicator(9.1, 13.0).unwrap() - 0.3).abs() < 1e-12);
        assert!(efficiency_indicator(1.0, 0.0).is_err());
    }

    #[test]
    fn efficiency_scale_invariance() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let v: f64 = rng.gen_range(0.0..30.0);
            let vm: f64 = rng.gen_range(0.1..30.0);
            let alpha: f64 = rng.gen_range(0.01..100.0);
            let a = efficiency_indicator(v, vm).unwrap();
            let b = efficiency_indicator(alpha * v, alpha * vm).unwrap();
            assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn safety_cases() {
        assert_eq!(safety_indicator(&[(0.0, 0.0)], 2.0).unwrap(), 1.0);
        let e1 = safety_indicator(&[(0.0, 2.0)], 2.0).unwrap();
        assert!((e1 - (-1.0f64).exp()).abs() < 1e-12);
        let s = safety_indicator(&[(0.0, 5.0), (0.1, 2.0), (0.2, 7.0)], 2.0).unwrap();
        assert!((s - (-1.0f64).exp()).abs() < 1e-12);
        assert!(safety_indicator(&[], 2.0).is_err());
    }

    #[test]
    fn safety_monotone_in_gap() {
        let g = 2.0;
        let mut prev = f64::INFINITY;
        for gap in [0.0, 0.5, 1.0, 3.0, 10.0, 50.0] {
            let s = safety_indicator(&[(0.0, gap)], g).unwrap();
            assert!(s < prev);
            assert!(s > 0.0 && s <= 1.0);
            prev = s;
        }
    }

    #[test]
    fn objective_cases() {
        let w = weights();
        assert!((objective(0.4, 0.2, &w) - 0.3).abs() < 1e-12);
        let w1 = PayoffWeights { w1: 1.0, w2: 0.0, ..w };
        assert_eq!(objective(0.7, 0.9, &w1), 0.7);
        let e = (-1.0f64).exp();
        assert!((objective(e, 0.0, &w1) - 0.367_879_441_171_442_33).abs() < 1e-12);
    }

    #[test]
    fn penalty_branches() {
        assert_eq!(penalty(&[0.0, 0.0], 1e3).unwrap(), 0.0);
        assert_eq!(penalty(&[], 1e3).unwrap(), 0.0);
        assert!((penalty(&[0.1, 0.5, 0.2], 1e3).unwrap() - 500.0).abs() < 1e-12);
        assert_eq!(penalty(&[-3.0, -0.5], 1e3).unwrap(), 0.0);
        assert!(penalty(&[0.1], 0.0).is_err());
    }

    #[test]
    fn decomposition_identity() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for _ in 0..1000 {
            let w = PayoffWeights {
                w1: rng.gen_range(0.0..1.0),
                w2: rng.gen_range(0.0..1.0),
                lambda: rng.gen_range(1.0..2000.0),
                g_crit: rng.gen_range(0.1..5.0),
                v_max: rng.gen_range(1.0..30.0),
            };
            let i_safe: f64 = rng.gen_range(0.0..1.0);
            let i_eff: f64 = rng.gen_range(0.0..1.0);
            let violations = [rng.gen_range(-0.5..1.0), rng.gen_range(-0.5..1.0)];
            let b = compose(i_safe, i_eff, &violations, &w).unwrap();
            assert_eq!(b.q, b.f + b.penalty);
            assert_eq!(b.f, w.w1 * i_safe + w.w2 * i_eff);
        }
    }

    #[test]
    fn weight_validation() {
        let mut w = weights();
        w.w1 = 1.5;
        assert!(w.validate().is_err());
        let mut w = weights();
        w.lambda = 0.0;
        assert!(w.validate().is_err());
    }
}
