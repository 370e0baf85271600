//! Footprint and constraint geometry.
//!
//! Collision proximity between two vehicles is measured by the remaining gap
//! between their oriented bounding boxes: both boxes are projected on each
//! box's two edge axes and the largest projection-interval gap, clamped at
//! zero, is the gap to collision. Zero means overlap or touch; a positive
//! value is a lower bound on the true clearance.
//!
//! Each vehicle also carries a speed-adaptive elliptic safety zone; opponent
//! footprint vertices and the nearest lane-boundary points must stay outside
//! it. Violations are the positive part of `1 − margin` from the quadratic
//! form test.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{IntersectionLayout, Pose};
use crate::motion::TimedTrajectory;

#[derive(Debug, Error)]
pub enum CollisionError {
    #[error("axis must have unit norm, got |axis| = {0}")]
    NonUnitAxis(f64),
    #[error("negative speed {0}")]
    NegativeSpeed(f64),
    #[error("trajectories have mismatched time grids (dt {0} vs {1})")]
    GridMismatch(f64, f64),
    #[error("trajectories share no time window")]
    EmptyWindow,
    #[error("invalid vehicle dimensions: {0}")]
    BadDims(&'static str),
}

/// Vehicle body dimensions. Width defaults to the wheelbase, matching the
/// lateral semi-axis convention of the safety zone.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VehicleDims {
    pub length: f64,
    pub wheelbase: f64,
    pub width: f64,
}

impl VehicleDims {
    pub fn new(length: f64, wheelbase: f64) -> Self {
        Self {
            length,
            wheelbase,
            width: wheelbase,
        }
    }

    pub fn validate(&self) -> Result<(), CollisionError> {
        if !(self.length > 0.0 && self.wheelbase > 0.0 && self.width > 0.0) {
            return Err(CollisionError::BadDims("all dimensions must be positive"));
        }
        if self.wheelbase >= self.length {
            return Err(CollisionError::BadDims("wheelbase must be below length"));
        }
        Ok(())
    }
}

/// Oriented bounding box as 4 counter-clockwise corner points.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Obb {
    pub vertices: [[f64; 2]; 4],
}

impl Obb {
    /// The two distinct unit edge directions; for rectangles these double as
    /// the edge normals, so they are the SAT candidate axes.
    pub fn axes(&self) -> [[f64; 2]; 2] {
        let v = &self.vertices;
        let mut out = [[0.0; 2]; 2];
        for (i, out_axis) in out.iter_mut().enumerate() {
            let a = v[i];
            let b = v[i + 1];
            let dx = b[0] - a[0];
            let dy = b[1] - a[1];
            let n = dx.hypot(dy);
            *out_axis = [dx / n, dy / n];
        }
        out
    }

    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        let mut s = 0.0;
        for i in 0..4 {
            let a = v[i];
            let b = v[(i + 1) % 4];
            s += a[0] * b[1] - b[0] * a[1];
        }
        0.5 * s
    }
}

/// Rectangle footprint of size length × width centered on the pose.
pub fn footprint(pose: &Pose, dims: &VehicleDims) -> Obb {
    let (s, c) = pose.theta.sin_cos();
    let hl = 0.5 * dims.length;
    let hw = 0.5 * dims.width;
    let corner = |a: f64, b: f64| [pose.x + c * a - s * b, pose.y + s * a + c * b];
    Obb {
        vertices: [
            corner(hl, hw),
            corner(-hl, hw),
            corner(-hl, -hw),
            corner(hl, -hw),
        ],
    }
}

/// Min/max projection of the box corners onto a unit axis.
pub fn project(obb: &Obb, axis: [f64; 2]) -> Result<(f64, f64), CollisionError> {
    let norm = axis[0].hypot(axis[1]);
    if (norm - 1.0).abs() > 1e-9 {
        return Err(CollisionError::NonUnitAxis(norm));
    }
    Ok(project_unchecked(obb, axis))
}

fn project_unchecked(obb: &Obb, axis: [f64; 2]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in &obb.vertices {
        let d = v[0] * axis[0] + v[1] * axis[1];
        lo = lo.min(d);
        hi = hi.max(d);
    }
    (lo, hi)
}

/// Gap to collision: the largest projection-interval gap over the four
/// candidate axes, clamped at zero. Zero iff the boxes overlap or touch.
pub fn gtc(a: &Obb, b: &Obb) -> f64 {
    let mut best = 0.0f64;
    for axis in a.axes().into_iter().chain(b.axes()) {
        let (a_lo, a_hi) = project_unchecked(a, axis);
        let (b_lo, b_hi) = project_unchecked(b, axis);
        let gap = a_lo.max(b_lo) - a_hi.min(b_hi);
        if gap > best {
            best = gap;
        }
    }
    best
}

/// Speed-adaptive elliptic safety zone around a vehicle's center of gravity.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EllipseZone {
    pub center: [f64; 2],
    pub theta: f64,
    pub semi_major: f64,
    pub semi_minor: f64,
}

/// Build the safety zone: the major semi-axis grows with speed as
/// `length/2 + ttc·speed`, the minor semi-axis is `wheelbase/2 + d_safe`.
pub fn ellipse_zone(
    pose: &Pose,
    speed: f64,
    dims: &VehicleDims,
    ttc: f64,
    d_safe: f64,
) -> Result<EllipseZone, CollisionError> {
    if speed < 0.0 {
        return Err(CollisionError::NegativeSpeed(speed));
    }
    Ok(EllipseZone {
        center: [pose.x, pose.y],
        theta: pose.theta,
        semi_major: 0.5 * dims.length + ttc * speed,
        semi_minor: 0.5 * dims.wheelbase + d_safe,
    })
}

impl EllipseZone {
    /// Quadratic-form margin: < 1 inside, 1 on the boundary, > 1 outside.
    pub fn margin(&self, p: [f64; 2]) -> f64 {
        let (s, c) = self.theta.sin_cos();
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        let along = c * dx + s * dy;
        let lateral = s * dx - c * dy;
        (along / self.semi_major).powi(2) + (lateral / self.semi_minor).powi(2)
    }
}

/// Strict exclusion test: `ok` iff the point lies strictly outside the zone.
/// Boundary points (margin = 1) are not excluded.
pub fn ellipse_excludes(zone: &EllipseZone, p: [f64; 2]) -> (bool, f64) {
    let m = zone.margin(p);
    (m > 1.0, m)
}

/// Closest point on a polyline to `p`.
pub fn closest_point_on_polyline(poly: &[[f64; 2]], p: [f64; 2]) -> [f64; 2] {
    let mut best = poly[0];
    let mut best_d2 = f64::INFINITY;
    for w in poly.windows(2) {
        let q = closest_point_on_segment(w[0], w[1], p);
        let d2 = (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2);
        if d2 < best_d2 {
            best_d2 = d2;
            best = q;
        }
    }
    best
}

fn closest_point_on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> [f64; 2] {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    if len2 < 1e-18 {
        return a;
    }
    let t = (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0);
    [a[0] + t * ab[0], a[1] + t * ab[1]]
}

/// Safety-zone parameters shared by constraint evaluation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ZoneParams {
    pub ttc: f64,
    pub d_safe: f64,
}

/// Precomputed per-instant geometry of one trajectory: footprints, safety
/// zones, and the vehicle's own lane-keeping violations. Pairwise checks
/// against many opponents reuse this.
pub struct TrajectoryGeometry {
    pub dt: f64,
    pub t_start: f64,
    pub footprints: Vec<Obb>,
    pub zones: Vec<EllipseZone>,
    /// Per-instant lane-keeping violation magnitude for this vehicle alone.
    pub lane_violation: Vec<f64>,
}

impl TrajectoryGeometry {
    pub fn new(
        traj: &TimedTrajectory,
        dims: &VehicleDims,
        layout: &IntersectionLayout,
        zone: ZoneParams,
    ) -> Result<Self, CollisionError> {
        dims.validate()?;
        let n = traj.states.len();
        let mut footprints = Vec::with_capacity(n);
        let mut zones = Vec::with_capacity(n);
        let mut lane_violation = Vec::with_capacity(n);
        for st in &traj.states {
            footprints.push(footprint(&st.pose, dims));
            let z = ellipse_zone(&st.pose, st.speed.max(0.0), dims, zone.ttc, zone.d_safe)?;
            // lane rule: outside the conflict zone, the nearest point of
            // every road boundary must stay out of the safety zone
            let cog = [st.pose.x, st.pose.y];
            let mut v = 0.0f64;
            if !layout.in_conflict_zone(cog) {
                for boundary in &layout.lane_boundaries {
                    let q = closest_point_on_polyline(boundary, cog);
                    let m = z.margin(q);
                    if m < 1.0 {
                        v = v.max(1.0 - m);
                    }
                }
            }
            zones.push(z);
            lane_violation.push(v);
        }
        Ok(Self {
            dt: traj.dt,
            t_start: traj.t_start(),
            footprints,
            zones,
            lane_violation,
        })
    }

    pub fn len(&self) -> usize {
        self.footprints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.footprints.is_empty()
    }
}

/// Shared grid window between two prepared trajectories: index offsets and
/// count of shared instants.
pub fn shared_window(
    a: &TrajectoryGeometry,
    b: &TrajectoryGeometry,
) -> Result<(usize, usize, usize), CollisionError> {
    if (a.dt - b.dt).abs() > 1e-12 {
        return Err(CollisionError::GridMismatch(a.dt, b.dt));
    }
    let dt = a.dt;
    let offset = (b.t_start - a.t_start) / dt;
    if (offset - offset.round()).abs() > 1e-6 {
        return Err(CollisionError::GridMismatch(a.t_start, b.t_start));
    }
    let offset = offset.round() as isize;
    // k indexes instants of `a`; instant k of `a` is instant k - offset of `b`
    let k_lo = 0isize.max(offset);
    let k_hi = (a.len() as isize - 1).min(b.len() as isize - 1 + offset);
    if k_hi < k_lo {
        return Err(CollisionError::EmptyWindow);
    }
    Ok((k_lo as usize, (k_lo - offset) as usize, (k_hi - k_lo + 1) as usize))
}

/// One gap-to-collision sample.
pub type GtcSample = (f64, f64);

/// Gap-to-collision series over the shared window of two trajectories.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GtcSeries {
    pub samples: Vec<GtcSample>,
    /// Instant of the smallest gap (earliest on ties).
    pub t_crit: f64,
    pub min_gtc: f64,
}

pub fn gtc_series(
    tv: &TimedTrajectory,
    to: &TimedTrajectory,
    dims_v: &VehicleDims,
    dims_o: &VehicleDims,
) -> Result<GtcSeries, CollisionError> {
    dims_v.validate()?;
    dims_o.validate()?;
    if (tv.dt - to.dt).abs() > 1e-12 {
        return Err(CollisionError::GridMismatch(tv.dt, to.dt));
    }
    let fa: Vec<Obb> = tv.states.iter().map(|s| footprint(&s.pose, dims_v)).collect();
    let fb: Vec<Obb> = to.states.iter().map(|s| footprint(&s.pose, dims_o)).collect();
    let ga = WindowSide {
        dt: tv.dt,
        t_start: tv.t_start(),
        n: fa.len(),
    };
    let gb = WindowSide {
        dt: to.dt,
        t_start: to.t_start(),
        n: fb.len(),
    };
    let (ia, ib, count) = window_indices(&ga, &gb)?;
    let mut samples = Vec::with_capacity(count);
    let mut min_gtc = f64::INFINITY;
    let mut t_crit = ga.t_start + ia as f64 * ga.dt;
    for k in 0..count {
        let t = ga.t_start + (ia + k) as f64 * ga.dt;
        let g = gtc(&fa[ia + k], &fb[ib + k]);
        if g < min_gtc {
            min_gtc = g;
            t_crit = t;
        }
        samples.push((t, g));
    }
    Ok(GtcSeries {
        samples,
        t_crit,
        min_gtc,
    })
}

struct WindowSide {
    dt: f64,
    t_start: f64,
    n: usize,
}

fn window_indices(a: &WindowSide, b: &WindowSide) -> Result<(usize, usize, usize), CollisionError> {
    let offset = (b.t_start - a.t_start) / a.dt;
    if (offset - offset.round()).abs() > 1e-6 {
        return Err(CollisionError::GridMismatch(a.t_start, b.t_start));
    }
    let offset = offset.round() as isize;
    let k_lo = 0isize.max(offset);
    let k_hi = (a.n as isize - 1).min(b.n as isize - 1 + offset);
    if k_hi < k_lo {
        return Err(CollisionError::EmptyWindow);
    }
    Ok((k_lo as usize, (k_lo - offset) as usize, (k_hi - k_lo + 1) as usize))
}

/// Pairwise per-instant violations of the ego vehicle's constraints against
/// a fixed opponent, over the shared window: safety-zone exclusion of the
/// opponent's footprint vertices plus the ego's own lane-keeping terms.
/// All-zero output means the constraints hold.
pub fn pair_violations(ego: &TrajectoryGeometry, opp: &TrajectoryGeometry) -> Result<Vec<f64>, CollisionError> {
    let (ie, io, count) = shared_window(ego, opp)?;
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let zone = &ego.zones[ie + k];
        let mut v: f64 = ego.lane_violation[ie + k];
        for vertex in &opp.footprints[io + k].vertices {
            let m = zone.margin(*vertex);
            if m < 1.0 {
                v = v.max(1.0 - m);
            }
        }
        out.push(v);
    }
    Ok(out)
}

/// Minimum box gap over the shared window of two prepared trajectories.
pub fn pair_min_gtc(a: &TrajectoryGeometry, b: &TrajectoryGeometry) -> Result<(f64, f64), CollisionError> {
    let (ia, ib, count) = shared_window(a, b)?;
    let mut min_gtc = f64::INFINITY;
    let mut t_crit = a.t_start + ia as f64 * a.dt;
    for k in 0..count {
        let g = gtc(&a.footprints[ia + k], &b.footprints[ib + k]);
        if g < min_gtc {
            min_gtc = g;
            t_crit = a.t_start + (ia + k) as f64 * a.dt;
        }
    }
    Ok((min_gtc, t_crit))
}

/// Per-instant maximum constraint violation for the ego vehicle over the
/// shared window (ellipse exclusion of opponent vertices plus lane keeping).
pub fn constraint_values(
    tv: &TimedTrajectory,
    to: &TimedTrajectory,
    dims_v: &VehicleDims,
    dims_o: &VehicleDims,
    layout: &IntersectionLayout,
    zone: ZoneParams,
) -> Result<Vec<f64>, CollisionError> {
    let ego = TrajectoryGeometry::new(tv, dims_v, layout, zone)?;
    let opp = TrajectoryGeometry::new(to, dims_o, layout, zone)?;
    pair_violations(&ego, &opp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn unit_square_at(x: f64, y: f64) -> Obb {
        Obb {
            vertices: [
                [x + 0.5, y + 0.5],
                [x - 0.5, y + 0.5],
                [x - 0.5, y - 0.5],
                [x + 0.5, y - 0.5],
            ],
        }
    }

    #[test]
    fn footprint_axis_aligned() {
        let dims = VehicleDims::new(3.9, 1.9);
        let obb = footprint(&Pose::new(0.0, 0.0, 0.0), &dims);
        let xs: Vec<f64> = obb.vertices.iter().map(|v| v[0]).collect();
        let ys: Vec<f64> = obb.vertices.iter().map(|v| v[1]).collect();
        assert!((xs.iter().cloned().fold(f64::MIN, f64::max) - 1.95).abs() < 1e-12);
        assert!((xs.iter().cloned().fold(f64::MAX, f64::min) + 1.95).abs() < 1e-12);
        assert!((ys.iter().cloned().fold(f64::MIN, f64::max) - 0.95).abs() < 1e-12);
        assert!((ys.iter().cloned().fold(f64::MAX, f64::min) + 0.95).abs() < 1e-12);
        assert!(obb.area() > 0.0, "vertices must wind counter-clockwise");
    }

    #[test]
    fn footprint_quarter_turn() {
        let dims = VehicleDims::new(3.9, 1.9);
        let obb = footprint(&Pose::new(0.0, 0.0, FRAC_PI_2), &dims);
        let xs: Vec<f64> = obb.vertices.iter().map(|v| v[0]).collect();
        let ys: Vec<f64> = obb.vertices.iter().map(|v| v[1]).collect();
        assert!((xs.iter().cloned().fold(f64::MIN, f64::max) - 0.95).abs() < 1e-12);
        assert!((ys.iter().cloned().fold(f64::MIN, f64::max) - 1.95).abs() < 1e-12);
    }

    #[test]
    fn footprint_area_is_rigid() {
        let dims = VehicleDims::new(3.9, 1.9);
        for theta in [0.0, 0.3, 1.1, 2.9, -2.0] {
            let obb = footprint(&Pose::new(4.0, -7.0, theta), &dims);
            assert!((obb.area() - 3.9 * 1.9).abs() < 1e-9);
        }
    }

    #[test]
    fn project_basics() {
        let sq = unit_square_at(0.0, 0.0);
        let (lo, hi) = project(&sq, [1.0, 0.0]).unwrap();
        assert_eq!((lo, hi), (-0.5, 0.5));
        let d = std::f64::consts::FRAC_1_SQRT_2;
        let (lo, hi) = project(&sq, [d, d]).unwrap();
        assert!((lo + d).abs() < 1e-12 && (hi - d).abs() < 1e-12);
        assert!(project(&sq, [1.0, 1.0]).is_err());
    }

    #[test]
    fn gtc_identical_boxes_is_zero() {
        let a = unit_square_at(0.0, 0.0);
        assert_eq!(gtc(&a, &a), 0.0);
    }

    #[test]
    fn gtc_axis_separated_squares() {
        let a = unit_square_at(0.0, 0.0);
        let b = unit_square_at(3.0, 0.0);
        assert!((gtc(&a, &b) - 2.0).abs() < 1e-12);
        assert_eq!(gtc(&a, &b), gtc(&b, &a));
    }

    #[test]
    fn ellipse_zone_arithmetic() {
        let dims = VehicleDims::new(3.9, 1.9);
        let z = ellipse_zone(&Pose::new(0.0, 0.0, 0.0), 13.0, &dims, 2.0, 0.2).unwrap();
        assert!((z.semi_major - 27.95).abs() < 1e-12);
        assert!((z.semi_minor - 1.15).abs() < 1e-12);
        let z0 = ellipse_zone(&Pose::new(0.0, 0.0, 0.0), 0.0, &dims, 2.0, 0.2).unwrap();
        assert!((z0.semi_major - 1.95).abs() < 1e-12);
        assert!(ellipse_zone(&Pose::new(0.0, 0.0, 0.0), -1.0, &dims, 2.0, 0.2).is_err());
    }

    #[test]
    fn ellipse_exclusion_cases() {
        let dims = VehicleDims::new(3.9, 1.9);
        let z = ellipse_zone(&Pose::new(1.0, 2.0, 0.7), 5.0, &dims, 2.0, 0.2).unwrap();
        let (ok, m) = ellipse_excludes(&z, z.center);
        assert!(!ok);
        assert_eq!(m, 0.0);
        // boundary point on the major axis
        let p = [
            z.center[0] + z.semi_major * z.theta.cos(),
            z.center[1] + z.semi_major * z.theta.sin(),
        ];
        let (ok, m) = ellipse_excludes(&z, p);
        assert!(!ok, "boundary is not excluded");
        assert!((m - 1.0).abs() < 1e-12);
        let p2 = [
            z.center[0] + 2.0 * z.semi_major * z.theta.cos(),
            z.center[1] + 2.0 * z.semi_major * z.theta.sin(),
        ];
        let (ok, m) = ellipse_excludes(&z, p2);
        assert!(ok);
        assert!((m - 4.0).abs() < 1e-12);
    }

    #[test]
    fn margin_increases_along_rays() {
        let dims = VehicleDims::new(3.9, 1.9);
        let z = ellipse_zone(&Pose::new(0.0, 0.0, 1.1), 7.0, &dims, 2.0, 0.2).unwrap();
        for angle in [0.0f64, 0.9, 2.2, 4.0] {
            let dir = [angle.cos(), angle.sin()];
            let mut prev = 0.0;
            for r in [0.5, 1.0, 2.0, 5.0, 9.0] {
                let m = z.margin([r * dir[0], r * dir[1]]);
                assert!(m > prev);
                prev = m;
            }
        }
    }

    #[test]
    fn closest_point_on_boundary_polylines() {
        let poly = [[0.0, 0.0], [10.0, 0.0], [10.0, 5.0]];
        let q = closest_point_on_polyline(&poly, [4.0, 3.0]);
        assert_eq!(q, [4.0, 0.0]);
        let q = closest_point_on_polyline(&poly, [12.0, -1.0]);
        assert_eq!(q, [10.0, 0.0]);
    }
}
