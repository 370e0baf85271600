//! Clothoid and piecewise-path construction.
//!
//! A turn path is a straight lead-in, a curve section made of one or two
//! linear-curvature arcs fitted between oriented waypoints, and a straight
//! exit. Junction residuals (position, tangent, curvature) are reported per
//! junction; position and tangent hold by construction, curvature mismatch
//! is reported so callers can penalize it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{clothoid_xy, fresnel_cs, wrap_angle};
use std::f64::consts::{FRAC_PI_2, PI};

/// Junction tolerance on position residuals, meters.
pub const JUNCTION_TOL_POS: f64 = 1e-6;
/// Junction tolerance on heading residuals, radians.
pub const JUNCTION_TOL_HEADING: f64 = 1e-8;
/// Junction tolerance on curvature residuals, 1/meters.
pub const JUNCTION_TOL_KAPPA: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("non-finite input in {0}")]
    NonFinite(&'static str),
    #[error("coincident endpoints")]
    DegenerateInput,
    #[error("clothoid fit did not converge, residual {residual:.3e}")]
    NoConvergence { residual: f64 },
    #[error("arc length {s} outside [0, {length}]")]
    OutOfRange { s: f64, length: f64 },
    #[error("infeasible geometry: {0}")]
    Infeasible(String),
    #[error("segment {index}: {source}")]
    Segment {
        index: usize,
        source: Box<GeometryError>,
    },
}

/// Oriented planar configuration. Heading is wrapped to (−π, π].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }

    /// Rotate about the origin by `angle`.
    pub fn rotated(&self, angle: f64) -> Pose {
        let (s, c) = angle.sin_cos();
        Pose::new(
            c * self.x - s * self.y,
            s * self.x + c * self.y,
            self.theta + angle,
        )
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

/// Arc with curvature linear in arc length: κ(s) = kappa0 + sharpness·s.
/// `kappa0 = sharpness = 0` is a straight line.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClothoidSegment {
    pub start: Pose,
    pub kappa0: f64,
    pub sharpness: f64,
    pub length: f64,
}

impl ClothoidSegment {
    pub fn straight(start: Pose, length: f64) -> Self {
        Self {
            start,
            kappa0: 0.0,
            sharpness: 0.0,
            length,
        }
    }

    pub fn curvature_at(&self, s: f64) -> f64 {
        self.kappa0 + self.sharpness * s
    }

    /// Pose and curvature at arc length `s ∈ [0, length]`.
    pub fn eval(&self, s: f64) -> Result<(Pose, f64), GeometryError> {
        if !s.is_finite() {
            return Err(GeometryError::NonFinite("arc length"));
        }
        let slack = 1e-9 * self.length.max(1.0);
        if s < -slack || s > self.length + slack {
            return Err(GeometryError::OutOfRange {
                s,
                length: self.length,
            });
        }
        let s = s.clamp(0.0, self.length);
        Ok((self.eval_unchecked(s), self.curvature_at(s)))
    }

    fn eval_unchecked(&self, s: f64) -> Pose {
        let theta0 = self.start.theta;
        if self.sharpness == 0.0 {
            // line or circular arc; the sinc form is stable as kappa0 → 0
            let half = 0.5 * self.kappa0 * s;
            let factor = s * sinc(half);
            let (sh, ch) = (theta0 + half).sin_cos();
            return Pose::new(
                self.start.x + factor * ch,
                self.start.y + factor * sh,
                theta0 + self.kappa0 * s,
            );
        }
        let a = self.sharpness * s * s;
        let b = self.kappa0 * s;
        let (x, y) = clothoid_xy(a, b, theta0);
        Pose::new(
            self.start.x + s * x,
            self.start.y + s * y,
            theta0 + b + 0.5 * a,
        )
    }

    pub fn end_pose(&self) -> Pose {
        self.eval_unchecked(self.length)
    }

    pub fn end_curvature(&self) -> f64 {
        self.curvature_at(self.length)
    }

    fn rotated(&self, angle: f64) -> ClothoidSegment {
        ClothoidSegment {
            start: self.start.rotated(angle),
            ..*self
        }
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0 * (1.0 - x * x / 20.0)
    } else {
        x.sin() / x
    }
}

/// Standard Fresnel integrals (C(s), S(s)).
pub fn fresnel(s: f64) -> Result<(f64, f64), GeometryError> {
    if !s.is_finite() {
        return Err(GeometryError::NonFinite("fresnel argument"));
    }
    Ok(fresnel_cs(s))
}

/// Fit a single clothoid from pose `a` to pose `b` (G1 Hermite fit).
///
/// Solves the interpolation-angle root equation by Newton iteration from a
/// polynomial initial guess, with a bracketing fallback. The returned branch
/// is the canonical one with the fewest curvature sign changes.
pub fn fit_g1(a: &Pose, b: &Pose) -> Result<ClothoidSegment, GeometryError> {
    if !a.is_finite() || !b.is_finite() {
        return Err(GeometryError::NonFinite("fit_g1 pose"));
    }
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let r = dx.hypot(dy);
    if r < 1e-12 {
        return Err(GeometryError::DegenerateInput);
    }
    let phi = dy.atan2(dx);
    let phi0 = wrap_angle(a.theta - phi);
    let phi1 = wrap_angle(b.theta - phi);
    let delta = phi1 - phi0;

    let g = |aa: f64| clothoid_xy(2.0 * aa, delta - aa, phi0).1;

    let mut big_a = initial_guess(phi0, phi1);
    let mut residual = g(big_a);
    let mut converged = residual.abs() < 1e-14;
    if !converged {
        for _ in 0..64 {
            let h = 1e-7 * (1.0 + big_a.abs());
            let df = (g(big_a + h) - g(big_a - h)) / (2.0 * h);
            if !df.is_finite() || df == 0.0 {
                break;
            }
            big_a -= residual / df;
            residual = g(big_a);
            if residual.abs() < 1e-14 {
                converged = true;
                break;
            }
        }
    }
    if !converged && residual.abs() > 1e-12 {
        match bracket_root(&g, initial_guess(phi0, phi1)) {
            Some(root) => {
                big_a = root;
                residual = g(big_a);
            }
            None => return Err(GeometryError::NoConvergence { residual }),
        }
        if residual.abs() > 1e-12 {
            return Err(GeometryError::NoConvergence { residual });
        }
    }

    let (h_int, _) = clothoid_xy(2.0 * big_a, delta - big_a, phi0);
    if !(h_int > 1e-12) {
        return Err(GeometryError::NoConvergence { residual: h_int });
    }
    let length = r / h_int;
    Ok(ClothoidSegment {
        start: *a,
        kappa0: (delta - big_a) / length,
        sharpness: 2.0 * big_a / (length * length),
        length,
    })
}

fn initial_guess(phi0: f64, phi1: f64) -> f64 {
    const CF: [f64; 6] = [
        2.989696028701907,
        0.716228953608281,
        -0.458969738821509,
        -0.502821153340377,
        0.261062141752652,
        -0.045854475238709,
    ];
    let x = phi0 / PI;
    let y = phi1 / PI;
    let xy = x * y;
    (phi0 + phi1)
        * (CF[0]
            + xy * (CF[1] + xy * CF[2])
            + (CF[3] + xy * CF[4]) * (x * x + y * y)
            + CF[5] * (x.powi(4) + y.powi(4)))
}

fn bracket_root(g: &dyn Fn(f64) -> f64, center: f64) -> Option<f64> {
    let mut prev = center - 30.0;
    let mut gprev = g(prev);
    let mut found = None;
    let mut a = prev;
    while a < center + 30.0 {
        let next = a + 0.5;
        let gnext = g(next);
        if gprev == 0.0 {
            return Some(prev);
        }
        if gprev * gnext < 0.0 {
            found = Some((prev, next));
            break;
        }
        prev = next;
        gprev = gnext;
        a = next;
    }
    let (mut lo, mut hi) = found?;
    let mut glo = g(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let gmid = g(mid);
        if gmid == 0.0 || (hi - lo) < 1e-15 {
            return Some(mid);
        }
        if glo * gmid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            glo = gmid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TurnKind {
    LeftTurn,
    RightTurn,
    Straight,
}

/// The free decision waypoints of one turn: p2 inside the junction, p3 on the
/// exit lane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaypointSet {
    pub p2: [f64; 2],
    pub p3: [f64; 2],
}

/// Per-junction continuity residuals (next segment start minus previous
/// segment end).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct JunctionResidual {
    pub dx: f64,
    pub dy: f64,
    pub dtheta: f64,
    pub dkappa: f64,
}

impl JunctionResidual {
    pub fn position_ok(&self) -> bool {
        self.dx.abs() <= JUNCTION_TOL_POS && self.dy.abs() <= JUNCTION_TOL_POS
    }
    pub fn heading_ok(&self) -> bool {
        self.dtheta.abs() <= JUNCTION_TOL_HEADING
    }
    pub fn curvature_ok(&self) -> bool {
        self.dkappa.abs() <= JUNCTION_TOL_KAPPA
    }
    pub fn all_ok(&self) -> bool {
        self.position_ok() && self.heading_ok() && self.curvature_ok()
    }
}

/// Ordered piecewise clothoid path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathSpec {
    pub segments: Vec<ClothoidSegment>,
    pub kind: TurnKind,
}

impl PathSpec {
    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|s| s.length).sum()
    }

    /// Pose and curvature at arc length `s` along the whole path.
    pub fn eval(&self, s: f64) -> Result<(Pose, f64), GeometryError> {
        if self.segments.is_empty() {
            return Err(GeometryError::Infeasible("empty path".into()));
        }
        let total = self.total_length();
        let slack = 1e-9 * total.max(1.0);
        if !s.is_finite() || s < -slack || s > total + slack {
            return Err(GeometryError::OutOfRange { s, length: total });
        }
        let mut remaining = s.clamp(0.0, total);
        for seg in &self.segments {
            if remaining <= seg.length {
                return seg.eval(remaining);
            }
            remaining -= seg.length;
        }
        let last = self.segments.last().unwrap();
        last.eval(last.length)
    }

    pub fn end_pose(&self) -> Pose {
        self.segments.last().map(|s| s.end_pose()).unwrap_or(Pose::new(0.0, 0.0, 0.0))
    }

    /// One residual record per junction between consecutive segments.
    pub fn junction_residuals(&self) -> Vec<JunctionResidual> {
        self.segments
            .windows(2)
            .map(|w| {
                let end = w[0].end_pose();
                let next = w[1].start;
                JunctionResidual {
                    dx: next.x - end.x,
                    dy: next.y - end.y,
                    dtheta: wrap_angle(next.theta - end.theta),
                    dkappa: w[1].kappa0 - w[0].end_curvature(),
                }
            })
            .collect()
    }

    /// Largest curvature jump across junctions (0 for single-segment paths).
    pub fn max_curvature_jump(&self) -> f64 {
        self.junction_residuals()
            .iter()
            .map(|r| r.dkappa.abs())
            .fold(0.0, f64::max)
    }

    /// Drop the first `s0` meters of the path, splitting the boundary segment.
    pub fn trim_from(&self, s0: f64) -> Result<PathSpec, GeometryError> {
        let total = self.total_length();
        if !(0.0..total - 1e-9).contains(&s0) {
            return Err(GeometryError::OutOfRange { s: s0, length: total });
        }
        let mut remaining = s0;
        let mut segments = Vec::new();
        for seg in &self.segments {
            if !segments.is_empty() {
                segments.push(*seg);
                continue;
            }
            if remaining >= seg.length - 1e-12 {
                remaining -= seg.length;
                continue;
            }
            let (pose, kappa) = seg.eval(remaining)?;
            segments.push(ClothoidSegment {
                start: pose,
                kappa0: kappa,
                sharpness: seg.sharpness,
                length: seg.length - remaining,
            });
            remaining = 0.0;
        }
        if segments.is_empty() {
            return Err(GeometryError::Infeasible("trim consumed entire path".into()));
        }
        Ok(PathSpec {
            segments,
            kind: self.kind,
        })
    }

    /// Rigidly rotate the path about the layout origin.
    pub fn rotated(&self, angle: f64) -> PathSpec {
        PathSpec {
            segments: self.segments.iter().map(|s| s.rotated(angle)).collect(),
            kind: self.kind,
        }
    }
}

/// Compatibility alias for the path continuity check.
pub fn check_g2(path: &PathSpec) -> Vec<JunctionResidual> {
    path.junction_residuals()
}

/// Junction arm, named by compass direction of the road it lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    North,
    East,
    South,
    West,
}

impl Arm {
    pub const ALL: [Arm; 4] = [Arm::North, Arm::East, Arm::South, Arm::West];

    /// Travel direction of vehicles approaching the junction from this arm.
    pub fn approach_heading(&self) -> f64 {
        match self {
            Arm::North => -FRAC_PI_2,
            Arm::East => PI,
            Arm::South => FRAC_PI_2,
            Arm::West => 0.0,
        }
    }

    /// Travel direction of vehicles leaving the junction onto this arm.
    pub fn exit_heading(&self) -> f64 {
        wrap_angle(self.approach_heading() + PI)
    }

    /// Rotation that maps this arm's approach onto the canonical south
    /// approach (heading π/2).
    pub fn rotation_to_canonical(&self) -> f64 {
        wrap_angle(FRAC_PI_2 - self.approach_heading())
    }
}

impl std::str::FromStr for Arm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "north" => Ok(Arm::North),
            "east" => Ok(Arm::East),
            "south" => Ok(Arm::South),
            "west" => Ok(Arm::West),
            other => Err(format!("unknown arm '{other}'")),
        }
    }
}

/// Four-arm right-hand-traffic junction, axis aligned, centered at the origin.
///
/// Each road is two lanes of width `lane_width`; the conflict zone is the
/// square overlap of the two roads. The canonical approach used by
/// `build_turn_path` is the south arm: its centerline is x = lane_width/2,
/// the straight approach run is `approach_distance` meters long, and the
/// turn anchor sits at its end on the conflict-zone boundary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntersectionLayout {
    pub lane_width: f64,
    pub approach_distance: f64,
    /// Straight run past the conflict zone on the exit arm.
    pub exit_distance: f64,
    pub arm_headings: [f64; 4],
    pub conflict_zone: Vec<[f64; 2]>,
    pub lane_boundaries: Vec<Vec<[f64; 2]>>,
}

impl IntersectionLayout {
    pub fn cross(lane_width: f64, approach_distance: f64) -> Self {
        Self::cross_with(lane_width, approach_distance, 40.0)
    }

    pub fn cross_with(lane_width: f64, approach_distance: f64, exit_distance: f64) -> Self {
        let l = lane_width;
        let reach = l + approach_distance + 20.0;
        let mut lane_boundaries = Vec::new();
        // north-south road: edges x = ±l and the center divider x = 0,
        // split either side of the conflict zone
        for x in [-l, 0.0, l] {
            lane_boundaries.push(vec![[x, l], [x, reach]]);
            lane_boundaries.push(vec![[x, -reach], [x, -l]]);
        }
        for y in [-l, 0.0, l] {
            lane_boundaries.push(vec![[l, y], [reach, y]]);
            lane_boundaries.push(vec![[-reach, y], [-l, y]]);
        }
        Self {
            lane_width,
            approach_distance,
            exit_distance,
            arm_headings: [
                Arm::North.approach_heading(),
                Arm::East.approach_heading(),
                Arm::South.approach_heading(),
                Arm::West.approach_heading(),
            ],
            conflict_zone: vec![[l, -l], [l, l], [-l, l], [-l, -l]],
            lane_boundaries,
        }
    }

    /// Turn anchor: end of the straight approach run, on the canonical
    /// (south) approach centerline at the conflict-zone boundary.
    pub fn turn_anchor(&self) -> Pose {
        Pose::new(0.5 * self.lane_width, -self.lane_width, FRAC_PI_2)
    }

    /// Point-in-conflict-zone test (convex polygon, boundary counts as inside).
    pub fn in_conflict_zone(&self, p: [f64; 2]) -> bool {
        let poly = &self.conflict_zone;
        let n = poly.len();
        let mut sign = 0.0f64;
        for i in 0..n {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
            if cross.abs() < 1e-12 {
                continue;
            }
            if sign == 0.0 {
                sign = cross.signum();
            } else if sign != cross.signum() {
                return false;
            }
        }
        true
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.lane_width > 0.0) {
            return Err(GeometryError::Infeasible("lane_width must be positive".into()));
        }
        if !(self.approach_distance > 0.0) {
            return Err(GeometryError::Infeasible(
                "approach_distance must be positive".into(),
            ));
        }
        if self.conflict_zone.len() < 3 {
            return Err(GeometryError::Infeasible(
                "conflict zone polygon is degenerate".into(),
            ));
        }
        Ok(())
    }
}

/// Assemble a turn path in the canonical frame (south approach, heading π/2).
///
/// Left turns and straight crossings route the curve through both waypoints
/// with the junction heading fixed to the bisector of entry and exit
/// headings; right turns use a single arc to p3 and ignore p2. The first
/// segment is the straight lead-in ending at the turn anchor, the last is a
/// straight run aligned with `exit_heading`.
pub fn build_turn_path(
    layout: &IntersectionLayout,
    w: &WaypointSet,
    exit_heading: f64,
    turn: TurnKind,
) -> Result<PathSpec, GeometryError> {
    layout.validate()?;
    for v in [w.p2[0], w.p2[1], w.p3[0], w.p3[1], exit_heading] {
        if !v.is_finite() {
            return Err(GeometryError::NonFinite("waypoint"));
        }
    }
    let anchor = layout.turn_anchor();
    let exit_heading = wrap_angle(exit_heading);
    let (exit_sin, exit_cos) = exit_heading.sin_cos();
    let exit_dir = [exit_cos, exit_sin];

    let downstream = |from: [f64; 2], to: [f64; 2], dir: [f64; 2]| -> bool {
        (to[0] - from[0]) * dir[0] + (to[1] - from[1]) * dir[1] > 1e-9
    };

    let p3_pose = Pose::new(w.p3[0], w.p3[1], exit_heading);
    let mut segments = Vec::with_capacity(4);
    segments.push(ClothoidSegment::straight(
        Pose::new(
            anchor.x,
            anchor.y - layout.approach_distance,
            anchor.theta,
        ),
        layout.approach_distance,
    ));

    match turn {
        TurnKind::LeftTurn | TurnKind::Straight => {
            if !downstream(anchor.position(), w.p2, [0.0, 1.0]) {
                return Err(GeometryError::Infeasible(
                    "p2 is not downstream of the turn anchor".into(),
                ));
            }
            if !downstream(w.p2, w.p3, exit_dir) {
                return Err(GeometryError::Infeasible(
                    "p3 is not downstream of p2 along the exit direction".into(),
                ));
            }
            let theta2 = wrap_angle(anchor.theta + 0.5 * wrap_angle(exit_heading - anchor.theta));
            let p2_pose = Pose::new(w.p2[0], w.p2[1], theta2);
            let c1 = fit_g1(&anchor, &p2_pose).map_err(|e| GeometryError::Segment {
                index: 1,
                source: Box::new(e),
            })?;
            let c2 = fit_g1(&p2_pose, &p3_pose).map_err(|e| GeometryError::Segment {
                index: 2,
                source: Box::new(e),
            })?;
            segments.push(c1);
            segments.push(c2);
        }
        TurnKind::RightTurn => {
            if !downstream(anchor.position(), w.p3, [0.0, 1.0])
                && !downstream(anchor.position(), w.p3, exit_dir)
            {
                return Err(GeometryError::Infeasible(
                    "p3 is not downstream of the turn anchor".into(),
                ));
            }
            let c1 = fit_g1(&anchor, &p3_pose).map_err(|e| GeometryError::Segment {
                index: 1,
                source: Box::new(e),
            })?;
            segments.push(c1);
        }
    }

    // straight exit: run out to `exit_distance` past the conflict zone,
    // measured along the exit direction
    let along_p3 = w.p3[0] * exit_dir[0] + w.p3[1] * exit_dir[1];
    let along_end = layout.lane_width + self_exit(layout);
    let exit_len = along_end - along_p3;
    if exit_len <= 1e-9 {
        return Err(GeometryError::Infeasible(
            "p3 lies beyond the exit run".into(),
        ));
    }
    segments.push(ClothoidSegment::straight(p3_pose, exit_len));

    Ok(PathSpec {
        segments,
        kind: turn,
    })
}

fn self_exit(layout: &IntersectionLayout) -> f64 {
    layout.exit_distance
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rk4_oracle(seg: &ClothoidSegment, s_end: f64, steps: usize) -> Pose {
        // independent integrator for x' = cos θ(s), y' = sin θ(s)
        let h = s_end / steps as f64;
        let theta = |s: f64| seg.start.theta + seg.kappa0 * s + 0.5 * seg.sharpness * s * s;
        let mut x = seg.start.x;
        let mut y = seg.start.y;
        for k in 0..steps {
            let s = k as f64 * h;
            let (k1x, k1y) = (theta(s).cos(), theta(s).sin());
            let (k2x, k2y) = (theta(s + 0.5 * h).cos(), theta(s + 0.5 * h).sin());
            let (k4x, k4y) = (theta(s + h).cos(), theta(s + h).sin());
            x += h / 6.0 * (k1x + 4.0 * k2x + k4x);
            y += h / 6.0 * (k1y + 4.0 * k2y + k4y);
        }
        Pose::new(x, y, theta(s_end))
    }

    #[test]
    fn straight_segment_eval() {
        let seg = ClothoidSegment::straight(Pose::new(0.0, 0.0, 0.0), 10.0);
        let (pose, kappa) = seg.eval(5.0).unwrap();
        assert_eq!(pose.x, 5.0);
        assert_eq!(pose.y, 0.0);
        assert_eq!(pose.theta, 0.0);
        assert_eq!(kappa, 0.0);
    }

    #[test]
    fn circular_segment_eval() {
        let seg = ClothoidSegment {
            start: Pose::new(0.0, 0.0, 0.0),
            kappa0: 1.0,
            sharpness: 0.0,
            length: FRAC_PI_2,
        };
        let (pose, kappa) = seg.eval(FRAC_PI_2).unwrap();
        assert!((pose.x - 1.0).abs() < 1e-12);
        assert!((pose.y - 1.0).abs() < 1e-12);
        assert!((pose.theta - FRAC_PI_2).abs() < 1e-12);
        assert_eq!(kappa, 1.0);
    }

    #[test]
    fn generic_clothoid_matches_ode_oracle() {
        let seg = ClothoidSegment {
            start: Pose::new(2.0, -1.0, 0.3),
            kappa0: 0.0,
            sharpness: 0.1,
            length: 10.0,
        };
        let (pose, _) = seg.eval(10.0).unwrap();
        let oracle = rk4_oracle(&seg, 10.0, 200_000);
        assert!((pose.x - oracle.x).abs() < 1e-9, "dx = {}", pose.x - oracle.x);
        assert!((pose.y - oracle.y).abs() < 1e-9, "dy = {}", pose.y - oracle.y);
    }

    #[test]
    fn eval_rejects_out_of_range() {
        let seg = ClothoidSegment::straight(Pose::new(0.0, 0.0, 0.0), 1.0);
        assert!(matches!(
            seg.eval(2.0),
            Err(GeometryError::OutOfRange { .. })
        ));
        assert!(matches!(
            seg.eval(-0.5),
            Err(GeometryError::OutOfRange { .. })
        ));
    }

    #[test]
    fn fit_collinear_gives_straight() {
        let seg = fit_g1(&Pose::new(0.0, 0.0, 0.0), &Pose::new(10.0, 0.0, 0.0)).unwrap();
        assert!(seg.kappa0.abs() < 1e-12);
        assert!(seg.sharpness.abs() < 1e-12);
        assert!((seg.length - 10.0).abs() < 1e-9);
    }

    #[test]
    fn fit_quarter_circle() {
        let seg = fit_g1(&Pose::new(0.0, 0.0, 0.0), &Pose::new(1.0, 1.0, FRAC_PI_2)).unwrap();
        assert!((seg.kappa0 - 1.0).abs() < 1e-9, "kappa0 = {}", seg.kappa0);
        assert!(seg.sharpness.abs() < 1e-9);
        assert!((seg.length - FRAC_PI_2).abs() < 1e-9);
    }

    #[test]
    fn fit_round_trip_on_random_pairs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for i in 0..500 {
            let a = Pose::new(
                rng.gen_range(-50.0..50.0),
                rng.gen_range(-50.0..50.0),
                rng.gen_range(-PI..PI),
            );
            let chord: f64 = rng.gen_range(-PI..PI);
            let b_pos = [
                a.x + rng.gen_range(0.5..80.0) * chord.cos(),
                a.y + rng.gen_range(0.5..80.0) * chord.sin(),
            ];
            let phi1 = rng.gen_range(-0.9 * PI..0.9 * PI);
            let b = Pose::new(b_pos[0], b_pos[1], chord + phi1);
            let a = Pose::new(a.x, a.y, chord + rng.gen_range(-0.9 * PI..0.9 * PI));
            let seg = fit_g1(&a, &b).unwrap_or_else(|e| panic!("case {i}: {e}"));
            let end = seg.end_pose();
            assert!(
                (end.x - b.x).abs() < 1e-6 && (end.y - b.y).abs() < 1e-6,
                "case {i}: endpoint error {} {}",
                end.x - b.x,
                end.y - b.y
            );
            assert!(
                wrap_angle(end.theta - b.theta).abs() < 1e-8,
                "case {i}: heading error {}",
                wrap_angle(end.theta - b.theta)
            );
        }
    }

    #[test]
    fn fit_rejects_coincident_points() {
        let p = Pose::new(1.0, 1.0, 0.3);
        assert!(matches!(
            fit_g1(&p, &p),
            Err(GeometryError::DegenerateInput)
        ));
    }

    #[test]
    fn fit_mirror_symmetry() {
        // mirroring both poses about the x axis negates curvature
        let a = Pose::new(0.0, 0.0, 0.4);
        let b = Pose::new(8.0, 3.0, 1.2);
        let am = Pose::new(0.0, 0.0, -0.4);
        let bm = Pose::new(8.0, -3.0, -1.2);
        let seg = fit_g1(&a, &b).unwrap();
        let segm = fit_g1(&am, &bm).unwrap();
        assert!((seg.kappa0 + segm.kappa0).abs() < 1e-9);
        assert!((seg.sharpness + segm.sharpness).abs() < 1e-9);
        assert!((seg.length - segm.length).abs() < 1e-9);
    }

    #[test]
    fn curvature_is_linear_along_fitted_segments() {
        let seg = fit_g1(&Pose::new(0.0, 0.0, 0.2), &Pose::new(12.0, 7.0, 1.0)).unwrap();
        // least-squares line through 100 samples, then max deviation
        let n = 100;
        let samples: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let s = seg.length * i as f64 / (n - 1) as f64;
                (s, seg.eval(s).unwrap().1)
            })
            .collect();
        let sn = n as f64;
        let sx: f64 = samples.iter().map(|p| p.0).sum();
        let sy: f64 = samples.iter().map(|p| p.1).sum();
        let sxx: f64 = samples.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = samples.iter().map(|p| p.0 * p.1).sum();
        let slope = (sn * sxy - sx * sy) / (sn * sxx - sx * sx);
        let icept = (sy - slope * sx) / sn;
        let max_dev = samples
            .iter()
            .map(|p| (p.1 - (icept + slope * p.0)).abs())
            .fold(0.0, f64::max);
        assert!(max_dev < 1e-9, "max deviation {max_dev}");
    }

    fn table1_layout() -> IntersectionLayout {
        IntersectionLayout::cross(3.5, 80.0)
    }

    #[test]
    fn left_turn_path_junctions_hold() {
        let layout = table1_layout();
        // waypoints symmetric about the junction center: p2 at the center,
        // p3 the mirror image of the turn anchor
        let w = WaypointSet {
            p2: [0.0, 0.0],
            p3: [-3.5, 1.75],
        };
        let path = build_turn_path(&layout, &w, PI, TurnKind::LeftTurn).unwrap();
        assert_eq!(path.segments.len(), 4);
        let res = check_g2(&path);
        assert_eq!(res.len(), 3);
        for (i, r) in res.iter().enumerate() {
            assert!(r.position_ok(), "junction {i}: {:?}", r);
            assert!(r.heading_ok(), "junction {i}: {:?}", r);
        }
        // the two arcs are exact mirror images, so the curve junction is
        // curvature continuous
        assert!(
            res[1].dkappa.abs() < 1e-9,
            "curve junction kappa jump {}",
            res[1].dkappa
        );
        // exit segment is straight
        let last = path.segments.last().unwrap();
        assert_eq!(last.kappa0, 0.0);
        assert_eq!(last.sharpness, 0.0);
    }

    #[test]
    fn asymmetric_turn_reports_curvature_jump() {
        let layout = table1_layout();
        let w = WaypointSet {
            p2: [2.4, 2.8],
            p3: [-9.0, 1.75],
        };
        let path = build_turn_path(&layout, &w, PI, TurnKind::LeftTurn).unwrap();
        let res = check_g2(&path);
        for r in &res {
            assert!(r.position_ok() && r.heading_ok());
        }
        assert!(res[1].dkappa.abs() > JUNCTION_TOL_KAPPA);
        let reported = res.iter().map(|r| r.dkappa.abs()).fold(0.0, f64::max);
        assert!((path.max_curvature_jump() - reported).abs() < 1e-15);
    }

    #[test]
    fn straight_route_on_centerline_is_straight() {
        let layout = table1_layout();
        let w = WaypointSet {
            p2: [1.75, 0.0],
            p3: [1.75, 4.0],
        };
        let path = build_turn_path(&layout, &w, FRAC_PI_2, TurnKind::Straight).unwrap();
        for seg in &path.segments {
            assert!(seg.kappa0.abs() < 1e-9, "kappa0 = {}", seg.kappa0);
            assert!(seg.sharpness.abs() < 1e-9);
        }
        for r in check_g2(&path) {
            assert!(r.all_ok());
        }
    }

    #[test]
    fn waypoint_ordering_is_enforced() {
        let layout = table1_layout();
        let w = WaypointSet {
            p2: [1.75, -90.0],
            p3: [-4.0, 1.75],
        };
        assert!(matches!(
            build_turn_path(&layout, &w, PI, TurnKind::LeftTurn),
            Err(GeometryError::Infeasible(_))
        ));
        let w = WaypointSet {
            p2: [-3.0, 0.0],
            p3: [-2.0, 1.75], // upstream of p2 along the exit direction
        };
        assert!(matches!(
            build_turn_path(&layout, &w, PI, TurnKind::LeftTurn),
            Err(GeometryError::Infeasible(_))
        ));
    }

    #[test]
    fn check_g2_reports_deliberate_breaks() {
        // two straights meeting at an angle
        let a = ClothoidSegment::straight(Pose::new(0.0, 0.0, 0.0), 5.0);
        let b = ClothoidSegment::straight(Pose::new(5.0, 0.0, 0.3), 5.0);
        let path = PathSpec {
            segments: vec![a, b],
            kind: TurnKind::Straight,
        };
        let res = check_g2(&path);
        assert_eq!(res.len(), 1);
        assert!((res[0].dtheta - 0.3).abs() < 1e-12);
        // straight into a circular arc sharing the pose: curvature jump
        let c = ClothoidSegment {
            start: Pose::new(5.0, 0.0, 0.0),
            kappa0: 0.1,
            sharpness: 0.0,
            length: 5.0,
        };
        let path = PathSpec {
            segments: vec![a, c],
            kind: TurnKind::Straight,
        };
        let res = check_g2(&path);
        assert!((res[0].dkappa - 0.1).abs() < 1e-12);
        assert!(res[0].position_ok() && res[0].heading_ok());
    }

    #[test]
    fn single_segment_has_no_junctions() {
        let path = PathSpec {
            segments: vec![ClothoidSegment::straight(Pose::new(0.0, 0.0, 0.0), 5.0)],
            kind: TurnKind::Straight,
        };
        assert!(check_g2(&path).is_empty());
    }

    #[test]
    fn trim_preserves_tail_geometry() {
        let layout = table1_layout();
        let w = WaypointSet {
            p2: [0.5, 0.5],
            p3: [-4.0, 1.75],
        };
        let path = build_turn_path(&layout, &w, PI, TurnKind::LeftTurn).unwrap();
        let total = path.total_length();
        let trimmed = path.trim_from(30.0).unwrap();
        assert!((trimmed.total_length() - (total - 30.0)).abs() < 1e-9);
        for s in [0.0, 10.0, 40.0, trimmed.total_length()] {
            let (p_t, k_t) = trimmed.eval(s).unwrap();
            let (p_o, k_o) = path.eval(s + 30.0).unwrap();
            assert!((p_t.x - p_o.x).abs() < 1e-9);
            assert!((p_t.y - p_o.y).abs() < 1e-9);
            assert!(wrap_angle(p_t.theta - p_o.theta).abs() < 1e-9);
            assert!((k_t - k_o).abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_maps_canonical_path_to_other_arms() {
        let layout = table1_layout();
        let w = WaypointSet {
            p2: [0.0, 0.0],
            p3: [-4.0, 1.75],
        };
        let path = build_turn_path(&layout, &w, PI, TurnKind::LeftTurn).unwrap();
        let rot = Arm::North.rotation_to_canonical();
        let rotated = path.rotated(-rot);
        let (p, _) = rotated.eval(0.0).unwrap();
        // canonical start (1.75, -83.5) maps to (-1.75, 83.5) for the north arm
        assert!((p.x + 1.75).abs() < 1e-9);
        assert!((p.y - 83.5).abs() < 1e-9);
        assert!((rotated.total_length() - path.total_length()).abs() < 1e-12);
    }

    #[test]
    fn conflict_zone_membership() {
        let layout = table1_layout();
        assert!(layout.in_conflict_zone([0.0, 0.0]));
        assert!(layout.in_conflict_zone([3.5, 3.5]));
        assert!(!layout.in_conflict_zone([3.6, 0.0]));
        assert!(!layout.in_conflict_zone([0.0, -10.0]));
    }
}
