//! Scalar numerics backing the geometry module: standard Fresnel integrals
//! and the generalized clothoid displacement integral
//! `∫₀¹ exp(i(aτ²/2 + bτ + c)) dτ`.
//!
//! The Fresnel evaluator follows the classic Cephes `fresnl` scheme: a power
//! series for small arguments and rational approximations of the auxiliary
//! functions f, g for large arguments. Peak error is a few ulps across the
//! whole range, which the quadrature-oracle tests pin down.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

/// Wrap an angle to the half-open interval (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a % (2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    } else if r <= -PI {
        r += 2.0 * PI;
    }
    r
}

fn polevl(x: f64, coef: &[f64]) -> f64 {
    let mut r = coef[0];
    for &c in &coef[1..] {
        r = r * x + c;
    }
    r
}

/// Like `polevl` with an implicit leading coefficient of 1.
fn p1evl(x: f64, coef: &[f64]) -> f64 {
    let mut r = x + coef[0];
    for &c in &coef[1..] {
        r = r * x + c;
    }
    r
}

const SN: [f64; 6] = [
    -2.99181919401019853726e3,
    7.08840045257738576863e5,
    -6.29741486205862506537e7,
    2.54890880573376359104e9,
    -4.42979518059697779103e10,
    3.18016297876567817986e11,
];
const SD: [f64; 6] = [
    2.81376268889994315696e2,
    4.55847810806532581675e4,
    5.17343888770096400730e6,
    4.19320245898111231129e8,
    2.24411795645340920940e10,
    6.07366389490084639049e11,
];
const CN: [f64; 6] = [
    -4.98843114573573548651e-8,
    9.50428062829859605134e-6,
    -6.45191435683965050962e-4,
    1.88843319396703850064e-2,
    -2.05525900955013891793e-1,
    9.99999999999999998822e-1,
];
const CD: [f64; 7] = [
    3.99982968972495980367e-12,
    9.15439215774657478799e-10,
    1.25001862479598821474e-7,
    1.22262789024179030997e-5,
    8.68029542941784300606e-4,
    4.12142090722199792936e-2,
    1.00000000000000000118e0,
];
const FN: [f64; 10] = [
    4.21543555043677546506e-1,
    1.43407919780758885261e-1,
    1.15220955073585758835e-2,
    3.45017939782574027900e-4,
    4.63613749287867322088e-6,
    3.05568983790257605827e-8,
    1.02304514164907233465e-10,
    1.72010743268161828879e-13,
    1.34283276233062758925e-16,
    3.76329711269987889006e-20,
];
const FD: [f64; 10] = [
    7.51586398353378947175e-1,
    1.16888925859191382142e-1,
    6.44051526508858611005e-3,
    1.55934409164153020873e-4,
    1.84627567348930545870e-6,
    1.12699224763999035261e-8,
    3.60140029589371370404e-11,
    5.88754533621578410010e-14,
    4.52001434074129701496e-17,
    1.25443237090011264384e-20,
];
const GN: [f64; 11] = [
    5.04442073643383265887e-1,
    1.97102833525523411709e-1,
    1.87648584092575249293e-2,
    6.84079380915393090172e-4,
    1.15138826111884280931e-5,
    9.82852443688422223854e-8,
    4.45344415861750144738e-10,
    1.08268041139020870318e-12,
    1.37555460633261799868e-15,
    8.36354435630677421531e-19,
    1.86958710162783235106e-22,
];
const GD: [f64; 11] = [
    1.47495759925128324529e0,
    3.37748989120019970451e-1,
    2.53603741420338795122e-2,
    8.14679107184306179049e-4,
    1.27545075667729118702e-5,
    1.04314589657571990585e-7,
    4.60680728146520428211e-10,
    1.10273215066240270757e-12,
    1.38796531259578871258e-15,
    8.39158816283118707363e-19,
    1.86958710162783236342e-22,
];

/// Fresnel integrals `(C(x), S(x))` with `C(x) = ∫₀ˣ cos(πu²/2) du` and
/// `S(x) = ∫₀ˣ sin(πu²/2) du`. Odd in `x` by construction.
pub fn fresnel_cs(x: f64) -> (f64, f64) {
    let ax = x.abs();
    let x2 = ax * ax;
    let (cc, ss);
    if x2 < 2.5625 {
        let t = x2 * x2;
        ss = ax * x2 * polevl(t, &SN) / p1evl(t, &SD);
        cc = ax * polevl(t, &CN) / polevl(t, &CD);
    } else if ax > 36974.0 {
        cc = 0.5;
        ss = 0.5;
    } else {
        let t = PI * x2;
        let u = 1.0 / (t * t);
        let f = 1.0 - u * polevl(u, &FN) / p1evl(u, &FD);
        let g = polevl(u, &GN) / (t * p1evl(u, &GD));
        let w = FRAC_PI_2 * x2;
        let (sw, cw) = w.sin_cos();
        let pix = PI * ax;
        cc = 0.5 + (f * sw - g * cw) / pix;
        ss = 0.5 - (f * cw + g * sw) / pix;
    }
    if x < 0.0 {
        (-cc, -ss)
    } else {
        (cc, ss)
    }
}

/// Below this |a| the phase is nearly linear in τ and the Fresnel reduction
/// would divide by a small scale factor; integrate directly instead.
const SMALL_QUADRATIC_COEFF: f64 = 1e-2;

/// Generalized clothoid displacement integrals
/// `X = ∫₀¹ cos(aτ²/2 + bτ + c) dτ`, `Y = ∫₀¹ sin(aτ²/2 + bτ + c) dτ`.
///
/// For |a| away from zero this completes the square and reduces to standard
/// Fresnel integrals; otherwise it falls back to composite Gauss–Legendre
/// panels sized to the phase span.
pub fn clothoid_xy(a: f64, b: f64, c: f64) -> (f64, f64) {
    if a.abs() < SMALL_QUADRATIC_COEFF {
        return clothoid_xy_quadrature(a, b, c);
    }
    let sigma = if a > 0.0 { 1.0 } else { -1.0 };
    let z = (a.abs() / PI).sqrt();
    let omega = c - b * b / (2.0 * a);
    let u0 = sigma * b / (PI * a.abs()).sqrt();
    let u1 = u0 + z;
    let (c0, s0) = fresnel_cs(u0);
    let (c1, s1) = fresnel_cs(u1);
    let dc = c1 - c0;
    let ds = s1 - s0;
    let (so, co) = omega.sin_cos();
    let x = (dc * co - sigma * ds * so) / z;
    let y = (dc * so + sigma * ds * co) / z;
    (x, y)
}

fn clothoid_xy_quadrature(a: f64, b: f64, c: f64) -> (f64, f64) {
    let phase_span = 0.5 * a.abs() + b.abs();
    let panels = 1 + (phase_span / 6.0) as usize;
    let h = 1.0 / panels as f64;
    let mut x = 0.0;
    let mut y = 0.0;
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * h;
        for &(node, weight) in gl20() {
            let tau = mid + 0.5 * h * node;
            let phase = (0.5 * a * tau + b) * tau + c;
            let (s, cth) = phase.sin_cos();
            x += weight * cth;
            y += weight * s;
        }
    }
    (x * 0.5 * h, y * 0.5 * h)
}

fn gl20() -> &'static [(f64, f64); 20] {
    static NODES: OnceLock<[(f64, f64); 20]> = OnceLock::new();
    NODES.get_or_init(gauss_legendre::<20>)
}

fn gauss_legendre<const N: usize>() -> [(f64, f64); N] {
    let mut out = [(0.0, 0.0); N];
    for (i, slot) in out.iter_mut().enumerate() {
        let mut x = (PI * (i as f64 + 0.75) / (N as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(N, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(N, x);
        *slot = (x, 2.0 / ((1.0 - x * x) * dp * dp));
    }
    out
}

/// Legendre polynomial Pₙ and its derivative at x via the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Adaptive Simpson quadrature, used here as the independent oracle.
    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
            let m = 0.5 * (a + b);
            let fm = f(m);
            (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
        }
        fn recurse(
            f: &dyn Fn(f64) -> f64,
            a: f64,
            fa: f64,
            b: f64,
            fb: f64,
            m: f64,
            fm: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let (lm, flm, left) = simpson(f, a, fa, m, fm);
            let (rm, frm, right) = simpson(f, m, fm, b, fb);
            let delta = left + right - whole;
            if depth == 0 || delta.abs() <= 15.0 * tol {
                left + right + delta / 15.0
            } else {
                recurse(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
                    + recurse(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
            }
        }
        let fa = f(a);
        let fb = f(b);
        let (m, fm, whole) = simpson(f, a, fa, b, fb);
        recurse(f, a, fa, b, fb, m, fm, whole, tol, 48)
    }

    fn fresnel_oracle(s: f64) -> (f64, f64) {
        let c = adaptive_simpson(&|u| (FRAC_PI_2 * u * u).cos(), 0.0, s, 1e-14);
        let sv = adaptive_simpson(&|u| (FRAC_PI_2 * u * u).sin(), 0.0, s, 1e-14);
        (c, sv)
    }

    #[test]
    fn fresnel_at_zero() {
        assert_eq!(fresnel_cs(0.0), (0.0, 0.0));
    }

    #[test]
    fn fresnel_at_one_matches_quadrature() {
        let (c, s) = fresnel_cs(1.0);
        let (co, so) = fresnel_oracle(1.0);
        assert!((c - co).abs() < 1e-12, "C(1)={c} oracle={co}");
        assert!((s - so).abs() < 1e-12, "S(1)={s} oracle={so}");
        // frozen reference values
        assert!((c - 0.779_893_400_376_822_8).abs() < 1e-12);
        assert!((s - 0.438_259_147_390_354_8).abs() < 1e-12);
    }

    #[test]
    fn fresnel_matches_quadrature_on_grid() {
        let mut s = 0.05;
        while s <= 6.0 {
            let (c, sv) = fresnel_cs(s);
            let (co, so) = fresnel_oracle(s);
            assert!((c - co).abs() < 1e-12, "C({s}) = {c}, oracle {co}");
            assert!((sv - so).abs() < 1e-12, "S({s}) = {sv}, oracle {so}");
            s += 0.173;
        }
    }

    #[test]
    fn fresnel_odd_symmetry_is_exact() {
        for &s in &[0.3, 1.0, 2.7, 5.5, 11.0] {
            let (c, sv) = fresnel_cs(s);
            let (cn, sn) = fresnel_cs(-s);
            assert_eq!(cn, -c);
            assert_eq!(sn, -sv);
        }
    }

    #[test]
    fn clothoid_xy_matches_quadrature() {
        let cases = [
            (0.0, 0.0, 0.0),
            (0.0, 3.0, 1.0),
            (0.005, -2.0, 0.4),
            (0.5, 0.0, 0.0),
            (2.0, -1.0, 0.7),
            (-3.0, 2.5, -1.1),
            (12.0, -6.0, 2.0),
            (40.0, 10.0, -0.3),
            (-25.0, -18.0, 1.9),
        ];
        for (a, b, c) in cases {
            let (x, y) = clothoid_xy(a, b, c);
            let xo = adaptive_simpson(&|t| ((0.5 * a * t + b) * t + c).cos(), 0.0, 1.0, 1e-14);
            let yo = adaptive_simpson(&|t| ((0.5 * a * t + b) * t + c).sin(), 0.0, 1.0, 1e-14);
            assert!((x - xo).abs() < 1e-11, "X({a},{b},{c}) = {x}, oracle {xo}");
            assert!((y - yo).abs() < 1e-11, "Y({a},{b},{c}) = {y}, oracle {yo}");
        }
    }

    #[test]
    fn wrap_angle_half_open_interval() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-0.5) + 0.5).abs() < 1e-15);
        assert!(wrap_angle(7.0).abs() < PI + 1e-15);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        // degree-39 exactness: ∫₋₁¹ t³⁸ dt = 2/39
        let exact: f64 = 2.0 / 39.0;
        let got: f64 = gl20().iter().map(|&(t, w)| w * t.powi(38)).sum();
        assert!((got - exact).abs() < 1e-14);
        let sum_w: f64 = gl20().iter().map(|&(_, w)| w).sum();
        assert!((sum_w - 2.0).abs() < 1e-14);
    }
}
