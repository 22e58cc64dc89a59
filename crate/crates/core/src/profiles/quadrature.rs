//! Quadrature rules on plain closures.
//!
//! Integrands that return a non-finite value (including NaN from a failed
//! profile evaluation) make the rule fail instead of producing garbage.

use crate::error::{Error, Result};

pub const SIMPSON_DEPTH_CAP: usize = 40;
const SIMPSON_MIN_DEPTH: usize = 4;

fn failure(a: f64, b: f64, reason: impl Into<String>) -> Error {
    Error::QuadratureFailure {
        a,
        b,
        reason: reason.into(),
    }
}

/// Adaptive Simpson with Richardson correction and absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if a > b {
        return adaptive_simpson(f, b, a, tol).map(|v| -v);
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    if !(fa.is_finite() && fm.is_finite() && fb.is_finite()) {
        return Err(failure(a, b, "integrand not finite"));
    }
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&f, [a, m, b], [fa, fm, fb], whole, tol, 0)
}

fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    [a, m, b]: [f64; 3],
    [fa, fm, fb]: [f64; 3],
    whole: f64,
    tol: f64,
    depth: usize,
) -> Result<f64> {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    if !(flm.is_finite() && frm.is_finite()) {
        return Err(failure(a, b, "integrand not finite"));
    }
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let sum = left + right;
    let delta = sum - whole;
    let floor = 64.0 * f64::EPSILON * (left.abs() + right.abs());
    if depth >= SIMPSON_MIN_DEPTH && (delta.abs() <= 15.0 * tol || delta.abs() <= floor) {
        return Ok(sum + delta / 15.0);
    }
    if depth >= SIMPSON_DEPTH_CAP {
        return Err(failure(
            a,
            b,
            format!("depth cap {SIMPSON_DEPTH_CAP} reached"),
        ));
    }
    Ok(
        simpson_step(f, [a, lm, m], [fa, flm, fm], left, 0.5 * tol, depth + 1)?
            + simpson_step(f, [m, rm, b], [fm, frm, fb], right, 0.5 * tol, depth + 1)?,
    )
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let (f1, f2) = (f(c - h * XGK[j]), f(c + h * XGK[j]));
        k += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            g += WG[j / 2] * (f1 + f2);
        }
    }
    let (k, g) = (k * h, g * h);
    if !k.is_finite() {
        return Err(failure(a, b, "integrand not finite"));
    }
    Ok((k, (k - g).abs()))
}

/// Globally adaptive 7–15 Gauss–Kronrod on a finite interval. Stops when the
/// summed error estimate is at most `max(abs_tol, rel_tol·|I|)`.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if a > b {
        return gauss_kronrod(f, b, a, abs_tol, rel_tol).map(|v| -v);
    }
    const MAX_SEGMENTS: usize = 4000;
    let (v, e) = kronrod15(&f, a, b)?;
    let mut segs = vec![(a, b, v, e)];
    loop {
        let total: f64 = segs.iter().map(|s| s.2).sum();
        let err: f64 = segs.iter().map(|s| s.3).sum();
        let roundoff = 50.0 * f64::EPSILON * segs.iter().map(|s| s.2.abs()).sum::<f64>();
        if err <= abs_tol.max(rel_tol * total.abs()).max(roundoff) {
            return Ok(total);
        }
        if segs.len() >= MAX_SEGMENTS {
            return Err(failure(
                a,
                b,
                format!("no convergence after {MAX_SEGMENTS} segments (error {err:e})"),
            ));
        }
        let (idx, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (sa, sb, _, _) = segs.swap_remove(idx);
        let mid = 0.5 * (sa + sb);
        if !(mid > sa && mid < sb) {
            return Err(failure(a, b, "interval underflow"));
        }
        let (v1, e1) = kronrod15(&f, sa, mid)?;
        let (v2, e2) = kronrod15(&f, mid, sb)?;
        segs.push((sa, mid, v1, e1));
        segs.push((mid, sb, v2, e2));
    }
}

/// `∫_a^∞ f` through the map `s = a + u/(1−u)`; requires a convergent tail.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64> {
    let mapped = |u: f64| {
        let w = 1.0 - u;
        let s = a + u / w;
        if s.is_infinite() {
            return 0.0;
        }
        let v = f(s) / (w * w);
        // An integrand that has decayed to zero can give 0·∞ near u = 1.
        if v.is_nan() && f(s) == 0.0 {
            0.0
        } else {
            v
        }
    };
    gauss_kronrod(mapped, 0.0, 1.0, abs_tol, rel_tol)
}

/// Three-point Gauss–Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre3(a: f64, b: f64) -> [(f64, f64); 3] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let x = (0.6f64).sqrt();
    [
        (c - h * x, h * 5.0 / 9.0),
        (c, h * 8.0 / 9.0),
        (c + h * x, h * 5.0 / 9.0),
    ]
}
