//! Convergence detection for `∫_a^∞ p` with `p ≥ 0`.
//!
//! The horizon is doubled from `start` to `cap`. The increments over the
//! doubled ranges are matched against two tail models:
//!
//! * power law in `r`: `p ~ c·r^{−s}`, increments shrink by the constant
//!   factor `2^{1−s}`;
//! * power law in `log r`: `p ~ c·r^{−1}(log r)^{−σ}`, increments follow
//!   `∫ x^{−σ} dx` over consecutive `log`-ranges.
//!
//! Whichever model better predicts the previous increment ratio is used to
//! decide convergence (exponent above 1 by a margin), divergence (exponent
//! at or below 1) and, for convergent tails, the extrapolated remainder.

use serde::{Deserialize, Serialize};

use super::quadrature::gauss_kronrod;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPolicy {
    /// First truncation horizon.
    pub start: f64,
    /// Largest truncation horizon.
    pub cap: f64,
    /// Two consecutive doublings changing the integral by less than this
    /// (relative) count as converged regardless of the model fit.
    pub rel_tol: f64,
    /// Relative accuracy requested from each partial quadrature.
    pub quad_rel_tol: f64,
    /// Required excess of the `r`-power exponent over 1 for convergence.
    pub power_margin: f64,
    /// Required excess of the `log r`-power exponent over 1 for convergence.
    pub log_margin: f64,
}

impl Default for TailPolicy {
    fn default() -> Self {
        Self {
            start: 1e3,
            cap: 1e9,
            rel_tol: 1e-12,
            quad_rel_tol: 1e-12,
            power_margin: 0.02,
            log_margin: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum TailVerdict {
    Converges { value: f64 },
    Diverges,
    Inconclusive,
}

impl TailVerdict {
    pub fn converges(&self) -> bool {
        matches!(self, TailVerdict::Converges { .. })
    }

    pub fn diverges(&self) -> bool {
        matches!(self, TailVerdict::Diverges)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailTrace {
    pub verdict: TailVerdict,
    /// Truncation horizons `H_0 < H_1 < …`.
    pub horizons: Vec<f64>,
    /// `∫_a^{H_k} p`.
    pub partials: Vec<f64>,
    /// `"r-power"`, `"log-power"`, `"vanishing"` or `"overflow"`.
    pub model: String,
    /// Fitted tail exponent of the selected model.
    pub exponent: Option<f64>,
}

/// Classifies `∫_a^∞ p`. `p` must be nonnegative on `[a, ∞)`; the closure is
/// evaluated only up to `policy.cap`.
pub fn improper_tail<F: Fn(f64) -> f64>(p: F, a: f64, policy: &TailPolicy) -> Result<TailTrace> {
    if !a.is_finite() {
        return Err(Error::Parameter(format!(
            "tail start must be finite, got {a}"
        )));
    }
    if !(policy.start > 0.0 && policy.cap > policy.start) {
        return Err(Error::Parameter("tail policy needs 0 < start < cap".into()));
    }
    let mut h0 = policy.start;
    while h0 <= a.max(1.0) * 2.0 {
        h0 *= 2.0;
    }
    let mut horizons = vec![h0];
    while horizons.last().copied().unwrap_or(h0) * 2.0 <= policy.cap * (1.0 + 1e-12) {
        let next = horizons.last().unwrap() * 2.0;
        horizons.push(next);
    }
    let overflow = |horizons: Vec<f64>, partials: Vec<f64>| TailTrace {
        verdict: TailVerdict::Diverges,
        horizons,
        partials,
        model: "overflow".into(),
        exponent: None,
    };

    let quad = |lo: f64, hi: f64| gauss_kronrod(&p, lo, hi, 1e-300, policy.quad_rel_tol);
    let first = match quad(a, h0) {
        Ok(v) if v.is_finite() => v,
        Ok(_) => return Ok(overflow(vec![h0], vec![])),
        Err(Error::QuadratureFailure { reason, .. }) if reason.contains("not finite") => {
            return Ok(overflow(vec![h0], vec![]))
        }
        Err(e) => return Err(e),
    };
    let mut partials = vec![first];
    let mut increments = Vec::new();
    for w in horizons.clone().windows(2) {
        let d = match quad(w[0], w[1]) {
            Ok(v) if v.is_finite() => v.max(0.0),
            Ok(_) => return Ok(overflow(horizons[..partials.len()].to_vec(), partials)),
            Err(Error::QuadratureFailure { reason, .. }) if reason.contains("not finite") => {
                return Ok(overflow(horizons[..partials.len()].to_vec(), partials))
            }
            Err(e) => return Err(e),
        };
        let total = partials.last().unwrap() + d;
        if !total.is_finite() {
            return Ok(overflow(horizons[..partials.len()].to_vec(), partials));
        }
        increments.push(d);
        partials.push(total);
    }

    let mut trace = TailTrace {
        verdict: TailVerdict::Inconclusive,
        horizons: horizons.clone(),
        partials: partials.clone(),
        model: String::new(),
        exponent: None,
    };
    let k = increments.len();
    if k < 3 {
        trace.model = "too-few-doublings".into();
        return Ok(trace);
    }
    let last = partials[k];
    let (d2, d1, d0) = (increments[k - 1], increments[k - 2], increments[k - 3]);
    if d2 == 0.0 && d1 == 0.0 {
        trace.model = "vanishing".into();
        trace.verdict = TailVerdict::Converges { value: last };
        return Ok(trace);
    }
    if d1 == 0.0 || d0 == 0.0 {
        trace.model = "irregular".into();
        return Ok(trace);
    }
    let q = d2 / d1;
    let q_prev = d1 / d0;

    // Log-power model on x = log H.
    let x: Vec<f64> = horizons[k - 3..=k].iter().map(|h| h.ln()).collect();
    let sigma = solve_log_exponent(q, x[1], x[2], x[3]);
    let err_log = sigma
        .map(|s| (log_ratio(s, x[0], x[1], x[2]) - q_prev).abs())
        .unwrap_or(f64::INFINITY);
    let err_pow = (q - q_prev).abs();

    if err_pow <= err_log {
        let s = 1.0 - q.log2();
        trace.model = "r-power".into();
        trace.exponent = Some(s);
        let small =
            d2 <= policy.rel_tol * last.abs() && d1 <= policy.rel_tol * partials[k - 1].abs();
        if (s > 1.0 + policy.power_margin || small) && q < 1.0 {
            trace.verdict = TailVerdict::Converges {
                value: last + d2 * q / (1.0 - q),
            };
        } else if s <= 1.0 + policy.power_margin / 4.0 {
            trace.verdict = TailVerdict::Diverges;
        }
    } else {
        let s = sigma.expect("finite error implies a fitted exponent");
        trace.model = "log-power".into();
        trace.exponent = Some(s);
        if s > 1.0 + policy.log_margin {
            // c·∫_{x_K}^∞ x^{−σ} with c fixed by the last increment.
            let ln_c = d2.ln() - ln_power_integral(s, x[2], x[3]);
            let tail = (ln_c + (1.0 - s) * x[3].ln()).exp() / (s - 1.0);
            trace.verdict = TailVerdict::Converges { value: last + tail };
        } else if s <= 1.0 + policy.log_margin / 10.0 {
            trace.verdict = TailVerdict::Diverges;
        }
    }
    Ok(trace)
}

/// `ln ∫_a^b x^{−σ} dx` for `0 < a < b`.
fn ln_power_integral(sigma: f64, a: f64, b: f64) -> f64 {
    let e = 1.0 - sigma;
    let l = (b / a).ln();
    if (e * l).abs() < 1e-12 {
        return (1.0 - sigma) * a.ln() + l.ln();
    }
    // a^e·(exp(e·l) − 1)/e, with the sign of e cancelling.
    let core = (e * l).exp_m1() / e;
    e * a.ln() + core.ln()
}

fn log_ratio(sigma: f64, x0: f64, x1: f64, x2: f64) -> f64 {
    (ln_power_integral(sigma, x1, x2) - ln_power_integral(sigma, x0, x1)).exp()
}

/// Solves `log_ratio(σ, x0, x1, x2) = q`; the ratio decreases in σ.
fn solve_log_exponent(q: f64, x0: f64, x1: f64, x2: f64) -> Option<f64> {
    let (mut lo, mut hi) = (-50.0, 200.0);
    let f = |s: f64| log_ratio(s, x0, x1, x2) - q;
    if !(f(lo) > 0.0 && f(hi) < 0.0) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(p: impl Fn(f64) -> f64, a: f64) -> TailTrace {
        improper_tail(p, a, &TailPolicy::default()).unwrap()
    }

    #[test]
    fn inverse_square_converges_to_one() {
        let t = run(|r| r.powi(-2), 1.0);
        match t.verdict {
            TailVerdict::Converges { value } => assert!((value - 1.0).abs() < 1e-9, "{value}"),
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn harmonic_tail_diverges() {
        assert!(run(|r| 1.0 / r, 1.0).verdict.diverges());
    }

    #[test]
    fn log_squared_tail_converges_to_closed_form() {
        let t = run(|r: f64| 1.0 / (r * r.ln().powi(2)), 2.0);
        assert_eq!(t.model, "log-power");
        match t.verdict {
            TailVerdict::Converges { value } => {
                let exact = 1.0 / 2f64.ln();
                assert!((value - exact).abs() < 1e-6, "{value} vs {exact}");
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn log_harmonic_tail_diverges() {
        assert!(run(|r: f64| 1.0 / (r * r.ln()), 2.0).verdict.diverges());
    }

    #[test]
    fn slow_powers() {
        assert!(run(|r: f64| r.powf(-1.5), 1.0).verdict.converges());
        assert!(run(|r: f64| r.powf(-0.5), 1.0).verdict.diverges());
        assert!(run(|_| 3.0, 0.0).verdict.diverges());
    }

    #[test]
    fn exponential_tails() {
        match run(|r: f64| (-2.0 * r).exp(), 0.0).verdict {
            TailVerdict::Converges { value } => assert!((value - 0.5).abs() < 1e-12),
            v => panic!("{v:?}"),
        }
        assert!(run(|r: f64| r.exp(), 0.0).verdict.diverges());
    }

    #[test]
    fn ln_power_integral_matches_closed_forms() {
        let v = ln_power_integral(2.0, 1.0, 2.0).exp();
        assert!((v - 0.5).abs() < 1e-14);
        let w = ln_power_integral(1.0, 1.0, std::f64::consts::E).exp();
        assert!((w - 1.0).abs() < 1e-12);
    }
}
