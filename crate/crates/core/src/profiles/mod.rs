//! One-variable real functions: evaluation, derivatives, quadrature and
//! improper-tail classification.
//!
//! A [`ScalarProfile`] is either a closed-form evaluator with analytic
//! derivatives, a plain evaluator differentiated by central differences, or
//! an interpolant built from samples. Every other module consumes profiles.

mod csv;
mod grid;
mod interp;
pub mod quadrature;
mod tail;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub use self::csv::{parse_samples_csv, read_samples_csv};
pub use self::grid::{Grading, GridSpec};
pub use self::interp::{MonotoneCubic, QuinticHermite};
pub use self::tail::{improper_tail, TailPolicy, TailTrace, TailVerdict};

/// Endpoint marker of a profile domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    Finite,
    TruncatedInfinite,
}

/// Closed interval `[lo, hi]`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
}

impl Domain {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::InvalidProfile(format!("empty domain [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn real_line() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn positive() -> Self {
        Self {
            lo: 0.0,
            hi: f64::INFINITY,
        }
    }

    pub fn lo_kind(&self) -> Endpoint {
        if self.lo.is_finite() {
            Endpoint::Finite
        } else {
            Endpoint::TruncatedInfinite
        }
    }

    pub fn hi_kind(&self) -> Endpoint {
        if self.hi.is_finite() {
            Endpoint::Finite
        } else {
            Endpoint::TruncatedInfinite
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        t.is_finite() && t >= self.lo && t <= self.hi
    }

    pub fn contains_open(&self, t: f64) -> bool {
        t.is_finite() && t > self.lo && t < self.hi
    }

    pub fn check(&self, t: f64) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(Error::OutOfDomain {
                t,
                lo: self.lo,
                hi: self.hi,
            })
        }
    }

    pub fn check_open(&self, t: f64) -> Result<()> {
        if self.contains_open(t) {
            Ok(())
        } else {
            Err(Error::OutOfDomain {
                t,
                lo: self.lo,
                hi: self.hi,
            })
        }
    }

    pub fn intersect(&self, other: &Domain) -> Result<Domain> {
        Domain::new(self.lo.max(other.lo), self.hi.min(other.hi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeMode {
    Analytic,
    FiniteDifference,
}

type Evaluator = Arc<dyn Fn(f64, usize) -> f64 + Send + Sync>;
type PlainEvaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Repr {
    /// `f(t, order)` for order 0, 1, 2.
    Analytic(Evaluator),
    FiniteDifference {
        f: PlainEvaluator,
        step: Option<f64>,
    },
    Cubic(Arc<MonotoneCubic>),
    Quintic(Arc<QuinticHermite>),
}

/// A real function of one variable with derivative access.
#[derive(Clone)]
pub struct ScalarProfile {
    domain: Domain,
    repr: Repr,
}

impl fmt::Debug for ScalarProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.repr {
            Repr::Analytic(_) => "analytic",
            Repr::FiniteDifference { .. } => "finite-difference",
            Repr::Cubic(_) => "monotone-cubic",
            Repr::Quintic(_) => "quintic-hermite",
        };
        f.debug_struct("ScalarProfile")
            .field("domain", &self.domain)
            .field("kind", &kind)
            .finish()
    }
}

impl ScalarProfile {
    /// Closed-form profile; `f(t, k)` returns the k-th derivative for k ≤ 2.
    pub fn analytic<F>(domain: Domain, f: F) -> Self
    where
        F: Fn(f64, usize) -> f64 + Send + Sync + 'static,
    {
        Self {
            domain,
            repr: Repr::Analytic(Arc::new(f)),
        }
    }

    /// Plain evaluator; derivatives by central differences. `step = None`
    /// selects the default `1e-5·max(1, |t|)` (order 1) and
    /// `1e-4·max(1, |t|)` (order 2).
    pub fn finite_difference<F>(domain: Domain, step: Option<f64>, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if let Some(h) = step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidProfile(format!(
                    "fd_step must be positive, got {h}"
                )));
            }
        }
        Ok(Self {
            domain,
            repr: Repr::FiniteDifference {
                f: Arc::new(f),
                step,
            },
        })
    }

    /// Monotone (Fritsch–Carlson) cubic through `(t_i, v_i)`.
    pub fn from_samples(ts: &[f64], vs: &[f64]) -> Result<Self> {
        let cubic = MonotoneCubic::new(ts, vs)?;
        let domain = Domain::new(ts[0], ts[ts.len() - 1])?;
        Ok(Self {
            domain,
            repr: Repr::Cubic(Arc::new(cubic)),
        })
    }

    /// C² quintic Hermite interpolant through values and first two derivatives.
    pub fn from_hermite(ts: &[f64], f: &[f64], df: &[f64], ddf: &[f64]) -> Result<Self> {
        let q = QuinticHermite::new(ts, f, df, ddf)?;
        let domain = Domain::new(ts[0], ts[ts.len() - 1])?;
        Ok(Self {
            domain,
            repr: Repr::Quintic(Arc::new(q)),
        })
    }

    pub fn constant(domain: Domain, c: f64) -> Self {
        Self::analytic(domain, move |_, k| if k == 0 { c } else { 0.0 })
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn derivative_mode(&self) -> DerivativeMode {
        match self.repr {
            Repr::FiniteDifference { .. } => DerivativeMode::FiniteDifference,
            _ => DerivativeMode::Analytic,
        }
    }

    /// Restricts the domain; the evaluator is shared.
    pub fn restrict(&self, domain: Domain) -> Result<Self> {
        let domain = self.domain.intersect(&domain)?;
        Ok(Self {
            domain,
            repr: self.repr.clone(),
        })
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        self.domain.check(t)?;
        let v = match &self.repr {
            Repr::Analytic(f) => f(t, 0),
            Repr::FiniteDifference { f, .. } => f(t),
            Repr::Cubic(c) => c.eval(t, 0),
            Repr::Quintic(q) => q.eval(t, 0),
        };
        finite(v, t)
    }

    pub fn derivative(&self, t: f64, order: usize) -> Result<f64> {
        if order == 0 {
            return self.eval(t);
        }
        if order > 2 {
            return Err(Error::UnsupportedOrder { order });
        }
        self.domain.check(t)?;
        let v = match &self.repr {
            Repr::Analytic(f) => f(t, order),
            Repr::Cubic(c) => c.eval(t, order),
            Repr::Quintic(q) => q.eval(t, order),
            Repr::FiniteDifference { f, step } => {
                let scale = t.abs().max(1.0);
                let h = step.unwrap_or(if order == 1 { 1e-5 } else { 1e-4 } * scale);
                if !(self.domain.contains(t - 2.0 * h) && self.domain.contains(t + 2.0 * h)) {
                    return Err(Error::BoundaryProximity { t, step: h });
                }
                let (fp, fm) = (f(t + h), f(t - h));
                if order == 1 {
                    (fp - fm) / (2.0 * h)
                } else {
                    (fp - 2.0 * f(t) + fm) / (h * h)
                }
            }
        };
        finite(v, t)
    }

    /// Value and first two derivatives.
    pub fn jet(&self, t: f64) -> Result<[f64; 3]> {
        Ok([
            self.eval(t)?,
            self.derivative(t, 1)?,
            self.derivative(t, 2)?,
        ])
    }

    /// Value as a plain closure for quadrature; domain errors become NaN,
    /// which the integrators report as failures.
    pub(crate) fn value_fn(&self) -> impl Fn(f64) -> f64 + '_ {
        move |t| self.eval(t).unwrap_or(f64::NAN)
    }
}

fn finite(v: f64, t: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { t })
    }
}

/// Adaptive-Simpson integral of `p` over `[a, b]` with absolute tolerance `tol`.
pub fn integrate(p: &ScalarProfile, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    p.domain.check(a)?;
    p.domain.check(b)?;
    quadrature::adaptive_simpson(p.value_fn(), a, b, tol)
}

/// Tail classification of `∫_a^∞ p` for a profile; see [`improper_tail`].
pub fn profile_tail(p: &ScalarProfile, a: f64, policy: &TailPolicy) -> Result<TailTrace> {
    p.domain.check(a)?;
    improper_tail(p.value_fn(), a, policy)
}
