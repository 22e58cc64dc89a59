//! Weight functions `ρ ≥ 0` and superharmonic certificates `Δh ≤ −ρh`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profiles::quadrature::integrate_to_infinity;
use crate::profiles::{improper_tail, Domain, ScalarProfile, TailPolicy};
use crate::warped::{probe_points, WarpedModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightSource {
    Hardy,
    CartanHadamard,
    GreenModel,
    MinimalExtrinsic,
    NaturalWarp,
    User,
}

#[derive(Debug, Clone)]
pub struct WeightProfile {
    pub rho: ScalarProfile,
    pub source: WeightSource,
    /// Sub-interval on which `ρ ≥ 0` was checked.
    pub valid_region: Domain,
    /// Why the profile fails to be a weight, if it does.
    pub invalid_reason: Option<String>,
}

impl WeightProfile {
    pub(crate) fn from_parts(rho: ScalarProfile, source: WeightSource) -> Self {
        let valid_region = rho.domain();
        Self {
            rho,
            source,
            valid_region,
            invalid_reason: None,
        }
    }

    pub(crate) fn flag_invalid(&mut self, reason: String) {
        self.invalid_reason = Some(reason);
    }

    /// Wraps a user profile, flagging it if a probe finds `ρ < 0` or `ρ ≡ 0`.
    pub fn user(rho: ScalarProfile) -> Self {
        let mut w = Self::from_parts(rho, WeightSource::User);
        let probes = probe_points(w.rho.domain());
        let values: Vec<(f64, f64)> = probes
            .iter()
            .filter_map(|&t| w.rho.eval(t).ok().map(|v| (t, v)))
            .collect();
        if let Some(&(t, v)) = values.iter().find(|(_, v)| *v < 0.0) {
            w.flag_invalid(format!("ρ({t}) = {v} < 0"));
        } else if values.iter().all(|(_, v)| *v == 0.0) {
            w.flag_invalid("ρ vanishes at every probe point".into());
        }
        w
    }

    /// `factor·ρ`, keeping the source and validity.
    pub fn scaled(&self, factor: f64) -> Self {
        let p = self.rho.clone();
        let rho = ScalarProfile::analytic(p.domain(), move |t, k| {
            factor * p.derivative(t, k).unwrap_or(f64::NAN)
        });
        Self {
            rho,
            ..self.clone()
        }
    }

    pub fn is_valid(&self) -> bool {
        self.invalid_reason.is_none()
    }

    pub fn domain(&self) -> Domain {
        self.rho.domain()
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        self.rho.eval(t)
    }

    /// `√ρ`, clamping tiny negative round-off to zero.
    pub fn sqrt(&self, t: f64) -> Result<f64> {
        Ok(self.rho.eval(t)?.max(0.0).sqrt())
    }
}

fn require_dimension(n: usize, min: usize) -> Result<()> {
    if n < min {
        Err(Error::DegenerateDimension { n, min })
    } else {
        Ok(())
    }
}

/// `(n−2)²/4 · r^{−2}` on `(0, ∞)`.
pub fn hardy_weight(n: usize) -> Result<WeightProfile> {
    require_dimension(n, 3)?;
    let c = (n as f64 - 2.0).powi(2) / 4.0;
    let rho = ScalarProfile::analytic(Domain::positive(), move |r, k| match k {
        0 => c / (r * r),
        1 => -2.0 * c / (r * r * r),
        _ => 6.0 * c / (r * r * r * r),
    });
    Ok(WeightProfile::from_parts(rho, WeightSource::Hardy))
}

/// `(n−1)²/4 + (n−1)²/2 · (coth r − 1)` on `(0, ∞)`.
pub fn cartan_hadamard_weight(n: usize) -> Result<WeightProfile> {
    require_dimension(n, 2)?;
    let m2 = (n as f64 - 1.0).powi(2);
    let rho = ScalarProfile::analytic(Domain::positive(), move |r, k| {
        let s = r.sinh();
        match k {
            // coth r − 1 = 2/(e^{2r} − 1)
            0 => m2 / 4.0 + m2 / 2.0 * (2.0 / (2.0 * r).exp_m1()),
            1 => -m2 / 2.0 / (s * s),
            _ => m2 * r.cosh() / (s * s * s),
        }
    });
    Ok(WeightProfile::from_parts(rho, WeightSource::CartanHadamard))
}

/// Point from which the parabolicity tail of a model is tested.
pub(crate) fn tail_base(m: &WarpedModel) -> f64 {
    let d = m.domain();
    if d.lo.is_finite() {
        d.lo + 1.0
    } else {
        0.0f64.min(d.hi - 1.0)
    }
}

/// `|∇G|²/(4G²)` for the radial Green's function `G(r) ∝ ∫_r^∞ A^{−1}`.
pub fn green_weight_model(m: &WarpedModel) -> Result<WeightProfile> {
    let d = m.domain();
    if d.hi.is_finite() {
        return Err(Error::Configuration(
            "Green weight needs a model with an infinite end".into(),
        ));
    }
    let base = tail_base(m);
    let trace = improper_tail(
        |s| m.inverse_area(s).unwrap_or(f64::NAN),
        base,
        &TailPolicy::default(),
    )?;
    if !trace.verdict.converges() {
        return Err(Error::NoGreenFunction(format!(
            "∫^∞ A^{{-1}} is not finite (tail verdict {:?}, model {})",
            trace.verdict, trace.model
        )));
    }
    let model = m.clone();
    let nm1 = m.n() as f64 - 1.0;
    let rho = ScalarProfile::finite_difference(d, None, move |r| {
        // A(r)·∫_r^∞ A^{−1} = ∫_r^∞ (η(r)/η(s))^{n−1} ds, free of V_N.
        let Ok(jr) = model.warping().jet(r) else {
            return f64::NAN;
        };
        let ratio = |s: f64| match model.warping().jet(s) {
            Ok(js) => (nm1 * (jr.log_eta - js.log_eta)).exp(),
            Err(_) => f64::NAN,
        };
        match integrate_to_infinity(ratio, r, 0.0, 1e-13) {
            Ok(q) => 1.0 / (4.0 * q * q),
            Err(_) => f64::NAN,
        }
    })?;
    Ok(WeightProfile::from_parts(rho, WeightSource::GreenModel))
}

/// `(n−2)²/4 · r̄^{−2}` for a supplied extrinsic-distance profile `r̄`.
pub fn minimal_weight(n: usize, rbar: &ScalarProfile) -> Result<WeightProfile> {
    require_dimension(n, 3)?;
    for t in probe_points(rbar.domain()) {
        let v = rbar.eval(t)?;
        if !(v > 0.0) {
            return Err(Error::InvalidProfile(format!(
                "r̄ must be positive, r̄({t}) = {v}"
            )));
        }
    }
    let c = (n as f64 - 2.0).powi(2) / 4.0;
    let rb = rbar.clone();
    let rho = ScalarProfile::analytic(rbar.domain(), move |t, k| {
        let Ok(x) = rb.eval(t) else { return f64::NAN };
        match k {
            0 => c / (x * x),
            1 => {
                let dx = rb.derivative(t, 1).unwrap_or(f64::NAN);
                -2.0 * c * dx / x.powi(3)
            }
            _ => {
                let dx = rb.derivative(t, 1).unwrap_or(f64::NAN);
                let ddx = rb.derivative(t, 2).unwrap_or(f64::NAN);
                c * (6.0 * dx * dx / x.powi(4) - 2.0 * ddx / x.powi(3))
            }
        }
    });
    Ok(WeightProfile::from_parts(
        rho,
        WeightSource::MinimalExtrinsic,
    ))
}

/// `Δh + ρh` at `t`; a nonpositive value is a local certificate.
pub fn certificate_residual(
    h: &ScalarProfile,
    w: &WeightProfile,
    m: &WarpedModel,
    t: f64,
) -> Result<f64> {
    let hv = h.eval(t)?;
    if !(hv > 0.0) {
        return Err(Error::DegeneratePoint {
            t,
            reason: format!("certificate h = {hv} is not positive"),
        });
    }
    Ok(m.radial_laplacian(h, t)? + w.eval(t)? * hv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::warped::{DomainKind, FiberData, Warping};
    use approx::assert_abs_diff_eq;

    #[test]
    fn hardy_examples() {
        assert_eq!(hardy_weight(4).unwrap().eval(2.0).unwrap(), 0.25);
        assert_eq!(hardy_weight(3).unwrap().eval(1.0).unwrap(), 0.25);
        assert_eq!(hardy_weight(10).unwrap().eval(4.0).unwrap(), 1.0);
        assert!(matches!(
            hardy_weight(2),
            Err(Error::DegenerateDimension { n: 2, min: 3 })
        ));
    }

    #[test]
    fn cartan_hadamard_examples() {
        let w = cartan_hadamard_weight(3).unwrap();
        assert_abs_diff_eq!(w.eval(60.0).unwrap(), 1.0, epsilon = 1e-15);
        let w2 = cartan_hadamard_weight(2).unwrap();
        let direct = 0.25 + 0.5 * (1.0 / 1f64.tanh() - 1.0);
        assert_abs_diff_eq!(w2.eval(1.0).unwrap(), direct, epsilon = 1e-15);
        assert_abs_diff_eq!(direct, 0.406_517_64, epsilon = 1e-8);
        assert!(w2.eval(1e-10).unwrap() > 1e9);
        assert!(w2.eval(0.0).is_err());
    }

    #[test]
    fn green_weight_on_euclidean_is_hardy() {
        for n in 3..=5 {
            let g = green_weight_model(&WarpedModel::euclidean(n).unwrap()).unwrap();
            let h = hardy_weight(n).unwrap();
            for r in [0.5, 1.0, 10.0] {
                let (a, b) = (g.eval(r).unwrap(), h.eval(r).unwrap());
                assert!(
                    (a - b).abs() <= 1e-10 * b.max(1.0),
                    "n={n} r={r}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn green_weight_on_exponential_end() {
        let m = WarpedModel::new(
            3,
            DomainKind::FullLine,
            Warping::exponential(1.0),
            FiberData::flat(1.0),
        )
        .unwrap();
        let g = green_weight_model(&m).unwrap();
        for t in [-2.0, 0.0, 4.0, 30.0] {
            assert_abs_diff_eq!(g.eval(t).unwrap(), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn green_weight_rejects_parabolic_cylinder() {
        let m = WarpedModel::new(
            3,
            DomainKind::FullLine,
            Warping::constant(1.0).unwrap(),
            FiberData::flat(1.0),
        )
        .unwrap();
        assert!(matches!(
            green_weight_model(&m),
            Err(Error::NoGreenFunction(_))
        ));
    }

    #[test]
    fn minimal_weight_examples() {
        let id = ScalarProfile::analytic(Domain::positive(), |t, k| match k {
            0 => t,
            1 => 1.0,
            _ => 0.0,
        });
        let w = minimal_weight(4, &id).unwrap();
        assert_eq!(
            w.eval(2.0).unwrap(),
            hardy_weight(4).unwrap().eval(2.0).unwrap()
        );
        let five = ScalarProfile::constant(Domain::real_line(), 5.0);
        assert_abs_diff_eq!(
            minimal_weight(3, &five).unwrap().eval(7.0).unwrap(),
            0.01,
            epsilon = 1e-17
        );
        let root = ScalarProfile::analytic(Domain::real_line(), |t: f64, k| match k {
            0 => (1.0 + t * t).sqrt(),
            1 => t / (1.0 + t * t).sqrt(),
            _ => (1.0 + t * t).powf(-1.5),
        });
        assert_eq!(minimal_weight(4, &root).unwrap().eval(0.0).unwrap(), 1.0);
        let neg = ScalarProfile::constant(Domain::real_line(), -1.0);
        assert!(minimal_weight(3, &neg).is_err());
    }

    #[test]
    fn certificate_examples() {
        let n = 5;
        let m = WarpedModel::euclidean(n).unwrap();
        let g = green_weight_model(&m).unwrap();
        // h = G^{1/2} ∝ r^{(2−n)/2}.
        let p = (2.0 - n as f64) / 2.0;
        let h = ScalarProfile::analytic(Domain::positive(), move |r: f64, k| match k {
            0 => r.powf(p),
            1 => p * r.powf(p - 1.0),
            _ => p * (p - 1.0) * r.powf(p - 2.0),
        });
        for r in [0.5, 1.0, 3.0] {
            assert!(certificate_residual(&h, &g, &m, r).unwrap().abs() < 1e-8);
        }
        let one = ScalarProfile::constant(Domain::positive(), 1.0);
        let zero = WeightProfile::user(ScalarProfile::constant(Domain::positive(), 0.0));
        assert!(!zero.is_valid());
        assert_eq!(certificate_residual(&one, &zero, &m, 1.0).unwrap(), 0.0);
        let hardy = hardy_weight(n).unwrap();
        assert!(certificate_residual(&one, &hardy, &m, 1.0).unwrap() > 0.0);
    }

    #[test]
    fn user_weight_flags_negative_values() {
        let w = WeightProfile::user(ScalarProfile::analytic(Domain::real_line(), |t, k| {
            if k == 0 {
                t
            } else {
                1.0
            }
        }));
        assert!(!w.is_valid());
    }
}
