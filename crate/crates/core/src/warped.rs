//! Warped products `M = I × N` with metric `dt² + η(t)² ds²_N`, including
//! pole models (`η(0) = 0`, `η′(0) = 1`) such as ℝⁿ and ℍⁿ.
//!
//! All formulas are written in terms of `ℓ = log η`, so that warpings of
//! very rapid growth (e.g. `cosh u(t)` with polynomial `u`) never overflow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profiles::quadrature::gauss_kronrod;
use crate::profiles::{Domain, ScalarProfile};
use crate::weights::{WeightProfile, WeightSource};

/// Volume of the unit sphere `S^k ⊂ ℝ^{k+1}`.
pub fn sphere_volume(k: usize) -> f64 {
    use std::f64::consts::PI;
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (k as f64 - 1.0) * sphere_volume(k - 2),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    /// `M = ℝ × N` (or a sub-interval of the line).
    FullLine,
    /// Radial model around a pole at `t = 0`.
    PoleModel,
}

/// Scalar summary of the fiber `N^{n−1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberData {
    /// Infimum of `Ric_N` over points and unit directions.
    pub ricci_lower: f64,
    pub volume: f64,
    /// Constant sectional curvature of the fiber, when it has one.
    pub sectional: Option<f64>,
    /// `R̄ic_αα` for isotropic fibers.
    pub ricci_value: Option<f64>,
    /// User-declared compactness; never inferred.
    #[serde(default)]
    pub compact: bool,
}

impl FiberData {
    /// Round unit sphere `S^{n−1}`.
    pub fn unit_sphere(n: usize) -> Self {
        let k = n.saturating_sub(1);
        Self {
            ricci_lower: k as f64 - 1.0,
            volume: sphere_volume(k),
            sectional: Some(1.0),
            ricci_value: Some(k as f64 - 1.0),
            compact: true,
        }
    }

    /// Flat fiber of the given volume.
    pub fn flat(volume: f64) -> Self {
        Self {
            ricci_lower: 0.0,
            volume,
            sectional: Some(0.0),
            ricci_value: Some(0.0),
            compact: true,
        }
    }
}

/// `log η` with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpJet {
    pub log_eta: f64,
    pub dlog: f64,
    pub ddlog: f64,
    /// `η″/η`, formed without cancellation when `η` is stored directly.
    pub curvature: f64,
}

impl WarpJet {
    pub fn eta(&self) -> f64 {
        self.log_eta.exp()
    }

    /// `η^k`.
    pub fn eta_pow(&self, k: f64) -> f64 {
        (k * self.log_eta).exp()
    }

    /// `η″/η = (log η)″ + ((log η)′)²`.
    pub fn ddeta_over_eta(&self) -> f64 {
        self.curvature
    }
}

/// Warping function, stored either directly or through its logarithm.
#[derive(Debug, Clone)]
pub enum Warping {
    Direct(ScalarProfile),
    Log(ScalarProfile),
}

impl Warping {
    pub fn domain(&self) -> Domain {
        match self {
            Warping::Direct(p) | Warping::Log(p) => p.domain(),
        }
    }

    pub fn jet(&self, t: f64) -> Result<WarpJet> {
        match self {
            Warping::Log(p) => {
                let [l, dl, ddl] = p.jet(t)?;
                Ok(WarpJet {
                    log_eta: l,
                    dlog: dl,
                    ddlog: ddl,
                    curvature: ddl + dl * dl,
                })
            }
            Warping::Direct(p) => {
                let [e, de, dde] = p.jet(t)?;
                if !(e > 0.0) {
                    return Err(Error::DegeneratePoint {
                        t,
                        reason: format!("η = {e} is not positive"),
                    });
                }
                let dlog = de / e;
                Ok(WarpJet {
                    log_eta: e.ln(),
                    dlog,
                    ddlog: dde / e - dlog * dlog,
                    curvature: dde / e,
                })
            }
        }
    }

    /// `η = r` on `(0, ∞)`.
    pub fn linear() -> Self {
        Warping::Log(ScalarProfile::analytic(
            Domain::positive(),
            |r, k| match k {
                0 => r.ln(),
                1 => 1.0 / r,
                _ => -1.0 / (r * r),
            },
        ))
    }

    /// `η = e^{a t}` on ℝ.
    pub fn exponential(a: f64) -> Self {
        Warping::Log(ScalarProfile::analytic(
            Domain::real_line(),
            move |t, k| match k {
                0 => a * t,
                1 => a,
                _ => 0.0,
            },
        ))
    }

    /// `η = cosh t` on ℝ.
    pub fn cosh() -> Self {
        Warping::Log(ScalarProfile::analytic(
            Domain::real_line(),
            |t, k| match k {
                0 => log_cosh(t),
                1 => t.tanh(),
                _ => {
                    let c = t.cosh();
                    1.0 / (c * c)
                }
            },
        ))
    }

    /// `η = sinh t` on `(0, ∞)`.
    pub fn sinh() -> Self {
        Warping::Log(ScalarProfile::analytic(
            Domain::positive(),
            |t, k| match k {
                0 => t + (-(-2.0 * t).exp_m1()).ln() - std::f64::consts::LN_2,
                1 => 1.0 / t.tanh(),
                _ => {
                    let s = t.sinh();
                    -1.0 / (s * s)
                }
            },
        ))
    }

    /// `η ≡ c` on ℝ.
    pub fn constant(c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::Parameter(format!(
                "constant warping must be positive, got {c}"
            )));
        }
        let l = c.ln();
        Ok(Warping::Log(ScalarProfile::analytic(
            Domain::real_line(),
            move |_, k| {
                if k == 0 {
                    l
                } else {
                    0.0
                }
            },
        )))
    }
}

/// `log cosh u` without overflow.
pub fn log_cosh(u: f64) -> f64 {
    let a = u.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

#[derive(Debug, Clone)]
pub struct WarpedModel {
    n: usize,
    kind: DomainKind,
    warp: Warping,
    fiber: FiberData,
}

impl WarpedModel {
    pub fn new(n: usize, kind: DomainKind, warp: Warping, fiber: FiberData) -> Result<Self> {
        if n < 3 {
            return Err(Error::DegenerateDimension { n, min: 3 });
        }
        if !(fiber.volume > 0.0) {
            return Err(Error::Configuration(format!(
                "fiber volume must be positive, got {}",
                fiber.volume
            )));
        }
        if kind == DomainKind::PoleModel {
            let d = warp.domain();
            if d.lo != 0.0 {
                return Err(Error::Configuration(format!(
                    "pole model needs its domain to start at 0, got {}",
                    d.lo
                )));
            }
            // η(ε)/ε → η′(0) and η′(ε) → η′(0); both must equal 1.
            let eps = 1e-8;
            let j = warp.jet(eps)?;
            let eta = j.eta();
            let deta = j.dlog * eta;
            if (eta / eps - 1.0).abs() > 1e-6 || (deta - 1.0).abs() > 1e-6 {
                return Err(Error::Configuration(format!(
                    "pole model needs η(0) = 0 and η′(0) = 1 (η(ε)/ε = {}, η′(ε) = {deta})",
                    eta / eps
                )));
            }
        }
        Ok(Self {
            n,
            kind,
            warp,
            fiber,
        })
    }

    pub fn euclidean(n: usize) -> Result<Self> {
        Self::new(
            n,
            DomainKind::PoleModel,
            Warping::linear(),
            FiberData::unit_sphere(n),
        )
    }

    pub fn hyperbolic(n: usize) -> Result<Self> {
        Self::new(
            n,
            DomainKind::PoleModel,
            Warping::sinh(),
            FiberData::unit_sphere(n),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn fiber(&self) -> &FiberData {
        &self.fiber
    }

    pub fn warping(&self) -> &Warping {
        &self.warp
    }

    pub fn domain(&self) -> Domain {
        self.warp.domain()
    }

    /// Same model with a different fiber.
    pub fn with_fiber(&self, fiber: FiberData) -> Result<Self> {
        Self::new(self.n, self.kind, self.warp.clone(), fiber)
    }

    fn nm1(&self) -> f64 {
        self.n as f64 - 1.0
    }

    /// Warp jet at an interior point.
    pub fn jet(&self, t: f64) -> Result<WarpJet> {
        self.domain().check_open(t)?;
        self.warp.jet(t)
    }

    /// `K(e₁, e_α) = −((log η)″ + ((log η)′)²)`.
    pub fn sectional_radial(&self, t: f64) -> Result<f64> {
        Ok(-self.jet(t)?.ddeta_over_eta())
    }

    /// `K(e_α, e_β) = η^{−2}K̄ − ((log η)′)²`.
    pub fn sectional_fiber(&self, t: f64) -> Result<f64> {
        let k_bar = self
            .fiber
            .sectional
            .ok_or_else(|| Error::Configuration("fiber sectional curvature K̄ not set".into()))?;
        let j = self.jet(t)?;
        Ok(j.eta_pow(-2.0) * k_bar - j.dlog * j.dlog)
    }

    /// `Ric₁₁ = −(n−1)η″/η`.
    pub fn ricci_radial(&self, t: f64) -> Result<f64> {
        Ok(-self.nm1() * self.jet(t)?.ddeta_over_eta())
    }

    /// `Ric_αα = η^{−2}R̄ic_αα − ((log η)″ + (n−1)((log η)′)²)`.
    pub fn ricci_fiber(&self, t: f64) -> Result<f64> {
        let ric_bar = self
            .fiber
            .ricci_value
            .ok_or_else(|| Error::Configuration("fiber Ricci value R̄ic not set".into()))?;
        let j = self.jet(t)?;
        Ok(j.eta_pow(-2.0) * ric_bar - (j.ddlog + self.nm1() * j.dlog * j.dlog))
    }

    /// `ρ = (n−2)η″/η`, flagged invalid as a weight wherever `η″ ≤ 0`.
    pub fn natural_weight(&self) -> WeightProfile {
        let m = self.clone();
        let factor = self.n as f64 - 2.0;
        let rho = ScalarProfile::finite_difference(self.domain(), None, move |t| {
            m.warp
                .jet(t)
                .map(|j| factor * j.ddeta_over_eta())
                .unwrap_or(f64::NAN)
        })
        .expect("default step is valid");
        let probes = probe_points(self.domain());
        let violation = probes.iter().copied().find(|&t| match self.warp.jet(t) {
            Ok(j) => !(j.ddeta_over_eta() > 0.0),
            Err(_) => false,
        });
        let mut w = WeightProfile::from_parts(rho, WeightSource::NaturalWarp);
        if let Some(t) = violation {
            w.flag_invalid(format!("η″ ≤ 0 at t = {t}"));
        }
        w
    }

    /// `Δf = f″ + (n−1)(log η)′f′` for a function of `t` alone.
    pub fn radial_laplacian(&self, f: &ScalarProfile, t: f64) -> Result<f64> {
        let j = self.jet(t)?;
        Ok(f.derivative(t, 2)? + self.nm1() * j.dlog * f.derivative(t, 1)?)
    }

    /// `f(t) = ∫_{t0}^t η^{−(n−1)}`, the radial harmonic function.
    pub fn harmonic_profile(&self, t0: f64) -> Result<ScalarProfile> {
        self.domain().check_open(t0)?;
        let m = self.clone();
        let nm1 = self.nm1();
        Ok(ScalarProfile::analytic(self.domain(), move |t, k| {
            let density = |s: f64| m.warp.jet(s).map(|j| j.eta_pow(-nm1)).unwrap_or(f64::NAN);
            match k {
                0 => gauss_kronrod(density, t0, t, 1e-300, 1e-13).unwrap_or(f64::NAN),
                1 => density(t),
                _ => m
                    .warp
                    .jet(t)
                    .map(|j| -nm1 * j.dlog * j.eta_pow(-nm1))
                    .unwrap_or(f64::NAN),
            }
        }))
    }

    /// `|∇f| = η^{−(n−1)}` for the radial harmonic function.
    pub fn gradient_norm(&self, t: f64) -> Result<f64> {
        Ok(self.jet(t)?.eta_pow(-self.nm1()))
    }

    /// `g = |∇f|^{(n−2)/(n−1)} = η^{−(n−2)}`.
    pub fn gradient_power(&self, t: f64) -> Result<f64> {
        Ok(self.jet(t)?.eta_pow(-(self.n as f64 - 2.0)))
    }

    /// `|∇f|` as a profile with analytic derivatives.
    pub fn gradient_norm_profile(&self) -> ScalarProfile {
        let m = self.clone();
        let nm1 = self.nm1();
        ScalarProfile::analytic(self.domain(), move |t, k| {
            let Ok(j) = m.warp.jet(t) else {
                return f64::NAN;
            };
            let u = j.eta_pow(-nm1);
            match k {
                0 => u,
                1 => -nm1 * j.dlog * u,
                _ => (nm1 * nm1 * j.dlog * j.dlog - nm1 * j.ddlog) * u,
            }
        })
    }

    /// `Δ|∇f| + (n−1)τ|∇f| − |∇|∇f||²/((n−1)|∇f|)` for the radial harmonic `f`.
    pub fn bochner_residual(&self, tau: &ScalarProfile, t: f64) -> Result<f64> {
        let u = self.gradient_norm_profile();
        let value = u.eval(t).unwrap_or(0.0);
        if !(value > 0.0) {
            return Err(Error::DegeneratePoint {
                t,
                reason: "|∇f| vanishes".into(),
            });
        }
        let du = u.derivative(t, 1)?;
        let lap = self.radial_laplacian(&u, t)?;
        Ok(lap + self.nm1() * tau.eval(t)? * value - du * du / (self.nm1() * value))
    }

    /// `V_N·η^{n−1}·|f′|`, the flux of `f` through the level set `{t}`.
    pub fn level_flux_of(&self, f: &ScalarProfile, t: f64) -> Result<f64> {
        if self.kind != DomainKind::FullLine {
            return Err(Error::Configuration(
                "level flux is defined on full-line warped products".into(),
            ));
        }
        let j = self.jet(t)?;
        Ok(self.fiber.volume * j.eta_pow(self.nm1()) * f.derivative(t, 1)?.abs())
    }

    /// Level-set flux of the radial harmonic function; constant `V_N`.
    pub fn level_flux(&self, t: f64) -> Result<f64> {
        let j = self.jet(t)?;
        let grad = j.eta_pow(-self.nm1());
        if self.kind != DomainKind::FullLine {
            return Err(Error::Configuration(
                "level flux is defined on full-line warped products".into(),
            ));
        }
        Ok(self.fiber.volume * j.eta_pow(self.nm1()) * grad)
    }

    /// Area of the slice `{t} × N`: `A(t) = V_N η^{n−1}`.
    pub fn area(&self, t: f64) -> Result<f64> {
        Ok(self.fiber.volume * self.warp.jet(t)?.eta_pow(self.nm1()))
    }

    /// `A(t)^{−1}`, computed without forming `A`.
    pub fn inverse_area(&self, t: f64) -> Result<f64> {
        Ok(self.warp.jet(t)?.eta_pow(-self.nm1()) / self.fiber.volume)
    }

    /// `A` as a profile with analytic derivatives.
    pub fn area_profile(&self) -> ScalarProfile {
        let m = self.clone();
        let nm1 = self.nm1();
        let vol = self.fiber.volume;
        ScalarProfile::analytic(self.domain(), move |t, k| {
            let Ok(j) = m.warp.jet(t) else {
                return f64::NAN;
            };
            let a = vol * j.eta_pow(nm1);
            match k {
                0 => a,
                1 => nm1 * j.dlog * a,
                _ => (nm1 * nm1 * j.dlog * j.dlog + nm1 * j.ddlog) * a,
            }
        })
    }

    /// `A^{−1}` as a profile.
    pub fn inverse_area_profile(&self) -> ScalarProfile {
        let m = self.clone();
        let nm1 = self.nm1();
        let vol = self.fiber.volume;
        ScalarProfile::analytic(self.domain(), move |t, k| {
            let Ok(j) = m.warp.jet(t) else {
                return f64::NAN;
            };
            let a = j.eta_pow(-nm1) / vol;
            match k {
                0 => a,
                1 => -nm1 * j.dlog * a,
                _ => (nm1 * nm1 * j.dlog * j.dlog - nm1 * j.ddlog) * a,
            }
        })
    }
}

/// Interior sample points of a domain, truncating infinite ends.
pub(crate) fn probe_points(d: Domain) -> Vec<f64> {
    let (lo, hi) = truncated(d);
    let n = 201;
    (1..n - 1)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Finite window of a domain: infinite ends are cut at distance 50 from the
/// finite end (or at ±50 for the whole line).
pub(crate) fn truncated(d: Domain) -> (f64, f64) {
    match (d.lo.is_finite(), d.hi.is_finite()) {
        (true, true) => (d.lo, d.hi),
        (true, false) => (d.lo, d.lo + 50.0),
        (false, true) => (d.hi - 50.0, d.hi),
        (false, false) => (-50.0, 50.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn full(warp: Warping, n: usize, fiber: FiberData) -> WarpedModel {
        WarpedModel::new(n, DomainKind::FullLine, warp, fiber).unwrap()
    }

    #[test]
    fn sphere_volumes() {
        assert_abs_diff_eq!(
            sphere_volume(2),
            4.0 * std::f64::consts::PI,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            sphere_volume(3),
            2.0 * std::f64::consts::PI.powi(2),
            epsilon = 1e-13
        );
    }

    #[test]
    fn rejects_low_dimension_and_bad_pole() {
        assert!(matches!(
            WarpedModel::euclidean(2),
            Err(Error::DegenerateDimension { n: 2, min: 3 })
        ));
        let bad = WarpedModel::new(
            3,
            DomainKind::PoleModel,
            Warping::exponential(1.0),
            FiberData::flat(1.0),
        );
        assert!(bad.is_err());
    }

    #[test]
    fn sectional_examples() {
        let e = full(Warping::exponential(1.0), 4, FiberData::flat(1.0));
        for t in [-3.0, 0.0, 2.5] {
            assert_abs_diff_eq!(e.sectional_radial(t).unwrap(), -1.0, epsilon = 1e-14);
        }
        let h = WarpedModel::hyperbolic(3).unwrap();
        assert_abs_diff_eq!(h.sectional_radial(1.0).unwrap(), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(h.sectional_fiber(1.0).unwrap(), -1.0, epsilon = 1e-12);
        let r = WarpedModel::euclidean(3).unwrap();
        assert_abs_diff_eq!(r.sectional_radial(2.0).unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.sectional_fiber(2.0).unwrap(), 0.0, epsilon = 1e-14);
        let cyl = full(Warping::constant(1.0).unwrap(), 3, FiberData::flat(1.0));
        assert_eq!(cyl.sectional_fiber(0.3).unwrap(), 0.0);
    }

    #[test]
    fn missing_fiber_data_is_configuration_error() {
        let mut fiber = FiberData::flat(1.0);
        fiber.sectional = None;
        fiber.ricci_value = None;
        let m = full(Warping::cosh(), 3, fiber);
        assert!(matches!(
            m.sectional_fiber(0.0),
            Err(Error::Configuration(_))
        ));
        assert!(matches!(m.ricci_fiber(0.0), Err(Error::Configuration(_))));
    }

    #[test]
    fn ricci_examples() {
        let e = full(Warping::exponential(1.0), 4, FiberData::flat(1.0));
        assert_abs_diff_eq!(e.ricci_radial(0.7).unwrap(), -3.0, epsilon = 1e-14);
        let c = full(Warping::cosh(), 3, FiberData::flat(1.0));
        for t in [-2.0, 0.0, 5.0] {
            assert_abs_diff_eq!(c.ricci_radial(t).unwrap(), -2.0, epsilon = 1e-12);
        }
        let h = WarpedModel::hyperbolic(4).unwrap();
        assert_abs_diff_eq!(h.ricci_fiber(1.0).unwrap(), -3.0, epsilon = 1e-12);
        let r = WarpedModel::euclidean(5).unwrap();
        assert_abs_diff_eq!(r.ricci_fiber(3.0).unwrap(), 0.0, epsilon = 1e-14);
        let mut fiber = FiberData::flat(1.0);
        fiber.ricci_value = Some(0.8);
        let p = full(Warping::constant(1.0).unwrap(), 3, fiber);
        assert_abs_diff_eq!(p.ricci_fiber(0.0).unwrap(), 0.8, epsilon = 1e-15);
    }

    #[test]
    fn natural_weight_examples() {
        let c = full(Warping::cosh(), 4, FiberData::flat(1.0));
        let w = c.natural_weight();
        assert!(w.is_valid());
        for t in [-4.0, 0.0, 3.0] {
            assert_abs_diff_eq!(w.eval(t).unwrap(), 2.0, epsilon = 1e-12);
        }
        let e = full(Warping::exponential(1.5), 3, FiberData::flat(1.0));
        assert_abs_diff_eq!(e.natural_weight().eval(1.0).unwrap(), 2.25, epsilon = 1e-14);
        let r = WarpedModel::euclidean(3).unwrap().natural_weight();
        assert_eq!(r.eval(2.0).unwrap(), 0.0);
        assert!(!r.is_valid());
    }

    #[test]
    fn radial_laplacian_examples() {
        let cyl = full(Warping::constant(1.0).unwrap(), 3, FiberData::flat(1.0));
        let sq = ScalarProfile::analytic(Domain::real_line(), |t, k| match k {
            0 => t * t,
            1 => 2.0 * t,
            _ => 2.0,
        });
        assert_eq!(cyl.radial_laplacian(&sq, 1.3).unwrap(), 2.0);
        let h = WarpedModel::hyperbolic(3).unwrap();
        let lap = h.radial_laplacian(&sq, 1.0).unwrap();
        assert_abs_diff_eq!(lap, 2.0 + 4.0 / 1f64.tanh(), epsilon = 1e-13);
        // Independent oracle: divergence form A^{−1}(A f′)′ by central differences.
        let a = |r: f64| 4.0 * std::f64::consts::PI * r.sinh().powi(2);
        let flux = |r: f64| a(r) * 2.0 * r;
        let hstep = 1e-4;
        let fd = (flux(1.0 + hstep) - flux(1.0 - hstep)) / (2.0 * hstep) / a(1.0);
        assert_abs_diff_eq!(lap, fd, epsilon = 1e-6);
        assert_abs_diff_eq!(lap, 7.252141141997326, epsilon = 1e-12);
    }

    #[test]
    fn harmonic_profile_closed_forms() {
        let cyl = full(Warping::constant(1.0).unwrap(), 3, FiberData::flat(1.0));
        let f = cyl.harmonic_profile(0.5).unwrap();
        assert_abs_diff_eq!(f.eval(2.0).unwrap(), 1.5, epsilon = 1e-13);
        let r = WarpedModel::euclidean(3).unwrap();
        let f = r.harmonic_profile(1.0).unwrap();
        assert_abs_diff_eq!(f.eval(4.0).unwrap(), 0.75, epsilon = 1e-13);
        let e = full(Warping::exponential(1.0), 3, FiberData::flat(1.0));
        let f = e.harmonic_profile(0.0).unwrap();
        assert_abs_diff_eq!(
            f.eval(1.0).unwrap(),
            0.5 * (1.0 - (-2.0f64).exp()),
            epsilon = 1e-13
        );
        assert!(e.radial_laplacian(&f, 0.3).unwrap().abs() < 1e-14);
    }

    #[test]
    fn gradient_norm_examples() {
        let cyl = full(Warping::constant(1.0).unwrap(), 3, FiberData::flat(1.0));
        assert_eq!(cyl.gradient_norm(3.0).unwrap(), 1.0);
        let e = full(Warping::exponential(1.0), 3, FiberData::flat(1.0));
        assert_abs_diff_eq!(
            e.gradient_norm(1.0).unwrap(),
            (-2.0f64).exp(),
            epsilon = 1e-15
        );
        let r = WarpedModel::euclidean(4).unwrap();
        assert_abs_diff_eq!(r.gradient_norm(2.0).unwrap(), 0.125, epsilon = 1e-15);
        assert_abs_diff_eq!(r.gradient_power(2.0).unwrap(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn bochner_equality_and_strict_cases() {
        let n = 4;
        let c = full(Warping::cosh(), n, FiberData::flat(1.0));
        let one = ScalarProfile::constant(Domain::real_line(), 1.0);
        let two = ScalarProfile::constant(Domain::real_line(), 2.0);
        for t in [-1.5, 0.0, 0.8, 3.0] {
            assert!(c.bochner_residual(&one, t).unwrap().abs() < 1e-12);
            // Oracle: the residual is (n−1)·η^{−(n−1)}·(τ − η″/η).
            let expected = 3.0 * t.cosh().powi(-3);
            assert_abs_diff_eq!(
                c.bochner_residual(&two, t).unwrap(),
                expected,
                epsilon = 1e-12
            );
        }
        let e = full(Warping::exponential(1.0), 3, FiberData::flat(1.0));
        assert!(e.bochner_residual(&one, 2.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn bochner_degenerate_when_gradient_underflows() {
        let e = full(Warping::exponential(1.0), 3, FiberData::flat(1.0));
        let one = ScalarProfile::constant(Domain::real_line(), 1.0);
        assert!(matches!(
            e.bochner_residual(&one, 1000.0),
            Err(Error::DegeneratePoint { .. })
        ));
    }

    #[test]
    fn level_flux_is_fiber_volume() {
        let c = full(Warping::cosh(), 4, FiberData::flat(1.0));
        for t in [-2.0, 0.0, 3.0] {
            assert_abs_diff_eq!(c.level_flux(t).unwrap(), 1.0, epsilon = 1e-14);
        }
        let c = full(Warping::cosh(), 3, FiberData::flat(5.5));
        assert_abs_diff_eq!(c.level_flux(1.7).unwrap(), 5.5, epsilon = 1e-12);
    }

    #[test]
    fn level_flux_of_non_harmonic_function_varies() {
        let c = full(Warping::cosh(), 3, FiberData::flat(1.0));
        let f = c.harmonic_profile(0.0).unwrap();
        let g = {
            let f = f.clone();
            ScalarProfile::analytic(Domain::real_line(), move |t, k| {
                let v = f.eval(t).unwrap();
                match k {
                    0 => v * v,
                    1 => 2.0 * v * f.derivative(t, 1).unwrap(),
                    _ => f64::NAN,
                }
            })
        };
        let a = c.level_flux_of(&g, 0.5).unwrap();
        let b = c.level_flux_of(&g, 2.0).unwrap();
        // flux of f² is 2|f|·V_N, with f(t) = ∫₀ᵗ sech² = tanh t.
        assert_abs_diff_eq!(a, 2.0 * 0.5f64.tanh(), epsilon = 1e-10);
        assert_abs_diff_eq!(b, 2.0 * 2.0f64.tanh(), epsilon = 1e-10);
        assert!((a - b).abs() > 0.5);
    }

    #[test]
    fn level_flux_requires_full_line() {
        assert!(WarpedModel::euclidean(3).unwrap().level_flux(1.0).is_err());
    }
}
