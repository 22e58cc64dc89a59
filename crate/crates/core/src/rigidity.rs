//! Warped-product rigidity tools: the warping ODE `η″ = τη`, the
//! `η = cosh u` family, and checks on curvature conditions and comparison
//! functions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ends::{classify_end, EndProfile, EndStatus};
use crate::error::{Error, Result};
use crate::fit::loglog_slope;
use crate::ode::{partition, rk4_step};
use crate::profiles::quadrature::gauss_kronrod;
use crate::profiles::{improper_tail, Domain, GridSpec, ScalarProfile, TailPolicy, TailVerdict};
use crate::rho_metric::{EndSelector, RhoDistanceTable};
use crate::warped::{log_cosh, truncated, DomainKind, FiberData, WarpedModel, Warping};
use crate::weights::WeightProfile;

/// Initial-value problem `η″ = τη` on `domain`, started at `domain.lo`.
#[derive(Debug, Clone)]
pub struct WarpBuilder {
    pub tau: ScalarProfile,
    pub eta0: f64,
    pub deta0: f64,
    pub domain: Domain,
    pub step: f64,
}

/// RK4 solution of `η″ = τη`, returned as a quintic Hermite interpolant of
/// `(η, η′, τη)` at the step nodes.
pub fn integrate_warp(b: &WarpBuilder) -> Result<ScalarProfile> {
    let (a, end) = (b.domain.lo, b.domain.hi);
    if !(a.is_finite() && end.is_finite()) {
        return Err(Error::Parameter(
            "integration interval must be finite".into(),
        ));
    }
    if !(b.eta0 > 0.0) {
        return Err(Error::Parameter(format!(
            "η(0) must be positive, got {}",
            b.eta0
        )));
    }
    if !(b.step > 0.0) {
        return Err(Error::Parameter(format!(
            "step must be positive, got {}",
            b.step
        )));
    }
    let tau = |t: f64| b.tau.eval(t).unwrap_or(f64::NAN);
    let rhs = |t: f64, y: [f64; 2]| [y[1], tau(t) * y[0]];
    let (steps, h) = partition(a, end, b.step);
    let mut ts = Vec::with_capacity(steps + 1);
    let (mut f, mut df, mut ddf) = (Vec::with_capacity(steps + 1), Vec::new(), Vec::new());
    let mut y = [b.eta0, b.deta0];
    for i in 0..=steps {
        let t = if i == steps { end } else { a + i as f64 * h };
        if !(y[0] > 0.0) {
            return Err(Error::ZeroCrossing { t });
        }
        let tt = tau(t);
        if !tt.is_finite() {
            return Err(Error::NonFinite { t });
        }
        ts.push(t);
        f.push(y[0]);
        df.push(y[1]);
        ddf.push(tt * y[0]);
        if i < steps {
            y = rk4_step(&rhs, t, y, h);
        }
    }
    ScalarProfile::from_hermite(&ts, &f, &df, &ddf)
}

/// `t,eta,deta,ddeta` samples of a warping profile.
pub fn warp_csv(eta: &ScalarProfile, ts: &[f64]) -> Result<String> {
    let mut out = String::from("t,eta,deta,ddeta\n");
    for &t in ts {
        let [v, d1, d2] = eta.jet(t)?;
        out.push_str(&format!("{t},{v},{d1},{d2}\n"));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridVerdict {
    pub holds: bool,
    pub points: usize,
    /// Smallest value of the checked quantity and where it occurs.
    pub min_value: f64,
    pub min_at: f64,
    /// First grid point where the condition fails.
    pub violation_at: Option<f64>,
}

impl GridVerdict {
    fn sweep(
        ts: &[f64],
        strict: bool,
        tol: f64,
        mut q: impl FnMut(f64) -> Result<f64>,
    ) -> Result<Self> {
        let (mut min_value, mut min_at, mut violation_at) = (f64::INFINITY, f64::NAN, None);
        for &t in ts {
            let v = q(t)?;
            if v < min_value || min_at.is_nan() {
                min_value = v;
                min_at = t;
            }
            let ok = if strict { v > 0.0 } else { v >= -tol };
            if !ok && violation_at.is_none() {
                violation_at = Some(t);
            }
        }
        Ok(Self {
            holds: violation_at.is_none(),
            points: ts.len(),
            min_value,
            min_at,
            violation_at,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityReport {
    /// `η″ > 0`.
    pub convexity: GridVerdict,
    /// `(n−2)(log η)″ + η^{−2}·Ric_N ≥ 0`.
    pub ricci_condition: GridVerdict,
    /// Largest deviation of `Ric(∂t, ∂t)` from `−(n−1)/(n−2)·ρ`, when both conditions hold.
    pub ricci_identity_error: Option<f64>,
    pub residuals: BTreeMap<String, f64>,
}

impl RigidityReport {
    pub fn passes(&self) -> bool {
        self.convexity.holds
            && self.ricci_condition.holds
            && self.ricci_identity_error.is_none_or(|e| e <= 1e-10)
    }
}

/// Uniform interior sweep of the truncated domain.
fn sweep_grid(d: Domain, points: usize) -> Vec<f64> {
    let (lo, hi) = truncated(d);
    (1..=points)
        .map(|i| lo + (hi - lo) * i as f64 / (points + 1) as f64)
        .collect()
}

const SWEEP_POINTS: usize = 4001;

pub fn condition_check(m: &WarpedModel) -> Result<RigidityReport> {
    let ts = sweep_grid(m.domain(), SWEEP_POINTS);
    let n = m.n() as f64;
    let ric_n = m.fiber().ricci_lower;
    let convexity = GridVerdict::sweep(&ts, true, 0.0, |t| Ok(m.jet(t)?.ddeta_over_eta()))?;
    let ricci_condition = GridVerdict::sweep(&ts, false, 1e-12, |t| {
        let j = m.jet(t)?;
        Ok((n - 2.0) * j.ddlog + j.eta_pow(-2.0) * ric_n)
    })?;
    let ricci_identity_error = if convexity.holds && ricci_condition.holds {
        let w = m.natural_weight();
        let mut worst = 0.0f64;
        for &t in &ts {
            let rho = w.eval(t)?;
            let err = (m.ricci_radial(t)? + (n - 1.0) / (n - 2.0) * rho).abs() / rho.abs().max(1.0);
            worst = worst.max(err);
        }
        Some(worst)
    } else {
        None
    };
    Ok(RigidityReport {
        convexity,
        ricci_condition,
        ricci_identity_error,
        residuals: BTreeMap::new(),
    })
}

/// Quintic smoothstep from 0 at `1 − δ` to 1 at `1 + δ`, with its derivative.
fn smoothstep(t: f64) -> (f64, f64) {
    const LO: f64 = 1.0 - BLEND_HALF_WIDTH;
    const WIDTH: f64 = 2.0 * BLEND_HALF_WIDTH;
    if t <= LO {
        return (0.0, 0.0);
    }
    if t >= LO + WIDTH {
        return (1.0, 0.0);
    }
    let p = (t - LO) / WIDTH;
    (
        p * p * p * (10.0 - 15.0 * p + 6.0 * p * p),
        30.0 * p * p * (1.0 - p) * (1.0 - p) / WIDTH,
    )
}

const BLEND_HALF_WIDTH: f64 = 0.1;

/// Odd function `u` with `u′` blending from `c1` to `c1·α·t^{α−1}` across
/// `[1 − δ, 1 + δ]`, so that `u = c1·t` near 0 and `u = c1·t^α + const`
/// past the window.
#[derive(Debug, Clone, Copy)]
struct SmoothedPower {
    alpha: f64,
    c1: f64,
    /// `u(1 + δ)`.
    u_exit: f64,
}

impl SmoothedPower {
    fn new(alpha: f64, c1: f64) -> Result<Self> {
        let mut s = Self {
            alpha,
            c1,
            u_exit: 0.0,
        };
        s.u_exit = s.window_value(1.0 + BLEND_HALF_WIDTH)?;
        Ok(s)
    }

    fn excess(&self, t: f64) -> f64 {
        self.alpha * t.powf(self.alpha - 1.0) - 1.0
    }

    fn window_value(&self, t: f64) -> Result<f64> {
        let lo = 1.0 - BLEND_HALF_WIDTH;
        if t <= lo {
            return Ok(self.c1 * t);
        }
        let bump = gauss_kronrod(|x| smoothstep(x).0 * self.excess(x), lo, t, 1e-16, 1e-14)?;
        Ok(self.c1 * (t + bump))
    }

    /// `(u, u′, u″)` for `t ≥ 0`.
    fn half_jet(&self, t: f64) -> [f64; 3] {
        let (a, c1) = (self.alpha, self.c1);
        let (s, ds) = smoothstep(t);
        let du = c1 * (1.0 + s * self.excess(t));
        let curvature = if s > 0.0 && a > 1.0 {
            s * a * (a - 1.0) * t.powf(a - 2.0)
        } else {
            0.0
        };
        let ddu = c1 * (ds * self.excess(t) + curvature);
        let u = if t <= 1.0 - BLEND_HALF_WIDTH {
            c1 * t
        } else if t >= 1.0 + BLEND_HALF_WIDTH {
            self.u_exit + c1 * (t.powf(a) - (1.0 + BLEND_HALF_WIDTH).powf(a))
        } else {
            self.window_value(t).unwrap_or(f64::NAN)
        };
        [u, du, ddu]
    }

    fn jet(&self, t: f64) -> [f64; 3] {
        if t >= 0.0 {
            self.half_jet(t)
        } else {
            let [u, du, ddu] = self.half_jet(-t);
            [-u, du, -ddu]
        }
    }
}

/// `sech² u` without overflow.
fn sech2(u: f64) -> f64 {
    let e = (-2.0 * u.abs()).exp();
    4.0 * e / ((1.0 + e) * (1.0 + e))
}

/// Warped product over a fiber with `Ric_N ≥ −C`, `η = cosh u` for the
/// smoothed odd extension `u` of `c1·t` on `[0, 1]`, `c1·t^α` beyond.
pub fn cosh_power_model(
    alpha: f64,
    c1: f64,
    c: f64,
    n: usize,
) -> Result<(WarpedModel, WeightProfile, RigidityReport)> {
    if n < 3 {
        return Err(Error::DegenerateDimension { n, min: 3 });
    }
    if !(alpha >= 1.0) || !(c >= 0.0) {
        return Err(Error::Parameter(format!(
            "need α ≥ 1 and C ≥ 0, got α = {alpha}, C = {c}"
        )));
    }
    let floor = (c / (n as f64 - 2.0)).sqrt();
    if !(c1 > floor) {
        return Err(Error::Parameter(format!(
            "C1 = {c1} must exceed √(C/(n−2)) = {floor}"
        )));
    }
    let u = SmoothedPower::new(alpha, c1)?;
    let log_eta = ScalarProfile::analytic(Domain::real_line(), move |t, k| {
        let [u0, du, ddu] = u.jet(t);
        match k {
            0 => log_cosh(u0),
            1 => u0.tanh() * du,
            _ => sech2(u0) * du * du + u0.tanh() * ddu,
        }
    });
    let fiber = FiberData {
        ricci_lower: -c,
        volume: 1.0,
        sectional: None,
        ricci_value: Some(-c),
        compact: true,
    };
    let model = WarpedModel::new(n, DomainKind::FullLine, Warping::Log(log_eta), fiber)?;
    let w = model.natural_weight();
    let mut report = condition_check(&model)?;

    let ts = sweep_grid(model.domain(), SWEEP_POINTS);
    let dense = GridSpec::uniform(-1.2, 1.2, 2401)?.nodes()?;
    let (mut ddu_min, mut du_min) = (f64::INFINITY, f64::INFINITY);
    for &t in ts.iter().chain(&dense) {
        let [_, du, ddu] = u.jet(t);
        // u″ is odd; its sign condition lives on the positive half-line.
        if t >= 0.0 {
            ddu_min = ddu_min.min(ddu);
        }
        du_min = du_min.min(du);
    }
    let fit_ts = GridSpec::log_spaced(10.0, 100.0, 60)?.nodes()?;
    let rho: Vec<f64> = fit_ts.iter().map(|&t| w.eval(t)).collect::<Result<_>>()?;
    let exponent = loglog_slope(&fit_ts, &rho)?;
    let expected = 2.0 * alpha - 2.0;
    let r = &mut report.residuals;
    r.insert("u_second_min".into(), ddu_min);
    r.insert("u_prime_margin".into(), du_min - floor);
    r.insert("rho_exponent".into(), exponent);
    r.insert("rho_exponent_expected".into(), expected);
    r.insert(
        "rho_leading_coefficient".into(),
        (n as f64 - 2.0) * alpha * alpha * c1 * c1,
    );
    Ok((model, w, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiminfReport {
    pub convexity: bool,
    pub ricci_condition: bool,
    pub end_status: EndStatus,
    pub horizon: f64,
    /// `min ρ` over the outer half of the horizon.
    pub liminf_estimate: f64,
    /// Slope of `log ρ` against `log t` on the outer half.
    pub decay_exponent: f64,
    pub bounded_below: bool,
    /// Behavior of `∫ t·ρ(t) dt` along the end.
    pub moment: TailVerdict,
    /// Behavior of `∫ √ρ`, examined when the moment converges.
    pub sqrt_integral: Option<TailVerdict>,
    pub rho_metric_incomplete: bool,
    pub conclusion: String,
}

/// Positive lower bound of `ρ` along a nonparabolic end, or the reason the
/// hypotheses cannot hold.
pub fn weight_liminf(
    m: &WarpedModel,
    w: &WeightProfile,
    end: EndSelector,
    horizon: f64,
) -> Result<LiminfReport> {
    if m.kind() != DomainKind::FullLine {
        return Err(Error::Configuration(
            "liminf check expects a full-line warped product".into(),
        ));
    }
    let sign = match end {
        EndSelector::Upper => 1.0,
        EndSelector::Lower => -1.0,
    };
    let d = m.domain();
    let base = if d.contains_open(0.0) {
        0.0
    } else {
        return Err(Error::Configuration(
            "end base t = 0 is outside the domain".into(),
        ));
    };
    let span = if sign > 0.0 { d.hi - base } else { base - d.lo };
    if !(horizon > 0.0 && horizon <= span) {
        return Err(Error::Parameter(format!(
            "horizon {horizon} must lie in (0, {span}]"
        )));
    }
    let conditions = condition_check(m)?;
    let mirrored = |p: ScalarProfile| {
        ScalarProfile::analytic(
            Domain::new(0.0, span).expect("span is positive"),
            move |s, k| {
                let v = p.derivative(sign * s, k).unwrap_or(f64::NAN);
                if k == 1 {
                    sign * v
                } else {
                    v
                }
            },
        )
    };
    let e = EndProfile::from_parts(
        mirrored(m.area_profile()),
        mirrored(m.inverse_area_profile()),
        0.0,
        "end",
    );
    let end_status = classify_end(&e)?.status;

    let rho_at = |s: f64| w.eval(sign * s).unwrap_or(f64::NAN);
    let outer = GridSpec::uniform(0.5 * horizon, horizon, 200)?.nodes()?;
    let values: Vec<f64> = outer.iter().map(|&s| rho_at(s)).collect();
    let liminf_estimate = values.iter().copied().fold(f64::INFINITY, f64::min);
    let decay_exponent = loglog_slope(&outer, &values).unwrap_or(f64::NEG_INFINITY);
    let bounded_below = liminf_estimate > 0.0 && decay_exponent > -0.05;

    // Direct warpings lose a few digits in η″/η far out; relax the panel tolerance.
    let policy = TailPolicy {
        quad_rel_tol: 1e-9,
        ..TailPolicy::default()
    };
    let moment = if span.is_finite() {
        TailVerdict::Inconclusive
    } else {
        improper_tail(|s| s * rho_at(s), 0.0, &policy)?.verdict
    };
    let sqrt_integral = if moment.converges() {
        Some(improper_tail(|s| rho_at(s).max(0.0).sqrt(), 0.0, &policy)?.verdict)
    } else {
        None
    };
    let rho_metric_incomplete = sqrt_integral.as_ref().is_some_and(TailVerdict::converges);
    let hypotheses = conditions.convexity.holds
        && conditions.ricci_condition.holds
        && end_status == EndStatus::Nonparabolic;
    let conclusion = if !hypotheses {
        "hypotheses not met on the grid; no conclusion".to_string()
    } else if rho_metric_incomplete {
        "∫tρ converges, so ∫√ρ converges and the ρ-metric is incomplete; the weighted property fails".to_string()
    } else if bounded_below {
        format!("ρ stays above {liminf_estimate:.6e} on the outer half of the horizon")
    } else {
        "ρ decays on the horizon although the ρ-metric was not shown incomplete".to_string()
    };
    Ok(LiminfReport {
        convexity: conditions.convexity.holds,
        ricci_condition: conditions.ricci_condition.holds,
        end_status,
        horizon,
        liminf_estimate,
        decay_exponent,
        bounded_below,
        moment,
        sqrt_integral,
        rho_metric_incomplete,
        conclusion,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonReading {
    /// Convexity holds and `ρ` stays bounded.
    Consistent,
    /// `(ρ^{−1/4})″ ≥ 0` fails somewhere; nothing is asserted.
    HypothesisFails,
    /// Convexity holds but `ρ` grows: no complete manifold with the weighted
    /// property and the matching Ricci bound has this weight.
    Impossible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub n: usize,
    /// `(ρ^{−1/4})″ ≥ 0`, sampled.
    pub convexity: GridVerdict,
    /// `g″/g − 4/(n−1)²·ρ`, sampled.
    pub comparison: GridVerdict,
    /// Largest `|g″/g − 4/(n−1)²·ρ|`.
    pub max_gap: f64,
    /// `log g` at the sample points, with `C = 1`.
    pub radii: Vec<f64>,
    pub log_g: Vec<f64>,
    pub rho_max: f64,
    /// Slope of `log ρ` against `log r` on the outer half.
    pub rho_trend: f64,
    pub rho_bounded: bool,
    pub reading: ComparisonReading,
}

/// Comparison function `g = ρ^{−1/4}·exp(2r_ρ/(n−1))` on the table's nodes
/// from `r0` on.
pub fn comparison_check(
    w: &WeightProfile,
    n: usize,
    r0: f64,
    table: &RhoDistanceTable,
) -> Result<ComparisonReport> {
    if n < 4 {
        return Err(Error::DegenerateDimension { n, min: 4 });
    }
    let k = 2.0 / (n as f64 - 1.0);
    let radii: Vec<f64> = table.grid.iter().copied().filter(|&r| r >= r0).collect();
    if radii.len() < 4 {
        return Err(Error::InvalidGrid(
            "fewer than four table nodes beyond r0".into(),
        ));
    }
    let mut rows = Vec::with_capacity(radii.len());
    for &r in &radii {
        let [p, dp, ddp] = w.rho.jet(r)?;
        if !(p > 0.0) {
            return Err(Error::DegeneratePoint {
                t: r,
                reason: format!("ρ = {p} is not positive"),
            });
        }
        // h = ρ^{−1/4}: h′/h and h″/h by the chain rule.
        let dh = -0.25 * dp / p;
        let ddh = 5.0 / 16.0 * (dp / p).powi(2) - 0.25 * ddp / p;
        // g = h·exp(k·r_ρ) with r_ρ′ = √ρ.
        let sq = p.sqrt();
        let dsq = 0.5 * dp / sq;
        let ddg = ddh + 2.0 * dh * k * sq + k * dsq + k * k * p;
        let log_g = -0.25 * p.ln() + k * table.forward(r)?;
        rows.push((r, p, ddh * p.powf(-0.25), ddg - k * k * p, log_g));
    }
    let convexity = GridVerdict::sweep(
        &rows.iter().map(|x| x.0).collect::<Vec<_>>(),
        false,
        1e-12,
        {
            let mut it = rows.iter();
            move |_| Ok(it.next().map(|x| x.2).unwrap_or(f64::NAN))
        },
    )?;
    let comparison = GridVerdict::sweep(&radii, false, 1e-10, {
        let mut it = rows.iter();
        move |_| Ok(it.next().map(|x| x.3).unwrap_or(f64::NAN))
    })?;
    let max_gap = rows.iter().map(|x| x.3.abs()).fold(0.0, f64::max);
    let rho: Vec<f64> = rows.iter().map(|x| x.1).collect();
    let rho_max = rho.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let half = radii.len() / 2;
    let rho_trend = loglog_slope(&radii[half..], &rho[half..])?;
    let rho_bounded = rho_trend <= 0.05;
    let reading = match (convexity.holds, rho_bounded) {
        (false, _) => ComparisonReading::HypothesisFails,
        (true, true) => ComparisonReading::Consistent,
        (true, false) => ComparisonReading::Impossible,
    };
    Ok(ComparisonReport {
        n,
        convexity,
        comparison,
        max_gap,
        log_g: rows.iter().map(|x| x.4).collect(),
        radii,
        rho_max,
        rho_trend,
        rho_bounded,
        reading,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub n: usize,
    /// Largest gap between `Δg` from the radial Laplacian and the closed form, relative to `g`.
    pub identity_error: f64,
    /// `max |Δg/g + ρ|`.
    pub residual: f64,
    pub rho_range: f64,
    pub rho_constant: bool,
    /// `max |(log η)″|`.
    pub log_curvature: f64,
    pub log_affine: bool,
    pub fiber_ricci_nonnegative: bool,
    /// Mean `(log η)′`, when `log η` is affine.
    pub growth_rate: Option<f64>,
    /// `(n−1)²c²/4` for that rate.
    pub rho_from_identity: Option<f64>,
    /// `c²`, the constant read off `η = e^{ct}` directly.
    pub rho_from_rate: Option<f64>,
    /// `ρ` disagrees with `(n−1)²c²/4`.
    pub mismatch: bool,
    pub rigid: bool,
}

const RIGID_TOL: f64 = 1e-8;

/// Residual of `Δg = −ρg` for `g = η^{−(n−1)/2}`.
pub fn rigidity_residual(m: &WarpedModel, w: &WeightProfile) -> Result<ResidualReport> {
    let n = m.n();
    if n < 4 {
        return Err(Error::DegenerateDimension { n, min: 4 });
    }
    let q = (n as f64 - 1.0) / 2.0;
    let nn = n as f64;
    let mm = m.clone();
    let g = ScalarProfile::analytic(m.domain(), move |t, k| {
        let Ok(j) = mm.jet(t) else { return f64::NAN };
        let v = j.eta_pow(-q);
        match k {
            0 => v,
            1 => -q * j.dlog * v,
            _ => (q * q * j.dlog * j.dlog - q * j.ddlog) * v,
        }
    });
    let ts = sweep_grid(m.domain(), 2001);
    let (mut identity_error, mut residual, mut log_curvature) = (0.0f64, 0.0f64, 0.0f64);
    let (mut rho_lo, mut rho_hi, mut slope_sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for &t in &ts {
        let j = m.jet(t)?;
        let gv = g.eval(t)?;
        let lap = m.radial_laplacian(&g, t)? / gv;
        let closed = -q * j.ddeta_over_eta() - (nn - 1.0) * (nn - 3.0) / 4.0 * j.dlog * j.dlog;
        identity_error = identity_error.max((lap - closed).abs() / closed.abs().max(1.0));
        let rho = w.eval(t)?;
        residual = residual.max((lap + rho).abs());
        rho_lo = rho_lo.min(rho);
        rho_hi = rho_hi.max(rho);
        log_curvature = log_curvature.max(j.ddlog.abs());
        slope_sum += j.dlog;
    }
    let rho_range = rho_hi - rho_lo;
    let rho_constant = rho_range <= RIGID_TOL;
    let log_affine = log_curvature <= RIGID_TOL;
    let growth_rate = log_affine.then(|| slope_sum / ts.len() as f64);
    let rho_from_identity = growth_rate.map(|c| (nn - 1.0).powi(2) * c * c / 4.0);
    let rho_from_rate = growth_rate.map(|c| c * c);
    let mismatch = match rho_from_identity {
        Some(target) => {
            rho_constant && (0.5 * (rho_lo + rho_hi) - target).abs() > RIGID_TOL * target.max(1.0)
        }
        None => false,
    };
    let fiber_ricci_nonnegative = m.fiber().ricci_lower >= 0.0;
    Ok(ResidualReport {
        n,
        identity_error,
        residual,
        rho_range,
        rho_constant,
        log_curvature,
        log_affine,
        fiber_ricci_nonnegative,
        growth_rate,
        rho_from_identity,
        rho_from_rate,
        mismatch,
        rigid: residual <= RIGID_TOL && rho_constant && log_affine && fiber_ricci_nonnegative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn builder(tau: f64, eta0: f64, deta0: f64) -> WarpBuilder {
        WarpBuilder {
            tau: ScalarProfile::constant(Domain::real_line(), tau),
            eta0,
            deta0,
            domain: Domain::new(0.0, 5.0).unwrap(),
            step: 1e-3,
        }
    }

    fn sup_error(p: &ScalarProfile, exact: impl Fn(f64) -> f64) -> f64 {
        (0..=5000)
            .map(|i| i as f64 * 1e-3)
            .map(|t| (p.eval(t).unwrap() - exact(t)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn warp_ode_closed_forms() {
        assert!(sup_error(&integrate_warp(&builder(1.0, 1.0, 0.0)).unwrap(), f64::cosh) < 1e-8);
        assert!(
            sup_error(&integrate_warp(&builder(0.0, 1.0, 2.0)).unwrap(), |t| 1.0
                + 2.0 * t)
                < 1e-12
        );
        let a = 0.7;
        let e = integrate_warp(&builder(a * a, 1.0, a)).unwrap();
        assert!(sup_error(&e, |t| (a * t).exp()) < 1e-9);
    }

    #[test]
    fn warp_ode_reports_zero_crossing() {
        // η = cos t vanishes at π/2.
        match integrate_warp(&builder(-1.0, 1.0, 0.0)) {
            Err(Error::ZeroCrossing { t }) => {
                assert!((t - std::f64::consts::FRAC_PI_2).abs() < 2e-3)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cosh_power_linear_case_tends_to_constant() {
        let (_, w, report) = cosh_power_model(1.0, 2.0, 0.0, 4).unwrap();
        assert_abs_diff_eq!(w.eval(30.0).unwrap(), 8.0, epsilon = 1e-10);
        assert!(report.passes());
    }

    #[test]
    fn cosh_power_quadratic_growth() {
        let (_, w, report) = cosh_power_model(2.0, 1.0, 0.0, 4).unwrap();
        let e = report.residuals["rho_exponent"];
        assert!((e - 2.0).abs() < 0.02 * 2.0, "{e}");
        assert!(report.residuals["u_second_min"] >= 0.0);
        for t in [0.3, 0.95, 1.05, 7.0] {
            assert_abs_diff_eq!(w.eval(t).unwrap(), w.eval(-t).unwrap(), epsilon = 1e-10);
        }
    }

    #[test]
    fn cosh_power_rejects_boundary_constant() {
        assert!(matches!(
            cosh_power_model(2.0, 1.0, 2.0, 4),
            Err(Error::Parameter(_))
        ));
        let (_, _, report) = cosh_power_model(2.0, 1.5, 1.0, 4).unwrap();
        assert!(report.passes(), "{report:?}");
    }

    #[test]
    fn smoothed_power_is_c2_across_window() {
        let u = SmoothedPower::new(2.5, 1.3).unwrap();
        for edge in [0.9, 1.1] {
            let (a, b) = (u.jet(edge - 1e-9), u.jet(edge + 1e-9));
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() < 1e-6, "k = {k} at {edge}: {a:?} {b:?}");
            }
        }
        // u′ from the closed form matches a difference quotient of u.
        for t in [0.95, 1.0, 1.05, 3.0] {
            let fd = (u.jet(t + 1e-6)[0] - u.jet(t - 1e-6)[0]) / 2e-6;
            assert!((fd - u.jet(t)[1]).abs() < 1e-6);
        }
    }

    #[test]
    fn conditions_for_builtin_warpings() {
        let m = WarpedModel::new(
            4,
            DomainKind::FullLine,
            Warping::cosh(),
            FiberData::flat(1.0),
        )
        .unwrap();
        let r = condition_check(&m).unwrap();
        assert!(r.passes());
        assert!(r.ricci_identity_error.unwrap() < 1e-10);
        let flat = WarpedModel::euclidean(4).unwrap();
        let r = condition_check(&flat).unwrap();
        assert!(!r.convexity.holds && r.convexity.violation_at.is_some());
    }

    #[test]
    fn liminf_on_exponential_warping() {
        let a = 0.5;
        let m = WarpedModel::new(
            4,
            DomainKind::FullLine,
            Warping::exponential(a),
            FiberData::flat(1.0),
        )
        .unwrap();
        let r = weight_liminf(&m, &m.natural_weight(), EndSelector::Upper, 40.0).unwrap();
        assert_eq!(r.end_status, EndStatus::Nonparabolic);
        assert!(r.bounded_below);
        assert_abs_diff_eq!(r.liminf_estimate, 2.0 * a * a, epsilon = 1e-9);
    }

    #[test]
    fn liminf_on_asymptotically_linear_warping() {
        // η = 0.5 + t + 0.5/(1+t), so η″ = (1+t)^{−3}.
        let eta = ScalarProfile::analytic(Domain::new(-1.0, f64::INFINITY).unwrap(), |t, k| {
            let s = 1.0 + t;
            match k {
                0 => 0.5 + t + 0.5 / s,
                1 => 1.0 - 0.5 / (s * s),
                _ => 1.0 / (s * s * s),
            }
        });
        let m = WarpedModel::new(
            4,
            DomainKind::FullLine,
            Warping::Direct(eta),
            FiberData::unit_sphere(4),
        )
        .unwrap();
        let r = weight_liminf(&m, &m.natural_weight(), EndSelector::Upper, 40.0).unwrap();
        assert!(r.convexity && r.ricci_condition);
        assert_eq!(r.end_status, EndStatus::Nonparabolic);
        assert!(r.moment.converges());
        assert!(r.rho_metric_incomplete);
        assert!(!r.bounded_below);
    }

    fn table_for(w: &WeightProfile) -> RhoDistanceTable {
        RhoDistanceTable::build(w, 1.0, &GridSpec::log_spaced(1.0, 100.0, 400).unwrap()).unwrap()
    }

    #[test]
    fn comparison_constant_weight_is_exact() {
        let w = WeightProfile::user(ScalarProfile::constant(Domain::positive(), 1.0));
        let r = comparison_check(&w, 4, 1.0, &table_for(&w)).unwrap();
        assert!(r.max_gap <= 1e-10);
        assert_eq!(r.reading, ComparisonReading::Consistent);
        // log g = 2(r − 1)/3.
        for (r, lg) in r.radii.iter().zip(&r.log_g) {
            assert_abs_diff_eq!(*lg, 2.0 * (r - 1.0) / 3.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn comparison_against_difference_quotients() {
        let rho = |r: f64| (1.0 + r).powi(-4);
        let w = WeightProfile::user(ScalarProfile::analytic(
            Domain::new(-0.5, f64::INFINITY).unwrap(),
            |r, k| {
                let s = 1.0 + r;
                match k {
                    0 => s.powi(-4),
                    1 => -4.0 * s.powi(-5),
                    _ => 20.0 * s.powi(-6),
                }
            },
        ));
        let k = 0.5;
        let rep = comparison_check(&w, 5, 1.0, &table_for(&w)).unwrap();
        assert!(rep.convexity.holds && rep.comparison.holds);
        assert_eq!(rep.reading, ComparisonReading::Consistent);
        // g = (1+r)·exp(k·r_ρ) with r_ρ = 1/2 − 1/(1+r); since ρ^{−1/4} is
        // affine the inequality is an equality. g″ by central differences.
        let g = |r: f64| (1.0 + r) * (k * (0.5 - 1.0 / (1.0 + r))).exp();
        for (i, &r) in rep.radii.iter().enumerate().step_by(37) {
            let h = 1e-3 * r;
            let ddg = (g(r + h) - 2.0 * g(r) + g(r - h)) / (h * h);
            assert!(
                (ddg / g(r) - k * k * rho(r)).abs() < 1e-5 * rho(r).max(1e-6),
                "{r}"
            );
            assert_abs_diff_eq!(rep.log_g[i], g(r).ln(), epsilon = 1e-9);
        }
    }

    #[test]
    fn comparison_flags_growing_weight() {
        let w = WeightProfile::user(ScalarProfile::analytic(Domain::real_line(), |r: f64, _| {
            r.exp()
        }));
        let t =
            RhoDistanceTable::build(&w, 1.0, &GridSpec::uniform(1.0, 40.0, 400).unwrap()).unwrap();
        let rep = comparison_check(&w, 4, 1.0, &t).unwrap();
        assert!(rep.convexity.holds);
        assert_eq!(rep.reading, ComparisonReading::Impossible);
    }

    #[test]
    fn residual_rigid_and_nonrigid() {
        let (n, c) = (4, 0.8);
        let m = WarpedModel::new(
            n,
            DomainKind::FullLine,
            Warping::exponential(c),
            FiberData::flat(1.0),
        )
        .unwrap();
        let target = 9.0 * c * c / 4.0;
        let w = WeightProfile::user(ScalarProfile::constant(Domain::real_line(), target));
        let r = rigidity_residual(&m, &w).unwrap();
        assert!(r.identity_error < 1e-8);
        assert!(r.residual <= 1e-8 && r.rigid && !r.mismatch);
        assert_abs_diff_eq!(r.growth_rate.unwrap(), c, epsilon = 1e-12);

        let one = WeightProfile::user(ScalarProfile::constant(Domain::real_line(), 1.0));
        let r = rigidity_residual(&m, &one).unwrap();
        assert!(r.mismatch && !r.rigid);

        let cosh = WarpedModel::new(
            n,
            DomainKind::FullLine,
            Warping::cosh(),
            FiberData::flat(1.0),
        )
        .unwrap();
        let r = rigidity_residual(&cosh, &cosh.natural_weight()).unwrap();
        assert!(r.identity_error < 1e-8);
        assert!(r.residual > 1e-3 && !r.rigid);
    }
}
