//! Decay of solutions of `(Δ − V)f = 0` on model ends, measured on annuli
//! of unit width in the ρ-distance.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_line, loglog_slope};
use crate::ode::{partition, rk4_step};
use crate::profiles::quadrature::{gauss_kronrod, gauss_legendre3, integrate_to_infinity};
use crate::profiles::{improper_tail, Domain, ScalarProfile, TailPolicy};
use crate::rho_metric::RhoDistanceTable;
use crate::warped::WarpedModel;
use crate::weights::WeightProfile;

/// An end `[r0, ∞)` of a model with weight, optional potential and the
/// ρ-distance based at `r0`.
#[derive(Debug, Clone)]
pub struct EndModel {
    pub model: WarpedModel,
    pub weight: WeightProfile,
    pub potential: Option<ScalarProfile>,
    pub table: RhoDistanceTable,
}

impl EndModel {
    pub fn new(
        model: WarpedModel,
        weight: WeightProfile,
        potential: Option<ScalarProfile>,
        table: RhoDistanceTable,
    ) -> Result<Self> {
        if !weight.is_valid() {
            return Err(Error::Configuration(format!(
                "weight is not valid on the end: {}",
                weight.invalid_reason.as_deref().unwrap_or("")
            )));
        }
        if table.r_rho.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Configuration(
                "ρ-distance table is not monotone".into(),
            ));
        }
        model.domain().check(table.r0)?;
        Ok(Self {
            model,
            weight,
            potential,
            table,
        })
    }

    pub fn r0(&self) -> f64 {
        self.table.r0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BvSpec {
    /// `f(r0) = f0` and `f → 0` along the end.
    Decaying { r0: f64, f0: f64 },
    /// `f(r0) = f0`, `f(r1) = f1`.
    TwoPoint { r0: f64, f0: f64, r1: f64, f1: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingOptions {
    pub step: f64,
    /// Relative bisection tolerance on the initial slope.
    pub tol: f64,
    /// The solution is returned on `[r0, r0 + horizon]`.
    pub horizon: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            step: 1e-3,
            tol: 1e-12,
            horizon: 20.0,
        }
    }
}

/// `exp(−(n−1)(log η(s) − log η(r)))`, i.e. `A(r)/A(s)`.
fn area_ratio(m: &WarpedModel, r: f64, s: f64) -> f64 {
    let nm1 = m.n() as f64 - 1.0;
    match (m.warping().jet(r), m.warping().jet(s)) {
        (Ok(jr), Ok(js)) => (nm1 * (jr.log_eta - js.log_eta)).exp(),
        _ => f64::NAN,
    }
}

/// Solves `(A f′)′ = V A f` on the end.
///
/// Without a potential the solution is written through `∫A^{−1}`. With a
/// potential the decaying solution is found by shooting on `f′(r0)`.
pub fn solve_schrodinger_radial(
    e: &EndModel,
    bv: BvSpec,
    opts: &ShootingOptions,
) -> Result<ScalarProfile> {
    match &e.potential {
        None => harmonic_solution(&e.model, bv),
        Some(v) => match bv {
            BvSpec::Decaying { r0, f0 } => shoot_decaying(&e.model, v, r0, f0, opts),
            BvSpec::TwoPoint { .. } => Err(Error::Configuration(
                "two-point data with a potential is not supported; use a decaying end".into(),
            )),
        },
    }
}

fn harmonic_solution(m: &WarpedModel, bv: BvSpec) -> Result<ScalarProfile> {
    let nm1 = m.n() as f64 - 1.0;
    match bv {
        BvSpec::Decaying { r0, f0 } => {
            m.domain().check_open(r0)?;
            let trace = improper_tail(
                |s| m.inverse_area(s).unwrap_or(f64::NAN),
                r0,
                &TailPolicy::default(),
            )?;
            if !trace.verdict.converges() {
                return Err(Error::Shooting(format!(
                    "no decaying harmonic solution: ∫A^{{-1}} does not converge ({:?})",
                    trace.verdict
                )));
            }
            let model = m.clone();
            // T(r) = A(r)^{−1}·Q(r) with Q(r) = ∫_r^∞ A(r)/A(s) ds.
            let q = move |mm: &WarpedModel, r: f64| {
                integrate_to_infinity(|s| area_ratio(mm, r, s), r, 0.0, 1e-13)
            };
            let q0 = q(m, r0)?;
            let domain = Domain::new(r0, f64::INFINITY)?;
            Ok(ScalarProfile::analytic(domain, move |r, k| {
                let shrink = area_ratio(&model, r0, r);
                match k {
                    0 => q(&model, r)
                        .map(|qr| f0 * shrink * qr / q0)
                        .unwrap_or(f64::NAN),
                    1 => -f0 * shrink / q0,
                    _ => {
                        let dl = model.warping().jet(r).map(|j| j.dlog).unwrap_or(f64::NAN);
                        nm1 * dl * f0 * shrink / q0
                    }
                }
            }))
        }
        BvSpec::TwoPoint { r0, f0, r1, f1 } => {
            if !(r1 > r0) {
                return Err(Error::Parameter(format!("need r0 < r1, got {r0}, {r1}")));
            }
            m.domain().check(r0)?;
            m.domain().check(r1)?;
            let model = m.clone();
            let cumulative = move |mm: &WarpedModel, r: f64| {
                gauss_kronrod(|s| area_ratio(mm, r0, s), r0, r, 1e-300, 1e-13)
            };
            let total = cumulative(m, r1)?;
            let slope = (f1 - f0) / total;
            Ok(ScalarProfile::analytic(
                Domain::new(r0, r1)?,
                move |r, k| match k {
                    0 => cumulative(&model, r)
                        .map(|c| f0 + slope * c)
                        .unwrap_or(f64::NAN),
                    1 => slope * area_ratio(&model, r0, r),
                    _ => {
                        let dl = model.warping().jet(r).map(|j| j.dlog).unwrap_or(f64::NAN);
                        -nm1 * dl * slope * area_ratio(&model, r0, r)
                    }
                },
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fate {
    CrossesZero,
    TurnsUp,
    Survives,
}

struct Trajectory {
    ts: Vec<f64>,
    ys: Vec<[f64; 2]>,
    fate: Fate,
}

fn shoot(
    m: &WarpedModel,
    v: &ScalarProfile,
    (r0, end): (f64, f64),
    f0: f64,
    slope: f64,
    step: f64,
    keep: bool,
) -> Result<Trajectory> {
    let nm1 = m.n() as f64 - 1.0;
    let rhs = |t: f64, y: [f64; 2]| {
        let dl = m.warping().jet(t).map(|j| j.dlog).unwrap_or(f64::NAN);
        let vv = v.eval(t).unwrap_or(f64::NAN);
        [y[1], vv * y[0] - nm1 * dl * y[1]]
    };
    let (steps, h) = partition(r0, end, step);
    let mut y = [f0, slope];
    let mut tr = Trajectory {
        ts: vec![r0],
        ys: vec![y],
        fate: Fate::Survives,
    };
    for i in 0..steps {
        let t = r0 + i as f64 * h;
        y = rk4_step(&rhs, t, y, h);
        if !(y[0].is_finite() && y[1].is_finite()) {
            return Err(Error::Shooting(format!(
                "trajectory became non-finite near r = {t}"
            )));
        }
        if keep {
            tr.ts.push(t + h);
            tr.ys.push(y);
        }
        if y[0] <= 0.0 {
            tr.fate = Fate::CrossesZero;
            break;
        }
        if y[1] > 0.0 {
            tr.fate = Fate::TurnsUp;
            break;
        }
    }
    Ok(tr)
}

/// One shooting pass from `(r0, f0)`: returns the stretch of the decaying
/// branch on which the two bracketing trajectories agree.
fn shoot_segment(
    m: &WarpedModel,
    v: &ScalarProfile,
    span: (f64, f64),
    f0: f64,
    opts: &ShootingOptions,
) -> Result<(Vec<f64>, Vec<[f64; 2]>)> {
    let fate = |s: f64| shoot(m, v, span, f0, s, opts.step, false).map(|t| t.fate);
    // `high` never crosses zero, `low` does.
    let mut high = 0.0;
    let mut grow = f0;
    while fate(high)? == Fate::CrossesZero {
        high = grow;
        grow *= 2.0;
        if grow > 1e18 * f0 {
            return Err(Error::Shooting(
                "every trial slope crosses zero; no positive solution".into(),
            ));
        }
    }
    let mut low = -f0;
    while fate(low)? != Fate::CrossesZero {
        low *= 2.0;
        if low < -1e18 * f0 {
            return Err(Error::Shooting(
                "no slope makes the solution cross zero".into(),
            ));
        }
    }
    for _ in 0..400 {
        if high - low <= opts.tol * high.abs().max(low.abs()) {
            break;
        }
        let mid = 0.5 * (low + high);
        if mid <= low || mid >= high {
            break;
        }
        if fate(mid)? == Fate::CrossesZero {
            low = mid;
        } else {
            high = mid;
        }
    }
    let a = shoot(m, v, span, f0, low, opts.step, true)?;
    let b = shoot(m, v, span, f0, high, opts.step, true)?;
    let len = a.ts.len().min(b.ts.len());
    let mut cut = len;
    for i in 0..len {
        let (fa, fb) = (a.ys[i][0], b.ys[i][0]);
        if (fa - fb).abs() > 1e-9 * fb.abs() || fa <= 0.0 {
            cut = i;
            break;
        }
    }
    let ys = (0..cut)
        .map(|i| {
            [
                0.5 * (a.ys[i][0] + b.ys[i][0]),
                0.5 * (a.ys[i][1] + b.ys[i][1]),
            ]
        })
        .collect();
    Ok((a.ts[..cut].to_vec(), ys))
}

/// Decaying solution by repeated shooting: each pass is cut where the
/// growing mode becomes visible and the next pass restarts from there.
fn shoot_decaying(
    m: &WarpedModel,
    v: &ScalarProfile,
    r0: f64,
    f0: f64,
    opts: &ShootingOptions,
) -> Result<ScalarProfile> {
    if !(f0 > 0.0) {
        return Err(Error::Parameter(format!(
            "decaying data needs f0 > 0, got {f0}"
        )));
    }
    m.domain().check_open(r0)?;
    let end = (r0 + opts.horizon).min(m.domain().hi);
    let mut ts = Vec::new();
    let mut ys: Vec<[f64; 2]> = Vec::new();
    let (mut start, mut value) = (r0, f0);
    loop {
        // Shooting over a full horizon keeps the far boundary from pulling
        // the kept stretch toward a Dirichlet solution.
        let far = (start + opts.horizon).min(m.domain().hi);
        let (mut seg_t, mut seg_y) = shoot_segment(m, v, (start, far), value, opts)?;
        let keep = seg_t.partition_point(|&t| t <= end + 0.5 * opts.step);
        seg_t.truncate(keep);
        seg_y.truncate(keep);
        if seg_t.len() < 8 {
            break;
        }
        // The last kept point starts the next pass.
        let last = seg_t.len() - 1;
        ts.extend_from_slice(&seg_t[..last]);
        ys.extend_from_slice(&seg_y[..last]);
        start = seg_t[last];
        value = seg_y[last][0];
        if end - start <= opts.step * 0.5 {
            ts.push(seg_t[last]);
            ys.push(seg_y[last]);
            break;
        }
    }
    if ts.len() < 4 {
        return Err(Error::Shooting(
            "decaying branch could not be resolved".into(),
        ));
    }
    let nm1 = m.n() as f64 - 1.0;
    let mut fs = Vec::with_capacity(ts.len());
    let mut dfs = Vec::with_capacity(ts.len());
    let mut ddfs = Vec::with_capacity(ts.len());
    for (t, y) in ts.iter().zip(&ys) {
        let dl = m.warping().jet(*t)?.dlog;
        fs.push(y[0]);
        dfs.push(y[1]);
        ddfs.push(v.eval(*t)? * y[0] - nm1 * dl * y[1]);
    }
    ScalarProfile::from_hermite(&ts, &fs, &dfs, &ddfs)
}

/// `(R_k, I_k)` with `I_k = ∫_{R_k ≤ r_ρ ≤ R_k + width} ρ f² A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusSeries {
    pub radii: Vec<f64>,
    pub integrals: Vec<f64>,
    pub width: f64,
}

impl AnnulusSeries {
    /// `R,I,log_I` rows; `log_I` is empty where `I = 0`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("R,I,log_I\n");
        for (r, i) in self.radii.iter().zip(&self.integrals) {
            if *i > 0.0 {
                let _ = writeln!(out, "{r},{i},{}", i.ln());
            } else {
                let _ = writeln!(out, "{r},{i},");
            }
        }
        out
    }
}

fn rho_f2_area<'a>(e: &'a EndModel, f: &'a ScalarProfile) -> impl Fn(f64) -> f64 + 'a {
    move |r| match (e.weight.eval(r), f.eval(r), e.model.area(r)) {
        (Ok(w), Ok(fv), Ok(a)) => w * fv * fv * a,
        _ => f64::NAN,
    }
}

/// Annulus integrals for `R = 0, 1, …, ⌊R_max⌋` with unit width.
pub fn annulus_integrals(e: &EndModel, f: &ScalarProfile, r_max: f64) -> Result<AnnulusSeries> {
    annulus_integrals_with_width(e, f, r_max, 1.0)
}

pub fn annulus_integrals_with_width(
    e: &EndModel,
    f: &ScalarProfile,
    r_max: f64,
    width: f64,
) -> Result<AnnulusSeries> {
    if !(width > 0.0 && r_max >= 0.0) {
        return Err(Error::Parameter(
            "annulus width must be positive and R_max nonnegative".into(),
        ));
    }
    let integrand = rho_f2_area(e, f);
    let count = (r_max / width).floor() as usize + 1;
    let mut radii = Vec::with_capacity(count);
    let mut integrals = Vec::with_capacity(count);
    for k in 0..count {
        let radius = k as f64 * width;
        let inner = e.table.inverse(radius)?;
        let outer = e.table.inverse(radius + width)?;
        let v = gauss_kronrod(&integrand, inner, outer, 1e-300, 1e-12)?;
        radii.push(radius);
        integrals.push(v);
    }
    Ok(AnnulusSeries {
        radii,
        integrals,
        width,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rate: f64,
    pub constant: f64,
    pub rms: f64,
}

/// Least-squares line through `(R, log I)` over the window.
pub fn fit_decay_rate(s: &AnnulusSeries, window: (f64, f64)) -> Result<DecayFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (r, i) in s.radii.iter().zip(&s.integrals) {
        if *r >= window.0 && *r <= window.1 {
            if !(*i > 0.0) {
                return Err(Error::Fit(format!(
                    "annulus integral I({r}) = {i} is not positive"
                )));
            }
            xs.push(*r);
            ys.push(i.ln());
        }
    }
    if xs.len() < 4 {
        return Err(Error::Fit(format!(
            "need at least 4 points in the window, found {}",
            xs.len()
        )));
    }
    let line = fit_line(&xs, &ys)?;
    Ok(DecayFit {
        rate: line.slope,
        constant: line.intercept.exp(),
        rms: line.rms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthVerdict {
    /// `G(R) = o(R)` on the horizon.
    SatisfiedOnHorizon,
    /// `G(R)` grows linearly; the hypothesis fails.
    LinearGrowth,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub radii: Vec<f64>,
    /// `G(R) = ∫_{r_ρ ≤ R} ρ f² e^{−2r_ρ} A`.
    pub g: Vec<f64>,
    pub g_over_r: Vec<f64>,
    /// Slope of `log G` against `log R` on the outer half of the horizon.
    pub exponent: Option<f64>,
    pub verdict: GrowthVerdict,
    pub caveat: String,
}

/// Samples `G(R)` at `R = 1, …, ⌊R_max⌋`.
pub fn growth_condition_check(e: &EndModel, f: &ScalarProfile, r_max: f64) -> Result<GrowthReport> {
    if !(r_max >= 2.0) {
        return Err(Error::Parameter(format!(
            "growth check needs R_max ≥ 2, got {r_max}"
        )));
    }
    let base = rho_f2_area(e, f);
    let table = &e.table;
    let integrand = |r: f64| -> f64 {
        let v = base(r);
        if v == 0.0 {
            return 0.0;
        }
        match table.forward(r) {
            Ok(rr) => v * (-2.0 * rr).exp(),
            Err(_) => f64::NAN,
        }
    };
    // Gauss–Legendre on 32 panels per unit of ρ-distance.
    const PANELS: usize = 32;
    let units = r_max.floor() as usize;
    let mut total = 0.0;
    let mut radii = Vec::with_capacity(units);
    let mut g = Vec::with_capacity(units);
    let mut lo = table.inverse(0.0)?;
    for k in 1..=units {
        for p in 1..=PANELS {
            let hi = table.inverse((k - 1) as f64 + p as f64 / PANELS as f64)?;
            for (x, w) in gauss_legendre3(lo, hi) {
                let v = integrand(x);
                if !v.is_finite() {
                    return Err(Error::QuadratureFailure {
                        a: lo,
                        b: hi,
                        reason: "integrand not finite".into(),
                    });
                }
                total += w * v;
            }
            lo = hi;
        }
        radii.push(k as f64);
        g.push(total);
    }
    let g_over_r: Vec<f64> = radii.iter().zip(&g).map(|(r, v)| v / r).collect();
    let half = radii.len() / 2;
    let (exponent, verdict) = if g.iter().all(|&v| v == 0.0) {
        (None, GrowthVerdict::SatisfiedOnHorizon)
    } else {
        match loglog_slope(&radii[half..], &g[half..]) {
            Ok(s) if s <= 0.5 => (Some(s), GrowthVerdict::SatisfiedOnHorizon),
            Ok(s) if s >= 0.9 => (Some(s), GrowthVerdict::LinearGrowth),
            Ok(s) => (Some(s), GrowthVerdict::Inconclusive),
            Err(_) => (None, GrowthVerdict::Inconclusive),
        }
    };
    Ok(GrowthReport {
        radii,
        g,
        g_over_r,
        exponent,
        verdict,
        caveat: format!("growth judged on the finite horizon R ≤ {r_max}"),
    })
}

/// Growth check, annulus series, and a decay fit only when the growth
/// hypothesis holds on the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub growth: GrowthReport,
    pub series: AnnulusSeries,
    pub certificate: Option<DecayFit>,
}

pub fn decay_report(e: &EndModel, f: &ScalarProfile, r_max: f64) -> Result<DecayReport> {
    let growth = growth_condition_check(e, f, r_max)?;
    let series = annulus_integrals(e, f, r_max)?;
    let certificate = if growth.verdict == GrowthVerdict::SatisfiedOnHorizon {
        fit_decay_rate(&series, (1.0, r_max)).ok()
    } else {
        None
    };
    Ok(DecayReport {
        growth,
        series,
        certificate,
    })
}

/// `a = √(λ₁(E) − μ)`; distances are then measured in `a·r`.
pub fn decay_rescale(lambda1: f64, mu: f64) -> Result<f64> {
    if !(lambda1 - mu > 0.0) {
        return Err(Error::Hypothesis(format!(
            "need μ < λ₁(E), got μ = {mu}, λ₁ = {lambda1}"
        )));
    }
    Ok((lambda1 - mu).sqrt())
}
