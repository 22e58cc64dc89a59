//! The bundled reproduction checks behind `rhokit report`.

use std::collections::BTreeMap;
use std::f64::consts::E;
use std::time::Instant;

use serde::Serialize;

use crate::decay::{
    annulus_integrals, decay_report, fit_decay_rate, growth_condition_check,
    solve_schrodinger_radial, BvSpec, EndModel, GrowthVerdict, ShootingOptions,
};
use crate::ends::{
    classify_end, weight_integral_bounds, EndProfile, EndStatus, WeightIntegralReport,
};
use crate::error::Result;
use crate::profiles::{Domain, GridSpec, ScalarProfile};
use crate::rho_metric::RhoDistanceTable;
use crate::rigidity::{
    comparison_check, cosh_power_model, integrate_warp, rigidity_residual, WarpBuilder,
};
use crate::spectral::{bottom_spectrum, verify_weighted_poincare};
use crate::warped::{DomainKind, FiberData, WarpedModel, Warping};
use crate::weights::{green_weight_model, hardy_weight, WeightProfile};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub id: usize,
    pub title: &'static str,
    pub passed: bool,
    pub metrics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub seconds: f64,
}

/// Accumulates metrics and sub-verdicts for one check.
#[derive(Default)]
struct Tally {
    passed: bool,
    metrics: BTreeMap<String, f64>,
    notes: Vec<String>,
}

impl Tally {
    fn new() -> Self {
        Self {
            passed: true,
            ..Self::default()
        }
    }

    fn metric(&mut self, key: impl Into<String>, v: f64) {
        self.metrics.insert(key.into(), v);
    }

    fn require(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.passed = false;
            self.notes.push(format!("failed: {}", what.into()));
        }
    }
}

type CheckFn = fn(&mut Tally) -> Result<()>;

pub const CHECKS: [(usize, &str); 14] = [
    (
        1,
        "Hardy weight is sharp for the weighted Poincaré inequality",
    ),
    (2, "annulus integrals of r^{-2} on R^4 decay like e^{-2R}"),
    (3, "bottom of the spectrum of H^3 is 1"),
    (4, "Green weight on R^n equals the Hardy weight"),
    (5, "curvature of sinh and linear warpings"),
    (6, "radial harmonic profiles and constant level flux"),
    (7, "equality in the improved Bochner inequality"),
    (8, "parabolicity of model ends"),
    (9, "annulus weight integrals grow like e^{2R} on R^4"),
    (10, "warping ODE matches cosh and recovers tau"),
    (11, "cosh u warpings: weight exponent 2α−2"),
    (12, "rigid residual for exponential warpings"),
    (13, "comparison function inequality"),
    (14, "bounded harmonic profile on H^3 grows linearly"),
];

fn check_fn(id: usize) -> Option<CheckFn> {
    let f: CheckFn = match id {
        1 => hardy_sharpness,
        2 => decay_sharpness,
        3 => hyperbolic_bottom,
        4 => green_equals_hardy,
        5 => curvature_identities,
        6 => harmonic_flux,
        7 => bochner_equality,
        8 => end_classification,
        9 => annulus_growth,
        10 => warp_ode,
        11 => cosh_family,
        12 => rigid_residual,
        13 => comparison,
        14 => honest_limits,
        _ => return None,
    };
    Some(f)
}

/// Runs one check; an internal error counts as a failure with the message as a note.
pub fn run(id: usize) -> Option<CheckOutcome> {
    let f = check_fn(id)?;
    let title = CHECKS[id - 1].1;
    let start = Instant::now();
    let mut t = Tally::new();
    if let Err(e) = f(&mut t) {
        t.passed = false;
        t.notes.push(format!("error: {e}"));
    }
    Some(CheckOutcome {
        id,
        title,
        passed: t.passed,
        metrics: t.metrics,
        notes: t.notes,
        seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn run_all() -> Vec<CheckOutcome> {
    CHECKS.iter().filter_map(|(id, _)| run(*id)).collect()
}

fn unit_volume_euclidean(n: usize) -> Result<WarpedModel> {
    WarpedModel::new(
        n,
        DomainKind::PoleModel,
        Warping::linear(),
        FiberData {
            volume: 1.0,
            ..FiberData::unit_sphere(n)
        },
    )
}

fn hardy_sharpness(t: &mut Tally) -> Result<()> {
    for n in [3, 4, 5] {
        let m = WarpedModel::euclidean(n)?;
        let h = hardy_weight(n)?;
        let grid = GridSpec::log_spaced(0.01, 100.0, 2000)?;
        let sharp = verify_weighted_poincare(&h, &m, grid, None)?;
        let over = verify_weighted_poincare(&h.scaled(1.2), &m, grid, None)?;
        t.metric(format!("n{n}_minimum"), sharp.minimum);
        t.metric(format!("n{n}_scaled_minimum"), over.minimum);
        t.require(
            sharp.minimum >= -1e-8,
            format!("n = {n}: minimum {} below -1e-8", sharp.minimum),
        );
        t.require(
            over.minimum < 0.0,
            format!("n = {n}: scaled minimum {} is not negative", over.minimum),
        );
    }
    Ok(())
}

fn decay_sharpness(t: &mut Tally) -> Result<()> {
    let m = unit_volume_euclidean(4)?;
    let w = hardy_weight(4)?;
    let table = RhoDistanceTable::build(&w, 1.0, &GridSpec::log_spaced(1.0, 1e5, 400)?)?;
    let e = EndModel::new(m, w, None, table)?;
    let f = ScalarProfile::analytic(Domain::positive(), |r: f64, k| match k {
        0 => r.powi(-2),
        1 => -2.0 * r.powi(-3),
        _ => 6.0 * r.powi(-4),
    });
    let s = annulus_integrals(&e, &f, 10.0)?;
    let mut worst = 0.0f64;
    for (r, i) in s.radii.iter().zip(&s.integrals).filter(|(r, _)| **r >= 1.0) {
        let exact = 0.5 * (1.0 - (-2.0f64).exp()) * (-2.0 * r).exp();
        worst = worst.max((i / exact - 1.0).abs());
    }
    let fit = fit_decay_rate(&s, (1.0, 10.0))?;
    t.metric("max_rel_error", worst);
    t.metric("rate", fit.rate);
    t.require(worst <= 1e-6, "relative error above 1e-6");
    t.require(
        (fit.rate + 2.0).abs() <= 1e-4,
        "rate differs from -2 by more than 1e-4",
    );
    Ok(())
}

fn hyperbolic_bottom(t: &mut Tally) -> Result<()> {
    let b = bottom_spectrum(&WarpedModel::hyperbolic(3)?, &[10.0, 20.0, 30.0], 10_000)?;
    t.metric("estimate", b.estimate);
    t.require(
        (b.estimate - 1.0).abs() <= 0.01,
        "estimate not within 1% of 1",
    );
    Ok(())
}

fn green_equals_hardy(t: &mut Tally) -> Result<()> {
    for n in [3, 4, 5] {
        let g = green_weight_model(&WarpedModel::euclidean(n)?)?;
        let c = (n as f64 - 2.0).powi(2) / 4.0;
        let mut worst = 0.0f64;
        for r in [0.5, 1.0, 10.0] {
            worst = worst.max((g.eval(r)? / (c / (r * r)) - 1.0).abs());
        }
        t.metric(format!("n{n}_max_rel_error"), worst);
        t.require(worst <= 1e-8, format!("n = {n}: relative error {worst}"));
    }
    Ok(())
}

fn curvature_identities(t: &mut Tally) -> Result<()> {
    let ts = [0.05, 0.3, 1.0, 2.5, 7.0, 20.0];
    for n in [3, 4, 5] {
        let nm1 = n as f64 - 1.0;
        let h = WarpedModel::hyperbolic(n)?;
        let r = WarpedModel::euclidean(n)?;
        let (mut dh, mut dr) = (0.0f64, 0.0f64);
        for &x in &ts {
            dh = dh
                .max((h.sectional_radial(x)? + 1.0).abs())
                .max((h.sectional_fiber(x)? + 1.0).abs())
                .max((h.ricci_radial(x)? + nm1).abs())
                .max((h.ricci_fiber(x)? + nm1).abs());
            dr = dr
                .max(r.sectional_radial(x)?.abs())
                .max(r.sectional_fiber(x)?.abs())
                .max(r.ricci_radial(x)?.abs())
                .max(r.ricci_fiber(x)?.abs());
        }
        t.metric(format!("n{n}_sinh_error"), dh);
        t.metric(format!("n{n}_linear_error"), dr);
        t.require(dh <= 1e-9 && dr <= 1e-9, format!("n = {n}"));
    }
    Ok(())
}

/// Name, model and sampling window.
type NamedModel = (&'static str, WarpedModel, (f64, f64));

/// The builtin warpings with a model each: two pole models, three full-line ones.
fn builtin_models() -> Result<Vec<NamedModel>> {
    let full = |w| WarpedModel::new(4, DomainKind::FullLine, w, FiberData::flat(1.0));
    Ok(vec![
        ("linear", WarpedModel::euclidean(4)?, (0.5, 5.0)),
        ("sinh", WarpedModel::hyperbolic(4)?, (0.5, 5.0)),
        ("cosh", full(Warping::cosh())?, (-5.0, 5.0)),
        ("exp", full(Warping::exponential(0.7))?, (-5.0, 5.0)),
        ("constant", full(Warping::constant(2.0)?)?, (-5.0, 5.0)),
    ])
}

fn harmonic_flux(t: &mut Tally) -> Result<()> {
    for (name, m, (a, b)) in builtin_models()? {
        let ts = GridSpec::uniform(a, b, 100)?.nodes()?;
        let f = m.harmonic_profile(ts[50])?;
        let mut lap = 0.0f64;
        for &x in &ts {
            lap = lap.max(m.radial_laplacian(&f, x)?.abs());
        }
        t.metric(format!("{name}_laplacian_sup"), lap);
        t.require(lap <= 1e-8, format!("{name}: sup |Δf| = {lap}"));
        if m.kind() == DomainKind::FullLine {
            let flux: Vec<f64> = ts
                .iter()
                .map(|&x| m.level_flux_of(&f, x))
                .collect::<Result<_>>()?;
            let (lo, hi) = flux
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
                    (l.min(v), h.max(v))
                });
            let variation = (hi - lo) / hi.abs();
            t.metric(format!("{name}_flux_variation"), variation);
            t.require(
                variation <= 1e-8,
                format!("{name}: flux variation {variation}"),
            );
        }
    }
    Ok(())
}

fn bochner_equality(t: &mut Tally) -> Result<()> {
    let tau_quad = ScalarProfile::analytic(Domain::real_line(), |x, k| match k {
        0 => 1.0 + x * x,
        1 => 2.0 * x,
        _ => 2.0,
    });
    let eta = integrate_warp(&WarpBuilder {
        tau: tau_quad.clone(),
        eta0: 1.0,
        deta0: 0.0,
        domain: Domain::new(0.0, 5.0)?,
        step: 1e-3,
    })?;
    let one = ScalarProfile::constant(Domain::real_line(), 1.0);
    let full = |w| WarpedModel::new(4, DomainKind::FullLine, w, FiberData::flat(1.0));
    let cases = [
        ("cosh", full(Warping::cosh())?, one.clone()),
        ("exp", full(Warping::exponential(1.0))?, one),
        ("ode", full(Warping::Direct(eta))?, tau_quad),
    ];
    for (name, m, tau) in cases {
        let ts = GridSpec::uniform(0.05, 4.95, 100)?.nodes()?;
        let (mut sup, mut rel) = (0.0f64, 0.0f64);
        for &x in &ts {
            let r = m.bochner_residual(&tau, x)?.abs();
            sup = sup.max(r);
            rel = rel.max(r / (tau.eval(x)? * m.gradient_norm(x)?));
        }
        t.metric(format!("{name}_residual_sup"), sup);
        t.metric(format!("{name}_residual_rel"), rel);
        t.require(sup <= 1e-6, format!("{name}: residual {sup}"));
    }
    Ok(())
}

fn end_classification(t: &mut Tally) -> Result<()> {
    let cases = [
        (EndProfile::euclidean(2)?, EndStatus::Parabolic),
        (EndProfile::cylinder(1.0)?, EndStatus::Parabolic),
        (EndProfile::euclidean(3)?, EndStatus::Nonparabolic),
        (EndProfile::euclidean(4)?, EndStatus::Nonparabolic),
        (
            EndProfile::from_model(&WarpedModel::hyperbolic(3)?, 1.0, "H^3")?,
            EndStatus::Nonparabolic,
        ),
    ];
    let mut wrong = 0;
    for (e, expected) in cases {
        let got = classify_end(&e)?.status;
        if got != expected {
            wrong += 1;
            t.notes
                .push(format!("{}: {got:?}, expected {expected:?}", e.label));
        }
    }
    t.metric("misclassified", wrong as f64);
    t.require(wrong == 0, "misclassified ends");
    Ok(())
}

fn annulus_growth(t: &mut Tally) -> Result<()> {
    let m = WarpedModel::euclidean(4)?;
    let e = EndProfile::from_model(&m, 1.0, "R^4")?;
    let w = hardy_weight(4)?;
    let table = RhoDistanceTable::build(&w, 1.0, &GridSpec::log_spaced(1.0, 1e5, 300)?)?;
    let WeightIntegralReport::Nonparabolic { j, .. } =
        weight_integral_bounds(&e, &w, &table, EndStatus::Nonparabolic, (2.0, 9.0))?
    else {
        unreachable!("nonparabolic branch requested")
    };
    let worst = j
        .windows(2)
        .map(|p| (p[1] / p[0] / (E * E) - 1.0).abs())
        .fold(0.0, f64::max);
    t.metric("max_ratio_deviation", worst);
    t.require(worst <= 0.01, "J(R+1)/J(R) off e² by more than 1%");
    Ok(())
}

fn warp_ode(t: &mut Tally) -> Result<()> {
    let d = Domain::new(0.0, 5.0)?;
    let eta = integrate_warp(&WarpBuilder {
        tau: ScalarProfile::constant(d, 1.0),
        eta0: 1.0,
        deta0: 0.0,
        domain: d,
        step: 1e-3,
    })?;
    let ts = GridSpec::uniform(0.0, 5.0, 5001)?.nodes()?;
    let mut sup = 0.0f64;
    for &x in &ts {
        sup = sup.max((eta.eval(x)? - x.cosh()).abs());
    }
    t.metric("cosh_sup_error", sup);
    t.require(sup <= 1e-8, "integrated warping differs from cosh");

    let tau = ScalarProfile::analytic(d, |x, k| match k {
        0 => 1.0 + x * x,
        1 => 2.0 * x,
        _ => 2.0,
    });
    let eta = integrate_warp(&WarpBuilder {
        tau: tau.clone(),
        eta0: 1.0,
        deta0: 0.0,
        domain: d,
        step: 1e-3,
    })?;
    let n = 4;
    let m = WarpedModel::new(
        n,
        DomainKind::FullLine,
        Warping::Direct(eta),
        FiberData::flat(1.0),
    )?;
    let w = m.natural_weight();
    let mut worst = 0.0f64;
    for &x in ts.iter().filter(|&&x| x > 0.0 && x < 5.0) {
        worst = worst.max((w.eval(x)? - (n as f64 - 2.0) * tau.eval(x)?).abs());
    }
    t.metric("tau_recovery_error", worst);
    t.require(worst <= 1e-6, "τ not recovered");
    Ok(())
}

fn cosh_family(t: &mut Tally) -> Result<()> {
    for alpha in [1.5, 2.0, 3.0] {
        let (_, _, report) = cosh_power_model(alpha, 1.0, 0.0, 4)?;
        let e = report.residuals["rho_exponent"];
        let expected = 2.0 * alpha - 2.0;
        t.metric(format!("alpha{alpha}_exponent"), e);
        t.require(
            (e - expected).abs() <= 0.02 * expected,
            format!("α = {alpha}: exponent {e}"),
        );
        t.require(
            report.passes(),
            format!("α = {alpha}: conditions fail on the grid"),
        );
    }
    Ok(())
}

fn rigid_residual(t: &mut Tally) -> Result<()> {
    let (n, c) = (4usize, 0.6);
    let rho = (n as f64 - 1.0).powi(2) * c * c / 4.0;
    let flat = FiberData::flat(1.0);
    let m = WarpedModel::new(n, DomainKind::FullLine, Warping::exponential(c), flat)?;
    let w = WeightProfile::user(ScalarProfile::constant(Domain::real_line(), rho));
    let r = rigidity_residual(&m, &w)?;
    t.metric("exp_residual", r.residual);
    t.require(
        r.residual <= 1e-8 && r.rigid,
        "exponential warping not rigid",
    );
    let cosh = WarpedModel::new(n, DomainKind::FullLine, Warping::cosh(), flat)?;
    let r = rigidity_residual(&cosh, &cosh.natural_weight())?;
    t.metric("cosh_residual", r.residual);
    t.require(!r.rigid, "cosh warping reported rigid");
    Ok(())
}

fn comparison(t: &mut Tally) -> Result<()> {
    let grid = GridSpec::log_spaced(1.0, 100.0, 400)?;
    let one = WeightProfile::user(ScalarProfile::constant(Domain::positive(), 1.0));
    let r = comparison_check(&one, 4, 1.0, &RhoDistanceTable::build(&one, 1.0, &grid)?)?;
    t.metric("constant_gap", r.max_gap);
    t.require(r.max_gap <= 1e-10, "ρ ≡ 1 gap above 1e-10");
    let decaying = WeightProfile::user(ScalarProfile::analytic(
        Domain::new(-0.5, f64::INFINITY)?,
        |x, k| {
            let s = 1.0 + x;
            match k {
                0 => s.powi(-4),
                1 => -4.0 * s.powi(-5),
                _ => 20.0 * s.powi(-6),
            }
        },
    ));
    let r = comparison_check(
        &decaying,
        4,
        1.0,
        &RhoDistanceTable::build(&decaying, 1.0, &grid)?,
    )?;
    t.metric("decaying_min_convexity", r.convexity.min_value);
    t.metric("decaying_min_gap", r.comparison.min_value);
    t.require(
        r.convexity.holds && r.comparison.holds,
        "(1+r)^-4 fails the hypothesis or the inequality",
    );
    Ok(())
}

fn honest_limits(t: &mut Tally) -> Result<()> {
    let m = WarpedModel::hyperbolic(3)?;
    let w = WeightProfile::user(ScalarProfile::constant(m.domain(), 1.0));
    let table = RhoDistanceTable::build(&w, 1.0, &GridSpec::uniform(1.0, 30.0, 59)?)?;
    let e = EndModel::new(m, w, None, table)?;
    let g = solve_schrodinger_radial(
        &e,
        BvSpec::Decaying { r0: 1.0, f0: 1.0 },
        &ShootingOptions::default(),
    )?;
    let f = ScalarProfile::analytic(g.domain(), move |r, k| {
        let v = g.derivative(r, k).unwrap_or(f64::NAN);
        if k == 0 {
            1.0 - v
        } else {
            -v
        }
    });
    let growth = growth_condition_check(&e, &f, 24.0)?;
    t.metric("g_exponent", growth.exponent.unwrap_or(f64::NAN));
    t.metric(
        "g_over_r_tail",
        *growth.g_over_r.last().unwrap_or(&f64::NAN),
    );
    t.require(
        growth.verdict == GrowthVerdict::LinearGrowth,
        "G(R) not reported as linear growth",
    );
    let report = decay_report(&e, &f, 24.0)?;
    t.require(report.certificate.is_none(), "decay certificate emitted");
    Ok(())
}
