use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use rhokit::decay::{
    annulus_integrals, decay_report, solve_schrodinger_radial, BvSpec, EndModel, ShootingOptions,
};
use rhokit::ends::{classify_end, weight_integral_bounds, EndStatus};
use rhokit::profiles::{read_samples_csv, Domain, GridSpec, ScalarProfile};
use rhokit::reproduce;
use rhokit::rho_metric::{
    completeness_check, growth_criterion, Completeness, EndSelector, HorizonVerdict,
    RhoDistanceTable,
};
use rhokit::rigidity::{
    comparison_check, condition_check, cosh_power_model, integrate_warp, rigidity_residual,
    weight_liminf, ComparisonReading, WarpBuilder,
};
use rhokit::specs::{load_end, load_model, parse_weight};
use rhokit::spectral::{
    bottom_spectrum, exhaustion_interval, principal_eigenvalue, verify_weighted_poincare,
    Coefficient, DirichletProblem, Operator,
};
use rhokit::warped::{DomainKind, WarpedModel};
use rhokit::weights::WeightProfile;

use crate::args::{Command, Common, EndArg, RigidityCommand};
use crate::output::{Artifact, Table};

const BUILTIN_WEIGHTS: [&str; 4] = ["hardy", "cartan_hadamard", "green", "natural"];

fn model(path: &Path) -> Result<WarpedModel> {
    load_model(path).with_context(|| path.display().to_string())
}

/// A weight spec file, or a builtin name completed by `n` and the model.
fn weight(arg: &str, n: Option<usize>, m: Option<&WarpedModel>) -> Result<WeightProfile> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path).with_context(|| arg.to_string())?;
        let base = path.parent().unwrap_or(Path::new(""));
        return parse_weight(&text, base, m).with_context(|| arg.to_string());
    }
    let name = arg.replace('-', "_");
    if !BUILTIN_WEIGHTS.contains(&name.as_str()) {
        bail!(
            "--weight {arg:?} is neither a file nor one of {}",
            BUILTIN_WEIGHTS.join(", ")
        );
    }
    let mut spec = serde_json::json!({ "source": name });
    if let Some(n) = n {
        spec["n"] = n.into();
    }
    parse_weight(&spec.to_string(), Path::new(""), m).with_context(|| format!("--weight {arg}"))
}

fn check_dimension(n: Option<usize>, m: &WarpedModel) -> Result<()> {
    match n {
        Some(n) if n != m.n() => bail!("--n {n} disagrees with the model dimension {}", m.n()),
        _ => Ok(()),
    }
}

/// Default sweep window inside `d`.
fn window(d: Domain, from: Option<f64>, to: Option<f64>, span: f64) -> Result<(f64, f64)> {
    let lo = from.unwrap_or(if d.lo.is_finite() { d.lo + 1e-2 } else { -span });
    let hi = to.unwrap_or(if d.hi.is_finite() { d.hi - 1e-2 } else { span });
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
        bail!("empty window [{lo}, {hi}]");
    }
    d.check(lo)?;
    d.check(hi)?;
    Ok((lo, hi))
}

fn grid(lo: f64, hi: f64, nodes: usize) -> Result<GridSpec> {
    Ok(if lo > 0.0 {
        GridSpec::log_spaced(lo, hi, nodes)?
    } else {
        GridSpec::uniform(lo, hi, nodes)?
    })
}

/// A ρ-distance table from `r0` whose range reaches `reach`, grown geometrically
/// unless `to` fixes the outer node.
fn covering_table(
    w: &WeightProfile,
    r0: f64,
    reach: f64,
    nodes: usize,
    to: Option<f64>,
) -> Result<RhoDistanceTable> {
    let d = w.domain();
    if let Some(hi) = to {
        return Ok(RhoDistanceTable::build(w, r0, &grid(r0, hi, nodes)?)?);
    }
    let mut span = if r0 > 0.0 { 9.0 * r0 } else { 10.0 };
    for _ in 0..30 {
        let hi = (r0 + span).min(if d.hi.is_finite() {
            d.hi - 1e-9 * d.hi.abs().max(1.0)
        } else {
            f64::INFINITY
        });
        let table = RhoDistanceTable::build(w, r0, &grid(r0, hi, nodes)?)?;
        if table.range().1 >= reach || hi < r0 + span {
            return Ok(table);
        }
        span *= 4.0;
    }
    bail!("ρ-distance from r0 = {r0} stays below {reach}; the ρ-metric may be incomplete")
}

pub fn run(command: &Command, c: &Common) -> Result<Artifact> {
    match command {
        Command::Curvature {
            model: path,
            from,
            to,
        } => curvature(&model(path)?, *from, *to, c),
        Command::Weight {
            weight: arg,
            model: path,
            n,
            from,
            to,
        } => {
            let m = path.as_deref().map(model).transpose()?;
            if let Some(m) = &m {
                check_dimension(*n, m)?;
            }
            let w = weight(arg, *n, m.as_ref())?;
            tabulate_weight(&w, *from, *to, c)
        }
        Command::RhoMetric {
            weight: arg,
            model: path,
            n,
            r0,
            to,
            threshold,
        } => {
            let m = path.as_deref().map(model).transpose()?;
            if let Some(m) = &m {
                check_dimension(*n, m)?;
            }
            let w = weight(arg, *n, m.as_ref())?;
            rho_metric(
                &w,
                n.or(m.as_ref().map(WarpedModel::n)),
                *r0,
                *to,
                *threshold,
                c,
            )
        }
        Command::Spectral {
            model: path,
            weight: arg,
            from,
            to,
            radii,
        } => {
            let m = model(path)?;
            let w = arg
                .as_deref()
                .map(|a| weight(a, None, Some(&m)))
                .transpose()?;
            spectral(&m, w.as_ref(), *from, *to, radii, c)
        }
        Command::Decay {
            model: path,
            weight: arg,
            n,
            r0,
            potential,
        } => {
            let m = model(path)?;
            check_dimension(*n, &m)?;
            let w = weight(arg, *n, Some(&m))?;
            let v = potential
                .as_deref()
                .map(|p| read_samples_csv(p).with_context(|| p.display().to_string()))
                .transpose()?;
            decay(m, w, v, *r0, c)
        }
        Command::Classify { end, weight: arg } => {
            let e = load_end(end).with_context(|| end.display().to_string())?;
            let w = arg.as_deref().map(|a| weight(a, None, None)).transpose()?;
            classify(e, w, c)
        }
        Command::Rigidity { command } => rigidity(command, c),
        Command::Report { only } => report(only),
    }
}

fn curvature(m: &WarpedModel, from: Option<f64>, to: Option<f64>, c: &Common) -> Result<Artifact> {
    let (lo, hi) = window(m.domain(), from, to, 5.0)?;
    let ts = GridSpec::uniform(lo, hi, c.grid.unwrap_or(201))?.nodes()?;
    let rho = m.natural_weight();
    let mut t = Table::new(&[
        "t",
        "eta",
        "sectional_radial",
        "sectional_fiber",
        "ricci_radial",
        "ricci_fiber",
        "natural_weight",
    ]);
    for &x in &ts {
        t.push(vec![
            x,
            m.jet(x)?.eta(),
            m.sectional_radial(x)?,
            m.sectional_fiber(x).unwrap_or(f64::NAN),
            m.ricci_radial(x)?,
            m.ricci_fiber(x).unwrap_or(f64::NAN),
            rho.eval(x).unwrap_or(f64::NAN),
        ]);
    }
    let mut a = Artifact::new("curvature");
    a.set("n", m.n())?;
    a.set("window", [lo, hi])?;
    a.set("fiber_sectional_set", m.fiber().sectional.is_some())?;
    a.set("fiber_ricci_set", m.fiber().ricci_value.is_some())?;
    a.set("natural_weight_valid", rho.is_valid())?;
    a.table = Some(t);
    Ok(a)
}

fn tabulate_weight(
    w: &WeightProfile,
    from: Option<f64>,
    to: Option<f64>,
    c: &Common,
) -> Result<Artifact> {
    let d = w.domain();
    let (lo, hi) = window(d, from, to.or(c.horizon), 10.0)?;
    let mut t = Table::new(&["r", "rho", "sqrt_rho"]);
    for r in grid(lo, hi, c.grid.unwrap_or(201))?.nodes()? {
        t.push(vec![r, w.eval(r)?, w.sqrt(r)?]);
    }
    let mut a = Artifact::new("weight");
    a.set("source", format!("{:?}", w.source))?;
    a.set("window", [lo, hi])?;
    a.set("valid", w.is_valid())?;
    if let Some(reason) = &w.invalid_reason {
        a.finding(format!("weight is not valid: {reason}"));
    }
    a.table = Some(t);
    Ok(a)
}

fn rho_metric(
    w: &WeightProfile,
    n: Option<usize>,
    r0: f64,
    to: Option<f64>,
    threshold: f64,
    c: &Common,
) -> Result<Artifact> {
    let horizon = c.horizon.unwrap_or(10.0);
    let table = covering_table(w, r0, horizon, c.grid.unwrap_or(401), to)?;
    let upper = completeness_check(w, EndSelector::Upper)?;
    let lower = completeness_check(w, EndSelector::Lower)?;
    let mut a = Artifact::new("rho_metric");
    a.set("r0", r0)?;
    a.set("range", table.range())?;
    a.set("upper", &upper)?;
    a.set("lower", &lower)?;
    if upper.status == Completeness::Incomplete {
        a.finding("ρ-metric is incomplete toward the upper end");
    }
    if let Some(n) = n {
        let reach = horizon.min(table.range().1);
        let report = growth_criterion(&table, n, reach, 50, threshold)?;
        if report.verdict == HorizonVerdict::NotSatisfiedOnHorizon {
            a.finding(format!(
                "sup-growth criterion not satisfied up to R = {reach}"
            ));
        }
        a.set("growth_criterion", report)?;
    }
    let mut t = Table::new(&["r", "r_rho"]);
    for (r, d) in table.grid.iter().zip(&table.r_rho) {
        t.push(vec![*r, *d]);
    }
    a.table = Some(t);
    Ok(a)
}

fn spectral(
    m: &WarpedModel,
    w: Option<&WeightProfile>,
    from: Option<f64>,
    to: Option<f64>,
    radii: &[f64],
    c: &Common,
) -> Result<Artifact> {
    let nodes = c.grid.unwrap_or(2000);
    let (lo, hi) = match (from, to) {
        (None, None) => exhaustion_interval(m, c.horizon.unwrap_or(10.0))?,
        _ => window(m.domain(), from, to, c.horizon.unwrap_or(10.0))?,
    };
    let g = if m.kind() == DomainKind::PoleModel {
        grid(lo.max(1e-3), hi, nodes)?
    } else {
        GridSpec::uniform(lo, hi, nodes)?
    };
    let mut a = Artifact::new("spectral");
    let eig = match w {
        Some(w) => {
            let v = verify_weighted_poincare(w, m, g, c.tol)?;
            a.set("minimum", v.minimum)?;
            a.set("tolerance", v.tolerance)?;
            a.set("pass", v.pass)?;
            a.set("caveat", &v.caveat)?;
            if !v.pass {
                a.finding(format!(
                    "weighted Poincaré inequality fails: minimum {:e}",
                    v.minimum
                ));
            }
            v.minimizer
        }
        None => principal_eigenvalue(
            &DirichletProblem::new(m.clone(), Coefficient::None, g)?,
            Operator::Laplacian,
        )?,
    };
    a.set("lambda1", eig.lambda1)?;
    a.set("residual", eig.residual)?;
    a.set("interval", [eig.nodes[0], eig.nodes[eig.nodes.len() - 1]])?;
    if !radii.is_empty() {
        a.set("bottom_spectrum", bottom_spectrum(m, radii, nodes)?)?;
    }
    let mut t = Table::new(&["r", "phi"]);
    for (r, v) in eig.nodes.iter().zip(&eig.eigenvector) {
        t.push(vec![*r, *v]);
    }
    a.table = Some(t);
    Ok(a)
}

fn decay(
    m: WarpedModel,
    w: WeightProfile,
    potential: Option<ScalarProfile>,
    r0: f64,
    c: &Common,
) -> Result<Artifact> {
    let horizon = c.horizon.unwrap_or(10.0);
    let table = covering_table(&w, r0, horizon + 1.0, c.grid.unwrap_or(400), None)?;
    let outer = table.inverse((horizon + 1.0).min(table.range().1))?;
    let e = EndModel::new(m, w, potential, table)?;
    let mut opts = ShootingOptions {
        horizon: outer - r0 + 1.0,
        ..ShootingOptions::default()
    };
    if let Some(tol) = c.tol {
        opts.tol = tol;
    }
    let f = solve_schrodinger_radial(&e, BvSpec::Decaying { r0, f0: 1.0 }, &opts)?;
    let report = decay_report(&e, &f, horizon)?;
    let series = annulus_integrals(&e, &f, horizon)?;
    let mut a = Artifact::new("decay");
    a.set("r0", r0)?;
    a.set("horizon", horizon)?;
    a.set("growth", &report.growth)?;
    match &report.certificate {
        Some(fit) => a.set("fit", fit)?,
        None => {
            a.set("fit", serde_json::Value::Null)?;
            a.finding("no decay certificate: the growth hypothesis fails on the horizon");
        }
    }
    let mut t = Table::new(&["R", "integral"]);
    for (r, v) in series.radii.iter().zip(&series.integrals) {
        t.push(vec![*r, *v]);
    }
    a.table = Some(t);
    Ok(a)
}

fn classify(e: rhokit::ends::EndProfile, w: Option<WeightProfile>, c: &Common) -> Result<Artifact> {
    let cls = classify_end(&e)?;
    let mut a = Artifact::new("classify");
    a.set("label", &cls.label)?;
    a.set("status", cls.status)?;
    a.set("evidence", &cls.evidence)?;
    if cls.status == EndStatus::Inconclusive {
        a.finding("tail of ∫A⁻¹ is inconclusive within the cap");
    }
    if let Some(w) = w {
        let outer = c.horizon.unwrap_or(8.0);
        let table = covering_table(&w, e.r0, outer + 1.0, c.grid.unwrap_or(300), None)?;
        let report = weight_integral_bounds(&e, &w, &table, cls.status, (1.0, outer))?;
        let passes = match &report {
            rhokit::ends::WeightIntegralReport::Nonparabolic { passes, .. } => *passes,
            rhokit::ends::WeightIntegralReport::Parabolic { passes, .. } => *passes,
        };
        if !passes {
            a.finding("weight-integral bound violated on the horizon");
        }
        a.set("weight_integrals", report)?;
    }
    Ok(a)
}

fn rigidity(command: &RigidityCommand, c: &Common) -> Result<Artifact> {
    match command {
        RigidityCommand::Ode {
            tau,
            eta0,
            deta0,
            from,
            to,
            step,
        } => {
            let d = Domain::new(*from, *to)?;
            let source = match tau.parse::<f64>() {
                Ok(v) => ScalarProfile::constant(d, v),
                Err(_) => read_samples_csv(Path::new(tau)).with_context(|| tau.clone())?,
            };
            let eta = integrate_warp(&WarpBuilder {
                tau: source,
                eta0: *eta0,
                deta0: *deta0,
                domain: d,
                step: *step,
            })?;
            let mut t = Table::new(&["t", "eta", "deta", "ddeta"]);
            for x in GridSpec::uniform(*from, *to, c.grid.unwrap_or(201))?.nodes()? {
                let [v, dv, ddv] = eta.jet(x)?;
                t.push(vec![x, v, dv, ddv]);
            }
            let mut a = Artifact::new("warp");
            a.set("domain", [*from, *to])?;
            a.set("eta0", eta0)?;
            a.set("deta0", deta0)?;
            a.table = Some(t);
            Ok(a)
        }
        RigidityCommand::CoshPower {
            alpha,
            c1,
            c: ric,
            n,
        } => {
            let (m, w, report) = cosh_power_model(*alpha, *c1, *ric, *n)?;
            let mut a = Artifact::new("cosh_power");
            a.set("alpha", alpha)?;
            a.set("c1", c1)?;
            a.set("n", n)?;
            a.set("exponent", report.residuals.get("rho_exponent"))?;
            a.set("passes", report.passes())?;
            if !report.passes() {
                a.finding("convexity or Ricci condition fails on the sweep");
            }
            a.set("report", &report)?;
            let mut t = Table::new(&["t", "log_eta", "rho"]);
            for x in
                GridSpec::uniform(0.0, c.horizon.unwrap_or(20.0), c.grid.unwrap_or(201))?.nodes()?
            {
                t.push(vec![x, m.jet(x)?.log_eta, w.eval(x)?]);
            }
            a.table = Some(t);
            Ok(a)
        }
        RigidityCommand::Conditions { model: path } => {
            let report = condition_check(&model(path)?)?;
            let mut a = Artifact::new("conditions");
            if !report.passes() {
                a.finding("convexity or Ricci condition fails on the sweep");
            }
            a.set("passes", report.passes())?;
            a.set("report", report)?;
            Ok(a)
        }
        RigidityCommand::Liminf {
            model: path,
            weight: arg,
            end,
        } => {
            let m = model(path)?;
            let w = weight(arg, None, Some(&m))?;
            let selector = match end {
                EndArg::Upper => EndSelector::Upper,
                EndArg::Lower => EndSelector::Lower,
            };
            let report = weight_liminf(&m, &w, selector, c.horizon.unwrap_or(50.0))?;
            let mut a = Artifact::new("liminf");
            if !(report.convexity && report.ricci_condition) {
                a.finding("model violates the convexity or Ricci hypothesis");
            }
            a.set("report", report)?;
            Ok(a)
        }
        RigidityCommand::Comparison { weight: arg, n, r0 } => {
            let w = weight(arg, Some(*n), None)?;
            let hi = c.horizon.unwrap_or(100.0);
            let table = RhoDistanceTable::build(&w, *r0, &grid(*r0, hi, c.grid.unwrap_or(400))?)?;
            let report = comparison_check(&w, *n, *r0, &table)?;
            let mut a = Artifact::new("comparison");
            match report.reading {
                ComparisonReading::Consistent => {}
                ComparisonReading::HypothesisFails => a.finding("comparison hypothesis fails"),
                ComparisonReading::Impossible => a.finding(
                    "comparison holds yet ρ is unbounded: the configuration is impossible",
                ),
            }
            let mut t = Table::new(&["r", "log_g"]);
            for (r, g) in report.radii.iter().zip(&report.log_g) {
                t.push(vec![*r, *g]);
            }
            a.set("report", report)?;
            a.table = Some(t);
            Ok(a)
        }
        RigidityCommand::Residual {
            model: path,
            weight: arg,
        } => {
            let m = model(path)?;
            let w = weight(arg, None, Some(&m))?;
            let report = rigidity_residual(&m, &w)?;
            let mut a = Artifact::new("residual");
            a.set("rigid", report.rigid)?;
            a.set("report", report)?;
            Ok(a)
        }
    }
}

fn report(only: &[usize]) -> Result<Artifact> {
    let outcomes = if only.is_empty() {
        reproduce::run_all()
    } else {
        only.iter()
            .map(|&id| {
                reproduce::run(id).ok_or_else(|| {
                    anyhow!(
                        "no check with id {id}; ids run 1 to {}",
                        reproduce::CHECKS.len()
                    )
                })
            })
            .collect::<Result<Vec<_>>>()?
    };
    let mut a = Artifact::new("report");
    let mut checks = Vec::with_capacity(outcomes.len());
    let mut t = Table::new(&["id", "passed"]);
    for o in &outcomes {
        eprintln!(
            "check {:>2} {}: {} [{:.2}s]",
            o.id,
            if o.passed { "PASS" } else { "FAIL" },
            o.title,
            o.seconds
        );
        if !o.passed {
            a.finding(format!("check {} ({}) failed", o.id, o.title));
        }
        // Timings stay on stderr so the artifacts are reproducible.
        checks.push(serde_json::json!({
            "id": o.id,
            "title": o.title,
            "passed": o.passed,
            "metrics": o.metrics,
            "notes": o.notes,
        }));
        t.push(vec![o.id as f64, if o.passed { 1.0 } else { 0.0 }]);
    }
    a.set("passed", outcomes.iter().filter(|o| o.passed).count())?;
    a.set("total", outcomes.len())?;
    a.set("checks", checks)?;
    a.table = Some(t);
    Ok(a)
}
