//! Radial Dirichlet eigenproblems by piecewise-linear finite elements.
//!
//! On `[a, b]` with area density `A(r) = V_N η^{n−1}` the forms are
//! `∫φ′ψ′A`, `∫φψA` and `∫ρφψA`, assembled per element with three-point
//! Gauss quadrature. Only the element subspace is certified: its minimum is
//! an upper bound for the continuum infimum on `[a, b]`.

pub mod tridiag;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use self::tridiag::{count_below, inverse_iteration, smallest_eigenvalue, SymTridiag};
use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::profiles::quadrature::gauss_legendre3;
use crate::profiles::{GridSpec, ScalarProfile};
use crate::warped::{DomainKind, WarpedModel};
use crate::weights::WeightProfile;

/// Inner radius replacing a pole.
pub const POLE_CUTOFF: f64 = 1e-3;
pub const EIGEN_TOL: f64 = 1e-10;

/// Zeroth-order term of the quadratic form.
#[derive(Debug, Clone)]
pub enum Coefficient {
    None,
    /// Enters as `−∫ρφ²A` in Schrödinger mode.
    Weight(WeightProfile),
    /// Enters as `+∫Vφ²A` in Schrödinger mode.
    Potential(ScalarProfile),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operator {
    Laplacian,
    Schrodinger,
}

#[derive(Debug, Clone)]
pub struct DirichletProblem {
    pub model: WarpedModel,
    pub coefficient: Coefficient,
    pub grid: GridSpec,
}

impl DirichletProblem {
    /// For pole models an inner endpoint below [`POLE_CUTOFF`] is moved up
    /// to it.
    pub fn new(model: WarpedModel, coefficient: Coefficient, mut grid: GridSpec) -> Result<Self> {
        grid.validate()?;
        if model.kind() == DomainKind::PoleModel && grid.a < POLE_CUTOFF {
            grid.a = POLE_CUTOFF;
            grid.validate()?;
        }
        let d = model.domain();
        d.check(grid.a)?;
        d.check(grid.b)?;
        Ok(Self {
            model,
            coefficient,
            grid,
        })
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.grid.a, self.grid.b)
    }
}

/// Stiffness, mass and weighted mass restricted to interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Forms {
    pub nodes: Vec<f64>,
    pub stiffness: SymTridiag,
    pub mass: SymTridiag,
    pub weighted_mass: SymTridiag,
}

fn assembly_failure(a: f64, b: f64, what: &str) -> Error {
    Error::QuadratureFailure {
        a,
        b,
        reason: format!("{what} not finite on element"),
    }
}

pub fn assemble_forms(p: &DirichletProblem) -> Result<Forms> {
    let nodes = p.grid.nodes()?;
    let m = nodes.len() - 2;
    let mut k = SymTridiag::zeros(m);
    let mut mm = SymTridiag::zeros(m);
    let mut w = SymTridiag::zeros(m);
    let coeff = |r: f64| -> Result<f64> {
        match &p.coefficient {
            Coefficient::None => Ok(0.0),
            Coefficient::Weight(wp) => wp.eval(r),
            Coefficient::Potential(v) => v.eval(r),
        }
    };
    for e in 0..nodes.len() - 1 {
        let (x0, x1) = (nodes[e], nodes[e + 1]);
        let h = x1 - x0;
        let (mut ka, mut m00, mut m01, mut m11, mut w00, mut w01, mut w11) =
            (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for (x, wt) in gauss_legendre3(x0, x1) {
            let area = p
                .model
                .area(x)
                .map_err(|_| assembly_failure(x0, x1, "area"))?;
            let c = coeff(x).map_err(|_| assembly_failure(x0, x1, "coefficient"))?;
            let (l, r) = ((x1 - x) / h, (x - x0) / h);
            ka += wt * area;
            m00 += wt * l * l * area;
            m01 += wt * l * r * area;
            m11 += wt * r * r * area;
            w00 += wt * c * l * l * area;
            w01 += wt * c * l * r * area;
            w11 += wt * c * r * r * area;
        }
        let ka = ka / (h * h);
        // Interior index of node e is e − 1.
        let (left, right) = (e.checked_sub(1), if e < m { Some(e) } else { None });
        if let Some(i) = left {
            k.diag[i] += ka;
            mm.diag[i] += m00;
            w.diag[i] += w00;
        }
        if let Some(j) = right {
            k.diag[j] += ka;
            mm.diag[j] += m11;
            w.diag[j] += w11;
        }
        if let (Some(i), Some(_)) = (left, right) {
            k.off[i] -= ka;
            mm.off[i] += m01;
            w.off[i] += w01;
        }
    }
    for (f, name) in [(&k, "stiffness"), (&mm, "mass"), (&w, "weighted mass")] {
        if !f.is_finite() {
            return Err(Error::QuadratureFailure {
                a: p.grid.a,
                b: p.grid.b,
                reason: format!("{name} form not finite"),
            });
        }
    }
    Ok(Forms {
        nodes,
        stiffness: k,
        mass: mm,
        weighted_mass: w,
    })
}

impl Forms {
    /// Matrix of the quadratic form whose Rayleigh quotient is minimized.
    pub fn operator(&self, op: Operator, coefficient: &Coefficient) -> SymTridiag {
        match (op, coefficient) {
            (Operator::Laplacian, _) | (_, Coefficient::None) => self.stiffness.clone(),
            (Operator::Schrodinger, Coefficient::Weight(_)) => {
                self.stiffness.axpy(-1.0, &self.weighted_mass)
            }
            (Operator::Schrodinger, Coefficient::Potential(_)) => {
                self.stiffness.axpy(1.0, &self.weighted_mass)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    pub lambda1: f64,
    /// All grid nodes, boundary included.
    pub nodes: Vec<f64>,
    /// Eigenvector on `nodes`, zero at both ends, `max |v| = 1`, `v ≥ 0` in bulk.
    pub eigenvector: Vec<f64>,
    /// `‖Sv − λMv‖ / ((‖S‖∞ + |λ|‖M‖∞)·‖v‖)`.
    pub residual: f64,
    pub grid_size: usize,
}

#[derive(Serialize)]
struct EigenSummary {
    lambda1: f64,
    residual: f64,
    grid: usize,
    interval: [f64; 2],
}

impl EigenResult {
    pub fn summary_json(&self) -> String {
        let s = EigenSummary {
            lambda1: self.lambda1,
            residual: self.residual,
            grid: self.grid_size,
            interval: [self.nodes[0], self.nodes[self.nodes.len() - 1]],
        };
        serde_json::to_string_pretty(&s).expect("plain data serializes")
    }

    pub fn eigenvector_csv(&self) -> String {
        let mut out = String::from("r,phi\n");
        for (r, v) in self.nodes.iter().zip(&self.eigenvector) {
            let _ = writeln!(out, "{r},{v}");
        }
        out
    }
}

fn solve_pencil(s: &SymTridiag, m: &SymTridiag, nodes: Vec<f64>) -> Result<EigenResult> {
    let (lo, hi) = smallest_eigenvalue(s, m, EIGEN_TOL)?;
    let lambda = 0.5 * (lo + hi);
    let mut v = inverse_iteration(s, m, lo, 3)?;
    let sv = s.matvec(&v);
    let mv = m.matvec(&v);
    let res: f64 = sv
        .iter()
        .zip(&mv)
        .map(|(a, b)| (a - lambda * b).powi(2))
        .sum::<f64>()
        .sqrt();
    let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let residual = res / ((s.norm_inf() + lambda.abs() * m.norm_inf()) * vnorm);
    let peak = v
        .iter()
        .copied()
        .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
    v.iter_mut().for_each(|x| *x /= peak);
    let mut eigenvector = Vec::with_capacity(v.len() + 2);
    eigenvector.push(0.0);
    eigenvector.extend(v);
    eigenvector.push(0.0);
    Ok(EigenResult {
        lambda1: lambda,
        grid_size: nodes.len(),
        nodes,
        eigenvector,
        residual,
    })
}

pub fn principal_eigenvalue(p: &DirichletProblem, op: Operator) -> Result<EigenResult> {
    let forms = assemble_forms(p)?;
    let s = forms.operator(op, &p.coefficient);
    solve_pencil(&s, &forms.mass, forms.nodes)
}

/// Number of discrete eigenvalues below `sigma`.
pub fn eigenvalue_count(p: &DirichletProblem, op: Operator, sigma: f64) -> Result<usize> {
    let forms = assemble_forms(p)?;
    Ok(count_below(
        &forms.operator(op, &p.coefficient),
        &forms.mass,
        sigma,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// `min (∫|φ′|²A − ∫ρφ²A)/∫φ²A` over the element space.
    pub minimum: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub minimizer: EigenResult,
    pub caveat: String,
}

/// Checks `∫ρφ²A ≤ ∫|φ′|²A` on the element space of `grid`.
pub fn verify_weighted_poincare(
    w: &WeightProfile,
    m: &WarpedModel,
    grid: GridSpec,
    tol: Option<f64>,
) -> Result<VerificationReport> {
    let p = DirichletProblem::new(m.clone(), Coefficient::Weight(w.clone()), grid)?;
    let res = principal_eigenvalue(&p, Operator::Schrodinger)?;
    let tolerance = tol.unwrap_or(1e-8 * res.lambda1.abs().max(1.0));
    Ok(VerificationReport {
        minimum: res.lambda1,
        tolerance,
        pass: res.lambda1 >= -tolerance,
        minimizer: res,
        caveat: format!(
            "certified on the {}-node piecewise-linear space over [{}, {}] only",
            p.grid.node_count, p.grid.a, p.grid.b
        ),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BottomSpectrum {
    pub estimate: f64,
    pub radii: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// Coefficient `c` in `λ(R) ≈ λ∞ + c/R²`.
    pub correction: f64,
}

/// Dirichlet interval of radius `radius` used for exhaustion.
pub fn exhaustion_interval(m: &WarpedModel, radius: f64) -> Result<(f64, f64)> {
    let d = m.domain();
    let (a, b) = match m.kind() {
        DomainKind::PoleModel => (POLE_CUTOFF, radius),
        DomainKind::FullLine if d.lo.is_infinite() && d.hi.is_infinite() => (-radius, radius),
        DomainKind::FullLine if d.lo.is_finite() => (d.lo, d.lo + radius),
        DomainKind::FullLine => (d.hi - radius, d.hi),
    };
    if !(a < b) {
        return Err(Error::Parameter(format!(
            "exhaustion radius {radius} too small"
        )));
    }
    Ok((a, b))
}

/// Extrapolates `λ₁(B(R))` along increasing radii with `λ(R) = λ∞ + c/R²`.
pub fn bottom_spectrum(
    m: &WarpedModel,
    radii: &[f64],
    node_count: usize,
) -> Result<BottomSpectrum> {
    if radii.len() < 2 || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Parameter(
            "need at least two increasing exhaustion radii".into(),
        ));
    }
    let mut lambdas = Vec::with_capacity(radii.len());
    for &r in radii {
        let (a, b) = exhaustion_interval(m, r)?;
        let p = DirichletProblem::new(
            m.clone(),
            Coefficient::None,
            GridSpec::uniform(a, b, node_count)?,
        )?;
        lambdas.push(principal_eigenvalue(&p, Operator::Laplacian)?.lambda1);
    }
    for w in lambdas.windows(2) {
        if w[1] > w[0] + 1e-10 * w[0].abs().max(1.0) {
            return Err(Error::Diagnostics(format!(
                "exhaustion eigenvalues increase ({} then {}); refine the grid",
                w[0], w[1]
            )));
        }
    }
    let xs: Vec<f64> = radii.iter().map(|r| r.powi(-2)).collect();
    let line = fit_line(&xs, &lambdas)?;
    Ok(BottomSpectrum {
        estimate: line.intercept,
        radii: radii.to_vec(),
        lambdas,
        correction: line.slope,
    })
}
