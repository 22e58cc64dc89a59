//! The conformal metric `ρ·ds²`: radial ρ-distance, completeness of ends,
//! `S(R) = sup_{B_ρ(R)} √ρ` and the `S/F` growth criteria.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profiles::quadrature::gauss_kronrod;
use crate::profiles::{improper_tail, Domain, GridSpec, TailPolicy, TailTrace};
use crate::weights::WeightProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndSelector {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Completeness {
    Complete,
    Incomplete,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletenessVerdict {
    pub status: Completeness,
    pub evidence: TailTrace,
}

const QUAD_ABS: f64 = 1e-15;
const QUAD_REL: f64 = 1e-13;

fn sqrt_rho_integral(w: &WeightProfile, a: f64, b: f64) -> Result<f64> {
    gauss_kronrod(|r| w.sqrt(r).unwrap_or(f64::NAN), a, b, QUAD_ABS, QUAD_REL)
}

/// Interior reference point of a domain.
fn anchor(d: Domain) -> f64 {
    match (d.lo.is_finite(), d.hi.is_finite()) {
        (true, true) => 0.5 * (d.lo + d.hi),
        (true, false) => d.lo + 1.0,
        (false, true) => d.hi - 1.0,
        (false, false) => 0.0,
    }
}

fn mapped_policy() -> TailPolicy {
    TailPolicy {
        cap: 1e7,
        quad_rel_tol: 1e-8,
        ..TailPolicy::default()
    }
}

/// Decides whether `∫√ρ` diverges toward the selected end of the domain.
///
/// An infinite end is tested directly. A finite end `e` is a boundary at
/// finite coordinate distance and is tested through `s = 1/|e − r|`.
pub fn completeness_check(w: &WeightProfile, end: EndSelector) -> Result<CompletenessVerdict> {
    let d = w.domain();
    let a = anchor(d);
    let policy = TailPolicy::default();
    let sq = |r: f64| w.sqrt(r).unwrap_or(f64::NAN);
    let trace = match end {
        EndSelector::Upper if d.hi.is_infinite() => improper_tail(sq, a, &policy)?,
        EndSelector::Lower if d.lo.is_infinite() => improper_tail(|s| sq(-s), -a, &policy)?,
        // `e ∓ 1/s` loses about `s·ε` relative accuracy, so the mapped tail
        // runs on a shorter horizon with looser quadrature.
        EndSelector::Upper => {
            let e = d.hi;
            improper_tail(
                |s| sq(e - 1.0 / s) / (s * s),
                1.0 / (e - a),
                &mapped_policy(),
            )?
        }
        EndSelector::Lower => {
            let e = d.lo;
            improper_tail(
                |s| sq(e + 1.0 / s) / (s * s),
                1.0 / (a - e),
                &mapped_policy(),
            )?
        }
    };
    let status = if trace.verdict.diverges() {
        Completeness::Complete
    } else if trace.verdict.converges() {
        Completeness::Incomplete
    } else {
        Completeness::Inconclusive
    };
    Ok(CompletenessVerdict {
        status,
        evidence: trace,
    })
}

/// `r ↦ r_ρ(r) = ∫_{r0}^r √ρ` tabulated on a grid.
#[derive(Debug, Clone)]
pub struct RhoDistanceTable {
    w: WeightProfile,
    pub r0: f64,
    pub grid: Vec<f64>,
    pub r_rho: Vec<f64>,
    pub upper: Option<CompletenessVerdict>,
    pub lower: Option<CompletenessVerdict>,
}

impl RhoDistanceTable {
    pub fn build(w: &WeightProfile, r0: f64, grid: &GridSpec) -> Result<Self> {
        Self::build_on_nodes(w, r0, grid.nodes()?)
    }

    /// Same as [`build`](Self::build) on explicit increasing nodes.
    pub fn build_on_nodes(w: &WeightProfile, r0: f64, nodes: Vec<f64>) -> Result<Self> {
        let d = w.domain();
        d.check(r0)?;
        if nodes.len() < 2 || nodes.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::InvalidGrid(
                "table nodes must be strictly increasing".into(),
            ));
        }
        for &r in &nodes {
            d.check(r)?;
        }
        let mut cumulative = Vec::with_capacity(nodes.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for p in nodes.windows(2) {
            acc += sqrt_rho_integral(w, p[0], p[1])?;
            cumulative.push(acc);
        }
        let offset = sqrt_rho_integral(w, nodes[0], r0)?;
        let r_rho = cumulative.iter().map(|c| c - offset).collect();
        Ok(Self {
            w: w.clone(),
            r0,
            grid: nodes,
            r_rho,
            upper: None,
            lower: None,
        })
    }

    /// Runs [`completeness_check`] on both ends and stores the verdicts.
    pub fn with_completeness(mut self) -> Result<Self> {
        self.upper = Some(completeness_check(&self.w, EndSelector::Upper)?);
        self.lower = Some(completeness_check(&self.w, EndSelector::Lower)?);
        Ok(self)
    }

    pub fn weight(&self) -> &WeightProfile {
        &self.w
    }

    pub fn range(&self) -> (f64, f64) {
        (self.r_rho[0], self.r_rho[self.r_rho.len() - 1])
    }

    fn segment(&self, r: f64) -> Result<usize> {
        let (lo, hi) = (self.grid[0], self.grid[self.grid.len() - 1]);
        if !(r >= lo && r <= hi) {
            return Err(Error::Range { value: r, lo, hi });
        }
        let i = self.grid.partition_point(|&x| x <= r);
        Ok(i.saturating_sub(1).min(self.grid.len() - 2))
    }

    /// `r_ρ(r)` for `r` inside the table.
    pub fn forward(&self, r: f64) -> Result<f64> {
        let i = self.segment(r)?;
        Ok(self.r_rho[i] + sqrt_rho_integral(&self.w, self.grid[i], r)?)
    }

    /// The `r` with `r_ρ(r) = target`, to `1e-12` in `r_ρ`.
    pub fn inverse(&self, target: f64) -> Result<f64> {
        let (lo, hi) = self.range();
        if !(target >= lo && target <= hi) {
            return Err(Error::Range {
                value: target,
                lo,
                hi,
            });
        }
        let i = self
            .r_rho
            .partition_point(|&v| v <= target)
            .saturating_sub(1)
            .min(self.grid.len() - 2);
        let (mut a, mut b) = (self.grid[i], self.grid[i + 1]);
        let base = self.r_rho[i];
        let g = |r: f64| -> Result<f64> {
            Ok(base + sqrt_rho_integral(&self.w, self.grid[i], r)? - target)
        };
        // Safeguarded Newton: r_ρ′ = √ρ, falling back to bisection.
        let mut r = a
            + (b - a)
                * ((target - base) / (self.r_rho[i + 1] - base).max(f64::MIN_POSITIVE))
                    .clamp(0.0, 1.0);
        for _ in 0..200 {
            let v = g(r)?;
            if v.abs() <= 1e-12 * target.abs().max(1.0) {
                return Ok(r);
            }
            if v > 0.0 {
                b = r;
            } else {
                a = r;
            }
            let slope = self.w.sqrt(r)?;
            let newton = r - v / slope;
            r = if slope > 0.0 && newton > a && newton < b {
                newton
            } else {
                0.5 * (a + b)
            };
            if b - a <= f64::EPSILON * r.abs().max(1.0) {
                return Ok(r);
            }
        }
        Ok(r)
    }

    /// `r,r_rho` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,r_rho\n");
        for (r, v) in self.grid.iter().zip(&self.r_rho) {
            let _ = writeln!(out, "{r},{v}");
        }
        out
    }
}

/// `S(R)`: supremum of `√ρ` over the table points with `|r_ρ| ≤ R`.
pub fn sup_sqrt_rho(table: &RhoDistanceTable, radius: f64) -> Result<f64> {
    let (lo, hi) = table.range();
    if !(radius >= 0.0) || radius > hi {
        return Err(Error::Range {
            value: radius,
            lo: 0.0,
            hi,
        });
    }
    let w = table.weight();
    let left = if -radius > lo {
        table.inverse(-radius)?
    } else {
        table.grid[0]
    };
    let right = table.inverse(radius)?;
    let mut best = (w.sqrt(left)?, left);
    let right_value = w.sqrt(right)?;
    if right_value > best.0 {
        best = (right_value, right);
    }
    let inside: Vec<usize> = (0..table.grid.len())
        .filter(|&i| table.grid[i] > left && table.grid[i] < right)
        .collect();
    for &i in &inside {
        let v = w.sqrt(table.grid[i])?;
        if v > best.0 {
            best = (v, table.grid[i]);
        }
    }
    // Golden-section refinement around the best interior node.
    let (_, rb) = best;
    if let Some(k) = inside.iter().position(|&i| table.grid[i] == rb) {
        let i = inside[k];
        let mut a = table.grid[i.saturating_sub(1)].max(left);
        let mut b = table.grid[(i + 1).min(table.grid.len() - 1)].min(right);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let x1 = b - phi * (b - a);
            let x2 = a + phi * (b - a);
            if w.sqrt(x1)? >= w.sqrt(x2)? {
                b = x2;
            } else {
                a = x1;
            }
        }
        let v = w.sqrt(0.5 * (a + b))?;
        if v > best.0 {
            best = (v, 0.5 * (a + b));
        }
    }
    Ok(best.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HorizonVerdict {
    SatisfiedOnHorizon,
    NotSatisfiedOnHorizon,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionSample {
    pub radius: f64,
    pub s: f64,
    pub f: f64,
    pub ratio: f64,
    pub running_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub n: usize,
    pub samples: Vec<CriterionSample>,
    /// Fraction of the first ratio below which the running minimum must fall.
    pub threshold: f64,
    pub verdict: HorizonVerdict,
    pub caveat: String,
}

pub const DEFAULT_CRITERION_THRESHOLD: f64 = 0.01;

/// `F(R) = e^{(n−3)R/(n−2)}` for `n ≥ 4`, `F(R) = R` for `n = 3`.
pub fn growth_reference(n: usize, radius: f64) -> f64 {
    if n == 3 {
        radius
    } else {
        ((n as f64 - 3.0) / (n as f64 - 2.0) * radius).exp()
    }
}

/// Samples `S(R)/F(R)` on `R_k = k·R_max/samples` and reports whether its
/// running minimum drops below `threshold` times the first ratio.
pub fn growth_criterion(
    table: &RhoDistanceTable,
    n: usize,
    r_max: f64,
    samples: usize,
    threshold: f64,
) -> Result<CriterionReport> {
    if n < 3 {
        return Err(Error::DegenerateDimension { n, min: 3 });
    }
    if samples < 2 || !(r_max > 0.0) {
        return Err(Error::Parameter(
            "growth criterion needs R_max > 0 and at least 2 samples".into(),
        ));
    }
    let mut out = Vec::with_capacity(samples);
    let mut running = f64::INFINITY;
    for k in 1..=samples {
        let radius = r_max * k as f64 / samples as f64;
        let s = sup_sqrt_rho(table, radius)?;
        let f = growth_reference(n, radius);
        let ratio = s / f;
        running = running.min(ratio);
        out.push(CriterionSample {
            radius,
            s,
            f,
            ratio,
            running_min: running,
        });
    }
    let first = out[0].ratio;
    let verdict = if running < threshold * first {
        HorizonVerdict::SatisfiedOnHorizon
    } else {
        HorizonVerdict::NotSatisfiedOnHorizon
    };
    Ok(CriterionReport {
        n,
        samples: out,
        threshold,
        verdict,
        caveat: format!("liminf estimated on the finite horizon R ≤ {r_max}; a longer horizon may change the verdict"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::ScalarProfile;
    use crate::weights::hardy_weight;
    use approx::assert_abs_diff_eq;

    fn constant(a2: f64) -> WeightProfile {
        WeightProfile::user(ScalarProfile::constant(Domain::real_line(), a2))
    }

    #[test]
    fn hardy_distance_is_logarithmic() {
        let w = hardy_weight(4).unwrap();
        let t = RhoDistanceTable::build(&w, 1.0, &GridSpec::log_spaced(1.0, 1e4, 200).unwrap())
            .unwrap();
        for r in [1.0, 2.0, 77.0, 1e4] {
            assert_abs_diff_eq!(t.forward(r).unwrap(), r.ln(), epsilon = 1e-12);
        }
        let w6 = hardy_weight(6).unwrap();
        let t6 =
            RhoDistanceTable::build(&w6, 1.0, &GridSpec::uniform(1.0, 4.0, 31).unwrap()).unwrap();
        assert_abs_diff_eq!(
            t6.forward(std::f64::consts::E).unwrap(),
            2.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn constant_weight_distance_is_linear() {
        let w = constant(9.0);
        let t =
            RhoDistanceTable::build(&w, 0.0, &GridSpec::uniform(-2.0, 5.0, 15).unwrap()).unwrap();
        assert_abs_diff_eq!(t.forward(4.2).unwrap(), 12.6, epsilon = 1e-12);
        assert_abs_diff_eq!(t.forward(-1.0).unwrap(), -3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.inverse(7.5).unwrap(), 2.5, epsilon = 1e-12);
        assert!(t.forward(6.0).is_err());
    }

    #[test]
    fn completeness_examples() {
        for n in 3..=6 {
            let v = completeness_check(&hardy_weight(n).unwrap(), EndSelector::Upper).unwrap();
            assert_eq!(v.status, Completeness::Complete);
        }
        let quartic = WeightProfile::user(ScalarProfile::analytic(
            Domain::positive(),
            |r, k| match k {
                0 => r.powi(-4),
                _ => f64::NAN,
            },
        ));
        assert_eq!(
            completeness_check(&quartic, EndSelector::Upper)
                .unwrap()
                .status,
            Completeness::Incomplete
        );
        assert_eq!(
            completeness_check(&constant(1.0), EndSelector::Upper)
                .unwrap()
                .status,
            Completeness::Complete
        );
        assert_eq!(
            completeness_check(&constant(1.0), EndSelector::Lower)
                .unwrap()
                .status,
            Completeness::Complete
        );
    }

    #[test]
    fn finite_end_completeness() {
        // √ρ = 2/(1−r) blows up non-integrably at r = 1.
        let w = WeightProfile::user(ScalarProfile::analytic(
            Domain::new(0.0, 1.0).unwrap(),
            |r, _| 4.0 / ((1.0 - r) * (1.0 - r)),
        ));
        assert_eq!(
            completeness_check(&w, EndSelector::Upper).unwrap().status,
            Completeness::Complete
        );
        assert_eq!(
            completeness_check(&w, EndSelector::Lower).unwrap().status,
            Completeness::Incomplete
        );
    }

    #[test]
    fn sup_sqrt_rho_examples() {
        let t = RhoDistanceTable::build(
            &constant(4.0),
            0.0,
            &GridSpec::uniform(0.0, 10.0, 41).unwrap(),
        )
        .unwrap();
        for r in [0.0, 3.0, 19.0] {
            assert_abs_diff_eq!(sup_sqrt_rho(&t, r).unwrap(), 2.0, epsilon = 1e-15);
        }
        assert!(sup_sqrt_rho(&t, 21.0).is_err());
        let h = RhoDistanceTable::build(
            &hardy_weight(4).unwrap(),
            1.0,
            &GridSpec::log_spaced(1.0, 1e3, 100).unwrap(),
        )
        .unwrap();
        for r in [0.5, 2.0, 6.0] {
            assert_abs_diff_eq!(sup_sqrt_rho(&h, r).unwrap(), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn sup_refines_interior_maximum() {
        let w = WeightProfile::user(ScalarProfile::analytic(Domain::real_line(), |r: f64, _| {
            1.0 + (-(r - 0.123).powi(2) * 50.0).exp()
        }));
        let t =
            RhoDistanceTable::build(&w, 0.0, &GridSpec::uniform(-3.0, 3.0, 7).unwrap()).unwrap();
        assert_abs_diff_eq!(sup_sqrt_rho(&t, 2.0).unwrap(), 2f64.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn growth_criterion_constant_weight_is_satisfied() {
        let t = RhoDistanceTable::build(
            &constant(1.0),
            0.0,
            &GridSpec::uniform(0.0, 40.0, 81).unwrap(),
        )
        .unwrap();
        let rep = growth_criterion(&t, 4, 30.0, 60, DEFAULT_CRITERION_THRESHOLD).unwrap();
        assert_eq!(rep.verdict, HorizonVerdict::SatisfiedOnHorizon);
        for s in &rep.samples {
            assert_abs_diff_eq!(s.ratio, (-s.radius / 2.0).exp(), epsilon = 1e-12);
        }
    }

    #[test]
    fn growth_criterion_blowup_weight_is_not_satisfied() {
        let w = WeightProfile::user(ScalarProfile::analytic(
            Domain::new(0.0, 1.0).unwrap(),
            |r, _| 4.0 / ((1.0 - r) * (1.0 - r)),
        ));
        let nodes = GridSpec::geometric(0.0, 1.0 - 1e-6, 400, 0.97)
            .unwrap()
            .nodes()
            .unwrap();
        let t = RhoDistanceTable::build_on_nodes(&w, 0.0, nodes).unwrap();
        let rep = growth_criterion(&t, 4, 20.0, 40, DEFAULT_CRITERION_THRESHOLD).unwrap();
        assert_eq!(rep.verdict, HorizonVerdict::NotSatisfiedOnHorizon);
        for s in &rep.samples {
            assert_abs_diff_eq!(s.ratio, 2.0, epsilon = 1e-8);
        }
    }
}
