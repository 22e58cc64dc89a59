//! Parabolicity of radial ends and the weight-integral bounds that go with
//! each case.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_line, loglog_slope};
use crate::profiles::quadrature::{gauss_kronrod, integrate_to_infinity};
use crate::profiles::{improper_tail, Domain, GridSpec, ScalarProfile, TailPolicy, TailTrace};
use crate::rho_metric::RhoDistanceTable;
use crate::warped::{sphere_volume, WarpedModel};
use crate::weights::WeightProfile;

/// Boundary-area profile `A(r)` of an end `[r0, ∞)`.
#[derive(Debug, Clone)]
pub struct EndProfile {
    pub area: ScalarProfile,
    /// `A^{−1}`, kept separately so it can be evaluated where `A` overflows.
    pub inv_area: ScalarProfile,
    pub r0: f64,
    pub label: String,
}

impl EndProfile {
    pub fn from_area(area: ScalarProfile, r0: f64, label: impl Into<String>) -> Result<Self> {
        area.domain().check(r0)?;
        let a = area.clone();
        let inv_area = ScalarProfile::analytic(area.domain(), move |r, k| {
            let Ok([v, d1, d2]) = a.jet(r) else {
                return f64::NAN;
            };
            match k {
                0 => 1.0 / v,
                1 => -d1 / (v * v),
                _ => 2.0 * d1 * d1 / (v * v * v) - d2 / (v * v),
            }
        });
        Ok(Self {
            area,
            inv_area,
            r0,
            label: label.into(),
        })
    }

    pub fn from_parts(
        area: ScalarProfile,
        inv_area: ScalarProfile,
        r0: f64,
        label: impl Into<String>,
    ) -> Self {
        Self {
            area,
            inv_area,
            r0,
            label: label.into(),
        }
    }

    pub fn from_model(m: &WarpedModel, r0: f64, label: impl Into<String>) -> Result<Self> {
        m.domain().check(r0)?;
        Ok(Self {
            area: m.area_profile(),
            inv_area: m.inverse_area_profile(),
            r0,
            label: label.into(),
        })
    }

    /// `A(r) = |S^{n−1}| r^{n−1}`; valid for `n ≥ 2`.
    pub fn euclidean(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::DegenerateDimension { n, min: 2 });
        }
        let c = sphere_volume(n - 1);
        let k = n as f64 - 1.0;
        let area = ScalarProfile::analytic(Domain::positive(), move |r: f64, d| match d {
            0 => c * r.powf(k),
            1 => c * k * r.powf(k - 1.0),
            _ => c * k * (k - 1.0) * r.powf(k - 2.0),
        });
        Self::from_area(area, 1.0, format!("R^{n}"))
    }

    /// `A ≡ V` on the line.
    pub fn cylinder(volume: f64) -> Result<Self> {
        Self::from_area(
            ScalarProfile::constant(Domain::real_line(), volume),
            0.0,
            "cylinder",
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndStatus {
    Parabolic,
    Nonparabolic,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub label: String,
    pub status: EndStatus,
    pub evidence: TailTrace,
}

/// Nonparabolic exactly when `∫_{r0}^∞ A^{−1}` converges.
pub fn classify_end(e: &EndProfile) -> Result<Classification> {
    let inv = &e.inv_area;
    let trace = improper_tail(
        |r| inv.eval(r).unwrap_or(f64::NAN),
        e.r0,
        &TailPolicy::default(),
    )?;
    let status = if trace.verdict.converges() {
        EndStatus::Nonparabolic
    } else if trace.verdict.diverges() {
        EndStatus::Parabolic
    } else {
        EndStatus::Inconclusive
    };
    Ok(Classification {
        label: e.label.clone(),
        status,
        evidence: trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeGrowthReport {
    pub radii: Vec<f64>,
    pub volumes: Vec<f64>,
    /// `min V(R)/R²` over the sampled radii.
    pub inf_ratio: f64,
    /// Slope of `log V` against `log R` on the outer half.
    pub exponent: f64,
    /// At least quadratic growth on the horizon.
    pub passes: bool,
    pub status: EndStatus,
    /// False when the end is nonparabolic yet grows sub-quadratically.
    pub consistent: bool,
}

/// Volume growth `V(R) = ∫_{r0}^R A` on `R ∈ [r0 + 1, R_max]`.
pub fn volume_growth_check(e: &EndProfile, r_max: f64) -> Result<VolumeGrowthReport> {
    let start = e.r0 + 1.0;
    if !(r_max > 2.0 * start.max(1.0)) {
        return Err(Error::Parameter(format!(
            "R_max = {r_max} too small for an end starting at {}",
            e.r0
        )));
    }
    let grid = GridSpec::log_spaced(start.max(1e-3), r_max, 40)?.nodes()?;
    let area = |r: f64| e.area.eval(r).unwrap_or(f64::NAN);
    let mut volumes = Vec::with_capacity(grid.len());
    let mut acc = gauss_kronrod(area, e.r0, grid[0], 1e-300, 1e-12)?;
    volumes.push(acc);
    for w in grid.windows(2) {
        acc += gauss_kronrod(area, w[0], w[1], 1e-300, 1e-12)?;
        volumes.push(acc);
    }
    let inf_ratio = grid
        .iter()
        .zip(&volumes)
        .map(|(r, v)| v / (r * r))
        .fold(f64::INFINITY, f64::min);
    let half = grid.len() / 2;
    let exponent = loglog_slope(&grid[half..], &volumes[half..])?;
    let passes = exponent >= 2.0 - 0.02;
    let status = classify_end(e)?.status;
    Ok(VolumeGrowthReport {
        radii: grid,
        volumes,
        inf_ratio,
        exponent,
        passes,
        status,
        consistent: !(status == EndStatus::Nonparabolic && !passes),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "branch")]
pub enum WeightIntegralReport {
    /// `J(R) = ∫_{R ≤ r_ρ ≤ R+1} ρA` grows at least like `e^{2R}`.
    Nonparabolic {
        radii: Vec<f64>,
        j: Vec<f64>,
        slope: f64,
        constant: f64,
        passes: bool,
    },
    /// `∫ρA < ∞` and `T(R) = ∫_{r_ρ ≥ R} ρA` decays at least like `e^{−2R}`.
    Parabolic {
        total: Option<f64>,
        radii: Vec<f64>,
        tail: Vec<f64>,
        slope: Option<f64>,
        passes: bool,
    },
}

pub const SLOPE_TOL: f64 = 0.02;

/// Least-squares `(k, C)` with `values ≈ C·e^{k·R}`.
pub fn exponential_fit(radii: &[f64], values: &[f64]) -> Result<(f64, f64)> {
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let line = fit_line(radii, &logs)?;
    Ok((line.slope, line.intercept.exp()))
}

/// Weight-integral bounds on integer `R` in `range`, according to `status`.
pub fn weight_integral_bounds(
    e: &EndProfile,
    w: &WeightProfile,
    table: &RhoDistanceTable,
    status: EndStatus,
    range: (f64, f64),
) -> Result<WeightIntegralReport> {
    let rho_area = |r: f64| match (w.eval(r), e.area.eval(r)) {
        (Ok(p), Ok(a)) => p * a,
        _ => f64::NAN,
    };
    let radii: Vec<f64> = {
        let (lo, hi) = (range.0.ceil() as i64, range.1.floor() as i64);
        (lo..=hi).map(|k| k as f64).collect()
    };
    if radii.len() < 2 {
        return Err(Error::Parameter(
            "need at least two integer radii in the range".into(),
        ));
    }
    match status {
        EndStatus::Nonparabolic => {
            let mut j = Vec::with_capacity(radii.len());
            for &rr in &radii {
                let (a, b) = (table.inverse(rr)?, table.inverse(rr + 1.0)?);
                j.push(gauss_kronrod(rho_area, a, b, 1e-300, 1e-12)?);
            }
            let (slope, constant) = exponential_fit(&radii, &j)?;
            Ok(WeightIntegralReport::Nonparabolic {
                passes: slope >= 2.0 - SLOPE_TOL,
                radii,
                j,
                slope,
                constant,
            })
        }
        EndStatus::Parabolic => {
            let trace = improper_tail(rho_area, e.r0, &TailPolicy::default())?;
            let total = match trace.verdict {
                crate::profiles::TailVerdict::Converges { value } => Some(value),
                _ => None,
            };
            if total.is_none() {
                return Ok(WeightIntegralReport::Parabolic {
                    total,
                    radii,
                    tail: vec![],
                    slope: None,
                    passes: false,
                });
            }
            let mut tail = Vec::with_capacity(radii.len());
            for &rr in &radii {
                tail.push(integrate_to_infinity(
                    rho_area,
                    table.inverse(rr)?,
                    0.0,
                    1e-12,
                )?);
            }
            let (slope, _) = exponential_fit(&radii, &tail)?;
            Ok(WeightIntegralReport::Parabolic {
                total,
                radii,
                tail,
                slope: Some(slope),
                passes: slope <= -2.0 + SLOPE_TOL,
            })
        }
        EndStatus::Inconclusive => Err(Error::Diagnostics(
            "end classification is inconclusive; no branch applies".into(),
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchwarzSample {
    pub r: f64,
    /// `r_ρ(r)²`.
    pub lhs: f64,
    /// `(∫_{r0}^r ρA)(∫_{r0}^r A^{−1})`.
    pub rhs: f64,
    pub holds: bool,
}

/// Checks `r_ρ(r)² ≤ (∫ρA)(∫A^{−1})` over `[r0, r]`, with `r0` the table base.
pub fn schwarz_check(
    e: &EndProfile,
    w: &WeightProfile,
    table: &RhoDistanceTable,
    radii: &[f64],
) -> Result<Vec<SchwarzSample>> {
    let r0 = table.r0;
    let rho_area = |r: f64| match (w.eval(r), e.area.eval(r)) {
        (Ok(p), Ok(a)) => p * a,
        _ => f64::NAN,
    };
    let inv = |r: f64| e.inv_area.eval(r).unwrap_or(f64::NAN);
    radii
        .iter()
        .map(|&r| {
            let d = table.forward(r)?;
            let lhs = d * d;
            let rhs = gauss_kronrod(rho_area, r0, r, 1e-300, 1e-12)?
                * gauss_kronrod(inv, r0, r, 1e-300, 1e-12)?;
            Ok(SchwarzSample {
                r,
                lhs,
                rhs,
                holds: lhs <= rhs * (1.0 + 1e-10),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::warped::{DomainKind, FiberData, Warping};
    use crate::weights::hardy_weight;
    use approx::assert_abs_diff_eq;

    #[test]
    fn classification_examples() {
        assert_eq!(
            classify_end(&EndProfile::euclidean(2).unwrap())
                .unwrap()
                .status,
            EndStatus::Parabolic
        );
        assert_eq!(
            classify_end(&EndProfile::euclidean(3).unwrap())
                .unwrap()
                .status,
            EndStatus::Nonparabolic
        );
        let h3 = EndProfile::from_model(&WarpedModel::hyperbolic(3).unwrap(), 1.0, "H^3").unwrap();
        assert_eq!(classify_end(&h3).unwrap().status, EndStatus::Nonparabolic);
        assert_eq!(
            classify_end(&EndProfile::cylinder(1.0).unwrap())
                .unwrap()
                .status,
            EndStatus::Parabolic
        );
    }

    #[test]
    fn volume_growth_examples() {
        let r3 = volume_growth_check(&EndProfile::euclidean(3).unwrap(), 1e4).unwrap();
        assert!(r3.passes && r3.consistent);
        assert_abs_diff_eq!(r3.exponent, 3.0, epsilon = 1e-3);
        let h3 = EndProfile::from_model(&WarpedModel::hyperbolic(3).unwrap(), 1.0, "H^3").unwrap();
        assert!(volume_growth_check(&h3, 60.0).unwrap().passes);
        // V(R) = R^{1.5} − 1 from A = 1.5 r^{0.5}.
        let slow = EndProfile::from_area(
            ScalarProfile::analytic(Domain::positive(), |r: f64, k| match k {
                0 => 1.5 * r.sqrt(),
                1 => 0.75 / r.sqrt(),
                _ => -0.375 * r.powf(-1.5),
            }),
            1.0,
            "slow",
        )
        .unwrap();
        let rep = volume_growth_check(&slow, 1e4).unwrap();
        assert!(!rep.passes);
        assert_abs_diff_eq!(rep.exponent, 1.5, epsilon = 1e-3);
        assert_eq!(rep.status, EndStatus::Parabolic);
    }

    #[test]
    fn exact_exponential_fit() {
        let radii: Vec<f64> = (0..6).map(f64::from).collect();
        let j: Vec<f64> = radii.iter().map(|r| 5.0 * (2.0 * r).exp()).collect();
        let (k, c) = exponential_fit(&radii, &j).unwrap();
        assert_abs_diff_eq!(k, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c, 5.0, epsilon = 1e-10);
    }

    #[test]
    fn nonparabolic_branch_on_euclidean_hardy() {
        let m = WarpedModel::new(
            4,
            DomainKind::PoleModel,
            Warping::linear(),
            FiberData::unit_sphere(4),
        )
        .unwrap();
        let e = EndProfile::from_model(&m, 1.0, "R^4").unwrap();
        let w = hardy_weight(4).unwrap();
        let t = RhoDistanceTable::build(&w, 1.0, &GridSpec::log_spaced(1.0, 1e5, 200).unwrap())
            .unwrap();
        match weight_integral_bounds(&e, &w, &t, EndStatus::Nonparabolic, (2.0, 9.0)).unwrap() {
            WeightIntegralReport::Nonparabolic {
                j,
                slope,
                passes,
                radii,
                ..
            } => {
                assert!(passes);
                assert_abs_diff_eq!(slope, 2.0, epsilon = 1e-6);
                // ∫ρA = 2π²∫r dr over [e^R, e^{R+1}].
                let pi2 = std::f64::consts::PI.powi(2);
                for (r, v) in radii.iter().zip(&j) {
                    let exact = pi2 * (1f64.exp().powi(2) - 1.0) * (2.0 * r).exp();
                    assert!((v / exact - 1.0).abs() < 1e-9);
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parabolic_branch_on_cylinder() {
        let e = EndProfile::cylinder(1.0).unwrap();
        let w = WeightProfile::user(ScalarProfile::analytic(
            Domain::new(-0.5, f64::INFINITY).unwrap(),
            |r, _| 0.25 / ((1.0 + r) * (1.0 + r)),
        ));
        let mut nodes = vec![0.0];
        nodes.extend(
            GridSpec::log_spaced(1e-3, 1e8, 300)
                .unwrap()
                .nodes()
                .unwrap(),
        );
        let t = RhoDistanceTable::build_on_nodes(&w, 0.0, nodes).unwrap();
        match weight_integral_bounds(&e, &w, &t, EndStatus::Parabolic, (1.0, 8.0)).unwrap() {
            WeightIntegralReport::Parabolic {
                total,
                tail,
                slope,
                passes,
                radii,
            } => {
                assert!(passes);
                assert_abs_diff_eq!(total.unwrap(), 0.25, epsilon = 1e-8);
                assert_abs_diff_eq!(slope.unwrap(), -2.0, epsilon = 1e-6);
                for (r, v) in radii.iter().zip(&tail) {
                    assert!((v / (0.25 * (-2.0 * r).exp()) - 1.0).abs() < 1e-8);
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn schwarz_inequality_holds() {
        let m = WarpedModel::euclidean(4).unwrap();
        let e = EndProfile::from_model(&m, 1.0, "R^4").unwrap();
        let w = hardy_weight(4).unwrap();
        let t = RhoDistanceTable::build(&w, 1.0, &GridSpec::log_spaced(1.0, 1e3, 100).unwrap())
            .unwrap();
        for s in schwarz_check(&e, &w, &t, &[2.0, 10.0, 500.0]).unwrap() {
            assert!(s.holds, "{s:?}");
        }
    }
}
