//! Symmetric tridiagonal pencils `(S, M)` with `M` positive definite.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i+1`.
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn zeros(m: usize) -> Self {
        Self {
            diag: vec![0.0; m],
            off: vec![0.0; m.saturating_sub(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let m = self.len();
        (0..m)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < m {
                    v += self.off[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    /// `self + alpha·other`.
    pub fn axpy(&self, alpha: f64, other: &SymTridiag) -> SymTridiag {
        SymTridiag {
            diag: self
                .diag
                .iter()
                .zip(&other.diag)
                .map(|(a, b)| a + alpha * b)
                .collect(),
            off: self
                .off
                .iter()
                .zip(&other.off)
                .map(|(a, b)| a + alpha * b)
                .collect(),
        }
    }

    pub fn norm_inf(&self) -> f64 {
        let m = self.len();
        (0..m)
            .map(|i| {
                let mut s = self.diag[i].abs();
                if i > 0 {
                    s += self.off[i - 1].abs();
                }
                if i + 1 < m {
                    s += self.off[i].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.diag.iter().chain(&self.off).all(|v| v.is_finite())
    }
}

/// Number of eigenvalues of `S v = λ M v` below `sigma`: the count of
/// negative pivots in `LDLᵀ` of `S − σM`.
pub fn count_below(s: &SymTridiag, m: &SymTridiag, sigma: f64) -> usize {
    let mut count = 0;
    let mut d = 0.0;
    for i in 0..s.len() {
        let a = s.diag[i] - sigma * m.diag[i];
        d = if i == 0 {
            a
        } else {
            let b = s.off[i - 1] - sigma * m.off[i - 1];
            a - b * b / d
        };
        if d == 0.0 {
            d = -f64::EPSILON * a.abs().max(f64::MIN_POSITIVE);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Bracket `[lo, hi]` of the smallest eigenvalue with `hi − lo ≤ tol·max(1, |λ|)`.
pub fn smallest_eigenvalue(s: &SymTridiag, m: &SymTridiag, tol: f64) -> Result<(f64, f64)> {
    if s.is_empty() {
        return Err(Error::Solver("empty pencil".into()));
    }
    let mut lo = -1.0;
    let mut guard = 0;
    while count_below(s, m, lo) > 0 {
        lo *= 2.0;
        guard += 1;
        if guard > 2000 || !lo.is_finite() {
            return Err(Error::Solver(
                "no lower bracket for the smallest eigenvalue".into(),
            ));
        }
    }
    let mut hi = 1.0;
    guard = 0;
    while count_below(s, m, hi) == 0 {
        hi *= 2.0;
        guard += 1;
        if guard > 2000 || !hi.is_finite() {
            return Err(Error::Solver(
                "no upper bracket for the smallest eigenvalue".into(),
            ));
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol * mid.abs().max(1.0) || mid <= lo || mid >= hi {
            return Ok((lo, hi));
        }
        if count_below(s, m, mid) == 0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Solver("bisection did not converge".into()))
}

/// Solves `a·x = rhs` for positive definite tridiagonal `a`.
pub fn solve_spd(a: &SymTridiag, rhs: &[f64]) -> Result<Vec<f64>> {
    let m = a.len();
    let mut d = vec![0.0; m];
    let mut l = vec![0.0; m.saturating_sub(1)];
    for i in 0..m {
        d[i] = a.diag[i]
            - if i > 0 {
                l[i - 1] * l[i - 1] * d[i - 1]
            } else {
                0.0
            };
        if !(d[i] > 0.0) {
            return Err(Error::Solver(format!(
                "non-positive pivot {} at row {i}",
                d[i]
            )));
        }
        if i + 1 < m {
            l[i] = a.off[i] / d[i];
        }
    }
    let mut y = rhs.to_vec();
    for i in 1..m {
        y[i] -= l[i - 1] * y[i - 1];
    }
    for i in 0..m {
        y[i] /= d[i];
    }
    for i in (0..m.saturating_sub(1)).rev() {
        y[i] -= l[i] * y[i + 1];
    }
    Ok(y)
}

/// Eigenvector for an eigenvalue just above `shift`, where `S − shift·M`
/// is positive definite.
pub fn inverse_iteration(
    s: &SymTridiag,
    m: &SymTridiag,
    shift: f64,
    iterations: usize,
) -> Result<Vec<f64>> {
    let mut sigma = shift;
    let mut shifted = s.axpy(-sigma, m);
    let mut attempts = 0;
    let mut x = vec![1.0; s.len()];
    let mut it = 0;
    while it < iterations {
        let rhs = m.matvec(&x);
        match solve_spd(&shifted, &rhs) {
            Ok(y) => {
                let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                if !(norm > 0.0 && norm.is_finite()) {
                    return Err(Error::Solver(
                        "inverse iteration produced a degenerate vector".into(),
                    ));
                }
                x = y.into_iter().map(|v| v / norm).collect();
                it += 1;
            }
            Err(_) if attempts < 20 => {
                // Rounding put the shift on the wrong side; move it down.
                attempts += 1;
                sigma -= 1e-12 * 10f64.powi(attempts) * sigma.abs().max(1.0);
                shifted = s.axpy(-sigma, m);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(m: usize) -> (SymTridiag, SymTridiag) {
        let s = SymTridiag {
            diag: vec![2.0; m],
            off: vec![-1.0; m - 1],
        };
        let mut id = SymTridiag::zeros(m);
        id.diag.iter_mut().for_each(|d| *d = 1.0);
        (s, id)
    }

    #[test]
    fn standard_problem_eigenvalue() {
        let m = 50;
        let (s, id) = laplacian(m);
        let (lo, hi) = smallest_eigenvalue(&s, &id, 1e-14).unwrap();
        let exact = 2.0 - 2.0 * (std::f64::consts::PI / (m as f64 + 1.0)).cos();
        assert!(
            lo <= exact + 1e-14 && hi >= exact - 1e-14,
            "{lo} {hi} {exact}"
        );
        assert_eq!(count_below(&s, &id, 4.1), m);
    }

    #[test]
    fn inverse_iteration_recovers_sine() {
        let m = 30;
        let (s, id) = laplacian(m);
        let (lo, _) = smallest_eigenvalue(&s, &id, 1e-14).unwrap();
        let v = inverse_iteration(&s, &id, lo, 4).unwrap();
        let h = std::f64::consts::PI / (m as f64 + 1.0);
        let sine: Vec<f64> = (1..=m).map(|i| (i as f64 * h).sin()).collect();
        let ns = sine.iter().map(|x| x * x).sum::<f64>().sqrt();
        let dot: f64 = v.iter().zip(&sine).map(|(a, b)| a * b / ns).sum();
        assert!((dot.abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spd_solver() {
        let (s, _) = laplacian(5);
        let x = solve_spd(&s, &[1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }
}
