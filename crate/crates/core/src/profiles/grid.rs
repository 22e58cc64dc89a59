use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Grading {
    Uniform,
    /// Successive spacings grow by `ratio`.
    Geometric {
        ratio: f64,
    },
}

/// Node layout on `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub node_count: usize,
    pub grading: Grading,
    pub a: f64,
    pub b: f64,
}

impl GridSpec {
    pub fn uniform(a: f64, b: f64, node_count: usize) -> Result<Self> {
        let g = Self {
            node_count,
            grading: Grading::Uniform,
            a,
            b,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn geometric(a: f64, b: f64, node_count: usize, ratio: f64) -> Result<Self> {
        let g = Self {
            node_count,
            grading: Grading::Geometric { ratio },
            a,
            b,
        };
        g.validate()?;
        Ok(g)
    }

    /// Geometric grading whose nodes are equally spaced in `log t`
    /// (requires `0 < a`).
    pub fn log_spaced(a: f64, b: f64, node_count: usize) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "log spacing needs a > 0, got {a}"
            )));
        }
        if node_count < 3 {
            return Err(Error::InvalidGrid(format!("node_count {node_count} < 3")));
        }
        let ratio = (b / a).powf(1.0 / (node_count - 1) as f64);
        Self::geometric(a, b, node_count, ratio)
    }

    pub fn validate(&self) -> Result<()> {
        if self.node_count < 3 {
            return Err(Error::InvalidGrid(format!(
                "node_count {} < 3",
                self.node_count
            )));
        }
        if !(self.a < self.b) || !self.a.is_finite() || !self.b.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "need finite a < b, got [{}, {}]",
                self.a, self.b
            )));
        }
        if let Grading::Geometric { ratio } = self.grading {
            if !(ratio > 0.0 && ratio.is_finite()) {
                return Err(Error::InvalidGrid(format!(
                    "geometric ratio must be positive, got {ratio}"
                )));
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let n = self.node_count;
        let (a, b) = (self.a, self.b);
        let mut xs = Vec::with_capacity(n);
        match self.grading {
            Grading::Uniform => {
                let h = (b - a) / (n - 1) as f64;
                xs.extend((0..n).map(|i| a + h * i as f64));
            }
            Grading::Geometric { ratio } if (ratio - 1.0).abs() < 1e-14 => {
                let h = (b - a) / (n - 1) as f64;
                xs.extend((0..n).map(|i| a + h * i as f64));
            }
            Grading::Geometric { ratio } => {
                let cells = (n - 1) as i32;
                let h0 = (b - a) * (ratio - 1.0) / (ratio.powi(cells) - 1.0);
                let mut x = a;
                let mut h = h0;
                xs.push(a);
                for _ in 1..n {
                    x += h;
                    h *= ratio;
                    xs.push(x);
                }
            }
        }
        xs[n - 1] = b;
        Ok(xs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_specs() {
        assert!(GridSpec::uniform(0.0, 1.0, 2).is_err());
        assert!(GridSpec::uniform(1.0, 1.0, 5).is_err());
        assert!(GridSpec::geometric(0.0, 1.0, 5, -1.0).is_err());
    }

    #[test]
    fn geometric_nodes_span_interval() {
        let g = GridSpec::geometric(0.0, 10.0, 11, 1.2).unwrap();
        let xs = g.nodes().unwrap();
        assert_eq!(xs[0], 0.0);
        assert_eq!(xs[10], 10.0);
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        for w in h.windows(2) {
            assert!((w[1] / w[0] - 1.2).abs() < 1e-9);
        }
    }

    #[test]
    fn log_spaced_is_uniform_in_log() {
        let xs = GridSpec::log_spaced(1.0, 1e4, 5).unwrap().nodes().unwrap();
        for (i, x) in xs.iter().enumerate() {
            assert!((x.log10() - i as f64).abs() < 1e-9);
        }
    }
}
