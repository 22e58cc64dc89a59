use crate::error::{Error, Result};

fn check_abscissae(ts: &[f64], len: usize, what: &str) -> Result<()> {
    if ts.len() < 2 {
        return Err(Error::InvalidProfile(format!(
            "{what}: need at least 2 samples"
        )));
    }
    if ts.len() != len {
        return Err(Error::InvalidProfile(format!(
            "{what}: column lengths differ"
        )));
    }
    for w in ts.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidProfile(format!(
                "{what}: abscissae must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

fn segment(ts: &[f64], t: f64) -> usize {
    let k = ts.partition_point(|&x| x <= t);
    k.clamp(1, ts.len() - 1) - 1
}

/// Shape-preserving piecewise cubic (Fritsch–Carlson slopes).
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    ts: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(ts: &[f64], ys: &[f64]) -> Result<Self> {
        check_abscissae(ts, ys.len(), "sampled profile")?;
        if ys.iter().any(|y| !y.is_finite()) {
            return Err(Error::InvalidProfile(
                "sampled profile: non-finite value".into(),
            ));
        }
        let n = ts.len();
        let h: Vec<f64> = ts.windows(2).map(|w| w[1] - w[0]).collect();
        let d: Vec<f64> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / h[k]).collect();
        let mut m = vec![0.0; n];
        if n == 2 {
            m[0] = d[0];
            m[1] = d[0];
        } else {
            for k in 1..n - 1 {
                if d[k - 1] * d[k] > 0.0 {
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    m[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k]);
                }
            }
            m[0] = end_slope(h[0], h[1], d[0], d[1]);
            m[n - 1] = end_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
        }
        Ok(Self {
            ts: ts.to_vec(),
            ys: ys.to_vec(),
            slopes: m,
        })
    }

    pub fn eval(&self, t: f64, order: usize) -> f64 {
        let k = segment(&self.ts, t);
        let h = self.ts[k + 1] - self.ts[k];
        let s = (t - self.ts[k]) / h;
        let (y0, y1) = (self.ys[k], self.ys[k + 1]);
        let (m0, m1) = (self.slopes[k] * h, self.slopes[k + 1] * h);
        match order {
            0 => {
                let s2 = s * s;
                let s3 = s2 * s;
                (2.0 * s3 - 3.0 * s2 + 1.0) * y0
                    + (s3 - 2.0 * s2 + s) * m0
                    + (-2.0 * s3 + 3.0 * s2) * y1
                    + (s3 - s2) * m1
            }
            1 => {
                let s2 = s * s;
                ((6.0 * s2 - 6.0 * s) * y0
                    + (3.0 * s2 - 4.0 * s + 1.0) * m0
                    + (-6.0 * s2 + 6.0 * s) * y1
                    + (3.0 * s2 - 2.0 * s) * m1)
                    / h
            }
            2 => {
                ((12.0 * s - 6.0) * y0
                    + (6.0 * s - 4.0) * m0
                    + (6.0 - 12.0 * s) * y1
                    + (6.0 * s - 2.0) * m1)
                    / (h * h)
            }
            _ => f64::NAN,
        }
    }
}

// Three-point end slope, limited to preserve shape.
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

/// Piecewise quintic matching value, first and second derivative at each node.
#[derive(Debug, Clone)]
pub struct QuinticHermite {
    ts: Vec<f64>,
    coeffs: Vec<[f64; 6]>,
}

impl QuinticHermite {
    pub fn new(ts: &[f64], f: &[f64], df: &[f64], ddf: &[f64]) -> Result<Self> {
        check_abscissae(ts, f.len(), "hermite profile")?;
        if df.len() != f.len() || ddf.len() != f.len() {
            return Err(Error::InvalidProfile(
                "hermite profile: column lengths differ".into(),
            ));
        }
        let coeffs = (0..ts.len() - 1)
            .map(|k| {
                let h = ts[k + 1] - ts[k];
                let (p0, p1) = (f[k], f[k + 1]);
                let (v0, v1) = (df[k] * h, df[k + 1] * h);
                let (a0, a1) = (ddf[k] * h * h, ddf[k + 1] * h * h);
                let dp = p1 - p0;
                [
                    p0,
                    v0,
                    0.5 * a0,
                    10.0 * dp - 6.0 * v0 - 4.0 * v1 - 1.5 * a0 + 0.5 * a1,
                    -15.0 * dp + 8.0 * v0 + 7.0 * v1 + 1.5 * a0 - a1,
                    6.0 * dp - 3.0 * v0 - 3.0 * v1 - 0.5 * a0 + 0.5 * a1,
                ]
            })
            .collect();
        Ok(Self {
            ts: ts.to_vec(),
            coeffs,
        })
    }

    pub fn eval(&self, t: f64, order: usize) -> f64 {
        let k = segment(&self.ts, t);
        let h = self.ts[k + 1] - self.ts[k];
        let s = (t - self.ts[k]) / h;
        let c = &self.coeffs[k];
        match order {
            0 => c[0] + s * (c[1] + s * (c[2] + s * (c[3] + s * (c[4] + s * c[5])))),
            1 => {
                (c[1] + s * (2.0 * c[2] + s * (3.0 * c[3] + s * (4.0 * c[4] + s * 5.0 * c[5])))) / h
            }
            2 => (2.0 * c[2] + s * (6.0 * c[3] + s * (12.0 * c[4] + s * 20.0 * c[5]))) / (h * h),
            _ => f64::NAN,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_interpolates_nodes_and_stays_monotone() {
        let ts = [0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = [0.0, 0.1, 0.2, 3.0, 3.1];
        let c = MonotoneCubic::new(&ts, &ys).unwrap();
        for (t, y) in ts.iter().zip(ys) {
            assert_eq!(c.eval(*t, 0), y);
        }
        let mut prev = c.eval(0.0, 0);
        for i in 1..=400 {
            let v = c.eval(i as f64 * 0.01, 0);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn cubic_rejects_unsorted() {
        assert!(MonotoneCubic::new(&[0.0, 0.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn quintic_reproduces_quintic_polynomials() {
        let p = |t: f64| {
            [
                t.powi(5) - 2.0 * t * t,
                5.0 * t.powi(4) - 4.0 * t,
                20.0 * t.powi(3) - 4.0,
            ]
        };
        let ts = [-1.0, 0.3, 2.0];
        let f: Vec<f64> = ts.iter().map(|&t| p(t)[0]).collect();
        let df: Vec<f64> = ts.iter().map(|&t| p(t)[1]).collect();
        let ddf: Vec<f64> = ts.iter().map(|&t| p(t)[2]).collect();
        let q = QuinticHermite::new(&ts, &f, &df, &ddf).unwrap();
        for i in 0..=30 {
            let t = -1.0 + 0.1 * i as f64;
            for k in 0..3 {
                assert!((q.eval(t, k) - p(t)[k]).abs() < 1e-10, "t={t} k={k}");
            }
        }
    }
}
