use std::path::Path;

use super::ScalarProfile;
use crate::error::{Error, Result};

/// Parses two-column `t,value` CSV. A non-numeric first row is treated as a
/// header; blank lines and `#` comments are skipped.
pub fn parse_samples_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut ts = Vec::new();
    let mut vs = Vec::new();
    let mut seen_row = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 2 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 2 columns, found {}", cols.len()),
            });
        }
        let parsed = (cols[0].parse::<f64>(), cols[1].parse::<f64>());
        match parsed {
            (Ok(t), Ok(v)) => {
                if let Some(&last) = ts.last() {
                    if !(t > last) {
                        return Err(Error::Parse {
                            line: line_no,
                            message: format!("t must be strictly increasing ({last} then {t})"),
                        });
                    }
                }
                ts.push(t);
                vs.push(v);
            }
            _ if !seen_row => {}
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("non-numeric row '{line}'"),
                });
            }
        }
        seen_row = true;
    }
    if ts.len() < 2 {
        return Err(Error::Parse {
            line: 0,
            message: "need at least two samples".into(),
        });
    }
    Ok((ts, vs))
}

pub fn read_samples_csv(path: &Path) -> Result<ScalarProfile> {
    let text = std::fs::read_to_string(path)?;
    let (ts, vs) = parse_samples_csv(&text)?;
    ScalarProfile::from_samples(&ts, &vs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_optional() {
        let (t, v) = parse_samples_csv("t,value\n0,1\n1,2\n").unwrap();
        assert_eq!(t, vec![0.0, 1.0]);
        assert_eq!(v, vec![1.0, 2.0]);
        let (t, _) = parse_samples_csv("0,1\n1,2\n2,5\n").unwrap();
        assert_eq!(t.len(), 3);
    }

    #[test]
    fn reports_offending_line() {
        let err = parse_samples_csv("t,v\n0,1\n0,2\n").unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                line: 3,
                message: "t must be strictly increasing (0 then 0)".into()
            }
        );
        let err = parse_samples_csv("0,1\nx,2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }
}
