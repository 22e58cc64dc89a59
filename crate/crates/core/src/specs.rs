//! JSON specs for models, weights and ends.
//!
//! Every error carries the 1-based line of the offending entry.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::ends::EndProfile;
use crate::error::{Error, Result};
use crate::profiles::{read_samples_csv, Domain, ScalarProfile};
use crate::warped::{DomainKind, FiberData, WarpedModel, Warping};
use crate::weights::{
    cartan_hadamard_weight, green_weight_model, hardy_weight, minimal_weight, WeightProfile,
};

/// Source text of a spec, kept for error locations.
struct Source<'a> {
    text: &'a str,
    base: PathBuf,
}

impl Source<'_> {
    /// Line of the first occurrence of `"key"`, or 1.
    fn line_of(&self, key: &str) -> usize {
        let needle = format!("\"{key}\"");
        self.text
            .lines()
            .position(|l| l.contains(&needle))
            .map_or(1, |i| i + 1)
    }

    fn err(&self, key: &str, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line_of(key),
            message: message.into(),
        }
    }

    fn path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    fn csv(&self, key: &str, p: &Path) -> Result<ScalarProfile> {
        read_samples_csv(&self.path(p)).map_err(|e| self.err(key, format!("{}: {e}", p.display())))
    }
}

fn parse_json<'de, T: Deserialize<'de>>(text: &'de str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line().max(1),
        message: e.to_string(),
    })
}

fn read(path: &Path) -> Result<(String, PathBuf)> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((text, base))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSpec {
    n: usize,
    #[serde(default)]
    domain: Option<DomainSpec>,
    eta: EtaSpec,
    #[serde(default)]
    fiber: Option<FiberSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainSpec {
    kind: String,
    #[serde(default)]
    t_lo: Option<f64>,
    #[serde(default)]
    t_hi: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EtaSpec {
    #[serde(default)]
    builtin: Option<String>,
    #[serde(default)]
    a: Option<f64>,
    #[serde(default)]
    c: Option<f64>,
    #[serde(default)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FiberSpec {
    #[serde(rename = "C_N")]
    ricci_lower: f64,
    #[serde(rename = "V_N")]
    volume: f64,
    #[serde(rename = "K_bar", default)]
    sectional: Option<f64>,
    #[serde(default)]
    ric_bar: Option<f64>,
    #[serde(default)]
    compact: bool,
}

/// Parses a model spec; relative CSV paths resolve against `base`.
pub fn parse_model(text: &str, base: &Path) -> Result<WarpedModel> {
    let src = Source {
        text,
        base: base.to_path_buf(),
    };
    let spec: ModelSpec = parse_json(text)?;
    build_model(&src, spec)
}

pub fn load_model(path: &Path) -> Result<WarpedModel> {
    let (text, base) = read(path)?;
    parse_model(&text, &base)
}

fn build_model(src: &Source, spec: ModelSpec) -> Result<WarpedModel> {
    if spec.n < 3 {
        return Err(src.err("n", format!("dimension n = {} must be at least 3", spec.n)));
    }
    let kind = match spec.domain.as_ref().map(|d| d.kind.as_str()) {
        None | Some("pole") => DomainKind::PoleModel,
        Some("full_line") => DomainKind::FullLine,
        Some(other) => {
            return Err(src.err(
                "kind",
                format!("unknown domain kind {other:?}; expected \"pole\" or \"full_line\""),
            ))
        }
    };
    let e = &spec.eta;
    let warp = match (&e.builtin, &e.csv) {
        (Some(_), Some(_)) => {
            return Err(src.err("eta", "eta takes either \"builtin\" or \"csv\", not both"))
        }
        (None, None) => return Err(src.err("eta", "eta needs \"builtin\" or \"csv\"")),
        (None, Some(p)) => Warping::Direct(src.csv("csv", p)?),
        (Some(name), None) => match name.as_str() {
            "linear" => Warping::linear(),
            "sinh" => Warping::sinh(),
            "cosh" => Warping::cosh(),
            "exp" => {
                Warping::exponential(e.a.ok_or_else(|| src.err("builtin", "exp needs rate \"a\""))?)
            }
            "constant" => {
                Warping::constant(e.c.ok_or_else(|| src.err("builtin", "constant needs \"c\""))?)
                    .map_err(|err| src.err("c", err.to_string()))?
            }
            other => {
                return Err(src.err(
                    "builtin",
                    format!(
                        "unknown warping {other:?}; expected linear, sinh, cosh, exp or constant"
                    ),
                ))
            }
        },
    };
    let warp = match spec.domain.as_ref().map(|d| (d.t_lo, d.t_hi)) {
        Some((lo, hi)) if lo.is_some() || hi.is_some() => {
            let d = warp.domain();
            let window = Domain::new(lo.unwrap_or(d.lo), hi.unwrap_or(d.hi))
                .map_err(|err| src.err("domain", err.to_string()))?;
            let restrict = |p: &ScalarProfile| {
                p.restrict(window)
                    .map_err(|err| src.err("domain", err.to_string()))
            };
            match &warp {
                Warping::Direct(p) => Warping::Direct(restrict(p)?),
                Warping::Log(p) => Warping::Log(restrict(p)?),
            }
        }
        _ => warp,
    };
    let fiber = match spec.fiber {
        Some(f) => FiberData {
            ricci_lower: f.ricci_lower,
            volume: f.volume,
            sectional: f.sectional,
            ricci_value: f.ric_bar,
            compact: f.compact,
        },
        None if kind == DomainKind::PoleModel => FiberData::unit_sphere(spec.n),
        None => return Err(src.err("domain", "full-line models need an explicit \"fiber\"")),
    };
    WarpedModel::new(spec.n, kind, warp, fiber).map_err(|err| src.err("eta", err.to_string()))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightSpec {
    source: String,
    #[serde(default)]
    n: Option<usize>,
    #[serde(default)]
    value: Option<f64>,
    #[serde(default)]
    csv: Option<PathBuf>,
    #[serde(default)]
    scale: Option<f64>,
}

/// Parses a weight spec. `green` and `natural` need the model.
pub fn parse_weight(text: &str, base: &Path, model: Option<&WarpedModel>) -> Result<WeightProfile> {
    let src = Source {
        text,
        base: base.to_path_buf(),
    };
    let spec: WeightSpec = parse_json(text)?;
    let dim = || {
        spec.n
            .or_else(|| model.map(WarpedModel::n))
            .ok_or_else(|| src.err("source", format!("{} needs \"n\" or a model", spec.source)))
    };
    let need_model =
        || model.ok_or_else(|| src.err("source", format!("{} needs a model", spec.source)));
    let at = |e: Error| src.err("source", e.to_string());
    let w = match spec.source.as_str() {
        "hardy" => hardy_weight(dim()?).map_err(at)?,
        "cartan_hadamard" => cartan_hadamard_weight(dim()?).map_err(at)?,
        "green" => green_weight_model(need_model()?).map_err(at)?,
        "natural" => need_model()?.natural_weight(),
        "minimal" => {
            let p = spec.csv.as_ref().ok_or_else(|| src.err("source", "minimal needs \"csv\" with r̄ samples"))?;
            minimal_weight(dim()?, &src.csv("csv", p)?).map_err(at)?
        }
        "constant" => {
            let v = spec.value.ok_or_else(|| src.err("source", "constant needs \"value\""))?;
            WeightProfile::user(ScalarProfile::constant(Domain::real_line(), v))
        }
        "csv" => {
            let p = spec.csv.as_ref().ok_or_else(|| src.err("source", "csv needs \"csv\""))?;
            WeightProfile::user(src.csv("csv", p)?)
        }
        other => {
            return Err(src.err(
                "source",
                format!("unknown weight source {other:?}; expected hardy, cartan_hadamard, green, natural, minimal, constant or csv"),
            ))
        }
    };
    match spec.scale {
        Some(s) if !(s > 0.0) => Err(src.err("scale", format!("scale must be positive, got {s}"))),
        Some(s) => Ok(w.scaled(s)),
        None => Ok(w),
    }
}

pub fn load_weight(path: &Path, model: Option<&WarpedModel>) -> Result<WeightProfile> {
    let (text, base) = read(path)?;
    parse_weight(&text, &base, model)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EndSpec {
    #[serde(rename = "A")]
    area: AreaSpec,
    #[serde(default)]
    r0: Option<f64>,
    #[serde(default)]
    label: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AreaSpec {
    #[serde(default)]
    builtin: Option<String>,
    #[serde(default)]
    n: Option<usize>,
    #[serde(default)]
    volume: Option<f64>,
    #[serde(default)]
    csv: Option<PathBuf>,
}

pub fn parse_end(text: &str, base: &Path) -> Result<EndProfile> {
    let src = Source {
        text,
        base: base.to_path_buf(),
    };
    let spec: EndSpec = parse_json(text)?;
    let a = &spec.area;
    let at = |e: Error| src.err("A", e.to_string());
    let need_n = || {
        a.n.ok_or_else(|| src.err("builtin", "builtin area needs \"n\""))
    };
    let mut end = match (&a.builtin, &a.csv) {
        (Some(_), Some(_)) => {
            return Err(src.err("A", "A takes either \"builtin\" or \"csv\", not both"))
        }
        (None, None) => return Err(src.err("A", "A needs \"builtin\" or \"csv\"")),
        (None, Some(p)) => {
            let area = src.csv("csv", p)?;
            let r0 = spec.r0.unwrap_or(area.domain().lo);
            EndProfile::from_area(area, r0, "csv").map_err(at)?
        }
        (Some(name), None) => match name.as_str() {
            "euclidean" => EndProfile::euclidean(need_n()?).map_err(at)?,
            "hyperbolic" => {
                let m = WarpedModel::hyperbolic(need_n()?).map_err(at)?;
                EndProfile::from_model(&m, 1.0, format!("H^{}", m.n())).map_err(at)?
            }
            "cylinder" => EndProfile::cylinder(a.volume.unwrap_or(1.0)).map_err(at)?,
            other => {
                return Err(src.err(
                    "builtin",
                    format!("unknown area {other:?}; expected euclidean, hyperbolic or cylinder"),
                ))
            }
        },
    };
    if let Some(r0) = spec.r0 {
        end.area
            .domain()
            .check(r0)
            .map_err(|e| src.err("r0", e.to_string()))?;
        end.r0 = r0;
    }
    if let Some(label) = spec.label {
        end.label = label;
    }
    Ok(end)
}

pub fn load_end(path: &Path) -> Result<EndProfile> {
    let (text, base) = read(path)?;
    parse_end(&text, &base)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn here() -> &'static Path {
        Path::new(".")
    }

    #[test]
    fn parses_models() {
        let m = parse_model(r#"{"n": 4, "eta": {"builtin": "sinh"}}"#, here()).unwrap();
        assert!((m.sectional_radial(2.0).unwrap() + 1.0).abs() < 1e-12);
        let text = r#"{
  "n": 5,
  "domain": {"kind": "full_line", "t_lo": -3, "t_hi": 3},
  "eta": {"builtin": "exp", "a": 0.5},
  "fiber": {"C_N": 0, "V_N": 2.0, "ric_bar": 0}
}"#;
        let m = parse_model(text, here()).unwrap();
        assert_eq!(m.domain(), Domain::new(-3.0, 3.0).unwrap());
        assert!((m.area(0.0).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn model_errors_name_the_line() {
        let text = "{\n  \"n\": 4,\n  \"eta\": {\"builtin\": \"tanh\"}\n}";
        match parse_model(text, here()) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("tanh"));
            }
            other => panic!("{other:?}"),
        }
        match parse_model(
            "{\n  \"n\": 4,\n  \"eta\": {\"builtin\": \"sinh\",}\n}",
            here(),
        ) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse_model("{\n\"n\": 2,\n\"eta\": {\"builtin\": \"linear\"}}", here()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_model("{\"n\": 4, \"eta\": {}, \"extra\": 1}", here()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn parses_weights() {
        let w = parse_weight(r#"{"source": "hardy", "n": 4, "scale": 1.2}"#, here(), None).unwrap();
        assert!((w.eval(2.0).unwrap() - 1.2 * 0.25).abs() < 1e-15);
        let m = WarpedModel::euclidean(3).unwrap();
        let g = parse_weight(r#"{"source": "green"}"#, here(), Some(&m)).unwrap();
        assert!((g.eval(1.0).unwrap() - 0.25).abs() < 1e-9);
        assert!(matches!(
            parse_weight(r#"{"source": "green"}"#, here(), None),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn parses_ends_and_csv() {
        let dir = std::env::temp_dir().join(format!("rhokit-specs-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let samples: String = (1..=50)
            .map(|i| format!("{i},{}\n", std::f64::consts::TAU * i as f64))
            .collect();
        std::fs::write(dir.join("area.csv"), format!("r,A\n{samples}")).unwrap();
        std::fs::write(
            dir.join("end.json"),
            r#"{"A": {"csv": "area.csv"}, "r0": 2}"#,
        )
        .unwrap();
        let e = load_end(&dir.join("end.json")).unwrap();
        assert_eq!(e.r0, 2.0);
        assert!((e.area.eval(10.0).unwrap() - 62.83185307179586).abs() < 1e-9);
        let r2 = parse_end(r#"{"A": {"builtin": "euclidean", "n": 2}}"#, here()).unwrap();
        assert_eq!(r2.label, "R^2");
        std::fs::remove_dir_all(dir).ok();
    }
}
