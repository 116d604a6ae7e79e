//! Bit-stable serialization of graphs and reports.

use std::str::FromStr;

use serde::Serialize;
use serde_json::Value;

use crate::bratteli::SingularityProfile;
use crate::error::{Error, Result};
use crate::geometry::GrowthTable;
use crate::graph::LabeledGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Dot,
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dot" => Ok(Format::Dot),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Unsupported(format!("unknown format `{other}`"))),
        }
    }
}

impl std::fmt::Display for Format {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Format::Dot => "dot",
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// Rounds to 6 significant digits.
pub fn sig6(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(sig6).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_floats),
        Value::Object(m) => m.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// Pretty JSON with sorted keys and floats rounded to 6 significant digits.
pub fn to_json<T: Serialize + ?Sized>(t: &T) -> Result<String> {
    let mut v = serde_json::to_value(t).map_err(|e| Error::Unsupported(e.to_string()))?;
    round_floats(&mut v);
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::Unsupported(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Artifacts with more than a JSON rendering.
pub trait Export: Serialize {
    fn export(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => to_json(self),
            other => Err(Error::Unsupported(format!("{other} export of {}", self.kind()))),
        }
    }

    fn kind(&self) -> &'static str;
}

impl Export for LabeledGraph {
    fn export(&self, format: Format) -> Result<String> {
        match format {
            Format::Dot => Ok(self.to_dot("graph")),
            Format::Json => to_json(self),
            Format::Csv => {
                let mut s = String::from("source,label,target\n");
                for (x, star) in self.edges.iter().enumerate() {
                    for (l, y) in star.iter().enumerate() {
                        if let Some(y) = y {
                            s.push_str(&format!("{x},{},{y}\n", self.labels[l]));
                        }
                    }
                }
                Ok(s)
            }
        }
    }

    fn kind(&self) -> &'static str {
        "graph"
    }
}

impl Export for GrowthTable {
    fn export(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => Ok(self.to_csv()),
            Format::Json => to_json(self),
            Format::Dot => Err(Error::Unsupported("dot export of a growth table".into())),
        }
    }

    fn kind(&self) -> &'static str {
        "growth table"
    }
}

impl Export for SingularityProfile {
    fn export(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => Ok(self.to_csv()),
            Format::Json => to_json(self),
            Format::Dot => Err(Error::Unsupported("dot export of a singularity profile".into())),
        }
    }

    fn kind(&self) -> &'static str {
        "singularity profile"
    }
}

impl Export for crate::confinement::EngineReport {
    fn kind(&self) -> &'static str {
        "engine report"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_and_order() {
        assert_eq!(sig6(std::f64::consts::PI), 3.14159);
        assert_eq!(sig6(123456789.0), 123457000.0);
        assert_eq!(sig6(-0.000123456789), -0.000123457);
        let v = serde_json::json!({"b": 1.0 / 3.0, "a": [2.5e-7]});
        assert_eq!(to_json(&v).unwrap(), "{\n  \"a\": [\n    2.5e-7\n  ],\n  \"b\": 0.333333\n}\n");
    }

    #[test]
    fn unsupported_pairings() {
        let t = GrowthTable { rows: vec![], centers: 0, base: 0 };
        assert!(t.export(Format::Dot).is_err());
        assert_eq!(t.export(Format::Csv).unwrap(), "radius,max_ball,min_ball,base_ball\n");
        assert!("svg".parse::<Format>().is_err());
    }
}
