//! Structured pass/fail records for identity checks.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;
use crate::quadrature::RadialGrid;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GridInfo {
    pub u_min: f64,
    pub u_max: f64,
    pub n_nodes: usize,
}

impl From<RadialGrid> for GridInfo {
    fn from(g: RadialGrid) -> Self {
        GridInfo {
            u_min: g.u_min(),
            u_max: g.u_max(),
            n_nodes: g.n_nodes(),
        }
    }
}

impl From<&RadialGrid> for GridInfo {
    fn from(g: &RadialGrid) -> Self {
        g.clone().into()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Report {
    pub check: String,
    pub operator_spec: String,
    pub params: BTreeMap<String, Value>,
    #[serde(with = "lossless")]
    pub residuals: BTreeMap<String, f64>,
    #[serde(with = "lossless")]
    pub constants: BTreeMap<String, f64>,
    pub grid: Option<GridInfo>,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(check: impl Into<String>, operator_spec: impl Into<String>, tolerance: f64, pass: bool) -> Self {
        Report {
            check: check.into(),
            operator_spec: operator_spec.into(),
            params: BTreeMap::new(),
            residuals: BTreeMap::new(),
            constants: BTreeMap::new(),
            grid: None,
            tolerance,
            pass,
            notes: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.into(), value.into());
        self
    }

    pub fn residual(mut self, key: &str, value: f64) -> Self {
        self.residuals.insert(key.into(), value);
        self
    }

    pub fn constant(mut self, key: &str, value: f64) -> Self {
        self.constants.insert(key.into(), value);
        self
    }

    pub fn with_grid(mut self, grid: &RadialGrid) -> Self {
        self.grid = Some(grid.into());
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    /// Largest residual, or 0 when there are none.
    pub fn max_residual(&self) -> f64 {
        self.residuals.values().copied().fold(0.0, f64::max)
    }
}

/// Write `bytes` to `path` via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(d) = dir {
        std::fs::create_dir_all(d)?;
    }
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// JSON has no infinities; non-finite values travel as strings.
mod lossless {
    use std::collections::BTreeMap;

    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use serde_json::Value;

    pub fn serialize<S: Serializer>(map: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
        let out: BTreeMap<&String, Value> = map
            .iter()
            .map(|(k, &v)| {
                let val = if v.is_finite() {
                    Value::from(v)
                } else if v.is_nan() {
                    Value::from("nan")
                } else if v > 0.0 {
                    Value::from("inf")
                } else {
                    Value::from("-inf")
                };
                (k, val)
            })
            .collect();
        out.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
        let raw = BTreeMap::<String, Value>::deserialize(d)?;
        raw.into_iter()
            .map(|(k, v)| {
                let x = match &v {
                    Value::Number(n) => n.as_f64().ok_or_else(|| D::Error::custom("bad number"))?,
                    Value::String(s) if s == "inf" => f64::INFINITY,
                    Value::String(s) if s == "-inf" => f64::NEG_INFINITY,
                    Value::String(s) if s == "nan" => f64::NAN,
                    _ => return Err(D::Error::custom(format!("bad value for '{k}'"))),
                };
                Ok((k, x))
            })
            .collect()
    }
}
