//! Command configurations, read from JSON with dotted-key overrides.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use crate::blowup::BlowupConfig;
use crate::diagnostics::DiagnoseSweep;
use crate::error::{Error, Result};
use crate::field::{Grid, Point};
use crate::solver::{ContinuationConfig, SolveConfig};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Interval { a: f64, b: f64 },
    Rectangle { origin: Point, extent: [f64; 2] },
    Disk {
        #[serde(default)]
        center: Point,
        radius: f64,
    },
    Annulus {
        #[serde(default)]
        center: Point,
        inner: f64,
        outer: f64,
    },
}

impl Default for DomainSpec {
    fn default() -> Self {
        DomainSpec::Disk { center: [0.0, 0.0], radius: 1.0 }
    }
}

impl DomainSpec {
    pub fn build(&self, h: f64) -> Result<Arc<Grid>> {
        let g = match *self {
            DomainSpec::Interval { a, b } => {
                let n = ((b - a) / h).round();
                if !(n.is_finite() && n >= 2.0) {
                    return Err(Error::InvalidInput(format!("domain: interval [{a}, {b}] is too short for h = {h}")));
                }
                Grid::interval(a, b, n as usize + 1)?
            }
            DomainSpec::Rectangle { origin, extent } => Grid::rectangle(origin, extent, h)?,
            DomainSpec::Disk { center, radius } => Grid::disk(center, radius, h)?,
            DomainSpec::Annulus { center, inner, outer } => Grid::annulus(center, inner, outer, h)?,
        };
        Ok(Arc::new(g))
    }
}

/// Dirichlet data for `solve`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundarySpec {
    /// The homogeneous radial solution centered at `center`.
    RadialExact {
        #[serde(default)]
        center: Point,
    },
    Constant { value: f64 },
    /// Values taken from a field file on the same grid.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GuessSpec {
    /// Discrete harmonic extension of the boundary data.
    #[default]
    Harmonic,
    Constant { value: f64 },
    File { path: PathBuf },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveJob {
    pub domain: DomainSpec,
    pub h: f64,
    pub p: f64,
    pub boundary: BoundarySpec,
    #[serde(default)]
    pub guess: GuessSpec,
    #[serde(default)]
    pub solver: SolveConfig,
    pub output: PathBuf,
    /// Where the last Newton iterate goes on failure; defaults to
    /// `<output>.last.json`.
    #[serde(default)]
    pub last_iterate: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinueJob {
    #[serde(default)]
    pub domain: DomainSpec,
    pub h: f64,
    pub p: f64,
    #[serde(default)]
    pub solver: SolveConfig,
    #[serde(default)]
    pub continuation: ContinuationConfig,
    pub branch_csv: PathBuf,
    /// Directory receiving one `u` and one `v` field file per snapshot.
    #[serde(default)]
    pub snapshot_dir: Option<PathBuf>,
    /// Fold estimates as JSON.
    #[serde(default)]
    pub summary_json: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseJob {
    pub field: PathBuf,
    #[serde(default)]
    pub sweep: DiagnoseSweep,
    pub report_csv: PathBuf,
    pub verdicts_json: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlowupJob {
    pub field: PathBuf,
    pub center: Point,
    #[serde(default)]
    pub blowup: BlowupConfig,
    pub output_json: PathBuf,
    pub profile_json: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuptureJob {
    pub field: PathBuf,
    /// Strictly decreasing thresholds.
    pub taus: Vec<f64>,
    /// Fixed box sizes for counting the mask of the smallest threshold.
    #[serde(default)]
    pub scales: Option<Vec<f64>>,
    pub components_csv: PathBuf,
    pub verdict_json: PathBuf,
}

fn bad(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::InvalidInput(format!("{field}: {msg}"))
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if !(p.is_finite() && p > 1.0) {
        return Err(bad("p", format!("must exceed 1, got {p}")));
    }
    Ok(())
}

pub(crate) fn check_h(h: f64) -> Result<()> {
    if !(h.is_finite() && h > 0.0) {
        return Err(bad("h", format!("must be positive, got {h}")));
    }
    Ok(())
}

/// Prefixes errors with the name of the config section they came from.
pub(crate) fn in_section<T>(section: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::InvalidInput(m) | Error::InvalidGrid(m) => bad(section, m),
        other => other,
    })
}

/// Sets `key` (dotted path) in a JSON object. The value is parsed as JSON,
/// falling back to a plain string.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::InvalidInput(format!("--set expects key=value, got '{assignment}'")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Error::InvalidInput(format!("--set: malformed key '{key}'")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::InvalidInput(format!("--set {key}: '{}' is not an object", parts[..i].join("."))))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("loop returns on the last key part")
}

/// Reads a config file, applies overrides and deserializes it. Relative paths
/// inside the config stay relative to the working directory.
pub fn load<T: DeserializeOwned>(path: &Path, overrides: &[String]) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read config {}: {e}", path.display())))?;
    let mut doc: Value = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidInput(format!("config {} is not valid JSON: {e}", path.display())))?;
    if !doc.is_object() {
        return Err(Error::InvalidInput(format!("config {} must be a JSON object", path.display())));
    }
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    serde_json::from_value(doc).map_err(|e| Error::InvalidInput(format!("config {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn overrides_create_nested_keys() {
        let mut doc = json!({"p": 2.0});
        apply_override(&mut doc, "solver.max_newton_iters=3").unwrap();
        apply_override(&mut doc, "output=out.json").unwrap();
        apply_override(&mut doc, "p=3").unwrap();
        assert_eq!(doc, json!({"p": 3, "solver": {"max_newton_iters": 3}, "output": "out.json"}));
        assert!(apply_override(&mut doc, "p.x=1").is_err());
        assert!(apply_override(&mut doc, "novalue").is_err());
    }

    #[test]
    fn domains_reject_unknown_keys() {
        let d: DomainSpec = serde_json::from_value(json!({"kind": "annulus", "inner": 0.2, "outer": 1.0})).unwrap();
        assert_eq!(d, DomainSpec::Annulus { center: [0.0, 0.0], inner: 0.2, outer: 1.0 });
        let e = serde_json::from_value::<DomainSpec>(json!({"kind": "disk", "radius": 1.0, "radus": 2.0})).unwrap_err();
        assert!(e.to_string().contains("radus"), "{e}");
    }

    #[test]
    fn interval_node_count_follows_h() {
        let g = DomainSpec::Interval { a: 0.0, b: 1.0 }.build(0.125).unwrap();
        assert_eq!(g.shape(), &[9]);
    }
}
