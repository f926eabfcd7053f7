//! Field file format: one JSON document per field.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::sync::Arc;

use serde_json::{Map, Value};

use super::grid::{DomainKind, Grid};
use super::scalar::ScalarField;
use crate::error::{Error, Result};

pub const FIELD_FORMAT: &str = "rupture-lab-field/1";

/// Formats a float with 17 significant digits, which round-trips every `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        // Keep the sign of negative zero.
        return if v.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    format!("{v:.16e}")
}

fn push_array<T>(out: &mut String, items: &[T], f: impl Fn(&T) -> String) {
    out.push('[');
    for (i, v) in items.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&f(v));
    }
    out.push(']');
}

/// Serializes a field. Key order and float formatting are fixed, so equal
/// fields produce identical bytes.
pub fn field_to_json(f: &ScalarField) -> String {
    let g = f.grid();
    let mut out = String::with_capacity(48 * g.len() + 256);
    write!(out, "{{\"format\":\"{FIELD_FORMAT}\",\"dim\":{},\"shape\":", g.dim()).unwrap();
    push_array(&mut out, g.shape(), |n| n.to_string());
    write!(out, ",\"h\":{},\"origin\":", fmt_f64(g.h())).unwrap();
    push_array(&mut out, g.origin(), |v| fmt_f64(*v));
    write!(out, ",\"domain_kind\":\"{}\",\"p\":{},\"values\":", g.kind().as_str(), fmt_f64(f.p())).unwrap();
    push_array(&mut out, f.values(), |v| fmt_f64(*v));
    out.push_str(",\"interior_mask\":");
    push_array(&mut out, g.interior_mask(), |&b| if b { "1".into() } else { "0".into() });
    out.push_str("}\n");
    out
}

fn key<'a>(obj: &'a Map<String, Value>, name: &str) -> Result<&'a Value> {
    obj.get(name).ok_or_else(|| Error::Format(format!("missing key \"{name}\"")))
}

fn bad(name: &str, what: &str) -> Error {
    Error::Format(format!("key \"{name}\": {what}"))
}

fn as_f64(obj: &Map<String, Value>, name: &str) -> Result<f64> {
    key(obj, name)?.as_f64().ok_or_else(|| bad(name, "expected a number"))
}

fn as_f64_array(obj: &Map<String, Value>, name: &str) -> Result<Vec<f64>> {
    key(obj, name)?
        .as_array()
        .ok_or_else(|| bad(name, "expected an array"))?
        .iter()
        .enumerate()
        .map(|(i, v)| v.as_f64().ok_or_else(|| bad(name, &format!("entry {i} is not a number"))))
        .collect()
}

fn as_usize_array(obj: &Map<String, Value>, name: &str) -> Result<Vec<usize>> {
    key(obj, name)?
        .as_array()
        .ok_or_else(|| bad(name, "expected an array"))?
        .iter()
        .enumerate()
        .map(|(i, v)| {
            v.as_u64()
                .map(|n| n as usize)
                .ok_or_else(|| bad(name, &format!("entry {i} is not a nonnegative integer")))
        })
        .collect()
}

/// Parses a field document. Errors name the offending key.
pub fn field_from_json(text: &str) -> Result<ScalarField> {
    let doc: Value = serde_json::from_str(text).map_err(|e| Error::Format(format!("not valid JSON: {e}")))?;
    let obj = doc.as_object().ok_or_else(|| Error::Format("top level must be an object".into()))?;
    let format = key(obj, "format")?.as_str().ok_or_else(|| bad("format", "expected a string"))?;
    if format != FIELD_FORMAT {
        return Err(bad("format", &format!("unsupported format {format:?}")));
    }
    let dim = key(obj, "dim")?.as_u64().ok_or_else(|| bad("dim", "expected an integer"))? as usize;
    let shape = as_usize_array(obj, "shape")?;
    let h = as_f64(obj, "h")?;
    let origin = as_f64_array(obj, "origin")?;
    let kind_str = key(obj, "domain_kind")?.as_str().ok_or_else(|| bad("domain_kind", "expected a string"))?;
    let kind = DomainKind::parse(kind_str).ok_or_else(|| bad("domain_kind", &format!("unknown kind {kind_str:?}")))?;
    let p = as_f64(obj, "p")?;
    let values = as_f64_array(obj, "values")?;
    let mask = as_usize_array(obj, "interior_mask")?;
    if mask.iter().any(|&m| m > 1) {
        return Err(bad("interior_mask", "entries must be 0 or 1"));
    }
    let grid = Grid::from_parts(dim, &shape, h, &origin, kind, mask.iter().map(|&m| m == 1).collect())
        .map_err(|e| Error::Format(format!("grid keys: {e}")))?;
    if values.len() != grid.len() {
        return Err(bad("values", &format!("{} entries for {} nodes", values.len(), grid.len())));
    }
    ScalarField::new(Arc::new(grid), values, p).map_err(|e| match e {
        Error::InvalidInput(m) => bad("p", &m),
        other => other,
    })
}

pub fn read_field(path: &Path) -> Result<ScalarField> {
    let text = std::fs::read_to_string(path)?;
    field_from_json(&text).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn write_field(path: &Path, f: &ScalarField) -> Result<()> {
    write_atomic(path, field_to_json(f).as_bytes())
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let g = Arc::new(Grid::disk([0.1, -0.2], 0.5, 1.0 / 16.0).unwrap());
        let f = ScalarField::from_fn(g, 2.5, |x| (x[0] * 7.3).sin().abs() + 1e-300 + x[1] / 3.0 + 1.0).unwrap();
        let text = field_to_json(&f);
        let back = field_from_json(&text).unwrap();
        assert_eq!(back, f);
        assert_eq!(field_to_json(&back), text);
    }

    #[test]
    fn errors_name_the_key() {
        let g = Arc::new(Grid::interval(0.0, 1.0, 5).unwrap());
        let f = ScalarField::constant(g, 3.0, 1.0).unwrap();
        let text = field_to_json(&f);
        let broken = text.replace("\"h\":", "\"hh\":");
        assert!(field_from_json(&broken).unwrap_err().to_string().contains("\"h\""));
        let broken = text.replace("\"p\":3", "\"p\":0");
        assert!(field_from_json(&broken).unwrap_err().to_string().contains("\"p\""));
        let broken = text.replace("\"domain_kind\":\"interval\"", "\"domain_kind\":\"cube\"");
        assert!(field_from_json(&broken).unwrap_err().to_string().contains("domain_kind"));
    }
}
