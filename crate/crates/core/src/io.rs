//! Deterministic JSON, CSV tables and raw field dumps.

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::field::CauchyData;
use crate::grid::GridSpec;

/// Renders a float with 17 significant digits; non-finite values become `null`.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".into()
    }
}

/// Pretty JSON with sorted keys and every float printed by [`format_float`].
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Config(format!("serialization: {e}")))?;
    let mut out = String::new();
    write_value(&v, 0, &mut out);
    out.push('\n');
    Ok(out)
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN)));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(item, indent + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            for (i, k) in keys.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String((*k).clone()).to_string());
                out.push_str(": ");
                write_value(&map[*k], indent + 1, out);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

/// A CSV table with a header row.
pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Coordinate columns (`r` or `x0..`) followed by `f` and `g`.
pub fn field_csv(phi: &CauchyData) -> String {
    let grid = &phi.grid;
    let mut header: Vec<String> = match grid {
        GridSpec::Radial { .. } => vec!["r".into()],
        GridSpec::Cartesian { d, .. } => (0..*d).map(|a| format!("x{a}")).collect(),
    };
    header.push("f".into());
    header.push("g".into());
    let rows: Vec<Vec<String>> = (0..grid.len())
        .map(|i| {
            let mut row: Vec<String> = grid.point(i).iter().map(|&x| format_float(x)).collect();
            row.push(format_float(phi.f[i]));
            row.push(format_float(phi.g[i]));
            row
        })
        .collect();
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    csv_table(&refs, &rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
#[serde(rename_all = "camelCase")]
struct RawHeader {
    schema_version: u32,
    grid: GridSpec,
    m: f64,
    count: usize,
    blocks: Vec<String>,
    encoding: String,
}

/// One JSON header line, then the `f` and `g` blocks as little-endian `f64`.
pub fn raw_dump(phi: &CauchyData) -> Vec<u8> {
    let header = RawHeader {
        schema_version: 1,
        grid: phi.grid.clone(),
        m: phi.m,
        count: phi.f.len(),
        blocks: vec!["f".into(), "g".into()],
        encoding: "f64-le".into(),
    };
    let mut out = serde_json::to_vec(&header).expect("header serializes");
    out.push(b'\n');
    for v in phi.f.iter().chain(&phi.g) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn raw_load(bytes: &[u8]) -> Result<CauchyData> {
    let bad = |s: &str| Error::Config(format!("raw dump: {s}"));
    let nl = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| bad("missing header"))?;
    let header: RawHeader = serde_json::from_slice(&bytes[..nl]).map_err(|e| bad(&e.to_string()))?;
    let body = &bytes[nl + 1..];
    if header.encoding != "f64-le" || body.len() != 16 * header.count {
        return Err(bad("size or encoding mismatch"));
    }
    let vals: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let (f, g) = vals.split_at(header.count);
    CauchyData::new(header.grid, f.to_vec(), g.to_vec(), header.m)
}
