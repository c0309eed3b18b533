//! Text formats: header-free CSV distance matrices and JSONL point files.
//!
//! A JSONL file starts with a header line `{"provider": "...", "param": ...}`
//! followed by one `{"id": int, "coords": {index: value}}` object per point.
//! Points are ordered by `id`, which must enumerate `0..n` exactly once.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Deserialize;
use serde_json::{json, Value};

use super::{MetricSpace, PointData, Provider, SparseVector};
use crate::error::{Error, Result};

pub fn parse_matrix_csv(text: &str) -> Result<MetricSpace> {
    let mut rows = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|cell| {
                cell.trim().parse::<f64>().map_err(|_| {
                    Error::MalformedInput(format!("line {}: cannot parse {:?} as a number", line_no + 1, cell.trim()))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    MetricSpace::from_matrix(rows)
}

pub fn write_matrix_csv(space: &MetricSpace) -> String {
    let mut out = String::new();
    for row in space.distance_matrix() {
        let cells: Vec<String> = row.iter().map(|x| format!("{x}")).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

#[derive(Deserialize)]
struct Header {
    provider: String,
    #[serde(default)]
    param: Option<f64>,
}

#[derive(Deserialize)]
struct PointLine {
    id: usize,
    coords: BTreeMap<String, f64>,
}

fn provider_from_header(h: &Header) -> Result<Provider> {
    let need = |what: &str| {
        h.param.ok_or_else(|| Error::MalformedInput(format!("provider {} needs param ({what})", h.provider)))
    };
    let as_count = |x: f64, what: &str| -> Result<usize> {
        if x >= 1.0 && x.fract() == 0.0 {
            Ok(x as usize)
        } else {
            Err(Error::MalformedInput(format!("{what} must be a positive integer, got {x}")))
        }
    };
    Ok(match h.provider.as_str() {
        "euclidean" => Provider::Euclidean { dim: as_count(need("dim")?, "dim")? },
        "sup-norm-sparse" => Provider::SupNormSparse,
        "p-norm-sparse" => Provider::PNormSparse { p: need("p")? },
        "bounded-usual" => Provider::BoundedUsual { cap: need("cap")? },
        "function-sup" => Provider::FunctionSup { domain_size: as_count(need("domain size")?, "domain size")? },
        other => {
            return Err(Error::MalformedInput(format!("unknown point provider {other:?} (explicit matrices use CSV)")))
        }
    })
}

pub fn parse_points_jsonl(text: &str) -> Result<MetricSpace> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header_line) = lines.next().ok_or_else(|| Error::MalformedInput("empty points file".into()))?;
    let header: Header =
        serde_json::from_str(header_line).map_err(|e| Error::MalformedInput(format!("line 1: bad header: {e}")))?;
    let provider = provider_from_header(&header)?;

    let mut by_id: BTreeMap<usize, SparseVector> = BTreeMap::new();
    for (line_no, line) in lines {
        let p: PointLine =
            serde_json::from_str(line).map_err(|e| Error::MalformedInput(format!("line {}: {e}", line_no + 1)))?;
        let mut v = SparseVector::zero();
        for (k, x) in p.coords {
            let idx: usize = k.parse().map_err(|_| {
                Error::MalformedInput(format!("line {}: coordinate key {k:?} is not an index", line_no + 1))
            })?;
            v.set(idx, x);
        }
        if by_id.insert(p.id, v).is_some() {
            return Err(Error::MalformedInput(format!("duplicate point id {}", p.id)));
        }
    }
    if let Some((&last, _)) = by_id.iter().next_back() {
        if last + 1 != by_id.len() {
            return Err(Error::MalformedInput("point ids must be exactly 0..n".into()));
        }
    }
    let points: Vec<SparseVector> = by_id.into_values().collect();
    let width = match provider {
        Provider::Euclidean { dim } => Some(dim),
        Provider::BoundedUsual { .. } => Some(1),
        Provider::FunctionSup { domain_size } => Some(domain_size),
        _ => None,
    };
    let data = match width {
        None => PointData::Sparse(points),
        Some(w) => {
            let mut rows = Vec::with_capacity(points.len());
            for (id, v) in points.iter().enumerate() {
                if let Some((i, _)) = v.entries().find(|&(i, _)| i >= w) {
                    return Err(Error::MalformedInput(format!("point {id} has coordinate {i} beyond width {w}")));
                }
                rows.push((0..w).map(|i| v.get(i)).collect());
            }
            PointData::Dense(rows)
        }
    };
    MetricSpace::build(data, provider)
}

/// Inverse of [`parse_points_jsonl`]; `None` for explicit-matrix spaces.
pub fn write_points_jsonl(space: &MetricSpace) -> Option<String> {
    let provider = space.provider();
    let header = match provider {
        Provider::ExplicitMatrix => return None,
        Provider::Euclidean { dim } => json!({"provider": provider.name(), "param": dim}),
        Provider::SupNormSparse => json!({"provider": provider.name()}),
        Provider::PNormSparse { p } => json!({"provider": provider.name(), "param": p}),
        Provider::BoundedUsual { cap } => json!({"provider": provider.name(), "param": cap}),
        Provider::FunctionSup { domain_size } => {
            json!({"provider": provider.name(), "param": domain_size})
        }
    };
    let mut out = format!("{header}\n");
    let coords: Vec<Value> = match space.data() {
        PointData::Dense(rows) => rows
            .iter()
            .map(|r| {
                let m: serde_json::Map<String, Value> =
                    r.iter().enumerate().filter(|(_, &x)| x != 0.0).map(|(i, &x)| (i.to_string(), json!(x))).collect();
                Value::Object(m)
            })
            .collect(),
        PointData::Sparse(vs) => {
            vs.iter().map(|v| Value::Object(v.entries().map(|(i, x)| (i.to_string(), json!(x))).collect())).collect()
        }
        PointData::Matrix(_) => return None,
    };
    for (id, c) in coords.into_iter().enumerate() {
        let _ = writeln!(out, "{}", json!({"id": id, "coords": c}));
    }
    Some(out)
}
