//! File formats.
//!
//! - point clouds: CSV, one point per row, no header;
//! - graphs: JSON `{"num_nodes": n, "edges": [[i, j, weight], ...]}`;
//! - measures: JSON `[[index, weight], ...]`;
//! - observable sets: JSON `[{"anchors": [...], "weights": [...], "combinator": "min"}]`.
//!
//! Syntax errors are reported as [`Error::Parse`] with the file name and line.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{DiscreteMeasure, FiniteMetricSpace};
use crate::observables::Observable;

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse {
        file: path.display().to_string(),
        line: 0,
        message: e.to_string(),
    })
}

fn json_error(path: &Path, err: serde_json::Error) -> Error {
    Error::Parse {
        file: path.display().to_string(),
        line: err.line(),
        message: err.to_string(),
    }
}

/// Parses CSV point rows. `name` is used in error messages.
pub fn parse_point_cloud(text: &str, name: &str) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            file: name.to_string(),
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let point = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| Error::Parse {
                    file: name.to_string(),
                    line,
                    message: format!("not a number: {field:?}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = points.first().map(|p: &Vec<f64>| p.len()) {
            if point.len() != first {
                return Err(Error::Parse {
                    file: name.to_string(),
                    line,
                    message: format!("expected {first} coordinates, found {}", point.len()),
                });
            }
        }
        points.push(point);
    }
    if points.is_empty() {
        return Err(Error::Parse {
            file: name.to_string(),
            line: 1,
            message: "no points".into(),
        });
    }
    Ok(points)
}

pub fn read_point_cloud(path: &Path) -> Result<Vec<Vec<f64>>> {
    parse_point_cloud(&read(path)?, &path.display().to_string())
}

pub fn write_point_cloud(path: &Path, points: &[Vec<f64>]) -> Result<()> {
    let mut out = String::new();
    for p in points {
        let row: Vec<String> = p.iter().map(|x| format!("{x:?}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    pub num_nodes: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl GraphFile {
    pub fn into_space(self) -> Result<FiniteMetricSpace> {
        FiniteMetricSpace::graph(self.num_nodes, &self.edges)
    }
}

pub fn read_graph(path: &Path) -> Result<GraphFile> {
    serde_json::from_str(&read(path)?).map_err(|e| json_error(path, e))
}

/// Reads a measure file against `space`. Weight-sum and index violations
/// surface as their own (non-parse) errors.
pub fn read_measure(path: &Path, space: Arc<FiniteMetricSpace>) -> Result<DiscreteMeasure> {
    let atoms: Vec<(usize, f64)> =
        serde_json::from_str(&read(path)?).map_err(|e| json_error(path, e))?;
    DiscreteMeasure::new(space, &atoms)
}

pub fn measure_to_json(mu: &DiscreteMeasure) -> String {
    serde_json::to_string(mu.atoms()).expect("atoms serialize")
}

pub fn read_observables(path: &Path) -> Result<Vec<Observable>> {
    let text = read(path)?;
    // Structural errors carry a line; validation failures (e.g. a zero
    // weight) come through serde as data errors on the offending line too.
    serde_json::from_str(&text).map_err(|e| json_error(path, e))
}
