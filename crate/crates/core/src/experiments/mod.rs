//! Seeded synthetic studies: Gaussian classification, heat distributions on
//! random geometric graphs, and relative error on spheres.
//!
//! Every runner produces a [`ResultTable`] with one row per
//! (repetition, parameter combination, metric). Repetition `r` runs with seed
//! `seed + r`; streams inside a repetition come from [`derive_seed`].

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};

mod classify;
mod gaussian;
mod graph;
mod sphere;

pub use classify::{nn_classification_score, nn_split_score, DistanceMatrix};
pub use gaussian::{
    add_cloud_noise, gaussian_dataset, run_gaussian, GaussianConfig, GaussianDatasetConfig,
    LabeledDataset,
};
pub use graph::{
    heat_distribution, heat_distribution_with_time, random_geometric_graph, run_graph,
    GeometricGraph, GraphConfig, HeatDistribution, Region, MAX_GRAPH_REJECTIONS,
};
pub use sphere::{relative_error, run_sphere, sphere_pair, SphereConfig};

/// Mixes `base` with a path of stream labels (splitmix64 finalizer per step).
pub fn derive_seed(base: u64, stream: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    stream.iter().fold(mix(base), |acc, &s| mix(acc.rotate_left(23) ^ mix(s)))
}

pub(crate) fn elapsed_ms(start: std::time::Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub seed: u64,
    /// One entry per table parameter; empty when it does not apply.
    pub params: Vec<String>,
    pub metric: String,
    pub value: f64,
    pub runtime_ms: f64,
}

/// Rows of one experiment, written as CSV with header
/// `experiment,seed,param_*,metric,value,runtime_ms`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub experiment: String,
    pub param_names: Vec<String>,
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn new(experiment: &str, param_names: &[&str]) -> Self {
        Self {
            experiment: experiment.to_string(),
            param_names: param_names.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["experiment".to_string(), "seed".to_string()];
        h.extend(self.param_names.iter().map(|p| format!("param_{p}")));
        h.extend(["metric", "value", "runtime_ms"].map(String::from));
        h
    }

    pub fn push(&mut self, row: ResultRow) {
        debug_assert_eq!(row.params.len(), self.param_names.len());
        self.rows.push(row);
    }

    /// Rows with a given metric name.
    pub fn metric<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a ResultRow> + 'a {
        self.rows.iter().filter(move |r| r.metric == name)
    }

    /// Index of a parameter column.
    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.param_names.iter().position(|p| p == name)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let to_io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(self.header()).map_err(to_io)?;
        for row in &self.rows {
            let mut record = vec![self.experiment.clone(), row.seed.to_string()];
            record.extend(row.params.iter().cloned());
            record.push(row.metric.clone());
            record.push(row.value.to_string());
            record.push(format!("{:.3}", row.runtime_ms));
            w.write_record(&record).map_err(to_io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn parse_csv(text: &str, name: &str) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            file: name.to_string(),
            line,
            message,
        };
        let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| parse_err(1, e.to_string()))?
            .iter()
            .map(String::from)
            .collect();
        let n = header.len();
        let fixed_ok = n >= 5
            && header[0] == "experiment"
            && header[1] == "seed"
            && header[n - 3] == "metric"
            && header[n - 2] == "value"
            && header[n - 1] == "runtime_ms";
        let params: Option<Vec<String>> = fixed_ok.then(|| {
            header[2..n - 3]
                .iter()
                .map(|h| h.strip_prefix("param_").map(String::from))
                .collect()
        })
        .flatten();
        let Some(param_names) = params else {
            return Err(parse_err(1, format!("unexpected header {header:?}")));
        };
        let mut table = ResultTable {
            experiment: String::new(),
            param_names,
            rows: Vec::new(),
        };
        for (k, record) in reader.records().enumerate() {
            let line = k + 2;
            let record = record.map_err(|e| parse_err(line, e.to_string()))?;
            if record.len() != n {
                return Err(parse_err(line, format!("expected {n} fields, found {}", record.len())));
            }
            if k == 0 {
                table.experiment = record[0].to_string();
            } else if record[0] != table.experiment {
                return Err(parse_err(line, "mixed experiments in one table".into()));
            }
            let number = |i: usize| {
                record[i]
                    .parse::<f64>()
                    .map_err(|_| parse_err(line, format!("not a number: {:?}", &record[i])))
            };
            table.rows.push(ResultRow {
                seed: record[1]
                    .parse()
                    .map_err(|_| parse_err(line, format!("bad seed {:?}", &record[1])))?,
                params: (2..n - 3).map(|i| record[i].to_string()).collect(),
                metric: record[n - 3].to_string(),
                value: number(n - 2)?,
                runtime_ms: number(n - 1)?,
            });
        }
        Ok(table)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub params: Vec<String>,
    pub metric: String,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single row.
    pub std: f64,
    pub count: usize,
    pub runtime_ms_mean: f64,
}

/// Means over seeds, grouped by (parameters, metric) in first-seen order.
pub fn summarize(table: &ResultTable) -> Vec<SummaryRow> {
    let mut order: Vec<(Vec<String>, String)> = Vec::new();
    let mut groups: HashMap<(Vec<String>, String), Vec<&ResultRow>> = HashMap::new();
    for row in &table.rows {
        let key = (row.params.clone(), row.metric.clone());
        groups
            .entry(key.clone())
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(row);
    }
    order
        .into_iter()
        .map(|key| {
            let rows = &groups[&key];
            let count = rows.len();
            let mean = rows.iter().map(|r| r.value).sum::<f64>() / count as f64;
            let std = if count > 1 {
                let ss: f64 = rows.iter().map(|r| (r.value - mean).powi(2)).sum();
                (ss / (count - 1) as f64).sqrt()
            } else {
                0.0
            };
            let runtime_ms_mean = rows.iter().map(|r| r.runtime_ms).sum::<f64>() / count as f64;
            SummaryRow {
                params: key.0,
                metric: key.1,
                mean,
                std,
                count,
                runtime_ms_mean,
            }
        })
        .collect()
}

/// Summary CSV: `experiment,param_*,metric,mean,std,count,runtime_ms_mean`.
pub fn summary_csv(table: &ResultTable) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["experiment".to_string()];
    header.extend(table.param_names.iter().map(|p| format!("param_{p}")));
    header.extend(["metric", "mean", "std", "count", "runtime_ms_mean"].map(String::from));
    w.write_record(&header).expect("in-memory write");
    for s in summarize(table) {
        let mut record = vec![table.experiment.clone()];
        record.extend(s.params);
        record.push(s.metric);
        record.push(s.mean.to_string());
        record.push(s.std.to_string());
        record.push(s.count.to_string());
        record.push(format!("{:.3}", s.runtime_ms_mean));
        w.write_record(&record).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("csv is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> ResultTable {
        let mut t = ResultTable::new("demo", &["d", "n"]);
        for (seed, v) in [(7, 0.5), (8, 0.7)] {
            t.push(ResultRow {
                seed,
                params: vec!["2".into(), "10".into()],
                metric: "score".into(),
                value: v,
                runtime_ms: 1.25,
            });
        }
        t.push(ResultRow {
            seed: 7,
            params: vec!["2".into(), String::new()],
            metric: "other".into(),
            value: 1.0 / 3.0,
            runtime_ms: 0.0,
        });
        t
    }

    #[test]
    fn csv_roundtrip() {
        let t = table();
        let text = t.to_csv_string();
        assert!(text.starts_with("experiment,seed,param_d,param_n,metric,value,runtime_ms\n"));
        assert!(text.contains("demo,7,2,,other,0.3333333333333333,0.000\n"));
        assert_eq!(ResultTable::parse_csv(&text, "t.csv").unwrap(), t);
    }

    #[test]
    fn bad_csv() {
        assert!(ResultTable::parse_csv("a,b\n1,2\n", "x").is_err());
        let err = ResultTable::parse_csv(
            "experiment,seed,metric,value,runtime_ms\ne,1,m,zz,0\n",
            "x.csv",
        )
        .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn summary_means() {
        let s = summarize(&table());
        assert_eq!(s.len(), 2);
        assert!((s[0].mean - 0.6).abs() < 1e-15);
        assert!((s[0].std - 0.2f64.hypot(0.0) / 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(s[0].count, 2);
        assert_eq!(s[1].std, 0.0);
        let csv = summary_csv(&table());
        assert!(csv.starts_with("experiment,param_d,param_n,metric,mean,std,count,runtime_ms_mean\n"));
    }

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(1, &[0, 1]);
        assert_ne!(a, derive_seed(1, &[1, 0]));
        assert_ne!(a, derive_seed(2, &[0, 1]));
        assert_eq!(a, derive_seed(1, &[0, 1]));
    }
}
