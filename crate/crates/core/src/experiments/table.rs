use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg;

/// One long-format result line. Columns that do not apply to a row stay empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ResultRow {
    pub experiment: String,
    /// Name of the swept parameter.
    pub sweep: String,
    pub sweep_value: f64,
    /// Second grid coordinate where the design has one (e.g. `rho`).
    pub secondary: Option<f64>,
    pub replicate: u64,
    pub method: String,
    pub alpha: Option<f64>,
    pub mean_error: Option<f64>,
    pub subspace_error: Option<f64>,
    pub s_mu: Option<f64>,
    pub s_sub: Option<f64>,
    pub tau_mu: Option<f64>,
    pub tau_sub: Option<f64>,
    pub theory_trace: Option<f64>,
    pub empirical_trace: Option<f64>,
    pub rel_error: Option<f64>,
    pub mean_norm: Option<f64>,
    pub first_coord: Option<f64>,
    pub norm: Option<f64>,
    pub converged: Option<bool>,
    pub excluded: Option<u64>,
    pub ties: Option<u64>,
    pub dropped: Option<u64>,
    pub bad_nodes: Option<u64>,
}

/// Wall-clock time per row, kept out of the main table so that it stays
/// byte-identical across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub experiment: String,
    pub sweep_value: f64,
    pub secondary: Option<f64>,
    pub replicate: u64,
    pub method: String,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub experiment: String,
    pub sweep: String,
    pub sweep_value: f64,
    pub secondary: Option<f64>,
    pub method: String,
    pub metric: String,
    pub n: u64,
    pub mean: f64,
    pub sd: f64,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
    pub timings: Vec<TimingRow>,
}

const METRICS: [&str; 10] = [
    "alpha",
    "mean_error",
    "subspace_error",
    "s_mu",
    "s_sub",
    "tau_mu",
    "tau_sub",
    "rel_error",
    "first_coord",
    "norm",
];

fn metric(row: &ResultRow, name: &str) -> Option<f64> {
    match name {
        "alpha" => row.alpha,
        "mean_error" => row.mean_error,
        "subspace_error" => row.subspace_error,
        "s_mu" => row.s_mu,
        "s_sub" => row.s_sub,
        "tau_mu" => row.tau_mu,
        "tau_sub" => row.tau_sub,
        "rel_error" => row.rel_error,
        "first_coord" => row.first_coord,
        "norm" => row.norm,
        _ => None,
    }
}

impl ResultTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_rows(out, &self.rows)
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
        let mut reader = csv::Reader::from_reader(input);
        Ok(reader.deserialize().collect::<std::result::Result<_, _>>()?)
    }

    pub fn write_timings<W: Write>(&self, out: W) -> Result<()> {
        write_rows(out, &self.timings)
    }

    /// Mean, sd and quantiles of each reported metric per (sweep point, method).
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut groups: BTreeMap<(usize, String), Vec<f64>> = BTreeMap::new();
        let mut keys: Vec<(&ResultRow, usize)> = Vec::new();
        let mut index: BTreeMap<(u64, Option<u64>, String), usize> = BTreeMap::new();
        for row in &self.rows {
            let key = (row.sweep_value.to_bits(), row.secondary.map(f64::to_bits), row.method.clone());
            let next = index.len();
            let slot = *index.entry(key).or_insert_with(|| {
                keys.push((row, next));
                next
            });
            for m in METRICS {
                if let Some(v) = metric(row, m) {
                    groups.entry((slot, m.to_string())).or_default().push(v);
                }
            }
        }
        let mut out = Vec::new();
        for (row, slot) in keys {
            for m in METRICS {
                let Some(values) = groups.get(&(slot, m.to_string())) else { continue };
                let (mean, sd) = linalg::mean_sd(values);
                let mut sorted = values.clone();
                sorted.sort_by(f64::total_cmp);
                out.push(SummaryRow {
                    experiment: row.experiment.clone(),
                    sweep: row.sweep.clone(),
                    sweep_value: row.sweep_value,
                    secondary: row.secondary,
                    method: row.method.clone(),
                    metric: m.to_string(),
                    n: values.len() as u64,
                    mean,
                    sd,
                    q05: linalg::quantile_sorted(&sorted, 0.05),
                    q50: linalg::quantile_sorted(&sorted, 0.5),
                    q95: linalg::quantile_sorted(&sorted, 0.95),
                });
            }
        }
        out
    }

    /// Mean of one metric over replicates for a (sweep value, method) pair.
    pub fn mean_of(&self, sweep_value: f64, method: &str, name: &str) -> Option<f64> {
        let values: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.sweep_value == sweep_value && r.method == method)
            .filter_map(|r| metric(r, name))
            .collect();
        (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
    }
}

pub fn write_rows<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip_is_lossless() {
        let table = ResultTable {
            rows: vec![
                ResultRow {
                    experiment: "x".into(),
                    sweep: "eigengap".into(),
                    sweep_value: 0.1,
                    replicate: 3,
                    method: "mom-fixed:1".into(),
                    alpha: Some(1.0 / 3.0),
                    mean_error: Some(1e-300),
                    converged: Some(true),
                    ..Default::default()
                },
                ResultRow { experiment: "x".into(), sweep_value: 0.1, method: "mom-fixed:1".into(), mean_error: Some(2.0), ..Default::default() },
            ],
            timings: Vec::new(),
        };
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let back = ResultTable::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, table.rows);
        let s = table.summary();
        let me = s.iter().find(|r| r.metric == "mean_error").unwrap();
        assert_eq!(me.n, 2);
        assert_eq!(table.mean_of(0.1, "mom-fixed:1", "mean_error"), Some((1e-300 + 2.0) / 2.0));
    }
}
