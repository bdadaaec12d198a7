//! File formats: JSON-lines node estimates, delimited data matrices and run manifests.

use std::collections::BTreeMap;
use std::io::{BufRead, Read, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{self, ProductPoint, SubspaceBasis};
use crate::linalg;
use crate::node_pca::{DataMatrix, NodeEstimate};

pub const FORMAT_VERSION: u32 = 1;

/// One node estimate as a single JSON object; basis stored column by column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeEstimateRecord {
    pub format_version: u32,
    pub node_id: i64,
    pub p: usize,
    pub r: usize,
    pub b: usize,
    pub mu: Vec<f64>,
    pub basis: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvalues: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub tie: bool,
}

impl NodeEstimateRecord {
    pub fn from_estimate(node: &NodeEstimate) -> Self {
        let u = node.subspace_hat.matrix();
        Self {
            format_version: FORMAT_VERSION,
            node_id: node.node_id,
            p: node.p(),
            r: node.r(),
            b: node.b,
            mu: node.mu_hat.as_slice().to_vec(),
            basis: u.column_iter().map(|c| c.iter().copied().collect()).collect(),
            eigenvalues: node.eigenvalues.clone(),
            tie: node.tie,
        }
    }

    /// Validates and converts; returns whether the basis needed QR repair.
    pub fn to_estimate(&self, reorthonormalize: bool) -> Result<(NodeEstimate, bool)> {
        let fail = |message: String| Error::Record { node_id: self.node_id, message };
        if self.format_version != FORMAT_VERSION {
            return Err(fail(format!("unsupported format_version {}", self.format_version)));
        }
        if self.mu.len() != self.p {
            return Err(fail(format!("mu has {} entries, expected p={}", self.mu.len(), self.p)));
        }
        if self.basis.len() != self.r || self.basis.iter().any(|c| c.len() != self.p) {
            return Err(fail(format!("basis must hold r={} columns of length p={}", self.r, self.p)));
        }
        if self.r == 0 || self.r >= self.p {
            return Err(fail(format!("invalid rank r={} for p={}", self.r, self.p)));
        }
        if self.b < self.r + 1 {
            return Err(fail(format!("block size b={} must be at least r+1", self.b)));
        }
        if self.mu.iter().chain(self.basis.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(fail("non-finite entries".into()));
        }
        let m = DMatrix::from_fn(self.p, self.r, |i, j| self.basis[j][i]);
        let deviation = linalg::orthonormality_error(&m);
        let (basis, repaired) = if deviation <= geometry::ORTHONORMAL_TOL {
            (SubspaceBasis::new(m)?, false)
        } else if reorthonormalize {
            (SubspaceBasis::orthonormalized(&m).map_err(|e| fail(e.to_string()))?, true)
        } else {
            return Err(fail(format!("basis not orthonormal (max deviation {deviation:.3e})")));
        };
        let theta = ProductPoint::new(DVector::from_vec(self.mu.clone()), basis)?;
        let mut node = NodeEstimate::from_point(self.node_id, self.b, theta);
        node.eigenvalues = self.eigenvalues.clone();
        node.tie = self.tie;
        Ok((node, repaired))
    }
}

pub fn write_records<W: Write>(mut out: W, nodes: &[NodeEstimate]) -> Result<()> {
    for node in nodes {
        serde_json::to_writer(&mut out, &NodeEstimateRecord::from_estimate(node))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn records_to_string(nodes: &[NodeEstimate]) -> Result<String> {
    let mut buf = Vec::new();
    write_records(&mut buf, nodes)?;
    Ok(String::from_utf8(buf).expect("JSON is UTF-8"))
}

#[derive(Debug, Clone)]
pub struct LoadedRecords {
    pub nodes: Vec<NodeEstimate>,
    /// Ids of records whose basis was repaired by QR.
    pub repaired: Vec<i64>,
}

/// Reads one record per non-blank line.
pub fn read_records<R: BufRead>(input: R, reorthonormalize: bool) -> Result<LoadedRecords> {
    let mut nodes = Vec::new();
    let mut repaired = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i as u64 + 1;
        let record: NodeEstimateRecord =
            serde_json::from_str(&line).map_err(|e| Error::Parse { line: lineno, message: e.to_string() })?;
        let (node, fixed) = record.to_estimate(reorthonormalize)?;
        if fixed {
            repaired.push(node.node_id);
        }
        nodes.push(node);
    }
    Ok(LoadedRecords { nodes, repaired })
}

pub fn read_records_file(path: &Path, reorthonormalize: bool) -> Result<LoadedRecords> {
    let file = std::fs::File::open(path)?;
    read_records(std::io::BufReader::new(file), reorthonormalize)
}

/// Fails unless every node shares the first node's `(p, r)`, naming the offenders.
pub fn ensure_consistent(nodes: &[NodeEstimate]) -> Result<(usize, usize)> {
    let first = nodes.first().ok_or(Error::Empty("no node estimates"))?;
    let (p, r) = (first.p(), first.r());
    let offenders: Vec<String> = nodes
        .iter()
        .filter(|n| n.p() != p || n.r() != r)
        .map(|n| format!("{} (p={}, r={})", n.node_id, n.p(), n.r()))
        .collect();
    if !offenders.is_empty() {
        return Err(Error::Record {
            node_id: first.node_id,
            message: format!("mixed dimensions; expected p={p}, r={r}; offending nodes: {}", offenders.join(", ")),
        });
    }
    Ok((p, r))
}

/// Reads comma- or tab-separated numbers, one observation per row. A first
/// row that does not parse as numbers is taken as a header.
pub fn read_data<R: Read>(mut input: R) -> Result<DataMatrix> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let delimiter = if first.contains('\t') { b'\t' } else { b',' };
    let header = first
        .split(delimiter as char)
        .any(|f| f.trim().parse::<f64>().is_err());
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(header)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0usize;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(Error::Parse { line, message: format!("expected {w} fields, found {}", record.len()) })
            }
            _ => {}
        }
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Parse { line, message: format!("not a number: {field:?}") })?;
            if !v.is_finite() {
                return Err(Error::Parse { line, message: format!("non-finite value {field:?}") });
            }
            values.push(v);
        }
        rows += 1;
    }
    let p = width.unwrap_or(0);
    if rows < 2 {
        return Err(Error::param(format!("data needs at least two rows, found {rows}")));
    }
    DataMatrix::from_rows(rows, p, &values)
}

pub fn read_data_file(path: &Path) -> Result<DataMatrix> {
    read_data(std::fs::File::open(path)?)
}

/// Writes a data matrix as comma-separated rows without a header.
pub fn write_data<W: Write>(mut out: W, data: &DataMatrix) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut out);
    for i in 0..data.n() {
        w.write_record(data.values().row(i).iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Provenance written next to every output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub started_at: u64,
    pub finished_at: u64,
    pub counters: BTreeMap<String, u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

impl RunManifest {
    pub fn start(command: &str, config: &[u8], seed: Option<u64>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_hash: sha256_hex(config),
            seed,
            started_at: unix_now(),
            finished_at: 0,
            counters: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn count(&mut self, key: &str, value: u64) {
        *self.counters.entry(key.into()).or_insert(0) += value;
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    /// `<out>.manifest.json`.
    pub fn path_for(out: &Path) -> PathBuf {
        let mut s = out.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    }

    pub fn finish(mut self, out: &Path) -> Result<PathBuf> {
        self.finished_at = unix_now();
        let path = Self::path_for(out);
        std::fs::write(&path, serde_json::to_string_pretty(&self)? + "\n")?;
        Ok(path)
    }
}
