//! Text and binary formats: hop-weight reports, embeddings, label files and
//! metric tables.
//!
//! Text outputs start with `#` provenance lines; readers skip them.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Read, Write};

use nalgebra::DMatrix;

use crate::downstream::LabeledNodes;
use crate::embedder::Embedding;
use crate::error::{Error, Result};
use crate::simplex::HopWeights;

/// Header lines identifying how an artifact was produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    /// Tool name and version, e.g. `ase 0.1.0`.
    pub tool: String,
    /// Serialized run configuration (single line).
    pub config: String,
    pub seed: u64,
}

impl Provenance {
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# tool: {}", self.tool)?;
        writeln!(out, "# config: {}", self.config)?;
        writeln!(out, "# seed: {}", self.seed)?;
        Ok(())
    }
}

/// Mass share a hop needs to count toward the range classification.
pub const RANGE_SHARE: f64 = 0.05;

/// Coarse reach of a weight vector, from the last hop holding at least
/// [`RANGE_SHARE`] of the mass: short (≤ 3), medium (4–7), long (≥ 8).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Range {
    Short,
    Medium,
    Long,
}

impl Range {
    pub fn of(theta: &HopWeights) -> (Self, usize) {
        let hop = theta.last_significant_hop(RANGE_SHARE);
        let range = match hop {
            0..=3 => Range::Short,
            4..=7 => Range::Medium,
            _ => Range::Long,
        };
        (range, hop)
    }
}

impl fmt::Display for Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Range::Short => "short",
            Range::Medium => "medium",
            Range::Long => "long",
        })
    }
}

/// `k<TAB>θ_k` lines followed by `range<TAB><class><TAB>last_hop=<k>`.
pub fn write_theta_report<W: Write>(mut out: W, theta: &HopWeights) -> Result<()> {
    for (k, w) in theta.as_slice().iter().enumerate() {
        writeln!(out, "{}\t{:.6}", k + 1, w)?;
    }
    let (range, hop) = Range::of(theta);
    writeln!(out, "range\t{range}\tlast_hop={hop}")?;
    Ok(())
}

/// Parses the weights of a report written by [`write_theta_report`]. The
/// printed values are rounded, so the result is renormalized.
pub fn read_theta_report<R: BufRead>(reader: R) -> Result<HopWeights> {
    let mut weights = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let mut parts = line.split('\t');
        let (Some(k), Some(w)) = (parts.next(), parts.next()) else {
            continue;
        };
        let Ok(k) = k.trim().parse::<usize>() else {
            continue;
        };
        let w: f64 = w
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("bad weight for hop {k}: {w}")))?;
        if k != weights.len() + 1 {
            return Err(Error::Format(format!("hop {k} out of order")));
        }
        weights.push(w);
    }
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() || sum <= 0.0 || sum.is_nan() {
        return Err(Error::Format("no hop weights found".into()));
    }
    HopWeights::new(weights.iter().map(|w| w / sum).collect())
}

/// TSV with header `node<TAB>dim=d<TAB>K=k` and one row per node, values with
/// nine significant digits.
pub fn write_embedding_tsv<W: Write>(mut out: W, e: &Embedding) -> Result<()> {
    writeln!(out, "node\tdim={}\tK={}", e.dim, e.theta.len())?;
    let mut line = String::new();
    for i in 0..e.n_nodes() {
        line.clear();
        line.push_str(&e.node_id(i).to_string());
        for v in e.matrix.row(i).iter() {
            line.push('\t');
            line.push_str(&format!("{v:.8e}"));
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

/// Node ids and the `N × d` matrix of an embedding TSV.
pub fn read_embedding_tsv<R: BufRead>(reader: R) -> Result<(Vec<i64>, DMatrix<f64>)> {
    let mut ids = Vec::new();
    let mut values = Vec::new();
    let mut dim = None;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.starts_with('#') || line.trim().is_empty() || line.starts_with("node\t") {
            continue;
        }
        let mut parts = line.split('\t');
        let id: i64 = parts
            .next()
            .unwrap_or_default()
            .parse()
            .map_err(|_| Error::Format(format!("line {}: bad node id", lineno + 1)))?;
        let row = parts
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::Format(format!("line {}: bad value", lineno + 1)))?;
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(Error::Format(format!(
                    "line {}: {} values, expected {d}",
                    lineno + 1,
                    row.len()
                )))
            }
            _ => {}
        }
        ids.push(id);
        values.extend(row);
    }
    let d = dim.ok_or_else(|| Error::Format("empty embedding file".into()))?;
    Ok((ids.clone(), DMatrix::from_row_slice(ids.len(), d, &values)))
}

const EMB_MAGIC: &[u8; 8] = b"ASEEMB\0\0";
const EMB_VERSION: u32 = 1;

/// Little-endian binary embedding:
/// magic, version `u32`, `n`, `d`, `K` as `u64`, `θ` (`K × f64`), node ids
/// (`n × i64`), then the matrix row by row (`n·d × f64`).
pub fn write_embedding_bin<W: Write>(mut out: W, e: &Embedding) -> Result<()> {
    out.write_all(EMB_MAGIC)?;
    out.write_all(&EMB_VERSION.to_le_bytes())?;
    for v in [e.n_nodes(), e.dim, e.theta.len()] {
        out.write_all(&(v as u64).to_le_bytes())?;
    }
    for w in e.theta.as_slice() {
        out.write_all(&w.to_le_bytes())?;
    }
    for i in 0..e.n_nodes() {
        out.write_all(&e.node_id(i).to_le_bytes())?;
    }
    for i in 0..e.n_nodes() {
        for v in e.matrix.row(i).iter() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_array<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

pub fn read_embedding_bin<R: Read>(mut r: R) -> Result<Embedding> {
    if &read_array::<_, 8>(&mut r)? != EMB_MAGIC {
        return Err(Error::Format("not a binary embedding".into()));
    }
    let version = u32::from_le_bytes(read_array(&mut r)?);
    if version != EMB_VERSION {
        return Err(Error::Format(format!(
            "unsupported embedding version {version}"
        )));
    }
    let n = u64::from_le_bytes(read_array(&mut r)?) as usize;
    let d = u64::from_le_bytes(read_array(&mut r)?) as usize;
    let k = u64::from_le_bytes(read_array(&mut r)?) as usize;
    let theta = (0..k)
        .map(|_| Ok(f64::from_le_bytes(read_array(&mut r)?)))
        .collect::<Result<Vec<_>>>()?;
    let ids = (0..n)
        .map(|_| Ok(i64::from_le_bytes(read_array(&mut r)?)))
        .collect::<Result<Vec<_>>>()?;
    let values = (0..n * d)
        .map(|_| Ok(f64::from_le_bytes(read_array(&mut r)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Embedding {
        matrix: DMatrix::from_row_slice(n, d, &values),
        node_ids: Some(ids),
        theta: HopWeights::new(theta)?,
        dim: d,
    })
}

/// Reads `node_id<TAB>label[,label…]` lines. Node ids are mapped through
/// `index` (original id to dense index); unknown nodes are an error. Label
/// names are mapped to dense ids in sorted order (numeric when every label
/// is an integer). Returns the labels and the label names by id.
pub fn read_labels<R: BufRead>(
    reader: R,
    index: &HashMap<i64, usize>,
) -> Result<(LabeledNodes, Vec<String>)> {
    let mut raw: Vec<(usize, Vec<String>)> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.splitn(2, ['\t', ' ']);
        let id: i64 =
            parts
                .next()
                .unwrap_or_default()
                .parse()
                .map_err(|_| Error::MalformedLine {
                    line: lineno + 1,
                    reason: "bad node id".into(),
                })?;
        let &node = index.get(&id).ok_or_else(|| Error::MalformedLine {
            line: lineno + 1,
            reason: format!("unknown node {id}"),
        })?;
        let labels: Vec<String> = parts
            .next()
            .unwrap_or_default()
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        if labels.is_empty() {
            return Err(Error::MalformedLine {
                line: lineno + 1,
                reason: "no labels".into(),
            });
        }
        raw.push((node, labels));
    }
    // Merge repeated lines for the same node.
    raw.sort_by_key(|(node, _)| *node);
    let mut merged: Vec<(usize, Vec<String>)> = Vec::new();
    for (node, labels) in raw {
        match merged.last_mut() {
            Some((last, ls)) if *last == node => ls.extend(labels),
            _ => merged.push((node, labels)),
        }
    }
    let names: BTreeSet<&String> = merged.iter().flat_map(|(_, l)| l).collect();
    let mut names: Vec<String> = names.into_iter().cloned().collect();
    if names.iter().all(|s| s.parse::<i64>().is_ok()) {
        names.sort_by_key(|s| s.parse::<i64>().expect("checked"));
    }
    let id_of: HashMap<&str, usize> = names
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let nodes = merged.iter().map(|(n, _)| *n).collect();
    let labels = merged
        .iter()
        .map(|(_, ls)| ls.iter().map(|s| id_of[s.as_str()]).collect())
        .collect();
    let mut labeled = LabeledNodes::new(nodes, labels)?;
    labeled.n_classes = names.len();
    Ok((labeled, names))
}

/// One row of a metrics table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub task: String,
    pub param: String,
    pub metric: String,
    pub value: f64,
    pub stderr: Option<f64>,
}

pub fn write_metrics_csv<W: Write>(mut out: W, rows: &[MetricRow]) -> Result<()> {
    writeln!(out, "task,param,metric,value,stderr")?;
    for r in rows {
        let stderr = r.stderr.map(|s| format!("{s:.6}")).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{:.6},{}",
            r.task, r.param, r.metric, r.value, stderr
        )?;
    }
    Ok(())
}
