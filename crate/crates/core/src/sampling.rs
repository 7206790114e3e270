//! Positive-edge and negative-pair sampling.
//!
//! Positives are removed one at a time from a working copy of the graph: draw
//! `v1` uniformly over all nodes, then `v2` uniformly over the current
//! neighbors of `v1`, and remove the edge only if both endpoints still have
//! degree greater than one. No node of the residual graph is ever isolated.
//! Under this scheme edge `(i, j)` is picked with probability proportional to
//! `1/d_i + 1/d_j`.
//!
//! Negatives are drawn uniformly from `V × V` and rejected when they are an
//! edge of the original graph, a self-pair or a repeat.

use std::collections::HashSet;
use std::io::Write;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::CsrGraph;

/// Draw budget per sample size: `max_attempts = ATTEMPTS_PER_SAMPLE · n_s`.
pub const ATTEMPTS_PER_SAMPLE: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSample {
    /// Removed edges, as `(v1, v2)` in draw order.
    pub positives: Vec<(usize, usize)>,
    /// Sampled non-edges, `(min, max)`.
    pub negatives: Vec<(usize, usize)>,
    /// The input graph without `positives`.
    pub residual: CsrGraph,
}

impl EdgeSample {
    /// Writes positives then negatives as `u v label` lines (`1` / `-1`).
    pub fn write_pairs<W: Write>(&self, ids: Option<&[i64]>, mut out: W) -> Result<()> {
        let name = |i: usize| ids.map_or(i as i64, |ids| ids[i]);
        for &(u, v) in &self.positives {
            writeln!(out, "{} {} 1", name(u), name(v))?;
        }
        for &(u, v) in &self.negatives {
            writeln!(out, "{} {} -1", name(u), name(v))?;
        }
        Ok(())
    }
}

/// Draws `n_s/2` removable edges and `n_s/2` non-edges with the default
/// attempt budget.
pub fn sample_edges<R: Rng + ?Sized>(g: &CsrGraph, n_s: usize, rng: &mut R) -> Result<EdgeSample> {
    sample_edges_with_budget(g, n_s, ATTEMPTS_PER_SAMPLE * n_s, rng)
}

pub fn sample_edges_with_budget<R: Rng + ?Sized>(
    g: &CsrGraph,
    n_s: usize,
    max_attempts: usize,
    rng: &mut R,
) -> Result<EdgeSample> {
    if n_s == 0 || !n_s.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "sample size must be a positive even number, got {n_s}"
        )));
    }
    let half = n_s / 2;
    if half >= g.n_edges() {
        return Err(Error::InvalidParameter(format!(
            "cannot remove {half} of {} edges",
            g.n_edges()
        )));
    }
    let positives = sample_positives(g, half, max_attempts, rng)?;
    let negatives = sample_negatives(g, half, max_attempts, rng)?;
    let residual = g.remove_edges(&positives)?;
    Ok(EdgeSample {
        positives,
        negatives,
        residual,
    })
}

fn sample_positives<R: Rng + ?Sized>(
    g: &CsrGraph,
    wanted: usize,
    max_attempts: usize,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    let n = g.n_nodes();
    let mut adj: Vec<Vec<usize>> = (0..n).map(|i| g.neighbors(i).to_vec()).collect();
    let mut out = Vec::with_capacity(wanted);
    let mut attempts = 0;
    while out.len() < wanted {
        if attempts == max_attempts {
            return Err(Error::PositiveExhausted {
                wanted,
                found: out.len(),
            });
        }
        attempts += 1;
        let v1 = rng.random_range(0..n);
        if adj[v1].len() <= 1 {
            continue;
        }
        let v2 = adj[v1][rng.random_range(0..adj[v1].len())];
        if adj[v2].len() <= 1 {
            continue;
        }
        let p = adj[v1]
            .iter()
            .position(|&x| x == v2)
            .expect("symmetric adjacency");
        adj[v1].swap_remove(p);
        let p = adj[v2]
            .iter()
            .position(|&x| x == v1)
            .expect("symmetric adjacency");
        adj[v2].swap_remove(p);
        out.push((v1, v2));
    }
    Ok(out)
}

fn sample_negatives<R: Rng + ?Sized>(
    g: &CsrGraph,
    wanted: usize,
    max_attempts: usize,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    let n = g.n_nodes();
    let mut seen = HashSet::with_capacity(wanted);
    let mut out = Vec::with_capacity(wanted);
    let mut attempts = 0;
    while out.len() < wanted {
        if attempts == max_attempts {
            return Err(Error::NegativeExhausted {
                wanted,
                found: out.len(),
            });
        }
        attempts += 1;
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u == v || g.has_edge(u, v) {
            continue;
        }
        let pair = (u.min(v), u.max(v));
        if seen.insert(pair) {
            out.push(pair);
        }
    }
    Ok(out)
}
