//! Undirected, unweighted graphs in CSR form and the matrix-free operator
//! `S = ½(I + D^{-1/2} A D^{-1/2})`.
//!
//! Node ids from edge-list files are remapped to dense indices `0..N` in
//! ascending order of the original id; the original ids travel alongside the
//! graph in [`LoadedGraph`].

use std::collections::{BTreeSet, HashSet};
use std::io::{BufRead, Write};

use log::warn;
use nalgebra::DMatrix;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::spectral::LinearOperator;

/// Immutable undirected graph. Neighbor lists are sorted and duplicate free,
/// there are no self-loops and every node has degree at least one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsrGraph {
    row_offsets: Vec<usize>,
    neighbors: Vec<usize>,
    degrees: Vec<usize>,
    n_edges: usize,
}

/// Options for [`load_edge_list`].
#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    /// Collapse repeated edges silently. When false a repeated edge is an error.
    pub dedupe: bool,
    /// Drop nodes left without edges (e.g. only listed in self-loops) instead
    /// of failing.
    pub drop_isolated: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            dedupe: true,
            drop_isolated: false,
        }
    }
}

/// A graph together with the original node ids (`ids[i]` is the id of node `i`).
#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: CsrGraph,
    pub ids: Vec<i64>,
}

/// `values[i] = 1/sqrt(deg(i))`.
#[derive(Debug, Clone, PartialEq)]
pub struct InvSqrtDegrees(Vec<f64>);

impl InvSqrtDegrees {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl CsrGraph {
    /// Builds a graph over `n` nodes. Edges are symmetrized, self-loops are
    /// dropped and duplicates collapsed. Fails if a node ends up isolated.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n {
                return Err(Error::IndexOutOfRange { index: u, n });
            }
            if v >= n {
                return Err(Error::IndexOutOfRange { index: v, n });
            }
            if u == v {
                continue;
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        Self::from_adjacency_lists(adj)
    }

    pub(crate) fn from_adjacency_lists(mut adj: Vec<Vec<usize>>) -> Result<Self> {
        let n = adj.len();
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut degrees = Vec::with_capacity(n);
        row_offsets.push(0);
        let mut total = 0usize;
        for (i, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            list.dedup();
            if list.is_empty() {
                return Err(Error::IsolatedNode(i as i64));
            }
            total += list.len();
            degrees.push(list.len());
            row_offsets.push(total);
        }
        if total == 0 {
            return Err(Error::EmptyGraph);
        }
        let neighbors = adj.into_iter().flatten().collect();
        Ok(Self {
            row_offsets,
            neighbors,
            degrees,
            n_edges: total / 2,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.degrees.len()
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degrees[i]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[self.row_offsets[i]..self.row_offsets[i + 1]]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.n_nodes() && j < self.n_nodes() && self.neighbors(i).binary_search(&j).is_ok()
    }

    /// Undirected edges as `(i, j)` with `i < j`, in row order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_nodes()).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .copied()
                .filter(move |&j| j > i)
                .map(move |j| (i, j))
        })
    }

    pub fn inv_sqrt_degrees(&self) -> InvSqrtDegrees {
        InvSqrtDegrees(
            self.degrees
                .iter()
                .map(|&d| 1.0 / (d as f64).sqrt())
                .collect(),
        )
    }

    /// The similarity operator `S` of this graph.
    pub fn similarity_operator(&self) -> SimilarityOperator<'_> {
        SimilarityOperator::new(self)
    }

    /// A new graph without `edges`. Pairs may be given in either orientation.
    pub fn remove_edges(&self, edges: &[(usize, usize)]) -> Result<CsrGraph> {
        let n = self.n_nodes();
        let mut removed: HashSet<(usize, usize)> = HashSet::with_capacity(edges.len());
        for &(u, v) in edges {
            if !self.has_edge(u, v) {
                return Err(Error::EdgeNotFound(u, v));
            }
            removed.insert((u.min(v), u.max(v)));
        }
        let mut degrees = self.degrees.clone();
        for &(u, v) in &removed {
            degrees[u] -= 1;
            degrees[v] -= 1;
        }
        if let Some(i) = degrees.iter().position(|&d| d == 0) {
            return Err(Error::WouldIsolate(i));
        }
        let mut row_offsets = Vec::with_capacity(n + 1);
        row_offsets.push(0);
        let mut neighbors = Vec::with_capacity(self.neighbors.len() - 2 * removed.len());
        for i in 0..n {
            for &j in self.neighbors(i) {
                if !removed.contains(&(i.min(j), i.max(j))) {
                    neighbors.push(j);
                }
            }
            row_offsets.push(neighbors.len());
        }
        Ok(CsrGraph {
            row_offsets,
            neighbors,
            degrees,
            n_edges: self.n_edges - removed.len(),
        })
    }

    /// SHA-256 over the node count and the CSR arrays.
    pub fn content_hash(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        hasher.update((self.n_nodes() as u64).to_le_bytes());
        for &o in &self.row_offsets {
            hasher.update((o as u64).to_le_bytes());
        }
        for &j in &self.neighbors {
            hasher.update((j as u64).to_le_bytes());
        }
        hasher.finalize().into()
    }

    pub fn adjacency_dense(&self) -> DMatrix<f64> {
        let n = self.n_nodes();
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            for &j in self.neighbors(i) {
                a[(i, j)] = 1.0;
            }
        }
        a
    }

    /// Graph from a dense symmetric 0/1 matrix (nonzero entries are edges).
    pub fn from_dense(a: &DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                got: a.ncols(),
            });
        }
        let n = a.nrows();
        let adj = (0..n)
            .map(|i| (0..n).filter(|&j| j != i && a[(i, j)] != 0.0).collect())
            .collect();
        Self::from_adjacency_lists(adj)
    }

    /// Writes sorted `(min, max)` pairs, one per line, using `ids` when given.
    pub fn write_edge_list<W: Write>(&self, ids: Option<&[i64]>, mut out: W) -> Result<()> {
        let mut pairs: Vec<(i64, i64)> = self
            .edges()
            .map(|(i, j)| match ids {
                Some(ids) => (ids[i].min(ids[j]), ids[i].max(ids[j])),
                None => (i as i64, j as i64),
            })
            .collect();
        pairs.sort_unstable();
        for (u, v) in pairs {
            writeln!(out, "{u} {v}")?;
        }
        Ok(())
    }
}

/// Parses a whitespace separated edge list. Lines starting with `#` or `%`
/// and blank lines are skipped; tokens past the first two are ignored.
pub fn load_edge_list<R: BufRead>(reader: R, opts: LoadOptions) -> Result<LoadedGraph> {
    let mut raw: Vec<(i64, i64)> = Vec::new();
    let mut seen_ids: BTreeSet<i64> = BTreeSet::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let mut parse = |what: &str| -> Result<i64> {
            let tok = tokens.next().ok_or_else(|| Error::MalformedLine {
                line: lineno + 1,
                reason: format!("missing {what} node"),
            })?;
            tok.parse::<i64>().map_err(|_| Error::MalformedLine {
                line: lineno + 1,
                reason: format!("non-integer token {tok:?}"),
            })
        };
        let u = parse("source")?;
        let v = parse("target")?;
        seen_ids.insert(u);
        seen_ids.insert(v);
        raw.push((u, v));
    }
    if raw.is_empty() {
        return Err(Error::EmptyGraph);
    }

    let mut unique: HashSet<(i64, i64)> = HashSet::with_capacity(raw.len());
    let mut cleaned: Vec<(i64, i64)> = Vec::with_capacity(raw.len());
    let mut with_edges: BTreeSet<i64> = BTreeSet::new();
    for (u, v) in raw {
        if u == v {
            continue;
        }
        let key = (u.min(v), u.max(v));
        if !unique.insert(key) {
            if !opts.dedupe {
                return Err(Error::DuplicateEdge(key.0, key.1));
            }
            continue;
        }
        with_edges.insert(u);
        with_edges.insert(v);
        cleaned.push(key);
    }
    if cleaned.is_empty() {
        return Err(Error::EmptyGraph);
    }
    if let Some(&lonely) = seen_ids.difference(&with_edges).next() {
        if !opts.drop_isolated {
            return Err(Error::IsolatedNode(lonely));
        }
        warn!(
            "dropping {} isolated node(s)",
            seen_ids.len() - with_edges.len()
        );
    }

    let ids: Vec<i64> = with_edges.into_iter().collect();
    let index = |id: i64| ids.binary_search(&id).expect("id present");
    let edges: Vec<(usize, usize)> = cleaned.iter().map(|&(u, v)| (index(u), index(v))).collect();
    let graph = CsrGraph::from_edges(ids.len(), &edges)?;
    Ok(LoadedGraph { graph, ids })
}

/// Matrix-free `S = ½(I + D^{-1/2} A D^{-1/2})`.
///
/// Each output row is a sequential sum over that row's sorted neighbor list,
/// so the result is identical with and without the parallel row split.
#[derive(Debug, Clone)]
pub struct SimilarityOperator<'g> {
    graph: &'g CsrGraph,
    inv_sqrt: InvSqrtDegrees,
    parallel: bool,
}

impl<'g> SimilarityOperator<'g> {
    pub fn new(graph: &'g CsrGraph) -> Self {
        Self {
            graph,
            inv_sqrt: graph.inv_sqrt_degrees(),
            parallel: false,
        }
    }

    /// Split rows across the rayon pool.
    pub fn parallel(mut self, on: bool) -> Self {
        self.parallel = on;
        self
    }

    pub fn graph(&self) -> &CsrGraph {
        self.graph
    }

    fn row(&self, i: usize, x: &[f64]) -> f64 {
        let w = self.inv_sqrt.values();
        let acc: f64 = self.graph.neighbors(i).iter().map(|&j| w[j] * x[j]).sum();
        0.5 * (x[i] + w[i] * acc)
    }

    /// `y = S x`, checked.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.graph.n_nodes();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; n];
        self.apply(x, &mut y);
        Ok(y)
    }
}

impl LinearOperator for SimilarityOperator<'_> {
    fn dim(&self) -> usize {
        self.graph.n_nodes()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        if self.parallel {
            y.par_iter_mut()
                .enumerate()
                .with_min_len(256)
                .for_each(|(i, yi)| *yi = self.row(i, x));
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = self.row(i, x);
            }
        }
    }
}

/// `y = S x` for graph `g`.
pub fn s_matvec(g: &CsrGraph, x: &[f64]) -> Result<Vec<f64>> {
    g.similarity_operator().matvec(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<LoadedGraph> {
        load_edge_list(text.as_bytes(), LoadOptions::default())
    }

    #[test]
    fn path_graph_from_lines() {
        let g = load("0 1\n1 2").unwrap().graph;
        assert_eq!(g.n_nodes(), 3);
        assert_eq!(g.n_edges(), 2);
        assert_eq!(g.degrees(), &[1, 2, 1]);
    }

    #[test]
    fn duplicates_and_self_loops_cleaned() {
        let g = load("0 1\n1 0\n0 0").unwrap().graph;
        assert_eq!(g.n_nodes(), 2);
        assert_eq!(g.n_edges(), 1);
    }

    #[test]
    fn strict_mode_rejects_duplicates() {
        let err = load_edge_list(
            "0 1\n1 0".as_bytes(),
            LoadOptions {
                dedupe: false,
                drop_isolated: false,
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateEdge(0, 1)));
    }

    #[test]
    fn comments_and_sparse_ids() {
        let loaded = load("# header\n% other\n10 -3\n\n-3 42\n").unwrap();
        assert_eq!(loaded.ids, vec![-3, 10, 42]);
        assert_eq!(loaded.graph.degrees(), &[2, 1, 1]);
    }

    #[test]
    fn malformed_and_empty() {
        assert!(matches!(
            load("0 x"),
            Err(Error::MalformedLine { line: 1, .. })
        ));
        assert!(matches!(load("0"), Err(Error::MalformedLine { .. })));
        assert!(matches!(load("# nothing\n"), Err(Error::EmptyGraph)));
        assert!(matches!(load("3 3\n"), Err(Error::EmptyGraph)));
    }

    #[test]
    fn isolated_node_policy() {
        assert!(matches!(load("0 1\n5 5"), Err(Error::IsolatedNode(5))));
        let loaded = load_edge_list(
            "0 1\n5 5".as_bytes(),
            LoadOptions {
                dedupe: true,
                drop_isolated: true,
            },
        )
        .unwrap();
        assert_eq!(loaded.ids, vec![0, 1]);
    }

    #[test]
    fn k2_matvec() {
        let g = CsrGraph::from_edges(2, &[(0, 1)]).unwrap();
        let y = s_matvec(&g, &[1.0, 0.0]).unwrap();
        assert_eq!(y, vec![0.5, 0.5]);
    }

    #[test]
    fn perron_vector_is_fixed() {
        let g = CsrGraph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 0), (0, 4), (2, 4)]).unwrap();
        let x: Vec<f64> = g.degrees().iter().map(|&d| (d as f64).sqrt()).collect();
        let y = s_matvec(&g, &x).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn matvec_dimension_checked() {
        let g = CsrGraph::from_edges(2, &[(0, 1)]).unwrap();
        assert!(matches!(
            s_matvec(&g, &[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn remove_from_triangle() {
        let g = CsrGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let h = g.remove_edges(&[(1, 0)]).unwrap();
        assert_eq!(h.degrees(), &[1, 1, 2]);
        assert_eq!(h.edges().collect::<Vec<_>>(), vec![(0, 2), (1, 2)]);
        assert_eq!(g.n_edges(), 3);
    }

    #[test]
    fn remove_errors() {
        let g = CsrGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(matches!(
            g.remove_edges(&[(0, 1)]),
            Err(Error::WouldIsolate(0))
        ));
        assert!(matches!(
            g.remove_edges(&[(0, 2)]),
            Err(Error::EdgeNotFound(0, 2))
        ));
    }

    #[test]
    fn serialization_round_trip() {
        let loaded = load("7 3\n3 9\n9 7\n9 11\n").unwrap();
        let mut buf = Vec::new();
        loaded
            .graph
            .write_edge_list(Some(&loaded.ids), &mut buf)
            .unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "3 7\n3 9\n7 9\n9 11\n"
        );
        let again = load_edge_list(buf.as_slice(), LoadOptions::default()).unwrap();
        assert_eq!(again.graph, loaded.graph);
        assert_eq!(again.ids, loaded.ids);
    }

    #[test]
    fn parallel_matches_sequential_bitwise() {
        let edges: Vec<(usize, usize)> = (0..600).map(|i| (i, (i * 7 + 1) % 600)).collect();
        let g = CsrGraph::from_edges(600, &edges).unwrap();
        let x: Vec<f64> = (0..600).map(|i| (i as f64 * 0.37).sin()).collect();
        let seq = g.similarity_operator().matvec(&x).unwrap();
        let par = g.similarity_operator().parallel(true).matvec(&x).unwrap();
        assert_eq!(seq, par);
    }
}
