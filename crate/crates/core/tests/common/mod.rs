#![allow(dead_code)]

use std::collections::BTreeSet;
use std::io::Write;

use ase_core::CsrGraph;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

/// Ring plus independent random chords with probability `p`; always connected.
pub fn random_connected<R: Rng>(n: usize, p: f64, rng: &mut R) -> CsrGraph {
    let mut edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    for i in 0..n {
        for j in i + 2..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    CsrGraph::from_edges(n, &edges).unwrap()
}

/// Ring plus `extra` distinct random chords, for large sparse graphs.
pub fn ring_with_chords<R: Rng>(n: usize, extra: usize, rng: &mut R) -> CsrGraph {
    let mut set = BTreeSet::new();
    for i in 0..n {
        let j = (i + 1) % n;
        set.insert((i.min(j), i.max(j)));
    }
    while set.len() < n + extra {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u != v {
            set.insert((u.min(v), u.max(v)));
        }
    }
    let edges: Vec<_> = set.into_iter().collect();
    CsrGraph::from_edges(n, &edges).unwrap()
}

/// Dense `½(I + D^{-1/2} A D^{-1/2})` assembled entry by entry from the edge list.
pub fn dense_similarity(g: &CsrGraph) -> DMatrix<f64> {
    let n = g.n_nodes();
    let mut s = DMatrix::identity(n, n) * 0.5;
    for (i, j) in g.edges() {
        let w = 0.5 / ((g.degree(i) * g.degree(j)) as f64).sqrt();
        s[(i, j)] += w;
        s[(j, i)] += w;
    }
    s
}

/// Full eigendecomposition, eigenvalues descending.
pub fn dense_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(m.nrows(), m.ncols());
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

/// Sample (centered) Pearson correlation of two vectors.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

/// Writes straight to the process stderr, bypassing the test harness capture.
pub fn report(line: &str) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{line}");
}
