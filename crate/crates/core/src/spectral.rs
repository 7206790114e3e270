//! Truncated eigendecomposition of symmetric PSD operators.
//!
//! [`truncated_evd`] runs Lanczos with full (two-pass) reorthogonalization
//! and thick restarts. The projected matrix `H = VᵀAV` is kept explicitly, so
//! after a restart it holds the retained Ritz values on its diagonal plus the
//! coupling column of the restart vector. Ritz pairs are extracted from `H`
//! with a dense symmetric eigensolver.
//!
//! Once the wanted pairs look converged a fresh random direction is injected
//! once per missed eigenvalue. A single-vector Krylov space cannot see a
//! second copy of a repeated eigenvalue, and the probe is how such copies get
//! picked up.

use nalgebra::{DMatrix, DMatrixView, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::CsrGraph;
use crate::simplex::HopWeights;

/// A symmetric linear map `y = A x` on `R^n`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.nrows();
        for (i, yi) in y.iter_mut().enumerate().take(n) {
            *yi = (0..n).map(|j| self[(i, j)] * x[j]).sum();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    /// Residual tolerance `‖A u − λ u‖₂` for every returned pair.
    pub tol: f64,
    /// Matvec budget. `None` means `50·d`.
    pub max_iter: Option<usize>,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: None,
            seed: 0,
        }
    }
}

/// Top-`d` eigenpairs, eigenvalues non-increasing, eigenvectors as
/// orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    pub eigvecs: DMatrix<f64>,
    pub eigvals: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Matvecs spent, including the final residual check.
    pub matvecs: usize,
}

impl SpectralBasis {
    pub fn dim(&self) -> usize {
        self.eigvals.len()
    }

    pub fn n(&self) -> usize {
        self.eigvecs.nrows()
    }

    /// `U_d U_dᵀ`; dense, for tests and small graphs.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.eigvecs * self.eigvecs.transpose()
    }
}

/// `Λ_d(θ)_l = Σ_k θ_k λ_l^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSpectrum(pub Vec<f64>);

impl WeightedSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Evaluates the hop polynomial at every eigenvalue (Horner form).
pub fn weighted_spectrum(eigvals: &[f64], theta: &HopWeights) -> WeightedSpectrum {
    WeightedSpectrum(
        eigvals
            .iter()
            .map(|&l| hop_polynomial(l, theta.as_slice()))
            .collect(),
    )
}

pub(crate) fn hop_polynomial(lambda: f64, theta: &[f64]) -> f64 {
    let mut acc = 0.0;
    for &t in theta.iter().rev() {
        acc = acc * lambda + t;
    }
    acc * lambda
}

/// Column-major `n × cap` block of Krylov vectors.
struct Basis {
    n: usize,
    data: Vec<f64>,
}

impl Basis {
    fn new(n: usize, cap: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * cap],
        }
    }

    fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.n..(j + 1) * self.n]
    }

    fn view(&self, cols: usize) -> DMatrixView<'_, f64> {
        DMatrixView::from_slice(&self.data[..cols * self.n], self.n, cols)
    }

    /// Orthogonalizes `w` against columns `0..cols` twice; returns the summed
    /// coefficients.
    fn orthogonalize(&self, cols: usize, w: &mut [f64]) -> Vec<f64> {
        let mut coeffs = vec![0.0; cols];
        for _ in 0..2 {
            for (i, c) in coeffs.iter_mut().enumerate() {
                let v = self.col(i);
                let h = dot(v, w);
                axpy(-h, v, w);
                *c += h;
            }
        }
        coeffs
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

fn random_unit(rng: &mut ChaCha8Rng, basis: &Basis, cols: usize) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..basis.n).map(|_| rng.random::<f64>() - 0.5).collect();
        let before = norm(&v);
        basis.orthogonalize(cols, &mut v);
        let after = norm(&v);
        if after > 1e-8 * before {
            v.iter_mut().for_each(|x| *x /= after);
            return v;
        }
    }
}

/// Ritz pairs of the symmetric part of `h`, eigenvalues descending.
fn ritz(h: &DMatrix<f64>, m: usize) -> (Vec<f64>, DMatrix<f64>) {
    let block = h.view((0, 0), (m, m));
    let sym = (block + block.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(m, m);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

/// Top-`d` eigenpairs of a symmetric PSD operator.
///
/// Deterministic for a given `seed`. Columns are sign-normalized so that the
/// entry of largest magnitude is positive.
pub fn truncated_evd<O: LinearOperator + ?Sized>(
    op: &O,
    d: usize,
    opts: &LanczosOptions,
) -> Result<SpectralBasis> {
    let n = op.dim();
    if d == 0 {
        return Err(Error::InvalidParameter(
            "need at least one eigenpair".into(),
        ));
    }
    if d >= n {
        return Err(Error::DimensionTooLarge { d, n });
    }
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let budget = opts.max_iter.unwrap_or(50 * d);
    let m = n.min((2 * d).max(d + 40));
    let keep = (d + (m - d) / 2).min(m - 1);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut basis = Basis::new(n, m);
    let mut h = DMatrix::<f64>::zeros(m, m);
    let mut w = vec![0.0; n];
    let mut matvecs = 0usize;

    let v0 = random_unit(&mut rng, &basis, 0);
    basis.col_mut(0).copy_from_slice(&v0);
    let mut start = 0usize;
    let mut probes_left = d;
    // Ritz values recorded when the last probe was injected.
    let mut probed_at: Option<Vec<f64>> = None;

    loop {
        let mut residual_norm = 0.0;
        for j in start..m {
            op.apply(basis.col(j), &mut w);
            matvecs += 1;
            let coeffs = basis.orthogonalize(j + 1, &mut w);
            for (i, &c) in coeffs.iter().enumerate() {
                h[(i, j)] = c;
                h[(j, i)] = c;
            }
            let beta = norm(&w);
            let scale = h[(j, j)].abs().max(1.0);
            if j + 1 < m {
                if beta <= 1e-12 * scale {
                    let v = random_unit(&mut rng, &basis, j + 1);
                    basis.col_mut(j + 1).copy_from_slice(&v);
                } else {
                    let next = basis.col_mut(j + 1);
                    for (dst, src) in next.iter_mut().zip(&w) {
                        *dst = src / beta;
                    }
                }
            } else {
                residual_norm = beta;
            }
        }

        let (theta, y) = ritz(&h, m);
        let mut worst = (0..d)
            .map(|i| (residual_norm * y[(m - 1, i)]).abs())
            .fold(0.0, f64::max);
        let kept = keep.max(d);
        let ritz_vecs = basis.view(m) * y.columns(0, kept);

        let mut probe = false;
        if worst <= opts.tol {
            let moved = match &probed_at {
                Some(prev) => theta
                    .iter()
                    .zip(prev)
                    .take(d)
                    .any(|(a, b)| (a - b).abs() > opts.tol),
                None => true,
            };
            if m < n && moved && probes_left > 0 {
                probe = true;
            } else {
                let (eigvecs, residuals) = finalize(op, &ritz_vecs, &theta, d, &mut matvecs);
                let explicit = residuals.iter().cloned().fold(0.0, f64::max);
                if explicit <= opts.tol {
                    return Ok(SpectralBasis {
                        eigvecs,
                        eigvals: theta[..d].to_vec(),
                        residuals,
                        matvecs,
                    });
                }
                worst = explicit;
            }
        }

        if matvecs >= budget {
            return Err(Error::NoConvergence {
                iterations: matvecs,
                worst_residual: worst,
            });
        }

        // Thick restart: keep the leading Ritz vectors and continue from the
        // residual direction, or from a random probe.
        for l in 0..kept {
            basis
                .col_mut(l)
                .copy_from_slice(ritz_vecs.column(l).as_slice());
        }
        h.fill(0.0);
        for l in 0..kept {
            h[(l, l)] = theta[l];
        }
        let next = if probe || residual_norm <= 1e-12 {
            random_unit(&mut rng, &basis, kept)
        } else {
            let mut v: Vec<f64> = w.iter().map(|x| x / residual_norm).collect();
            basis.orthogonalize(kept, &mut v);
            let nv = norm(&v);
            if nv < 1e-8 {
                random_unit(&mut rng, &basis, kept)
            } else {
                v.iter_mut().for_each(|x| *x /= nv);
                v
            }
        };
        basis.col_mut(kept).copy_from_slice(&next);
        if probe {
            probes_left -= 1;
            probed_at = Some(theta[..d].to_vec());
        } else {
            probed_at = None;
        }
        start = kept;
    }
}

/// Sign-normalized eigenvectors and explicit residuals `‖A u − λ u‖`.
fn finalize<O: LinearOperator + ?Sized>(
    op: &O,
    ritz_vecs: &DMatrix<f64>,
    theta: &[f64],
    d: usize,
    matvecs: &mut usize,
) -> (DMatrix<f64>, Vec<f64>) {
    let n = ritz_vecs.nrows();
    let mut eigvecs = ritz_vecs.columns(0, d).into_owned();
    let mut residuals = Vec::with_capacity(d);
    let mut au = vec![0.0; n];
    for (l, mut col) in eigvecs.column_iter_mut().enumerate() {
        let pivot = col
            .iter()
            .cloned()
            .fold(0.0_f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        if pivot < 0.0 {
            col.neg_mut();
        }
        op.apply(col.as_slice(), &mut au);
        *matvecs += 1;
        let r = au
            .iter()
            .zip(col.iter())
            .map(|(a, b)| (a - theta[l] * b).powi(2))
            .sum::<f64>()
            .sqrt();
        residuals.push(r);
    }
    (eigvecs, residuals)
}

/// How to decompose the similarity operator of a graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConfig {
    /// Number of eigenpairs `d`.
    pub dim: usize,
    pub tol: f64,
    /// Matvec budget, `None` for `50·d`.
    pub max_iter: Option<usize>,
    /// Split matvec rows across the rayon pool.
    pub parallel: bool,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            dim: 100,
            tol: 1e-8,
            max_iter: None,
            parallel: false,
        }
    }
}

/// Top-`cfg.dim` eigenpairs of `S` for graph `g`.
pub fn decompose_graph(g: &CsrGraph, cfg: &SpectralConfig, seed: u64) -> Result<SpectralBasis> {
    let op = g.similarity_operator().parallel(cfg.parallel);
    let opts = LanczosOptions {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        seed,
    };
    truncated_evd(&op, cfg.dim, &opts)
}
