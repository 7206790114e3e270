//! Embedding assembly `E = U_d √Λ_d(θ)` and the end-to-end pipeline.

use log::info;
use nalgebra::DMatrix;
use rand::Rng;

use crate::cache::SpectralCache;
use crate::error::{Error, Result};
use crate::graph::CsrGraph;
use crate::simplex::HopWeights;
use crate::spectral::{decompose_graph, weighted_spectrum, SpectralBasis, SpectralConfig};
use crate::trainer::{learn_theta, SvmFit, TrainerConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    /// `N × d`, row `i` is the embedding of node `i`.
    pub matrix: DMatrix<f64>,
    /// Original node ids, when the graph was loaded from a file.
    pub node_ids: Option<Vec<i64>>,
    pub theta: HopWeights,
    pub dim: usize,
}

impl Embedding {
    pub fn n_nodes(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.matrix.row(i).iter().copied().collect()
    }

    /// Original id of node `i`, or `i` itself.
    pub fn node_id(&self, i: usize) -> i64 {
        self.node_ids.as_ref().map_or(i as i64, |ids| ids[i])
    }

    /// Columns scaled to unit norm; with `θ = e_1` this is the plain spectral
    /// embedding `U_d`.
    pub fn column_normalized(&self) -> DMatrix<f64> {
        let mut m = self.matrix.clone();
        for mut col in m.column_iter_mut() {
            let norm = col.norm();
            if norm > 0.0 {
                col /= norm;
            }
        }
        m
    }

    /// `E Eᵀ`, dense.
    pub fn gram(&self) -> DMatrix<f64> {
        &self.matrix * self.matrix.transpose()
    }
}

/// `E = U_d √max(Λ_d(θ), 0)`.
pub fn embed(basis: &SpectralBasis, theta: &HopWeights) -> Embedding {
    let spectrum = weighted_spectrum(&basis.eigvals, theta);
    let mut matrix = basis.eigvecs.clone();
    for (mut col, &s) in matrix.column_iter_mut().zip(spectrum.values()) {
        col *= s.max(0.0).sqrt();
    }
    Embedding {
        matrix,
        node_ids: None,
        theta: theta.clone(),
        dim: basis.dim(),
    }
}

#[derive(Debug, Clone, Default)]
pub struct PipelineOptions {
    pub spectral: SpectralConfig,
    /// Skip training and embed with these weights.
    pub forced_theta: Option<HopWeights>,
    pub cache: Option<SpectralCache>,
}

/// Learned (or forced) weights, the embedding and the per-round fits.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub theta: HopWeights,
    pub embedding: Embedding,
    pub rounds: Vec<SvmFit>,
    pub basis: SpectralBasis,
}

/// Full-graph basis, through the cache when one is configured.
pub fn full_basis(g: &CsrGraph, opts: &PipelineOptions, seed: u64) -> Result<SpectralBasis> {
    let d = opts.spectral.dim;
    let Some(cache) = &opts.cache else {
        return decompose_graph(g, &opts.spectral, seed);
    };
    let hash = g.content_hash();
    if let Some(basis) = cache.load(&hash, d)? {
        if basis.residuals.iter().all(|&r| r <= opts.spectral.tol) && basis.n() == g.n_nodes() {
            return Ok(basis);
        }
    }
    let basis = decompose_graph(g, &opts.spectral, seed)?;
    cache.store(&hash, &basis)?;
    Ok(basis)
}

/// Learns `θ` on edge-sampled residual graphs, decomposes the full graph and
/// assembles the embedding.
pub fn ase_pipeline(
    g: &CsrGraph,
    cfg: &TrainerConfig,
    opts: &PipelineOptions,
    seed: u64,
) -> Result<PipelineOutput> {
    cfg.validate()?;
    if opts.spectral.dim == 0 {
        return Err(Error::InvalidParameter(
            "embedding dimension must be positive".into(),
        ));
    }
    let (theta, rounds) = match &opts.forced_theta {
        Some(theta) => (theta.clone(), Vec::new()),
        None => {
            let learned = learn_theta(g, cfg, &opts.spectral, seed)?;
            info!("learned hop weights {:?}", learned.theta.as_slice());
            (learned.theta, learned.rounds)
        }
    };
    // Rounds use streams 0..T_s; the full-graph decomposition uses the last one.
    let lanczos_seed = crate::stream_rng(seed, u64::MAX).random::<u64>();
    let basis = full_basis(g, opts, lanczos_seed)?;
    let embedding = embed(&basis, &theta);
    Ok(PipelineOutput {
        theta,
        embedding,
        rounds,
        basis,
    })
}
