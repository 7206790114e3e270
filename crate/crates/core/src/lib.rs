//! Node embeddings from an adaptive multihop similarity.
//!
//! Embeddings factorize `S_G(θ) = Σ_k θ_k S^k` with
//! `S = ½(I + D^{-1/2} A D^{-1/2})`. Since every power of `S` shares its
//! eigenvectors, a single truncated eigendecomposition gives
//! `E = U_d √Λ_d(θ)` for any hop weights `θ` on the simplex. The weights are
//! learned without labels by removing a sample of edges and fitting a
//! simplex-constrained hinge-loss SVM that separates removed edges from
//! sampled non-edges.
//!
//! Module map:
//! - [`graph`]: CSR graphs, edge-list IO, the matrix-free operator `S`.
//! - [`spectral`]: thick-restart Lanczos and the weighted spectrum.
//! - [`cache`]: on-disk cache of spectral bases.
//! - [`sampling`]: positive/negative edge sampling.
//! - [`trainer`]: pair features, simplex projection, the SVM and `θ` learning.
//! - [`embedder`]: embedding assembly and the end-to-end pipeline.
//! - [`simlab`]: dense SBM laboratory (QoM study, baselines, random-walk identity).
//! - [`downstream`]: classification, link prediction, k-means and conductance.
//! - [`io`]: text and binary output formats.

pub mod cache;
pub mod downstream;
pub mod embedder;
pub mod error;
pub mod graph;
pub mod io;
pub mod sampling;
pub mod simlab;
pub mod simplex;
pub mod spectral;
pub mod trainer;

pub use embedder::{ase_pipeline, embed, Embedding, PipelineOptions, PipelineOutput};
pub use error::{Error, Result};
pub use graph::{load_edge_list, s_matvec, CsrGraph, LoadOptions, LoadedGraph};
pub use sampling::{sample_edges, EdgeSample};
pub use simplex::{simplex_project, HopWeights};
pub use spectral::{decompose_graph, SpectralConfig};
pub use spectral::{
    truncated_evd, weighted_spectrum, LanczosOptions, LinearOperator, SpectralBasis,
};
pub use trainer::{learn_theta, simplex_svm, train_round, Loss, TrainerConfig};

/// Deterministic per-stream generator derived from a master seed.
pub fn stream_rng(master_seed: u64, stream: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}
