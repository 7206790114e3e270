//! Learning hop weights `θ` without labels.
//!
//! A training round removes a sample of edges, decomposes the residual graph
//! and fits a simplex-constrained linear classifier that scores the removed
//! edges above sampled non-edges. The feature of a pair `(i, j)` is
//! `x_k = Σ_l u_i[l] u_j[l] λ_l^k`, so `xᵀθ` is exactly the embedded
//! similarity `e_i(θ)·e_j(θ)`.

use log::{debug, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::CsrGraph;
use crate::sampling::sample_edges;
use crate::simplex::{simplex_project, HopWeights};
use crate::spectral::{decompose_graph, SpectralBasis, SpectralConfig};

/// Per-sample loss minimized over the simplex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Loss {
    /// `max(0, ε − y·xᵀθ)`.
    #[default]
    Hinge,
    /// `(ε − y·xᵀθ)²`.
    LeastSquares,
    /// `log(1 + exp(−y·xᵀθ/ε))`.
    Logistic,
    /// The vertex `e_k` with the smallest hinge objective.
    BestSingleHop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerConfig {
    /// Largest hop `K`.
    pub max_hop: usize,
    /// Hinge margin `ε`.
    pub margin: f64,
    /// L2 regularizer `λ`.
    pub reg: f64,
    /// Step scale `a` in `η_t = a/√t`.
    pub step_scale: f64,
    /// Stop once `‖θ_t − θ_{t−1}‖_∞ < tol`.
    pub tol: f64,
    pub max_pgd_iters: usize,
    /// Total pairs per round `N_s` (half positive, half negative).
    pub n_samples: usize,
    /// Rounds `T_s` averaged into the final `θ`.
    pub rounds: usize,
    pub loss: Loss,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            max_hop: 10,
            margin: 1e-3,
            reg: 1.0,
            step_scale: 1.0,
            tol: 1e-5,
            max_pgd_iters: 10_000,
            n_samples: 2000,
            rounds: 1,
            loss: Loss::Hinge,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if self.max_hop == 0 {
            return bad("max hop must be at least 1");
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return bad("margin must be positive");
        }
        if !(self.reg >= 0.0 && self.reg.is_finite()) {
            return bad("regularizer must be nonnegative");
        }
        if !(self.step_scale > 0.0 && self.step_scale.is_finite()) {
            return bad("step scale must be positive");
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return bad("tolerance must be positive");
        }
        if self.max_pgd_iters == 0 {
            return bad("need at least one gradient step");
        }
        if self.n_samples < 2 || !self.n_samples.is_multiple_of(2) {
            return bad("sample count must be a positive even number");
        }
        if self.rounds == 0 {
            return bad("need at least one round");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairFeature {
    pub x: Vec<f64>,
    /// `+1` for an edge, `−1` for a non-edge.
    pub label: f64,
}

/// Features `x_k = Σ_l u_i[l] u_j[l] λ_l^k` for `k = 1..=max_hop`.
pub fn pair_features(
    basis: &SpectralBasis,
    pairs: &[(usize, usize)],
    max_hop: usize,
) -> Result<Vec<Vec<f64>>> {
    let n = basis.n();
    let d = basis.dim();
    pairs
        .iter()
        .map(|&(i, j)| {
            for idx in [i, j] {
                if idx >= n {
                    return Err(Error::IndexOutOfRange { index: idx, n });
                }
            }
            let mut x = vec![0.0; max_hop];
            for l in 0..d {
                let lambda = basis.eigvals[l];
                let mut term = basis.eigvecs[(i, l)] * basis.eigvecs[(j, l)];
                for xk in x.iter_mut() {
                    term *= lambda;
                    *xk += term;
                }
            }
            Ok(x)
        })
        .collect()
}

/// Positives labelled `+1` followed by negatives labelled `−1`.
pub fn labeled_features(
    basis: &SpectralBasis,
    positives: &[(usize, usize)],
    negatives: &[(usize, usize)],
    max_hop: usize,
) -> Result<Vec<PairFeature>> {
    let pos = pair_features(basis, positives, max_hop)?;
    let neg = pair_features(basis, negatives, max_hop)?;
    Ok(pos
        .into_iter()
        .map(|x| PairFeature { x, label: 1.0 })
        .chain(neg.into_iter().map(|x| PairFeature { x, label: -1.0 }))
        .collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sample_loss(loss: Loss, margin: f64, y: f64, score: f64) -> f64 {
    match loss {
        Loss::Hinge | Loss::BestSingleHop => (margin - y * score).max(0.0),
        Loss::LeastSquares => (margin - y * score).powi(2),
        Loss::Logistic => {
            let z = -y * score / margin;
            // log(1 + e^z) without overflow.
            z.max(0.0) + (-z.abs()).exp().ln_1p()
        }
    }
}

/// `Σ_i loss(ε − y_i x_iᵀθ) + λ‖θ‖²`.
pub fn svm_objective(features: &[PairFeature], theta: &[f64], cfg: &TrainerConfig) -> f64 {
    let data: f64 = features
        .iter()
        .map(|f| sample_loss(cfg.loss, cfg.margin, f.label, dot(&f.x, theta)))
        .sum();
    data + cfg.reg * dot(theta, theta)
}

/// Outcome of one simplex-constrained fit.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmFit {
    pub theta: HopWeights,
    pub objective: f64,
    /// Objective at the uniform starting point.
    pub initial_objective: f64,
    pub iterations: usize,
    /// False when the iteration budget ran out; `theta` is then the best
    /// iterate seen.
    pub converged: bool,
}

/// Projected subgradient descent over the probability simplex.
///
/// Starts from the uniform `θ_0` with steps `η_t = a/√t`. For the hinge loss
/// the active positives are those with `xᵀθ ≤ ε`, the active negatives those
/// with `xᵀθ ≥ −ε`, and the subgradient is `Σ_neg x − Σ_pos x`. Each step is
/// `θ_t = proj((1 − 2η_tλ)θ_{t−1} − (η_t/N_s) g_t)`.
pub fn simplex_svm(features: &[PairFeature], cfg: &TrainerConfig) -> Result<SvmFit> {
    cfg.validate()?;
    let k = cfg.max_hop;
    for f in features {
        if f.x.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: f.x.len(),
            });
        }
    }
    let theta0 = HopWeights::uniform(k);
    let initial_objective = svm_objective(features, theta0.as_slice(), cfg);
    if k == 1 {
        return Ok(SvmFit {
            theta: theta0,
            objective: initial_objective,
            initial_objective,
            iterations: 0,
            converged: true,
        });
    }
    if features.is_empty() || features.iter().all(|f| f.x.iter().all(|&v| v == 0.0)) {
        return Err(Error::DegenerateFeatures);
    }
    let n_pos = features.iter().filter(|f| f.label > 0.0).count();
    if n_pos == 0 || n_pos == features.len() {
        warn!(
            "training pairs carry a single label ({n_pos} positive of {})",
            features.len()
        );
    }

    if cfg.loss == Loss::BestSingleHop {
        let hinge = TrainerConfig {
            loss: Loss::Hinge,
            ..cfg.clone()
        };
        let (best, objective) = (1..=k)
            .map(|hop| {
                let e = HopWeights::unit(hop, k);
                let obj = svm_objective(features, e.as_slice(), &hinge);
                (e, obj)
            })
            .fold(None, |acc: Option<(HopWeights, f64)>, (e, obj)| match acc {
                Some((_, best)) if best <= obj => acc,
                _ => Some((e, obj)),
            })
            .expect("k >= 1");
        return Ok(SvmFit {
            theta: best,
            objective,
            initial_objective,
            iterations: k,
            converged: true,
        });
    }

    let n_s = features.len() as f64;
    let mut theta = theta0.as_slice().to_vec();
    let mut best = (theta0.clone(), initial_objective);
    let mut grad = vec![0.0; k];
    for t in 1..=cfg.max_pgd_iters {
        let eta = cfg.step_scale / (t as f64).sqrt();
        grad.iter_mut().for_each(|g| *g = 0.0);
        for f in features {
            let score = dot(&f.x, &theta);
            let y = f.label;
            // d loss / d score
            let slope = match cfg.loss {
                Loss::Hinge | Loss::BestSingleHop => {
                    if y * score <= cfg.margin {
                        -y
                    } else {
                        0.0
                    }
                }
                Loss::LeastSquares => -2.0 * y * (cfg.margin - y * score),
                Loss::Logistic => {
                    let z = -y * score / cfg.margin;
                    -y / cfg.margin / (1.0 + (-z).exp())
                }
            };
            if slope != 0.0 {
                for (g, x) in grad.iter_mut().zip(&f.x) {
                    *g += slope * x;
                }
            }
        }
        let shrink = 1.0 - 2.0 * eta * cfg.reg;
        let z: Vec<f64> = theta
            .iter()
            .zip(&grad)
            .map(|(th, g)| shrink * th - eta / n_s * g)
            .collect();
        let next = simplex_project(&z);
        let change = next
            .as_slice()
            .iter()
            .zip(&theta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        theta.copy_from_slice(next.as_slice());
        let obj = svm_objective(features, &theta, cfg);
        if obj < best.1 {
            best = (next.clone(), obj);
        }
        if change < cfg.tol {
            debug!("simplex svm converged after {t} steps, objective {obj:.6e}");
            let (theta, objective) = if obj <= initial_objective {
                (next, obj)
            } else {
                best
            };
            return Ok(SvmFit {
                theta,
                objective,
                initial_objective,
                iterations: t,
                converged: true,
            });
        }
    }
    warn!(
        "simplex svm hit {} iterations without converging; returning best iterate",
        cfg.max_pgd_iters
    );
    Ok(SvmFit {
        theta: best.0,
        objective: best.1,
        initial_objective,
        iterations: cfg.max_pgd_iters,
        converged: false,
    })
}

/// One training round: sample, decompose the residual graph, fit.
pub fn train_round<R: Rng + ?Sized>(
    g: &CsrGraph,
    cfg: &TrainerConfig,
    spectral: &SpectralConfig,
    rng: &mut R,
) -> Result<SvmFit> {
    cfg.validate()?;
    let sample = sample_edges(g, cfg.n_samples, rng)?;
    let basis = decompose_graph(&sample.residual, spectral, rng.random())?;
    let features = labeled_features(&basis, &sample.positives, &sample.negatives, cfg.max_hop)?;
    simplex_svm(&features, cfg)
}

/// Learned weights with the per-round fits they average.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnedTheta {
    pub theta: HopWeights,
    pub rounds: Vec<SvmFit>,
}

/// Runs `rounds` independent rounds and averages their weights. Round `r`
/// receives its own generator, stream `r` of `master_seed`.
pub fn learn_theta_with<F>(rounds: usize, master_seed: u64, round: F) -> Result<LearnedTheta>
where
    F: Fn(u64, &mut ChaCha8Rng) -> Result<SvmFit> + Sync,
{
    if rounds == 0 {
        return Err(Error::InvalidParameter("need at least one round".into()));
    }
    let fits = (0..rounds as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
            rng.set_stream(r);
            round(r, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let thetas: Vec<HopWeights> = fits.iter().map(|f| f.theta.clone()).collect();
    Ok(LearnedTheta {
        theta: HopWeights::mean(&thetas)?,
        rounds: fits,
    })
}

/// `θ* = T_s⁻¹ Σ_r θ_r` over `cfg.rounds` training rounds.
pub fn learn_theta(
    g: &CsrGraph,
    cfg: &TrainerConfig,
    spectral: &SpectralConfig,
    master_seed: u64,
) -> Result<LearnedTheta> {
    cfg.validate()?;
    learn_theta_with(cfg.rounds, master_seed, |_, rng| {
        train_round(g, cfg, spectral, rng)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn feat(x: &[f64], label: f64) -> PairFeature {
        PairFeature {
            x: x.to_vec(),
            label,
        }
    }

    #[test]
    fn single_hop_is_trivial() {
        let cfg = TrainerConfig {
            max_hop: 1,
            ..Default::default()
        };
        let fit = simplex_svm(&[feat(&[0.3], 1.0)], &cfg).unwrap();
        assert_eq!(fit.theta.as_slice(), &[1.0]);
    }

    #[test]
    fn hand_solvable_instance() {
        let cfg = TrainerConfig {
            max_hop: 2,
            margin: 0.1,
            reg: 0.0,
            ..Default::default()
        };
        let fit = simplex_svm(&[feat(&[1.0, 0.0], 1.0), feat(&[0.0, 1.0], -1.0)], &cfg).unwrap();
        assert!(
            (fit.theta.as_slice()[0] - 1.0).abs() < 1e-3,
            "{:?}",
            fit.theta
        );
        assert!((fit.objective - 0.1).abs() < 1e-3);
        assert!(fit.objective <= fit.initial_objective);
    }

    #[test]
    fn degenerate_features() {
        let cfg = TrainerConfig {
            max_hop: 2,
            ..Default::default()
        };
        assert!(matches!(
            simplex_svm(&[feat(&[0.0, 0.0], 1.0), feat(&[0.0, 0.0], -1.0)], &cfg),
            Err(Error::DegenerateFeatures)
        ));
    }

    #[test]
    fn budget_exhaustion_returns_best() {
        let cfg = TrainerConfig {
            max_hop: 3,
            margin: 0.5,
            reg: 0.0,
            max_pgd_iters: 2,
            tol: 1e-15,
            ..Default::default()
        };
        let fs = [feat(&[1.0, 0.2, 0.0], 1.0), feat(&[0.0, 0.3, 1.0], -1.0)];
        let fit = simplex_svm(&fs, &cfg).unwrap();
        assert!(!fit.converged);
        assert!(fit.objective <= fit.initial_objective);
    }

    #[test]
    fn best_single_hop() {
        let cfg = TrainerConfig {
            max_hop: 3,
            margin: 0.1,
            loss: Loss::BestSingleHop,
            reg: 0.0,
            ..Default::default()
        };
        let fs = [feat(&[0.0, 1.0, 0.0], 1.0), feat(&[1.0, 0.0, 1.0], -1.0)];
        let fit = simplex_svm(&fs, &cfg).unwrap();
        assert_eq!(fit.theta.as_slice(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn alternative_losses_stay_feasible() {
        for loss in [Loss::LeastSquares, Loss::Logistic] {
            let cfg = TrainerConfig {
                max_hop: 2,
                margin: 0.1,
                reg: 0.0,
                loss,
                ..Default::default()
            };
            let fs = [feat(&[1.0, 0.0], 1.0), feat(&[0.0, 1.0], -1.0)];
            let fit = simplex_svm(&fs, &cfg).unwrap();
            assert!(fit.theta.as_slice()[0] > 0.5, "{loss:?}: {:?}", fit.theta);
        }
    }

    #[test]
    fn features_at_dimension_one() {
        let basis = SpectralBasis {
            eigvecs: DMatrix::from_column_slice(2, 1, &[0.6, 0.8]),
            eigvals: vec![0.5],
            residuals: vec![0.0],
            matvecs: 0,
        };
        let x = pair_features(&basis, &[(0, 1)], 2).unwrap();
        let ab = 0.6 * 0.8;
        assert!((x[0][0] - ab * 0.5).abs() < 1e-15);
        assert!((x[0][1] - ab * 0.25).abs() < 1e-15);
        assert!(matches!(
            pair_features(&basis, &[(0, 2)], 2),
            Err(Error::IndexOutOfRange { index: 2, n: 2 })
        ));
    }

    #[test]
    fn mean_of_stubbed_rounds() {
        let learned = learn_theta_with(4, 9, |r, _| {
            let theta = HopWeights::unit(if r < 2 { 1 } else { 2 }, 4);
            Ok(SvmFit {
                theta,
                objective: 0.0,
                initial_objective: 0.0,
                iterations: 0,
                converged: true,
            })
        })
        .unwrap();
        assert_eq!(learned.theta.as_slice(), &[0.5, 0.5, 0.0, 0.0]);
    }
}
