//! Downstream evaluation of embeddings: multi-label node classification,
//! link prediction and k-means clustering scored by conductance.

use std::collections::HashSet;

use log::warn;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedder::Embedding;
use crate::error::{Error, Result};
use crate::graph::CsrGraph;

/// `e_i ∘ e_j` for every pair.
pub fn hadamard_edge_features(e: &Embedding, pairs: &[(usize, usize)]) -> Result<Vec<Vec<f64>>> {
    let n = e.n_nodes();
    pairs
        .iter()
        .map(|&(i, j)| {
            for idx in [i, j] {
                if idx >= n {
                    return Err(Error::IndexOutOfRange { index: idx, n });
                }
            }
            Ok(e.matrix
                .row(i)
                .iter()
                .zip(e.matrix.row(j).iter())
                .map(|(a, b)| a * b)
                .collect())
        })
        .collect()
}

/// Multi-label ground truth for a subset of nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledNodes {
    /// Node indices that carry labels.
    pub nodes: Vec<usize>,
    /// `labels[t]` are the labels of `nodes[t]`, sorted and non-empty.
    pub labels: Vec<Vec<usize>>,
    pub n_classes: usize,
}

impl LabeledNodes {
    pub fn new(nodes: Vec<usize>, mut labels: Vec<Vec<usize>>) -> Result<Self> {
        if nodes.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: nodes.len(),
                got: labels.len(),
            });
        }
        for (node, l) in nodes.iter().zip(labels.iter_mut()) {
            l.sort_unstable();
            l.dedup();
            if l.is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "node {node} has no labels"
                )));
            }
        }
        let n_classes = labels.iter().flatten().max().map_or(0, |m| m + 1);
        Ok(Self {
            nodes,
            labels,
            n_classes,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    /// L2 strength; the penalty is `reg/(2n)·‖w‖²` on top of the mean log-loss.
    pub reg: f64,
    pub step: f64,
    pub iters: usize,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            reg: 1.0,
            step: 0.1,
            iters: 500,
        }
    }
}

/// Binary L2-regularized logistic regression on standardized features.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryLogistic {
    mean: Vec<f64>,
    scale: Vec<f64>,
    weights: Vec<f64>,
    bias: f64,
    /// Set when training saw a single label; the model then predicts this
    /// probability everywhere.
    constant: Option<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)`, stable.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn standardize(x: &[Vec<f64>], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let n = x.len() as f64;
    let mut mean = vec![0.0; dim];
    for row in x {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v / n;
        }
    }
    let mut scale = vec![0.0; dim];
    for row in x {
        for ((s, v), m) in scale.iter_mut().zip(row).zip(&mean) {
            *s += (v - m).powi(2) / n;
        }
    }
    for s in scale.iter_mut() {
        *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
    }
    (mean, scale)
}

impl BinaryLogistic {
    /// Full-batch gradient descent. A step that makes the loss non-finite or
    /// larger is retried with half the step size.
    pub fn fit(x: &[Vec<f64>], y: &[bool], cfg: &LogisticConfig) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        if x.is_empty() {
            return Err(Error::InvalidParameter("no training examples".into()));
        }
        let dim = x[0].len();
        if let Some(bad) = x.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        let (mean, scale) = standardize(x, dim);
        let n_pos = y.iter().filter(|&&b| b).count();
        if n_pos == 0 || n_pos == y.len() {
            return Ok(Self {
                mean,
                scale,
                weights: vec![0.0; dim],
                bias: 0.0,
                constant: Some(n_pos as f64 / y.len() as f64),
            });
        }
        let z: Vec<Vec<f64>> = x
            .iter()
            .map(|r| {
                r.iter()
                    .zip(&mean)
                    .zip(&scale)
                    .map(|((v, m), s)| (v - m) / s)
                    .collect()
            })
            .collect();
        let n = x.len() as f64;
        let penalty = cfg.reg / (2.0 * n);
        let loss = |w: &[f64], b: f64| -> f64 {
            let data: f64 = z
                .iter()
                .zip(y)
                .map(|(r, &yi)| {
                    let s = dot(r, w) + b;
                    if yi {
                        softplus(-s)
                    } else {
                        softplus(s)
                    }
                })
                .sum();
            data / n + penalty * dot(w, w)
        };

        let mut w = vec![0.0; dim];
        let mut b = 0.0;
        let mut current = loss(&w, b);
        let mut step = cfg.step;
        for _ in 0..cfg.iters {
            let mut gw = vec![0.0; dim];
            let mut gb = 0.0;
            for (r, &yi) in z.iter().zip(y) {
                let resid = sigmoid(dot(r, &w) + b) - if yi { 1.0 } else { 0.0 };
                for (g, v) in gw.iter_mut().zip(r) {
                    *g += resid * v;
                }
                gb += resid;
            }
            for (g, wi) in gw.iter_mut().zip(&w) {
                *g = *g / n + 2.0 * penalty * wi;
            }
            gb /= n;
            let mut halvings = 0;
            loop {
                let w_new: Vec<f64> = w.iter().zip(&gw).map(|(wi, g)| wi - step * g).collect();
                let b_new = b - step * gb;
                let l = loss(&w_new, b_new);
                if l.is_finite() && l <= current {
                    w = w_new;
                    b = b_new;
                    current = l;
                    break;
                }
                halvings += 1;
                if halvings > 60 {
                    if !current.is_finite() {
                        return Err(Error::NonFinite);
                    }
                    break;
                }
                step *= 0.5;
            }
        }
        if !current.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            mean,
            scale,
            weights: w,
            bias: b,
            constant: None,
        })
    }

    /// Probability of the positive class.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        if let Some(p) = self.constant {
            return p;
        }
        let s: f64 = x
            .iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .zip(&self.weights)
            .map(|(((v, m), sc), w)| (v - m) / sc * w)
            .sum();
        sigmoid(s + self.bias)
    }

    pub fn is_constant(&self) -> bool {
        self.constant.is_some()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One binary model per class.
#[derive(Debug, Clone, PartialEq)]
pub struct OvrModel {
    pub classes: Vec<BinaryLogistic>,
}

pub fn logistic_ovr_train(
    features: &[Vec<f64>],
    labels: &[Vec<usize>],
    n_classes: usize,
    cfg: &LogisticConfig,
) -> Result<OvrModel> {
    if features.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: features.len(),
            got: labels.len(),
        });
    }
    let classes = (0..n_classes)
        .into_par_iter()
        .map(|c| {
            let y: Vec<bool> = labels.iter().map(|l| l.contains(&c)).collect();
            let model = BinaryLogistic::fit(features, &y, cfg)?;
            if model.is_constant() {
                warn!("class {c} has a single label in training; using a constant predictor");
            }
            Ok(model)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OvrModel { classes })
}

/// Per-row class probabilities.
pub fn logistic_ovr_predict(model: &OvrModel, features: &[Vec<f64>]) -> Vec<Vec<f64>> {
    features
        .iter()
        .map(|x| model.classes.iter().map(|m| m.predict_proba(x)).collect())
        .collect()
}

/// The `counts[i]` highest-scoring classes of row `i`, ties to the lower class.
pub fn top_k_labels(scores: &[Vec<f64>], counts: &[usize]) -> Vec<Vec<usize>> {
    scores
        .iter()
        .zip(counts)
        .map(|(row, &k)| {
            let mut order: Vec<usize> = (0..row.len()).collect();
            order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
            order.truncate(k);
            order.sort_unstable();
            order
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F1 {
    pub micro: f64,
    pub macro_: f64,
}

/// Micro and macro F1 over `n_classes` classes. A class with no true and no
/// predicted members contributes 0 to the macro average.
pub fn f1_scores(pred: &[Vec<usize>], truth: &[Vec<usize>], n_classes: usize) -> Result<F1> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: pred.len(),
        });
    }
    let n_classes = pred
        .iter()
        .chain(truth)
        .flatten()
        .map(|&c| c + 1)
        .max()
        .unwrap_or(0)
        .max(n_classes);
    let mut tp = vec![0usize; n_classes];
    let mut fp = vec![0usize; n_classes];
    let mut fn_ = vec![0usize; n_classes];
    for (p, t) in pred.iter().zip(truth) {
        let p: HashSet<usize> = p.iter().copied().collect();
        let t: HashSet<usize> = t.iter().copied().collect();
        for &c in &p {
            if t.contains(&c) {
                tp[c] += 1;
            } else {
                fp[c] += 1;
            }
        }
        for &c in t.difference(&p) {
            fn_[c] += 1;
        }
    }
    let f1 = |tp: usize, fp: usize, fn_: usize| {
        let denom = 2 * tp + fp + fn_;
        if denom == 0 {
            0.0
        } else {
            2.0 * tp as f64 / denom as f64
        }
    };
    let micro = f1(tp.iter().sum(), fp.iter().sum(), fn_.iter().sum());
    let macro_ = if n_classes == 0 {
        0.0
    } else {
        (0..n_classes)
            .map(|c| f1(tp[c], fp[c], fn_[c]))
            .sum::<f64>()
            / n_classes as f64
    };
    Ok(F1 { micro, macro_ })
}

/// Trains on a random `label_rate` share of the labeled nodes and scores the
/// rest, predicting each test node's true number of labels.
pub fn classification_eval<R: Rng + ?Sized>(
    e: &Embedding,
    labeled: &LabeledNodes,
    label_rate: f64,
    cfg: &LogisticConfig,
    rng: &mut R,
) -> Result<F1> {
    if !(label_rate > 0.0 && label_rate < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "label rate {label_rate} outside (0, 1)"
        )));
    }
    let total = labeled.nodes.len();
    if total < 2 {
        return Err(Error::InvalidParameter(
            "need at least two labeled nodes".into(),
        ));
    }
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(rng);
    let n_train = ((total as f64 * label_rate).round() as usize).clamp(1, total - 1);
    let (train, test) = order.split_at(n_train);
    let rows = |idx: &[usize]| -> Result<Vec<Vec<f64>>> {
        idx.iter()
            .map(|&t| {
                let node = labeled.nodes[t];
                if node >= e.n_nodes() {
                    return Err(Error::IndexOutOfRange {
                        index: node,
                        n: e.n_nodes(),
                    });
                }
                Ok(e.row(node))
            })
            .collect()
    };
    let x_train = rows(train)?;
    let y_train: Vec<Vec<usize>> = train.iter().map(|&t| labeled.labels[t].clone()).collect();
    let model = logistic_ovr_train(&x_train, &y_train, labeled.n_classes, cfg)?;
    let x_test = rows(test)?;
    let truth: Vec<Vec<usize>> = test.iter().map(|&t| labeled.labels[t].clone()).collect();
    let counts: Vec<usize> = truth.iter().map(Vec::len).collect();
    let pred = top_k_labels(&logistic_ovr_predict(&model, &x_test), &counts);
    f1_scores(&pred, &truth, labeled.n_classes)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub assignment: Vec<usize>,
    pub k: usize,
    /// Sum of squared distances to the assigned centroids.
    pub inertia: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn kmeans_pp<R: Rng + ?Sized>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centers = vec![points[first].clone()];
    let mut dist: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[first])).collect();
    while centers.len() < k {
        let total: f64 = dist.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &d) in dist.iter().enumerate() {
                if d > 0.0 {
                    pick = Some(i);
                    if target < d {
                        break;
                    }
                    target -= d;
                }
            }
            pick.expect("positive total")
        } else {
            // Only duplicates remain.
            (0..n).find(|&i| !chosen[i]).expect("k <= n")
        };
        chosen[next] = true;
        for (d, p) in dist.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &points[next]));
        }
        centers.push(points[next].clone());
    }
    centers
}

fn assign(points: &[Vec<f64>], centers: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    points
        .iter()
        .map(|p| {
            centers
                .iter()
                .enumerate()
                .map(|(c, ctr)| (c, sq_dist(p, ctr)))
                .fold(
                    (0, f64::INFINITY),
                    |best, cur| if cur.1 < best.1 { cur } else { best },
                )
        })
        .unzip()
}

/// k-means++ seeding followed by Lloyd iterations (at most 300). Rows of
/// `points` are the observations.
pub fn kmeans<R: Rng + ?Sized>(
    points: &DMatrix<f64>,
    k: usize,
    rng: &mut R,
) -> Result<ClusterAssignment> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "cannot form {k} clusters from {n} points"
        )));
    }
    let rows: Vec<Vec<f64>> = points
        .row_iter()
        .map(|r| r.iter().copied().collect())
        .collect();
    let dim = points.ncols();
    let mut centers = kmeans_pp(&rows, k, rng);
    let (mut assignment, mut dist) = assign(&rows, &centers);
    let mut inertia: f64 = dist.iter().sum();
    for _ in 0..300 {
        // Re-seed empty clusters from the point farthest from its centroid.
        let mut sizes = vec![0usize; k];
        assignment.iter().for_each(|&c| sizes[c] += 1);
        for c in 0..k {
            if sizes[c] == 0 {
                let far = (0..n)
                    .filter(|&i| sizes[assignment[i]] > 1)
                    .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)))
                    .expect("k <= n leaves a shared cluster");
                sizes[assignment[far]] -= 1;
                sizes[c] = 1;
                assignment[far] = c;
                dist[far] = 0.0;
                centers[c] = rows[far].clone();
            }
        }
        for (c, ctr) in centers.iter_mut().enumerate() {
            let mut sum = vec![0.0; dim];
            for (i, row) in rows.iter().enumerate() {
                if assignment[i] == c {
                    sum.iter_mut().zip(row).for_each(|(s, v)| *s += v);
                }
            }
            *ctr = sum.into_iter().map(|s| s / sizes[c] as f64).collect();
        }
        let (next, next_dist) = assign(&rows, &centers);
        let next_inertia: f64 = next_dist.iter().sum();
        assert!(
            next_inertia <= inertia * (1.0 + 1e-12) + 1e-12,
            "k-means inertia increased from {inertia} to {next_inertia}"
        );
        let fixed = next == assignment;
        assignment = next;
        dist = next_dist;
        inertia = next_inertia;
        if fixed {
            break;
        }
    }
    Ok(ClusterAssignment {
        assignment,
        k,
        inertia,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conductance {
    pub per_cluster: Vec<f64>,
    pub mean: f64,
}

/// `φ(C) = cut(C, V∖C) / min(vol C, vol V∖C)`; clusters with zero or full
/// volume score 0.
pub fn conductance(g: &CsrGraph, assignment: &[usize], k: usize) -> Result<Conductance> {
    let n = g.n_nodes();
    if assignment.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: assignment.len(),
        });
    }
    if let Some(&c) = assignment.iter().find(|&&c| c >= k) {
        return Err(Error::IndexOutOfRange { index: c, n: k });
    }
    let mut vol = vec![0usize; k];
    let mut cut = vec![0usize; k];
    for i in 0..n {
        let ci = assignment[i];
        vol[ci] += g.degree(i);
        cut[ci] += g
            .neighbors(i)
            .iter()
            .filter(|&&j| assignment[j] != ci)
            .count();
    }
    let total: usize = vol.iter().sum();
    let per_cluster: Vec<f64> = (0..k)
        .map(|c| {
            let denom = vol[c].min(total - vol[c]);
            if denom == 0 {
                warn!("cluster {c} has degenerate volume; conductance set to 0");
                0.0
            } else {
                cut[c] as f64 / denom as f64
            }
        })
        .collect();
    let mean = if k == 0 {
        0.0
    } else {
        per_cluster.iter().sum::<f64>() / k as f64
    };
    Ok(Conductance { per_cluster, mean })
}

/// Removes a random `fraction` of the edges as "new" links, skipping any edge
/// whose removal would isolate a node.
pub fn holdout_edges<R: Rng + ?Sized>(
    g: &CsrGraph,
    fraction: f64,
    rng: &mut R,
) -> Result<(CsrGraph, Vec<(usize, usize)>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "holdout fraction {fraction} outside (0, 1)"
        )));
    }
    let mut edges: Vec<(usize, usize)> = g.edges().collect();
    edges.shuffle(rng);
    let wanted = (g.n_edges() as f64 * fraction).round() as usize;
    let mut deg = g.degrees().to_vec();
    let mut held = Vec::with_capacity(wanted);
    for (u, v) in edges {
        if held.len() == wanted {
            break;
        }
        if deg[u] > 1 && deg[v] > 1 {
            deg[u] -= 1;
            deg[v] -= 1;
            held.push((u, v));
        }
    }
    let residual = g.remove_edges(&held)?;
    Ok((residual, held))
}

/// Shuffles each class, trains on half and returns accuracy on the other half.
pub fn holdout_accuracy<R: Rng + ?Sized>(
    features: &[Vec<f64>],
    labels: &[bool],
    cfg: &LogisticConfig,
    rng: &mut R,
) -> Result<f64> {
    if features.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: features.len(),
            got: labels.len(),
        });
    }
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    pos.shuffle(rng);
    neg.shuffle(rng);
    let (pos_train, pos_test) = pos.split_at(pos.len() / 2);
    let (neg_train, neg_test) = neg.split_at(neg.len() / 2);
    let train: Vec<usize> = pos_train.iter().chain(neg_train).copied().collect();
    let test: Vec<usize> = pos_test.iter().chain(neg_test).copied().collect();
    if train.is_empty() || test.is_empty() {
        return Err(Error::InvalidParameter(
            "too few examples for a 50/50 split".into(),
        ));
    }
    let x: Vec<Vec<f64>> = train.iter().map(|&i| features[i].clone()).collect();
    let y: Vec<bool> = train.iter().map(|&i| labels[i]).collect();
    let model = BinaryLogistic::fit(&x, &y, cfg)?;
    let correct = test
        .iter()
        .filter(|&&i| (model.predict_proba(&features[i]) > 0.5) == labels[i])
        .count();
    Ok(correct as f64 / test.len() as f64)
}

/// Balanced link prediction: `new_edges` against as many sampled pairs that
/// are neither edges of `g` nor new edges, Hadamard features, logistic
/// regression on a 50/50 split.
pub fn link_prediction_eval<R: Rng + ?Sized>(
    e: &Embedding,
    g: &CsrGraph,
    new_edges: &[(usize, usize)],
    cfg: &LogisticConfig,
    rng: &mut R,
) -> Result<f64> {
    let n = g.n_nodes();
    if e.n_nodes() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: e.n_nodes(),
        });
    }
    let new: HashSet<(usize, usize)> = new_edges
        .iter()
        .map(|&(u, v)| (u.min(v), u.max(v)))
        .collect();
    if new.iter().any(|&(u, v)| g.has_edge(u, v)) {
        warn!("some new edges are already in the embedded graph; results leak");
    }
    let wanted = new_edges.len();
    let mut seen = HashSet::with_capacity(wanted);
    let mut negatives = Vec::with_capacity(wanted);
    let mut attempts = 0usize;
    while negatives.len() < wanted {
        if attempts == 100 * wanted.max(1) {
            return Err(Error::NegativeExhausted {
                wanted,
                found: negatives.len(),
            });
        }
        attempts += 1;
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        let pair = (u.min(v), u.max(v));
        if u == v || g.has_edge(u, v) || new.contains(&pair) {
            continue;
        }
        if seen.insert(pair) {
            negatives.push(pair);
        }
    }
    let mut features = hadamard_edge_features(e, new_edges)?;
    features.extend(hadamard_edge_features(e, &negatives)?);
    let labels: Vec<bool> = (0..features.len()).map(|i| i < wanted).collect();
    holdout_accuracy(&features, &labels, cfg, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn f1_hand_case() {
        let f = f1_scores(&[vec![0], vec![0]], &[vec![0], vec![1]], 2).unwrap();
        assert!((f.micro - 0.5).abs() < 1e-15);
        assert!((f.macro_ - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn f1_extremes() {
        let t = vec![vec![0, 2], vec![1]];
        let f = f1_scores(&t, &t, 3).unwrap();
        assert_eq!((f.micro, f.macro_), (1.0, 1.0));
        let f = f1_scores(&[vec![1], vec![0]], &[vec![0], vec![1]], 2).unwrap();
        assert_eq!((f.micro, f.macro_), (0.0, 0.0));
    }

    #[test]
    fn conductance_two_triangles() {
        let g = CsrGraph::from_edges(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (2, 3)])
            .unwrap();
        let c = conductance(&g, &[0, 0, 0, 1, 1, 1], 2).unwrap();
        assert!((c.per_cluster[0] - 1.0 / 7.0).abs() < 1e-15);
        assert!((c.per_cluster[1] - 1.0 / 7.0).abs() < 1e-15);
        let whole = conductance(&g, &[0; 6], 1).unwrap();
        assert_eq!(whole.mean, 0.0);
    }

    #[test]
    fn constant_predictor() {
        let x = vec![vec![1.0], vec![2.0]];
        let m = BinaryLogistic::fit(&x, &[true, true], &LogisticConfig::default()).unwrap();
        assert!(m.predict_proba(&[-5.0]) > 0.5);
    }

    #[test]
    fn kmeans_every_point_own_cluster() {
        let pts = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 5.0, 5.0]);
        let c = kmeans(&pts, 4, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(c.inertia, 0.0);
        let mut a = c.assignment.clone();
        a.sort_unstable();
        assert_eq!(a, vec![0, 1, 2, 3]);
    }

    #[test]
    fn top_k_ties_prefer_low_class() {
        let got = top_k_labels(&[vec![0.2, 0.5, 0.5]], &[1]);
        assert_eq!(got, vec![vec![1]]);
    }
}
