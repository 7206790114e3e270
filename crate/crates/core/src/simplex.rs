//! Hop weights on the probability simplex and Euclidean projection onto it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Feasibility slack on `Σθ = 1`.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Per-hop coefficients `θ_1..θ_K`, nonnegative and summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct HopWeights(Vec<f64>);

impl HopWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter(
                "hop weights must be non-empty".into(),
            ));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "hop weights must be finite and nonnegative: {weights:?}"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL * weights.len() as f64 {
            return Err(Error::InvalidParameter(format!(
                "hop weights sum to {sum}, not 1"
            )));
        }
        Ok(Self(weights))
    }

    /// `θ = (1/K, …, 1/K)`.
    pub fn uniform(k: usize) -> Self {
        assert!(k >= 1, "need at least one hop");
        Self(vec![1.0 / k as f64; k])
    }

    /// All mass on hop `hop` (1-based) out of `k`.
    pub fn unit(hop: usize, k: usize) -> Self {
        assert!(hop >= 1 && hop <= k, "hop {hop} outside 1..={k}");
        let mut w = vec![0.0; k];
        w[hop - 1] = 1.0;
        Self(w)
    }

    /// Arithmetic mean of several weight vectors of the same length.
    pub fn mean(all: &[HopWeights]) -> Result<Self> {
        let first = all
            .first()
            .ok_or_else(|| Error::InvalidParameter("no hop weights to average".into()))?;
        let k = first.len();
        let mut acc = vec![0.0; k];
        for w in all {
            if w.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    got: w.len(),
                });
            }
            for (a, x) in acc.iter_mut().zip(w.as_slice()) {
                *a += x;
            }
        }
        let t = all.len() as f64;
        acc.iter_mut().for_each(|a| *a /= t);
        Ok(Self(acc))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// 1-based index of the last hop holding at least `share` of the mass.
    pub fn last_significant_hop(&self, share: f64) -> usize {
        self.0
            .iter()
            .rposition(|&w| w >= share)
            .map(|i| i + 1)
            .unwrap_or(1)
    }
}

impl TryFrom<Vec<f64>> for HopWeights {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<HopWeights> for Vec<f64> {
    fn from(w: HopWeights) -> Self {
        w.0
    }
}

/// Euclidean projection of `z` onto the probability simplex (sort and
/// threshold, `O(K log K)`).
pub fn simplex_project(z: &[f64]) -> HopWeights {
    assert!(!z.is_empty(), "cannot project an empty vector");
    assert!(
        z.iter().all(|v| v.is_finite()),
        "projection input must be finite"
    );

    let mut sorted = z.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut threshold = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            threshold = t;
        } else {
            break;
        }
    }
    let mut w: Vec<f64> = z.iter().map(|&v| (v - threshold).max(0.0)).collect();
    // Renormalize away the rounding left by the threshold.
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= sum);
    HopWeights(w)
}
