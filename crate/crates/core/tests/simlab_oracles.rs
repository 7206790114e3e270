mod common;

use ase_core::simlab::{
    baseline_similarity, c_tau, dense_multihop, estimate, hop_weights, pearson_corr, qom_estimate,
    sbm_generate, Baseline, Estimator, SbmSpec,
};
use ase_core::{stream_rng, HopWeights};
use nalgebra::DMatrix;
use rand::Rng;

use common::{dense_eigen, random_connected};

fn random_theta<R: Rng>(k: usize, rng: &mut R) -> HopWeights {
    let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
    let sum: f64 = raw.iter().sum();
    HopWeights::new(raw.iter().map(|w| w / sum).collect()).unwrap()
}

#[test]
fn sbm_edge_count_matches_expectation() {
    let spec = SbmSpec::new(150, 0.3, 0.1, 1.0).unwrap();
    let mut expected = 0.0;
    let mut variance = 0.0;
    for i in 0..150 {
        for j in i + 1..150 {
            let p = spec.prob(i, j);
            expected += p;
            variance += p * (1.0 - p);
        }
    }
    let mut rng = stream_rng(3, 0);
    let draws = 200;
    let mean = (0..draws)
        .map(|_| sbm_generate(&spec, &mut rng).unwrap().n_edges() as f64)
        .sum::<f64>()
        / draws as f64;
    // Standard error of the mean edge count.
    let sigma = (variance / draws as f64).sqrt();
    assert!(
        (mean - expected).abs() <= 3.0 * sigma,
        "mean {mean} vs expected {expected} (σ {sigma})"
    );
}

#[test]
fn complete_graph_when_probabilities_are_one() {
    let spec = SbmSpec::new(9, 1.0, 1.0, 1.0).unwrap();
    let g = sbm_generate(&spec, &mut stream_rng(0, 0)).unwrap();
    assert_eq!(g.n_edges(), 36);
}

#[test]
fn correlation_hand_value() {
    let pc = pearson_corr(&DMatrix::identity(4, 4), &DMatrix::from_element(4, 4, 1.0)).unwrap();
    assert!((pc - 0.5).abs() < 1e-15);
}

#[test]
fn binomial_hop_weights() {
    assert_eq!(hop_weights(2), vec![0.25, 0.5, 0.25]);
    let w = hop_weights(7);
    assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    assert!((w[3] - 35.0 / 128.0).abs() < 1e-15);
}

/// Eigen route and random-walk route against repeated multiplication.
#[test]
fn multihop_identities() {
    let mut rng = stream_rng(4, 0);
    for _ in 0..5 {
        let g = random_connected(40, 0.1, &mut rng);
        let a = g.adjacency_dense();
        let theta = random_theta(5, &mut rng);
        let got = dense_multihop(&a, &theta).unwrap();

        let deg: Vec<f64> = a.row_iter().map(|r| r.sum()).collect();
        let mut s = DMatrix::identity(40, 40) * 0.5;
        for i in 0..40 {
            for j in 0..40 {
                s[(i, j)] += 0.5 * a[(i, j)] / (deg[i] * deg[j]).sqrt();
            }
        }
        let (vals, u) = dense_eigen(&s);
        let lam: Vec<f64> = vals
            .iter()
            .map(|&l| {
                theta
                    .as_slice()
                    .iter()
                    .enumerate()
                    .map(|(k, t)| t * l.powi(k as i32 + 1))
                    .sum()
            })
            .collect();
        let mut ul = u.clone();
        for (l, mut col) in ul.column_iter_mut().enumerate() {
            col *= lam[l];
        }
        let eigen_route = ul * u.transpose();
        assert!((&got - eigen_route).norm() < 1e-10);

        // D^{-1/2} (Σ_τ c_τ P^τ) D^{1/2} with P = A D^{-1}.
        let p = DMatrix::from_fn(40, 40, |i, j| a[(i, j)] / deg[j]);
        let mut walk = DMatrix::zeros(40, 40);
        let mut p_tau = DMatrix::identity(40, 40);
        for c in c_tau(&theta) {
            walk += &p_tau * c;
            p_tau = &p_tau * &p;
        }
        let walk_route =
            DMatrix::from_fn(40, 40, |i, j| walk[(i, j)] * deg[j].sqrt() / deg[i].sqrt());
        assert!((&got - walk_route).norm() < 1e-10);
        assert!(got.iter().all(|&x| x >= -1e-15));
    }
}

#[test]
fn ppr_columns_sum_to_one_like_the_series() {
    let mut rng = stream_rng(5, 0);
    let g = random_connected(30, 0.15, &mut rng);
    let a = g.adjacency_dense();
    let deg: Vec<f64> = a.row_iter().map(|r| r.sum()).collect();
    let p = DMatrix::from_fn(30, 30, |i, j| a[(i, j)] / deg[j]);
    for alpha in [0.1, 0.5, 0.85] {
        let ppr = baseline_similarity(&a, Baseline::Ppr(alpha)).unwrap();
        // Power series Σ (1−α) α^t P^t until the terms fall under 1e-12.
        let mut series = DMatrix::zeros(30, 30);
        let mut term = DMatrix::identity(30, 30) * (1.0 - alpha);
        while term.norm() > 1e-12 {
            series += &term;
            term = &term * &p * alpha;
        }
        assert!((&ppr - &series).norm() < 1e-9);
        for col in ppr.column_iter() {
            assert!((col.sum() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn adamic_adar_on_a_path() {
    let a = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
    let aa = baseline_similarity(&a, Baseline::AdamicAdar).unwrap();
    let want = DMatrix::from_row_slice(3, 3, &[0.5, 0.0, 0.5, 0.0, 2.0, 0.0, 0.5, 0.0, 0.5]);
    assert!((aa - want).norm() < 1e-15);
}

#[test]
fn katz_matches_its_series() {
    let mut rng = stream_rng(6, 0);
    let g = random_connected(25, 0.15, &mut rng);
    let a = g.adjacency_dense();
    let beta = 0.05;
    let katz = baseline_similarity(&a, Baseline::Katz(beta)).unwrap();
    // (1−β) Σ_{t≥1} β^{t−1} A^t
    let mut series = DMatrix::zeros(25, 25);
    let mut term = &a * (1.0 - beta);
    while term.norm() > 1e-14 {
        series += &term;
        term = &term * &a * beta;
    }
    assert!((katz - series).norm() < 1e-9);
}

#[test]
fn qom_bounds_and_truth() {
    let spec = SbmSpec::new(60, 0.3, 0.1, 0.5).unwrap();
    let mut rng = stream_rng(7, 0);
    let truth = qom_estimate(&spec, Estimator::Truth, 3, &mut rng).unwrap();
    assert!((truth.mean - 1.0).abs() < 1e-12);
    for est in [
        Estimator::SPower(3),
        Estimator::APower(2),
        Estimator::Baseline(Baseline::AdamicAdar),
    ] {
        let q = qom_estimate(&spec, est, 5, &mut rng).unwrap();
        assert!((-1.0..=1.0).contains(&q.mean));
    }
    let a = sbm_generate(&spec, &mut rng).unwrap().adjacency_dense();
    for k in 1..6 {
        assert!(estimate(&a, &spec, Estimator::SPower(k))
            .unwrap()
            .iter()
            .all(|&x| x >= 0.0));
    }
}

#[test]
fn qom_stderr_shrinks_with_trials() {
    let spec = SbmSpec::new(60, 0.3, 0.1, 1.0).unwrap();
    let few = qom_estimate(&spec, Estimator::SPower(4), 10, &mut stream_rng(8, 0)).unwrap();
    let many = qom_estimate(&spec, Estimator::SPower(4), 160, &mut stream_rng(8, 1)).unwrap();
    // Sixteen times the trials: about a quarter of the standard error.
    let ratio = many.stderr / few.stderr;
    assert!(ratio > 0.1 && ratio < 0.5, "ratio {ratio}");
}
