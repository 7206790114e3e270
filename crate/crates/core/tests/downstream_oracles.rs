use std::collections::HashSet;

use ase_core::downstream::{
    conductance, f1_scores, hadamard_edge_features, holdout_accuracy, kmeans, link_prediction_eval,
    logistic_ovr_predict, logistic_ovr_train, top_k_labels, BinaryLogistic, LogisticConfig,
};
use ase_core::{stream_rng, CsrGraph, Embedding, HopWeights};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;

fn embedding(matrix: DMatrix<f64>) -> Embedding {
    let dim = matrix.ncols();
    Embedding {
        matrix,
        node_ids: None,
        theta: HopWeights::uniform(1),
        dim,
    }
}

/// Box-Muller standard normal.
fn gauss<R: Rng>(rng: &mut R) -> f64 {
    let u: f64 = 1.0 - rng.random::<f64>();
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

#[test]
fn hadamard_cases() {
    let m = DMatrix::from_row_slice(3, 3, &[0.6, 0.8, 0.0, 0.6, 0.8, 0.0, 0.0, 0.0, 2.0]);
    let e = embedding(m.clone());
    let f = hadamard_edge_features(&e, &[(0, 1), (0, 2)]).unwrap();
    assert!((f[0][0] - 0.36).abs() < 1e-15 && (f[0][1] - 0.64).abs() < 1e-15);
    assert_eq!(f[1], vec![0.0, 0.0, 0.0]);

    let mut rng = stream_rng(1, 0);
    let m = DMatrix::from_fn(10, 4, |_, _| gauss(&mut rng));
    let e = embedding(m.clone());
    let pairs: Vec<_> = (0..20)
        .map(|_| (rng.random_range(0..10), rng.random_range(0..10)))
        .collect();
    for (x, &(i, j)) in hadamard_edge_features(&e, &pairs)
        .unwrap()
        .iter()
        .zip(&pairs)
    {
        for c in 0..4 {
            assert_eq!(x[c], m[(i, c)] * m[(j, c)]);
        }
    }
}

#[test]
fn logistic_trivial_cases() {
    let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i % 3) as f64]).collect();
    let y: Vec<bool> = (0..20).map(|i| i >= 10).collect();
    let model = BinaryLogistic::fit(&x, &y, &LogisticConfig::default()).unwrap();
    let correct = x
        .iter()
        .zip(&y)
        .filter(|(xi, &yi)| (model.predict_proba(xi) > 0.5) == yi)
        .count();
    assert_eq!(correct, 20);

    let all = vec![true; 20];
    let model = BinaryLogistic::fit(&x, &all, &LogisticConfig::default()).unwrap();
    assert!(x.iter().all(|xi| model.predict_proba(xi) > 0.5));
}

/// Newton's method on the same objective: mean log-loss on z-scored
/// features plus `reg/(2n)·‖w‖²`, bias unpenalized.
fn newton_reference(x: &[Vec<f64>], y: &[bool], reg: f64) -> impl Fn(&[f64]) -> f64 {
    let n = x.len();
    let d = x[0].len();
    let mean: Vec<f64> = (0..d)
        .map(|c| x.iter().map(|r| r[c]).sum::<f64>() / n as f64)
        .collect();
    let sd: Vec<f64> = (0..d)
        .map(|c| {
            let v = x.iter().map(|r| (r[c] - mean[c]).powi(2)).sum::<f64>() / n as f64;
            if v > 0.0 {
                v.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    // Design matrix with a trailing bias column.
    let z = DMatrix::from_fn(n, d + 1, |i, c| {
        if c == d {
            1.0
        } else {
            (x[i][c] - mean[c]) / sd[c]
        }
    });
    let t = DVector::from_fn(n, |i, _| if y[i] { 1.0 } else { 0.0 });
    let mut w = DVector::zeros(d + 1);
    for _ in 0..50 {
        let p = (&z * &w).map(|s| 1.0 / (1.0 + (-s).exp()));
        let mut grad = z.transpose() * (&p - &t) / n as f64;
        let mut hess = DMatrix::zeros(d + 1, d + 1);
        for i in 0..n {
            let row = z.row(i).transpose();
            hess += &row * row.transpose() * (p[i] * (1.0 - p[i]) / n as f64);
        }
        for c in 0..d {
            grad[c] += reg / n as f64 * w[c];
            hess[(c, c)] += reg / n as f64;
        }
        let step = hess.lu().solve(&grad).unwrap();
        w -= step;
    }
    move |row: &[f64]| {
        let s: f64 = (0..d)
            .map(|c| (row[c] - mean[c]) / sd[c] * w[c])
            .sum::<f64>()
            + w[d];
        1.0 / (1.0 + (-s).exp())
    }
}

#[test]
fn logistic_matches_newton_reference() {
    let mut rng = stream_rng(2, 0);
    let dirs: Vec<Vec<f64>> = (0..3)
        .map(|_| (0..4).map(|_| gauss(&mut rng)).collect())
        .collect();
    let mut x = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..200 {
        let row: Vec<f64> = (0..4).map(|_| gauss(&mut rng)).collect();
        let scores: Vec<f64> = dirs
            .iter()
            .map(|d| d.iter().zip(&row).map(|(a, b)| a * b).sum::<f64>() + 0.5 * gauss(&mut rng))
            .collect();
        let mut l: Vec<usize> = (0..3).filter(|&c| scores[c] > 0.5).collect();
        if l.is_empty() {
            let best = (0..3)
                .max_by(|&a, &b| scores[a].total_cmp(&scores[b]))
                .unwrap();
            l.push(best);
        }
        x.push(row);
        labels.push(l);
    }
    let (x_train, x_test) = x.split_at(100);
    let (y_train, y_test) = labels.split_at(100);
    let cfg = LogisticConfig::default();
    let counts: Vec<usize> = y_test.iter().map(Vec::len).collect();

    let model = logistic_ovr_train(x_train, y_train, 3, &cfg).unwrap();
    let ours = top_k_labels(&logistic_ovr_predict(&model, x_test), &counts);

    let refs: Vec<_> = (0..3)
        .map(|c| {
            let y: Vec<bool> = y_train.iter().map(|l| l.contains(&c)).collect();
            newton_reference(x_train, &y, cfg.reg)
        })
        .collect();
    let scores: Vec<Vec<f64>> = x_test
        .iter()
        .map(|r| refs.iter().map(|f| f(r)).collect())
        .collect();
    let theirs = top_k_labels(&scores, &counts);

    let a = f1_scores(&ours, y_test, 3).unwrap();
    let b = f1_scores(&theirs, y_test, 3).unwrap();
    assert!((a.micro - b.micro).abs() <= 0.02, "{a:?} vs {b:?}");
    assert!(a.micro > 0.5);
}

#[test]
fn f1_symmetric_under_relabeling() {
    let mut rng = stream_rng(3, 0);
    for _ in 0..50 {
        let c = 5;
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<Vec<usize>> {
            (0..30)
                .map(|_| {
                    let mut l: Vec<usize> = (0..c).filter(|_| rng.random::<f64>() < 0.3).collect();
                    if l.is_empty() {
                        l.push(rng.random_range(0..c));
                    }
                    l
                })
                .collect()
        };
        let pred = draw(&mut rng);
        let truth = draw(&mut rng);
        let mut perm: Vec<usize> = (0..c).collect();
        perm.shuffle(&mut rng);
        let relabel = |ls: &[Vec<usize>]| -> Vec<Vec<usize>> {
            ls.iter()
                .map(|l| l.iter().map(|&x| perm[x]).collect())
                .collect()
        };
        let a = f1_scores(&pred, &truth, c).unwrap();
        let b = f1_scores(&relabel(&pred), &relabel(&truth), c).unwrap();
        assert!((a.micro - b.micro).abs() < 1e-15);
        assert!((a.macro_ - b.macro_).abs() < 1e-12);
    }
}

#[test]
fn f1_hand_cases() {
    let truth = vec![vec![0], vec![1]];
    let f = f1_scores(&[vec![0], vec![0]], &truth, 2).unwrap();
    assert!((f.micro - 0.5).abs() < 1e-15);
    assert!((f.macro_ - 1.0 / 3.0).abs() < 1e-15);
    let f = f1_scores(&truth, &truth, 2).unwrap();
    assert_eq!((f.micro, f.macro_), (1.0, 1.0));
    let f = f1_scores(&[vec![1], vec![0]], &truth, 2).unwrap();
    assert_eq!((f.micro, f.macro_), (0.0, 0.0));
}

#[test]
fn conductance_hand_counts() {
    let bridge =
        CsrGraph::from_edges(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (2, 3)]).unwrap();
    let c = conductance(&bridge, &[0, 0, 0, 1, 1, 1], 2).unwrap();
    for phi in &c.per_cluster {
        assert!((phi - 1.0 / 7.0).abs() < 1e-15);
    }
    assert_eq!(conductance(&bridge, &[0; 6], 1).unwrap().mean, 0.0);

    let k10: Vec<_> = (0..10)
        .flat_map(|i| (i + 1..10).map(move |j| (i, j)))
        .collect();
    let k10 = CsrGraph::from_edges(10, &k10).unwrap();
    let mut rng = stream_rng(4, 0);
    let mut side = vec![0usize, 0, 0, 0, 0, 1, 1, 1, 1, 1];
    side.shuffle(&mut rng);
    let c = conductance(&k10, &side, 2).unwrap();
    for phi in &c.per_cluster {
        assert!((phi - 5.0 / 9.0).abs() < 1e-15);
    }
}

#[test]
fn conductance_complement_symmetry() {
    let mut rng = stream_rng(5, 0);
    for _ in 0..50 {
        let n = rng.random_range(6..40);
        let mut edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        for _ in 0..2 * n {
            let (u, v) = (rng.random_range(0..n), rng.random_range(0..n));
            if u != v && !edges.contains(&(u, v)) && !edges.contains(&(v, u)) {
                edges.push((u, v));
            }
        }
        let g = CsrGraph::from_edges(n, &edges).unwrap();
        let side: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let c = conductance(&g, &side, 2).unwrap();
        assert!((c.per_cluster[0] - c.per_cluster[1]).abs() < 1e-15);
    }
}

#[test]
fn kmeans_separates_blobs() {
    let mut rng = stream_rng(6, 0);
    let m = DMatrix::from_fn(100, 2, |i, _| {
        let center = if i < 50 { -20.0 } else { 20.0 };
        center + gauss(&mut rng)
    });
    let c = kmeans(&m, 2, &mut rng).unwrap();
    let first = c.assignment[0];
    for i in 0..100 {
        assert_eq!(c.assignment[i] == first, i < 50);
    }
}

/// Random distinct initial centers, Lloyd until assignments stop changing.
fn naive_lloyd<R: Rng>(pts: &[[f64; 2]], k: usize, rng: &mut R) -> f64 {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.shuffle(rng);
    let mut centers: Vec<[f64; 2]> = idx[..k].iter().map(|&i| pts[i]).collect();
    let d2 = |a: &[f64; 2], b: &[f64; 2]| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
    let mut assign = vec![usize::MAX; pts.len()];
    loop {
        let next: Vec<usize> = pts
            .iter()
            .map(|p| {
                (0..k)
                    .min_by(|&a, &b| d2(p, &centers[a]).total_cmp(&d2(p, &centers[b])))
                    .unwrap()
            })
            .collect();
        if next == assign {
            break;
        }
        assign = next;
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<_> = pts.iter().zip(&assign).filter(|(_, &a)| a == c).collect();
            if !members.is_empty() {
                let m = members.len() as f64;
                *center = [
                    members.iter().map(|(p, _)| p[0]).sum::<f64>() / m,
                    members.iter().map(|(p, _)| p[1]).sum::<f64>() / m,
                ];
            }
        }
    }
    pts.iter()
        .zip(&assign)
        .map(|(p, &a)| d2(p, &centers[a]))
        .sum()
}

#[test]
fn kmeans_beats_median_naive_restart() {
    let mut rng = stream_rng(7, 0);
    let centers = [[0.0, 0.0], [4.0, 0.0], [0.0, 4.0], [5.0, 5.0], [9.0, 1.0]];
    let pts: Vec<[f64; 2]> = (0..150)
        .map(|i| {
            let c = centers[i % 5];
            [c[0] + gauss(&mut rng), c[1] + gauss(&mut rng)]
        })
        .collect();
    let mut naive: Vec<f64> = (0..100).map(|_| naive_lloyd(&pts, 5, &mut rng)).collect();
    naive.sort_by(f64::total_cmp);
    let median = 0.5 * (naive[49] + naive[50]);
    let m = DMatrix::from_fn(150, 2, |i, c| pts[i][c]);
    let ours = kmeans(&m, 5, &mut stream_rng(7, 1)).unwrap();
    assert!(
        ours.inertia <= median,
        "{} vs median {median}",
        ours.inertia
    );
}

#[test]
fn link_prediction_one_hot_is_perfect() {
    // Four 10-cliques with a few intra-cluster edges held out as "new".
    let cluster = |i: usize| i / 10;
    let mut rng = stream_rng(8, 0);
    let mut intra: Vec<(usize, usize)> = (0..40)
        .flat_map(|i| (i + 1..40).map(move |j| (i, j)))
        .filter(|&(i, j)| cluster(i) == cluster(j))
        .collect();
    intra.shuffle(&mut rng);
    let (new, kept) = intra.split_at(40);
    let g = CsrGraph::from_edges(40, kept).unwrap();
    let e = embedding(DMatrix::from_fn(40, 4, |i, c| {
        if cluster(i) == c {
            1.0
        } else {
            0.0
        }
    }));
    for seed in 0..5 {
        let acc = link_prediction_eval(
            &e,
            &g,
            new,
            &LogisticConfig::default(),
            &mut stream_rng(8, seed),
        )
        .unwrap();
        assert_eq!(acc, 1.0);
    }
}

#[test]
fn shuffled_labels_are_chance() {
    for seed in 0..20 {
        let mut rng = stream_rng(9, seed);
        let x: Vec<Vec<f64>> = (0..4000)
            .map(|_| (0..8).map(|_| gauss(&mut rng)).collect())
            .collect();
        let mut y: Vec<bool> = (0..4000).map(|i| i % 2 == 0).collect();
        y.shuffle(&mut rng);
        let acc = holdout_accuracy(&x, &y, &LogisticConfig::default(), &mut rng).unwrap();
        assert!((0.45..=0.55).contains(&acc), "seed {seed}: {acc}");
    }
}

#[test]
fn link_prediction_negatives_avoid_known_pairs() {
    let mut rng = stream_rng(10, 0);
    let n = 30;
    let mut set = HashSet::new();
    for i in 0..n {
        set.insert((i, (i + 1) % n));
    }
    let g = CsrGraph::from_edges(n, &set.iter().copied().collect::<Vec<_>>()).unwrap();
    let e = embedding(DMatrix::from_fn(n, 3, |_, _| gauss(&mut rng)));
    let new = vec![(0, 5), (3, 9), (10, 20)];
    let acc = link_prediction_eval(&e, &g, &new, &LogisticConfig::default(), &mut rng).unwrap();
    assert!((0.0..=1.0).contains(&acc));
}
