use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;
use std::time::Instant;

use ase_core::cache::SpectralCache;
use ase_core::downstream::{
    classification_eval, conductance, holdout_edges, kmeans, link_prediction_eval, LabeledNodes,
    LogisticConfig,
};
use ase_core::io::{
    read_theta_report, write_embedding_bin, write_embedding_tsv, write_metrics_csv,
    write_theta_report, MetricRow, Provenance, Range,
};
use ase_core::simlab::{qom_experiment, QomEstimate, SbmSpec};
use ase_core::{ase_pipeline, learn_theta, stream_rng, CsrGraph, Embedding, PipelineOptions};
use rayon::prelude::*;

use crate::files::{
    align_embedding, load_embedding, load_graph, load_labels, open, sibling, CliError, CliResult,
    Output,
};
use crate::{
    ClassifyArgs, Cli, ClusterArgs, Command, EmbedArgs, Format, LinkpredArgs, QomArgs, SweepArgs,
    SweepParam, TrainThetaArgs,
};

pub fn run(cli: &Cli) -> CliResult<()> {
    validate(cli)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?;
    let config = serde_json::to_string(cli)
        .map_err(|e| CliError::Usage(format!("cannot serialize run config: {e}")))?;
    let prov = |seed| Provenance {
        tool: format!("ase {}", env!("CARGO_PKG_VERSION")),
        config: config.clone(),
        seed,
    };
    match &cli.command {
        Command::Embed(a) => embed(a, cli.threads, &prov(a.seed)),
        Command::TrainTheta(a) => train_theta(a, cli.threads, &prov(a.seed)),
        Command::Qom(a) => qom(a, &prov(a.seed)),
        Command::EvalClassify(a) => eval_classify(a, &prov(a.seed)),
        Command::EvalLinkpred(a) => eval_linkpred(a, cli.threads, &prov(a.seed)),
        Command::EvalCluster(a) => eval_cluster(a, &prov(a.seed)),
        Command::Sweep(a) => sweep(a, cli.threads, &prov(a.seed)),
    }
}

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

fn check_rate(name: &str, r: f64) -> CliResult<()> {
    if r > 0.0 && r < 1.0 {
        Ok(())
    } else {
        usage(format!("{name} must lie in (0, 1), got {r}"))
    }
}

/// Parameter checks that need no input files.
fn validate(cli: &Cli) -> CliResult<()> {
    if cli.threads == 0 {
        return usage("--threads must be at least 1");
    }
    let dim = |d: usize| {
        if d == 0 {
            usage("--dim must be positive")
        } else {
            Ok(())
        }
    };
    let repeats = |r: usize| {
        if r == 0 {
            usage("--repeats must be at least 1")
        } else {
            Ok(())
        }
    };
    match &cli.command {
        Command::Embed(a) => {
            dim(a.spectral.dim)?;
            a.train.config().validate()?;
        }
        Command::TrainTheta(a) => {
            dim(a.spectral.dim)?;
            a.train.config().validate()?;
        }
        Command::Qom(a) => {
            SbmSpec::new(a.n, a.p, a.q, a.c)?;
            if a.trials == 0 || a.kmax == 0 {
                return usage("--trials and --kmax must be at least 1");
            }
        }
        Command::EvalClassify(a) => {
            repeats(a.repeats)?;
            for &r in a.rates.iter().flatten() {
                check_rate("label rate", r)?;
            }
        }
        Command::EvalLinkpred(a) => {
            repeats(a.repeats)?;
            check_rate("--holdout", a.holdout)?;
            dim(a.spectral.dim)?;
            a.train.config().validate()?;
        }
        Command::EvalCluster(a) => {
            repeats(a.repeats)?;
            if a.clusters.iter().flatten().any(|&k| k == 0) {
                return usage("cluster counts must be positive");
            }
        }
        Command::Sweep(a) => {
            repeats(a.repeats)?;
            check_rate("--label-rate", a.label_rate)?;
            dim(a.spectral.dim)?;
            a.train.config().validate()?;
        }
    }
    Ok(())
}

fn pipeline_options(
    spectral: &crate::SpectralArgs,
    threads: usize,
    theta: Option<&Path>,
) -> CliResult<PipelineOptions> {
    let forced_theta = match theta {
        Some(p) => Some(
            read_theta_report(open(p)?).map_err(|source| CliError::Input {
                path: p.into(),
                source,
            })?,
        ),
        None => None,
    };
    let cache = SpectralCache::from_env();
    if let Some(c) = &cache {
        log::info!("spectral cache at {}", c.dir().display());
    }
    Ok(PipelineOptions {
        spectral: spectral.config(threads),
        forced_theta,
        cache,
    })
}

fn embed(a: &EmbedArgs, threads: usize, prov: &Provenance) -> CliResult<()> {
    let loaded = load_graph(&a.graph)?;
    let opts = pipeline_options(&a.spectral, threads, a.theta.as_deref())?;
    let out = ase_pipeline(&loaded.graph, &a.train.config(), &opts, a.seed)?;
    for (r, fit) in out.rounds.iter().enumerate() {
        log::info!(
            "round {r}: objective {:.6e} after {} steps (converged: {})",
            fit.objective,
            fit.iterations,
            fit.converged
        );
    }
    let out_dir = a.out_dir.as_deref();

    let theta_path = sibling(&a.graph.input, out_dir, ".theta.tsv");
    let mut w = Output::with_header(Some(&theta_path), prov)?;
    write_theta_report(&mut w, &out.theta)?;
    w.finish()?;

    let mut embedding = out.embedding;
    embedding.node_ids = Some(loaded.ids);
    let (suffix, write): (_, fn(&mut Output, &Embedding) -> ase_core::Result<()>) = match a.format {
        Format::Tsv => (".emb.tsv", |w, e| write_embedding_tsv(w, e)),
        Format::Bin => (".emb.bin", |w, e| write_embedding_bin(w, e)),
    };
    let emb_path = sibling(&a.graph.input, out_dir, suffix);
    let mut w = Output::with_header(Some(&emb_path), prov)?;
    write(&mut w, &embedding)?;
    w.finish()
}

fn train_theta(a: &TrainThetaArgs, threads: usize, prov: &Provenance) -> CliResult<()> {
    let loaded = load_graph(&a.graph)?;
    let learned = learn_theta(
        &loaded.graph,
        &a.train.config(),
        &a.spectral.config(threads),
        a.seed,
    )?;
    for (r, fit) in learned.rounds.iter().enumerate() {
        log::info!(
            "round {r}: objective {:.6e} after {} steps (converged: {})",
            fit.objective,
            fit.iterations,
            fit.converged
        );
    }
    let (range, hop) = Range::of(&learned.theta);
    log::info!("{range}-range similarity, last significant hop {hop}");
    let path = sibling(&a.graph.input, a.out_dir.as_deref(), ".theta.tsv");
    let mut w = Output::with_header(Some(&path), prov)?;
    write_theta_report(&mut w, &learned.theta)?;
    w.finish()
}

fn qom(a: &QomArgs, prov: &Provenance) -> CliResult<()> {
    let spec = SbmSpec::new(a.n, a.p, a.q, a.c)?;
    let report = qom_experiment(&spec, a.kmax, a.trials, a.seed)?;
    let mut w = Output::with_header(a.out.as_deref(), prov)?;
    report.write_csv(&mut w)?;
    w.finish()
}

fn summary(task: &str, param: String, metric: &str, samples: &[f64], rows: &mut Vec<MetricRow>) {
    let est = QomEstimate::from_samples(samples);
    rows.push(MetricRow {
        task: task.into(),
        param,
        metric: metric.into(),
        value: est.mean,
        stderr: (samples.len() > 1).then_some(est.stderr),
    });
}

/// Micro and macro F1 over `repeats` random splits, split `r` drawn from
/// stream `stream0 + r`.
fn repeated_f1(
    e: &Embedding,
    labeled: &LabeledNodes,
    rate: f64,
    cfg: &LogisticConfig,
    seed: u64,
    stream0: u64,
    repeats: usize,
) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let scores = (0..repeats)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, stream0 + r as u64);
            classification_eval(e, labeled, rate, cfg, &mut rng)
        })
        .collect::<ase_core::Result<Vec<_>>>()?;
    Ok(scores.iter().map(|f| (f.micro, f.macro_)).unzip())
}

fn eval_classify(a: &ClassifyArgs, prov: &Provenance) -> CliResult<()> {
    let e = load_embedding(&a.embedding)?;
    let ids: Vec<i64> = (0..e.n_nodes()).map(|i| e.node_id(i)).collect();
    let labeled = load_labels(&a.labels, &ids)?;
    let rates = a
        .rates
        .clone()
        .unwrap_or_else(|| (1..=10).map(|i| i as f64 * 0.02).collect());
    let cfg = a.logistic.config();
    let mut rows = Vec::new();
    for (i, &rate) in rates.iter().enumerate() {
        let stream0 = (i * a.repeats) as u64;
        let (micro, macro_) = repeated_f1(&e, &labeled, rate, &cfg, a.seed, stream0, a.repeats)?;
        summary(
            "classify",
            format!("{rate:.2}"),
            "micro-f1",
            &micro,
            &mut rows,
        );
        summary(
            "classify",
            format!("{rate:.2}"),
            "macro-f1",
            &macro_,
            &mut rows,
        );
    }
    let mut w = Output::with_header(a.out.as_deref(), prov)?;
    write_metrics_csv(&mut w, &rows)?;
    w.finish()
}

/// Reads `u v` pairs of original node ids and maps them to indices.
fn load_pairs(path: &Path, ids: &[i64]) -> CliResult<Vec<(usize, usize)>> {
    let index: HashMap<i64, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let bad = |line: usize, reason: String| CliError::Input {
        path: path.into(),
        source: ase_core::Error::MalformedLine { line, reason },
    };
    let mut pairs = Vec::new();
    for (lineno, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|source| CliError::Io {
            path: path.into(),
            source,
        })?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('%') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let mut node = || -> CliResult<usize> {
            let tok = tokens.next().unwrap_or_default();
            let id: i64 = tok
                .parse()
                .map_err(|_| bad(lineno + 1, format!("non-integer token {tok:?}")))?;
            index
                .get(&id)
                .copied()
                .ok_or_else(|| bad(lineno + 1, format!("node {id} is not in the graph")))
        };
        let (u, v) = (node()?, node()?);
        if u != v {
            pairs.push((u.min(v), u.max(v)));
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    if pairs.is_empty() {
        return usage(format!("{}: no edges to predict", path.display()));
    }
    Ok(pairs)
}

fn leakage_warning(g: &CsrGraph, new_edges: &[(usize, usize)], trained_on_full: bool) {
    let seen = new_edges.iter().filter(|&&(u, v)| g.has_edge(u, v)).count();
    if seen > 0 {
        log::warn!(
            "information leakage: {seen} of {} edges to predict are in the embedded graph",
            new_edges.len()
        );
    } else if trained_on_full {
        log::warn!(
            "information leakage: the embedding was trained on the graph the held-out edges \
             were drawn from"
        );
    }
}

fn eval_linkpred(a: &LinkpredArgs, threads: usize, prov: &Provenance) -> CliResult<()> {
    let loaded = load_graph(&a.graph)?;
    let (observed, new_edges, param) = match &a.new_edges {
        Some(path) => {
            let pairs = load_pairs(path, &loaded.ids)?;
            (loaded.graph.clone(), pairs, "new-edges".to_string())
        }
        None => {
            let mut rng = stream_rng(a.seed, u64::MAX - 1);
            let (residual, held) = holdout_edges(&loaded.graph, a.holdout, &mut rng)?;
            log::info!("held out {} edges", held.len());
            (residual, held, format!("holdout={:.2}", a.holdout))
        }
    };
    let e = match &a.embedding {
        Some(path) => {
            leakage_warning(&observed, &new_edges, a.new_edges.is_none());
            align_embedding(&load_embedding(path)?, &loaded.ids)?
        }
        None => {
            leakage_warning(&observed, &new_edges, false);
            let opts = pipeline_options(&a.spectral, threads, None)?;
            ase_pipeline(&observed, &a.train.config(), &opts, a.seed)?.embedding
        }
    };
    let cfg = a.logistic.config();
    let acc = (0..a.repeats)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(a.seed, r as u64);
            link_prediction_eval(&e, &observed, &new_edges, &cfg, &mut rng)
        })
        .collect::<ase_core::Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    summary("linkpred", param, "accuracy", &acc, &mut rows);
    let mut w = Output::with_header(a.out.as_deref(), prov)?;
    write_metrics_csv(&mut w, &rows)?;
    w.finish()
}

fn eval_cluster(a: &ClusterArgs, prov: &Provenance) -> CliResult<()> {
    let loaded = load_graph(&a.graph)?;
    let e = align_embedding(&load_embedding(&a.embedding)?, &loaded.ids)?;
    let grid = a
        .clusters
        .clone()
        .unwrap_or_else(|| (1..=10).map(|i| 4 * i).chain([60, 80, 100]).collect());
    let n = loaded.graph.n_nodes();
    let mut rows = Vec::new();
    for (i, &k) in grid.iter().enumerate() {
        if k > n {
            return usage(format!("cannot form {k} clusters from {n} nodes"));
        }
        let phi = (0..a.repeats)
            .into_par_iter()
            .map(|r| {
                let mut rng = stream_rng(a.seed, (i * a.repeats + r) as u64);
                let clusters = kmeans(&e.matrix, k, &mut rng)?;
                conductance(&loaded.graph, &clusters.assignment, k).map(|c| c.mean)
            })
            .collect::<ase_core::Result<Vec<_>>>()?;
        summary("cluster", k.to_string(), "conductance", &phi, &mut rows);
    }
    let mut w = Output::with_header(a.out.as_deref(), prov)?;
    write_metrics_csv(&mut w, &rows)?;
    w.finish()
}

fn default_grid(param: SweepParam) -> Vec<f64> {
    let ints = |xs: &[usize]| xs.iter().map(|&x| x as f64).collect();
    match param {
        SweepParam::Reg => vec![0.0, 0.5, 1.0, 2.0, 3.0, 5.0, 7.0, 10.0],
        SweepParam::Samples => ints(&[10, 100, 500, 1000, 2000, 3000, 4000]),
        SweepParam::MaxHop => ints(&[
            1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 15, 20, 30, 40, 50, 100, 150, 200, 500, 1000,
        ]),
        SweepParam::Dim => ints(&[10, 25, 50, 75, 100, 125, 150, 175, 200]),
    }
}

fn as_count(param: SweepParam, v: f64) -> CliResult<usize> {
    if v >= 1.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        usage(format!(
            "{param:?} values must be positive integers, got {v}"
        ))
    }
}

fn sweep(a: &SweepArgs, threads: usize, prov: &Provenance) -> CliResult<()> {
    let loaded = load_graph(&a.graph)?;
    let labeled = load_labels(&a.labels, &loaded.ids)?;
    let values = a.values.clone().unwrap_or_else(|| default_grid(a.param));
    let lr = a.logistic.config();
    let mut rows = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        let mut cfg = a.train.config();
        let mut spectral = a.spectral.clone();
        let name = match a.param {
            SweepParam::Reg => {
                cfg.reg = v;
                "reg"
            }
            SweepParam::Samples => {
                cfg.n_samples = as_count(a.param, v)?;
                "samples"
            }
            SweepParam::MaxHop => {
                cfg.max_hop = as_count(a.param, v)?;
                "max-hop"
            }
            SweepParam::Dim => {
                spectral.dim = as_count(a.param, v)?;
                "dim"
            }
        };
        let param = format!("{name}={v}");
        let opts = pipeline_options(&spectral, threads, None)?;
        let start = Instant::now();
        let out = ase_pipeline(&loaded.graph, &cfg, &opts, a.seed)?;
        let seconds = start.elapsed().as_secs_f64();
        let stream0 = (i * a.repeats) as u64;
        let (micro, macro_) = repeated_f1(
            &out.embedding,
            &labeled,
            a.label_rate,
            &lr,
            a.seed,
            stream0,
            a.repeats,
        )?;
        summary("sweep", param.clone(), "micro-f1", &micro, &mut rows);
        summary("sweep", param.clone(), "macro-f1", &macro_, &mut rows);
        if a.timings {
            summary("sweep", param, "seconds", &[seconds], &mut rows);
        }
        log::info!("{name}={v}: theta {:?}", out.theta.as_slice());
    }
    let mut w = Output::with_header(a.out.as_deref(), prov)?;
    write_metrics_csv(&mut w, &rows)?;
    w.finish()
}
