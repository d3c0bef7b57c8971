//! The command implementations. Each one reads its inputs from disk, writes
//! its artifacts atomically and returns a summary for the caller to print.

use std::time::Instant;

use ganc_core::dataset::{
    activity_popularity_profile, compute_item_stats, split_per_user, ActivityBin,
};
use ganc_core::metrics::evaluate;
use ganc_core::preference::{
    theta_activity, theta_baseline, theta_generalized, theta_normalized_longtail, theta_tfidf,
    Baseline, PreferenceModel, PreferenceVector,
};
use ganc_core::rerank::{independent_topn, kde_sample, oslg_parallel_phase, oslg_sequential_phase};
use ganc_core::scoring::{
    mf_accuracy_scorer, rmse, rsvd_train, AccuracyScorer, CoverageKind, PopScorer, RandCoverage,
    StatCoverage,
};
use ganc_core::{EvalReport, SplitDataset, TopNCollection};

use crate::artifacts::{
    load_external_scores, load_mf, load_prefs, load_split, load_topn, save_mf, save_prefs,
    save_report, save_split, save_sweep, save_topn, write_atomic, DatasetCounts, LoadedSplit,
    MfManifest, PrefsManifest, RunManifest, SplitManifest, SplitParams, SweepRow, ACTIVITY_FILE,
    SWEEP_FILE,
};
use crate::config::{ArecKind, RunConfig};
use crate::error::{Error, Result};
use crate::exec::RayonExecutor;
use crate::io::{load_ratings, RatingFormat};

pub fn cmd_split(cfg: &RunConfig) -> Result<SplitManifest> {
    cfg.validate()?;
    let data = cfg
        .data
        .as_deref()
        .ok_or_else(|| Error::Usage("split needs `data`, the ratings file".into()))?;
    let format = cfg.format.unwrap_or_else(|| RatingFormat::infer(data));
    let ratings = load_ratings(data, format)?;
    let split = split_per_user(&ratings, cfg.kappa, cfg.tau, cfg.split_seed)?;
    save_split(
        &cfg.out,
        &split,
        SplitParams {
            source: Some(data),
            kappa: cfg.kappa,
            tau: cfg.tau,
            seed: cfg.split_seed,
            counts: DatasetCounts::of(&ratings, cfg.tau),
        },
    )
}

/// Preferences plus the manifest recorded next to them.
pub fn compute_prefs(
    cfg: &RunConfig,
    split: &LoadedSplit,
) -> Result<(PreferenceVector, PrefsManifest)> {
    let s = &split.split;
    let mut manifest = PrefsManifest {
        model: cfg.theta.as_str().into(),
        split_hash: split.hash().into(),
        lambda1: None,
        tol: None,
        max_iters: None,
        constant: None,
        seed: None,
        iterations: None,
        converged: None,
        mean: 0.0,
        variance: 0.0,
    };
    let prefs = match cfg.theta {
        PreferenceModel::Activity => theta_activity(s),
        PreferenceModel::NormalizedLongTail => theta_normalized_longtail(s, &compute_item_stats(s)),
        PreferenceModel::Tfidf => theta_tfidf(s),
        PreferenceModel::Generalized => {
            let g = cfg.generalized();
            manifest.lambda1 = Some(g.lambda1);
            manifest.tol = Some(g.tol);
            manifest.max_iters = Some(g.max_iters);
            theta_generalized(s, g)?
        }
        PreferenceModel::Constant => {
            manifest.constant = Some(cfg.constant);
            theta_baseline(s.num_users(), Baseline::Constant(cfg.constant))?
        }
        PreferenceModel::Random => {
            manifest.seed = Some(cfg.theta_seed);
            theta_baseline(s.num_users(), Baseline::Random(cfg.theta_seed))?
        }
    };
    manifest.iterations = prefs.iterations;
    manifest.converged = prefs.converged;
    manifest.mean = prefs.mean();
    manifest.variance = prefs.variance();
    Ok((prefs, manifest))
}

pub fn cmd_prefs(cfg: &RunConfig) -> Result<(PreferenceVector, PrefsManifest)> {
    cfg.validate()?;
    let split = load_split(&cfg.out)?;
    let (prefs, manifest) = compute_prefs(cfg, &split)?;
    save_prefs(&cfg.out, &split.split, &prefs, &manifest)?;
    Ok((prefs, manifest))
}

/// Counts of `values` in `bins` equal-width bins over `[0, 1]`.
pub fn histogram(values: &[f64], bins: usize) -> Vec<usize> {
    let mut h = vec![0; bins];
    for &v in values {
        let b = ((v * bins as f64).floor().max(0.0) as usize).min(bins - 1);
        h[b] += 1;
    }
    h
}

pub fn cmd_train_rsvd(cfg: &RunConfig) -> Result<MfManifest> {
    cfg.validate()?;
    let split = load_split(&cfg.out)?;
    let rc = cfg.rsvd();
    let model = rsvd_train(&split.split, rc)?;
    let test_rmse = if split.split.test().is_empty() {
        None
    } else {
        Some(rmse(&model, split.split.test())?)
    };
    let manifest = MfManifest {
        split_hash: split.hash().into(),
        dim: rc.dim,
        lambda: rc.lambda,
        eta: rc.eta,
        epochs: rc.epochs,
        seed: rc.seed,
        global_mean: model.global_mean(),
        train_rmse: rmse(&model, split.split.train())?,
        test_rmse,
    };
    save_mf(&cfg.out, &model, &manifest)?;
    Ok(manifest)
}

/// Builds the configured accuracy scorer over `split`.
pub fn build_arec(cfg: &RunConfig, split: &LoadedSplit) -> Result<Box<dyn AccuracyScorer>> {
    let s = &split.split;
    Ok(match cfg.arec {
        ArecKind::Pop => {
            let stats = compute_item_stats(s);
            Box::new(PopScorer::for_protocol(
                s,
                &stats,
                cfg.pop_n.unwrap_or(cfg.n),
                cfg.protocol,
            ))
        }
        ArecKind::Rsvd => {
            let (model, _) = load_mf(&cfg.out, split)?;
            Box::new(mf_accuracy_scorer(&model, s)?)
        }
        ArecKind::External => {
            let path = cfg.scores.as_deref().ok_or_else(|| {
                Error::Usage("arec = external needs `scores`, a user,item,score file".into())
            })?;
            Box::new(load_external_scores(path, s)?)
        }
    })
}

fn theta_symbol(model: PreferenceModel) -> &'static str {
    match model {
        PreferenceModel::Activity => "θ^A",
        PreferenceModel::NormalizedLongTail => "θ^N",
        PreferenceModel::Tfidf => "θ^T",
        PreferenceModel::Generalized => "θ^G",
        PreferenceModel::Constant => "θ^C",
        PreferenceModel::Random => "θ^R",
    }
}

fn crec_label(kind: CoverageKind) -> &'static str {
    match kind {
        CoverageKind::Rand => "Rand",
        CoverageKind::Stat => "Stat",
        CoverageKind::Dyn => "Dyn",
    }
}

/// `GANC(ARec, θ, CRec)` label of a run.
pub fn template(arec: &str, theta: PreferenceModel, crec: CoverageKind) -> String {
    format!(
        "GANC({arec}, {}, {})",
        theta_symbol(theta),
        crec_label(crec)
    )
}

/// Wall-clock milliseconds per phase. Kept out of `run.json` so reruns
/// stay byte-identical.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimings {
    pub sample_ms: f64,
    pub sequential_ms: f64,
    pub parallel_ms: f64,
    pub total_ms: f64,
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Runs one recommendation pass with preferences already in memory.
pub fn recommend_with(
    cfg: &RunConfig,
    split: &SplitDataset,
    theta: &[f64],
    arec: &dyn AccuracyScorer,
    seed: u64,
    executor: &RayonExecutor,
) -> Result<(TopNCollection, PhaseTimings)> {
    let start = Instant::now();
    let mut t = PhaseTimings::default();
    let coll = match cfg.crec {
        CoverageKind::Dyn => {
            let s = cfg.s.min(split.num_users());
            let sample = kde_sample(theta, s, seed)?;
            t.sample_ms = ms(start);
            let mark = Instant::now();
            let seq = oslg_sequential_phase(split, theta, arec, cfg.n, &sample, cfg.protocol)?;
            t.sequential_ms = ms(mark);
            let mark = Instant::now();
            let rest: Vec<usize> = (0..split.num_users())
                .filter(|&u| !seq.sampled[u])
                .collect();
            let built = oslg_parallel_phase(
                split,
                theta,
                arec,
                cfg.n,
                cfg.protocol,
                &seq.snapshots,
                &rest,
                executor,
            )?;
            t.parallel_ms = ms(mark);
            let mut lists = seq.lists;
            for (u, list) in rest.into_iter().zip(built) {
                lists[u] = list;
            }
            TopNCollection::new(cfg.n, cfg.protocol, lists)
        }
        CoverageKind::Stat => {
            let crec = StatCoverage::new(&compute_item_stats(split));
            let mark = Instant::now();
            let c = independent_topn(split, theta, arec, &crec, cfg.n, cfg.protocol, executor)?;
            t.parallel_ms = ms(mark);
            c
        }
        CoverageKind::Rand => {
            let crec = RandCoverage::new(split.num_items(), seed);
            let mark = Instant::now();
            let c = independent_topn(split, theta, arec, &crec, cfg.n, cfg.protocol, executor)?;
            t.parallel_ms = ms(mark);
            c
        }
    };
    t.total_ms = ms(start);
    Ok((coll, t))
}

#[derive(Debug, Clone)]
pub struct RecommendOutcome {
    pub collection: TopNCollection,
    pub manifest: RunManifest,
    pub timings: PhaseTimings,
}

pub fn cmd_recommend(cfg: &RunConfig) -> Result<RecommendOutcome> {
    cfg.validate()?;
    let split = load_split(&cfg.out)?;
    let (prefs, _) = load_prefs(&cfg.out, &split)?;
    let arec = build_arec(cfg, &split)?;
    let executor = RayonExecutor::new(cfg.threads)?;
    let (collection, timings) = recommend_with(
        cfg,
        &split.split,
        &prefs.theta,
        arec.as_ref(),
        cfg.seed,
        &executor,
    )?;
    collection.validate(&split.split)?;
    let manifest = RunManifest {
        template: template(arec.label(), prefs.model, cfg.crec),
        split_hash: split.hash().into(),
        n: cfg.n,
        s: (cfg.crec == CoverageKind::Dyn).then(|| cfg.s.min(split.split.num_users())),
        seed: cfg.seed,
        protocol: cfg.protocol,
        theta_model: prefs.model.as_str().into(),
        arec: cfg.arec.as_str().into(),
        crec: cfg.crec.as_str().into(),
        threads: executor.threads(),
    };
    save_topn(cfg.run_dir(), &split.split, &collection, &manifest)?;
    Ok(RecommendOutcome {
        collection,
        manifest,
        timings,
    })
}

pub fn cmd_evaluate(cfg: &RunConfig) -> Result<EvalReport> {
    cfg.validate()?;
    let split = load_split(&cfg.out)?;
    let (coll, manifest) = load_topn(cfg.run_dir(), &split)?;
    let n = if cfg.is_explicit("n") {
        cfg.n
    } else {
        manifest.n
    };
    let protocol = if cfg.is_explicit("protocol") {
        cfg.protocol
    } else {
        manifest.protocol
    };
    let stats = compute_item_stats(&split.split);
    let report = evaluate(
        &coll,
        &split.split,
        &stats,
        protocol,
        n,
        cfg.beta,
        cfg.threshold,
    )?;
    save_report(cfg.run_dir(), &report)?;
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    /// `(requested, used)` for every S above the user count.
    pub clamped: Vec<(usize, usize)>,
}

/// Mean metrics of `reps` OSLG runs, seeded `seed, seed + 1, ...`.
pub fn sweep_point(
    cfg: &RunConfig,
    split: &SplitDataset,
    theta: &[f64],
    arec: &dyn AccuracyScorer,
    s: usize,
    executor: &RayonExecutor,
) -> Result<SweepRow> {
    let stats = compute_item_stats(split);
    let mut point = cfg.clone();
    point.s = s;
    let mut row = SweepRow {
        s,
        f_measure: 0.0,
        coverage: 0.0,
        gini: 0.0,
        lt_accuracy: 0.0,
    };
    for r in 0..cfg.reps {
        let (coll, _) = recommend_with(
            &point,
            split,
            theta,
            arec,
            cfg.seed.wrapping_add(r as u64),
            executor,
        )?;
        let rep = evaluate(
            &coll,
            split,
            &stats,
            cfg.protocol,
            cfg.n,
            cfg.beta,
            cfg.threshold,
        )?;
        row.f_measure += rep.f_measure;
        row.coverage += rep.coverage;
        row.gini += rep.gini;
        row.lt_accuracy += rep.lt_accuracy;
    }
    let k = cfg.reps as f64;
    row.f_measure /= k;
    row.coverage /= k;
    row.gini /= k;
    row.lt_accuracy /= k;
    Ok(row)
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<SweepOutcome> {
    cfg.validate()?;
    if cfg.crec != CoverageKind::Dyn {
        return Err(Error::Usage(
            "sweep varies the OSLG sample size and needs crec = dyn".into(),
        ));
    }
    if cfg.s_values.is_empty() {
        return Err(Error::Usage("s_values is empty".into()));
    }
    let split = load_split(&cfg.out)?;
    let (prefs, _) = load_prefs(&cfg.out, &split)?;
    let arec = build_arec(cfg, &split)?;
    let executor = RayonExecutor::new(cfg.threads)?;
    let users = split.split.num_users();
    let mut rows = Vec::with_capacity(cfg.s_values.len());
    let mut clamped = Vec::new();
    for &s in &cfg.s_values {
        if s > users {
            clamped.push((s, users));
        }
        let mut row = sweep_point(
            cfg,
            &split.split,
            &prefs.theta,
            arec.as_ref(),
            s.min(users),
            &executor,
        )?;
        row.s = s;
        rows.push(row);
    }
    save_sweep(&cfg.run_dir().join(SWEEP_FILE), &rows)?;
    Ok(SweepOutcome { rows, clamped })
}

#[derive(Debug, Clone)]
pub struct StatsOutcome {
    pub manifest: SplitManifest,
    pub profile: Vec<ActivityBin>,
}

pub fn cmd_stats(cfg: &RunConfig) -> Result<StatsOutcome> {
    cfg.validate()?;
    let split = load_split(&cfg.out)?;
    let profile = activity_popularity_profile(&split.split, cfg.bins)?;
    let mut csv = String::from("activity,mean_popularity,users\n");
    for b in &profile {
        csv.push_str(&format!("{},{},{}\n", b.center, b.mean_popularity, b.users));
    }
    write_atomic(&cfg.run_dir().join(ACTIVITY_FILE), csv.as_bytes())?;
    Ok(StatsOutcome {
        manifest: split.manifest,
        profile,
    })
}
