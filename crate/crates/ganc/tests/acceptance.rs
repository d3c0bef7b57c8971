//! End-to-end acceptance checks. Runs every check, prints one PASS/FAIL line
//! each and exits non-zero when any fails.
//!
//! Needs MovieLens 100K `u.data`: `ML100K_PATH`, or `data/ml-100k/u.data`
//! under the workspace root (see `scripts/fetch_ml100k.sh`).

use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use ganc::exec::{PermutedExecutor, RayonExecutor};
use ganc::io::{load_ratings, RatingFormat};
use ganc_core::dataset::{compute_item_stats, split_per_user};
use ganc_core::metrics::{
    evaluate, gini, lt_accuracy_at_n, micro_recall, strat_recall_at_n, DEFAULT_THRESHOLD,
};
use ganc_core::oracle::{brute_force_optimal, collection_value, submodularity_check};
use ganc_core::preference::{
    theta_generalized, theta_normalized_longtail, GeneralizedConfig, PreferenceVector,
};
use ganc_core::rerank::{
    independent_topn, locally_greedy_full, oslg, OslgConfig, Sequential, UserOrder,
};
use ganc_core::scoring::{
    mf_accuracy_scorer, rmse, rsvd_train, AccuracyScorer, MfModel, PopScorer, RandCoverage,
    RsvdConfig, ScoreMatrix, StatCoverage,
};
use ganc_core::{ItemStats, Protocol, Rating, SplitDataset, TopNCollection};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KAPPA: f64 = 0.5;
const TAU: usize = 20;
const N: usize = 5;

struct Movielens {
    ratings: Vec<Rating>,
    split: SplitDataset,
    stats: ItemStats,
    theta_g: PreferenceVector,
    theta_n: PreferenceVector,
}

fn data_path() -> PathBuf {
    std::env::var_os("ML100K_PATH")
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/ml-100k/u.data")
        })
}

fn movielens() -> &'static Movielens {
    static CELL: OnceLock<Movielens> = OnceLock::new();
    CELL.get_or_init(|| {
        let path = data_path();
        let ratings = load_ratings(&path, RatingFormat::TabSeparated)
            .unwrap_or_else(|e| panic!("MovieLens 100K is required at {}: {e}", path.display()));
        let split = split_per_user(&ratings, KAPPA, TAU, 0).unwrap();
        let stats = compute_item_stats(&split);
        let theta_g = theta_generalized(&split, GeneralizedConfig::default()).unwrap();
        let theta_n = theta_normalized_longtail(&split, &stats);
        Movielens {
            ratings,
            split,
            stats,
            theta_g,
            theta_n,
        }
    })
}

fn rsvd_model() -> &'static MfModel {
    static CELL: OnceLock<MfModel> = OnceLock::new();
    CELL.get_or_init(|| rsvd_train(&movielens().split, RsvdConfig::default()).unwrap())
}

/// Pass flag plus a one-line measurement summary.
type Outcome = (bool, String);

type Builder<'a> = Box<dyn Fn(Protocol) -> TopNCollection + 'a>;

type Check = (&'static str, fn() -> Outcome);

fn rsvd_heldout_rmse() -> Outcome {
    let ml = movielens();
    let start = Instant::now();
    let model = rsvd_model();
    let secs = start.elapsed().as_secs_f64();
    let test = rmse(model, ml.split.test()).unwrap();
    let ok = (test - 0.935).abs() <= 0.02 && secs <= 300.0;
    (
        ok,
        format!("held-out RMSE {test:.4} (want 0.935 ± 0.02), trained in {secs:.1}s"),
    )
}

fn long_tail_share() -> Outcome {
    let ml = movielens();
    let shares: Vec<f64> = (0..5)
        .map(|seed| {
            let split = split_per_user(&ml.ratings, KAPPA, TAU, seed).unwrap();
            100.0 * compute_item_stats(&split).long_tail_share()
        })
        .collect();
    let ok = shares.iter().all(|s| (s - 66.98).abs() <= 1.5);
    let list: Vec<String> = shares.iter().map(|s| format!("{s:.2}")).collect();
    (
        ok,
        format!("L% per seed [{}] (want 66.98 ± 1.5)", list.join(", ")),
    )
}

// Random split with at most `max_users` users and `max_items` items where
// every user keeps at least `n` unseen items.
fn small_instance(
    rng: &mut ChaCha8Rng,
    max_users: usize,
    max_items: usize,
    n: usize,
) -> (SplitDataset, Vec<f64>, ScoreMatrix) {
    loop {
        let nu = rng.gen_range(1..=max_users);
        let ni = rng.gen_range(n + 1..=max_items);
        let mut train = Vec::new();
        for u in 0..nu as u64 {
            let mut items: Vec<u64> = (0..ni as u64).collect();
            items.shuffle(rng);
            let k = rng.gen_range(1..=ni - n);
            train.extend(
                items[..k]
                    .iter()
                    .map(|&i| Rating::new(u, i, rng.gen_range(1..=5) as f64)),
            );
        }
        let split = SplitDataset::from_parts(train, Vec::new()).unwrap();
        if (0..split.num_users()).any(|u| split.unseen_items(u).len() < n) {
            continue;
        }
        let theta = (0..split.num_users()).map(|_| rng.gen::<f64>()).collect();
        let scores = (0..split.num_users() * split.num_items())
            .map(|_| rng.gen::<f64>())
            .collect();
        let arec = ScoreMatrix::new(split.num_users(), split.num_items(), scores).unwrap();
        return (split, theta, arec);
    }
}

fn approximation_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut held = 0;
    let mut worst = f64::INFINITY;
    for _ in 0..100 {
        let n = rng.gen_range(1..=2);
        let (split, theta, arec) = small_instance(&mut rng, 3, 6, n);
        let (best, _) = brute_force_optimal(&split, &theta, &arec, n).unwrap();
        let coll = locally_greedy_full(
            &split,
            &theta,
            &arec,
            n,
            &UserOrder::Arbitrary,
            Protocol::AllUnrated,
        )
        .unwrap();
        let ratio = collection_value(&split, &theta, &arec, &coll) / best;
        worst = worst.min(ratio);
        if ratio >= 0.5 {
            held += 1;
        }
    }
    (
        held == 100,
        format!("{held}/100 instances at >= half the optimum, worst ratio {worst:.4}"),
    )
}

fn submodularity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut held = 0;
    for k in 0..1000 {
        let (split, theta, arec) = small_instance(&mut rng, 4, 8, 1);
        if submodularity_check(&split, &theta, &arec, 10, k) {
            held += 1;
        }
    }
    (
        held == 1000,
        format!("{held}/1000 instances pass the diminishing-returns check"),
    )
}

fn oslg_full_sample() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut same = 0;
    for k in 0..20 {
        let n = rng.gen_range(1..=3);
        let (split, theta, arec) = small_instance(&mut rng, 15, 25, n);
        let cfg = OslgConfig {
            n,
            s: split.num_users(),
            seed: k,
            protocol: Protocol::AllUnrated,
        };
        let got = oslg(&split, &theta, &arec, cfg, &Sequential).unwrap();
        let want = locally_greedy_full(
            &split,
            &theta,
            &arec,
            n,
            &UserOrder::IncreasingTheta,
            Protocol::AllUnrated,
        )
        .unwrap();
        if got == want {
            same += 1;
        }
    }
    (
        same == 20,
        format!("{same}/20 instances identical to the sequential pass by preference"),
    )
}

fn phase_four_determinism() -> Outcome {
    let ml = movielens();
    // ML-100K has fewer than 2000 users, so every user takes part
    let users = ml.split.num_users().min(2000);
    let pop = PopScorer::new(&ml.split, &ml.stats, N);
    let cfg = OslgConfig {
        n: N,
        s: 500,
        seed: 0,
        protocol: Protocol::AllUnrated,
    };
    let theta = &ml.theta_g.theta;
    let base = oslg(&ml.split, theta, &pop, cfg, &Sequential).unwrap();
    let runs = [
        oslg(&ml.split, theta, &pop, cfg, &PermutedExecutor { seed: 1 }).unwrap(),
        oslg(&ml.split, theta, &pop, cfg, &PermutedExecutor { seed: 2 }).unwrap(),
        oslg(&ml.split, theta, &pop, cfg, &RayonExecutor::new(1).unwrap()).unwrap(),
        oslg(&ml.split, theta, &pop, cfg, &RayonExecutor::new(8).unwrap()).unwrap(),
    ];
    let same = runs.iter().filter(|c| **c == base).count();
    (
        same == runs.len() && base.validate(&ml.split).is_ok(),
        format!(
            "{same}/{} runs identical over {users} users (2 shuffled orders, 1 and 8 workers)",
            runs.len()
        ),
    )
}

fn plain_topn(
    split: &SplitDataset,
    arec: &dyn AccuracyScorer,
    protocol: Protocol,
) -> TopNCollection {
    let zero = vec![0.0; split.num_users()];
    let stat = StatCoverage::new(&compute_item_stats(split));
    independent_topn(split, &zero, arec, &stat, N, protocol, &Sequential).unwrap()
}

fn coverage_trend() -> Outcome {
    let ml = movielens();
    let pop = PopScorer::new(&ml.split, &ml.stats, N);
    let base = plain_topn(&ml.split, &pop, Protocol::AllUnrated);
    let cfg = OslgConfig {
        n: N,
        s: 500,
        seed: 0,
        protocol: Protocol::AllUnrated,
    };
    let ganc = oslg(&ml.split, &ml.theta_g.theta, &pop, cfg, &Sequential).unwrap();
    let eval = |c: &TopNCollection| {
        evaluate(
            c,
            &ml.split,
            &ml.stats,
            Protocol::AllUnrated,
            N,
            0.5,
            DEFAULT_THRESHOLD,
        )
        .unwrap()
    };
    let (p, g) = (eval(&base), eval(&ganc));
    let f_gap = (g.f_measure - p.f_measure).abs() / p.f_measure;
    let ok = g.coverage >= 3.0 * p.coverage && g.gini < p.gini && f_gap <= 0.4;
    (
        ok,
        format!(
            "coverage {:.4} vs Pop {:.4} ({:.1}x), gini {:.4} vs {:.4}, F {:.4} vs {:.4} ({:.1}% apart)",
            g.coverage,
            p.coverage,
            g.coverage / p.coverage,
            g.gini,
            p.gini,
            g.f_measure,
            p.f_measure,
            100.0 * f_gap
        ),
    )
}

fn sample_size_trend() -> Outcome {
    let ml = movielens();
    let pop = PopScorer::new(&ml.split, &ml.stats, N);
    let users = ml.split.num_users();
    let mut means = Vec::new();
    for s in [100, 500, 1000, 2000] {
        let mut total = 0.0;
        for seed in 0..10 {
            let cfg = OslgConfig {
                n: N,
                s: s.min(users),
                seed,
                protocol: Protocol::AllUnrated,
            };
            let coll = oslg(&ml.split, &ml.theta_g.theta, &pop, cfg, &Sequential).unwrap();
            total += ganc_core::metrics::coverage_at_n(&coll, &ml.split);
        }
        means.push((s, total / 10.0));
    }
    let ok = means.windows(2).all(|w| w[1].1 >= w[0].1 * 0.98);
    let list: Vec<String> = means
        .iter()
        .map(|(s, c)| format!("S={s}: {c:.4}"))
        .collect();
    (
        ok,
        format!("mean coverage {} (S capped at {users})", list.join(", ")),
    )
}

fn preference_spread() -> Outcome {
    let ml = movielens();
    let (g, n) = (&ml.theta_g, &ml.theta_n);
    let ok = g.mean() > n.mean() && g.variance() > n.variance();
    (
        ok,
        format!(
            "generalized mean {:.4} var {:.5}; normalized long-tail mean {:.4} var {:.5}",
            g.mean(),
            g.variance(),
            n.mean(),
            n.variance()
        ),
    )
}

fn metric_suite() -> Outcome {
    let ml = movielens();
    let mut notes = Vec::new();
    let mut ok = gini(&[3; 50]).unwrap() == 0.0 && gini(&[1, 3]).unwrap() == 0.25;

    let pop = PopScorer::new(&ml.split, &ml.stats, N);
    let pop_coll = plain_topn(&ml.split, &pop, Protocol::AllUnrated);
    let strat = strat_recall_at_n(&pop_coll, &ml.split, &ml.stats, 0.0, DEFAULT_THRESHOLD).unwrap();
    let micro = micro_recall(&pop_coll, &ml.split, DEFAULT_THRESHOLD).unwrap();
    ok &= (strat - micro).abs() <= 1e-12;

    let lt = ml.stats.long_tail_items();
    let lt_lists = (0..ml.split.num_users())
        .map(|u| {
            lt.iter()
                .copied()
                .filter(|&i| !ml.split.has_seen(u, i))
                .take(N)
                .collect()
        })
        .collect();
    ok &= lt_accuracy_at_n(
        &TopNCollection::new(N, Protocol::AllUnrated, lt_lists),
        &ml.stats,
    )
    .unwrap()
        == 1.0;

    let mf = mf_accuracy_scorer(rsvd_model(), &ml.split).unwrap();
    let rand = RandCoverage::new(ml.split.num_items(), 0);
    let ones = vec![1.0; ml.split.num_users()];
    let models: [(&str, Builder); 5] = [
        (
            "Pop",
            Box::new(|p| {
                plain_topn(
                    &ml.split,
                    &PopScorer::for_protocol(&ml.split, &ml.stats, N, p),
                    p,
                )
            }),
        ),
        ("RSVD", Box::new(|p| plain_topn(&ml.split, &mf, p))),
        (
            "Rand",
            Box::new(|p| {
                independent_topn(&ml.split, &ones, &mf, &rand, N, p, &Sequential).unwrap()
            }),
        ),
        (
            "GANC(Pop)",
            Box::new(|p| {
                let pop = PopScorer::for_protocol(&ml.split, &ml.stats, N, p);
                let cfg = OslgConfig {
                    n: N,
                    s: 500,
                    seed: 0,
                    protocol: p,
                };
                oslg(&ml.split, &ml.theta_g.theta, &pop, cfg, &Sequential).unwrap()
            }),
        ),
        (
            "GANC(RSVD)",
            Box::new(|p| {
                let cfg = OslgConfig {
                    n: N,
                    s: 500,
                    seed: 0,
                    protocol: p,
                };
                oslg(&ml.split, &ml.theta_g.theta, &mf, cfg, &Sequential).unwrap()
            }),
        ),
    ];
    for (name, build) in &models {
        let f = |p: Protocol| {
            evaluate(
                &build(p),
                &ml.split,
                &ml.stats,
                p,
                N,
                0.5,
                DEFAULT_THRESHOLD,
            )
            .unwrap()
            .f_measure
        };
        let (all, rated) = (f(Protocol::AllUnrated), f(Protocol::RatedTestItems));
        ok &= rated > all;
        notes.push(format!("{name} {all:.3}->{rated:.3}"));
    }
    (
        ok,
        format!(
            "gini, strat recall, LT accuracy exact; F all_unrated->rated: {}",
            notes.join(", ")
        ),
    )
}

fn main() -> ExitCode {
    let checks: [Check; 10] = [
        ("rsvd held-out rmse", rsvd_heldout_rmse),
        ("long-tail share", long_tail_share),
        ("locally greedy approximation", approximation_bound),
        ("submodular objective", submodularity),
        ("oslg with full sample", oslg_full_sample),
        ("parallel phase determinism", phase_four_determinism),
        ("coverage and novelty vs pop", coverage_trend),
        ("coverage vs sample size", sample_size_trend),
        ("preference distribution", preference_spread),
        ("metric suite and protocols", metric_suite),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (k, (name, check)) in checks.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check));
        let secs = start.elapsed().as_secs_f64();
        let (ok, detail) = outcome.unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        });
        if !ok {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {detail} [{secs:.1}s]",
            if ok { "PASS" } else { "FAIL" },
            k + 1
        );
    }
    println!("acceptance: {} failed", failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
