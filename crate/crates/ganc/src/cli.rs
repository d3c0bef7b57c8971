//! Argument parsing and human-readable output for the `ganc` binary.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::pipeline;

#[derive(Debug, Parser)]
#[command(
    name = "ganc",
    version,
    about = "Long-tail aware top-N re-ranking pipeline"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split a ratings file per user into train.csv and test.csv.
    Split(Settings),
    /// Estimate long-tail preferences into theta.csv.
    Prefs(Settings),
    /// Train the regularized SVD model used by `arec = rsvd`.
    TrainRsvd(Settings),
    /// Build a top-N collection into topn.csv.
    Recommend(Settings),
    /// Score topn.csv into report.json and report.csv.
    Evaluate(Settings),
    /// Average OSLG metrics over repeated runs for several sample sizes.
    Sweep(Settings),
    /// Print split statistics and the activity/popularity profile.
    Stats(Settings),
}

impl Command {
    pub fn settings(&self) -> &Settings {
        match self {
            Command::Split(s)
            | Command::Prefs(s)
            | Command::TrainRsvd(s)
            | Command::Recommend(s)
            | Command::Evaluate(s)
            | Command::Sweep(s)
            | Command::Stats(s) => s,
        }
    }
}

/// Every configuration key is also a flag; flags beat the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Settings {
    /// Flat `key = value` configuration file.
    #[arg(short, long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Any configuration key, applied last. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,

    /// Ratings file.
    #[arg(long)]
    pub data: Option<String>,
    /// tab, double_colon or csv; inferred from the extension by default.
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub kappa: Option<String>,
    #[arg(long)]
    pub tau: Option<String>,
    #[arg(long)]
    pub split_seed: Option<String>,
    /// Directory for split, preference and model artifacts.
    #[arg(short, long)]
    pub out: Option<String>,
    /// Directory for top-N lists, reports and sweeps (defaults to --out).
    #[arg(long)]
    pub run_dir: Option<String>,
    /// activity, normalized_long_tail, tfidf, generalized, constant or random.
    #[arg(long)]
    pub theta: Option<String>,
    #[arg(long)]
    pub lambda1: Option<String>,
    #[arg(long)]
    pub tol: Option<String>,
    #[arg(long)]
    pub max_iters: Option<String>,
    #[arg(long)]
    pub constant: Option<String>,
    #[arg(long)]
    pub theta_seed: Option<String>,
    /// pop, rsvd or external.
    #[arg(long)]
    pub arec: Option<String>,
    #[arg(long)]
    pub mf_dim: Option<String>,
    #[arg(long)]
    pub mf_lambda: Option<String>,
    #[arg(long)]
    pub mf_eta: Option<String>,
    #[arg(long)]
    pub mf_epochs: Option<String>,
    #[arg(long)]
    pub mf_seed: Option<String>,
    /// user,item,score file for `arec = external`.
    #[arg(long)]
    pub scores: Option<String>,
    #[arg(long)]
    pub pop_n: Option<String>,
    /// dyn, stat or rand.
    #[arg(long)]
    pub crec: Option<String>,
    #[arg(short, long)]
    pub n: Option<String>,
    /// OSLG sample size.
    #[arg(short, long)]
    pub s: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// all_unrated or rated_test_items.
    #[arg(long)]
    pub protocol: Option<String>,
    #[arg(long)]
    pub threads: Option<String>,
    #[arg(long)]
    pub reps: Option<String>,
    /// Comma-separated sample sizes for `sweep`.
    #[arg(long)]
    pub s_values: Option<String>,
    #[arg(long)]
    pub beta: Option<String>,
    #[arg(long)]
    pub threshold: Option<String>,
    #[arg(long)]
    pub bins: Option<String>,
}

impl Settings {
    fn flags(&self) -> Vec<(&'static str, &String)> {
        let all = [
            ("data", &self.data),
            ("format", &self.format),
            ("kappa", &self.kappa),
            ("tau", &self.tau),
            ("split_seed", &self.split_seed),
            ("out", &self.out),
            ("run_dir", &self.run_dir),
            ("theta", &self.theta),
            ("lambda1", &self.lambda1),
            ("tol", &self.tol),
            ("max_iters", &self.max_iters),
            ("constant", &self.constant),
            ("theta_seed", &self.theta_seed),
            ("arec", &self.arec),
            ("mf_dim", &self.mf_dim),
            ("mf_lambda", &self.mf_lambda),
            ("mf_eta", &self.mf_eta),
            ("mf_epochs", &self.mf_epochs),
            ("mf_seed", &self.mf_seed),
            ("scores", &self.scores),
            ("pop_n", &self.pop_n),
            ("crec", &self.crec),
            ("n", &self.n),
            ("s", &self.s),
            ("seed", &self.seed),
            ("protocol", &self.protocol),
            ("threads", &self.threads),
            ("reps", &self.reps),
            ("s_values", &self.s_values),
            ("beta", &self.beta),
            ("threshold", &self.threshold),
            ("bins", &self.bins),
        ];
        all.into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k, v)))
            .collect()
    }

    /// Defaults, then the config file, then flags, then `--set` pairs.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.load_file(path)?;
        }
        for (k, v) in self.flags() {
            cfg.set(k, v)?;
        }
        for pair in &self.set {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("--set expects KEY=VALUE, got `{pair}`")))?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }
}

fn pct(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

/// Runs a parsed command. Normal output goes to `out`, notes to `err`.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let cfg = cli.command.settings().resolve()?;
    let w = |e: std::io::Error| Error::io("<stdout>", e);
    match &cli.command {
        Command::Split(_) => {
            let m = pipeline::cmd_split(&cfg)?;
            writeln!(out, "ratings  |D| = {}", m.ratings).map_err(w)?;
            writeln!(out, "users    |U| = {}", m.users).map_err(w)?;
            writeln!(out, "items    |I| = {}", m.items).map_err(w)?;
            writeln!(out, "density      = {}", pct(m.density)).map_err(w)?;
            writeln!(
                out,
                "train {} ratings over {} items, test {} ratings",
                m.train_ratings, m.train_items, m.test_ratings
            )
            .map_err(w)?;
            writeln!(
                out,
                "long tail    = {} of train items ({} items)",
                pct(m.long_tail_share),
                m.long_tail_items
            )
            .map_err(w)?;
            writeln!(out, "split hash   = {}", m.hash).map_err(w)?;
        }
        Command::Prefs(_) => {
            let (prefs, m) = pipeline::cmd_prefs(&cfg)?;
            writeln!(out, "model    = {}", m.model).map_err(w)?;
            writeln!(out, "users    = {}", prefs.len()).map_err(w)?;
            writeln!(out, "mean     = {:.6}", m.mean).map_err(w)?;
            writeln!(out, "variance = {:.6}", m.variance).map_err(w)?;
            if let (Some(it), Some(conv)) = (m.iterations, m.converged) {
                writeln!(out, "iterations = {it}, converged = {conv}").map_err(w)?;
            }
            let hist = pipeline::histogram(&prefs.theta, cfg.bins);
            let peak = hist.iter().copied().max().unwrap_or(0).max(1);
            for (b, &c) in hist.iter().enumerate() {
                let lo = b as f64 / cfg.bins as f64;
                let hi = (b + 1) as f64 / cfg.bins as f64;
                let bar = "#".repeat((40 * c).div_ceil(peak));
                writeln!(out, "[{lo:.2}, {hi:.2}) {c:>6} {bar}").map_err(w)?;
            }
        }
        Command::TrainRsvd(_) => {
            let m = pipeline::cmd_train_rsvd(&cfg)?;
            writeln!(
                out,
                "dim = {}, lambda = {}, eta = {}, epochs = {}",
                m.dim, m.lambda, m.eta, m.epochs
            )
            .map_err(w)?;
            writeln!(out, "train RMSE = {:.4}", m.train_rmse).map_err(w)?;
            match m.test_rmse {
                Some(r) => writeln!(out, "test RMSE  = {r:.4}").map_err(w)?,
                None => writeln!(out, "test RMSE  = n/a (empty test set)").map_err(w)?,
            }
        }
        Command::Recommend(_) => {
            let r = pipeline::cmd_recommend(&cfg)?;
            if let Some(s) = r.manifest.s.filter(|&s| s < cfg.s) {
                writeln!(
                    err,
                    "note: S = {} exceeds the {s} users; running S = {s}",
                    cfg.s
                )
                .map_err(w)?;
            }
            let t = r.timings;
            writeln!(
                out,
                "{} top-{} for {} users",
                r.manifest.template,
                r.manifest.n,
                r.collection.num_users()
            )
            .map_err(w)?;
            writeln!(
                out,
                "sample {:.1} ms, sequential {:.1} ms, parallel {:.1} ms, total {:.1} ms ({} threads)",
                t.sample_ms, t.sequential_ms, t.parallel_ms, t.total_ms, r.manifest.threads
            )
            .map_err(w)?;
        }
        Command::Evaluate(_) => {
            let r = pipeline::cmd_evaluate(&cfg)?;
            writeln!(
                out,
                "N = {}, protocol = {}, users = {}",
                r.n, r.protocol, r.users_evaluated
            )
            .map_err(w)?;
            for (name, v) in [
                ("precision", r.precision),
                ("recall", r.recall),
                ("f_measure", r.f_measure),
                ("lt_accuracy", r.lt_accuracy),
                ("strat_recall", r.strat_recall),
                ("coverage", r.coverage),
                ("gini", r.gini),
            ] {
                writeln!(out, "{name:<12} {v:.6}").map_err(w)?;
            }
        }
        Command::Sweep(_) => {
            let r = pipeline::cmd_sweep(&cfg)?;
            for (asked, used) in &r.clamped {
                writeln!(
                    err,
                    "note: S = {asked} exceeds the {used} users; running S = {used}"
                )
                .map_err(w)?;
            }
            writeln!(
                out,
                "{:>6} {:>10} {:>10} {:>10} {:>12}",
                "S", "F@N", "coverage", "gini", "lt_accuracy"
            )
            .map_err(w)?;
            for row in &r.rows {
                writeln!(
                    out,
                    "{:>6} {:>10.6} {:>10.6} {:>10.6} {:>12.6}",
                    row.s, row.f_measure, row.coverage, row.gini, row.lt_accuracy
                )
                .map_err(w)?;
            }
        }
        Command::Stats(_) => {
            let r = pipeline::cmd_stats(&cfg)?;
            let m = &r.manifest;
            writeln!(
                out,
                "|D| = {}, |U| = {}, |I| = {}, density = {}, L = {}",
                m.ratings,
                m.users,
                m.items,
                pct(m.density),
                pct(m.long_tail_share)
            )
            .map_err(w)?;
            writeln!(
                out,
                "{:>10} {:>16} {:>7}",
                "activity", "mean_popularity", "users"
            )
            .map_err(w)?;
            for b in &r.profile {
                writeln!(
                    out,
                    "{:>10.3} {:>16.2} {:>7}",
                    b.center, b.mean_popularity, b.users
                )
                .map_err(w)?;
            }
        }
    }
    Ok(())
}
