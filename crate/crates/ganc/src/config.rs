//! Run configuration: flat `key = value` files overridden by command-line
//! flags.
//!
//! ```text
//! # ML-100K, GANC(Pop, θ^G, Dyn)
//! data = data/ml-100k/u.data
//! out = runs/ml100k
//! theta = generalized
//! arec = pop
//! crec = dyn
//! n = 5
//! s = 500
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ganc_core::metrics::{DEFAULT_BETA, DEFAULT_THRESHOLD};
use ganc_core::preference::{GeneralizedConfig, PreferenceModel};
use ganc_core::scoring::{CoverageKind, RsvdConfig};
use ganc_core::Protocol;

use crate::error::{Error, Result};
use crate::io::RatingFormat;

/// Base accuracy recommender.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArecKind {
    Pop,
    Rsvd,
    /// Scores imported from `scores`.
    External,
}

impl ArecKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ArecKind::Pop => "pop",
            ArecKind::Rsvd => "rsvd",
            ArecKind::External => "external",
        }
    }
}

impl fmt::Display for ArecKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ArecKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pop" | "most_popular" => Ok(ArecKind::Pop),
            "rsvd" | "mf" => Ok(ArecKind::Rsvd),
            "external" | "file" => Ok(ArecKind::External),
            other => Err(Error::Usage(format!(
                "unknown accuracy recommender `{other}` (expected pop, rsvd or external)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    /// Inferred from the file extension when unset.
    pub format: Option<RatingFormat>,
    pub kappa: f64,
    pub tau: usize,
    pub split_seed: u64,

    /// Holds the split, preference and factor artifacts.
    pub out: PathBuf,
    /// Holds `topn.csv`, reports and sweeps; defaults to `out`.
    pub run_dir: Option<PathBuf>,

    pub theta: PreferenceModel,
    pub lambda1: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub constant: f64,
    pub theta_seed: u64,

    pub arec: ArecKind,
    pub mf_dim: usize,
    pub mf_lambda: f64,
    pub mf_eta: f64,
    pub mf_epochs: usize,
    pub mf_seed: u64,
    pub scores: Option<PathBuf>,
    /// Size of Pop's top list; defaults to `n`.
    pub pop_n: Option<usize>,

    pub crec: CoverageKind,
    pub n: usize,
    pub s: usize,
    pub seed: u64,
    pub protocol: Protocol,
    /// Worker threads for the parallel phases; 0 picks one per core.
    pub threads: usize,

    pub reps: usize,
    pub s_values: Vec<usize>,
    pub beta: f64,
    pub threshold: f64,
    pub bins: usize,

    explicit: BTreeSet<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let g = GeneralizedConfig::default();
        let mf = RsvdConfig::default();
        RunConfig {
            data: None,
            format: None,
            kappa: 0.5,
            tau: 20,
            split_seed: 0,
            out: PathBuf::from("."),
            run_dir: None,
            theta: PreferenceModel::Generalized,
            lambda1: g.lambda1,
            tol: g.tol,
            max_iters: g.max_iters,
            constant: 0.5,
            theta_seed: 0,
            arec: ArecKind::Pop,
            mf_dim: mf.dim,
            mf_lambda: mf.lambda,
            mf_eta: mf.eta,
            mf_epochs: mf.epochs,
            mf_seed: mf.seed,
            scores: None,
            pop_n: None,
            crec: CoverageKind::Dyn,
            n: 5,
            s: 500,
            seed: 0,
            protocol: Protocol::AllUnrated,
            threads: 0,
            reps: 10,
            s_values: vec![100, 500, 1000, 2000],
            beta: DEFAULT_BETA,
            threshold: DEFAULT_THRESHOLD,
            bins: 10,
            explicit: BTreeSet::new(),
        }
    }
}

pub const KEYS: &[&str] = &[
    "data",
    "format",
    "kappa",
    "tau",
    "split_seed",
    "out",
    "run_dir",
    "theta",
    "lambda1",
    "tol",
    "max_iters",
    "constant",
    "theta_seed",
    "arec",
    "mf_dim",
    "mf_lambda",
    "mf_eta",
    "mf_epochs",
    "mf_seed",
    "scores",
    "pop_n",
    "crec",
    "n",
    "s",
    "seed",
    "protocol",
    "threads",
    "reps",
    "s_values",
    "beta",
    "threshold",
    "bins",
];

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Usage(format!("`{key}` expects a number, got `{value}`")))
}

fn core<T>(r: ganc_core::Result<T>) -> Result<T> {
    r.map_err(|e| Error::Usage(e.to_string()))
}

impl RunConfig {
    /// Applies one `key = value` setting. Paths are taken as given.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        match key.as_str() {
            "data" => self.data = Some(value.into()),
            "format" => self.format = Some(value.parse()?),
            "kappa" => self.kappa = num(&key, value)?,
            "tau" => self.tau = num(&key, value)?,
            "split_seed" => self.split_seed = num(&key, value)?,
            "out" => self.out = value.into(),
            "run_dir" => self.run_dir = Some(value.into()),
            "theta" => self.theta = core(value.parse())?,
            "lambda1" => self.lambda1 = num(&key, value)?,
            "tol" => self.tol = num(&key, value)?,
            "max_iters" => self.max_iters = num(&key, value)?,
            "constant" => self.constant = num(&key, value)?,
            "theta_seed" => self.theta_seed = num(&key, value)?,
            "arec" => self.arec = value.parse()?,
            "mf_dim" => self.mf_dim = num(&key, value)?,
            "mf_lambda" => self.mf_lambda = num(&key, value)?,
            "mf_eta" => self.mf_eta = num(&key, value)?,
            "mf_epochs" => self.mf_epochs = num(&key, value)?,
            "mf_seed" => self.mf_seed = num(&key, value)?,
            "scores" => self.scores = Some(value.into()),
            "pop_n" => self.pop_n = Some(num(&key, value)?),
            "crec" => self.crec = core(value.parse())?,
            "n" => self.n = num(&key, value)?,
            "s" => self.s = num(&key, value)?,
            "seed" => self.seed = num(&key, value)?,
            "protocol" => self.protocol = core(value.parse())?,
            "threads" => self.threads = num(&key, value)?,
            "reps" => self.reps = num(&key, value)?,
            "s_values" => {
                self.s_values = value
                    .split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|t| !t.is_empty())
                    .map(|t| num(&key, t))
                    .collect::<Result<_>>()?
            }
            "beta" => self.beta = num(&key, value)?,
            "threshold" => self.threshold = num(&key, value)?,
            "bins" => self.bins = num(&key, value)?,
            _ => return Err(Error::Usage(format!("unknown configuration key `{key}`"))),
        }
        self.explicit.insert(key);
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse_str(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (k, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(origin, k as u64 + 1, "expected `key = value`"))?;
            self.set(key, value).map_err(|e| match e {
                Error::Usage(msg) => Error::parse(origin, k as u64 + 1, msg),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn load_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.parse_str(&text, path)
    }

    /// Whether `key` came from a file or flag rather than the defaults.
    pub fn is_explicit(&self, key: &str) -> bool {
        self.explicit.contains(key)
    }

    pub fn run_dir(&self) -> &Path {
        self.run_dir.as_deref().unwrap_or(&self.out)
    }

    pub fn generalized(&self) -> GeneralizedConfig {
        GeneralizedConfig {
            lambda1: self.lambda1,
            tol: self.tol,
            max_iters: self.max_iters,
        }
    }

    pub fn rsvd(&self) -> RsvdConfig {
        RsvdConfig {
            dim: self.mf_dim,
            lambda: self.mf_lambda,
            eta: self.mf_eta,
            epochs: self.mf_epochs,
            seed: self.mf_seed,
        }
    }

    /// Domain checks shared by every command. Negated comparisons reject NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Usage(msg));
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return bad(format!("kappa must lie in (0, 1], got {}", self.kappa));
        }
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if self.pop_n == Some(0) {
            return bad("pop_n must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.constant) {
            return bad(format!(
                "constant must lie in [0, 1], got {}",
                self.constant
            ));
        }
        if !(self.lambda1 > 0.0) || !(self.tol > 0.0) {
            return bad("lambda1 and tol must be positive".into());
        }
        if self.mf_dim == 0 || !(self.mf_eta > 0.0) || !(self.mf_lambda >= 0.0) {
            return bad("mf_dim and mf_eta must be positive, mf_lambda non-negative".into());
        }
        if !(self.beta >= 0.0) {
            return bad(format!("beta must be non-negative, got {}", self.beta));
        }
        if self.reps == 0 || self.bins == 0 {
            return bad("reps and bins must be at least 1".into());
        }
        Ok(())
    }
}
