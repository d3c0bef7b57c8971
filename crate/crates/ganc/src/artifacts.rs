//! On-disk artifacts: split files, preference vectors, factor models, top-N
//! lists, reports and their JSON manifests.
//!
//! Every manifest downstream of a split records the split's content hash, and
//! loaders refuse artifacts whose hash differs from the split at hand.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use ganc_core::dataset::compute_item_stats;
use ganc_core::metrics::EvalReport;
use ganc_core::preference::{PreferenceModel, PreferenceVector};
use ganc_core::scoring::{ExternalScores, MfModel};
use ganc_core::{ItemId, Protocol, Rating, SplitDataset, TopNCollection, UserId};

use crate::error::{Error, Result};
use crate::io::{read_ratings, RatingFormat};

pub const TRAIN_FILE: &str = "train.csv";
pub const TEST_FILE: &str = "test.csv";
pub const SPLIT_MANIFEST: &str = "split.json";
pub const THETA_FILE: &str = "theta.csv";
pub const WEIGHTS_FILE: &str = "weights.csv";
pub const PREFS_MANIFEST: &str = "prefs.json";
pub const USER_FACTORS_FILE: &str = "mf_users.csv";
pub const ITEM_FACTORS_FILE: &str = "mf_items.csv";
pub const MF_MANIFEST: &str = "mf.json";
pub const TOPN_FILE: &str = "topn.csv";
pub const RUN_MANIFEST: &str = "run.json";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";
pub const PER_USER_FILE: &str = "per_user.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const ACTIVITY_FILE: &str = "activity.csv";

/// Writes through a temporary sibling and renames, so readers never see a
/// half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        path: path.into(),
        source: e,
    })?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::Json {
        path: path.into(),
        source: e,
    })
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn csv_reader(bytes: &[u8]) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, k: usize, path: &Path) -> Result<T> {
    let line = rec.position().map_or(0, |p| p.line());
    let raw = rec
        .get(k)
        .ok_or_else(|| Error::parse(path, line, format!("missing column {}", k + 1)))?;
    raw.parse().map_err(|_| {
        Error::parse(
            path,
            line,
            format!("cannot parse `{raw}` in column {}", k + 1),
        )
    })
}

fn ratings_csv(ratings: &[Rating]) -> String {
    let mut out = String::from("user,item,rating,timestamp\n");
    for r in ratings {
        match r.timestamp {
            Some(ts) => writeln!(out, "{},{},{},{}", r.user, r.item, r.value, ts),
            None => writeln!(out, "{},{},{},", r.user, r.item, r.value),
        }
        .expect("writing to a String");
    }
    out
}

fn split_hash(train: &[u8], test: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update((train.len() as u64).to_le_bytes());
    h.update(train);
    h.update(test);
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub source: Option<String>,
    pub kappa: f64,
    pub tau: usize,
    pub seed: u64,
    /// Ratings, users and items of the dataset after the activity filter.
    pub ratings: usize,
    pub users: usize,
    pub items: usize,
    pub density: f64,
    pub train_ratings: usize,
    pub test_ratings: usize,
    pub train_items: usize,
    pub long_tail_items: usize,
    pub long_tail_share: f64,
    pub hash: String,
}

/// Dataset-level counts over the ratings that survive the activity filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetCounts {
    pub ratings: usize,
    pub users: usize,
    pub items: usize,
}

impl DatasetCounts {
    pub fn of(ratings: &[Rating], tau: usize) -> Self {
        let mut per_user: HashMap<UserId, usize> = HashMap::new();
        for r in ratings {
            *per_user.entry(r.user).or_default() += 1;
        }
        let kept: Vec<&Rating> = ratings
            .iter()
            .filter(|r| per_user[&r.user] >= tau)
            .collect();
        let mut items: Vec<ItemId> = kept.iter().map(|r| r.item).collect();
        items.sort_unstable();
        items.dedup();
        DatasetCounts {
            ratings: kept.len(),
            users: per_user.values().filter(|&&n| n >= tau).count(),
            items: items.len(),
        }
    }

    pub fn density(&self) -> f64 {
        self.ratings as f64 / (self.users as f64 * self.items as f64)
    }
}

pub struct SplitParams<'a> {
    pub source: Option<&'a Path>,
    pub kappa: f64,
    pub tau: usize,
    pub seed: u64,
    pub counts: DatasetCounts,
}

/// Writes `train.csv`, `test.csv` and `split.json` into `dir`.
pub fn save_split(
    dir: &Path,
    split: &SplitDataset,
    params: SplitParams<'_>,
) -> Result<SplitManifest> {
    let train = ratings_csv(split.train());
    let test = ratings_csv(split.test());
    let stats = compute_item_stats(split);
    let manifest = SplitManifest {
        source: params.source.map(|p| p.display().to_string()),
        kappa: params.kappa,
        tau: params.tau,
        seed: params.seed,
        ratings: params.counts.ratings,
        users: params.counts.users,
        items: params.counts.items,
        density: params.counts.density(),
        train_ratings: split.train().len(),
        test_ratings: split.test().len(),
        train_items: split.num_items(),
        long_tail_items: stats.long_tail_len(),
        long_tail_share: stats.long_tail_share(),
        hash: split_hash(train.as_bytes(), test.as_bytes()),
    };
    write_atomic(&dir.join(TRAIN_FILE), train.as_bytes())?;
    write_atomic(&dir.join(TEST_FILE), test.as_bytes())?;
    write_json(&dir.join(SPLIT_MANIFEST), &manifest)?;
    Ok(manifest)
}

/// A split read back from disk together with its manifest.
#[derive(Debug, Clone)]
pub struct LoadedSplit {
    pub split: SplitDataset,
    pub manifest: SplitManifest,
    pub dir: PathBuf,
}

impl LoadedSplit {
    pub fn hash(&self) -> &str {
        &self.manifest.hash
    }

    /// Fails unless `hash` names this split.
    pub fn check(&self, hash: &str, artifact: &Path) -> Result<()> {
        if hash != self.hash() {
            return Err(Error::Stale {
                path: artifact.into(),
                msg: format!(
                    "built from split {hash}, but {} holds split {}",
                    self.dir.display(),
                    self.hash()
                ),
            });
        }
        Ok(())
    }
}

pub fn load_split(dir: &Path) -> Result<LoadedSplit> {
    let manifest: SplitManifest = read_json(&dir.join(SPLIT_MANIFEST))?;
    let train_path = dir.join(TRAIN_FILE);
    let test_path = dir.join(TEST_FILE);
    let train_bytes = read_bytes(&train_path)?;
    let test_bytes = read_bytes(&test_path)?;
    let hash = split_hash(&train_bytes, &test_bytes);
    if hash != manifest.hash {
        return Err(Error::Stale {
            path: dir.join(SPLIT_MANIFEST),
            msg: "train.csv/test.csv do not match the recorded hash".into(),
        });
    }
    let train = read_ratings(&train_bytes[..], RatingFormat::Csv, &train_path)?;
    let test = read_ratings(&test_bytes[..], RatingFormat::Csv, &test_path)?;
    let split = SplitDataset::from_parts(train, test)?;
    Ok(LoadedSplit {
        split,
        manifest,
        dir: dir.to_path_buf(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefsManifest {
    pub model: String,
    pub split_hash: String,
    pub lambda1: Option<f64>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub constant: Option<f64>,
    pub seed: Option<u64>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub mean: f64,
    pub variance: f64,
}

/// Writes `theta.csv`, `weights.csv` when weights exist, and `prefs.json`.
pub fn save_prefs(
    dir: &Path,
    split: &SplitDataset,
    prefs: &PreferenceVector,
    manifest: &PrefsManifest,
) -> Result<()> {
    let mut theta = String::from("user,theta\n");
    for (u, t) in prefs.theta.iter().enumerate() {
        writeln!(theta, "{},{}", split.user_id(u), t).expect("writing to a String");
    }
    write_atomic(&dir.join(THETA_FILE), theta.as_bytes())?;
    let weights_path = dir.join(WEIGHTS_FILE);
    match &prefs.weights {
        Some(w) => {
            let mut out = String::from("item,weight\n");
            for (i, w) in w.iter().enumerate() {
                writeln!(out, "{},{}", split.item_id(i), w).expect("writing to a String");
            }
            write_atomic(&weights_path, out.as_bytes())?;
        }
        // a sidecar from an earlier model would no longer match theta.csv
        None => match fs::remove_file(&weights_path) {
            Err(e) if e.kind() != std::io::ErrorKind::NotFound => {
                return Err(Error::io(&weights_path, e))
            }
            _ => {}
        },
    }
    write_json(&dir.join(PREFS_MANIFEST), manifest)
}

/// Reads `theta.csv` in split user order.
pub fn load_prefs(dir: &Path, split: &LoadedSplit) -> Result<(PreferenceVector, PrefsManifest)> {
    let manifest: PrefsManifest = read_json(&dir.join(PREFS_MANIFEST))?;
    split.check(&manifest.split_hash, &dir.join(PREFS_MANIFEST))?;
    let path = dir.join(THETA_FILE);
    let bytes = read_bytes(&path)?;
    let s = &split.split;
    let mut theta = vec![f64::NAN; s.num_users()];
    for rec in csv_reader(&bytes).records() {
        let rec = rec?;
        let user = UserId(field(&rec, 0, &path)?);
        let t: f64 = field(&rec, 1, &path)?;
        let u = s.user_index(user).ok_or_else(|| Error::Stale {
            path: path.clone(),
            msg: format!("user {user} is not in the split"),
        })?;
        theta[u] = t;
    }
    if let Some(u) = theta.iter().position(|t| t.is_nan()) {
        return Err(Error::Stale {
            path,
            msg: format!("no preference for user {}", s.user_id(u)),
        });
    }
    let model: PreferenceModel = manifest.model.parse()?;
    let mut prefs = PreferenceVector::new(model, theta);
    prefs.iterations = manifest.iterations;
    prefs.converged = manifest.converged;
    Ok((prefs, manifest))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfManifest {
    pub split_hash: String,
    pub dim: usize,
    pub lambda: f64,
    pub eta: f64,
    pub epochs: usize,
    pub seed: u64,
    pub global_mean: f64,
    pub train_rmse: f64,
    pub test_rmse: Option<f64>,
}

fn factors_csv<I: std::fmt::Display>(
    ids: &[I],
    dim: usize,
    row: impl Fn(usize) -> Vec<f64>,
    key: &str,
) -> String {
    let mut out = String::from(key);
    for k in 0..dim {
        write!(out, ",f{k}").expect("writing to a String");
    }
    out.push('\n');
    for (idx, id) in ids.iter().enumerate() {
        write!(out, "{id}").expect("writing to a String");
        for v in row(idx) {
            write!(out, ",{v}").expect("writing to a String");
        }
        out.push('\n');
    }
    out
}

pub fn save_mf(dir: &Path, model: &MfModel, manifest: &MfManifest) -> Result<()> {
    let users = factors_csv(
        model.users(),
        model.dim(),
        |u| model.user_factors(u).to_vec(),
        "user",
    );
    let items = factors_csv(
        model.items(),
        model.dim(),
        |i| model.item_factors(i).to_vec(),
        "item",
    );
    write_atomic(&dir.join(USER_FACTORS_FILE), users.as_bytes())?;
    write_atomic(&dir.join(ITEM_FACTORS_FILE), items.as_bytes())?;
    write_json(&dir.join(MF_MANIFEST), manifest)
}

fn read_factors(path: &Path, dim: usize) -> Result<(Vec<u64>, Vec<f64>)> {
    let bytes = read_bytes(path)?;
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for rec in csv_reader(&bytes).records() {
        let rec = rec?;
        if rec.len() != dim + 1 {
            let line = rec.position().map_or(0, |p| p.line());
            return Err(Error::parse(
                path,
                line,
                format!("expected {} columns, found {}", dim + 1, rec.len()),
            ));
        }
        ids.push(field(&rec, 0, path)?);
        for k in 1..=dim {
            values.push(field(&rec, k, path)?);
        }
    }
    Ok((ids, values))
}

pub fn load_mf(dir: &Path, split: &LoadedSplit) -> Result<(MfModel, MfManifest)> {
    let manifest: MfManifest = read_json(&dir.join(MF_MANIFEST))?;
    split.check(&manifest.split_hash, &dir.join(MF_MANIFEST))?;
    let (users, pu) = read_factors(&dir.join(USER_FACTORS_FILE), manifest.dim)?;
    let (items, qi) = read_factors(&dir.join(ITEM_FACTORS_FILE), manifest.dim)?;
    let model = MfModel::from_parts(
        users.into_iter().map(UserId).collect(),
        items.into_iter().map(ItemId).collect(),
        manifest.dim,
        pu,
        qi,
        manifest.global_mean,
    )?;
    Ok((model, manifest))
}

/// Reads `user,item,score` rows; a header line is optional.
pub fn load_external_scores(path: &Path, split: &SplitDataset) -> Result<ExternalScores> {
    let bytes = read_bytes(path)?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(&bytes[..]);
    let mut rows = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if k == 0 && rec.get(0).is_some_and(|f| f.parse::<u64>().is_err()) {
            continue;
        }
        if rec.len() != 3 {
            let line = rec.position().map_or(0, |p| p.line());
            return Err(Error::parse(path, line, "expected user,item,score"));
        }
        rows.push((
            UserId(field(&rec, 0, path)?),
            ItemId(field(&rec, 1, path)?),
            field(&rec, 2, path)?,
        ));
    }
    Ok(ExternalScores::new(split, rows)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub template: String,
    pub split_hash: String,
    pub n: usize,
    pub s: Option<usize>,
    pub seed: u64,
    pub protocol: Protocol,
    pub theta_model: String,
    pub arec: String,
    pub crec: String,
    pub threads: usize,
}

/// Writes `topn.csv` (`user,rank,item`, rank from 1) and `run.json`.
pub fn save_topn(
    dir: &Path,
    split: &SplitDataset,
    coll: &TopNCollection,
    manifest: &RunManifest,
) -> Result<()> {
    let mut out = String::from("user,rank,item\n");
    for (u, list) in coll.lists().iter().enumerate() {
        for (k, &i) in list.iter().enumerate() {
            writeln!(out, "{},{},{}", split.user_id(u), k + 1, split.item_id(i))
                .expect("writing to a String");
        }
    }
    write_atomic(&dir.join(TOPN_FILE), out.as_bytes())?;
    write_json(&dir.join(RUN_MANIFEST), manifest)
}

pub fn load_topn(dir: &Path, split: &LoadedSplit) -> Result<(TopNCollection, RunManifest)> {
    let manifest: RunManifest = read_json(&dir.join(RUN_MANIFEST))?;
    split.check(&manifest.split_hash, &dir.join(RUN_MANIFEST))?;
    let path = dir.join(TOPN_FILE);
    let bytes = read_bytes(&path)?;
    let s = &split.split;
    let mut lists: Vec<Vec<(usize, usize)>> = vec![Vec::new(); s.num_users()];
    for rec in csv_reader(&bytes).records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let user = UserId(field(&rec, 0, &path)?);
        let rank: usize = field(&rec, 1, &path)?;
        let item = ItemId(field(&rec, 2, &path)?);
        let u = s
            .user_index(user)
            .ok_or_else(|| Error::parse(&path, line, format!("user {user} is not in the split")))?;
        let i = s.item_index(item).ok_or_else(|| {
            Error::parse(
                &path,
                line,
                format!("item {item} is not in the train universe"),
            )
        })?;
        lists[u].push((rank, i));
    }
    let lists = lists
        .into_iter()
        .map(|mut l| {
            l.sort_unstable();
            l.into_iter().map(|(_, i)| i).collect()
        })
        .collect();
    let coll = TopNCollection::new(manifest.n, manifest.protocol, lists);
    coll.validate(s)?;
    Ok((coll, manifest))
}

const REPORT_COLUMNS: &str =
    "n,protocol,users,precision,recall,f_measure,lt_accuracy,strat_recall,coverage,gini";

/// Writes `report.json`, the one-row `report.csv` and `per_user.csv`.
pub fn save_report(dir: &Path, report: &EvalReport) -> Result<()> {
    write_json(&dir.join(REPORT_JSON), report)?;
    let csv = format!(
        "{REPORT_COLUMNS}\n{},{},{},{},{},{},{},{},{},{}\n",
        report.n,
        report.protocol,
        report.users_evaluated,
        report.precision,
        report.recall,
        report.f_measure,
        report.lt_accuracy,
        report.strat_recall,
        report.coverage,
        report.gini
    );
    write_atomic(&dir.join(REPORT_CSV), csv.as_bytes())?;
    if let Some(per_user) = &report.per_user {
        let mut out = String::from("user,precision,recall\n");
        for m in per_user {
            writeln!(out, "{},{},{}", m.user, m.precision, m.recall).expect("writing to a String");
        }
        write_atomic(&dir.join(PER_USER_FILE), out.as_bytes())?;
    }
    Ok(())
}

pub fn load_report(dir: &Path) -> Result<EvalReport> {
    read_json(&dir.join(REPORT_JSON))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub s: usize,
    pub f_measure: f64,
    pub coverage: f64,
    pub gini: f64,
    pub lt_accuracy: f64,
}

pub fn save_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut out = String::from("s,f_measure,coverage,gini,lt_accuracy\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.s, r.f_measure, r.coverage, r.gini, r.lt_accuracy
        )
        .expect("writing to a String");
    }
    write_atomic(path, out.as_bytes())
}

pub fn load_sweep(path: &Path) -> Result<Vec<SweepRow>> {
    let bytes = read_bytes(path)?;
    csv_reader(&bytes)
        .records()
        .map(|rec| {
            let rec = rec?;
            Ok(SweepRow {
                s: field(&rec, 0, path)?,
                f_measure: field(&rec, 1, path)?,
                coverage: field(&rec, 2, path)?,
                gini: field(&rec, 3, path)?,
                lt_accuracy: field(&rec, 4, path)?,
            })
        })
        .collect()
}
