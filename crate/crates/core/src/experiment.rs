//! Repeated attack experiments, accuracy, logit-space extrapolation and result files.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::attack::{
    read_predictions, refined_score_attack, render_predictions, AttackConfig, Prediction,
    PredictionRecord, RefSpeed,
};
use crate::conjunction::{count, ConjunctionSet};
use crate::cooccurrence::{build_trapdoor_cooccurrence, OnDemandColumns};
use crate::corpus::{build_vocabulary, ingest, split, Corpus, ExtractionConfig, SplitSpec};
use crate::error::{Error, Result};
use crate::scheme::{
    build_index_for, sample_known_queries, sample_queries, GroundTruth, KnownQueryPair, SecretKey,
};

pub const DEFAULT_QUERY_FRACTION: f64 = 0.15;
pub const DEFAULT_SIMILAR_FRACTION: f64 = 0.4;
pub const DEFAULT_MEMORY_BUDGET: u64 = 16 << 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackerMode {
    Similar,
    PKnown,
}

impl std::fmt::Display for AttackerMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AttackerMode::Similar => "similar",
            AttackerMode::PKnown => "p_known",
        })
    }
}

impl std::str::FromStr for AttackerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "similar" => Ok(AttackerMode::Similar),
            "p_known" | "known" => Ok(AttackerMode::PKnown),
            other => Err(Error::invalid(format!(
                "unknown attacker mode {other:?} (expected similar or p_known)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub corpus_path: PathBuf,
    pub extraction: ExtractionConfig,
    pub d: usize,
    pub allow_large_arity: bool,
    pub v_real: usize,
    pub mode: AttackerMode,
    /// Attacker share of the corpus in similar mode.
    pub similar_fraction: f64,
    /// Known-documents rate in p_known mode.
    pub p: f64,
    pub query_fraction: f64,
    pub k_known: usize,
    pub attack: AttackConfig,
    pub repetitions: usize,
    pub base_seed: u64,
    /// Upper bound on the matrices and attack accumulators of one repetition.
    pub memory_budget: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            corpus_path: PathBuf::new(),
            extraction: ExtractionConfig::default(),
            d: 2,
            allow_large_arity: false,
            v_real: 130,
            mode: AttackerMode::Similar,
            similar_fraction: DEFAULT_SIMILAR_FRACTION,
            p: 0.7,
            query_fraction: DEFAULT_QUERY_FRACTION,
            k_known: 10,
            attack: AttackConfig::default(),
            repetitions: 50,
            base_seed: 0,
            memory_budget: DEFAULT_MEMORY_BUDGET,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions must be at least 1"));
        }
        if self.v_real == 0 {
            return Err(Error::invalid("v_real must be positive"));
        }
        if self.d == 0
            || (self.d > crate::conjunction::MAX_DEFAULT_ARITY && !self.allow_large_arity)
        {
            return Err(Error::UnsupportedArity(self.d));
        }
        if self.d > self.v_real {
            return Err(Error::ArityExceedsVocabulary {
                v: self.v_real,
                d: self.d,
            });
        }
        if !(self.query_fraction > 0.0 && self.query_fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "query_fraction must lie in (0, 1], got {}",
                self.query_fraction
            )));
        }
        if self.k_known == 0 {
            return Err(Error::NoKnownQueries);
        }
        if self.memory_budget == 0 {
            return Err(Error::invalid("memory_budget must be positive"));
        }
        self.split_spec(0).validate()?;
        self.attack.validate()
    }

    pub fn split_spec(&self, seed: u64) -> SplitSpec {
        match self.mode {
            AttackerMode::Similar => SplitSpec::Similar {
                similar_fraction: self.similar_fraction,
                seed,
            },
            AttackerMode::PKnown => SplitSpec::PKnown { p: self.p, seed },
        }
    }

    /// The split parameter that applies to the configured mode.
    pub fn p_or_similar_fraction(&self) -> f64 {
        match self.mode {
            AttackerMode::Similar => self.similar_fraction,
            AttackerMode::PKnown => self.p,
        }
    }

    pub fn seed(&self, repetition: usize) -> u64 {
        self.base_seed.wrapping_add(repetition as u64)
    }

    /// Digest of every field that influences results; the memory budget is excluded.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.memory_budget = 0;
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(&Sha256::digest(&json)[..8])
    }

    /// Bytes one repetition holds over a corpus of `n_docs` documents: conjunction
    /// postings, C_td, the attack accumulators and one batch of attacker columns.
    pub fn required_bytes(&self, n_docs: usize) -> Result<u64> {
        let m = count(self.v_real, self.d)? as u128;
        let l = (self.query_fraction * m as f64).round() as u128;
        let unknown = l.saturating_sub(self.k_known as u128);
        let batch = (self.k_known as u128).max(self.attack.ref_speed.resolve(l as usize)? as u128);
        let postings = m * (n_docs as u128).div_ceil(64);
        let bytes = 8 * (postings + l * l + unknown * m + batch * m);
        u64::try_from(bytes).map_err(|_| Error::Overflow(format!("{bytes} bytes")))
    }
}

/// Execution settings that do not affect results.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    /// Record wall-clock runtime. Disable for byte-identical result files.
    pub record_timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            workers: 0,
            record_timing: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AccuracyReport {
    pub correct: usize,
    pub unknown: usize,
}

impl AccuracyReport {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.unknown as f64
    }
}

/// Correct predictions among the trapdoors outside the initial known queries,
/// over |Q| − |KnownQ|. Correct means the keyword sets are equal.
pub fn accuracy(
    predictions: &[Prediction],
    truth: &GroundTruth,
    known: &[KnownQueryPair],
    attacker: &ConjunctionSet,
) -> Result<AccuracyReport> {
    if predictions.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions for {} observed trapdoors",
            predictions.len(),
            truth.len()
        )));
    }
    let known: HashSet<_> = known.iter().map(|k| k.trapdoor).collect();
    let mut report = AccuracyReport {
        correct: 0,
        unknown: 0,
    };
    for p in predictions.iter().filter(|p| !known.contains(&p.trapdoor)) {
        report.unknown += 1;
        let real = truth.keywords(&p.trapdoor).ok_or_else(|| {
            Error::UnknownKnownQuery(format!("trapdoor {} without ground truth", p.trapdoor))
        })?;
        if attacker.keyword_set(p.conjunction_rank)? == real {
            report.correct += 1;
        }
    }
    if report.unknown == 0 {
        return Err(Error::NoUnknownQueries);
    }
    Ok(report)
}

fn sorted_keywords(label: &str) -> Vec<&str> {
    let mut kws: Vec<&str> = label.split('∧').collect();
    kws.sort_unstable();
    kws
}

/// Recomputes accuracy from a prediction file with a ground-truth column.
pub fn accuracy_from_records(records: &[PredictionRecord]) -> Result<AccuracyReport> {
    let mut report = AccuracyReport {
        correct: 0,
        unknown: 0,
    };
    for r in records.iter().filter(|r| !r.prediction.known) {
        if r.truth.is_empty() || r.keywords.is_empty() {
            return Err(Error::invalid(
                "prediction file lacks keyword or truth labels",
            ));
        }
        report.unknown += 1;
        if sorted_keywords(&r.keywords) == sorted_keywords(&r.truth) {
            report.correct += 1;
        }
    }
    if report.unknown == 0 {
        return Err(Error::NoUnknownQueries);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub accuracy: f64,
    pub correct: usize,
    /// |Q|, the number of observed trapdoors.
    pub l: usize,
    pub k: usize,
    pub ref_speed: usize,
    pub iterations: usize,
    pub runtime_s: Option<f64>,
    /// Bytes held by the conjunction postings, C_td and the attack accumulators.
    pub peak_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub runs: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
    pub mean_accuracy: Option<f64>,
    pub std_accuracy: Option<f64>,
}

impl ExperimentResult {
    fn new(config: &ExperimentConfig, runs: Vec<RunRecord>, failures: Vec<RunFailure>) -> Self {
        let accs: Vec<f64> = runs.iter().map(|r| r.accuracy).collect();
        let (mean, std) = mean_std(&accs).unzip();
        Self {
            config_hash: config.hash(),
            config: config.clone(),
            runs,
            failures,
            mean_accuracy: mean,
            std_accuracy: std,
        }
    }

    pub fn completed(&self) -> usize {
        self.runs.len()
    }
}

/// Mean and sample standard deviation (n − 1); the deviation of one value is 0.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, var.sqrt()))
}

/// Everything one repetition produces.
pub struct RepetitionOutput {
    pub record: RunRecord,
    pub predictions: Vec<Prediction>,
    /// Prediction file contents with keyword and truth labels.
    pub prediction_file: String,
}

/// Split, index, query, attack and score for one seed.
pub fn run_repetition(
    corpus: &Corpus,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<RepetitionOutput> {
    let (attacker, real) = split(corpus, &config.split_spec(seed))?;
    let vocab_real = Arc::new(build_vocabulary(&real, config.v_real)?);
    let vocab_att = Arc::new(build_vocabulary(&attacker, config.v_real)?);
    let real_set =
        ConjunctionSet::with_arity_override(vocab_real, config.d, config.allow_large_arity)?;
    let att_set =
        ConjunctionSet::with_arity_override(vocab_att, config.d, config.allow_large_arity)?;

    let instance = build_index_for(&real, real_set, SecretKey::from_seed(seed))?;
    let (log, truth) = sample_queries(&instance, config.query_fraction, seed)?;
    let known = sample_known_queries(&log, &att_set, &truth, config.k_known, seed)?;

    // Only the columns of known and promoted conjunctions are ever needed.
    let c_ckw = OnDemandColumns::new(&attacker, &att_set)?;
    let remaining = config.memory_budget.saturating_sub(c_ckw.heap_bytes());
    let c_td = build_trapdoor_cooccurrence(&log, real.n(), remaining)?;
    let run = refined_score_attack(&c_ckw, &log, &c_td, &known, &config.attack)?;
    let report = accuracy(&run.predictions, &truth, &known, &att_set)?;
    let prediction_file = render_predictions(&run.predictions, Some(&att_set), Some(&truth))?;

    Ok(RepetitionOutput {
        record: RunRecord {
            seed,
            accuracy: report.accuracy(),
            correct: report.correct,
            l: log.l(),
            k: known.len(),
            ref_speed: run.ref_speed,
            iterations: run.iterations,
            runtime_s: None,
            peak_bytes: c_ckw.heap_bytes() + c_td.heap_bytes() + run.working_bytes,
        },
        predictions: run.predictions,
        prediction_file,
    })
}

fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

/// Runs every repetition on an already ingested corpus.
pub fn run_experiment_on(
    corpus: &Corpus,
    config: &ExperimentConfig,
    options: &RunOptions,
    store: Option<&ResultStore>,
) -> Result<ExperimentResult> {
    config.validate()?;
    let required = config.required_bytes(corpus.n())?;
    if required > config.memory_budget {
        return Err(Error::BudgetExceeded {
            what: format!("v = {}, d = {}", config.v_real, config.d),
            required,
            budget: config.memory_budget,
        });
    }
    let hash = config.hash();
    if let Some(store) = store {
        store.claim(&hash)?;
    }
    with_workers(options.workers, || {
        let mut runs = Vec::with_capacity(config.repetitions);
        let mut failures = Vec::new();
        for r in 0..config.repetitions {
            let seed = config.seed(r);
            let started = Instant::now();
            let outcome = run_repetition(corpus, config, seed).and_then(|mut out| {
                if options.record_timing {
                    out.record.runtime_s = Some(started.elapsed().as_secs_f64());
                }
                if let Some(store) = store {
                    store.write_predictions(&hash, seed, &out.prediction_file)?;
                }
                Ok(out.record)
            });
            match outcome {
                Ok(record) => {
                    log::info!(
                        "config {hash} seed {seed}: accuracy {:.4} ({}/{})",
                        record.accuracy,
                        record.correct,
                        record.l - record.k
                    );
                    runs.push(record);
                }
                Err(e) => {
                    log::warn!("config {hash} seed {seed} failed: {e}");
                    failures.push(RunFailure {
                        seed,
                        error: e.to_string(),
                    });
                }
            }
        }
        let result = ExperimentResult::new(config, runs, failures);
        if let Some(store) = store {
            store.append(&result)?;
        }
        Ok(result)
    })?
}

pub fn run_experiment(
    config: &ExperimentConfig,
    options: &RunOptions,
    store: Option<&ResultStore>,
) -> Result<ExperimentResult> {
    config.validate()?;
    let corpus = ingest(&config.corpus_path, &config.extraction)?;
    run_experiment_on(&corpus, config, options, store)
}

/// Runs each configuration in turn; a failing configuration does not stop the sweep.
pub fn sweep(
    configs: &[ExperimentConfig],
    options: &RunOptions,
    store: Option<&ResultStore>,
) -> Result<Vec<Result<ExperimentResult>>> {
    if configs.is_empty() {
        return Err(Error::invalid("sweep needs at least one configuration"));
    }
    let mut corpora: HashMap<(PathBuf, String), Arc<Corpus>> = HashMap::new();
    let mut out = Vec::with_capacity(configs.len());
    for config in configs {
        let key = (
            config.corpus_path.clone(),
            serde_json::to_string(&config.extraction)?,
        );
        let corpus = match corpora.get(&key) {
            Some(c) => Ok(c.clone()),
            None => ingest(&config.corpus_path, &config.extraction).map(|c| {
                let c = Arc::new(c);
                corpora.insert(key, c.clone());
                c
            }),
        };
        let result = corpus.and_then(|c| run_experiment_on(&c, config, options, store));
        if let Err(e) = &result {
            log::warn!("configuration {} failed: {e}", config.hash());
        }
        out.push(result);
    }
    Ok(out)
}

/// Axes of a parameter grid; an empty axis keeps the base value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Grid {
    pub d: Vec<usize>,
    pub v_real: Vec<usize>,
    pub k_known: Vec<usize>,
    pub p: Vec<f64>,
    pub similar_fraction: Vec<f64>,
    pub ref_speed: Vec<RefSpeed>,
}

fn axis<T: Clone>(values: &[T], base: T) -> Vec<T> {
    if values.is_empty() {
        vec![base]
    } else {
        values.to_vec()
    }
}

/// Cartesian product of the grid axes in a fixed nesting order.
pub fn expand_grid(base: &ExperimentConfig, grid: &Grid) -> Vec<ExperimentConfig> {
    let mut out = Vec::new();
    for d in axis(&grid.d, base.d) {
        for v in axis(&grid.v_real, base.v_real) {
            for k in axis(&grid.k_known, base.k_known) {
                for p in axis(&grid.p, base.p) {
                    for sf in axis(&grid.similar_fraction, base.similar_fraction) {
                        for rs in axis(&grid.ref_speed, base.attack.ref_speed) {
                            let mut c = base.clone();
                            c.d = d;
                            c.v_real = v;
                            c.k_known = k;
                            c.p = p;
                            c.similar_fraction = sf;
                            c.attack.ref_speed = rs;
                            out.push(c);
                        }
                    }
                }
            }
        }
    }
    out
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub fn inv_logit(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// logit(acc) = b · v + a, fitted by ordinary least squares.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtrapolationFit {
    pub a: f64,
    pub b: f64,
    /// (v, accuracy) points used, sorted by v.
    pub points: Vec<(f64, f64)>,
    /// logit(acc) − (b · v + a) per point.
    pub residuals: Vec<f64>,
}

impl ExtrapolationFit {
    pub fn predict(&self, v: f64) -> f64 {
        inv_logit(self.b * v + self.a)
    }
}

pub fn fit_extrapolation(points: &[(f64, f64)]) -> Result<ExtrapolationFit> {
    if points.len() < 2 {
        return Err(Error::Extrapolation(format!(
            "need at least 2 points, got {}",
            points.len()
        )));
    }
    if let Some(&(v, acc)) = points.iter().find(|(_, acc)| !(*acc > 0.0 && *acc < 1.0)) {
        return Err(Error::Extrapolation(format!(
            "accuracy {acc} at v = {v} has no logit; clamp accuracies into (0, 1) first"
        )));
    }
    // Sorting first makes the floating-point sums independent of input order.
    let mut pts = points.to_vec();
    pts.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    let n = pts.len() as f64;
    let ys: Vec<f64> = pts.iter().map(|&(_, acc)| logit(acc)).collect();
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Extrapolation(
            "all points share one vocabulary size".into(),
        ));
    }
    let sxy: f64 = pts
        .iter()
        .zip(&ys)
        .map(|(p, y)| (p.0 - mean_x) * (y - mean_y))
        .sum();
    let b = sxy / sxx;
    let a = mean_y - b * mean_x;
    let residuals = pts
        .iter()
        .zip(&ys)
        .map(|(p, y)| y - (b * p.0 + a))
        .collect();
    Ok(ExtrapolationFit {
        a,
        b,
        points: pts,
        residuals,
    })
}

/// Clamps into [1/(2·reps), 1 − 1/(2·reps)] so accuracies of 0 or 1 get a finite logit.
pub fn clamp_accuracy(acc: f64, repetitions: usize) -> f64 {
    let lo = 1.0 / (2.0 * repetitions.max(1) as f64);
    acc.clamp(lo, 1.0 - lo)
}

/// One CSV row per completed repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRecord {
    pub config_hash: String,
    pub mode: AttackerMode,
    pub d: usize,
    pub v_real: usize,
    pub p_or_similar_fraction: f64,
    pub query_fraction: f64,
    pub k_known: usize,
    /// As configured (`25` or `5%`); the resolved count is in the JSON aggregate.
    pub ref_speed: String,
    pub seed: u64,
    pub accuracy: f64,
    pub runtime_s: Option<f64>,
    pub peak_bytes: u64,
}

impl CsvRecord {
    fn new(config: &ExperimentConfig, hash: &str, run: &RunRecord) -> Self {
        Self {
            config_hash: hash.to_owned(),
            mode: config.mode,
            d: config.d,
            v_real: config.v_real,
            p_or_similar_fraction: config.p_or_similar_fraction(),
            query_fraction: config.query_fraction,
            k_known: config.k_known,
            ref_speed: config.attack.ref_speed.to_string(),
            seed: run.seed,
            accuracy: run.accuracy,
            runtime_s: run.runtime_s,
            peak_bytes: run.peak_bytes,
        }
    }
}

pub const RUNS_FILE: &str = "runs.csv";

/// Append-only directory of run rows, per-config aggregates and prediction files.
#[derive(Debug)]
pub struct ResultStore {
    dir: PathBuf,
    force: bool,
}

impl ResultStore {
    pub fn open(dir: &Path, force: bool) -> Result<Self> {
        let predictions = dir.join("predictions");
        fs::create_dir_all(&predictions).map_err(|e| Error::io(&predictions, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            force,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn runs_path(&self) -> PathBuf {
        self.dir.join(RUNS_FILE)
    }

    pub fn aggregate_path(&self, hash: &str) -> PathBuf {
        self.dir.join(format!("aggregate-{hash}.json"))
    }

    pub fn prediction_path(&self, hash: &str, seed: u64) -> PathBuf {
        self.dir
            .join("predictions")
            .join(format!("{hash}-seed{seed}.tsv"))
    }

    /// Fails if the config already has results, unless forced, in which case they are dropped.
    fn claim(&self, hash: &str) -> Result<()> {
        let aggregate = self.aggregate_path(hash);
        if !aggregate.exists() {
            return Ok(());
        }
        if !self.force {
            return Err(Error::ResultsExist(aggregate));
        }
        let kept: Vec<CsvRecord> = read_results(&self.runs_path())?
            .into_iter()
            .filter(|r| r.config_hash != hash)
            .collect();
        let path = self.runs_path();
        if kept.is_empty() {
            if path.exists() {
                fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
            }
        } else {
            let mut w = csv::Writer::from_path(&path)?;
            for r in &kept {
                w.serialize(r)?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
        }
        let dir = self.dir.join("predictions");
        let prefix = format!("{hash}-");
        for entry in fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
            let entry = entry.map_err(|e| Error::io(&dir, e))?;
            if entry.file_name().to_string_lossy().starts_with(&prefix) {
                fs::remove_file(entry.path()).map_err(|e| Error::io(entry.path(), e))?;
            }
        }
        fs::remove_file(&aggregate).map_err(|e| Error::io(&aggregate, e))
    }

    fn write_predictions(&self, hash: &str, seed: u64, contents: &str) -> Result<()> {
        let path = self.prediction_path(hash, seed);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))
    }

    /// Appends the run rows and writes the config's aggregate.
    fn append(&self, result: &ExperimentResult) -> Result<()> {
        let path = self.runs_path();
        let fresh = !path.exists();
        let file = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        let mut w = csv::WriterBuilder::new()
            .has_headers(fresh)
            .from_writer(file);
        for run in &result.runs {
            w.serialize(CsvRecord::new(&result.config, &result.config_hash, run))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        let aggregate = self.aggregate_path(&result.config_hash);
        let mut f = fs::File::create(&aggregate).map_err(|e| Error::io(&aggregate, e))?;
        serde_json::to_writer_pretty(&mut f, result)?;
        f.write_all(b"\n").map_err(|e| Error::io(&aggregate, e))
    }

    pub fn read_predictions(&self, hash: &str, seed: u64) -> Result<Vec<PredictionRecord>> {
        read_predictions(&self.prediction_path(hash, seed))
    }
}

pub fn read_results(path: &Path) -> Result<Vec<CsvRecord>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotAxis {
    VReal,
    KKnown,
    P,
}

impl std::str::FromStr for PlotAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "v" | "v_real" => Ok(PlotAxis::VReal),
            "k" | "k_known" => Ok(PlotAxis::KKnown),
            "p" | "similar_fraction" | "p_or_similar_fraction" => Ok(PlotAxis::P),
            other => Err(Error::invalid(format!(
                "unknown plot axis {other:?} (expected v_real, k_known or p)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub x: f64,
    pub mean: f64,
    pub stddev: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    /// The parameters shared by every point, `name=value` separated by spaces.
    pub label: String,
    pub points: Vec<SeriesPoint>,
}

/// Groups run rows into (x, mean, stddev) series along one axis.
pub fn plot_series(records: &[CsvRecord], x_axis: PlotAxis) -> Vec<Series> {
    // label -> x (as ordered bits) -> accuracies
    let mut groups: BTreeMap<String, BTreeMap<u64, (f64, Vec<f64>)>> = BTreeMap::new();
    for r in records {
        let x = match x_axis {
            PlotAxis::VReal => r.v_real as f64,
            PlotAxis::KKnown => r.k_known as f64,
            PlotAxis::P => r.p_or_similar_fraction,
        };
        let mut label = format!("mode={} d={}", r.mode, r.d);
        if x_axis != PlotAxis::VReal {
            label.push_str(&format!(" v_real={}", r.v_real));
        }
        if x_axis != PlotAxis::KKnown {
            label.push_str(&format!(" k_known={}", r.k_known));
        }
        if x_axis != PlotAxis::P {
            let name = match r.mode {
                AttackerMode::Similar => "similar_fraction",
                AttackerMode::PKnown => "p",
            };
            label.push_str(&format!(" {name}={}", r.p_or_similar_fraction));
        }
        label.push_str(&format!(
            " query_fraction={} ref_speed={}",
            r.query_fraction, r.ref_speed
        ));
        // x ≥ 0, so the IEEE bit pattern orders like the value.
        groups
            .entry(label)
            .or_default()
            .entry(x.to_bits())
            .or_insert_with(|| (x, Vec::new()))
            .1
            .push(r.accuracy);
    }
    groups
        .into_iter()
        .map(|(label, pts)| Series {
            label,
            points: pts
                .into_values()
                .map(|(x, accs)| {
                    let (mean, stddev) = mean_std(&accs).expect("non-empty group");
                    SeriesPoint {
                        x,
                        mean,
                        stddev,
                        runs: accs.len(),
                    }
                })
                .collect(),
        })
        .collect()
}
