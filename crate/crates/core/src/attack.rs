//! Score attack and the refined score attack over keyword conjunctions.
//!
//! Distances between a trapdoor's sub-row and every candidate conjunction's
//! sub-row are accumulated one known column at a time. Refinement only appends
//! columns, so each promoted known query costs one pass over the remaining
//! unknown rows instead of a full recomputation. The per-entry summation order
//! is the known-query order, the same as evaluating the norm directly.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conjunction::ConjunctionSet;
use crate::cooccurrence::{known_positions, ColumnSource, CooccurrenceMatrix, Side, SubMatrix};
use crate::error::{Error, Result};
use crate::scheme::{GroundTruth, KnownQueryPair, ObservationLog, Trapdoor};

pub const DEFAULT_EPSILON_FLOOR: f64 = 1e-20;
pub const DEFAULT_REF_SPEED_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    #[default]
    L2,
    L1,
}

/// Number of predictions promoted to known queries per iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefSpeed {
    Fixed(usize),
    /// ⌈fraction · l⌉, at least 1.
    Relative(f64),
}

impl Default for RefSpeed {
    fn default() -> Self {
        RefSpeed::Relative(DEFAULT_REF_SPEED_FRACTION)
    }
}

impl RefSpeed {
    pub fn resolve(&self, l: usize) -> Result<usize> {
        match *self {
            RefSpeed::Fixed(0) => Err(Error::invalid("RefSpeed must be at least 1")),
            RefSpeed::Fixed(n) => Ok(n),
            RefSpeed::Relative(f) if !(f > 0.0 && f.is_finite()) => Err(Error::invalid(format!(
                "relative RefSpeed must be positive, got {f}"
            ))),
            RefSpeed::Relative(f) => Ok(((f * l as f64).ceil() as usize).max(1)),
        }
    }
}

impl std::fmt::Display for RefSpeed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RefSpeed::Fixed(n) => write!(f, "{n}"),
            RefSpeed::Relative(x) => write!(f, "{}%", x * 100.0),
        }
    }
}

impl std::str::FromStr for RefSpeed {
    type Err = Error;

    /// `25` for a fixed count, `5%` for ⌈0.05 · l⌉, `auto` for the default.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "auto" {
            return Ok(RefSpeed::default());
        }
        if let Some(pct) = s.strip_suffix('%') {
            let pct: f64 = pct
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad RefSpeed percentage {s:?}")))?;
            let r = RefSpeed::Relative(pct / 100.0);
            r.resolve(1)?;
            return Ok(r);
        }
        let n: usize = s
            .parse()
            .map_err(|_| Error::invalid(format!("bad RefSpeed {s:?}")))?;
        let r = RefSpeed::Fixed(n);
        r.resolve(1)?;
        Ok(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub ref_speed: RefSpeed,
    pub norm: Norm,
    /// Distances are clamped to this before taking the logarithm.
    pub epsilon_floor: f64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            ref_speed: RefSpeed::default(),
            norm: Norm::L2,
            epsilon_floor: DEFAULT_EPSILON_FLOOR,
        }
    }
}

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epsilon_floor.is_nan() || self.epsilon_floor <= 0.0 {
            return Err(Error::invalid("epsilon_floor must be positive"));
        }
        self.ref_speed.resolve(1).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub trapdoor: Trapdoor,
    /// Rank in the attacker's conjunction set.
    pub conjunction_rank: usize,
    pub score: f64,
    pub certainty: f64,
    /// Part of the initial known queries rather than predicted.
    pub known: bool,
    /// Pass that produced the prediction; 0 for initial known queries.
    pub iteration: usize,
}

fn accumulate(norm: Norm, acc: &mut [f64], column: &[f64], target: f64) {
    match norm {
        Norm::L2 => {
            for (a, &c) in acc.iter_mut().zip(column) {
                let diff = c - target;
                *a += diff * diff;
            }
        }
        Norm::L1 => {
            for (a, &c) in acc.iter_mut().zip(column) {
                *a += (c - target).abs();
            }
        }
    }
}

fn finish_norm(norm: Norm, acc: f64) -> f64 {
    match norm {
        Norm::L2 => acc.sqrt(),
        Norm::L1 => acc,
    }
}

fn score_of_distance(distance: f64, epsilon_floor: f64) -> f64 {
    -(distance.max(epsilon_floor)).ln()
}

/// −ln(max(‖ckw_row − td_row‖, epsilon_floor)).
pub fn score(ckw_row: &[f64], td_row: &[f64], config: &AttackConfig) -> Result<f64> {
    if ckw_row.len() != td_row.len() {
        return Err(Error::DimensionMismatch(format!(
            "score rows of length {} and {}",
            ckw_row.len(),
            td_row.len()
        )));
    }
    if ckw_row.is_empty() {
        return Err(Error::NoKnownQueries);
    }
    let mut acc = 0.0;
    for (&c, &t) in ckw_row.iter().zip(td_row) {
        accumulate(config.norm, std::slice::from_mut(&mut acc), &[c], t);
    }
    Ok(score_of_distance(
        finish_norm(config.norm, acc),
        config.epsilon_floor,
    ))
}

/// Gap between the best and second-best score of a descending list; +∞ with a single candidate.
pub fn certainty(sorted_scores: &[f64]) -> f64 {
    match sorted_scores {
        [best, second, ..] => best - second,
        _ => f64::INFINITY,
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    rank: usize,
    score: f64,
    certainty: f64,
}

/// Unknown trapdoor with its accumulated distances to every candidate.
struct PendingRow {
    position: usize,
    acc: Vec<f64>,
}

impl PendingRow {
    /// Highest score; the lowest rank wins ties.
    fn best(&self, config: &AttackConfig) -> Candidate {
        let mut best = (usize::MAX, f64::INFINITY);
        let mut second = f64::INFINITY;
        for (rank, &a) in self.acc.iter().enumerate() {
            let d = finish_norm(config.norm, a).max(config.epsilon_floor);
            if d < best.1 {
                second = best.1;
                best = (rank, d);
            } else if d < second {
                second = d;
            }
        }
        let best_score = score_of_distance(best.1, config.epsilon_floor);
        let certainty = if self.acc.len() < 2 {
            f64::INFINITY
        } else {
            best_score - score_of_distance(second, config.epsilon_floor)
        };
        Candidate {
            rank: best.0,
            score: best_score,
            certainty,
        }
    }
}

/// Summary of one refined attack run.
#[derive(Debug, Clone)]
pub struct AttackRun {
    /// One entry per observed trapdoor, in observation order.
    pub predictions: Vec<Prediction>,
    pub iterations: usize,
    pub ref_speed: usize,
    /// Bytes held by the distance accumulators at their largest.
    pub working_bytes: u64,
}

fn known_prediction(pair: &KnownQueryPair) -> Prediction {
    Prediction {
        trapdoor: pair.trapdoor,
        conjunction_rank: pair.conjunction,
        score: f64::INFINITY,
        certainty: f64::INFINITY,
        known: true,
        iteration: 0,
    }
}

fn check_known(known: &[KnownQueryPair], log: &ObservationLog, m: usize) -> Result<Vec<usize>> {
    if known.is_empty() {
        return Err(Error::NoKnownQueries);
    }
    known_positions(known, Side::Conjunction, m)?;
    known_positions(known, Side::Trapdoor(log), log.l())
}

/// Single pass: every trapdoor outside the known columns gets its best candidate.
///
/// The known trapdoors are the parent positions recorded in `cs_td`'s column order.
pub fn score_attack(
    cs_ckw: &SubMatrix,
    log: &ObservationLog,
    cs_td: &SubMatrix,
    config: &AttackConfig,
) -> Result<Vec<Prediction>> {
    config.validate()?;
    let k = cs_ckw.cols();
    if k == 0 {
        return Err(Error::NoKnownQueries);
    }
    if cs_td.cols() != k || cs_td.rows() != log.l() {
        return Err(Error::DimensionMismatch(format!(
            "sub-matrices {}×{} and {}×{} for {} observations",
            cs_ckw.rows(),
            k,
            cs_td.rows(),
            cs_td.cols(),
            log.l()
        )));
    }
    let m = cs_ckw.rows();
    let mut is_known = vec![false; log.l()];
    for &p in cs_td.column_order() {
        is_known[p] = true;
    }
    let columns: Vec<Vec<f64>> = (0..k)
        .map(|j| (0..m).map(|i| cs_ckw.get(i, j)).collect())
        .collect();
    let predictions = (0..log.l())
        .into_par_iter()
        .filter(|&t| !is_known[t])
        .map(|t| {
            let mut row = PendingRow {
                position: t,
                acc: vec![0.0; m],
            };
            for (j, column) in columns.iter().enumerate() {
                accumulate(config.norm, &mut row.acc, column, cs_td.get(t, j));
            }
            let best = row.best(config);
            Prediction {
                trapdoor: log.observations()[row.position].trapdoor,
                conjunction_rank: best.rank,
                score: best.score,
                certainty: best.certainty,
                known: false,
                iteration: 1,
            }
        })
        .collect();
    Ok(predictions)
}

/// Iterative refinement: promote the RefSpeed most certain predictions to known
/// queries until fewer than RefSpeed unknown trapdoors remain.
///
/// `c_ckw` may be the materialized matrix or an on-demand column source.
pub fn refined_score_attack<C: ColumnSource + ?Sized>(
    c_ckw: &C,
    log: &ObservationLog,
    c_td: &CooccurrenceMatrix,
    known: &[KnownQueryPair],
    config: &AttackConfig,
) -> Result<AttackRun> {
    config.validate()?;
    let m = c_ckw.dim();
    let l = log.l();
    if c_td.dim() != l {
        return Err(Error::DimensionMismatch(format!(
            "trapdoor matrix of dimension {} for {l} observations",
            c_td.dim()
        )));
    }
    let known_td = check_known(known, log, m)?;
    let ref_speed = config.ref_speed.resolve(l)?;

    let mut slot: Vec<Option<Prediction>> = vec![None; l];
    // (conjunction rank, trapdoor position) in KnownQ order.
    let mut columns: Vec<(usize, usize)> = Vec::with_capacity(l);
    for (pair, &pos) in known.iter().zip(&known_td) {
        slot[pos] = Some(known_prediction(pair));
        columns.push((pair.conjunction, pos));
    }

    let mut pending: Vec<PendingRow> = (0..l)
        .filter(|&t| slot[t].is_none())
        .map(|position| PendingRow {
            position,
            acc: vec![0.0; m],
        })
        .collect();
    let working_bytes = (pending.len() * m * std::mem::size_of::<f64>()) as u64;
    let mut added = 0;
    let mut iterations = 0;

    loop {
        let new_columns: Vec<_> = columns[added..]
            .iter()
            .map(|&(rank, pos)| (c_ckw.column(rank), pos))
            .collect();
        pending.par_iter_mut().for_each(|row| {
            for (column, pos) in &new_columns {
                accumulate(
                    config.norm,
                    &mut row.acc,
                    column,
                    c_td.get(row.position, *pos),
                );
            }
        });
        added = columns.len();

        if pending.is_empty() {
            break;
        }
        iterations += 1;
        assert!(
            iterations <= l,
            "refinement failed to shrink the unknown set"
        );

        let temp: Vec<Candidate> = pending.par_iter().map(|row| row.best(config)).collect();
        let as_prediction = |row: &PendingRow, c: &Candidate| Prediction {
            trapdoor: log.observations()[row.position].trapdoor,
            conjunction_rank: c.rank,
            score: c.score,
            certainty: c.certainty,
            known: false,
            iteration: iterations,
        };

        if pending.len() < ref_speed {
            for (row, c) in pending.iter().zip(&temp) {
                slot[row.position] = Some(as_prediction(row, c));
            }
            break;
        }

        // Most certain first; ties keep observation order (pending is in that order).
        let mut order: Vec<usize> = (0..pending.len()).collect();
        order.sort_by(|&a, &b| temp[b].certainty.total_cmp(&temp[a].certainty));
        let mut promoted = vec![false; pending.len()];
        for &i in &order[..ref_speed] {
            let row = &pending[i];
            slot[row.position] = Some(as_prediction(row, &temp[i]));
            columns.push((temp[i].rank, row.position));
            promoted[i] = true;
        }
        let mut idx = 0;
        pending.retain(|_| {
            let keep = !promoted[idx];
            idx += 1;
            keep
        });
    }

    let predictions = slot
        .into_iter()
        .map(|p| p.expect("every trapdoor receives a prediction"))
        .collect();
    Ok(AttackRun {
        predictions,
        iterations,
        ref_speed,
        working_bytes,
    })
}

const PREDICTION_HEADER: &str = "token\trank\tkeywords\tscore\tcertainty\tstatus\titeration\ttruth";

/// One line of a prediction file.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub prediction: Prediction,
    /// Predicted keywords joined by `∧`; empty when unresolved.
    pub keywords: String,
    /// True keywords joined by `∧`; empty when not recorded.
    pub truth: String,
}

/// Tab-separated prediction records. Keywords are resolved when a conjunction
/// set is given and the true conjunction is appended when ground truth is given.
pub fn render_predictions(
    predictions: &[Prediction],
    conjunctions: Option<&ConjunctionSet>,
    truth: Option<&GroundTruth>,
) -> Result<String> {
    let mut out = String::with_capacity(predictions.len() * 120);
    out.push_str(PREDICTION_HEADER);
    out.push('\n');
    for p in predictions {
        let label = match conjunctions {
            Some(set) => set.label(p.conjunction_rank)?,
            None => String::new(),
        };
        let real = truth
            .and_then(|t| t.keywords(&p.trapdoor))
            .map(|k| k.join("∧"))
            .unwrap_or_default();
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            p.trapdoor.to_hex(),
            p.conjunction_rank,
            label,
            p.score,
            p.certainty,
            if p.known { "known" } else { "predicted" },
            p.iteration,
            real
        ));
    }
    Ok(out)
}

pub fn write_predictions(
    path: &Path,
    predictions: &[Prediction],
    conjunctions: Option<&ConjunctionSet>,
    truth: Option<&GroundTruth>,
) -> Result<()> {
    let text = render_predictions(predictions, conjunctions, truth)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    if lines.next().map(|(_, h)| h) != Some(PREDICTION_HEADER) {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: "missing prediction header".into(),
        });
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let bad = |message: String| Error::Format {
            path: path.to_path_buf(),
            message: format!("line {}: {message}", i + 1),
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 8 {
            return Err(bad(format!("expected 8 fields, found {}", fields.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| bad(e.to_string()));
        let prediction = Prediction {
            trapdoor: Trapdoor::from_hex(fields[0]).map_err(|e| bad(e.to_string()))?,
            conjunction_rank: fields[1].parse().map_err(|e| bad(format!("{e}")))?,
            score: num(fields[3])?,
            certainty: num(fields[4])?,
            known: match fields[5] {
                "known" => true,
                "predicted" => false,
                other => return Err(bad(format!("unknown status {other:?}"))),
            },
            iteration: fields[6].parse().map_err(|e| bad(format!("{e}")))?,
        };
        out.push(PredictionRecord {
            prediction,
            keywords: fields[2].to_owned(),
            truth: fields[7].to_owned(),
        });
    }
    Ok(out)
}
