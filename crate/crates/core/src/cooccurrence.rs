//! Co-occurrence matrices (ID^T · ID / n) for conjunctions and trapdoors.
//!
//! Counts are exact integers; each entry is divided by n exactly once, so a
//! tiled build is bit-identical to an untiled one.

use std::borrow::Cow;
use std::collections::BTreeSet;
use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::bitset::DocBits;
use crate::conjunction::{conjunction_postings, count, ConjunctionSet};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::scheme::{KnownQueryPair, ObservationLog};

pub const MATRIX_MAGIC: &[u8; 8] = b"CKWSCOOC";
const HEADER_LEN: usize = 32;
const F64_BYTES: u64 = 8;
const COUNT_BYTES: u64 = 4;

/// Binary occupancy matrix stored column-wise: column j holds the rows (documents) of item j.
#[derive(Debug, Clone)]
pub struct IdMatrix {
    rows: usize,
    columns: Vec<DocBits>,
}

impl IdMatrix {
    /// n × m document/conjunction matrix of a corpus.
    pub fn from_corpus(corpus: &Corpus, set: &ConjunctionSet) -> Self {
        Self {
            rows: corpus.n(),
            columns: conjunction_postings(corpus, set),
        }
    }

    /// s × l matrix over the union of identifiers in all observed result sets.
    pub fn from_observations(log: &ObservationLog) -> Self {
        let ids: BTreeSet<u32> = log
            .observations()
            .iter()
            .flat_map(|o| o.result_ids.iter().copied())
            .collect();
        let row_of: std::collections::HashMap<u32, usize> =
            ids.iter().enumerate().map(|(r, &id)| (id, r)).collect();
        let rows = ids.len();
        let columns = log
            .observations()
            .iter()
            .map(|o| {
                let mut bits = DocBits::zeros(rows);
                for id in &o.result_ids {
                    bits.set(row_of[id]);
                }
                bits
            })
            .collect();
        Self { rows, columns }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.columns[col].get(row)
    }

    /// Rows set in column `col`.
    pub fn column_support(&self, col: usize) -> impl Iterator<Item = usize> + '_ {
        self.columns[col].iter_ones()
    }

    pub fn heap_bytes(&self) -> u64 {
        self.columns.iter().map(DocBits::heap_bytes).sum()
    }

    /// ID^T · ID / scale_n, tiled over row blocks so accounted memory stays within `budget`.
    pub fn cooccurrence(&self, scale_n: usize, budget: u64) -> Result<CooccurrenceMatrix> {
        if scale_n == 0 {
            return Err(Error::invalid("co-occurrence scale n must be positive"));
        }
        let dim = self.cols();
        let plan = TilePlan::new(dim, self.heap_bytes(), budget, rayon::current_num_threads())?;
        let mut values = vec![0.0f64; dim * dim];
        let scale = scale_n as f64;
        let tile_len = plan.rows_per_tile * dim;
        if dim > 0 {
            let wave_len = tile_len * plan.concurrent_tiles;
            for (wave, wave_out) in values.chunks_mut(wave_len).enumerate() {
                wave_out
                    .par_chunks_mut(tile_len)
                    .enumerate()
                    .for_each(|(offset, out)| {
                        let tile = wave * plan.concurrent_tiles + offset;
                        let first = tile * plan.rows_per_tile;
                        let rows_here = out.len() / dim;
                        let mut counts = vec![0u32; rows_here * dim];
                        for local in 0..rows_here {
                            let i = first + local;
                            let col_i = &self.columns[i];
                            if col_i.is_empty() {
                                continue;
                            }
                            let row = &mut counts[local * dim..(local + 1) * dim];
                            for (cell, col_j) in row[i..].iter_mut().zip(&self.columns[i..]) {
                                *cell = col_i.intersection_count(col_j);
                            }
                        }
                        for (o, &c) in out.iter_mut().zip(&counts) {
                            *o = c as f64 / scale;
                        }
                    });
            }
            // Mirror the upper triangle.
            for i in 0..dim {
                for j in 0..i {
                    values[i * dim + j] = values[j * dim + i];
                }
            }
        }
        Ok(CooccurrenceMatrix {
            dim,
            values,
            scale_n,
        })
    }
}

/// Columns of a symmetric co-occurrence matrix, by item index.
pub trait ColumnSource: Sync {
    fn dim(&self) -> usize;
    fn column(&self, j: usize) -> Cow<'_, [f64]>;
}

impl ColumnSource for CooccurrenceMatrix {
    fn dim(&self) -> usize {
        self.dim
    }

    /// Row j, equal to column j by symmetry.
    fn column(&self, j: usize) -> Cow<'_, [f64]> {
        Cow::Borrowed(self.row(j))
    }
}

/// C_ckw columns computed from conjunction postings when asked for, so the
/// m × m matrix never exists. Entries equal those of the materialized matrix.
#[derive(Debug, Clone)]
pub struct OnDemandColumns {
    ids: IdMatrix,
    scale_n: usize,
}

impl OnDemandColumns {
    pub fn new(attacker_corpus: &Corpus, set: &ConjunctionSet) -> Result<Self> {
        if attacker_corpus.n() == 0 {
            return Err(Error::invalid("co-occurrence scale n must be positive"));
        }
        Ok(Self {
            ids: IdMatrix::from_corpus(attacker_corpus, set),
            scale_n: attacker_corpus.n(),
        })
    }

    pub fn heap_bytes(&self) -> u64 {
        self.ids.heap_bytes()
    }
}

impl ColumnSource for OnDemandColumns {
    fn dim(&self) -> usize {
        self.ids.cols()
    }

    fn column(&self, j: usize) -> Cow<'_, [f64]> {
        let scale = self.scale_n as f64;
        let target = &self.ids.columns[j];
        Cow::Owned(
            self.ids
                .columns
                .par_iter()
                .map(|c| c.intersection_count(target) as f64 / scale)
                .collect(),
        )
    }
}

/// Row-block tiling under a byte budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TilePlan {
    pub rows_per_tile: usize,
    pub tiles: usize,
    /// Tiles whose scratch buffers may be alive at the same time.
    pub concurrent_tiles: usize,
    /// Output + input occupancy + scratch of all concurrently live tiles.
    pub peak_bytes: u64,
}

impl TilePlan {
    pub fn new(dim: usize, input_bytes: u64, budget: u64, workers: usize) -> Result<Self> {
        let output = matrix_bytes(dim)?;
        let fixed = output + input_bytes;
        if output > budget {
            return Err(Error::BudgetExceeded {
                what: format!("a {dim}×{dim} co-occurrence matrix"),
                required: output,
                budget,
            });
        }
        let row_scratch = (dim as u64).max(1) * COUNT_BYTES;
        let minimum = fixed + row_scratch;
        if budget < minimum {
            return Err(Error::BudgetTooSmall { budget, minimum });
        }
        let dim1 = dim.max(1);
        let scratch_rows = ((budget - fixed) / row_scratch).min(dim1 as u64) as usize;
        let concurrent = workers.max(1).min(scratch_rows);
        let rows_per_tile = (scratch_rows / concurrent)
            .min(dim1.div_ceil(workers.max(1)))
            .max(1);
        let tiles = dim1.div_ceil(rows_per_tile);
        let concurrent_tiles = concurrent.min(tiles);
        Ok(Self {
            rows_per_tile,
            tiles,
            concurrent_tiles,
            peak_bytes: fixed + (concurrent_tiles * rows_per_tile) as u64 * row_scratch,
        })
    }
}

fn matrix_bytes(dim: usize) -> Result<u64> {
    (dim as u64)
        .checked_mul(dim as u64)
        .and_then(|x| x.checked_mul(F64_BYTES))
        .ok_or_else(|| Error::Overflow(format!("{dim}×{dim} matrix size")))
}

/// Dense symmetric co-occurrence matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceMatrix {
    dim: usize,
    values: Vec<f64>,
    scale_n: usize,
}

impl CooccurrenceMatrix {
    pub fn from_values(dim: usize, values: Vec<f64>, scale_n: usize) -> Result<Self> {
        if values.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {dim}×{dim} matrix",
                values.len()
            )));
        }
        Ok(Self {
            dim,
            values,
            scale_n,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scale_n(&self) -> usize {
        self.scale_n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.dim + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// Column `j`; equal to row `j` for every matrix this module builds.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, j)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn heap_bytes(&self) -> u64 {
        self.values.len() as u64 * F64_BYTES
    }

    /// Header: magic, dim (u64), scale_n (u64), float width (u32), reserved (u32); then row-major f64 LE.
    pub fn write(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut header = Vec::with_capacity(HEADER_LEN);
        header.extend_from_slice(MATRIX_MAGIC);
        header.extend_from_slice(&(self.dim as u64).to_le_bytes());
        header.extend_from_slice(&(self.scale_n as u64).to_le_bytes());
        header.extend_from_slice(&(F64_BYTES as u32).to_le_bytes());
        header.extend_from_slice(&0u32.to_le_bytes());
        w.write_all(&header).map_err(|e| Error::io(path, e))?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())
                .map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bad = |message: String| Error::Format {
            path: path.to_path_buf(),
            message,
        };
        let mut file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut header = [0u8; HEADER_LEN];
        file.read_exact(&mut header)
            .map_err(|e| Error::io(path, e))?;
        if &header[..8] != MATRIX_MAGIC {
            return Err(bad("not a co-occurrence matrix file".into()));
        }
        let u64_at = |o: usize| u64::from_le_bytes(header[o..o + 8].try_into().unwrap());
        let dim = usize::try_from(u64_at(8)).map_err(|_| bad("dimension too large".into()))?;
        let scale_n = u64_at(16) as usize;
        let width = u32::from_le_bytes(header[24..28].try_into().unwrap()) as usize;
        let mut body = Vec::new();
        file.read_to_end(&mut body)
            .map_err(|e| Error::io(path, e))?;
        let expected = dim
            .checked_mul(dim)
            .and_then(|x| x.checked_mul(width))
            .ok_or_else(|| bad("dimension too large".into()))?;
        if body.len() != expected {
            return Err(bad(format!(
                "expected {expected} body bytes, found {}",
                body.len()
            )));
        }
        let values = match width {
            8 => body
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
            4 => body
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
                .collect(),
            other => return Err(bad(format!("unsupported float width {other}"))),
        };
        Ok(Self {
            dim,
            values,
            scale_n,
        })
    }
}

/// C_ckw of the attacker's documents, scaled by their count.
pub fn build_conjunction_cooccurrence(
    attacker_corpus: &Corpus,
    set: &ConjunctionSet,
    budget: u64,
) -> Result<CooccurrenceMatrix> {
    // Check the output against the budget before building the occupancy matrix.
    let output = matrix_bytes(set.m())?;
    if output > budget {
        return Err(Error::BudgetExceeded {
            what: format!("a {m}×{m} conjunction co-occurrence matrix", m = set.m()),
            required: output,
            budget,
        });
    }
    IdMatrix::from_corpus(attacker_corpus, set).cooccurrence(attacker_corpus.n(), budget)
}

/// C_td of the observed result sets, scaled by n_real.
pub fn build_trapdoor_cooccurrence(
    log: &ObservationLog,
    n_real: usize,
    budget: u64,
) -> Result<CooccurrenceMatrix> {
    if log.is_empty() {
        return Err(Error::invalid("observation log is empty"));
    }
    IdMatrix::from_observations(log).cooccurrence(n_real, budget)
}

#[derive(Debug, Clone, Copy)]
pub enum Side<'a> {
    /// Columns addressed by attacker-side conjunction rank.
    Conjunction,
    /// Columns addressed by the trapdoor's position in the log.
    Trapdoor(&'a ObservationLog),
}

/// Parent restricted to the known-query columns, in known-query order.
#[derive(Debug, Clone, PartialEq)]
pub struct SubMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    column_order: Vec<usize>,
}

impl SubMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    /// Parent column index of each sub-matrix column.
    pub fn column_order(&self) -> &[usize] {
        &self.column_order
    }
}

pub fn known_positions(known: &[KnownQueryPair], side: Side<'_>, dim: usize) -> Result<Vec<usize>> {
    let mut seen = BTreeSet::new();
    let mut order = Vec::with_capacity(known.len());
    for pair in known {
        let pos = match side {
            Side::Conjunction => pair.conjunction,
            Side::Trapdoor(log) => log
                .position(&pair.trapdoor)
                .ok_or_else(|| Error::UnknownKnownQuery(format!("trapdoor {}", pair.trapdoor)))?,
        };
        if pos >= dim {
            return Err(Error::UnknownKnownQuery(format!(
                "position {pos} of a {dim}-item matrix"
            )));
        }
        if !seen.insert(pos) {
            let what = match side {
                Side::Conjunction => format!("conjunction rank {pos}"),
                Side::Trapdoor(_) => format!("trapdoor {}", pair.trapdoor),
            };
            return Err(Error::DuplicateKnownQuery(what));
        }
        order.push(pos);
    }
    Ok(order)
}

pub fn project(
    parent: &CooccurrenceMatrix,
    known: &[KnownQueryPair],
    side: Side<'_>,
) -> Result<SubMatrix> {
    let order = known_positions(known, side, parent.dim())?;
    let rows = parent.dim();
    let cols = order.len();
    let mut values = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        let row = parent.row(i);
        values.extend(order.iter().map(|&j| row[j]));
    }
    Ok(SubMatrix {
        rows,
        cols,
        values,
        column_order: order,
    })
}

/// Bytes of C_ckw plus C_td when |Q| = query_fraction · C(v, d):
/// 2 · (q + q²) · C(v, d)² · float_width.
pub fn estimate_bytes(v: usize, d: usize, query_fraction: f64, float_width: u32) -> Result<u64> {
    if !(0.0..=1.0).contains(&query_fraction) {
        return Err(Error::invalid(format!(
            "query fraction must lie in [0, 1], got {query_fraction}"
        )));
    }
    let m = count(v, d)? as f64;
    let q = query_fraction;
    let bytes = 2.0 * (q + q * q) * m * m * float_width as f64;
    if !bytes.is_finite() || bytes >= u64::MAX as f64 {
        return Err(Error::Overflow(format!(
            "byte estimate for v = {v}, d = {d}"
        )));
    }
    Ok(bytes.round() as u64)
}

/// Abstract operation counts (f, g): f = C(v,d)·(d−1), g = (l / RefSpeed) · l · C(v,d) · k.
pub fn estimate_time_complexity(
    v: usize,
    d: usize,
    l: usize,
    k: usize,
    ref_speed: usize,
) -> Result<(u128, u128)> {
    if ref_speed == 0 {
        return Err(Error::invalid("RefSpeed must be at least 1"));
    }
    let m = count(v, d)? as u128;
    let f = m * (d as u128 - 1);
    let g = (l as u128)
        .checked_mul(l as u128)
        .and_then(|x| x.checked_mul(m))
        .and_then(|x| x.checked_mul(k as u128))
        .map(|x| x / ref_speed as u128)
        .ok_or_else(|| Error::Overflow("attack operation count".into()))?;
    Ok((f, g))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::corpus::Vocabulary;
    use crate::scheme::{Observation, SecretKey};

    fn vocab(words: &[&str]) -> Arc<Vocabulary> {
        Arc::new(Vocabulary::from_ordered(words.iter().map(|w| w.to_string()).collect()).unwrap())
    }

    #[test]
    fn three_document_single_keyword() {
        let corpus = Corpus::from_keyword_sets([vec!["a", "b"], vec!["a", "b"], vec!["a"]]);
        let set = ConjunctionSet::new(vocab(&["a", "b"]), 1).unwrap();
        let c = build_conjunction_cooccurrence(&corpus, &set, 1 << 20).unwrap();
        assert_eq!(c.values(), &[1.0, 2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0]);
        assert_eq!(c.scale_n(), 3);
    }

    #[test]
    fn absent_conjunction_row_is_zero() {
        let corpus = Corpus::from_keyword_sets([vec!["a", "b"], vec!["c"]]);
        let set = ConjunctionSet::new(vocab(&["a", "b", "c"]), 2).unwrap();
        let c = build_conjunction_cooccurrence(&corpus, &set, 1 << 20).unwrap();
        // ranks: (a,b)=0, (a,c)=1, (b,c)=2
        assert_eq!(c.get(0, 0), 0.5);
        assert!(c.row(1).iter().all(|&x| x == 0.0));
        assert!(c.column(2).iter().all(|&x| x == 0.0));
    }

    fn obs(seed: u64, ids: &[u32]) -> Observation {
        Observation {
            trapdoor: SecretKey::from_seed(seed).trapdoor(&["x"]),
            result_ids: ids.to_vec(),
        }
    }

    #[test]
    fn trapdoor_matrix_entries() {
        let log =
            ObservationLog::new(vec![obs(1, &[0, 1]), obs(2, &[5]), obs(3, &[0, 1])]).unwrap();
        let c = build_trapdoor_cooccurrence(&log, 10, 1 << 20).unwrap();
        assert_eq!(c.get(0, 1), 0.0);
        assert_eq!(c.get(0, 2), 0.2);
        assert_eq!(c.get(0, 0), 0.2);
        assert_eq!(c.get(1, 1), 0.1);
        assert!(build_trapdoor_cooccurrence(&ObservationLog::default(), 10, 1 << 20).is_err());
    }

    #[test]
    fn budget_errors() {
        let corpus = Corpus::from_keyword_sets([vec!["a", "b", "c"]]);
        let set = ConjunctionSet::new(vocab(&["a", "b", "c"]), 1).unwrap();
        let err = build_conjunction_cooccurrence(&corpus, &set, 40).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { required: 72, .. }));
        let id = IdMatrix::from_corpus(&corpus, &set);
        let err = id.cooccurrence(1, 72).unwrap_err();
        match err {
            Error::BudgetTooSmall { minimum, .. } => {
                assert_eq!(minimum, 72 + id.heap_bytes() + 12);
                assert!(id.cooccurrence(1, minimum).is_ok());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tile_plan_respects_budget() {
        let plan = TilePlan::new(100, 1000, 80_000 + 1000 + 400, 4).unwrap();
        assert_eq!(plan.rows_per_tile, 1);
        assert!(plan.peak_bytes <= 80_000 + 1000 + 400);
        let plan = TilePlan::new(100, 1000, 10_000_000, 4).unwrap();
        assert_eq!(plan.rows_per_tile, 25);
        assert_eq!(plan.tiles, 4);
        assert_eq!(plan.concurrent_tiles, 4);
        let plan = TilePlan::new(100, 0, 80_000 + 4 * 400 * 10, 4).unwrap();
        assert_eq!(plan.rows_per_tile, 10);
        assert!(plan.peak_bytes <= 80_000 + 4 * 400 * 10);
    }

    #[test]
    fn tiled_equals_untiled() {
        let sets: Vec<Vec<String>> = (0..40)
            .map(|i| {
                (0..7)
                    .filter(|j| (i * 7 + j * 3) % 5 < 3)
                    .map(|j| format!("w{j}"))
                    .collect()
            })
            .collect();
        let corpus = Corpus::from_keyword_sets(sets);
        let set =
            ConjunctionSet::new(vocab(&["w0", "w1", "w2", "w3", "w4", "w5", "w6"]), 2).unwrap();
        let id = IdMatrix::from_corpus(&corpus, &set);
        let full = id.cooccurrence(40, u64::MAX).unwrap();
        let output = 21 * 21 * 8;
        let tight = id
            .cooccurrence(40, output + id.heap_bytes() + 21 * 4)
            .unwrap();
        assert_eq!(full, tight);
        assert!(full.is_symmetric());
    }

    #[test]
    fn projection_and_duplicates() {
        let values: Vec<f64> = (0..36).map(|x| x as f64).collect();
        let parent = CooccurrenceMatrix::from_values(6, values, 1).unwrap();
        let td = |s| SecretKey::from_seed(s).trapdoor(&["x"]);
        let known = [
            KnownQueryPair {
                conjunction: 4,
                trapdoor: td(1),
            },
            KnownQueryPair {
                conjunction: 1,
                trapdoor: td(2),
            },
        ];
        let sub = project(&parent, &known, Side::Conjunction).unwrap();
        assert_eq!((sub.rows(), sub.cols()), (6, 2));
        for i in 0..6 {
            assert_eq!(sub.row(i), &[parent.get(i, 4), parent.get(i, 1)]);
        }
        let dup = [
            known[0],
            KnownQueryPair {
                conjunction: 4,
                trapdoor: td(3),
            },
        ];
        assert!(matches!(
            project(&parent, &dup, Side::Conjunction),
            Err(Error::DuplicateKnownQuery(_))
        ));
        let one = project(&parent, &known[1..], Side::Conjunction).unwrap();
        assert_eq!(one.column_order(), &[1]);
    }

    #[test]
    fn persisted_matrix_round_trip() {
        let parent =
            CooccurrenceMatrix::from_values(2, vec![0.5, 0.25, 0.25, 1.0 / 3.0], 12).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.bin");
        parent.write(&path).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(&bytes[..8], MATRIX_MAGIC);
        assert_eq!(bytes.len(), HEADER_LEN + 4 * 8);
        assert_eq!(CooccurrenceMatrix::read(&path).unwrap(), parent);
        fs::write(&path, b"garbage").unwrap();
        assert!(CooccurrenceMatrix::read(&path).is_err());
    }

    #[test]
    fn byte_estimates() {
        let gib = estimate_bytes(500, 2, 0.15, 8).unwrap() as f64 / (1u64 << 30) as f64;
        assert!((gib - 40.0).abs() < 0.1, "{gib}");
        assert_eq!(estimate_bytes(150, 2, 0.15, 8).unwrap(), 344_670_525);
        assert_eq!(estimate_bytes(150, 2, 0.0, 8).unwrap(), 0);
        assert!(estimate_bytes(10, 11, 0.15, 8).is_err());
    }

    #[test]
    fn time_complexity() {
        let (f, g) = estimate_time_complexity(130, 2, 1258, 10, 50).unwrap();
        assert_eq!(f, 8385);
        assert_eq!(g, 2_653_959_828);
        let (f1, _) = estimate_time_complexity(130, 1, 20, 5, 1).unwrap();
        assert_eq!(f1, 0);
        let (_, g100) = estimate_time_complexity(130, 2, 1258, 10, 100).unwrap();
        assert_eq!(g100, g / 2);
    }
}
