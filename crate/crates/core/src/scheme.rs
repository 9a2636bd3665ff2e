//! Simulated secure d-conjunctive keyword search scheme.
//!
//! There is no encryption here: the index maps trapdoor tokens straight to the
//! identifiers of matching documents. What matters is the leakage, which is the
//! common access pattern (ids of documents holding *all* d keywords) plus the
//! search pattern (repeated queries produce equal tokens).

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use hmac::{Hmac, KeyInit, Mac};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::Sha256;

use crate::conjunction::{conjunction_postings, Conjunction, ConjunctionSet};
use crate::corpus::{Corpus, Vocabulary};
use crate::error::{Error, Result};

const QUERY_STREAM: u64 = 2;
const KNOWN_STREAM: u64 = 3;
const KEY_STREAM: u64 = 4;

pub const TOKEN_LEN: usize = 32;

#[derive(Clone, PartialEq, Eq)]
pub struct SecretKey([u8; 32]);

impl SecretKey {
    pub fn new(bytes: [u8; 32]) -> Self {
        Self(bytes)
    }

    /// Deterministic key for a simulation seed.
    pub fn from_seed(seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(KEY_STREAM);
        let mut bytes = [0u8; 32];
        rng.fill(&mut bytes);
        Self(bytes)
    }

    /// HMAC-SHA256 over the sorted, length-prefixed keyword strings.
    pub fn trapdoor<S: AsRef<str>>(&self, keywords: &[S]) -> Trapdoor {
        let mut sorted: Vec<&str> = keywords.iter().map(AsRef::as_ref).collect();
        sorted.sort_unstable();
        sorted.dedup();
        let mut mac = <Hmac<Sha256> as KeyInit>::new_from_slice(&self.0)
            .expect("HMAC accepts keys of any length");
        mac.update(&(sorted.len() as u32).to_le_bytes());
        for kw in sorted {
            mac.update(&(kw.len() as u32).to_le_bytes());
            mac.update(kw.as_bytes());
        }
        let mut token = [0u8; TOKEN_LEN];
        token.copy_from_slice(&mac.finalize().into_bytes());
        Trapdoor(token)
    }
}

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SecretKey(..)")
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Trapdoor([u8; TOKEN_LEN]);

impl Trapdoor {
    pub fn from_bytes(bytes: [u8; TOKEN_LEN]) -> Self {
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; TOKEN_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let bytes =
            hex::decode(s.trim()).map_err(|e| Error::MalformedTrapdoor(format!("{s:?}: {e}")))?;
        let token: [u8; TOKEN_LEN] = bytes.try_into().map_err(|b: Vec<u8>| {
            Error::MalformedTrapdoor(format!("expected {TOKEN_LEN} bytes, got {}", b.len()))
        })?;
        Ok(Self(token))
    }
}

impl serde::Serialize for Trapdoor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> serde::Deserialize<'de> for Trapdoor {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = <String as serde::Deserialize>::deserialize(d)?;
        Trapdoor::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

impl fmt::Debug for Trapdoor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Trapdoor({}…)", &self.to_hex()[..12])
    }
}

impl fmt::Display for Trapdoor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Index plus the client state needed to issue queries.
pub struct SchemeInstance {
    key: SecretKey,
    conjunctions: ConjunctionSet,
    n_real: usize,
    index: HashMap<Trapdoor, Vec<u32>>,
}

impl SchemeInstance {
    pub fn conjunctions(&self) -> &ConjunctionSet {
        &self.conjunctions
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        self.conjunctions.vocabulary()
    }

    pub fn n_real(&self) -> usize {
        self.n_real
    }

    /// Number of conjunctions with a non-empty result set.
    pub fn stored_entries(&self) -> usize {
        self.index.len()
    }

    pub fn trapdoor(&self, c: &Conjunction) -> Trapdoor {
        self.key.trapdoor(&self.conjunctions.keywords(c))
    }

    /// Sorted identifiers of documents holding every keyword behind `td`.
    pub fn search(&self, td: &Trapdoor) -> Vec<u32> {
        self.index.get(td).cloned().unwrap_or_default()
    }
}

pub fn build_index(
    real_corpus: &Corpus,
    vocab: Arc<Vocabulary>,
    d: usize,
    key: SecretKey,
) -> Result<SchemeInstance> {
    let conjunctions = ConjunctionSet::new(vocab, d)?;
    build_index_for(real_corpus, conjunctions, key)
}

/// Same as [`build_index`] with a prebuilt conjunction set (e.g. large arity).
pub fn build_index_for(
    real_corpus: &Corpus,
    conjunctions: ConjunctionSet,
    key: SecretKey,
) -> Result<SchemeInstance> {
    let postings = conjunction_postings(real_corpus, &conjunctions);
    let docs = real_corpus.documents();
    let mut index = HashMap::new();
    for (c, bits) in conjunctions.iter().zip(&postings) {
        if bits.is_empty() {
            continue;
        }
        let mut ids: Vec<u32> = bits.iter_ones().map(|pos| docs[pos].doc_id).collect();
        ids.sort_unstable();
        let td = key.trapdoor(&conjunctions.keywords(&c));
        index.insert(td, ids);
    }
    Ok(SchemeInstance {
        key,
        conjunctions,
        n_real: real_corpus.n(),
        index,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observation {
    pub trapdoor: Trapdoor,
    /// Sorted, duplicate free.
    pub result_ids: Vec<u32>,
}

/// Everything the attacker sees: distinct trapdoors and their result sets.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ObservationLog {
    observations: Vec<Observation>,
    positions: HashMap<Trapdoor, usize>,
}

impl ObservationLog {
    pub fn new(observations: Vec<Observation>) -> Result<Self> {
        let mut positions = HashMap::with_capacity(observations.len());
        for (i, obs) in observations.iter().enumerate() {
            if positions.insert(obs.trapdoor, i).is_some() {
                return Err(Error::invalid(format!(
                    "trapdoor {} observed twice",
                    obs.trapdoor
                )));
            }
            if obs.result_ids.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid(format!(
                    "result ids of {} are not sorted and distinct",
                    obs.trapdoor
                )));
            }
        }
        Ok(Self {
            observations,
            positions,
        })
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn l(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// pos(td): index of the trapdoor in observation order.
    pub fn position(&self, td: &Trapdoor) -> Option<usize> {
        self.positions.get(td).copied()
    }

    /// One line per observation: `hex_token<TAB>id,id,...`.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for obs in &self.observations {
            out.push_str(&obs.trapdoor.to_hex());
            out.push('\t');
            let ids: Vec<String> = obs.result_ids.iter().map(u32::to_string).collect();
            out.push_str(&ids.join(","));
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let bad = |line: usize, message: String| Error::Format {
            path: path.to_path_buf(),
            message: format!("line {line}: {message}"),
        };
        let mut observations = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (token, ids) = line.split_once('\t').unwrap_or((line, ""));
            let trapdoor = Trapdoor::from_hex(token).map_err(|e| bad(i + 1, e.to_string()))?;
            let mut result_ids = Vec::new();
            for id in ids.split(',').filter(|s| !s.is_empty()) {
                result_ids.push(
                    id.trim()
                        .parse::<u32>()
                        .map_err(|e| bad(i + 1, e.to_string()))?,
                );
            }
            result_ids.sort_unstable();
            result_ids.dedup();
            observations.push(Observation {
                trapdoor,
                result_ids,
            });
        }
        Self::new(observations).map_err(|e| bad(0, e.to_string()))
    }
}

/// Trapdoor → plaintext conjunction, held by the harness for evaluation only.
#[derive(Debug, Clone, Default)]
pub struct GroundTruth {
    entries: HashMap<Trapdoor, TruthEntry>,
}

#[derive(Debug, Clone)]
struct TruthEntry {
    real_rank: usize,
    keywords: Vec<String>,
}

impl GroundTruth {
    /// Sorted keyword strings of the conjunction behind `td`.
    pub fn keywords(&self, td: &Trapdoor) -> Option<&[String]> {
        self.entries.get(td).map(|e| e.keywords.as_slice())
    }

    /// Rank of the conjunction in the indexed scheme's own conjunction set.
    pub fn real_rank(&self, td: &Trapdoor) -> Option<usize> {
        self.entries.get(td).map(|e| e.real_rank)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Issues round(fraction · m_real) distinct uniformly drawn queries.
pub fn sample_queries(
    instance: &SchemeInstance,
    fraction: f64,
    seed: u64,
) -> Result<(ObservationLog, GroundTruth)> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!(
            "query fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let m = instance.conjunctions.m();
    let l = (fraction * m as f64).round() as usize;
    if l == 0 {
        return Err(Error::invalid(format!(
            "query fraction {fraction} of {m} conjunctions yields no query"
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(QUERY_STREAM);
    let ranks = index::sample(&mut rng, m, l.min(m)).into_vec();

    let mut observations = Vec::with_capacity(ranks.len());
    let mut entries = HashMap::with_capacity(ranks.len());
    for rank in ranks {
        let c = instance.conjunctions.unrank(rank)?;
        let td = instance.trapdoor(&c);
        observations.push(Observation {
            trapdoor: td,
            result_ids: instance.search(&td),
        });
        entries.insert(
            td,
            TruthEntry {
                real_rank: rank,
                keywords: instance.conjunctions.keyword_set(rank)?,
            },
        );
    }
    Ok((ObservationLog::new(observations)?, GroundTruth { entries }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct KnownQueryPair {
    /// Rank in the attacker's conjunction set.
    pub conjunction: usize,
    pub trapdoor: Trapdoor,
}

/// Observed trapdoors (in log order) whose true conjunction lies in the attacker's set.
pub fn eligible_known_queries(
    log: &ObservationLog,
    attacker_set: &ConjunctionSet,
    truth: &GroundTruth,
) -> Vec<KnownQueryPair> {
    log.observations()
        .iter()
        .filter_map(|obs| {
            let kws = truth.keywords(&obs.trapdoor)?;
            let rank = attacker_set.rank_of_keywords(kws)?;
            Some(KnownQueryPair {
                conjunction: rank,
                trapdoor: obs.trapdoor,
            })
        })
        .collect()
}

pub fn sample_known_queries(
    log: &ObservationLog,
    attacker_set: &ConjunctionSet,
    truth: &GroundTruth,
    k: usize,
    seed: u64,
) -> Result<Vec<KnownQueryPair>> {
    let eligible = eligible_known_queries(log, attacker_set, truth);
    if k > eligible.len() {
        return Err(Error::NotEnoughKnownQueries {
            requested: k,
            eligible: eligible.len(),
        });
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(KNOWN_STREAM);
    Ok(index::sample(&mut rng, eligible.len(), k)
        .into_iter()
        .map(|i| eligible[i])
        .collect())
}

/// One line per pair: `rank<TAB>hex_token`.
pub fn write_known_queries(path: &Path, known: &[KnownQueryPair]) -> Result<()> {
    let mut out = String::new();
    for pair in known {
        out.push_str(&format!(
            "{}\t{}\n",
            pair.conjunction,
            pair.trapdoor.to_hex()
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_known_queries(path: &Path) -> Result<Vec<KnownQueryPair>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| Error::Format {
            path: path.to_path_buf(),
            message: format!("line {}: {message}", i + 1),
        };
        let (rank, token) = line
            .split_once('\t')
            .ok_or_else(|| bad("expected rank<TAB>token".into()))?;
        let pair = KnownQueryPair {
            conjunction: rank.trim().parse().map_err(|e| bad(format!("{e}")))?,
            trapdoor: Trapdoor::from_hex(token).map_err(|e| bad(e.to_string()))?,
        };
        if !seen.insert(pair.trapdoor) {
            return Err(bad(format!("trapdoor {} listed twice", pair.trapdoor)));
        }
        pairs.push(pair);
    }
    Ok(pairs)
}
