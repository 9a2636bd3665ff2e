//! Document ingestion, keyword extraction, vocabularies and attacker-knowledge splits.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::warn;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::error::{Error, Result};
use crate::stem::porter_stem;

/// RNG stream reserved for corpus splits.
const SPLIT_STREAM: u64 = 1;

/// Tokens shorter than this are dropped before stemming.
pub const MIN_TOKEN_LEN: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Stemmer {
    #[default]
    Porter,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StopwordList {
    #[default]
    English,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct ExtractionConfig {
    pub stemmer: Stemmer,
    pub stopwords: StopwordList,
    /// Strip an RFC-822 style header block (everything up to the first blank line).
    pub email_mode: bool,
}

/// Turns raw text into a deduplicated keyword set.
pub struct KeywordExtractor {
    stemmer: Stemmer,
    stopwords: HashSet<&'static str>,
    email_mode: bool,
}

impl KeywordExtractor {
    pub fn new(config: &ExtractionConfig) -> Self {
        let stopwords = match config.stopwords {
            StopwordList::English => stop_words::get("en").iter().copied().collect(),
            StopwordList::None => HashSet::new(),
        };
        Self {
            stemmer: config.stemmer,
            stopwords,
            email_mode: config.email_mode,
        }
    }

    /// Splits on anything that is not an ASCII letter, lowercases, drops short
    /// tokens and stopwords, then stems.
    pub fn extract(&self, text: &str) -> BTreeSet<String> {
        let body = if self.email_mode {
            email_body(text)
        } else {
            text
        };
        body.split(|c: char| !c.is_ascii_alphabetic())
            .filter(|t| t.len() >= MIN_TOKEN_LEN)
            .map(str::to_ascii_lowercase)
            .filter(|t| !self.stopwords.contains(t.as_str()))
            .map(|t| match self.stemmer {
                Stemmer::Porter => porter_stem(&t),
                Stemmer::None => t,
            })
            .collect()
    }
}

/// Everything after the first blank line; the whole text if there is none.
pub fn email_body(text: &str) -> &str {
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        offset += line.len();
        if line.trim_end_matches(['\r', '\n']).is_empty() {
            return &text[offset..];
        }
    }
    text
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: u32,
    /// Path relative to the ingested directory; empty for synthetic documents.
    pub source: String,
    pub keywords: BTreeSet<String>,
}

impl Document {
    pub fn new<I, S>(doc_id: u32, keywords: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            doc_id,
            source: String::new(),
            keywords: keywords.into_iter().map(Into::into).collect(),
        }
    }

    pub fn contains(&self, keyword: &str) -> bool {
        self.keywords.contains(keyword)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Corpus {
    documents: Vec<Document>,
}

impl Corpus {
    /// Builds a corpus, rejecting duplicate identifiers.
    pub fn new(documents: Vec<Document>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(documents.len());
        for doc in &documents {
            if !seen.insert(doc.doc_id) {
                return Err(Error::invalid(format!("duplicate doc_id {}", doc.doc_id)));
            }
        }
        Ok(Self { documents })
    }

    /// Convenience constructor assigning identifiers 0..n in order.
    pub fn from_keyword_sets<D, I, S>(docs: D) -> Self
    where
        D: IntoIterator<Item = I>,
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let documents = docs
            .into_iter()
            .enumerate()
            .map(|(i, kws)| Document::new(i as u32, kws))
            .collect();
        Self { documents }
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn n(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Number of documents containing each keyword.
    pub fn document_frequencies(&self) -> HashMap<&str, usize> {
        let mut df: HashMap<&str, usize> = HashMap::new();
        for doc in &self.documents {
            for kw in &doc.keywords {
                *df.entry(kw.as_str()).or_default() += 1;
            }
        }
        df
    }

    pub fn distinct_keywords(&self) -> usize {
        self.document_frequencies().len()
    }

    /// Writes one tab-separated record per document: doc_id, source, keyword count.
    pub fn write_manifest(&self, path: &Path) -> Result<()> {
        let mut out = String::from("doc_id\tsource\tkeyword_count\n");
        for doc in &self.documents {
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                doc.doc_id,
                doc.source,
                doc.keywords.len()
            ));
        }
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(out.as_bytes())
            .map_err(|e| Error::io(path, e))
    }

    fn subset(&self, positions: &[usize]) -> Corpus {
        Corpus {
            documents: positions
                .iter()
                .map(|&i| self.documents[i].clone())
                .collect(),
        }
    }
}

/// Reads every regular file below `dir` (recursively), one document per file.
///
/// Identifiers follow the sorted relative paths, so the result does not depend
/// on directory iteration order.
pub fn ingest(dir: &Path, config: &ExtractionConfig) -> Result<Corpus> {
    if !dir.is_dir() {
        return Err(Error::MissingDirectory(dir.to_path_buf()));
    }
    let mut files: Vec<PathBuf> = Vec::new();
    for entry in WalkDir::new(dir).follow_links(true) {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(dir).to_path_buf();
            Error::io(path, e.into())
        })?;
        if entry.file_type().is_file() {
            files.push(entry.into_path());
        }
    }
    if files.is_empty() {
        return Err(Error::EmptyDirectory(dir.to_path_buf()));
    }
    files.sort();

    let extractor = KeywordExtractor::new(config);
    let documents = files
        .par_iter()
        .enumerate()
        .map(|(i, path)| {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            let text = String::from_utf8_lossy(&bytes);
            let keywords = extractor.extract(&text);
            let source = path
                .strip_prefix(dir)
                .unwrap_or(path)
                .to_string_lossy()
                .into_owned();
            if keywords.is_empty() {
                warn!("{source}: no keywords extracted");
            }
            Ok(Document {
                doc_id: i as u32,
                source,
                keywords,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Corpus { documents })
}

/// Keywords ordered by descending document frequency, ties lexicographic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    keywords: Vec<String>,
    positions: HashMap<String, usize>,
}

impl Vocabulary {
    /// Wraps an already ordered keyword list.
    pub fn from_ordered(keywords: Vec<String>) -> Result<Self> {
        let mut positions = HashMap::with_capacity(keywords.len());
        for (i, kw) in keywords.iter().enumerate() {
            if positions.insert(kw.clone(), i).is_some() {
                return Err(Error::invalid(format!(
                    "duplicate keyword {kw:?} in vocabulary"
                )));
            }
        }
        Ok(Self {
            keywords,
            positions,
        })
    }

    pub fn keywords(&self) -> &[String] {
        &self.keywords
    }

    pub fn keyword(&self, index: usize) -> &str {
        &self.keywords[index]
    }

    pub fn position(&self, keyword: &str) -> Option<usize> {
        self.positions.get(keyword).copied()
    }

    pub fn v(&self) -> usize {
        self.keywords.len()
    }
}

pub fn build_vocabulary(corpus: &Corpus, v: usize) -> Result<Vocabulary> {
    if v == 0 {
        return Err(Error::invalid("vocabulary size must be positive"));
    }
    let mut ranked: Vec<(&str, usize)> = corpus.document_frequencies().into_iter().collect();
    if v > ranked.len() {
        return Err(Error::VocabularyTooLarge {
            requested: v,
            available: ranked.len(),
        });
    }
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Vocabulary::from_ordered(
        ranked
            .into_iter()
            .take(v)
            .map(|(k, _)| k.to_owned())
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SplitSpec {
    /// Disjoint partition; the attacker receives `similar_fraction` of the corpus.
    Similar { similar_fraction: f64, seed: u64 },
    /// The whole corpus is indexed; the attacker knows a fraction `p` of it.
    PKnown { p: f64, seed: u64 },
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SplitSpec::Similar {
                similar_fraction, ..
            } if !(similar_fraction > 0.0 && similar_fraction < 1.0) => Err(Error::invalid(
                format!("similar_fraction must lie in (0, 1), got {similar_fraction}"),
            )),
            SplitSpec::PKnown { p, .. } if !(p > 0.0 && p <= 1.0) => Err(Error::invalid(format!(
                "known-documents rate p must lie in (0, 1], got {p}"
            ))),
            _ => Ok(()),
        }
    }
}

/// Returns `(attacker_corpus, real_corpus)`; both keep the input document order.
pub fn split(corpus: &Corpus, spec: &SplitSpec) -> Result<(Corpus, Corpus)> {
    spec.validate()?;
    let n = corpus.n();
    let (fraction, seed) = match *spec {
        SplitSpec::Similar {
            similar_fraction,
            seed,
        } => (similar_fraction, seed),
        SplitSpec::PKnown { p, seed } => (p, seed),
    };
    let n_attacker = (fraction * n as f64).round() as usize;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(SPLIT_STREAM);
    let mut chosen = index::sample(&mut rng, n, n_attacker.min(n)).into_vec();
    chosen.sort_unstable();

    match spec {
        SplitSpec::Similar { .. } => {
            let mut in_attacker = vec![false; n];
            for &i in &chosen {
                in_attacker[i] = true;
            }
            let rest: Vec<usize> = (0..n).filter(|&i| !in_attacker[i]).collect();
            if chosen.is_empty() || rest.is_empty() {
                return Err(Error::invalid(format!(
                    "similar split of {n} documents leaves an empty side"
                )));
            }
            Ok((corpus.subset(&chosen), corpus.subset(&rest)))
        }
        SplitSpec::PKnown { .. } => {
            if chosen.is_empty() {
                return Err(Error::invalid(format!(
                    "known-documents rate {fraction} of {n} documents selects no document"
                )));
            }
            Ok((corpus.subset(&chosen), corpus.clone()))
        }
    }
}
