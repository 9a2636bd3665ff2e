//! Lexicographically ordered d-subsets of a vocabulary with rank/unrank.

use std::fmt;
use std::sync::Arc;

use crate::bitset::DocBits;
use crate::corpus::{Corpus, Document, Vocabulary};
use crate::error::{Error, Result};

/// Largest arity accepted without the explicit override.
pub const MAX_DEFAULT_ARITY: usize = 3;

/// Binomial coefficient C(v, d), failing instead of wrapping.
pub fn count(v: usize, d: usize) -> Result<u64> {
    if d > v {
        return Err(Error::ArityExceedsVocabulary { v, d });
    }
    let d = d.min(v - d) as u128;
    let v = v as u128;
    let mut acc: u128 = 1;
    for i in 1..=d {
        // acc * (v - d + i) / i stays integral at every step.
        acc = acc
            .checked_mul(v - d + i)
            .ok_or_else(|| Error::Overflow(format!("C({v}, {d})")))?
            / i;
    }
    u64::try_from(acc).map_err(|_| Error::Overflow(format!("C({v}, {d})")))
}

/// Same as [`count`] but for callers that already validated the inputs.
fn binom(n: usize, k: usize) -> u64 {
    count(n, k).unwrap_or(0)
}

/// Strictly increasing vocabulary indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Conjunction(Vec<usize>);

impl Conjunction {
    /// Canonicalizes (sorts) the indices; rejects repeats.
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::MalformedConjunction(format!(
                "repeated keyword index in {indices:?}"
            )));
        }
        Ok(Self(indices))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }
}

impl fmt::Display for Conjunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// All C(v, d) conjunctions of a vocabulary, in lexicographic order of index tuples.
#[derive(Debug, Clone)]
pub struct ConjunctionSet {
    vocabulary: Arc<Vocabulary>,
    d: usize,
    m: u64,
}

impl ConjunctionSet {
    pub fn new(vocabulary: Arc<Vocabulary>, d: usize) -> Result<Self> {
        Self::with_arity_override(vocabulary, d, false)
    }

    /// `allow_large_arity` lifts the d ≤ 3 limit.
    pub fn with_arity_override(
        vocabulary: Arc<Vocabulary>,
        d: usize,
        allow_large_arity: bool,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::UnsupportedArity(d));
        }
        if d > MAX_DEFAULT_ARITY {
            if !allow_large_arity {
                return Err(Error::UnsupportedArity(d));
            }
            log::warn!("arity {d} selected; the conjunction space grows as C(v, {d})");
        }
        let m = count(vocabulary.v(), d)?;
        usize::try_from(m).map_err(|_| Error::Overflow(format!("{m} conjunctions")))?;
        Ok(Self { vocabulary, d, m })
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn vocabulary_arc(&self) -> &Arc<Vocabulary> {
        &self.vocabulary
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn v(&self) -> usize {
        self.vocabulary.v()
    }

    pub fn m(&self) -> usize {
        self.m as usize
    }

    fn check(&self, c: &Conjunction) -> Result<()> {
        let idx = c.indices();
        if idx.len() != self.d {
            return Err(Error::MalformedConjunction(format!(
                "{c} has arity {} but the set has d = {}",
                idx.len(),
                self.d
            )));
        }
        if idx.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::MalformedConjunction(format!(
                "{c} is not strictly increasing"
            )));
        }
        if idx.last().is_some_and(|&i| i >= self.v()) {
            return Err(Error::MalformedConjunction(format!(
                "{c} indexes past the vocabulary of {}",
                self.v()
            )));
        }
        Ok(())
    }

    pub fn rank(&self, c: &Conjunction) -> Result<usize> {
        self.check(c)?;
        let v = self.v();
        let d = self.d;
        let mut rank = 0u64;
        let mut start = 0;
        for (pos, &x) in c.indices().iter().enumerate() {
            for skipped in start..x {
                rank += binom(v - skipped - 1, d - pos - 1);
            }
            start = x + 1;
        }
        Ok(rank as usize)
    }

    pub fn unrank(&self, rank: usize) -> Result<Conjunction> {
        if rank as u64 >= self.m {
            return Err(Error::RankOutOfRange {
                rank: rank as u64,
                m: self.m,
            });
        }
        let v = self.v();
        let d = self.d;
        let mut remaining = rank as u64;
        let mut out = Vec::with_capacity(d);
        let mut x = 0;
        for pos in 0..d {
            loop {
                let block = binom(v - x - 1, d - pos - 1);
                if remaining < block {
                    break;
                }
                remaining -= block;
                x += 1;
            }
            out.push(x);
            x += 1;
        }
        Ok(Conjunction(out))
    }

    /// Resolves a keyword set (any order) to a rank, if every keyword is in the vocabulary.
    pub fn rank_of_keywords<S: AsRef<str>>(&self, keywords: &[S]) -> Option<usize> {
        if keywords.len() != self.d {
            return None;
        }
        let idx = keywords
            .iter()
            .map(|k| self.vocabulary.position(k.as_ref()))
            .collect::<Option<Vec<_>>>()?;
        let c = Conjunction::new(idx).ok()?;
        self.rank(&c).ok()
    }

    pub fn keywords(&self, c: &Conjunction) -> Vec<&str> {
        c.indices()
            .iter()
            .map(|&i| self.vocabulary.keyword(i))
            .collect()
    }

    /// Keyword strings of a rank, sorted so that equal sets compare equal across vocabularies.
    pub fn keyword_set(&self, rank: usize) -> Result<Vec<String>> {
        let c = self.unrank(rank)?;
        let mut kws: Vec<String> = self.keywords(&c).into_iter().map(str::to_owned).collect();
        kws.sort_unstable();
        Ok(kws)
    }

    /// `kw1∧kw2∧…` in index order.
    pub fn label(&self, rank: usize) -> Result<String> {
        let c = self.unrank(rank)?;
        Ok(self.keywords(&c).join("∧"))
    }

    /// Walks all conjunctions in rank order without repeated unranking.
    pub fn iter(&self) -> ConjunctionIter {
        ConjunctionIter {
            v: self.v(),
            current: if self.m == 0 {
                None
            } else {
                Some((0..self.d).collect())
            },
        }
    }
}

pub struct ConjunctionIter {
    v: usize,
    current: Option<Vec<usize>>,
}

impl Iterator for ConjunctionIter {
    type Item = Conjunction;

    fn next(&mut self) -> Option<Conjunction> {
        let cur = self.current.take()?;
        let out = Conjunction(cur.clone());
        let d = cur.len();
        let mut next = cur;
        // Rightmost index that can still move.
        let mut i = d;
        while i > 0 {
            i -= 1;
            if next[i] < self.v - d + i {
                next[i] += 1;
                for j in i + 1..d {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                return Some(out);
            }
        }
        Some(out)
    }
}

/// Per-conjunction bitsets over corpus positions (document order, not doc_id).
pub(crate) fn conjunction_postings(corpus: &Corpus, set: &ConjunctionSet) -> Vec<DocBits> {
    let n = corpus.n();
    let vocab = set.vocabulary();
    let mut keyword_bits = vec![DocBits::zeros(n); vocab.v()];
    for (pos, doc) in corpus.documents().iter().enumerate() {
        for kw in &doc.keywords {
            if let Some(i) = vocab.position(kw) {
                keyword_bits[i].set(pos);
            }
        }
    }
    set.iter()
        .map(|c| {
            let mut bits = DocBits::ones(n);
            for &i in c.indices() {
                bits.and_assign(&keyword_bits[i]);
            }
            bits
        })
        .collect()
}

/// True iff the document holds every keyword of the conjunction.
pub fn contains_all(doc: &Document, c: &Conjunction, vocab: &Vocabulary) -> bool {
    c.indices().iter().all(|&i| doc.contains(vocab.keyword(i)))
}
