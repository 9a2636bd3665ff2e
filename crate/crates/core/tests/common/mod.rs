//! Brute-force reference computations straight from the definitions, plus toy inputs.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use ckws_core::attack::{AttackConfig, Norm, Prediction};
use ckws_core::corpus::{Corpus, Vocabulary};
use ckws_core::scheme::{KnownQueryPair, ObservationLog, Trapdoor};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS: [&str; 12] = [
    "apple", "brick", "cloud", "delta", "ember", "frost", "grain", "harbor", "iris", "jade",
    "kite", "lemon",
];

/// Random documents over a small word pool; at least `min_distinct` distinct words overall.
pub fn toy_corpus(seed: u64, max_docs: usize, min_distinct: usize) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n = rng.random_range(1..=max_docs);
        let pool = rng.random_range(min_distinct.max(1)..=WORDS.len());
        let density: f64 = rng.random_range(0.2..0.8);
        let docs: Vec<Vec<&str>> = (0..n)
            .map(|_| {
                WORDS[..pool]
                    .iter()
                    .copied()
                    .filter(|_| rng.random_bool(density))
                    .collect()
            })
            .collect();
        let distinct: BTreeSet<&str> = docs.iter().flatten().copied().collect();
        if distinct.len() >= min_distinct {
            return Corpus::from_keyword_sets(docs);
        }
    }
}

pub fn random_vocabulary(seed: u64, corpus: &Corpus, v: usize) -> Arc<Vocabulary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let distinct: Vec<String> = corpus
        .documents()
        .iter()
        .flat_map(|d| d.keywords.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let chosen: Vec<String> = distinct.choose_multiple(&mut rng, v).cloned().collect();
    Arc::new(Vocabulary::from_ordered(chosen).unwrap())
}

/// All d-subsets of 0..v in lexicographic order, by recursion.
pub fn all_subsets(v: usize, d: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, v: usize, d: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == d {
            out.push(cur.clone());
            return;
        }
        for x in start..v {
            cur.push(x);
            go(x + 1, v, d, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, v, d, &mut Vec::new(), &mut out);
    out
}

pub fn subset_keywords(vocab: &Vocabulary, subset: &[usize]) -> Vec<String> {
    subset
        .iter()
        .map(|&i| vocab.keyword(i).to_owned())
        .collect()
}

/// Ids of documents holding every keyword, by scanning keyword strings.
pub fn brute_search(corpus: &Corpus, keywords: &[String]) -> Vec<u32> {
    corpus
        .documents()
        .iter()
        .filter(|doc| keywords.iter().all(|k| doc.keywords.contains(k)))
        .map(|doc| doc.doc_id)
        .collect()
}

/// C[i][j] = |docs holding all keywords of conjunctions i and j| / n.
pub fn brute_conjunction_matrix(corpus: &Corpus, vocab: &Vocabulary, d: usize) -> Vec<Vec<f64>> {
    let subsets = all_subsets(vocab.v(), d);
    let n = corpus.n() as f64;
    subsets
        .iter()
        .map(|a| {
            subsets
                .iter()
                .map(|b| {
                    let mut both = subset_keywords(vocab, a);
                    both.extend(subset_keywords(vocab, b));
                    brute_search(corpus, &both).len() as f64 / n
                })
                .collect()
        })
        .collect()
}

/// C[a][b] = |R_a ∩ R_b| / n_real over the observed result sets.
pub fn brute_trapdoor_matrix(results: &[Vec<u32>], n_real: usize) -> Vec<Vec<f64>> {
    results
        .iter()
        .map(|a| {
            results
                .iter()
                .map(|b| a.iter().filter(|x| b.contains(x)).count() as f64 / n_real as f64)
                .collect()
        })
        .collect()
}

fn norm_distance(a: &[f64], b: &[f64], norm: Norm) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += match norm {
            Norm::L2 => (x - y) * (x - y),
            Norm::L1 => (x - y).abs(),
        };
    }
    match norm {
        Norm::L2 => acc.sqrt(),
        Norm::L1 => acc,
    }
}

/// Refined score attack evaluated naively: every pass re-slices the sub-matrices and
/// recomputes every norm from scratch. Returns predictions in observation order.
pub fn naive_refined_attack(
    c_ckw: &[Vec<f64>],
    log: &ObservationLog,
    c_td: &[Vec<f64>],
    known: &[KnownQueryPair],
    config: &AttackConfig,
    ref_speed: usize,
) -> Vec<Prediction> {
    let m = c_ckw.len();
    let pos = |td: &Trapdoor| log.position(td).unwrap();
    let mut known_q: Vec<(usize, usize)> = known
        .iter()
        .map(|k| (k.conjunction, pos(&k.trapdoor)))
        .collect();
    let mut out: Vec<Option<Prediction>> = vec![None; log.l()];
    for k in known {
        out[pos(&k.trapdoor)] = Some(Prediction {
            trapdoor: k.trapdoor,
            conjunction_rank: k.conjunction,
            score: f64::INFINITY,
            certainty: f64::INFINITY,
            known: true,
            iteration: 0,
        });
    }
    let mut iteration = 0;
    loop {
        let unknown: Vec<usize> = (0..log.l()).filter(|&t| out[t].is_none()).collect();
        if unknown.is_empty() {
            break;
        }
        iteration += 1;
        let temp: Vec<Prediction> = unknown
            .iter()
            .map(|&t| {
                let td_row: Vec<f64> = known_q.iter().map(|&(_, p)| c_td[t][p]).collect();
                let mut cands: Vec<(usize, f64)> = (0..m)
                    .map(|i| {
                        let ckw_row: Vec<f64> = known_q.iter().map(|&(c, _)| c_ckw[i][c]).collect();
                        let dist = norm_distance(&ckw_row, &td_row, config.norm);
                        (i, -(dist.max(config.epsilon_floor)).ln())
                    })
                    .collect();
                cands.sort_by(|a, b| b.1.total_cmp(&a.1));
                let certainty = if cands.len() > 1 {
                    cands[0].1 - cands[1].1
                } else {
                    f64::INFINITY
                };
                Prediction {
                    trapdoor: log.observations()[t].trapdoor,
                    conjunction_rank: cands[0].0,
                    score: cands[0].1,
                    certainty,
                    known: false,
                    iteration,
                }
            })
            .collect();
        if unknown.len() < ref_speed {
            for (&t, p) in unknown.iter().zip(temp) {
                out[t] = Some(p);
            }
            break;
        }
        let mut order: Vec<usize> = (0..temp.len()).collect();
        order.sort_by(|&a, &b| temp[b].certainty.total_cmp(&temp[a].certainty));
        for &i in &order[..ref_speed] {
            out[unknown[i]] = Some(temp[i]);
            known_q.push((temp[i].conjunction_rank, unknown[i]));
        }
    }
    out.into_iter().map(Option::unwrap).collect()
}

pub fn to_rows(m: &ckws_core::cooccurrence::CooccurrenceMatrix) -> Vec<Vec<f64>> {
    (0..m.dim()).map(|i| m.row(i).to_vec()).collect()
}

/// One randomized toy instance checked end to end against the brute-force references.
/// `Ok(false)` means the query sample was empty and the attack stage was skipped.
pub fn check_oracle_instance(seed: u64) -> Result<bool, String> {
    use ckws_core::attack::{refined_score_attack, RefSpeed};
    use ckws_core::conjunction::{Conjunction, ConjunctionSet};
    use ckws_core::cooccurrence::{
        build_conjunction_cooccurrence, build_trapdoor_cooccurrence, project, Side,
    };
    use ckws_core::scheme::{build_index_for, sample_known_queries, sample_queries, SecretKey};

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = 1 + (seed % 3) as usize;
    let corpus = toy_corpus(seed, 50, d.max(3));
    let distinct = corpus.distinct_keywords().min(8);
    let v = rng.random_range(d..=distinct);
    let vocab = random_vocabulary(seed, &corpus, v);
    let set = ConjunctionSet::new(vocab.clone(), d).map_err(|e| e.to_string())?;
    let subsets = all_subsets(v, d);
    let fail = |what: &str| {
        Err(format!(
            "seed {seed} (n={}, v={v}, d={d}): {what}",
            corpus.n()
        ))
    };

    if set.m() != subsets.len() {
        return fail("conjunction count");
    }
    for (r, s) in subsets.iter().enumerate() {
        let c = Conjunction::new(s.clone()).unwrap();
        if set.rank(&c).unwrap() != r || set.unrank(r).unwrap() != c {
            return fail("rank/unrank");
        }
    }

    let key = SecretKey::from_seed(seed);
    let instance = build_index_for(&corpus, set.clone(), key.clone()).map_err(|e| e.to_string())?;
    for s in &subsets {
        let kws = subset_keywords(&vocab, s);
        if instance.search(&key.trapdoor(&kws)) != brute_search(&corpus, &kws) {
            return fail("search results");
        }
    }

    let budget = 1 << 26;
    let c_ckw = build_conjunction_cooccurrence(&corpus, &set, budget).map_err(|e| e.to_string())?;
    if to_rows(&c_ckw) != brute_conjunction_matrix(&corpus, &vocab, d) {
        return fail("conjunction co-occurrence");
    }
    let on_demand = ckws_core::cooccurrence::OnDemandColumns::new(&corpus, &set).unwrap();
    for j in 0..set.m() {
        use ckws_core::cooccurrence::ColumnSource;
        if on_demand.column(j).as_ref() != c_ckw.row(j) {
            return fail("on-demand conjunction columns");
        }
    }

    let fraction = rng.random_range(0.3..=1.0);
    let (log, truth) = match sample_queries(&instance, fraction, seed) {
        Ok(x) => x,
        Err(_) => return Ok(false),
    };
    let results: Vec<Vec<u32>> = log
        .observations()
        .iter()
        .map(|o| brute_search(&corpus, truth.keywords(&o.trapdoor).unwrap()))
        .collect();
    let c_td = build_trapdoor_cooccurrence(&log, corpus.n(), budget).map_err(|e| e.to_string())?;
    let td_rows = to_rows(&c_td);
    if td_rows != brute_trapdoor_matrix(&results, corpus.n()) {
        return fail("trapdoor co-occurrence");
    }

    let k = rng.random_range(1..=log.l());
    let known = sample_known_queries(&log, &set, &truth, k, seed).map_err(|e| e.to_string())?;
    let cs_ckw = project(&c_ckw, &known, Side::Conjunction).unwrap();
    let cs_td = project(&c_td, &known, Side::Trapdoor(&log)).unwrap();
    let ckw_rows = to_rows(&c_ckw);
    for (j, pair) in known.iter().enumerate() {
        let t = log.position(&pair.trapdoor).unwrap();
        for (i, row) in ckw_rows.iter().enumerate() {
            if cs_ckw.get(i, j) != row[pair.conjunction] {
                return fail("conjunction projection");
            }
        }
        for (a, row) in td_rows.iter().enumerate() {
            if cs_td.get(a, j) != row[t] {
                return fail("trapdoor projection");
            }
        }
    }

    let ref_speed = rng.random_range(1..=log.l());
    let config = AttackConfig {
        ref_speed: RefSpeed::Fixed(ref_speed),
        norm: if seed.is_multiple_of(2) { Norm::L2 } else { Norm::L1 },
        ..AttackConfig::default()
    };
    let run = refined_score_attack(&c_ckw, &log, &c_td, &known, &config).unwrap();
    let lazy = refined_score_attack(&on_demand, &log, &c_td, &known, &config).unwrap();
    if lazy.predictions != run.predictions {
        return fail("on-demand attack predictions");
    }
    let expected = naive_refined_attack(&ckw_rows, &log, &td_rows, &known, &config, ref_speed);
    if run.predictions != expected {
        return fail("refined attack predictions");
    }
    Ok(true)
}

/// p = 1, attacker vocabulary = real vocabulary, every conjunction queried.
pub struct FullKnowledge {
    pub instance: ckws_core::scheme::SchemeInstance,
    pub set: ckws_core::conjunction::ConjunctionSet,
    pub log: ObservationLog,
    pub truth: ckws_core::scheme::GroundTruth,
    pub known: Vec<KnownQueryPair>,
    pub c_ckw: ckws_core::cooccurrence::CooccurrenceMatrix,
    pub c_td: ckws_core::cooccurrence::CooccurrenceMatrix,
}

/// A d = 2 toy instance with n ≤ 50 and v ≤ 8; `None` when fewer than k + 1 queries exist.
pub fn full_knowledge_instance(seed: u64, k: usize) -> Option<FullKnowledge> {
    use ckws_core::conjunction::ConjunctionSet;
    use ckws_core::cooccurrence::{build_conjunction_cooccurrence, build_trapdoor_cooccurrence};
    use ckws_core::corpus::build_vocabulary;
    use ckws_core::scheme::{build_index_for, sample_known_queries, sample_queries, SecretKey};

    let corpus = toy_corpus(seed, 50, 3);
    let v = corpus.distinct_keywords().min(8);
    let vocab = Arc::new(build_vocabulary(&corpus, v).unwrap());
    let set = ConjunctionSet::new(vocab, 2).unwrap();
    let instance = build_index_for(&corpus, set.clone(), SecretKey::from_seed(seed)).unwrap();
    let (log, truth) = sample_queries(&instance, 1.0, seed).unwrap();
    if log.l() <= k {
        return None;
    }
    let known = sample_known_queries(&log, &set, &truth, k, seed).unwrap();
    let c_ckw = build_conjunction_cooccurrence(&corpus, &set, 1 << 26).unwrap();
    let c_td = build_trapdoor_cooccurrence(&log, corpus.n(), 1 << 26).unwrap();
    Some(FullKnowledge {
        instance,
        set,
        log,
        truth,
        known,
        c_ckw,
        c_td,
    })
}

/// Unknown trapdoors and the wrong predictions not explained by a support-identical twin.
pub fn full_knowledge_violations(inst: &FullKnowledge, config: &AttackConfig) -> (usize, usize) {
    let run = ckws_core::attack::refined_score_attack(
        &inst.c_ckw,
        &inst.log,
        &inst.c_td,
        &inst.known,
        config,
    )
    .unwrap();
    let support = |rank: usize| {
        inst.instance
            .search(&inst.instance.trapdoor(&inst.set.unrank(rank).unwrap()))
    };
    let mut unknown = 0;
    let mut violations = 0;
    for p in run.predictions.iter().filter(|p| !p.known) {
        unknown += 1;
        let real = inst.truth.real_rank(&p.trapdoor).unwrap();
        if p.conjunction_rank != real && support(p.conjunction_rank) != support(real) {
            violations += 1;
        }
    }
    (unknown, violations)
}
