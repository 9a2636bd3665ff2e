//! Brute-force cross-checks of the core pipeline on built-in toy corpora.
//!
//! Every reference here is computed from the definitions over keyword strings:
//! subsets are enumerated recursively, searches scan every document, and the
//! attack recomputes each norm from freshly sliced rows on every pass.

use std::collections::BTreeSet;
use std::sync::Arc;

use ckws_core::attack::{refined_score_attack, AttackConfig, Norm, Prediction, RefSpeed};
use ckws_core::conjunction::{Conjunction, ConjunctionSet};
use ckws_core::cooccurrence::{
    build_conjunction_cooccurrence, build_trapdoor_cooccurrence, estimate_bytes, ColumnSource,
    CooccurrenceMatrix, OnDemandColumns,
};
use ckws_core::corpus::{build_vocabulary, Corpus, Vocabulary};
use ckws_core::scheme::{
    build_index_for, sample_known_queries, sample_queries, KnownQueryPair, ObservationLog,
    SecretKey,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const POOL: [&str; 10] = [
    "anchor", "basalt", "cedar", "dune", "ember", "fjord", "glacier", "heron", "inlet", "juniper",
];

const BUDGET: u64 = 1 << 26;

#[derive(Debug, Default)]
pub struct Report {
    pub instances: usize,
    pub attacks: usize,
    pub mismatches: Vec<String>,
}

/// Hand-written corpora followed by `random` seeded ones.
fn corpora(base_seed: u64, random: usize) -> Vec<(String, Corpus)> {
    let fixed: [(&str, &[&[&str]]); 3] = [
        (
            "harbour",
            &[
                &["anchor", "heron", "inlet"],
                &["anchor", "dune"],
                &["heron", "inlet", "fjord"],
                &["anchor", "inlet"],
                &["dune", "fjord", "heron"],
                &["anchor", "heron"],
            ],
        ),
        (
            "forest",
            &[
                &["cedar", "juniper"],
                &["cedar", "ember", "juniper", "basalt"],
                &["basalt"],
                &["ember", "juniper"],
                &["cedar", "basalt", "glacier"],
                &["glacier", "juniper", "ember"],
                &["cedar"],
                &["basalt", "ember", "glacier", "juniper"],
            ],
        ),
        (
            "repeated",
            &[
                &["dune", "ember"],
                &["dune", "ember"],
                &["dune", "ember", "fjord"],
                &["fjord"],
            ],
        ),
    ];
    let mut out: Vec<(String, Corpus)> = fixed
        .iter()
        .map(|(name, docs)| {
            (
                (*name).to_owned(),
                Corpus::from_keyword_sets(docs.iter().map(|d| d.to_vec())),
            )
        })
        .collect();
    for i in 0..random {
        let seed = base_seed.wrapping_add(i as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..=40);
        let width = rng.random_range(3..=POOL.len());
        let density = rng.random_range(0.25..0.75);
        let docs: Vec<Vec<&str>> = (0..n)
            .map(|_| {
                POOL[..width]
                    .iter()
                    .copied()
                    .filter(|_| rng.random_bool(density))
                    .collect()
            })
            .collect();
        out.push((format!("random seed {seed}"), Corpus::from_keyword_sets(docs)));
    }
    out
}

fn subsets(v: usize, d: usize) -> Vec<Vec<usize>> {
    if d == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 0..v {
        for rest in subsets(v, d - 1) {
            if rest.first().is_none_or(|&r| r > first) {
                let mut s = vec![first];
                s.extend(rest);
                out.push(s);
            }
        }
    }
    out
}

fn words(vocab: &Vocabulary, subset: &[usize]) -> Vec<String> {
    subset.iter().map(|&i| vocab.keyword(i).to_owned()).collect()
}

fn scan(corpus: &Corpus, keywords: &[String]) -> BTreeSet<u32> {
    corpus
        .documents()
        .iter()
        .filter(|d| keywords.iter().all(|k| d.keywords.contains(k)))
        .map(|d| d.doc_id)
        .collect()
}

fn rows(m: &CooccurrenceMatrix) -> Vec<Vec<f64>> {
    (0..m.dim()).map(|i| m.row(i).to_vec()).collect()
}

fn distance(a: &[f64], b: &[f64], norm: Norm) -> f64 {
    let sum = a.iter().zip(b).fold(0.0, |acc, (x, y)| {
        acc + match norm {
            Norm::L2 => (x - y) * (x - y),
            Norm::L1 => (x - y).abs(),
        }
    });
    match norm {
        Norm::L2 => sum.sqrt(),
        Norm::L1 => sum,
    }
}

fn reference_attack(
    ckw: &[Vec<f64>],
    log: &ObservationLog,
    td: &[Vec<f64>],
    known: &[KnownQueryPair],
    config: &AttackConfig,
    speed: usize,
) -> Vec<Prediction> {
    let tds: Vec<_> = log.observations().iter().map(|o| o.trapdoor).collect();
    let position = |t| tds.iter().position(|x| *x == t).expect("known trapdoor observed");
    let mut columns: Vec<(usize, usize)> = known
        .iter()
        .map(|k| (k.conjunction, position(k.trapdoor)))
        .collect();
    let mut fixed: Vec<Option<Prediction>> = vec![None; tds.len()];
    for k in known {
        fixed[position(k.trapdoor)] = Some(Prediction {
            trapdoor: k.trapdoor,
            conjunction_rank: k.conjunction,
            score: f64::INFINITY,
            certainty: f64::INFINITY,
            known: true,
            iteration: 0,
        });
    }
    for iteration in 1.. {
        let open: Vec<usize> = (0..tds.len()).filter(|&t| fixed[t].is_none()).collect();
        if open.is_empty() {
            break;
        }
        let round: Vec<Prediction> = open
            .iter()
            .map(|&t| {
                let target: Vec<f64> = columns.iter().map(|&(_, p)| td[t][p]).collect();
                let mut best = (0, f64::NEG_INFINITY);
                let mut second = f64::NEG_INFINITY;
                for (i, row) in ckw.iter().enumerate() {
                    let cand: Vec<f64> = columns.iter().map(|&(c, _)| row[c]).collect();
                    let s = -distance(&cand, &target, config.norm)
                        .max(config.epsilon_floor)
                        .ln();
                    if s > best.1 {
                        second = best.1;
                        best = (i, s);
                    } else if s > second {
                        second = s;
                    }
                }
                Prediction {
                    trapdoor: tds[t],
                    conjunction_rank: best.0,
                    score: best.1,
                    certainty: if ckw.len() > 1 { best.1 - second } else { f64::INFINITY },
                    known: false,
                    iteration,
                }
            })
            .collect();
        if open.len() < speed {
            for (&t, p) in open.iter().zip(round) {
                fixed[t] = Some(p);
            }
            break;
        }
        let mut by_certainty: Vec<usize> = (0..round.len()).collect();
        by_certainty.sort_by(|&a, &b| round[b].certainty.total_cmp(&round[a].certainty));
        for &i in &by_certainty[..speed] {
            fixed[open[i]] = Some(round[i]);
            columns.push((round[i].conjunction_rank, open[i]));
        }
    }
    fixed.into_iter().map(|p| p.expect("every trapdoor predicted")).collect()
}

/// Checks one corpus at arity `d`; returns whether the attack stage ran.
fn check(
    name: &str,
    corpus: &Corpus,
    d: usize,
    seed: u64,
    mismatches: &mut Vec<String>,
) -> Result<bool, String> {
    let mut fail = |what: &str| mismatches.push(format!("{name}, d = {d}: {what}"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0c0ffee);
    let v = corpus.distinct_keywords().min(7);
    if v < d {
        return Ok(false);
    }
    let vocab = Arc::new(build_vocabulary(corpus, v).map_err(|e| e.to_string())?);
    let set = ConjunctionSet::new(vocab.clone(), d).map_err(|e| e.to_string())?;
    let all = subsets(v, d);

    if set.m() != all.len() {
        fail("conjunction count");
    }
    let expected_bytes = (2.0 * (0.15 + 0.0225) * (all.len() * all.len()) as f64 * 8.0).round();
    if estimate_bytes(v, d, 0.15, 8).map_err(|e| e.to_string())? as f64 != expected_bytes {
        fail("memory estimate");
    }
    for (r, s) in all.iter().enumerate() {
        let c = Conjunction::new(s.clone()).map_err(|e| e.to_string())?;
        if set.rank(&c).ok() != Some(r) || set.unrank(r).ok().as_ref() != Some(&c) {
            fail("rank/unrank");
            break;
        }
    }

    let key = SecretKey::from_seed(seed);
    let instance = build_index_for(corpus, set.clone(), key.clone()).map_err(|e| e.to_string())?;
    for s in &all {
        let kws = words(&vocab, s);
        let found: BTreeSet<u32> = instance.search(&key.trapdoor(&kws)).into_iter().collect();
        if found != scan(corpus, &kws) {
            fail("search results");
            break;
        }
    }

    let n = corpus.n() as f64;
    let ckw_ref: Vec<Vec<f64>> = all
        .iter()
        .map(|a| {
            all.iter()
                .map(|b| {
                    let mut both = words(&vocab, a);
                    both.extend(words(&vocab, b));
                    scan(corpus, &both).len() as f64 / n
                })
                .collect()
        })
        .collect();
    let c_ckw = build_conjunction_cooccurrence(corpus, &set, BUDGET).map_err(|e| e.to_string())?;
    if rows(&c_ckw) != ckw_ref {
        fail("conjunction co-occurrence");
    }
    let lazy = OnDemandColumns::new(corpus, &set).map_err(|e| e.to_string())?;
    if (0..set.m()).any(|j| lazy.column(j).as_ref() != ckw_ref[j].as_slice()) {
        fail("on-demand conjunction columns");
    }

    let fraction = rng.random_range(0.3..=1.0);
    let Ok((log, truth)) = sample_queries(&instance, fraction, seed) else {
        return Ok(false);
    };
    let results: Vec<BTreeSet<u32>> = log
        .observations()
        .iter()
        .map(|o| scan(corpus, truth.keywords(&o.trapdoor).unwrap_or_default()))
        .collect();
    let td_ref: Vec<Vec<f64>> = results
        .iter()
        .map(|a| results.iter().map(|b| a.intersection(b).count() as f64 / n).collect())
        .collect();
    let c_td = build_trapdoor_cooccurrence(&log, corpus.n(), BUDGET).map_err(|e| e.to_string())?;
    if rows(&c_td) != td_ref {
        fail("trapdoor co-occurrence");
    }

    let k = rng.random_range(1..=log.l());
    let known = sample_known_queries(&log, &set, &truth, k, seed).map_err(|e| e.to_string())?;
    let speed = rng.random_range(1..=log.l());
    let config = AttackConfig {
        ref_speed: RefSpeed::Fixed(speed),
        norm: if seed.is_multiple_of(2) { Norm::L2 } else { Norm::L1 },
        ..AttackConfig::default()
    };
    let expected = reference_attack(&ckw_ref, &log, &td_ref, &known, &config, speed);
    match refined_score_attack(&c_ckw, &log, &c_td, &known, &config) {
        Ok(run) if run.predictions == expected => {}
        Ok(_) => fail("refined attack predictions"),
        Err(e) => fail(&format!("refined attack failed: {e}")),
    }
    match refined_score_attack(&lazy, &log, &c_td, &known, &config) {
        Ok(run) if run.predictions == expected => {}
        Ok(_) => fail("refined attack over on-demand columns"),
        Err(e) => fail(&format!("refined attack over on-demand columns failed: {e}")),
    }
    Ok(true)
}

pub fn run(base_seed: u64, random: usize) -> Report {
    let mut report = Report::default();
    for (i, (name, corpus)) in corpora(base_seed, random).into_iter().enumerate() {
        for d in 1..=3 {
            let seed = base_seed.wrapping_add((i * 3 + d) as u64);
            report.instances += 1;
            match check(&name, &corpus, d, seed, &mut report.mismatches) {
                Ok(true) => report.attacks += 1,
                Ok(false) => {}
                Err(e) => report.mismatches.push(format!("{name}, d = {d}: {e}")),
            }
        }
    }
    report
}
