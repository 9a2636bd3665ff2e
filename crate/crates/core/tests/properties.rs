mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use ckws_core::attack::{refined_score_attack, AttackConfig, Norm, RefSpeed};
use ckws_core::conjunction::{count, Conjunction, ConjunctionSet};
use ckws_core::cooccurrence::{
    build_conjunction_cooccurrence, build_trapdoor_cooccurrence, CooccurrenceMatrix,
};
use ckws_core::corpus::{build_vocabulary, split, Corpus, SplitSpec, Vocabulary};
use ckws_core::scheme::{build_index_for, KnownQueryPair, Observation, ObservationLog, SecretKey};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn vocab(v: usize) -> Arc<Vocabulary> {
    Arc::new(Vocabulary::from_ordered((0..v).map(|i| format!("w{i:02}")).collect()).unwrap())
}

fn symmetric(rng: &mut ChaCha8Rng, dim: usize) -> CooccurrenceMatrix {
    let mut values = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in i..dim {
            let x: f64 = rng.random();
            values[i * dim + j] = x;
            values[j * dim + i] = x;
        }
    }
    CooccurrenceMatrix::from_values(dim, values, 1).unwrap()
}

fn dummy_log(l: usize, salt: u64) -> ObservationLog {
    let key = SecretKey::from_seed(salt);
    ObservationLog::new(
        (0..l)
            .map(|i| Observation {
                trapdoor: key.trapdoor(&[format!("q{i}")]),
                result_ids: vec![],
            })
            .collect(),
    )
    .unwrap()
}

/// Continuous random attack input with pairwise distinct known ranks and trapdoors.
struct RandomAttack {
    c_ckw: CooccurrenceMatrix,
    c_td: CooccurrenceMatrix,
    log: ObservationLog,
    known: Vec<KnownQueryPair>,
}

fn random_attack(seed: u64, m: usize, l: usize, k: usize) -> RandomAttack {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c_ckw = symmetric(&mut rng, m);
    let c_td = symmetric(&mut rng, l);
    let log = dummy_log(l, seed);
    let mut ranks: Vec<usize> = (0..m).collect();
    ranks.shuffle(&mut rng);
    let mut positions: Vec<usize> = (0..l).collect();
    positions.shuffle(&mut rng);
    let known = ranks
        .iter()
        .zip(&positions)
        .take(k)
        .map(|(&conjunction, &p)| KnownQueryPair {
            conjunction,
            trapdoor: log.observations()[p].trapdoor,
        })
        .collect();
    RandomAttack {
        c_ckw,
        c_td,
        log,
        known,
    }
}

fn permuted(c: &CooccurrenceMatrix, perm: &[usize]) -> CooccurrenceMatrix {
    // New index perm[i] holds old index i.
    let dim = c.dim();
    let mut values = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            values[perm[i] * dim + perm[j]] = c.get(i, j);
        }
    }
    CooccurrenceMatrix::from_values(dim, values, c.scale_n()).unwrap()
}

fn scaled(c: &CooccurrenceMatrix, factor: f64) -> CooccurrenceMatrix {
    let values = c.values().iter().map(|x| x * factor).collect();
    CooccurrenceMatrix::from_values(c.dim(), values, c.scale_n()).unwrap()
}

fn small_corpus() -> impl Strategy<Value = Corpus> {
    prop::collection::vec(prop::collection::btree_set(0usize..10, 0..7), 1..40).prop_map(|docs| {
        Corpus::from_keyword_sets(
            docs.into_iter()
                .map(|d| d.into_iter().map(|i| format!("k{i}")).collect::<Vec<_>>()),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rank_unrank_bijection(v in 1usize..=25, d in 1usize..=3, pick in any::<prop::sample::Index>()) {
        prop_assume!(d <= v);
        let set = ConjunctionSet::new(vocab(v), d).unwrap();
        prop_assert_eq!(set.m() as u64, count(v, d).unwrap());
        let r = pick.index(set.m());
        let c = set.unrank(r).unwrap();
        prop_assert_eq!(set.rank(&c).unwrap(), r);
        if r + 1 < set.m() {
            prop_assert!(c < set.unrank(r + 1).unwrap());
        }
    }

    #[test]
    fn rank_of_any_tuple_round_trips(v in 3usize..=25, raw in prop::collection::btree_set(0usize..25, 1..=3)) {
        let idx: Vec<usize> = raw.into_iter().filter(|&i| i < v).collect();
        prop_assume!(!idx.is_empty());
        let set = ConjunctionSet::new(vocab(v), idx.len()).unwrap();
        let c = Conjunction::new(idx).unwrap();
        prop_assert_eq!(set.unrank(set.rank(&c).unwrap()).unwrap(), c);
    }

    #[test]
    fn vocabulary_prefix(corpus in small_corpus(), a in 1usize..10, b in 1usize..10) {
        let distinct = corpus.distinct_keywords();
        let (v1, v2) = (a.min(b), a.max(b));
        prop_assume!(v2 <= distinct);
        let small = build_vocabulary(&corpus, v1).unwrap();
        let large = build_vocabulary(&corpus, v2).unwrap();
        prop_assert_eq!(small.keywords(), &large.keywords()[..v1]);
        let df = corpus.document_frequencies();
        prop_assert!(large.keywords().windows(2).all(|w| df[w[0].as_str()] >= df[w[1].as_str()]));
    }

    #[test]
    fn split_partition_and_subset(corpus in small_corpus(), fraction in 0.05f64..0.95, seed in any::<u64>()) {
        let ids = |c: &Corpus| c.documents().iter().map(|d| d.doc_id).collect::<BTreeSet<_>>();
        let all = ids(&corpus);
        if let Ok((att, real)) = split(&corpus, &SplitSpec::Similar { similar_fraction: fraction, seed }) {
            prop_assert!(ids(&att).is_disjoint(&ids(&real)));
            prop_assert_eq!(ids(&att).union(&ids(&real)).copied().collect::<BTreeSet<_>>(), all.clone());
            prop_assert_eq!(att.n(), (fraction * corpus.n() as f64).round() as usize);
        }
        if let Ok((att, real)) = split(&corpus, &SplitSpec::PKnown { p: fraction, seed }) {
            prop_assert_eq!(ids(&real), all);
            prop_assert!(ids(&att).is_subset(&ids(&real)));
            prop_assert_eq!(att.n(), (fraction * corpus.n() as f64).round() as usize);
        }
    }

    #[test]
    fn conjunction_matrix_shape(corpus in small_corpus(), d in 1usize..=2) {
        let v = corpus.distinct_keywords().min(6);
        prop_assume!(v >= d);
        let set = ConjunctionSet::new(Arc::new(build_vocabulary(&corpus, v).unwrap()), d).unwrap();
        let c = build_conjunction_cooccurrence(&corpus, &set, 1 << 24).unwrap();
        prop_assert!(c.is_symmetric());
        for i in 0..c.dim() {
            for j in 0..c.dim() {
                prop_assert!((0.0..=1.0).contains(&c.get(i, j)));
                prop_assert!(c.get(i, i) >= c.get(i, j));
            }
        }
    }

    /// With p = 1 the attacker matrix restricted to the queried conjunctions is C_td relabeled.
    #[test]
    fn monotone_knowledge_relabeling(corpus in small_corpus(), fraction in 0.2f64..=1.0, seed in any::<u64>()) {
        let v = corpus.distinct_keywords().min(6);
        prop_assume!(v >= 2);
        let set = ConjunctionSet::new(Arc::new(build_vocabulary(&corpus, v).unwrap()), 2).unwrap();
        let instance = build_index_for(&corpus, set.clone(), SecretKey::from_seed(seed)).unwrap();
        let Ok((log, truth)) = ckws_core::scheme::sample_queries(&instance, fraction, seed) else {
            return Ok(());
        };
        let c_ckw = build_conjunction_cooccurrence(&corpus, &set, 1 << 24).unwrap();
        let c_td = build_trapdoor_cooccurrence(&log, corpus.n(), 1 << 24).unwrap();
        let rank = |o: &Observation| truth.real_rank(&o.trapdoor).unwrap();
        for (a, oa) in log.observations().iter().enumerate() {
            for (b, ob) in log.observations().iter().enumerate() {
                prop_assert_eq!(c_td.get(a, b), c_ckw.get(rank(oa), rank(ob)));
            }
        }
    }

    #[test]
    fn permutation_equivariance(seed in any::<u64>(), m in 3usize..20, l in 3usize..15, speed in 1usize..5) {
        let k = 1 + seed as usize % (l - 1);
        let input = random_attack(seed, m, l, k.min(m));
        let config = AttackConfig { ref_speed: RefSpeed::Fixed(speed), ..AttackConfig::default() };
        let base = refined_score_attack(&input.c_ckw, &input.log, &input.c_td, &input.known, &config).unwrap();

        let mut perm: Vec<usize> = (0..m).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 1));
        let known: Vec<KnownQueryPair> = input.known.iter()
            .map(|k| KnownQueryPair { conjunction: perm[k.conjunction], trapdoor: k.trapdoor })
            .collect();
        let relabeled = refined_score_attack(&permuted(&input.c_ckw, &perm), &input.log, &input.c_td, &known, &config).unwrap();
        for (a, b) in base.predictions.iter().zip(&relabeled.predictions) {
            prop_assert_eq!(perm[a.conjunction_rank], b.conjunction_rank);
            prop_assert_eq!(a.score, b.score);
            prop_assert_eq!(a.certainty, b.certainty);
            prop_assert_eq!(a.iteration, b.iteration);
        }
    }

    /// Scaling both matrices by 2^e scales every distance exactly, shifting scores by −e·ln 2.
    #[test]
    fn scaling_invariance(seed in any::<u64>(), e in -4i32..=4, norm_l1 in any::<bool>()) {
        let input = random_attack(seed, 12, 10, 3);
        let norm = if norm_l1 { Norm::L1 } else { Norm::L2 };
        let config = AttackConfig { ref_speed: RefSpeed::Fixed(2), norm, ..AttackConfig::default() };
        let c = 2f64.powi(e);
        let base = refined_score_attack(&input.c_ckw, &input.log, &input.c_td, &input.known, &config).unwrap();
        let run = refined_score_attack(&scaled(&input.c_ckw, c), &input.log, &scaled(&input.c_td, c), &input.known, &config).unwrap();
        for (a, b) in base.predictions.iter().zip(&run.predictions) {
            prop_assert_eq!(a.conjunction_rank, b.conjunction_rank);
            prop_assert_eq!(a.iteration, b.iteration);
            if !a.known {
                prop_assert!((b.score - (a.score - c.ln())).abs() < 1e-9);
                prop_assert!((b.certainty - a.certainty).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn refinement_monotonicity(seed in any::<u64>(), l in 2usize..40, speed in 1usize..12) {
        let k = 1 + seed as usize % (l - 1);
        let input = random_attack(seed, 45, l, k);
        let config = AttackConfig { ref_speed: RefSpeed::Fixed(speed), ..AttackConfig::default() };
        let run = refined_score_attack(&input.c_ckw, &input.log, &input.c_td, &input.known, &config).unwrap();
        prop_assert_eq!(run.predictions.len(), l);
        let mut seen = BTreeSet::new();
        for p in &run.predictions {
            prop_assert!(seen.insert(p.trapdoor));
        }
        prop_assert!(run.iterations <= l.div_ceil(speed));
        let mut remaining = l - k;
        for it in 1..=run.iterations {
            let promoted = run.predictions.iter().filter(|p| p.iteration == it && !p.known).count();
            if it < run.iterations {
                prop_assert_eq!(promoted, speed);
            } else {
                prop_assert_eq!(promoted, remaining);
                prop_assert!(promoted <= speed);
            }
            remaining -= promoted;
        }
        prop_assert_eq!(remaining, 0);
        for p in run.predictions.iter().filter(|p| !p.known) {
            prop_assert!(p.certainty >= 0.0);
        }
    }

    #[test]
    fn deterministic_predictions(seed in any::<u64>()) {
        let input = random_attack(seed, 15, 12, 2);
        let config = AttackConfig::default();
        let a = refined_score_attack(&input.c_ckw, &input.log, &input.c_td, &input.known, &config).unwrap();
        let b = refined_score_attack(&input.c_ckw, &input.log, &input.c_td, &input.known, &config).unwrap();
        prop_assert_eq!(a.predictions, b.predictions);
    }
}

/// With d = 1 the pipeline agrees with a single-keyword attack assembled from keyword postings.
#[test]
fn single_keyword_reduction() {
    for seed in 0..40u64 {
        let corpus = common::toy_corpus(seed, 50, 4);
        let v = corpus.distinct_keywords().min(8);
        let vocab = Arc::new(build_vocabulary(&corpus, v).unwrap());
        let set = ConjunctionSet::new(vocab.clone(), 1).unwrap();
        let instance = build_index_for(&corpus, set.clone(), SecretKey::from_seed(seed)).unwrap();
        let (log, truth) = ckws_core::scheme::sample_queries(&instance, 1.0, seed).unwrap();
        let known = ckws_core::scheme::sample_known_queries(&log, &set, &truth, 2, seed).unwrap();
        let c_ckw = build_conjunction_cooccurrence(&corpus, &set, 1 << 24).unwrap();
        let c_td = build_trapdoor_cooccurrence(&log, corpus.n(), 1 << 24).unwrap();
        let config = AttackConfig {
            ref_speed: RefSpeed::Fixed(1),
            ..AttackConfig::default()
        };
        let run = refined_score_attack(&c_ckw, &log, &c_td, &known, &config).unwrap();

        // Keyword-level matrices: docs holding both keywords, straight from the documents.
        let n = corpus.n() as f64;
        let both = |a: &str, b: &str| {
            corpus
                .documents()
                .iter()
                .filter(|d| d.contains(a) && d.contains(b))
                .count() as f64
                / n
        };
        let kw_matrix: Vec<Vec<f64>> = vocab
            .keywords()
            .iter()
            .map(|a| vocab.keywords().iter().map(|b| both(a, b)).collect())
            .collect();
        let query_kw: Vec<&str> = log
            .observations()
            .iter()
            .map(|o| truth.keywords(&o.trapdoor).unwrap()[0].as_str())
            .collect();
        let td_matrix: Vec<Vec<f64>> = query_kw
            .iter()
            .map(|a| query_kw.iter().map(|b| both(a, b)).collect())
            .collect();
        let expected =
            common::naive_refined_attack(&kw_matrix, &log, &td_matrix, &known, &config, 1);
        assert_eq!(run.predictions, expected, "seed {seed}");
    }
}
