use std::collections::{BTreeSet, HashSet};

use nbprior::corpus::{CategoryIndex, Corpus, DocId, Document};
use nbprior::experiment::{
    export_review_list, review_list_len, run_baseline, run_study, sample_negatives, Experiment, ExperimentSpec,
};
use nbprior::metrics::{ppv_at_k, ppv_profile};
use nbprior::nb_model::Hyperparameters;
use nbprior::prior_search::Cell;
use nbprior::rng;
use nbprior::synthetic::{generate, SyntheticConfig};

fn tokens(words: &[String]) -> BTreeSet<String> {
    words.iter().cloned().collect()
}

/// Members carry `marker` and `common`; everyone else carries `common` and
/// noise words no member uses. Ids 1000.. are unlabeled members.
fn marker_corpus() -> (Corpus, CategoryIndex, HashSet<DocId>) {
    let mut r = rng::seeded(42);
    let mut corpus = Corpus::new(5);
    let mut index = CategoryIndex::new();
    let noise = |r: &mut rng::Rng| -> Vec<String> {
        (0..4).map(|_| format!("noise{}", rng::below(r, 60))).collect()
    };
    for id in 0..30 {
        let words = ["marker".to_string(), "common".to_string(), format!("member{id}")];
        corpus.insert(Document::new(id, format!("Member {id}"), tokens(&words))).unwrap();
        index.add("Topic", id);
    }
    let mut hidden = HashSet::new();
    for id in 1000..1012 {
        let mut words = noise(&mut r);
        words.extend(["marker".to_string(), "common".to_string()]);
        corpus.insert(Document::new(id, format!("Hidden {id}"), tokens(&words))).unwrap();
        hidden.insert(id);
    }
    for id in 2000..2300 {
        let mut words = noise(&mut r);
        words.push("common".to_string());
        corpus.insert(Document::new(id, format!("Other {id}"), tokens(&words))).unwrap();
    }
    (corpus, index, hidden)
}

fn small_spec(category: &str) -> ExperimentSpec {
    ExperimentSpec {
        seeds: vec![0, 1],
        ..ExperimentSpec::new(category)
    }
}

#[test]
fn marker_token_separates_both_branches() {
    let (corpus, index, hidden) = marker_corpus();
    let baseline = run_baseline(&corpus, &index, small_spec("Topic")).unwrap();
    let (result, study) = run_study(&corpus, &index, small_spec("Topic")).unwrap();
    for ranked in [&baseline, &study] {
        let top: HashSet<DocId> = ranked.ids().into_iter().take(hidden.len()).collect();
        assert_eq!(top, hidden, "learned {:?}", result.learned);
        assert!(ranked.ids().iter().all(|&id| id >= 1000));
    }
}

#[test]
fn baseline_is_the_uniform_cell() {
    let (corpus, index, _) = marker_corpus();
    let exp = Experiment::prepare(&corpus, &index, small_spec("Topic")).unwrap();
    assert_eq!(exp.rank(0, Hyperparameters::BAYES_LAPLACE), exp.baseline());
    assert_eq!(exp.grid().bayes_laplace(), Cell::new(3, 3));
}

fn small_synthetic() -> nbprior::synthetic::SyntheticCorpus {
    generate(&SyntheticConfig {
        vocab: 400,
        topic_tokens: 40,
        members: 40,
        pool: 1500,
        hidden_rate: 0.02,
        background_topics: 10,
        max_len: 200,
        shards: 4,
        ..SyntheticConfig::default()
    })
    .unwrap()
}

#[test]
fn study_predicts_fewer_positives_when_priors_lean_negative() {
    let s = small_synthetic();
    let exp = Experiment::prepare(&s.corpus, &s.index, small_spec(&s.category)).unwrap();
    let (result, study) = exp.study().unwrap();
    let baseline = exp.baseline();
    let h = result.learned;
    if h.lambda_neg >= 1.0 && h.lambda_pos <= 1.0 {
        assert!(study.positives_predicted() <= baseline.positives_predicted());
    }
    // the monotone direction holds for any cell on that side of (1, 1)
    for (neg, pos) in [(8.0, 1.0), (22.0, 0.5), (200.0, 0.01)] {
        let ranked = exp.rank(0, Hyperparameters::new(neg, pos).unwrap());
        assert!(ranked.positives_predicted() <= baseline.positives_predicted());
    }
}

#[test]
fn negative_samples_overlap_at_the_expected_rate() {
    let s = generate(&SyntheticConfig {
        vocab: 50,
        topic_tokens: 10,
        members: 100,
        pool: 9_900,
        min_len: 1,
        max_len: 3,
        shards: 8,
        ..SyntheticConfig::default()
    })
    .unwrap();
    let samples: Vec<HashSet<DocId>> = (0..20)
        .map(|seed| {
            sample_negatives(&s.corpus, &s.index, &s.category, 100, seed)
                .unwrap()
                .into_iter()
                .collect()
        })
        .collect();
    let mut total = 0.0;
    let mut pairs = 0.0;
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            total += samples[i].intersection(&samples[j]).count() as f64 / 100.0;
            pairs += 1.0;
        }
    }
    let expected = 100.0 / 9_900.0;
    let mean = total / pairs;
    assert!((mean - expected).abs() < 0.006, "{mean} vs {expected}");
    assert_ne!(samples[0], samples[1]);
}

#[test]
fn seventy_two_of_two_fifty() {
    let ranked: Vec<DocId> = (0..300).collect();
    let truth: HashSet<DocId> = (0..250).filter(|i| i % 250 < 72).collect();
    assert_eq!(ppv_at_k(&ranked, &truth, 250).unwrap(), 0.288);
    let profile = ppv_profile(&ranked, &truth, 250).unwrap();
    assert_eq!(profile.at(250), Some(0.288));
    assert_eq!(profile.at(72), Some(1.0));
}

#[test]
fn review_list_has_no_scores() {
    let s = small_synthetic();
    let exp = Experiment::prepare(&s.corpus, &s.index, small_spec(&s.category)).unwrap();
    let (_, study) = exp.study().unwrap();
    let baseline = exp.baseline();
    let html = export_review_list(&baseline, &study, 50, "https://example.org/{title}");
    let items = html.matches("<li>").count();
    assert_eq!(items, review_list_len(&baseline, &study, 50));
    assert!((50..=100).contains(&items));
    for e in baseline.entries.iter().take(50) {
        assert!(!html.contains(&e.log_odds.to_string()));
    }
    assert!(!html.to_lowercase().contains("baseline") && !html.to_lowercase().contains("study"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let run = || {
        let s = small_synthetic();
        let exp = Experiment::prepare(&s.corpus, &s.index, small_spec(&s.category)).unwrap();
        let (result, study) = exp.study().unwrap();
        let mut bytes = Vec::new();
        study.write_csv(&mut bytes).unwrap();
        exp.baseline().write_csv(&mut bytes).unwrap();
        for seed in &result.per_seed {
            seed.memo.write_csv(exp.grid(), &mut bytes).unwrap();
            seed.outcome.write_log(exp.grid(), &mut bytes).unwrap();
        }
        bytes.extend(export_review_list(&exp.baseline(), &study, 100, "{title}").into_bytes());
        bytes
    };
    assert_eq!(run(), run());
}
