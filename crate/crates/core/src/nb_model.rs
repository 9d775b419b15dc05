//! Boolean set-of-words naive Bayes with per-class pseudo-count priors.
//!
//! The model feature set is the union of the tokens of the positive
//! training documents. A case is scored only on the tokens it shares with
//! that set; model tokens missing from the case contribute nothing.
//!
//! With pseudo-count `λ_c` for class `c`:
//!
//! ```text
//! p(t | c) = (λ_c + n(t, c)) / (λ_c + n(c))
//! p(c)     = (λ_c + n(c))    / (λ₊ + λ₋ + N)
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::corpus::{DocId, Document};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Class {
    Negative,
    Positive,
}

/// Prior pseudo-counts for the negative and positive class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparameters {
    pub lambda_neg: f64,
    pub lambda_pos: f64,
}

impl Hyperparameters {
    /// Add-one smoothing, the baseline prior.
    pub const BAYES_LAPLACE: Self = Self {
        lambda_neg: 1.0,
        lambda_pos: 1.0,
    };
    pub const JEFFREYS: Self = Self {
        lambda_neg: 0.5,
        lambda_pos: 0.5,
    };

    pub fn new(lambda_neg: f64, lambda_pos: f64) -> Result<Self> {
        for (name, value) in [("lambda_neg", lambda_neg), ("lambda_pos", lambda_pos)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidHyperparameter { name, value });
            }
        }
        Ok(Self {
            lambda_neg,
            lambda_pos,
        })
    }

    pub fn lambda(&self, class: Class) -> f64 {
        match class {
            Class::Positive => self.lambda_pos,
            Class::Negative => self.lambda_neg,
        }
    }
}

/// Normalized two-class posterior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posterior {
    pub p_pos: f64,
    pub p_neg: f64,
    /// Positive-class log score minus negative-class log score.
    pub log_odds: f64,
}

impl Posterior {
    fn from_log_scores(pos: f64, neg: f64) -> Self {
        let m = pos.max(neg);
        let (ep, en) = ((pos - m).exp(), (neg - m).exp());
        Self {
            p_pos: ep / (ep + en),
            p_neg: en / (ep + en),
            log_odds: pos - neg,
        }
    }

    /// Positive iff `p_pos > 0.5`; an exact tie is negative.
    pub fn class(&self) -> Class {
        if self.p_pos > 0.5 {
            Class::Positive
        } else {
            Class::Negative
        }
    }
}

/// One training document reduced to its model features.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingCase {
    pub id: DocId,
    pub class: Class,
    features: Vec<u32>,
}

impl TrainingCase {
    pub fn feature_count(&self) -> usize {
        self.features.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountModel {
    n_pos: u32,
    n_neg: u32,
    /// Sorted feature tokens; a feature's index is its position here.
    vocab: Vec<String>,
    lookup: HashMap<String, u32>,
    pos_count: Vec<u32>,
    neg_count: Vec<u32>,
    cases: Vec<TrainingCase>,
}

impl CountModel {
    /// Counts over `positives` and `negatives`. Cases are kept in input order,
    /// positives first, for leave-one-out scoring.
    pub fn build<'a>(
        positives: impl IntoIterator<Item = &'a Document>,
        negatives: impl IntoIterator<Item = &'a Document>,
    ) -> Result<Self> {
        let positives: Vec<&Document> = positives.into_iter().collect();
        let negatives: Vec<&Document> = negatives.into_iter().collect();
        if positives.is_empty() {
            return Err(Error::EmptyPositives);
        }
        let pos_ids: BTreeSet<DocId> = positives.iter().map(|d| d.id).collect();
        if let Some(d) = negatives.iter().find(|d| pos_ids.contains(&d.id)) {
            return Err(Error::OverlappingTrainingSets(d.id));
        }

        let vocab: Vec<String> = positives
            .iter()
            .flat_map(|d| d.tokens.iter())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .cloned()
            .collect();
        let lookup: HashMap<String, u32> = vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();

        let mut model = Self {
            n_pos: 0,
            n_neg: 0,
            pos_count: vec![0; vocab.len()],
            neg_count: vec![0; vocab.len()],
            vocab,
            lookup,
            cases: Vec::with_capacity(positives.len() + negatives.len()),
        };
        let labelled = positives
            .iter()
            .map(|d| (*d, Class::Positive))
            .chain(negatives.iter().map(|d| (*d, Class::Negative)));
        for (doc, class) in labelled {
            let features = model.intersect(doc.tokens.iter().map(String::as_str));
            let counts = match class {
                Class::Positive => {
                    model.n_pos += 1;
                    &mut model.pos_count
                }
                Class::Negative => {
                    model.n_neg += 1;
                    &mut model.neg_count
                }
            };
            for &f in &features {
                counts[f as usize] += 1;
            }
            model.cases.push(TrainingCase {
                id: doc.id,
                class,
                features,
            });
        }
        Ok(model)
    }

    pub fn n_pos(&self) -> u32 {
        self.n_pos
    }

    pub fn n_neg(&self) -> u32 {
        self.n_neg
    }

    pub fn total(&self) -> u32 {
        self.n_pos + self.n_neg
    }

    pub fn n(&self, class: Class) -> u32 {
        match class {
            Class::Positive => self.n_pos,
            Class::Negative => self.n_neg,
        }
    }

    pub fn feature_count(&self) -> usize {
        self.vocab.len()
    }

    pub fn features(&self) -> impl Iterator<Item = &str> {
        self.vocab.iter().map(String::as_str)
    }

    pub fn is_feature(&self, token: &str) -> bool {
        self.lookup.contains_key(token)
    }

    /// Number of training documents of `class` containing `token`.
    pub fn count(&self, token: &str, class: Class) -> Option<u32> {
        let &f = self.lookup.get(token)?;
        Some(match class {
            Class::Positive => self.pos_count[f as usize],
            Class::Negative => self.neg_count[f as usize],
        })
    }

    pub fn cases(&self) -> &[TrainingCase] {
        &self.cases
    }

    /// Feature indices of the tokens that belong to the model, ascending.
    fn intersect<'t>(&self, tokens: impl IntoIterator<Item = &'t str>) -> Vec<u32> {
        let mut features: Vec<u32> = tokens
            .into_iter()
            .filter_map(|t| self.lookup.get(t).copied())
            .collect();
        features.sort_unstable();
        features.dedup();
        features
    }

    pub fn cond_prob(&self, token: &str, class: Class, hp: &Hyperparameters) -> Result<f64> {
        let n_tc = self
            .count(token, class)
            .ok_or_else(|| Error::UnknownFeature(token.to_owned()))?;
        let lambda = hp.lambda(class);
        Ok((lambda + f64::from(n_tc)) / (lambda + f64::from(self.n(class))))
    }

    pub fn class_prior(&self, class: Class, hp: &Hyperparameters) -> f64 {
        (hp.lambda(class) + f64::from(self.n(class)))
            / (hp.lambda_pos + hp.lambda_neg + f64::from(self.total()))
    }

    pub fn scorer(&self, hp: Hyperparameters) -> Scorer<'_> {
        Scorer::new(self, hp)
    }

    pub fn score<'t>(&self, tokens: impl IntoIterator<Item = &'t str>, hp: &Hyperparameters) -> Posterior {
        self.scorer(*hp).score(tokens)
    }

    /// Posterior of training case `index` under the model with that case
    /// removed from every count. The feature set stays as built.
    pub fn loo_score(&self, index: usize, hp: &Hyperparameters) -> Result<Posterior> {
        self.scorer(*hp).loo_score(index)
    }

    pub fn classify<'t>(&self, tokens: impl IntoIterator<Item = &'t str>, hp: &Hyperparameters) -> Class {
        self.score(tokens, hp).class()
    }

    /// Plain-text dump: class counts, then one `token\tpos\tneg` line per
    /// feature in token order.
    pub fn to_manifest(&self) -> String {
        let mut out = format!("n_pos\t{}\nn_neg\t{}\n", self.n_pos, self.n_neg);
        for (i, token) in self.vocab.iter().enumerate() {
            let _ = writeln!(out, "{token}\t{}\t{}", self.pos_count[i], self.neg_count[i]);
        }
        out
    }

    /// Per-token counts keyed by token, for inspection and tests.
    pub fn counts(&self) -> BTreeMap<&str, (u32, u32)> {
        self.vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), (self.pos_count[i], self.neg_count[i])))
            .collect()
    }
}

/// A model paired with fixed hyperparameters, with `ln(λ_c + k)` tabulated
/// for every count `k` that can occur. Build one per hyperparameter pair and
/// reuse it across many cases.
#[derive(Debug, Clone)]
pub struct Scorer<'m> {
    model: &'m CountModel,
    hp: Hyperparameters,
    ln_pos: Vec<f64>,
    ln_neg: Vec<f64>,
}

impl<'m> Scorer<'m> {
    fn new(model: &'m CountModel, hp: Hyperparameters) -> Self {
        let table = |lambda: f64, n: u32| (0..=n).map(|k| (lambda + f64::from(k)).ln()).collect();
        Self {
            model,
            hp,
            ln_pos: table(hp.lambda_pos, model.n_pos),
            ln_neg: table(hp.lambda_neg, model.n_neg),
        }
    }

    pub fn hyperparameters(&self) -> Hyperparameters {
        self.hp
    }

    pub fn score<'t>(&self, tokens: impl IntoIterator<Item = &'t str>) -> Posterior {
        let features = self.model.intersect(tokens);
        self.score_features(&features, None)
    }

    pub fn loo_score(&self, index: usize) -> Result<Posterior> {
        let case = self.model.cases.get(index).ok_or(Error::CaseOutOfRange {
            index,
            len: self.model.cases.len(),
        })?;
        Ok(self.score_features(&case.features, Some(case.class)))
    }

    /// `held_out` names the class of a training case whose own features are
    /// `features`; its contribution is subtracted from every count touched.
    fn score_features(&self, features: &[u32], held_out: Option<Class>) -> Posterior {
        let m = self.model;
        let drop = |class: Class| u32::from(held_out == Some(class));
        let (d_pos, d_neg) = (drop(Class::Positive), drop(Class::Negative));
        let n_pos = m.n_pos - d_pos;
        let n_neg = m.n_neg - d_neg;
        let total = f64::from(n_pos + n_neg);
        let ln_norm = (self.hp.lambda_pos + self.hp.lambda_neg + total).ln();

        let ln_pos_class = self.ln_pos[n_pos as usize];
        let ln_neg_class = self.ln_neg[n_neg as usize];
        let mut pos = ln_pos_class - ln_norm;
        let mut neg = ln_neg_class - ln_norm;
        for &f in features {
            let f = f as usize;
            pos += self.ln_pos[(m.pos_count[f] - d_pos) as usize] - ln_pos_class;
            neg += self.ln_neg[(m.neg_count[f] - d_neg) as usize] - ln_neg_class;
        }
        Posterior::from_log_scores(pos, neg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;
    use proptest::prelude::*;

    fn doc(id: DocId, text: &str) -> Document {
        Document::from_text(id, format!("d{id}"), text)
    }

    fn hp(neg: f64, pos: f64) -> Hyperparameters {
        Hyperparameters::new(neg, pos).unwrap()
    }

    #[test]
    fn counts_over_positive_union() {
        let pos = [doc(1, "a b"), doc(2, "b c")];
        let neg = [doc(3, "b d")];
        let m = CountModel::build(&pos, &neg).unwrap();
        assert_eq!(m.features().collect::<Vec<_>>(), vec!["a", "b", "c"]);
        let counts = m.counts();
        assert_eq!(counts["a"], (1, 0));
        assert_eq!(counts["b"], (2, 1));
        assert_eq!(counts["c"], (1, 0));
        assert!(m.count("d", Class::Negative).is_none());
        assert_eq!((m.n_pos(), m.n_neg(), m.total()), (2, 1, 3));
    }

    #[test]
    fn no_negatives_is_fine() {
        let m = CountModel::build(&[doc(1, "a")], &[]).unwrap();
        assert_eq!(m.n_neg(), 0);
        let p = m.score(["a"], &Hyperparameters::BAYES_LAPLACE);
        assert!(p.p_pos.is_finite() && p.p_pos > 0.5);
    }

    #[test]
    fn build_errors() {
        assert!(matches!(
            CountModel::build(&[], &[doc(1, "a")]),
            Err(Error::EmptyPositives)
        ));
        assert!(matches!(
            CountModel::build(&[doc(1, "a")], &[doc(1, "b")]),
            Err(Error::OverlappingTrainingSets(1))
        ));
    }

    #[test]
    fn hyperparameters_must_be_positive() {
        assert!(Hyperparameters::new(0.0, 1.0).is_err());
        assert!(Hyperparameters::new(1.0, f64::NAN).is_err());
        assert!(Hyperparameters::new(1.0, -2.0).is_err());
        assert!(Hyperparameters::new(0.01, 200.0).is_ok());
    }

    /// Model with n(c₊) = 9, n(c₋) = 50 and one token `t` seen in 3 positives.
    fn nine_fifty() -> CountModel {
        let pos: Vec<Document> = (0..9).map(|i| doc(i, if i < 3 { "t x" } else { "x" })).collect();
        let neg: Vec<Document> = (100..150).map(|i| doc(i, "y")).collect();
        CountModel::build(&pos, &neg).unwrap()
    }

    #[test]
    fn cond_prob_values() {
        let m = nine_fifty();
        assert_eq!(m.cond_prob("t", Class::Positive, &hp(1.0, 1.0)).unwrap(), 0.4);
        assert_eq!(m.cond_prob("t", Class::Negative, &hp(200.0, 1.0)).unwrap(), 0.8);
        // every positive contains x
        assert_eq!(m.cond_prob("x", Class::Positive, &hp(1.0, 1.0)).unwrap(), 1.0);
        assert!(matches!(
            m.cond_prob("y", Class::Negative, &hp(1.0, 1.0)),
            Err(Error::UnknownFeature(_))
        ));
    }

    #[test]
    fn class_prior_values() {
        let pos: Vec<Document> = (0..5).map(|i| doc(i, "a")).collect();
        let neg: Vec<Document> = (5..10).map(|i| doc(i, "b")).collect();
        let m = CountModel::build(&pos, &neg).unwrap();
        assert_eq!(m.class_prior(Class::Positive, &hp(1.0, 1.0)), 0.5);

        // coin toss: zero heads observed in N = 2 tosses gives p(head) = 1/4.
        // Holding out an empty positive leaves n(c₊) = 0, N = 2.
        let m = CountModel::build(&[doc(0, "")], &[doc(1, "b"), doc(2, "c")]).unwrap();
        let p = m.loo_score(0, &hp(1.0, 1.0)).unwrap();
        assert_eq!(p.p_pos, 0.25);
    }

    #[test]
    fn priors_sum_to_one() {
        let m = nine_fifty();
        for h in [hp(22.0, 4.0), hp(0.01, 200.0), hp(1.0, 1.0)] {
            let s = m.class_prior(Class::Positive, &h) + m.class_prior(Class::Negative, &h);
            assert!((s - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_intersection_gives_prior() {
        let m = nine_fifty();
        let h = hp(3.0, 2.0);
        let p = m.score(["unseen", "words"], &h);
        let pp = m.class_prior(Class::Positive, &h);
        let pn = m.class_prior(Class::Negative, &h);
        assert!((p.p_pos - pp / (pp + pn)).abs() < 1e-15);
    }

    #[test]
    fn discriminative_token_raises_posterior() {
        let pos: Vec<Document> = (0..5).map(|i| doc(i, "signal")).collect();
        let neg: Vec<Document> = (5..10).map(|i| doc(i, "noise")).collect();
        let m = CountModel::build(&pos, &neg).unwrap();
        assert!(m.score(["signal"], &Hyperparameters::BAYES_LAPLACE).p_pos > 0.5);
    }

    #[test]
    fn tie_is_negative() {
        let pos: Vec<Document> = (0..5).map(|i| doc(i, "a")).collect();
        let neg: Vec<Document> = (5..10).map(|i| doc(i, "b")).collect();
        let m = CountModel::build(&pos, &neg).unwrap();
        let p = m.score(["zzz"], &Hyperparameters::BAYES_LAPLACE);
        assert_eq!(p.p_pos, 0.5);
        assert_eq!(p.class(), Class::Negative);
        let nudged = Posterior::from_log_scores(0.04, 0.0);
        assert!(nudged.p_pos > 0.5 && nudged.p_pos < 0.52);
        assert_eq!(nudged.class(), Class::Positive);
    }

    #[test]
    fn coin_toss_loo() {
        // one "head" (positive) and one "tail" (negative); hold out the tail
        let m = CountModel::build(&[doc(0, "h")], &[doc(1, "t")]).unwrap();
        let h = hp(1.0, 1.0);
        let held = 1;
        assert_eq!(m.cases()[held].class, Class::Negative);
        // p(tail) under the reduced model = (1 + 1 - 1) / (2 + 2 - 1)
        let n_tail = m.n_neg() - 1;
        let p_tail = (h.lambda_neg + f64::from(n_tail)) / (h.lambda_pos + h.lambda_neg + f64::from(m.total() - 1));
        assert!((p_tail - 1.0 / 3.0).abs() < 1e-15);
        // the held-out tail has no model features, so its posterior is the reduced prior
        let p = m.loo_score(held, &h).unwrap();
        assert!((p.p_neg - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn loo_drops_sole_occurrence() {
        let pos = [doc(0, "rare common"), doc(1, "common"), doc(2, "common")];
        let m = CountModel::build(&pos, &[doc(3, "other")]).unwrap();
        let h = hp(1.0, 2.0);
        // reduced model: rare has positive count 0, n_pos = 2
        let expected = h.lambda_pos / (h.lambda_pos + 2.0);
        let reduced = CountModel::build(&pos[1..], &[doc(3, "other")]).unwrap();
        assert!(!reduced.is_feature("rare"));
        let loo = m.loo_score(0, &h).unwrap();
        let log_pos = ((h.lambda_pos + 2.0) / (h.lambda_pos + h.lambda_neg + 3.0)).ln()
            + expected.ln()
            + 1.0f64.ln();
        let log_neg = ((h.lambda_neg + 1.0) / (h.lambda_pos + h.lambda_neg + 3.0)).ln()
            + (h.lambda_neg / (h.lambda_neg + 1.0)).ln() * 2.0;
        assert!((loo.log_odds - (log_pos - log_neg)).abs() < 1e-12);
        // model itself is untouched
        assert_eq!(m.count("rare", Class::Positive), Some(1));
    }

    #[test]
    fn loo_index_out_of_range() {
        let m = nine_fifty();
        assert!(matches!(
            m.loo_score(59, &hp(1.0, 1.0)),
            Err(Error::CaseOutOfRange { index: 59, len: 59 })
        ));
    }

    #[test]
    fn manifest_lists_sorted_counts() {
        let m = CountModel::build(&[doc(1, "b a"), doc(2, "b")], &[doc(3, "b z")]).unwrap();
        assert_eq!(m.to_manifest(), "n_pos\t2\nn_neg\t1\na\t1\t0\nb\t2\t1\n");
    }

    fn fixture_docs() -> (Vec<Document>, Vec<Document>) {
        let pos = vec![
            doc(1, "learning model data neural"),
            doc(2, "model training data"),
            doc(3, "neural network learning gradient"),
        ];
        let neg = vec![
            doc(4, "football match data"),
            doc(5, "river mountain model"),
            doc(6, "election vote learning"),
        ];
        (pos, neg)
    }

    proptest! {
        #[test]
        fn posterior_is_normalized(neg in 0.01f64..200.0, pos in 0.01f64..200.0, mask in 0u32..512) {
            let (p, n) = fixture_docs();
            let m = CountModel::build(&p, &n).unwrap();
            let vocab: Vec<&str> = m.features().collect();
            let case: Vec<&str> = vocab.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, t)| *t).collect();
            let post = m.score(case.iter().copied(), &hp(neg, pos));
            prop_assert!((post.p_pos + post.p_neg - 1.0).abs() < 1e-12);
            prop_assert_eq!(post.p_pos > 0.5, post.log_odds > 0.0);
        }

        #[test]
        fn outside_tokens_are_ignored(extra in proptest::collection::btree_set("[q-z]{3,6}", 0..8)) {
            let (p, n) = fixture_docs();
            let m = CountModel::build(&p, &n).unwrap();
            let h = hp(4.0, 0.5);
            let base = tokenize("model data gradient");
            let mut with_extra = base.clone();
            with_extra.extend(extra.into_iter().filter(|t| !m.is_feature(t)));
            let a = m.score(base.iter().map(String::as_str), &h);
            let b = m.score(with_extra.iter().map(String::as_str), &h);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn cond_prob_in_unit_interval(neg in 0.01f64..200.0, pos in 0.01f64..200.0) {
            let (p, n) = fixture_docs();
            let m = CountModel::build(&p, &n).unwrap();
            let h = hp(neg, pos);
            for t in m.features() {
                for c in [Class::Positive, Class::Negative] {
                    let v = m.cond_prob(t, c, &h).unwrap();
                    prop_assert!(v > 0.0 && v <= 1.0);
                }
            }
        }
    }
}
