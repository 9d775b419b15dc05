//! Generated corpora with a known category and hidden unlabeled members.
//!
//! Every document belongs to one topic, a Zipf distribution over a random
//! subset of the vocabulary, and draws `topic_share` of its tokens from it.
//! The rest come from a Zipf background over the whole vocabulary. Topic 0 is
//! the category; the other topics make up the rest of the corpus, so a small
//! negative sample sees each of them only a few times.
//!
//! Lengths are log-uniform between `min_len` and `max_len` draws. The default
//! floor of 50 draws stands in for the ingest filter on short articles.

use std::collections::{BTreeSet, HashSet};

use crate::corpus::{CategoryIndex, Corpus, DocId, Document};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub vocab: usize,
    pub topic_tokens: usize,
    /// Labeled category members.
    pub members: usize,
    /// Unlabeled documents; `hidden_rate` of them (rounded) are members.
    pub pool: usize,
    pub hidden_rate: f64,
    /// Share of a member document's draws taken from the topic distribution.
    pub topic_share: f64,
    /// Topics outside the category.
    pub background_topics: usize,
    /// Share of each other topic's words borrowed from the category topic.
    pub overlap: f64,
    pub min_len: usize,
    pub max_len: usize,
    pub zipf_exponent: f64,
    pub shards: usize,
    pub category: String,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            seed: 2020,
            vocab: 2000,
            topic_tokens: 150,
            members: 200,
            pool: 20_000,
            hidden_rate: 0.01,
            topic_share: 0.4,
            background_topics: 50,
            overlap: 0.0,
            min_len: 50,
            max_len: 1000,
            zipf_exponent: 1.0,
            shards: 16,
            category: "Synthetic topic".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    pub index: CategoryIndex,
    pub category: String,
    /// Pool documents generated as members but left out of the index.
    pub hidden: BTreeSet<DocId>,
}

impl SyntheticCorpus {
    pub fn truth(&self) -> HashSet<DocId> {
        self.hidden.iter().copied().collect()
    }
}

/// Cumulative weights for inverse-CDF draws.
struct Sampler {
    cumulative: Vec<f64>,
}

impl Sampler {
    fn zipf(n: usize, exponent: f64) -> Self {
        let mut total = 0.0;
        let cumulative = (0..n)
            .map(|i| {
                total += 1.0 / ((i + 1) as f64).powf(exponent);
                total
            })
            .collect();
        Self { cumulative }
    }

    fn draw(&self, rng: &mut Rng) -> usize {
        let total = *self.cumulative.last().expect("nonempty sampler");
        let u = rng::unit(rng) * total;
        self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1)
    }
}

/// Word lists of every topic, category first, each in Zipf rank order.
fn build_topics(rng: &mut Rng, config: &SyntheticConfig) -> Vec<Vec<usize>> {
    let all_words: Vec<usize> = (0..config.vocab).collect();
    let category_words = rng::sample_without_replacement(rng, &all_words, config.topic_tokens);
    let borrowed = ((config.topic_tokens as f64) * config.overlap).round() as usize;
    let in_category: BTreeSet<usize> = category_words.iter().copied().collect();
    let rest: Vec<usize> = all_words.iter().copied().filter(|w| !in_category.contains(w)).collect();
    let mut topics = vec![category_words.clone()];
    for _ in 0..config.background_topics {
        let mut words = rng::sample_without_replacement(rng, &category_words, borrowed);
        words.extend(rng::sample_without_replacement(rng, &rest, config.topic_tokens - words.len()));
        let n = words.len();
        topics.push(rng::sample_without_replacement(rng, &words, n));
    }
    topics
}

pub fn generate(config: &SyntheticConfig) -> Result<SyntheticCorpus> {
    if config.vocab == 0 || config.topic_tokens == 0 || 2 * config.topic_tokens > config.vocab {
        return Err(Error::InvalidArgument("topic tokens must be nonempty and at most half the vocabulary".into()));
    }
    if config.members == 0 || config.min_len == 0 || config.min_len > config.max_len {
        return Err(Error::InvalidArgument("bad synthetic corpus sizes".into()));
    }
    for (name, v) in [("hidden_rate", config.hidden_rate), ("topic_share", config.topic_share), ("overlap", config.overlap)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidArgument(format!("{name} {v} outside [0, 1]")));
        }
    }
    let mut rng = rng::seeded(config.seed);
    let vocab: Vec<String> = (0..config.vocab).map(|i| format!("w{i:05}")).collect();
    let background = Sampler::zipf(config.vocab, config.zipf_exponent);
    let topics = build_topics(&mut rng, config);
    let topic = Sampler::zipf(config.topic_tokens, config.zipf_exponent);

    let total = config.members + config.pool;
    let ids: Vec<DocId> = rng::sample_without_replacement(&mut rng, &(0..total as DocId).collect::<Vec<_>>(), total);

    let make_doc = |rng: &mut Rng, member: bool, id: DocId| {
        let words = if member || config.background_topics == 0 {
            &topics[0]
        } else {
            &topics[1 + rng::below(rng, config.background_topics as u64) as usize]
        };
        let share = if member || config.background_topics > 0 { config.topic_share } else { 0.0 };
        let (lo, hi) = ((config.min_len as f64).ln(), ((config.max_len + 1) as f64).ln());
        let len = ((lo + rng::unit(rng) * (hi - lo)).exp() as usize).clamp(config.min_len, config.max_len);
        let tokens: BTreeSet<String> = (0..len)
            .map(|_| {
                if rng::unit(rng) < share {
                    vocab[words[topic.draw(rng)]].clone()
                } else {
                    vocab[background.draw(rng)].clone()
                }
            })
            .collect();
        Document::new(id, format!("Document {id:06}"), tokens)
    };

    let hidden_count = (config.pool as f64 * config.hidden_rate).round() as usize;
    let hidden_slots: BTreeSet<usize> = rng::sample_without_replacement(
        &mut rng,
        &(config.members..total).collect::<Vec<_>>(),
        hidden_count.min(config.pool),
    )
    .into_iter()
    .collect();

    let mut corpus = Corpus::new(config.shards);
    let mut index = CategoryIndex::new();
    let mut hidden = BTreeSet::new();
    for (i, &id) in ids.iter().enumerate() {
        let labeled = i < config.members;
        let member = labeled || hidden_slots.contains(&i);
        corpus.insert(make_doc(&mut rng, member, id))?;
        if labeled {
            index.add(config.category.clone(), id);
        } else if member {
            hidden.insert(id);
        }
    }
    Ok(SyntheticCorpus {
        corpus,
        index,
        category: config.category.clone(),
        hidden,
    })
}
