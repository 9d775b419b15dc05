//! Tokenized documents, sharded corpora and category membership.

mod store;
pub mod wiki;

use std::collections::{btree_map, BTreeMap, BTreeSet};

use crate::error::{Error, Result};

pub use store::{load_corpus, store_corpus};

pub type DocId = u64;

/// Default number of shards for a full-size corpus.
pub const DEFAULT_SHARDS: usize = 1000;

/// Splits on whitespace, lowercases, strips non-alphanumeric characters from
/// both ends of every piece and drops pieces that end up empty. Interior
/// punctuation survives ("2.0", "don't").
pub fn tokenize(text: &str) -> BTreeSet<String> {
    text.split_whitespace()
        .filter_map(|piece| {
            let lower = piece.to_lowercase();
            let token = lower.trim_matches(|c: char| !c.is_alphanumeric());
            (!token.is_empty()).then(|| token.to_owned())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: DocId,
    pub title: String,
    pub tokens: BTreeSet<String>,
}

impl Document {
    pub fn new(id: DocId, title: impl Into<String>, tokens: BTreeSet<String>) -> Self {
        Self {
            id,
            title: title.into(),
            tokens,
        }
    }

    pub fn from_text(id: DocId, title: impl Into<String>, text: &str) -> Self {
        Self::new(id, title, tokenize(text))
    }
}

/// Maps a document id onto a shard. Stable across runs and platforms.
pub fn shard_of(id: DocId, shards: usize) -> usize {
    // splitmix64 finalizer
    let mut z = id.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    (z % shards as u64) as usize
}

/// Documents partitioned into a fixed number of shards by [`shard_of`].
/// Immutable once built; share it by reference across workers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    shards: Vec<BTreeMap<DocId, Document>>,
    doc_count: usize,
}

impl Corpus {
    pub fn new(shards: usize) -> Self {
        assert!(shards > 0, "a corpus needs at least one shard");
        Self {
            shards: vec![BTreeMap::new(); shards],
            doc_count: 0,
        }
    }

    pub fn from_documents(
        shards: usize,
        docs: impl IntoIterator<Item = Document>,
    ) -> Result<Self> {
        let mut corpus = Self::new(shards);
        for doc in docs {
            corpus.insert(doc)?;
        }
        Ok(corpus)
    }

    pub fn insert(&mut self, doc: Document) -> Result<()> {
        let shard = shard_of(doc.id, self.shards.len());
        match self.shards[shard].entry(doc.id) {
            btree_map::Entry::Occupied(_) => Err(Error::DuplicateId(doc.id)),
            btree_map::Entry::Vacant(slot) => {
                slot.insert(doc);
                self.doc_count += 1;
                Ok(())
            }
        }
    }

    pub fn get(&self, id: DocId) -> Option<&Document> {
        self.shards[shard_of(id, self.shards.len())].get(&id)
    }

    pub fn contains(&self, id: DocId) -> bool {
        self.get(id).is_some()
    }

    pub fn len(&self) -> usize {
        self.doc_count
    }

    pub fn is_empty(&self) -> bool {
        self.doc_count == 0
    }

    pub fn shard_count(&self) -> usize {
        self.shards.len()
    }

    /// Documents of one shard in ascending id order.
    pub fn shard(&self, index: usize) -> impl Iterator<Item = &Document> {
        self.shards[index].values()
    }

    /// All documents, shard by shard.
    pub fn documents(&self) -> impl Iterator<Item = &Document> {
        self.shards.iter().flat_map(|s| s.values())
    }

    /// All ids in ascending order.
    pub fn sorted_ids(&self) -> Vec<DocId> {
        let mut ids: Vec<DocId> = self.shards.iter().flat_map(|s| s.keys().copied()).collect();
        ids.sort_unstable();
        ids
    }
}

/// Direct category membership: category name to member document ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CategoryIndex {
    categories: BTreeMap<String, BTreeSet<DocId>>,
}

impl CategoryIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, category: impl Into<String>, id: DocId) {
        self.categories.entry(category.into()).or_default().insert(id);
    }

    pub fn members(&self, category: &str) -> Option<&BTreeSet<DocId>> {
        self.categories.get(category)
    }

    pub fn require(&self, category: &str) -> Result<&BTreeSet<DocId>> {
        self.members(category)
            .ok_or_else(|| Error::UnknownCategory(category.to_owned()))
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BTreeSet<DocId>)> {
        self.categories.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Fails on the first member id that is not stored in `corpus`.
    pub fn validate(&self, corpus: &Corpus) -> Result<()> {
        for members in self.categories.values() {
            if let Some(&id) = members.iter().find(|&&id| !corpus.contains(id)) {
                return Err(Error::UnknownDocument(id));
            }
        }
        Ok(())
    }
}
