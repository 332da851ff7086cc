//! Immutable inverted index with the term and document statistics the
//! predictors consume.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::NormalizationPipeline;

const INDEX_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    #[serde(rename = "id")]
    pub doc_id: String,
    pub text: String,
    pub category: String,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, text: impl Into<String>, category: impl Into<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            text: text.into(),
            category: category.into(),
        }
    }
}

/// Dense document ordinal. Ordinals follow `doc_id` order.
pub type DocOrd = u32;
pub type TermId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc: DocOrd,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermStats {
    /// Number of documents containing the term (f_t).
    pub doc_freq: u32,
    /// Occurrences over the whole collection (f_ct).
    pub coll_freq: u64,
    /// Sorted by document ordinal, hence by `doc_id`.
    pub postings: Vec<Posting>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocInfo {
    pub doc_id: String,
    pub category: String,
    pub length: u32,
    /// (term, f_dt) sorted by term id.
    pub terms: Vec<(TermId, u32)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusIndex {
    version: u32,
    pipeline: NormalizationPipeline,
    docs: Vec<DocInfo>,
    vocabulary: Vec<String>,
    stats: Vec<TermStats>,
    total_tokens: u64,
    categories: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexSummary {
    pub num_docs: usize,
    pub vocabulary_size: usize,
    pub total_tokens: u64,
}

impl CorpusIndex {
    pub fn build<'a, I>(documents: I, pipeline: NormalizationPipeline) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Document>,
    {
        let mut docs: Vec<&Document> = documents.into_iter().collect();
        if docs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        docs.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        if let Some(w) = docs.windows(2).find(|w| w[0].doc_id == w[1].doc_id) {
            return Err(Error::DuplicateDocId(w[0].doc_id.clone()));
        }

        let mut per_doc: Vec<BTreeMap<String, u32>> = Vec::with_capacity(docs.len());
        let mut lengths = Vec::with_capacity(docs.len());
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        for (ord, doc) in docs.iter().enumerate() {
            let tokens = pipeline.normalize(&doc.text);
            lengths.push(tokens.len() as u32);
            let mut counts: BTreeMap<String, u32> = BTreeMap::new();
            for tok in tokens {
                *counts.entry(tok).or_default() += 1;
            }
            for (term, &tf) in &counts {
                postings
                    .entry(term.clone())
                    .or_default()
                    .push(Posting { doc: ord as DocOrd, tf });
            }
            per_doc.push(counts);
        }

        let vocabulary: Vec<String> = postings.keys().cloned().collect();
        let stats: Vec<TermStats> = postings
            .into_values()
            .map(|postings| TermStats {
                doc_freq: postings.len() as u32,
                coll_freq: postings.iter().map(|p| u64::from(p.tf)).sum(),
                postings,
            })
            .collect();
        let total_tokens = lengths.iter().map(|&l| u64::from(l)).sum();

        let lookup = |term: &str| vocabulary.binary_search_by(|t| t.as_str().cmp(term)).unwrap() as TermId;
        let infos = docs
            .iter()
            .zip(per_doc)
            .zip(lengths)
            .map(|((doc, counts), length)| DocInfo {
                doc_id: doc.doc_id.clone(),
                category: doc.category.clone(),
                length,
                terms: counts.iter().map(|(t, &tf)| (lookup(t), tf)).collect(),
            })
            .collect();
        let categories = docs.iter().map(|d| d.category.clone()).collect();

        Ok(Self {
            version: INDEX_FORMAT_VERSION,
            pipeline,
            docs: infos,
            vocabulary,
            stats,
            total_tokens,
            categories,
        })
    }

    pub fn pipeline(&self) -> &NormalizationPipeline {
        &self.pipeline
    }

    /// N.
    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    /// |C|.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn avg_doc_len(&self) -> f64 {
        self.total_tokens as f64 / self.docs.len() as f64
    }

    pub fn term_id(&self, term: &str) -> Option<TermId> {
        self.vocabulary
            .binary_search_by(|t| t.as_str().cmp(term))
            .ok()
            .map(|i| i as TermId)
    }

    pub fn term(&self, id: TermId) -> &str {
        &self.vocabulary[id as usize]
    }

    /// Statistics for an already-normalized term; `None` when out of vocabulary.
    pub fn term_stats(&self, term: &str) -> Option<&TermStats> {
        self.term_id(term).map(|id| &self.stats[id as usize])
    }

    pub fn stats_by_id(&self, id: TermId) -> &TermStats {
        &self.stats[id as usize]
    }

    pub fn docs(&self) -> &[DocInfo] {
        &self.docs
    }

    pub fn doc(&self, ord: DocOrd) -> &DocInfo {
        &self.docs[ord as usize]
    }

    pub fn doc_ord(&self, doc_id: &str) -> Option<DocOrd> {
        self.docs
            .binary_search_by(|d| d.doc_id.as_str().cmp(doc_id))
            .ok()
            .map(|i| i as DocOrd)
    }

    pub fn categories(&self) -> &BTreeSet<String> {
        &self.categories
    }

    pub fn summary(&self) -> IndexSummary {
        IndexSummary {
            num_docs: self.num_docs(),
            vocabulary_size: self.vocabulary.len(),
            total_tokens: self.total_tokens,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let index: Self = serde_json::from_str(s)?;
        if index.version != INDEX_FORMAT_VERSION {
            return Err(Error::ModelVersion(index.version));
        }
        Ok(index)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
