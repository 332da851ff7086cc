//! Original and personalized rankings.
//!
//! The original ranker is BM25; the personalized run re-scores the head of
//! the original ranking by interpolating the normalized retrieval score with
//! the cosine between each document and the user profile.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::index::{CorpusIndex, DocOrd};
use crate::predictors::{tfidf_weight, Query, UserProfile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredDoc {
    pub doc_id: String,
    pub score: f64,
}

/// Documents in descending score order, ties broken by ascending `doc_id`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    query_key: String,
    entries: Vec<ScoredDoc>,
}

impl Ranking {
    pub fn new(query_key: impl Into<String>, scored: Vec<(String, f64)>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(scored.len());
        for (id, score) in &scored {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateDocId(id.clone()));
            }
            if !score.is_finite() {
                return Err(invalid("score", format!("document `{id}` has non-finite score")));
            }
        }
        let mut entries: Vec<ScoredDoc> = scored
            .into_iter()
            .map(|(doc_id, score)| ScoredDoc { doc_id, score })
            .collect();
        entries.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.doc_id.cmp(&b.doc_id)));
        Ok(Self {
            query_key: query_key.into(),
            entries,
        })
    }

    pub fn empty(query_key: impl Into<String>) -> Self {
        Self {
            query_key: query_key.into(),
            entries: Vec::new(),
        }
    }

    pub fn query_key(&self) -> &str {
        &self.query_key
    }

    pub fn entries(&self) -> &[ScoredDoc] {
        &self.entries
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.doc_id.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25 {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25 {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

impl Bm25 {
    pub fn idf(&self, doc_freq: u32, num_docs: usize) -> f64 {
        let n = f64::from(doc_freq);
        (1.0 + (num_docs as f64 - n + 0.5) / (n + 0.5)).ln()
    }

    pub fn term_score(&self, tf: u32, doc_len: u32, avg_doc_len: f64, idf: f64) -> f64 {
        let tf = f64::from(tf);
        let norm = 1.0 - self.b + self.b * f64::from(doc_len) / avg_doc_len;
        idf * tf * (self.k1 + 1.0) / (tf + self.k1 * norm)
    }
}

/// Top-`depth` documents for `q` under BM25. Each query token contributes,
/// so repeated terms count repeatedly.
pub fn rank(q: &Query, ix: &CorpusIndex, depth: usize) -> Ranking {
    rank_with(q, ix, depth, Bm25::default())
}

pub fn rank_with(q: &Query, ix: &CorpusIndex, depth: usize, bm25: Bm25) -> Ranking {
    let mut scores: BTreeMap<DocOrd, f64> = BTreeMap::new();
    let avg_len = ix.avg_doc_len();
    for tok in q.tokens() {
        let Some(stats) = ix.term_stats(tok) else { continue };
        let idf = bm25.idf(stats.doc_freq, ix.num_docs());
        for p in &stats.postings {
            *scores.entry(p.doc).or_default() += bm25.term_score(p.tf, ix.doc(p.doc).length, avg_len, idf);
        }
    }
    // Ordinals follow doc_id order, so the ordinal is a valid tie-break.
    let mut scored: Vec<(DocOrd, f64)> = scores.into_iter().collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(depth);
    Ranking {
        query_key: q.raw().to_owned(),
        entries: scored
            .into_iter()
            .map(|(ord, score)| ScoredDoc {
                doc_id: ix.doc(ord).doc_id.clone(),
                score,
            })
            .collect(),
    }
}

/// Interpolation re-ranker standing in for the personalization strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersonalizationStrategy {
    /// Weight of the profile cosine, in [0, 1].
    pub beta: f64,
    /// Number of leading documents that get re-scored.
    pub depth: usize,
}

impl Default for PersonalizationStrategy {
    fn default() -> Self {
        Self { beta: 0.5, depth: 100 }
    }
}

impl PersonalizationStrategy {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(invalid("beta", format!("{} is outside [0, 1]", self.beta)));
        }
        if self.depth == 0 {
            return Err(invalid("rerank depth", "must be at least 1"));
        }
        Ok(())
    }
}

/// Cosine between a document's tf-idf vector and the profile weights.
pub fn doc_profile_cosine(ix: &CorpusIndex, doc: DocOrd, profile: &UserProfile) -> f64 {
    if profile.is_empty() {
        return 0.0;
    }
    let n = ix.num_docs();
    let mut dot = 0.0;
    let mut doc_norm = 0.0;
    for &(term, tf) in &ix.doc(doc).terms {
        let w = tfidf_weight(tf, ix.stats_by_id(term).doc_freq, n);
        doc_norm += w * w;
        if let Some(wp) = profile.weights().get(ix.term(term)) {
            dot += w * wp;
        }
    }
    if doc_norm == 0.0 {
        return 0.0;
    }
    let prof_norm = profile.weights().values().map(|w| w * w).sum::<f64>().sqrt();
    (dot / (doc_norm.sqrt() * prof_norm)).clamp(0.0, 1.0)
}

/// Re-scores the top `strategy.depth` documents as
/// `(1−β)·minmax(score) + β·cosine(doc, profile)`.
///
/// Re-scored documents are shifted into [1, 2] and the remaining tail is
/// mapped monotonically into [0, 0.5], so the tail keeps its relative order
/// below the re-ranked block.
pub fn personalize_rerank(
    r: &Ranking,
    p: &UserProfile,
    ix: &CorpusIndex,
    strategy: PersonalizationStrategy,
) -> Result<Ranking> {
    strategy.validate()?;
    let split = strategy.depth.min(r.len());
    let (head, tail) = r.entries.split_at(split);

    let (hmin, hmax) = min_max(head.iter().map(|e| e.score));
    let (gmin, gmax) = min_max(r.entries.iter().map(|e| e.score));

    let mut scored = Vec::with_capacity(r.len());
    for e in head {
        let norm = if hmax > hmin {
            (e.score - hmin) / (hmax - hmin)
        } else {
            1.0
        };
        let ord = ix.doc_ord(&e.doc_id).ok_or_else(|| Error::UnknownId {
            kind: "document",
            id: e.doc_id.clone(),
        })?;
        let cos = doc_profile_cosine(ix, ord, p);
        scored.push((
            e.doc_id.clone(),
            1.0 + (1.0 - strategy.beta) * norm + strategy.beta * cos,
        ));
    }
    for e in tail {
        let norm = if gmax > gmin {
            0.5 * (e.score - gmin) / (gmax - gmin)
        } else {
            0.0
        };
        scored.push((e.doc_id.clone(), norm));
    }
    Ranking::new(r.query_key.clone(), scored)
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}
