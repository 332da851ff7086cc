//! Seeded synthetic corpora for desk-scale experiments.
//!
//! Each category owns a disjoint core vocabulary; a shared pool of noise
//! terms is mixed into documents at `noise_ratio`. Term frequencies inside a
//! vocabulary follow a Zipf-like 1/rank law.

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::index::Document;
use crate::predictors::UserProfile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub categories: usize,
    pub docs_per_category: usize,
    pub vocab_per_category: usize,
    /// Fraction of document tokens drawn from the shared noise pool.
    pub noise_ratio: f64,
    pub queries_per_category: usize,
    pub doc_len: (usize, usize),
    pub query_len: (usize, usize),
    pub profile_terms: usize,
    /// Fraction of profile terms borrowed from a neighbouring category, so
    /// that personalization can also promote off-topic documents.
    pub profile_noise: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            categories: 8,
            docs_per_category: 60,
            vocab_per_category: 120,
            noise_ratio: 0.3,
            queries_per_category: 12,
            doc_len: (30, 80),
            query_len: (3, 8),
            profile_terms: 15,
            profile_noise: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub documents: Vec<Document>,
    pub profiles: Vec<UserProfile>,
    /// (query id, query text)
    pub queries: Vec<(String, String)>,
}

pub fn category_name(c: usize) -> String {
    format!("area{c}")
}

// Digit-terminated pseudo-words survive stemming unchanged.
fn core_term(category: usize, j: usize) -> String {
    format!("k{category}w{j}")
}

fn noise_term(j: usize) -> String {
    format!("n{j}")
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("categories", self.categories),
            ("docs_per_category", self.docs_per_category),
            ("vocab_per_category", self.vocab_per_category),
            ("queries_per_category", self.queries_per_category),
            ("profile_terms", self.profile_terms),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(invalid(name, "must be at least 1"));
            }
        }
        for (name, v) in [("noise_ratio", self.noise_ratio), ("profile_noise", self.profile_noise)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(name, format!("{v} is outside [0, 1]")));
            }
        }
        for (name, (lo, hi)) in [("doc_len", self.doc_len), ("query_len", self.query_len)] {
            if lo == 0 || lo > hi {
                return Err(invalid(name, format!("bad range {lo}..={hi}")));
            }
        }
        Ok(())
    }
}

pub fn generate_synthetic_corpus(config: &SyntheticConfig) -> Result<SyntheticData> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let zipf =
        WeightedIndex::new((1..=config.vocab_per_category).map(|r| 1.0 / r as f64)).expect("vocabulary is non-empty");

    let mut documents = Vec::with_capacity(config.categories * config.docs_per_category);
    let mut doc_tokens: Vec<Vec<Vec<String>>> = Vec::with_capacity(config.categories);
    for c in 0..config.categories {
        let mut per_cat = Vec::with_capacity(config.docs_per_category);
        for i in 0..config.docs_per_category {
            let len = rng.gen_range(config.doc_len.0..=config.doc_len.1);
            let tokens: Vec<String> = (0..len)
                .map(|_| {
                    let j = zipf.sample(&mut rng);
                    if rng.gen_bool(config.noise_ratio) {
                        noise_term(j)
                    } else {
                        core_term(c, j)
                    }
                })
                .collect();
            documents.push(Document::new(
                format!("d{c:03}_{i:05}"),
                tokens.join(" "),
                category_name(c),
            ));
            per_cat.push(tokens);
        }
        doc_tokens.push(per_cat);
    }

    let used: Vec<Vec<&String>> = doc_tokens
        .iter()
        .map(|docs| {
            let mut terms: Vec<&String> = docs.iter().flatten().filter(|t| t.starts_with('k')).collect();
            terms.sort();
            terms.dedup();
            terms
        })
        .collect();
    let mut profiles = Vec::with_capacity(config.categories);
    for c in 0..config.categories {
        // Foreign terms come from the next category, so each profile is
        // confusable with exactly one neighbour.
        let neighbour = (c + 1) % config.categories;
        let foreign_pool: Vec<&String> = if neighbour == c {
            Vec::new()
        } else {
            used[neighbour].clone()
        };
        let foreign = ((config.profile_terms as f64 * config.profile_noise).round() as usize).min(foreign_pool.len());
        let mut picked: Vec<&String> = used[c]
            .choose_multiple(&mut rng, config.profile_terms - foreign)
            .copied()
            .collect();
        picked.extend(foreign_pool.choose_multiple(&mut rng, foreign).copied());
        let terms: Vec<(String, f64)> = picked
            .into_iter()
            .map(|t| (t.clone(), (rng.gen_range(1..=100) as f64) / 100.0))
            .collect();
        profiles.push(UserProfile::new(category_name(c), terms)?);
    }

    let mut queries = Vec::with_capacity(config.categories * config.queries_per_category);
    for (c, docs) in doc_tokens.iter().enumerate() {
        for i in 0..config.queries_per_category {
            let doc = &docs[rng.gen_range(0..docs.len())];
            let want = rng.gen_range(config.query_len.0..=config.query_len.1).min(doc.len());
            let start = rng.gen_range(0..=doc.len() - want);
            queries.push((format!("q{c:03}_{i:04}"), doc[start..start + want].join(" ")));
        }
    }

    Ok(SyntheticData {
        documents,
        profiles,
        queries,
    })
}
