//! Pre-retrieval personalization performance predictors.
//!
//! Every collection statistic uses natural logarithms. Sums and maxima run
//! over the query token multiset, skipping tokens outside the vocabulary;
//! averages divide by the number of in-vocabulary tokens. Degenerate inputs
//! (empty query, empty profile, all tokens out of vocabulary) yield 0.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::index::{CorpusIndex, TermStats};
use crate::text::NormalizationPipeline;

/// Default interpolation weight for `joint` / `joint2`.
pub const DEFAULT_ALPHA: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    raw: String,
    tokens: Vec<String>,
    weights: BTreeMap<String, f64>,
}

impl Query {
    /// Normalizes `raw`; each term is weighted by its count in the query.
    pub fn parse(raw: &str, pipeline: &NormalizationPipeline) -> Self {
        let mut q = Self::from_tokens(pipeline.normalize(raw));
        q.raw = raw.to_owned();
        q
    }

    /// Builds a query from already-normalized tokens.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        let mut weights = BTreeMap::new();
        for t in &tokens {
            *weights.entry(t.clone()).or_insert(0.0) += 1.0;
        }
        Self {
            raw: tokens.join(" "),
            tokens,
            weights,
        }
    }

    /// Overrides the per-term weights; every token must receive a positive weight.
    pub fn with_weights(mut self, weights: BTreeMap<String, f64>) -> Result<Self> {
        for t in &self.tokens {
            match weights.get(t) {
                Some(w) if w.is_finite() && *w > 0.0 => {}
                _ => return Err(invalid("query weight", format!("term `{t}` needs a positive weight"))),
            }
        }
        self.weights = weights.into_iter().filter(|(t, _)| self.tokens.contains(t)).collect();
        Ok(self)
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn weights(&self) -> &BTreeMap<String, f64> {
        &self.weights
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// A user profile: weighted normalized terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    id: String,
    weights: BTreeMap<String, f64>,
}

impl UserProfile {
    /// Terms are taken as already normalized.
    pub fn new<I, S>(id: impl Into<String>, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let id = id.into();
        let mut weights = BTreeMap::new();
        for (term, w) in terms {
            let term = term.into();
            if !(w.is_finite() && w > 0.0) {
                return Err(invalid(
                    "profile weight",
                    format!("profile `{id}` term `{term}` has non-positive weight {w}"),
                ));
            }
            weights.insert(term, w);
        }
        Ok(Self { id, weights })
    }

    /// Normalizes raw terms with `pipeline`. Terms that collapse onto the same
    /// normalized form keep the larger weight; stopwords are dropped.
    pub fn from_raw_terms<I, S>(id: impl Into<String>, terms: I, pipeline: &NormalizationPipeline) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: AsRef<str>,
    {
        let mut merged: BTreeMap<String, f64> = BTreeMap::new();
        for (raw, w) in terms {
            for t in pipeline.normalize(raw.as_ref()) {
                let slot = merged.entry(t).or_insert(w);
                *slot = slot.max(w);
            }
        }
        Self::new(id, merged)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn weights(&self) -> &BTreeMap<String, f64> {
        &self.weights
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Terms by descending weight, ties broken lexicographically.
    pub fn ranked_terms(&self) -> Vec<(&str, f64)> {
        let mut terms: Vec<(&str, f64)> = self.weights.iter().map(|(t, &w)| (t.as_str(), w)).collect();
        terms.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        terms
    }
}

/// How many profile terms are appended to a query for the QP predictors.
///
/// Expansion terms enter the expanded query once, with weight 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionPolicy {
    pub k: usize,
}

impl Default for ExpansionPolicy {
    fn default() -> Self {
        Self { k: 10 }
    }
}

macro_rules! predictors {
    ($($variant:ident => $name:literal),+ $(,)?) => {
        /// The 37 predictors, in output column order.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum Predictor {
            $($variant),+
        }

        impl Predictor {
            pub const ALL: [Predictor; 37] = [$(Predictor::$variant),+];

            pub fn name(self) -> &'static str {
                match self {
                    $(Predictor::$variant => $name),+
                }
            }
        }
    };
}

predictors! {
    NumQt => "numQT",
    AvgQl => "avgQL",
    SumIdf => "sumIDF",
    AvgIdf => "avgIDF",
    MaxIdf => "maxIDF",
    SumIctf => "sumICTF",
    AvgIctf => "avgICTF",
    MaxIctf => "maxICTF",
    Scs => "SCS",
    SumScq => "sumSCQ",
    AvgScq => "avgSCQ",
    MaxScq => "maxSCQ",
    SumVar => "sumVAR",
    AvgVar => "avgVAR",
    MaxVar => "maxVAR",
    Joint => "joint",
    Joint2 => "joint2",
    CosineQp => "cosineQP",
    SumIdfQp => "sumIDFQP",
    AvgIdfQp => "avgIDFQP",
    MaxIdfQp => "maxIDFQP",
    SumIctfQp => "sumICTFQP",
    AvgIctfQp => "avgICTFQP",
    MaxIctfQp => "maxICTFQP",
    ScsQp => "SCSQP",
    SumScqQp => "sumSCQQP",
    AvgScqQp => "avgSCQQP",
    MaxScqQp => "maxSCQQP",
    SumVarQp => "sumVARQP",
    AvgVarQp => "avgVARQP",
    MaxVarQp => "maxVARQP",
    JointQp => "jointQP",
    Joint2Qp => "joint2QP",
    ProfIdf => "profIDF",
    ProfIctf => "profICTF",
    ProfScq => "profSCQ",
    ProfVar => "profVAR",
}

impl Predictor {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|p| p.name() == name)
    }
}

impl fmt::Display for Predictor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Predictor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_name(s).ok_or_else(|| Error::UnknownId {
            kind: "predictor",
            id: s.to_owned(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictorVector {
    values: [f64; 37],
}

impl PredictorVector {
    pub fn from_values(values: [f64; 37]) -> Self {
        Self { values }
    }

    pub fn get(&self, p: Predictor) -> f64 {
        self.values[p.index()]
    }

    pub fn values(&self) -> &[f64; 37] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (Predictor, f64)> + '_ {
        Predictor::ALL.iter().map(|&p| (p, self.values[p.index()]))
    }

    pub fn select(&self, features: &[Predictor]) -> Vec<f64> {
        features.iter().map(|&p| self.get(p)).collect()
    }
}

/// Sum, average and maximum of a per-term statistic over a query.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Aggregate {
    pub sum: f64,
    pub avg: f64,
    pub max: f64,
    /// Number of in-vocabulary query tokens.
    pub count: usize,
}

fn aggregate<F>(q: &Query, ix: &CorpusIndex, per_term: F) -> Aggregate
where
    F: Fn(&TermStats) -> f64,
{
    let mut cache: BTreeMap<&str, f64> = BTreeMap::new();
    let mut agg = Aggregate::default();
    let mut max = f64::NEG_INFINITY;
    for tok in q.tokens() {
        let value = match cache.get(tok.as_str()) {
            Some(&v) => v,
            None => match ix.term_stats(tok) {
                Some(stats) => {
                    let v = per_term(stats);
                    cache.insert(tok, v);
                    v
                }
                None => continue,
            },
        };
        agg.sum += value;
        agg.count += 1;
        max = max.max(value);
    }
    if agg.count > 0 {
        agg.avg = agg.sum / agg.count as f64;
        agg.max = max;
    }
    agg
}

pub fn num_qt(q: &Query) -> usize {
    q.tokens().len()
}

/// Mean character length of the normalized tokens.
pub fn avg_ql(q: &Query) -> f64 {
    if q.is_empty() {
        return 0.0;
    }
    let chars: usize = q.tokens().iter().map(|t| t.chars().count()).sum();
    chars as f64 / q.tokens().len() as f64
}

/// Number of query tokens (with multiplicity) whose term is in the vocabulary.
pub fn in_vocabulary_count(q: &Query, ix: &CorpusIndex) -> usize {
    q.tokens().iter().filter(|t| ix.term_id(t).is_some()).count()
}

pub fn idf(stats: &TermStats, ix: &CorpusIndex) -> f64 {
    (ix.num_docs() as f64 / f64::from(stats.doc_freq)).ln()
}

pub fn ictf(stats: &TermStats, ix: &CorpusIndex) -> f64 {
    (ix.total_tokens() as f64 / stats.coll_freq as f64).ln()
}

pub fn scq(stats: &TermStats, ix: &CorpusIndex) -> f64 {
    (1.0 + (stats.coll_freq as f64).ln()) * (1.0 + ix.num_docs() as f64 / f64::from(stats.doc_freq)).ln()
}

/// tf-idf weight of a term in a document containing it `tf` times.
pub fn tfidf_weight(tf: u32, doc_freq: u32, num_docs: usize) -> f64 {
    (1.0 + f64::from(tf).ln()) * (1.0 + num_docs as f64 / f64::from(doc_freq)).ln()
}

/// Standard deviation of the tf-idf weights over the documents containing the term.
pub fn var(stats: &TermStats, ix: &CorpusIndex) -> f64 {
    let n = ix.num_docs();
    let f_t = f64::from(stats.doc_freq);
    let weights = stats.postings.iter().map(|p| tfidf_weight(p.tf, stats.doc_freq, n));
    let mean = weights.clone().sum::<f64>() / f_t;
    let ss: f64 = weights.map(|w| (w - mean).powi(2)).sum();
    (ss / f_t).sqrt()
}

pub fn idf_family(q: &Query, ix: &CorpusIndex) -> Aggregate {
    aggregate(q, ix, |s| idf(s, ix))
}

pub fn ictf_family(q: &Query, ix: &CorpusIndex) -> Aggregate {
    aggregate(q, ix, |s| ictf(s, ix))
}

pub fn scq_family(q: &Query, ix: &CorpusIndex) -> Aggregate {
    aggregate(q, ix, |s| scq(s, ix))
}

pub fn var_family(q: &Query, ix: &CorpusIndex) -> Aggregate {
    aggregate(q, ix, |s| var(s, ix))
}

/// Simplified clarity score: ln(1/numQT) + avgICTF.
pub fn scs(q: &Query, ix: &CorpusIndex) -> f64 {
    scs_from(num_qt(q), ictf_family(q, ix).avg)
}

fn scs_from(num_qt: usize, avg_ictf: f64) -> f64 {
    if num_qt == 0 {
        return 0.0;
    }
    (1.0 / num_qt as f64).ln() + avg_ictf
}

pub fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(invalid("alpha", format!("{alpha} is outside [0, 1]")))
    }
}

/// `joint = α·maxSCQ + (1−α)·sumVAR`, `joint2 = α·maxSCQ + (1−α)·maxVAR`.
pub fn joint_from(max_scq: f64, sum_var: f64, max_var: f64, alpha: f64) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    Ok((
        alpha * max_scq + (1.0 - alpha) * sum_var,
        alpha * max_scq + (1.0 - alpha) * max_var,
    ))
}

pub fn joint_pair(q: &Query, ix: &CorpusIndex, alpha: f64) -> Result<(f64, f64)> {
    let scq = scq_family(q, ix);
    let var = var_family(q, ix);
    joint_from(scq.max, var.sum, var.max, alpha)
}

pub fn cosine_qp(q: &Query, p: &UserProfile) -> f64 {
    if q.is_empty() || p.is_empty() {
        return 0.0;
    }
    let dot: f64 = q
        .weights()
        .iter()
        .filter_map(|(t, wq)| p.weights().get(t).map(|wp| wq * wp))
        .sum();
    let nq = q.weights().values().map(|w| w * w).sum::<f64>().sqrt();
    let np = p.weights().values().map(|w| w * w).sum::<f64>().sqrt();
    (dot / (nq * np)).clamp(0.0, 1.0)
}

/// Appends the `k` highest-weighted profile terms not already in the query.
pub fn expand_query(q: &Query, p: &UserProfile, policy: ExpansionPolicy) -> Query {
    let extra = p
        .ranked_terms()
        .into_iter()
        .map(|(t, _)| t)
        .filter(|t| !q.weights().contains_key(*t))
        .take(policy.k);
    let mut expanded = q.clone();
    for t in extra {
        expanded.tokens.push(t.to_owned());
        expanded.weights.insert(t.to_owned(), 1.0);
        expanded.raw.push(' ');
        expanded.raw.push_str(t);
    }
    expanded
}

/// The fifteen predictors that have a profile-expanded counterpart.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CollectionPredictors {
    pub idf: Aggregate,
    pub ictf: Aggregate,
    pub scs: f64,
    pub scq: Aggregate,
    pub var: Aggregate,
    pub joint: f64,
    pub joint2: f64,
}

impl CollectionPredictors {
    pub fn compute(q: &Query, ix: &CorpusIndex, alpha: f64) -> Result<Self> {
        let idf = idf_family(q, ix);
        let ictf = ictf_family(q, ix);
        let scq = scq_family(q, ix);
        let var = var_family(q, ix);
        let (joint, joint2) = joint_from(scq.max, var.sum, var.max, alpha)?;
        Ok(Self {
            idf,
            ictf,
            scs: scs_from(num_qt(q), ictf.avg),
            scq,
            var,
            joint,
            joint2,
        })
    }

    /// Values in predictor column order (sumIDF … joint2).
    pub fn to_array(&self) -> [f64; 15] {
        [
            self.idf.sum,
            self.idf.avg,
            self.idf.max,
            self.ictf.sum,
            self.ictf.avg,
            self.ictf.max,
            self.scs,
            self.scq.sum,
            self.scq.avg,
            self.scq.max,
            self.var.sum,
            self.var.avg,
            self.var.max,
            self.joint,
            self.joint2,
        ]
    }
}

/// The base predictors evaluated on the profile-expanded query.
pub fn qp_variants(
    q: &Query,
    p: &UserProfile,
    ix: &CorpusIndex,
    policy: ExpansionPolicy,
    alpha: f64,
) -> Result<CollectionPredictors> {
    CollectionPredictors::compute(&expand_query(q, p, policy), ix, alpha)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileDiffs {
    pub idf: f64,
    pub ictf: f64,
    pub scq: f64,
    pub var: f64,
}

pub fn prof_diffs(base: &CollectionPredictors, expanded: &CollectionPredictors) -> ProfileDiffs {
    ProfileDiffs {
        idf: expanded.idf.avg - base.idf.avg,
        ictf: expanded.ictf.avg - base.ictf.avg,
        scq: expanded.scq.avg - base.scq.avg,
        var: expanded.var.avg - base.var.avg,
    }
}

pub fn compute_all(
    q: &Query,
    p: &UserProfile,
    ix: &CorpusIndex,
    policy: ExpansionPolicy,
    alpha: f64,
) -> Result<PredictorVector> {
    let base = CollectionPredictors::compute(q, ix, alpha)?;
    let expanded = qp_variants(q, p, ix, policy, alpha)?;
    let diffs = prof_diffs(&base, &expanded);

    let mut values = [0.0; 37];
    values[0] = num_qt(q) as f64;
    values[1] = avg_ql(q);
    values[2..17].copy_from_slice(&base.to_array());
    values[17] = cosine_qp(q, p);
    values[18..33].copy_from_slice(&expanded.to_array());
    values[33..37].copy_from_slice(&[diffs.idf, diffs.ictf, diffs.scq, diffs.var]);
    Ok(PredictorVector { values })
}
