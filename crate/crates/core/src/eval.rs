//! NDCG evaluation, relevance assessment and evaluation triplets.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::index::CorpusIndex;
use crate::predictors::{Query, UserProfile};
use crate::retrieval::{personalize_rerank, rank, PersonalizationStrategy, Ranking};

pub const DEFAULT_CUTOFF: usize = 50;
pub const DEFAULT_ASPIRE_THRESHOLD: usize = 100;

/// Graded relevance judgments for one (query, profile) pair.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelevanceAssessments {
    grades: BTreeMap<String, u32>,
}

impl RelevanceAssessments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, doc_id: impl Into<String>, grade: u32) {
        self.grades.insert(doc_id.into(), grade);
    }

    pub fn grade(&self, doc_id: &str) -> u32 {
        self.grades.get(doc_id).copied().unwrap_or(0)
    }

    pub fn grades(&self) -> &BTreeMap<String, u32> {
        &self.grades
    }

    pub fn relevant(&self) -> impl Iterator<Item = &str> {
        self.grades.iter().filter(|(_, &g)| g > 0).map(|(d, _)| d.as_str())
    }

    pub fn num_relevant(&self) -> usize {
        self.relevant().count()
    }
}

impl<S: Into<String>> FromIterator<(S, u32)> for RelevanceAssessments {
    fn from_iter<I: IntoIterator<Item = (S, u32)>>(iter: I) -> Self {
        Self {
            grades: iter.into_iter().map(|(d, g)| (d.into(), g)).collect(),
        }
    }
}

fn gain(grade: u32) -> f64 {
    2f64.powi(grade as i32) - 1.0
}

fn discount(rank: usize) -> f64 {
    // rank is 1-based
    ((rank + 1) as f64).log2()
}

/// NDCG@k with exponential gain and log2 discount; 0 when nothing is relevant.
pub fn ndcg_at_k(r: &Ranking, rel: &RelevanceAssessments, k: usize) -> f64 {
    let dcg: f64 = r
        .doc_ids()
        .take(k)
        .enumerate()
        .map(|(i, d)| gain(rel.grade(d)) / discount(i + 1))
        .sum();
    let mut ideal: Vec<u32> = rel.grades().values().copied().filter(|&g| g > 0).collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg: f64 = ideal
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &g)| gain(g) / discount(i + 1))
        .sum();
    if idcg == 0.0 {
        0.0
    } else {
        (dcg / idcg).min(1.0)
    }
}

pub fn diff_perso(ndcg_perso: f64, ndcg_orig: f64) -> f64 {
    ndcg_perso - ndcg_orig
}

/// Automatic assessment: a document is relevant (grade 1) when it sits in the
/// top `threshold` of the original ranking and its category equals the
/// profile id. The other top-`threshold` documents get grade 0.
pub fn aspire_assess(q: &Query, p: &UserProfile, ix: &CorpusIndex, threshold: usize) -> Result<RelevanceAssessments> {
    aspire_from_ranking(&rank(q, ix, threshold), p, ix, threshold)
}

pub fn aspire_from_ranking(
    original: &Ranking,
    p: &UserProfile,
    ix: &CorpusIndex,
    threshold: usize,
) -> Result<RelevanceAssessments> {
    if threshold == 0 {
        return Err(invalid("threshold", "must be at least 1"));
    }
    if !ix.categories().contains(p.id()) {
        return Err(Error::UnknownCategory(p.id().to_owned()));
    }
    original
        .doc_ids()
        .take(threshold)
        .map(|d| {
            let ord = ix.doc_ord(d).ok_or_else(|| Error::UnknownId {
                kind: "document",
                id: d.to_owned(),
            })?;
            Ok((d.to_owned(), u32::from(ix.doc(ord).category == p.id())))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryRecord {
    pub id: String,
    pub query: Query,
}

/// Supplied judgments keyed by (profile id, query id).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssessmentSet {
    pub(crate) entries: BTreeMap<(String, String), RelevanceAssessments>,
}

impl AssessmentSet {
    pub fn insert(&mut self, query_id: &str, profile_id: &str, doc_id: &str, grade: u32) {
        self.entries
            .entry((profile_id.to_owned(), query_id.to_owned()))
            .or_default()
            .insert(doc_id, grade);
    }

    pub fn get(&self, query_id: &str, profile_id: &str) -> Option<&RelevanceAssessments> {
        self.entries.get(&(profile_id.to_owned(), query_id.to_owned()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// (profile id, query id) pairs in sorted order.
    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.keys().map(|(p, q)| (p.as_str(), q.as_str()))
    }
}

#[derive(Debug, Clone, Copy)]
pub enum AssessmentSource<'a> {
    UserStudy(&'a AssessmentSet),
    Aspire,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalSettings {
    pub strategy: PersonalizationStrategy,
    pub cutoff: usize,
    pub threshold: usize,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            strategy: PersonalizationStrategy::default(),
            cutoff: DEFAULT_CUTOFF,
            threshold: DEFAULT_ASPIRE_THRESHOLD,
        }
    }
}

impl EvalSettings {
    pub fn validate(&self) -> Result<()> {
        self.strategy.validate()?;
        if self.cutoff == 0 {
            return Err(invalid("cutoff", "must be at least 1"));
        }
        if self.threshold == 0 {
            return Err(invalid("threshold", "must be at least 1"));
        }
        Ok(())
    }

    fn retrieval_depth(&self) -> usize {
        self.cutoff.max(self.threshold).max(self.strategy.depth)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationTriplet {
    pub user: String,
    pub profile_id: String,
    pub query_id: String,
    pub assessments: RelevanceAssessments,
    pub ndcg_orig: f64,
    pub ndcg_perso: f64,
    pub diff_perso: f64,
}

/// Evaluates one (query, profile) pair. Returns the triplet and both rankings.
pub fn evaluate_pair(
    q: &QueryRecord,
    p: &UserProfile,
    ix: &CorpusIndex,
    settings: &EvalSettings,
    supplied: Option<&RelevanceAssessments>,
) -> Result<(EvaluationTriplet, Ranking, Ranking)> {
    let original = rank(&q.query, ix, settings.retrieval_depth());
    let personalized = personalize_rerank(&original, p, ix, settings.strategy)?;
    let assessments = match supplied {
        Some(a) => a.clone(),
        None => aspire_from_ranking(&original, p, ix, settings.threshold)?,
    };
    let ndcg_orig = ndcg_at_k(&original, &assessments, settings.cutoff);
    let ndcg_perso = ndcg_at_k(&personalized, &assessments, settings.cutoff);
    let triplet = EvaluationTriplet {
        user: p.id().to_owned(),
        profile_id: p.id().to_owned(),
        query_id: q.id.clone(),
        assessments,
        ndcg_orig,
        ndcg_perso,
        diff_perso: diff_perso(ndcg_perso, ndcg_orig),
    };
    Ok((triplet, original, personalized))
}

/// One triplet per (query, profile) pairing, ordered by profile then query.
///
/// In user-study mode the pairings are those present in the assessment set;
/// in automatic mode every query is paired with every profile.
pub fn build_triplets(
    queries: &[QueryRecord],
    profiles: &[UserProfile],
    ix: &CorpusIndex,
    settings: &EvalSettings,
    source: AssessmentSource<'_>,
) -> Result<Vec<EvaluationTriplet>> {
    settings.validate()?;
    pairings(queries, profiles, ix, source)?
        .into_par_iter()
        .map(|(q, p, a)| evaluate_pair(q, p, ix, settings, a).map(|(t, _, _)| t))
        .collect()
}

/// A query, a profile and the supplied assessments for the pair, if any.
pub type Pairing<'a> = (&'a QueryRecord, &'a UserProfile, Option<&'a RelevanceAssessments>);

/// The (query, profile) pairs evaluated for `source`, ordered by profile then
/// query. Rejects unknown ids, unassessable documents and profiles without a
/// matching category.
pub fn pairings<'a>(
    queries: &'a [QueryRecord],
    profiles: &'a [UserProfile],
    ix: &CorpusIndex,
    source: AssessmentSource<'a>,
) -> Result<Vec<Pairing<'a>>> {
    let query_by_id: BTreeMap<&str, &QueryRecord> = queries.iter().map(|q| (q.id.as_str(), q)).collect();
    let profile_by_id: BTreeMap<&str, &UserProfile> = profiles.iter().map(|p| (p.id(), p)).collect();

    let jobs: Vec<Pairing<'a>> = match source {
        AssessmentSource::UserStudy(set) => {
            let unknown: BTreeSet<&str> = set
                .entries
                .values()
                .flat_map(|a| a.grades().keys())
                .filter(|d| ix.doc_ord(d).is_none())
                .map(String::as_str)
                .collect();
            if !unknown.is_empty() {
                return Err(Error::UnknownDocuments(
                    unknown.into_iter().map(str::to_owned).collect(),
                ));
            }
            set.entries
                .iter()
                .map(|((pid, qid), a)| {
                    let q = query_by_id.get(qid.as_str()).ok_or_else(|| Error::UnknownId {
                        kind: "query",
                        id: qid.clone(),
                    })?;
                    let p = profile_by_id.get(pid.as_str()).ok_or_else(|| Error::UnknownId {
                        kind: "profile",
                        id: pid.clone(),
                    })?;
                    Ok((*q, *p, Some(a)))
                })
                .collect::<Result<_>>()?
        }
        AssessmentSource::Aspire => {
            if let Some(p) = profiles.iter().find(|p| !ix.categories().contains(p.id())) {
                return Err(Error::UnknownCategory(p.id().to_owned()));
            }
            profile_by_id
                .values()
                .flat_map(|p| query_by_id.values().map(move |q| (*q, *p, None)))
                .collect()
        }
    };
    Ok(jobs)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
    pub total: usize,
}

impl OutcomeCounts {
    pub fn record(&mut self, diff: f64) {
        match diff.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Greater) => self.positive += 1,
            Some(std::cmp::Ordering::Less) => self.negative += 1,
            _ => self.zero += 1,
        }
        self.total += 1;
    }
}

/// Per-profile counts of triplets with positive, negative and zero diffPerso.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TripletSummary {
    pub by_profile: BTreeMap<String, OutcomeCounts>,
    pub overall: OutcomeCounts,
}

pub fn summarize_triplets(triplets: &[EvaluationTriplet]) -> TripletSummary {
    let mut summary = TripletSummary::default();
    for t in triplets {
        summary
            .by_profile
            .entry(t.profile_id.clone())
            .or_default()
            .record(t.diff_perso);
        summary.overall.record(t.diff_perso);
    }
    summary
}
