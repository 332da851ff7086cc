//! End-to-end glue: predictor rows, triplets and their join.

use rayon::prelude::*;

use crate::error::Result;
use crate::eval::{build_triplets, pairings, AssessmentSource, EvalSettings, QueryRecord};
use crate::index::CorpusIndex;
use crate::io::PredictorRow;
use crate::observation::{Observation, TripletRecord};
use crate::predictors::{check_alpha, compute_all, ExpansionPolicy, UserProfile};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictorSettings {
    pub expansion: ExpansionPolicy,
    pub alpha: f64,
}

impl Default for PredictorSettings {
    fn default() -> Self {
        Self {
            expansion: ExpansionPolicy::default(),
            alpha: crate::predictors::DEFAULT_ALPHA,
        }
    }
}

/// One predictor row per evaluated (query, profile) pair, ordered by
/// profile then query.
pub fn predictor_rows(
    queries: &[QueryRecord],
    profiles: &[UserProfile],
    ix: &CorpusIndex,
    source: AssessmentSource<'_>,
    settings: PredictorSettings,
) -> Result<Vec<PredictorRow>> {
    check_alpha(settings.alpha)?;
    pairings(queries, profiles, ix, source)?
        .into_par_iter()
        .map(|(q, p, _)| {
            Ok(PredictorRow {
                user: p.id().to_owned(),
                profile: p.id().to_owned(),
                query: q.id.clone(),
                predictors: compute_all(&q.query, p, ix, settings.expansion, settings.alpha)?,
            })
        })
        .collect()
}

/// Triplets and predictors computed in one pass over the same pairings.
pub fn observations(
    queries: &[QueryRecord],
    profiles: &[UserProfile],
    ix: &CorpusIndex,
    source: AssessmentSource<'_>,
    eval: &EvalSettings,
    predictors: PredictorSettings,
) -> Result<(Vec<TripletRecord>, Vec<Observation>)> {
    let triplets = build_triplets(queries, profiles, ix, eval, source)?;
    let rows = predictor_rows(queries, profiles, ix, source, predictors)?;
    let records: Vec<TripletRecord> = triplets.iter().map(TripletRecord::from).collect();
    let obs = crate::io::join_observations(&records, &rows)?;
    Ok((records, obs))
}
