use serde::{Deserialize, Serialize};

use crate::eval::EvaluationTriplet;
use crate::predictors::PredictorVector;

/// One evaluation triplet joined with its predictor vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub profile_id: String,
    pub query_id: String,
    pub predictors: PredictorVector,
    pub ndcg_orig: f64,
    pub ndcg_perso: f64,
    pub diff_perso: f64,
}

impl Observation {
    pub fn new(triplet: &EvaluationTriplet, predictors: PredictorVector) -> Self {
        Self {
            profile_id: triplet.profile_id.clone(),
            query_id: triplet.query_id.clone(),
            predictors,
            ndcg_orig: triplet.ndcg_orig,
            ndcg_perso: triplet.ndcg_perso,
            diff_perso: triplet.diff_perso,
        }
    }
}

/// Triplet outcome without assessments, as stored in triplet files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletRecord {
    pub user: String,
    pub profile: String,
    pub query: String,
    pub ndcg_orig: f64,
    pub ndcg_perso: f64,
    pub diff_perso: f64,
}

impl From<&EvaluationTriplet> for TripletRecord {
    fn from(t: &EvaluationTriplet) -> Self {
        Self {
            user: t.user.clone(),
            profile: t.profile_id.clone(),
            query: t.query_id.clone(),
            ndcg_orig: t.ndcg_orig,
            ndcg_perso: t.ndcg_perso,
            diff_perso: t.diff_perso,
        }
    }
}
