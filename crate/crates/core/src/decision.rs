//! Per-profile personalize/skip decisions and their gain accounting.

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::forest::{ForestModel, ForestParams, ModelKind};
use crate::observation::Observation;
use crate::predictors::Predictor;
use crate::stats::{select_top, CorrelationSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    Yes,
    No,
}

/// `Some(Yes)` for a positive diffPerso, `Some(No)` for a negative one and
/// `None` (drop the observation) for exactly zero.
pub fn categorize(diff_perso: f64) -> Option<Label> {
    if diff_perso > 0.0 {
        Some(Label::Yes)
    } else if diff_perso < 0.0 {
        Some(Label::No)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRow {
    pub profile_id: String,
    pub query_id: String,
    pub features: Vec<f64>,
    pub diff_perso: f64,
    pub ndcg_orig: f64,
    pub ndcg_perso: f64,
}

impl DecisionRow {
    pub fn from_observation(o: &Observation, features: &[Predictor]) -> Self {
        Self {
            profile_id: o.profile_id.clone(),
            query_id: o.query_id.clone(),
            features: o.predictors.select(features),
            diff_perso: o.diff_perso,
            ndcg_orig: o.ndcg_orig,
            ndcg_perso: o.ndcg_perso,
        }
    }

    pub fn target(&self, kind: ModelKind) -> f64 {
        match kind {
            ModelKind::Regression => self.diff_perso,
            ModelKind::Classification => f64::from(self.diff_perso > 0.0),
        }
    }
}

/// Anything that can answer "personalize this row?".
pub trait Decider {
    fn decide(&self, row: &DecisionRow) -> Result<bool>;
}

/// Classification: personalize iff the predicted label is yes.
/// Regression: personalize iff the predicted diffPerso is ≥ 0.
pub fn decide(model: &ForestModel, features: &[f64]) -> Result<bool> {
    let y = model.predict(features)?;
    Ok(match model.kind() {
        ModelKind::Classification => y >= 0.5,
        ModelKind::Regression => y >= 0.0,
    })
}

impl Decider for ForestModel {
    fn decide(&self, row: &DecisionRow) -> Result<bool> {
        decide(self, &row.features)
    }
}

/// Always picks the better run; realizes the ideal column.
pub struct OracleDecider;

impl Decider for OracleDecider {
    fn decide(&self, row: &DecisionRow) -> Result<bool> {
        Ok(row.ndcg_perso >= row.ndcg_orig)
    }
}

pub struct ConstantDecider(pub bool);

impl Decider for ConstantDecider {
    fn decide(&self, _: &DecisionRow) -> Result<bool> {
        Ok(self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Protocol {
    LeaveOneOut,
    KFold(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingOptions {
    pub forest: ForestParams,
    pub seed: u64,
    /// Oversample the minority label in classification training folds.
    pub resample: bool,
}

impl Default for TrainingOptions {
    fn default() -> Self {
        Self {
            forest: ForestParams::default(),
            seed: 1,
            resample: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowDecision {
    pub query_id: String,
    pub ndcg_orig: f64,
    pub ndcg_perso: f64,
    pub personalize: bool,
}

impl RowDecision {
    pub fn realized(&self) -> f64 {
        if self.personalize {
            self.ndcg_perso
        } else {
            self.ndcg_orig
        }
    }
}

/// Held-out decisions for one profile.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProfileDecisions {
    pub profile_id: String,
    pub rows: Vec<RowDecision>,
    /// Models trained for this profile.
    pub models_trained: usize,
    pub fell_back_to_loo: bool,
    /// Folds whose classification training set held a single label.
    pub degenerate_folds: usize,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(base: u64, a: u64, b: u64) -> u64 {
    splitmix(splitmix(splitmix(base) ^ a) ^ b)
}

/// Groups rows by profile and drops diffPerso = 0 rows.
fn group_rows(rows: &[DecisionRow]) -> BTreeMap<&str, Vec<&DecisionRow>> {
    let mut groups: BTreeMap<&str, Vec<&DecisionRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| categorize(r.diff_perso).is_some()) {
        groups.entry(r.profile_id.as_str()).or_default().push(r);
    }
    groups
}

/// Fold index per row. Stratified by label when `stratify` is set.
fn assign_folds(rows: &[&DecisionRow], k: usize, stratify: bool, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut folds = vec![0; rows.len()];
    let strata: Vec<Vec<usize>> = if stratify {
        let (yes, no): (Vec<usize>, Vec<usize>) = (0..rows.len()).partition(|&i| rows[i].diff_perso > 0.0);
        vec![yes, no]
    } else {
        vec![(0..rows.len()).collect()]
    };
    let mut next = 0;
    for mut members in strata {
        members.shuffle(rng);
        for i in members {
            folds[i] = next % k;
            next += 1;
        }
    }
    folds
}

/// Runs `protocol` per profile, fitting a fresh decider on each training
/// fold with `fit(training_rows, fold_seed)`.
pub fn cross_validate<D, F>(
    rows: &[DecisionRow],
    protocol: Protocol,
    stratify: bool,
    seed: u64,
    mut fit: F,
) -> Result<Vec<ProfileDecisions>>
where
    D: Decider,
    F: FnMut(&[&DecisionRow], u64) -> Result<D>,
{
    if let Protocol::KFold(k) = protocol {
        if k < 2 {
            return Err(invalid("folds", format!("k-fold needs k >= 2, got {k}")));
        }
    }
    let mut out = Vec::new();
    for (p_idx, (profile, members)) in group_rows(rows).into_iter().enumerate() {
        let n = members.len();
        let mut result = ProfileDecisions {
            profile_id: profile.to_owned(),
            ..Default::default()
        };
        let profile_seed = derive_seed(seed, p_idx as u64, 0);
        let (k, folds) = match protocol {
            Protocol::KFold(k) if n >= k => {
                let mut rng = ChaCha8Rng::seed_from_u64(profile_seed);
                (k, assign_folds(&members, k, stratify, &mut rng))
            }
            Protocol::KFold(_) => {
                result.fell_back_to_loo = true;
                (n, (0..n).collect())
            }
            Protocol::LeaveOneOut => (n, (0..n).collect()),
        };

        let mut decisions: Vec<Option<bool>> = vec![None; n];
        for fold in 0..k {
            let train: Vec<&DecisionRow> = (0..n).filter(|&i| folds[i] != fold).map(|i| members[i]).collect();
            let test: Vec<usize> = (0..n).filter(|&i| folds[i] == fold).collect();
            if test.is_empty() {
                continue;
            }
            let decider: Box<dyn Decider> = if train.is_empty() {
                // A lone observation: fall back to the majority outcome.
                Box::new(ConstantDecider(true))
            } else {
                if stratify
                    && train
                        .windows(2)
                        .all(|w| (w[0].diff_perso > 0.0) == (w[1].diff_perso > 0.0))
                {
                    result.degenerate_folds += 1;
                }
                result.models_trained += 1;
                Box::new(fit(&train, derive_seed(profile_seed, fold as u64, 1))?)
            };
            for i in test {
                decisions[i] = Some(decider.decide(members[i])?);
            }
        }
        result.rows = members
            .iter()
            .zip(decisions)
            .map(|(r, d)| RowDecision {
                query_id: r.query_id.clone(),
                ndcg_orig: r.ndcg_orig,
                ndcg_perso: r.ndcg_perso,
                personalize: d.expect("every row is held out exactly once"),
            })
            .collect();
        out.push(result);
    }
    Ok(out)
}

fn oversample<'a>(train: &[&'a DecisionRow], rng: &mut ChaCha8Rng) -> Vec<&'a DecisionRow> {
    let (yes, no): (Vec<&DecisionRow>, Vec<&DecisionRow>) = train.iter().partition(|r| r.diff_perso > 0.0);
    let (major, minor) = if yes.len() >= no.len() { (yes, no) } else { (no, yes) };
    let mut out: Vec<&DecisionRow> = major.iter().chain(minor.iter()).copied().collect();
    if !minor.is_empty() {
        for _ in minor.len()..major.len() {
            out.push(minor[rng.gen_range(0..minor.len())]);
        }
    }
    out
}

pub fn train_model(
    rows: &[&DecisionRow],
    kind: ModelKind,
    features: &[String],
    options: &TrainingOptions,
    seed: u64,
) -> Result<ForestModel> {
    if rows.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let rows: Vec<&DecisionRow> = if options.resample && kind == ModelKind::Classification {
        oversample(rows, &mut ChaCha8Rng::seed_from_u64(derive_seed(seed, 0, 2)))
    } else {
        rows.to_vec()
    };
    let x: Vec<Vec<f64>> = rows.iter().map(|r| r.features.clone()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.target(kind)).collect();
    ForestModel::train(kind, features.to_vec(), &x, &y, options.forest, seed)
}

pub fn train_classifier(rows: &[DecisionRow], features: &[String], options: &TrainingOptions) -> Result<ForestModel> {
    let kept: Vec<&DecisionRow> = rows.iter().filter(|r| categorize(r.diff_perso).is_some()).collect();
    train_model(&kept, ModelKind::Classification, features, options, options.seed)
}

pub fn train_regressor(rows: &[DecisionRow], features: &[String], options: &TrainingOptions) -> Result<ForestModel> {
    let kept: Vec<&DecisionRow> = rows.iter().filter(|r| categorize(r.diff_perso).is_some()).collect();
    train_model(&kept, ModelKind::Regression, features, options, options.seed)
}

fn evaluate(
    rows: &[DecisionRow],
    protocol: Protocol,
    kind: ModelKind,
    features: &[String],
    options: &TrainingOptions,
) -> Result<Vec<ProfileDecisions>> {
    let stratify = kind == ModelKind::Classification;
    cross_validate(rows, protocol, stratify, options.seed, |train, seed| {
        train_model(train, kind, features, options, seed)
    })
}

pub fn evaluate_loo(
    rows: &[DecisionRow],
    kind: ModelKind,
    features: &[String],
    options: &TrainingOptions,
) -> Result<Vec<ProfileDecisions>> {
    evaluate(rows, Protocol::LeaveOneOut, kind, features, options)
}

pub fn evaluate_kfold(
    rows: &[DecisionRow],
    k: usize,
    kind: ModelKind,
    features: &[String],
    options: &TrainingOptions,
) -> Result<Vec<ProfileDecisions>> {
    evaluate(rows, Protocol::KFold(k), kind, features, options)
}

pub fn pct_gain(avg_pred: f64, avg_perso: f64) -> f64 {
    100.0 * (avg_pred - avg_perso) / avg_perso
}

/// Average NDCG figures for one profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileAverages {
    pub profile_id: String,
    pub avg_perso: f64,
    pub ideal: f64,
    pub classification: Option<f64>,
    pub regression: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainCell {
    pub avg_pred: f64,
    pub gain: f64,
}

impl GainCell {
    fn new(avg_pred: f64, avg_perso: f64) -> Self {
        Self {
            avg_pred,
            gain: pct_gain(avg_pred, avg_perso),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainRow {
    pub label: String,
    pub avg_perso: f64,
    pub ideal: GainCell,
    pub classification: Option<GainCell>,
    pub regression: Option<GainCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainReport {
    pub profiles: Vec<GainRow>,
    /// Column means over profiles (gains are averaged, not recomputed).
    pub mean: GainRow,
    /// Share of the mean ideal gain captured by each model, in percent.
    pub ideal_gain_classification: Option<f64>,
    pub ideal_gain_regression: Option<f64>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn mean_cell(cells: &[Option<GainCell>]) -> Option<GainCell> {
    let cells: Option<Vec<GainCell>> = cells.iter().copied().collect();
    let cells = cells?;
    (!cells.is_empty()).then(|| GainCell {
        avg_pred: mean(cells.iter().map(|c| c.avg_pred)),
        gain: mean(cells.iter().map(|c| c.gain)),
    })
}

impl GainReport {
    pub fn from_averages(averages: &[ProfileAverages]) -> Self {
        let profiles: Vec<GainRow> = averages
            .iter()
            .map(|a| GainRow {
                label: a.profile_id.clone(),
                avg_perso: a.avg_perso,
                ideal: GainCell::new(a.ideal, a.avg_perso),
                classification: a.classification.map(|v| GainCell::new(v, a.avg_perso)),
                regression: a.regression.map(|v| GainCell::new(v, a.avg_perso)),
            })
            .collect();
        let ideals: Vec<Option<GainCell>> = profiles.iter().map(|r| Some(r.ideal)).collect();
        let cls: Vec<Option<GainCell>> = profiles.iter().map(|r| r.classification).collect();
        let reg: Vec<Option<GainCell>> = profiles.iter().map(|r| r.regression).collect();
        let ideal = mean_cell(&ideals).unwrap_or(GainCell {
            avg_pred: 0.0,
            gain: 0.0,
        });
        let classification = mean_cell(&cls);
        let regression = mean_cell(&reg);
        let share = |c: Option<GainCell>| c.filter(|_| ideal.gain != 0.0).map(|c| 100.0 * c.gain / ideal.gain);
        Self {
            mean: GainRow {
                label: "mean".to_owned(),
                avg_perso: mean(profiles.iter().map(|r| r.avg_perso)),
                ideal,
                classification,
                regression,
            },
            ideal_gain_classification: share(classification),
            ideal_gain_regression: share(regression),
            profiles,
        }
    }
}

/// Assembles the report from held-out decisions. Baseline and ideal columns
/// come from whichever decision set is given first; both sets cover the same
/// rows when produced from the same input.
pub fn gain_report(classification: Option<&[ProfileDecisions]>, regression: Option<&[ProfileDecisions]>) -> GainReport {
    let mut per_profile: BTreeMap<&str, ProfileAverages> = BTreeMap::new();
    let realized = |d: &ProfileDecisions| mean(d.rows.iter().map(RowDecision::realized));
    for set in [classification, regression].into_iter().flatten() {
        for d in set {
            per_profile.entry(&d.profile_id).or_insert_with(|| ProfileAverages {
                profile_id: d.profile_id.clone(),
                avg_perso: mean(d.rows.iter().map(|r| r.ndcg_perso)),
                ideal: mean(d.rows.iter().map(|r| r.ndcg_perso.max(r.ndcg_orig))),
                classification: None,
                regression: None,
            });
        }
    }
    for d in classification.unwrap_or_default() {
        per_profile.get_mut(d.profile_id.as_str()).unwrap().classification = Some(realized(d));
    }
    for d in regression.unwrap_or_default() {
        per_profile.get_mut(d.profile_id.as_str()).unwrap().regression = Some(realized(d));
    }
    let averages: Vec<ProfileAverages> = per_profile.into_values().collect();
    GainReport::from_averages(&averages)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRun {
    pub features: Vec<Predictor>,
    pub classification: Vec<ProfileDecisions>,
    pub regression: Vec<ProfileDecisions>,
    pub report: GainReport,
}

/// Evaluates both model kinds on `features` (kept in predictor column order).
pub fn run_decisions(
    observations: &[Observation],
    features: &[Predictor],
    protocol: Protocol,
    options: &TrainingOptions,
) -> Result<DecisionRun> {
    run_kinds(
        observations,
        features,
        protocol,
        options,
        &[ModelKind::Classification, ModelKind::Regression],
    )
}

/// Like [`run_decisions`] but only for the listed model kinds; the decision
/// list of a kind not run stays empty and its report column is absent.
pub fn run_kinds(
    observations: &[Observation],
    features: &[Predictor],
    protocol: Protocol,
    options: &TrainingOptions,
    kinds: &[ModelKind],
) -> Result<DecisionRun> {
    let mut features = features.to_vec();
    features.sort();
    features.dedup();
    if features.is_empty() {
        return Err(invalid("features", "at least one predictor is required"));
    }
    let names: Vec<String> = features.iter().map(|p| p.name().to_owned()).collect();
    let rows: Vec<DecisionRow> = observations
        .iter()
        .map(|o| DecisionRow::from_observation(o, &features))
        .collect();
    let run = |kind: ModelKind| -> Result<Option<Vec<ProfileDecisions>>> {
        if kinds.contains(&kind) {
            evaluate(&rows, protocol, kind, &names, options).map(Some)
        } else {
            Ok(None)
        }
    };
    let classification = run(ModelKind::Classification)?;
    let regression = run(ModelKind::Regression)?;
    if classification.is_none() && regression.is_none() {
        return Err(invalid("kinds", "at least one model kind is required"));
    }
    let report = gain_report(classification.as_deref(), regression.as_deref());
    let (classification, regression) = (classification.unwrap_or_default(), regression.unwrap_or_default());
    Ok(DecisionRun {
        features,
        classification,
        regression,
        report,
    })
}

/// Same pipeline restricted to the `n` best predictors of `summary`.
pub fn run_with_selection(
    observations: &[Observation],
    summary: &CorrelationSummary,
    n: usize,
    protocol: Protocol,
    options: &TrainingOptions,
) -> Result<DecisionRun> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    run_decisions(observations, &select_top(summary, n), protocol, options)
}
