//! Python bindings for the personalization predictor toolkit.

use std::collections::HashMap;
use std::path::PathBuf;

use ppp_core::decision::{run_decisions, GainCell, GainReport, GainRow, ProfileAverages, Protocol, TrainingOptions};
use ppp_core::eval::{evaluate_pair, ndcg_at_k, EvalSettings, QueryRecord, RelevanceAssessments};
use ppp_core::index::{CorpusIndex, Document};
use ppp_core::predictors::{compute_all, ExpansionPolicy, Predictor, Query, UserProfile};
use ppp_core::retrieval::{personalize_rerank, rank, PersonalizationStrategy, Ranking};
use ppp_core::stats::CorrelationMethod;
use ppp_core::synth::{generate_synthetic_corpus, SyntheticConfig};
use ppp_core::text::{default_stopwords, NormalizationPipeline, Stemmer};
use ppp_core::{io, Error};
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyOSError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn scored(r: &Ranking) -> Vec<(String, f64)> {
    r.entries().iter().map(|e| (e.doc_id.clone(), e.score)).collect()
}

/// A user profile: weighted terms keyed by profile id.
#[pyclass(module = "ppp", name = "Profile", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyProfile {
    inner: UserProfile,
}

#[pymethods]
impl PyProfile {
    /// Terms are normalized with the index pipeline when `index` is given and
    /// taken verbatim otherwise.
    #[new]
    #[pyo3(signature = (id, weights, index = None))]
    fn new(id: String, weights: HashMap<String, f64>, index: Option<&PyIndex>) -> PyResult<Self> {
        let inner = match index {
            Some(ix) => UserProfile::from_raw_terms(id, weights, ix.inner.pipeline()),
            None => UserProfile::new(id, weights),
        };
        Ok(Self {
            inner: inner.map_err(py_err)?,
        })
    }

    #[getter]
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn weights(&self) -> Vec<(String, f64)> {
        self.inner.weights().iter().map(|(t, w)| (t.clone(), *w)).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Profile(id={:?}, terms={})",
            self.inner.id(),
            self.inner.weights().len()
        )
    }
}

/// Inverted index over a categorized corpus.
#[pyclass(module = "ppp", name = "Index", frozen)]
struct PyIndex {
    inner: CorpusIndex,
}

impl PyIndex {
    fn query(&self, text: &str) -> Query {
        Query::parse(text, self.inner.pipeline())
    }
}

#[pymethods]
impl PyIndex {
    /// `documents` holds (id, text, category) tuples. `stemmer` is "porter"
    /// or "none"; `stopwords` replaces the built-in list when given.
    #[new]
    #[pyo3(signature = (documents, stemmer = "porter", stopwords = None))]
    fn new(
        py: Python<'_>,
        documents: Vec<(String, String, String)>,
        stemmer: &str,
        stopwords: Option<Vec<String>>,
    ) -> PyResult<Self> {
        let stemmer = match stemmer {
            "porter" => Stemmer::Porter,
            "none" => Stemmer::Identity,
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown stemmer `{other}` (expected porter or none)"
                )))
            }
        };
        let pipeline = NormalizationPipeline::new(stopwords.unwrap_or_else(default_stopwords), stemmer);
        let docs: Vec<Document> = documents
            .into_iter()
            .map(|(id, text, category)| Document::new(id, text, category))
            .collect();
        let inner = py.detach(|| CorpusIndex::build(&docs, pipeline)).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: CorpusIndex::load(&path).map_err(py_err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(py_err)
    }

    #[getter]
    fn num_docs(&self) -> usize {
        self.inner.num_docs()
    }

    #[getter]
    fn vocabulary_size(&self) -> usize {
        self.inner.vocabulary().len()
    }

    #[getter]
    fn total_tokens(&self) -> u64 {
        self.inner.total_tokens()
    }

    #[getter]
    fn avg_doc_len(&self) -> f64 {
        self.inner.avg_doc_len()
    }

    fn categories(&self) -> Vec<String> {
        self.inner.categories().iter().cloned().collect()
    }

    /// Normalized tokens of `text` under the index pipeline.
    fn normalize(&self, text: &str) -> Vec<String> {
        self.inner.pipeline().normalize(text)
    }

    /// BM25 ranking as (doc id, score) pairs.
    #[pyo3(signature = (query, depth = 100))]
    fn rank(&self, query: &str, depth: usize) -> Vec<(String, f64)> {
        scored(&rank(&self.query(query), &self.inner, depth))
    }

    /// BM25 ranking re-scored against `profile`.
    #[pyo3(signature = (query, profile, depth = 100, beta = 0.5, rerank_depth = 100))]
    fn personalize(
        &self,
        query: &str,
        profile: &PyProfile,
        depth: usize,
        beta: f64,
        rerank_depth: usize,
    ) -> PyResult<Vec<(String, f64)>> {
        let original = rank(&self.query(query), &self.inner, depth);
        let strategy = PersonalizationStrategy {
            beta,
            depth: rerank_depth,
        };
        let r = personalize_rerank(&original, &profile.inner, &self.inner, strategy).map_err(py_err)?;
        Ok(scored(&r))
    }

    /// The 37 predictors for (query, profile), in column order.
    #[pyo3(signature = (query, profile, k = 10, alpha = 0.75))]
    fn predictors<'py>(
        &self,
        py: Python<'py>,
        query: &str,
        profile: &PyProfile,
        k: usize,
        alpha: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let v = compute_all(
            &self.query(query),
            &profile.inner,
            &self.inner,
            ExpansionPolicy { k },
            alpha,
        )
        .map_err(py_err)?;
        let out = PyDict::new(py);
        for (p, value) in v.iter() {
            out.set_item(p.name(), value)?;
        }
        Ok(out)
    }

    /// NDCG of the original and personalized rankings. Without `grades` the
    /// judgments are derived automatically from document categories.
    #[pyo3(signature = (query, profile, grades = None, cutoff = 50, threshold = 100, beta = 0.5, rerank_depth = 100))]
    #[allow(clippy::too_many_arguments)]
    fn evaluate<'py>(
        &self,
        py: Python<'py>,
        query: &str,
        profile: &PyProfile,
        grades: Option<HashMap<String, u32>>,
        cutoff: usize,
        threshold: usize,
        beta: f64,
        rerank_depth: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        let record = QueryRecord {
            id: query.to_owned(),
            query: self.query(query),
        };
        let settings = EvalSettings {
            strategy: PersonalizationStrategy {
                beta,
                depth: rerank_depth,
            },
            cutoff,
            threshold,
        };
        settings.validate().map_err(py_err)?;
        let supplied = grades.map(assessments);
        let (t, _, _) =
            evaluate_pair(&record, &profile.inner, &self.inner, &settings, supplied.as_ref()).map_err(py_err)?;
        let out = PyDict::new(py);
        out.set_item("ndcg_orig", t.ndcg_orig)?;
        out.set_item("ndcg_perso", t.ndcg_perso)?;
        out.set_item("diff_perso", t.diff_perso)?;
        Ok(out)
    }

    fn __repr__(&self) -> String {
        format!(
            "Index(documents={}, vocabulary={})",
            self.inner.num_docs(),
            self.inner.vocabulary().len()
        )
    }
}

fn assessments(grades: HashMap<String, u32>) -> RelevanceAssessments {
    let mut a = RelevanceAssessments::new();
    for (doc, g) in grades {
        a.insert(doc, g);
    }
    a
}

/// Predictor names in column order.
#[pyfunction]
fn predictor_names() -> Vec<&'static str> {
    Predictor::ALL.iter().map(|p| p.name()).collect()
}

/// NDCG@k of a ranked list of document ids against graded judgments.
#[pyfunction]
#[pyo3(signature = (ranking, grades, k = 50))]
fn ndcg(ranking: Vec<String>, grades: HashMap<String, u32>, k: usize) -> PyResult<f64> {
    let n = ranking.len();
    let scored = ranking
        .into_iter()
        .enumerate()
        .map(|(i, id)| (id, (n - i) as f64))
        .collect();
    let r = Ranking::new("", scored).map_err(py_err)?;
    Ok(ndcg_at_k(&r, &assessments(grades), k))
}

/// Correlation of two equal-length series; None when undefined.
#[pyfunction]
#[pyo3(signature = (x, y, method = "pearson"))]
fn correlate(x: Vec<f64>, y: Vec<f64>, method: &str) -> PyResult<Option<f64>> {
    let m: CorrelationMethod = method.parse().map_err(py_err)?;
    m.correlate(&x, &y).map_err(py_err)
}

/// Seeded synthetic corpus as a dict of documents, queries and profiles.
#[pyfunction]
#[pyo3(signature = (seed = 42, categories = 8, docs_per_category = 60, queries_per_category = 12, noise_ratio = 0.3, profile_noise = 0.3))]
fn synthetic_corpus<'py>(
    py: Python<'py>,
    seed: u64,
    categories: usize,
    docs_per_category: usize,
    queries_per_category: usize,
    noise_ratio: f64,
    profile_noise: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = SyntheticConfig {
        seed,
        categories,
        docs_per_category,
        queries_per_category,
        noise_ratio,
        profile_noise,
        ..SyntheticConfig::default()
    };
    let data = generate_synthetic_corpus(&cfg).map_err(py_err)?;
    let docs: Vec<(String, String, String)> = data
        .documents
        .into_iter()
        .map(|d| (d.doc_id, d.text, d.category))
        .collect();
    let profiles: Vec<PyProfile> = data.profiles.into_iter().map(|inner| PyProfile { inner }).collect();
    let out = PyDict::new(py);
    out.set_item("documents", docs)?;
    out.set_item("queries", data.queries)?;
    out.set_item("profiles", profiles)?;
    Ok(out)
}

fn cell_dict<'py>(py: Python<'py>, c: Option<GainCell>) -> PyResult<Option<Bound<'py, PyDict>>> {
    let Some(c) = c else { return Ok(None) };
    let d = PyDict::new(py);
    d.set_item("avg_pred", c.avg_pred)?;
    d.set_item("gain", c.gain)?;
    Ok(Some(d))
}

fn row_dict<'py>(py: Python<'py>, r: &GainRow) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("profile", &r.label)?;
    d.set_item("avg_perso", r.avg_perso)?;
    d.set_item("ideal", cell_dict(py, Some(r.ideal))?)?;
    d.set_item("classification", cell_dict(py, r.classification)?)?;
    d.set_item("regression", cell_dict(py, r.regression)?)?;
    Ok(d)
}

fn report_dict<'py>(py: Python<'py>, report: &GainReport) -> PyResult<Bound<'py, PyDict>> {
    let rows = report
        .profiles
        .iter()
        .map(|r| row_dict(py, r))
        .collect::<PyResult<Vec<_>>>()?;
    let d = PyDict::new(py);
    d.set_item("profiles", rows)?;
    d.set_item("mean", row_dict(py, &report.mean)?)?;
    d.set_item("ideal_gain_classification", report.ideal_gain_classification)?;
    d.set_item("ideal_gain_regression", report.ideal_gain_regression)?;
    Ok(d)
}

type AverageRow = (String, f64, f64, Option<f64>, Option<f64>);

/// Gain report from per-profile averages given as
/// (profile, avg_perso, ideal, classification, regression) tuples.
#[pyfunction]
fn gain_report<'py>(py: Python<'py>, rows: Vec<AverageRow>) -> PyResult<Bound<'py, PyDict>> {
    let averages: Vec<ProfileAverages> = rows
        .into_iter()
        .map(
            |(profile_id, avg_perso, ideal, classification, regression)| ProfileAverages {
                profile_id,
                avg_perso,
                ideal,
                classification,
                regression,
            },
        )
        .collect();
    report_dict(py, &GainReport::from_averages(&averages))
}

/// Cross-validated decision models over predictor and triplet CSV files.
/// `folds = 0` selects leave-one-out.
#[pyfunction]
#[pyo3(signature = (predictors, triplets, folds = 10, trees = 100, seed = 1))]
fn decide<'py>(
    py: Python<'py>,
    predictors: PathBuf,
    triplets: PathBuf,
    folds: usize,
    trees: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let run = py
        .detach(|| {
            let rows = io::read_predictors(io::open(&predictors)?, &predictors)?;
            let trips = io::read_triplets(io::open(&triplets)?, &triplets)?;
            let obs = io::join_observations(&trips, &rows)?;
            let protocol = if folds == 0 {
                Protocol::LeaveOneOut
            } else {
                Protocol::KFold(folds)
            };
            let mut options = TrainingOptions {
                seed,
                ..TrainingOptions::default()
            };
            options.forest.trees = trees;
            run_decisions(&obs, &Predictor::ALL, protocol, &options)
        })
        .map_err(py_err)?;
    report_dict(py, &run.report)
}

#[pymodule]
fn ppp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyIndex>()?;
    m.add_class::<PyProfile>()?;
    m.add_function(wrap_pyfunction!(predictor_names, m)?)?;
    m.add_function(wrap_pyfunction!(ndcg, m)?)?;
    m.add_function(wrap_pyfunction!(correlate, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(gain_report, m)?)?;
    m.add_function(wrap_pyfunction!(decide, m)?)?;
    Ok(())
}
