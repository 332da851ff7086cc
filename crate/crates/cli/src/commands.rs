use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use ppp_core::decision::{run_kinds, run_with_selection, train_model, DecisionRow, Protocol, TrainingOptions};
use ppp_core::eval::{build_triplets, summarize_triplets, AssessmentSet, AssessmentSource, EvalSettings, QueryRecord};
use ppp_core::forest::{ForestParams, ModelKind};
use ppp_core::index::CorpusIndex;
use ppp_core::io;
use ppp_core::observation::{Observation, TripletRecord};
use ppp_core::pipeline::{predictor_rows, PredictorSettings};
use ppp_core::predictors::{ExpansionPolicy, Predictor, UserProfile, DEFAULT_ALPHA};
use ppp_core::retrieval::PersonalizationStrategy;
use ppp_core::stats::{correlation_table, select_top, summarize, CorrelationMethod, CorrelationSummary};
use ppp_core::synth::{generate_synthetic_corpus, SyntheticConfig};
use ppp_core::text::{NormalizationPipeline, Stemmer};

use crate::config::{parse_opt, pick, require, FileConfig};
use crate::{CorrelateArgs, DecideArgs, EvaluateArgs, IndexArgs, PairArgs, PredictArgs, SynthArgs};

const DEFAULT_FOLDS: usize = 10;
const DEFAULT_TOP_N: usize = 10;
const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    UserStudy,
    Aspire,
    Synthetic,
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "user-study" => Ok(Self::UserStudy),
            "aspire" => Ok(Self::Aspire),
            "synthetic" => Ok(Self::Synthetic),
            other => Err(format!(
                "unknown mode `{other}` (expected user-study, aspire or synthetic)"
            )),
        }
    }
}

fn parse_stemmer(s: &str) -> Result<Stemmer> {
    match s {
        "porter" => Ok(Stemmer::Porter),
        "none" => Ok(Stemmer::Identity),
        other => bail!("unknown stemmer `{other}` (expected porter or none)"),
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn load_index(path: &Path) -> Result<CorpusIndex> {
    CorpusIndex::load(path).with_context(|| format!("loading index {}", path.display()))
}

pub fn index(a: IndexArgs, file: &FileConfig) -> Result<()> {
    let corpus = require(a.corpus, file.corpus.clone(), "corpus")?;
    let out = require(a.index, file.index.clone(), "index")?;
    let stemmer = match a.stemmer.or(file.stemmer.clone()) {
        Some(s) => parse_stemmer(&s)?,
        None => Stemmer::default(),
    };
    let pipeline = match a.stopwords.or(file.stopwords.clone()) {
        Some(path) => {
            let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            NormalizationPipeline::new(NormalizationPipeline::stopwords_from_str(&text), stemmer)
        }
        None => NormalizationPipeline::new(ppp_core::text::default_stopwords(), stemmer),
    };
    let docs = io::read_corpus(io::open(&corpus)?, &corpus)?;
    let ix = CorpusIndex::build(&docs, pipeline)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    ix.save(&out).with_context(|| format!("writing {}", out.display()))?;
    let s = ix.summary();
    println!(
        "documents={} vocabulary={} tokens={}",
        s.num_docs, s.vocabulary_size, s.total_tokens
    );
    Ok(())
}

struct Inputs {
    ix: CorpusIndex,
    queries: Vec<QueryRecord>,
    profiles: Vec<UserProfile>,
    assessments: Option<AssessmentSet>,
    out_dir: PathBuf,
}

impl Inputs {
    fn load(a: PairArgs, file: &FileConfig) -> Result<Self> {
        let index = require(a.index, file.index.clone(), "index")?;
        let queries = require(a.queries, file.queries.clone(), "queries")?;
        let profiles = require(a.profiles, file.profiles.clone(), "profiles")?;
        let out_dir = require(a.out_dir, file.out_dir.clone(), "out-dir")?;
        let mode: Mode = parse_opt(
            a.mode.map(|m| m.parse()).transpose().map_err(anyhow::Error::msg)?,
            file.mode.as_deref(),
            Mode::Aspire,
        )?;
        let ix = load_index(&index)?;
        let queries = io::read_queries(io::open(&queries)?, &queries, ix.pipeline())?;
        let profiles = io::read_profiles(io::open(&profiles)?, &profiles, ix.pipeline())?;
        let assessments = match mode {
            Mode::UserStudy => {
                let path = require(a.assessments, file.assessments.clone(), "assessments")?;
                Some(io::read_assessments(io::open(&path)?, &path)?)
            }
            Mode::Aspire | Mode::Synthetic => None,
        };
        Ok(Self {
            ix,
            queries,
            profiles,
            assessments,
            out_dir,
        })
    }

    fn source(&self) -> AssessmentSource<'_> {
        match &self.assessments {
            Some(set) => AssessmentSource::UserStudy(set),
            None => AssessmentSource::Aspire,
        }
    }
}

pub fn predict(a: PredictArgs, file: &FileConfig) -> Result<()> {
    let settings = PredictorSettings {
        expansion: ExpansionPolicy {
            k: pick(a.k, file.k, ExpansionPolicy::default().k),
        },
        alpha: pick(a.alpha, file.alpha, DEFAULT_ALPHA),
    };
    let inputs = Inputs::load(a.pairs, file)?;
    let rows = predictor_rows(&inputs.queries, &inputs.profiles, &inputs.ix, inputs.source(), settings)?;
    let mut w = create(&inputs.out_dir, "predictors.csv")?;
    io::write_predictors(&mut w, &rows)?;
    w.flush()?;
    println!("rows={} predictors={}", rows.len(), Predictor::ALL.len());
    Ok(())
}

pub fn evaluate(a: EvaluateArgs, file: &FileConfig) -> Result<()> {
    let defaults = EvalSettings::default();
    let settings = EvalSettings {
        strategy: PersonalizationStrategy {
            beta: pick(a.beta, file.beta, defaults.strategy.beta),
            depth: pick(a.rerank_depth, file.rerank_depth, defaults.strategy.depth),
        },
        cutoff: pick(a.cutoff, file.cutoff, defaults.cutoff),
        threshold: pick(a.threshold, file.threshold, defaults.threshold),
    };
    let inputs = Inputs::load(a.pairs, file)?;
    let triplets = build_triplets(
        &inputs.queries,
        &inputs.profiles,
        &inputs.ix,
        &settings,
        inputs.source(),
    )?;
    let records: Vec<TripletRecord> = triplets.iter().map(TripletRecord::from).collect();
    let mut w = create(&inputs.out_dir, "triplets.csv")?;
    io::write_triplets(&mut w, &records)?;
    w.flush()?;
    let summary = summarize_triplets(&triplets);
    let mut w = create(&inputs.out_dir, "counts.csv")?;
    io::write_triplet_summary(&mut w, &summary)?;
    w.flush()?;
    let c = summary.overall;
    println!(
        "triplets={} positive={} negative={} zero={}",
        c.total, c.positive, c.negative, c.zero
    );
    Ok(())
}

fn load_observations(
    predictors: Option<PathBuf>,
    triplets: Option<PathBuf>,
    file: &FileConfig,
) -> Result<Vec<Observation>> {
    let predictors = require(predictors, file.predictors.clone(), "predictors")?;
    let triplets = require(triplets, file.triplets.clone(), "triplets")?;
    let rows = io::read_predictors(io::open(&predictors)?, &predictors)?;
    let records = io::read_triplets(io::open(&triplets)?, &triplets)?;
    Ok(io::join_observations(&records, &rows)?)
}

pub fn correlate(a: CorrelateArgs, file: &FileConfig) -> Result<()> {
    let method: CorrelationMethod = parse_opt(
        a.method.map(|m| m.parse()).transpose()?,
        file.method.as_deref(),
        CorrelationMethod::default(),
    )?;
    let out_dir = require(a.out_dir, file.out_dir.clone(), "out-dir")?;
    let obs = load_observations(a.predictors, a.triplets, file)?;
    let table = correlation_table(&obs, method)?;
    let mut w = create(&out_dir, "correlations.csv")?;
    io::write_correlation_table(&mut w, &table)?;
    w.flush()?;
    let summary = summarize(&table);
    let mut w = create(&out_dir, "summary.csv")?;
    io::write_correlation_summary(&mut w, &summary)?;
    w.flush()?;
    let top: Vec<&str> = select_top(&summary, 3).iter().map(|p| p.name()).collect();
    println!(
        "method={method} profiles={} top={}",
        table.profiles.len(),
        top.join(",")
    );
    Ok(())
}

fn parse_kinds(s: &str) -> Result<Vec<ModelKind>> {
    if s == "both" {
        return Ok(vec![ModelKind::Classification, ModelKind::Regression]);
    }
    Ok(vec![s.parse()?])
}

fn fmt_share(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_owned(), |x| format!("{x:.2}"))
}

pub fn decide(a: DecideArgs, file: &FileConfig) -> Result<()> {
    let kinds = parse_kinds(a.kind.as_deref().or(file.kind.as_deref()).unwrap_or("both"))?;
    let folds = pick(a.folds, file.folds, DEFAULT_FOLDS);
    let protocol = if folds == 0 {
        Protocol::LeaveOneOut
    } else {
        Protocol::KFold(folds)
    };
    let top_n = pick(a.top_n, file.top_n, DEFAULT_TOP_N);
    let options = TrainingOptions {
        forest: ForestParams {
            trees: pick(a.trees, file.trees, ForestParams::default().trees),
            ..ForestParams::default()
        },
        seed: pick(a.seed, file.seed, DEFAULT_SEED),
        resample: a.resample || file.resample.unwrap_or(false),
    };
    let out_dir = require(a.out_dir, file.out_dir.clone(), "out-dir")?;
    let obs = load_observations(a.predictors, a.triplets, file)?;
    let summary: CorrelationSummary = match a.summary.or(file.summary.clone()) {
        Some(path) => io::read_correlation_summary(io::open(&path)?, &path)?,
        None => summarize(&correlation_table(&obs, CorrelationMethod::default())?),
    };

    let full = run_kinds(&obs, &Predictor::ALL, protocol, &options, &kinds)?;
    let mut w = create(&out_dir, "gains_full.csv")?;
    io::write_gain_report(&mut w, &full.report)?;
    w.flush()?;

    let selected = select_top(&summary, top_n);
    let top = if kinds.len() == 2 {
        run_with_selection(&obs, &summary, top_n, protocol, &options)?
    } else {
        run_kinds(&obs, &selected, protocol, &options, &kinds)?
    };
    let mut w = create(&out_dir, &format!("gains_top{top_n}.csv"))?;
    io::write_gain_report(&mut w, &top.report)?;
    w.flush()?;
    let mut w = create(&out_dir, &format!("features_top{top_n}.txt"))?;
    for p in &top.features {
        writeln!(w, "{p}")?;
    }
    w.flush()?;

    let models = save_models(&obs, &kinds, &options, &out_dir.join("models"))?;
    println!(
        "full: cls={}% reg={}% | top{top_n}: cls={}% reg={}% | models={models}",
        fmt_share(full.report.ideal_gain_classification),
        fmt_share(full.report.ideal_gain_regression),
        fmt_share(top.report.ideal_gain_classification),
        fmt_share(top.report.ideal_gain_regression),
    );
    Ok(())
}

/// One model per profile and kind, trained on all of the profile's rows.
fn save_models(obs: &[Observation], kinds: &[ModelKind], options: &TrainingOptions, dir: &Path) -> Result<usize> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let names: Vec<String> = Predictor::ALL.iter().map(|p| p.name().to_owned()).collect();
    let rows: Vec<DecisionRow> = obs
        .iter()
        .map(|o| DecisionRow::from_observation(o, &Predictor::ALL))
        .collect();
    let profiles: BTreeSet<&str> = rows.iter().map(|r| r.profile_id.as_str()).collect();
    let mut saved = 0;
    for profile in profiles {
        let kept: Vec<&DecisionRow> = rows
            .iter()
            .filter(|r| r.profile_id == profile && r.diff_perso != 0.0)
            .collect();
        if kept.is_empty() {
            continue;
        }
        for &kind in kinds {
            let model = train_model(&kept, kind, &names, options, options.seed)?;
            let path = dir.join(format!("{profile}.{kind}.json"));
            model
                .save(&path)
                .with_context(|| format!("writing {}", path.display()))?;
            saved += 1;
        }
    }
    Ok(saved)
}

pub fn synth(a: SynthArgs, file: &FileConfig) -> Result<()> {
    let defaults = SyntheticConfig::default();
    let config = SyntheticConfig {
        seed: pick(a.seed, file.seed, defaults.seed),
        categories: a.categories.unwrap_or(defaults.categories),
        docs_per_category: a.docs_per_category.unwrap_or(defaults.docs_per_category),
        queries_per_category: a.queries_per_category.unwrap_or(defaults.queries_per_category),
        noise_ratio: a.noise_ratio.unwrap_or(defaults.noise_ratio),
        profile_noise: a.profile_noise.unwrap_or(defaults.profile_noise),
        ..defaults
    };
    let out_dir = require(a.out_dir, file.out_dir.clone(), "out-dir")?;
    let data = generate_synthetic_corpus(&config)?;
    let mut w = create(&out_dir, "corpus.jsonl")?;
    io::write_corpus(&mut w, &data.documents)?;
    w.flush()?;
    let mut w = create(&out_dir, "queries.tsv")?;
    io::write_queries(&mut w, &data.queries)?;
    w.flush()?;
    let mut w = create(&out_dir, "profiles.tsv")?;
    io::write_profiles(&mut w, &data.profiles)?;
    w.flush()?;
    println!(
        "documents={} queries={} profiles={}",
        data.documents.len(),
        data.queries.len(),
        data.profiles.len()
    );
    Ok(())
}
