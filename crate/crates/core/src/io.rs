//! Readers and writers for the pipeline's text formats.
//!
//! Inputs: JSON-lines corpus, stopword list, tab-separated queries and
//! profiles, whitespace-separated assessments. Outputs are CSV with fixed
//! headers; floats use the shortest representation that round-trips.

use std::collections::BTreeMap;
use std::io::{BufRead, Read, Write};
use std::path::{Path, PathBuf};

use crate::decision::{GainCell, GainReport, GainRow};
use crate::error::{Error, Result};
use crate::eval::{AssessmentSet, QueryRecord, TripletSummary};
use crate::index::Document;
use crate::observation::{Observation, TripletRecord};
use crate::predictors::{Predictor, PredictorVector, Query, UserProfile};
use crate::stats::{CorrelationSummary, CorrelationTable};
use crate::text::NormalizationPipeline;

const NA: &str = "NA";

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_owned(),
        line,
        message: message.into(),
    }
}

fn non_blank_lines<R: BufRead>(reader: R) -> impl Iterator<Item = (usize, std::io::Result<String>)> {
    reader
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()))
}

/// One JSON object per line with `id`, `text` and `category`.
pub fn read_corpus<R: BufRead>(reader: R, path: &Path) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for (n, line) in non_blank_lines(reader) {
        let line = line?;
        let doc: Document = serde_json::from_str(&line).map_err(|e| parse_err(path, n, e.to_string()))?;
        docs.push(doc);
    }
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(docs)
}

pub fn write_corpus<W: Write>(mut w: W, docs: &[Document]) -> Result<()> {
    for d in docs {
        serde_json::to_writer(&mut w, d)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// `query_id <TAB> text`
pub fn read_queries<R: BufRead>(reader: R, path: &Path, pipeline: &NormalizationPipeline) -> Result<Vec<QueryRecord>> {
    let mut out: Vec<QueryRecord> = Vec::new();
    for (n, line) in non_blank_lines(reader) {
        let line = line?;
        let (id, text) = line
            .split_once('\t')
            .ok_or_else(|| parse_err(path, n, "expected `query_id<TAB>text`"))?;
        let id = id.trim();
        if id.is_empty() {
            return Err(parse_err(path, n, "empty query id"));
        }
        if out.iter().any(|q| q.id == id) {
            return Err(parse_err(path, n, format!("duplicate query id `{id}`")));
        }
        out.push(QueryRecord {
            id: id.to_owned(),
            query: Query::parse(text, pipeline),
        });
    }
    Ok(out)
}

pub fn write_queries<W: Write>(mut w: W, queries: &[(String, String)]) -> Result<()> {
    for (id, text) in queries {
        writeln!(w, "{id}\t{text}")?;
    }
    Ok(())
}

/// `profile_id <TAB> term:weight,term:weight,...`
pub fn read_profiles<R: BufRead>(reader: R, path: &Path, pipeline: &NormalizationPipeline) -> Result<Vec<UserProfile>> {
    let mut out: Vec<UserProfile> = Vec::new();
    for (n, line) in non_blank_lines(reader) {
        let line = line?;
        let (id, rest) = line
            .split_once('\t')
            .ok_or_else(|| parse_err(path, n, "expected `profile_id<TAB>term:weight,...`"))?;
        let id = id.trim();
        let mut terms = Vec::new();
        for item in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (term, weight) = item
                .rsplit_once(':')
                .ok_or_else(|| parse_err(path, n, format!("expected `term:weight`, got `{item}`")))?;
            let weight: f64 = weight
                .trim()
                .parse()
                .map_err(|_| parse_err(path, n, format!("bad weight in `{item}`")))?;
            terms.push((term.trim().to_owned(), weight));
        }
        if out.iter().any(|p| p.id() == id) {
            return Err(parse_err(path, n, format!("duplicate profile id `{id}`")));
        }
        let profile =
            UserProfile::from_raw_terms(id, terms, pipeline).map_err(|e| parse_err(path, n, e.to_string()))?;
        out.push(profile);
    }
    Ok(out)
}

pub fn write_profiles<W: Write>(mut w: W, profiles: &[UserProfile]) -> Result<()> {
    for p in profiles {
        let terms: Vec<String> = p.weights().iter().map(|(t, wt)| format!("{t}:{wt}")).collect();
        writeln!(w, "{}\t{}", p.id(), terms.join(","))?;
    }
    Ok(())
}

/// `query_id profile_id doc_id grade`, whitespace separated.
pub fn read_assessments<R: BufRead>(reader: R, path: &Path) -> Result<AssessmentSet> {
    let mut set = AssessmentSet::default();
    for (n, line) in non_blank_lines(reader) {
        let line = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [q, p, d, g] = fields[..] else {
            return Err(parse_err(path, n, "expected `query_id profile_id doc_id grade`"));
        };
        let grade: u32 = g
            .parse()
            .map_err(|_| parse_err(path, n, format!("grade must be a nonnegative integer, got `{g}`")))?;
        set.insert(q, p, d, grade);
    }
    Ok(set)
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    parse_err(path, line, e.to_string())
}

fn parse_f64(path: &Path, line: usize, s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| parse_err(path, line, format!("bad number `{s}`")))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_owned(), |x| x.to_string())
}

/// A predictor vector for one (user, profile, query) triple.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorRow {
    pub user: String,
    pub profile: String,
    pub query: String,
    pub predictors: PredictorVector,
}

pub fn predictor_header() -> Vec<&'static str> {
    let mut h = vec!["user", "profile", "query"];
    h.extend(Predictor::ALL.iter().map(|p| p.name()));
    h
}

pub fn write_predictors<W: Write>(w: W, rows: &[PredictorRow]) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(predictor_header()).map_err(std::io::Error::from)?;
    for r in rows {
        let mut rec = vec![r.user.clone(), r.profile.clone(), r.query.clone()];
        rec.extend(r.predictors.values().iter().map(f64::to_string));
        out.write_record(&rec).map_err(std::io::Error::from)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_predictors<R: Read>(r: R, path: &Path) -> Result<Vec<PredictorRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header != predictor_header() {
        return Err(parse_err(
            path,
            1,
            "predictor header does not match the expected columns",
        ));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = i + 2;
        let mut values = [0.0; 37];
        for (k, v) in values.iter_mut().enumerate() {
            *v = parse_f64(path, line, &rec[3 + k])?;
        }
        out.push(PredictorRow {
            user: rec[0].to_owned(),
            profile: rec[1].to_owned(),
            query: rec[2].to_owned(),
            predictors: PredictorVector::from_values(values),
        });
    }
    Ok(out)
}

pub fn write_triplets<W: Write>(w: W, rows: &[TripletRecord]) -> Result<()> {
    let mut out = csv_writer(w);
    for r in rows {
        out.serialize(r).map_err(std::io::Error::from)?;
    }
    if rows.is_empty() {
        out.write_record(["user", "profile", "query", "ndcg_orig", "ndcg_perso", "diff_perso"])
            .map_err(std::io::Error::from)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_triplets<R: Read>(r: R, path: &Path) -> Result<Vec<TripletRecord>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|rec| rec.map_err(|e| csv_err(path, e)))
        .collect()
}

pub fn write_triplet_summary<W: Write>(w: W, summary: &TripletSummary) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["profile", "positive", "negative", "zero", "total"])
        .map_err(std::io::Error::from)?;
    let rows = summary.by_profile.iter().map(|(p, c)| (p.as_str(), c));
    for (p, c) in rows.chain(std::iter::once(("total", &summary.overall))) {
        out.write_record([
            p.to_owned(),
            c.positive.to_string(),
            c.negative.to_string(),
            c.zero.to_string(),
            c.total.to_string(),
        ])
        .map_err(std::io::Error::from)?;
    }
    out.flush()?;
    Ok(())
}

/// Inner join of triplet outcomes with predictor rows on (profile, query).
pub fn join_observations(triplets: &[TripletRecord], predictors: &[PredictorRow]) -> Result<Vec<Observation>> {
    let by_key: BTreeMap<(&str, &str), &PredictorRow> = predictors
        .iter()
        .map(|r| ((r.profile.as_str(), r.query.as_str()), r))
        .collect();
    triplets
        .iter()
        .map(|t| {
            let row = by_key
                .get(&(t.profile.as_str(), t.query.as_str()))
                .ok_or_else(|| Error::UnknownId {
                    kind: "predictor row for (profile, query)",
                    id: format!("{}/{}", t.profile, t.query),
                })?;
            Ok(Observation {
                profile_id: t.profile.clone(),
                query_id: t.query.clone(),
                predictors: row.predictors,
                ndcg_orig: t.ndcg_orig,
                ndcg_perso: t.ndcg_perso,
                diff_perso: t.diff_perso,
            })
        })
        .collect()
}

/// Rows are predictors, columns are profiles; undefined cells are `NA`.
pub fn write_correlation_table<W: Write>(w: W, table: &CorrelationTable) -> Result<()> {
    let mut out = csv_writer(w);
    let mut header = vec!["predictor".to_owned()];
    header.extend(table.profiles.iter().cloned());
    out.write_record(&header).map_err(std::io::Error::from)?;
    for p in Predictor::ALL {
        let mut rec = vec![p.name().to_owned()];
        rec.extend(table.row(p).iter().map(|c| fmt_opt(*c)));
        out.write_record(&rec).map_err(std::io::Error::from)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_correlation_summary<W: Write>(w: W, summary: &CorrelationSummary) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["predictor", "mean", "max"])
        .map_err(std::io::Error::from)?;
    for p in Predictor::ALL {
        if let Some(e) = summary.get(p) {
            out.write_record([p.name().to_owned(), fmt_opt(e.mean), fmt_opt(e.max)])
                .map_err(std::io::Error::from)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_correlation_summary<R: Read>(r: R, path: &Path) -> Result<CorrelationSummary> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut summary = CorrelationSummary::default();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = i + 2;
        let p: Predictor = rec[0]
            .parse()
            .map_err(|e: Error| parse_err(path, line, e.to_string()))?;
        let opt = |s: &str| -> Result<Option<f64>> {
            if s == NA {
                Ok(None)
            } else {
                parse_f64(path, line, s).map(Some)
            }
        };
        summary.entries.insert(
            p,
            crate::stats::SummaryEntry {
                mean: opt(&rec[1])?,
                max: opt(&rec[2])?,
            },
        );
    }
    Ok(summary)
}

pub const GAIN_HEADER: [&str; 8] = [
    "profile",
    "avg_perso",
    "ideal_avg_pred",
    "ideal_gain",
    "cls_avg_pred",
    "cls_gain",
    "reg_avg_pred",
    "reg_gain",
];

fn gain_record(row: &GainRow) -> Vec<String> {
    let cell = |c: Option<GainCell>| match c {
        Some(c) => [c.avg_pred.to_string(), c.gain.to_string()],
        None => [String::new(), String::new()],
    };
    let mut rec = vec![row.label.clone(), row.avg_perso.to_string()];
    rec.extend(cell(Some(row.ideal)));
    rec.extend(cell(row.classification));
    rec.extend(cell(row.regression));
    rec
}

/// One row per profile, then `mean`, then `ideal_gain_pct` holding the
/// share of ideal gain in the two model gain columns.
pub fn write_gain_report<W: Write>(w: W, report: &GainReport) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(GAIN_HEADER).map_err(std::io::Error::from)?;
    for row in report.profiles.iter().chain(std::iter::once(&report.mean)) {
        out.write_record(gain_record(row)).map_err(std::io::Error::from)?;
    }
    let share = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    out.write_record([
        "ideal_gain_pct".to_owned(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        share(report.ideal_gain_classification),
        String::new(),
        share(report.ideal_gain_regression),
    ])
    .map_err(std::io::Error::from)?;
    out.flush()?;
    Ok(())
}

/// Convenience for opening a file with its path attached to errors.
pub fn open(path: &Path) -> Result<std::io::BufReader<std::fs::File>> {
    std::fs::File::open(path)
        .map(std::io::BufReader::new)
        .map_err(|e| Error::Parse {
            path: PathBuf::from(path),
            line: 0,
            message: e.to_string(),
        })
}
