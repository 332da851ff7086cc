//! Correlation between predictors and diffPerso.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::observation::Observation;
use crate::predictors::Predictor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationMethod {
    #[default]
    Pearson,
    Spearman,
    Kendall,
}

impl FromStr for CorrelationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pearson" => Ok(Self::Pearson),
            "spearman" => Ok(Self::Spearman),
            "kendall" => Ok(Self::Kendall),
            other => Err(invalid("method", format!("unknown correlation method `{other}`"))),
        }
    }
}

impl fmt::Display for CorrelationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pearson => "pearson",
            Self::Spearman => "spearman",
            Self::Kendall => "kendall",
        })
    }
}

impl CorrelationMethod {
    pub fn correlate(self, x: &[f64], y: &[f64]) -> Result<Option<f64>> {
        match self {
            Self::Pearson => pearson(x, y),
            Self::Spearman => spearman(x, y),
            Self::Kendall => kendall(x, y),
        }
    }
}

fn check_lengths(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    Ok(())
}

fn is_constant(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] == w[1])
}

/// Sample Pearson correlation. `None` when fewer than two points or either
/// series is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    check_lengths(x, y)?;
    if x.len() < 2 || is_constant(x) || is_constant(y) {
        return Ok(None);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    Ok(Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)))
}

/// 1-based ranks, tied values sharing the mean of their positions.
pub fn mid_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    check_lengths(x, y)?;
    pearson(&mid_ranks(x), &mid_ranks(y))
}

fn tied_pairs<T: PartialEq>(sorted: &[T]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

// Sorts `v` and returns the number of strict inversions.
fn merge_count(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid], buf) + merge_count(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            swaps += (mid - i) as u64;
            buf.push(v[j]);
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

/// Kendall's tau-b, computed in O(n log n) with Knight's merge-sort method.
pub fn kendall(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    check_lengths(x, y)?;
    let n = x.len();
    if n < 2 {
        return Ok(None);
    }
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let x_ties = tied_pairs(&xs);
    let joint_ties = tied_pairs(&pairs);

    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let swaps = merge_count(&mut ys, &mut Vec::with_capacity(n));
    let y_ties = tied_pairs(&ys);

    let total = (n * (n - 1) / 2) as u64;
    let denom = ((total - x_ties) as f64 * (total - y_ties) as f64).sqrt();
    if denom == 0.0 {
        return Ok(None);
    }
    let score = total as f64 - x_ties as f64 - y_ties as f64 + joint_ties as f64 - 2.0 * swaps as f64;
    Ok(Some((score / denom).clamp(-1.0, 1.0)))
}

/// Predictor × profile correlation with diffPerso. `None` cells are undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTable {
    pub method: CorrelationMethod,
    pub profiles: Vec<String>,
    /// Indexed by [`Predictor::index`], then by profile position.
    pub cells: Vec<Vec<Option<f64>>>,
}

impl CorrelationTable {
    pub fn cell(&self, predictor: Predictor, profile: &str) -> Option<f64> {
        let col = self.profiles.iter().position(|p| p == profile)?;
        self.cells[predictor.index()][col]
    }

    pub fn row(&self, predictor: Predictor) -> &[Option<f64>] {
        &self.cells[predictor.index()]
    }
}

pub fn correlation_table(observations: &[Observation], method: CorrelationMethod) -> Result<CorrelationTable> {
    let mut groups: BTreeMap<&str, Vec<&Observation>> = BTreeMap::new();
    for o in observations {
        groups.entry(o.profile_id.as_str()).or_default().push(o);
    }
    let profiles: Vec<String> = groups.keys().map(|p| p.to_string()).collect();
    let mut cells = vec![Vec::with_capacity(profiles.len()); Predictor::ALL.len()];
    for rows in groups.values() {
        let diffs: Vec<f64> = rows.iter().map(|o| o.diff_perso).collect();
        for p in Predictor::ALL {
            let xs: Vec<f64> = rows.iter().map(|o| o.predictors.get(p)).collect();
            cells[p.index()].push(method.correlate(&xs, &diffs)?);
        }
    }
    Ok(CorrelationTable {
        method,
        profiles,
        cells,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SummaryEntry {
    /// Mean over defined cells.
    pub mean: Option<f64>,
    /// Signed value of the largest-magnitude cell.
    pub max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorrelationSummary {
    pub entries: BTreeMap<Predictor, SummaryEntry>,
}

impl CorrelationSummary {
    /// Builds a summary from known per-predictor means (e.g. a published table).
    pub fn from_means<I: IntoIterator<Item = (Predictor, f64)>>(means: I) -> Self {
        Self {
            entries: means
                .into_iter()
                .map(|(p, m)| {
                    (
                        p,
                        SummaryEntry {
                            mean: Some(m),
                            max: None,
                        },
                    )
                })
                .collect(),
        }
    }

    pub fn get(&self, p: Predictor) -> Option<&SummaryEntry> {
        self.entries.get(&p)
    }
}

pub fn summarize_row(cells: &[Option<f64>]) -> SummaryEntry {
    let defined: Vec<f64> = cells.iter().flatten().copied().collect();
    if defined.is_empty() {
        return SummaryEntry::default();
    }
    let mean = defined.iter().sum::<f64>() / defined.len() as f64;
    let max = defined.iter().copied().fold(None, |best: Option<f64>, v| match best {
        Some(b) if b.abs() >= v.abs() => Some(b),
        _ => Some(v),
    });
    SummaryEntry { mean: Some(mean), max }
}

pub fn summarize(table: &CorrelationTable) -> CorrelationSummary {
    CorrelationSummary {
        entries: Predictor::ALL
            .iter()
            .map(|&p| (p, summarize_row(table.row(p))))
            .collect(),
    }
}

/// The `n` predictors with largest |mean|, ties by name. Predictors with an
/// undefined mean rank last.
pub fn select_top(summary: &CorrelationSummary, n: usize) -> Vec<Predictor> {
    let mut ranked: Vec<(Predictor, Option<f64>)> = summary.entries.iter().map(|(&p, e)| (p, e.mean)).collect();
    ranked.sort_by(|a, b| match (a.1, b.1) {
        (Some(x), Some(y)) => y.abs().total_cmp(&x.abs()).then_with(|| a.0.name().cmp(b.0.name())),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.0.name().cmp(b.0.name()),
    });
    ranked.into_iter().take(n).map(|(p, _)| p).collect()
}
