//! Random forests of CART trees for binary classification and regression.
//!
//! Trees are grown on bootstrap samples to purity (no depth limit, one sample
//! per leaf minimum) and each split considers a random subset of features.
//! Tree `i` draws from a ChaCha stream `i` keyed by the master seed, so a
//! forest is reproducible regardless of how training is scheduled.

use std::fs;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Classification,
    Regression,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classification" | "cls" => Ok(Self::Classification),
            "regression" | "reg" => Ok(Self::Regression),
            other => Err(invalid("model kind", format!("unknown model kind `{other}`"))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Classification => "classification",
            Self::Regression => "regression",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub trees: usize,
    /// Features tried per split; `None` means ⌈√F⌉ for classification and
    /// ⌈F/3⌉ for regression.
    pub max_features: Option<usize>,
    pub min_samples_leaf: usize,
    pub max_depth: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            trees: 100,
            max_features: None,
            min_samples_leaf: 1,
            max_depth: None,
        }
    }
}

impl ForestParams {
    fn features_per_split(&self, kind: ModelKind, num_features: usize) -> usize {
        let default = match kind {
            ModelKind::Classification => (num_features as f64).sqrt().ceil() as usize,
            ModelKind::Regression => num_features.div_ceil(3),
        };
        self.max_features.unwrap_or(default).clamp(1, num_features.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }
}

struct Grower<'a> {
    kind: ModelKind,
    x: &'a [Vec<f64>],
    y: &'a [f64],
    per_split: usize,
    min_leaf: usize,
    max_depth: Option<usize>,
    nodes: Vec<Node>,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    cost: f64,
}

impl Grower<'_> {
    fn leaf_value(&self, idx: &[usize]) -> f64 {
        idx.iter().map(|&i| self.y[i]).sum::<f64>() / idx.len() as f64
    }

    fn grow(&mut self, idx: &mut [usize], depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf(self.leaf_value(idx)));
        let pure = idx.windows(2).all(|w| self.y[w[0]] == self.y[w[1]]);
        let depth_capped = self.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_capped || idx.len() < 2 * self.min_leaf {
            return slot;
        }

        let Some(best) = self.best_split(idx, rng) else {
            return slot;
        };
        let mid = partition(idx, |i| self.x[i][best.feature] <= best.threshold);
        let (l, r) = idx.split_at_mut(mid);
        let left = self.grow(l, depth + 1, rng);
        let right = self.grow(r, depth + 1, rng);
        self.nodes[slot] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        slot
    }

    /// Tries `per_split` random features; keeps drawing further features
    /// only while none of the tried ones admits a valid split.
    fn best_split(&self, idx: &[usize], rng: &mut ChaCha8Rng) -> Option<Candidate> {
        let num_features = self.x[idx[0]].len();
        let mut features: Vec<usize> = (0..num_features).collect();
        features.shuffle(rng);
        let mut best: Option<Candidate> = None;
        for (tried, &f) in features.iter().enumerate() {
            if tried >= self.per_split && best.is_some() {
                break;
            }
            if let Some(c) = self.best_split_on(idx, f) {
                if best.as_ref().is_none_or(|b| c.cost < b.cost) {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn best_split_on(&self, idx: &[usize], feature: usize) -> Option<Candidate> {
        let mut sorted: Vec<(f64, f64)> = idx.iter().map(|&i| (self.x[i][feature], self.y[i])).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = sorted.len();
        let total: f64 = sorted.iter().map(|s| s.1).sum();
        let mut left_sum = 0.0;
        let mut best: Option<Candidate> = None;
        for i in 0..n - 1 {
            left_sum += sorted[i].1;
            let n_left = i + 1;
            let n_right = n - n_left;
            if sorted[i].0 == sorted[i + 1].0 || n_left < self.min_leaf || n_right < self.min_leaf {
                continue;
            }
            let right_sum = total - left_sum;
            let cost = match self.kind {
                // Weighted Gini, up to a constant factor: Σ yes·no / n per side.
                ModelKind::Classification => {
                    let (nl, nr) = (n_left as f64, n_right as f64);
                    left_sum * (nl - left_sum) / nl + right_sum * (nr - right_sum) / nr
                }
                // Weighted SSE minus the constant Σy².
                ModelKind::Regression => {
                    -(left_sum * left_sum / n_left as f64 + right_sum * right_sum / n_right as f64)
                }
            };
            if best.as_ref().is_none_or(|b| cost < b.cost) {
                let (a, b) = (sorted[i].0, sorted[i + 1].0);
                let mut threshold = a + (b - a) / 2.0;
                if threshold >= b {
                    threshold = a;
                }
                best = Some(Candidate {
                    feature,
                    threshold,
                    cost,
                });
            }
        }
        best
    }
}

fn partition(idx: &mut [usize], mut goes_left: impl FnMut(usize) -> bool) -> usize {
    let mut mid = 0;
    for i in 0..idx.len() {
        if goes_left(idx[i]) {
            idx.swap(i, mid);
            mid += 1;
        }
    }
    mid
}

/// A trained forest together with its feature schema and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    version: u32,
    kind: ModelKind,
    features: Vec<String>,
    seed: u64,
    params: ForestParams,
    /// Set when classification training saw a single label.
    degenerate: bool,
    trees: Vec<Tree>,
}

impl ForestModel {
    /// Trains a forest. Classification targets are 1.0 (yes) / 0.0 (no).
    pub fn train(
        kind: ModelKind,
        features: Vec<String>,
        x: &[Vec<f64>],
        y: &[f64],
        params: ForestParams,
        seed: u64,
    ) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: y.len(),
            });
        }
        if let Some(row) = x.iter().find(|r| r.len() != features.len()) {
            return Err(Error::SchemaMismatch {
                expected: features.len(),
                actual: row.len(),
            });
        }
        if params.trees == 0 {
            return Err(invalid("trees", "must be at least 1"));
        }
        if kind == ModelKind::Classification && y.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(invalid("labels", "classification targets must be 0 or 1"));
        }
        let degenerate = kind == ModelKind::Classification && y.windows(2).all(|w| w[0] == w[1]);
        let per_split = params.features_per_split(kind, features.len());

        let trees = (0..params.trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(t as u64);
                let n = x.len();
                let mut idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                let mut grower = Grower {
                    kind,
                    x,
                    y,
                    per_split,
                    min_leaf: params.min_samples_leaf.max(1),
                    max_depth: params.max_depth,
                    nodes: Vec::new(),
                };
                grower.grow(&mut idx, 0, &mut rng);
                Tree { nodes: grower.nodes }
            })
            .collect();

        Ok(Self {
            version: MODEL_FORMAT_VERSION,
            kind,
            features,
            seed,
            params,
            degenerate,
            trees,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn num_trees(&self) -> usize {
        self.trees.len()
    }

    /// Classification: 1.0 for a yes majority (ties count as yes), else 0.0.
    /// Regression: mean tree output.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.features.len() {
            return Err(Error::SchemaMismatch {
                expected: self.features.len(),
                actual: x.len(),
            });
        }
        let n = self.trees.len() as f64;
        Ok(match self.kind {
            ModelKind::Classification => {
                let yes = self.trees.iter().filter(|t| t.predict(x) >= 0.5).count() as f64;
                if 2.0 * yes >= n {
                    1.0
                } else {
                    0.0
                }
            }
            ModelKind::Regression => self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / n,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(s)?;
        if model.version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelVersion(model.version));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
