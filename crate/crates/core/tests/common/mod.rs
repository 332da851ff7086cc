//! Shared fixtures and brute-force reference implementations.
#![allow(dead_code)]

use std::collections::BTreeMap;

use ppp_core::index::{CorpusIndex, Document};
use ppp_core::predictors::{Query, UserProfile};
use ppp_core::text::NormalizationPipeline;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// A random corpus over `w0..w{vocab}` with raw whitespace tokenization.
pub struct RandomCase {
    pub docs: Vec<Vec<String>>,
    pub query: Vec<String>,
    pub profile: BTreeMap<String, f64>,
}

impl RandomCase {
    pub fn generate(seed: u64, max_docs: usize, max_vocab: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vocab = rng.gen_range(2..=max_vocab);
        let n = rng.gen_range(1..=max_docs);
        // Skewed draws so some terms are frequent and some appear once.
        let draw = |rng: &mut ChaCha8Rng| {
            let u: f64 = rng.gen();
            format!("w{}", ((u * u) * vocab as f64) as usize)
        };
        let docs = (0..n)
            .map(|_| {
                let len = rng.gen_range(1..=40);
                (0..len).map(|_| draw(&mut rng)).collect()
            })
            .collect();
        let qlen = rng.gen_range(0..=6);
        let query = (0..qlen)
            .map(|_| {
                if rng.gen_bool(0.2) {
                    format!("oov{}", rng.gen_range(0..3))
                } else {
                    draw(&mut rng)
                }
            })
            .collect();
        let pterms = rng.gen_range(0..=20);
        let profile = (0..pterms)
            .map(|_| {
                let t = if rng.gen_bool(0.1) {
                    format!("oov{}", rng.gen_range(0..3))
                } else {
                    draw(&mut rng)
                };
                // Coarse weights so ties occur.
                (t, f64::from(rng.gen_range(1..=4)) / 4.0)
            })
            .collect();
        Self { docs, query, profile }
    }

    pub fn documents(&self) -> Vec<Document> {
        self.docs
            .iter()
            .enumerate()
            .map(|(i, d)| Document::new(format!("d{i:03}"), d.join(" "), "c"))
            .collect()
    }

    pub fn index(&self) -> CorpusIndex {
        CorpusIndex::build(&self.documents(), NormalizationPipeline::plain()).unwrap()
    }

    pub fn query(&self) -> Query {
        Query::from_tokens(self.query.iter().cloned())
    }

    pub fn user_profile(&self) -> UserProfile {
        UserProfile::new("u", self.profile.iter().map(|(t, w)| (t.clone(), *w))).unwrap()
    }
}

struct Naive<'a> {
    docs: &'a [Vec<String>],
}

impl Naive<'_> {
    fn n(&self) -> f64 {
        self.docs.len() as f64
    }
    fn total(&self) -> f64 {
        self.docs.iter().map(Vec::len).sum::<usize>() as f64
    }
    fn tf(&self, d: usize, t: &str) -> usize {
        self.docs[d].iter().filter(|w| *w == t).count()
    }
    fn df(&self, t: &str) -> usize {
        (0..self.docs.len()).filter(|&d| self.tf(d, t) > 0).count()
    }
    fn cf(&self, t: &str) -> usize {
        (0..self.docs.len()).map(|d| self.tf(d, t)).sum()
    }
    fn idf(&self, t: &str) -> f64 {
        (self.n() / self.df(t) as f64).ln()
    }
    fn ictf(&self, t: &str) -> f64 {
        (self.total() / self.cf(t) as f64).ln()
    }
    fn scq(&self, t: &str) -> f64 {
        (1.0 + (self.cf(t) as f64).ln()) * (1.0 + self.n() / self.df(t) as f64).ln()
    }
    fn var(&self, t: &str) -> f64 {
        let idf_part = (1.0 + self.n() / self.df(t) as f64).ln();
        let w: Vec<f64> = (0..self.docs.len())
            .map(|d| self.tf(d, t))
            .filter(|&tf| tf > 0)
            .map(|tf| (1.0 + (tf as f64).ln()) * idf_part)
            .collect();
        let m = w.iter().sum::<f64>() / w.len() as f64;
        (w.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / w.len() as f64).sqrt()
    }

    /// [sum, avg, max] of `f` over in-vocabulary query tokens.
    fn family(&self, q: &[String], f: impl Fn(&Self, &str) -> f64) -> [f64; 3] {
        let vals: Vec<f64> = q.iter().filter(|t| self.df(t) > 0).map(|t| f(self, t)).collect();
        if vals.is_empty() {
            return [0.0; 3];
        }
        let sum: f64 = vals.iter().sum();
        [
            sum,
            sum / vals.len() as f64,
            vals.iter().cloned().fold(f64::MIN, f64::max),
        ]
    }

    fn base(&self, q: &[String], alpha: f64) -> Vec<f64> {
        let idf = self.family(q, Self::idf);
        let ictf = self.family(q, Self::ictf);
        let scq = self.family(q, Self::scq);
        let var = self.family(q, Self::var);
        let scs = if q.is_empty() {
            0.0
        } else {
            (1.0 / q.len() as f64).ln() + ictf[1]
        };
        let mut v = Vec::new();
        v.extend(idf);
        v.extend(ictf);
        v.push(scs);
        v.extend(scq);
        v.extend(var);
        v.push(alpha * scq[2] + (1.0 - alpha) * var[0]);
        v.push(alpha * scq[2] + (1.0 - alpha) * var[2]);
        v
    }
}

/// All 37 predictors recomputed by scanning raw token lists.
pub fn naive_predictors(case: &RandomCase, k: usize, alpha: f64) -> Vec<f64> {
    let naive = Naive { docs: &case.docs };
    let q = &case.query;
    let mut out = vec![q.len() as f64];
    out.push(if q.is_empty() {
        0.0
    } else {
        q.iter().map(String::len).sum::<usize>() as f64 / q.len() as f64
    });
    let base = naive.base(q, alpha);
    out.extend(&base);

    let mut wq: BTreeMap<&str, f64> = BTreeMap::new();
    for t in q {
        *wq.entry(t).or_default() += 1.0;
    }
    let dot: f64 = wq
        .iter()
        .map(|(t, w)| w * case.profile.get(*t).copied().unwrap_or(0.0))
        .sum();
    let nq = wq.values().map(|w| w * w).sum::<f64>().sqrt();
    let np = case.profile.values().map(|w| w * w).sum::<f64>().sqrt();
    out.push(if nq == 0.0 || np == 0.0 { 0.0 } else { dot / (nq * np) });

    let mut ranked: Vec<(&String, f64)> = case.profile.iter().map(|(t, w)| (t, *w)).collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(b.0)));
    let mut expanded = q.clone();
    expanded.extend(
        ranked
            .into_iter()
            .filter(|(t, _)| !q.contains(t))
            .take(k)
            .map(|(t, _)| t.clone()),
    );
    let qp = naive.base(&expanded, alpha);
    out.extend(&qp);
    // avg positions inside a base block: idf 1, ictf 4, scq 8, var 11.
    for i in [1, 4, 8, 11] {
        out.push(qp[i] - base[i]);
    }
    out
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// A ranking in the given order (strictly decreasing scores).
pub fn ranking_of(ids: &[String]) -> ppp_core::retrieval::Ranking {
    let n = ids.len();
    ppp_core::retrieval::Ranking::new(
        "q",
        ids.iter()
            .enumerate()
            .map(|(i, d)| (d.clone(), (n - i) as f64))
            .collect(),
    )
    .unwrap()
}

/// Kendall tau-b by enumerating every pair.
pub fn kendall_pairs(x: &[f64], y: &[f64]) -> Option<f64> {
    let (mut concordant, mut discordant, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let dx = x[i].partial_cmp(&x[j]).unwrap();
            let dy = y[i].partial_cmp(&y[j]).unwrap();
            use std::cmp::Ordering::Equal;
            match (dx, dy) {
                (Equal, Equal) => {}
                (Equal, _) => tx += 1,
                (_, Equal) => ty += 1,
                _ if dx == dy => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let n1 = (concordant + discordant + tx) as f64;
    let n2 = (concordant + discordant + ty) as f64;
    (n1 > 0.0 && n2 > 0.0).then(|| (concordant - discordant) as f64 / (n1 * n2).sqrt())
}

/// Average ranks by counting smaller and equal values directly.
pub fn ranks_by_counting(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&a| {
            let less = v.iter().filter(|&&b| b < a).count() as f64;
            let equal = v.iter().filter(|&&b| b == a).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Textbook two-pass Pearson.
pub fn pearson_textbook(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// A series of length 2..=30 over a small alphabet so ties are common.
pub fn tied_series(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let n = rng.gen_range(2..=30);
    let levels = rng.gen_range(2..=8);
    let x: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(0..levels))).collect();
    let y: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(0..levels)) * 0.5).collect();
    (x, y)
}

/// Observations whose diffPerso is a monotone function of cosineQP plus
/// Gaussian noise; every other predictor is uniform noise.
pub fn planted_observations(
    seed: u64,
    profiles: usize,
    per_profile: usize,
    noise: f64,
) -> Vec<ppp_core::observation::Observation> {
    use ppp_core::predictors::{Predictor, PredictorVector};
    use rand_distr::{Distribution, Normal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise.max(f64::MIN_POSITIVE)).unwrap();
    let mut out = Vec::new();
    for p in 0..profiles {
        for q in 0..per_profile {
            let mut v = [0.0; 37];
            for x in v.iter_mut() {
                *x = rng.gen();
            }
            let signal = v[Predictor::CosineQp.index()];
            let eps = if noise > 0.0 { normal.sample(&mut rng) } else { 0.0 };
            let diff = 0.4 * (signal - 0.5) + eps;
            let orig = 0.5;
            out.push(ppp_core::observation::Observation {
                profile_id: format!("p{p}"),
                query_id: format!("q{q:04}"),
                predictors: PredictorVector::from_values(v),
                ndcg_orig: orig,
                ndcg_perso: orig + diff,
                diff_perso: (orig + diff) - orig,
            });
        }
    }
    out
}
