//! Sublinear envelope families, envelope fitting on finite samples and the
//! sublinear-ray checker.
//!
//! A finite sample cannot certify `η(t)/t → 0`. The fit picks, from a fixed
//! family, the envelope dominating the data with the smallest tail ratio
//! `max eval(t)/t`; callers accept it when that ratio is below a cutoff.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_P_MAX: f64 = 0.9;
pub const DEFAULT_RATIO_CUTOFF: f64 = 0.2;
/// Exhaustive pair sweeps up to this many samples.
pub const DEFAULT_PAIR_BUDGET: usize = 500;
pub const DEFAULT_SEED: u64 = 0x5eed;

/// {0, 0.1, …, 0.9}
pub fn default_p_grid() -> Vec<f64> {
    (0..10).map(|i| i as f64 / 10.0).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Power,
    Log,
}

/// `a·t^p + b` or `a·log(1+t) + b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SublinearModel {
    pub family: Family,
    pub a: f64,
    pub p: f64,
    pub b: f64,
}

impl SublinearModel {
    pub fn power(a: f64, p: f64, b: f64) -> Self {
        SublinearModel { family: Family::Power, a, p, b }
    }

    pub fn log(a: f64, b: f64) -> Self {
        SublinearModel { family: Family::Log, a, p: 0.0, b }
    }

    pub fn constant(b: f64) -> Self {
        SublinearModel::power(0.0, 0.0, b)
    }

    fn basis(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match self.family {
            Family::Power if self.p == 0.0 => 1.0,
            Family::Power => t.powf(self.p),
            Family::Log => t.ln_1p(),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.a * self.basis(t) + self.b
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFit {
    #[serde(flatten)]
    pub model: SublinearModel,
    pub max_residual: f64,
    pub ratio_score: f64,
}

impl EnvelopeFit {
    /// Family within `p_max` and tail ratio within `cutoff`.
    pub fn accepted(&self, p_max: f64, cutoff: f64) -> bool {
        let family_ok = match self.model.family {
            Family::Log => true,
            Family::Power => self.model.p <= p_max + 1e-12,
        };
        family_ok && self.ratio_score <= cutoff
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.model.eval(t)
    }
}

/// Fits the tightest envelope `y ≤ eval(t)` over the power family at each
/// `p ∈ p_grid` and the log family.
///
/// `b` is the largest y over the first 10% of samples (by t), capped at
/// `b_cap` when given; `a` is then the smallest slope covering every point.
/// The candidate with the smallest tail ratio wins; ties keep grid order.
pub fn fit_envelope(points: &[(f64, f64)], p_grid: &[f64], b_cap: Option<f64>) -> Result<EnvelopeFit> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    if points.iter().any(|(t, y)| !t.is_finite() || !y.is_finite() || *t < 0.0) {
        return Err(Error::InvalidArgument("envelope points must be finite with t ≥ 0".into()));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|x, y| x.0.total_cmp(&y.0));
    let n = pts.len();
    let n_small = n.div_ceil(10).max(1);
    let t_small = pts[n_small - 1].0;
    let y_small = pts
        .iter()
        .take_while(|(t, _)| *t <= t_small)
        .map(|p| p.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let b = b_cap.map_or(y_small, |cap| cap.min(y_small)).max(0.0);
    let tail = &pts[n - n.div_ceil(3)..];

    let mut candidates: Vec<SublinearModel> = p_grid
        .iter()
        .map(|&p| SublinearModel::power(0.0, p, b))
        .chain(std::iter::once(SublinearModel::log(0.0, b)))
        .collect();
    if !p_grid.contains(&0.0) {
        candidates.push(SublinearModel::power(0.0, 0.0, b));
    }
    let mut best: Option<EnvelopeFit> = None;
    for mut m in candidates {
        let mut a: f64 = 0.0;
        let mut feasible = true;
        for &(t, y) in &pts {
            let basis = m.basis(t);
            if basis > 0.0 {
                a = a.max((y - b) / basis);
            } else if y > b + 1e-12 {
                feasible = false;
                break;
            }
        }
        if !feasible {
            continue;
        }
        m.a = a;
        let ratio_score = tail
            .iter()
            .filter(|(t, _)| *t > 0.0)
            .map(|&(t, _)| m.eval(t) / t)
            .fold(0.0, f64::max);
        let max_residual = pts.iter().map(|&(t, y)| y - m.eval(t)).fold(f64::NEG_INFINITY, f64::max);
        let fit = EnvelopeFit { model: m, max_residual, ratio_score };
        let better = match &best {
            None => true,
            Some(cur) => fit.ratio_score < cur.ratio_score * (1.0 - 1e-12) - 1e-300,
        };
        if better {
            best = Some(fit);
        }
    }
    best.ok_or(Error::EmptyInput)
}

/// Pairs `(i, j)`, `i < j`, examined by the pair sweeps: all of them up to
/// `budget` samples, otherwise every consecutive pair plus `budget²` seeded
/// uniform draws. Sorted and deduplicated.
pub fn pair_schedule(n: usize, budget: usize, seed: u64) -> Vec<(usize, usize)> {
    if n < 2 {
        return Vec::new();
    }
    if n <= budget {
        return (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
    for _ in 0..budget * budget {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i != j {
            pairs.push((i.min(j), i.max(j)));
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

/// Largest violation of the two ray inequalities for one pair,
/// `max(|s−t|/C − η − d, d − C|s−t| − η)` with η evaluated at max(s,t).
pub fn ray_violation(s: f64, t: f64, d: f64, c: f64, m: &SublinearModel) -> f64 {
    let gap = (s - t).abs();
    let eta = m.eval(s.max(t));
    (gap / c - eta - d).max(d - c * gap - eta)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RayVerdict {
    pub pass: bool,
    pub worst_pair: Option<(usize, usize)>,
    pub worst_violation: f64,
    pub pairs_checked: usize,
}

/// Slack allowed on the ray inequalities.
pub const RAY_TOL: f64 = 1e-9;

/// Checks `|s−t|/C − η(max) ≤ d(c(s),c(t)) ≤ C|s−t| + η(max)` on the pair
/// schedule of the samples (sorted by s).
pub fn check_sublinear_ray<P, F>(
    samples: &[(f64, P)],
    c: f64,
    m: &SublinearModel,
    distance: F,
    seed: u64,
) -> RayVerdict
where
    P: Sync,
    F: Fn(&P, &P) -> f64 + Sync,
{
    let pairs = pair_schedule(samples.len(), DEFAULT_PAIR_BUDGET, seed);
    let measured: Vec<(usize, usize, f64, f64, f64)> = pairs
        .par_iter()
        .map(|&(i, j)| (i, j, samples[i].0, samples[j].0, distance(&samples[i].1, &samples[j].1)))
        .collect();
    sweep_ray(&measured, c, m)
}

/// Aggregates precomputed `(i, j, s, t, d)` pair data.
pub fn sweep_ray(measured: &[(usize, usize, f64, f64, f64)], c: f64, m: &SublinearModel) -> RayVerdict {
    let mut worst = f64::NEG_INFINITY;
    let mut worst_pair = None;
    for &(i, j, s, t, d) in measured {
        let v = ray_violation(s, t, d, c, m);
        if v > worst {
            worst = v;
            worst_pair = Some((i, j));
        }
    }
    RayVerdict {
        pass: worst <= RAY_TOL,
        worst_pair,
        worst_violation: if measured.is_empty() { 0.0 } else { worst },
        pairs_checked: measured.len(),
    }
}
