//! Classifiers for sequences in SL(d,R): the three-condition sublinearly
//! Morse test, θ-uniform regularity, the path version of the Morse test and
//! the Anosov growth diagnostic.
//!
//! Slopes `a` and `q` are searched on the grid {0.01, …, 1.00}, capped by
//! the smallest ratio `min_θ α / d_X` over the longest third of pairs, so a
//! finite fit cannot trade linear deficit for a larger slope. The envelope
//! η̄ of the ray condition is accepted for the constant `C` when its tail
//! ratio is at most `ratio_cutoff / C`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cartan::{kappa, CartanVector, Theta};
use crate::error::{Error, Result};
use crate::matrix::{svd, GroupElement};
use crate::sublinear::{
    default_p_grid, fit_envelope, pair_schedule, sweep_ray, EnvelopeFit, RayVerdict, DEFAULT_P_MAX,
    DEFAULT_PAIR_BUDGET, DEFAULT_RATIO_CUTOFF, DEFAULT_SEED,
};
use crate::trajectory::Trajectory;

/// {0.01, 0.02, …, 1.00}
pub fn slope_grid() -> Vec<f64> {
    (1..=100).map(|i| i as f64 / 100.0).collect()
}

pub const DEFAULT_B_BUDGET: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MorseConfig {
    pub p_max: f64,
    pub ratio_cutoff: f64,
    pub pair_budget: usize,
    pub c_grid: Vec<f64>,
    pub seed: u64,
}

impl Default for MorseConfig {
    fn default() -> Self {
        MorseConfig {
            p_max: DEFAULT_P_MAX,
            ratio_cutoff: DEFAULT_RATIO_CUTOFF,
            pair_budget: DEFAULT_PAIR_BUDGET,
            c_grid: vec![1.0, 1.5, 2.0, 3.0, 5.0, 8.0],
            seed: DEFAULT_SEED,
        }
    }
}

impl MorseConfig {
    fn p_grid(&self) -> Vec<f64> {
        default_p_grid().into_iter().filter(|&p| p <= self.p_max + 1e-12).collect()
    }
}

/// A pair of indices with the size of the violation it exhibits.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub condition: u8,
    pub indices: (usize, usize),
    pub violation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JumpCondition {
    pub pass: bool,
    pub eta: EnvelopeFit,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RayCondition {
    pub pass: bool,
    pub c: f64,
    pub eta_bar: EnvelopeFit,
    /// max over the tail of η̄/η
    pub ratio_to_eta: f64,
    pub ray: RayVerdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapCondition {
    pub pass: bool,
    pub a: f64,
    pub eta_prime: EnvelopeFit,
    /// max over the tail of η′/η
    pub ratio_to_eta: f64,
}

/// One row of the per-element diagnostic table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileRow {
    pub n: usize,
    pub distance: f64,
    pub min_root: f64,
    pub deficit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MorseVerdict {
    pub length: usize,
    pub cond1: JumpCondition,
    pub cond2: RayCondition,
    pub cond3: GapCondition,
    pub overall: bool,
    pub witnesses: Vec<Witness>,
    #[serde(skip)]
    pub profile: Vec<ProfileRow>,
}

/// The piecewise-geodesic path through `g_0, g_1, …`, sampled at each
/// element and at each segment midpoint.
///
/// Sample `2n` is `g_n`; sample `2n+1` is `g_n·U·exp(κ/2)` where
/// `g_n⁻¹g_{n+1} = U·exp(κ)·Vᵀ`.
pub struct ConcatenatedPath<'a, T: Trajectory + ?Sized> {
    base: &'a T,
    anchors: Vec<usize>,
    offsets: Vec<Option<GroupElement>>,
    params: Vec<f64>,
}

impl<'a, T: Trajectory + ?Sized> ConcatenatedPath<'a, T> {
    pub fn new(base: &'a T) -> Result<Self> {
        let n = base.len();
        let steps: Vec<Result<(f64, GroupElement)>> = (0..n.saturating_sub(1))
            .into_par_iter()
            .map(|i| {
                let s = svd(&base.displacement(i, i + 1))?;
                let half: Vec<f64> = s.sing_log.iter().map(|l| l / 2.0).collect();
                let len = s.sing_log.iter().map(|l| l * l).sum::<f64>().sqrt();
                let h = GroupElement::from_parts(
                    &s.left_frame * GroupElement::diag_exp(&half).matrix(),
                    GroupElement::diag_exp(&half).inverse_matrix() * s.left_frame.transpose(),
                );
                Ok((len, h))
            })
            .collect();
        let mut anchors = Vec::with_capacity(2 * n);
        let mut offsets = Vec::with_capacity(2 * n);
        let mut params = Vec::with_capacity(2 * n);
        let mut s = 0.0;
        for (i, step) in steps.into_iter().enumerate() {
            let (len, h) = step?;
            anchors.push(i);
            offsets.push(None);
            params.push(s);
            anchors.push(i);
            offsets.push(Some(h));
            params.push(s + len / 2.0);
            s += len;
        }
        if n > 0 {
            anchors.push(n - 1);
            offsets.push(None);
            params.push(s);
        }
        Ok(ConcatenatedPath { base, anchors, offsets, params })
    }

    /// Arclength of each sample.
    pub fn params(&self) -> &[f64] {
        &self.params
    }
}

impl<T: Trajectory + ?Sized> Trajectory for ConcatenatedPath<'_, T> {
    fn len(&self) -> usize {
        self.anchors.len()
    }

    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn element(&self, n: usize) -> GroupElement {
        let g = self.base.element(self.anchors[n]);
        match &self.offsets[n] {
            Some(h) => g.compose(h),
            None => g,
        }
    }

    fn displacement(&self, m: usize, n: usize) -> GroupElement {
        let mut g = self.base.displacement(self.anchors[m], self.anchors[n]);
        if let Some(h) = &self.offsets[m] {
            g = h.inv_mul(&g);
        }
        if let Some(h) = &self.offsets[n] {
            g = g.compose(h);
        }
        g
    }
}

/// κ of `g_0⁻¹ g_n` for every n.
fn base_profile<T: Trajectory + ?Sized>(seq: &T) -> Result<Vec<CartanVector>> {
    (0..seq.len())
        .into_par_iter()
        .map(|n| kappa(&seq.displacement(0, n)))
        .collect()
}

/// Scheduled pairs with the Cartan projection of their displacement.
fn pair_kappas<T: Trajectory + ?Sized>(
    seq: &T,
    budget: usize,
    seed: u64,
) -> Result<Vec<(usize, usize, CartanVector)>> {
    pair_schedule(seq.len(), budget, seed)
        .into_par_iter()
        .map(|(i, j)| Ok((i, j, kappa(&seq.displacement(i, j))?)))
        .collect()
}

fn check_distinct<T: Trajectory + ?Sized>(seq: &T) -> Result<()> {
    let elems: Vec<GroupElement> = (0..seq.len()).map(|i| seq.element(i)).collect();
    let dup = (0..elems.len())
        .into_par_iter()
        .filter_map(|i| {
            (i + 1..elems.len()).find_map(|j| {
                let scale = elems[i].matrix().amax().max(elems[j].matrix().amax());
                (elems[i].max_abs_diff(&elems[j]) <= 1e-12 * scale).then_some((i, j))
            })
        })
        .min();
    match dup {
        Some((i, j)) => Err(Error::DuplicateElements(i, j)),
        None => Ok(()),
    }
}

fn tail_ratio(num: &EnvelopeFit, den: &EnvelopeFit, ts: &[f64]) -> f64 {
    let mut sorted = ts.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    sorted[n - n.div_ceil(3)..]
        .iter()
        .map(|&t| {
            let d = den.eval(t);
            if d > 0.0 {
                num.eval(t) / d
            } else if num.eval(t) > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

/// Result of the slope search shared by condition (3) and the path test.
struct SlopeSearch {
    slope: f64,
    fit: EnvelopeFit,
    witness: Option<Witness>,
}

/// Largest grid slope `a` with `min_θ α(κ(g_i⁻¹g_j)) ≥ a·d(g_i,g_j) − η′(r_j)`
/// for an accepted envelope η′, where `r_j = max(r_i, r_j)` is the distance
/// from the base point.
fn search_slope(
    pairs: &[(usize, usize, CartanVector)],
    radius: &[f64],
    theta: &Theta,
    cfg: &MorseConfig,
    condition: u8,
) -> Result<SlopeSearch> {
    let n = radius.len();
    let data: Vec<(usize, usize, f64, f64)> = pairs
        .iter()
        .map(|(i, j, k)| (*i, *j, k.norm(), k.min_root(theta)))
        .collect();
    let fit_at = |a: f64| -> Result<EnvelopeFit> {
        let mut y = vec![0.0f64; n];
        for &(i, j, d, alpha) in &data {
            let arg = if radius[i] > radius[j] { i } else { j };
            y[arg] = y[arg].max(a * d - alpha);
        }
        let pts: Vec<(f64, f64)> = radius.iter().copied().zip(y).collect();
        fit_envelope(&pts, &cfg.p_grid(), None)
    };
    // slopes above the ratio α/d seen on the longest third of pairs would
    // need a linear η′, which no finite fit can tell apart from t^0.9
    let mut dists: Vec<f64> = data.iter().map(|x| x.2).collect();
    dists.sort_by(|a, b| a.total_cmp(b));
    let d_cut = dists.get(dists.len() - dists.len().div_ceil(3)).copied().unwrap_or(0.0);
    let a_cap = data
        .iter()
        .filter(|x| x.2 >= d_cut && x.2 > 0.0)
        .map(|x| x.3 / x.2)
        .fold(f64::INFINITY, f64::min);
    for a in slope_grid().into_iter().rev().filter(|&a| a <= a_cap + 1e-12) {
        let fit = fit_at(a)?;
        if fit.accepted(cfg.p_max, cfg.ratio_cutoff) {
            return Ok(SlopeSearch { slope: a, fit, witness: None });
        }
    }
    let a = slope_grid()[0];
    let fit = fit_at(a)?;
    let witness = data
        .iter()
        .map(|&(i, j, d, alpha)| (i, j, a * d - alpha))
        .fold(None::<(usize, usize, f64)>, |best, cur| match best {
            Some(b) if b.2 >= cur.2 => Some(b),
            _ => Some(cur),
        })
        .map(|(i, j, v)| Witness { condition, indices: (i, j), violation: v });
    Ok(SlopeSearch { slope: 0.0, fit, witness })
}

/// The three-condition sublinearly Morse test.
pub fn classify_morse<T: Trajectory + ?Sized>(seq: &T, theta: &Theta, cfg: &MorseConfig) -> Result<MorseVerdict> {
    let n = seq.len();
    if n < 3 {
        return Err(Error::TooShort { needed: 3, got: n });
    }
    if seq.dim() != theta.dim() {
        return Err(Error::DimensionMismatch { expected: theta.dim(), found: seq.dim() });
    }
    check_distinct(seq)?;
    let p_grid = cfg.p_grid();
    let profile = base_profile(seq)?;
    let radius: Vec<f64> = profile.iter().map(|k| k.norm()).collect();
    let steps: Vec<f64> = (0..n - 1)
        .into_par_iter()
        .map(|i| Ok(kappa(&seq.displacement(i, i + 1))?.norm()))
        .collect::<Result<_>>()?;
    let mut witnesses = Vec::new();

    // (1) jumps
    // each jump is charged at the distance of its later endpoint; the
    // typical (median) jump is the additive constant, so early spikes are
    // not folded into b
    let jump_pts: Vec<(f64, f64)> = (0..n - 1).map(|i| (radius[i + 1], steps[i])).collect();
    let mut sorted_steps = steps.clone();
    sorted_steps.sort_by(|a, b| a.total_cmp(b));
    let median_step = sorted_steps[sorted_steps.len() / 2];
    let eta = fit_envelope(&jump_pts, &p_grid, Some(median_step))?;
    let cond1_pass = eta.accepted(cfg.p_max, cfg.ratio_cutoff);
    if !cond1_pass {
        let cut = {
            let mut r = radius[1..].to_vec();
            r.sort_by(|a, b| a.total_cmp(b));
            r[r.len() - r.len().div_ceil(3)]
        };
        let (i, ratio) = (0..n - 1)
            .filter(|&i| radius[i + 1] >= cut && radius[i + 1] > 0.0)
            .map(|i| (i, steps[i] / radius[i + 1]))
            .fold((0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });
        witnesses.push(Witness { condition: 1, indices: (i, i + 1), violation: ratio - cfg.ratio_cutoff });
    }

    // (2) concatenated path is a sublinear ray
    let path = ConcatenatedPath::new(seq)?;
    let s = path.params().to_vec();
    let measured: Vec<(usize, usize, f64, f64, f64)> = pair_schedule(path.len(), cfg.pair_budget, cfg.seed)
        .into_par_iter()
        .map(|(i, j)| Ok((i, j, s[i], s[j], kappa(&path.displacement(i, j))?.norm())))
        .collect::<Result<_>>()?;
    let mut chosen: Option<(f64, EnvelopeFit, bool)> = None;
    for &c in &cfg.c_grid {
        let mut y = vec![0.0f64; s.len()];
        for &(_, j, si, sj, d) in &measured {
            let gap = (sj - si).abs();
            y[j] = y[j].max((gap / c - d).max(d - c * gap));
        }
        let pts: Vec<(f64, f64)> = s.iter().copied().zip(y).collect();
        let fit = fit_envelope(&pts, &p_grid, None)?;
        let ok = fit.accepted(cfg.p_max, cfg.ratio_cutoff / c);
        let better = match &chosen {
            None => true,
            Some((c0, f0, ok0)) => !ok0 && (ok || fit.ratio_score * c < f0.ratio_score * c0),
        };
        if better {
            chosen = Some((c, fit, ok));
        }
        if ok {
            break;
        }
    }
    let (c, eta_bar, cond2_pass) = chosen.ok_or(Error::InvalidArgument("empty C grid".into()))?;
    let ray = sweep_ray(&measured, c, &eta_bar.model);
    if !cond2_pass {
        let w = measured
            .iter()
            .map(|&(i, j, si, sj, d)| {
                let gap = (sj - si).abs();
                let req = (gap / c - d).max(d - c * gap);
                (i, j, req, req / si.max(sj).max(1.0))
            })
            .fold(None::<(usize, usize, f64, f64)>, |b, cur| match b {
                Some(b) if b.3 >= cur.3 => Some(b),
                _ => Some(cur),
            });
        if let Some((i, j, req, _)) = w {
            witnesses.push(Witness { condition: 2, indices: (i, j), violation: req });
        }
    }
    let cond2 = RayCondition {
        pass: cond2_pass && ray.pass,
        c,
        eta_bar,
        ratio_to_eta: tail_ratio(&eta_bar, &eta, &radius),
        ray,
    };

    // (3) linear gap growth up to a sublinear error
    let pairs = pair_kappas(seq, cfg.pair_budget, cfg.seed)?;
    let search = search_slope(&pairs, &radius, theta, cfg, 3)?;
    if let Some(w) = search.witness {
        witnesses.push(w);
    }
    let a = search.slope;
    let cond3 = GapCondition {
        pass: a > 0.0,
        a,
        eta_prime: search.fit,
        ratio_to_eta: tail_ratio(&search.fit, &eta, &radius),
    };

    let a_used = if a > 0.0 { a } else { slope_grid()[0] };
    let profile = profile
        .iter()
        .enumerate()
        .map(|(i, k)| {
            let min_root = k.min_root(theta);
            ProfileRow { n: i, distance: radius[i], min_root, deficit: a_used * radius[i] - min_root }
        })
        .collect();
    let cond1 = JumpCondition { pass: cond1_pass, eta };
    let overall = cond1.pass && cond2.pass && cond3.pass;
    Ok(MorseVerdict { length: n, cond1, cond2, cond3, overall, witnesses, profile })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UrVerdict {
    #[serde(rename = "D")]
    pub d: usize,
    pub c: f64,
    pub pass: bool,
    /// (m, n, min θ-root / d_X)
    pub worst_segment: (usize, usize, f64),
}

/// Every pair m < n with n − m ≥ D must have `min_θ α(κ(g_m⁻¹g_n)) ≥ c·d_X`.
pub fn classify_uniform_regular<T: Trajectory + ?Sized>(seq: &T, theta: &Theta, c: f64, d: usize) -> Result<UrVerdict> {
    let n = seq.len();
    let d = d.max(1);
    if n < d + 1 {
        return Err(Error::TooShort { needed: d + 1, got: n });
    }
    if !(c > 0.0) {
        return Err(Error::InvalidArgument("c must be positive".into()));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|m| (m + d..n).map(move |k| (m, k))).collect();
    let ratios: Vec<(usize, usize, f64)> = pairs
        .into_par_iter()
        .map(|(m, k)| {
            let kv = kappa(&seq.displacement(m, k))?;
            let dist = kv.norm();
            let r = if dist > 0.0 { kv.min_root(theta) / dist } else { 0.0 };
            Ok((m, k, r))
        })
        .collect::<Result<_>>()?;
    let worst = ratios
        .into_iter()
        .fold((0, d, f64::INFINITY), |b, cur| if cur.2 < b.2 { cur } else { b });
    Ok(UrVerdict { d, c, pass: worst.2 >= c, worst_segment: worst })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathVerdict {
    pub pass: bool,
    pub q: f64,
    pub chi: EnvelopeFit,
    pub witness: Option<Witness>,
}

/// The gap-growth test on samples of a path, ordered by parameter.
pub fn classify_morse_path<T: Trajectory + ?Sized>(samples: &T, theta: &Theta, cfg: &MorseConfig) -> Result<PathVerdict> {
    let n = samples.len();
    if n < 3 {
        return Err(Error::TooShort { needed: 3, got: n });
    }
    let radius: Vec<f64> = base_profile(samples)?.iter().map(|k| k.norm()).collect();
    let pairs = pair_kappas(samples, cfg.pair_budget, cfg.seed)?;
    let search = search_slope(&pairs, &radius, theta, cfg, 3)?;
    Ok(PathVerdict { pass: search.slope > 0.0, q: search.slope, chi: search.fit, witness: search.witness })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnosovDiagnostic {
    pub a_hat: f64,
    pub b_hat: f64,
    pub min_margin: f64,
}

/// Largest grid slope `a` with `max(a·|γ| − min_θ α(κ(γ))) ≤ b_budget`.
pub fn anosov_diagnostic(elements: &[(GroupElement, usize)], theta: &Theta, b_budget: f64) -> Result<AnosovDiagnostic> {
    if elements.is_empty() {
        return Err(Error::EmptyInput);
    }
    let data: Vec<(f64, f64)> = elements
        .par_iter()
        .map(|(g, len)| Ok((*len as f64, kappa(g)?.min_root(theta))))
        .collect::<Result<_>>()?;
    let b_of = |a: f64| data.iter().map(|(l, alpha)| a * l - alpha).fold(f64::NEG_INFINITY, f64::max);
    let a_hat = slope_grid()
        .into_iter()
        .rev()
        .find(|&a| b_of(a) <= b_budget)
        .unwrap_or(0.0);
    let b_hat = b_of(a_hat);
    let min_margin = data
        .iter()
        .map(|(l, alpha)| alpha - a_hat * l + b_hat)
        .fold(f64::INFINITY, f64::min);
    Ok(AnosovDiagnostic { a_hat, b_hat, min_margin })
}
