//! Compact part, orbit extraction and Morse verdict for a geodesic ray in
//! a Hilbert domain acted on by a labelled group.
//!
//! Rays along the axis of a group element `a` through the base point are
//! handled by unfolding: `a` shifts the ray by its period ℓ, so every orbit
//! point near the ray is `a^k h·o` with h from a window whose nearest-point
//! parameter lies in [0, ℓ). Nothing is evaluated in chart coordinates far
//! from the base point, which lets T reach hundreds of periods. Rays in
//! other directions use a finite word ball and are limited to arclengths
//! whose points are representable in the chart.

use serde::Serialize;

use crate::cartan::Theta;
use crate::error::{Error, Result};
use crate::groups::{inverse_word, reduce_word, word_ball, GeneratorSet, WordSequence, DEFAULT_DEDUP_TOL};
use crate::hilbert::{
    compact_part, golden_min, greedy_separated, hilbert_distance, matrix_order, orbit_distance, sublevel_interval,
    union_measure, ConvexDomain, RayTrace,
};
use crate::morse::{classify_morse, MorseConfig, MorseVerdict};

/// Largest arclength accepted for rays that are not unfolded.
pub const DIRECT_T_MAX: f64 = 15.0;
/// Slack on the window condition t_h ∈ [0, ℓ).
const WINDOW_EPS: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub enum RaySpec {
    /// Along the axis of the element spelled by the word, from the base point.
    Axis(String),
    /// From the base point in a chart direction.
    Direction(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub r: f64,
    pub c: f64,
    pub t_max: f64,
    pub ball_radius: usize,
    pub morse: MorseConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig { r: 2.0, c: 3.0, t_max: 200.0, ball_radius: 5, morse: MorseConfig::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitHit {
    pub word: String,
    /// Nearest-point parameter on the ray.
    pub t: f64,
    pub interval: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineReport {
    pub t_max: f64,
    pub r: f64,
    pub c: f64,
    /// ℓ for axis rays.
    pub period: Option<f64>,
    /// Smallest d_H(o, h·o) over the outer sphere of the word ball; the
    /// window is complete when this exceeds ℓ + r.
    pub outer_min_distance: f64,
    pub window_complete: bool,
    pub measure: f64,
    pub fraction: f64,
    pub intervals: Vec<(f64, f64)>,
    pub a_gamma: Vec<OrbitHit>,
    pub a_gamma_c: Vec<String>,
    /// None when the extracted sequence is too short to classify.
    pub verdict: Option<MorseVerdict>,
    pub note: Option<String>,
}

fn power_word(axis: &str, k: i64) -> String {
    let unit = if k >= 0 { axis.to_string() } else { inverse_word(axis) };
    unit.repeat(k.unsigned_abs() as usize)
}

struct Window {
    word: String,
    t: f64,
    interval: (f64, f64),
}

pub fn run_pipeline(
    gens: &GeneratorSet,
    dom: &ConvexDomain,
    ray: &RaySpec,
    theta: &Theta,
    cfg: &PipelineConfig,
) -> Result<PipelineReport> {
    if !(cfg.r > 0.0) || !(cfg.c > 0.0) || !(cfg.t_max > 0.0) {
        return Err(Error::InvalidArgument("r, C and T must be positive".into()));
    }
    if gens.dim() != dom.dim() + 1 {
        return Err(Error::DimensionMismatch { expected: dom.dim() + 1, found: gens.dim() });
    }
    let o = dom.base_point().to_vec();
    let ball = word_ball(gens, cfg.ball_radius, DEFAULT_DEDUP_TOL)?;
    let dists = ball.iter().map(|n| orbit_distance(&n.element, &o, dom)).collect::<Result<Vec<_>>>()?;
    let outer_min_distance = ball
        .iter()
        .zip(&dists)
        .filter(|(n, _)| n.length == cfg.ball_radius)
        .map(|(_, d)| *d)
        .fold(f64::INFINITY, f64::min);

    let (hits, intervals, period) = match ray {
        RaySpec::Axis(axis) => {
            if axis.is_empty() || reduce_word(axis) != *axis {
                return Err(Error::NotReduced(axis.clone()));
            }
            let a = gens.evaluate(axis)?;
            let l = orbit_distance(&a, &o, dom)?;
            let ao = dom.act(&a, &o)?;
            let dir: Vec<f64> = ao.iter().zip(&o).map(|(x, y)| x - y).collect();
            let trace = RayTrace::from_direction(&o, &dir, dom)?;
            let shifted = dom.act(&a, &trace.point_at(1.0))?;
            if !(l > 0.0) || hilbert_distance(&shifted, &trace.point_at(1.0 + l), dom)? > 1e-8 {
                return Err(Error::InvalidArgument("base point is not on the axis of the ray word".into()));
            }
            let mut window = Vec::new();
            for (n, d0) in ball.iter().zip(&dists) {
                if *d0 >= l + cfg.r {
                    continue;
                }
                let q = dom.act(&n.element, &o)?;
                let f = |t: f64| hilbert_distance(&trace.point_at(t), &q, dom).unwrap_or(f64::INFINITY);
                let span = l + cfg.r;
                let (t, fmin) = golden_min(f, -span, span, 1e-10);
                if fmin >= cfg.r || t < -WINDOW_EPS || t >= l - WINDOW_EPS {
                    continue;
                }
                if let Some(interval) = sublevel_interval(f, t - 2.0 * cfg.r, t + 2.0 * cfg.r, cfg.r) {
                    window.push(Window { word: n.word.clone(), t, interval });
                }
            }
            let kmin = -((2.0 * cfg.r / l).ceil() as i64) - 1;
            let kmax = ((cfg.t_max + 2.0 * cfg.r) / l).ceil() as i64 + 1;
            let mut hits = Vec::new();
            let mut ivs = Vec::new();
            for k in kmin..=kmax {
                let shift = k as f64 * l;
                for w in &window {
                    let (a0, b0) = (w.interval.0 + shift, w.interval.1 + shift);
                    // open balls: tangency at an end of [0, T] does not count
                    if b0 <= WINDOW_EPS || a0 >= cfg.t_max - WINDOW_EPS {
                        continue;
                    }
                    let (a1, b1) = (a0.max(0.0), b0.min(cfg.t_max));
                    ivs.push((a1, b1));
                    let word = reduce_word(&(power_word(axis, k) + &w.word));
                    hits.push(OrbitHit { word, t: w.t + shift, interval: (a0, b0) });
                }
            }
            (hits, ivs, Some(l))
        }
        RaySpec::Direction(u) => {
            if cfg.t_max > DIRECT_T_MAX {
                return Err(Error::InvalidArgument(format!(
                    "T = {} exceeds {DIRECT_T_MAX} for a non-axis ray",
                    cfg.t_max
                )));
            }
            let trace = RayTrace::from_direction(&o, u, dom)?;
            let mut hits = Vec::new();
            let mut points = Vec::new();
            for (n, d0) in ball.iter().zip(&dists) {
                // only balls that can reach the ray segment
                if *d0 >= cfg.t_max + cfg.r {
                    continue;
                }
                let q = dom.act(&n.element, &o)?;
                let f = |t: f64| hilbert_distance(&trace.point_at(t), &q, dom).unwrap_or(f64::INFINITY);
                if let Some(interval) = sublevel_interval(f, 0.0, cfg.t_max, cfg.r) {
                    let (t, _) = golden_min(f, 0.0, cfg.t_max + cfg.r, 1e-10);
                    hits.push(OrbitHit { word: n.word.clone(), t, interval });
                    points.push(q);
                }
            }
            let ivs = if points.is_empty() {
                Vec::new()
            } else {
                compact_part(&trace, &points, cfg.r, cfg.t_max, dom)?.1
            };
            (hits, ivs, None)
        }
    };
    let (measure, intervals) = union_measure(intervals);
    if hits.is_empty() {
        return Err(Error::EmptyIntersection);
    }

    let mut keyed = hits
        .into_iter()
        .map(|h| Ok((gens.evaluate(&h.word)?, h)))
        .collect::<Result<Vec<_>>>()?;
    keyed.sort_by(|a, b| a.1.t.total_cmp(&b.1.t).then_with(|| matrix_order(&a.0, &b.0)));
    let a_gamma: Vec<OrbitHit> = keyed.into_iter().map(|(_, h)| h).collect();
    let words: Vec<String> = a_gamma.iter().map(|h| h.word.clone()).collect();
    let picked = greedy_separated(
        words.len(),
        |i, j| {
            let w = reduce_word(&(inverse_word(&words[i]) + &words[j]));
            gens.evaluate(&w)
                .and_then(|g| orbit_distance(&g, &o, dom))
                .unwrap_or(f64::INFINITY)
        },
        cfg.c,
    );
    let a_gamma_c: Vec<String> = picked.iter().map(|&i| words[i].clone()).collect();

    let seq = WordSequence::new(gens, a_gamma_c.clone())?;
    let (verdict, note) = match classify_morse(&seq, theta, &cfg.morse) {
        Ok(v) => (Some(v), None),
        Err(e @ (Error::TooShort { .. } | Error::DuplicateElements(..))) => (None, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    Ok(PipelineReport {
        t_max: cfg.t_max,
        r: cfg.r,
        c: cfg.c,
        period,
        outer_min_distance,
        window_complete: period.is_none_or(|l| outer_min_distance > l + cfg.r),
        measure,
        fraction: measure / cfg.t_max,
        intervals,
        a_gamma,
        a_gamma_c,
        verdict,
        note,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::gallery;

    fn short(t: f64) -> PipelineConfig {
        PipelineConfig { t_max: t, ..PipelineConfig::default() }
    }

    #[test]
    fn unfolding_matches_direct_orbit() {
        let g = gallery("klein-schottky").unwrap();
        let d = ConvexDomain::klein_disk();
        let theta = Theta::full(3);
        let unfolded = run_pipeline(&g, &d, &RaySpec::Axis("a".into()), &theta, &PipelineConfig { r: 0.7, ..short(9.0) }).unwrap();
        let direct = run_pipeline(
            &g,
            &d,
            &RaySpec::Direction(vec![1.0, 0.0]),
            &theta,
            &PipelineConfig { r: 0.7, ball_radius: 7, ..short(9.0) },
        )
        .unwrap();
        assert!((unfolded.measure - direct.measure).abs() < 1e-6, "{} vs {}", unfolded.measure, direct.measure);
        let mut a: Vec<_> = unfolded.a_gamma.iter().map(|h| h.word.clone()).collect();
        let mut b: Vec<_> = direct.a_gamma.iter().map(|h| h.word.clone()).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_input() {
        let g = gallery("klein-schottky").unwrap();
        let d = ConvexDomain::klein_disk();
        let theta = Theta::full(3);
        assert!(run_pipeline(&g, &d, &RaySpec::Axis("a".into()), &theta, &short(0.0)).is_err());
        assert!(matches!(
            run_pipeline(&g, &d, &RaySpec::Axis("aA".into()), &theta, &short(5.0)),
            Err(Error::NotReduced(_))
        ));
        let off = d.with_base(vec![0.0, 0.3]).unwrap();
        assert!(run_pipeline(&g, &off, &RaySpec::Axis("a".into()), &theta, &short(5.0)).is_err());
    }
}
