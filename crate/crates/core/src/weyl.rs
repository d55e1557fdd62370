//! Weyl cones `V(g, ζ)`, diamonds, and the distance-to-cone envelope that
//! tests the Morse lemma on sampled sequences.
//!
//! Points of the cone are `tip · K · exp(H)` with K a fixed orthogonal frame
//! extending ζ and H in the closed dominant chamber. H is parametrized by
//! its simple-root gaps `g_i = H_i − H_{i+1} ≥ 0`, so projection onto the
//! chamber is clamping. The distance from a point to the flat is convex in
//! H, which makes coordinate-wise golden-section descent reliable.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cartan::{kappa, Theta};
use crate::error::{Error, Result};
use crate::flags::{detect_flag_limit, flag_distance, transverse, u_theta, Flag, FlagLimit};
use crate::matrix::{complete_columns, residual, GroupElement, Matrix};
use crate::sublinear::{default_p_grid, fit_envelope, EnvelopeFit, DEFAULT_P_MAX, DEFAULT_RATIO_CUTOFF, DEFAULT_SEED};
use crate::trajectory::Trajectory;

pub const DEFAULT_MEMBER_TOL: f64 = 1e-6;
pub const DEFAULT_STARTS: usize = 9;
const STEP_TOL: f64 = 1e-8;
const MAX_ITER: usize = 200;
const MAX_SWEEPS: usize = 100;

#[derive(Clone, Debug)]
pub struct WeylCone {
    tip: GroupElement,
    flag: Flag,
    frame: GroupElement,
}

impl WeylCone {
    /// Cone at `tip` towards `flag`, with a full frame extending the flag.
    pub fn new(tip: GroupElement, flag: Flag) -> Result<Self> {
        if tip.dim() != flag.theta().dim() {
            return Err(Error::DimensionMismatch { expected: flag.theta().dim(), found: tip.dim() });
        }
        let frame = extend_frame(&flag);
        Ok(WeylCone { tip, flag, frame: GroupElement::orthogonal(frame)? })
    }

    /// Uses `frame` directly; its leading columns must span the parts of `flag`.
    pub fn with_frame(tip: GroupElement, flag: Flag, frame: Matrix) -> Result<Self> {
        let k = GroupElement::orthogonal(frame)?;
        let induced = Flag::from_frame(flag.theta(), k.matrix());
        if flag_distance(&induced, &flag)? > 1e-8 {
            return Err(Error::InvalidArgument("frame does not extend the flag".into()));
        }
        Ok(WeylCone { tip, flag, frame: k })
    }

    pub fn tip(&self) -> &GroupElement {
        &self.tip
    }

    pub fn flag(&self) -> &Flag {
        &self.flag
    }

    pub fn frame(&self) -> &Matrix {
        self.frame.matrix()
    }

    /// `tip · frame · exp(H)`
    pub fn point(&self, h: &[f64]) -> GroupElement {
        self.tip.compose(&self.frame).compose(&GroupElement::diag_exp(h))
    }

    /// Moves the cone by left multiplication. The flag is attached to `tip⁻¹h`, so only the tip moves.
    pub fn translate(&self, g: &GroupElement) -> WeylCone {
        WeylCone { tip: g.compose(&self.tip), flag: self.flag.clone(), frame: self.frame.clone() }
    }
}

/// Orthonormal frame whose leading columns span the nested parts of the flag.
fn extend_frame(flag: &Flag) -> Matrix {
    let d = flag.theta().dim();
    let mut frame = Matrix::zeros(d, 0);
    for part in flag.parts() {
        let k = part.dim();
        while frame.ncols() < k {
            // pivot on the part column with the largest residual
            let best = (0..k)
                .map(|j| residual(&frame, &part.frame().column(j).into_owned()))
                .max_by(|a, b| a.norm().total_cmp(&b.norm()))
                .expect("non-empty part");
            let n = best.norm();
            let c = frame.ncols();
            frame = frame.insert_column(c, 0.0);
            frame.set_column(c, &(best / n));
        }
    }
    let mut full = complete_columns(&frame, d, d);
    if full.determinant() < 0.0 {
        let last = full.column(d - 1).into_owned();
        full.set_column(d - 1, &(-last));
    }
    full
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Membership {
    pub member: bool,
    /// Flag distance to the cone's flag when `U_θ(tip⁻¹h)` is defined.
    pub distance: Option<f64>,
    pub reason: Option<String>,
}

/// Whether `U_θ(tip⁻¹h)` is defined and within `tol` of the cone's flag.
pub fn cone_member(h: &GroupElement, cone: &WeylCone, tol: f64) -> Membership {
    let rel = cone.tip.inv_mul(h);
    match u_theta(&rel, cone.flag.theta()).and_then(|f| flag_distance(&f, &cone.flag)) {
        Ok(dist) => Membership { member: dist <= tol, distance: Some(dist), reason: None },
        Err(e) => Membership { member: false, distance: None, reason: Some(e.to_string()) },
    }
}

fn gaps_to_h(g: &[f64]) -> Vec<f64> {
    let d = g.len() + 1;
    let mut h = vec![0.0; d];
    for i in (0..d - 1).rev() {
        h[i] = h[i + 1] + g[i];
    }
    let mean = h.iter().sum::<f64>() / d as f64;
    h.iter().map(|x| x - mean).collect()
}

/// `d_X(y, exp H)` with H given by its gaps.
fn flat_distance(y: &GroupElement, g: &[f64]) -> f64 {
    let neg: Vec<f64> = gaps_to_h(g).iter().map(|x| -x).collect();
    kappa(&GroupElement::diag_exp(&neg).compose(y)).map_or(f64::INFINITY, |k| k.norm())
}

fn golden_section<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..MAX_ITER {
        if hi - lo < STEP_TOL {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn descend(y: &GroupElement, mut g: Vec<f64>) -> (f64, Vec<f64>) {
    let mut fcur = flat_distance(y, &g);
    for _ in 0..MAX_SWEEPS {
        let before = fcur;
        let start = g.clone();
        for i in 0..g.len() {
            // the optimum lies within 2f of the current point in H, which is
            // under 3f in any gap coordinate
            let r = 3.0 * fcur + 1e-9;
            let lo = (g[i] - r).max(0.0);
            let hi = g[i] + r;
            let mut trial = g.clone();
            let (x, fx) = golden_section(
                |t| {
                    trial[i] = t;
                    flat_distance(y, &trial)
                },
                lo,
                hi,
            );
            if fx < fcur {
                g[i] = x;
                fcur = fx;
            }
        }
        // pattern move along the sweep displacement cuts down zigzagging
        // in narrow valleys
        let dir: Vec<f64> = g.iter().zip(&start).map(|(a, b)| a - b).collect();
        let len = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len > STEP_TOL {
            let tmax = (3.0 * fcur + 1e-9) / len;
            let along = |t: f64| -> Vec<f64> { g.iter().zip(&dir).map(|(a, b)| (a + t * b).max(0.0)).collect() };
            let (t, ft) = golden_section(|t| flat_distance(y, &along(t)), 0.0, tmax);
            if ft < fcur {
                g = along(t);
                fcur = ft;
            }
        }
        if before - fcur <= 1e-12 * (1.0 + before) {
            break;
        }
    }
    (fcur, g)
}

/// Upper bound on the distance from `x` to the cone, with the chamber
/// coordinates H of the best cone point found.
///
/// Start 0 is the Cartan projection of `frame⁻¹ tip⁻¹ x`; starts 1.. are
/// seeded jitters of it. H = 0 (the tip) is always a candidate, so the
/// bound never exceeds `d_X(x, tip)`.
pub fn cone_distance_upper(x: &GroupElement, cone: &WeylCone, starts: usize, seed: u64) -> Result<(f64, Vec<f64>)> {
    cone_distance_from_rel(&cone.tip.inv_mul(x), cone, starts, seed)
}

fn cone_distance_from_rel(rel: &GroupElement, cone: &WeylCone, starts: usize, seed: u64) -> Result<(f64, Vec<f64>)> {
    if starts == 0 {
        return Err(Error::InvalidArgument("starts must be at least 1".into()));
    }
    let d = rel.dim();
    let y = cone.frame.inv_mul(rel);
    let k = kappa(&y)?;
    let g0: Vec<f64> = k.roots();
    let zero = vec![0.0; d - 1];
    let mut best = (flat_distance(&y, &zero), zero);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    for s in 0..starts {
        let start = if s == 0 {
            g0.clone()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(s as u64));
            let scale = 0.25 * k.norm() + 0.1;
            g0.iter().map(|&v| (v + scale * normal.sample(&mut rng)).max(0.0)).collect()
        };
        let (f, g) = descend(&y, start);
        if f < best.0 {
            best = (f, g);
        }
    }
    Ok((best.0.max(0.0), gaps_to_h(&best.1)))
}

/// Whether `U_θ(z⁻¹x)` and `U_θ(z⁻¹y)` are defined and transverse with
/// margin above `tol`. Errors when `x⁻¹y` has a vanishing θ-gap.
pub fn diamond_member(z: &GroupElement, x: &GroupElement, y: &GroupElement, theta: &Theta, tol: f64) -> Result<bool> {
    u_theta(&x.inv_mul(y), theta)?;
    let fx = match u_theta(&z.inv_mul(x), theta) {
        Ok(f) => f,
        Err(Error::NoGap(_)) => return Ok(false),
        Err(e) => return Err(e),
    };
    let fy = match u_theta(&z.inv_mul(y), theta) {
        Ok(f) => f,
        Err(Error::NoGap(_)) => return Ok(false),
        Err(e) => return Err(e),
    };
    let t = transverse(&fx, &fy)?;
    Ok(t.transverse && t.margin > tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeylConfig {
    pub starts: usize,
    /// Tail length for the flag limit; 0 means a third of the sequence.
    pub tail: usize,
    pub p_max: f64,
    pub ratio_cutoff: f64,
    pub seed: u64,
}

impl Default for WeylConfig {
    fn default() -> Self {
        WeylConfig {
            starts: DEFAULT_STARTS,
            tail: 0,
            p_max: DEFAULT_P_MAX,
            ratio_cutoff: DEFAULT_RATIO_CUTOFF,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConeRow {
    pub index: usize,
    pub distance: f64,
    pub bound: f64,
    pub h: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConeDistanceReport {
    /// Detected limit of `U_θ(g₀⁻¹g_n)`; the cone points towards it.
    #[serde(serialize_with = "flag_json")]
    pub flag: Flag,
    pub rows: Vec<ConeRow>,
    pub envelope: EnvelopeFit,
    pub verdict: bool,
}

fn flag_json<S: serde::Serializer>(flag: &Flag, s: S) -> std::result::Result<S::Ok, S::Error> {
    flag.to_json().serialize(s)
}

struct FromBase<'a, T: Trajectory + ?Sized>(&'a T);

impl<T: Trajectory + ?Sized> Trajectory for FromBase<'_, T> {
    fn len(&self) -> usize {
        self.0.len()
    }
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn element(&self, n: usize) -> GroupElement {
        self.0.displacement(0, n)
    }
}

/// Builds the cone at `g₀` towards the limit of `U_θ(g₀⁻¹g_n)`, bounds the
/// distance of every `g_n` to it and fits a sublinear envelope to the
/// bounds against `d_X(g₀, g_n)`.
pub fn verify_morse_lemma<T: Trajectory + ?Sized>(seq: &T, theta: &Theta, cfg: &WeylConfig) -> Result<ConeDistanceReport> {
    let n = seq.len();
    if n < 3 {
        return Err(Error::TooShort { needed: 3, got: n });
    }
    let rel = FromBase(seq);
    let tail = if cfg.tail == 0 { (n / 3).max(3) } else { cfg.tail.min(n) };
    let flag = match detect_flag_limit(&rel, theta, tail)? {
        FlagLimit::Converged { flag, .. } => flag,
        FlagLimit::Divergent { index, .. } => return Err(Error::Divergent(index)),
    };
    let cone = WeylCone::new(GroupElement::identity(seq.dim()), flag.clone())?;
    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = rel.element(i);
            let distance = kappa(&x)?.norm();
            let (bound, h) = cone_distance_from_rel(&x, &cone, cfg.starts, cfg.seed)?;
            Ok(ConeRow { index: i, distance, bound, h })
        })
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.distance, r.bound)).collect();
    let grid: Vec<f64> = default_p_grid().into_iter().filter(|&p| p <= cfg.p_max + 1e-12).collect();
    let envelope = fit_envelope(&points, &grid, None)?;
    let verdict = envelope.accepted(cfg.p_max, cfg.ratio_cutoff);
    Ok(ConeDistanceReport { flag, rows, envelope, verdict })
}
