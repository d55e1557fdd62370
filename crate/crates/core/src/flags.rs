//! Partial flags, the map U_θ, flag distances, transversality, the
//! contraction estimate for leading singular subspaces and flag-limit
//! detection along sequences.

use serde::{Deserialize, Serialize};

use crate::cartan::{kappa, simple_root, Theta};
use crate::error::{Error, Result};
use crate::matrix::{matrix_from_rows, matrix_rows, singular_values, svd, GroupElement, Matrix, Subspace};
use crate::trajectory::Trajectory;

/// U_θ(g) is defined only when every θ-gap exceeds this.
pub const GAP_FLOOR: f64 = 1e-8;
/// Transversality threshold on the smallest singular value of paired frames.
pub const TRANSVERSE_MARGIN: f64 = 1e-10;
/// Successive flag distances at or below this count as already converged.
pub const DISTANCE_FLOOR: f64 = 1e-14;

/// Nested subspaces with dimensions `theta.indices()`.
#[derive(Clone, Debug, PartialEq)]
pub struct Flag {
    theta: Theta,
    parts: Vec<Subspace>,
}

#[derive(Serialize, Deserialize)]
struct FlagRepr {
    theta: Vec<usize>,
    frames: Vec<Vec<Vec<f64>>>,
}

impl Flag {
    /// Checks dimensions and nesting, `‖(I − P_{j+1}) F_j‖ ≤ 1e−8`.
    pub fn new(theta: Theta, parts: Vec<Subspace>) -> Result<Self> {
        if parts.len() != theta.indices().len() {
            return Err(Error::DimensionMismatch { expected: theta.indices().len(), found: parts.len() });
        }
        for (p, &k) in parts.iter().zip(theta.indices()) {
            if p.dim() != k || p.ambient_dim() != theta.dim() {
                return Err(Error::DimensionMismatch { expected: k, found: p.dim() });
            }
        }
        for w in parts.windows(2) {
            let next = w[1].frame();
            let resid = w[0].frame() - next * (next.transpose() * w[0].frame());
            if resid.amax() > 1e-8 {
                return Err(Error::InvalidArgument("flag parts are not nested".into()));
            }
        }
        Ok(Flag { theta, parts })
    }

    /// Flag spanned by leading columns of an orthonormal frame.
    pub fn from_frame(theta: &Theta, frame: &Matrix) -> Flag {
        let parts = theta
            .indices()
            .iter()
            .map(|&k| Subspace::from_frame_unchecked(frame.columns(0, k).into_owned()))
            .collect();
        Flag { theta: theta.clone(), parts }
    }

    pub fn theta(&self) -> &Theta {
        &self.theta
    }

    pub fn parts(&self) -> &[Subspace] {
        &self.parts
    }

    /// The part of dimension `k`, if `k ∈ θ`.
    pub fn part(&self, k: usize) -> Option<&Subspace> {
        self.theta
            .indices()
            .iter()
            .position(|&i| i == k)
            .map(|j| &self.parts[j])
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(FlagRepr {
            theta: self.theta.indices().to_vec(),
            frames: self.parts.iter().map(|p| matrix_rows(p.frame())).collect(),
        })
        .expect("flag serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let repr: FlagRepr = serde_json::from_value(value.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        let frames = repr
            .frames
            .iter()
            .map(|rows| matrix_from_rows(rows))
            .collect::<Result<Vec<_>>>()?;
        let d = frames.first().map(|f| f.nrows()).ok_or(Error::EmptyInput)?;
        let theta = Theta::new(d, repr.theta)?;
        let parts = frames.into_iter().map(Subspace::new).collect::<Result<Vec<_>>>()?;
        Flag::new(theta, parts)
    }
}

/// Span of the first k left singular vectors, requiring α_k > floor.
pub fn leading_subspace(g: &GroupElement, k: usize, floor: f64) -> Result<Subspace> {
    let s = svd(g)?;
    let d = g.dim();
    if k == 0 || k >= d {
        return Err(Error::IndexOutOfRange { index: k, max: d - 1 });
    }
    if s.sing_log[k - 1] - s.sing_log[k] <= floor {
        return Err(Error::NoGap(k));
    }
    Ok(Subspace::from_frame_unchecked(s.left_frame.columns(0, k).into_owned()))
}

pub fn u_theta(g: &GroupElement, theta: &Theta) -> Result<Flag> {
    u_theta_with_floor(g, theta, GAP_FLOOR)
}

pub fn u_theta_with_floor(g: &GroupElement, theta: &Theta, floor: f64) -> Result<Flag> {
    if g.dim() != theta.dim() {
        return Err(Error::DimensionMismatch { expected: theta.dim(), found: g.dim() });
    }
    let s = svd(g)?;
    for &k in theta.indices() {
        if s.sing_log[k - 1] - s.sing_log[k] <= floor {
            return Err(Error::NoGap(k));
        }
    }
    Ok(Flag::from_frame(theta, &s.left_frame))
}

/// Sine of the largest principal angle between equal-dimensional subspaces.
pub fn grassmann_distance(u: &Subspace, v: &Subspace) -> Result<f64> {
    if u.dim() != v.dim() || u.ambient_dim() != v.ambient_dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), found: v.dim() });
    }
    let resid = v.frame() - u.frame() * (u.frame().transpose() * v.frame());
    Ok(singular_values(&resid)?[0].min(1.0))
}

/// Max over parts of the Grassmannian distance.
pub fn flag_distance(f1: &Flag, f2: &Flag) -> Result<f64> {
    if f1.theta != f2.theta {
        return Err(Error::ThetaMismatch);
    }
    let mut worst: f64 = 0.0;
    for (a, b) in f1.parts.iter().zip(&f2.parts) {
        worst = worst.max(grassmann_distance(a, b)?);
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Transversality {
    pub transverse: bool,
    pub margin: f64,
}

/// For each k ∈ θ, the smallest singular value of `[F1_k | F2_{d−k}]`.
pub fn transverse(f1: &Flag, f2: &Flag) -> Result<Transversality> {
    if f1.theta != f2.theta {
        return Err(Error::ThetaMismatch);
    }
    let d = f1.theta.dim();
    let mut margin = f64::INFINITY;
    for &k in f1.theta.indices() {
        let a = f1.part(k).expect("k in theta");
        let b = f2.part(d - k).expect("theta symmetric");
        let mut m = Matrix::zeros(d, d);
        m.columns_mut(0, k).copy_from(a.frame());
        m.columns_mut(k, d - k).copy_from(b.frame());
        let sv = singular_values(&m)?;
        margin = margin.min(sv[d - 1]);
    }
    Ok(Transversality { transverse: margin > TRANSVERSE_MARGIN, margin })
}

/// Both sides of `d(U_k(a), U_k(ab)) ≤ (σ₁/σ_d)(b) · (σ_{k+1}/σ_k)(a)`.
pub fn gap_ratio_bound(a: &GroupElement, b: &GroupElement, k: usize) -> Result<(f64, f64)> {
    let ab = a.compose(b);
    let ua = leading_subspace(a, k, GAP_FLOOR)?;
    let uab = leading_subspace(&ab, k, GAP_FLOOR)?;
    let lhs = grassmann_distance(&ua, &uab)?;
    let kb_inv = kappa(&b.inverse())?;
    let kb = kb_inv.coords();
    let rhs = (kb[0] - kb[kb.len() - 1] - simple_root(k, &kappa(a)?)?).exp();
    Ok((lhs, rhs))
}

/// Outcome of the flag-limit test on the tail of a sequence.
#[derive(Clone, Debug, PartialEq)]
pub enum FlagLimit {
    /// Flag of the last element, with successive tail distances.
    Converged { flag: Flag, distances: Vec<f64> },
    /// Index of the element where the tail fails to settle.
    Divergent { index: usize, distances: Vec<f64> },
}

impl FlagLimit {
    pub fn flag(&self) -> Option<&Flag> {
        match self {
            FlagLimit::Converged { flag, .. } => Some(flag),
            FlagLimit::Divergent { .. } => None,
        }
    }
}

/// Tests whether `U_θ(g_n)` settles over the last `tail` elements.
///
/// Successive distances δ_n must sit under an envelope `exp(c − λ n^β)`
/// with λ > 0 for β = 1 or β = ½, and the predicted remainder beyond the
/// tail must be at most half the observed tail sum.
pub fn detect_flag_limit<T: Trajectory + ?Sized>(seq: &T, theta: &Theta, tail: usize) -> Result<FlagLimit> {
    let n = seq.len();
    if tail < 2 || n < tail {
        return Err(Error::TooShort { needed: tail.max(2), got: n });
    }
    let start = n - tail;
    let mut flags = Vec::with_capacity(tail);
    for i in start..n {
        match u_theta(&seq.element(i), theta) {
            Ok(f) => flags.push(f),
            Err(Error::NoGap(k)) => return Err(Error::NoGapAt { index: i, root: k }),
            Err(e) => return Err(e),
        }
    }
    let distances = flags
        .windows(2)
        .map(|w| flag_distance(&w[0], &w[1]))
        .collect::<Result<Vec<_>>>()?;
    let last = flags.pop().expect("tail ≥ 2");
    if summable_tail(start, &distances) {
        Ok(FlagLimit::Converged { flag: last, distances })
    } else {
        let half = distances.len() / 2;
        let (off, _) = distances[half..]
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
        Ok(FlagLimit::Divergent { index: start + half + off + 1, distances })
    }
}

fn summable_tail(start: usize, distances: &[f64]) -> bool {
    let pts: Vec<(f64, f64)> = distances
        .iter()
        .enumerate()
        .filter(|(_, &d)| d > DISTANCE_FLOOR)
        .map(|(i, &d)| ((start + i) as f64, d.ln()))
        .collect();
    if distances.last().is_some_and(|&d| d <= DISTANCE_FLOOR) {
        // floored tail: converged once the floor is reached and held
        let first_floor = distances.iter().rposition(|&d| d > DISTANCE_FLOOR).map_or(0, |i| i + 1);
        return distances.len() - first_floor >= 2.min(distances.len());
    }
    if pts.len() < 3 {
        return false;
    }
    let observed: f64 = distances.iter().sum();
    let n_end = (start + distances.len()) as f64;
    [1.0, 0.5].iter().any(|&beta| {
        let xs: Vec<f64> = pts.iter().map(|(n, _)| n.powf(beta)).collect();
        let ys: Vec<f64> = pts.iter().map(|(_, y)| *y).collect();
        let slope = ols_slope(&xs, &ys);
        let lambda = -slope;
        if !(lambda > 0.0) {
            return false;
        }
        let c = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| y + lambda * x)
            .fold(f64::NEG_INFINITY, f64::max);
        let remainder = if beta == 1.0 {
            (c - lambda * n_end).exp() / (1.0 - (-lambda).exp())
        } else {
            let r = n_end.sqrt();
            2.0 * (c - lambda * r).exp() * (r / lambda + 1.0 / (lambda * lambda))
        };
        remainder <= 0.5 * observed
    })
}

fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{matrix_from_rows, principal_angles};

    fn rot(t: f64) -> GroupElement {
        let m = matrix_from_rows(&[
            vec![t.cos(), -t.sin(), 0.0],
            vec![t.sin(), t.cos(), 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        GroupElement::orthogonal(m).unwrap()
    }

    fn coord_flag(d: usize, order: &[usize]) -> Flag {
        let mut frame = Matrix::zeros(d, d);
        for (j, &i) in order.iter().enumerate() {
            frame[(i, j)] = 1.0;
        }
        Flag::from_frame(&Theta::full(d), &frame)
    }

    #[test]
    fn u_theta_diagonal() {
        let g = GroupElement::diag_exp(&[2.0, 1.0, -3.0]);
        let f = u_theta(&g, &Theta::full(3)).unwrap();
        assert!(flag_distance(&f, &coord_flag(3, &[0, 1, 2])).unwrap() < 1e-15);
        assert_eq!(u_theta(&GroupElement::identity(3), &Theta::full(3)), Err(Error::NoGap(1)));
    }

    #[test]
    fn flag_distance_examples() {
        let f = coord_flag(3, &[0, 1, 2]);
        assert_eq!(flag_distance(&f, &f).unwrap(), 0.0);
        let th = Theta::full(2);
        let a = Flag::from_frame(&th, &Matrix::identity(2, 2));
        let b = Flag::from_frame(&th, &matrix_from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap());
        assert!((flag_distance(&a, &b).unwrap() - 1.0).abs() < 1e-15);
        let c = Flag::from_frame(&Theta::full(4), &Matrix::identity(4, 4));
        assert_eq!(flag_distance(&a, &c), Err(Error::ThetaMismatch));
    }

    #[test]
    fn flag_distance_matches_angle_sweep() {
        let g = rot(0.4).compose(&GroupElement::diag_exp(&[2.0, 0.5, -2.5]));
        let h = GroupElement::diag_exp(&[1.0, 0.0, -1.0]);
        let fg = u_theta(&g, &Theta::full(3)).unwrap();
        let fh = u_theta(&h, &Theta::full(3)).unwrap();
        let oracle = fg
            .parts()
            .iter()
            .zip(fh.parts())
            .map(|(a, b)| principal_angles(a, b).unwrap()[0].sin())
            .fold(0.0, f64::max);
        assert!((flag_distance(&fg, &fh).unwrap() - oracle).abs() < 1e-10);
        assert!((oracle - 0.4f64.sin()).abs() < 1e-12);
    }

    #[test]
    fn transversality_examples() {
        let f1 = coord_flag(3, &[0, 1, 2]);
        let f2 = coord_flag(3, &[2, 1, 0]);
        let t = transverse(&f1, &f2).unwrap();
        assert!(t.transverse && (t.margin - 1.0).abs() < 1e-14);
        let t = transverse(&f1, &f1).unwrap();
        assert!(!t.transverse && t.margin < 1e-15);
    }

    #[test]
    fn gap_bound_examples() {
        let a = GroupElement::diag_exp(&[5.0, 0.0, -5.0]);
        let (lhs, rhs) = gap_ratio_bound(&a, &GroupElement::identity(3), 1).unwrap();
        assert!(lhs < 1e-15 && lhs <= rhs);
        let (lhs, rhs) = gap_ratio_bound(&a, &rot(0.05), 1).unwrap();
        assert!(lhs <= rhs + 1e-12, "{lhs} > {rhs}");
        assert!(lhs > 0.0);
        assert_eq!(gap_ratio_bound(&GroupElement::identity(3), &a, 1), Err(Error::NoGap(1)));
    }

    #[test]
    fn flag_json_round_trip() {
        let g = rot(0.3).compose(&GroupElement::diag_exp(&[2.0, 1.0, -3.0]));
        let f = u_theta(&g, &Theta::full(3)).unwrap();
        let v = f.to_json();
        assert_eq!(v["theta"], serde_json::json!([1, 2]));
        let back = Flag::from_json(&v).unwrap();
        assert!(flag_distance(&f, &back).unwrap() < 1e-15);
    }

    #[test]
    fn limit_of_powers_and_constant() {
        let g = rot(0.7).compose(&GroupElement::diag_exp(&[1.0, 0.0, -1.0])).compose(&rot(0.7).inverse());
        let mut seq = vec![g.clone()];
        for _ in 1..40 {
            let next = seq.last().unwrap().compose(&g);
            seq.push(next);
        }
        let lim = detect_flag_limit(&seq, &Theta::full(3), 20).unwrap();
        assert!(matches!(lim, FlagLimit::Converged { .. }));
        let constant = vec![g.clone(); 10];
        match detect_flag_limit(&constant, &Theta::full(3), 5).unwrap() {
            FlagLimit::Converged { distances, .. } => assert!(distances.iter().all(|&d| d == 0.0)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn alternating_sequence_diverges() {
        let w = GroupElement::orthogonal(
            matrix_from_rows(&[vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0]]).unwrap(),
        )
        .unwrap();
        let seq: Vec<_> = (1..30)
            .map(|n| {
                let h = GroupElement::diag_exp(&[n as f64, 0.0, -(n as f64)]);
                if n % 2 == 0 {
                    h
                } else {
                    w.compose(&h)
                }
            })
            .collect();
        assert!(matches!(
            detect_flag_limit(&seq, &Theta::full(3), 20).unwrap(),
            FlagLimit::Divergent { .. }
        ));
    }

    #[test]
    fn no_gap_reports_sequence_index() {
        let seq = vec![GroupElement::diag_exp(&[1.0, 0.0, -1.0]), GroupElement::identity(3)];
        assert_eq!(
            detect_flag_limit(&seq, &Theta::full(3), 2),
            Err(Error::NoGapAt { index: 1, root: 1 })
        );
    }
}
