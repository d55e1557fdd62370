//! Hilbert geometry of properly convex domains in an affine chart.
//!
//! Points are chart coordinates `x ∈ R^n`, standing for the projective
//! point `[x : 1]`. Domains are ellipsoids `{vᵀBv < 0}` for a form B of
//! signature (n, 1), or polytopes given by their vertices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::matrix::{invert, singular_values, GroupElement, Matrix};

/// Relative tolerance for the automorphism tests.
pub const AUT_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub enum DomainKind {
    /// `{[v] : vᵀ B v < 0}`; B has one negative eigenvalue.
    Ellipsoid { form: Matrix },
    /// Convex hull of `vertices`; `facets` are covectors w with `w·(x,1) > 0`
    /// inside.
    Polytope { vertices: Vec<Vec<f64>>, facets: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvexDomain {
    kind: DomainKind,
    base: Vec<f64>,
}

fn homog(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.push(1.0);
    v
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn quad(form: &Matrix, a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += a[i] * form[(i, j)] * b[j];
        }
    }
    s
}

impl ConvexDomain {
    /// Ellipsoid domain from a symmetric (n+1)×(n+1) form.
    pub fn ellipsoid(form: Matrix, base: Vec<f64>) -> Result<Self> {
        let m = form.nrows();
        if form.ncols() != m || base.len() + 1 != m {
            return Err(Error::DimensionMismatch { expected: m, found: base.len() + 1 });
        }
        if (&form - form.transpose()).amax() > 1e-12 * form.amax() {
            return Err(Error::InvalidArgument("form must be symmetric".into()));
        }
        // bounded in the chart iff the form is positive definite on directions
        let dirs = form.view((0, 0), (m - 1, m - 1)).into_owned();
        let chol = nalgebra::Cholesky::new(dirs);
        if chol.is_none() {
            return Err(Error::InvalidArgument("ellipsoid is not bounded in the chart".into()));
        }
        let dom = ConvexDomain { kind: DomainKind::Ellipsoid { form }, base };
        if !dom.contains(&dom.base) {
            return Err(Error::OutsideDomain);
        }
        Ok(dom)
    }

    /// Unit ball in R^n with the centre as base point.
    pub fn unit_ball(n: usize) -> Self {
        let mut form = Matrix::identity(n + 1, n + 1);
        form[(n, n)] = -1.0;
        ConvexDomain { kind: DomainKind::Ellipsoid { form }, base: vec![0.0; n] }
    }

    /// The Klein model of the hyperbolic plane, preserved by SO(2,1).
    pub fn klein_disk() -> Self {
        Self::unit_ball(2)
    }

    /// Simplex on n+1 affinely independent vertices in R^n.
    pub fn simplex(vertices: Vec<Vec<f64>>, base: Vec<f64>) -> Result<Self> {
        let n = base.len();
        if vertices.len() != n + 1 || vertices.iter().any(|v| v.len() != n) {
            return Err(Error::DimensionMismatch { expected: n + 1, found: vertices.len() });
        }
        let mut m = Matrix::zeros(n + 1, n + 1);
        for (j, v) in vertices.iter().enumerate() {
            for i in 0..n {
                m[(i, j)] = v[i];
            }
            m[(n, j)] = 1.0;
        }
        let inv = invert(&m).ok_or(Error::InvalidArgument("degenerate simplex".into()))?;
        let facets = (0..=n).map(|i| inv.row(i).iter().copied().collect()).collect();
        Self::polytope_checked(vertices, facets, base)
    }

    /// Convex polygon in R^2 from vertices in cyclic order (either orientation).
    pub fn polygon(vertices: Vec<Vec<f64>>, base: Vec<f64>) -> Result<Self> {
        if base.len() != 2 || vertices.len() < 3 || vertices.iter().any(|v| v.len() != 2) {
            return Err(Error::InvalidArgument("polygon needs ≥ 3 planar vertices".into()));
        }
        let k = vertices.len();
        let area: f64 = (0..k)
            .map(|i| {
                let (p, q) = (&vertices[i], &vertices[(i + 1) % k]);
                p[0] * q[1] - p[1] * q[0]
            })
            .sum();
        let orient = area.signum();
        let facets = (0..k)
            .map(|i| {
                let (p, q) = (&vertices[i], &vertices[(i + 1) % k]);
                // orient · cross(q − p, x − p) > 0 inside
                let (ex, ey) = (q[0] - p[0], q[1] - p[1]);
                vec![-orient * ey, orient * ex, orient * (ey * p[0] - ex * p[1])]
            })
            .collect();
        Self::polytope_checked(vertices, facets, base)
    }

    fn polytope_checked(vertices: Vec<Vec<f64>>, facets: Vec<Vec<f64>>, base: Vec<f64>) -> Result<Self> {
        let dom = ConvexDomain { kind: DomainKind::Polytope { vertices, facets }, base };
        if let DomainKind::Polytope { vertices, facets } = &dom.kind {
            // every vertex must be weakly inside, or the cyclic order was wrong
            let bad = vertices
                .iter()
                .any(|v| facets.iter().any(|w| dot(w, &homog(v)) < -1e-9 * (1.0 + w.iter().map(|x| x.abs()).sum::<f64>())));
            if bad {
                return Err(Error::InvalidArgument("vertices are not in convex position".into()));
            }
        }
        if !dom.contains(&dom.base) {
            return Err(Error::OutsideDomain);
        }
        Ok(dom)
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn base_point(&self) -> &[f64] {
        &self.base
    }

    /// Same domain with another base point.
    pub fn with_base(&self, base: Vec<f64>) -> Result<Self> {
        let dom = ConvexDomain { kind: self.kind.clone(), base };
        if dom.base.len() != self.base.len() {
            return Err(Error::DimensionMismatch { expected: self.base.len(), found: dom.base.len() });
        }
        if !dom.contains(&dom.base) {
            return Err(Error::OutsideDomain);
        }
        Ok(dom)
    }

    /// Chart dimension n; the domain lives in P(R^{n+1}).
    pub fn dim(&self) -> usize {
        self.base.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        let v = homog(x);
        match &self.kind {
            DomainKind::Ellipsoid { form } => quad(form, &v, &v) < 0.0,
            DomainKind::Polytope { facets, .. } => facets.iter().all(|w| dot(w, &v) > 0.0),
        }
    }

    /// Parameters `(s₋, s₊)`, `s₋ < 0 < s₊`, where `x + s·u` meets the boundary.
    pub fn chord(&self, x: &[f64], u: &[f64]) -> Result<(f64, f64)> {
        if !self.contains(x) {
            return Err(Error::OutsideDomain);
        }
        if u.len() != x.len() || u.iter().all(|c| *c == 0.0) {
            return Err(Error::InvalidArgument("chord direction must be non-zero".into()));
        }
        let v = homog(x);
        let mut du = u.to_vec();
        du.push(0.0);
        match &self.kind {
            DomainKind::Ellipsoid { form } => {
                let a = quad(form, &du, &du);
                let b = quad(form, &v, &du);
                let c = quad(form, &v, &v);
                let disc = (b * b - a * c).max(0.0).sqrt();
                // stable roots of a s² + 2 b s + c
                let q = -(b + if b >= 0.0 { disc } else { -disc });
                let (r1, r2) = (q / a, c / q);
                Ok((r1.min(r2), r1.max(r2)))
            }
            DomainKind::Polytope { facets, .. } => {
                let mut lo = f64::NEG_INFINITY;
                let mut hi = f64::INFINITY;
                for w in facets {
                    let wv = dot(w, &v);
                    let wu = dot(w, &du);
                    if wu < 0.0 {
                        hi = hi.min(-wv / wu);
                    } else if wu > 0.0 {
                        lo = lo.max(-wv / wu);
                    }
                }
                if !lo.is_finite() || !hi.is_finite() {
                    return Err(Error::InvalidArgument("polytope is unbounded".into()));
                }
                Ok((lo, hi))
            }
        }
    }

    /// Projective action of g on a chart point.
    pub fn act(&self, g: &GroupElement, x: &[f64]) -> Result<Vec<f64>> {
        if g.dim() != self.dim() + 1 {
            return Err(Error::DimensionMismatch { expected: self.dim() + 1, found: g.dim() });
        }
        let v = nalgebra::DVector::from_vec(homog(x));
        let w = g.matrix() * v;
        let last = w[self.dim()];
        if last == 0.0 || !last.is_finite() {
            return Err(Error::OutsideDomain);
        }
        Ok((0..self.dim()).map(|i| w[i] / last).collect())
    }

    /// `{kind, form | vertices, base_point}`
    pub fn to_json(&self) -> Value {
        match &self.kind {
            DomainKind::Ellipsoid { form } => json!({
                "kind": "ellipsoid",
                "form": crate::matrix::matrix_rows(form),
                "base_point": self.base,
            }),
            DomainKind::Polytope { vertices, .. } => json!({
                "kind": "polytope",
                "vertices": vertices,
                "base_point": self.base,
            }),
        }
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct Repr {
            kind: String,
            form: Option<Vec<Vec<f64>>>,
            vertices: Option<Vec<Vec<f64>>>,
            base_point: Option<Vec<f64>>,
        }
        let r: Repr = serde_json::from_value(value.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        match r.kind.as_str() {
            "ellipsoid" => {
                let form = crate::matrix::matrix_from_rows(&r.form.ok_or(Error::Parse("missing form".into()))?)?;
                let base = r.base_point.unwrap_or_else(|| vec![0.0; form.nrows() - 1]);
                Self::ellipsoid(form, base)
            }
            "polytope" => {
                let vertices = r.vertices.ok_or(Error::Parse("missing vertices".into()))?;
                let n = vertices.first().map_or(0, |v| v.len());
                let base = r.base_point.unwrap_or_else(|| {
                    let k = vertices.len() as f64;
                    (0..n).map(|i| vertices.iter().map(|v| v[i]).sum::<f64>() / k).collect()
                });
                if vertices.len() == n + 1 {
                    Self::simplex(vertices, base)
                } else if n == 2 {
                    Self::polygon(vertices, base)
                } else {
                    Err(Error::InvalidArgument("polytopes are simplices or planar polygons".into()))
                }
            }
            other => Err(Error::Parse(format!("unknown domain kind {other}"))),
        }
    }
}

/// A point with the boundary endpoints of a chord through it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChordPoint {
    pub point: Vec<f64>,
    pub chord: (Vec<f64>, Vec<f64>),
}

/// Boundary points a, b with a, x, y, b in order on the line through x, y.
pub fn chord_through(x: &[f64], y: &[f64], dom: &ConvexDomain) -> Result<ChordPoint> {
    let u: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
    let (lo, hi) = dom.chord(x, &u)?;
    let at = |s: f64| -> Vec<f64> { x.iter().zip(&u).map(|(p, d)| p + s * d).collect() };
    Ok(ChordPoint { point: x.to_vec(), chord: (at(lo), at(hi)) })
}

/// `½ log (|b−x||y−a| / (|b−y||a−x|))`
///
/// The four lengths are taken from chord parameters solved at x and at y
/// separately, which avoids the cancellation in `|b − y|` near the boundary.
pub fn hilbert_distance(x: &[f64], y: &[f64], dom: &ConvexDomain) -> Result<f64> {
    if !dom.contains(x) || !dom.contains(y) {
        return Err(Error::OutsideDomain);
    }
    let u: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
    if u.iter().all(|c| *c == 0.0) {
        return Ok(0.0);
    }
    let (sa, sb) = dom.chord(x, &u)?;
    let (ta, tb) = dom.chord(y, &u)?;
    // |b−x| = sb, |a−x| = −sa, |b−y| = tb, |y−a| = −ta in units of |u|
    let d = 0.5 * ((sb.ln() - tb.ln()) + ((-ta).ln() - (-sa).ln()));
    Ok(d.max(0.0))
}

/// `d_H(g·o, o)`; for ellipsoids computed from homogeneous vectors
/// (`cosh d = |⟨go, o⟩| / √(⟨go,go⟩⟨o,o⟩)` with `⟨go,go⟩ = λ⟨o,o⟩` taken from
/// the form), which stays accurate when g·o is too close to the boundary
/// to be stored in chart coordinates.
pub fn orbit_distance(g: &GroupElement, o: &[f64], dom: &ConvexDomain) -> Result<f64> {
    match &dom.kind {
        DomainKind::Ellipsoid { form } => {
            let v = homog(o);
            let gv: Vec<f64> = (0..v.len()).map(|i| (0..v.len()).map(|j| g.matrix()[(i, j)] * v[j]).sum()).collect();
            let oo = quad(form, &v, &v);
            if oo >= 0.0 {
                return Err(Error::OutsideDomain);
            }
            let lambda = form_scale(g, form)?;
            let c = quad(form, &gv, &v).abs() / (lambda.sqrt() * -oo);
            Ok(c.max(1.0).acosh())
        }
        DomainKind::Polytope { .. } => hilbert_distance(&dom.act(g, o)?, o, dom),
    }
}

/// λ > 0 with `gᵀBg = λB`.
fn form_scale(g: &GroupElement, form: &Matrix) -> Result<f64> {
    let pulled = g.matrix().transpose() * form * g.matrix();
    // det(gᵀBg) = det(g)² det(B) fixes λ; |det g| comes from the log
    // singular values, which avoids the cancellation in gᵀBg and in LU
    let log_det: f64 = crate::cartan::kappa(g)?.coords().iter().sum();
    let lambda = (2.0 * log_det / form.nrows() as f64).exp();
    // round-off in gᵀBg scales with |g|², not with the result
    let scale = g.matrix().amax().powi(2) * form.amax();
    if !(lambda > 0.0) || (&pulled - form * lambda).amax() > AUT_TOL * scale.max(form.amax() * lambda) {
        return Err(Error::InvalidArgument("element does not preserve the form".into()));
    }
    Ok(lambda)
}

fn random_interior(dom: &ConvexDomain, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = dom.dim();
    loop {
        let u: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        if let Ok((lo, hi)) = dom.chord(&dom.base, &u) {
            let s = lo + (hi - lo) * (0.05 + 0.9 * rng.random::<f64>());
            let x: Vec<f64> = dom.base.iter().zip(&u).map(|(b, d)| b + s * d).collect();
            if dom.contains(&x) {
                return x;
            }
        }
    }
}

/// Whether g preserves the domain: the form up to positive scale, or the
/// vertex set up to permutation, plus distance invariance on `samples`
/// seeded pairs.
pub fn automorphism_check(g: &GroupElement, dom: &ConvexDomain, samples: usize, seed: u64) -> Result<bool> {
    if g.dim() != dom.dim() + 1 {
        return Err(Error::DimensionMismatch { expected: dom.dim() + 1, found: g.dim() });
    }
    let structural = match &dom.kind {
        DomainKind::Ellipsoid { form } => form_scale(g, form).is_ok(),
        DomainKind::Polytope { vertices, .. } => {
            let scale = vertices.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
            let mut used = vec![false; vertices.len()];
            vertices.iter().all(|v| match dom.act(g, v) {
                Ok(img) => {
                    let hit = vertices.iter().enumerate().position(|(j, w)| {
                        !used[j] && img.iter().zip(w).all(|(a, b)| (a - b).abs() <= AUT_TOL * scale)
                    });
                    match hit {
                        Some(j) => {
                            used[j] = true;
                            true
                        }
                        None => false,
                    }
                }
                Err(_) => false,
            })
        }
    };
    if !structural {
        return Ok(false);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let x = random_interior(dom, &mut rng);
        let y = random_interior(dom, &mut rng);
        let (gx, gy) = (dom.act(g, &x)?, dom.act(g, &y)?);
        if !dom.contains(&gx) || !dom.contains(&gy) {
            return Ok(false);
        }
        let d0 = hilbert_distance(&x, &y, dom)?;
        let d1 = hilbert_distance(&gx, &gy, dom)?;
        if (d0 - d1).abs() > 1e-6 * (1.0 + d0) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FactRow {
    pub index: usize,
    pub hilbert: f64,
    pub half_log_ratio: f64,
    pub deviation: f64,
}

/// Compares `d_H(g·o, o)` with `½ log(σ₁/σ_n)(g)` over an orbit.
pub fn fact_singular_value_gap(orbit: &[GroupElement], o: &[f64], dom: &ConvexDomain) -> Result<(f64, Vec<FactRow>)> {
    if !dom.contains(o) {
        return Err(Error::OutsideDomain);
    }
    let mut rows = Vec::with_capacity(orbit.len());
    for (i, g) in orbit.iter().enumerate() {
        let structural = match &dom.kind {
            DomainKind::Ellipsoid { form } => form_scale(g, form).is_ok(),
            DomainKind::Polytope { .. } => automorphism_check(g, dom, 0, 0)?,
        };
        if !structural {
            return Err(Error::NotAutomorphism(i));
        }
        let k = crate::cartan::kappa(g)?;
        let half = 0.5 * (k.coords()[0] - k.coords()[k.dim() - 1]);
        let dh = orbit_distance(g, o, dom)?;
        rows.push(FactRow { index: i, hilbert: dh, half_log_ratio: half, deviation: (dh - half).abs() });
    }
    let sup = rows.iter().map(|r| r.deviation).fold(0.0, f64::max);
    Ok((sup, rows))
}

/// Straight geodesic ray from `base` towards a boundary point, by Hilbert
/// arclength.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RayTrace {
    pub base: Vec<f64>,
    pub target: Vec<f64>,
    /// `|a − base| / |target − base|` for the opposite endpoint a.
    back: f64,
    pub samples: Vec<(f64, Vec<f64>)>,
}

impl RayTrace {
    /// Ray from `base` in direction `u`.
    pub fn from_direction(base: &[f64], u: &[f64], dom: &ConvexDomain) -> Result<Self> {
        let (lo, hi) = dom.chord(base, u)?;
        let target = base.iter().zip(u).map(|(b, d)| b + hi * d).collect();
        Ok(RayTrace { base: base.to_vec(), target, back: -lo / hi, samples: Vec::new() })
    }

    /// Ray from `base` towards the boundary point `xi`.
    pub fn toward(base: &[f64], xi: &[f64], dom: &ConvexDomain) -> Result<Self> {
        let u: Vec<f64> = xi.iter().zip(base).map(|(a, b)| a - b).collect();
        let mut ray = Self::from_direction(base, &u, dom)?;
        ray.target = xi.to_vec();
        Ok(ray)
    }

    /// Point at arclength t ≥ 0.
    pub fn point_at(&self, t: f64) -> Vec<f64> {
        let a = self.back;
        // 1 − s = (1 + A) / (1 + A e^{2t}); written to stay accurate near b
        let rem = (1.0 + a) / (1.0 + a * (2.0 * t).exp());
        self.target.iter().zip(&self.base).map(|(b, x)| b + rem * (x - b)).collect()
    }

    /// Fills `samples` at spacing `dt` on [0, t_max].
    pub fn sample(mut self, dt: f64, t_max: f64) -> Self {
        let steps = (t_max / dt).floor() as usize;
        self.samples = (0..=steps).map(|i| {
            let t = i as f64 * dt;
            (t, self.point_at(t))
        }).collect();
        self
    }
}

pub(crate) fn golden_min<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
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

fn bisect<F: FnMut(f64) -> bool>(mut inside: F, mut a: f64, mut b: f64) -> f64 {
    // inside(a) != inside(b); returns the crossing
    let ia = inside(a);
    for _ in 0..200 {
        if (b - a).abs() < 1e-12 {
            break;
        }
        let m = 0.5 * (a + b);
        if inside(m) == ia {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Sub-interval of [lo, hi] where `f < r`, for f quasi-convex.
///
/// Golden-section finds the minimum. A coarse 33-point scan checks it; if
/// any scan value beats it, unimodality failed numerically and a grid at
/// 1e−4 spacing (capped at 10⁴ points) takes over. Crossings are refined
/// by bisection.
pub fn sublevel_interval<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, r: f64) -> Option<(f64, f64)> {
    let (mut tm, mut fm) = golden_min(&mut f, lo, hi, 1e-10 * (1.0 + hi - lo));
    let probe = |steps: usize, f: &mut F| {
        (0..=steps)
            .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
            .map(|t| (t, f(t)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty scan")
    };
    let (tc, fc) = probe(32, &mut f);
    if fc < fm - 1e-12 {
        let steps = (((hi - lo) / 1e-4).ceil() as usize).clamp(16, 10_000);
        (tm, fm) = probe(steps, &mut f);
        if fc < fm {
            (tm, fm) = (tc, fc);
        }
    }
    if !(fm < r) {
        return None;
    }
    let start = if f(lo) < r { lo } else { bisect(|t| f(t) < r, lo, tm) };
    let end = if f(hi) < r { hi } else { bisect(|t| f(t) < r, tm, hi) };
    Some((start, end))
}

/// Sorts and merges intervals; returns the union and its measure.
pub fn union_measure(mut intervals: Vec<(f64, f64)>) -> (f64, Vec<(f64, f64)>) {
    intervals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (a, b) in intervals {
        match merged.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => merged.push((a, b)),
        }
    }
    let measure = merged.iter().map(|(a, b)| b - a).sum();
    (measure, merged)
}

/// Lebesgue measure of `{t ∈ [0,T] : ray(t) ∈ ⋃ B_r(q)}` with the union of
/// parameter intervals.
pub fn compact_part(
    ray: &RayTrace,
    orbit_points: &[Vec<f64>],
    r: f64,
    t_max: f64,
    dom: &ConvexDomain,
) -> Result<(f64, Vec<(f64, f64)>)> {
    if !(r > 0.0) || !(t_max > 0.0) {
        return Err(Error::InvalidArgument("r and T must be positive".into()));
    }
    let mut intervals = Vec::new();
    for q in orbit_points {
        if !dom.contains(q) {
            return Err(Error::OutsideDomain);
        }
        let f = |t: f64| hilbert_distance(&ray.point_at(t), q, dom).unwrap_or(f64::INFINITY);
        if let Some(iv) = sublevel_interval(f, 0.0, t_max, r) {
            intervals.push(iv);
        }
    }
    Ok(union_measure(intervals))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Extraction {
    /// Indices into the orbit, ordered by projection parameter.
    pub a_gamma: Vec<usize>,
    /// Projection parameter of each entry of `a_gamma`.
    pub params: Vec<f64>,
    /// Indices into the orbit of the C-separated subsequence.
    pub a_gamma_c: Vec<usize>,
}

/// Greedy C-separated subsequence: from the current element, the next one
/// is the first later element at distance ≥ C.
pub fn greedy_separated<F: FnMut(usize, usize) -> f64>(n: usize, mut dist: F, c: f64) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    let mut out = vec![0];
    let mut cur = 0;
    for j in 1..n {
        if dist(cur, j) >= c {
            out.push(j);
            cur = j;
        }
    }
    out
}

/// Total order on matrices used to break ties between equal parameters.
pub fn matrix_order(a: &GroupElement, b: &GroupElement) -> std::cmp::Ordering {
    a.matrix()
        .iter()
        .zip(b.matrix().iter())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// `A_γ` (orbit elements whose r-ball meets the ray on [0, T], ordered by
/// nearest-point parameter) and the greedy C-separated `A_{γ,C}`.
pub fn extract_sequence(
    ray: &RayTrace,
    orbit: &[(GroupElement, Vec<f64>)],
    r: f64,
    c: f64,
    t_max: f64,
    dom: &ConvexDomain,
) -> Result<Extraction> {
    if !(r > 0.0) || !(c > 0.0) || !(t_max > 0.0) {
        return Err(Error::InvalidArgument("r, C and T must be positive".into()));
    }
    let mut hits: Vec<(usize, f64)> = Vec::new();
    for (i, (_, q)) in orbit.iter().enumerate() {
        let f = |t: f64| hilbert_distance(&ray.point_at(t), q, dom).unwrap_or(f64::INFINITY);
        if sublevel_interval(f, 0.0, t_max, r).is_some() {
            // nearest point on the ray; the smallest minimizer on ties
            let (t, _) = golden_min(f, 0.0, t_max + r, 1e-10);
            hits.push((i, t));
        }
    }
    if hits.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    hits.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| matrix_order(&orbit[a.0].0, &orbit[b.0].0)));
    let a_gamma: Vec<usize> = hits.iter().map(|h| h.0).collect();
    let params = hits.iter().map(|h| h.1).collect();
    let picked = greedy_separated(
        a_gamma.len(),
        |i, j| hilbert_distance(&orbit[a_gamma[i]].1, &orbit[a_gamma[j]].1, dom).unwrap_or(f64::INFINITY),
        c,
    );
    let a_gamma_c = picked.iter().map(|&k| a_gamma[k]).collect();
    Ok(Extraction { a_gamma, params, a_gamma_c })
}

/// `β_x(a, b) = d_H(a, x) − d_H(b, x)`
pub fn horofunction(x_far: &[f64], a: &[f64], b: &[f64], dom: &ConvexDomain) -> Result<f64> {
    Ok(hilbert_distance(a, x_far, dom)? - hilbert_distance(b, x_far, dom)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HorofunctionEstimate {
    pub value: f64,
    /// `|β(t) − β(t − 1)|` between the last two cut points.
    pub cauchy_gap: f64,
    /// Arclength actually used; below the requested cut when the ray point
    /// would no longer be representable inside the chart.
    pub t_used: f64,
}

/// Boundary horofunction `β_ξ(a, b)` approximated at the point of the ray
/// from the base point towards ξ at arclength `t_cut`.
///
/// Ray points within about e^{−2t} of the boundary stop being
/// representable for t near 18; the cut is lowered in steps of ½ until the
/// ray point is inside and its distance to the base matches t to 1e−6.
pub fn boundary_horofunction(xi: &[f64], a: &[f64], b: &[f64], dom: &ConvexDomain, t_cut: f64) -> Result<HorofunctionEstimate> {
    let ray = RayTrace::toward(dom.base_point(), xi, dom)?;
    let faithful = |t: f64| -> bool {
        let p = ray.point_at(t);
        dom.contains(&p) && hilbert_distance(dom.base_point(), &p, dom).is_ok_and(|d| (d - t).abs() <= 1e-6)
    };
    let mut t = t_cut;
    while t > 1.0 && !faithful(t) {
        t -= 0.5;
    }
    if !faithful(t) {
        return Err(Error::OutsideDomain);
    }
    let v1 = horofunction(&ray.point_at(t), a, b, dom)?;
    let v0 = horofunction(&ray.point_at(t - 1.0), a, b, dom)?;
    Ok(HorofunctionEstimate { value: v1, cauchy_gap: (v1 - v0).abs(), t_used: t })
}

/// Far end of a geodesic for [`hausdorff_geodesic_bound`].
#[derive(Clone, Debug, PartialEq)]
pub enum End {
    Point(Vec<f64>),
    Boundary(Vec<f64>),
}

struct Geodesic {
    ray: RayTrace,
    length: f64,
}

fn geodesic(p: &[f64], q: &End, dom: &ConvexDomain, ray_len: f64) -> Result<Geodesic> {
    match q {
        End::Point(q) => {
            let u: Vec<f64> = q.iter().zip(p).map(|(a, b)| a - b).collect();
            let ray = RayTrace::from_direction(p, &u, dom)?;
            Ok(Geodesic { ray, length: hilbert_distance(p, q, dom)? })
        }
        End::Boundary(xi) => Ok(Geodesic { ray: RayTrace::toward(p, xi, dom)?, length: ray_len }),
    }
}

fn point_to_geodesic(x: &[f64], g: &Geodesic, extra: f64, dom: &ConvexDomain) -> f64 {
    let hi = g.length + extra;
    let f = |t: f64| hilbert_distance(x, &g.ray.point_at(t), dom).unwrap_or(f64::INFINITY);
    golden_min(f, 0.0, hi, 1e-10).1
}

/// Sampled Hausdorff distance between `[p₁ q₁]` and `[p₂ q₂]` against
/// `max{d_H(p₁,p₂), d_H(q₁,q₂)}`.
///
/// Boundary endpoints give rays, truncated at arclength `ray_len`; points of
/// one ray are compared with the other ray extended by the bound plus one,
/// so truncation does not inflate the result. Two rays towards the same
/// boundary point have `d_H(q₁,q₂) = 0`.
pub fn hausdorff_geodesic_bound(
    p1: &[f64],
    p2: &[f64],
    q1: &End,
    q2: &End,
    dom: &ConvexDomain,
    samples: usize,
    ray_len: f64,
) -> Result<(f64, f64)> {
    let dq = match (q1, q2) {
        (End::Point(a), End::Point(b)) => hilbert_distance(a, b, dom)?,
        (End::Boundary(a), End::Boundary(b)) => {
            if a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12) {
                0.0
            } else {
                f64::INFINITY
            }
        }
        _ => return Err(Error::InvalidArgument("mixed segment and ray".into())),
    };
    let rhs = hilbert_distance(p1, p2, dom)?.max(dq);
    let g1 = geodesic(p1, q1, dom, ray_len)?;
    let g2 = geodesic(p2, q2, dom, ray_len)?;
    let extra = if matches!(q1, End::Boundary(_)) { rhs.min(1e3) + 1.0 } else { 0.0 };
    let n = samples.max(2);
    let mut lhs: f64 = 0.0;
    for (a, b) in [(&g1, &g2), (&g2, &g1)] {
        for i in 0..n {
            let t = a.length * i as f64 / (n - 1) as f64;
            lhs = lhs.max(point_to_geodesic(&a.ray.point_at(t), b, extra, dom));
        }
    }
    Ok((lhs, rhs))
}

/// Largest singular value ratio used to reject elements that would leave
/// the chart representable range.
pub fn log_condition(g: &GroupElement) -> Result<f64> {
    let s = singular_values(g.matrix())?;
    Ok((s[0] / s[s.len() - 1]).ln())
}
