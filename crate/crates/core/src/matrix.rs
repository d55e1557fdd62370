//! Dense kernel: unimodular normalization, inversion, one-sided Jacobi SVD,
//! orthonormal frames and principal angles.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;

/// Off-diagonal threshold for the Jacobi sweeps, relative to column norms.
pub const SVD_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 80;
/// A singular value is trusted from one side of the two-sided SVD when it is
/// at least this fraction of the largest singular value on that side.
const RELIABLE_RATIO: f64 = 1e-6;

/// A point of SL±(d,R), stored together with its inverse.
///
/// Products propagate both factors (`inv(ab) = inv(b) inv(a)`), so the small
/// singular values of long products stay available through the inverse.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    mat: Matrix,
    inv: Matrix,
}

impl GroupElement {
    pub fn identity(d: usize) -> Self {
        GroupElement {
            mat: Matrix::identity(d, d),
            inv: Matrix::identity(d, d),
        }
    }

    /// Normalizes `raw` to determinant ±1.
    pub fn new(raw: Matrix) -> Result<Self> {
        normalize(&raw)
    }

    /// Builds `diag(exp(h))`, shifting `h` to mean zero first.
    pub fn diag_exp(h: &[f64]) -> Self {
        let d = h.len();
        let mean = h.iter().sum::<f64>() / d as f64;
        let mut mat = Matrix::zeros(d, d);
        let mut inv = Matrix::zeros(d, d);
        for i in 0..d {
            mat[(i, i)] = (h[i] - mean).exp();
            inv[(i, i)] = (mean - h[i]).exp();
        }
        GroupElement { mat, inv }
    }

    /// Wraps an orthogonal matrix; its inverse is the transpose.
    pub fn orthogonal(k: Matrix) -> Result<Self> {
        let d = k.nrows();
        if k.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: k.ncols() });
        }
        let err = (k.transpose() * &k - Matrix::identity(d, d)).amax();
        if !err.is_finite() || err > 1e-10 {
            return Err(Error::InvalidArgument(format!("matrix is not orthogonal (error {err:.3e})")));
        }
        let inv = k.transpose();
        Ok(GroupElement { mat: k, inv })
    }

    /// Wraps a matrix with a known inverse, checking `mat·inv = I` to 1e−8
    /// relative to the entry scale.
    pub fn with_inverse(mat: Matrix, inv: Matrix) -> Result<Self> {
        let d = mat.nrows();
        if mat.ncols() != d || inv.nrows() != d || inv.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: inv.nrows() });
        }
        if mat.iter().chain(inv.iter()).any(|x| !x.is_finite()) {
            return Err(Error::SingularInput);
        }
        let scale = mat.amax() * inv.amax();
        let err = (&mat * &inv - Matrix::identity(d, d)).amax();
        if err > 1e-8 * scale.max(1.0) {
            return Err(Error::InvalidArgument(format!("supplied inverse is off by {err:.3e}")));
        }
        Ok(GroupElement { mat, inv })
    }

    pub(crate) fn from_parts(mat: Matrix, inv: Matrix) -> Self {
        GroupElement { mat, inv }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.mat
    }

    pub fn inverse_matrix(&self) -> &Matrix {
        &self.inv
    }

    pub fn inverse(&self) -> GroupElement {
        GroupElement {
            mat: self.inv.clone(),
            inv: self.mat.clone(),
        }
    }

    /// `self · other`
    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        GroupElement {
            mat: &self.mat * &other.mat,
            inv: &other.inv * &self.inv,
        }
    }

    /// `self⁻¹ · other`
    pub fn inv_mul(&self, other: &GroupElement) -> GroupElement {
        GroupElement {
            mat: &self.inv * &other.mat,
            inv: &other.inv * &self.mat,
        }
    }

    /// `other⁻¹ · self · other`
    pub fn conjugate_by(&self, other: &GroupElement) -> GroupElement {
        other.inv_mul(&self.compose(other))
    }

    pub fn det(&self) -> f64 {
        let (log_abs, sign) = log_abs_det(&self.mat);
        sign * log_abs.exp()
    }

    /// Largest entrywise difference of the matrices.
    pub fn max_abs_diff(&self, other: &GroupElement) -> f64 {
        (&self.mat - &other.mat).amax()
    }

    /// Rows of the matrix as nested vectors.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        matrix_rows(&self.mat)
    }
}

pub fn matrix_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let m = rows[0].len();
    if let Some(bad) = rows.iter().find(|r| r.len() != m) {
        return Err(Error::DimensionMismatch { expected: m, found: bad.len() });
    }
    Ok(Matrix::from_fn(n, m, |i, j| rows[i][j]))
}

/// Scales `raw` by `|det|^{-1/d}`.
pub fn normalize(raw: &Matrix) -> Result<GroupElement> {
    let d = raw.nrows();
    if d < 2 || raw.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d.max(2), found: raw.ncols() });
    }
    if raw.iter().any(|x| !x.is_finite()) {
        return Err(Error::SingularInput);
    }
    let (log_abs, sign) = log_abs_det(raw);
    if sign == 0.0 || log_abs < 1e-300f64.ln() {
        return Err(Error::SingularInput);
    }
    let mat = raw * (-log_abs / d as f64).exp();
    let inv = invert(&mat).ok_or(Error::SingularInput)?;
    if inv.iter().any(|x| !x.is_finite()) {
        return Err(Error::SingularInput);
    }
    Ok(GroupElement { mat, inv })
}

/// `(log|det m|, sign det m)` by partial-pivot LU. Sign is 0 for singular input.
pub fn log_abs_det(m: &Matrix) -> (f64, f64) {
    let n = m.nrows();
    let mut a = m.clone();
    let mut log_abs = 0.0;
    let mut sign = 1.0;
    for k in 0..n {
        let mut p = k;
        for i in k + 1..n {
            if a[(i, k)].abs() > a[(p, k)].abs() {
                p = i;
            }
        }
        let piv = a[(p, k)];
        if piv == 0.0 {
            return (f64::NEG_INFINITY, 0.0);
        }
        if p != k {
            a.swap_rows(p, k);
            sign = -sign;
        }
        if piv < 0.0 {
            sign = -sign;
        }
        log_abs += piv.abs().ln();
        for i in k + 1..n {
            let f = a[(i, k)] / piv;
            if f != 0.0 {
                for j in k + 1..n {
                    a[(i, j)] -= f * a[(k, j)];
                }
            }
        }
    }
    (log_abs, sign)
}

fn det_small(m: &Matrix) -> f64 {
    match m.nrows() {
        0 => 1.0,
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        3 => {
            m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
                - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
                + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
        }
        n => (0..n)
            .map(|j| {
                let sgn = if j % 2 == 0 { 1.0 } else { -1.0 };
                sgn * m[(0, j)] * det_small(&m.clone().remove_row(0).remove_column(j))
            })
            .sum(),
    }
}

/// Inverse by the adjugate for d ≤ 4 and Gauss–Jordan with partial pivoting above.
pub fn invert(m: &Matrix) -> Option<Matrix> {
    let n = m.nrows();
    if n != m.ncols() || n == 0 {
        return None;
    }
    if n <= 4 {
        let scale = m.amax();
        if scale == 0.0 || !scale.is_finite() {
            return None;
        }
        let a = m / scale;
        let mut cof = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let minor = a.clone().remove_row(i).remove_column(j);
                let sgn = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                cof[(i, j)] = sgn * det_small(&minor);
            }
        }
        let det: f64 = (0..n).map(|j| a[(0, j)] * cof[(0, j)]).sum();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        return Some(cof.transpose() / (det * scale));
    }
    let mut a = m.clone();
    let mut inv = Matrix::identity(n, n);
    for k in 0..n {
        let mut p = k;
        for i in k + 1..n {
            if a[(i, k)].abs() > a[(p, k)].abs() {
                p = i;
            }
        }
        if a[(p, k)] == 0.0 {
            return None;
        }
        a.swap_rows(p, k);
        inv.swap_rows(p, k);
        let piv = a[(k, k)];
        for j in 0..n {
            a[(k, j)] /= piv;
            inv[(k, j)] /= piv;
        }
        for i in 0..n {
            if i == k {
                continue;
            }
            let f = a[(i, k)];
            if f != 0.0 {
                for j in 0..n {
                    a[(i, j)] -= f * a[(k, j)];
                    inv[(i, j)] -= f * inv[(k, j)];
                }
            }
        }
    }
    Some(inv)
}

/// Singular value decomposition `g = left · diag(exp(sing_log)) · rightᵀ`.
#[derive(Clone, Debug, PartialEq)]
pub struct SvdResult {
    pub left_frame: Matrix,
    pub sing_log: Vec<f64>,
    pub right_frame: Matrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> Matrix {
        let d = self.sing_log.len();
        let sigma = Matrix::from_diagonal(&nalgebra::DVector::from_iterator(
            d,
            self.sing_log.iter().map(|l| l.exp()),
        ));
        &self.left_frame * sigma * self.right_frame.transpose()
    }
}

/// Raw one-sided Jacobi output for an m×n matrix with m ≥ n.
struct Jacobi {
    u: Matrix,
    log_s: Vec<f64>,
    v: Matrix,
}

/// One-sided (Hestenes) Jacobi. Columns are rotated until every pair is
/// orthogonal to `SVD_TOL` relative to the product of their norms.
fn jacobi(a: &Matrix) -> Result<Jacobi> {
    let m = a.nrows();
    let n = a.ncols();
    let scale = a.amax();
    if scale == 0.0 {
        return Ok(Jacobi {
            u: complete_columns(&Matrix::zeros(m, 0), m, n),
            log_s: vec![f64::NEG_INFINITY; n],
            v: Matrix::identity(n, n),
        });
    }
    let mut w = a / scale;
    let mut v = Matrix::identity(n, n);
    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        let mut off: f64 = 0.0;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..m {
                    let x = w[(i, p)];
                    let y = w[(i, q)];
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                // columns at the edge of underflow carry no usable digits;
                // the merged SVD recovers them from the inverse
                if alpha.min(beta) < 1e-200 || gamma == 0.0 {
                    continue;
                }
                let ratio = gamma.abs() / (alpha.sqrt() * beta.sqrt());
                off = off.max(ratio);
                if ratio <= SVD_TOL {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let x = w[(i, p)];
                    let y = w[(i, q)];
                    w[(i, p)] = c * x - s * y;
                    w[(i, q)] = s * x + c * y;
                }
                for i in 0..n {
                    let x = v[(i, p)];
                    let y = v[(i, q)];
                    v[(i, p)] = c * x - s * y;
                    v[(i, q)] = s * x + c * y;
                }
            }
        }
        if off <= SVD_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::ConvergenceFailure(MAX_SWEEPS));
    }
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    let top = norms[order[0]];
    let mut u = Matrix::zeros(m, 0);
    let mut vs = Matrix::zeros(n, n);
    let mut log_s = Vec::with_capacity(n);
    let mut kept = 0;
    for (slot, &j) in order.iter().enumerate() {
        vs.set_column(slot, &v.column(j));
        log_s.push(norms[j].ln() + scale.ln());
        if norms[j] > top * 1e-300 && norms[j] > 0.0 {
            kept += 1;
        }
    }
    // Columns are placed in descending order; tiny columns are rebuilt.
    for slot in 0..n {
        let j = order[slot];
        let col = if slot < kept {
            Some(w.column(j) / norms[j])
        } else {
            None
        };
        u = push_orthonormal(u, col, m);
    }
    Ok(Jacobi { u, log_s, v: vs })
}

/// Appends `col` (orthogonalized against `frame`) or, when `col` is `None`
/// or degenerate, the standard basis vector with the largest residual.
fn push_orthonormal(frame: Matrix, col: Option<nalgebra::DVector<f64>>, m: usize) -> Matrix {
    let k = frame.ncols();
    let mut candidate = col.and_then(|c| {
        let r = residual(&frame, &c);
        let nr = r.norm();
        if nr > 1e-3 {
            Some(r / nr)
        } else {
            None
        }
    });
    if candidate.is_none() {
        let mut best: Option<(f64, nalgebra::DVector<f64>)> = None;
        for e in 0..m {
            let mut basis = nalgebra::DVector::zeros(m);
            basis[e] = 1.0;
            let r = residual(&frame, &basis);
            let nr = r.norm();
            if best.as_ref().is_none_or(|(b, _)| nr > *b) {
                best = Some((nr, r / nr));
            }
        }
        candidate = best.map(|(_, r)| r);
    }
    let c = candidate.expect("dimension exhausted");
    let mut out = frame.resize_horizontally(k + 1, 0.0);
    out.set_column(k, &c);
    out
}

pub(crate) fn residual(frame: &Matrix, c: &nalgebra::DVector<f64>) -> nalgebra::DVector<f64> {
    let mut r = c.clone();
    for _ in 0..2 {
        for j in 0..frame.ncols() {
            let proj = frame.column(j).dot(&r);
            r -= frame.column(j) * proj;
        }
    }
    r
}

pub(crate) fn complete_columns(frame: &Matrix, m: usize, n: usize) -> Matrix {
    let mut out = frame.clone();
    while out.ncols() < n {
        out = push_orthonormal(out, None, m);
    }
    out
}

/// Orthonormalizes the columns of `m` by modified Gram–Schmidt, completing
/// numerically dependent columns from the standard basis.
pub fn orthonormalize(m: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(m.nrows(), 0);
    for j in 0..m.ncols() {
        out = push_orthonormal(out, Some(m.column(j).into_owned()), m.nrows());
    }
    out
}

/// Singular values (not logs) of an arbitrary m×n matrix, descending.
pub fn singular_values(a: &Matrix) -> Result<Vec<f64>> {
    let t;
    let a = if a.nrows() < a.ncols() {
        t = a.transpose();
        &t
    } else {
        a
    };
    if a.ncols() == 0 {
        return Ok(Vec::new());
    }
    Ok(jacobi(a)?.log_s.iter().map(|l| l.exp()).collect())
}

/// SVD of a group element. The decomposition of `g` and of `g⁻ᵀ` are merged
/// so that each singular value comes from the side where it is large.
pub fn svd(g: &GroupElement) -> Result<SvdResult> {
    let d = g.dim();
    let direct = jacobi(&g.mat)?;
    let floor = RELIABLE_RATIO.ln();
    if direct.log_s[d - 1] - direct.log_s[0] >= floor {
        return Ok(SvdResult {
            left_frame: direct.u,
            sing_log: direct.log_s,
            right_frame: direct.v,
        });
    }
    let dual = jacobi(&g.inv.transpose())?;
    // index i of g corresponds to index d-1-i of g^{-T}
    let mut values = vec![0.0; d];
    let mut quality = vec![0.0; d];
    let mut from_dual = vec![false; d];
    for i in 0..d {
        let j = d - 1 - i;
        let q1 = direct.log_s[i] - direct.log_s[0];
        let q2 = dual.log_s[j] - dual.log_s[0];
        if q2 > q1 {
            values[i] = -dual.log_s[j];
            quality[i] = q2;
            from_dual[i] = true;
        } else {
            values[i] = direct.log_s[i];
            quality[i] = q1;
        }
    }
    let unreliable: Vec<usize> = (0..d).filter(|&i| quality[i] < floor).collect();
    if !unreliable.is_empty() {
        let total: f64 = values.iter().sum();
        let shift = -total / unreliable.len() as f64;
        for &i in &unreliable {
            values[i] += shift;
        }
    }
    let mut rank: Vec<usize> = (0..d).collect();
    rank.sort_by(|&a, &b| quality[b].total_cmp(&quality[a]).then(a.cmp(&b)));
    let column = |src_u: bool, i: usize| -> nalgebra::DVector<f64> {
        let (jac, idx) = if from_dual[i] { (&dual, d - 1 - i) } else { (&direct, i) };
        if src_u {
            jac.u.column(idx).into_owned()
        } else {
            jac.v.column(idx).into_owned()
        }
    };
    let mut u_cols: Vec<Option<nalgebra::DVector<f64>>> = vec![None; d];
    let mut v_cols: Vec<Option<nalgebra::DVector<f64>>> = vec![None; d];
    let mut u_frame = Matrix::zeros(d, 0);
    let mut v_frame = Matrix::zeros(d, 0);
    let mut filled = Vec::new();
    for &i in &rank {
        let reliable = quality[i] >= floor;
        let (cu, cv) = if reliable {
            (Some(column(true, i)), Some(column(false, i)))
        } else {
            filled.push(i);
            (None, None)
        };
        u_frame = push_orthonormal(u_frame, cu, d);
        v_frame = push_orthonormal(v_frame, cv, d);
        u_cols[i] = Some(u_frame.column(u_frame.ncols() - 1).into_owned());
        v_cols[i] = Some(v_frame.column(v_frame.ncols() - 1).into_owned());
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut left = Matrix::zeros(d, d);
    let mut right = Matrix::zeros(d, d);
    let mut sing_log = Vec::with_capacity(d);
    for (slot, &i) in order.iter().enumerate() {
        left.set_column(slot, u_cols[i].as_ref().unwrap());
        right.set_column(slot, v_cols[i].as_ref().unwrap());
        sing_log.push(values[i]);
    }
    if let Some(&i) = filled.first() {
        let (_, sg) = log_abs_det(&g.mat);
        let (_, su) = log_abs_det(&left);
        let (_, sv) = log_abs_det(&right);
        if sg != 0.0 && su * sv != sg {
            let slot = order.iter().position(|&x| x == i).unwrap();
            let flipped = -left.column(slot);
            left.set_column(slot, &flipped);
        }
    }
    Ok(SvdResult {
        left_frame: left,
        sing_log,
        right_frame: right,
    })
}

/// A k-dimensional subspace of R^d given by an orthonormal frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    frame: Matrix,
}

impl Subspace {
    /// Validates an orthonormal d×k frame with 1 ≤ k ≤ d−1.
    pub fn new(frame: Matrix) -> Result<Self> {
        let (d, k) = frame.shape();
        if k == 0 || k >= d {
            return Err(Error::InvalidArgument(format!("subspace dimension {k} not in 1..{d}")));
        }
        let err = (frame.transpose() * &frame - Matrix::identity(k, k)).amax();
        if !err.is_finite() || err > 1e-10 {
            return Err(Error::InvalidArgument(format!("frame not orthonormal (error {err:.3e})")));
        }
        Ok(Subspace { frame })
    }

    /// Span of arbitrary independent columns.
    pub fn span(columns: &Matrix) -> Result<Self> {
        Subspace::new(orthonormalize(columns))
    }

    /// Span of the listed standard basis vectors (0-based).
    pub fn coordinate(d: usize, indices: &[usize]) -> Result<Self> {
        let mut m = Matrix::zeros(d, indices.len());
        for (j, &i) in indices.iter().enumerate() {
            if i >= d {
                return Err(Error::IndexOutOfRange { index: i + 1, max: d });
            }
            m[(i, j)] = 1.0;
        }
        Subspace::new(m)
    }

    pub(crate) fn from_frame_unchecked(frame: Matrix) -> Self {
        Subspace { frame }
    }

    pub fn frame(&self) -> &Matrix {
        &self.frame
    }

    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.frame.nrows()
    }

    /// Orthogonal projector onto the subspace.
    pub fn projector(&self) -> Matrix {
        &self.frame * self.frame.transpose()
    }
}

/// Principal angles between equal-dimensional subspaces, descending.
pub fn principal_angles(u: &Subspace, v: &Subspace) -> Result<Vec<f64>> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), found: v.dim() });
    }
    if u.ambient_dim() != v.ambient_dim() {
        return Err(Error::DimensionMismatch { expected: u.ambient_dim(), found: v.ambient_dim() });
    }
    let k = u.dim();
    let cross = u.frame.transpose() * &v.frame;
    let resid = &v.frame - &u.frame * &cross;
    let mut cosines = singular_values(&cross)?;
    let mut sines = singular_values(&resid)?;
    sines.resize(k, 0.0);
    cosines.resize(k, 0.0);
    sines.sort_by(|a, b| a.total_cmp(b));
    // i-th smallest angle pairs the i-th smallest sine with the i-th largest cosine
    let mut angles: Vec<f64> = (0..k)
        .map(|i| {
            let s = sines[i].min(1.0);
            if s < std::f64::consts::FRAC_1_SQRT_2 {
                s.asin()
            } else {
                cosines[i].clamp(0.0, 1.0).acos()
            }
        })
        .collect();
    angles.sort_by(|a, b| b.total_cmp(a));
    Ok(angles)
}
