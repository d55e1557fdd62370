//! Cartan projection of SL(d,R), simple roots, fundamental weights, the
//! opposite involution and the two distances built from them.
//!
//! For SL(d) the Cartan projection is the descending vector of log singular
//! values. The norm on the Cartan subspace is the Euclidean one, so
//! `d_X(x, y) = ‖κ(y⁻¹x)‖`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{svd, GroupElement};

/// Descending log singular values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CartanVector(Vec<f64>);

impl CartanVector {
    /// Checks the ordering and trace-zero conditions to 1e−9.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: coords.len() });
        }
        if coords.windows(2).any(|w| w[1] > w[0] + 1e-9) {
            return Err(Error::InvalidArgument("coordinates not descending".into()));
        }
        if coords.iter().sum::<f64>().abs() > 1e-9 * (1.0 + coords[0].abs()) {
            return Err(Error::InvalidArgument("coordinates do not sum to zero".into()));
        }
        Ok(CartanVector(coords))
    }

    /// Sorts arbitrary trace-zero coordinates into the dominant chamber.
    pub fn dominant(mut coords: Vec<f64>) -> Self {
        coords.sort_by(|a, b| b.total_cmp(a));
        CartanVector(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// All simple roots α₁..α_{d−1}.
    pub fn roots(&self) -> Vec<f64> {
        self.0.windows(2).map(|w| w[0] - w[1]).collect()
    }

    /// All fundamental weights ω₁..ω_{d−1}.
    pub fn weights(&self) -> Vec<f64> {
        self.0[..self.0.len() - 1]
            .iter()
            .scan(0.0, |acc, x| {
                *acc += x;
                Some(*acc)
            })
            .collect()
    }

    /// min over k ∈ θ of α_k.
    pub fn min_root(&self, theta: &Theta) -> f64 {
        theta
            .indices()
            .iter()
            .map(|&k| self.0[k - 1] - self.0[k])
            .fold(f64::INFINITY, f64::min)
    }
}

/// A symmetric set of simple-root indices in 1..d−1.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Theta {
    d: usize,
    indices: Vec<usize>,
}

impl Theta {
    pub fn new(d: usize, mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if indices.is_empty() {
            return Err(Error::InvalidTheta("empty".into()));
        }
        if let Some(&k) = indices.iter().find(|&&k| k == 0 || k >= d) {
            return Err(Error::InvalidTheta(format!("index {k} outside 1..{}", d - 1)));
        }
        if let Some(&k) = indices.iter().find(|&&k| !indices.contains(&(d - k))) {
            return Err(Error::InvalidTheta(format!("not symmetric: {k} present, {} missing", d - k)));
        }
        Ok(Theta { d, indices })
    }

    /// All simple roots.
    pub fn full(d: usize) -> Self {
        Theta { d, indices: (1..d).collect() }
    }

    /// `{1, d−1}`
    pub fn extremal(d: usize) -> Self {
        let mut indices = vec![1, d - 1];
        indices.dedup();
        Theta { d, indices }
    }

    /// Parses "1,2" style lists.
    pub fn parse(d: usize, s: &str) -> Result<Self> {
        let idx = s
            .split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|e| Error::Parse(format!("theta '{s}': {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Theta::new(d, idx)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn contains(&self, k: usize) -> bool {
        self.indices.contains(&k)
    }
}

impl Serialize for Theta {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.indices.serialize(s)
    }
}

/// φ = Σ w_k ω_k in the fundamental-weight basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinearFunctional {
    weights: Vec<f64>,
}

impl LinearFunctional {
    pub fn new(weights: Vec<f64>) -> Self {
        LinearFunctional { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// True when every non-zero weight sits at an index of θ.
    pub fn supported_on(&self, theta: &Theta) -> bool {
        self.weights
            .iter()
            .enumerate()
            .all(|(i, w)| *w == 0.0 || theta.contains(i + 1))
    }

    pub fn apply(&self, v: &CartanVector) -> Result<f64> {
        if self.weights.len() + 1 != v.dim() {
            return Err(Error::DimensionMismatch { expected: v.dim() - 1, found: self.weights.len() });
        }
        Ok(self.weights.iter().zip(v.weights()).map(|(w, o)| w * o).sum())
    }
}

pub fn kappa(g: &GroupElement) -> Result<CartanVector> {
    Ok(CartanVector(svd(g)?.sing_log))
}

fn check_index(k: usize, v: &CartanVector) -> Result<()> {
    if k == 0 || k >= v.dim() {
        return Err(Error::IndexOutOfRange { index: k, max: v.dim() - 1 });
    }
    Ok(())
}

/// α_k(v) = v_k − v_{k+1}, 1-based.
pub fn simple_root(k: usize, v: &CartanVector) -> Result<f64> {
    check_index(k, v)?;
    Ok(v.0[k - 1] - v.0[k])
}

/// ω_k(v) = v_1 + … + v_k, 1-based.
pub fn fundamental_weight(k: usize, v: &CartanVector) -> Result<f64> {
    check_index(k, v)?;
    Ok(v.0[..k].iter().sum())
}

/// ι(v) = (−v_d, …, −v_1)
pub fn opposite_involution(v: &CartanVector) -> CartanVector {
    CartanVector(v.0.iter().rev().map(|x| -x).collect())
}

/// d_Δ(x, y) = κ(y⁻¹x)
pub fn vector_distance(x: &GroupElement, y: &GroupElement) -> Result<CartanVector> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), found: y.dim() });
    }
    kappa(&y.inv_mul(x))
}

/// d_X(x, y) = ‖d_Δ(x, y)‖
pub fn sym_distance(x: &GroupElement, y: &GroupElement) -> Result<f64> {
    Ok(vector_distance(x, y)?.norm())
}
