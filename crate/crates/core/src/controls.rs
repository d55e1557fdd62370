//! Reference sequences with known behaviour under the classifiers.

use crate::error::{Error, Result};
use crate::matrix::{GroupElement, Matrix};

/// (1, 0, −1)/√2: both simple roots equal 1/√2.
pub fn regular_direction() -> Vec<f64> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    vec![r, 0.0, -r]
}

/// (2, −1, −1)/√6: lies on the wall α₂ = 0.
pub fn wall_direction() -> Vec<f64> {
    let r = 6f64.sqrt();
    vec![2.0 / r, -1.0 / r, -1.0 / r]
}

/// `exp(n·H)` for n = 0..len.
pub fn flat_ray(h: &[f64], len: usize) -> Vec<GroupElement> {
    (0..len)
        .map(|n| GroupElement::diag_exp(&h.iter().map(|x| x * n as f64).collect::<Vec<_>>()))
        .collect()
}

/// `exp(k·Y)` for `Y = (E₁₂ + E₂₁)/√2`, a unit-speed geodesic leaving the
/// diagonal flat orthogonally.
pub fn off_flat(k: f64) -> GroupElement {
    let s = k * std::f64::consts::FRAC_1_SQRT_2;
    let (c, sh) = (s.cosh(), s.sinh());
    let mut mat = Matrix::identity(3, 3);
    let mut inv = Matrix::identity(3, 3);
    mat[(0, 0)] = c;
    mat[(1, 1)] = c;
    inv[(0, 0)] = c;
    inv[(1, 1)] = c;
    mat[(0, 1)] = sh;
    mat[(1, 0)] = sh;
    inv[(0, 1)] = -sh;
    inv[(1, 0)] = -sh;
    GroupElement::with_inverse(mat, inv).expect("exact inverse")
}

/// Detour length at n = k², in units of k.
pub const DETOUR_SCALE: f64 = 0.5;

/// `exp(n·H)` along the regular direction, replaced at perfect squares
/// n = k² ≥ 1 by `exp(n·H)·exp(c·k·Y)` with c = [`DETOUR_SCALE`]: a detour
/// of length c√n leaving the flat orthogonally.
pub fn sqrt_detour(len: usize) -> Vec<GroupElement> {
    sqrt_detour_scaled(len, DETOUR_SCALE)
}

pub fn sqrt_detour_scaled(len: usize, scale: f64) -> Vec<GroupElement> {
    let h = regular_direction();
    (0..len)
        .map(|n| {
            let base = GroupElement::diag_exp(&h.iter().map(|x| x * n as f64).collect::<Vec<_>>());
            let k = (n as f64).sqrt().round() as usize;
            if n > 0 && k * k == n {
                base.compose(&off_flat(scale * k as f64))
            } else {
                base
            }
        })
        .collect()
}

/// `exp(n·W)·R·exp(n·W′)` with W, W′ the two wall directions of SL(3) and
/// R a fixed generic rotation. Flags converge but the sequence runs along
/// two walls, so it is not Morse.
pub fn wall_corner(len: usize) -> Vec<GroupElement> {
    let w = wall_direction();
    let w2: Vec<f64> = w.iter().rev().map(|x| -x).collect();
    let r = generic_rotation();
    (0..len)
        .map(|n| {
            let a = GroupElement::diag_exp(&w.iter().map(|x| x * n as f64).collect::<Vec<_>>());
            let b = GroupElement::diag_exp(&w2.iter().map(|x| x * n as f64).collect::<Vec<_>>());
            a.compose(&r).compose(&b)
        })
        .collect()
}

/// Rotation by `phi` about the axis (1, 2, 3)/√14.
pub fn axis_rotation(phi: f64) -> GroupElement {
    let u = [1.0 / 14f64.sqrt(), 2.0 / 14f64.sqrt(), 3.0 / 14f64.sqrt()];
    let cross = Matrix::from_row_slice(3, 3, &[0.0, -u[2], u[1], u[2], 0.0, -u[0], -u[1], u[0], 0.0]);
    let half = (phi / 2.0).sin();
    let r = Matrix::identity(3, 3) + &cross * phi.sin() + &cross * &cross * (2.0 * half * half);
    GroupElement::orthogonal(r).expect("rotation")
}

/// `R(φ₀e^{−λn})·exp(n·H)` along the regular direction. `U_θ(g_n)` converges
/// at rate e^{−λn}, slower than the roots grow, so the points drift away
/// from every Weyl cone linearly and jumps grow linearly.
pub fn spiral_ray(len: usize, phi0: f64, lambda: f64) -> Vec<GroupElement> {
    let h = regular_direction();
    (0..len)
        .map(|n| {
            let a = GroupElement::diag_exp(&h.iter().map(|x| x * n as f64).collect::<Vec<_>>());
            axis_rotation(phi0 * (-lambda * n as f64).exp()).compose(&a)
        })
        .collect()
}

fn generic_rotation() -> GroupElement {
    let (a, b) = (0.7f64, 0.5f64);
    let rx = Matrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, a.cos(), -a.sin(), 0.0, a.sin(), a.cos()]);
    let rz = Matrix::from_row_slice(3, 3, &[b.cos(), -b.sin(), 0.0, b.sin(), b.cos(), 0.0, 0.0, 0.0, 1.0]);
    GroupElement::orthogonal(rx * rz).expect("rotation")
}

fn unipotent_block(d: usize, blocks: &[(usize, usize)], n: f64) -> GroupElement {
    // each block (start, size) is a Jordan block J^n with exact inverse J^{-n}
    let mut mat = Matrix::identity(d, d);
    let mut inv = Matrix::identity(d, d);
    for &(start, size) in blocks {
        for i in 0..size {
            for j in i + 1..size {
                let k = (j - i) as i32;
                mat[(start + i, start + j)] = binom(n, k);
                inv[(start + i, start + j)] = binom(-n, k);
            }
        }
    }
    GroupElement::with_inverse(mat, inv).expect("exact unipotent inverse")
}

fn binom(n: f64, k: i32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i as f64) / (i + 1) as f64)
}

/// Powers `uⁿ` of `u = J₂ ⊕ J₂` in SL(4); α₁ and α₃ vanish identically.
pub fn block_unipotent_powers(len: usize) -> Vec<GroupElement> {
    (0..len).map(|n| unipotent_block(4, &[(0, 2), (2, 2)], n as f64)).collect()
}

/// Powers of a single 3×3 Jordan block; κ(uⁿ) ≈ (2 log n, 0, −2 log n).
pub fn jordan_powers(len: usize) -> Vec<GroupElement> {
    (0..len).map(|n| unipotent_block(3, &[(0, 3)], n as f64)).collect()
}

/// Sequence in SL(4) that is block-diagonal `(Aⁿ, B)` with A hyperbolic in
/// SL(2) and B fixed, so α₂ stays bounded.
pub fn reducible_block_ray(len: usize) -> Vec<GroupElement> {
    (0..len)
        .map(|n| GroupElement::diag_exp(&[n as f64 + 0.5, -(n as f64) + 0.5, 0.2 - 0.5, -0.2 - 0.5]))
        .collect()
}

/// Names accepted by [`named`].
pub const NAMES: &[&str] = &[
    "flat-regular",
    "flat-wall",
    "sqrt-detour",
    "jordan",
    "block-unipotent",
    "spiral",
    "wall-corner",
    "reducible-block",
];

/// A control sequence of length `len` by name.
pub fn named(kind: &str, len: usize) -> Result<Vec<GroupElement>> {
    Ok(match kind {
        "flat-regular" => flat_ray(&regular_direction(), len),
        "flat-wall" => flat_ray(&wall_direction(), len),
        "sqrt-detour" => sqrt_detour(len),
        "jordan" => jordan_powers(len),
        "block-unipotent" => block_unipotent_powers(len),
        "spiral" => spiral_ray(len, 0.5, 0.1),
        "wall-corner" => wall_corner(len),
        "reducible-block" => reducible_block_ray(len),
        other => return Err(Error::InvalidArgument(format!("unknown control '{other}'; expected one of {}", NAMES.join(", ")))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cartan::{kappa, sym_distance};

    #[test]
    fn jordan_inverse_exact() {
        let g = &jordan_powers(8)[7];
        let prod = g.matrix() * g.inverse_matrix();
        assert!((prod - Matrix::identity(3, 3)).amax() < 1e-12);
        assert_eq!(g.matrix()[(0, 2)], 21.0);
    }

    #[test]
    fn block_unipotent_has_zero_roots() {
        let g = &block_unipotent_powers(50)[49];
        let k = kappa(g).unwrap();
        assert!(k.roots()[0].abs() < 1e-9 && k.roots()[2].abs() < 1e-9);
        assert!(k.roots()[1] > 5.0);
    }

    #[test]
    fn detour_positions() {
        let s = sqrt_detour_scaled(17, 1.0);
        let flat = flat_ray(&regular_direction(), 17);
        assert!((sym_distance(&s[16], &flat[16]).unwrap() - 4.0).abs() < 1e-9);
        assert!(sym_distance(&s[15], &flat[15]).unwrap() < 1e-9);
    }

    #[test]
    fn every_name_resolves() {
        for name in NAMES {
            assert_eq!(named(name, 5).unwrap().len(), 5);
        }
        assert!(named("nope", 5).is_err());
    }
}
