use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use regulus_core::cartan::{kappa, opposite_involution, sym_distance, vector_distance};
use regulus_core::matrix::{GroupElement, Matrix};

fn random_sl(d: usize, rng: &mut ChaCha8Rng) -> GroupElement {
    let m = Matrix::from_fn(d, d, |_, _| StandardNormal.sample(rng));
    GroupElement::new(m).unwrap()
}

/// Coefficients c₀..c_d (c_d = 1) of det(λI − S) by Faddeev–LeVerrier.
fn char_poly(s: &DMatrix<f64>) -> Vec<f64> {
    let d = s.nrows();
    let mut c = vec![0.0; d + 1];
    c[d] = 1.0;
    let mut m = DMatrix::<f64>::zeros(d, d);
    for k in 1..=d {
        m = s * &m + DMatrix::identity(d, d) * c[d - k + 1];
        c[d - k] = -(s * &m).trace() / k as f64;
    }
    c
}

fn eval(c: &[f64], x: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut dp = 0.0;
    for &a in c.iter().rev() {
        dp = dp * x + p;
        p = p * x + a;
    }
    (p, dp)
}

/// Newton refinement of a root of c from a nearby start; steps that would
/// move more than 10% are refused, so it cannot jump to another root.
fn refine(c: &[f64], mut x: f64) -> f64 {
    for _ in 0..50 {
        let (p, dp) = eval(c, x);
        if dp == 0.0 {
            break;
        }
        let step = p / dp;
        if step.abs() > 0.1 * x.abs() {
            break;
        }
        x -= step;
        if step.abs() <= 1e-16 * x.abs() {
            break;
        }
    }
    x
}

/// Log singular values as roots of the characteristic polynomial of gᵀg.
/// Roots are seeded by a symmetric eigensolver. Roots above the geometric
/// mean of the extremes are refined on det(λ − gᵀg); the rest on the
/// polynomial of (gᵀg)⁻¹ built from the stored inverse, where they are large.
fn oracle_kappa(g: &GroupElement) -> Vec<f64> {
    let s = g.matrix().transpose() * g.matrix();
    let si = g.inverse_matrix() * g.inverse_matrix().transpose();
    let mut top: Vec<f64> = s.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    let mut bot: Vec<f64> = si.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    top.sort_by(|a, b| b.total_cmp(a));
    bot.sort_by(|a, b| a.total_cmp(b));
    let (c, ci) = (char_poly(&s), char_poly(&si));
    let mid = (top[0] / bot[bot.len() - 1]).sqrt();
    top.iter()
        .zip(&bot)
        .map(|(&x, &y)| if x >= mid { 0.5 * refine(&c, x).ln() } else { -0.5 * refine(&ci, y).ln() })
        .collect()
}

#[test]
fn kappa_matches_characteristic_polynomial() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..500 {
        let g = random_sl(4, &mut rng);
        let k = kappa(&g).unwrap();
        let o = oracle_kappa(&g);
        for (a, b) in k.coords().iter().zip(&o) {
            assert!((a - b).abs() <= 1e-8, "{:?} vs {o:?}", k.coords());
        }
    }
}

#[test]
fn inverse_is_opposite() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..500 {
        let g = random_sl(4, &mut rng);
        let lhs = kappa(&g.inverse()).unwrap();
        let rhs = opposite_involution(&kappa(&g).unwrap());
        for (a, b) in lhs.coords().iter().zip(rhs.coords()) {
            assert!((a - b).abs() <= 1e-8);
        }
    }
}

fn element(d: usize) -> impl Strategy<Value = GroupElement> {
    prop::collection::vec(-2.0f64..2.0, d * d).prop_filter_map("singular", move |v| {
        GroupElement::new(Matrix::from_row_slice(d, d, &v)).ok().filter(|g| g.matrix().amax() < 1e3)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn kappa_is_dominant_and_traceless(g in element(3)) {
        let k = kappa(&g).unwrap();
        let c = k.coords();
        prop_assert!(c.windows(2).all(|w| w[0] >= w[1] - 1e-12));
        prop_assert!(c.iter().sum::<f64>().abs() < 1e-9);
    }

    #[test]
    fn kappa_is_bi_orthogonal_invariant(g in element(3), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let k = GroupElement::orthogonal(Matrix::from_row_slice(3, 3, &[
            a.cos(), -a.sin(), 0.0, a.sin(), a.cos(), 0.0, 0.0, 0.0, 1.0,
        ])).unwrap();
        let l = GroupElement::orthogonal(Matrix::from_row_slice(3, 3, &[
            1.0, 0.0, 0.0, 0.0, b.cos(), -b.sin(), 0.0, b.sin(), b.cos(),
        ])).unwrap();
        let k0 = kappa(&g).unwrap();
        let k1 = kappa(&k.compose(&g).compose(&l)).unwrap();
        for (x, y) in k0.coords().iter().zip(k1.coords()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn distance_triangle_and_invariance(x in element(3), y in element(3), z in element(3), g in element(3)) {
        let dxy = sym_distance(&x, &y).unwrap();
        let dyz = sym_distance(&y, &z).unwrap();
        let dxz = sym_distance(&x, &z).unwrap();
        prop_assert!(dxz <= dxy + dyz + 1e-9);
        let moved = sym_distance(&g.compose(&x), &g.compose(&y)).unwrap();
        prop_assert!((moved - dxy).abs() < 1e-7 * (1.0 + dxy));
    }

    #[test]
    fn vector_distance_is_lipschitz(x in element(3), y in element(3), y2 in element(3)) {
        let a = vector_distance(&x, &y).unwrap();
        let b = vector_distance(&x, &y2).unwrap();
        let diff: f64 = a.coords().iter().zip(b.coords()).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        prop_assert!(diff <= sym_distance(&y, &y2).unwrap() + 1e-9);
    }
}
