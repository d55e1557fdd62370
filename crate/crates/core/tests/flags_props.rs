use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use regulus_core::cartan::{kappa, Theta};
use regulus_core::flags::{flag_distance, gap_ratio_bound, grassmann_distance, leading_subspace, transverse, u_theta, GAP_FLOOR};
use regulus_core::groups::gallery;
use regulus_core::matrix::{orthonormalize, GroupElement, Matrix, Subspace};

fn random_orthogonal(d: usize, rng: &mut ChaCha8Rng) -> GroupElement {
    let m = Matrix::from_fn(d, d, |_, _| StandardNormal.sample(rng));
    GroupElement::orthogonal(orthonormalize(&m)).unwrap()
}

#[test]
fn gap_estimate_holds_on_seeded_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checked = 0;
    while checked < 1000 {
        // a = K₁ exp(H) K₂ with α₁(H) ∈ [1, 6]
        let gap = rng.random_range(1.0..6.0);
        let rest = rng.random_range(0.0..3.0);
        let a = random_orthogonal(3, &mut rng)
            .compose(&GroupElement::diag_exp(&[gap + rest, rest * 0.5, 0.0]))
            .compose(&random_orthogonal(3, &mut rng));
        if kappa(&a).unwrap().roots()[0] < 1.0 {
            continue;
        }
        let b = GroupElement::new(Matrix::from_fn(3, 3, |_, _| StandardNormal.sample(&mut rng))).unwrap();
        let (lhs, rhs) = gap_ratio_bound(&a, &b, 1).unwrap();
        assert!(lhs <= rhs + 1e-12, "{lhs} > {rhs}");
        checked += 1;
    }
}

/// Attracting eigenline by plain power iteration on the matrix itself.
fn eigenline(g: &Matrix) -> DVector<f64> {
    let mut v = DVector::from_element(g.nrows(), 1.0);
    for _ in 0..200 {
        v = g * v;
        v /= v.norm();
    }
    v
}

#[test]
fn proximal_flag_converges_to_eigenline() {
    let gens = gallery("diag-schottky").unwrap();
    let g = gens.evaluate("ab").unwrap();
    let eig = g.matrix().clone().eigenvalues().unwrap();
    let mut mods: Vec<f64> = eig.iter().map(|x| x.abs()).collect();
    mods.sort_by(|a, b| b.total_cmp(a));
    assert!(mods[0] / mods[1] >= std::f64::consts::E);
    let line = Subspace::span(&Matrix::from_column_slice(3, 1, eigenline(g.matrix()).as_slice())).unwrap();
    let mut power = GroupElement::identity(3);
    let mut dists = Vec::new();
    for _ in 1..=50 {
        power = power.compose(&g);
        let u = leading_subspace(&power, 1, GAP_FLOOR).unwrap();
        dists.push(grassmann_distance(&u, &line).unwrap());
    }
    assert!(dists[49] <= 1e-6, "{dists:?}");
    // monotone down to the round-off floor
    for n in 10..50 {
        assert!(dists[n] <= dists[n - 1] + 1e-15, "n = {}: {:?}", n + 1, &dists[n - 1..=n]);
    }
    assert!(dists[0] > dists[2]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn flag_distance_is_a_metric(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta = Theta::full(3);
        let mut f = || {
            let g = random_orthogonal(3, &mut rng).compose(&GroupElement::diag_exp(&[2.0, 0.5, -2.5]));
            u_theta(&g, &theta).unwrap()
        };
        let (x, y, z) = (f(), f(), f());
        let dxy = flag_distance(&x, &y).unwrap();
        prop_assert!((dxy - flag_distance(&y, &x).unwrap()).abs() < 1e-12);
        prop_assert!(flag_distance(&x, &x).unwrap() < 1e-7);
        prop_assert!(flag_distance(&x, &z).unwrap() <= dxy + flag_distance(&y, &z).unwrap() + 1e-9);
    }

    #[test]
    fn generic_flags_are_transverse(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta = Theta::full(4);
        let g = random_orthogonal(4, &mut rng).compose(&GroupElement::diag_exp(&[3.0, 1.0, -1.0, -3.0]));
        let h = random_orthogonal(4, &mut rng).compose(&GroupElement::diag_exp(&[3.0, 1.0, -1.0, -3.0]));
        let t = transverse(&u_theta(&g, &theta).unwrap(), &u_theta(&h, &theta).unwrap()).unwrap();
        prop_assert!(t.margin >= 0.0);
        // a flag is never transverse to itself
        let own = u_theta(&g, &theta).unwrap();
        prop_assert!(!transverse(&own, &own).unwrap().transverse);
    }
}
