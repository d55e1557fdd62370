use proptest::prelude::*;
use regulus_core::cartan::{kappa, LinearFunctional, Theta};
use regulus_core::groups::{
    critical_exponent_estimate, gallery, phi_values, poincare_from_values, poincare_partial, word_ball, RayPattern,
    WordSequence, DEFAULT_DEDUP_TOL, GALLERY,
};
use regulus_core::morse::classify_uniform_regular;

fn omega1(d: usize) -> LinearFunctional {
    let mut w = vec![0.0; d - 1];
    w[0] = 1.0;
    LinearFunctional::new(w)
}

fn radius_for(name: &str) -> usize {
    match name {
        "proximal-semigroup" | "cyclic-diagonal" | "trivial" => 8,
        _ => 5,
    }
}

#[test]
fn poincare_sums_are_monotone_on_the_gallery() {
    for (name, _) in GALLERY {
        let gens = gallery(name).unwrap();
        let phi = omega1(gens.dim());
        let rmax = radius_for(name);
        let ball = word_ball(&gens, rmax, DEFAULT_DEDUP_TOL).unwrap();
        let values = phi_values(&ball, &phi).unwrap();
        assert!(values.iter().all(|v| *v >= 0.0), "{name}");
        let s_grid = [0.0, 0.05, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2];
        // in s, for the full ball
        let sums: Vec<f64> = s_grid.iter().map(|&s| poincare_from_values(&values, s)).collect();
        assert_eq!(sums[0], ball.len() as f64, "{name}");
        assert!(sums.windows(2).all(|w| w[1] <= w[0]), "{name}: {sums:?}");
        // in the radius, for each s
        for &s in &s_grid {
            let mut prev = 0.0;
            for r in 0..=rmax {
                let sub: Vec<f64> = ball.iter().zip(&values).filter(|(n, _)| n.length <= r).map(|(_, v)| *v).collect();
                let q = poincare_from_values(&sub, s);
                assert!(q >= prev, "{name}, s = {s}, radius {r}: {q} < {prev}");
                prev = q;
            }
        }
    }
}

#[test]
fn poincare_trivial_values() {
    let gens = gallery("trivial").unwrap();
    let ball = word_ball(&gens, 4, DEFAULT_DEDUP_TOL).unwrap();
    assert_eq!(ball.len(), 1);
    for s in [0.0, 1.0, 10.0] {
        assert_eq!(poincare_partial(&ball, &omega1(3), s).unwrap(), 1.0);
    }
    let schottky = word_ball(&gallery("diag-schottky").unwrap(), 4, DEFAULT_DEDUP_TOL).unwrap();
    let q = poincare_partial(&schottky, &omega1(3), 10.0).unwrap();
    assert!((q - 1.0).abs() < 1e-6, "{q}");
}

#[test]
fn cyclic_bracket_contains_zero() {
    let e = critical_exponent_estimate(&gallery("cyclic-diagonal").unwrap(), &omega1(3), &[4, 6, 8, 10]).unwrap();
    assert!(e.delta_low <= 0.0 && e.delta_high >= 0.0, "{e:?}");
    assert!(e.delta_high - e.delta_low <= 0.1);
}

#[test]
fn schottky_brackets_are_narrow_and_nested() {
    for name in ["diag-schottky", "klein-schottky"] {
        let gens = gallery(name).unwrap();
        let short = critical_exponent_estimate(&gens, &omega1(3), &[4, 5, 6, 7]).unwrap();
        let long = critical_exponent_estimate(&gens, &omega1(3), &[4, 5, 6, 7, 8]).unwrap();
        for e in [&short, &long] {
            assert!(e.delta_high - e.delta_low <= 0.2, "{name}: {e:?}");
            assert!(e.delta_low > 0.0);
        }
        assert!(long.delta_low >= short.delta_low - short.slack - 1e-9, "{name}");
        assert!(long.delta_high <= short.delta_high + short.slack + 1e-9, "{name}");
    }
}

#[test]
fn semigroup_exponent_matches_doubling() {
    // annulus counts are 2^ℓ; each letter adds a nearly constant φ-scale c
    let gens = gallery("proximal-semigroup").unwrap();
    let e = critical_exponent_estimate(&gens, &omega1(3), &[6, 8, 10, 12]).unwrap();
    let a = &e.annuli;
    assert!(a.iter().all(|r| r.count == 1 << r.length));
    let last = a.len() - 1;
    let c = a[last].scale - a[last - 1].scale;
    let predicted = 2f64.ln() / c;
    assert!(e.delta_low - 1e-9 <= predicted && predicted <= e.delta_high + 1e-9, "{predicted} vs {e:?}");
}

#[test]
fn schottky_roots_grow_with_length() {
    for name in ["diag-schottky", "klein-schottky", "principal-hyperbolic"] {
        let gens = gallery(name).unwrap();
        let theta = Theta::full(3);
        let ball = word_ball(&gens, 6, DEFAULT_DEDUP_TOL).unwrap();
        let mut mins = vec![f64::INFINITY; 7];
        for n in &ball {
            let m = kappa(&n.element).unwrap().min_root(&theta);
            mins[n.length] = mins[n.length].min(m);
        }
        assert!(mins.windows(2).all(|w| w[1] > w[0]), "{name}: {mins:?}");
    }
}

#[test]
fn geodesic_rays_are_uniformly_regular() {
    let theta = Theta::full(3);
    for name in ["diag-schottky", "klein-schottky"] {
        let gens = gallery(name).unwrap();
        for spec in ["(a)", "(ab)", "ab(aB)", "(aab)"] {
            let pattern = RayPattern::parse(spec).unwrap();
            let seq = WordSequence::ray(&gens, &pattern, 30).unwrap();
            let v = classify_uniform_regular(&seq, &theta, 0.3, 3).unwrap();
            assert!(v.pass, "{name} {spec}: {v:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sums_decrease_in_s(s in 0.0f64..3.0, ds in 0.0f64..1.0, which in 0usize..3) {
        let name = ["diag-schottky", "klein-schottky", "principal-parabolic"][which];
        let ball = word_ball(&gallery(name).unwrap(), 3, DEFAULT_DEDUP_TOL).unwrap();
        let phi = LinearFunctional::new(vec![0.5, 1.0]);
        let a = poincare_partial(&ball, &phi, s).unwrap();
        let b = poincare_partial(&ball, &phi, s + ds).unwrap();
        prop_assert!(b <= a);
        prop_assert!(b >= 1.0 - 1e-12);
    }
}
