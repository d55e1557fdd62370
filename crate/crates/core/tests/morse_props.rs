use std::time::Instant;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use regulus_core::cartan::Theta;
use regulus_core::controls::{block_unipotent_powers, flat_ray, jordan_powers, off_flat, regular_direction, spiral_ray, sqrt_detour, wall_direction};
use regulus_core::error::Error;
use regulus_core::matrix::{GroupElement, Matrix};
use regulus_core::morse::{classify_morse, MorseConfig};
use regulus_core::sublinear::Family;
use regulus_core::weyl::{verify_morse_lemma, ConeDistanceReport, WeylConfig};

const N: usize = 200;

/// max over the last third of bound / d_X(g₀, g_n)
fn tail_ratio(rep: &ConeDistanceReport) -> f64 {
    let n = rep.rows.len();
    rep.rows[2 * n / 3..]
        .iter()
        .map(|r| if r.distance > 0.0 { r.bound / r.distance } else { 0.0 })
        .fold(0.0, f64::max)
}

#[test]
fn regular_flat_ray() {
    let theta = Theta::full(3);
    let seq = flat_ray(&regular_direction(), N);
    let t = Instant::now();
    let v = classify_morse(&seq, &theta, &MorseConfig::default()).unwrap();
    assert!(t.elapsed().as_secs_f64() < 5.0);
    assert!(v.overall, "{v:?}");
    let eta = v.cond1.eta.model;
    assert!(eta.family == Family::Power && eta.p == 0.0, "η should be constant: {eta:?}");
    assert!(v.cond3.a >= 0.5);
    let rep = verify_morse_lemma(&seq, &theta, &WeylConfig::default()).unwrap();
    assert!(rep.verdict);
    assert!(rep.rows.iter().all(|r| r.bound <= 1e-6));
    assert!(tail_ratio(&rep) <= 0.05);
}

#[test]
fn unipotent_powers_fail_the_gap_condition() {
    // J2 ⊕ J2: the first and third roots vanish identically
    let theta = Theta::new(4, vec![1, 3]).unwrap();
    let seq = block_unipotent_powers(N);
    let t = Instant::now();
    let v = classify_morse(&seq, &theta, &MorseConfig::default()).unwrap();
    assert!(t.elapsed().as_secs_f64() < 5.0);
    assert!(!v.overall && !v.cond3.pass);
    assert!(v.witnesses.iter().any(|w| w.condition == 3));
    // a single Jordan block is uniformly regular but not a sublinear ray
    let v = classify_morse(&jordan_powers(N), &Theta::full(3), &MorseConfig::default()).unwrap();
    assert!(!v.overall && v.cond3.pass);
}

#[test]
fn square_root_detours() {
    let theta = Theta::full(3);
    let seq = sqrt_detour(N);
    let t = Instant::now();
    let v = classify_morse(&seq, &theta, &MorseConfig::default()).unwrap();
    assert!(t.elapsed().as_secs_f64() < 5.0);
    assert!(v.overall, "{v:?}");
    let eta = v.cond1.eta.model;
    assert!(eta.family == Family::Power && (0.4..=0.6).contains(&eta.p), "{eta:?}");
    let rep = verify_morse_lemma(&seq, &theta, &WeylConfig::default()).unwrap();
    assert!(rep.verdict, "{:?}", rep.envelope);
    assert!(tail_ratio(&rep) <= 0.05, "{}", tail_ratio(&rep));
}

#[test]
fn wall_ray_has_no_cone() {
    let theta = Theta::full(3);
    let seq = flat_ray(&wall_direction(), N);
    assert!(matches!(verify_morse_lemma(&seq, &theta, &WeylConfig::default()), Err(Error::NoGapAt { .. })));
    let spiral = spiral_ray(N, 0.5, 0.1);
    assert!(!classify_morse(&spiral, &theta, &MorseConfig::default()).unwrap().overall);
    let rep = verify_morse_lemma(&spiral, &theta, &WeylConfig::default()).unwrap();
    assert!(!rep.verdict, "{:?}", rep.envelope);
}

fn random_sl(seed: u64) -> GroupElement {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = Matrix::from_fn(3, 3, |_, _| StandardNormal.sample(&mut rng));
    GroupElement::new(m).unwrap()
}

/// Regular flat ray at speed 0.1 with detours of length ½√(0.1 n) at the
/// squares. Entries stay below e^9, so `(g·g_m)⁻¹(g·g_n)` keeps its digits.
fn slow_detour(len: usize) -> Vec<GroupElement> {
    let h = regular_direction();
    (0..len)
        .map(|n| {
            let base = GroupElement::diag_exp(&h.iter().map(|x| 0.1 * x * n as f64).collect::<Vec<_>>());
            let k = (n as f64).sqrt().round() as usize;
            if n > 0 && k * k == n {
                base.compose(&off_flat(0.5 * (0.1 * n as f64).sqrt()))
            } else {
                base
            }
        })
        .collect()
}

// Left translation multiplies the round-off in g_m⁻¹g_n by |g|², and for
// exponentially growing plain matrix sequences that error is ε·|g_m||g_n|
// before translation. The property is checked where displacements stay
// accurate: polynomial growth or slow speed.
proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn verdict_is_left_invariant(seed in 0u64..1000, which in 0usize..3) {
        let (seq, theta) = match which {
            0 => (slow_detour(120), Theta::full(3)),
            1 => (jordan_powers(120), Theta::full(3)),
            _ => (block_unipotent_powers(120), Theta::new(4, vec![1, 3]).unwrap()),
        };
        let mut g = random_sl(seed);
        if seq[0].dim() == 4 {
            g = GroupElement::new(Matrix::from_fn(4, 4, |i, j| {
                let x = g.matrix()[(i % 3, j % 3)];
                if i == j { 1.0 + 0.5 * x } else { 0.5 * x }
            })).unwrap();
        }
        let moved: Vec<GroupElement> = seq.iter().map(|x| g.compose(x)).collect();
        let cfg = MorseConfig::default();
        let a = classify_morse(&seq, &theta, &cfg).unwrap();
        let b = classify_morse(&moved, &theta, &cfg).unwrap();
        prop_assert_eq!(a.overall, b.overall);
        prop_assert_eq!(a.cond1.pass, b.cond1.pass);
        prop_assert_eq!(a.cond2.pass, b.cond2.pass);
        prop_assert_eq!(a.cond3.pass, b.cond3.pass);
        let near = |x: f64, y: f64| (x - y).abs() <= 1e-6 * (1.0 + x.abs());
        prop_assert!(near(a.cond3.a, b.cond3.a));
    }
}
