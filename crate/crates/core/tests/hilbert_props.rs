use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regulus_core::groups::{gallery, klein_boost, word_ball, DEFAULT_DEDUP_TOL};
use regulus_core::hilbert::{
    automorphism_check, boundary_horofunction, compact_part, extract_sequence, fact_singular_value_gap,
    hausdorff_geodesic_bound, hilbert_distance, ConvexDomain, End, RayTrace,
};
use regulus_core::matrix::{GroupElement, Matrix};

fn in_ball(n: usize, rad: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-rad..rad)).collect();
        if x.iter().map(|v| v * v).sum::<f64>() < rad * rad {
            return x;
        }
    }
}

fn in_triangle(rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let (u, v): (f64, f64) = (rng.random_range(0.01..0.99), rng.random_range(0.01..0.99));
        if u + v < 0.99 {
            return vec![u, v];
        }
    }
}

#[test]
fn arctanh_on_the_unit_ball() {
    let d = ConvexDomain::unit_ball(2);
    for i in 1..=9 {
        let t = i as f64 / 10.0;
        let v = hilbert_distance(&[0.0, 0.0], &[t, 0.0], &d).unwrap();
        assert!((v - t.atanh()).abs() <= 1e-12, "t = {t}: {v} vs {}", t.atanh());
    }
}

#[test]
fn triangle_audit_ball_and_simplex() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let ball = ConvexDomain::unit_ball(3);
    let tri = ConvexDomain::simplex(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.3, 0.3]).unwrap();
    let mut worst: f64 = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let (x, y, z) = (in_ball(3, 0.98, &mut rng), in_ball(3, 0.98, &mut rng), in_ball(3, 0.98, &mut rng));
        let gap = hilbert_distance(&x, &z, &ball).unwrap()
            - hilbert_distance(&x, &y, &ball).unwrap()
            - hilbert_distance(&y, &z, &ball).unwrap();
        worst = worst.max(gap);
        let (x, y, z) = (in_triangle(&mut rng), in_triangle(&mut rng), in_triangle(&mut rng));
        let gap = hilbert_distance(&x, &z, &tri).unwrap()
            - hilbert_distance(&x, &y, &tri).unwrap()
            - hilbert_distance(&y, &z, &tri).unwrap();
        worst = worst.max(gap);
    }
    assert!(worst <= 1e-9, "worst violation {worst}");
}

#[test]
fn generic_matrices_are_not_automorphisms() {
    let d = ConvexDomain::klein_disk();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let m = Matrix::from_fn(3, 3, |i, j| if i == j { 1.0 } else { 0.0 } + rng.random_range(-0.3..0.3));
        let g = GroupElement::new(m).unwrap();
        assert!(!automorphism_check(&g, &d, 10, 1).unwrap());
    }
}

/// exp(sN) for the nilpotent N of the form x² + y² − z² fixing (1, 0, 1).
fn parabolic(s: f64) -> GroupElement {
    let n = Matrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, -1.0, 0.0, 1.0, 0.0, 1.0, 0.0]) * s;
    let m = Matrix::identity(3, 3) + &n + &n * &n * 0.5;
    GroupElement::new(m).unwrap()
}

#[test]
fn horoballs_are_preserved_by_a_parabolic() {
    let d = ConvexDomain::klein_disk();
    let xi = [1.0, 0.0];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..40 {
        let p = parabolic(rng.random_range(-1.0..1.0));
        assert!(automorphism_check(&p, &d, 10, 2).unwrap());
        let (x, y) = (in_ball(2, 0.8, &mut rng), in_ball(2, 0.8, &mut rng));
        let (px, py) = (d.act(&p, &x).unwrap(), d.act(&p, &y).unwrap());
        if !(d.contains(&px) && d.contains(&py)) || px.iter().chain(&py).any(|v| v.abs() > 0.95) {
            continue;
        }
        let before = boundary_horofunction(&xi, &x, &y, &d, 15.0).unwrap().value;
        let after = boundary_horofunction(&xi, &px, &py, &d, 15.0).unwrap().value;
        assert!((before - after).abs() < 1e-5, "{before} vs {after}");
        if before.abs() > 1e-3 {
            assert_eq!(before > 0.0, after > 0.0);
        }
    }
}

#[test]
fn parallel_chords_satisfy_the_hausdorff_bound() {
    let d = ConvexDomain::unit_ball(2);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let (u, n) = ([phi.cos(), phi.sin()], [-phi.sin(), phi.cos()]);
        let on = |h: f64, s: f64| vec![h * n[0] + s * u[0], h * n[1] + s * u[1]];
        let (h1, h2): (f64, f64) = (rng.random_range(-0.7..0.7), rng.random_range(-0.7..0.7));
        let w1 = (1.0 - h1 * h1).sqrt() * 0.95;
        let w2 = (1.0 - h2 * h2).sqrt() * 0.95;
        let p1 = on(h1, rng.random_range(-w1..0.0));
        let q1 = on(h1, rng.random_range(0.0..w1));
        let p2 = on(h2, rng.random_range(-w2..0.0));
        let q2 = on(h2, rng.random_range(0.0..w2));
        let (lhs, rhs) = hausdorff_geodesic_bound(&p1, &p2, &End::Point(q1), &End::Point(q2), &d, 40, 0.0).unwrap();
        assert!(lhs <= rhs + 1e-9, "{lhs} > {rhs}");
    }
    // shared boundary endpoint
    let (p1, p2) = (vec![0.0, 0.3], vec![-0.2, -0.4]);
    let xi = End::Boundary(vec![1.0, 0.0]);
    let (lhs, rhs) = hausdorff_geodesic_bound(&p1, &p2, &xi, &xi, &d, 60, 12.0).unwrap();
    let dp = hilbert_distance(&p1, &p2, &d).unwrap();
    assert!((rhs - dp).abs() < 1e-12);
    assert!(lhs <= dp + 1e-6, "{lhs} > {dp}");
    let same = hausdorff_geodesic_bound(&p1, &p1, &End::Point(p2.clone()), &End::Point(p2), &d, 20, 0.0).unwrap();
    assert!(same.0 < 1e-9);
}

fn schottky_points(radius: usize) -> (ConvexDomain, Vec<Vec<f64>>) {
    let d = ConvexDomain::klein_disk();
    let ball = word_ball(&gallery("klein-schottky").unwrap(), radius, DEFAULT_DEDUP_TOL).unwrap();
    let pts = ball.iter().map(|n| d.act(&n.element, &[0.0, 0.0]).unwrap()).collect();
    (d, pts)
}

#[test]
fn compact_part_is_monotone() {
    let (d, pts) = schottky_points(3);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..6 {
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let ray = RayTrace::from_direction(&[0.0, 0.0], &[phi.cos(), phi.sin()], &d).unwrap();
        let mut prev = 0.0;
        for r in [0.3, 0.8, 1.5] {
            let (m, _) = compact_part(&ray, &pts, r, 8.0, &d).unwrap();
            assert!(m >= prev - 1e-9 && m <= 8.0 + 1e-12);
            prev = m;
        }
        let mut prev = 0.0;
        for t in [1.0, 3.0, 6.0, 9.0] {
            let (m, _) = compact_part(&ray, &pts, 1.0, t, &d).unwrap();
            assert!(m >= prev - 1e-9 && m <= t + 1e-12, "T = {t}: {m}");
            prev = m;
        }
    }
}

#[test]
fn overlapping_balls_cover_the_ray() {
    let d = ConvexDomain::klein_disk();
    let ray = RayTrace::from_direction(&[0.0, 0.0], &[1.0, 0.0], &d).unwrap();
    let pts: Vec<Vec<f64>> = (0..=10).map(|k| ray.point_at(k as f64)).collect();
    let (m, iv) = compact_part(&ray, &pts, 0.6, 10.0, &d).unwrap();
    assert!((m - 10.0).abs() < 1e-9 && iv.len() == 1);
}

#[test]
fn collinear_extraction_takes_every_third() {
    let d = ConvexDomain::klein_disk();
    let o = [0.0, 0.0];
    let ray = RayTrace::from_direction(&o, &[1.0, 0.0], &d).unwrap();
    let orbit: Vec<(GroupElement, Vec<f64>)> = (0..10)
        .rev()
        .map(|k| {
            let g = klein_boost(k as f64, 0.0);
            let p = d.act(&g, &o).unwrap();
            (g, p)
        })
        .collect();
    let ex = extract_sequence(&ray, &orbit, 0.6, 2.5, 9.5, &d).unwrap();
    // orbit is stored in reverse, so index 9 − k holds the point at t = k
    assert_eq!(ex.a_gamma, (0..10).rev().collect::<Vec<_>>());
    assert_eq!(ex.a_gamma_c, vec![9, 6, 3, 0]);
    let single = extract_sequence(&ray, &[(GroupElement::identity(3), o.to_vec())], 1.0, 1.0, 5.0, &d).unwrap();
    assert_eq!(single.a_gamma_c, vec![0]);
}

#[test]
fn fact_deviation_plateaus() {
    let gens = gallery("klein-schottky").unwrap();
    let d = ConvexDomain::klein_disk();
    for o in [[0.0, 0.0], [0.3, 0.2]] {
        let mut sups = Vec::new();
        for radius in [4, 6, 8] {
            let orbit: Vec<GroupElement> =
                word_ball(&gens, radius, DEFAULT_DEDUP_TOL).unwrap().into_iter().map(|n| n.element).collect();
            sups.push(fact_singular_value_gap(&orbit, &o, &d).unwrap().0);
        }
        assert!(sups.iter().all(|s| s.is_finite()));
        assert!(sups[1] >= sups[0] - 1e-12 && sups[2] >= sups[1] - 1e-12, "{sups:?}");
        assert!(sups[2] <= 1.05 * sups[1].max(1e-9), "{o:?}: {sups:?}");
    }
    let (sup, _) = fact_singular_value_gap(&[GroupElement::identity(3)], &[0.0, 0.0], &d).unwrap();
    assert_eq!(sup, 0.0);
}

fn disk_point() -> impl Strategy<Value = Vec<f64>> {
    (0.0f64..0.9, 0.0f64..std::f64::consts::TAU).prop_map(|(r, a)| vec![r * a.cos(), r * a.sin()])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn automorphisms_preserve_distance(x in disk_point(), y in disk_point(), l in -1.5f64..1.5, phi in 0.0f64..6.3, s in -1.0f64..1.0) {
        let d = ConvexDomain::klein_disk();
        let g = klein_boost(l, phi).compose(&parabolic(s));
        let (gx, gy) = (d.act(&g, &x).unwrap(), d.act(&g, &y).unwrap());
        let before = hilbert_distance(&x, &y, &d).unwrap();
        let after = hilbert_distance(&gx, &gy, &d).unwrap();
        prop_assert!((before - after).abs() <= 1e-8 * (1.0 + before), "{} vs {}", before, after);
    }

    #[test]
    fn distance_is_symmetric(x in disk_point(), y in disk_point()) {
        let d = ConvexDomain::klein_disk();
        let a = hilbert_distance(&x, &y, &d).unwrap();
        prop_assert!(a >= 0.0);
        prop_assert!((a - hilbert_distance(&y, &x, &d).unwrap()).abs() < 1e-12);
    }
}
