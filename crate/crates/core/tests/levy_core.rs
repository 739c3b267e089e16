use mflevy::levy_core::{
    characteristic_exponent, couple_increments, couple_increments_w1, coupled_moment, coupled_moment_w1_bound,
    sample_increment, split_generator,
};
use mflevy::numerics::SquareMatrix;
use mflevy::rng::{Purpose, Stream};
use mflevy::{Error, JumpMeasure, LevyCoupling, LevyTriplet, RadialTail};
use num_complex::Complex;
use proptest::prelude::*;

fn truncated_stable(eps: f64, upper: f64) -> LevyTriplet {
    let tail = RadialTail::power(1.0, 0.5, Some(upper), eps).unwrap();
    let jumps = JumpMeasure::star(vec![(vec![1.0], 0.5), (vec![-1.0], 0.5)], vec![tail.clone(), tail]).unwrap();
    LevyTriplet::pure_jump(vec![0.0], jumps).unwrap()
}

fn draws(t: &LevyTriplet, tau: f64, m: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = Stream::from_seed(seed, Purpose::Test);
    (0..m).map(|_| sample_increment(t, tau, &mut rng).unwrap()).collect()
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

#[test]
fn gaussian_increment_has_identity_covariance() {
    let t = LevyTriplet::brownian(2, 1.0);
    let ys = draws(&t, 1.0, 20_000, 1);
    for i in 0..2 {
        let (m, se) = mean_se(&ys.iter().map(|y| y[i]).collect::<Vec<_>>());
        assert!(m.abs() <= 4.0 * se, "mean {m}");
        for j in 0..2 {
            let prod: Vec<f64> = ys.iter().map(|y| y[i] * y[j]).collect();
            let (c, se) = mean_se(&prod);
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((c - want).abs() <= 4.0 * se, "cov[{i}][{j}] = {c}");
        }
    }
}

#[test]
fn compensated_atom_is_centred() {
    let t = LevyTriplet::pure_jump(vec![0.0], JumpMeasure::atomic(vec![(vec![1.0], 2.0)]).unwrap()).unwrap();
    let ys: Vec<f64> = draws(&t, 0.5, 40_000, 2).into_iter().map(|y| y[0]).collect();
    let (m, se) = mean_se(&ys);
    assert!(m.abs() <= 4.0 * se);
    // Y = N - 1 with N ~ Poisson(1)
    let sq: Vec<f64> = ys.iter().map(|y| y * y).collect();
    let (v, se) = mean_se(&sq);
    assert!((v - 1.0).abs() <= 4.0 * se, "var {v}");
}

#[test]
fn truncated_stable_variance_matches_quadrature() {
    let eps = 1e-3;
    let t = truncated_stable(eps, 1.0);
    // midpoint rule on log scale for ∫ r² · 0.5 r^{-1.5} dr, both directions
    let n = 200_000;
    let (a, b) = (eps.ln(), 0.0f64);
    let h = (b - a) / n as f64;
    let quad: f64 = (0..n)
        .map(|k| {
            let r = (a + (k as f64 + 0.5) * h).exp();
            r * r * 0.5 * r.powf(-1.5) * r * h
        })
        .sum();
    let tau = 0.5;
    let ys: Vec<f64> = draws(&t, tau, 30_000, 3).into_iter().map(|y| y[0]).collect();
    let (m, se) = mean_se(&ys);
    assert!(m.abs() <= 4.0 * se);
    let (v, se) = mean_se(&ys.iter().map(|y| y * y).collect::<Vec<_>>());
    assert!((v - tau * quad).abs() <= 4.0 * se, "{v} vs {}", tau * quad);
}

#[test]
fn nonpositive_step_is_a_parameter_error() {
    let t = LevyTriplet::brownian(1, 1.0);
    let mut rng = Stream::from_seed(0, Purpose::Test);
    for tau in [0.0, -0.1, f64::NAN] {
        assert!(matches!(sample_increment(&t, tau, &mut rng), Err(Error::Parameter { .. })));
    }
}

#[test]
fn empirical_characteristic_function_matches_exponent() {
    let tail = RadialTail::exponential(1.5, 0.7).unwrap();
    let jumps = JumpMeasure::star(vec![(vec![1.0], 0.3), (vec![-1.0], 0.7)], vec![tail.clone(), tail]).unwrap();
    let t = LevyTriplet::new(SquareMatrix::scaled_identity(1, 0.5), vec![0.3], jumps).unwrap();
    let tau = 0.5;
    let m = 20_000;
    let ys = draws(&t, tau, m, 4);
    for k in 1..=10 {
        let p = 0.4 * k as f64;
        let emp: Complex<f64> = ys.iter().map(|y| Complex::new(0.0, p * y[0]).exp()).sum::<Complex<f64>>() / m as f64;
        let want = (characteristic_exponent(&t, &[p]).unwrap() * tau).exp();
        assert!((emp - want).norm() <= 5.0 / (m as f64).sqrt(), "p = {p}: {emp} vs {want}");
    }
}

#[test]
fn exponent_closed_forms() {
    let g = LevyTriplet::brownian(2, 1.0);
    assert_eq!(characteristic_exponent(&g, &[0.0, 0.0]).unwrap(), Complex::new(0.0, 0.0));
    let e = characteristic_exponent(&g, &[0.6, -1.2]).unwrap();
    assert!((e - Complex::new(-0.9, 0.0)).norm() < 1e-14);

    let lambda = 1.7;
    let a = LevyTriplet::pure_jump(vec![0.0], JumpMeasure::atomic(vec![(vec![1.0], lambda)]).unwrap()).unwrap();
    for p in [0.3, 1.0, 2.5] {
        let want = (Complex::new(0.0, p).exp() - 1.0 - Complex::new(0.0, p)) * lambda;
        assert!((characteristic_exponent(&a, &[p]).unwrap() - want).norm() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn exponent_is_hermitian_with_nonpositive_real_part(
        p in -4.0..4.0f64,
        sigma in 0.0..2.0f64,
        drift in -1.0..1.0f64,
        w in 0.1..2.0f64,
    ) {
        let tail = RadialTail::power(1.0, 0.8, Some(2.0), 1e-2).unwrap();
        let jumps = JumpMeasure::star(vec![(vec![1.0], w), (vec![-1.0], 1.0)], vec![tail.clone(), tail]).unwrap();
        let t = LevyTriplet::new(SquareMatrix::scaled_identity(1, sigma), vec![drift], jumps).unwrap();
        let e = characteristic_exponent(&t, &[p]).unwrap();
        let f = characteristic_exponent(&t, &[-p]).unwrap();
        prop_assert!((e - f.conj()).norm() <= 1e-9 * (1.0 + e.norm()));
        prop_assert!(e.re <= 1e-12);
    }
}

#[test]
fn shared_noise_coupling_has_the_sigma_gap() {
    let c = LevyCoupling::diagonal(LevyTriplet::brownian(1, 1.0), LevyTriplet::brownian(1, 2.0)).unwrap();
    let t = 0.3;
    let mut rng = Stream::from_seed(5, Purpose::Test);
    let d: Vec<f64> = (0..20_000)
        .map(|_| {
            let (a, b) = couple_increments(&c, t, &mut rng).unwrap();
            (a[0] - b[0]).powi(2)
        })
        .collect();
    let (m, se) = mean_se(&d);
    assert!((m - t).abs() <= 4.0 * se, "{m}");
}

fn one_atom(y: f64, w: f64) -> LevyTriplet {
    LevyTriplet::pure_jump(vec![0.0], JumpMeasure::atomic(vec![(vec![y], w)]).unwrap()).unwrap()
}

#[test]
fn first_order_coupling_cases() {
    let mut rng = Stream::from_seed(6, Purpose::Test);
    let xi = 0.4;

    let same = one_atom(1.0, 2.0);
    let c = LevyCoupling::diagonal(same.clone(), same).unwrap();
    for _ in 0..100 {
        let (a, b) = couple_increments_w1(&c, 0.5, &mut rng).unwrap();
        // identical increments, so |ξ + Y¹ - Y²| = |ξ| exactly
        assert_eq!(a, b);
    }

    let c = LevyCoupling::diagonal(LevyTriplet::drift_only(vec![1.0]), LevyTriplet::drift_only(vec![-0.5])).unwrap();
    let (a, b) = couple_increments_w1(&c, 0.5, &mut rng).unwrap();
    assert!(((xi + a[0] - b[0]).abs() - (xi + 0.5 * 1.5)).abs() < 1e-15);

    let c = LevyCoupling::paired(one_atom(1.0, 2.0), one_atom(-0.5, 2.0), vec![(vec![1.0], vec![-0.5], 2.0)]).unwrap();
    let t = 0.5;
    let d: Vec<f64> = (0..20_000)
        .map(|_| {
            let (a, b) = couple_increments_w1(&c, t, &mut rng).unwrap();
            (xi + a[0] - b[0]).abs()
        })
        .collect();
    let (m, se) = mean_se(&d);
    // |ξ| + t·∫|y₁ - y₂| = 0.4 + 0.5·2·1.5
    let bound = coupled_moment_w1_bound(&c, &[xi], t).unwrap();
    assert!((bound - 1.9).abs() < 1e-12);
    assert!(m <= bound + 4.0 * se, "{m} vs {bound}");

    let c = LevyCoupling::independent(LevyTriplet::brownian(1, 1.0), one_atom(1.0, 1.0)).unwrap();
    assert!(matches!(couple_increments_w1(&c, t, &mut rng), Err(Error::WrongVariant(_))));
}

#[test]
fn split_is_trivial_on_either_side_of_the_unit_sphere() {
    let (small, large) = split_generator(&one_atom(0.5, 3.0)).unwrap();
    assert_eq!(large.jumps.total_mass(), 0.0);
    assert_eq!(small.jumps.total_mass(), 3.0);
    let (small, large) = split_generator(&one_atom(2.0, 3.0)).unwrap();
    assert_eq!(small.jumps.total_mass(), 0.0);
    assert_eq!(large.jumps.total_mass(), 3.0);
}

#[test]
fn split_masses_match_quadrature() {
    let eps = 1e-3;
    let (small, large) = split_generator(&truncated_stable(eps, 10.0)).unwrap();
    // density 0.5·r^{-1.5} per direction, two directions of weight 0.5
    let mass = |a: f64, b: f64| {
        let n = 100_000;
        let h = (b.ln() - a.ln()) / n as f64;
        (0..n)
            .map(|k| {
                let r = (a.ln() + (k as f64 + 0.5) * h).exp();
                0.5 * r.powf(-1.5) * r * h
            })
            .sum::<f64>()
    };
    assert!((small.jumps.total_mass() - mass(eps, 1.0)).abs() < 1e-6 * mass(eps, 1.0));
    assert!((large.jumps.total_mass() - mass(1.0, 10.0)).abs() < 1e-6);
}

#[test]
fn quadratic_generator_identity() {
    let left = LevyTriplet::new(
        SquareMatrix::scaled_identity(1, 1.0),
        vec![0.5],
        JumpMeasure::atomic(vec![(vec![1.0], 2.0)]).unwrap(),
    )
    .unwrap();
    let right = LevyTriplet::new(
        SquareMatrix::scaled_identity(1, 1.5),
        vec![-0.5],
        JumpMeasure::atomic(vec![(vec![2.0], 2.0)]).unwrap(),
    )
    .unwrap();
    let c = LevyCoupling::paired(left, right, vec![(vec![1.0], vec![2.0], 2.0)]).unwrap();
    let xi = 0.3;
    // 2ξ·Δb + ‖Δσ‖² + ∬|y₁ - y₂|²
    let limit = 2.0 * xi * 1.0 + 0.25 + 2.0;
    for h in [0.05, 0.2] {
        let exact = coupled_moment(&c, &[xi], h).unwrap();
        assert!(((exact - xi * xi) / h - (limit + h)).abs() < 1e-12);
        let mut rng = Stream::from_seed(7, Purpose::Test);
        let q: Vec<f64> = (0..40_000)
            .map(|_| {
                let (a, b) = couple_increments(&c, h, &mut rng).unwrap();
                ((xi + a[0] - b[0]).powi(2) - xi * xi) / h
            })
            .collect();
        let (m, se) = mean_se(&q);
        assert!((m - (limit + h)).abs() <= 4.0 * se, "h = {h}: {m} vs {}", limit + h);
    }
}
