use mflevy::diagnostics::stats::{ks_critical, ks_two_sample, mean_stderr};
use mflevy::diagnostics::{convergence_rate, coupled_separation};
use mflevy::euler_scheme::{
    feller_map, run, run_coupled_initials, run_coupled_subdivision, CoefficientField, SchemeConfig, TheoryOrder,
};
use mflevy::levy_core::{JumpMeasure, LevyTriplet};
use mflevy::models::{Brownian, Kernel, Kinetic, Model, ModelId};
use mflevy::numerics::SquareMatrix;
use mflevy::ot_metrics::{w_p_exact, EmpiricalMeasure};
use mflevy::{Error, Result};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{Discrete, Poisson};

/// Law- and state-independent triplet.
struct Fixed(LevyTriplet<f64>);

impl CoefficientField<f64> for Fixed {
    type Snapshot = ();
    fn dim(&self) -> usize {
        self.0.dim
    }
    fn kappa(&self) -> f64 {
        0.0
    }
    fn bound(&self) -> f64 {
        1e6
    }
    fn depends_on_law(&self) -> bool {
        false
    }
    fn freeze(&self, _: &EmpiricalMeasure<f64>) -> Result<()> {
        Ok(())
    }
    fn eval(&self, _: &[f64], _: &()) -> Result<LevyTriplet<f64>> {
        Ok(self.0.clone())
    }
}

/// Deterministic drift `b(x) = -sin x`.
struct SinDrift;

impl CoefficientField<f64> for SinDrift {
    type Snapshot = ();
    fn dim(&self) -> usize {
        1
    }
    fn kappa(&self) -> f64 {
        1.0
    }
    fn bound(&self) -> f64 {
        2.0
    }
    fn depends_on_law(&self) -> bool {
        false
    }
    fn freeze(&self, _: &EmpiricalMeasure<f64>) -> Result<()> {
        Ok(())
    }
    fn eval(&self, x: &[f64], _: &()) -> Result<LevyTriplet<f64>> {
        Ok(LevyTriplet::drift_only(vec![-x[0].sin()]))
    }
}

/// Fails for the particle sitting exactly at 7.
struct Picky;

impl CoefficientField<f64> for Picky {
    type Snapshot = ();
    fn dim(&self) -> usize {
        1
    }
    fn kappa(&self) -> f64 {
        0.0
    }
    fn bound(&self) -> f64 {
        1.0
    }
    fn freeze(&self, _: &EmpiricalMeasure<f64>) -> Result<()> {
        Ok(())
    }
    fn eval(&self, x: &[f64], _: &()) -> Result<LevyTriplet<f64>> {
        if x[0] == 7.0 {
            return Err(Error::Domain("no coefficients at 7".into()));
        }
        Ok(LevyTriplet::drift_only(vec![0.0]))
    }
}

fn line(n: usize) -> EmpiricalMeasure<f64> {
    EmpiricalMeasure::uniform(1, (0..n).map(|i| i as f64 / 8.0 - 1.0).collect()).unwrap()
}

#[test]
fn constant_drift_shifts_every_particle() {
    let field = Fixed(LevyTriplet::drift_only(vec![0.75]));
    let mu = line(16);
    let ens = run(&mu, &field, &SchemeConfig::new(0.125, 1.0, 16, 1)).unwrap();
    for k in 0..=ens.steps() {
        for i in 0..16 {
            assert_eq!(ens.state(k, i)[0], mu.point(i)[0] + 0.75 * 0.125 * k as f64);
        }
    }
}

#[test]
fn zero_horizon_returns_the_initial_cloud() {
    let mu = line(10);
    let ens = run(&mu, &Model::default_for(ModelId::Brownian, 1e-6).unwrap(), &SchemeConfig::new(0.125, 0.0, 10, 1))
        .unwrap();
    assert_eq!(ens.steps(), 0);
    assert_eq!(ens.snapshot(0), mu);
}

#[test]
fn field_failure_names_the_particle() {
    let mu = EmpiricalMeasure::uniform(1, (0..20).map(|i| i as f64).collect()).unwrap();
    match run(&mu, &Picky, &SchemeConfig::new(0.5, 1.0, 20, 1)) {
        Err(Error::Model { particle, .. }) => assert_eq!(particle, 7),
        other => panic!("expected a model error, got {other:?}"),
    }
}

#[test]
fn compound_poisson_step_is_exact() {
    // compensated single atom of size 1 at rate 2: X_1 = Poisson(2) - 2
    let jumps = JumpMeasure::atomic(vec![(vec![1.0], 2.0)]).unwrap();
    let field = Fixed(LevyTriplet::new(SquareMatrix::zeros(1), vec![0.0], jumps).unwrap());
    let n = 40_000;
    let ens = run(&EmpiricalMeasure::dirac(vec![0.0]), &field, &SchemeConfig::new(1.0, 1.0, n, 9)).unwrap();
    let law = Poisson::new(2.0).unwrap();
    let mut counts = [0usize; 9];
    for i in 0..n {
        let k = ens.state(1, i)[0] + 2.0;
        assert!((k - k.round()).abs() < 1e-12 && k >= 0.0);
        if (k.round() as usize) < counts.len() {
            counts[k.round() as usize] += 1;
        }
    }
    for (k, c) in counts.iter().enumerate() {
        let p = law.pmf(k as u64);
        let freq = *c as f64 / n as f64;
        assert!((freq - p).abs() <= 4.0 * (p * (1.0 - p) / n as f64).sqrt() + 1e-12, "k = {k}");
    }
}

#[test]
fn brownian_law_matches_an_exact_gaussian_cloud() {
    let n = 400;
    let t = 0.5;
    let ens = run(
        &EmpiricalMeasure::dirac(vec![0.0, 0.0]),
        &Fixed(LevyTriplet::brownian(2, 1.0)),
        &SchemeConfig::new(0.125, t, n, 4),
    )
    .unwrap();
    let mut rng = rand::rngs::StdRng::seed_from_u64(77);
    let exact: Vec<f64> = (0..2 * n).map(|_| t.sqrt() * Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect();
    let exact = EmpiricalMeasure::uniform(2, exact).unwrap();
    let w = w_p_exact(2.0, &ens.snapshot(ens.steps()), &exact).unwrap().0;
    assert!(w <= 2.0 * (n as f64).powf(-0.25) * t.sqrt(), "W2 = {w}");
}

fn rk4_tanh(x0: &[f64], w: &[f64], alpha: f64, width: f64, t: f64) -> Vec<f64> {
    let rhs = |x: &[f64]| -> Vec<f64> {
        x.iter()
            .map(|xi| x.iter().zip(w).map(|(xj, wj)| wj * alpha * ((xj - xi) / width).tanh()).sum())
            .collect()
    };
    let h = 1e-3;
    let mut x = x0.to_vec();
    for _ in 0..(t / h).round() as usize {
        let k1 = rhs(&x);
        let x2: Vec<f64> = x.iter().zip(&k1).map(|(a, k)| a + 0.5 * h * k).collect();
        let k2 = rhs(&x2);
        let x3: Vec<f64> = x.iter().zip(&k2).map(|(a, k)| a + 0.5 * h * k).collect();
        let k3 = rhs(&x3);
        let x4: Vec<f64> = x.iter().zip(&k3).map(|(a, k)| a + h * k).collect();
        let k4 = rhs(&x4);
        for i in 0..x.len() {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    x
}

#[test]
fn drift_only_interaction_follows_the_characteristics() {
    let (alpha, width) = (1.0, 0.5);
    let model = Kinetic::with_kernel(1, Kernel::Tanh { alpha, width }, 0.0, 0.0, 0.5).unwrap();
    let x0 = [-1.0, 0.2, 1.5];
    let w = [0.5, 0.3, 0.2];
    let mu = EmpiricalMeasure::new(1, x0.to_vec(), w.to_vec()).unwrap();
    let exact = rk4_tanh(&x0, &w, alpha, width, 1.0);
    let err = |tau: f64| {
        let ens = run(&mu, &model, &SchemeConfig::new(tau, 1.0, 3, 1)).unwrap();
        (0..3).map(|i| (ens.state(ens.steps(), i)[0] - exact[i]).abs()).fold(0.0, f64::max)
    };
    let (e1, e2) = (err(1.0 / 256.0), err(1.0 / 512.0));
    assert!(e2 < 1e-2, "{e2}");
    // first-order scheme: halving the step halves the error
    assert!((1.8..2.2).contains(&(e1 / e2)), "{e1} {e2}");
}

#[test]
fn deterministic_smooth_drift_converges_at_second_order_in_d() {
    let pairs = run_coupled_subdivision(&line(16), &SinDrift, &SchemeConfig::new(0.125, 1.0, 16, 1), 6).unwrap();
    let fit = convergence_rate(&pairs).unwrap();
    assert!(fit.slope().unwrap() >= 1.9, "{fit:?}");
}

#[test]
fn constant_drift_subdivision_is_exact_and_flagged_degenerate() {
    let field = Fixed(LevyTriplet::drift_only(vec![0.75]));
    let pairs = run_coupled_subdivision(&line(16), &field, &SchemeConfig::new(0.125, 1.0, 16, 1), 5).unwrap();
    assert!(pairs.iter().all(|p| p.distance == 0.0));
    let fit = convergence_rate(&pairs).unwrap();
    assert!(fit.degenerate && fit.fit.is_none());
}

#[test]
fn identical_initials_give_identical_paths() {
    let model = Model::default_for(ModelId::CompoundPoisson, 1e-6).unwrap();
    let mu = ModelId::CompoundPoisson.default_initial().sample(1, 300, 5).unwrap();
    let id: Vec<usize> = (0..300).collect();
    let (a, b) = run_coupled_initials(&mu, &mu, &model, &SchemeConfig::new(0.0625, 1.0, 300, 5), Some(&id)).unwrap();
    assert_eq!(a.states, b.states);
}

#[test]
fn translation_is_preserved_by_invariant_fields() {
    let field = Fixed(LevyTriplet::brownian(1, 1.0));
    let mu = line(64);
    let eta = mu.translated(&[0.3]);
    let id: Vec<usize> = (0..64).collect();
    let (a, b) = run_coupled_initials(&mu, &eta, &field, &SchemeConfig::new(0.0625, 1.0, 64, 2), Some(&id)).unwrap();
    for k in 0..=a.steps() {
        assert!((coupled_separation(&a, &b, k, 2.0).0 - 0.3).abs() < 1e-12);
    }
}

#[test]
fn coupled_leg_has_the_law_of_an_uncoupled_run() {
    let model = Model::default_for(ModelId::Brownian, 1e-6).unwrap();
    let n = 5000;
    let mu = ModelId::Brownian.default_initial().sample(1, n, 1).unwrap();
    let eta = mu.translated(&[0.5]);
    let id: Vec<usize> = (0..n).collect();
    let cfg = SchemeConfig::new(0.0625, 1.0, n, 1);
    let (_, b) = run_coupled_initials(&mu, &eta, &model, &cfg, Some(&id)).unwrap();
    let free = run(&ModelId::Brownian.default_initial().sample(1, n, 2).unwrap().translated(&[0.5]), &model, &cfg.with_seed(2))
        .unwrap();
    let xs = |e: &mflevy::PathEnsemble| -> Vec<f64> { (0..n).map(|i| e.state(e.steps(), i)[0]).collect() };
    let d = ks_two_sample(&xs(&b), &xs(&free));
    assert!(d < ks_critical(0.01, (n / 2) as f64), "KS {d}");
}

#[test]
fn law_cache_detects_tampering() {
    let model = Model::default_for(ModelId::MeanFieldKinetic, 1e-6).unwrap();
    let mu = line(32);
    let mut ens = run(&mu, &model, &SchemeConfig::new(0.125, 1.0, 32, 3).with_cache()).unwrap();
    ens.verify_cache().unwrap();
    assert_eq!(ens.cache.as_ref().unwrap().len(), ens.steps());
    ens.states[3][5] += 1e-9;
    assert!(ens.verify_cache().is_err());
}

#[test]
fn feller_semigroup_of_brownian_motion() {
    let field = Model::Brownian(Brownian::pure(1, 1.0));
    let grid: Vec<Vec<f64>> = [0.0, 0.5, 1.0].iter().map(|x| vec![*x]).collect();
    let cfg = SchemeConfig::new(0.125, 1.0, 20_000, 8);
    let one = feller_map(&field, &|_| 1.0, 1.0, &grid, &cfg).unwrap();
    assert!(one.values.iter().all(|v| *v == 1.0));
    let cos = |x: &[f64]| x[0].cos();
    let t0 = feller_map(&field, &cos, 0.0, &grid, &cfg).unwrap();
    for (v, x) in t0.values.iter().zip(&grid) {
        assert_eq!(*v, x[0].cos());
    }
    let est = feller_map(&field, &cos, 1.0, &grid, &cfg).unwrap();
    for ((v, se), x) in est.values.iter().zip(&est.stderr).zip(&grid) {
        let exact = (-0.5f64).exp() * x[0].cos();
        assert!((v - exact).abs() <= 4.0 * se, "x = {}: {v} vs {exact} ± {se}", x[0]);
    }
    assert!(feller_map(&Model::default_for(ModelId::MeanFieldKinetic, 1e-6).unwrap(), &cos, 1.0, &grid, &cfg).is_err());
}

#[test]
fn linear_mean_field_keeps_the_mean() {
    let model = Model::default_for(ModelId::MeanFieldKinetic, 1e-6).unwrap();
    let n = 4000;
    let mu = ModelId::MeanFieldKinetic.default_initial().sample(1, n, 6).unwrap();
    let ens = run(&mu, &model, &SchemeConfig::new(0.0625, 1.0, n, 6)).unwrap();
    let shift: Vec<f64> = (0..n).map(|i| ens.state(ens.steps(), i)[0] - ens.state(0, i)[0]).collect();
    let (m, se) = mean_stderr(&shift);
    assert!(m.abs() <= 4.0 * se, "{m} ± {se}");
}

#[test]
fn first_order_model_declares_its_order() {
    assert_eq!(Model::default_for(ModelId::W1PureJump, 1e-6).unwrap().order(), TheoryOrder::FirstMoment);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn runs_do_not_depend_on_the_worker_count(seed in any::<u64>()) {
        let model = Model::default_for(ModelId::StarStableTrunc, 1e-6).unwrap();
        let mu = ModelId::StarStableTrunc.default_initial().sample(1, 200, seed).unwrap();
        let cfg = SchemeConfig::new(0.0625, 0.5, 200, seed).with_cache();
        let pool = |k| rayon::ThreadPoolBuilder::new().num_threads(k).build().unwrap();
        let a = pool(1).install(|| run(&mu, &model, &cfg)).unwrap();
        let b = pool(3).install(|| run(&mu, &model, &cfg)).unwrap();
        prop_assert_eq!(a, b);
    }
}
