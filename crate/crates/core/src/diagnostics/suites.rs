use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::euler_scheme::{
    paired_moment, run, run_coupled_initials, run_coupled_subdivision, CoefficientField, PathEnsemble, SchemeConfig,
    TheoryOrder,
};
use crate::models::Kinetic;
use crate::ot_metrics::{w_p_estimate, EmpiricalMeasure};

use super::rates::{convergence_rate, convergence_rate_path, lipschitz_in_initial};
use super::residuals::{default_dictionary, martingale_residual, weak_equation_residual};
use super::stats::{mean_stderr, variance_stderr};
use super::{ResidualReport, RunMeta, TestFunction, Tolerance};

/// Independent seed for the `tag`-th auxiliary run (splitmix64 finaliser).
fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(0xd1b5_4a32_d192_ed03);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn terminal<F: CoefficientField<f64>>(
    mu: &EmpiricalMeasure<f64>,
    field: &F,
    cfg: &SchemeConfig<f64>,
    horizon: f64,
    seed: u64,
) -> Result<EmpiricalMeasure<f64>> {
    let c = cfg.clone().with_horizon(horizon).with_seed(seed);
    let ens = run(mu, field, &c)?;
    Ok(ens.snapshot(ens.steps()))
}

/// Semigroup property `U_{s+t} μ = U_t U_s μ` at particle resolution.
///
/// The statistic is `W₂` between a direct run to `s + t` and a run to `s`
/// restarted to `t` more. Its noise floor is calibrated by `replicas`
/// pairs of independent direct runs: the claim holds when the statistic is
/// at most the floor mean plus `z` predictive standard deviations
/// `sd·√(1 + 1/replicas)`. The floor is right-skewed, so use at least 8
/// replicas; fewer often underestimate its spread.
pub fn semigroup_check<F: CoefficientField<f64>>(
    field: &F,
    mu0: &EmpiricalMeasure<f64>,
    cfg: &SchemeConfig<f64>,
    s: f64,
    t: f64,
    replicas: usize,
    tol: Tolerance,
    meta: RunMeta,
) -> Result<ResidualReport> {
    if replicas < 2 {
        return Err(param("replicas", "need at least 2 replica pairs"));
    }
    let p = field.order().p::<f64>();
    let mu = crate::euler_scheme::prepare_cloud(mu0, cfg.particles, cfg.seed)?;
    let direct = terminal(&mu, field, cfg, s + t, derive_seed(cfg.seed, 1))?;
    let mid = terminal(&mu, field, cfg, s, derive_seed(cfg.seed, 2))?;
    let composed = terminal(&mid, field, cfg, t, derive_seed(cfg.seed, 3))?;
    let stat = w_p_estimate(p, &direct, &composed)?;
    let mut floors = Vec::with_capacity(replicas);
    for r in 0..replicas as u64 {
        let a = terminal(&mu, field, cfg, s + t, derive_seed(cfg.seed, 10 + 2 * r))?;
        let b = terminal(&mu, field, cfg, s + t, derive_seed(cfg.seed, 11 + 2 * r))?;
        floors.push(w_p_estimate(p, &a, &b)?);
    }
    let (mean, se) = mean_stderr(&floors);
    let r = replicas as f64;
    // spread of one fresh draw around the estimated floor mean
    let sd = se * r.sqrt() * (1.0 + 1.0 / r).sqrt();
    let claim = format!("semigroup@s={s},t={t}");
    if mean == 0.0 && stat == 0.0 {
        return Ok(ResidualReport::degenerate(claim, meta));
    }
    Ok(ResidualReport::at_most(claim, stat, sd, mean + tol.z * sd, meta))
}

/// `(E|a_i - b_i|^p)^{1/p}` at grid index `k` with its delta-method error.
pub fn coupled_separation(a: &PathEnsemble<f64>, b: &PathEnsemble<f64>, k: usize, p: f64) -> (f64, f64) {
    let (m, se) = paired_moment(a, b, k, p);
    let d = m.powf(1.0 / p);
    (d, if m > 0.0 { se * d / (p * m) } else { 0.0 })
}

/// One point of the kinetic variance curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariancePoint {
    pub t: f64,
    pub observed: f64,
    pub predicted: f64,
    pub stderr: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KineticReport {
    pub reports: Vec<ResidualReport>,
    /// Present for the linear kernel without jumps.
    pub variance: Vec<VariancePoint>,
}

fn interior_time(ens: &PathEnsemble<f64>) -> f64 {
    ens.times[(ens.steps() / 2).max(1)]
}

/// Weak residuals for `1, x, x²` on the kinetic model and, for the linear
/// kernel `α(y - x)` without jumps, mean conservation and the variance
/// curve `V(t) = V₀e^{-2αt} + σ²(1 - e^{-2αt})/(2α)` at 8 equally spaced
/// times. `V₀` is the unbiased sample variance of the initial cloud.
pub fn kinetic_experiment(
    model: &Kinetic,
    mu0: &EmpiricalMeasure<f64>,
    cfg: &SchemeConfig<f64>,
    tol: Tolerance,
    meta: RunMeta,
) -> Result<KineticReport> {
    let mu = crate::euler_scheme::prepare_cloud(mu0, cfg.particles, cfg.seed)?;
    let mut probe: Vec<f64> = (0..mu.len()).step_by((mu.len() / 64).max(1)).map(|i| mu.point(i)[0]).collect();
    probe.sort_by(f64::total_cmp);
    model.kernel.audit(&probe)?;
    let ens = run(&mu, model, &cfg.clone().with_cache())?;
    let steps = ens.steps();
    if steps < 8 || steps % 8 != 0 {
        return Err(param("tau", "the kinetic experiment needs a multiple of 8 steps"));
    }
    let d = model.dim;
    let mut reports = Vec::new();
    let tm = interior_time(&ens);
    for f in [TestFunction::one(d), TestFunction::coord(0, d), TestFunction::square(d)] {
        reports.push(weak_equation_residual(model, &f, &ens, tm, tol, meta.clone())?);
    }
    let mut variance = Vec::new();
    if let (Some(alpha), true) = (model.linear_alpha(), model.jump_rate == 0.0) {
        let n = ens.particles();
        let coord = |k: usize| -> Vec<f64> { (0..n).map(|i| ens.state(k, i)[0]).collect() };
        let x0 = coord(0);
        let shift: Vec<f64> = coord(steps).iter().zip(&x0).map(|(b, a)| b - a).collect();
        let (dm, dm_se) = mean_stderr(&shift);
        reports.push(ResidualReport::residual("kinetic_mean_conserved", dm, dm_se, tol, meta.clone()));
        let (v0, _) = variance_stderr(&x0);
        let s2 = model.sigma * model.sigma;
        for j in 1..=8 {
            let k = j * steps / 8;
            let t = ens.times[k];
            let e = (-2.0 * alpha * t).exp();
            let predicted = if alpha == 0.0 {
                v0 + s2 * t
            } else {
                v0 * e + s2 * (1.0 - e) / (2.0 * alpha)
            };
            let (observed, se) = variance_stderr(&coord(k));
            let r = ResidualReport::residual(format!("kinetic_variance@t={t}"), observed - predicted, se, tol, meta.clone());
            variance.push(VariancePoint {
                t,
                observed,
                predicted,
                stderr: se,
                passed: r.passed,
            });
            reports.push(r);
        }
    }
    Ok(KineticReport { reports, variance })
}

/// Protocol of the first-order suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct W1SuiteConfig {
    /// Coarsest step of the subdivision sweep.
    pub base_tau: f64,
    pub levels: usize,
    /// Translations of the initial cloud for the Lipschitz check.
    pub separations: Vec<f64>,
}

impl Default for W1SuiteConfig {
    fn default() -> Self {
        Self {
            base_tau: 0.125,
            levels: 6,
            separations: vec![0.05, 0.1, 0.2, 0.4],
        }
    }
}

/// Subdivision rate (terminal and path), Lipschitz dependence on the
/// initial law and martingale/weak residuals for `C¹` test functions, all
/// in first-order (`W₁`) form.
pub fn w1_theory_suite<F: CoefficientField<f64>>(
    field: &F,
    mu0: &EmpiricalMeasure<f64>,
    cfg: &SchemeConfig<f64>,
    suite: &W1SuiteConfig,
    tol: Tolerance,
    meta: RunMeta,
) -> Result<Vec<ResidualReport>> {
    if field.order() != TheoryOrder::FirstMoment {
        return Err(Error::WrongVariant("the first-order suite needs a first-order field".into()));
    }
    let mu = crate::euler_scheme::prepare_cloud(mu0, cfg.particles, cfg.seed)?;
    let snap = field.freeze(&mu)?;
    for i in (0..mu.len()).step_by((mu.len() / 16).max(1)) {
        if field.eval(mu.point(i), &snap)?.has_gaussian_part() {
            return Err(Error::WrongVariant(
                "Gaussian part present: use the second-order diagnostics".into(),
            ));
        }
    }
    let d = field.dim();
    let mut out = Vec::new();

    let sweep = SchemeConfig {
        tau: suite.base_tau,
        ..cfg.clone()
    };
    let pairs = run_coupled_subdivision(&mu, field, &sweep, suite.levels)?;
    let fit = convergence_rate(&pairs)?;
    out.push(ResidualReport::slope_at_least("w1_subdivision_slope", &fit, 0.9, meta.clone()));
    let path = convergence_rate_path(&pairs)?;
    out.push(ResidualReport::slope_at_least("w1_path_subdivision_slope", &path, 0.9, meta.clone()));

    let k = cfg.steps()?;
    let identity: Vec<usize> = (0..mu.len()).collect();
    let mut later = Vec::new();
    let mut later_se = Vec::new();
    for &delta in &suite.separations {
        let mut v = vec![0.0; d];
        v[0] = delta;
        let eta = mu.translated(&v);
        let (a, b) = run_coupled_initials(&mu, &eta, field, cfg, Some(&identity))?;
        let (dist, se) = coupled_separation(&a, &b, k, 1.0);
        later.push(dist);
        later_se.push(se);
    }
    let lip = lipschitz_in_initial(&suite.separations, &later, &later_se)?;
    match lip.fit {
        Some(f) if !lip.degenerate => out.push(ResidualReport::residual(
            "w1_lipschitz_slope_minus_one",
            f.slope - 1.0,
            f.slope_stderr,
            Tolerance { floor: 0.1, z: 0.0 },
            meta.clone(),
        )),
        _ => out.push(ResidualReport::degenerate("w1_lipschitz_slope_minus_one", meta.clone())),
    }

    let ens = run(&mu, field, &cfg.clone().with_cache())?;
    let tm = interior_time(&ens);
    let dict = default_dictionary();
    for f in [TestFunction::coord(0, d), TestFunction::cos_sum(d)] {
        out.push(weak_equation_residual(field, &f, &ens, tm, tol, meta.clone())?);
        out.extend(martingale_residual(field, &f, &ens, 0.0, tm, &dict, tol, meta.clone())?);
    }
    Ok(out)
}
