use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::euler_scheme::{CoefficientField, PathEnsemble};

use super::generator::{apply_generator, TestFunction};
use super::stats::mean_stderr;
use super::{ResidualReport, RunMeta, Tolerance};

/// Bounded function of the state at the earlier time, used as a test
/// direction for the martingale increment.
#[derive(Clone)]
pub struct ConditioningFn {
    pub name: String,
    pub f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for ConditioningFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ConditioningFn({})", self.name)
    }
}

impl ConditioningFn {
    pub fn new(name: impl Into<String>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
        }
    }
}

/// Constant, a smoothed indicator of `x₁ > 0`, `cos x₁` and `tanh x₁`.
pub fn default_dictionary() -> Vec<ConditioningFn> {
    vec![
        ConditioningFn::new("g_one", |_| 1.0),
        ConditioningFn::new("g_step", |x| 1.0 / (1.0 + (-x[0] / 0.25).exp())),
        ConditioningFn::new("g_cos", |x| x[0].cos()),
        ConditioningFn::new("g_tanh", |x| x[0].tanh()),
    ]
}

fn grid_index(ens: &PathEnsemble<f64>, t: f64) -> Result<usize> {
    ens.index_of(t)
        .ok_or_else(|| Error::Range(format!("time {t} is not on the ensemble grid")))
}

/// `L_{μ_k} f` at every particle of grid time `k`, with the law frozen at
/// the snapshot of that time.
fn generator_values<F: CoefficientField<f64>>(
    field: &F,
    f: &TestFunction,
    ens: &PathEnsemble<f64>,
    k: usize,
) -> Result<Vec<f64>> {
    let snap = field.freeze(&ens.snapshot(k))?;
    let order = field.order();
    (0..ens.particles())
        .into_par_iter()
        .map(|i| {
            let x = ens.state(k, i);
            let t = field.eval(x, &snap)?;
            apply_generator(&t, order, f, x)
        })
        .collect()
}

/// Central difference of `(f, μ_t)` across one grid step on each side,
/// minus the particle average of `L_{μ_t} f`. The statistic is the mean of
/// the per-particle differences, so its standard error is an honest
/// Monte Carlo error bar.
pub fn weak_equation_residual<F: CoefficientField<f64>>(
    field: &F,
    f: &TestFunction,
    ens: &PathEnsemble<f64>,
    t: f64,
    tol: Tolerance,
    meta: RunMeta,
) -> Result<ResidualReport> {
    let k = grid_index(ens, t)?;
    if k == 0 || k >= ens.steps() {
        return Err(Error::Range(format!(
            "weak residual needs an interior grid time, got {t} on [0, {}]",
            ens.horizon()
        )));
    }
    let lf = generator_values(field, f, ens, k)?;
    let h = 2.0 * ens.tau;
    let d: Vec<f64> = (0..ens.particles())
        .map(|i| (f.value(ens.state(k + 1, i)) - f.value(ens.state(k - 1, i))) / h - lf[i])
        .collect();
    let (stat, se) = mean_stderr(&d);
    Ok(ResidualReport::residual(
        format!("weak[{}]@t={}", f.name, ens.times[k]),
        stat,
        se,
        tol,
        meta,
    ))
}

/// Orthogonality of the discrete martingale increment
/// `M(t) - M(s) = f(X_t) - f(X_s) - Σ_{s<=t_l<t} τ L_{μ_l} f(X_l)`
/// to each function of `X_s` in the dictionary. Needs the law cache of the
/// run so that the generator is applied against the laws the scheme froze.
pub fn martingale_residual<F: CoefficientField<f64>>(
    field: &F,
    f: &TestFunction,
    ens: &PathEnsemble<f64>,
    s: f64,
    t: f64,
    dictionary: &[ConditioningFn],
    tol: Tolerance,
    meta: RunMeta,
) -> Result<Vec<ResidualReport>> {
    ens.verify_cache()?;
    let ks = grid_index(ens, s)?;
    let kt = grid_index(ens, t)?;
    if ks >= kt {
        return Err(Error::Range(format!("need s < t, got s = {s}, t = {t}")));
    }
    let n = ens.particles();
    let mut m: Vec<f64> = (0..n).map(|i| f.value(ens.state(kt, i)) - f.value(ens.state(ks, i))).collect();
    for k in ks..kt {
        let lf = generator_values(field, f, ens, k)?;
        for (mi, v) in m.iter_mut().zip(lf) {
            *mi -= ens.tau * v;
        }
    }
    Ok(dictionary
        .iter()
        .map(|g| {
            let prod: Vec<f64> = (0..n).map(|i| m[i] * (g.f)(ens.state(ks, i))).collect();
            let (stat, se) = mean_stderr(&prod);
            ResidualReport::residual(
                format!("martingale[{},{}]@[{},{}]", f.name, g.name, ens.times[ks], ens.times[kt]),
                stat,
                se,
                tol,
                meta.clone(),
            )
        })
        .collect())
}
