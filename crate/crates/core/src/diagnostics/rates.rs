use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::euler_scheme::{PathEnsemble, SubdivisionPair};
use crate::ot_metrics::{w_p_1d, w_pt_path, EmpiricalMeasure, Pairing};

use super::stats::{mean_stderr, ols, LineFit};
use super::{ResidualReport, RunMeta, Tolerance};

/// Distances at or below this (after taking the `p`-th root) count as zero.
const ZERO: f64 = 1e-13;

/// Log-log fit of ordinates against abscissae.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub abscissae: Vec<f64>,
    pub ordinates: Vec<f64>,
    /// Monte Carlo standard errors of the ordinates.
    pub stderrs: Vec<f64>,
    /// Absent when the data are degenerate.
    pub fit: Option<LineFit>,
    /// All (or all but two) ordinates vanish: zero-noise model, not fitted.
    pub degenerate: bool,
}

impl RateFit {
    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }

    /// `exp(intercept)`: the constant in `ordinate ≈ c·abscissa^slope`.
    pub fn constant(&self) -> Option<f64> {
        self.fit.map(|f| f.intercept.exp())
    }

    fn from_points(x: Vec<f64>, y: Vec<f64>, se: Vec<f64>, root: f64) -> Result<Self> {
        let keep: Vec<usize> = (0..x.len())
            .filter(|&i| y[i] > 0.0 && y[i].powf(1.0 / root) > ZERO && x[i] > 0.0)
            .collect();
        let degenerate = keep.len() < 3;
        let fit = if degenerate {
            None
        } else {
            let lx: Vec<f64> = keep.iter().map(|&i| x[i].ln()).collect();
            let ly: Vec<f64> = keep.iter().map(|&i| y[i].ln()).collect();
            Some(ols(&lx, &ly)?)
        };
        Ok(Self {
            abscissae: x,
            ordinates: y,
            stderrs: se,
            fit,
            degenerate,
        })
    }
}

fn need_levels(pairs: &[SubdivisionPair<f64>]) -> Result<()> {
    if pairs.len() < 4 {
        return Err(param("levels", format!("need at least 4 subdivision levels, got {}", pairs.len())));
    }
    Ok(())
}

/// Fit of the paired terminal distance `E|X_τ - X_{τ/2}|^p` against `τ`.
pub fn convergence_rate(pairs: &[SubdivisionPair<f64>]) -> Result<RateFit> {
    need_levels(pairs)?;
    let p: f64 = pairs[0].order.p();
    RateFit::from_points(
        pairs.iter().map(|s| s.tau).collect(),
        pairs.iter().map(|s| s.distance).collect(),
        pairs.iter().map(|s| s.stderr).collect(),
        p,
    )
}

/// Path version: `E sup_t |X_τ(t) - X_{τ/2}(t)|^p` over the coarse grid.
pub fn convergence_rate_path(pairs: &[SubdivisionPair<f64>]) -> Result<RateFit> {
    need_levels(pairs)?;
    let p: f64 = pairs[0].order.p();
    let mut y = Vec::with_capacity(pairs.len());
    let mut se = Vec::with_capacity(pairs.len());
    for s in pairs {
        let d = w_pt_path(&s.coarse, &s.fine, p, &Pairing::Identity)?;
        y.push(d.sup_outside.powf(p));
        let sups: Vec<f64> = (0..s.coarse.particles())
            .map(|i| {
                (0..s.coarse.times.len())
                    .map(|k| crate::scalar::dist_pow(s.coarse.state(k, i), s.fine.state(k, i), p))
                    .fold(0.0, f64::max)
            })
            .collect();
        se.push(mean_stderr(&sups).1);
    }
    RateFit::from_points(pairs.iter().map(|s| s.tau).collect(), y, se, p)
}

/// Time regularity: for each gap `g` (in grid steps) the pairing bound
/// `(E|X(t+gτ) - X(t)|^p)^{1/p}`, averaged over all base times, against
/// `δ = gτ`. The pairing bound dominates `W_p(μ_t, μ_{t+δ})`.
pub fn holder_time(ens: &PathEnsemble<f64>, gaps: &[usize], p: f64) -> Result<RateFit> {
    if gaps.len() < 4 {
        return Err(param("gaps", "need at least 4 gaps"));
    }
    let steps = ens.steps();
    let n = ens.particles();
    let mut x = Vec::with_capacity(gaps.len());
    let mut y = Vec::with_capacity(gaps.len());
    let mut se = Vec::with_capacity(gaps.len());
    for &g in gaps {
        if g == 0 || g > steps {
            return Err(Error::Range(format!("gap {g} outside the grid of {steps} steps")));
        }
        let bases = steps - g + 1;
        let per: Vec<f64> = (0..n)
            .map(|i| {
                (0..bases)
                    .map(|l| crate::scalar::dist_pow(ens.state(l + g, i), ens.state(l, i), p))
                    .sum::<f64>()
                    / bases as f64
            })
            .collect();
        let (m, s) = mean_stderr(&per);
        let d = m.powf(1.0 / p);
        x.push(g as f64 * ens.tau);
        y.push(d);
        // delta method for the p-th root
        se.push(if m > 0.0 { s * d / (p * m) } else { 0.0 });
    }
    RateFit::from_points(x, y, se, 1.0)
}

fn coordinate_cloud(ens: &PathEnsemble<f64>, k: usize, c: usize, idx: impl Iterator<Item = usize>) -> Result<EmpiricalMeasure<f64>> {
    EmpiricalMeasure::uniform(1, idx.map(|i| ens.state(k, i)[c]).collect())
}

/// Brownian check `W₂(μ_s, μ_t) = σ₀|√t - √s|√d` for a pure Brownian
/// ensemble. The empirical distance is the exact sorted coupling per
/// coordinate (the laws are isotropic Gaussians, so the optimal coupling is
/// coordinatewise); its standard error comes from 20 disjoint batches.
pub fn brownian_holder_check(
    ens: &PathEnsemble<f64>,
    s: f64,
    t: f64,
    sigma0: f64,
    tol: Tolerance,
    meta: RunMeta,
) -> Result<ResidualReport> {
    let ks = ens.index_of(s).ok_or_else(|| Error::Range(format!("time {s} is off the grid")))?;
    let kt = ens.index_of(t).ok_or_else(|| Error::Range(format!("time {t} is off the grid")))?;
    let n = ens.particles();
    let batches = 20;
    if n < 2 * batches {
        return Err(param("particles", "need at least 40 particles for batch errors"));
    }
    let w2 = |idx: &dyn Fn() -> Box<dyn Iterator<Item = usize>>| -> Result<f64> {
        let mut sq = 0.0;
        for c in 0..ens.dim {
            let a = coordinate_cloud(ens, ks, c, idx())?;
            let b = coordinate_cloud(ens, kt, c, idx())?;
            sq += w_p_1d(2.0, &a, &b)?.powi(2);
        }
        Ok(sq.sqrt())
    };
    let full = w2(&|| Box::new(0..n))?;
    let size = n / batches;
    let mut per = Vec::with_capacity(batches);
    for b in 0..batches {
        per.push(w2(&|| Box::new(b * size..(b + 1) * size))?);
    }
    let (_, batch_se) = mean_stderr(&per);
    // batches are `batches` times smaller than the full cloud
    let se = batch_se / (batches as f64).sqrt();
    let exact = sigma0 * ((ens.times[kt]).sqrt() - (ens.times[ks]).sqrt()).abs() * (ens.dim as f64).sqrt();
    Ok(ResidualReport::residual(
        format!("brownian_w2@[{},{}]", ens.times[ks], ens.times[kt]),
        full - exact,
        se,
        tol,
        meta,
    ))
}

/// Fit of the distance at a later time against the initial distance.
/// Pairs with vanishing initial distance are dropped.
pub fn lipschitz_in_initial(initial: &[f64], later: &[f64], stderrs: &[f64]) -> Result<RateFit> {
    if initial.len() != later.len() || stderrs.len() != later.len() {
        return Err(param("later", "one distance per initial separation"));
    }
    let keep: Vec<usize> = (0..initial.len()).filter(|&i| initial[i] > 0.0).collect();
    if keep.len() < 3 {
        return Err(param("initial", "need at least 3 positive initial separations"));
    }
    RateFit::from_points(
        keep.iter().map(|&i| initial[i]).collect(),
        keep.iter().map(|&i| later[i]).collect(),
        keep.iter().map(|&i| stderrs[i]).collect(),
        1.0,
    )
}

/// `ratio(t) ≈ exp(c·t + intercept)` by least squares on `ln ratio`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub c: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Largest `ln ratio - (c·t + intercept)` over the data.
    pub max_excess: f64,
}

impl GrowthFit {
    /// The fitted curve lifted to lie above every data point.
    pub fn envelope(&self, t: f64) -> f64 {
        (self.c * t + self.intercept + self.max_excess.max(0.0)).exp()
    }
}

pub fn growth_fit(times: &[f64], ratios: &[f64]) -> Result<GrowthFit> {
    if ratios.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(param("ratios", "need positive finite ratios"));
    }
    let ly: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
    let f = ols(times, &ly)?;
    let max_excess = times
        .iter()
        .zip(&ly)
        .map(|(t, l)| l - f.slope * t - f.intercept)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(GrowthFit {
        c: f.slope,
        intercept: f.intercept,
        r_squared: f.r_squared,
        max_excess,
    })
}
