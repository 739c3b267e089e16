//! Small statistics helpers: means with standard errors, least squares,
//! Kolmogorov-Smirnov statistics.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{param, Result};

/// Sample mean and its standard error (`sd / √n`).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Unbiased sample variance and the standard error of that estimate, from
/// the spread of the squared deviations.
pub fn variance_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n < 2 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let (m2, se) = mean_stderr(&sq);
    let c = n as f64 / (n - 1) as f64;
    (m2 * c, se * c)
}

/// Ordinary least squares fit `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    /// Two-sided 95% interval for the slope.
    pub ci: [f64; 2],
    pub r_squared: f64,
}

pub fn ols(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let n = x.len();
    if n != y.len() {
        return Err(param("y", "abscissae and ordinates differ in length"));
    }
    if n < 3 {
        return Err(param("points", format!("need at least 3 points for a fit with an interval, got {n}")));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if !(sxx > 0.0) {
        return Err(param("points", "abscissae are all equal"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let dof = (n - 2) as f64;
    let slope_stderr = (sse / dof / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| param("points", e.to_string()))?
        .inverse_cdf(0.975);
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr,
        ci: [slope - t * slope_stderr, slope + t * slope_stderr],
        r_squared,
    })
}

/// `sup |F_n - F|` for a sample against a continuous CDF.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Two-sample statistic `sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let v = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= v {
            i += 1;
        }
        while j < xb.len() && xb[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic critical value `c(α)/√n_eff` of the Kolmogorov distribution.
pub fn ks_critical(alpha: f64, n_eff: f64) -> f64 {
    (-0.5 * (alpha / 2.0).ln()).sqrt() / n_eff.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ols_recovers_an_exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let f = ols(&x, &y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-14);
        assert!((f.intercept - 2.0).abs() < 1e-14);
        assert_eq!(f.r_squared, 1.0);
        assert!(f.slope_stderr < 1e-12);
    }

    #[test]
    fn ols_interval_matches_hand_computation() {
        // residuals ±0.1 around y = x; sxx = 5, sse = 0.04 over 3 dof
        let x = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let y = [-2.0, -0.9, -0.1, 1.1, 1.9];
        let f = ols(&x, &y).unwrap();
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        assert!((f.slope - sxy / 10.0).abs() < 1e-14);
        let sse: f64 = x.iter().zip(&y).map(|(a, b)| (b - f.intercept - f.slope * a).powi(2)).sum();
        let se = (sse / 3.0 / 10.0).sqrt();
        assert!((f.slope_stderr - se).abs() < 1e-14);
        // t quantile with 3 degrees of freedom
        assert!(((f.ci[1] - f.slope) / se - 3.182446305284263).abs() < 1e-9);
    }

    #[test]
    fn ks_critical_value_at_one_percent() {
        assert!((ks_critical(0.01, 1.0) - 1.6276).abs() < 1e-4);
    }

    #[test]
    fn ks_of_a_perfect_grid_is_half_a_step() {
        let n = 100;
        let s: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        assert!((ks_statistic(&s, |x| x) - 0.5 / n as f64).abs() < 1e-12);
        assert_eq!(ks_two_sample(&s, &s), 0.0);
    }

    #[test]
    fn variance_of_constant_is_zero() {
        assert_eq!(variance_stderr(&[3.0; 5]), (0.0, 0.0));
        assert_eq!(mean_stderr(&[1.0, 3.0]).0, 2.0);
    }
}
