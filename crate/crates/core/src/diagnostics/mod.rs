//! Statistical checks of the scheme against its limit equation: weak and
//! martingale residuals, rate fits, continuity checks. All in `f64`.

mod generator;
mod rates;
mod residuals;
pub mod stats;
mod suites;

use serde::{Deserialize, Serialize};

pub use generator::{apply_generator, TestFunction};
pub use rates::{
    brownian_holder_check, convergence_rate, convergence_rate_path, growth_fit, holder_time, lipschitz_in_initial,
    GrowthFit, RateFit,
};
pub use residuals::{default_dictionary, martingale_residual, weak_equation_residual, ConditioningFn};
pub use stats::LineFit;
pub use suites::{
    coupled_separation, kinetic_experiment, semigroup_check, w1_theory_suite, KineticReport, VariancePoint,
    W1SuiteConfig,
};

/// How a statistic is compared with its tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// `|statistic| <= tolerance`.
    Residual,
    /// `statistic <= tolerance`.
    AtMost,
    /// `statistic >= tolerance`.
    AtLeast,
}

/// Where a report came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub model: String,
    pub tau: f64,
    pub particles: usize,
    pub seed: u64,
}

impl RunMeta {
    pub fn new(model: impl Into<String>, tau: f64, particles: usize, seed: u64) -> Self {
        Self {
            model: model.into(),
            tau,
            particles,
            seed,
        }
    }
}

/// Absolute floor and z-multiplier of residual tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub floor: f64,
    pub z: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { floor: 1e-3, z: 4.0 }
    }
}

impl Tolerance {
    pub fn of(&self, stderr: f64) -> f64 {
        self.floor.max(self.z * stderr)
    }
}

/// One verified claim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub claim: String,
    pub statistic: f64,
    pub stderr: f64,
    pub tolerance: f64,
    pub check: Check,
    pub passed: bool,
    /// Zero-noise situation: nothing was fitted and the claim is vacuous.
    pub degenerate: bool,
    pub meta: RunMeta,
}

impl ResidualReport {
    /// Residual claim: passes when `|statistic| <= max(floor, z·stderr)`.
    pub fn residual(claim: impl Into<String>, statistic: f64, stderr: f64, tol: Tolerance, meta: RunMeta) -> Self {
        let tolerance = tol.of(stderr);
        Self {
            claim: claim.into(),
            statistic,
            stderr,
            tolerance,
            check: Check::Residual,
            passed: statistic.abs() <= tolerance,
            degenerate: false,
            meta,
        }
    }

    pub fn at_least(claim: impl Into<String>, statistic: f64, stderr: f64, threshold: f64, meta: RunMeta) -> Self {
        Self {
            claim: claim.into(),
            statistic,
            stderr,
            tolerance: threshold,
            check: Check::AtLeast,
            passed: statistic >= threshold,
            degenerate: false,
            meta,
        }
    }

    pub fn at_most(claim: impl Into<String>, statistic: f64, stderr: f64, threshold: f64, meta: RunMeta) -> Self {
        Self {
            claim: claim.into(),
            statistic,
            stderr,
            tolerance: threshold,
            check: Check::AtMost,
            passed: statistic <= threshold,
            degenerate: false,
            meta,
        }
    }

    /// A vacuous claim on a zero-noise model; counts as passed.
    pub fn degenerate(claim: impl Into<String>, meta: RunMeta) -> Self {
        Self {
            claim: claim.into(),
            statistic: 0.0,
            stderr: 0.0,
            tolerance: 0.0,
            check: Check::Residual,
            passed: true,
            degenerate: true,
            meta,
        }
    }

    /// Slope claim `slope >= threshold` from a rate fit; degenerate fits
    /// give a degenerate report.
    pub fn slope_at_least(claim: impl Into<String>, fit: &RateFit, threshold: f64, meta: RunMeta) -> Self {
        match &fit.fit {
            Some(f) if !fit.degenerate => Self::at_least(claim, f.slope, f.slope_stderr, threshold, meta),
            _ => Self::degenerate(claim, meta),
        }
    }

    /// One line for terminals; always shows the standard error.
    pub fn summary(&self) -> String {
        let op = match self.check {
            Check::Residual => "|.| <=",
            Check::AtMost => "<=",
            Check::AtLeast => ">=",
        };
        let verdict = match (self.degenerate, self.passed) {
            (true, _) => "DEGENERATE",
            (false, true) => "PASS",
            (false, false) => "FAIL",
        };
        format!(
            "{verdict:<10} {:<40} {:+.6e} ± {:.3e}  {op} {:.3e}",
            self.claim, self.statistic, self.stderr, self.tolerance
        )
    }
}
