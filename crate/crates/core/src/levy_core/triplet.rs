use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::numerics::{integrate, SquareMatrix};
use crate::rng::Stream;
use crate::scalar::{dot, norm_sq, Real};

use super::jumps::JumpMeasure;

/// Coefficients `(√G, b, ν)` of a Lévy generator at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LevyTriplet<T> {
    pub dim: usize,
    /// Symmetric PSD square root of the diffusion matrix `G`.
    pub sigma: SquareMatrix<T>,
    pub drift: Vec<T>,
    pub jumps: JumpMeasure<T>,
}

impl<T: Real> LevyTriplet<T> {
    /// Validating constructor. `sigma` must be symmetric within 1e-10 with
    /// eigenvalues no more negative than -1e-12; it is re-symmetrised through
    /// its PSD square.
    pub fn new(sigma: SquareMatrix<T>, drift: Vec<T>, jumps: JumpMeasure<T>) -> Result<Self> {
        let dim = drift.len();
        if sigma.dim() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: sigma.dim(),
            });
        }
        if sigma.max_asymmetry() > T::of(1e-10) {
            return Err(Error::Domain("sigma must be symmetric".into()));
        }
        if drift.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("drift is not finite".into()));
        }
        let (vals, _) = sigma.symmetric_eigen();
        if vals.iter().any(|&l| l < T::of(-1e-12)) {
            return Err(Error::Domain("sigma must be positive semidefinite".into()));
        }
        jumps.validate(dim)?;
        Ok(Self {
            dim,
            sigma,
            drift,
            jumps,
        })
    }

    /// Builds the triplet from the diffusion matrix `G` rather than its root.
    pub fn from_covariance(g: &SquareMatrix<T>, drift: Vec<T>, jumps: JumpMeasure<T>) -> Result<Self> {
        if g.max_asymmetry() > T::of(1e-10) {
            return Err(Error::Domain("G must be symmetric".into()));
        }
        Self::new(g.psd_sqrt()?, drift, jumps)
    }

    pub fn brownian(dim: usize, sigma: T) -> Self {
        Self {
            dim,
            sigma: SquareMatrix::scaled_identity(dim, sigma),
            drift: vec![T::zero(); dim],
            jumps: JumpMeasure::zero(),
        }
    }

    pub fn drift_only(drift: Vec<T>) -> Self {
        Self {
            dim: drift.len(),
            sigma: SquareMatrix::zeros(drift.len()),
            drift,
            jumps: JumpMeasure::zero(),
        }
    }

    pub fn pure_jump(drift: Vec<T>, jumps: JumpMeasure<T>) -> Result<Self> {
        let d = drift.len();
        Self::new(SquareMatrix::zeros(d), drift, jumps)
    }

    pub fn covariance(&self) -> SquareMatrix<T> {
        self.sigma.mul(&self.sigma)
    }

    pub fn has_gaussian_part(&self) -> bool {
        !self.sigma.is_zero()
    }

    /// `‖√G‖ + |b| + ∫|y|²ν`, the quantity the uniform bound controls.
    pub fn bound_statistic(&self) -> Result<T> {
        Ok(self.sigma.frobenius_sq().sqrt() + norm_sq(&self.drift).sqrt() + self.jumps.second_moment()?)
    }

    /// Verifies the uniform-bound certificate against a declared bound.
    pub fn check_bound(&self, bound: T) -> Result<()> {
        let s = self.bound_statistic()?;
        if s < bound {
            Ok(())
        } else {
            Err(Error::Domain(format!("triplet bound statistic {s} exceeds declared bound {bound}")))
        }
    }

    /// Replaces the discarded small jumps by a Gaussian with matching covariance.
    pub fn with_small_jump_gaussian(&self) -> Result<Self> {
        let extra = self.jumps.small_jump_covariance(self.dim)?;
        if extra.is_zero() {
            return Ok(self.clone());
        }
        let g = self.covariance().add(&extra);
        Self::new(g.psd_sqrt()?, self.drift.clone(), self.jumps.clone())
    }

    /// Total covariance rate `G + ∫ y yᵀ ν(dy)` of the compensated process.
    pub fn increment_covariance_rate(&self) -> Result<SquareMatrix<T>> {
        Ok(self.covariance().add(&self.jumps.covariance(self.dim)?))
    }

    pub(crate) fn gaussian_part(&self, xi: &[T], sqrt_tau: T) -> Vec<T> {
        self.sigma
            .mul_vec(xi)
            .into_iter()
            .map(|v| v * sqrt_tau)
            .collect()
    }
}

fn check_tau<T: Real>(tau: T) -> Result<()> {
    if tau > T::zero() && tau.is_finite() {
        Ok(())
    } else {
        Err(param("tau", format!("must be positive and finite, got {tau}")))
    }
}

pub(crate) fn standard_normals<T: Real>(dim: usize, rng: &mut Stream) -> Vec<T> {
    (0..dim).map(|_| T::of(rng.normal())).collect()
}

pub(crate) fn add_jumps<T: Real>(
    acc: &mut [T],
    jumps: &JumpMeasure<T>,
    tau: T,
    rng: &mut Stream,
) {
    let mass = jumps.total_mass();
    if mass == T::zero() {
        return;
    }
    let count = rng.poisson((mass * tau).f64());
    for _ in 0..count {
        let y = jumps.sample_jump(rng);
        for (a, v) in acc.iter_mut().zip(y) {
            *a += v;
        }
    }
}

/// One increment `Y_τ` of the Lévy process with the given triplet. Jumps are
/// fully compensated, so `E Y_τ = b τ`.
pub fn sample_increment<T: Real>(t: &LevyTriplet<T>, tau: T, rng: &mut Stream) -> Result<Vec<T>> {
    check_tau(tau)?;
    let xi = standard_normals::<T>(t.dim, rng);
    let mut out = t.gaussian_part(&xi, tau.sqrt());
    let comp = t.jumps.mean(t.dim)?;
    for ((o, &b), &c) in out.iter_mut().zip(&t.drift).zip(&comp) {
        *o += (b - c) * tau;
    }
    add_jumps(&mut out, &t.jumps, tau, rng);
    Ok(out)
}

/// Increment of a first-order generator `(b, ∇f) + ∫ (f(x+y) - f(x)) ν(dy)`:
/// no Gaussian part, uncompensated jumps.
pub fn sample_increment_first_order<T: Real>(
    t: &LevyTriplet<T>,
    tau: T,
    rng: &mut Stream,
) -> Result<Vec<T>> {
    check_tau(tau)?;
    if t.has_gaussian_part() {
        return Err(Error::WrongVariant(
            "first-order increments do not allow a Gaussian part".into(),
        ));
    }
    let mut out: Vec<T> = t.drift.iter().map(|&b| b * tau).collect();
    add_jumps(&mut out, &t.jumps, tau, rng);
    Ok(out)
}

/// `η(p) = -½|√G p|² + i b·p + ∫ (e^{ip·y} - 1 - ip·y) ν(dy)` over the
/// simulated jump measure.
pub fn characteristic_exponent<T: Real>(t: &LevyTriplet<T>, p: &[T]) -> Result<Complex<T>> {
    if p.len() != t.dim {
        return Err(Error::Dimension {
            expected: t.dim,
            got: p.len(),
        });
    }
    let sp = t.sigma.mul_vec(p);
    let mut eta = Complex::new(-norm_sq(&sp) / T::of(2.0), dot(&t.drift, p));
    let kernel = |py: T| Complex::new(py.cos() - T::one(), py.sin() - py);
    match &t.jumps {
        JumpMeasure::FiniteAtomic { atoms } => {
            for a in atoms {
                eta += kernel(dot(p, &a.y)) * a.w;
            }
        }
        JumpMeasure::StarShaped { angular, radial } => {
            for (a, r) in angular.iter().zip(radial) {
                let ps = dot(p, &a.s);
                if ps == T::zero() {
                    continue;
                }
                let lo = r.truncation.max(r.support().0);
                let hi = r.support().1;
                if lo >= hi {
                    continue;
                }
                let (re, im) = radial_kernel_integral(r, ps, lo, hi)?;
                eta += Complex::new(re, im) * a.omega;
            }
        }
    }
    Ok(eta)
}

fn radial_kernel_integral<T: Real>(
    r: &super::radial::RadialTail<T>,
    ps: T,
    lo: T,
    hi: T,
) -> Result<(T, T)> {
    let tol = T::of(1e-10);
    let abs = T::of(1e-14);
    // exponential-type tails: mass beyond 200 scale units is negligible
    let hi = if hi.is_finite() { hi } else { r.inverse_tail(r.mass() * T::of(1e-30)) };
    let run = |f: &dyn Fn(T) -> T| -> Result<T> {
        if lo > T::zero() {
            integrate(|w: T| {
                let z = w.exp();
                f(z) * r.density(z) * z
            }, lo.ln(), hi.ln(), tol, abs)
            .map(|v| v.0)
        } else {
            integrate(|z: T| f(z) * r.density(z), lo, hi, tol, abs).map(|v| v.0)
        }
    };
    let re = run(&|z: T| (ps * z).cos() - T::one())?;
    let im = run(&|z: T| (ps * z).sin() - ps * z)?;
    Ok((re, im))
}

/// Splits `ν` at the unit sphere: the small part keeps `(√G, b)` and the
/// jumps inside `B₁`; the large part is the finite-mass compound Poisson
/// remainder with `|y| >= 1`. Both parts stay compensated, so the two
/// generators add up to the original one.
pub fn split_generator<T: Real>(t: &LevyTriplet<T>) -> Result<(LevyTriplet<T>, LevyTriplet<T>)> {
    let small_jumps = t.jumps.restrict(T::zero(), T::one())?;
    let large_jumps = t.jumps.restrict(T::one(), T::infinity())?;
    let large_mass = large_jumps.total_mass();
    if !large_mass.is_finite() {
        return Err(Error::Domain("Lévy measure has infinite mass outside the unit ball".into()));
    }
    small_jumps.second_moment()?;
    let small = LevyTriplet {
        dim: t.dim,
        sigma: t.sigma.clone(),
        drift: t.drift.clone(),
        jumps: small_jumps,
    };
    let large = LevyTriplet {
        dim: t.dim,
        sigma: SquareMatrix::zeros(t.dim),
        drift: vec![T::zero(); t.dim],
        jumps: large_jumps,
    };
    Ok((small, large))
}
