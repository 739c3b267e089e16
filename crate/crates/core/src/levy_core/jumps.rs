use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::SquareMatrix;
use crate::rng::Stream;
use crate::scalar::{norm_sq, Real};

use super::radial::RadialTail;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Atom<T> {
    pub y: Vec<T>,
    pub w: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct AngularAtom<T> {
    pub s: Vec<T>,
    pub omega: T,
}

/// Lévy measure on `R^d \ {0}`.
///
/// Star-shaped measures are `ν(dy) = ν_s(dr) ω(ds)` with one radial tail per
/// angular atom. Only the part above each tail's truncation is simulated;
/// every moment below refers to that simulated part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Real")]
pub enum JumpMeasure<T> {
    FiniteAtomic {
        atoms: Vec<Atom<T>>,
    },
    StarShaped {
        angular: Vec<AngularAtom<T>>,
        radial: Vec<RadialTail<T>>,
    },
}

impl<T: Real> Default for JumpMeasure<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Real> JumpMeasure<T> {
    pub fn zero() -> Self {
        JumpMeasure::FiniteAtomic { atoms: Vec::new() }
    }

    pub fn atomic(atoms: Vec<(Vec<T>, T)>) -> Result<Self> {
        let m = JumpMeasure::FiniteAtomic {
            atoms: atoms.into_iter().map(|(y, w)| Atom { y, w }).collect(),
        };
        if let Some(d) = m.dim_hint() {
            m.validate(d)?;
        }
        Ok(m)
    }

    pub fn star(angular: Vec<(Vec<T>, T)>, radial: Vec<RadialTail<T>>) -> Result<Self> {
        let m = JumpMeasure::StarShaped {
            angular: angular
                .into_iter()
                .map(|(s, omega)| AngularAtom { s, omega })
                .collect(),
            radial,
        };
        if let Some(d) = m.dim_hint() {
            m.validate(d)?;
        }
        Ok(m)
    }

    fn dim_hint(&self) -> Option<usize> {
        match self {
            JumpMeasure::FiniteAtomic { atoms } => atoms.first().map(|a| a.y.len()),
            JumpMeasure::StarShaped { angular, .. } => angular.first().map(|a| a.s.len()),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            JumpMeasure::FiniteAtomic { atoms } => atoms.is_empty(),
            JumpMeasure::StarShaped { angular, .. } => angular.is_empty(),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            JumpMeasure::FiniteAtomic { atoms } => {
                for a in atoms {
                    if a.y.len() != dim {
                        return Err(Error::Dimension {
                            expected: dim,
                            got: a.y.len(),
                        });
                    }
                    if !(a.w > T::zero() && a.w.is_finite()) {
                        return Err(Error::Domain("atom masses must be positive and finite".into()));
                    }
                    if a.y.iter().any(|v| !v.is_finite()) {
                        return Err(Error::Domain("atom location is not finite".into()));
                    }
                    if norm_sq(&a.y) == T::zero() {
                        return Err(Error::Domain("Lévy measure has an atom at the origin".into()));
                    }
                }
            }
            JumpMeasure::StarShaped { angular, radial } => {
                if angular.len() != radial.len() {
                    return Err(Error::Domain(
                        "star shape needs one radial tail per angular atom".into(),
                    ));
                }
                for (a, r) in angular.iter().zip(radial) {
                    if a.s.len() != dim {
                        return Err(Error::Dimension {
                            expected: dim,
                            got: a.s.len(),
                        });
                    }
                    if (norm_sq(&a.s).sqrt() - T::one()).abs() > T::of(1e-12).max(T::epsilon() * T::of(4.0)) {
                        return Err(Error::Domain("angular atoms must be unit vectors".into()));
                    }
                    if !(a.omega > T::zero() && a.omega.is_finite()) {
                        return Err(Error::Domain("angular weights must be positive".into()));
                    }
                    if !r.mass().is_finite() {
                        return Err(Error::Domain(
                            "radial tail has infinite simulated mass; set a truncation".into(),
                        ));
                    }
                    r.moment(T::of(2.0))?;
                }
            }
        }
        Ok(())
    }

    pub fn total_mass(&self) -> T {
        match self {
            JumpMeasure::FiniteAtomic { atoms } => atoms.iter().map(|a| a.w).sum(),
            JumpMeasure::StarShaped { angular, radial } => angular
                .iter()
                .zip(radial)
                .map(|(a, r)| a.omega * r.mass())
                .sum(),
        }
    }

    /// `∫ y ν(dy)`.
    pub fn mean(&self, dim: usize) -> Result<Vec<T>> {
        let mut m = vec![T::zero(); dim];
        match self {
            JumpMeasure::FiniteAtomic { atoms } => {
                for a in atoms {
                    for (mi, &yi) in m.iter_mut().zip(&a.y) {
                        *mi += a.w * yi;
                    }
                }
            }
            JumpMeasure::StarShaped { angular, radial } => {
                for (a, r) in angular.iter().zip(radial) {
                    let first = r.moment(T::one())?;
                    for (mi, &si) in m.iter_mut().zip(&a.s) {
                        *mi += a.omega * first * si;
                    }
                }
            }
        }
        Ok(m)
    }

    /// `∫ |y|^p ν(dy)`.
    pub fn moment(&self, p: T) -> Result<T> {
        match self {
            JumpMeasure::FiniteAtomic { atoms } => Ok(atoms
                .iter()
                .map(|a| a.w * norm_sq(&a.y).sqrt().powf(p))
                .sum()),
            JumpMeasure::StarShaped { angular, radial } => {
                let mut total = T::zero();
                for (a, r) in angular.iter().zip(radial) {
                    total += a.omega * r.moment(p)?;
                }
                Ok(total)
            }
        }
    }

    pub fn second_moment(&self) -> Result<T> {
        self.moment(T::of(2.0))
    }

    /// `∫ y yᵀ ν(dy)`.
    pub fn covariance(&self, dim: usize) -> Result<SquareMatrix<T>> {
        let mut c = SquareMatrix::zeros(dim);
        let mut add = |v: &[T], w: T| {
            for i in 0..dim {
                for j in 0..dim {
                    c[(i, j)] += w * v[i] * v[j];
                }
            }
        };
        match self {
            JumpMeasure::FiniteAtomic { atoms } => atoms.iter().for_each(|a| add(&a.y, a.w)),
            JumpMeasure::StarShaped { angular, radial } => {
                for (a, r) in angular.iter().zip(radial) {
                    add(&a.s, a.omega * r.moment(T::of(2.0))?);
                }
            }
        }
        Ok(c)
    }

    /// Covariance of the discarded small jumps below each truncation.
    pub fn small_jump_covariance(&self, dim: usize) -> Result<SquareMatrix<T>> {
        let mut c = SquareMatrix::zeros(dim);
        if let JumpMeasure::StarShaped { angular, radial } = self {
            for (a, r) in angular.iter().zip(radial) {
                let m2 = r.moment_between(T::of(2.0), T::zero(), r.truncation)?;
                for i in 0..dim {
                    for j in 0..dim {
                        c[(i, j)] += a.omega * m2 * a.s[i] * a.s[j];
                    }
                }
            }
        }
        Ok(c)
    }

    /// Simulated mass with `|y| >= z`.
    pub fn norm_tail(&self, z: T) -> T {
        match self {
            JumpMeasure::FiniteAtomic { atoms } => atoms
                .iter()
                .filter(|a| norm_sq(&a.y).sqrt() >= z)
                .map(|a| a.w)
                .sum(),
            JumpMeasure::StarShaped { angular, radial } => angular
                .iter()
                .zip(radial)
                .map(|(a, r)| a.omega * r.tail(z.max(r.truncation)))
                .sum(),
        }
    }

    /// One jump from the normalised simulated measure.
    pub fn sample_jump(&self, rng: &mut Stream) -> Vec<T> {
        match self {
            JumpMeasure::FiniteAtomic { atoms } => {
                let w: Vec<f64> = atoms.iter().map(|a| a.w.f64()).collect();
                atoms[rng.categorical(&w)].y.clone()
            }
            JumpMeasure::StarShaped { angular, radial } => {
                let w: Vec<f64> = angular
                    .iter()
                    .zip(radial)
                    .map(|(a, r)| (a.omega * r.mass()).f64())
                    .collect();
                let k = rng.categorical(&w);
                let r = radial[k].quantile(T::of(rng.uniform_open()));
                angular[k].s.iter().map(|&s| s * r).collect()
            }
        }
    }

    /// One jump from the normalised restriction to `lo <= |y| < hi`.
    pub fn sample_jump_in_shell(&self, lo: T, hi: T, rng: &mut Stream) -> Vec<T> {
        match self {
            JumpMeasure::FiniteAtomic { atoms } => {
                let w: Vec<f64> = atoms
                    .iter()
                    .map(|a| {
                        let r = norm_sq(&a.y).sqrt();
                        if r >= lo && r < hi {
                            a.w.f64()
                        } else {
                            0.0
                        }
                    })
                    .collect();
                atoms[rng.categorical(&w)].y.clone()
            }
            JumpMeasure::StarShaped { angular, radial } => {
                let levels: Vec<(T, T)> = radial
                    .iter()
                    .map(|r| {
                        let a = lo.max(r.truncation);
                        let top = if a < hi { r.tail(a) } else { T::zero() };
                        (r.tail(hi), top)
                    })
                    .collect();
                let w: Vec<f64> = angular
                    .iter()
                    .zip(&levels)
                    .map(|(a, (b, t))| (a.omega * (*t - *b)).f64())
                    .collect();
                let k = rng.categorical(&w);
                let (b, t) = levels[k];
                let u = b + (t - b) * T::of(rng.uniform_open());
                let r = radial[k].inverse_tail(u);
                angular[k].s.iter().map(|&s| s * r).collect()
            }
        }
    }

    /// Restriction to `lo <= |y| < hi`.
    pub fn restrict(&self, lo: T, hi: T) -> Result<Self> {
        Ok(match self {
            JumpMeasure::FiniteAtomic { atoms } => JumpMeasure::FiniteAtomic {
                atoms: atoms
                    .iter()
                    .filter(|a| {
                        let r = norm_sq(&a.y).sqrt();
                        r >= lo && r < hi
                    })
                    .cloned()
                    .collect(),
            },
            JumpMeasure::StarShaped { angular, radial } => {
                let mut radial_out = Vec::with_capacity(radial.len());
                for r in radial {
                    let mut t = r.clone();
                    if hi.is_finite() {
                        t = t.with_cut(hi);
                    }
                    let eps = t.truncation.max(lo);
                    radial_out.push(t.with_truncation(eps)?);
                }
                JumpMeasure::StarShaped {
                    angular: angular.clone(),
                    radial: radial_out,
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_origin_atom_and_bad_angles() {
        assert!(JumpMeasure::atomic(vec![(vec![0.0], 1.0)]).is_err());
        let tail = RadialTail::exponential(1.0, 1.0).unwrap();
        assert!(JumpMeasure::star(vec![(vec![0.5, 0.5], 1.0)], vec![tail]).is_err());
    }

    #[test]
    fn star_moments_combine_angles() {
        let tail = RadialTail::exponential(1.0f64, 1.0).unwrap();
        let m = JumpMeasure::star(
            vec![(vec![1.0], 2.0), (vec![-1.0], 1.0)],
            vec![tail.clone(), tail],
        )
        .unwrap();
        assert!((m.total_mass() - 3.0).abs() < 1e-14);
        assert!((m.mean(1).unwrap()[0] - 1.0).abs() < 1e-10);
        assert!((m.second_moment().unwrap() - 6.0).abs() < 1e-9);
    }

    #[test]
    fn restriction_partitions_mass() {
        let tail = RadialTail::power(1.0, 0.5, Some(10.0), 1e-3).unwrap();
        let m = JumpMeasure::star(vec![(vec![1.0], 1.0)], vec![tail]).unwrap();
        let small = m.restrict(0.0, 1.0).unwrap();
        let large = m.restrict(1.0, f64::INFINITY).unwrap();
        let total = m.total_mass();
        assert!((small.total_mass() + large.total_mass() - total).abs() < 1e-10);
        for z in [0.01, 0.5, 1.0, 2.0, 9.0] {
            let sum = small.norm_tail(z) + large.norm_tail(z);
            assert!((sum - m.norm_tail(z)).abs() < 1e-8);
        }
    }
}
