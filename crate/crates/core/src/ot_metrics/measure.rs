use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Weighted point cloud in `R^d`: the discrete stand-in for a law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct EmpiricalMeasure<T> {
    dim: usize,
    /// Row-major `N × d`.
    points: Vec<T>,
    weights: Vec<T>,
}

fn weight_tol<T: Real>(n: usize) -> T {
    T::of(1e-12).max(T::epsilon() * T::of(4.0) * T::count(n.max(1)))
}

impl<T: Real> EmpiricalMeasure<T> {
    pub fn new(dim: usize, points: Vec<T>, weights: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("dimension must be positive".into()));
        }
        if points.len() != dim * weights.len() {
            return Err(Error::Dimension {
                expected: dim * weights.len(),
                got: points.len(),
            });
        }
        if weights.is_empty() {
            return Err(Error::Domain("empirical measure is empty".into()));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("point coordinates must be finite".into()));
        }
        if weights.iter().any(|&w| !(w >= T::zero()) || !w.is_finite()) {
            return Err(Error::Domain("weights must be nonnegative and finite".into()));
        }
        let total: T = weights.iter().copied().sum();
        if (total - T::one()).abs() > weight_tol::<T>(weights.len()) {
            return Err(Error::Domain(format!("weights sum to {total}, not 1")));
        }
        Ok(Self {
            dim,
            points,
            weights,
        })
    }

    /// Equal weights `1/N`.
    pub fn uniform(dim: usize, points: Vec<T>) -> Result<Self> {
        if dim == 0 || points.len() % dim != 0 {
            return Err(Error::Domain("point buffer is not a multiple of the dimension".into()));
        }
        let n = points.len() / dim;
        if n == 0 {
            return Err(Error::Domain("empirical measure is empty".into()));
        }
        let w = T::one() / T::count(n);
        Self::new(dim, points, vec![w; n])
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Domain("rows have different lengths".into()));
        }
        Self::uniform(dim, rows.concat())
    }

    /// Normalises nonnegative masses to a probability measure.
    pub fn from_masses(dim: usize, points: Vec<T>, masses: Vec<T>) -> Result<Self> {
        let total: T = masses.iter().copied().sum();
        if !(total > T::zero()) {
            return Err(Error::Domain("total mass must be positive".into()));
        }
        let mut w: Vec<T> = masses.iter().map(|&m| m / total).collect();
        // put the rounding residue on the heaviest atom
        let s: T = w.iter().copied().sum();
        if let Some(k) = (0..w.len()).max_by(|&a, &b| w[a].partial_cmp(&w[b]).unwrap_or(Ordering::Equal)) {
            w[k] += T::one() - s;
        }
        Self::new(dim, points, w)
    }

    pub fn dirac(point: Vec<T>) -> Self {
        Self {
            dim: point.len(),
            points: point,
            weights: vec![T::one()],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[T] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn weight(&self, i: usize) -> T {
        self.weights[i]
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[T], T)> + '_ {
        self.points.chunks(self.dim).zip(self.weights.iter().copied())
    }

    pub fn is_uniform(&self) -> bool {
        let w0 = self.weights[0];
        self.weights.iter().all(|&w| w == w0)
    }

    pub fn mean(&self) -> Vec<T> {
        let mut m = vec![T::zero(); self.dim];
        for (x, w) in self.iter() {
            for (mi, &xi) in m.iter_mut().zip(x) {
                *mi += w * xi;
            }
        }
        m
    }

    /// Per-coordinate variance.
    pub fn variance(&self) -> Vec<T> {
        let m = self.mean();
        let mut v = vec![T::zero(); self.dim];
        for (x, w) in self.iter() {
            for k in 0..self.dim {
                v[k] += w * (x[k] - m[k]) * (x[k] - m[k]);
            }
        }
        v
    }

    pub fn second_moment(&self) -> T {
        self.iter()
            .map(|(x, w)| w * x.iter().map(|&v| v * v).sum::<T>())
            .sum()
    }

    /// `∫ f dμ`.
    pub fn expect(&self, f: impl Fn(&[T]) -> T) -> T {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }

    pub fn translated(&self, v: &[T]) -> Self {
        let points = self
            .points
            .chunks(self.dim)
            .flat_map(|x| x.iter().zip(v).map(|(&a, &b)| a + b).collect::<Vec<_>>())
            .collect();
        Self {
            dim: self.dim,
            points,
            weights: self.weights.clone(),
        }
    }

    pub fn map_points(&self, f: impl Fn(&[T]) -> Vec<T>) -> Result<Self> {
        let points: Vec<T> = self.points.chunks(self.dim).flat_map(f).collect();
        Self::new(self.dim, points, self.weights.clone())
    }

    /// Lexicographically sorted support with duplicate points merged and
    /// zero-weight points dropped. Two measures are equal iff their canonical
    /// forms coincide.
    pub fn canonical(&self) -> Self {
        let mut idx: Vec<usize> = (0..self.len()).filter(|&i| self.weights[i] > T::zero()).collect();
        idx.sort_by(|&a, &b| lex(self.point(a), self.point(b)));
        let mut points = Vec::new();
        let mut weights: Vec<T> = Vec::new();
        let mut last: Option<usize> = None;
        for i in idx {
            match last {
                Some(j) if self.point(j) == self.point(i) => {
                    *weights.last_mut().unwrap() += self.weights[i];
                }
                _ => {
                    points.extend_from_slice(self.point(i));
                    weights.push(self.weights[i]);
                    last = Some(i);
                }
            }
        }
        Self {
            dim: self.dim,
            points,
            weights,
        }
    }

    pub fn to_f64(&self) -> EmpiricalMeasure<f64> {
        EmpiricalMeasure {
            dim: self.dim,
            points: self.points.iter().map(|v| v.f64()).collect(),
            weights: self.weights.iter().map(|v| v.f64()).collect(),
        }
    }
}

pub(crate) fn lex<T: Real>(a: &[T], b: &[T]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).unwrap_or(Ordering::Equal) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_weights() {
        assert!(EmpiricalMeasure::new(1, vec![0.0, 1.0], vec![0.5, 0.6]).is_err());
        assert!(EmpiricalMeasure::new(1, vec![0.0, 1.0], vec![1.5, -0.5]).is_err());
        assert!(EmpiricalMeasure::new(1, vec![f64::NAN], vec![1.0]).is_err());
        assert!(EmpiricalMeasure::<f64>::new(1, vec![], vec![]).is_err());
    }

    #[test]
    fn canonical_merges_duplicates() {
        let a = EmpiricalMeasure::new(1, vec![1.0, 0.0, 1.0], vec![0.25, 0.5, 0.25]).unwrap();
        let c = a.canonical();
        assert_eq!(c.points(), &[0.0, 1.0]);
        assert_eq!(c.weights(), &[0.5, 0.5]);
    }
}
