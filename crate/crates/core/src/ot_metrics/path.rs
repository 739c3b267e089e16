use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euler_scheme::PathEnsemble;
use crate::scalar::{dist_pow, Real};

/// Trajectory pairing between two ensembles of equal size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    Identity,
    /// Path `i` of the first ensemble is paired with path `perm[i]`.
    Permutation(Vec<usize>),
}

impl Pairing {
    fn target(&self, i: usize) -> usize {
        match self {
            Pairing::Identity => i,
            Pairing::Permutation(p) => p[i],
        }
    }
}

/// Path-space distances under an explicit pairing. Both are upper bounds
/// for the respective Wasserstein distances of the grid marginals and of
/// the path laws; `sup_outside >= sup_inside` always.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PathDistance<T> {
    /// `(E sup_t |X₁(t) - X₂(t)|^p)^{1/p}` over the grid.
    pub sup_outside: T,
    /// `sup_t (E |X₁(t) - X₂(t)|^p)^{1/p}`.
    pub sup_inside: T,
}

pub fn w_pt_path<T: Real>(
    a: &PathEnsemble<T>,
    b: &PathEnsemble<T>,
    p: T,
    pairing: &Pairing,
) -> Result<PathDistance<T>> {
    if !(p >= T::one()) {
        return Err(crate::error::param("p", "order must be >= 1"));
    }
    if a.dim != b.dim {
        return Err(Error::Dimension {
            expected: a.dim,
            got: b.dim,
        });
    }
    if a.times.len() != b.times.len()
        || a.times.iter().zip(&b.times).any(|(s, t)| (*s - *t).abs() > T::of(1e-12) * T::one().max(s.abs()))
    {
        return Err(Error::Alignment("ensembles live on different time grids".into()));
    }
    let n = a.particles();
    if b.particles() != n {
        return Err(Error::Alignment(format!(
            "ensembles have {n} and {} paths",
            b.particles()
        )));
    }
    if let Pairing::Permutation(perm) = pairing {
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&j| j >= n || std::mem::replace(&mut seen[j], true)) {
            return Err(Error::Pairing("pairing is not a permutation of the paths".into()));
        }
    }
    let mut per_time = vec![T::zero(); a.times.len()];
    let mut outside = T::zero();
    for i in 0..n {
        let j = pairing.target(i);
        let w = a.weights[i];
        let mut sup = T::zero();
        for (k, acc) in per_time.iter_mut().enumerate() {
            let c = dist_pow(a.state(k, i), b.state(k, j), p);
            *acc += w * c;
            sup = sup.max(c);
        }
        outside += w * sup;
    }
    let inside = per_time.into_iter().fold(T::zero(), T::max);
    let root = T::one() / p;
    Ok(PathDistance {
        sup_outside: outside.powf(root),
        sup_inside: inside.powf(root),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(value: f64, n: usize) -> PathEnsemble<f64> {
        PathEnsemble {
            dim: 1,
            tau: 0.5,
            times: vec![0.0, 0.5, 1.0],
            states: vec![vec![value; n]; 3],
            weights: vec![1.0 / n as f64; n],
            cache: None,
        }
    }

    #[test]
    fn constant_paths() {
        let a = constant(0.0, 4);
        let b = constant(1.0, 4);
        let d = w_pt_path(&a, &b, 2.0, &Pairing::Identity).unwrap();
        assert_eq!(d.sup_outside, 1.0);
        assert_eq!(w_pt_path(&a, &a, 2.0, &Pairing::Identity).unwrap().sup_outside, 0.0);
    }

    #[test]
    fn grid_mismatch() {
        let a = constant(0.0, 4);
        let mut b = constant(0.0, 4);
        b.times[1] = 0.4;
        assert!(matches!(w_pt_path(&a, &b, 2.0, &Pairing::Identity), Err(Error::Alignment(_))));
    }
}
