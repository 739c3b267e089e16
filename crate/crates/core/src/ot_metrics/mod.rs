//! Wasserstein-Kantorovich distances between empirical measures and between
//! (possibly infinite) Lévy measures, each returned with the explicit
//! coupling that certifies it.

mod assignment;
mod dual;
mod entropic;
mod io;
mod measure;
mod path;
mod shell;
mod simplex;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::scalar::{dist_pow, Real};

pub use dual::{clipped_norm_family, coordinate_family, w1_dual_lower_bound, DualBound, TestFn};
pub use entropic::{w_p_entropic, EntropicConfig, EntropicEstimate};
pub use io::{read_cloud_csv, write_cloud_csv};
pub use measure::EmpiricalMeasure;
pub use path::{w_pt_path, Pairing, PathDistance};
pub use shell::{shell_couple, ShellCoupling, ShellDecomposition, ShellLayer};

pub(crate) use measure::lex;
pub(crate) use shell::layer_pair_cost;

/// Coupling of two discrete measures with its transport cost `Σ m |x_i - y_j|^p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct TransportPlan<T> {
    pub entries: Vec<(usize, usize, T)>,
    pub cost: T,
    pub order: T,
}

impl<T: Real> TransportPlan<T> {
    /// `cost^{1/p}`.
    pub fn distance(&self) -> T {
        self.cost.max(T::zero()).powf(T::one() / self.order)
    }

    /// Checks marginals and recomputes the cost. Returns the worst marginal
    /// violation and the cost discrepancy.
    pub fn check(&self, a: &EmpiricalMeasure<T>, b: &EmpiricalMeasure<T>) -> (T, T) {
        let mut rows = vec![T::zero(); a.len()];
        let mut cols = vec![T::zero(); b.len()];
        let mut cost = T::zero();
        for &(i, j, m) in &self.entries {
            rows[i] += m;
            cols[j] += m;
            cost += m * dist_pow(a.point(i), b.point(j), self.order);
        }
        let row_err = rows
            .iter()
            .zip(a.weights())
            .fold(T::zero(), |e, (&r, &w)| e.max((r - w).abs()));
        let col_err = cols
            .iter()
            .zip(b.weights())
            .fold(T::zero(), |e, (&c, &w)| e.max((c - w).abs()));
        (row_err.max(col_err), (cost - self.cost).abs())
    }

    /// Target index receiving the most mass from each source index.
    pub fn as_pairing(&self, n: usize) -> Vec<usize> {
        let mut best = vec![(T::neg_infinity(), 0usize); n];
        for &(i, j, m) in &self.entries {
            if m > best[i].0 {
                best[i] = (m, j);
            }
        }
        best.into_iter().map(|(_, j)| j).collect()
    }
}

fn check_order<T: Real>(p: T) -> Result<()> {
    if p >= T::one() && p.is_finite() {
        Ok(())
    } else {
        Err(param("p", format!("order must be >= 1, got {p}")))
    }
}

fn check_dims<T: Real>(a: &EmpiricalMeasure<T>, b: &EmpiricalMeasure<T>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(())
}

/// Comonotone (sorted quantile) plan between two 1D measures.
pub fn comonotone_plan_1d<T: Real>(p: T, a: &EmpiricalMeasure<T>, b: &EmpiricalMeasure<T>) -> Result<TransportPlan<T>> {
    check_order(p)?;
    for m in [a, b] {
        if m.dim() != 1 {
            return Err(Error::Dimension {
                expected: 1,
                got: m.dim(),
            });
        }
    }
    let order = |m: &EmpiricalMeasure<T>| {
        let mut idx: Vec<usize> = (0..m.len()).collect();
        idx.sort_by(|&i, &j| {
            m.point(i)[0]
                .partial_cmp(&m.point(j)[0])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(i.cmp(&j))
        });
        idx
    };
    let ia = order(a);
    let ib = order(b);
    let mut entries = Vec::with_capacity(a.len() + b.len());
    let mut cost = T::zero();
    let (mut i, mut j) = (0, 0);
    let mut ra = a.weight(ia[0]);
    let mut rb = b.weight(ib[0]);
    while i < a.len() && j < b.len() {
        let m = ra.min(rb);
        if m > T::zero() {
            entries.push((ia[i], ib[j], m));
            cost += m * (a.point(ia[i])[0] - b.point(ib[j])[0]).abs().powf(p);
        }
        let (adv_a, adv_b) = (ra <= rb, rb <= ra);
        ra -= m;
        rb -= m;
        if adv_a {
            i += 1;
            if i < a.len() {
                ra = a.weight(ia[i]);
            }
        }
        if adv_b {
            j += 1;
            if j < b.len() {
                rb = b.weight(ib[j]);
            }
        }
    }
    Ok(TransportPlan { entries, cost, order: p })
}

/// Exact `W_p` on the line via the comonotone coupling.
pub fn w_p_1d<T: Real>(p: T, a: &EmpiricalMeasure<T>, b: &EmpiricalMeasure<T>) -> Result<T> {
    Ok(comonotone_plan_1d(p, a, b)?.distance())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactConfig {
    /// Largest `N·M` accepted by the exact solvers.
    pub max_cells: usize,
}

impl Default for ExactConfig {
    fn default() -> Self {
        Self { max_cells: 512 * 512 }
    }
}

/// Exact discrete `W_p` with an optimal plan: Hungarian assignment when both
/// measures are uniform with the same size, transportation simplex otherwise.
pub fn w_p_exact<T: Real>(
    p: T,
    a: &EmpiricalMeasure<T>,
    b: &EmpiricalMeasure<T>,
) -> Result<(T, TransportPlan<T>)> {
    w_p_exact_with(p, a, b, ExactConfig::default())
}

pub fn w_p_exact_with<T: Real>(
    p: T,
    a: &EmpiricalMeasure<T>,
    b: &EmpiricalMeasure<T>,
    cfg: ExactConfig,
) -> Result<(T, TransportPlan<T>)> {
    check_order(p)?;
    check_dims(a, b)?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain("empty measure".into()));
    }
    if a.len() * b.len() > cfg.max_cells {
        return Err(Error::Capacity {
            rows: a.len(),
            cols: b.len(),
            cap: cfg.max_cells,
        });
    }
    let cost = |i: usize, j: usize| dist_pow(a.point(i), b.point(j), p);
    let plan = if a.len() == b.len() && a.is_uniform() && b.is_uniform() {
        let n = a.len();
        let col = assignment::solve(n, cost);
        let w = a.weight(0);
        let entries: Vec<_> = col.iter().enumerate().map(|(i, &j)| (i, j, w)).collect();
        let total = entries.iter().map(|&(i, j, m)| m * cost(i, j)).sum();
        TransportPlan {
            entries,
            cost: total,
            order: p,
        }
    } else {
        let sol = simplex::solve(a.weights(), b.weights(), cost)?;
        // pivoting leaves flows of a few ulps on arbitrary cells; their
        // cost would surface as ~1e-8 after the p-th root
        let dust = T::of(1e-14);
        let entries: Vec<_> = sol.flows.into_iter().filter(|e| e.2 > dust).collect();
        let total = entries.iter().map(|&(i, j, m)| m * cost(i, j)).sum();
        TransportPlan {
            entries,
            cost: total,
            order: p,
        }
    };
    Ok((plan.distance(), plan))
}

/// Best available `W_p` between two clouds: exact on the line or below the
/// exact cap, otherwise exact between deterministic equal-size subsamples.
pub fn w_p_estimate<T: Real>(p: T, a: &EmpiricalMeasure<T>, b: &EmpiricalMeasure<T>) -> Result<T> {
    if a.dim() == 1 {
        return w_p_1d(p, a, b);
    }
    let cap = ExactConfig::default().max_cells;
    if a.len() * b.len() <= cap {
        return Ok(w_p_exact(p, a, b)?.0);
    }
    let k = 512usize.min(a.len()).min(b.len());
    let sub = |m: &EmpiricalMeasure<T>| -> Result<EmpiricalMeasure<T>> {
        let stride = m.len() as f64 / k as f64;
        let pts: Vec<T> = (0..k)
            .flat_map(|i| m.point((i as f64 * stride) as usize).to_vec())
            .collect();
        EmpiricalMeasure::uniform(m.dim(), pts)
    };
    Ok(w_p_exact(p, &sub(a)?, &sub(b)?)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m1(pts: &[f64]) -> EmpiricalMeasure<f64> {
        EmpiricalMeasure::uniform(1, pts.to_vec()).unwrap()
    }

    #[test]
    fn one_d_examples() {
        let a = m1(&[0.3, -1.0, 2.0]);
        assert_eq!(w_p_1d(2.0, &a, &a).unwrap(), 0.0);
        assert_eq!(w_p_1d(2.0, &m1(&[0.0]), &m1(&[1.0])).unwrap(), 1.0);
        // both vertex plans of the 2x2 problem: {0->1, 2->3} costs 1, {0->3, 2->1} costs 2
        assert_eq!(w_p_1d(1.0, &m1(&[0.0, 2.0]), &m1(&[1.0, 3.0])).unwrap(), 1.0);
    }

    #[test]
    fn one_d_rejects_bad_input() {
        let a = EmpiricalMeasure::uniform(2, vec![0.0, 0.0]).unwrap();
        assert!(matches!(w_p_1d(1.0, &a, &a), Err(Error::Dimension { .. })));
        assert!(matches!(w_p_1d(0.5, &m1(&[0.0]), &m1(&[0.0])), Err(Error::Parameter { .. })));
    }

    #[test]
    fn exact_translation_is_shift_norm() {
        let a = EmpiricalMeasure::uniform(2, vec![0.0f64, 0.0, 1.0, 0.5, -0.3, 2.0]).unwrap();
        let v = [0.3, -0.4];
        let (w, plan) = w_p_exact(2.0, &a, &a.translated(&v)).unwrap();
        assert!((w - 0.5).abs() < 1e-10);
        let (merr, cerr) = plan.check(&a, &a.translated(&v));
        assert!(merr < 1e-12 && cerr < 1e-12);
    }

    #[test]
    fn capacity_error_mentions_entropic() {
        let a = EmpiricalMeasure::uniform(1, (0..600).map(|i| i as f64).collect()).unwrap();
        let err = w_p_exact(1.0, &a, &a).unwrap_err();
        assert!(err.to_string().contains("w_p_entropic"));
    }

    #[test]
    fn general_weights_use_simplex() {
        let a = EmpiricalMeasure::new(1, vec![0.0f64, 1.0, 5.0], vec![0.2, 0.3, 0.5]).unwrap();
        let b = EmpiricalMeasure::new(1, vec![0.5, 4.0], vec![0.6, 0.4]).unwrap();
        let (w, plan) = w_p_exact(2.0, &a, &b).unwrap();
        let w1d = w_p_1d(2.0, &a, &b).unwrap();
        assert!((w - w1d).abs() < 1e-12, "{w} vs {w1d}");
        let (merr, cerr) = plan.check(&a, &b);
        assert!(merr < 1e-12 && cerr < 1e-12);
    }
}
