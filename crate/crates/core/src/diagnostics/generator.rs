//! Test functions and pointwise application of Lévy generators.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::euler_scheme::TheoryOrder;
use crate::levy_core::{JumpMeasure, LevyTriplet};
use crate::numerics::integrate;

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A twice differentiable function with optional analytic derivatives.
/// Missing derivatives fall back to central differences.
#[derive(Clone)]
pub struct TestFunction {
    pub name: String,
    pub dim: usize,
    value: ScalarFn,
    grad: Option<VectorFn>,
    /// Row-major `d × d` Hessian.
    hess: Option<VectorFn>,
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("analytic_grad", &self.grad.is_some())
            .field("analytic_hess", &self.hess.is_some())
            .finish()
    }
}

impl TestFunction {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        hess: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            dim,
            value: Arc::new(value),
            grad: Some(Arc::new(grad)),
            hess: Some(Arc::new(hess)),
        }
    }

    /// Derivatives by finite differences only.
    pub fn from_value(name: impl Into<String>, dim: usize, value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            dim,
            value: Arc::new(value),
            grad: None,
            hess: None,
        }
    }

    pub fn one(dim: usize) -> Self {
        Self::new("one", dim, |_| 1.0, move |_| vec![0.0; dim], move |_| vec![0.0; dim * dim])
    }

    /// The coordinate `x_k`.
    pub fn coord(k: usize, dim: usize) -> Self {
        Self::new(
            format!("x{}", k + 1),
            dim,
            move |x| x[k],
            move |_| {
                let mut g = vec![0.0; dim];
                g[k] = 1.0;
                g
            },
            move |_| vec![0.0; dim * dim],
        )
    }

    /// `|x|²`.
    pub fn square(dim: usize) -> Self {
        Self::new(
            "square",
            dim,
            |x| x.iter().map(|v| v * v).sum(),
            |x| x.iter().map(|v| 2.0 * v).collect(),
            move |_| {
                let mut h = vec![0.0; dim * dim];
                for k in 0..dim {
                    h[k * dim + k] = 2.0;
                }
                h
            },
        )
    }

    /// `Σ cos x_k`, a bounded smooth function.
    pub fn cos_sum(dim: usize) -> Self {
        Self::new(
            "cos",
            dim,
            |x| x.iter().map(|v| v.cos()).sum(),
            |x| x.iter().map(|v| -v.sin()).collect(),
            move |x| {
                let mut h = vec![0.0; dim * dim];
                for k in 0..dim {
                    h[k * dim + k] = -x[k].cos();
                }
                h
            },
        )
    }

    /// `exp(-|x|²)`.
    pub fn gaussian_bump(dim: usize) -> Self {
        Self::new(
            "gauss_bump",
            dim,
            |x| (-x.iter().map(|v| v * v).sum::<f64>()).exp(),
            |x| {
                let e = (-x.iter().map(|v| v * v).sum::<f64>()).exp();
                x.iter().map(|v| -2.0 * v * e).collect()
            },
            move |x| {
                let e = (-x.iter().map(|v| v * v).sum::<f64>()).exp();
                let mut h = vec![0.0; dim * dim];
                for i in 0..dim {
                    for j in 0..dim {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        h[i * dim + j] = (4.0 * x[i] * x[j] - 2.0 * delta) * e;
                    }
                }
                h
            },
        )
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        self.grad.is_some() && self.hess.is_some()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        match &self.grad {
            Some(g) => g(x),
            None => fd_grad(&*self.value, x),
        }
    }

    pub fn hess(&self, x: &[f64]) -> Vec<f64> {
        match &self.hess {
            Some(h) => h(x),
            None => fd_hess(&*self.value, x),
        }
    }

    /// Compares analytic derivatives with central differences at the given
    /// points; returns the largest relative discrepancy or rejects the
    /// function if it exceeds `tol`.
    pub fn audit(&self, points: &[Vec<f64>], tol: f64) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for x in points {
            if x.len() != self.dim {
                return Err(Error::Dimension {
                    expected: self.dim,
                    got: x.len(),
                });
            }
            let v = self.value(x);
            if !v.is_finite() {
                return Err(Error::RejectedFunction(format!("{} is not finite at {x:?}", self.name)));
            }
            let pairs = [
                (self.grad(x), fd_grad(&*self.value, x)),
                (self.hess(x), fd_hess(&*self.value, x)),
            ];
            for (a, b) in pairs {
                for (u, w) in a.iter().zip(&b) {
                    worst = worst.max((u - w).abs() / (1.0 + w.abs()));
                }
            }
        }
        if worst > tol {
            return Err(Error::RejectedFunction(format!(
                "{}: analytic derivatives disagree with finite differences by {worst:e}",
                self.name
            )));
        }
        Ok(worst)
    }
}

fn fd_grad(f: &(dyn Fn(&[f64]) -> f64 + Send + Sync), x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|k| {
            let h = 1e-5 * (1.0 + x[k].abs());
            y[k] = x[k] + h;
            let up = f(&y);
            y[k] = x[k] - h;
            let down = f(&y);
            y[k] = x[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn fd_hess(f: &(dyn Fn(&[f64]) -> f64 + Send + Sync), x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let mut y = x.to_vec();
    let mut h = vec![0.0; d * d];
    let f0 = f(x);
    for i in 0..d {
        let hi = 1e-3 * (1.0 + x[i].abs());
        for j in i..d {
            let v = if i == j {
                y[i] = x[i] + hi;
                let up = f(&y);
                y[i] = x[i] - hi;
                let down = f(&y);
                y[i] = x[i];
                (up - 2.0 * f0 + down) / (hi * hi)
            } else {
                let hj = 1e-3 * (1.0 + x[j].abs());
                let mut eval = |si: f64, sj: f64| {
                    y[i] = x[i] + si * hi;
                    y[j] = x[j] + sj * hj;
                    let v = f(&y);
                    y[i] = x[i];
                    y[j] = x[j];
                    v
                };
                (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0)) / (4.0 * hi * hj)
            };
            h[i * d + j] = v;
            h[j * d + i] = v;
        }
    }
    h
}

/// `L f(x)` for the generator with triplet `t`. Second-order generators
/// compensate jumps (`f(x+y) - f(x) - ∇f·y`), first-order ones do not.
/// Star-shaped jump integrals use adaptive quadrature in log radius at
/// relative tolerance 1e-8.
pub fn apply_generator(t: &LevyTriplet<f64>, order: TheoryOrder, f: &TestFunction, x: &[f64]) -> Result<f64> {
    let d = t.dim;
    if x.len() != d || f.dim != d {
        return Err(Error::Dimension {
            expected: d,
            got: x.len().max(f.dim),
        });
    }
    let grad = f.grad(x);
    let mut out: f64 = t.drift.iter().zip(&grad).map(|(b, g)| b * g).sum();
    if t.has_gaussian_part() {
        let g = t.covariance();
        let h = f.hess(x);
        let mut tr = 0.0;
        for i in 0..d {
            for j in 0..d {
                tr += g[(i, j)] * h[i * d + j];
            }
        }
        out += 0.5 * tr;
    }
    let fx = f.value(x);
    let compensate = order == TheoryOrder::SecondMoment;
    let integrand = |y: &[f64]| -> f64 {
        let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
        let mut v = f.value(&z) - fx;
        if compensate {
            v -= grad.iter().zip(y).map(|(g, yk)| g * yk).sum::<f64>();
        }
        v
    };
    match &t.jumps {
        JumpMeasure::FiniteAtomic { atoms } => {
            for a in atoms {
                out += a.w * integrand(&a.y);
            }
        }
        JumpMeasure::StarShaped { angular, radial } => {
            for (a, r) in angular.iter().zip(radial) {
                let (slo, shi) = r.support();
                let lo = r.truncation.max(slo);
                let m = r.mass();
                if m <= 0.0 {
                    continue;
                }
                let hi = if shi.is_finite() {
                    shi
                } else {
                    r.inverse_tail(m * 1e-16).max(lo * 2.0)
                };
                if hi <= lo {
                    continue;
                }
                let g = |rad: f64| -> f64 {
                    let y: Vec<f64> = a.s.iter().map(|s| s * rad).collect();
                    integrand(&y) * r.density(rad)
                };
                let (v, _) = if lo > 0.0 {
                    integrate(|w: f64| {
                        let rad = w.exp();
                        g(rad) * rad
                    }, lo.ln(), hi.ln(), 1e-8, 1e-14)?
                } else {
                    integrate(g, lo, hi, 1e-8, 1e-14)?
                };
                out += a.omega * v;
            }
        }
    }
    Ok(out)
}
