use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy_core::{LevyCoupling, LevyTriplet};
use crate::ot_metrics::{w_p_estimate, EmpiricalMeasure};
use crate::scalar::{dist, Real};

/// Which moment theory the generator belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoryOrder {
    /// Compensated jumps, finite second moments, `W₂` metrics.
    SecondMoment,
    /// No Gaussian part, uncompensated jumps with finite first moments, `W₁`.
    FirstMoment,
}

impl TheoryOrder {
    pub fn p<T: Real>(self) -> T {
        match self {
            TheoryOrder::SecondMoment => T::of(2.0),
            TheoryOrder::FirstMoment => T::one(),
        }
    }
}

/// Coefficients `(x, μ) ↦ (√G, b, ν)` of a nonlinear Lévy-Khintchine
/// generator.
///
/// `freeze` turns the current empirical law into whatever summary `eval`
/// needs (a mean, a copy of the cloud, nothing); the scheme calls it once
/// per step, so all particles in a step see the same law.
pub trait CoefficientField<T: Real>: Send + Sync {
    type Snapshot: Send + Sync;

    fn dim(&self) -> usize;

    /// Declared Lipschitz constant in `(x, μ)`.
    fn kappa(&self) -> T;

    /// Declared uniform bound on `‖√G‖ + |b| + ∫|y|²ν`.
    fn bound(&self) -> T;

    fn order(&self) -> TheoryOrder {
        TheoryOrder::SecondMoment
    }

    fn depends_on_law(&self) -> bool {
        true
    }

    fn freeze(&self, mu: &EmpiricalMeasure<T>) -> Result<Self::Snapshot>;

    fn eval(&self, x: &[T], law: &Self::Snapshot) -> Result<LevyTriplet<T>>;
}

/// Worst observed ratio of coefficient distance to the declared Lipschitz
/// bound, over all audited pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FieldAudit<T> {
    pub pairs: usize,
    pub worst_ratio: T,
    pub worst_bound_statistic: T,
    pub passed: bool,
}

/// Spot-checks the Lipschitz and bound declarations on every pair of the
/// supplied `(x, μ)` samples. The jump distance is the cost of the automatic
/// coupling, an upper bound on the true distance, so a pass is conclusive
/// and a failure may be conservative.
pub fn audit_field<T: Real, F: CoefficientField<T>>(
    field: &F,
    samples: &[(Vec<T>, EmpiricalMeasure<T>)],
) -> Result<FieldAudit<T>> {
    let p = field.order().p::<T>();
    let slack = T::of(1.05);
    let mut evaluated = Vec::with_capacity(samples.len());
    let mut worst_bound = T::zero();
    for (x, mu) in samples {
        let snap = field.freeze(mu)?;
        let t = field.eval(x, &snap)?;
        let stat = t.bound_statistic()?;
        worst_bound = worst_bound.max(stat / field.bound());
        evaluated.push(t);
    }
    let mut worst = T::zero();
    let mut pairs = 0;
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let (x, mu) = &samples[i];
            let (z, eta) = &samples[j];
            let c = LevyCoupling::auto(evaluated[i].clone(), evaluated[j].clone())?;
            let ds = c.left.sigma.sub(&c.right.sigma).frobenius_sq().sqrt();
            let db = dist(&c.left.drift, &c.right.drift);
            let dn = c.joint_moment(p)?.powf(T::one() / p);
            let lhs = ds + db + dn;
            let rhs = field.kappa() * (dist(x, z) + w_p_estimate(p, mu, eta)?);
            pairs += 1;
            if lhs > T::zero() {
                let r = if rhs > T::zero() { lhs / rhs } else { T::infinity() };
                worst = worst.max(r);
            }
        }
    }
    if !worst.is_finite() && pairs > 0 {
        return Err(Error::Domain(
            "coefficients differ at identical (x, μ): field is not a function".into(),
        ));
    }
    Ok(FieldAudit {
        pairs,
        worst_ratio: worst,
        worst_bound_statistic: worst_bound,
        passed: worst <= slack && worst_bound < T::one(),
    })
}
