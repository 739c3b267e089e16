//! Unit-mass shell layers of a Lévy measure and the layer-by-layer product
//! coupling between two such decompositions.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::levy_core::JumpMeasure;
use crate::numerics::bisect;
use crate::scalar::{dist_pow, dot, norm_sq, Real};

use super::EmpiricalMeasure;

/// Restriction of a measure to `lo <= |y| <= hi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ShellLayer<T> {
    pub lo: T,
    pub hi: T,
    pub mass: T,
    /// `∫ y` over the layer (unnormalised).
    pub first_moment: Vec<T>,
    /// `∫ |y|²` over the layer (unnormalised).
    pub second_moment: T,
    /// Normalised quadrature nodes of the layer.
    pub nodes: EmpiricalMeasure<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ShellDecomposition<T> {
    pub source: String,
    pub dim: usize,
    pub total_mass: T,
    /// Outermost layer first; radii decrease towards the origin.
    pub layers: Vec<ShellLayer<T>>,
}

/// Quantile nodes per angular atom and layer.
const NODES_PER_ATOM: usize = 64;

impl<T: Real> ShellDecomposition<T> {
    /// Finite atomic measures form a single layer carrying their total mass;
    /// star-shaped measures are cut into unit-mass shells from the outside in,
    /// the innermost shell carrying the fractional remainder.
    pub fn of(measure: &JumpMeasure<T>, dim: usize, source: impl Into<String>) -> Result<Self> {
        measure.validate(dim)?;
        let source = source.into();
        let total_mass = measure.total_mass();
        let mut layers = Vec::new();
        match measure {
            JumpMeasure::FiniteAtomic { atoms } => {
                if !atoms.is_empty() {
                    let radii: Vec<T> = atoms.iter().map(|a| norm_sq(&a.y).sqrt()).collect();
                    let mut first = vec![T::zero(); dim];
                    let mut second = T::zero();
                    for a in atoms {
                        for (f, &y) in first.iter_mut().zip(&a.y) {
                            *f += a.w * y;
                        }
                        second += a.w * norm_sq(&a.y);
                    }
                    let nodes = EmpiricalMeasure::from_masses(
                        dim,
                        atoms.iter().flat_map(|a| a.y.clone()).collect(),
                        atoms.iter().map(|a| a.w).collect(),
                    )?;
                    layers.push(ShellLayer {
                        lo: radii.iter().fold(T::infinity(), |a, &b| a.min(b)),
                        hi: radii.iter().fold(T::zero(), |a, &b| a.max(b)),
                        mass: total_mass,
                        first_moment: first,
                        second_moment: second,
                        nodes,
                    });
                }
            }
            JumpMeasure::StarShaped { angular, radial } => {
                let inner = radial
                    .iter()
                    .map(|r| r.truncation.max(r.support().0))
                    .fold(T::infinity(), |a, b| a.min(b));
                let outer = radial
                    .iter()
                    .map(|r| r.support().1)
                    .fold(T::zero(), |a, b| a.max(b));
                let whole = total_mass.floor().to_usize().unwrap_or(usize::MAX);
                if whole > 1_000_000 {
                    return Err(Error::Domain(format!(
                        "measure has {whole} unit shells; raise the truncation"
                    )));
                }
                let mut hi = T::infinity();
                let mut boundaries = Vec::with_capacity(whole + 1);
                for n in 1..=whole {
                    let level = T::count(n);
                    if level >= total_mass {
                        break;
                    }
                    let top = if outer.is_finite() { outer } else { upper_radius(measure, inner, level) };
                    let eps = bisect(
                        |z| measure.norm_tail(z) - level,
                        inner,
                        top,
                        |_, r| r.abs() <= T::of(1e-13) * level,
                    );
                    boundaries.push(eps);
                }
                boundaries.push(inner);
                for &lo in &boundaries {
                    let mut mass = T::zero();
                    let mut first = vec![T::zero(); dim];
                    let mut second = T::zero();
                    let mut pts = Vec::new();
                    let mut wts = Vec::new();
                    for (a, r) in angular.iter().zip(radial) {
                        let a_lo = lo.max(r.truncation);
                        if a_lo >= hi {
                            continue;
                        }
                        let top = r.tail(a_lo);
                        let bot = if hi.is_finite() { r.tail(hi) } else { T::zero() };
                        let m = a.omega * (top - bot);
                        if m <= T::zero() {
                            continue;
                        }
                        mass += m;
                        let r1 = r.moment_between(T::one(), a_lo, hi)?;
                        second += a.omega * r.moment_between(T::of(2.0), a_lo, hi)?;
                        for (f, &s) in first.iter_mut().zip(&a.s) {
                            *f += a.omega * r1 * s;
                        }
                        for k in 0..NODES_PER_ATOM {
                            let u = bot + (top - bot) * (T::count(k) + T::of(0.5)) / T::count(NODES_PER_ATOM);
                            let rad = r.inverse_tail(u);
                            pts.extend(a.s.iter().map(|&s| s * rad));
                            wts.push(m / T::count(NODES_PER_ATOM));
                        }
                    }
                    if mass > T::zero() {
                        layers.push(ShellLayer {
                            lo,
                            hi,
                            mass,
                            first_moment: first,
                            second_moment: second,
                            nodes: EmpiricalMeasure::from_masses(dim, pts, wts)?,
                        });
                    }
                    hi = lo;
                }
            }
        }
        Ok(Self {
            source,
            dim,
            total_mass,
            layers,
        })
    }
}

fn upper_radius<T: Real>(m: &JumpMeasure<T>, inner: T, level: T) -> T {
    let mut top = inner.max(T::one());
    while m.norm_tail(top) > level * T::of(0.5) && top < T::max_value() / T::of(4.0) {
        top = top * T::of(2.0);
    }
    top
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ShellCoupling<T> {
    /// `(∬ |y₁ - y₂|^p dν)^{1/p}` for the layer product coupling.
    pub cost: T,
    pub order: T,
    pub left: ShellDecomposition<T>,
    pub right: ShellDecomposition<T>,
}

/// Contribution of one pair of layers: the two layers are padded with mass
/// at the origin to a common mass `M` and coupled by the product of their
/// normalisations, scaled by `M`.
pub(crate) fn layer_pair_cost<T: Real>(
    l: Option<&ShellLayer<T>>,
    r: Option<&ShellLayer<T>>,
    p: T,
    dim: usize,
) -> T {
    let ml = l.map_or(T::zero(), |x| x.mass);
    let mr = r.map_or(T::zero(), |x| x.mass);
    let big = ml.max(mr);
    if big == T::zero() {
        return T::zero();
    }
    if p == T::of(2.0) {
        let zero = vec![T::zero(); dim];
        let (s1, f1) = l.map_or((T::zero(), zero.as_slice()), |x| (x.second_moment, x.first_moment.as_slice()));
        let (s2, f2) = r.map_or((T::zero(), zero.as_slice()), |x| (x.second_moment, x.first_moment.as_slice()));
        return (s1 + s2 - T::of(2.0) * dot(f1, f2) / big).max(T::zero());
    }
    let origin = vec![T::zero(); dim];
    let side = |x: Option<&ShellLayer<T>>, m: T| -> Vec<(Vec<T>, T)> {
        let mut out: Vec<(Vec<T>, T)> = x
            .map(|layer| {
                layer
                    .nodes
                    .iter()
                    .map(|(pt, w)| (pt.to_vec(), w * m / big))
                    .collect()
            })
            .unwrap_or_default();
        if m < big {
            out.push((origin.clone(), (big - m) / big));
        }
        out
    };
    let a = side(l, ml);
    let b = side(r, mr);
    let mut total = T::zero();
    for (ya, wa) in &a {
        for (yb, wb) in &b {
            total += *wa * *wb * dist_pow(ya, yb, p);
        }
    }
    big * total
}

/// Couples layer `n` of `ν₁` with layer `n` of `ν₂` by the product measure.
/// The cost is an upper bound on the extended `W_p(ν₁, ν₂)`.
pub fn shell_couple<T: Real>(
    nu1: &JumpMeasure<T>,
    nu2: &JumpMeasure<T>,
    dim: usize,
    p: T,
) -> Result<ShellCoupling<T>> {
    if !(p >= T::one()) {
        return Err(param("p", "order must be >= 1"));
    }
    for (k, m) in [nu1, nu2].into_iter().enumerate() {
        let mom = m.moment(p)?;
        if !mom.is_finite() {
            return Err(Error::Domain(format!("measure {} has infinite p-th moment", k + 1)));
        }
    }
    let left = ShellDecomposition::of(nu1, dim, "left")?;
    let right = ShellDecomposition::of(nu2, dim, "right")?;
    let n = left.layers.len().max(right.layers.len());
    let mut total = T::zero();
    for k in 0..n {
        total += layer_pair_cost(left.layers.get(k), right.layers.get(k), p, dim);
    }
    Ok(ShellCoupling {
        cost: total.powf(T::one() / p),
        order: p,
        left,
        right,
    })
}
