//! One-dimensional radial Lévy measures described by their tail functions
//! `z ↦ ν([z, ∞))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{bisect, integrate};
use crate::scalar::Real;

/// Unit-scale tail shapes. Physical tails are obtained by rescaling radii
/// (see [`RadialTail`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Real")]
pub enum RadialFamily<T> {
    /// `mass · e^{-z}`.
    Exponential { mass: T },
    /// Truncated stable: `coef · (z^{-alpha} - upper^{-alpha})` on `(0, upper)`.
    /// `upper = None` means no upper truncation.
    Power {
        coef: T,
        alpha: T,
        upper: Option<T>,
    },
    /// Uniform radial density of total `mass` on `[lo, hi]`.
    UniformShell { mass: T, lo: T, hi: T },
    /// Tabulated `(z, tail)` pairs joined by monotone cubic (Fritsch-Carlson)
    /// interpolation. Below the first knot there is no mass.
    Tabulated(TailTable<T>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", try_from = "TailKnots<T>", into = "TailKnots<T>")]
pub struct TailTable<T> {
    z: Vec<T>,
    tail: Vec<T>,
    slopes: Vec<T>,
}

/// Serialized form of a [`TailTable`]; deserializing re-runs the audit.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
struct TailKnots<T> {
    z: Vec<T>,
    tail: Vec<T>,
}

impl<T: Real> TryFrom<TailKnots<T>> for TailTable<T> {
    type Error = Error;

    fn try_from(k: TailKnots<T>) -> Result<Self> {
        Self::new(k.z, k.tail)
    }
}

impl<T: Real> From<TailTable<T>> for TailKnots<T> {
    fn from(t: TailTable<T>) -> Self {
        Self { z: t.z, tail: t.tail }
    }
}

impl<T: Real> TailTable<T> {
    /// Audits the table: knots strictly increasing, tail strictly decreasing,
    /// last tail value zero (a positive final value would be an atom).
    pub fn new(z: Vec<T>, tail: Vec<T>) -> Result<Self> {
        if z.len() != tail.len() || z.len() < 2 {
            return Err(Error::Domain(
                "tail table needs at least two (z, tail) pairs of equal length".into(),
            ));
        }
        if z[0] <= T::zero() {
            return Err(Error::Domain("tail table radii must be positive".into()));
        }
        for k in 1..z.len() {
            if z[k] <= z[k - 1] {
                return Err(Error::Hypothesis(format!(
                    "tail table radii not strictly increasing at knot {k}"
                )));
            }
            if tail[k] >= tail[k - 1] {
                return Err(Error::Hypothesis(format!(
                    "tail table is not strictly decreasing at knot {k} (flat segment or atom)"
                )));
            }
        }
        if *tail.last().unwrap() != T::zero() {
            return Err(Error::Hypothesis(
                "tail table must end at zero; a positive final value is an atom".into(),
            ));
        }
        let slopes = pchip_slopes(&z, &tail);
        Ok(Self { z, tail, slopes })
    }

    fn ensure_slopes(&self) -> std::borrow::Cow<'_, [T]> {
        if self.slopes.len() == self.z.len() {
            std::borrow::Cow::Borrowed(&self.slopes)
        } else {
            std::borrow::Cow::Owned(pchip_slopes(&self.z, &self.tail))
        }
    }

    fn segment(&self, x: T) -> usize {
        match self.z.iter().position(|&k| k > x) {
            Some(0) => 0,
            Some(k) => k - 1,
            None => self.z.len() - 2,
        }
    }

    fn eval(&self, x: T) -> T {
        let n = self.z.len();
        if x <= self.z[0] {
            return self.tail[0];
        }
        if x >= self.z[n - 1] {
            return T::zero();
        }
        let k = self.segment(x);
        let m = self.ensure_slopes();
        hermite(self.z[k], self.z[k + 1], self.tail[k], self.tail[k + 1], m[k], m[k + 1], x).0
    }

    fn density(&self, x: T) -> T {
        let n = self.z.len();
        if x < self.z[0] || x > self.z[n - 1] {
            return T::zero();
        }
        let k = self.segment(x);
        let m = self.ensure_slopes();
        -hermite(self.z[k], self.z[k + 1], self.tail[k], self.tail[k + 1], m[k], m[k + 1], x).1
    }

    fn inverse(&self, u: T) -> T {
        let n = self.z.len();
        if u >= self.tail[0] {
            return self.z[0];
        }
        if u <= T::zero() {
            return self.z[n - 1];
        }
        let k = (0..n - 1)
            .find(|&k| self.tail[k + 1] <= u)
            .unwrap_or(n - 2);
        bisect(|x| self.eval(x) - u, self.z[k], self.z[k + 1], |_, _| false)
    }

    pub fn knots(&self) -> (&[T], &[T]) {
        (&self.z, &self.tail)
    }
}

fn pchip_slopes<T: Real>(x: &[T], y: &[T]) -> Vec<T> {
    let n = x.len();
    let h: Vec<T> = (0..n - 1).map(|k| x[k + 1] - x[k]).collect();
    let delta: Vec<T> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    let mut m = vec![T::zero(); n];
    if n == 2 {
        m[0] = delta[0];
        m[1] = delta[0];
        return m;
    }
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > T::zero() {
            let w1 = T::of(2.0) * h[k] + h[k - 1];
            let w2 = h[k] + T::of(2.0) * h[k - 1];
            m[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    let end = |h0: T, h1: T, d0: T, d1: T| {
        let s = ((T::of(2.0) * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s.signum() != d0.signum() {
            T::zero()
        } else if d0.signum() != d1.signum() && s.abs() > T::of(3.0) * d0.abs() {
            T::of(3.0) * d0
        } else {
            s
        }
    };
    m[0] = end(h[0], h[1], delta[0], delta[1]);
    m[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    m
}

/// Cubic Hermite value and derivative on `[x0, x1]`.
fn hermite<T: Real>(x0: T, x1: T, y0: T, y1: T, m0: T, m1: T, x: T) -> (T, T) {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let two = T::of(2.0);
    let three = T::of(3.0);
    let h00 = two * t3 - three * t2 + T::one();
    let h10 = t3 - two * t2 + t;
    let h01 = -two * t3 + three * t2;
    let h11 = t3 - t2;
    let v = h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1;
    let d00 = T::of(6.0) * t2 - T::of(6.0) * t;
    let d10 = three * t2 - T::of(4.0) * t + T::one();
    let d01 = -d00;
    let d11 = three * t2 - two * t;
    let dv = (d00 * y0 + d01 * y1) / h + d10 * m0 + d11 * m1;
    (v, dv)
}

impl<T: Real> RadialFamily<T> {
    pub fn validate(&self) -> Result<()> {
        match self {
            RadialFamily::Exponential { mass } => {
                if !(*mass > T::zero() && mass.is_finite()) {
                    return Err(Error::Domain("exponential tail mass must be positive".into()));
                }
            }
            RadialFamily::Power { coef, alpha, upper } => {
                if !(*coef > T::zero() && *alpha > T::zero()) {
                    return Err(Error::Domain("power tail needs coef > 0 and alpha > 0".into()));
                }
                if let Some(u) = upper {
                    if *u <= T::zero() {
                        return Err(Error::Domain("power tail upper cut must be positive".into()));
                    }
                }
            }
            RadialFamily::UniformShell { mass, lo, hi } => {
                if !(*mass > T::zero() && *lo >= T::zero() && *hi > *lo) {
                    return Err(Error::Domain(
                        "uniform shell needs mass > 0 and 0 <= lo < hi".into(),
                    ));
                }
            }
            RadialFamily::Tabulated(t) => {
                TailTable::new(t.z.clone(), t.tail.clone())?;
            }
        }
        Ok(())
    }

    fn tail(&self, z: T) -> T {
        match self {
            RadialFamily::Exponential { mass } => *mass * (-z.max(T::zero())).exp(),
            RadialFamily::Power { coef, alpha, upper } => {
                let top = upper.map_or(T::zero(), |u| u.powf(-*alpha));
                match upper {
                    Some(u) if z >= *u => T::zero(),
                    _ if z <= T::zero() => T::infinity(),
                    _ => (*coef * (z.powf(-*alpha) - top)).max(T::zero()),
                }
            }
            RadialFamily::UniformShell { mass, lo, hi } => {
                if z <= *lo {
                    *mass
                } else if z >= *hi {
                    T::zero()
                } else {
                    *mass * (*hi - z) / (*hi - *lo)
                }
            }
            RadialFamily::Tabulated(t) => t.eval(z),
        }
    }

    fn density(&self, z: T) -> T {
        match self {
            RadialFamily::Exponential { mass } => {
                if z < T::zero() {
                    T::zero()
                } else {
                    *mass * (-z).exp()
                }
            }
            RadialFamily::Power { coef, alpha, upper } => {
                if z <= T::zero() || upper.is_some_and(|u| z > u) {
                    T::zero()
                } else {
                    *coef * *alpha * z.powf(-*alpha - T::one())
                }
            }
            RadialFamily::UniformShell { mass, lo, hi } => {
                if z < *lo || z > *hi {
                    T::zero()
                } else {
                    *mass / (*hi - *lo)
                }
            }
            RadialFamily::Tabulated(t) => t.density(z),
        }
    }

    fn inverse(&self, u: T) -> T {
        match self {
            RadialFamily::Exponential { mass } => (*mass / u).ln().max(T::zero()),
            RadialFamily::Power { coef, alpha, upper } => {
                let top = upper.map_or(T::zero(), |v| v.powf(-*alpha));
                (u / *coef + top).powf(-T::one() / *alpha)
            }
            RadialFamily::UniformShell { mass, lo, hi } => {
                if u >= *mass {
                    *lo
                } else {
                    *hi - u * (*hi - *lo) / *mass
                }
            }
            RadialFamily::Tabulated(t) => t.inverse(u),
        }
    }

    /// Closed interval carrying the mass (upper end may be infinite).
    fn support(&self) -> (T, T) {
        match self {
            RadialFamily::Exponential { .. } => (T::zero(), T::infinity()),
            RadialFamily::Power { upper, .. } => (T::zero(), upper.unwrap_or(T::infinity())),
            RadialFamily::UniformShell { lo, hi, .. } => (*lo, *hi),
            RadialFamily::Tabulated(t) => (t.z[0], *t.z.last().unwrap()),
        }
    }

    fn has_closed_inverse(&self) -> bool {
        !matches!(self, RadialFamily::Tabulated(_))
    }
}

/// A radial Lévy measure on `(0, ∞)`: a unit-scale family stretched by
/// `scale`, simulated only above `truncation` and optionally cut above `cut`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RadialTail<T> {
    pub family: RadialFamily<T>,
    pub scale: T,
    /// Smallest simulated jump radius.
    pub truncation: T,
    /// Mass above this radius is removed.
    pub cut: Option<T>,
}

impl<T: Real> RadialTail<T> {
    pub fn new(family: RadialFamily<T>, scale: T) -> Result<Self> {
        family.validate()?;
        if !(scale > T::zero() && scale.is_finite()) {
            return Err(Error::Domain("radial scale must be positive and finite".into()));
        }
        let truncation = family.support().0 * scale;
        let tail = Self {
            family,
            scale,
            truncation,
            cut: None,
        };
        Ok(tail)
    }

    pub fn exponential(mass: T, scale: T) -> Result<Self> {
        Self::new(RadialFamily::Exponential { mass }, scale)
    }

    /// Truncated-stable tail `coef · (z^{-alpha} - upper^{-alpha})`, simulated
    /// above `truncation`.
    pub fn power(coef: T, alpha: T, upper: Option<T>, truncation: T) -> Result<Self> {
        Self::new(RadialFamily::Power { coef, alpha, upper }, T::one())?.with_truncation(truncation)
    }

    pub fn uniform_shell(mass: T, lo: T, hi: T) -> Result<Self> {
        Self::new(RadialFamily::UniformShell { mass, lo, hi }, T::one())
    }

    pub fn tabulated(z: Vec<T>, tail: Vec<T>) -> Result<Self> {
        Self::new(RadialFamily::Tabulated(TailTable::new(z, tail)?), T::one())
    }

    pub fn with_truncation(mut self, eps: T) -> Result<Self> {
        if !(eps >= T::zero()) {
            return Err(Error::Domain("truncation must be nonnegative".into()));
        }
        self.truncation = eps;
        if !self.mass().is_finite() {
            return Err(Error::Domain(format!(
                "simulated mass above truncation {eps} is infinite"
            )));
        }
        Ok(self)
    }

    pub fn with_cut(mut self, cut: T) -> Self {
        self.cut = Some(self.cut.map_or(cut, |c| c.min(cut)));
        self
    }

    pub fn with_scale(mut self, scale: T) -> Self {
        let ratio = scale / self.scale;
        self.truncation *= ratio;
        self.cut = self.cut.map(|c| c * ratio);
        self.scale = scale;
        self
    }

    /// Chooses the truncation so that `∫_0^ε r² ν(dr)` is `tol` times the
    /// total second moment.
    pub fn truncated_by_second_moment(self, tol: T) -> Result<Self> {
        let total = self.moment_between(T::of(2.0), T::zero(), T::infinity())?;
        if !total.is_finite() || total <= T::zero() {
            return Err(Error::Domain("second moment must be finite and positive".into()));
        }
        let (lo, hi) = self.support();
        if lo > T::zero() {
            return self.with_truncation(lo);
        }
        let target = tol * total;
        let g = |ln_eps: T| -> T {
            let eps = ln_eps.exp();
            self.moment_between(T::of(2.0), T::zero(), eps)
                .unwrap_or(T::infinity())
                - target
        };
        let upper = if hi.is_finite() { hi.ln() } else { T::of(10.0) * self.scale.ln().max(T::one()) };
        let lower = T::of(-200.0);
        let ln_eps = bisect(g, lower, upper, |_, r| r.abs() <= T::of(1e-6) * target);
        self.with_truncation(ln_eps.exp())
    }

    fn cut_level(&self) -> T {
        match self.cut {
            Some(c) => self.family.tail(c / self.scale),
            None => T::zero(),
        }
    }

    /// `ν([z, ∞))`, untruncated below.
    pub fn tail(&self, z: T) -> T {
        if let Some(c) = self.cut {
            if z >= c {
                return T::zero();
            }
        }
        (self.family.tail(z / self.scale) - self.cut_level()).max(T::zero())
    }

    /// Inverse of [`tail`](Self::tail) on `(0, tail(0+))`.
    pub fn inverse_tail(&self, u: T) -> T {
        let mut z = self.scale * self.family.inverse(u + self.cut_level());
        if let Some(c) = self.cut {
            z = z.min(c);
        }
        z
    }

    pub fn density(&self, z: T) -> T {
        if self.cut.is_some_and(|c| z > c) {
            return T::zero();
        }
        self.family.density(z / self.scale) / self.scale
    }

    /// Support of the untruncated measure.
    pub fn support(&self) -> (T, T) {
        let (lo, hi) = self.family.support();
        let hi = hi * self.scale;
        (lo * self.scale, self.cut.map_or(hi, |c| c.min(hi)))
    }

    /// Simulated mass `ν([ε, ∞))`.
    pub fn mass(&self) -> T {
        self.tail(self.truncation)
    }

    pub fn has_closed_inverse(&self) -> bool {
        self.family.has_closed_inverse()
    }

    /// Radius distributed as the simulated measure normalised, from a uniform
    /// draw `v` in (0, 1).
    pub fn quantile(&self, v: T) -> T {
        self.inverse_tail(v * self.mass())
    }

    /// `∫_a^b r^k ν(dr)` over the full (untruncated) measure.
    pub fn moment_between(&self, k: T, a: T, b: T) -> Result<T> {
        let (slo, shi) = self.support();
        let lo = a.max(slo);
        let hi = b.min(shi);
        if hi <= lo {
            return Ok(T::zero());
        }
        match &self.family {
            RadialFamily::Power { coef, alpha, .. } => {
                // ∫ r^k c α (r/λ)^{-α-1} dr/λ = c α λ^α ∫ r^{k-α-1} dr
                let c = *coef * *alpha * self.scale.powf(*alpha);
                let e = k - *alpha;
                if e == T::zero() {
                    if lo == T::zero() || !hi.is_finite() {
                        return Err(Error::Domain(format!("moment of order {k} diverges")));
                    }
                    return Ok(c * (hi.ln() - lo.ln()));
                }
                if (e < T::zero() && lo == T::zero()) || (e > T::zero() && !hi.is_finite()) {
                    return Err(Error::Domain(format!(
                        "moment of order {k} diverges for power tail with alpha {alpha}"
                    )));
                }
                let top = if hi.is_finite() { hi.powf(e) } else { T::zero() };
                let bot = if lo > T::zero() { lo.powf(e) } else { T::zero() };
                Ok(c * (top - bot) / e)
            }
            RadialFamily::UniformShell { .. } => {
                let dens = self.density((lo + hi) / T::of(2.0));
                let k1 = k + T::one();
                Ok(dens * (hi.powf(k1) - lo.powf(k1)) / k1)
            }
            RadialFamily::Tabulated(t) => {
                let mut total = T::zero();
                for w in t.z.windows(2) {
                    let a = (w[0] * self.scale).max(lo);
                    let b = (w[1] * self.scale).min(hi);
                    if b > a {
                        let (v, _) = integrate(
                            |r| r.powf(k) * self.density(r),
                            a,
                            b,
                            T::of(1e-12),
                            T::zero(),
                        )?;
                        total += v;
                    }
                }
                Ok(total)
            }
            RadialFamily::Exponential { .. } => {
                // integrate in log radius; the tail beyond 200 scale units is < e^-150
                let hi = hi.min(self.scale * T::of(200.0));
                let lo_w = if lo > T::zero() {
                    lo.ln()
                } else {
                    self.scale.ln() + T::min_positive_value().ln() * T::of(0.9) / (k + T::one()).max(T::one())
                };
                if hi.ln() <= lo_w {
                    return Ok(T::zero());
                }
                let (v, _) = integrate(
                    |w: T| {
                        let r = w.exp();
                        r.powf(k + T::one()) * self.density(r)
                    },
                    lo_w,
                    hi.ln(),
                    T::of(1e-12),
                    T::zero(),
                )?;
                Ok(v)
            }
        }
    }

    /// `∫_ε^∞ r^k ν(dr)`: moment of the simulated part.
    pub fn moment(&self, k: T) -> Result<T> {
        self.moment_between(k, self.truncation, T::infinity())
    }

    /// Audits the pushforward hypotheses on `[truncation, sup support)`:
    /// continuity is structural, so this checks strict decrease wherever the
    /// tail is positive and that the simulated mass is finite.
    pub fn audit(&self) -> Result<()> {
        let (_, hi) = self.support();
        let lo = self.truncation.max(self.support().0);
        let m = self.mass();
        if !m.is_finite() {
            return Err(Error::Hypothesis("infinite simulated mass".into()));
        }
        if self.truncation < self.support().0 && self.support().0 > T::zero() {
            return Err(Error::Hypothesis(format!(
                "tail is flat on ({}, {}): the measure vanishes on an open interval",
                self.truncation,
                self.support().0
            )));
        }
        let hi = if hi.is_finite() {
            hi
        } else {
            self.inverse_tail(m * T::of(1e-12)).max(lo * T::of(2.0))
        };
        let n = 200;
        let mut prev = self.tail(lo);
        for i in 1..=n {
            let frac = T::count(i) / T::count(n + 1);
            let z = if lo > T::zero() {
                (lo.ln() + frac * (hi.ln() - lo.ln())).exp()
            } else {
                lo + frac * (hi - lo)
            };
            let t = self.tail(z);
            if t > T::zero() && t >= prev {
                return Err(Error::Hypothesis(format!(
                    "tail not strictly decreasing near z = {z}"
                )));
            }
            prev = t;
        }
        Ok(())
    }
}
