//! Pushforwards between radial Lévy measures by tail matching.
//!
//! For a star-shaped family `ν(x; dy) = ν(x, s, dr) ω(ds)` and a reference
//! radial measure `ν(dr)`, the map `F_{x,s}` is the monotone solution of
//! `G(x, s, F_{x,s}(z)) = ν([z, ∞))` where `G(x, s, ·)` is the tail of
//! `ν(x, s, ·)`. Coupling every direction through `(F_{x,s}(r), F_{y,s}(r))`
//! bounds `W₂` between `ν(x; ·)` and `ν(y; ·)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::levy_core::{AngularAtom, RadialTail};
use crate::numerics::{bisect, integrate};
use crate::rng::Stream;
use crate::scalar::{norm_sq, Real};

/// `(x, direction index) ↦ ν(x, s, ·)`.
pub type TargetFamily<T> = Arc<dyn Fn(&[T], usize) -> Result<RadialTail<T>> + Send + Sync>;

#[derive(Clone)]
pub struct PushforwardMap<T: Real> {
    pub reference: RadialTail<T>,
    pub target: TargetFamily<T>,
    pub angular: Vec<AngularAtom<T>>,
    /// Declared Lipschitz constant of `x ↦ ν(x; ·)` in `W₂`.
    pub kappa: T,
}

impl<T: Real> std::fmt::Debug for PushforwardMap<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PushforwardMap")
            .field("reference", &self.reference)
            .field("angular", &self.angular)
            .field("kappa", &self.kappa)
            .finish_non_exhaustive()
    }
}

impl<T: Real> PushforwardMap<T> {
    pub fn new(
        reference: RadialTail<T>,
        target: TargetFamily<T>,
        angular: Vec<AngularAtom<T>>,
        kappa: T,
    ) -> Result<Self> {
        reference.audit()?;
        if angular.is_empty() {
            return Err(Error::Domain("star shape needs at least one direction".into()));
        }
        for a in &angular {
            if (norm_sq(&a.s).sqrt() - T::one()).abs() > T::of(1e-12) || !(a.omega > T::zero()) {
                return Err(Error::Domain("directions must be unit vectors with positive weight".into()));
            }
        }
        Ok(Self {
            reference,
            target,
            angular,
            kappa,
        })
    }

    fn direction(&self, s: usize) -> Result<&AngularAtom<T>> {
        self.angular
            .get(s)
            .ok_or_else(|| param("s", format!("direction {s} out of range")))
    }

    /// Audited target tail at `(x, s)`.
    pub fn target_at(&self, x: &[T], s: usize) -> Result<RadialTail<T>> {
        self.direction(s)?;
        let t = (self.target)(x, s)?;
        t.audit()?;
        Ok(t)
    }
}

fn level_tol<T: Real>(u: T) -> T {
    T::of(1e-12) * (T::one() + u)
}

/// Radius `F` with `target.tail(F) = u`. Starts from the closed-form inverse
/// (or `warm`), then expands a bracket geometrically and bisects if the
/// residual is too large.
pub fn solve_level<T: Real>(target: &RadialTail<T>, u: T, warm: Option<T>) -> Result<T> {
    let sup = target.tail(target.support().0);
    if !(u > T::zero() && u < sup.max(T::min_positive_value()) || u == sup && sup.is_finite()) {
        return Err(Error::Domain(format!(
            "level {u} outside the range (0, {sup}) of the target tail"
        )));
    }
    let g = |z: T| target.tail(z) - u;
    let guess = target.inverse_tail(u);
    if guess.is_finite() && g(guess).abs() <= level_tol(u) {
        return Ok(guess);
    }
    let start = warm
        .filter(|w| w.is_finite() && *w > T::zero())
        .unwrap_or(if guess.is_finite() && guess > T::zero() { guess } else { T::one() });
    let (mut lo, mut hi) = (start, start);
    let two = T::of(2.0);
    let mut expansions = 0;
    while g(lo) < T::zero() {
        lo = lo / two;
        expansions += 1;
        if expansions > 2000 {
            return Err(Error::Numerical {
                reason: "bracket expansion towards zero exhausted".into(),
                residual: g(lo).abs().f64(),
            });
        }
    }
    while g(hi) > T::zero() {
        hi = hi * two;
        expansions += 1;
        if expansions > 2000 || !hi.is_finite() {
            return Err(Error::Numerical {
                reason: "bracket expansion towards infinity exhausted".into(),
                residual: g(hi).abs().f64(),
            });
        }
    }
    let z = bisect(g, lo, hi, |_, r| r.abs() <= level_tol(u));
    let r = g(z).abs();
    if r <= level_tol(u) {
        Ok(z)
    } else {
        Err(Error::Numerical {
            reason: "tail identity not met at machine resolution".into(),
            residual: r.f64(),
        })
    }
}

/// `F_{x,s}(z)`.
pub fn solve_pushforward<T: Real>(map: &PushforwardMap<T>, x: &[T], s: usize, z: T) -> Result<T> {
    let target = map.target_at(x, s)?;
    let u = reference_level(map, z)?;
    solve_level(&target, u, None)
}

fn reference_level<T: Real>(map: &PushforwardMap<T>, z: T) -> Result<T> {
    let u = map.reference.tail(z);
    if !(z > T::zero() && u > T::zero() && u.is_finite()) {
        return Err(Error::Domain(format!("radius {z} outside the reference tail's range")));
    }
    Ok(u)
}

/// `F_{x,s}` on a grid of radii, warm-starting each solve from the previous
/// solution.
pub fn solve_grid<T: Real>(map: &PushforwardMap<T>, x: &[T], s: usize, zs: &[T]) -> Result<Vec<T>> {
    let target = map.target_at(x, s)?;
    let mut warm = None;
    zs.iter()
        .map(|&z| {
            let f = solve_level(&target, reference_level(map, z)?, warm)?;
            warm = Some(f);
            Ok(f)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PushforwardDraw<T> {
    /// Reference radius at the drawn tail level.
    pub reference: T,
    /// Its image `F_{x,s}(reference)`.
    pub radius: T,
}

/// Draws a radius from `ν(x, s, ·)` above its truncation: a uniform level
/// `u` below the simulated target mass is mapped to the reference radius
/// `z` with `ν([z, ∞)) = u` and pushed forward.
pub fn pushforward_sample<T: Real>(
    map: &PushforwardMap<T>,
    x: &[T],
    s: usize,
    rng: &mut Stream,
) -> Result<PushforwardDraw<T>> {
    let target = map.target_at(x, s)?;
    let u = target.mass() * T::of(rng.uniform_open());
    let top = map.reference.tail(map.reference.support().0);
    if u > top {
        return Err(Error::Hypothesis(
            "target mass exceeds the reference measure: no pushforward exists".into(),
        ));
    }
    Ok(PushforwardDraw {
        reference: map.reference.inverse_tail(u),
        radius: solve_level(&target, u, None)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Real")]
pub enum CertificateOutcome<T> {
    /// The integral is finite and at most the declared `κ²`.
    Certified,
    /// A difference quotient failed the Richardson check, or the integral
    /// exceeds the declared constant.
    Counterexample {
        x: Vec<T>,
        s: usize,
        radius: T,
        quotient: T,
        reason: String,
    },
    /// The integral does not converge.
    Divergent { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LipschitzCertificate<T> {
    /// `(direction, reference radius, κ_F)` on the audit grid.
    pub kappa_field: Vec<(usize, T, T)>,
    /// `∬ κ_F(r, s)² ω(ds) ν(dr)`.
    pub integral: T,
    pub outcome: CertificateOutcome<T>,
}

impl<T: Real> LipschitzCertificate<T> {
    pub fn is_certified(&self) -> bool {
        matches!(self.outcome, CertificateOutcome::Certified)
    }
}

const AUDIT_LEVELS: usize = 64;

/// Tails at `x ± h e_j` for every grid point and coordinate.
struct Stencil<T: Real> {
    x: Vec<T>,
    plus: RadialTail<T>,
    minus: RadialTail<T>,
    plus_half: RadialTail<T>,
    minus_half: RadialTail<T>,
}

fn shifted<T: Real>(x: &[T], j: usize, dh: T) -> Vec<T> {
    let mut y = x.to_vec();
    y[j] += dh;
    y
}

/// Estimates `κ_F(r, s) = sup_x |∂_x F_{x,s}(r)|` by central differences over
/// `x_grid` and all coordinates, checks each quotient against the one at
/// `h/2`, and integrates `κ_F²` against `ω ⊗ ν` above the reference
/// truncation.
pub fn lipschitz_certificate<T: Real>(
    map: &PushforwardMap<T>,
    x_grid: &[Vec<T>],
    s_atoms: &[usize],
    h: T,
) -> Result<LipschitzCertificate<T>> {
    if x_grid.is_empty() || s_atoms.is_empty() {
        return Err(param("x_grid", "grids must be nonempty"));
    }
    if !(h > T::zero() && h.is_finite()) {
        return Err(param("h", "step must be positive"));
    }
    let half = h / T::of(2.0);
    let mut stencils: Vec<Vec<Stencil<T>>> = Vec::with_capacity(s_atoms.len());
    for &s in s_atoms {
        let mut per = Vec::new();
        for x in x_grid {
            for j in 0..x.len() {
                per.push(Stencil {
                    x: x.clone(),
                    plus: map.target_at(&shifted(x, j, h), s)?,
                    minus: map.target_at(&shifted(x, j, -h), s)?,
                    plus_half: map.target_at(&shifted(x, j, half), s)?,
                    minus_half: map.target_at(&shifted(x, j, -half), s)?,
                });
            }
        }
        stencils.push(per);
    }
    let quotient = |st: &Stencil<T>, u: T, half_step: bool| -> Result<T> {
        let (p, m, step) = if half_step {
            (&st.plus_half, &st.minus_half, half)
        } else {
            (&st.plus, &st.minus, h)
        };
        Ok((solve_level(p, u, None)? - solve_level(m, u, None)?).abs() / (T::of(2.0) * step))
    };
    let kappa_at = |k: usize, u: T| -> Result<T> {
        let mut best = T::zero();
        for st in &stencils[k] {
            best = best.max(quotient(st, u, false)?);
        }
        Ok(best)
    };

    let mass = map.reference.mass();
    let top = mass.ln();
    let bottom = top + T::of(0.9) * T::min_positive_value().ln();

    // audit grid: log-spaced levels in the upper part of the range
    let mut kappa_field = Vec::new();
    for (k, &s) in s_atoms.iter().enumerate() {
        for i in 0..AUDIT_LEVELS {
            let w = top - T::of(30.0) * T::count(i) / T::count(AUDIT_LEVELS);
            let u = w.exp() * T::of(0.999);
            let r = map.reference.inverse_tail(u);
            let mut best = T::zero();
            for st in &stencils[k] {
                let q = quotient(st, u, false)?;
                let q2 = quotient(st, u, true)?;
                let floor = T::of(1e-9) * (T::one() + r) / h;
                if (q - q2).abs() > T::of(1e-2) * q.max(q2) + floor {
                    return Ok(LipschitzCertificate {
                        kappa_field,
                        integral: T::infinity(),
                        outcome: CertificateOutcome::Counterexample {
                            x: st.x.clone(),
                            s,
                            radius: r,
                            quotient: q.max(q2),
                            reason: "difference quotient does not settle as h halves".into(),
                        },
                    });
                }
                best = best.max(q);
            }
            kappa_field.push((s, r, best));
        }
    }

    let mut integral = T::zero();
    for (k, &s) in s_atoms.iter().enumerate() {
        let omega = map.direction(s)?.omega;
        let mut failure = None;
        let res = integrate(
            |w: T| {
                let u = w.exp();
                match kappa_at(k, u) {
                    Ok(q) => q * q * u,
                    Err(e) => {
                        failure.get_or_insert(e);
                        T::nan()
                    }
                }
            },
            bottom,
            top,
            T::of(1e-8),
            T::zero(),
        );
        if let Some(e) = failure {
            return Err(e);
        }
        match res {
            Ok((v, _)) if v.is_finite() => integral += omega * v,
            Ok(_) => {
                return Ok(LipschitzCertificate {
                    kappa_field,
                    integral: T::infinity(),
                    outcome: CertificateOutcome::Divergent {
                        reason: "integral is infinite".into(),
                    },
                })
            }
            Err(e) => {
                return Ok(LipschitzCertificate {
                    kappa_field,
                    integral: T::infinity(),
                    outcome: CertificateOutcome::Divergent { reason: e.to_string() },
                })
            }
        }
    }

    let declared = map.kappa * map.kappa;
    let outcome = if integral <= declared * (T::one() + T::of(1e-6)) + T::of(1e-12) {
        CertificateOutcome::Certified
    } else {
        let worst = kappa_field
            .iter()
            .copied()
            .fold(None, |acc: Option<(usize, T, T)>, e| match acc {
                Some(a) if a.2 >= e.2 => Some(a),
                _ => Some(e),
            })
            .expect("audit grid is nonempty");
        CertificateOutcome::Counterexample {
            x: x_grid[0].clone(),
            s: worst.0,
            radius: worst.1,
            quotient: worst.2,
            reason: format!("integral {integral} exceeds the declared kappa^2 = {declared}"),
        }
    };
    Ok(LipschitzCertificate {
        kappa_field,
        integral,
        outcome,
    })
}

/// `Σ_s ω_s ∫ (F_{x,s}(r) - F_{y,s}(r))² ν(dr)` over the reference measure
/// above its truncation: the cost of the comonotone coupling of
/// `ν(x; ·)` and `ν(y; ·)`.
pub fn comonotone_coupling_cost<T: Real>(
    map: &PushforwardMap<T>,
    x: &[T],
    y: &[T],
    s_atoms: &[usize],
) -> Result<T> {
    let mass = map.reference.mass();
    let top = mass.ln();
    let bottom = top + T::of(0.9) * T::min_positive_value().ln();
    let mut total = T::zero();
    for &s in s_atoms {
        let omega = map.direction(s)?.omega;
        let tx = map.target_at(x, s)?;
        let ty = map.target_at(y, s)?;
        let mut failure = None;
        let (v, _) = integrate(
            |w: T| {
                let u = w.exp();
                match (solve_level(&tx, u, None), solve_level(&ty, u, None)) {
                    (Ok(a), Ok(b)) => (a - b) * (a - b) * u,
                    (Err(e), _) | (_, Err(e)) => {
                        failure.get_or_insert(e);
                        T::nan()
                    }
                }
            },
            bottom,
            top,
            T::of(1e-10),
            T::zero(),
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
        total += omega * v;
    }
    Ok(total)
}
