use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::numerics::integrate;
use crate::ot_metrics::ShellDecomposition;
use crate::rng::Stream;
use crate::scalar::{dist_pow, norm_sq, Real};

use super::jumps::JumpMeasure;
use super::radial::RadialTail;
use super::triplet::{add_jumps, standard_normals, LevyTriplet};

/// Joint jump measure on `R^d × R^d`. A zero vector on one side stands for
/// "no jump" of that component, which is how measures of different mass are
/// coupled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Real")]
pub enum JointJumps<T> {
    /// Both components receive the same jump. Needs equal jump measures.
    Diagonal,
    /// Finite list of `(y₁, y₂, mass)`.
    Paired { pairs: Vec<(Vec<T>, Vec<T>, T)> },
    /// `ν₁ ⊗ δ₀ + δ₀ ⊗ ν₂`: the components never jump together.
    Independent,
    /// Star shapes with common directions, coupled through tail levels: for
    /// direction `k` a level `v` yields radii `T_{i,k}^{-1}(v / ω_{i,k})`.
    Comonotone,
    /// Layer `n` of one measure coupled with layer `n` of the other by the
    /// product of their normalisations.
    Shell {
        left: Box<ShellDecomposition<T>>,
        right: Box<ShellDecomposition<T>>,
    },
}

/// Two triplets with a coupling of their jump measures. The Gaussian parts
/// are always driven by one shared noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LevyCoupling<T> {
    pub left: LevyTriplet<T>,
    pub right: LevyTriplet<T>,
    pub joint: JointJumps<T>,
}

fn same_dim<T: Real>(l: &LevyTriplet<T>, r: &LevyTriplet<T>) -> Result<()> {
    if l.dim != r.dim {
        return Err(Error::Dimension {
            expected: l.dim,
            got: r.dim,
        });
    }
    Ok(())
}

/// Sums masses of identical locations; zero vectors are dropped.
fn aggregate<T: Real>(items: impl Iterator<Item = (Vec<T>, T)>) -> Vec<(Vec<T>, T)> {
    let mut v: Vec<(Vec<T>, T)> = items.filter(|(y, _)| norm_sq(y) > T::zero()).collect();
    v.sort_by(|a, b| crate::ot_metrics::lex(&a.0, &b.0));
    let mut out: Vec<(Vec<T>, T)> = Vec::with_capacity(v.len());
    for (y, w) in v {
        match out.last_mut() {
            Some(last) if last.0 == y => last.1 += w,
            _ => out.push((y, w)),
        }
    }
    out
}

fn star_parts<T: Real>(
    m: &JumpMeasure<T>,
) -> Option<(&[super::jumps::AngularAtom<T>], &[RadialTail<T>])> {
    match m {
        JumpMeasure::StarShaped { angular, radial } => Some((angular, radial)),
        _ => None,
    }
}

impl<T: Real> LevyCoupling<T> {
    pub fn diagonal(left: LevyTriplet<T>, right: LevyTriplet<T>) -> Result<Self> {
        same_dim(&left, &right)?;
        if left.jumps != right.jumps {
            return Err(Error::Coupling(
                "diagonal coupling needs identical jump measures".into(),
            ));
        }
        Ok(Self {
            left,
            right,
            joint: JointJumps::Diagonal,
        })
    }

    /// Explicit finite coupling; the marginals are checked against both jump
    /// measures to within 1e-8.
    pub fn paired(
        left: LevyTriplet<T>,
        right: LevyTriplet<T>,
        pairs: Vec<(Vec<T>, Vec<T>, T)>,
    ) -> Result<Self> {
        same_dim(&left, &right)?;
        for (y1, y2, m) in &pairs {
            if y1.len() != left.dim || y2.len() != left.dim {
                return Err(Error::Dimension {
                    expected: left.dim,
                    got: y1.len().max(y2.len()),
                });
            }
            if !(*m > T::zero() && m.is_finite()) {
                return Err(Error::Coupling("pair masses must be positive".into()));
            }
        }
        let c = Self {
            left,
            right,
            joint: JointJumps::Paired { pairs },
        };
        c.verify_marginals()?;
        Ok(c)
    }

    pub fn independent(left: LevyTriplet<T>, right: LevyTriplet<T>) -> Result<Self> {
        same_dim(&left, &right)?;
        Ok(Self {
            left,
            right,
            joint: JointJumps::Independent,
        })
    }

    /// Tail-level coupling of two star-shaped measures with the same
    /// directions.
    pub fn comonotone(left: LevyTriplet<T>, right: LevyTriplet<T>) -> Result<Self> {
        same_dim(&left, &right)?;
        let c = Self {
            left,
            right,
            joint: JointJumps::Comonotone,
        };
        c.verify_marginals()?;
        Ok(c)
    }

    pub fn shell(left: LevyTriplet<T>, right: LevyTriplet<T>) -> Result<Self> {
        same_dim(&left, &right)?;
        let l = ShellDecomposition::of(&left.jumps, left.dim, "left")?;
        let r = ShellDecomposition::of(&right.jumps, right.dim, "right")?;
        Ok(Self {
            left,
            right,
            joint: JointJumps::Shell {
                left: Box::new(l),
                right: Box::new(r),
            },
        })
    }

    /// Matches finite atoms by index: atom `k` of each side shares
    /// `min(w₁ₖ, w₂ₖ)`, the excess jumps alone.
    pub fn synchronized(left: LevyTriplet<T>, right: LevyTriplet<T>) -> Result<Self> {
        same_dim(&left, &right)?;
        let (a, b) = match (&left.jumps, &right.jumps) {
            (JumpMeasure::FiniteAtomic { atoms: a }, JumpMeasure::FiniteAtomic { atoms: b }) => (a, b),
            _ => {
                return Err(Error::WrongVariant(
                    "synchronized coupling needs finite atomic measures".into(),
                ))
            }
        };
        let zero = vec![T::zero(); left.dim];
        let mut pairs = Vec::with_capacity(a.len().max(b.len()) + 2);
        for k in 0..a.len().max(b.len()) {
            match (a.get(k), b.get(k)) {
                (Some(x), Some(y)) => {
                    let m = x.w.min(y.w);
                    pairs.push((x.y.clone(), y.y.clone(), m));
                    if x.w > m {
                        pairs.push((x.y.clone(), zero.clone(), x.w - m));
                    }
                    if y.w > m {
                        pairs.push((zero.clone(), y.y.clone(), y.w - m));
                    }
                }
                (Some(x), None) => pairs.push((x.y.clone(), zero.clone(), x.w)),
                (None, Some(y)) => pairs.push((zero.clone(), y.y.clone(), y.w)),
                (None, None) => unreachable!(),
            }
        }
        Ok(Self {
            left,
            right,
            joint: JointJumps::Paired { pairs },
        })
    }

    /// Diagonal for equal measures, synchronized for finite ones, comonotone
    /// for star shapes with matching directions, independent when one side
    /// has no jumps, shells otherwise.
    pub fn auto(left: LevyTriplet<T>, right: LevyTriplet<T>) -> Result<Self> {
        same_dim(&left, &right)?;
        if left.jumps == right.jumps {
            return Self::diagonal(left, right);
        }
        if left.jumps.is_zero() || right.jumps.is_zero() {
            return Self::independent(left, right);
        }
        match (&left.jumps, &right.jumps) {
            (JumpMeasure::FiniteAtomic { .. }, JumpMeasure::FiniteAtomic { .. }) => {
                Self::synchronized(left, right)
            }
            (
                JumpMeasure::StarShaped { angular: a, .. },
                JumpMeasure::StarShaped { angular: b, .. },
            ) if a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.s == y.s) => {
                Self::comonotone(left, right)
            }
            _ => Self::shell(left, right),
        }
    }

    pub fn dim(&self) -> usize {
        self.left.dim
    }

    /// Checks that the joint jump measure reproduces both marginals.
    pub fn verify_marginals(&self) -> Result<()> {
        let tol = T::of(1e-8);
        match &self.joint {
            JointJumps::Diagonal => {
                if self.left.jumps != self.right.jumps {
                    return Err(Error::Coupling("diagonal coupling of unequal measures".into()));
                }
            }
            JointJumps::Independent | JointJumps::Shell { .. } => {}
            JointJumps::Paired { pairs } => {
                for (side, m) in [(0, &self.left.jumps), (1, &self.right.jumps)] {
                    let atoms = match m {
                        JumpMeasure::FiniteAtomic { atoms } => atoms,
                        _ => {
                            return Err(Error::Coupling(
                                "paired coupling needs finite atomic marginals".into(),
                            ))
                        }
                    };
                    let want = aggregate(atoms.iter().map(|a| (a.y.clone(), a.w)));
                    let got = aggregate(pairs.iter().map(|(y1, y2, w)| {
                        (if side == 0 { y1.clone() } else { y2.clone() }, *w)
                    }));
                    let ok = want.len() == got.len()
                        && want.iter().zip(&got).all(|(a, b)| {
                            a.0 == b.0 && (a.1 - b.1).abs() <= tol * T::one().max(a.1)
                        });
                    if !ok {
                        return Err(Error::Coupling(format!(
                            "marginal {} of the paired coupling does not match its jump measure",
                            side + 1
                        )));
                    }
                }
            }
            JointJumps::Comonotone => {
                let (Some((a, _)), Some((b, _))) =
                    (star_parts(&self.left.jumps), star_parts(&self.right.jumps))
                else {
                    return Err(Error::Coupling(
                        "comonotone coupling needs star-shaped marginals".into(),
                    ));
                };
                if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| x.s != y.s) {
                    return Err(Error::Coupling(
                        "comonotone coupling needs common directions".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Total mass of the joint jump measure.
    pub fn joint_mass(&self) -> T {
        match &self.joint {
            JointJumps::Diagonal => self.left.jumps.total_mass(),
            JointJumps::Paired { pairs } => pairs.iter().map(|p| p.2).sum(),
            JointJumps::Independent => self.left.jumps.total_mass() + self.right.jumps.total_mass(),
            JointJumps::Comonotone => self.level_ranges().iter().map(|l| l.2.max(l.3)).sum(),
            JointJumps::Shell { left, right } => {
                let n = left.layers.len().max(right.layers.len());
                (0..n)
                    .map(|k| {
                        let a = left.layers.get(k).map_or(T::zero(), |l| l.mass);
                        let b = right.layers.get(k).map_or(T::zero(), |l| l.mass);
                        a.max(b)
                    })
                    .sum()
            }
        }
    }

    /// Per direction `(ω₁, ω₂, ω₁ U₁, ω₂ U₂)` where `U_i` is the simulated
    /// radial mass.
    fn level_ranges(&self) -> Vec<(T, T, T, T)> {
        let (Some((a, ra)), Some((b, rb))) =
            (star_parts(&self.left.jumps), star_parts(&self.right.jumps))
        else {
            return Vec::new();
        };
        a.iter()
            .zip(ra)
            .zip(b.iter().zip(rb))
            .map(|((x, rx), (y, ry))| (x.omega, y.omega, x.omega * rx.mass(), y.omega * ry.mass()))
            .collect()
    }

    /// `∬ |y₁ - y₂|^p` over the joint jump measure.
    pub fn joint_moment(&self, p: T) -> Result<T> {
        match &self.joint {
            JointJumps::Diagonal => Ok(T::zero()),
            JointJumps::Paired { pairs } => Ok(pairs.iter().map(|(a, b, m)| *m * dist_pow(a, b, p)).sum()),
            JointJumps::Independent => Ok(self.left.jumps.moment(p)? + self.right.jumps.moment(p)?),
            JointJumps::Comonotone => {
                let (_, ra) = star_parts(&self.left.jumps).expect("checked at construction");
                let (_, rb) = star_parts(&self.right.jumps).expect("checked at construction");
                let mut total = T::zero();
                for ((w1, w2, a1, a2), (t1, t2)) in self.level_ranges().into_iter().zip(ra.iter().zip(rb)) {
                    total += comonotone_direction_moment(p, (w1, a1, t1), (w2, a2, t2))?;
                }
                Ok(total)
            }
            JointJumps::Shell { left, right } => {
                let n = left.layers.len().max(right.layers.len());
                let mut total = T::zero();
                for k in 0..n {
                    total += crate::ot_metrics::layer_pair_cost(left.layers.get(k), right.layers.get(k), p, self.dim());
                }
                Ok(total)
            }
        }
    }

    /// One draw `(y₁, y₂)` from the normalised joint jump measure.
    pub fn sample_joint_jump(&self, rng: &mut Stream) -> (Vec<T>, Vec<T>) {
        let d = self.dim();
        let zero = || vec![T::zero(); d];
        match &self.joint {
            JointJumps::Diagonal => {
                let y = self.left.jumps.sample_jump(rng);
                (y.clone(), y)
            }
            JointJumps::Paired { pairs } => {
                let w: Vec<f64> = pairs.iter().map(|p| p.2.f64()).collect();
                let (a, b, _) = &pairs[rng.categorical(&w)];
                (a.clone(), b.clone())
            }
            JointJumps::Independent => {
                let m1 = self.left.jumps.total_mass().f64();
                let m2 = self.right.jumps.total_mass().f64();
                if rng.categorical(&[m1, m2]) == 0 {
                    (self.left.jumps.sample_jump(rng), zero())
                } else {
                    (zero(), self.right.jumps.sample_jump(rng))
                }
            }
            JointJumps::Comonotone => {
                let ranges = self.level_ranges();
                let w: Vec<f64> = ranges.iter().map(|r| r.2.max(r.3).f64()).collect();
                let k = rng.categorical(&w);
                let (w1, w2, a1, a2) = ranges[k];
                let v = a1.max(a2) * T::of(rng.uniform_open());
                let (sa, ra) = star_parts(&self.left.jumps).expect("checked at construction");
                let (_, rb) = star_parts(&self.right.jumps).expect("checked at construction");
                let s = &sa[k].s;
                let side = |w: T, a: T, t: &RadialTail<T>| -> Vec<T> {
                    if v <= a {
                        let r = t.inverse_tail(v / w);
                        s.iter().map(|&c| c * r).collect()
                    } else {
                        zero()
                    }
                };
                (side(w1, a1, &ra[k]), side(w2, a2, &rb[k]))
            }
            JointJumps::Shell { left, right } => {
                let n = left.layers.len().max(right.layers.len());
                let masses: Vec<(T, T)> = (0..n)
                    .map(|k| {
                        (
                            left.layers.get(k).map_or(T::zero(), |l| l.mass),
                            right.layers.get(k).map_or(T::zero(), |l| l.mass),
                        )
                    })
                    .collect();
                let w: Vec<f64> = masses.iter().map(|m| m.0.max(m.1).f64()).collect();
                let k = rng.categorical(&w);
                let (m1, m2) = masses[k];
                let big = m1.max(m2);
                let mut draw = |m: T, dec: &ShellDecomposition<T>, nu: &JumpMeasure<T>| -> Vec<T> {
                    let u = T::of(rng.uniform_open());
                    if u * big > m {
                        return zero();
                    }
                    match nu {
                        JumpMeasure::FiniteAtomic { .. } => nu.sample_jump(rng),
                        JumpMeasure::StarShaped { .. } => {
                            let hi = if k == 0 { T::infinity() } else { dec.layers[k].hi };
                            nu.sample_jump_in_shell(dec.layers[k].lo, hi, rng)
                        }
                    }
                };
                let y1 = draw(m1, left, &self.left.jumps);
                let y2 = draw(m2, right, &self.right.jumps);
                (y1, y2)
            }
        }
    }
}

/// `∫_0^{max(a₁,a₂)} |r₁(v) - r₂(v)|^p dv` for one direction, where
/// `r_i(v) = T_i^{-1}(v/ω_i)` below `a_i` and zero above.
fn comonotone_direction_moment<T: Real>(
    p: T,
    (w1, a1, t1): (T, T, &RadialTail<T>),
    (w2, a2, t2): (T, T, &RadialTail<T>),
) -> Result<T> {
    let lo_level = a1.min(a2);
    let mut total = T::zero();
    if lo_level > T::zero() {
        // both sides jump: quadrature in log level
        let top = lo_level.ln();
        let bottom = top + T::of(0.9) * T::min_positive_value().ln();
        let (v, _) = integrate(
            |w: T| {
                let v = w.exp();
                let r1 = t1.inverse_tail(v / w1);
                let r2 = t2.inverse_tail(v / w2);
                (r1 - r2).abs().powf(p) * v
            },
            bottom,
            top,
            T::of(1e-10),
            T::zero(),
        )?;
        total += v;
    }
    // levels where only the heavier side jumps: its radii lie between its
    // truncation and the radius at level `lo_level`
    if a1 != a2 {
        let (w, t) = if a1 > a2 { (w1, t1) } else { (w2, t2) };
        let z = if lo_level > T::zero() {
            t.inverse_tail(lo_level / w)
        } else {
            T::infinity()
        };
        total += w * t.moment_between(p, t.truncation, z)?;
    }
    Ok(total)
}

fn check_tau<T: Real>(tau: T) -> Result<()> {
    if tau > T::zero() && tau.is_finite() {
        Ok(())
    } else {
        Err(param("tau", format!("must be positive and finite, got {tau}")))
    }
}

fn add_joint_jumps<T: Real>(c: &LevyCoupling<T>, y1: &mut [T], y2: &mut [T], tau: T, rng: &mut Stream) {
    let mass = c.joint_mass();
    if mass == T::zero() {
        return;
    }
    if matches!(c.joint, JointJumps::Diagonal) {
        // same draws as the uncoupled sampler, applied to both sides
        let mut acc = vec![T::zero(); y1.len()];
        add_jumps(&mut acc, &c.left.jumps, tau, rng);
        for ((a, b), v) in y1.iter_mut().zip(y2.iter_mut()).zip(acc) {
            *a += v;
            *b += v;
        }
        return;
    }
    let count = rng.poisson((mass * tau).f64());
    for _ in 0..count {
        let (j1, j2) = c.sample_joint_jump(rng);
        for (a, v) in y1.iter_mut().zip(j1) {
            *a += v;
        }
        for (b, v) in y2.iter_mut().zip(j2) {
            *b += v;
        }
    }
}

/// Increments `(Y¹_τ, Y²_τ)` of the coupled process: one Gaussian vector
/// drives both `√Gᵢ`, jump events come from the joint measure, and each
/// component is compensated by its own jump mean.
pub fn couple_increments<T: Real>(
    c: &LevyCoupling<T>,
    tau: T,
    rng: &mut Stream,
) -> Result<(Vec<T>, Vec<T>)> {
    check_tau(tau)?;
    let xi = standard_normals::<T>(c.dim(), rng);
    let sq = tau.sqrt();
    let mut y1 = c.left.gaussian_part(&xi, sq);
    let mut y2 = c.right.gaussian_part(&xi, sq);
    let m1 = c.left.jumps.mean(c.dim())?;
    let m2 = c.right.jumps.mean(c.dim())?;
    for k in 0..c.dim() {
        y1[k] += (c.left.drift[k] - m1[k]) * tau;
        y2[k] += (c.right.drift[k] - m2[k]) * tau;
    }
    add_joint_jumps(c, &mut y1, &mut y2, tau, rng);
    Ok((y1, y2))
}

/// First-order version: no Gaussian part, jumps are not compensated.
pub fn couple_increments_w1<T: Real>(
    c: &LevyCoupling<T>,
    tau: T,
    rng: &mut Stream,
) -> Result<(Vec<T>, Vec<T>)> {
    check_tau(tau)?;
    if c.left.has_gaussian_part() || c.right.has_gaussian_part() {
        return Err(Error::WrongVariant(
            "first-order coupling does not allow a Gaussian part".into(),
        ));
    }
    let mut y1: Vec<T> = c.left.drift.iter().map(|&b| b * tau).collect();
    let mut y2: Vec<T> = c.right.drift.iter().map(|&b| b * tau).collect();
    add_joint_jumps(c, &mut y1, &mut y2, tau, rng);
    Ok((y1, y2))
}

/// `E|ξ + Y¹_t - Y²_t|² = |ξ + t(b₁ - b₂)|² + t(‖√G₁ - √G₂‖² + ∬|y₁ - y₂|² ν)`.
pub fn coupled_moment<T: Real>(c: &LevyCoupling<T>, xi0: &[T], t: T) -> Result<T> {
    if xi0.len() != c.dim() {
        return Err(Error::Dimension {
            expected: c.dim(),
            got: xi0.len(),
        });
    }
    let shift: Vec<T> = xi0
        .iter()
        .zip(c.left.drift.iter().zip(&c.right.drift))
        .map(|(&x, (&b1, &b2))| x + t * (b1 - b2))
        .collect();
    let spread = c.left.sigma.sub(&c.right.sigma).frobenius_sq();
    Ok(norm_sq(&shift) + t * (spread + c.joint_moment(T::of(2.0))?))
}

/// Upper bound `|ξ| + t(|b₁ - b₂| + ∬|y₁ - y₂| ν)` on `E|ξ + Y¹_t - Y²_t|` for
/// first-order generators.
pub fn coupled_moment_w1_bound<T: Real>(c: &LevyCoupling<T>, xi0: &[T], t: T) -> Result<T> {
    if c.left.has_gaussian_part() || c.right.has_gaussian_part() {
        return Err(Error::WrongVariant(
            "first-order bound does not allow a Gaussian part".into(),
        ));
    }
    let db: Vec<T> = c.left.drift.iter().zip(&c.right.drift).map(|(a, b)| *a - *b).collect();
    Ok(norm_sq(xi0).sqrt() + t * (norm_sq(&db).sqrt() + c.joint_moment(T::one())?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SquareMatrix;
    use crate::rng::Purpose;

    fn atom(y: f64, w: f64) -> JumpMeasure<f64> {
        JumpMeasure::atomic(vec![(vec![y], w)]).unwrap()
    }

    #[test]
    fn diagonal_increments_are_identical() {
        let t = LevyTriplet::new(SquareMatrix::identity(1), vec![0.3], atom(1.0, 2.0)).unwrap();
        let c = LevyCoupling::diagonal(t.clone(), t).unwrap();
        let mut rng = Stream::from_seed(3, Purpose::Test);
        for _ in 0..100 {
            let (a, b) = couple_increments(&c, 0.5, &mut rng).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn diagonal_matches_uncoupled_sampler_draw_for_draw() {
        let t = LevyTriplet::new(SquareMatrix::identity(1), vec![0.3], atom(1.0, 2.0)).unwrap();
        let c = LevyCoupling::diagonal(t.clone(), t.clone()).unwrap();
        let mut r1 = Stream::from_seed(9, Purpose::Test);
        let mut r2 = Stream::from_seed(9, Purpose::Test);
        for _ in 0..50 {
            let (a, _) = couple_increments(&c, 0.25, &mut r1).unwrap();
            let b = super::super::sample_increment(&t, 0.25, &mut r2).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn moment_formula_cases() {
        let g1 = LevyTriplet::brownian(2, 1.0f64);
        let g2 = LevyTriplet::brownian(2, 2.0);
        let c = LevyCoupling::auto(g1.clone(), g2).unwrap();
        // ξ₀² + t·d with √G₁ - √G₂ = -I
        let v = coupled_moment(&c, &[0.5, 0.0], 0.7).unwrap();
        assert!((v - (0.25 + 0.7 * 2.0)).abs() < 1e-14);

        let d1 = LevyTriplet::drift_only(vec![1.0]);
        let d2 = LevyTriplet::drift_only(vec![-0.5]);
        let c = LevyCoupling::auto(d1, d2).unwrap();
        let v = coupled_moment(&c, &[0.2], 2.0).unwrap();
        assert!((v - (0.2 + 3.0f64).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn independent_product_doubles_second_moment() {
        let t = LevyTriplet::pure_jump(vec![0.0], atom(1.5, 2.0)).unwrap();
        let c = LevyCoupling::independent(t.clone(), t).unwrap();
        assert!((c.joint_moment(2.0).unwrap() - 2.0 * 2.0 * 2.25).abs() < 1e-14);
    }

    #[test]
    fn synchronized_pairs_reproduce_marginals() {
        let a = LevyTriplet::pure_jump(vec![0.0], JumpMeasure::atomic(vec![(vec![1.0], 2.0), (vec![-1.0], 0.5)]).unwrap()).unwrap();
        let b = LevyTriplet::pure_jump(vec![0.0], atom(2.0, 1.0)).unwrap();
        let c = LevyCoupling::synchronized(a, b).unwrap();
        c.verify_marginals().unwrap();
        // (1,2,1) + (1,0,1) + (-1,0,0.5)
        assert!((c.joint_moment(2.0).unwrap() - (1.0 + 1.0 + 0.5)).abs() < 1e-14);
        assert!((c.joint_mass() - 2.5).abs() < 1e-14);
    }

    #[test]
    fn paired_rejects_wrong_marginal() {
        let a = LevyTriplet::pure_jump(vec![0.0], atom(1.0, 2.0)).unwrap();
        let b = LevyTriplet::pure_jump(vec![0.0], atom(2.0, 2.0)).unwrap();
        let err = LevyCoupling::paired(a, b, vec![(vec![1.0], vec![2.0], 1.0)]).unwrap_err();
        assert!(matches!(err, Error::Coupling(_)));
    }

    #[test]
    fn comonotone_scaled_exponentials() {
        // radii r and θ r: ∬(y₁-y₂)² = (θ-1)² ∫ r² ν = (θ-1)² · 2 · mass
        let base = RadialTail::exponential(3.0, 1.0).unwrap();
        let mk = |t: RadialTail<f64>| {
            LevyTriplet::pure_jump(vec![0.0], JumpMeasure::star(vec![(vec![1.0], 1.0)], vec![t]).unwrap()).unwrap()
        };
        let c = LevyCoupling::auto(mk(base.clone()), mk(base.with_scale(1.5))).unwrap();
        assert!(matches!(c.joint, JointJumps::Comonotone));
        let v = c.joint_moment(2.0).unwrap();
        assert!((v - 0.25 * 2.0 * 3.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn first_order_rejects_gaussian_part() {
        let t = LevyTriplet::brownian(1, 1.0);
        let c = LevyCoupling::auto(t.clone(), t).unwrap();
        let mut rng = Stream::from_seed(1, Purpose::Test);
        assert!(matches!(couple_increments_w1(&c, 0.1, &mut rng), Err(Error::WrongVariant(_))));
    }
}
