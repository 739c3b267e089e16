use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::levy_core::{
    couple_increments, couple_increments_w1, sample_increment, sample_increment_first_order,
    LevyCoupling, LevyTriplet,
};
use crate::ot_metrics::{w_p_exact, EmpiricalMeasure, ExactConfig};
use crate::rng::{Purpose, StreamKey};
use crate::scalar::{dist_pow, Real};

use super::ensemble::{digest, LawRecord, PathEnsemble};
use super::field::{CoefficientField, TheoryOrder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingMode {
    None,
    InitialPair,
    SubdivisionPair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SchemeConfig<T> {
    pub tau: T,
    pub horizon: T,
    pub particles: usize,
    pub seed: u64,
    pub coupling: CouplingMode,
    /// Relative second-moment mass below the jump truncation.
    pub truncation_tol: T,
    /// Record the frozen law of every step.
    pub cache_laws: bool,
}

impl<T: Real> SchemeConfig<T> {
    pub fn new(tau: T, horizon: T, particles: usize, seed: u64) -> Self {
        Self {
            tau,
            horizon,
            particles,
            seed,
            coupling: CouplingMode::None,
            truncation_tol: T::of(1e-6),
            cache_laws: false,
        }
    }

    pub fn with_coupling(mut self, mode: CouplingMode) -> Self {
        self.coupling = mode;
        self
    }

    pub fn with_cache(mut self) -> Self {
        self.cache_laws = true;
        self
    }

    pub fn with_horizon(mut self, horizon: T) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Validates the configuration and returns the number of steps.
    pub fn steps(&self) -> Result<usize> {
        if !(self.tau > T::zero() && self.tau.is_finite()) {
            return Err(param("tau", format!("must be positive, got {}", self.tau)));
        }
        if !(self.horizon >= T::zero() && self.horizon.is_finite()) {
            return Err(param("horizon", format!("must be nonnegative, got {}", self.horizon)));
        }
        if self.particles < 2 {
            return Err(param("particles", "need at least two particles"));
        }
        if !(self.truncation_tol > T::zero() && self.truncation_tol < T::one()) {
            return Err(param("truncation_tol", "must lie in (0, 1)"));
        }
        let k = (self.horizon / self.tau).round();
        if (k * self.tau - self.horizon).abs() > T::of(1e-9) * T::one().max(self.horizon) {
            return Err(param(
                "tau",
                format!("horizon {} is not a multiple of tau {}", self.horizon, self.tau),
            ));
        }
        let steps = k.to_usize().ok_or_else(|| param("tau", "too many steps"))?;
        if self.coupling == CouplingMode::SubdivisionPair && steps > 0 && !steps.is_power_of_two() {
            return Err(param("tau", "subdivision runs need tau = horizon / 2^k"));
        }
        Ok(steps)
    }
}

/// Brings `mu0` to `n` equally weighted particles: clouds of the right size
/// are used as they are, a single atom is replicated, anything else is
/// resampled with `Initial` streams.
pub fn prepare_cloud<T: Real>(mu0: &EmpiricalMeasure<T>, n: usize, seed: u64) -> Result<EmpiricalMeasure<T>> {
    if mu0.len() == n {
        return Ok(mu0.clone());
    }
    if mu0.len() == 1 {
        return EmpiricalMeasure::uniform(mu0.dim(), mu0.point(0).repeat(n));
    }
    let w: Vec<f64> = mu0.weights().iter().map(|v| v.f64()).collect();
    let mut pts = Vec::with_capacity(n * mu0.dim());
    for i in 0..n {
        let mut s = StreamKey::new(seed, i, 0, Purpose::Initial).stream();
        pts.extend_from_slice(mu0.point(s.categorical(&w)));
    }
    EmpiricalMeasure::uniform(mu0.dim(), pts)
}

fn model_err(i: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Model { .. } => e,
        other => Error::Model {
            particle: i,
            reason: other.to_string(),
        },
    }
}

fn check_field_dim<T: Real, F: CoefficientField<T>>(field: &F, mu: &EmpiricalMeasure<T>) -> Result<()> {
    if field.dim() != mu.dim() {
        return Err(Error::Dimension {
            expected: field.dim(),
            got: mu.dim(),
        });
    }
    Ok(())
}

/// Collects per-particle results in index order, reporting the lowest
/// failing particle.
fn gather<V: Send>(items: Vec<Result<V>>) -> Result<Vec<V>> {
    items.into_iter().collect()
}

fn advance<T: Real, F: CoefficientField<T>>(
    states: &[T],
    weights: &[T],
    field: &F,
    tau: T,
    step: usize,
    seed: u64,
) -> Result<(Vec<T>, LawRecord)> {
    let d = field.dim();
    let n = weights.len();
    let mu = EmpiricalMeasure::new(d, states.to_vec(), weights.to_vec())?;
    let snap = field.freeze(&mu)?;
    let order = field.order();
    let moved: Vec<Result<Vec<T>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = &states[i * d..(i + 1) * d];
            let t = field.eval(x, &snap).map_err(model_err(i))?;
            let mut rng = StreamKey::new(seed, i, step, Purpose::Increment).stream();
            let y = match order {
                TheoryOrder::SecondMoment => sample_increment(&t, tau, &mut rng),
                TheoryOrder::FirstMoment => sample_increment_first_order(&t, tau, &mut rng),
            }
            .map_err(model_err(i))?;
            Ok(x.iter().zip(y).map(|(a, b)| *a + b).collect())
        })
        .collect();
    let next = gather(moved)?.concat();
    let record = LawRecord {
        step,
        digest: digest(states),
        evaluations: n,
    };
    Ok((next, record))
}

/// One Euler step: the law is frozen at `mu`, every particle `i` takes one
/// increment of its triplet from the stream `(seed, i, step)`.
pub fn euler_step<T: Real, F: CoefficientField<T>>(
    mu: &EmpiricalMeasure<T>,
    field: &F,
    tau: T,
    step: usize,
    seed: u64,
) -> Result<EmpiricalMeasure<T>> {
    check_field_dim(field, mu)?;
    if !(tau > T::zero()) {
        return Err(param("tau", "must be positive"));
    }
    let (next, _) = advance(mu.points(), mu.weights(), field, tau, step, seed)?;
    EmpiricalMeasure::new(mu.dim(), next, mu.weights().to_vec())
}

fn grid<T: Real>(tau: T, steps: usize) -> Vec<T> {
    (0..=steps).map(|k| tau * T::count(k)).collect()
}

/// Runs the particle scheme from `mu0` to the horizon.
pub fn run<T: Real, F: CoefficientField<T>>(
    mu0: &EmpiricalMeasure<T>,
    field: &F,
    cfg: &SchemeConfig<T>,
) -> Result<PathEnsemble<T>> {
    let steps = cfg.steps()?;
    check_field_dim(field, mu0)?;
    let mu = prepare_cloud(mu0, cfg.particles, cfg.seed)?;
    let weights = mu.weights().to_vec();
    let mut states = Vec::with_capacity(steps + 1);
    states.push(mu.points().to_vec());
    let mut records = Vec::with_capacity(steps);
    for l in 0..steps {
        let (next, rec) = advance(&states[l], &weights, field, cfg.tau, l, cfg.seed)?;
        states.push(next);
        records.push(rec);
    }
    Ok(PathEnsemble {
        dim: mu.dim(),
        tau: cfg.tau,
        times: grid(cfg.tau, steps),
        states,
        weights,
        cache: cfg.cache_laws.then_some(records),
    })
}

/// Pairing used when none is supplied: the optimal `W₂` assignment when the
/// exact solver accepts the size, the sorted (also optimal) matching in one
/// dimension, the index pairing otherwise.
fn default_pairing<T: Real>(mu: &EmpiricalMeasure<T>, eta: &EmpiricalMeasure<T>) -> Result<Vec<usize>> {
    let n = mu.len();
    if mu.dim() == 1 {
        let order = |m: &EmpiricalMeasure<T>| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| m.point(a)[0].partial_cmp(&m.point(b)[0]).expect("finite"));
            idx
        };
        let (oa, ob) = (order(mu), order(eta));
        let mut pi = vec![0; n];
        for (a, b) in oa.into_iter().zip(ob) {
            pi[a] = b;
        }
        return Ok(pi);
    }
    if n * n <= ExactConfig::default().max_cells {
        let (_, plan) = w_p_exact(T::of(2.0), mu, eta)?;
        return Ok(plan.as_pairing(n));
    }
    Ok((0..n).collect())
}

fn check_permutation(pi: &[usize], n: usize) -> Result<()> {
    if pi.len() != n {
        return Err(Error::Pairing(format!("pairing has {} entries for {n} particles", pi.len())));
    }
    let mut seen = vec![false; n];
    for &j in pi {
        if j >= n || std::mem::replace(&mut seen[j], true) {
            return Err(Error::Pairing("pairing is not a permutation".into()));
        }
    }
    Ok(())
}

fn coupled_pair<T: Real>(
    order: TheoryOrder,
    left: LevyTriplet<T>,
    right: LevyTriplet<T>,
    tau: T,
    key: StreamKey,
) -> Result<(Vec<T>, Vec<T>, LevyTriplet<T>)> {
    let c = LevyCoupling::auto(left, right)?;
    let mut rng = key.stream();
    let (a, b) = match order {
        TheoryOrder::SecondMoment => couple_increments(&c, tau, &mut rng)?,
        TheoryOrder::FirstMoment => couple_increments_w1(&c, tau, &mut rng)?,
    };
    Ok((a, b, c.left))
}

/// Advances two ensembles with coupled increments: particle `i` of `mu` is
/// paired with particle `pairing[i]` of `eta`, the pair shares its Gaussian
/// driver and jump events. The second ensemble is returned reordered so that
/// pairs share an index.
pub fn run_coupled_initials<T: Real, F: CoefficientField<T>>(
    mu: &EmpiricalMeasure<T>,
    eta: &EmpiricalMeasure<T>,
    field: &F,
    cfg: &SchemeConfig<T>,
    pairing: Option<&[usize]>,
) -> Result<(PathEnsemble<T>, PathEnsemble<T>)> {
    let steps = cfg.steps()?;
    check_field_dim(field, mu)?;
    check_field_dim(field, eta)?;
    let n = cfg.particles;
    let a = prepare_cloud(mu, n, cfg.seed)?;
    let b = prepare_cloud(eta, n, cfg.seed.wrapping_add(1))?;
    if !a.is_uniform() || !b.is_uniform() {
        return Err(Error::Pairing("coupled runs need equally weighted particles".into()));
    }
    let pi = match pairing {
        Some(p) => p.to_vec(),
        None => default_pairing(&a, &b)?,
    };
    check_permutation(&pi, n)?;
    let d = a.dim();
    let weights = a.weights().to_vec();
    let b_sorted: Vec<T> = pi.iter().flat_map(|&j| b.point(j).to_vec()).collect();
    let mut sa = vec![a.points().to_vec()];
    let mut sb = vec![b_sorted];
    let (mut ra, mut rb) = (Vec::new(), Vec::new());
    let order = field.order();
    for l in 0..steps {
        let (xa, xb) = (&sa[l], &sb[l]);
        let snap_a = field.freeze(&EmpiricalMeasure::new(d, xa.clone(), weights.clone())?)?;
        let snap_b = field.freeze(&EmpiricalMeasure::new(d, xb.clone(), weights.clone())?)?;
        let moved: Vec<Result<(Vec<T>, Vec<T>)>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let pa = &xa[i * d..(i + 1) * d];
                let pb = &xb[i * d..(i + 1) * d];
                let ta = field.eval(pa, &snap_a).map_err(model_err(i))?;
                let tb = field.eval(pb, &snap_b).map_err(model_err(i))?;
                let key = StreamKey::new(cfg.seed, i, l, Purpose::CoupledIncrement);
                let (ya, yb, _) = coupled_pair(order, ta, tb, cfg.tau, key).map_err(model_err(i))?;
                Ok((
                    pa.iter().zip(ya).map(|(x, y)| *x + y).collect(),
                    pb.iter().zip(yb).map(|(x, y)| *x + y).collect(),
                ))
            })
            .collect();
        let moved = gather(moved)?;
        let (na, nb): (Vec<Vec<T>>, Vec<Vec<T>>) = moved.into_iter().unzip();
        ra.push(LawRecord { step: l, digest: digest(xa), evaluations: n });
        rb.push(LawRecord { step: l, digest: digest(xb), evaluations: n });
        sa.push(na.concat());
        sb.push(nb.concat());
    }
    let make = |states, rec| PathEnsemble {
        dim: d,
        tau: cfg.tau,
        times: grid(cfg.tau, steps),
        states,
        weights: weights.clone(),
        cache: cfg.cache_laws.then_some(rec),
    };
    Ok((make(sa, ra), make(sb, rb)))
}

/// A coarse run with step `τ` and a fine run with step `τ/2` from the same
/// initial cloud, coupled step by step. The fine ensemble is stored on the
/// coarse grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SubdivisionPair<T> {
    pub tau: T,
    pub coarse: PathEnsemble<T>,
    pub fine: PathEnsemble<T>,
    /// `E|X_τ(t₀) - X_{τ/2}(t₀)|^p` with `p = 2` (or 1 for first-order fields).
    pub distance: T,
    pub stderr: T,
    pub order: TheoryOrder,
}

/// Weighted mean and standard error of `|a_i - b_i|^p` at grid index `k`.
pub fn paired_moment<T: Real>(a: &PathEnsemble<T>, b: &PathEnsemble<T>, k: usize, p: T) -> (T, T) {
    let n = a.particles();
    let vals: Vec<T> = (0..n).map(|i| dist_pow(a.state(k, i), b.state(k, i), p)).collect();
    let mean: T = vals.iter().zip(&a.weights).map(|(v, w)| *v * *w).sum();
    let var: T = vals.iter().map(|v| (*v - mean) * (*v - mean)).sum::<T>() / T::count(n.max(2) - 1);
    (mean, (var / T::count(n)).sqrt())
}

/// Sequential coupling of one coarse step with its two fine half steps: the
/// coarse triplet is coupled with the fine triplet of each half in turn, so
/// the coarse increment is the sum of two coupled half increments (its
/// Gaussian part is the normalised sum of the two fine Gaussians and its
/// jumps the superposition of both draws).
fn subdivision_pair<T: Real, F: CoefficientField<T>>(
    mu: &EmpiricalMeasure<T>,
    field: &F,
    tau: T,
    steps: usize,
    seed: u64,
) -> Result<SubdivisionPair<T>> {
    let d = mu.dim();
    let n = mu.len();
    let weights = mu.weights().to_vec();
    let half = tau / T::of(2.0);
    let order = field.order();
    let law = |x: &[T]| -> Result<F::Snapshot> {
        field.freeze(&EmpiricalMeasure::new(d, x.to_vec(), weights.clone())?)
    };
    let mut sc = vec![mu.points().to_vec()];
    let mut sf = vec![mu.points().to_vec()];
    for l in 0..steps {
        let (xc, xf) = (&sc[l], &sf[l]);
        let (lc, lf) = (law(xc)?, law(xf)?);
        let first: Vec<Result<(Vec<T>, Vec<T>, LevyTriplet<T>)>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let tc = field.eval(&xc[i * d..(i + 1) * d], &lc).map_err(model_err(i))?;
                let tf = field.eval(&xf[i * d..(i + 1) * d], &lf).map_err(model_err(i))?;
                let key = StreamKey::new(seed, i, 2 * l, Purpose::FineHalfStep);
                coupled_pair(order, tc, tf, half, key).map_err(model_err(i))
            })
            .collect();
        let first = gather(first)?;
        let mid: Vec<T> = first
            .iter()
            .enumerate()
            .flat_map(|(i, (_, yf, _))| {
                xf[i * d..(i + 1) * d].iter().zip(yf).map(|(x, y)| *x + *y).collect::<Vec<_>>()
            })
            .collect();
        let lm = law(&mid)?;
        let second: Vec<Result<(Vec<T>, Vec<T>)>> = first
            .into_par_iter()
            .enumerate()
            .map(|(i, (yc0, _, tc))| {
                let tf = field.eval(&mid[i * d..(i + 1) * d], &lm).map_err(model_err(i))?;
                let key = StreamKey::new(seed, i, 2 * l + 1, Purpose::FineHalfStep);
                let (yc1, yf1, _) = coupled_pair(order, tc, tf, half, key).map_err(model_err(i))?;
                let c: Vec<T> = (0..d).map(|k| xc[i * d + k] + yc0[k] + yc1[k]).collect();
                let f: Vec<T> = (0..d).map(|k| mid[i * d + k] + yf1[k]).collect();
                Ok((c, f))
            })
            .collect();
        let (nc, nf): (Vec<Vec<T>>, Vec<Vec<T>>) = gather(second)?.into_iter().unzip();
        sc.push(nc.concat());
        sf.push(nf.concat());
    }
    let make = |states| PathEnsemble {
        dim: d,
        tau,
        times: grid(tau, steps),
        states,
        weights: weights.clone(),
        cache: None,
    };
    let coarse = make(sc);
    let fine = make(sf);
    let (distance, stderr) = paired_moment(&coarse, &fine, steps, order.p());
    Ok(SubdivisionPair {
        tau,
        coarse,
        fine,
        distance,
        stderr,
        order,
    })
}

/// Coupled `(τ_j, τ_j/2)` runs for `τ_j = τ/2^j`, `j = 0..levels`.
pub fn run_coupled_subdivision<T: Real, F: CoefficientField<T>>(
    mu: &EmpiricalMeasure<T>,
    field: &F,
    cfg: &SchemeConfig<T>,
    levels: usize,
) -> Result<Vec<SubdivisionPair<T>>> {
    let cfg = cfg.clone().with_coupling(CouplingMode::SubdivisionPair);
    let steps = cfg.steps()?;
    check_field_dim(field, mu)?;
    if levels == 0 {
        return Err(param("levels", "need at least one subdivision level"));
    }
    if levels > 24 {
        return Err(param("levels", "too many subdivision levels"));
    }
    let mu = prepare_cloud(mu, cfg.particles, cfg.seed)?;
    let mut out = Vec::with_capacity(levels);
    for j in 0..levels {
        let tau = cfg.tau / T::count(1 << j);
        let seed = cfg.seed.wrapping_add((j as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        out.push(subdivision_pair(&mu, field, tau, steps << j, seed)?);
    }
    Ok(out)
}

/// `T_t f` on a grid of starting points, with Monte Carlo standard errors
/// and the largest difference quotient between neighbouring grid points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FellerEstimate<T> {
    pub values: Vec<T>,
    pub stderr: Vec<T>,
    pub lipschitz: T,
}

/// Linear semigroup of a law-independent field. All starting points share
/// the same random streams.
pub fn feller_map<T: Real, F: CoefficientField<T>>(
    field: &F,
    f: &(dyn Fn(&[T]) -> T + Sync),
    t: T,
    x_grid: &[Vec<T>],
    cfg: &SchemeConfig<T>,
) -> Result<FellerEstimate<T>> {
    if field.depends_on_law() {
        return Err(Error::WrongVariant(
            "the linear semigroup needs a law-independent field".into(),
        ));
    }
    let cfg = cfg.clone().with_horizon(t);
    let steps = cfg.steps()?;
    let mut values = Vec::with_capacity(x_grid.len());
    let mut stderr = Vec::with_capacity(x_grid.len());
    for x in x_grid {
        if steps == 0 {
            values.push(f(x));
            stderr.push(T::zero());
            continue;
        }
        let ens = run(&EmpiricalMeasure::dirac(x.clone()), field, &cfg)?;
        let n = ens.particles();
        let vals: Vec<T> = (0..n).map(|i| f(ens.state(steps, i))).collect();
        let mean = vals.iter().copied().sum::<T>() / T::count(n);
        let var = vals.iter().map(|v| (*v - mean) * (*v - mean)).sum::<T>() / T::count(n - 1);
        values.push(mean);
        stderr.push((var / T::count(n)).sqrt());
    }
    let mut lipschitz = T::zero();
    for k in 1..x_grid.len() {
        let dx = crate::scalar::dist(&x_grid[k], &x_grid[k - 1]);
        if dx > T::zero() {
            lipschitz = lipschitz.max((values[k] - values[k - 1]).abs() / dx);
        }
    }
    Ok(FellerEstimate {
        values,
        stderr,
        lipschitz,
    })
}
