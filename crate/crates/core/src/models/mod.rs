//! The shipped coefficient fields, all in `f64`.
//!
//! Each model has a plain parameter struct (what a config file holds) and
//! implements [`CoefficientField`] directly or through a built form.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::euler_scheme::{CoefficientField, TheoryOrder};
use crate::levy_core::{JumpMeasure, LevyTriplet, RadialFamily, RadialTail};
use crate::numerics::SquareMatrix;
use crate::ot_metrics::EmpiricalMeasure;
use crate::rng::{Purpose, StreamKey};

/// What a model keeps of the frozen law.
#[derive(Debug, Clone, PartialEq)]
pub enum LawSummary {
    Ignored,
    Mean(Vec<f64>),
    Cloud { points: Vec<f64>, weights: Vec<f64> },
}

impl LawSummary {
    fn mean(&self) -> Option<&[f64]> {
        match self {
            LawSummary::Mean(m) => Some(m),
            _ => None,
        }
    }
}

/// Initial law of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialLaw {
    Dirac { at: Vec<f64> },
    /// Independent coordinates with common mean and standard deviation.
    Gaussian { mean: f64, sd: f64 },
}

impl InitialLaw {
    /// `n` equally weighted particles; Gaussian coordinates come from
    /// `Initial` streams.
    pub fn sample(&self, dim: usize, n: usize, seed: u64) -> Result<EmpiricalMeasure<f64>> {
        match self {
            InitialLaw::Dirac { at } => {
                if at.len() != dim {
                    return Err(Error::Dimension {
                        expected: dim,
                        got: at.len(),
                    });
                }
                EmpiricalMeasure::uniform(dim, at.repeat(n))
            }
            InitialLaw::Gaussian { mean, sd } => {
                if !(*sd >= 0.0) {
                    return Err(param("sd", "must be nonnegative"));
                }
                let mut pts = Vec::with_capacity(n * dim);
                for i in 0..n {
                    let mut s = StreamKey::new(seed, i, 1, Purpose::Initial).stream();
                    pts.extend(s.normals(dim).into_iter().map(|z| mean + sd * z));
                }
                EmpiricalMeasure::uniform(dim, pts)
            }
        }
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(param(name, format!("must be positive, got {v}")))
    }
}

fn finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(param(name, "must be finite"))
    }
}

/// Diffusion `σ₀ + a·sin x` per coordinate, drift `-c·sin x + γ(mean μ - x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Brownian {
    pub dim: usize,
    pub sigma0: f64,
    pub sigma_amp: f64,
    pub drift: f64,
    pub interaction: f64,
}

impl Default for Brownian {
    fn default() -> Self {
        Self {
            dim: 1,
            sigma0: 1.0,
            sigma_amp: 0.5,
            drift: 1.0,
            interaction: 0.0,
        }
    }
}

impl Brownian {
    /// Standard Brownian motion with diffusion `σ₀`.
    pub fn pure(dim: usize, sigma0: f64) -> Self {
        Self {
            dim,
            sigma0,
            sigma_amp: 0.0,
            drift: 0.0,
            interaction: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(param("dim", "must be at least 1"));
        }
        positive("sigma0", self.sigma0)?;
        finite("sigma_amp", self.sigma_amp)?;
        if self.sigma_amp.abs() >= self.sigma0 {
            return Err(param("sigma_amp", "|sigma_amp| must stay below sigma0"));
        }
        finite("drift", self.drift)?;
        finite("interaction", self.interaction)
    }
}

impl CoefficientField<f64> for Brownian {
    type Snapshot = LawSummary;

    fn dim(&self) -> usize {
        self.dim
    }

    fn kappa(&self) -> f64 {
        self.sigma_amp.abs() + self.drift.abs() + self.interaction.abs()
    }

    fn bound(&self) -> f64 {
        if self.interaction != 0.0 {
            return f64::INFINITY;
        }
        let d = (self.dim as f64).sqrt();
        2.0 * d * (self.sigma0 + self.sigma_amp.abs() + self.drift.abs())
    }

    fn depends_on_law(&self) -> bool {
        self.interaction != 0.0
    }

    fn freeze(&self, mu: &EmpiricalMeasure<f64>) -> Result<LawSummary> {
        Ok(if self.interaction != 0.0 {
            LawSummary::Mean(mu.mean())
        } else {
            LawSummary::Ignored
        })
    }

    fn eval(&self, x: &[f64], law: &LawSummary) -> Result<LevyTriplet<f64>> {
        let diag: Vec<f64> = x.iter().map(|v| self.sigma0 + self.sigma_amp * v.sin()).collect();
        let mut b: Vec<f64> = x.iter().map(|v| -self.drift * v.sin()).collect();
        if let Some(m) = law.mean() {
            for (bk, (xk, mk)) in b.iter_mut().zip(x.iter().zip(m)) {
                *bk += self.interaction * (mk - xk);
            }
        }
        Ok(LevyTriplet {
            dim: self.dim,
            sigma: SquareMatrix::diagonal(&diag),
            drift: b,
            jumps: JumpMeasure::zero(),
        })
    }
}

/// One-dimensional compound Poisson model: jumps of size
/// `y₀(1 + β sin x)` at rate `λ`, drift `-c·sin x`, constant diffusion `σ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompoundPoisson {
    pub rate: f64,
    pub size: f64,
    pub beta: f64,
    pub sigma: f64,
    pub drift: f64,
}

impl Default for CompoundPoisson {
    fn default() -> Self {
        Self {
            rate: 4.0,
            size: 0.5,
            beta: 0.5,
            sigma: 0.0,
            drift: 1.0,
        }
    }
}

impl CompoundPoisson {
    pub fn validate(&self) -> Result<()> {
        positive("rate", self.rate)?;
        positive("size", self.size)?;
        if !(self.beta.abs() < 1.0) {
            return Err(param("beta", "|beta| must be below 1 so jumps never vanish"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(param("sigma", "must be nonnegative"));
        }
        finite("drift", self.drift)
    }

    fn jump(&self, x: f64) -> f64 {
        self.size * (1.0 + self.beta * x.sin())
    }
}

impl CoefficientField<f64> for CompoundPoisson {
    type Snapshot = LawSummary;

    fn dim(&self) -> usize {
        1
    }

    fn kappa(&self) -> f64 {
        self.rate.sqrt() * self.size * self.beta.abs() + self.drift.abs()
    }

    fn bound(&self) -> f64 {
        let y = self.size * (1.0 + self.beta.abs());
        2.0 * (self.sigma + self.drift.abs() + self.rate * y * y)
    }

    fn depends_on_law(&self) -> bool {
        false
    }

    fn freeze(&self, _: &EmpiricalMeasure<f64>) -> Result<LawSummary> {
        Ok(LawSummary::Ignored)
    }

    fn eval(&self, x: &[f64], _: &LawSummary) -> Result<LevyTriplet<f64>> {
        let v = x[0];
        Ok(LevyTriplet {
            dim: 1,
            sigma: SquareMatrix::diagonal(&[self.sigma]),
            drift: vec![-self.drift * v.sin()],
            jumps: JumpMeasure::atomic(vec![(vec![self.jump(v)], self.rate)])?,
        })
    }
}

/// Parameters of the one-dimensional star-shaped model: a reference radial
/// measure in both directions, stretched by `1 + β sin x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StarStableParams {
    pub radial: RadialFamily<f64>,
    #[serde(default = "half")]
    pub beta: f64,
    #[serde(default = "one")]
    pub drift: f64,
    #[serde(default)]
    pub sigma: f64,
    /// Angular weights of the directions `+1` and `-1`.
    #[serde(default = "unit_pair")]
    pub weights: [f64; 2],
}

fn half() -> f64 {
    0.5
}

fn one() -> f64 {
    1.0
}

fn unit_pair() -> [f64; 2] {
    [1.0, 1.0]
}

impl Default for StarStableParams {
    fn default() -> Self {
        Self {
            radial: RadialFamily::Power {
                coef: 0.5,
                alpha: 0.5,
                upper: Some(1.0),
            },
            beta: 0.5,
            drift: 1.0,
            sigma: 0.0,
            weights: [1.0, 1.0],
        }
    }
}

/// Built star-shaped model; the truncation is fixed once on the reference
/// tail and scales with it, so the simulated mass does not depend on `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct StarStable {
    pub params: StarStableParams,
    pub reference: RadialTail<f64>,
}

impl StarStable {
    pub fn new(params: StarStableParams, truncation_tol: f64) -> Result<Self> {
        if !(params.beta.abs() < 1.0) {
            return Err(param("beta", "|beta| must be below 1 so the scale stays positive"));
        }
        finite("drift", params.drift)?;
        if !(params.sigma >= 0.0 && params.sigma.is_finite()) {
            return Err(param("sigma", "must be nonnegative"));
        }
        if params.weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) || params.weights.iter().sum::<f64>() <= 0.0 {
            return Err(param("weights", "need nonnegative weights with positive sum"));
        }
        let reference = RadialTail::new(params.radial.clone(), 1.0)?.truncated_by_second_moment(truncation_tol)?;
        reference.audit()?;
        Ok(Self { params, reference })
    }

    pub fn scale(&self, x: f64) -> f64 {
        1.0 + self.params.beta * x.sin()
    }

    /// Radial measure in direction `s` (0 for `+1`, 1 for `-1`) at `x`.
    pub fn radial_at(&self, x: f64) -> RadialTail<f64> {
        self.reference.clone().with_scale(self.scale(x))
    }

    fn jumps_at(&self, x: f64) -> Result<JumpMeasure<f64>> {
        let r = self.radial_at(x);
        let w = self.params.weights;
        JumpMeasure::star(vec![(vec![1.0], w[0]), (vec![-1.0], w[1])], vec![r.clone(), r])
    }
}

impl CoefficientField<f64> for StarStable {
    type Snapshot = LawSummary;

    fn dim(&self) -> usize {
        1
    }

    fn kappa(&self) -> f64 {
        let m2 = self.reference.moment(2.0).unwrap_or(f64::INFINITY);
        let w: f64 = self.params.weights.iter().sum();
        self.params.beta.abs() * (m2 * w).sqrt() + self.params.drift.abs()
    }

    fn bound(&self) -> f64 {
        let m2 = self.reference.moment(2.0).unwrap_or(f64::INFINITY);
        let w: f64 = self.params.weights.iter().sum();
        let top = 1.0 + self.params.beta.abs();
        2.0 * (self.params.sigma + self.params.drift.abs() + top * top * m2 * w)
    }

    fn depends_on_law(&self) -> bool {
        false
    }

    fn freeze(&self, _: &EmpiricalMeasure<f64>) -> Result<LawSummary> {
        Ok(LawSummary::Ignored)
    }

    fn eval(&self, x: &[f64], _: &LawSummary) -> Result<LevyTriplet<f64>> {
        let v = x[0];
        Ok(LevyTriplet {
            dim: 1,
            sigma: SquareMatrix::diagonal(&[self.params.sigma]),
            drift: vec![-self.params.drift * v.sin()],
            jumps: self.jumps_at(v)?,
        })
    }
}

/// Interaction kernel `K(x, y)` of the kinetic model.
#[derive(Clone)]
pub enum Kernel {
    /// `α(y - x)`, in any dimension.
    Linear { alpha: f64 },
    /// `α tanh((y - x)/w)`, one-dimensional, bounded.
    Tanh { alpha: f64, width: f64 },
    /// User kernel with declared Lipschitz constant and bound.
    Custom {
        f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
        lipschitz: f64,
        bound: f64,
    },
}

impl std::fmt::Debug for Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Kernel::Linear { alpha } => write!(f, "Linear {{ alpha: {alpha} }}"),
            Kernel::Tanh { alpha, width } => write!(f, "Tanh {{ alpha: {alpha}, width: {width} }}"),
            Kernel::Custom { lipschitz, bound, .. } => {
                write!(f, "Custom {{ lipschitz: {lipschitz}, bound: {bound} }}")
            }
        }
    }
}

impl Kernel {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Kernel::Linear { alpha } => alpha * (y - x),
            Kernel::Tanh { alpha, width } => alpha * ((y - x) / width).tanh(),
            Kernel::Custom { f, .. } => f(x, y),
        }
    }

    /// Lipschitz constant in each argument.
    pub fn lipschitz(&self) -> f64 {
        match self {
            Kernel::Linear { alpha } => alpha.abs(),
            Kernel::Tanh { alpha, width } => alpha.abs() / width,
            Kernel::Custom { lipschitz, .. } => *lipschitz,
        }
    }

    pub fn sup(&self) -> f64 {
        match self {
            Kernel::Linear { .. } => f64::INFINITY,
            Kernel::Tanh { alpha, .. } => alpha.abs(),
            Kernel::Custom { bound, .. } => *bound,
        }
    }

    /// Checks the declared bound and Lipschitz constant on all pairs of
    /// sample points. The linear kernel is unbounded and only its Lipschitz
    /// constant is checked.
    pub fn audit(&self, samples: &[f64]) -> Result<()> {
        let l = self.lipschitz();
        let b = self.sup();
        for &x in samples {
            for &y in samples {
                let k = self.eval(x, y);
                if !k.is_finite() || k.abs() > b * (1.0 + 1e-12) {
                    return Err(Error::Model {
                        particle: 0,
                        reason: format!("kernel value {k} at ({x}, {y}) exceeds the declared bound {b}"),
                    });
                }
            }
        }
        for w in samples.windows(2) {
            let (a, c) = (w[0], w[1]);
            if a == c {
                continue;
            }
            for &y in samples {
                let q1 = (self.eval(a, y) - self.eval(c, y)).abs() / (a - c).abs();
                let q2 = (self.eval(y, a) - self.eval(y, c)).abs() / (a - c).abs();
                if q1.max(q2) > l * (1.0 + 1e-9) + 1e-12 {
                    return Err(Error::Model {
                        particle: 0,
                        reason: format!(
                            "kernel difference quotient {} exceeds the declared Lipschitz constant {l}",
                            q1.max(q2)
                        ),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Config form of the kinetic model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KineticParams {
    pub dim: usize,
    pub kernel: KernelKind,
    pub alpha: f64,
    pub width: f64,
    pub sigma: f64,
    /// Intensity of an optional single-atom jump part.
    pub jump_rate: f64,
    pub jump_size: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Linear,
    Tanh,
}

impl Default for KineticParams {
    fn default() -> Self {
        Self {
            dim: 1,
            kernel: KernelKind::Linear,
            alpha: 1.0,
            width: 1.0,
            sigma: 1.0,
            jump_rate: 0.0,
            jump_size: 0.5,
        }
    }
}

/// Mean-field kinetic model `b(x, μ) = ∫K(x, y) μ(dy)` on top of a constant
/// Brownian part and optional state-independent single-atom jumps.
#[derive(Debug, Clone)]
pub struct Kinetic {
    pub dim: usize,
    pub kernel: Kernel,
    pub sigma: f64,
    pub jump_rate: f64,
    pub jump_size: f64,
}

impl Kinetic {
    pub fn new(p: &KineticParams) -> Result<Self> {
        if p.dim == 0 {
            return Err(param("dim", "must be at least 1"));
        }
        finite("alpha", p.alpha)?;
        let kernel = match p.kernel {
            KernelKind::Linear => Kernel::Linear { alpha: p.alpha },
            KernelKind::Tanh => {
                positive("width", p.width)?;
                if p.dim != 1 {
                    return Err(param("dim", "the tanh kernel is one-dimensional"));
                }
                Kernel::Tanh {
                    alpha: p.alpha,
                    width: p.width,
                }
            }
        };
        Self::with_kernel(p.dim, kernel, p.sigma, p.jump_rate, p.jump_size)
    }

    pub fn with_kernel(dim: usize, kernel: Kernel, sigma: f64, jump_rate: f64, jump_size: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(param("sigma", "must be nonnegative"));
        }
        if !(jump_rate >= 0.0 && jump_rate.is_finite()) {
            return Err(param("jump_rate", "must be nonnegative"));
        }
        if jump_rate > 0.0 && !(jump_size != 0.0 && jump_size.is_finite()) {
            return Err(param("jump_size", "must be finite and nonzero"));
        }
        if dim != 1 && !matches!(kernel, Kernel::Linear { .. }) {
            return Err(param("dim", "only the linear kernel acts in several dimensions"));
        }
        Ok(Self {
            dim,
            kernel,
            sigma,
            jump_rate,
            jump_size,
        })
    }

    /// `α` of the linear kernel, if that is the kernel in use.
    pub fn linear_alpha(&self) -> Option<f64> {
        match self.kernel {
            Kernel::Linear { alpha } => Some(alpha),
            _ => None,
        }
    }

    fn jumps(&self) -> Result<JumpMeasure<f64>> {
        if self.jump_rate == 0.0 {
            return Ok(JumpMeasure::zero());
        }
        let mut y = vec![0.0; self.dim];
        y[0] = self.jump_size;
        JumpMeasure::atomic(vec![(y, self.jump_rate)])
    }
}

impl CoefficientField<f64> for Kinetic {
    type Snapshot = LawSummary;

    fn dim(&self) -> usize {
        self.dim
    }

    fn kappa(&self) -> f64 {
        self.kernel.lipschitz()
    }

    fn bound(&self) -> f64 {
        let j = self.jump_rate * self.jump_size * self.jump_size;
        2.0 * ((self.dim as f64).sqrt() * self.sigma + self.kernel.sup() + j)
    }

    fn freeze(&self, mu: &EmpiricalMeasure<f64>) -> Result<LawSummary> {
        Ok(match self.kernel {
            Kernel::Linear { .. } => LawSummary::Mean(mu.mean()),
            _ => LawSummary::Cloud {
                points: mu.points().to_vec(),
                weights: mu.weights().to_vec(),
            },
        })
    }

    fn eval(&self, x: &[f64], law: &LawSummary) -> Result<LevyTriplet<f64>> {
        let drift = match (&self.kernel, law) {
            (Kernel::Linear { alpha }, LawSummary::Mean(m)) => {
                x.iter().zip(m).map(|(xk, mk)| alpha * (mk - xk)).collect()
            }
            (k, LawSummary::Cloud { points, weights }) => {
                vec![points.iter().zip(weights).map(|(y, w)| w * k.eval(x[0], *y)).sum()]
            }
            _ => return Err(Error::WrongVariant("law summary does not match the kernel".into())),
        };
        Ok(LevyTriplet {
            dim: self.dim,
            sigma: SquareMatrix::scaled_identity(self.dim, self.sigma),
            drift,
            jumps: self.jumps()?,
        })
    }
}

/// First-order pure-jump model: drift `-c·sin x`, jumps of size `y₀` with
/// intensity `min(1 + |mean μ|, cap)`, uncompensated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct W1Jump {
    pub drift: f64,
    pub size: f64,
    pub cap: f64,
}

impl Default for W1Jump {
    fn default() -> Self {
        Self {
            drift: 1.0,
            size: 1.0,
            cap: 3.0,
        }
    }
}

impl W1Jump {
    pub fn validate(&self) -> Result<()> {
        finite("drift", self.drift)?;
        if !(self.size != 0.0 && self.size.is_finite()) {
            return Err(param("size", "must be finite and nonzero"));
        }
        if !(self.cap >= 1.0 && self.cap.is_finite()) {
            return Err(param("cap", "must be at least 1"));
        }
        Ok(())
    }

    pub fn intensity(&self, mean: f64) -> f64 {
        (1.0 + mean.abs()).min(self.cap)
    }
}

impl CoefficientField<f64> for W1Jump {
    type Snapshot = LawSummary;

    fn dim(&self) -> usize {
        1
    }

    fn kappa(&self) -> f64 {
        self.drift.abs() + self.size.abs()
    }

    fn bound(&self) -> f64 {
        2.0 * (self.drift.abs() + self.cap * self.size * self.size)
    }

    fn order(&self) -> TheoryOrder {
        TheoryOrder::FirstMoment
    }

    fn freeze(&self, mu: &EmpiricalMeasure<f64>) -> Result<LawSummary> {
        Ok(LawSummary::Mean(mu.mean()))
    }

    fn eval(&self, x: &[f64], law: &LawSummary) -> Result<LevyTriplet<f64>> {
        let m = law
            .mean()
            .ok_or_else(|| Error::WrongVariant("expected a mean summary".into()))?;
        LevyTriplet::pure_jump(
            vec![-self.drift * x[0].sin()],
            JumpMeasure::atomic(vec![(vec![self.size], self.intensity(m[0]))])?,
        )
    }
}

/// Identifier of a shipped model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelId {
    Brownian,
    CompoundPoisson,
    StarStableTrunc,
    MeanFieldKinetic,
    W1PureJump,
}

impl ModelId {
    pub const ALL: [ModelId; 5] = [
        ModelId::Brownian,
        ModelId::CompoundPoisson,
        ModelId::StarStableTrunc,
        ModelId::MeanFieldKinetic,
        ModelId::W1PureJump,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelId::Brownian => "brownian",
            ModelId::CompoundPoisson => "compound_poisson",
            ModelId::StarStableTrunc => "star_stable_trunc",
            ModelId::MeanFieldKinetic => "mean_field_kinetic",
            ModelId::W1PureJump => "w1_pure_jump",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }

    /// Initial law used when a config does not set one.
    pub fn default_initial(self) -> InitialLaw {
        match self {
            ModelId::Brownian => InitialLaw::Gaussian { mean: 0.0, sd: 1.0 },
            ModelId::CompoundPoisson | ModelId::StarStableTrunc => InitialLaw::Gaussian { mean: 0.0, sd: 1.0 },
            ModelId::MeanFieldKinetic => InitialLaw::Gaussian { mean: 0.0, sd: 1.0 },
            ModelId::W1PureJump => InitialLaw::Gaussian { mean: 0.0, sd: 0.5 },
        }
    }
}

/// Any shipped model, built and validated.
#[derive(Debug, Clone)]
pub enum Model {
    Brownian(Brownian),
    CompoundPoisson(CompoundPoisson),
    StarStable(StarStable),
    Kinetic(Kinetic),
    W1Jump(W1Jump),
}

macro_rules! each {
    ($self:expr, $m:ident => $e:expr) => {
        match $self {
            Model::Brownian($m) => $e,
            Model::CompoundPoisson($m) => $e,
            Model::StarStable($m) => $e,
            Model::Kinetic($m) => $e,
            Model::W1Jump($m) => $e,
        }
    };
}

impl Model {
    pub fn id(&self) -> ModelId {
        match self {
            Model::Brownian(_) => ModelId::Brownian,
            Model::CompoundPoisson(_) => ModelId::CompoundPoisson,
            Model::StarStable(_) => ModelId::StarStableTrunc,
            Model::Kinetic(_) => ModelId::MeanFieldKinetic,
            Model::W1Jump(_) => ModelId::W1PureJump,
        }
    }

    /// The model with its default parameters.
    pub fn default_for(id: ModelId, truncation_tol: f64) -> Result<Self> {
        Ok(match id {
            ModelId::Brownian => Model::Brownian(Brownian::default()),
            ModelId::CompoundPoisson => Model::CompoundPoisson(CompoundPoisson::default()),
            ModelId::StarStableTrunc => Model::StarStable(StarStable::new(StarStableParams::default(), truncation_tol)?),
            ModelId::MeanFieldKinetic => Model::Kinetic(Kinetic::new(&KineticParams::default())?),
            ModelId::W1PureJump => Model::W1Jump(W1Jump::default()),
        })
    }
}

impl CoefficientField<f64> for Model {
    type Snapshot = LawSummary;

    fn dim(&self) -> usize {
        each!(self, m => m.dim())
    }

    fn kappa(&self) -> f64 {
        each!(self, m => m.kappa())
    }

    fn bound(&self) -> f64 {
        each!(self, m => m.bound())
    }

    fn order(&self) -> TheoryOrder {
        each!(self, m => m.order())
    }

    fn depends_on_law(&self) -> bool {
        each!(self, m => m.depends_on_law())
    }

    fn freeze(&self, mu: &EmpiricalMeasure<f64>) -> Result<LawSummary> {
        each!(self, m => m.freeze(mu))
    }

    fn eval(&self, x: &[f64], law: &LawSummary) -> Result<LevyTriplet<f64>> {
        each!(self, m => m.eval(x, law))
    }
}

/// Frozen field: no diffusion, drift or jumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Frozen {
    pub dim: usize,
}

impl CoefficientField<f64> for Frozen {
    type Snapshot = ();

    fn dim(&self) -> usize {
        self.dim
    }

    fn kappa(&self) -> f64 {
        0.0
    }

    fn bound(&self) -> f64 {
        1.0
    }

    fn depends_on_law(&self) -> bool {
        false
    }

    fn freeze(&self, _: &EmpiricalMeasure<f64>) -> Result<()> {
        Ok(())
    }

    fn eval(&self, _: &[f64], _: &()) -> Result<LevyTriplet<f64>> {
        Ok(LevyTriplet::drift_only(vec![0.0; self.dim]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::euler_scheme::audit_field;

    fn samples(dim: usize) -> Vec<(Vec<f64>, EmpiricalMeasure<f64>)> {
        let xs = [-1.3, -0.2, 0.4, 1.7];
        xs.iter()
            .enumerate()
            .map(|(k, &x)| {
                let mu = InitialLaw::Gaussian {
                    mean: 0.3 * k as f64,
                    sd: 1.0,
                }
                .sample(dim, 64, k as u64)
                .unwrap();
                (vec![x; dim], mu)
            })
            .collect()
    }

    #[test]
    fn shipped_models_respect_declared_lipschitz_constants() {
        for id in ModelId::ALL {
            let m = Model::default_for(id, 1e-6).unwrap();
            let audit = audit_field(&m, &samples(m.dim())).unwrap();
            assert!(audit.passed, "{id:?}: {audit:?}");
        }
    }

    #[test]
    fn star_model_mass_does_not_depend_on_state() {
        let m = StarStable::new(StarStableParams::default(), 1e-6).unwrap();
        let a = m.radial_at(0.0).mass();
        let b = m.radial_at(1.2).mass();
        assert!((a - b).abs() < 1e-9 * a);
        assert!((m.reference.truncation - 1e-4).abs() < 1e-8);
    }

    #[test]
    fn kernel_audit_catches_a_wrong_declaration() {
        let k = Kernel::Custom {
            f: Arc::new(|x, y| 3.0 * (y - x).sin()),
            lipschitz: 1.0,
            bound: 3.0,
        };
        let pts: Vec<f64> = (0..20).map(|i| -1.0 + 0.1 * i as f64).collect();
        assert!(matches!(k.audit(&pts), Err(Error::Model { .. })));
        assert!(Kernel::Tanh { alpha: 1.0, width: 0.5 }.audit(&pts).is_ok());
    }

    #[test]
    fn model_ids_round_trip_through_names() {
        for id in ModelId::ALL {
            assert_eq!(ModelId::parse(id.name()), Some(id));
        }
        assert_eq!(ModelId::parse("nope"), None);
    }

    #[test]
    fn brownian_rejects_indefinite_diffusion() {
        let b = Brownian {
            sigma_amp: 1.5,
            ..Brownian::default()
        };
        assert!(b.validate().is_err());
    }
}
