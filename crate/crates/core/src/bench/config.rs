use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{Tolerance, W1SuiteConfig};
use crate::error::Error;
use crate::euler_scheme::SchemeConfig;
use crate::models::{
    Brownian, CompoundPoisson, InitialLaw, Kinetic, KineticParams, Model, ModelId, StarStable, StarStableParams,
    W1Jump,
};

/// Parameters of one shipped model; serialized as the bare table.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ModelParams {
    Brownian(Brownian),
    CompoundPoisson(CompoundPoisson),
    StarStableTrunc(StarStableParams),
    MeanFieldKinetic(KineticParams),
    W1PureJump(W1Jump),
}

impl ModelParams {
    pub fn id(&self) -> ModelId {
        match self {
            ModelParams::Brownian(_) => ModelId::Brownian,
            ModelParams::CompoundPoisson(_) => ModelId::CompoundPoisson,
            ModelParams::StarStableTrunc(_) => ModelId::StarStableTrunc,
            ModelParams::MeanFieldKinetic(_) => ModelId::MeanFieldKinetic,
            ModelParams::W1PureJump(_) => ModelId::W1PureJump,
        }
    }

    pub fn defaults(id: ModelId) -> Self {
        match id {
            ModelId::Brownian => ModelParams::Brownian(Brownian::default()),
            ModelId::CompoundPoisson => ModelParams::CompoundPoisson(CompoundPoisson::default()),
            ModelId::StarStableTrunc => ModelParams::StarStableTrunc(StarStableParams::default()),
            ModelId::MeanFieldKinetic => ModelParams::MeanFieldKinetic(KineticParams::default()),
            ModelId::W1PureJump => ModelParams::W1PureJump(W1Jump::default()),
        }
    }

    pub fn build(&self, truncation_tol: f64) -> crate::Result<Model> {
        Ok(match self {
            ModelParams::Brownian(p) => {
                p.validate()?;
                Model::Brownian(p.clone())
            }
            ModelParams::CompoundPoisson(p) => {
                p.validate()?;
                Model::CompoundPoisson(p.clone())
            }
            ModelParams::StarStableTrunc(p) => Model::StarStable(StarStable::new(p.clone(), truncation_tol)?),
            ModelParams::MeanFieldKinetic(p) => Model::Kinetic(Kinetic::new(p)?),
            ModelParams::W1PureJump(p) => {
                p.validate()?;
                Model::W1Jump(p.clone())
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeSection {
    pub tau: f64,
    pub horizon: f64,
    pub particles: usize,
    pub seed: u64,
    pub truncation_tol: f64,
}

impl Default for SchemeSection {
    fn default() -> Self {
        Self {
            tau: 1.0 / 64.0,
            horizon: 1.0,
            particles: 10_000,
            seed: 0,
            truncation_tol: 1e-6,
        }
    }
}

impl SchemeSection {
    pub fn config(&self) -> SchemeConfig<f64> {
        let mut c = SchemeConfig::new(self.tau, self.horizon, self.particles, self.seed);
        c.truncation_tol = self.truncation_tol;
        c
    }
}

/// Checks an experiment can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    Weak,
    Martingale,
    Rate,
    Holder,
    Semigroup,
    Kinetic,
    Lipschitz,
    W1,
}

impl DiagnosticKind {
    pub fn defaults_for(id: ModelId) -> Vec<DiagnosticKind> {
        use DiagnosticKind::*;
        match id {
            ModelId::Brownian | ModelId::CompoundPoisson | ModelId::StarStableTrunc => {
                vec![Weak, Martingale, Rate, Holder, Semigroup]
            }
            ModelId::MeanFieldKinetic => vec![Weak, Martingale, Kinetic, Lipschitz, Semigroup],
            ModelId::W1PureJump => vec![W1, Holder, Semigroup],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsSection {
    /// Empty means the model's default selection.
    pub select: Vec<DiagnosticKind>,
    pub z: f64,
    pub floor: f64,
    /// Coarsest step of subdivision sweeps.
    pub rate_base_tau: f64,
    pub rate_levels: usize,
    /// Gaps, in grid steps, of the time-regularity fit.
    pub holder_gaps: Vec<usize>,
    pub semigroup_replicas: usize,
    /// Translations (first-order suite) or dilation excesses (kinetic
    /// Lipschitz check) of the initial cloud.
    pub separations: Vec<f64>,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        Self {
            select: Vec::new(),
            z: 4.0,
            floor: 1e-3,
            rate_base_tau: 0.125,
            rate_levels: 6,
            holder_gaps: vec![1, 2, 4, 8, 16],
            semigroup_replicas: 8,
            separations: vec![0.05, 0.1, 0.2, 0.4],
        }
    }
}

impl DiagnosticsSection {
    pub fn tolerance(&self) -> Tolerance {
        Tolerance {
            floor: self.floor,
            z: self.z,
        }
    }

    pub fn w1_suite(&self) -> W1SuiteConfig {
        W1SuiteConfig {
            base_tau: self.rate_base_tau,
            levels: self.rate_levels,
            separations: self.separations.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Relative paths are resolved against the output root.
    pub dir: String,
    /// Export every particle path as CSV (large); otherwise only the first
    /// 256 paths go to CSV and the full ensemble to the binary snapshot.
    pub full_csv: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            full_csv: false,
        }
    }
}

/// A fully normalized experiment description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub model: ModelId,
    pub params: ModelParams,
    pub initial: InitialLaw,
    pub scheme: SchemeSection,
    pub diagnostics: DiagnosticsSection,
    pub output: OutputSection,
}

impl ExperimentSpec {
    /// Default experiment for a shipped model.
    pub fn default_for(id: ModelId) -> Self {
        let mut diagnostics = DiagnosticsSection::default();
        diagnostics.select = DiagnosticKind::defaults_for(id);
        diagnostics.select.sort();
        Self {
            model: id,
            params: ModelParams::defaults(id),
            initial: id.default_initial(),
            scheme: SchemeSection::default(),
            diagnostics,
            output: OutputSection {
                dir: id.name().into(),
                full_csv: false,
            },
        }
    }

    /// The echo written next to the artifacts; parsing it gives back `self`.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec is always representable")
    }
}

/// One problem in a config file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfigIssue {
    /// Dotted key path, or `<file>` for problems with the file as a whole.
    pub path: String,
    pub message: String,
    pub remedy: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub issues: Vec<ConfigIssue>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} problem(s) in config:", self.issues.len())?;
        for i in &self.issues {
            writeln!(f, "  {}: {} (fix: {})", i.path, i.message, i.remedy)?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

struct Issues(Vec<ConfigIssue>);

impl Issues {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>, remedy: impl Into<String>) {
        self.0.push(ConfigIssue {
            path: path.into(),
            message: message.into(),
            remedy: remedy.into(),
        });
    }
}

fn position(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

fn section<T: for<'de> Deserialize<'de> + Default>(table: &toml::Table, key: &str, issues: &mut Issues) -> T {
    match table.get(key) {
        None => T::default(),
        Some(v) => match v.clone().try_into() {
            Ok(s) => s,
            Err(e) => {
                issues.push(key, e.message().trim().to_string(), format!("see the documented keys of [{key}]"));
                T::default()
            }
        },
    }
}

fn param_path(e: &Error, prefix: &str) -> String {
    match e {
        Error::Parameter { name, .. } => format!("{prefix}.{name}"),
        _ => prefix.to_string(),
    }
}

/// Parses and validates a config text, filling documented defaults.
pub fn parse_config(text: &str) -> Result<ExperimentSpec, ConfigError> {
    let mut issues = Issues(Vec::new());
    let table: toml::Table = match text.parse() {
        Ok(t) => t,
        Err(e) => {
            let e: toml::de::Error = e;
            let (line, col) = e.span().map_or((0, 0), |s| position(text, s.start));
            return Err(ConfigError {
                issues: vec![ConfigIssue {
                    path: "<file>".into(),
                    message: format!("parse error at line {line}, column {col}: {}", e.message().trim()),
                    remedy: "fix the syntax at that position".into(),
                }],
            });
        }
    };
    for key in table.keys() {
        if !["model", "params", "initial", "scheme", "diagnostics", "output"].contains(&key.as_str()) {
            issues.push(key.clone(), "unknown key", "remove it");
        }
    }
    let names: Vec<&str> = ModelId::ALL.iter().map(|m| m.name()).collect();
    let model = match table.get("model") {
        None => {
            issues.push("model", "missing model id", format!("set model to one of {}", names.join(", ")));
            None
        }
        Some(toml::Value::String(s)) => match ModelId::parse(s) {
            Some(m) => Some(m),
            None => {
                issues.push("model", format!("unknown model `{s}`"), format!("use one of {}", names.join(", ")));
                None
            }
        },
        Some(_) => {
            issues.push("model", "model id must be a string", format!("use one of {}", names.join(", ")));
            None
        }
    };
    let scheme: SchemeSection = section(&table, "scheme", &mut issues);
    let mut diagnostics: DiagnosticsSection = section(&table, "diagnostics", &mut issues);
    let output: OutputSection = section(&table, "output", &mut issues);

    if !(scheme.tau > 0.0 && scheme.tau.is_finite()) {
        issues.push("scheme.tau", format!("step must be positive, got {}", scheme.tau), "use e.g. tau = 0.015625");
    } else if let Err(e) = scheme.config().steps() {
        issues.push(param_path(&e, "scheme"), e.to_string(), "make horizon a multiple of tau with particles >= 2");
    } else {
        let steps = scheme.config().steps().unwrap_or(0);
        if steps < 4 || steps % 4 != 0 {
            issues.push(
                "scheme.horizon",
                format!("need a positive multiple of 4 steps, got {steps}"),
                "choose horizon = 4k·tau",
            );
        }
    }
    if !(scheme.truncation_tol > 0.0 && scheme.truncation_tol < 1.0) {
        issues.push("scheme.truncation_tol", "must lie in (0, 1)", "use e.g. 1e-6");
    }
    if !(diagnostics.z > 0.0) {
        issues.push("diagnostics.z", "must be positive", "use the default z = 4");
    }
    if !(diagnostics.floor >= 0.0) {
        issues.push("diagnostics.floor", "must be nonnegative", "use e.g. 1e-3");
    }
    if diagnostics.rate_levels < 4 {
        issues.push("diagnostics.rate_levels", "rate fits need at least 4 levels", "use rate_levels = 6");
    }
    if !(diagnostics.rate_base_tau > 0.0) {
        issues.push("diagnostics.rate_base_tau", "must be positive", "use e.g. 0.125");
    }
    if diagnostics.holder_gaps.len() < 4 {
        issues.push("diagnostics.holder_gaps", "need at least 4 gaps", "use e.g. [1, 2, 4, 8, 16]");
    }
    if diagnostics.semigroup_replicas < 2 {
        issues.push("diagnostics.semigroup_replicas", "need at least 2", "use 8");
    }
    if diagnostics.separations.iter().filter(|s| **s > 0.0).count() < 3 {
        issues.push("diagnostics.separations", "need at least 3 positive separations", "use [0.05, 0.1, 0.2, 0.4]");
    }
    if output.dir.is_empty() {
        issues.push("output.dir", "empty output directory", "set dir = \"out\"");
    } else if Path::new(&output.dir).is_file() {
        issues.push("output.dir", "path exists and is a file", "choose a directory path");
    }

    let Some(model) = model else {
        return Err(ConfigError { issues: issues.0 });
    };
    let params = match table.get("params") {
        None if model == ModelId::StarStableTrunc => {
            issues.push(
                "params.radial",
                "star-shaped model needs a radial tail table [params.radial]",
                "add [params.radial] with kind = \"power\", coef, alpha and upper (or another family)",
            );
            None
        }
        None => Some(ModelParams::defaults(model)),
        Some(v) => {
            let parsed = match model {
                ModelId::Brownian => v.clone().try_into().map(ModelParams::Brownian),
                ModelId::CompoundPoisson => v.clone().try_into().map(ModelParams::CompoundPoisson),
                ModelId::StarStableTrunc => {
                    if v.get("radial").is_none() {
                        issues.push(
                            "params.radial",
                            "star-shaped model needs a radial tail table [params.radial]",
                            "add [params.radial] with kind = \"power\", coef, alpha and upper (or another family)",
                        );
                    }
                    v.clone().try_into().map(ModelParams::StarStableTrunc)
                }
                ModelId::MeanFieldKinetic => v.clone().try_into().map(ModelParams::MeanFieldKinetic),
                ModelId::W1PureJump => v.clone().try_into().map(ModelParams::W1PureJump),
            };
            match parsed {
                Ok(p) => Some(p),
                Err(e) => {
                    if !issues.0.iter().any(|i| i.path == "params.radial") {
                        issues.push("params", e.message().trim().to_string(), format!("see the parameters of `{}`", model.name()));
                    }
                    None
                }
            }
        }
    };
    if let Some(p) = &params {
        if let Err(e) = p.build(scheme.truncation_tol) {
            issues.push(param_path(&e, "params"), e.to_string(), "adjust the parameter to the stated range");
        }
    }
    let initial: InitialLaw = match table.get("initial") {
        None => model.default_initial(),
        Some(v) => match v.clone().try_into() {
            Ok(i) => i,
            Err(e) => {
                let e: toml::de::Error = e;
                issues.push("initial", e.message().trim().to_string(), "use kind = \"gaussian\" (mean, sd) or \"dirac\" (at)");
                model.default_initial()
            }
        },
    };
    let dim = params.as_ref().and_then(|p| p.build(scheme.truncation_tol).ok()).map(|m| {
        use crate::euler_scheme::CoefficientField;
        m.dim()
    });
    match (&initial, dim) {
        (InitialLaw::Dirac { at }, Some(d)) if at.len() != d => {
            issues.push("initial.at", format!("point has {} coordinates, model has {d}", at.len()), "match the model dimension");
        }
        (InitialLaw::Gaussian { sd, .. }, _) if !(*sd >= 0.0) => {
            issues.push("initial.sd", "must be nonnegative", "use sd = 1.0");
        }
        _ => {}
    }
    if diagnostics.select.is_empty() {
        diagnostics.select = DiagnosticKind::defaults_for(model);
    }
    diagnostics.select.sort();
    diagnostics.select.dedup();
    if diagnostics.select.contains(&DiagnosticKind::Kinetic) {
        if let Ok(steps) = scheme.config().steps() {
            if steps % 8 != 0 {
                issues.push(
                    "scheme.horizon",
                    format!("the kinetic diagnostic needs a multiple of 8 steps, got {steps}"),
                    "choose horizon = 8k·tau",
                );
            }
        }
    }
    for k in &diagnostics.select {
        let ok = match k {
            DiagnosticKind::Kinetic | DiagnosticKind::Lipschitz => model == ModelId::MeanFieldKinetic,
            DiagnosticKind::W1 => model == ModelId::W1PureJump,
            _ => true,
        };
        if !ok {
            issues.push(
                "diagnostics.select",
                format!("diagnostic `{k:?}` does not apply to `{}`", model.name()),
                "remove it or leave select empty for the model's defaults",
            );
        }
    }
    if !issues.0.is_empty() {
        return Err(ConfigError { issues: issues.0 });
    }
    Ok(ExperimentSpec {
        model,
        params: params.expect("checked above"),
        initial,
        scheme,
        diagnostics,
        output,
    })
}

/// Reads and validates a config file.
pub fn validate_config(path: &Path) -> Result<ExperimentSpec, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        issues: vec![ConfigIssue {
            path: "<file>".into(),
            message: format!("cannot read {}: {e}", path.display()),
            remedy: "check the path".into(),
        }],
    })?;
    parse_config(&text)
}
