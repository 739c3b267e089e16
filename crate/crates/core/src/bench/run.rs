use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::diagnostics::{
    brownian_holder_check, convergence_rate, convergence_rate_path, coupled_separation, default_dictionary,
    growth_fit, holder_time, kinetic_experiment, lipschitz_in_initial, martingale_residual, semigroup_check,
    w1_theory_suite, RateFit, ResidualReport, RunMeta, TestFunction, VariancePoint,
};
use crate::error::{Error, Result};
use crate::euler_scheme::{run, run_coupled_initials, run_coupled_subdivision, CoefficientField, PathEnsemble};
use crate::models::{InitialLaw, Model, ModelId};
use crate::ot_metrics::EmpiricalMeasure;

use super::config::{DiagnosticKind, ExperimentSpec, ModelParams};

/// Paths exported to CSV unless the full export is requested.
const SAMPLE_PATHS: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedRate {
    pub name: String,
    pub fit: RateFit,
}

/// Everything an experiment computed.
#[derive(Debug, Clone)]
pub struct Results {
    pub reports: Vec<ResidualReport>,
    pub rates: Vec<NamedRate>,
    pub variance: Vec<VariancePoint>,
    pub ensemble: PathEnsemble<f64>,
}

impl Results {
    /// Non-degenerate claims that did not hold.
    pub fn failures(&self) -> Vec<&ResidualReport> {
        self.reports.iter().filter(|r| !r.passed && !r.degenerate).collect()
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub model: ModelId,
    pub dir: PathBuf,
    pub results: Results,
}

fn grid_time(ens: &PathEnsemble<f64>, frac: usize, of: usize) -> f64 {
    ens.times[ens.steps() * frac / of]
}

/// Runs every selected diagnostic of `spec` without touching the disk.
pub fn execute(spec: &ExperimentSpec) -> Result<Results> {
    let model = spec.params.build(spec.scheme.truncation_tol)?;
    let d = model.dim();
    let cfg = spec.scheme.config();
    let tol = spec.diagnostics.tolerance();
    let meta = RunMeta::new(spec.model.name(), cfg.tau, cfg.particles, cfg.seed);
    let mu = spec.initial.sample(d, cfg.particles, cfg.seed)?;
    let ens = run(&mu, &model, &cfg.clone().with_cache())?;
    let p: f64 = model.order().p();
    let horizon = ens.horizon();

    let mut reports = Vec::new();
    let mut rates = Vec::new();
    let mut variance = Vec::new();
    let functions = [TestFunction::one(d), TestFunction::coord(0, d), TestFunction::square(d), TestFunction::cos_sum(d)];
    for kind in &spec.diagnostics.select {
        match kind {
            DiagnosticKind::Weak => {
                let tm = grid_time(&ens, 1, 2);
                for f in &functions {
                    reports.push(crate::diagnostics::weak_equation_residual(&model, f, &ens, tm, tol, meta.clone())?);
                }
            }
            DiagnosticKind::Martingale => {
                let (s, t) = (grid_time(&ens, 1, 4), grid_time(&ens, 3, 4));
                let dict = default_dictionary();
                for f in &functions {
                    reports.extend(martingale_residual(&model, f, &ens, s, t, &dict, tol, meta.clone())?);
                }
            }
            DiagnosticKind::Rate => {
                let mut sweep = cfg.clone();
                sweep.tau = spec.diagnostics.rate_base_tau;
                let pairs = run_coupled_subdivision(&mu, &model, &sweep, spec.diagnostics.rate_levels)?;
                let fit = convergence_rate(&pairs)?;
                reports.push(ResidualReport::slope_at_least("subdivision_slope", &fit, 0.9, meta.clone()));
                rates.push(NamedRate {
                    name: "subdivision".into(),
                    fit,
                });
                rates.push(NamedRate {
                    name: "subdivision_path".into(),
                    fit: convergence_rate_path(&pairs)?,
                });
            }
            DiagnosticKind::Holder => {
                let fit = holder_time(&ens, &spec.diagnostics.holder_gaps, p)?;
                reports.push(ResidualReport::slope_at_least("holder_exponent", &fit, 0.9 / p, meta.clone()));
                rates.push(NamedRate {
                    name: "holder".into(),
                    fit,
                });
                if let (ModelParams::Brownian(b), InitialLaw::Dirac { at }) = (&spec.params, &spec.initial) {
                    let pure = b.sigma_amp == 0.0 && b.drift == 0.0 && b.interaction == 0.0;
                    if pure && at.iter().all(|v| *v == 0.0) {
                        for (a, z) in [(0, 2), (1, 4), (2, 3)] {
                            let (s, t) = (grid_time(&ens, a, 4), grid_time(&ens, z, 4));
                            reports.push(brownian_holder_check(&ens, s, t, b.sigma0, tol, meta.clone())?);
                        }
                    }
                }
            }
            DiagnosticKind::Semigroup => {
                let h = grid_time(&ens, 1, 2);
                reports.push(semigroup_check(
                    &model,
                    &mu,
                    &cfg,
                    h,
                    horizon - h,
                    spec.diagnostics.semigroup_replicas,
                    tol,
                    meta.clone(),
                )?);
            }
            DiagnosticKind::Kinetic => {
                let Model::Kinetic(k) = &model else {
                    return Err(Error::WrongVariant("kinetic diagnostics need the kinetic model".into()));
                };
                let rep = kinetic_experiment(k, &mu, &cfg, tol, meta.clone())?;
                reports.extend(rep.reports);
                variance = rep.variance;
            }
            DiagnosticKind::Lipschitz => {
                let (r, fit) = lipschitz_experiment(&model, &mu, spec, meta.clone())?;
                reports.extend(r);
                rates.push(NamedRate {
                    name: "lipschitz".into(),
                    fit,
                });
            }
            DiagnosticKind::W1 => {
                reports.extend(w1_theory_suite(&model, &mu, &cfg, &spec.diagnostics.w1_suite(), tol, meta.clone())?);
            }
        }
    }
    Ok(Results {
        reports,
        rates,
        variance,
        ensemble: ens,
    })
}

/// Coupled runs from `μ` and its dilation `m + λ(x - m)` about the mean,
/// `λ = 1 + s` for each configured separation `s`. Reports the quality of
/// the exponential fit of the separation ratio over time (largest dilation)
/// and the slope of the horizon separation against the initial one.
fn lipschitz_experiment(
    model: &Model,
    mu: &EmpiricalMeasure<f64>,
    spec: &ExperimentSpec,
    meta: RunMeta,
) -> Result<(Vec<ResidualReport>, RateFit)> {
    let cfg = spec.scheme.config();
    let p: f64 = model.order().p();
    let mean = mu.mean();
    let dilate = |lambda: f64| {
        mu.map_points(|x| x.iter().zip(&mean).map(|(v, m)| m + lambda * (v - m)).collect())
    };
    let identity: Vec<usize> = (0..mu.len()).collect();
    let mut d_init = Vec::new();
    let mut d_end = Vec::new();
    let mut d_se = Vec::new();
    let mut largest = None;
    let seps: Vec<f64> = spec.diagnostics.separations.iter().copied().filter(|s| *s > 0.0).collect();
    let top = seps.iter().copied().fold(0.0, f64::max);
    for &s in &seps {
        let (a, b) = run_coupled_initials(mu, &dilate(1.0 + s)?, model, &cfg, Some(&identity))?;
        let k = a.steps();
        d_init.push(coupled_separation(&a, &b, 0, p).0);
        let (dist, se) = coupled_separation(&a, &b, k, p);
        d_end.push(dist);
        d_se.push(se);
        if s == top {
            largest = Some((a, b));
        }
    }
    let (a, b) = largest.expect("at least one separation");
    let steps = a.steps();
    let d0 = coupled_separation(&a, &b, 0, p).0;
    let ks: Vec<usize> = (1..=8).map(|j| j * steps / 8).collect();
    let times: Vec<f64> = ks.iter().map(|&k| a.times[k]).collect();
    let ratios: Vec<f64> = ks.iter().map(|&k| coupled_separation(&a, &b, k, p).0 / d0).collect();
    let g = growth_fit(&times, &ratios)?;
    let mut reports = vec![ResidualReport::at_least("lipschitz_growth_r2", g.r_squared, 0.0, 0.95, meta.clone())];
    let fit = lipschitz_in_initial(&d_init, &d_end, &d_se)?;
    match fit.fit {
        Some(f) if !fit.degenerate => reports.push(ResidualReport::residual(
            "lipschitz_slope_minus_one",
            f.slope - 1.0,
            f.slope_stderr,
            crate::diagnostics::Tolerance { floor: 0.1, z: 0.0 },
            meta,
        )),
        _ => reports.push(ResidualReport::degenerate("lipschitz_slope_minus_one", meta)),
    }
    Ok((reports, fit))
}

fn sample_paths(ens: &PathEnsemble<f64>, m: usize) -> PathEnsemble<f64> {
    let m = m.min(ens.particles());
    let w = 1.0 / m as f64;
    PathEnsemble {
        dim: ens.dim,
        tau: ens.tau,
        times: ens.times.clone(),
        states: ens.states.iter().map(|s| s[..m * ens.dim].to_vec()).collect(),
        weights: vec![w; m],
        cache: None,
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(dir.join(name))?))
}

#[derive(Serialize)]
struct ReportFile<'a> {
    model: &'a str,
    passed: bool,
    failures: usize,
    reports: &'a [ResidualReport],
    rates: &'a [NamedRate],
    variance: &'a [VariancePoint],
}

fn write_artifacts(spec: &ExperimentSpec, res: &Results, dir: &Path) -> Result<()> {
    fs::write(dir.join("config.toml"), spec.to_toml())?;

    let failures = res.failures().len();
    let mut f = create(dir, "reports.json")?;
    serde_json::to_writer_pretty(
        &mut f,
        &ReportFile {
            model: spec.model.name(),
            passed: failures == 0,
            failures,
            reports: &res.reports,
            rates: &res.rates,
            variance: &res.variance,
        },
    )?;
    f.flush()?;

    let mut w = csv::Writer::from_writer(create(dir, "reports.csv")?);
    w.write_record(["claim", "statistic", "stderr", "tolerance", "check", "passed", "degenerate", "model", "tau", "particles", "seed"])?;
    for r in &res.reports {
        w.write_record([
            r.claim.clone(),
            format!("{:e}", r.statistic),
            format!("{:e}", r.stderr),
            format!("{:e}", r.tolerance),
            format!("{:?}", r.check).to_lowercase(),
            r.passed.to_string(),
            r.degenerate.to_string(),
            r.meta.model.clone(),
            format!("{:e}", r.meta.tau),
            r.meta.particles.to_string(),
            r.meta.seed.to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_writer(create(dir, "rates.csv")?);
    w.write_record(["fit", "x", "y", "stderr", "slope", "slope_lo", "slope_hi", "intercept", "r_squared", "degenerate"])?;
    let num = |v: Option<f64>| v.map_or_else(String::new, |v| format!("{v:e}"));
    for r in &res.rates {
        for i in 0..r.fit.abscissae.len() {
            let fit = r.fit.fit;
            w.write_record([
                r.name.clone(),
                format!("{:e}", r.fit.abscissae[i]),
                format!("{:e}", r.fit.ordinates[i]),
                format!("{:e}", r.fit.stderrs[i]),
                num(fit.map(|f| f.slope)),
                num(fit.map(|f| f.ci[0])),
                num(fit.map(|f| f.ci[1])),
                num(fit.map(|f| f.intercept)),
                num(fit.map(|f| f.r_squared)),
                r.fit.degenerate.to_string(),
            ])?;
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_writer(create(dir, "variance.csv")?);
    w.write_record(["t", "observed", "predicted", "stderr", "passed"])?;
    for v in &res.variance {
        w.write_record([
            format!("{:e}", v.t),
            format!("{:e}", v.observed),
            format!("{:e}", v.predicted),
            format!("{:e}", v.stderr),
            v.passed.to_string(),
        ])?;
    }
    w.flush()?;

    let mut f = create(dir, "paths.bin")?;
    res.ensemble.write_binary(&mut f)?;
    f.flush()?;
    let m = if spec.output.full_csv { usize::MAX } else { SAMPLE_PATHS };
    let mut f = create(dir, "paths.csv")?;
    sample_paths(&res.ensemble, m).write_csv(&mut f)?;
    f.flush()?;
    Ok(())
}

/// Writes all artifacts into a sibling temporary directory and renames it
/// to `dir`, so a failed run never leaves a partial output behind.
pub fn persist(spec: &ExperimentSpec, res: &Results, dir: &Path) -> Result<()> {
    let name = dir
        .file_name()
        .ok_or_else(|| Error::Io(format!("output path {} has no final component", dir.display())))?;
    let parent = dir.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(parent)?;
    let tmp = parent.join(format!(".{}.partial-{}", name.to_string_lossy(), std::process::id()));
    if tmp.exists() {
        fs::remove_dir_all(&tmp)?;
    }
    fs::create_dir(&tmp)?;
    let written = write_artifacts(spec, res, &tmp).and_then(|_| {
        if dir.exists() {
            fs::remove_dir_all(dir)?;
        }
        fs::rename(&tmp, dir)?;
        Ok(())
    });
    if written.is_err() {
        let _ = fs::remove_dir_all(&tmp);
    }
    written
}

/// Runs `spec` and stores its artifacts in `dir`.
pub fn run_experiment(spec: &ExperimentSpec, dir: &Path) -> Result<RunOutcome> {
    let results = execute(spec)?;
    persist(spec, &results, dir)?;
    Ok(RunOutcome {
        model: spec.model,
        dir: dir.to_path_buf(),
        results,
    })
}

/// Default experiment of every shipped model under `root/<model>`, plus a
/// `summary.csv` across models.
pub fn run_suite(root: &Path, seed: u64, particles: Option<usize>) -> Result<Vec<RunOutcome>> {
    let mut out = Vec::new();
    for id in ModelId::ALL {
        let mut spec = ExperimentSpec::default_for(id);
        spec.scheme.seed = seed;
        if let Some(n) = particles {
            spec.scheme.particles = n;
        }
        out.push(run_experiment(&spec, &root.join(id.name()))?);
    }
    let tmp = root.join(format!(".summary.csv.partial-{}", std::process::id()));
    let mut w = csv::Writer::from_path(&tmp)?;
    w.write_record(["model", "claim", "statistic", "stderr", "tolerance", "passed", "degenerate"])?;
    for o in &out {
        for r in &o.results.reports {
            w.write_record([
                o.model.name().to_string(),
                r.claim.clone(),
                format!("{:e}", r.statistic),
                format!("{:e}", r.stderr),
                format!("{:e}", r.tolerance),
                r.passed.to_string(),
                r.degenerate.to_string(),
            ])?;
        }
    }
    w.flush()?;
    drop(w);
    fs::rename(&tmp, root.join("summary.csv"))?;
    Ok(out)
}
