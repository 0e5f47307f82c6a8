use std::path::PathBuf;

use hypocert::funcineq::{derive_functional_constants, FunctionalConstants};
use hypocert::oracle::{run_oracle_suite, OracleSuite};
use hypocert::potentials::extract_constants;
use hypocert::report::SCHEMA_VERSION;
use hypocert::simulator::{fit_decay, n_sweep, run, DecayFit, SweepTable, TimeSeries};
use hypocert::{certify, BumpSign, Certificate, CertifyOptions, ConstantsBundle, Mode, ModelConfig, PotentialSpec, Provenance};
use serde::{Deserialize, Serialize};

use crate::config::{CertifySection, ModeChoice, OracleSection, ReportFormat, RunConfig};
use crate::output;
use crate::CliError;

/// Result of a successful command.
#[derive(Debug, Clone)]
pub struct Outcome {
    /// One-line human summary for stdout.
    pub summary: String,
    pub files: Vec<PathBuf>,
    pub report: serde_json::Value,
}

/// Fields shared by every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub schema_version: String,
    pub command: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub config: RunConfig,
}

impl Meta {
    fn new(command: &str, cfg: &RunConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            command: command.to_string(),
            config_hash: cfg.content_hash(),
            master_seed: cfg.master_seed,
            config: cfg.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyReport {
    #[serde(flatten)]
    pub meta: Meta,
    pub derived: FunctionalConstants,
    pub certificate: Certificate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitFailure {
    pub observable_id: String,
    pub diagnostic: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    #[serde(flatten)]
    pub meta: Meta,
    pub fits: Vec<DecayFit>,
    pub fit_failures: Vec<FitFailure>,
    /// Present with the `json` report format instead of the CSV file.
    #[serde(default)]
    pub series: Option<TimeSeries>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    #[serde(flatten)]
    pub meta: Meta,
    pub table: SweepTable,
    #[serde(default)]
    pub certified_lambda: Option<f64>,
    /// Certified λ below every fitted upper confidence bound.
    #[serde(default)]
    pub certificate_below_fits: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    #[serde(flatten)]
    pub meta: Meta,
    pub oracle_suite: OracleSuite,
}

/// Potential constants plus derived κ and C_LS, honouring user inputs.
pub fn build_bundle(model: &ModelConfig, section: &CertifySection) -> Result<(ConstantsBundle, FunctionalConstants), CliError> {
    let (u, w) = (&model.confinement, &model.interaction);
    let mut bundle = extract_constants(u, w)?;
    if let Some(k) = section.kappa {
        bundle.set_kappa(k, Provenance::UserSupplied)?;
    }
    if let Some(c) = section.c_ls {
        bundle.set_c_ls(c, Provenance::UserSupplied)?;
    }
    let derived = if section.auto_derive {
        derive_functional_constants(u, w, &mut bundle, section.rho_marginal.map(|r| (r, Provenance::UserSupplied)))?
    } else {
        FunctionalConstants::default()
    };
    Ok((bundle, derived))
}

/// Options for `mode`; the split variant runs on the first theorem whose
/// inputs are available.
pub fn certify_options(mode: ModeChoice, bundle: &ConstantsBundle, refine: bool) -> CertifyOptions {
    let (mode, split) = match mode {
        ModeChoice::Thm3 => (Mode::Thm3, false),
        ModeChoice::Thm4 => (Mode::Thm4, false),
        ModeChoice::Split if bundle.k_prime.is_finite() || bundle.c_ls.is_none() => (Mode::Thm3, true),
        ModeChoice::Split => (Mode::Thm4, true),
    };
    CertifyOptions { mode, split, refine }
}

pub fn certify_config(cfg: &RunConfig) -> Result<(Certificate, FunctionalConstants), CliError> {
    let (bundle, derived) = build_bundle(&cfg.model, &cfg.certify)?;
    let opts = certify_options(cfg.certify.mode, &bundle, cfg.certify.refine);
    Ok((certify(&bundle, &opts)?, derived))
}

fn out_dir(cfg: &RunConfig) -> Option<PathBuf> {
    cfg.output_dir.clone()
}

pub fn run_certify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (certificate, derived) = certify_config(cfg)?;
    let report = CertifyReport {
        meta: Meta::new("certify", cfg),
        derived,
        certificate,
    };
    let mut files = Vec::new();
    if let Some(dir) = out_dir(cfg) {
        files.push(output::write_json(&dir, "certificate.json", &report)?);
    }
    let c = &report.certificate;
    let mut summary = format!(
        "lambda = {:e}, C0 = {:e}, variant = {:?}, provenance = {:?}, certified = {}",
        c.lambda, c.c0, c.variant, c.provenance, c.certified
    );
    if let Some(ls) = c.lambda_single_m {
        summary.push_str(&format!(", lambda_single_m = {ls:e}"));
    }
    if !c.certified {
        return Err(CliError::Failed(format!(
            "not certified ({summary}): {}",
            c.diagnostics.join("; ")
        )));
    }
    Ok(Outcome {
        summary,
        files,
        report: serde_json::to_value(&report).expect("report serializes"),
    })
}

pub fn run_simulate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let sim = cfg
        .simulate
        .as_ref()
        .ok_or_else(|| CliError::Config("missing `simulate` section".into()))?;
    let series = run(&cfg.model, &sim.integrator, &sim.run_spec(cfg.master_seed))?;
    let mut fits = Vec::new();
    let mut fit_failures = Vec::new();
    for req in &sim.fits {
        match fit_decay(&series, req.observable, req.equilibrium_value, cfg.master_seed) {
            Ok(f) => fits.push(f),
            Err(hypocert::Error::NoFit(msg)) => fit_failures.push(FitFailure {
                observable_id: req.observable.id().to_string(),
                diagnostic: msg,
            }),
            Err(e) => return Err(e.into()),
        }
    }
    let json_only = cfg.report_format == ReportFormat::Json;
    let report = SimulateReport {
        meta: Meta::new("simulate", cfg),
        fits,
        fit_failures,
        series: json_only.then(|| series.clone()),
    };
    let mut files = Vec::new();
    if let Some(dir) = out_dir(cfg) {
        if !json_only {
            files.push(output::write_timeseries(&dir, &series)?);
        }
        files.push(output::write_json(&dir, "run.json", &report)?);
    }
    let summary = report
        .fits
        .iter()
        .map(|f| format!("{}: lambda_hat = {:.4} [{:.4}, {:.4}]", f.observable_id, f.lambda_hat, f.ci_low, f.ci_high))
        .chain(report.fit_failures.iter().map(|f| format!("{}: no fit ({})", f.observable_id, f.diagnostic)))
        .collect::<Vec<_>>();
    let summary = if summary.is_empty() {
        format!("{} records of {} replicas", series.times.len(), series.replicas)
    } else {
        summary.join("\n")
    };
    Ok(Outcome {
        summary,
        files,
        report: serde_json::to_value(&report).expect("report serializes"),
    })
}

pub fn run_sweep(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let sw = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("missing `sweep` section".into()))?;
    let table = n_sweep(
        &cfg.model,
        &sw.particles,
        &sw.integrator,
        sw.replicas,
        sw.horizon,
        &sw.init,
        sw.observable,
        sw.equilibrium_value,
        sw.stride,
        cfg.master_seed,
    )?;
    let (certified_lambda, certificate_below_fits) = if sw.compare_certificate {
        let (c, _) = certify_config(cfg)?;
        let below = table
            .rows
            .iter()
            .all(|r| r.fit.as_ref().is_some_and(|f| c.lambda <= f.ci_high));
        (Some(c.lambda), Some(below))
    } else {
        (None, None)
    };
    let report = SweepReport {
        meta: Meta::new("sweep", cfg),
        table,
        certified_lambda,
        certificate_below_fits,
    };
    let mut files = Vec::new();
    if let Some(dir) = out_dir(cfg) {
        if cfg.report_format == ReportFormat::CsvBundle {
            files.push(output::write_sweep(&dir, &report.table)?);
        }
        files.push(output::write_json(&dir, "sweep.json", &report)?);
    }
    let mut summary: Vec<String> = report
        .table
        .rows
        .iter()
        .map(|r| match &r.fit {
            Some(f) => format!("N = {}: lambda_hat = {:.4} [{:.4}, {:.4}]", r.particles, f.lambda_hat, f.ci_low, f.ci_high),
            None => format!("N = {}: no fit ({})", r.particles, r.diagnostic.as_deref().unwrap_or("")),
        })
        .collect();
    if let Some(s) = report.table.relative_spread {
        summary.push(format!("relative spread = {s:.4}"));
    }
    Ok(Outcome {
        summary: summary.join("\n"),
        files,
        report: serde_json::to_value(&report).expect("report serializes"),
    })
}

/// Two particles on the line in a quadratic trap with a weak attractive
/// bump interaction.
pub fn default_oracle_config() -> RunConfig {
    RunConfig {
        model: ModelConfig::new(
            2,
            PotentialSpec::quadratic(1.0, 1).expect("valid"),
            PotentialSpec::bump(0.1, 1.0, BumpSign::Attractive, 1).expect("valid"),
        )
        .expect("valid"),
        master_seed: 0,
        output_dir: None,
        report_format: ReportFormat::default(),
        certify: CertifySection::default(),
        simulate: None,
        sweep: None,
        oracle: Some(OracleSection::default()),
    }
}

pub fn run_oracle(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let sizes = cfg.oracle.clone().unwrap_or_default().sizes;
    let mut model = cfg.model;
    model.particles = 2;
    let (bundle, _) = build_bundle(&model, &cfg.certify)?;
    let m = certify(&bundle, &certify_options(cfg.certify.mode, &bundle, false))
        .ok()
        .map(|c| (c.boundedness.m1, c.boundedness.m2));
    let suite = run_oracle_suite(&model, bundle.c_ls, m, sizes, cfg.master_seed)?;
    let report = OracleReport {
        meta: Meta::new("oracle", cfg),
        oracle_suite: suite,
    };
    let mut files = Vec::new();
    if let Some(dir) = out_dir(cfg) {
        files.push(output::write_json(&dir, "oracle.json", &report)?);
    }
    let s = &report.oracle_suite;
    let count = |v: &[bool]| format!("{}/{}", v.iter().filter(|p| **p).count(), v.len());
    let summary = format!(
        "lyapunov lemma {}, moment bound {}, boundedness {}, fd {}, pass = {}",
        count(&s.lyapunov_lemma.iter().map(|c| c.check.pass).collect::<Vec<_>>()),
        count(&s.moment_bound.iter().map(|c| c.check.pass).collect::<Vec<_>>()),
        count(&s.boundedness.iter().map(|c| c.check.pass).collect::<Vec<_>>()),
        if s.fd.pass { "pass" } else { "fail" },
        s.pass
    );
    if !s.pass {
        return Err(CliError::Failed(format!("oracle suite failed: {summary}")));
    }
    Ok(Outcome {
        summary,
        files,
        report: serde_json::to_value(&report).expect("report serializes"),
    })
}
