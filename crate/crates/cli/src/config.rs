use std::path::PathBuf;

use hypocert::oracle::SuiteSizes;
use hypocert::simulator::{InitSpec, IntegratorConfig, Observable, RunSpec};
use hypocert::ModelConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModeChoice {
    #[default]
    Thm3,
    Thm4,
    /// Split `(M1, M2)` coefficients on top of whichever theorem applies.
    Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    Json,
    #[default]
    CsvBundle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifySection {
    #[serde(default)]
    pub mode: ModeChoice,
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(rename = "C_LS", default)]
    pub c_ls: Option<f64>,
    /// Log-Sobolev constant of the one-particle conditional marginals.
    #[serde(default)]
    pub rho_marginal: Option<f64>,
    /// Derive κ and C_LS from the potentials where the inputs are absent.
    #[serde(default = "yes")]
    pub auto_derive: bool,
    /// Run the numeric coefficient search next to the closed forms.
    #[serde(default = "yes")]
    pub refine: bool,
}

impl Default for CertifySection {
    fn default() -> Self {
        Self {
            mode: ModeChoice::default(),
            kappa: None,
            c_ls: None,
            rho_marginal: None,
            auto_derive: true,
            refine: true,
        }
    }
}

fn yes() -> bool {
    true
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitRequest {
    pub observable: Observable,
    pub equilibrium_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub integrator: IntegratorConfig,
    pub replicas: usize,
    pub horizon: f64,
    #[serde(default)]
    pub init: InitSpec,
    pub observables: Vec<Observable>,
    #[serde(default = "one")]
    pub stride: u64,
    #[serde(default)]
    pub fits: Vec<FitRequest>,
}

impl SimulateSection {
    pub fn run_spec(&self, seed: u64) -> RunSpec {
        RunSpec {
            replicas: self.replicas,
            horizon: self.horizon,
            init: self.init.clone(),
            observables: self.observables.clone(),
            stride: self.stride,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub particles: Vec<usize>,
    pub integrator: IntegratorConfig,
    pub replicas: usize,
    pub horizon: f64,
    #[serde(default)]
    pub init: InitSpec,
    pub observable: Observable,
    pub equilibrium_value: f64,
    #[serde(default = "one")]
    pub stride: u64,
    /// Also certify the model and compare λ with every fitted interval.
    #[serde(default)]
    pub compare_certificate: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    #[serde(default)]
    pub sizes: SuiteSizes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub report_format: ReportFormat,
    #[serde(default)]
    pub certify: CertifySection,
    #[serde(default)]
    pub simulate: Option<SimulateSection>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub oracle: Option<OracleSection>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.model.validate()?;
        if let Some(s) = &self.simulate {
            if s.observables.is_empty() {
                return Err(CliError::Config("simulate.observables must not be empty".into()));
            }
            s.integrator.validate()?;
            if s.replicas == 0 {
                return Err(CliError::Config("simulate.replicas must be >= 1".into()));
            }
            for f in &s.fits {
                if !s.observables.contains(&f.observable) {
                    return Err(CliError::Config(format!(
                        "fit requested for unrecorded observable {}",
                        f.observable
                    )));
                }
            }
        }
        if let Some(s) = &self.sweep {
            if s.particles.is_empty() {
                return Err(CliError::Config("sweep.particles must not be empty".into()));
            }
            s.integrator.validate()?;
        }
        for v in [self.certify.kappa, self.certify.c_ls, self.certify.rho_marginal]
            .into_iter()
            .flatten()
        {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!("constants must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// Git-style content hash: SHA-256 of `"blob <len>\0"` followed by the
    /// canonical JSON of the configuration. `output_dir` is left out.
    pub fn content_hash(&self) -> String {
        let body = serde_json::to_vec(&Self {
            output_dir: None,
            ..self.clone()
        })
        .expect("config serializes");
        let mut h = Sha256::new();
        h.update(format!("blob {}\0", body.len()).as_bytes());
        h.update(&body);
        hex::encode(h.finalize())
    }
}
