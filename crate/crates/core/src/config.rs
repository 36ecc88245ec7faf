//! Run configuration: one JSON document describing qubits, hardware models
//! and what to simulate. Unknown keys are rejected.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::campaign::{CampaignConfig, CampaignSystem};
use crate::device::TransmonParams;
use crate::error::{Error, Result};
use crate::mux::{MuxModel, MuxParams};
use crate::noise::NoiseParams;
use crate::planner::BudgetConfig;
use crate::sweep::{SweepConfig, SweepQubit};

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
    pub format: OutputFormat,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into(), format: OutputFormat::Csv }
    }
}

fn default_noise() -> NoiseParams {
    NoiseParams { a_flux: 2.8e-6 * 2.8e-6, b_flux: 15e-9 * 15e-9 }
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub qubits: Vec<TransmonParams>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub mux: MuxParams,
    #[serde(default = "default_noise")]
    pub noise: NoiseParams,
    #[serde(default)]
    pub campaign: CampaignConfig,
    /// Photon number the mux path adds, per qubit name; qubits not listed get zero.
    #[serde(default)]
    pub injected_photons: BTreeMap<String, f64>,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub budget: BudgetConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
    /// Directory that relative fixture paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    /// Parses and validates a configuration. Parse errors carry line and column.
    pub fn from_json_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json_str(&text, base).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.qubits.is_empty() {
            return Err(Error::Config("`qubits` must list at least one qubit".into()));
        }
        let mut names = BTreeSet::new();
        for q in &self.qubits {
            q.validate()?;
            if !names.insert(q.name.as_str()) {
                return Err(Error::Config(format!("duplicate qubit name `{}`", q.name)));
            }
        }
        for (name, &n) in &self.injected_photons {
            if !names.contains(name.as_str()) {
                return Err(Error::Config(format!("injected_photons names unknown qubit `{name}`")));
            }
            if !(n >= 0.0) || !n.is_finite() {
                return Err(Error::Config(format!("injected_photons.{name} must be nonnegative, got {n}")));
            }
            let q = self.qubits.iter().find(|q| &q.name == name).expect("name checked above");
            if n > 0.0 && q.readout().is_err() {
                return Err(Error::Config(format!("qubit `{name}` has injected photons but no kappa_over_2pi/chi_over_2pi")));
            }
        }
        NoiseParams::new(self.noise.a_flux, self.noise.b_flux).map_err(|e| Error::Config(format!("noise: {e}")))?;
        self.mux.validate()?;
        for path in [&self.mux.insertion_loss_csv, &self.mux.isolation_csv].into_iter().flatten() {
            let full = self.base_dir.join(path);
            if !full.is_file() {
                return Err(Error::Config(format!("fixture file `{}` does not exist", full.display())));
            }
        }
        self.campaign.validate()?;
        self.sweep.phi_grid()?;
        if let Some(name) = &self.sweep.qubit {
            let q = self
                .qubits
                .iter()
                .find(|q| &q.name == name)
                .ok_or_else(|| Error::Config(format!("sweep.qubit names unknown qubit `{name}`")))?;
            SweepQubit::from_transmon(q)?;
        }
        self.budget.validate()?;
        Ok(())
    }

    pub fn mux_model(&self) -> Result<MuxModel> {
        MuxModel::from_params(self.mux.clone(), Some(&self.base_dir))
    }

    pub fn campaign_system(&self, qubit: &TransmonParams) -> CampaignSystem {
        CampaignSystem { qubit: qubit.clone(), n_add: self.injected_photons.get(&qubit.name).copied().unwrap_or(0.0) }
    }

    pub fn sweep_qubit(&self) -> Result<SweepQubit> {
        match &self.sweep.qubit {
            Some(name) => {
                let q = self
                    .qubits
                    .iter()
                    .find(|q| &q.name == name)
                    .ok_or_else(|| Error::Config(format!("sweep.qubit names unknown qubit `{name}`")))?;
                SweepQubit::from_transmon(q)
            }
            None => Ok(SweepQubit::default()),
        }
    }
}
