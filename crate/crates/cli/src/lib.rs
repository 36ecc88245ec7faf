//! Commands behind the `cryomux` binary. Each returns the text it prints and
//! writes its artifacts plus a `manifest.json` into the output directory.

pub mod report;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use cryomux_core::campaign::{fingerprint, run_coherence_campaign, sha256_hex, CampaignResult};
use cryomux_core::config::{OutputFormat, RunConfig};
use cryomux_core::device::bundled_qubit;
use cryomux_core::mux::MuxModel;
use cryomux_core::planner::{budget_report, BudgetConfig};
use cryomux_core::sweep::{extract_noise_params, extract_noise_params_table, read_dispersion_table, run_flux_sweep, sweet_spot_rate};
use cryomux_core::Error;
use log::{info, warn};
use serde::Serialize;

use crate::report::{compare_campaigns, path_summary, Comparison, NoiseReport, PathSummary};

/// Failure with its exit status: 2 for usage and configuration problems, 1 otherwise.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Json(_) => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Serialize)]
struct FileDigest {
    file: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    config_fingerprint: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    config: Option<&'a RunConfig>,
    parameters: serde_json::Value,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Collects artifacts for one command and finishes with the manifest.
struct OutputSet {
    dir: PathBuf,
    written: Vec<FileDigest>,
}

impl OutputSet {
    fn new(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        info!("wrote {}", path.display());
        self.written.push(FileDigest { file: name.to_owned(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    fn finish(mut self, mut manifest: Manifest) -> CliResult<Vec<PathBuf>> {
        manifest.outputs = std::mem::take(&mut self.written);
        let text = to_json(&manifest)?;
        let path = self.dir.join("manifest.json");
        fs::write(&path, text)?;
        let mut files: Vec<PathBuf> = manifest.outputs.iter().map(|d| self.dir.join(&d.file)).collect();
        files.push(path);
        Ok(files)
    }
}

fn input_digest(path: &Path) -> CliResult<FileDigest> {
    let bytes = fs::read(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(FileDigest { file, sha256: sha256_hex(&bytes) })
}

fn campaign_bytes(result: &CampaignResult, format: OutputFormat) -> CliResult<Vec<u8>> {
    match format {
        OutputFormat::Csv => {
            let mut buf = Vec::new();
            result.write_csv(&mut buf)?;
            Ok(buf)
        }
        OutputFormat::Json => Ok(to_json(result)?.into_bytes()),
    }
}

fn extension(format: OutputFormat) -> &'static str {
    match format {
        OutputFormat::Csv => "csv",
        OutputFormat::Json => "json",
    }
}

#[derive(Serialize)]
struct QubitSummary {
    name: String,
    injected_photons: f64,
    campaign_fingerprint: String,
    reference: PathSummary,
    mux: PathSummary,
    comparison: Option<Comparison>,
}

#[derive(Serialize)]
struct SweepSummary {
    qubit: Option<String>,
    points: usize,
    noise_fit: NoiseReport,
}

#[derive(Serialize)]
struct SimulationSummary {
    seed: u64,
    config_fingerprint: String,
    repetitions_per_path: usize,
    qubits: Vec<QubitSummary>,
    flux_sweep: SweepSummary,
}

/// Runs a reference/mux campaign for every configured qubit and a flux sweep
/// of the tunable qubit, writing per-path tables, `summary.json` and the manifest.
pub fn cmd_simulate(
    config_path: &Path,
    seed_override: Option<u64>,
    out_dir: Option<&Path>,
    format: Option<OutputFormat>,
) -> CliResult<Vec<PathBuf>> {
    let cfg = RunConfig::load(config_path)?;
    let seed = seed_override.unwrap_or(cfg.seed);
    let format = format.unwrap_or(cfg.outputs.format);
    let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(&cfg.outputs.dir));
    let mux_model = cfg.mux_model()?;
    let mut out = OutputSet::new(&dir)?;
    let ext = extension(format);

    let mut qubits = Vec::new();
    for qubit in &cfg.qubits {
        let system = cfg.campaign_system(qubit);
        info!("campaign for {} with n_add = {}", qubit.name, system.n_add);
        let (reference, mux) = run_coherence_campaign(&system, &cfg.campaign, seed)?;
        out.write(&format!("{}_ref.{ext}", qubit.name), &campaign_bytes(&reference, format)?)?;
        out.write(&format!("{}_mux.{ext}", qubit.name), &campaign_bytes(&mux, format)?)?;
        let comparison = match compare_campaigns(&reference, &mux, qubit.readout().ok()) {
            Ok(c) => Some(c),
            Err(e) => {
                warn!("no comparison for {}: {e}", qubit.name);
                None
            }
        };
        qubits.push(QubitSummary {
            name: qubit.name.clone(),
            injected_photons: system.n_add,
            campaign_fingerprint: reference.fingerprint.clone(),
            reference: path_summary(&reference)?,
            mux: path_summary(&mux)?,
            comparison,
        });
    }

    let sweep_qubit = cfg.sweep_qubit()?;
    let grid = cfg.sweep.phi_grid()?;
    let sweep = run_flux_sweep(&sweep_qubit, cfg.noise, &mux_model, &cfg.sweep, &grid, seed)?;
    let sweep_bytes = match format {
        OutputFormat::Csv => {
            let mut buf = Vec::new();
            sweep.write_csv(&mut buf)?;
            buf
        }
        OutputFormat::Json => to_json(&sweep)?.into_bytes(),
    };
    out.write(&format!("flux_sweep.{ext}"), &sweep_bytes)?;
    let fit = extract_noise_params(&sweep)?;

    let config_fingerprint = fingerprint(&cfg)?;
    let summary = SimulationSummary {
        seed,
        config_fingerprint: config_fingerprint.clone(),
        repetitions_per_path: cfg.campaign.repetitions(),
        qubits,
        flux_sweep: SweepSummary {
            qubit: cfg.sweep.qubit.clone(),
            points: sweep.points.len(),
            noise_fit: NoiseReport::new(&fit, sweep.gamma_phi_ss, sweep.points.len()),
        },
    };
    out.write("summary.json", to_json(&summary)?.as_bytes())?;
    out.finish(Manifest {
        tool: "cryomux",
        version: env!("CARGO_PKG_VERSION"),
        command: "simulate",
        seed: Some(seed),
        config_fingerprint: Some(config_fingerprint),
        config: Some(&cfg),
        parameters: serde_json::json!({ "format": format }),
        inputs: vec![input_digest(config_path)?],
        outputs: Vec::new(),
    })
}

/// Extracts √A and √B from a (dispersion_hz_per_phi0, gamma_phi_e_hz) table.
/// Without an explicit sweet-spot rate the row of smallest |dispersion| supplies it.
pub fn cmd_fit_noise(csv_path: &Path, sweet_spot: Option<f64>, out_dir: Option<&Path>) -> CliResult<String> {
    let file = fs::File::open(csv_path).map_err(|e| CliError::Usage(format!("cannot open {}: {e}", csv_path.display())))?;
    let samples = read_dispersion_table(file)?;
    let gamma_ss = match sweet_spot {
        Some(r) => r,
        None => sweet_spot_rate(&samples)?,
    };
    let fit = extract_noise_params_table(&samples, gamma_ss)?;
    let text = to_json(&NoiseReport::new(&fit, gamma_ss, samples.len()))?;
    if let Some(dir) = out_dir {
        let mut out = OutputSet::new(dir)?;
        out.write("noise_fit.json", text.as_bytes())?;
        out.finish(Manifest {
            tool: "cryomux",
            version: env!("CARGO_PKG_VERSION"),
            command: "fit-noise",
            seed: None,
            config_fingerprint: None,
            config: None,
            parameters: serde_json::json!({ "sweet_spot_rate": sweet_spot }),
            inputs: vec![input_digest(csv_path)?],
            outputs: Vec::new(),
        })?;
    }
    Ok(text)
}

fn read_campaign(path: &Path) -> CliResult<CampaignResult> {
    let file = fs::File::open(path).map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))?;
    CampaignResult::read_csv(file).map_err(|e| match e {
        Error::Config(m) => CliError::Usage(format!("{}: {m}", path.display())),
        Error::Csv(m) => CliError::Usage(format!("{}: {m}", path.display())),
        other => CliError::Runtime(format!("{}: {other}", path.display())),
    })
}

/// Welch comparison of a reference and a mux campaign table. κ and χ for the
/// photon-number back-out come from `config` when given, else from the bundled table.
pub fn cmd_compare(ref_csv: &Path, mux_csv: &Path, config: Option<&Path>, out_dir: Option<&Path>) -> CliResult<String> {
    let reference = read_campaign(ref_csv)?;
    let mux = read_campaign(mux_csv)?;
    if reference.qubit != mux.qubit {
        return Err(CliError::Usage(format!("tables describe different qubits: {} and {}", reference.qubit, mux.qubit)));
    }
    let qubit = match config {
        Some(p) => RunConfig::load(p)?.qubits.into_iter().find(|q| q.name == reference.qubit),
        None => bundled_qubit(&reference.qubit),
    };
    let readout = qubit.and_then(|q| q.readout().ok());
    if readout.is_none() {
        warn!("no κ/χ known for {}; skipping the photon-number estimate", reference.qubit);
    }
    let comparison = compare_campaigns(&reference, &mux, readout)?;
    let text = to_json(&comparison)?;
    if let Some(dir) = out_dir {
        let mut out = OutputSet::new(dir)?;
        out.write("compare.json", text.as_bytes())?;
        let mut inputs = vec![input_digest(ref_csv)?, input_digest(mux_csv)?];
        if let Some(p) = config {
            inputs.push(input_digest(p)?);
        }
        out.finish(Manifest {
            tool: "cryomux",
            version: env!("CARGO_PKG_VERSION"),
            command: "compare",
            seed: None,
            config_fingerprint: None,
            config: None,
            parameters: serde_json::json!({}),
            inputs,
            outputs: Vec::new(),
        })?;
    }
    Ok(text)
}

fn load_optional(config: Option<&Path>) -> CliResult<(Option<RunConfig>, MuxModel, BudgetConfig)> {
    match config {
        Some(p) => {
            let cfg = RunConfig::load(p)?;
            let model = cfg.mux_model()?;
            let budget = cfg.budget.clone();
            Ok((Some(cfg), model, budget))
        }
        None => Ok((None, MuxModel::default(), BudgetConfig::default())),
    }
}

/// Cooling-power budget for the configured multiplexer deployment.
pub fn cmd_budget(config: Option<&Path>, out_dir: Option<&Path>) -> CliResult<String> {
    let (cfg, model, budget) = load_optional(config)?;
    let report = budget_report(&budget, &model)?;
    let text = to_json(&report)?;
    if let Some(dir) = out_dir {
        let mut out = OutputSet::new(dir)?;
        out.write("budget.json", text.as_bytes())?;
        out.finish(Manifest {
            tool: "cryomux",
            version: env!("CARGO_PKG_VERSION"),
            command: "budget",
            seed: None,
            config_fingerprint: cfg.as_ref().map(fingerprint).transpose()?,
            config: cfg.as_ref(),
            parameters: serde_json::json!({}),
            inputs: config.map(input_digest).transpose()?.into_iter().collect(),
            outputs: Vec::new(),
        })?;
    }
    Ok(text)
}

#[derive(Debug, Serialize)]
pub struct RfRow {
    pub freq_hz: f64,
    pub insertion_loss_db: f64,
    pub isolation_db: f64,
}

/// Insertion loss and isolation on `points` evenly spaced frequencies in [fmin, fmax].
pub fn cmd_rf_report(
    config: Option<&Path>,
    fmin: f64,
    fmax: f64,
    points: usize,
    format: OutputFormat,
    out_dir: Option<&Path>,
) -> CliResult<String> {
    let (cfg, model, _) = load_optional(config)?;
    if !(fmax >= fmin) || points < 1 || (points == 1 && fmax != fmin) {
        return Err(CliError::Usage(format!("need fmin ≤ fmax and at least one point, got [{fmin}, {fmax}] with {points}")));
    }
    let mut rows = Vec::with_capacity(points);
    for k in 0..points {
        let f = if points == 1 { fmin } else { fmin + (fmax - fmin) * k as f64 / (points - 1) as f64 };
        let row = model.insertion_loss(f).and_then(|il| Ok(RfRow { freq_hz: f, insertion_loss_db: il, isolation_db: model.isolation(f)? }));
        match row {
            Ok(r) => rows.push(r),
            Err(e @ Error::OutOfSpan { .. }) => return Err(CliError::Usage(e.to_string())),
            Err(e) => return Err(e.into()),
        }
    }
    let text = match format {
        OutputFormat::Json => to_json(&rows)?,
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &rows {
                w.serialize(r).map_err(|e| CliError::Runtime(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| CliError::Runtime(e.to_string()))?
        }
    };
    if let Some(dir) = out_dir {
        let mut out = OutputSet::new(dir)?;
        out.write(&format!("rf_report.{}", extension(format)), text.as_bytes())?;
        out.finish(Manifest {
            tool: "cryomux",
            version: env!("CARGO_PKG_VERSION"),
            command: "rf-report",
            seed: None,
            config_fingerprint: cfg.as_ref().map(fingerprint).transpose()?,
            config: cfg.as_ref(),
            parameters: serde_json::json!({ "fmin": fmin, "fmax": fmax, "points": points, "format": format }),
            inputs: config.map(input_digest).transpose()?.into_iter().collect(),
            outputs: Vec::new(),
        })?;
    }
    Ok(text)
}
