//! Synthetic coherence measurements: decay traces, long interleaved
//! reference/multiplexer campaigns and the added-dephasing comparison.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::device::TransmonParams;
use crate::error::{Error, Result};
use crate::fit::{fit_exponential_xy, fit_gauss_exponential_xy, ExpFit, GaussExpFit};
use crate::noise::{chi_closed, tphi_from, DephasingContext, DispersiveReadout, NoiseParams};
use crate::stats::{combined_se, mean, welch_t, WelchResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    Relaxation,
    HahnEcho,
}

/// Parameters a trace was generated from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceTruth {
    pub t1: f64,
    /// Exponential pure-dephasing rate [1/s].
    pub gamma_phi: f64,
    pub noise: NoiseParams,
    pub dispersion_d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceTrace {
    pub kind: TraceKind,
    pub times: Vec<f64>,
    pub signal: Vec<f64>,
    pub seed: u64,
    pub truth: Option<TraceTruth>,
}

impl CoherenceTrace {
    pub fn fit(&self) -> Result<ExpFit> {
        fit_exponential(self)
    }
}

/// Delay grid of `points` values: t = 0 followed by log-spaced delays from
/// 1% to 100% of 3·`expected`.
pub fn delay_grid(expected: f64, points: usize) -> Result<Vec<f64>> {
    if !(expected > 0.0) || !expected.is_finite() {
        return Err(Error::Domain(format!("expected decay time must be positive, got {expected}")));
    }
    if points < 5 {
        return Err(Error::Domain(format!("a delay grid needs at least 5 points, got {points}")));
    }
    let (lo, hi) = ((0.03 * expected).ln(), (3.0 * expected).ln());
    let n = points - 1;
    let mut grid = Vec::with_capacity(points);
    grid.push(0.0);
    grid.extend((0..n).map(|k| (lo + (hi - lo) * k as f64 / (n - 1) as f64).exp()));
    Ok(grid)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::Domain("delay grid must be nonnegative, finite and strictly increasing".into()));
    }
    Ok(())
}

fn add_readout_noise(signal: &mut [f64], sigma: f64, seed: u64) -> Result<()> {
    if sigma == 0.0 {
        return Ok(());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Domain(format!("readout noise σ = {sigma}: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for s in signal.iter_mut() {
        *s += normal.sample(&mut rng);
    }
    Ok(())
}

/// Relaxation trace exp(−t/T1) plus Gaussian readout noise.
pub fn synth_t1_trace(t1_true: f64, grid: &[f64], noise_sigma: f64, seed: u64) -> Result<CoherenceTrace> {
    if !(t1_true > 0.0) {
        return Err(Error::Domain(format!("T1 must be positive, got {t1_true}")));
    }
    check_grid(grid)?;
    let mut signal: Vec<f64> = grid.iter().map(|t| (-t / t1_true).exp()).collect();
    add_readout_noise(&mut signal, noise_sigma, seed)?;
    Ok(CoherenceTrace {
        kind: TraceKind::Relaxation,
        times: grid.to_vec(),
        signal,
        seed,
        truth: Some(TraceTruth { t1: t1_true, gamma_phi: 0.0, noise: NoiseParams::zero(), dispersion_d: 0.0 }),
    })
}

/// How flux-noise dephasing shapes a synthesized echo.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EchoEnvelope {
    /// exp(−χ(t)) with the Gaussian 1/f part and exponential white part.
    Physical,
    /// exp(−Γφᵉ t) with the effective single-exponential rate.
    #[default]
    EffectiveExponential,
}

/// Echo trace exp(−t/2T1)·exp(−χ(t)) plus Gaussian readout noise.
pub fn synth_echo_trace(
    t1_true: f64,
    noise: NoiseParams,
    dispersion_d: f64,
    grid: &[f64],
    noise_sigma: f64,
    seed: u64,
) -> Result<CoherenceTrace> {
    let truth = TraceTruth { t1: t1_true, gamma_phi: 0.0, noise, dispersion_d };
    synth_echo_trace_with(truth, EchoEnvelope::Physical, grid, noise_sigma, seed)
}

/// Echo trace for `truth`, including an extra exponential dephasing rate.
pub fn synth_echo_trace_with(
    truth: TraceTruth,
    envelope: EchoEnvelope,
    grid: &[f64],
    noise_sigma: f64,
    seed: u64,
) -> Result<CoherenceTrace> {
    if !(truth.t1 > 0.0) {
        return Err(Error::Domain(format!("T1 must be positive, got {}", truth.t1)));
    }
    if !(truth.gamma_phi >= 0.0) {
        return Err(Error::Domain(format!("dephasing rate must be nonnegative, got {}", truth.gamma_phi)));
    }
    check_grid(grid)?;
    let d = truth.dispersion_d.abs();
    let flux_rate = crate::noise::dephasing_rate_echo(truth.noise, d);
    let mut signal = Vec::with_capacity(grid.len());
    for &t in grid {
        let flux = match envelope {
            EchoEnvelope::EffectiveExponential => flux_rate * t,
            EchoEnvelope::Physical if t > 0.0 => chi_closed(truth.noise, DephasingContext::new(d, t)?),
            EchoEnvelope::Physical => 0.0,
        };
        signal.push((-t / (2.0 * truth.t1) - truth.gamma_phi * t - flux).exp());
    }
    add_readout_noise(&mut signal, noise_sigma, seed)?;
    Ok(CoherenceTrace { kind: TraceKind::HahnEcho, times: grid.to_vec(), signal, seed, truth: Some(truth) })
}

/// Single-exponential fit a·exp(−Γt) + c. For an echo trace Γ = 1/T2e.
pub fn fit_exponential(trace: &CoherenceTrace) -> Result<ExpFit> {
    fit_exponential_xy(&trace.times, &trace.signal)
}

/// Gaussian-times-exponential fit, for checking how much a 1/f envelope biases the single exponential.
pub fn fit_gauss_exponential(trace: &CoherenceTrace) -> Result<GaussExpFit> {
    fit_gauss_exponential_xy(&trace.times, &trace.signal)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for stream `tags` under `seed`; distinct tag paths give unrelated streams.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(splitmix64(seed), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// SHA-256 of the canonical JSON encoding of `value`, hex encoded.
pub fn fingerprint<T: Serialize>(value: &T) -> Result<String> {
    Ok(sha256_hex(&serde_json::to_vec(value)?))
}

/// Ornstein–Uhlenbeck fluctuation of log T1 and log Γφ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftConfig {
    pub enabled: bool,
    /// Correlation time [s].
    pub correlation_time: f64,
    /// Stationary standard deviation of the log quantities.
    pub amplitude: f64,
}

impl Default for DriftConfig {
    fn default() -> Self {
        Self { enabled: true, correlation_time: 3600.0, amplitude: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    /// Total campaign length [s].
    pub duration: f64,
    /// Time between successive reference repetitions [s]; the mux path runs half a period later.
    pub repetition_period: f64,
    /// Readout noise σ on the normalized population.
    pub noise_sigma: f64,
    /// Points per delay grid.
    pub grid_points: usize,
    pub drift: DriftConfig,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self { duration: 12.0 * 3600.0, repetition_period: 600.0, noise_sigma: 0.01, grid_points: 51, drift: DriftConfig::default() }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.repetition_period > 0.0) || !(self.duration >= self.repetition_period) {
            return Err(Error::Config(format!(
                "campaign needs 0 < repetition_period ≤ duration, got {} and {}",
                self.repetition_period, self.duration
            )));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::Config(format!("noise_sigma must be nonnegative, got {}", self.noise_sigma)));
        }
        if self.grid_points < 5 {
            return Err(Error::Config(format!("grid_points must be at least 5, got {}", self.grid_points)));
        }
        let d = &self.drift;
        if d.enabled && (!(d.correlation_time > 0.0) || !(d.amplitude >= 0.0)) {
            return Err(Error::Config("drift needs a positive correlation_time and nonnegative amplitude".into()));
        }
        Ok(())
    }

    pub fn repetitions(&self) -> usize {
        (self.duration / self.repetition_period).floor() as usize
    }
}

/// A qubit measured directly and through the multiplexer, which injects `n_add` photons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSystem {
    pub qubit: TransmonParams,
    pub n_add: f64,
}

impl CampaignSystem {
    /// Intrinsic pure-dephasing rate on the reference path.
    pub fn reference_gamma_phi(&self) -> Result<f64> {
        let tphi = match self.qubit.tphi {
            Some(t) => t,
            None => tphi_from(self.qubit.t1, self.qubit.t2e)?,
        };
        Ok(1.0 / tphi)
    }

    /// Photon-shot-noise dephasing added on the mux path.
    pub fn added_gamma_phi(&self) -> Result<f64> {
        if !(self.n_add >= 0.0) {
            return Err(Error::Domain(format!("added photon number must be nonnegative, got {}", self.n_add)));
        }
        if self.n_add == 0.0 {
            return Ok(0.0);
        }
        Ok(self.qubit.readout()?.photon_shot_dephasing(self.n_add))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathLabel {
    Reference,
    Mux,
}

impl PathLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            PathLabel::Reference => "reference",
            PathLabel::Mux => "mux",
        }
    }
}

/// One fitted T1/T2e pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Repetition {
    pub index: usize,
    /// Start time relative to the campaign start [s].
    pub timestamp: f64,
    pub t1: f64,
    pub t1_err: f64,
    pub t2e: f64,
    pub t2e_err: f64,
    /// 1/T2e − 1/(2T1); negative when fit noise pushes T2e above 2T1.
    pub gamma_phi: f64,
    /// 1/Γφ.
    pub tphi: f64,
}

impl Repetition {
    fn from_fits(index: usize, timestamp: f64, t1_fit: &ExpFit, echo_fit: &ExpFit) -> Self {
        let t1 = 1.0 / t1_fit.rate;
        let t2e = 1.0 / echo_fit.rate;
        let gamma_phi = echo_fit.rate - 0.5 * t1_fit.rate;
        Self {
            index,
            timestamp,
            t1,
            t1_err: t1_fit.rate_sigma * t1 * t1,
            t2e,
            t2e_err: echo_fit.rate_sigma * t2e * t2e,
            gamma_phi,
            tphi: 1.0 / gamma_phi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub path: PathLabel,
    pub qubit: String,
    pub fingerprint: String,
    pub seed: u64,
    pub repetitions: Vec<Repetition>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    path: PathLabel,
    qubit: String,
    index: usize,
    timestamp_s: f64,
    t1_s: f64,
    t1_err_s: f64,
    t2e_s: f64,
    t2e_err_s: f64,
    tphi_s: f64,
    gamma_phi_hz: f64,
}

const CSV_HEADER: [&str; 10] =
    ["path", "qubit", "index", "timestamp_s", "t1_s", "t1_err_s", "t2e_s", "t2e_err_s", "tphi_s", "gamma_phi_hz"];

impl CampaignResult {
    pub fn t1(&self) -> Vec<f64> {
        self.repetitions.iter().map(|r| r.t1).collect()
    }

    pub fn t2e(&self) -> Vec<f64> {
        self.repetitions.iter().map(|r| r.t2e).collect()
    }

    pub fn gamma_phi(&self) -> Vec<f64> {
        self.repetitions.iter().map(|r| r.gamma_phi).collect()
    }

    pub fn tphi(&self) -> Vec<f64> {
        self.repetitions.iter().map(|r| r.tphi).collect()
    }

    /// One row per repetition.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.repetitions {
            w.serialize(CsvRow {
                path: self.path,
                qubit: self.qubit.clone(),
                index: r.index,
                timestamp_s: r.timestamp,
                t1_s: r.t1,
                t1_err_s: r.t1_err,
                t2e_s: r.t2e,
                t2e_err_s: r.t2e_err,
                tphi_s: r.tphi,
                gamma_phi_hz: r.gamma_phi,
            })?;
        }
        if self.repetitions.is_empty() {
            w.write_record(CSV_HEADER)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a table written by [`CampaignResult::write_csv`]. Fingerprint and seed are not stored per row and come back empty.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        if header != CSV_HEADER {
            return Err(Error::Config(format!("campaign CSV header {header:?} does not match {CSV_HEADER:?}")));
        }
        let mut result: Option<CampaignResult> = None;
        for row in rdr.deserialize() {
            let row: CsvRow = row?;
            let res = result.get_or_insert_with(|| CampaignResult {
                path: row.path,
                qubit: row.qubit.clone(),
                fingerprint: String::new(),
                seed: 0,
                repetitions: Vec::new(),
            });
            if row.path != res.path || row.qubit != res.qubit {
                return Err(Error::Config("campaign CSV mixes paths or qubits".into()));
            }
            res.repetitions.push(Repetition {
                index: row.index,
                timestamp: row.timestamp_s,
                t1: row.t1_s,
                t1_err: row.t1_err_s,
                t2e: row.t2e_s,
                t2e_err: row.t2e_err_s,
                gamma_phi: row.gamma_phi_hz,
                tphi: row.tphi_s,
            });
        }
        result.ok_or_else(|| Error::InsufficientData("campaign CSV has no rows".into()))
    }
}

/// Exact discretization of an OU process sampled at increasing `times`, started from its stationary law.
fn ou_path(times: &[f64], drift: &DriftConfig, seed: u64) -> Vec<f64> {
    if !drift.enabled || drift.amplitude == 0.0 {
        return vec![0.0; times.len()];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z0: f64 = StandardNormal.sample(&mut rng);
    let mut x = drift.amplitude * z0;
    let mut prev = times.first().copied().unwrap_or(0.0);
    times
        .iter()
        .map(|&t| {
            let rho = (-(t - prev) / drift.correlation_time).exp();
            let z: f64 = StandardNormal.sample(&mut rng);
            x = rho * x + drift.amplitude * (1.0 - rho * rho).sqrt() * z;
            prev = t;
            x
        })
        .collect()
}

const TAG_DRIFT_T1: u64 = 1;
const TAG_DRIFT_GAMMA: u64 = 2;
const TAG_TRACE: u64 = 3;

/// Interleaved reference and mux campaigns. Reference repetition k starts at
/// k·period and its mux partner half a period later; both paths see one shared
/// drift of the qubit's intrinsic T1 and Γφ.
pub fn run_coherence_campaign(
    system: &CampaignSystem,
    cfg: &CampaignConfig,
    seed: u64,
) -> Result<(CampaignResult, CampaignResult)> {
    cfg.validate()?;
    system.qubit.validate()?;
    let n = cfg.repetitions();
    let gamma_ref = system.reference_gamma_phi()?;
    let gamma_add = system.added_gamma_phi()?;
    let t1_grid = delay_grid(system.qubit.t1, cfg.grid_points)?;
    let echo_grid = delay_grid(system.qubit.t2e, cfg.grid_points)?;

    let times: Vec<f64> = (0..2 * n).map(|j| (j / 2) as f64 * cfg.repetition_period + (j % 2) as f64 * 0.5 * cfg.repetition_period).collect();
    let drift_t1 = ou_path(&times, &cfg.drift, derive_seed(seed, &[TAG_DRIFT_T1]));
    let drift_gamma = ou_path(&times, &cfg.drift, derive_seed(seed, &[TAG_DRIFT_GAMMA]));

    let fingerprint = fingerprint(&(system, cfg))?;
    let mut paths = [PathLabel::Reference, PathLabel::Mux].map(|path| CampaignResult {
        path,
        qubit: system.qubit.name.clone(),
        fingerprint: fingerprint.clone(),
        seed,
        repetitions: Vec::with_capacity(n),
    });
    for (j, &t) in times.iter().enumerate() {
        let (k, p) = (j / 2, j % 2);
        let t1 = system.qubit.t1 * drift_t1[j].exp();
        let gamma_phi = gamma_ref * drift_gamma[j].exp() + if p == 1 { gamma_add } else { 0.0 };
        let trace_seed = |kind: u64| derive_seed(seed, &[TAG_TRACE, p as u64, k as u64, kind]);
        let relax = synth_t1_trace(t1, &t1_grid, cfg.noise_sigma, trace_seed(0))?;
        let truth = TraceTruth { t1, gamma_phi, noise: NoiseParams::zero(), dispersion_d: 0.0 };
        let echo = synth_echo_trace_with(truth, EchoEnvelope::EffectiveExponential, &echo_grid, cfg.noise_sigma, trace_seed(1))?;
        let label = paths[p].path.as_str();
        let fit_t1 = relax.fit().map_err(|e| Error::Fit(format!("{label} repetition {k}, T1 trace: {e}")))?;
        let fit_echo = echo.fit().map_err(|e| Error::Fit(format!("{label} repetition {k}, echo trace: {e}")))?;
        paths[p].repetitions.push(Repetition::from_fits(k, t, &fit_t1, &fit_echo));
    }
    let [reference, mux] = paths;
    Ok((reference, mux))
}

/// Γφ,add = mean Γφ(mux) − mean Γφ(ref) and the photon number it implies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AddedDephasing {
    pub gamma_phi_add: f64,
    pub gamma_phi_add_se: f64,
    pub n_add: f64,
    pub n_add_se: f64,
    pub welch: WelchResult,
}

pub fn added_dephasing_report(reference: &CampaignResult, mux: &CampaignResult, readout: &DispersiveReadout) -> Result<AddedDephasing> {
    let (g_ref, g_mux) = (reference.gamma_phi(), mux.gamma_phi());
    for (label, g) in [("reference", &g_ref), ("mux", &g_mux)] {
        if g.len() < 2 {
            return Err(Error::InsufficientData(format!("{label} campaign has {} repetitions; need at least 2", g.len())));
        }
    }
    let gamma_phi_add = mean(&g_mux) - mean(&g_ref);
    let gamma_phi_add_se = combined_se(&g_ref, &g_mux)?;
    Ok(AddedDephasing {
        gamma_phi_add,
        gamma_phi_add_se,
        n_add: readout.added_photons(gamma_phi_add)?,
        n_add_se: readout.added_photons(gamma_phi_add_se)?,
        welch: welch_t(&g_mux, &g_ref)?,
    })
}
