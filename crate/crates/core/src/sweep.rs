//! Flux-bias sweeps of a tunable transmon and extraction of the flux-noise
//! amplitudes from the dispersion dependence of the echo dephasing.

use std::f64::consts::{LN_2, PI};
use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::campaign::{delay_grid, derive_seed, synth_echo_trace_with, synth_t1_trace, EchoEnvelope, TraceTruth};
use crate::device::{angular_dispersion, mutual_from_bias, FluxSpectrum, TransmonParams};
use crate::error::{Error, Result};
use crate::fit::nnls;
use crate::mux::MuxModel;
use crate::noise::{dephasing_rate_echo, NoiseParams, PhaseNoise};

/// The tunable qubit under test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepQubit {
    pub f_max: f64,
    pub asymmetry: f64,
    /// Relaxation time at the sweet spot without heating [s].
    pub t1: f64,
    /// Flux-insensitive pure dephasing [1/s].
    pub gamma_phi_ss: f64,
}

impl Default for SweepQubit {
    fn default() -> Self {
        Self { f_max: 4.5e9, asymmetry: 0.0, t1: 30e-6, gamma_phi_ss: 1.0e4 }
    }
}

impl SweepQubit {
    /// Takes f_max from the table entry and Γφ,SS from its Tφ (or T1, T2e).
    pub fn from_transmon(q: &TransmonParams) -> Result<Self> {
        let f_max = q.f_max.ok_or_else(|| Error::Config(format!("qubit {} is not flux tunable (no f_max)", q.name)))?;
        let tphi = match q.tphi {
            Some(t) => t,
            None => crate::noise::tphi_from(q.t1, q.t2e)?,
        };
        Ok(Self { f_max, asymmetry: 0.0, t1: q.t1, gamma_phi_ss: 1.0 / tphi })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Name of a tunable qubit in the run's qubit list; the built-in default qubit when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qubit: Option<String>,
    pub phi_min: f64,
    pub phi_max: f64,
    pub points: usize,
    pub noise_sigma: f64,
    pub grid_points: usize,
    /// Apply mixing-chamber heating from the flux-bias current.
    pub heating: bool,
    /// Mux supply voltage during the sweep [V].
    pub vdd: f64,
    /// Calibration point of the flux line: `bias_current` [A] gives `bias_flux` [Φ0].
    pub bias_current: f64,
    pub bias_flux: f64,
    pub envelope: EchoEnvelope,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            qubit: None,
            phi_min: -0.2,
            phi_max: 0.2,
            points: 81,
            noise_sigma: 0.0,
            grid_points: 51,
            heating: true,
            vdd: 0.55,
            bias_current: 0.23e-3,
            bias_flux: 0.2,
            envelope: EchoEnvelope::EffectiveExponential,
        }
    }
}

impl SweepConfig {
    pub fn phi_grid(&self) -> Result<Vec<f64>> {
        if self.points < 2 || !(self.phi_max > self.phi_min) {
            return Err(Error::Config(format!(
                "sweep needs points ≥ 2 and phi_max > phi_min, got {} points over [{}, {}]",
                self.points, self.phi_min, self.phi_max
            )));
        }
        let n = self.points - 1;
        Ok((0..=n).map(|k| self.phi_min + (self.phi_max - self.phi_min) * k as f64 / n as f64).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// Applied flux [Φ0].
    pub phi_e: f64,
    /// ∂f_q/∂Φ_e [Hz/Φ0].
    pub dispersion_hz_per_phi0: f64,
    pub t1: f64,
    pub t1_err: f64,
    pub t2e: f64,
    pub t2e_err: f64,
    /// Fitted 1/T2e − 1/(2T1) [1/s].
    pub gamma_phi: f64,
    pub t1_true: f64,
    pub gamma_phi_true: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxSweepResult {
    pub points: Vec<SweepPoint>,
    /// Fitted Γφ at the point of smallest |dispersion|.
    pub gamma_phi_ss: f64,
}

/// One (dispersion, Γφᵉ) sample as ingested from CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionSample {
    pub dispersion_hz_per_phi0: f64,
    pub gamma_phi_e_hz: f64,
}

#[derive(Debug, Serialize)]
struct SweepCsvRow {
    phi_e: f64,
    dispersion_hz_per_phi0: f64,
    t1_s: f64,
    t1_err_s: f64,
    t2e_s: f64,
    t2e_err_s: f64,
    gamma_phi_e_hz: f64,
}

impl FluxSweepResult {
    pub fn samples(&self) -> Vec<DispersionSample> {
        self.points
            .iter()
            .map(|p| DispersionSample { dispersion_hz_per_phi0: p.dispersion_hz_per_phi0, gamma_phi_e_hz: p.gamma_phi })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for p in &self.points {
            w.serialize(SweepCsvRow {
                phi_e: p.phi_e,
                dispersion_hz_per_phi0: p.dispersion_hz_per_phi0,
                t1_s: p.t1,
                t1_err_s: p.t1_err,
                t2e_s: p.t2e,
                t2e_err_s: p.t2e_err,
                gamma_phi_e_hz: p.gamma_phi,
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reads a (dispersion_hz_per_phi0, gamma_phi_e_hz) table; other columns are ignored.
pub fn read_dispersion_table<R: Read>(reader: R) -> Result<Vec<DispersionSample>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers()?.clone();
    for col in ["dispersion_hz_per_phi0", "gamma_phi_e_hz"] {
        if !header.iter().any(|h| h == col) {
            return Err(Error::Config(format!("dispersion table lacks column `{col}`")));
        }
    }
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// The sweet-spot rate of a table: Γφ at the row of smallest |dispersion|.
pub fn sweet_spot_rate(samples: &[DispersionSample]) -> Result<f64> {
    samples
        .iter()
        .min_by(|a, b| a.dispersion_hz_per_phi0.abs().total_cmp(&b.dispersion_hz_per_phi0.abs()))
        .map(|s| s.gamma_phi_e_hz)
        .ok_or_else(|| Error::InsufficientData("empty dispersion table".into()))
}

const TAG_SWEEP: u64 = 4;

/// Sweeps flux over `phi_grid`, degrading T1 by the mixing-chamber heating
/// that the bias current dissipates in the switch on-resistance.
pub fn run_flux_sweep(
    qubit: &SweepQubit,
    noise: NoiseParams,
    mux: &MuxModel,
    cfg: &SweepConfig,
    phi_grid: &[f64],
    seed: u64,
) -> Result<FluxSweepResult> {
    if phi_grid.is_empty() {
        return Err(Error::Domain("empty flux grid".into()));
    }
    if let Some(&phi) = phi_grid.iter().find(|p| !(p.abs() < 0.5)) {
        return Err(Error::Domain(format!("flux bias {phi} Φ0 is outside (−0.5, 0.5) Φ0")));
    }
    if !(qubit.t1 > 0.0) || !(qubit.gamma_phi_ss >= 0.0) {
        return Err(Error::Domain("sweep qubit needs T1 > 0 and Γφ,SS ≥ 0".into()));
    }
    let spectrum = FluxSpectrum { f_max: qubit.f_max, asymmetry: qubit.asymmetry };
    let cal = mutual_from_bias(cfg.bias_current, cfg.bias_flux)?;
    let mut points = Vec::with_capacity(phi_grid.len());
    for (k, &phi) in phi_grid.iter().enumerate() {
        let df = spectrum.dispersion(phi)?;
        let d = angular_dispersion(df);
        let factor = if cfg.heating {
            let p = mux.joule_power(cal.current_for_flux(phi), cfg.vdd)?;
            mux.t1_factor(mux.mxc_heating(p)?)
        } else {
            1.0
        };
        let t1_true = qubit.t1 * factor;
        let flux_rate = dephasing_rate_echo(noise, d);
        let gamma_true = qubit.gamma_phi_ss + flux_rate;
        let t2e_expected = 1.0 / (0.5 / t1_true + gamma_true);
        let relax = synth_t1_trace(t1_true, &delay_grid(t1_true, cfg.grid_points)?, cfg.noise_sigma, derive_seed(seed, &[TAG_SWEEP, k as u64, 0]))?;
        let truth = TraceTruth { t1: t1_true, gamma_phi: qubit.gamma_phi_ss, noise, dispersion_d: d };
        let echo = synth_echo_trace_with(
            truth,
            cfg.envelope,
            &delay_grid(t2e_expected, cfg.grid_points)?,
            cfg.noise_sigma,
            derive_seed(seed, &[TAG_SWEEP, k as u64, 1]),
        )?;
        let f1 = relax.fit().map_err(|e| Error::Fit(format!("T1 trace at Φ = {phi} Φ0: {e}")))?;
        let f2 = echo.fit().map_err(|e| Error::Fit(format!("echo trace at Φ = {phi} Φ0: {e}")))?;
        let (t1, t2e) = (1.0 / f1.rate, 1.0 / f2.rate);
        points.push(SweepPoint {
            phi_e: phi,
            dispersion_hz_per_phi0: df,
            t1,
            t1_err: f1.rate_sigma * t1 * t1,
            t2e,
            t2e_err: f2.rate_sigma * t2e * t2e,
            gamma_phi: f2.rate - 0.5 * f1.rate,
            t1_true,
            gamma_phi_true: gamma_true,
        });
    }
    let gamma_phi_ss = sweet_spot_rate(
        &points
            .iter()
            .map(|p| DispersionSample { dispersion_hz_per_phi0: p.dispersion_hz_per_phi0, gamma_phi_e_hz: p.gamma_phi })
            .collect::<Vec<_>>(),
    )?;
    Ok(FluxSweepResult { points, gamma_phi_ss })
}

/// Flux-noise amplitudes recovered from a sweep, in physical units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseFit {
    pub noise: NoiseParams,
    pub a_flux_err: f64,
    pub b_flux_err: f64,
    /// √A [Φ0].
    pub sqrt_a: f64,
    pub sqrt_a_err: f64,
    /// √B [Φ0/√Hz].
    pub sqrt_b: f64,
    pub sqrt_b_err: f64,
    /// Coefficients of Γ = p1·|D| + p2·D².
    pub p1: f64,
    pub p2: f64,
    pub residual_rms: f64,
}

pub fn extract_noise_params(sweep: &FluxSweepResult) -> Result<NoiseFit> {
    extract_noise_params_table(&sweep.samples(), sweep.gamma_phi_ss)
}

/// Nonnegative least squares of Γφᵉ − Γφ,SS = p1·|D| + p2·D²; then
/// A = p1²/ln2 and B = p2/π in the phase convention, converted to flux units.
pub fn extract_noise_params_table(samples: &[DispersionSample], gamma_phi_ss: f64) -> Result<NoiseFit> {
    if samples.iter().any(|s| !s.dispersion_hz_per_phi0.is_finite() || !s.gamma_phi_e_hz.is_finite()) || !gamma_phi_ss.is_finite() {
        return Err(Error::Domain("non-finite entry in dispersion table".into()));
    }
    let d: Vec<f64> = samples.iter().map(|s| angular_dispersion(s.dispersion_hz_per_phi0).abs()).collect();
    let d_max = d.iter().fold(0.0f64, |m, &v| m.max(v));
    if d_max == 0.0 {
        return Err(Error::Unidentifiable("every dispersion is zero; flux noise does not reach the qubit".into()));
    }
    let mut distinct: Vec<f64> = samples.iter().map(|s| s.dispersion_hz_per_phi0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * d_max);
    if distinct.len() < 4 {
        return Err(Error::InsufficientData(format!("need at least 4 distinct dispersion values, got {}", distinct.len())));
    }
    let mut magnitudes: Vec<f64> = d.iter().copied().filter(|&v| v > 1e-9 * d_max).collect();
    magnitudes.sort_by(f64::total_cmp);
    magnitudes.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * d_max);
    if magnitudes.len() < 2 {
        return Err(Error::Unidentifiable("need at least two distinct nonzero |dispersion| values to separate 1/f from white noise".into()));
    }

    // Columns scaled to O(1) for conditioning.
    let m = samples.len();
    let x = DMatrix::from_fn(m, 2, |i, j| if j == 0 { d[i] / d_max } else { (d[i] / d_max).powi(2) });
    let y = DVector::from_iterator(m, samples.iter().map(|s| s.gamma_phi_e_hz - gamma_phi_ss));
    let q = nnls(&x, &y)?;
    let resid = &y - &x * &q;
    let rss = resid.norm_squared();
    let s2 = if m > 2 { rss / (m - 2) as f64 } else { 0.0 };
    let cov = (x.transpose() * &x)
        .try_inverse()
        .ok_or_else(|| Error::Unidentifiable("|D| and D² columns are collinear".into()))?
        * s2;
    let p1 = q[0] / d_max;
    let p2 = q[1] / (d_max * d_max);
    let p1_err = cov[(0, 0)].sqrt() / d_max;
    let p2_err = cov[(1, 1)].sqrt() / (d_max * d_max);

    let phase = PhaseNoise { a: p1 * p1 / LN_2, b: p2 / PI };
    let noise = phase.to_flux();
    let a_flux_err = 2.0 * p1 * p1_err / LN_2 / (PI * PI);
    let b_flux_err = 2.0 * p2_err / (PI * PI);
    let sqrt_a = noise.a_flux.sqrt();
    let sqrt_a_err = p1_err / (PI * LN_2.sqrt());
    let sqrt_b = noise.b_flux.sqrt();
    let sqrt_b_err = if sqrt_b > 0.0 { b_flux_err / (2.0 * sqrt_b) } else { b_flux_err.sqrt() };
    Ok(NoiseFit {
        noise,
        a_flux_err,
        b_flux_err,
        sqrt_a,
        sqrt_a_err,
        sqrt_b,
        sqrt_b_err,
        p1,
        p2,
        residual_rms: (rss / m as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truth() -> NoiseParams {
        NoiseParams::from_sqrt(2.8e-6, 15e-9).unwrap()
    }

    fn sweep(cfg: &SweepConfig, noise: NoiseParams, seed: u64) -> FluxSweepResult {
        let grid = cfg.phi_grid().unwrap();
        run_flux_sweep(&SweepQubit::default(), noise, &MuxModel::default(), cfg, &grid, seed).unwrap()
    }

    #[test]
    fn noiseless_round_trip() {
        let r = sweep(&SweepConfig::default(), truth(), 1);
        let fit = extract_noise_params(&r).unwrap();
        assert!((fit.sqrt_a / 2.8e-6 - 1.0).abs() < 1e-6, "{}", fit.sqrt_a);
        assert!((fit.sqrt_b / 15e-9 - 1.0).abs() < 1e-6, "{}", fit.sqrt_b);
    }

    #[test]
    fn heating_reduces_t1_at_edge() {
        let r = sweep(&SweepConfig::default(), truth(), 1);
        let ss = r.points.iter().find(|p| p.phi_e.abs() < 1e-12).unwrap();
        let edge = r.points.last().unwrap();
        assert!((edge.t1 / ss.t1 - 0.7).abs() < 0.01, "{}", edge.t1 / ss.t1);
        assert!((ss.gamma_phi - SweepQubit::default().gamma_phi_ss).abs() < 1e-6 * ss.gamma_phi);
        let flat = sweep(&SweepConfig { heating: false, ..Default::default() }, truth(), 1);
        assert!(flat.points.iter().all(|p| (p.t1 / 30e-6 - 1.0).abs() < 1e-9));
    }

    #[test]
    fn grid_at_half_flux_quantum_rejected() {
        let cfg = SweepConfig::default();
        let r = run_flux_sweep(&SweepQubit::default(), truth(), &MuxModel::default(), &cfg, &[0.0, 0.5], 1);
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn white_only_gives_zero_one_over_f() {
        let r = sweep(&SweepConfig::default(), NoiseParams::from_sqrt(0.0, 15e-9).unwrap(), 3);
        let fit = extract_noise_params(&r).unwrap();
        assert!(fit.noise.a_flux <= 3.0 * fit.a_flux_err + 1e-30, "{} ± {}", fit.noise.a_flux, fit.a_flux_err);
    }

    #[test]
    fn unidentifiable_tables() {
        let zeros: Vec<DispersionSample> =
            (0..6).map(|i| DispersionSample { dispersion_hz_per_phi0: 0.0, gamma_phi_e_hz: i as f64 }).collect();
        assert!(matches!(extract_noise_params_table(&zeros, 0.0), Err(Error::Unidentifiable(_))));
        let few: Vec<DispersionSample> =
            (0..3).map(|i| DispersionSample { dispersion_hz_per_phi0: i as f64 * 1e9, gamma_phi_e_hz: 1e4 }).collect();
        assert!(matches!(extract_noise_params_table(&few, 0.0), Err(Error::InsufficientData(_))));
    }
}
