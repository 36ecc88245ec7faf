//! Transmon spectrum, coupling rates and flux-line calibration.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{DispersiveReadout, FrequencyUnit};

/// Magnetic flux quantum h/2e [Wb].
pub const PHI0: f64 = 2.067_833_848e-15;

/// Qubit–resonator coupling g/2π [Hz] that reproduces a Purcell rate of
/// 2π·0.586 kHz for the typical-parameter set in [`CouplingGeometry::default`].
pub const DEFAULT_G_OVER_2PI: f64 = 71.6e6;

/// One qubit's spectral and coherence parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmonParams {
    pub name: String,
    /// Qubit frequency [Hz].
    pub f_q: f64,
    /// Readout resonator frequency [Hz].
    pub f_r: f64,
    /// Resonator linewidth κ/2π [Hz].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_over_2pi: Option<f64>,
    /// Dispersive shift χ/2π [Hz], signed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi_over_2pi: Option<f64>,
    /// Mean relaxation time [s].
    pub t1: f64,
    /// Mean echo coherence time [s].
    pub t2e: f64,
    /// Mean dephasing time as tabulated [s]; not required to satisfy the T2e relation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tphi: Option<f64>,
    /// Tabulated thermal photon number.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_th: Option<f64>,
    /// Sweet-spot frequency of a flux-tunable qubit [Hz].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_max: Option<f64>,
    /// Qubit–resonator coupling g/2π [Hz].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_over_2pi: Option<f64>,
}

impl TransmonParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [("f_q", Some(self.f_q)), ("f_r", Some(self.f_r)), ("t1", Some(self.t1)), ("t2e", Some(self.t2e))]
            .into_iter()
            .chain([
                ("kappa_over_2pi", self.kappa_over_2pi),
                ("tphi", self.tphi),
                ("f_max", self.f_max),
                ("g_over_2pi", self.g_over_2pi),
            ]);
        for (field, value) in positive {
            if let Some(v) = value {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::Config(format!("qubit {}: {field} must be positive, got {v}", self.name)));
                }
            }
        }
        if let (Some(k), Some(c)) = (self.kappa_over_2pi, self.chi_over_2pi) {
            if c.abs() >= 100.0 * k {
                return Err(Error::Config(format!("qubit {}: |χ| = {} is implausibly large against κ = {k}", self.name, c.abs())));
            }
        }
        Ok(())
    }

    /// κ and χ in rad/s, or a domain error when either was not measured.
    pub fn readout(&self) -> Result<DispersiveReadout> {
        match (self.kappa_over_2pi, self.chi_over_2pi) {
            (Some(k), Some(c)) => DispersiveReadout::new(k, c, FrequencyUnit::OverTwoPi),
            _ => Err(Error::Domain(format!("qubit {} has no κ/χ entries", self.name))),
        }
    }
}

/// Parameters of the twenty qubits characterized through the multiplexer,
/// bundled from `data/qubits.json`.
pub fn bundled_qubits() -> Vec<TransmonParams> {
    serde_json::from_str(include_str!("../../../data/qubits.json")).expect("bundled qubit table is valid JSON")
}

pub fn bundled_qubit(name: &str) -> Option<TransmonParams> {
    bundled_qubits().into_iter().find(|q| q.name == name)
}

/// Drive-line coupling geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingGeometry {
    /// Drive-line coupling capacitance [F].
    pub c_d: f64,
    /// Total transmon capacitance [F].
    pub c_sigma: f64,
    /// Drive-line impedance [Ω].
    pub z_d: f64,
}

impl Default for CouplingGeometry {
    fn default() -> Self {
        Self { c_d: 0.1e-15, c_sigma: 105e-15, z_d: 50.0 }
    }
}

impl CouplingGeometry {
    pub fn new(c_d: f64, c_sigma: f64, z_d: f64) -> Result<Self> {
        if !(c_d >= 0.0 && c_sigma > 0.0 && z_d > 0.0) || c_d >= c_sigma {
            return Err(Error::Domain(format!(
                "coupling geometry requires 0 ≤ C_d < C_Σ and Z_d > 0, got C_d = {c_d}, C_Σ = {c_sigma}, Z_d = {z_d}"
            )));
        }
        Ok(Self { c_d, c_sigma, z_d })
    }
}

/// Typical-parameter set for the Purcell estimate: resonator at 7 GHz with Q_l = 5000.
pub const TYPICAL_F_Q: f64 = 3.5e9;
pub const TYPICAL_F_R: f64 = 7.0e9;
pub const TYPICAL_LOADED_Q: f64 = 5000.0;

/// Qubit decay rate into a drive line, κ_d = (C_d²/C_Σ)·Z_d·ω_q² [rad/s].
pub fn drive_coupling(geom: CouplingGeometry, omega_q: f64) -> f64 {
    geom.c_d * geom.c_d / geom.c_sigma * geom.z_d * omega_q * omega_q
}

/// Purcell decay through a detuned resonator, γ_P = g²κ/Δ². All arguments in rad/s.
pub fn purcell_rate(g: f64, kappa: f64, delta: f64) -> Result<f64> {
    if delta == 0.0 {
        return Err(Error::Domain("Purcell rate diverges at zero detuning".into()));
    }
    Ok(g * g * kappa / (delta * delta))
}

/// Coupling g that produces Purcell rate `gamma_p` (inverse of [`purcell_rate`]).
pub fn coupling_for_purcell(gamma_p: f64, kappa: f64, delta: f64) -> Result<f64> {
    if !(kappa > 0.0) || !(gamma_p >= 0.0) {
        return Err(Error::Domain(format!("need κ > 0 and γ_P ≥ 0, got κ = {kappa}, γ_P = {gamma_p}")));
    }
    Ok(delta.abs() * (gamma_p / kappa).sqrt())
}

/// SQUID-tunable transmon spectrum f(Φ) = f_max·(cos²(πΦ) + d² sin²(πΦ))^¼,
/// with Φ in flux quanta and junction asymmetry d (0 for a symmetric SQUID).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxSpectrum {
    pub f_max: f64,
    #[serde(default)]
    pub asymmetry: f64,
}

impl FluxSpectrum {
    pub fn symmetric(f_max: f64) -> Self {
        Self { f_max, asymmetry: 0.0 }
    }

    fn shape(&self, phi_e: f64) -> f64 {
        let (s, c) = (PI * phi_e).sin_cos();
        c * c + self.asymmetry * self.asymmetry * s * s
    }

    fn check(&self, phi_e: f64) -> Result<f64> {
        let g = self.shape(phi_e);
        // A symmetric SQUID closes at half a flux quantum; allow for rounding in cos(π/2).
        if g <= 1e-24 {
            return Err(Error::Domain(format!("qubit frequency vanishes at Φ = {phi_e} Φ0")));
        }
        Ok(g)
    }

    /// Qubit frequency [Hz] at flux `phi_e` [Φ0].
    pub fn frequency(&self, phi_e: f64) -> Result<f64> {
        Ok(self.f_max * self.check(phi_e)?.powf(0.25))
    }

    /// ∂f_q/∂Φ_e [Hz/Φ0].
    pub fn dispersion(&self, phi_e: f64) -> Result<f64> {
        let g = self.check(phi_e)?;
        let dg = -PI * (1.0 - self.asymmetry * self.asymmetry) * (2.0 * PI * phi_e).sin();
        Ok(self.f_max * 0.25 * g.powf(-0.75) * dg)
    }

    /// D = ∂ω_q/∂φ with φ = πΦ/Φ0, in rad/s per radian.
    pub fn dispersion_angular(&self, phi_e: f64) -> Result<f64> {
        Ok(angular_dispersion(self.dispersion(phi_e)?))
    }
}

/// Chain rule from ∂f_q/∂Φ_e [Hz/Φ0] to D = ∂ω_q/∂φ: 2π·(∂f/∂Φ)·(Φ0/π).
pub fn angular_dispersion(df_dphi: f64) -> f64 {
    2.0 * df_dphi
}

/// Inverse of [`angular_dispersion`].
pub fn dispersion_hz_per_phi0(d: f64) -> f64 {
    0.5 * d
}

pub fn qubit_freq_at_flux(f_max: f64, phi_e: f64) -> Result<f64> {
    FluxSpectrum::symmetric(f_max).frequency(phi_e)
}

pub fn dispersion(f_max: f64, phi_e: f64) -> Result<f64> {
    FluxSpectrum::symmetric(f_max).dispersion(phi_e)
}

/// Flux-line to SQUID mutual inductance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxLineCal {
    /// Mutual inductance [H].
    pub mutual_m: f64,
}

impl FluxLineCal {
    pub fn new(mutual_m: f64) -> Result<Self> {
        if !(mutual_m > 0.0) {
            return Err(Error::Domain(format!("mutual inductance must be positive, got {mutual_m}")));
        }
        Ok(Self { mutual_m })
    }

    /// Flux [Φ0] produced by current `i` [A].
    pub fn flux_for_current(&self, i: f64) -> f64 {
        self.mutual_m * i / PHI0
    }

    /// Current [A] needed for flux `phi_e` [Φ0].
    pub fn current_for_flux(&self, phi_e: f64) -> f64 {
        phi_e * PHI0 / self.mutual_m
    }
}

/// Calibrates M from a bias point: M = Φ·Φ0/I.
pub fn mutual_from_bias(i_bias: f64, phi_e: f64) -> Result<FluxLineCal> {
    if i_bias == 0.0 {
        return Err(Error::Domain("bias current must be nonzero".into()));
    }
    FluxLineCal::new((phi_e * PHI0 / i_bias).abs())
}

/// Current-noise PSD [A²/Hz] on the flux line equivalent to white flux noise `b_flux` [Φ0²/Hz].
pub fn flux_to_current_noise(b_flux: f64, cal: FluxLineCal) -> f64 {
    b_flux * PHI0 * PHI0 / (cal.mutual_m * cal.mutual_m)
}
