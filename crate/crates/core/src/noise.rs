//! Flux-noise and photon-shot-noise dephasing.
//!
//! Noise amplitudes are stored in physical units: the 1/f amplitude `a_flux`
//! in Φ0² and the white level `b_flux` in Φ0²/Hz. Dephasing arithmetic runs in
//! the phase/angular convention (phase variable φ = πΦ/Φ0, angular frequency
//! ω), reached through [`NoiseParams::to_phase`].

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{self, Estimate, QuadratureConfig};

/// Flux-noise PSD S(f) = a_flux/|f| + b_flux in flux-quantum and ordinary-frequency units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseParams {
    /// 1/f amplitude [Φ0²].
    pub a_flux: f64,
    /// White level [Φ0²/Hz].
    pub b_flux: f64,
}

/// The same PSD in the phase/angular convention, S(ω) = a/|ω| + b.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseNoise {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RescaleDirection {
    /// (φ, ω) convention to (Φ, f).
    PhaseToFlux,
    /// (Φ, f) convention to (φ, ω).
    FluxToPhase,
}

/// Converts an (A, B) pair between conventions: A_Φ,f = A_φ,ω/π², B_Φ,f = 2·B_φ,ω/π.
pub fn rescale_noise(a: f64, b: f64, direction: RescaleDirection) -> (f64, f64) {
    match direction {
        RescaleDirection::PhaseToFlux => (a / (PI * PI), 2.0 * b / PI),
        RescaleDirection::FluxToPhase => (a * PI * PI, b * PI / 2.0),
    }
}

impl NoiseParams {
    pub fn new(a_flux: f64, b_flux: f64) -> Result<Self> {
        if !(a_flux >= 0.0 && b_flux >= 0.0) || !a_flux.is_finite() || !b_flux.is_finite() {
            return Err(Error::Domain(format!(
                "noise amplitudes must be finite and nonnegative, got A = {a_flux}, B = {b_flux}"
            )));
        }
        Ok(Self { a_flux, b_flux })
    }

    /// From the square-root amplitudes usually quoted: √A in Φ0 and √B in Φ0/√Hz.
    pub fn from_sqrt(sqrt_a: f64, sqrt_b: f64) -> Result<Self> {
        Self::new(sqrt_a * sqrt_a, sqrt_b * sqrt_b)
    }

    pub fn zero() -> Self {
        Self { a_flux: 0.0, b_flux: 0.0 }
    }

    pub fn to_phase(self) -> PhaseNoise {
        let (a, b) = rescale_noise(self.a_flux, self.b_flux, RescaleDirection::FluxToPhase);
        PhaseNoise { a, b }
    }
}

impl PhaseNoise {
    pub fn to_flux(self) -> NoiseParams {
        let (a_flux, b_flux) = rescale_noise(self.a, self.b, RescaleDirection::PhaseToFlux);
        NoiseParams { a_flux, b_flux }
    }
}

/// Dispersion D = |∂ω_q/∂φ| and evolution time τ for one echo experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DephasingContext {
    pub dispersion_d: f64,
    pub tau: f64,
}

impl DephasingContext {
    pub fn new(dispersion_d: f64, tau: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::Domain(format!("evolution time must be positive, got {tau}")));
        }
        if !(dispersion_d >= 0.0) || !dispersion_d.is_finite() {
            return Err(Error::Domain(format!("dispersion must be nonnegative, got {dispersion_d}")));
        }
        Ok(Self { dispersion_d, tau })
    }
}

/// Flux-noise PSD in the phase/angular convention at angular frequency `omega`.
pub fn psd_flux(params: NoiseParams, omega: f64) -> Result<f64> {
    if omega == 0.0 {
        return Err(Error::Domain("1/f noise PSD diverges at ω = 0".into()));
    }
    let p = params.to_phase();
    Ok(p.a / omega.abs() + p.b)
}

/// Hahn-echo filter |F(ω,τ)|² = τ² sin²(ωτ/4) sinc²(ωτ/4).
pub fn echo_filter_sq(omega: f64, tau: f64) -> f64 {
    let x = omega * tau / 4.0;
    if x == 0.0 {
        return 0.0;
    }
    let s = x.sin();
    let sinc = s / x;
    tau * tau * s * s * sinc * sinc
}

/// Closed-form echo decay exponent χ(τ) = A D² ln2 τ² + B D² π τ.
pub fn chi_closed(params: NoiseParams, ctx: DephasingContext) -> f64 {
    let p = params.to_phase();
    let d2 = ctx.dispersion_d * ctx.dispersion_d;
    p.a * d2 * LN_2 * ctx.tau * ctx.tau + p.b * d2 * PI * ctx.tau
}

/// Truncation and tolerance for [`chi_numeric`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiQuadrature {
    /// Upper cutoff on the dimensionless frequency θ = ωτ.
    pub theta_max: f64,
    /// Relative tolerance per integration panel.
    pub rel_tol: f64,
    /// Add the non-oscillating mean of the integrand beyond the cutoff
    /// (sin⁴ replaced by 3/8).
    pub tail_correction: bool,
}

impl Default for ChiQuadrature {
    fn default() -> Self {
        Self { theta_max: 1e4, rel_tol: 1e-10, tail_correction: true }
    }
}

/// Panel edges on [0, cutoff] for an integrand oscillating with `period`:
/// log-spaced up to one period, then one panel per period.
fn oscillatory_edges(period: f64, cutoff: f64) -> Vec<f64> {
    let mut edges = vec![0.0];
    let first = period.min(cutoff);
    let decades = 4;
    let per_decade = 4;
    for i in 0..=(decades * per_decade) {
        let e = first * 10f64.powf(-(decades as f64) + i as f64 / per_decade as f64);
        edges.push(e);
    }
    let mut k = 2.0;
    while k * period < cutoff {
        edges.push(k * period);
        k += 1.0;
    }
    if *edges.last().unwrap() < cutoff {
        edges.push(cutoff);
    }
    edges
}

fn panel_quadrature(rel_tol: f64) -> QuadratureConfig {
    QuadratureConfig { abs_tol: 0.0, rel_tol, max_subdivisions: 64 }
}

/// Numerically integrates χ(τ) = ½ D² ∫ |F(ω,τ)|² S(ω) dω over the real line,
/// by symmetry as D² ∫₀^∞, truncated at ω = θ_max/τ.
pub fn chi_numeric(params: NoiseParams, ctx: DephasingContext, cfg: &ChiQuadrature) -> Result<f64> {
    if params.a_flux == 0.0 && params.b_flux == 0.0 || ctx.dispersion_d == 0.0 {
        return Ok(0.0);
    }
    let tau = ctx.tau;
    let d2 = ctx.dispersion_d * ctx.dispersion_d;
    let integrand = |omega: f64| {
        if omega == 0.0 {
            return 0.0;
        }
        // psd_flux only fails at ω = 0, excluded above.
        echo_filter_sq(omega, tau) * psd_flux(params, omega).unwrap_or(0.0)
    };
    // sin⁴(ωτ/4) repeats every Δω = 4π/τ.
    let period = 4.0 * PI / tau;
    let cutoff = cfg.theta_max / tau;
    let edges = oscillatory_edges(period, cutoff);
    let Estimate { value, .. } = quadrature::integrate_panels(integrand, &edges, &panel_quadrature(cfg.rel_tol))?;
    let mut chi = d2 * value;
    if cfg.tail_correction {
        let p = params.to_phase();
        let t = cfg.theta_max;
        chi += d2 * (3.0 * p.a * tau * tau / (t * t) + 6.0 * p.b * tau / t);
    }
    Ok(chi)
}

/// ∫₀^∞ sin⁴x / x^power dx for power ∈ {2, 3}, truncated at `x_max` with the
/// mean-value tail (3/8)·x_max^(1−power)/(power−1) added when requested.
pub fn sin4_moment(power: i32, x_max: f64, rel_tol: f64, tail_correction: bool) -> Result<f64> {
    if !(2..=3).contains(&power) {
        return Err(Error::Domain(format!("sin⁴ moment only converges for power 2 or 3, got {power}")));
    }
    let f = |x: f64| {
        let s = x.sin();
        s * s * s * s / x.powi(power)
    };
    let edges = oscillatory_edges(PI, x_max);
    let est = quadrature::integrate_panels(f, &edges, &panel_quadrature(rel_tol))?;
    let tail = if tail_correction {
        0.375 * x_max.powi(1 - power) / (power - 1) as f64
    } else {
        0.0
    };
    Ok(est.value + tail)
}

/// Effective single-exponential echo dephasing rate √(A ln2)·D + B π D².
pub fn dephasing_rate_echo(params: NoiseParams, dispersion_d: f64) -> f64 {
    let p = params.to_phase();
    let d = dispersion_d.abs();
    (p.a * LN_2).sqrt() * d + p.b * PI * d * d
}

/// Angular-frequency convention of an input rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrequencyUnit {
    /// Value is already in rad/s.
    Angular,
    /// Value is in Hz as quoted "/2π"; it is multiplied by 2π.
    OverTwoPi,
}

impl FrequencyUnit {
    pub fn to_angular(self, value: f64) -> f64 {
        match self {
            FrequencyUnit::Angular => value,
            FrequencyUnit::OverTwoPi => 2.0 * PI * value,
        }
    }
}

/// Readout resonator linewidth κ and dispersive shift χ, both in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersiveReadout {
    pub kappa: f64,
    pub chi: f64,
}

impl DispersiveReadout {
    pub fn new(kappa: f64, chi: f64, unit: FrequencyUnit) -> Result<Self> {
        let kappa = unit.to_angular(kappa);
        let chi = unit.to_angular(chi);
        if !(kappa > 0.0) {
            return Err(Error::Domain(format!("resonator linewidth must be positive, got {kappa} rad/s")));
        }
        Ok(Self { kappa, chi })
    }

    /// Dephasing per thermal photon, 4χ²κ/(κ² + 4χ²).
    pub fn rate_per_photon(&self) -> f64 {
        let chi2 = 4.0 * self.chi * self.chi;
        chi2 * self.kappa / (self.kappa * self.kappa + chi2)
    }

    pub fn photon_shot_dephasing(&self, nbar: f64) -> f64 {
        self.rate_per_photon() * nbar
    }

    pub fn added_photons(&self, gamma_phi: f64) -> Result<f64> {
        added_photons(gamma_phi, self.kappa, self.chi)
    }
}

/// Photon-shot-noise dephasing rate Γφ = 4χ²κ/(κ² + 4χ²)·n̄, with κ, χ in rad/s.
pub fn photon_shot_dephasing(nbar: f64, kappa: f64, chi_disp: f64) -> Result<f64> {
    if !(nbar >= 0.0) {
        return Err(Error::Domain(format!("photon number must be nonnegative, got {nbar}")));
    }
    Ok(DispersiveReadout::new(kappa, chi_disp, FrequencyUnit::Angular)?.photon_shot_dephasing(nbar))
}

/// Photon number that produces dephasing `gamma_phi_add` (inverse of [`photon_shot_dephasing`]).
pub fn added_photons(gamma_phi_add: f64, kappa: f64, chi_disp: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::Domain(format!("resonator linewidth must be positive, got {kappa} rad/s")));
    }
    if chi_disp == 0.0 {
        return Err(Error::Domain("dispersive shift is zero; the qubit does not sense photon number".into()));
    }
    let chi2 = 4.0 * chi_disp * chi_disp;
    Ok(gamma_phi_add * (kappa * kappa + chi2) / (chi2 * kappa))
}

/// Echo coherence from 1/T2e = 1/Tφ + 1/(2T1). `tphi` may be infinite.
pub fn t2e_from_components(t1: f64, tphi: f64) -> Result<f64> {
    if !(t1 > 0.0) || !(tphi > 0.0) {
        return Err(Error::Domain(format!("T1 and Tφ must be positive, got {t1}, {tphi}")));
    }
    Ok(1.0 / (1.0 / tphi + 0.5 / t1))
}

/// Pure dephasing time from T1 and T2e; infinite when T2e = 2T1.
pub fn tphi_from(t1: f64, t2e: f64) -> Result<f64> {
    if !(t1 > 0.0) || !(t2e > 0.0) {
        return Err(Error::Domain(format!("T1 and T2e must be positive, got {t1}, {t2e}")));
    }
    if t2e > 2.0 * t1 {
        return Err(Error::Domain(format!(
            "T2e = {t2e} exceeds 2·T1 = {}; dephasing rate would be negative",
            2.0 * t1
        )));
    }
    Ok(1.0 / (1.0 / t2e - 0.5 / t1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(a.abs())
    }

    #[test]
    fn psd_examples() {
        assert_eq!(psd_flux(NoiseParams::zero(), 3.0).unwrap(), 0.0);
        let white = NoiseParams::new(0.0, 2.0 / PI).unwrap();
        assert!(close(psd_flux(white, 1.0).unwrap(), 1.0, 1e-15));
        let pink = NoiseParams::new(1.0 / (PI * PI), 0.0).unwrap();
        assert!(close(psd_flux(pink, 2.0).unwrap(), 0.5, 1e-15));
        assert!(psd_flux(pink, 0.0).is_err());
        assert_eq!(psd_flux(pink, -2.0).unwrap(), psd_flux(pink, 2.0).unwrap());
    }

    #[test]
    fn filter_examples() {
        assert_eq!(echo_filter_sq(0.0, 1.0), 0.0);
        let v = echo_filter_sq(2.0 * PI, 1.0);
        assert!(close(v, (2.0 / PI).powi(2), 1e-14));
    }

    #[test]
    fn filter_matches_sin4_identity() {
        for &(w, t) in &[(0.3, 2.0), (17.0, 0.01), (-5.5, 3.3), (1e6, 1e-5), (1e-3, 4.0)] {
            let alt = 16.0 * (w * t / 4.0f64).sin().powi(4) / (w * w);
            assert!(close(echo_filter_sq(w, t), alt, 1e-12), "{w} {t}");
        }
    }

    #[test]
    fn chi_closed_examples() {
        let ctx = DephasingContext::new(1.0, 1.0).unwrap();
        assert_eq!(chi_closed(NoiseParams::zero(), ctx), 0.0);
        let unit_a = PhaseNoise { a: 1.0, b: 0.0 }.to_flux();
        assert!(close(chi_closed(unit_a, ctx), LN_2, 1e-14));
    }

    #[test]
    fn chi_numeric_zero_noise_is_exact() {
        let ctx = DephasingContext::new(3.0, 1e-5).unwrap();
        assert_eq!(chi_numeric(NoiseParams::zero(), ctx, &ChiQuadrature::default()).unwrap(), 0.0);
    }

    #[test]
    fn chi_numeric_white_and_pink() {
        let ctx = DephasingContext::new(2.0e9, 7e-6).unwrap();
        let white = NoiseParams::new(0.0, 2.25e-16).unwrap();
        let pink = NoiseParams::new(7.84e-12, 0.0).unwrap();
        let cfg = ChiQuadrature::default();
        for p in [white, pink] {
            let n = chi_numeric(p, ctx, &cfg).unwrap();
            let c = chi_closed(p, ctx);
            assert!(close(n, c, 1e-6), "{n} vs {c}");
        }
    }

    #[test]
    fn dephasing_rate_examples() {
        assert_eq!(dephasing_rate_echo(NoiseParams::zero(), 5.0), 0.0);
        let p = NoiseParams::from_sqrt(2.8e-6, 15e-9).unwrap();
        assert_eq!(dephasing_rate_echo(p, 0.0), 0.0);
    }

    #[test]
    fn rescale_examples() {
        let (a, _) = rescale_noise(PI * PI, 0.0, RescaleDirection::PhaseToFlux);
        assert!(close(a, 1.0, 1e-15));
        let (_, b) = rescale_noise(0.0, PI / 2.0, RescaleDirection::PhaseToFlux);
        assert!(close(b, 1.0, 1e-15));
    }

    #[test]
    fn photon_dephasing_errors() {
        assert!(photon_shot_dephasing(0.1, 0.0, 1.0).is_err());
        assert!(photon_shot_dephasing(-0.1, 1.0, 1.0).is_err());
        assert!(added_photons(1.0, 1.0, 0.0).is_err());
        assert_eq!(added_photons(0.0, 2.0, 1.0).unwrap(), 0.0);
        assert_eq!(photon_shot_dephasing(0.0, 2.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn t2e_relation() {
        assert!(close(t2e_from_components(100e-6, f64::INFINITY).unwrap(), 200e-6, 1e-15));
        assert!(close(t2e_from_components(100e-6, 100e-6).unwrap(), 200e-6 / 3.0, 1e-14));
        assert!(tphi_from(100e-6, 201e-6).is_err());
        assert!(tphi_from(100e-6, 200e-6).unwrap().is_infinite());
    }
}
