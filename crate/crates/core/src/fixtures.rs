//! Generators for the synthetic tables bundled under `data/`.

use crate::campaign::{run_coherence_campaign, CampaignConfig, CampaignSystem};
use crate::device::bundled_qubit;
use crate::error::Result;
use crate::mux::MuxModel;
use crate::noise::NoiseParams;
use crate::sweep::{run_flux_sweep, SweepConfig, SweepQubit};

pub const SWEEP_SEED: u64 = 5;
pub const SWEEP_SQRT_A: f64 = 2.8e-6;
pub const SWEEP_SQRT_B: f64 = 15e-9;
pub const SWEEP_NOISE_SIGMA: f64 = 0.01;

pub const QUBIT2_SEED: u64 = 20_240_601;
pub const QUBIT2_N_ADD: f64 = 0.022;

/// `data/synthetic_sweep.csv`: a default sweep of the default tunable qubit
/// with √A = 2.8 μΦ0, √B = 15 nΦ0/√Hz and readout noise σ = 0.01.
pub fn synthetic_sweep_csv() -> Result<Vec<u8>> {
    let cfg = SweepConfig { noise_sigma: SWEEP_NOISE_SIGMA, ..Default::default() };
    let noise = NoiseParams::from_sqrt(SWEEP_SQRT_A, SWEEP_SQRT_B)?;
    let sweep = run_flux_sweep(&SweepQubit::default(), noise, &MuxModel::default(), &cfg, &cfg.phi_grid()?, SWEEP_SEED)?;
    let mut buf = Vec::new();
    sweep.write_csv(&mut buf)?;
    Ok(buf)
}

/// `data/qubit2_ref.csv` and `data/qubit2_mux.csv`: a default 12 h campaign
/// of Q2 with 0.022 photons added on the mux path.
pub fn qubit2_campaign_csv() -> Result<(Vec<u8>, Vec<u8>)> {
    let qubit = bundled_qubit("Q2").expect("Q2 is in the bundled table");
    let system = CampaignSystem { qubit, n_add: QUBIT2_N_ADD };
    let (reference, mux) = run_coherence_campaign(&system, &CampaignConfig::default(), QUBIT2_SEED)?;
    let (mut r, mut m) = (Vec::new(), Vec::new());
    reference.write_csv(&mut r)?;
    mux.write_csv(&mut m)?;
    Ok((r, m))
}
