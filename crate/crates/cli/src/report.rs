//! JSON report shapes shared by the commands.

use std::collections::BTreeMap;

use cryomux_core::campaign::{added_dephasing_report, CampaignResult};
use cryomux_core::noise::DispersiveReadout;
use cryomux_core::stats::{box_summary, mean, welch_t, BoxSummary};
use cryomux_core::sweep::NoiseFit;
use cryomux_core::Result;
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct QuantityComparison {
    pub t_stat: f64,
    pub dof: f64,
    pub p_value: f64,
    pub significant: bool,
    /// Sign of mean(mux) − mean(reference).
    pub difference_sign: i8,
    pub mean_reference: f64,
    pub mean_mux: f64,
    pub reference: BoxSummary,
    pub mux: BoxSummary,
}

#[derive(Debug, Serialize)]
pub struct AddedReport {
    pub gamma_phi_add_hz: f64,
    pub gamma_phi_add_se_hz: f64,
    pub n_add: f64,
    pub n_add_se: f64,
}

#[derive(Debug, Serialize)]
pub struct Comparison {
    pub qubit: String,
    pub n_reference: usize,
    pub n_mux: usize,
    pub quantities: BTreeMap<&'static str, QuantityComparison>,
    /// Present when the qubit's κ and χ are known.
    pub added: Option<AddedReport>,
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

fn compare_quantity(reference: &[f64], mux: &[f64]) -> Result<QuantityComparison> {
    let w = welch_t(mux, reference)?;
    Ok(QuantityComparison {
        t_stat: w.t_stat,
        dof: w.dof,
        p_value: w.p_two_sided,
        significant: w.significant(),
        difference_sign: sign(w.mean_difference),
        mean_reference: mean(reference),
        mean_mux: mean(mux),
        reference: box_summary(reference)?,
        mux: box_summary(mux)?,
    })
}

pub fn compare_campaigns(reference: &CampaignResult, mux: &CampaignResult, readout: Option<DispersiveReadout>) -> Result<Comparison> {
    let mut quantities = BTreeMap::new();
    quantities.insert("t1", compare_quantity(&reference.t1(), &mux.t1())?);
    quantities.insert("t2e", compare_quantity(&reference.t2e(), &mux.t2e())?);
    quantities.insert("gamma_phi", compare_quantity(&reference.gamma_phi(), &mux.gamma_phi())?);
    let added = match readout {
        Some(r) => {
            let a = added_dephasing_report(reference, mux, &r)?;
            Some(AddedReport { gamma_phi_add_hz: a.gamma_phi_add, gamma_phi_add_se_hz: a.gamma_phi_add_se, n_add: a.n_add, n_add_se: a.n_add_se })
        }
        None => None,
    };
    Ok(Comparison {
        qubit: reference.qubit.clone(),
        n_reference: reference.repetitions.len(),
        n_mux: mux.repetitions.len(),
        quantities,
        added,
    })
}

#[derive(Debug, Serialize)]
pub struct PathSummary {
    pub t1: BoxSummary,
    pub t2e: BoxSummary,
    pub tphi: BoxSummary,
    pub gamma_phi: BoxSummary,
}

pub fn path_summary(c: &CampaignResult) -> Result<PathSummary> {
    Ok(PathSummary { t1: box_summary(&c.t1())?, t2e: box_summary(&c.t2e())?, tphi: box_summary(&c.tphi())?, gamma_phi: box_summary(&c.gamma_phi())? })
}

/// Noise amplitudes in the customary display units.
#[derive(Debug, Serialize)]
pub struct NoiseReport {
    pub sqrt_a_uphi0: f64,
    pub sqrt_a_err_uphi0: f64,
    pub sqrt_b_nphi0_per_rthz: f64,
    pub sqrt_b_err_nphi0_per_rthz: f64,
    pub a_flux_phi0_sq: f64,
    pub b_flux_phi0_sq_per_hz: f64,
    pub sweet_spot_rate_hz: f64,
    pub points: usize,
    pub residual_rms_hz: f64,
}

impl NoiseReport {
    pub fn new(fit: &NoiseFit, sweet_spot_rate: f64, points: usize) -> Self {
        Self {
            sqrt_a_uphi0: fit.sqrt_a * 1e6,
            sqrt_a_err_uphi0: fit.sqrt_a_err * 1e6,
            sqrt_b_nphi0_per_rthz: fit.sqrt_b * 1e9,
            sqrt_b_err_nphi0_per_rthz: fit.sqrt_b_err * 1e9,
            a_flux_phi0_sq: fit.noise.a_flux,
            b_flux_phi0_sq_per_hz: fit.noise.b_flux,
            sweet_spot_rate_hz: sweet_spot_rate,
            points,
            residual_rms_hz: fit.residual_rms,
        }
    }
}
