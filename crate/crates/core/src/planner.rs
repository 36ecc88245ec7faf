//! Cooling-power budget for scaling multiplexed characterization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mux::MuxModel;

/// Shunt-to-series gate-area ratio (0.32 µm² / 1.28 µm²); gate leakage is taken
/// proportional to area.
pub const SHUNT_TO_SERIES_LEAKAGE: f64 = 0.25;

/// Ports of the reference design: one series and three shunt transistors active.
pub const REFERENCE_PORTS: u32 = 4;

// Guards floor() against quotients such as 20e-6/200e-12 landing a hair below an integer.
const FLOOR_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetConfig {
    /// Cooling power available at the cold stage [W].
    pub cooling_power: f64,
    /// Static power per multiplexer [W]; when absent it is taken from the mux
    /// model at `vdd`, scaled to `ports_per_mux`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_mux_static: Option<f64>,
    pub ports_per_mux: u32,
    /// Control-bit square-wave frequency per multiplexer [Hz]; each period is two switching events.
    pub switching_rate: f64,
    /// DC flux-bias current through each multiplexer [A]; 0 leaves flux biasing out of the budget.
    pub flux_bias_current: f64,
    /// Supply voltage [V].
    pub vdd: f64,
    /// Fraction of the cooling power held in reserve.
    pub margin: f64,
    /// Static power not attributable to the RF core [W], held constant under port scaling.
    pub static_overhead: f64,
    /// Deployed multiplexer count; when absent the report uses the maximum that fits.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mux_count: Option<u64>,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        Self {
            cooling_power: 20e-6,
            per_mux_static: None,
            ports_per_mux: REFERENCE_PORTS,
            switching_rate: 0.0,
            flux_bias_current: 0.0,
            vdd: 0.55,
            margin: 0.0,
            static_overhead: 0.0,
            mux_count: None,
        }
    }
}

impl BudgetConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.margin) {
            return Err(Error::Config(format!("budget.margin must lie in [0, 1), got {}", self.margin)));
        }
        for (name, v) in [
            ("cooling_power", self.cooling_power),
            ("switching_rate", self.switching_rate),
            ("static_overhead", self.static_overhead),
            ("per_mux_static", self.per_mux_static.unwrap_or(0.0)),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("budget.{name} must be finite and nonnegative, got {v}")));
            }
        }
        if self.ports_per_mux == 0 {
            return Err(Error::Config("budget.ports_per_mux must be positive".into()));
        }
        Ok(())
    }

    /// Power available after the reserve margin [W].
    pub fn available(&self) -> f64 {
        self.cooling_power * (1.0 - self.margin)
    }
}

/// Static power of an `n_ports` design given the static power `base_static` of
/// the four-port design. The base splits into a series transistor P_s, three
/// shunts at 0.25·P_s each, and a constant `overhead`; each extra port adds one shunt.
pub fn port_scaling_power(base_static: f64, n_ports: u32, overhead: f64) -> Result<f64> {
    if n_ports == 0 {
        return Err(Error::Domain("a multiplexer needs at least one port".into()));
    }
    let series = (base_static - overhead) / (1.0 + SHUNT_TO_SERIES_LEAKAGE * f64::from(REFERENCE_PORTS - 1));
    Ok(series * (1.0 + SHUNT_TO_SERIES_LEAKAGE * f64::from(n_ports - 1)) + overhead)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerMuxPower {
    pub static_w: f64,
    pub dynamic_w: f64,
    pub joule_w: f64,
}

impl PerMuxPower {
    pub fn total(&self) -> f64 {
        self.static_w + self.dynamic_w + self.joule_w
    }
}

pub fn per_mux_power(cfg: &BudgetConfig, model: &MuxModel) -> Result<PerMuxPower> {
    cfg.validate()?;
    let static_w = match cfg.per_mux_static {
        Some(p) => p,
        None => port_scaling_power(model.static_power(cfg.vdd), cfg.ports_per_mux, cfg.static_overhead)?,
    };
    let dynamic_w = if cfg.switching_rate > 0.0 {
        2.0 * cfg.switching_rate * model.dynamic_energy_per_event(cfg.vdd)?
    } else {
        0.0
    };
    let joule_w = if cfg.flux_bias_current != 0.0 {
        model.joule_power(cfg.flux_bias_current, cfg.vdd)?
    } else {
        0.0
    };
    Ok(PerMuxPower { static_w, dynamic_w, joule_w })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capacity {
    pub mux_count: u64,
    pub addressable_devices: u64,
}

/// Largest multiplexer count whose combined dissipation fits the available cooling power.
pub fn max_multiplexers_for(available: f64, per_mux: f64, ports_per_mux: u32) -> Result<Capacity> {
    if !(per_mux > 0.0) {
        return Err(Error::Unbounded);
    }
    let mux_count = (available / per_mux * (1.0 + FLOOR_SLACK)).floor() as u64;
    Ok(Capacity { mux_count, addressable_devices: mux_count * u64::from(ports_per_mux) })
}

pub fn max_multiplexers(cfg: &BudgetConfig, model: &MuxModel) -> Result<Capacity> {
    let per = per_mux_power(cfg, model)?;
    max_multiplexers_for(cfg.available(), per.total(), cfg.ports_per_mux)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub mux_count: u64,
    pub addressable_devices: u64,
    pub max_mux_count: u64,
    pub per_mux: PerMuxPower,
    pub static_w: f64,
    pub dynamic_w: f64,
    pub joule_w: f64,
    pub total_w: f64,
    pub available_w: f64,
    pub headroom_w: f64,
    pub feasible: bool,
}

pub fn budget_report(cfg: &BudgetConfig, model: &MuxModel) -> Result<BudgetReport> {
    let per_mux = per_mux_power(cfg, model)?;
    let available_w = cfg.available();
    let max_mux_count = max_multiplexers_for(available_w, per_mux.total(), cfg.ports_per_mux)?.mux_count;
    let mux_count = cfg.mux_count.unwrap_or(max_mux_count);
    let n = mux_count as f64;
    let (static_w, dynamic_w, joule_w) = (n * per_mux.static_w, n * per_mux.dynamic_w, n * per_mux.joule_w);
    let total_w = static_w + dynamic_w + joule_w;
    let feasible = mux_count <= max_mux_count;
    let headroom_w = if feasible { (available_w - total_w).max(0.0) } else { 0.0 };
    Ok(BudgetReport {
        mux_count,
        addressable_devices: mux_count * u64::from(cfg.ports_per_mux),
        max_mux_count,
        per_mux,
        static_w,
        dynamic_w,
        joule_w,
        total_w,
        available_w,
        headroom_w,
        feasible,
    })
}
