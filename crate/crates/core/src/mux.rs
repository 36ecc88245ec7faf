//! SP4T multiplexer model: port selection, static/dynamic/Joule power, RF
//! spectra and the thermal load it puts on the mixing chamber.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Static power ceiling of the ESD protection cells [W]; modeled as zero.
pub const ESD_POWER_CEILING: f64 = 100e-15;

/// Port selected by the two control bits: (D1 D0) + 1 with D0 least significant.
pub fn select_port(d1: bool, d0: bool) -> u8 {
    2 * d1 as u8 + d0 as u8 + 1
}

/// Control bits (D1, D0) that select `port` ∈ 1..=4.
pub fn bits_for_port(port: u8) -> Result<(bool, bool)> {
    if !(1..=4).contains(&port) {
        return Err(Error::Domain(format!("port must be in 1..=4, got {port}")));
    }
    let code = port - 1;
    Ok((code & 2 != 0, code & 1 != 0))
}

/// Map from mixing-chamber temperature rise to a multiplicative T1 factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum T1Degradation {
    /// 1 − (1 − factor_at_reference)·ΔT/reference_dt, clamped to [floor, 1].
    Linear { reference_dt: f64, factor_at_reference: f64, floor: f64 },
    /// factor_at_reference^(ΔT/reference_dt).
    Exponential { reference_dt: f64, factor_at_reference: f64 },
}

impl Default for T1Degradation {
    fn default() -> Self {
        T1Degradation::Linear { reference_dt: 5e-3, factor_at_reference: 0.7, floor: 0.1 }
    }
}

impl T1Degradation {
    pub fn factor(&self, delta_t: f64) -> f64 {
        let delta_t = delta_t.max(0.0);
        match *self {
            T1Degradation::Linear { reference_dt, factor_at_reference, floor } => {
                (1.0 - (1.0 - factor_at_reference) * delta_t / reference_dt).clamp(floor, 1.0)
            }
            T1Degradation::Exponential { reference_dt, factor_at_reference } => {
                factor_at_reference.powf(delta_t / reference_dt)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let (dt, f) = match *self {
            T1Degradation::Linear { reference_dt, factor_at_reference, floor } => {
                if !(0.0..=1.0).contains(&floor) {
                    return Err(Error::Config(format!("T1 degradation floor must lie in [0, 1], got {floor}")));
                }
                (reference_dt, factor_at_reference)
            }
            T1Degradation::Exponential { reference_dt, factor_at_reference } => (reference_dt, factor_at_reference),
        };
        if !(dt > 0.0) || !(f > 0.0 && f <= 1.0) {
            return Err(Error::Config(format!(
                "T1 degradation needs reference ΔT > 0 and factor in (0, 1], got {dt}, {f}"
            )));
        }
        Ok(())
    }
}

/// Scalar parameters of the multiplexer model. Defaults are the measured anchors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MuxParams {
    /// Supply voltage where the device turns on [V].
    pub v_on: f64,
    /// Static power at the reference supply [W].
    pub p_ref: f64,
    /// Reference supply voltage [V].
    pub v_ref: f64,
    /// Leakage slope [V per e-fold].
    pub v_slope: f64,
    /// Static power below turn-on [W].
    pub p_floor: f64,
    /// Slope of dynamic power against square-wave frequency per V² [W/(Hz·V²)].
    pub c_eff_coeff: f64,
    /// Series on-resistance at the reference supply [Ω].
    pub r_on_ref: f64,
    /// Effective threshold of the RF pass transistor [V].
    pub v_t_rf: f64,
    pub n_ports: u8,
    /// Mixing-chamber heating coefficient [K/W].
    pub dt_dp: f64,
    pub t1_degradation: T1Degradation,
    /// CSV override for the insertion-loss table (freq_hz, value_db).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub insertion_loss_csv: Option<String>,
    /// CSV override for the isolation table (freq_hz, value_db).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub isolation_csv: Option<String>,
}

impl Default for MuxParams {
    fn default() -> Self {
        Self {
            v_on: 0.48,
            p_ref: 200e-12,
            v_ref: 0.55,
            v_slope: 0.04,
            p_floor: 1e-13,
            c_eff_coeff: 0.715e-12,
            r_on_ref: 5.3,
            v_t_rf: 0.3,
            n_ports: 4,
            dt_dp: 5e-3 / 0.28e-6,
            t1_degradation: T1Degradation::default(),
            insertion_loss_csv: None,
            isolation_csv: None,
        }
    }
}

impl MuxParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("v_on", self.v_on),
            ("p_ref", self.p_ref),
            ("v_ref", self.v_ref),
            ("v_slope", self.v_slope),
            ("p_floor", self.p_floor),
            ("c_eff_coeff", self.c_eff_coeff),
            ("r_on_ref", self.r_on_ref),
            ("v_t_rf", self.v_t_rf),
            ("dt_dp", self.dt_dp),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("mux.{name} must be positive, got {v}")));
            }
        }
        if self.v_on >= self.v_ref {
            return Err(Error::Config(format!("mux.v_on ({}) must be below mux.v_ref ({})", self.v_on, self.v_ref)));
        }
        if self.v_t_rf >= self.v_ref {
            return Err(Error::Config(format!("mux.v_t_rf ({}) must be below mux.v_ref ({})", self.v_t_rf, self.v_ref)));
        }
        if self.n_ports < 2 {
            return Err(Error::Config(format!("mux.n_ports must be at least 2, got {}", self.n_ports)));
        }
        self.t1_degradation.validate()
    }
}

/// A tabulated spectrum in dB, linearly interpolated in frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    points: Vec<(f64, f64)>,
}

#[derive(Debug, Deserialize)]
struct SpectrumRow {
    freq_hz: f64,
    value_db: f64,
}

impl Spectrum {
    pub fn from_points(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Config("spectrum table needs at least two points".into()));
        }
        if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
            return Err(Error::Config("spectrum table contains non-finite values".into()));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Config("spectrum frequencies must be strictly increasing".into()));
        }
        Ok(Self { points })
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let points = rdr
            .deserialize::<SpectrumRow>()
            .map(|r| r.map(|row| (row.freq_hz, row.value_db)))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::from_points(points)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn span(&self) -> (f64, f64) {
        (self.points[0].0, self.points[self.points.len() - 1].0)
    }

    pub fn at(&self, freq: f64) -> Result<f64> {
        let (min, max) = self.span();
        if !(freq >= min && freq <= max) {
            return Err(Error::OutOfSpan { freq, min, max });
        }
        let idx = self.points.partition_point(|p| p.0 < freq);
        if idx < self.points.len() && self.points[idx].0 == freq {
            return Ok(self.points[idx].1);
        }
        let (f0, v0) = self.points[idx - 1];
        let (f1, v1) = self.points[idx];
        Ok(v0 + (v1 - v0) * (freq - f0) / (f1 - f0))
    }
}

pub fn bundled_insertion_loss() -> Spectrum {
    Spectrum::from_csv_reader(include_str!("../../../data/rf_insertion_loss.csv").as_bytes())
        .expect("bundled insertion-loss table is valid")
}

pub fn bundled_isolation() -> Spectrum {
    Spectrum::from_csv_reader(include_str!("../../../data/rf_isolation.csv").as_bytes())
        .expect("bundled isolation table is valid")
}

/// First-order series/shunt switch network used to generate synthetic spectra.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchNetwork {
    pub r_on_series: f64,
    pub c_off_series: f64,
    pub r_on_shunt: f64,
    pub c_off_shunt: f64,
    pub z0: f64,
    pub n_ports: u8,
}

impl Default for SwitchNetwork {
    fn default() -> Self {
        Self { r_on_series: 5.3, c_off_series: 25e-15, r_on_shunt: 21.2, c_off_shunt: 6e-15, z0: 50.0, n_ports: 4 }
    }
}

type Abcd = [[Complex64; 2]; 2];

fn series(z: Complex64) -> Abcd {
    let one = Complex64::new(1.0, 0.0);
    [[one, z], [Complex64::new(0.0, 0.0), one]]
}

fn shunt(y: Complex64) -> Abcd {
    let one = Complex64::new(1.0, 0.0);
    [[one, Complex64::new(0.0, 0.0)], [y, one]]
}

fn cascade(a: Abcd, b: Abcd) -> Abcd {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn s21_db(m: Abcd, z0: f64) -> f64 {
    let denom = m[0][0] + m[0][1] / z0 + m[1][0] * z0 + m[1][1];
    -20.0 * (2.0 / denom.norm()).log10()
}

impl SwitchNetwork {
    /// Loss through the selected arm [dB, positive].
    pub fn insertion_loss(&self, freq: f64) -> f64 {
        let jw = Complex64::new(0.0, 2.0 * std::f64::consts::PI * freq);
        let off_arms = f64::from(self.n_ports.saturating_sub(1));
        let m = cascade(
            cascade(shunt(jw * self.c_off_series * off_arms), series(Complex64::new(self.r_on_series, 0.0))),
            shunt(jw * self.c_off_shunt),
        );
        s21_db(m, self.z0)
    }

    /// Suppression to an unselected arm [dB, positive].
    pub fn isolation(&self, freq: f64) -> f64 {
        if freq == 0.0 {
            return f64::INFINITY;
        }
        let jw = Complex64::new(0.0, 2.0 * std::f64::consts::PI * freq);
        let m = cascade(series(1.0 / (jw * self.c_off_series)), shunt(Complex64::new(1.0 / self.r_on_shunt, 0.0)));
        s21_db(m, self.z0)
    }

    /// Tabulates both spectra on `freqs`; DC isolation is clamped to the first finite value.
    pub fn tabulate(&self, freqs: &[f64]) -> Result<(Spectrum, Spectrum)> {
        let il = freqs.iter().map(|&f| (f, self.insertion_loss(f))).collect();
        let mut iso: Vec<(f64, f64)> = freqs.iter().map(|&f| (f, self.isolation(f))).collect();
        let first_finite = iso.iter().map(|p| p.1).find(|v| v.is_finite()).unwrap_or(0.0);
        for p in iso.iter_mut().filter(|p| !p.1.is_finite()) {
            p.1 = first_finite;
        }
        Ok((Spectrum::from_points(il)?, Spectrum::from_points(iso)?))
    }
}

/// The multiplexer model: immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuxModel {
    pub params: MuxParams,
    pub insertion_loss: Spectrum,
    pub isolation: Spectrum,
}

impl Default for MuxModel {
    fn default() -> Self {
        Self { params: MuxParams::default(), insertion_loss: bundled_insertion_loss(), isolation: bundled_isolation() }
    }
}

impl MuxModel {
    /// Builds a model, loading table overrides relative to `base_dir`.
    pub fn from_params(params: MuxParams, base_dir: Option<&Path>) -> Result<Self> {
        params.validate()?;
        let resolve = |p: &str| match base_dir {
            Some(dir) => dir.join(p),
            None => Path::new(p).to_path_buf(),
        };
        let insertion_loss = match &params.insertion_loss_csv {
            Some(p) => Spectrum::from_csv_path(&resolve(p))?,
            None => bundled_insertion_loss(),
        };
        let isolation = match &params.isolation_csv {
            Some(p) => Spectrum::from_csv_path(&resolve(p))?,
            None => bundled_isolation(),
        };
        Ok(Self { params, insertion_loss, isolation })
    }

    /// Static leakage power [W]: the floor below turn-on, otherwise exponential
    /// in VDD anchored at (v_ref, p_ref).
    pub fn static_power(&self, vdd: f64) -> f64 {
        let p = &self.params;
        if vdd < p.v_on {
            p.p_floor
        } else {
            p.p_ref * ((vdd - p.v_ref) / p.v_slope).exp()
        }
    }

    /// Energy per switching event [J]. The dynamic-power slope is per Hz of
    /// square-wave frequency, and each period holds two switching events.
    pub fn dynamic_energy_per_event(&self, vdd: f64) -> Result<f64> {
        self.check_operational(vdd)?;
        Ok(self.params.c_eff_coeff * vdd * vdd / 2.0)
    }

    fn check_operational(&self, vdd: f64) -> Result<()> {
        if vdd < self.params.v_on {
            return Err(Error::NotOperational { vdd, v_on: self.params.v_on });
        }
        Ok(())
    }

    /// Series on-resistance from the overdrive model R ∝ 1/(V − V_t) [Ω].
    pub fn r_on(&self, vdd: f64) -> Result<f64> {
        let p = &self.params;
        if vdd <= p.v_t_rf {
            return Err(Error::NotConducting { vdd, v_t: p.v_t_rf });
        }
        Ok(p.r_on_ref * (p.v_ref - p.v_t_rf) / (vdd - p.v_t_rf))
    }

    /// Joule heating from a DC flux-bias current through the series switch [W].
    pub fn joule_power(&self, i_dc: f64, vdd: f64) -> Result<f64> {
        Ok(i_dc * i_dc * self.r_on(vdd)?)
    }

    pub fn insertion_loss(&self, freq: f64) -> Result<f64> {
        self.insertion_loss.at(freq)
    }

    pub fn isolation(&self, freq: f64) -> Result<f64> {
        self.isolation.at(freq)
    }

    /// Mixing-chamber temperature rise [K] for dissipated power `p` [W].
    pub fn mxc_heating(&self, p: f64) -> Result<f64> {
        if !(p >= 0.0) {
            return Err(Error::Domain(format!("dissipated power must be nonnegative, got {p}")));
        }
        Ok(self.params.dt_dp * p)
    }

    pub fn t1_factor(&self, delta_t: f64) -> f64 {
        self.params.t1_degradation.factor(delta_t)
    }
}

/// Supply and control-bit state of one multiplexer. Transitions are explicit;
/// each bit flip counts as one switching event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuxState {
    vdd: f64,
    d1: bool,
    d0: bool,
    switching_events: u64,
}

impl MuxState {
    pub fn new(vdd: f64) -> Self {
        Self { vdd, d1: false, d0: false, switching_events: 0 }
    }

    pub fn vdd(&self) -> f64 {
        self.vdd
    }

    pub fn bits(&self) -> (bool, bool) {
        (self.d1, self.d0)
    }

    pub fn selected_port(&self) -> u8 {
        select_port(self.d1, self.d0)
    }

    pub fn switching_events(&self) -> u64 {
        self.switching_events
    }

    pub fn set_bits(&mut self, d1: bool, d0: bool) {
        self.switching_events += u64::from(d1 != self.d1) + u64::from(d0 != self.d0);
        self.d1 = d1;
        self.d0 = d0;
    }

    pub fn select(&mut self, port: u8) -> Result<()> {
        let (d1, d0) = bits_for_port(port)?;
        self.set_bits(d1, d0);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn port_table() {
        assert_eq!(select_port(false, false), 1);
        assert_eq!(select_port(false, true), 2);
        assert_eq!(select_port(true, false), 3);
        assert_eq!(select_port(true, true), 4);
        assert!(bits_for_port(0).is_err());
        assert!(bits_for_port(5).is_err());
    }

    #[test]
    fn state_transitions_count_events() {
        let mut s = MuxState::new(0.55);
        assert_eq!(s.selected_port(), 1);
        s.select(4).unwrap();
        assert_eq!(s.selected_port(), 4);
        assert_eq!(s.switching_events(), 2);
        s.select(3).unwrap();
        assert_eq!(s.switching_events(), 3);
        assert_eq!(s.vdd(), 0.55);
    }

    #[test]
    fn static_power_anchor() {
        let m = MuxModel::default();
        assert_eq!(m.static_power(0.55), 200e-12);
        assert!(m.static_power(0.3) <= 1e-13);
        let e_fold = m.static_power(0.55 + 0.04);
        assert!((e_fold / (200e-12 * std::f64::consts::E) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dynamic_energy() {
        let m = MuxModel::default();
        let e = m.dynamic_energy_per_event(0.55).unwrap();
        assert!((e - 108e-15).abs() < 0.02 * 108e-15, "{e}");
        assert!(matches!(m.dynamic_energy_per_event(0.4), Err(Error::NotOperational { .. })));
        let old = MuxModel { params: MuxParams { c_eff_coeff: 1e-12, ..MuxParams::default() }, ..MuxModel::default() };
        let e_old = old.dynamic_energy_per_event(0.55).unwrap();
        assert!((e_old - 151.25e-15).abs() < 1e-18);
    }

    #[test]
    fn on_resistance() {
        let m = MuxModel::default();
        assert!((m.r_on(0.55).unwrap() - 5.3).abs() < 1e-12);
        assert!(m.r_on(1.0).unwrap() < 5.3);
        assert!(m.r_on(0.3 + 1e-9).unwrap() > 1e8);
        assert!(matches!(m.r_on(0.3), Err(Error::NotConducting { .. })));
        assert!(m.joule_power(1e-3, 0.2).is_err());
    }

    #[test]
    fn heating_calibration() {
        let m = MuxModel::default();
        assert_eq!(m.mxc_heating(0.0).unwrap(), 0.0);
        assert_eq!(m.t1_factor(0.0), 1.0);
        let dt = m.mxc_heating(0.28e-6).unwrap();
        assert!((dt - 5e-3).abs() < 1e-15);
        assert!((m.t1_factor(dt) - 0.7).abs() < 1e-12);
        assert!((m.mxc_heating(0.14e-6).unwrap() - 2.5e-3).abs() < 1e-15);
        assert!(m.mxc_heating(-1.0).is_err());
        assert_eq!(m.t1_factor(1.0), 0.1);
    }

    #[test]
    fn exponential_degradation_calibrates() {
        let d = T1Degradation::Exponential { reference_dt: 5e-3, factor_at_reference: 0.7 };
        assert!((d.factor(5e-3) - 0.7).abs() < 1e-14);
        assert!(d.factor(10e-3) < d.factor(5e-3));
    }

    #[test]
    fn default_spectra() {
        let m = MuxModel::default();
        assert!((m.insertion_loss(5e9).unwrap() - 1.5).abs() < 0.2);
        assert!(m.insertion_loss(9.2e9).unwrap() <= 3.0);
        assert!(m.isolation(5e9).unwrap() >= 30.0);
        assert!(matches!(m.isolation(20e9), Err(Error::OutOfSpan { .. })));
        assert!(m.insertion_loss(-1.0).is_err());
    }

    #[test]
    fn spectrum_validation() {
        assert!(Spectrum::from_points(vec![(1.0, 0.0)]).is_err());
        assert!(Spectrum::from_points(vec![(1.0, 0.0), (1.0, 2.0)]).is_err());
        let s = Spectrum::from_points(vec![(0.0, 0.0), (2.0, 4.0)]).unwrap();
        assert_eq!(s.at(0.5).unwrap(), 1.0);
    }

    #[test]
    fn switch_network_generates_plausible_tables() {
        let net = SwitchNetwork::default();
        let freqs: Vec<f64> = (0..=40).map(|i| i as f64 * 0.25e9).collect();
        let (il, iso) = net.tabulate(&freqs).unwrap();
        assert!(il.at(0.0).unwrap() > 0.0 && il.at(1e9).unwrap() < 1.0);
        assert!(il.at(10e9).unwrap() > il.at(1e9).unwrap());
        assert!(iso.at(1e9).unwrap() > iso.at(8e9).unwrap());
        assert!(iso.at(0.0).unwrap().is_finite());
    }

    #[test]
    fn params_validation() {
        let bad = MuxParams { v_on: 0.6, ..MuxParams::default() };
        assert!(bad.validate().is_err());
        let bad = MuxParams { n_ports: 1, ..MuxParams::default() };
        assert!(bad.validate().is_err());
        MuxParams::default().validate().unwrap();
    }
}
