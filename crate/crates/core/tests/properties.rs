use cryomux_core::campaign::{
    added_dephasing_report, delay_grid, run_coherence_campaign, synth_t1_trace, CampaignConfig, CampaignSystem, DriftConfig,
};
use cryomux_core::device::bundled_qubit;
use cryomux_core::fit::fit_exponential_xy;
use cryomux_core::mux::{MuxModel, Spectrum};
use cryomux_core::noise::{
    added_photons, chi_closed, photon_shot_dephasing, psd_flux, t2e_from_components, DephasingContext, NoiseParams,
};
use cryomux_core::planner::max_multiplexers_for;
use cryomux_core::stats::{box_summary, mean, student_t_cdf, welch_t};
use cryomux_core::sweep::{extract_noise_params, extract_noise_params_table, run_flux_sweep, SweepConfig, SweepQubit};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

fn noise_strategy() -> impl Strategy<Value = NoiseParams> {
    (1e-7..1e-5f64, 1e-10..1e-7f64).prop_map(|(a, b)| NoiseParams::from_sqrt(a, b).unwrap())
}

fn short_campaign(noise_sigma: f64, drift: bool) -> CampaignConfig {
    CampaignConfig {
        duration: 6.0 * 600.0,
        noise_sigma,
        drift: DriftConfig { enabled: drift, ..Default::default() },
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn psd_is_even(n in noise_strategy(), w in 1e-3..1e12f64) {
        prop_assert_eq!(psd_flux(n, w).unwrap(), psd_flux(n, -w).unwrap());
    }

    #[test]
    fn chi_grows_with_tau(n in noise_strategy(), d in 1e7..1e11f64, tau in 1e-8..1e-3f64, k in 1.0001..10.0f64) {
        let a = chi_closed(n, DephasingContext::new(d, tau).unwrap());
        let b = chi_closed(n, DephasingContext::new(d, tau * k).unwrap());
        prop_assert!(b > a);
    }

    #[test]
    fn photon_number_inverts_shot_noise(nbar in 0.0..1.0f64, kappa in 1e5..1e8f64, chi in 1e4..1e8f64) {
        let gamma = photon_shot_dephasing(nbar, kappa, chi).unwrap();
        prop_assert!(close(added_photons(gamma, kappa, chi).unwrap(), nbar, 1e-10) || nbar < 1e-300);
    }

    #[test]
    fn shot_noise_ignores_chi_sign(nbar in 0.0..1.0f64, kappa in 1e5..1e8f64, chi in 1e4..1e8f64) {
        prop_assert_eq!(photon_shot_dephasing(nbar, kappa, chi).unwrap(), photon_shot_dephasing(nbar, kappa, -chi).unwrap());
    }

    #[test]
    fn welch_is_antisymmetric(x in prop::collection::vec(-1e3..1e3f64, 3..30), y in prop::collection::vec(-1e3..1e3f64, 3..30)) {
        let (a, b) = (welch_t(&x, &y), welch_t(&y, &x));
        prop_assume!(a.is_ok());
        let (a, b) = (a.unwrap(), b.unwrap());
        prop_assert!((a.t_stat + b.t_stat).abs() <= 1e-9 * a.t_stat.abs().max(1.0));
        prop_assert!((a.p_two_sided - b.p_two_sided).abs() < 1e-12);
    }

    #[test]
    fn welch_is_affine_invariant(
        x in prop::collection::vec(-1e2..1e2f64, 3..30),
        y in prop::collection::vec(-1e2..1e2f64, 3..30),
        scale in 0.01..100.0f64,
        shift in -1e3..1e3f64,
    ) {
        let base = welch_t(&x, &y);
        prop_assume!(base.is_ok());
        let base = base.unwrap();
        let map = |v: &[f64]| v.iter().map(|s| s * scale + shift).collect::<Vec<_>>();
        let moved = welch_t(&map(&x), &map(&y)).unwrap();
        prop_assert!((moved.t_stat - base.t_stat).abs() <= 1e-6 * base.t_stat.abs().max(1.0));
        prop_assert!((moved.p_two_sided - base.p_two_sided).abs() < 1e-6);
    }

    #[test]
    fn t_cdf_tends_to_normal(t in -6.0..6.0f64) {
        let normal = Normal::new(0.0, 1.0).unwrap();
        prop_assert!((student_t_cdf(t, 1e6).unwrap() - normal.cdf(t)).abs() < 1e-6);
    }

    #[test]
    fn box_summary_is_ordered(x in prop::collection::vec(-1e3..1e3f64, 1..80)) {
        let s = box_summary(&x).unwrap();
        prop_assert!(s.whisker_lo <= s.q1 && s.q1 <= s.median && s.median <= s.q3 && s.q3 <= s.whisker_hi);
        let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!(s.whisker_lo >= lo);
    }

    #[test]
    fn static_power_nondecreasing(a in 0.0..1.2f64, b in 0.0..1.2f64) {
        let m = MuxModel::default();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(m.static_power(hi) >= m.static_power(lo));
    }

    #[test]
    fn switching_energy_quadratic(v in 0.4..1.0f64, k in 1.0..1.5f64) {
        let m = MuxModel::default();
        let (e1, e2) = (m.dynamic_energy_per_event(v), m.dynamic_energy_per_event(v * k));
        prop_assume!(e1.is_ok() && e2.is_ok());
        prop_assert!(close(e2.unwrap() / e1.unwrap(), k * k, 1e-12));
    }

    #[test]
    fn t1_factor_bounded(dt in 0.0..1.0f64) {
        let f = MuxModel::default().t1_factor(dt);
        prop_assert!(f > 0.0 && f <= 1.0);
    }

    #[test]
    fn spectrum_interpolation_stays_within_neighbours(
        values in prop::collection::vec(-60.0..0.0f64, 2..20),
        u in 0.0..1.0f64,
    ) {
        let points: Vec<(f64, f64)> = values.iter().enumerate().map(|(i, v)| (1e9 * (i as f64 + 1.0), *v)).collect();
        let s = Spectrum::from_points(points.clone()).unwrap();
        let (lo, hi) = s.span();
        let f = lo + u * (hi - lo);
        let v = s.at(f).unwrap();
        let i = points.partition_point(|p| p.0 < f).max(1);
        let (a, b) = (points[i - 1].1, points[i.min(points.len() - 1)].1);
        prop_assert!(v >= a.min(b) - 1e-12 && v <= a.max(b) + 1e-12);
    }

    #[test]
    fn capacity_monotone(avail in 1e-7..1e-3f64, per in 1e-12..1e-6f64, k in 1.0..10.0f64) {
        let base = max_multiplexers_for(avail, per, 4).unwrap();
        prop_assert!(max_multiplexers_for(avail, per * k, 4).unwrap().mux_count <= base.mux_count);
        prop_assert!(max_multiplexers_for(avail * k, per, 4).unwrap().mux_count >= base.mux_count);
        prop_assert_eq!(base.addressable_devices, 4 * base.mux_count);
    }

    #[test]
    fn exponential_fit_round_trip(rate in 1e3..1e6f64, amp in 0.2..2.0f64, offset in -0.5..0.5f64) {
        let t = delay_grid(1.0 / rate, 51).unwrap();
        let y: Vec<f64> = t.iter().map(|t| amp * (-rate * t).exp() + offset).collect();
        let f = fit_exponential_xy(&t, &y).unwrap();
        prop_assert!(close(f.rate, rate, 1e-6), "rate {} vs {}", f.rate, rate);
        prop_assert!(close(f.amplitude, amp, 1e-6));
        prop_assert!((f.offset - offset).abs() < 1e-6);
    }

    #[test]
    fn delay_grid_increasing(expected in 1e-7..1e-2f64, points in 5usize..200) {
        let g = delay_grid(expected, points).unwrap();
        prop_assert_eq!(g.len(), points);
        prop_assert_eq!(g[0], 0.0);
        prop_assert!(g.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(close(*g.last().unwrap(), 3.0 * expected, 1e-12));
    }

    #[test]
    fn t2e_never_exceeds_twice_t1(t1 in 1e-6..1e-3f64, tphi in 1e-6..1e-2f64) {
        prop_assert!(t2e_from_components(t1, tphi).unwrap() < 2.0 * t1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn sweep_extraction_ignores_constant_offset(n in noise_strategy(), shift in 0.0..1e5f64) {
        let cfg = SweepConfig { points: 21, ..Default::default() };
        let sweep = run_flux_sweep(&SweepQubit::default(), n, &MuxModel::default(), &cfg, &cfg.phi_grid().unwrap(), 0).unwrap();
        let base = extract_noise_params(&sweep).unwrap();
        let mut samples = sweep.samples();
        for s in &mut samples {
            s.gamma_phi_e_hz += shift;
        }
        let moved = extract_noise_params_table(&samples, sweep.gamma_phi_ss + shift).unwrap();
        prop_assert!(close(moved.sqrt_a, base.sqrt_a, 1e-6) && close(moved.sqrt_b, base.sqrt_b, 1e-6));
    }

    #[test]
    fn campaign_is_deterministic(seed in any::<u64>()) {
        let system = CampaignSystem { qubit: bundled_qubit("Q2").unwrap(), n_add: 0.022 };
        let cfg = short_campaign(0.01, true);
        prop_assert_eq!(run_coherence_campaign(&system, &cfg, seed).unwrap(), run_coherence_campaign(&system, &cfg, seed).unwrap());
    }

    #[test]
    fn repetitions_satisfy_coherence_relation(seed in any::<u64>()) {
        let system = CampaignSystem { qubit: bundled_qubit("Q1").unwrap(), n_add: 0.005 };
        let (reference, mux) = run_coherence_campaign(&system, &short_campaign(0.01, true), seed).unwrap();
        for r in reference.repetitions.iter().chain(&mux.repetitions) {
            prop_assert!(close(r.gamma_phi, 1.0 / r.t2e - 0.5 / r.t1, 1e-9));
            prop_assert!(close(r.tphi, 1.0 / r.gamma_phi, 1e-12));
        }
    }

    #[test]
    fn mux_dephasing_grows_with_added_photons(seed in any::<u64>(), n1 in 0.0..0.05f64, dn in 0.005..0.05f64) {
        let q = bundled_qubit("Q3").unwrap();
        let cfg = short_campaign(0.0, false);
        let run = |n_add| run_coherence_campaign(&CampaignSystem { qubit: q.clone(), n_add }, &cfg, seed).unwrap().1;
        prop_assert!(mean(&run(n1 + dn).gamma_phi()) > mean(&run(n1).gamma_phi()));
    }
}

#[test]
fn fit_error_bars_cover_truth() {
    let t1 = 30e-6;
    let grid = delay_grid(t1, 51).unwrap();
    let covered = (0..200u64)
        .filter(|&seed| {
            let f = synth_t1_trace(t1, &grid, 0.01, seed).unwrap().fit().unwrap();
            (f.rate - 1.0 / t1).abs() <= 3.0 * f.rate_sigma
        })
        .count();
    assert!(covered >= 190, "{covered}/200 within 3σ");
}

#[test]
fn campaign_recovers_tabulated_photon_numbers() {
    for (name, n_add) in [("Q1", 0.005), ("Q3", 0.009)] {
        let q = bundled_qubit(name).unwrap();
        let readout = q.readout().unwrap();
        let system = CampaignSystem { qubit: q, n_add };
        let (reference, mux) = run_coherence_campaign(&system, &CampaignConfig::default(), 20_240_601).unwrap();
        let report = added_dephasing_report(&reference, &mux, &readout).unwrap();
        assert!(report.welch.p_two_sided < 0.05, "{name}: p = {}", report.welch.p_two_sided);
        assert!(close(report.n_add, n_add, 0.3), "{name}: n_add = {}", report.n_add);
    }
}

#[test]
fn t1_is_flat_without_heating() {
    let cfg = SweepConfig { heating: false, points: 21, ..Default::default() };
    let n = NoiseParams::from_sqrt(2.8e-6, 15e-9).unwrap();
    let sweep = run_flux_sweep(&SweepQubit::default(), n, &MuxModel::default(), &cfg, &cfg.phi_grid().unwrap(), 0).unwrap();
    assert!(sweep.points.iter().all(|p| p.t1_true == SweepQubit::default().t1));
    let hot = SweepConfig { points: 21, ..Default::default() };
    let sweep = run_flux_sweep(&SweepQubit::default(), n, &MuxModel::default(), &hot, &hot.phi_grid().unwrap(), 0).unwrap();
    assert!(sweep.points.iter().any(|p| p.t1_true < SweepQubit::default().t1));
}

