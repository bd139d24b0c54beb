use std::f64::consts::{PI, TAU};

use photonstats::interferometry::{
    coherence_function, delay_scan_plan, delay_scan_plan_with_step, extract_visibility, fit_envelope,
    interferogram_from_spectrum, michelson_lorentzian, read_delay_csv, write_delay_csv, Interferogram, ShapeChoice,
};
use photonstats::photophys::{
    apply_filter, coherence_from_times, evaluate_spectrum, linear_grid, ComponentKind, LorentzianComponent,
    ParametricSpectrum,
};
use photonstats::units::{ev_to_hz, ev_to_rad_per_s, FS, PS};
use photonstats::{presets, Error};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn omega0() -> f64 {
    ev_to_rad_per_s(presets::ZPL_CENTER_EV)
}

fn fringe_delays(reach: f64, per_period: usize) -> Vec<f64> {
    let step = TAU / omega0() / per_period as f64;
    (0..=(reach / step) as usize).map(|k| k as f64 * step).collect()
}

fn line(center: f64, fwhm: f64, area: f64) -> LorentzianComponent {
    LorentzianComponent::new(center, fwhm, area, ComponentKind::Zpl).unwrap()
}

#[test]
fn closed_form_limits() {
    let rates = coherence_from_times(presets::T1, presets::T2_STAR_ZPL).unwrap();
    let period = TAU / omega0();
    // A delay of 2/Γ rounded to a whole number of fringes keeps cos = 1.
    let t2_fringe = (rates.t2 / period).round() * period;
    let ig = michelson_lorentzian(&rates, omega0(), 1.0, &[0.0, t2_fringe, 1e-9]).unwrap();
    assert!((ig.intensity[0] - 1.0).abs() < 1e-12);
    let expected = 0.5 * (1.0 + (-rates.gamma_total * t2_fringe / 2.0).exp());
    assert!((ig.intensity[1] - expected).abs() < 1e-12);
    assert!((ig.intensity[1] - 0.5 * (1.0 + (-1.0f64).exp())).abs() < 0.01);
    assert!((ig.intensity[2] - 0.5).abs() < 1e-12);
}

#[test]
fn lorentzian_coherence_decays_at_pi_linewidth() {
    let fwhm_ev = 0.005;
    let spec = ParametricSpectrum::new(vec![line(1.747, fwhm_ev, 1.0)]).unwrap();
    let grid = linear_grid(1.747 - 300.0 * fwhm_ev, 1.747 + 300.0 * fwhm_ev, 1 << 14);
    let sampled = evaluate_spectrum(&spec, &grid).unwrap();
    let dnu = ev_to_hz(fwhm_ev);
    let delays: Vec<f64> = (0..50).map(|k| k as f64 * 20.0 * FS).collect();
    let g1 = coherence_function(&sampled, &delays).unwrap();
    assert!((g1[0].norm() - 1.0).abs() < 1e-12);
    for (t, g) in delays.iter().zip(&g1) {
        assert!((g.norm() - (-PI * dnu * t).exp()).abs() < 2e-3, "τ = {t}: {}", g.norm());
    }
}

#[test]
fn two_lines_beat() {
    let (fwhm, split) = (0.0002, 0.005);
    let spec = ParametricSpectrum::new(vec![
        line(1.747 - split / 2.0, fwhm, 1.0),
        line(1.747 + split / 2.0, fwhm, 1.0),
    ])
    .unwrap();
    let grid = linear_grid(1.747 - 0.06, 1.747 + 0.06, 1 << 16);
    let sampled = evaluate_spectrum(&spec, &grid).unwrap();
    let delta_omega = ev_to_rad_per_s(split);
    let delays: Vec<f64> = (0..100).map(|k| k as f64 * 20.0 * FS).collect();
    let g1 = coherence_function(&sampled, &delays).unwrap();
    for (t, g) in delays.iter().zip(&g1) {
        let damping = (-PI * ev_to_hz(fwhm) * t).exp();
        let beat = (delta_omega * t / 2.0).cos().abs();
        assert!((g.norm() - damping * beat).abs() < 5e-3, "τ = {t}");
    }
}

#[test]
fn visibility_of_pure_and_flat_signals() {
    let delays = fringe_delays(0.2 * PS, 16);
    let cosine = Interferogram {
        intensity: delays
            .iter()
            .map(|t| 0.5 * (1.0 + 0.3 * (omega0() * t).cos()))
            .collect(),
        delays: delays.clone(),
        v0: 1.0,
    };
    let v = extract_visibility(&cosine, omega0()).unwrap();
    assert!(!v.visibility.is_empty());
    assert!(v.visibility.iter().all(|x| (x - 0.3).abs() < 1e-9));
    let flat = Interferogram {
        intensity: vec![0.5; delays.len()],
        delays,
        v0: 1.0,
    };
    assert!(extract_visibility(&flat, omega0())
        .unwrap()
        .visibility
        .iter()
        .all(|x| x.abs() < 1e-12));
}

#[test]
fn extracted_visibility_follows_the_envelope() {
    let rates = coherence_from_times(presets::T1, presets::T2_STAR_ZPL).unwrap();
    let ig = michelson_lorentzian(&rates, omega0(), presets::V0_ZPL, &fringe_delays(3.0 * rates.t2, 16)).unwrap();
    let v = extract_visibility(&ig, omega0()).unwrap();
    for (t, x) in v.delays.iter().zip(&v.visibility) {
        let envelope = presets::V0_ZPL * (-t / rates.t2).exp();
        assert!((x / envelope - 1.0).abs() < 0.02, "τ = {t}: {x} vs {envelope}");
    }
}

#[test]
fn undersampled_fringes_are_rejected() {
    let rates = coherence_from_times(presets::T1, presets::T2_STAR_ZPL).unwrap();
    let ig = michelson_lorentzian(&rates, omega0(), 0.8, &fringe_delays(1.0 * PS, 5)).unwrap();
    assert!(matches!(
        extract_visibility(&ig, omega0()),
        Err(Error::Undersampled { .. })
    ));
}

fn noisy_fit(t2_star: f64, noise: f64, seed: u64) -> (f64, f64) {
    let rates = coherence_from_times(presets::T1, t2_star).unwrap();
    let mut ig = michelson_lorentzian(&rates, omega0(), presets::V0_ZPL, &fringe_delays(4.0 * rates.t2, 16)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in ig.intensity.iter_mut() {
        *v *= 1.0 + noise * rng.sample::<f64, _>(StandardNormal);
    }
    let fit = fit_envelope(&extract_visibility(&ig, omega0()).unwrap(), ShapeChoice::Exponential).unwrap();
    (
        photonstats::photophys::t2_star_from_t2(fit.t2_star(), presets::T1).unwrap(),
        fit.v0(),
    )
}

#[test]
fn noisy_zpl_trace_recovers_dephasing_time() {
    let (t2s, v0) = noisy_fit(presets::T2_STAR_ZPL, 0.02, 1);
    assert!(
        (t2s - presets::T2_STAR_ZPL).abs() < presets::T2_STAR_ZPL_STDERR,
        "{t2s}"
    );
    assert!((v0 - presets::V0_ZPL).abs() < 0.02);
    let (t2s, _) = noisy_fit(presets::T2_STAR_FULL, 0.02, 2);
    assert!(
        (t2s - presets::T2_STAR_FULL).abs() < presets::T2_STAR_FULL_STDERR,
        "{t2s}"
    );
}

#[test]
fn gaussian_envelope_is_identified() {
    let t2 = 300.0 * FS;
    let delays: Vec<f64> = (0..40).map(|k| k as f64 * 25.0 * FS).collect();
    let trace = photonstats::interferometry::VisibilityTrace {
        visibility: delays.iter().map(|t| 0.7 * (-(t / t2).powi(2)).exp()).collect(),
        delays,
    };
    let fit = fit_envelope(&trace, ShapeChoice::Auto).unwrap();
    assert!(fit.shape_metric.unwrap() > 0.0);
    assert!((fit.t2_star() / t2 - 1.0).abs() < 1e-6);
    assert!((fit.v0() - 0.7).abs() < 1e-6);
}

#[test]
fn filtered_reference_spectrum_lands_near_the_zpl_value() {
    let grid = linear_grid(1.40, 2.10, 1 << 16);
    let full = evaluate_spectrum(&presets::reference_spectrum(), &grid).unwrap();
    let filtered = apply_filter(&full, &presets::zpl_filter());
    let ig = interferogram_from_spectrum(&filtered, 1.0, &fringe_delays(1.2 * PS, 16)).unwrap();
    let fit = fit_envelope(&extract_visibility(&ig, omega0()).unwrap(), ShapeChoice::Exponential).unwrap();
    let t2s = fit.t2_star();
    assert!((300.0 * FS..=460.0 * FS).contains(&t2s), "{}", t2s / FS);
}

#[test]
fn scan_plan_spacing_and_tiling() {
    let plan = delay_scan_plan(133.0 * FS, 20, 0.0, 0.0).unwrap();
    assert!((plan.fine_step - 6.65 * FS).abs() < 1e-6 * FS);
    assert_eq!(plan.coarse_positions.len(), 1);
    assert_eq!(plan.delays.len(), 20);

    let wide = delay_scan_plan(133.0 * FS, 20, -20.0 * PS, 14.0 * PS).unwrap();
    assert!(wide.coarse_positions.len() >= 256);
    assert!(wide.coarse_positions.last().unwrap() + 133.0 * FS >= 14.0 * PS);
    assert!(wide.delays.windows(2).all(|w| w[1] > w[0]));
    assert!(matches!(
        delay_scan_plan_with_step(133.0 * FS, 20, 0.0, 1.0 * PS, 100.0 * FS),
        Err(Error::OverlappingWindows { .. })
    ));
}

#[test]
fn delay_csv_round_trip() {
    let delays = vec![0.0, 1e-15, 2e-15];
    let values = vec![1.0, 0.9, 0.5];
    let mut buf = Vec::new();
    write_delay_csv(&mut buf, &delays, &values).unwrap();
    let (d, v) = read_delay_csv(buf.as_slice()).unwrap();
    assert_eq!((d, v), (delays, values));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Narrowing a symmetric filter around the line never shortens the fitted coherence time.
    #[test]
    fn narrower_filters_lengthen_coherence(w1 in 0.004f64..0.02, shrink in 0.6f64..0.9) {
        let grid = linear_grid(1.60, 1.90, 1 << 15);
        let full = evaluate_spectrum(&presets::reference_spectrum(), &grid).unwrap();
        let t2 = |w: f64| {
            let f = photonstats::photophys::FilterSpec::window(presets::ZPL_CENTER_EV, w).unwrap();
            let ig = interferogram_from_spectrum(&apply_filter(&full, &f), 1.0, &fringe_delays(1.0 * PS, 16)).unwrap();
            fit_envelope(&extract_visibility(&ig, omega0()).unwrap(), ShapeChoice::Exponential).unwrap().t2_star()
        };
        prop_assert!(t2(w1 * shrink) >= t2(w1) * (1.0 - 1e-3));
    }

    /// The interferogram stays within [½(1−V0), ½(1+V0)].
    #[test]
    fn intensity_is_bounded(t2s in 10e-15f64..1e-12, v0 in 0.0f64..1.0) {
        let rates = coherence_from_times(presets::T1, t2s).unwrap();
        let ig = michelson_lorentzian(&rates, omega0(), v0, &fringe_delays(0.5 * PS, 8)).unwrap();
        prop_assert!(ig.intensity.iter().all(|&i| i >= 0.5 * (1.0 - v0) - 1e-12 && i <= 0.5 * (1.0 + v0) + 1e-12));
    }
}
