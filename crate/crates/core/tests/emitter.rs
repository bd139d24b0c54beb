use photonstats::emitter::{
    blinking_dwell_times, cw_emission_rate, detect, pulse_count, simulate_emissions, simulate_stream,
    simulate_trajectory, sync_channel, DetectorModel, EmitterParams, SimConfig,
};
use photonstats::units::{NS, US};
use photonstats::{presets, Error};

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[test]
fn same_seed_gives_identical_streams() {
    let e = EmitterParams::cw(presets::T1, 1e8).with_blinking(2e5, 1e6);
    let d = presets::cw_detector(0.05);
    let c = SimConfig::new(0.05, 42).with_segments(0.01);
    let a = simulate_stream(&e, &c, &d, 2).unwrap();
    let b = simulate_stream(&e, &c, &d, 2).unwrap();
    assert!(a.len() > 1000);
    assert_eq!(a, b);
    let other = simulate_stream(&e, &SimConfig::new(0.05, 43).with_segments(0.01), &d, 2).unwrap();
    assert_ne!(a, other);
}

#[test]
fn result_does_not_depend_on_thread_count() {
    let e = EmitterParams::cw(presets::T1, 2e8);
    let c = SimConfig::new(0.02, 9).with_segments(0.002);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate_stream(&e, &c, &presets::cw_detector(0.1), 2).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn cw_emission_rate_matches_steady_state() {
    let (t1, pump, ks, kd) = (presets::T1, 3e8, 5e5, 2e6);
    let e = EmitterParams::cw(t1, pump).with_blinking(ks, kd);
    let c = SimConfig::new(0.02, 3);
    let emissions = simulate_emissions(&e, &c, 1.0).unwrap();
    let expected = cw_emission_rate(t1, pump, ks, kd);
    let observed = emissions.len() as f64 / c.duration;
    // Blinking clusters emissions; allow a few percent.
    assert!((observed / expected - 1.0).abs() < 0.02, "{observed} vs {expected}");
}

#[test]
fn rate_follows_saturation_curve() {
    // Incoherent one-way pumping: the excited population is s/(1+s) with
    // s = pump·T1, so the rate approaches 1/T1 and is half of it at s = 1.
    let c = SimConfig::new(2e-3, 4);
    for s in [1.0, 1e4] {
        let e = EmitterParams::cw(presets::T1, s / presets::T1);
        let rate = simulate_emissions(&e, &c, 1.0).unwrap().len() as f64 / c.duration;
        let target = s / (1.0 + s) / presets::T1;
        assert!((rate / target - 1.0).abs() < 0.01, "s = {s}: {rate} vs {target}");
    }
}

#[test]
fn strong_drive_saturates_at_the_decay_rate() {
    let e = EmitterParams::cw(presets::T1, 1e4 / presets::T1);
    let c = SimConfig::new(2e-3, 4);
    let rate = simulate_emissions(&e, &c, 1.0).unwrap().len() as f64 / c.duration;
    let target = 1.0 / presets::T1;
    assert!((rate / target - 1.0).abs() < 0.01, "{rate} vs {target}");
}

#[test]
fn unit_probability_pulses_emit_exactly_once() {
    let period = 1.0 / 1e6;
    let e = EmitterParams::pulsed(presets::T1, 1e6, 1.0, 0.0);
    let c = SimConfig::new(0.02, 5);
    let emissions = simulate_emissions(&e, &c, 1.0).unwrap();
    assert_eq!(emissions.len() as u64, pulse_count(1e6, c.duration));
    let delays: Vec<f64> = emissions
        .iter()
        .enumerate()
        .map(|(k, t)| t - k as f64 * period)
        .collect();
    assert!(delays.iter().all(|&d| d >= 0.0 && d < period));
    let m = mean(&delays);
    let tol = 4.0 * presets::T1 / (delays.len() as f64).sqrt();
    assert!((m - presets::T1).abs() < tol, "mean delay {m}");
}

#[test]
fn ideal_single_detector_reproduces_quantised_emissions() {
    let e = EmitterParams::cw(presets::T1, 1e8);
    let c = SimConfig::new(1e-3, 6);
    let emissions = simulate_emissions(&e, &c, 1.0).unwrap();
    let stream = detect(&emissions, &DetectorModel::ideal(), 1, &c).unwrap();
    let expected: Vec<u64> = emissions.iter().map(|t| (t * 1e12).round() as u64).collect();
    assert_eq!(stream.ticks(), expected.as_slice());
}

#[test]
fn zero_efficiency_leaves_only_dark_counts() {
    let e = EmitterParams::cw(presets::T1, 1e8);
    let c = SimConfig::new(1.0, 7);
    let d = DetectorModel {
        efficiency: 0.0,
        dark_count_rate: 500.0,
        ..DetectorModel::ideal()
    };
    let stream = simulate_stream(&e, &c, &d, 2).unwrap();
    let n = stream.len() as f64;
    assert!((n - 1000.0).abs() < 5.0 * 1000f64.sqrt(), "{n}");
}

#[test]
fn dead_time_separates_tags_on_each_channel() {
    let e = EmitterParams::cw(presets::T1, 3e8);
    let c = SimConfig::new(2e-3, 8);
    let d = DetectorModel {
        efficiency: 0.5,
        dead_time: 22.0 * NS,
        ..DetectorModel::ideal()
    };
    let stream = simulate_stream(&e, &c, &d, 2).unwrap();
    for ch in 0..2 {
        let ticks = stream.channel_ticks(ch);
        assert!(ticks.len() > 100);
        assert!(ticks.windows(2).all(|w| w[1] - w[0] >= 22_000), "channel {ch}");
    }
}

#[test]
fn dwell_times_match_three_level_means() {
    let (t1, pump, ks, kd) = (presets::T1, 1e8, 2e6, 5e6);
    let e = EmitterParams::cw(t1, pump).with_blinking(ks, kd);
    let c = SimConfig::new(0.2, 10);
    let dwell = blinking_dwell_times(&e, &c).unwrap();
    let gamma = 1.0 / t1;
    // Bright manifold: G<->E cycling until the E->D branch is taken.
    let bright = (gamma + ks + pump) / (ks * pump);
    let dark = 1.0 / kd;
    assert!(dwell.bright.len() > 10_000 && dwell.dark.len() > 10_000);
    assert!((mean(&dwell.bright) / bright - 1.0).abs() < 0.05);
    assert!((mean(&dwell.dark) / dark - 1.0).abs() < 0.05);
}

#[test]
fn trajectory_is_time_ordered_and_bounded() {
    let e = EmitterParams::cw(presets::T1, 1e8).with_blinking(1e6, 1e6);
    let c = SimConfig::new(100.0 * US, 11);
    let t = simulate_trajectory(&e, &c).unwrap();
    assert!(!t.is_empty());
    assert!(t.windows(2).all(|w| w[0] <= w[1]));
    assert!(t.iter().all(|&x| (0.0..c.duration).contains(&x)));
}

#[test]
fn sync_channel_counts_and_spacing() {
    let e = EmitterParams::pulsed(presets::T1, 40e6, 0.5, 0.0);
    let s = sync_channel(&e, &SimConfig::new(1e-3, 0), 1, 0).unwrap();
    assert_eq!(s.len(), 40_000);
    assert!(s.ticks().windows(2).all(|w| w[1] - w[0] == 25_000));
    assert_eq!(s.ticks()[0], 0);

    let short = sync_channel(&e, &SimConfig::new(10.0 * NS, 0), 1, 0).unwrap();
    assert_eq!(short.ticks(), &[0]);

    let fast = EmitterParams::pulsed(presets::T1, 80e6, 0.5, 0.0);
    assert_eq!(
        sync_channel(&fast, &SimConfig::new(1.0 * US, 0), 1, 0).unwrap().len(),
        80
    );
}

#[test]
fn cw_drive_has_no_sync_channel() {
    let e = EmitterParams::cw(presets::T1, 1e8);
    assert!(matches!(
        sync_channel(&e, &SimConfig::new(1e-3, 0), 1, 0),
        Err(Error::NotPulsed)
    ));
}

#[test]
fn pulsed_stream_appends_sync_channel() {
    let e = EmitterParams::pulsed(presets::T1, 40e6, 0.5, 0.0);
    let c = SimConfig::new(1e-3, 12);
    let stream = simulate_stream(&e, &c, &presets::lifetime_detector(0.2), 2).unwrap();
    assert_eq!(stream.channel_count(), 3);
    assert_eq!(stream.count(2), 40_000);
    assert!(stream.count(0) > 0 && stream.count(1) > 0);
}

#[test]
fn invalid_inputs_are_rejected() {
    let e = EmitterParams::cw(presets::T1, 1e8);
    assert!(simulate_emissions(&e, &SimConfig::new(0.0, 1), 1.0).is_err());
    assert!(simulate_emissions(&EmitterParams::cw(-1.0, 1e8), &SimConfig::new(1.0, 1), 1.0).is_err());
    let bad = DetectorModel {
        efficiency: 1.5,
        ..DetectorModel::ideal()
    };
    assert!(simulate_stream(&e, &SimConfig::new(1e-3, 1), &bad, 1).is_err());
}
