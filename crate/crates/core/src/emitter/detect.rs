use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use super::params::{DetectorModel, Drive, EmitterParams, SimConfig};
use super::sim::{pulse_count, segment_rng, simulate_emissions, DETECTOR_STREAM};
use crate::error::{invalid, Error, Result};
use crate::tags::TagStream;
use crate::units::FWHM_PER_SIGMA;

fn to_ticks(t: f64, resolution_ps: u64) -> Option<u64> {
    let ticks = (t * 1e12 / resolution_ps as f64).round();
    (ticks >= 0.0 && ticks < (1u64 << 56) as f64).then_some(ticks as u64)
}

fn dead_time_ticks(d: &DetectorModel) -> u64 {
    if d.dead_time <= 0.0 {
        0
    } else {
        (d.dead_time * 1e12 / d.resolution_ps as f64 - 1e-9).ceil() as u64
    }
}

fn detect_inner(emissions: &[f64], d: &DetectorModel, detectors: u8, c: &SimConfig, thin: bool) -> Result<TagStream> {
    d.validate()?;
    c.validate()?;
    if detectors == 0 {
        return Err(invalid("at least one detector channel is required"));
    }
    if let Some(i) = emissions.windows(2).position(|w| w[1] < w[0]) {
        return Err(invalid(format!("emission times must be sorted (index {})", i + 1)));
    }
    let mut rng = segment_rng(c.seed, DETECTOR_STREAM);
    let sigma = d.jitter_fwhm / FWHM_PER_SIGMA;
    let mut packed: Vec<u64> = Vec::with_capacity(if thin {
        (emissions.len() as f64 * d.efficiency) as usize + 16
    } else {
        emissions.len() + 16
    });
    for &t in emissions {
        // Every random draw happens for every photon so that changing one
        // detector setting leaves the others' realisations untouched.
        let keep = !thin || rng.random::<f64>() < d.efficiency;
        let channel = if detectors > 1 {
            rng.random_range(0..detectors)
        } else {
            0
        };
        let z: f64 = rng.sample(StandardNormal);
        if !keep {
            continue;
        }
        if let Some(ticks) = to_ticks(t + sigma * z, d.resolution_ps) {
            packed.push(ticks << 8 | channel as u64);
        }
    }
    if d.dark_count_rate > 0.0 {
        let mean = d.dark_count_rate * c.duration;
        for channel in 0..detectors {
            let n = Poisson::new(mean).map_err(|e| invalid(e.to_string()))?.sample(&mut rng) as u64;
            for _ in 0..n {
                let t = rng.random::<f64>() * c.duration;
                if let Some(ticks) = to_ticks(t, d.resolution_ps) {
                    packed.push(ticks << 8 | channel as u64);
                }
            }
        }
    }
    packed.sort_unstable();

    let dead = dead_time_ticks(d);
    let mut last = vec![None::<u64>; detectors as usize];
    let mut ticks = Vec::with_capacity(packed.len());
    let mut channels = Vec::with_capacity(packed.len());
    for key in packed {
        let (t, ch) = (key >> 8, (key & 0xff) as u8);
        let slot = &mut last[ch as usize];
        if dead > 0 {
            if let Some(prev) = *slot {
                if t - prev < dead {
                    continue;
                }
            }
        }
        *slot = Some(t);
        ticks.push(t);
        channels.push(ch);
    }
    TagStream::from_columns(d.resolution_ps, detectors, ticks, channels)
}

/// Passes emitted photons through the detector chain: efficiency, an even
/// split over `detectors` channels, Gaussian jitter, dark counts, per-channel
/// dead time and quantisation to the tagger resolution.
pub fn detect(emissions: &[f64], d: &DetectorModel, detectors: u8, c: &SimConfig) -> Result<TagStream> {
    detect_inner(emissions, d, detectors, c, true)
}

/// Laser sync tags at the exact pulse times, on `channel`.
pub fn sync_channel(e: &EmitterParams, c: &SimConfig, resolution_ps: u64, channel: u8) -> Result<TagStream> {
    c.validate()?;
    let rep_rate = match e.drive {
        Drive::Pulsed { rep_rate, .. } => rep_rate,
        Drive::Cw { .. } => return Err(Error::NotPulsed),
    };
    let n = pulse_count(rep_rate, c.duration);
    let period_ps = 1e12 / rep_rate;
    let ticks = (0..n)
        .map(|k| (k as f64 * period_ps / resolution_ps as f64).round() as u64)
        .collect::<Vec<_>>();
    let channels = vec![channel; ticks.len()];
    TagStream::from_columns(resolution_ps, channel + 1, ticks, channels)
}

/// Full acquisition: emitter, detectors on channels `0..detectors` and, for
/// pulsed drive, the laser sync on channel `detectors`.
pub fn simulate_stream(e: &EmitterParams, c: &SimConfig, d: &DetectorModel, detectors: u8) -> Result<TagStream> {
    d.validate()?;
    let emissions = simulate_emissions(e, c, d.efficiency)?;
    let photons = detect_inner(&emissions, d, detectors, c, false)?;
    if e.drive.is_pulsed() {
        photons.merge(&sync_channel(e, c, d.resolution_ps, detectors)?)
    } else {
        Ok(photons)
    }
}
