//! Exact stochastic simulation of the three-level emitter.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, Geometric};
use rayon::prelude::*;

use super::params::{Drive, EmitterParams, SimConfig};
use super::three_level::steady_state;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Level {
    Ground,
    Excited,
    Dark,
}

/// Receives the events of one trajectory in time order.
trait Observer {
    fn emission(&mut self, t: f64);
    fn shelve(&mut self, _t: f64) {}
    fn deshelve(&mut self, _t: f64) {}
}

impl Observer for Vec<f64> {
    fn emission(&mut self, t: f64) {
        self.push(t);
    }
}

/// Time spent in the bright manifold (G and E) between dark periods, and in D.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DwellTimes {
    pub bright: Vec<f64>,
    pub dark: Vec<f64>,
}

struct DwellRecorder {
    last: Option<f64>,
    dwell: DwellTimes,
}

impl Observer for DwellRecorder {
    fn emission(&mut self, _t: f64) {}

    fn shelve(&mut self, t: f64) {
        if let Some(start) = self.last {
            self.dwell.bright.push(t - start);
        }
        self.last = Some(t);
    }

    fn deshelve(&mut self, t: f64) {
        if let Some(start) = self.last {
            self.dwell.dark.push(t - start);
        }
        self.last = Some(t);
    }
}

/// Stream index reserved for detector noise so it never collides with a segment.
pub(crate) const DETECTOR_STREAM: u64 = u64::MAX;

pub(crate) fn segment_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn exp_sample<R: Rng>(rng: &mut R, rate: f64) -> f64 {
    Exp::new(rate).expect("positive rate").sample(rng)
}

/// Sum of `n` independent exponential waits with the same rate.
fn erlang<R: Rng>(rng: &mut R, n: u64, rate: f64) -> f64 {
    if n == 1 {
        exp_sample(rng, rate)
    } else {
        Gamma::new(n as f64, 1.0 / rate).expect("valid shape").sample(rng)
    }
}

/// Continuous drive over `[start, end)`. Undetected emissions (probability
/// `1 − efficiency`) are never materialised: complete G→E→G cycles are summed
/// until the next detected emission or shelving event.
fn run_cw<R: Rng, O: Observer>(
    e: &EmitterParams,
    pump: f64,
    start: f64,
    end: f64,
    efficiency: f64,
    rng: &mut R,
    obs: &mut O,
) {
    let gamma = 1.0 / e.t1;
    let (ks, kd) = (e.shelve_rate, e.deshelve_rate);
    let leave = gamma + ks;
    let p_detect = gamma * efficiency / leave;
    let q = p_detect + ks / leave;
    let [pg, pe, _] = steady_state(e.t1, pump, ks, kd);
    let u: f64 = rng.random();
    let mut level = if pump == 0.0 || u < pg {
        Level::Ground
    } else if u < pg + pe {
        Level::Excited
    } else {
        Level::Dark
    };
    let geometric = if q > 0.0 && q < 1.0 {
        Some(Geometric::new(q).expect("q in (0,1)"))
    } else {
        None
    };
    let mut t = start;
    loop {
        match level {
            Level::Ground => {
                if pump == 0.0 || q == 0.0 {
                    return;
                }
                let cycles = 1 + geometric.map_or(0, |g| g.sample(rng));
                t += erlang(rng, cycles, pump) + erlang(rng, cycles, leave);
                if t >= end {
                    return;
                }
                if rng.random::<f64>() * q < p_detect {
                    obs.emission(t);
                } else {
                    obs.shelve(t);
                    level = Level::Dark;
                }
            }
            Level::Excited => {
                t += exp_sample(rng, leave);
                if t >= end {
                    return;
                }
                if rng.random::<f64>() * leave < gamma {
                    if efficiency >= 1.0 || rng.random::<f64>() < efficiency {
                        obs.emission(t);
                    }
                    level = Level::Ground;
                } else {
                    obs.shelve(t);
                    level = Level::Dark;
                }
            }
            Level::Dark => {
                t += exp_sample(rng, kd);
                if t >= end {
                    return;
                }
                obs.deshelve(t);
                level = Level::Ground;
            }
        }
    }
}

/// Pulsed drive covering pulses `first..last`, stopping at `end`.
#[allow(clippy::too_many_arguments)]
fn run_pulsed<R: Rng, O: Observer>(
    e: &EmitterParams,
    period: f64,
    probability: f64,
    width: f64,
    first: u64,
    last: u64,
    end: f64,
    efficiency: f64,
    rng: &mut R,
    obs: &mut O,
) {
    let gamma = 1.0 / e.t1;
    let leave = gamma + e.shelve_rate;
    let pump = e.pulse_pump_rate();
    let geometric = if probability > 0.0 && probability < 1.0 {
        Some(Geometric::new(probability).expect("p in (0,1)"))
    } else {
        None
    };
    let mut level = Level::Ground;
    let mut t = first as f64 * period;
    let mut pending = Some(first);
    loop {
        match level {
            Level::Ground => {
                if probability == 0.0 {
                    return;
                }
                let mut k = match pending.take() {
                    Some(k) => k,
                    None => {
                        let current = (t / period).floor() as u64;
                        let pulse_end = current as f64 * period + width;
                        if width > 0.0 && t < pulse_end {
                            // Returned to G while the pulse is still on: it may be re-excited.
                            let dt = exp_sample(rng, pump);
                            if t + dt < pulse_end {
                                t += dt;
                                level = Level::Excited;
                                continue;
                            }
                        }
                        current + 1
                    }
                };
                k += geometric.map_or(0, |g| g.sample(rng));
                if k >= last {
                    return;
                }
                let offset = if width > 0.0 {
                    -(-rng.random::<f64>() * probability).ln_1p() / pump
                } else {
                    0.0
                };
                t = k as f64 * period + offset;
                level = Level::Excited;
            }
            Level::Excited => {
                t += exp_sample(rng, leave);
                if t >= end {
                    return;
                }
                if rng.random::<f64>() * leave < gamma {
                    if efficiency >= 1.0 || rng.random::<f64>() < efficiency {
                        obs.emission(t);
                    }
                    level = Level::Ground;
                } else {
                    obs.shelve(t);
                    level = Level::Dark;
                }
            }
            Level::Dark => {
                t += exp_sample(rng, e.deshelve_rate);
                if t >= end {
                    return;
                }
                obs.deshelve(t);
                level = Level::Ground;
            }
        }
    }
}

/// Number of pulses starting inside `[0, duration)`; at least one.
pub fn pulse_count(rep_rate: f64, duration: f64) -> u64 {
    ((duration * rep_rate - 1e-9).ceil() as u64).max(1)
}

/// One independently seeded slice of a run.
#[derive(Debug, Clone, Copy)]
struct Segment {
    index: u64,
    start: f64,
    end: f64,
    first_pulse: u64,
    last_pulse: u64,
}

fn segments(e: &EmitterParams, c: &SimConfig) -> Vec<Segment> {
    let length = c.segment_duration.unwrap_or(c.duration).min(c.duration);
    match e.drive {
        Drive::Cw { .. } => {
            let n = ((c.duration / length).ceil() as u64).max(1);
            (0..n)
                .map(|i| Segment {
                    index: i,
                    start: i as f64 * length,
                    end: ((i + 1) as f64 * length).min(c.duration),
                    first_pulse: 0,
                    last_pulse: 0,
                })
                .collect()
        }
        Drive::Pulsed { rep_rate, .. } => {
            let period = 1.0 / rep_rate;
            let total = pulse_count(rep_rate, c.duration);
            let per = ((length * rep_rate).round() as u64).clamp(1, total);
            let n = total.div_ceil(per);
            (0..n)
                .map(|i| {
                    let first = i * per;
                    let last = ((i + 1) * per).min(total);
                    let end = if i + 1 == n {
                        c.duration.max(last as f64 * period)
                    } else {
                        last as f64 * period
                    };
                    Segment {
                        index: i,
                        start: first as f64 * period,
                        end,
                        first_pulse: first,
                        last_pulse: last,
                    }
                })
                .collect()
        }
    }
}

fn run_segment<O: Observer>(e: &EmitterParams, c: &SimConfig, s: Segment, efficiency: f64, obs: &mut O) {
    let mut rng = segment_rng(c.seed, s.index);
    match e.drive {
        Drive::Cw { pump_rate } => run_cw(e, pump_rate, s.start, s.end, efficiency, &mut rng, obs),
        Drive::Pulsed {
            rep_rate,
            excitation_probability,
            pulse_width,
        } => run_pulsed(
            e,
            1.0 / rep_rate,
            excitation_probability,
            pulse_width,
            s.first_pulse,
            s.last_pulse,
            s.end,
            efficiency,
            &mut rng,
            obs,
        ),
    }
}

/// Emission times of photons that survive a detection efficiency, in order.
///
/// Statistically identical to thinning the output of [`simulate_trajectory`],
/// but far cheaper at low efficiency because lost photons are never drawn.
pub fn simulate_emissions(e: &EmitterParams, c: &SimConfig, efficiency: f64) -> Result<Vec<f64>> {
    e.validate()?;
    c.validate()?;
    if !(0.0..=1.0).contains(&efficiency) {
        return Err(crate::error::invalid(format!(
            "efficiency must lie in [0, 1], got {efficiency}"
        )));
    }
    let parts: Vec<Vec<f64>> = segments(e, c)
        .into_par_iter()
        .map(|s| {
            let mut out = Vec::new();
            run_segment(e, c, s, efficiency, &mut out);
            out
        })
        .collect();
    Ok(parts.concat())
}

/// Every photon emitted during the run (s), in order. Deterministic in the seed.
pub fn simulate_trajectory(e: &EmitterParams, c: &SimConfig) -> Result<Vec<f64>> {
    simulate_emissions(e, c, 1.0)
}

/// Bright-manifold and dark-state dwell times along a trajectory.
pub fn blinking_dwell_times(e: &EmitterParams, c: &SimConfig) -> Result<DwellTimes> {
    e.validate()?;
    c.validate()?;
    let parts: Vec<DwellTimes> = segments(e, c)
        .into_par_iter()
        .map(|s| {
            let mut rec = DwellRecorder {
                last: None,
                dwell: DwellTimes::default(),
            };
            run_segment(e, c, s, 0.0, &mut rec);
            rec.dwell
        })
        .collect();
    let mut out = DwellTimes::default();
    for p in parts {
        out.bright.extend(p.bright);
        out.dark.extend(p.dark);
    }
    Ok(out)
}
