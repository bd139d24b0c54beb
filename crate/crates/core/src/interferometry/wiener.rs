//! Field autocorrelation from a sampled spectrum via FFT.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};
use crate::photophys::SampledSpectrum;
use crate::units::ev_to_hz;

const MAX_GRID: usize = 1 << 22;
const PAD_FACTOR: usize = 8;

/// Uniform frequency grid (Hz) with spectral weights, ready for the transform.
struct UniformSpectrum {
    start_hz: f64,
    step_hz: f64,
    weights: Vec<f64>,
}

fn is_uniform(grid: &[f64]) -> bool {
    if grid.len() < 3 {
        return true;
    }
    let step = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    grid.windows(2).all(|w| ((w[1] - w[0]) - step).abs() <= 1e-9 * step)
}

/// Puts the spectrum on a uniform grid fine enough to reach `max_delay` without
/// aliasing, interpolating linearly when the native grid is irregular or coarse.
fn uniform(spec: &SampledSpectrum, max_delay: f64) -> Result<UniformSpectrum> {
    let hz: Vec<f64> = spec.energies().iter().map(|&e| ev_to_hz(e)).collect();
    let counts = spec.counts();
    if hz.len() < 2 {
        return Err(invalid("spectrum needs at least two samples"));
    }
    let span = hz[hz.len() - 1] - hz[0];
    let native = span / (hz.len() - 1) as f64;
    let needed = if max_delay > 0.0 {
        1.0 / (2.2 * max_delay)
    } else {
        native
    };
    if is_uniform(&hz) && native <= needed {
        return Ok(UniformSpectrum {
            start_hz: hz[0],
            step_hz: native,
            weights: counts.to_vec(),
        });
    }
    let min_native = hz.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let step = min_native.min(needed);
    let n = (span / step).ceil() as usize + 1;
    if n > MAX_GRID {
        return Err(invalid(format!(
            "resampled spectrum would need {n} points; narrow the delay range"
        )));
    }
    let step = span / (n - 1) as f64;
    let mut weights = Vec::with_capacity(n);
    let mut j = 0;
    for i in 0..n {
        let f = hz[0] + i as f64 * step;
        while j + 2 < hz.len() && hz[j + 1] < f {
            j += 1;
        }
        let s = ((f - hz[j]) / (hz[j + 1] - hz[j])).clamp(0.0, 1.0);
        weights.push(counts[j] * (1.0 - s) + counts[j + 1] * s);
    }
    Ok(UniformSpectrum {
        start_hz: hz[0],
        step_hz: step,
        weights,
    })
}

/// First-order coherence `g1(τ) = ∫S(ν)e^{−i2πντ}dν / ∫S(ν)dν` at each delay.
///
/// The spectrum is shifted to baseband around its peak, transformed once with
/// zero padding, and the baseband result is interpolated linearly in delay.
pub fn coherence_function(spec: &SampledSpectrum, delays: &[f64]) -> Result<Vec<Complex64>> {
    if delays.iter().any(|d| !d.is_finite()) {
        return Err(invalid("delays must be finite"));
    }
    let max_delay = delays.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let u = uniform(spec, max_delay)?;
    let total: f64 = u.weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroArea);
    }
    let n = u.weights.len();
    let nfft = (PAD_FACTOR * n).next_power_of_two();
    let peak = u
        .weights
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .unwrap_or(0);
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    for (k, &w) in u.weights.iter().enumerate() {
        let slot = (k as i64 - peak as i64).rem_euclid(nfft as i64) as usize;
        buf[slot].re += w / total;
    }
    FftPlanner::new().plan_fft_forward(nfft).process(&mut buf);
    let carrier = u.start_hz + peak as f64 * u.step_hz;
    let dtau = 1.0 / (nfft as f64 * u.step_hz);
    let baseband = |tau: f64| -> Complex64 {
        let x = tau.abs() / dtau;
        let m = x.floor() as usize;
        let s = x - m as f64;
        let g = buf[m % nfft] * (1.0 - s) + buf[(m + 1) % nfft] * s;
        if tau < 0.0 {
            g.conj()
        } else {
            g
        }
    };
    Ok(delays
        .iter()
        .map(|&tau| Complex64::from_polar(1.0, -std::f64::consts::TAU * carrier * tau) * baseband(tau))
        .collect())
}
