use std::io::{BufRead, Write};

use super::wiener::coherence_function;
use crate::error::{invalid, Error, Result};
use crate::photophys::{CoherenceRates, SampledSpectrum};

/// Normalised Michelson output versus delay.
#[derive(Debug, Clone, PartialEq)]
pub struct Interferogram {
    pub delays: Vec<f64>,
    pub intensity: Vec<f64>,
    /// Mode overlap: the largest achievable fringe contrast.
    pub v0: f64,
}

fn check_v0(v0: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v0) {
        Ok(())
    } else {
        Err(invalid(format!("mode overlap must lie in [0, 1], got {v0}")))
    }
}

/// `N_out(τ) = ½·(1 + V0·e^{−Γ|τ|/2}·cos(ω0·τ))` for a Lorentzian line.
pub fn michelson_lorentzian(rates: &CoherenceRates, omega0: f64, v0: f64, delays: &[f64]) -> Result<Interferogram> {
    check_v0(v0)?;
    if delays.iter().any(|d| !d.is_finite()) {
        return Err(invalid("delays must be finite"));
    }
    let half_rate = 0.5 * rates.gamma_total;
    let intensity = delays
        .iter()
        .map(|&tau| 0.5 * (1.0 + v0 * (-half_rate * tau.abs()).exp() * (omega0 * tau).cos()))
        .collect();
    Ok(Interferogram {
        delays: delays.to_vec(),
        intensity,
        v0,
    })
}

/// `N_out(τ) = ½·(1 + V0·Re g1(τ))` with `g1` the Fourier transform of the
/// normalised spectrum.
pub fn interferogram_from_spectrum(spec: &SampledSpectrum, v0: f64, delays: &[f64]) -> Result<Interferogram> {
    check_v0(v0)?;
    let g1 = coherence_function(spec, delays)?;
    let intensity = g1.iter().map(|g| 0.5 * (1.0 + v0 * g.re)).collect();
    Ok(Interferogram {
        delays: delays.to_vec(),
        intensity,
        v0,
    })
}

/// Writes `delay_s,value` rows.
pub fn write_delay_csv<W: Write>(mut w: W, delays: &[f64], values: &[f64]) -> Result<()> {
    writeln!(w, "delay_s,value")?;
    for (d, v) in delays.iter().zip(values) {
        writeln!(w, "{d:e},{v}")?;
    }
    Ok(())
}

/// Reads `delay_s,value` rows.
pub fn read_delay_csv<R: BufRead>(r: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut delays = Vec::new();
    let mut values = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with("delay_s")) {
            continue;
        }
        let mut parts = line.split(',');
        let parse = |s: Option<&str>| -> Result<f64> {
            s.and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| Error::Format(format!("line {}: expected delay_s,value", i + 1)))
        };
        delays.push(parse(parts.next())?);
        values.push(parse(parts.next())?);
    }
    Ok((delays, values))
}
