//! Multi-Lorentzian decomposition of a measured PL spectrum.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::fit::{lm_minimize, Bounds, FitProblem, FitResult, Model, MultiLorentzian};
use crate::photophys::{dw_factor, ComponentKind, LorentzianComponent, ParametricSpectrum, SampledSpectrum};

/// Residual peaks below this fraction of the spectrum maximum are not modelled.
const RESIDUAL_THRESHOLD: f64 = 0.002;
/// Residual maxima tried as seeds for each added component.
const CANDIDATES: usize = 5;
/// Components carrying less than this fraction of the area are dropped.
const MIN_AREA_FRACTION: f64 = 0.005;
/// Phonon replicas further than this below the ZPL are LO modes (eV).
const LO_OFFSET_EV: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub spectrum: ParametricSpectrum,
    pub fit: FitResult,
    pub dw_factor: f64,
}

fn weights(y: &[f64]) -> Vec<f64> {
    let ymax = y.iter().cloned().fold(0.0, f64::max);
    y.iter().map(|&v| (v.max(0.0) + 1e-3 * ymax).sqrt()).collect()
}

fn fit_peaks(x: &[f64], y: &[f64], sigma: &[f64], initial: Vec<f64>) -> Result<FitResult> {
    let peaks = initial.len() / 3;
    let model: Arc<dyn Model> = Arc::new(MultiLorentzian::new(peaks));
    let (lo, hi) = (x[0], x[x.len() - 1]);
    let bounds = (0..peaks)
        .flat_map(|_| [Bounds::new(lo, hi), Bounds::POSITIVE, Bounds::POSITIVE])
        .collect();
    let problem = FitProblem::new(model, x.to_vec(), y.to_vec(), sigma.to_vec())
        .with_initial(initial)
        .with_bounds(bounds)
        .max_iterations(500)
        .scaled_covariance(true);
    lm_minimize(&problem)
}

/// Local maxima taller than the residual threshold, tallest first.
fn significant_maxima(y: &[f64], floor: f64) -> Vec<usize> {
    let n = y.len();
    let mut idx: Vec<usize> = (1..n.saturating_sub(1))
        .filter(|&i| y[i] > y[i - 1] && y[i] >= y[i + 1] && y[i] > floor)
        .collect();
    idx.sort_by(|&a, &b| y[b].total_cmp(&y[a]));
    idx
}

fn width_at_half(x: &[f64], y: &[f64], i: usize) -> f64 {
    let half = 0.5 * y[i];
    let (mut lo, mut hi) = (i, i);
    while lo > 0 && y[lo] > half {
        lo -= 1;
    }
    while hi + 1 < y.len() && y[hi] > half {
        hi += 1;
    }
    let step = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
    (x[hi] - x[lo]).max(2.0 * step)
}

fn seed(x: &[f64], y: &[f64], i: usize) -> [f64; 3] {
    let w = width_at_half(x, y, i);
    [x[i], w, y[i] * std::f64::consts::PI * w / 2.0]
}

/// Decomposes a sampled spectrum into at most `max_components` Lorentzians.
///
/// Peaks start at the local maxima; further components are added where the
/// residual still shows a peak, and negligible components are dropped. The
/// tallest component is the ZPL, components more than 0.1 eV below it are LO
/// phonon replicas and the rest are low-energy phonon modes.
pub fn decompose_spectrum(spec: &SampledSpectrum, max_components: usize) -> Result<SpectralDecomposition> {
    if spec.len() < 8 {
        return Err(invalid("spectrum needs at least 8 samples"));
    }
    if max_components == 0 {
        return Err(invalid("at least one component is required"));
    }
    let x = spec.energies();
    let y = spec.counts();
    let ymax = y.iter().cloned().fold(0.0, f64::max);
    if !(ymax > 0.0) {
        return Err(crate::error::Error::ZeroArea);
    }
    let sigma = weights(y);
    let floor = RESIDUAL_THRESHOLD * ymax;
    let initial: Vec<f64> = significant_maxima(y, floor)
        .into_iter()
        .take(max_components)
        .flat_map(|i| seed(x, y, i))
        .collect();
    let mut fit = fit_peaks(x, y, &sigma, initial)?;
    while fit.values.len() / 3 < max_components {
        let model = MultiLorentzian::new(fit.values.len() / 3);
        let residual: Vec<f64> = x.iter().zip(y).map(|(&e, &v)| v - model.eval(e, &fit.values)).collect();
        let seeds = significant_maxima(&residual, floor);
        if seeds.is_empty() {
            break;
        }
        // A single greedy seed often lands in a local minimum where one wide
        // line plus narrow spikes mimic overlapping shoulders.
        let best = seeds
            .par_iter()
            .take(CANDIDATES)
            .filter_map(|&i| {
                let mut start = fit.values.clone();
                start.extend_from_slice(&seed(x, &residual, i));
                fit_peaks(x, y, &sigma, start).ok()
            })
            .min_by(|a, b| a.chi2.total_cmp(&b.chi2));
        match best {
            Some(candidate) if candidate.chi2 < fit.chi2 => fit = candidate,
            _ => break,
        }
    }

    let total: f64 = fit.values.chunks_exact(3).map(|c| c[2]).sum();
    let kept: Vec<[f64; 3]> = fit
        .values
        .chunks_exact(3)
        .filter(|c| c[2] >= MIN_AREA_FRACTION * total)
        .map(|c| [c[0], c[1], c[2]])
        .collect();
    let zpl = kept
        .iter()
        .enumerate()
        .max_by(|a, b| (a.1[2] / a.1[1]).total_cmp(&(b.1[2] / b.1[1])))
        .map(|(k, _)| k)
        .ok_or_else(|| invalid("no spectral component survived"))?;
    let zpl_center = kept[zpl][0];
    let components = kept
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let kind = if k == zpl {
                ComponentKind::Zpl
            } else if c[0] < zpl_center - LO_OFFSET_EV {
                ComponentKind::LoPhonon
            } else {
                ComponentKind::LePhonon
            };
            LorentzianComponent::new(c[0], c[1], c[2], kind)
        })
        .collect::<Result<Vec<_>>>()?;
    let spectrum = ParametricSpectrum::new(components)?;
    let dw = dw_factor(&spectrum)?;
    Ok(SpectralDecomposition {
        spectrum,
        fit,
        dw_factor: dw,
    })
}
