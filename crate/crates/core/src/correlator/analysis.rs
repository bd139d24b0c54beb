use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::histogram::{Histogram, NormalizedHistogram};
use crate::error::{invalid, Error, Result};
use crate::fit::{lm_multistart, Bounds, FitProblem, FitResult, G2ThreeLevel, Model};

/// Divides coincidences by the uncorrelated level `r_a·r_b·T·Δτ`
/// (doubled for histograms folded onto `|τ|`).
pub fn normalize_cw(h: &Histogram, rates: (f64, f64), duration: f64) -> Result<NormalizedHistogram> {
    let (ra, rb) = rates;
    if !(ra > 0.0 && rb > 0.0) {
        return Err(invalid(format!("count rates must be positive, got {ra} and {rb}")));
    }
    if !(duration > 0.0) {
        return Err(invalid(format!("duration must be positive, got {duration}")));
    }
    let fold = if h.folded { 2.0 } else { 1.0 };
    let widths = h.widths();
    let mut g2 = Vec::with_capacity(h.len());
    let mut sigma = Vec::with_capacity(h.len());
    for (&n, w) in h.counts.iter().zip(widths) {
        let level = ra * rb * duration * w * fold;
        g2.push(n as f64 / level);
        sigma.push((n.max(1) as f64).sqrt() / level);
    }
    Ok(NormalizedHistogram {
        tau: h.centers(),
        g2,
        sigma,
    })
}

/// Pulsed g2 summary: peak areas keyed by peak index and the normalised centre peak.
#[derive(Debug, Clone, PartialEq)]
pub struct PulsedG2 {
    pub g2_0: f64,
    /// Poisson error of `g2_0` from the centre and far-peak counts.
    pub g2_0_stderr: f64,
    pub far_peak_mean: f64,
    pub peaks: Vec<(i64, u64)>,
    pub excluded: usize,
}

/// Peaks nearest zero that carry blinking bunching: `ceil(5·tau2 / period)`.
pub fn default_exclusion(tau2: f64, period: f64) -> usize {
    // Exact multiples must not round up through representation error.
    (5.0 * tau2 / period * (1.0 - 1e-12)).ceil().max(0.0) as usize
}

/// Integrates each peak over a window of half a period centred on `k·period`
/// and divides the centre peak by the mean of peaks with `|k| > exclude`.
pub fn normalize_pulsed(h: &Histogram, rep_period: f64, exclude: usize) -> Result<PulsedG2> {
    if !(rep_period > 0.0) {
        return Err(invalid("repetition period must be positive"));
    }
    let (lo, hi) = h.range();
    let quarter = 0.25 * rep_period;
    let kmin = ((lo + quarter) / rep_period).ceil() as i64;
    let kmax = ((hi - quarter) / rep_period).floor() as i64;
    let mut peaks: Vec<(i64, u64)> = (kmin..=kmax).map(|k| (k, 0)).collect();
    for (c, &n) in h.centers().iter().zip(&h.counts) {
        let k = (c / rep_period).round() as i64;
        let offset = c - k as f64 * rep_period;
        if k >= kmin && k <= kmax && offset >= -quarter && offset < quarter {
            peaks[(k - kmin) as usize].1 += n;
        }
    }
    let far: Vec<u64> = peaks
        .iter()
        .filter(|(k, _)| *k != 0 && k.unsigned_abs() as usize > exclude)
        .map(|p| p.1)
        .collect();
    if far.len() < 2 {
        return Err(Error::TooFewPeaks {
            found: far.len(),
            needed: 2,
        });
    }
    let center = peaks
        .iter()
        .find(|(k, _)| *k == 0)
        .map(|p| p.1)
        .ok_or(Error::TooFewPeaks { found: 0, needed: 1 })?;
    let far_sum: u64 = far.iter().sum();
    let far_mean = far_sum as f64 / far.len() as f64;
    if far_mean == 0.0 {
        return Err(invalid("far peaks are empty"));
    }
    let g2_0 = center as f64 / far_mean;
    let rel_center = if center > 0 { 1.0 / center as f64 } else { 1.0 };
    let g2_0_stderr = g2_0.max(1.0 / far_mean) * (rel_center + 1.0 / far_sum.max(1) as f64).sqrt();
    Ok(PulsedG2 {
        g2_0,
        g2_0_stderr,
        far_peak_mean: far_mean,
        peaks,
        excluded: exclude,
    })
}

/// Number of jittered starts for the g2 fit.
pub const G2_STARTS: usize = 8;

/// Fits `baseline·(1 − (1+a)·e^{−|τ|/tau1} + a·e^{−|τ|/tau2})` with Poisson weights,
/// restarting from [`G2_STARTS`] jittered points. Flags `degenerate:tau2` when the
/// bunching term is not resolved.
pub fn fit_g2(h: &NormalizedHistogram) -> Result<FitResult> {
    if h.tau.len() < 5 {
        return Err(invalid("g2 fit needs at least five bins"));
    }
    let model: Arc<dyn Model> = Arc::new(G2ThreeLevel);
    let problem = FitProblem::new(model, h.tau.clone(), h.g2.clone(), h.sigma.clone()).with_bounds(vec![
        Bounds::POSITIVE,
        Bounds::POSITIVE,
        Bounds::POSITIVE,
        Bounds::POSITIVE,
    ]);
    let guess = problem.initial.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6732);
    let mut starts = vec![guess.clone()];
    while starts.len() < G2_STARTS {
        let mut s = guess.clone();
        for v in s.iter_mut().take(3) {
            *v *= 3f64.powf(rng.random_range(-1.0..1.0));
        }
        starts.push(s);
    }
    let mut fit = lm_multistart(&problem, &starts)?;
    let a = fit.value("a").unwrap_or(0.0);
    let a_err = fit.error("a").unwrap_or(f64::INFINITY);
    if !(a > 2.0 * a_err) || fit.has_flag("degenerate:tau2") || fit.has_flag("poorly_constrained:tau2") {
        fit.push_flag("degenerate:tau2");
    }
    Ok(fit)
}
