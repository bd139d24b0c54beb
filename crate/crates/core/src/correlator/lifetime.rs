use std::sync::Arc;

use super::histogram::Histogram;
use crate::error::{invalid, Error, Result};
use crate::fit::{lm_minimize, Bounds, ExpIrf, FitProblem, FitResult, Model};
use crate::tags::TagStream;
use crate::units::FWHM_PER_SIGMA;

/// Histogram of detection delays after the preceding sync, folded into one period.
pub fn lifetime_histogram(stream: &TagStream, sync_ch: u8, det_ch: u8, bin_width: f64) -> Result<Histogram> {
    lifetime_histogram_shifted(stream, sync_ch, det_ch, bin_width, 0.0)
}

/// Like [`lifetime_histogram`] but covering `[−pre_trigger, period − pre_trigger)`,
/// so detections that jitter ahead of their pulse are not wrapped to the end.
/// Bin width and pre-trigger are rounded to whole ticks.
pub fn lifetime_histogram_shifted(
    stream: &TagStream,
    sync_ch: u8,
    det_ch: u8,
    bin_width: f64,
    pre_trigger: f64,
) -> Result<Histogram> {
    stream.check_channel(sync_ch)?;
    stream.check_channel(det_ch)?;
    if !(bin_width > 0.0) {
        return Err(invalid("bin width must be positive"));
    }
    let sync = stream.channel_ticks(sync_ch);
    if sync.is_empty() {
        return Err(Error::NoSyncTags(sync_ch));
    }
    let res = stream.resolution();
    let period_ticks = if sync.len() > 1 {
        let mut gaps: Vec<u64> = sync.windows(2).map(|w| w[1] - w[0]).collect();
        gaps.sort_unstable();
        gaps[gaps.len() / 2]
    } else {
        return Err(invalid("at least two sync tags are needed to infer the period"));
    };
    let period = period_ticks as f64 * res;
    if !(pre_trigger >= 0.0 && pre_trigger < period) {
        return Err(invalid("pre-trigger must lie within one period"));
    }
    let shift = (pre_trigger / res).round() as u64;
    let bin_ticks = ((bin_width / res).round() as u64).max(1);
    let n = period_ticks.div_ceil(bin_ticks) as usize;
    let mut counts = vec![0u64; n];
    let mut s = 0usize;
    for tag in stream.iter().filter(|t| t.channel == det_ch) {
        while s + 1 < sync.len() && sync[s + 1] <= tag.ticks {
            s += 1;
        }
        if sync[s] > tag.ticks {
            // Before the first sync: fold against the virtual previous pulse.
            if sync[s] - tag.ticks > period_ticks {
                continue;
            }
        }
        let delay = (tag.ticks as i64 - sync[s] as i64).rem_euclid(period_ticks as i64) as u64;
        let shifted = (delay + shift) % period_ticks;
        let k = (shifted / bin_ticks) as usize;
        if k < n {
            counts[k] += 1;
        }
    }
    let mut h = Histogram::uniform(-(shift as f64) * res, bin_ticks as f64 * res, counts);
    h.total_starts = sync.len() as u64;
    h.total_stops = stream.count(det_ch) as u64;
    Ok(h)
}

/// Upper bound on Poisson reweighting passes after the initial fit.
const REWEIGHT_PASSES: usize = 10;
/// Floor on the expected counts per bin used as a variance.
const MIN_EXPECTED: f64 = 1e-2;

/// Fits `background + amplitude·(Gaussian IRF ⊛ exponential)` with the IRF width
/// fixed to `irf_fwhm`. With no IRF the decay starts at zero delay. Flags
/// `irf_dominated` when the IRF is wider than the fitted lifetime.
pub fn fit_lifetime(h: &Histogram, irf_fwhm: f64) -> Result<FitResult> {
    if !(irf_fwhm >= 0.0) {
        return Err(invalid("IRF FWHM must be non-negative"));
    }
    if h.total() == 0 {
        return Err(invalid("lifetime histogram is empty"));
    }
    // Without an IRF the decay is a step at zero delay; a bin straddling it
    // holds a partial count that a centre-evaluated model cannot describe.
    let keep: Vec<usize> = (0..h.len())
        .filter(|&k| irf_fwhm > 0.0 || !(h.edges[k] < 0.0 && h.edges[k + 1] > 0.0))
        .collect();
    let centers = h.centers();
    let x: Vec<f64> = keep.iter().map(|&k| centers[k]).collect();
    let y: Vec<f64> = keep.iter().map(|&k| h.counts[k] as f64).collect();
    let sigma: Vec<f64> = y.iter().map(|&n| n.max(1.0).sqrt()).collect();
    let model: Arc<dyn Model> = Arc::new(ExpIrf);
    let mut problem = FitProblem::new(model, x, y, sigma);
    problem.initial[3] = irf_fwhm;
    let t0 = if irf_fwhm == 0.0 {
        Bounds::fixed(0.0)
    } else {
        Bounds::FREE
    };
    problem = problem.with_bounds(vec![
        Bounds::POSITIVE,
        Bounds::POSITIVE,
        t0,
        Bounds::fixed(irf_fwhm),
        Bounds::FREE,
    ]);
    if irf_fwhm == 0.0 {
        problem.initial[2] = 0.0;
    }
    let mut fit = lm_minimize(&problem)?;
    // Weights from the observed counts bias the decay short, because sparse tail
    // bins that fluctuate low get the largest weights. Reweighting with the
    // model prediction converges to the Poisson maximum-likelihood estimate.
    for _ in 0..REWEIGHT_PASSES {
        let previous = fit.values[1];
        problem.sigma = problem
            .x
            .iter()
            .map(|&t| problem.model.eval(t, &fit.values).max(MIN_EXPECTED).sqrt())
            .collect();
        problem.initial = fit.values.clone();
        fit = lm_minimize(&problem)?;
        if ((fit.values[1] - previous) / previous).abs() < 1e-6 {
            break;
        }
    }
    if let Some(t1) = fit.value("t1") {
        if irf_fwhm / FWHM_PER_SIGMA > t1 {
            fit.push_flag("irf_dominated");
        }
    }
    Ok(fit)
}
