use crate::error::{invalid, Error, Result};

/// Two-tier delay scan: coarse stage positions, each followed by a fine sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayScan {
    pub coarse_positions: Vec<f64>,
    pub fine_step: f64,
    pub delays: Vec<f64>,
}

/// Tiles `[coarse_start, coarse_end]` with abutting fine windows of
/// `fine_window`, each sampled at `points` evenly spaced delays.
pub fn delay_scan_plan(fine_window: f64, points: usize, coarse_start: f64, coarse_end: f64) -> Result<DelayScan> {
    delay_scan_plan_with_step(fine_window, points, coarse_start, coarse_end, fine_window)
}

/// As [`delay_scan_plan`] with an explicit coarse step, which must not be
/// shorter than the fine window.
pub fn delay_scan_plan_with_step(
    fine_window: f64,
    points: usize,
    coarse_start: f64,
    coarse_end: f64,
    coarse_step: f64,
) -> Result<DelayScan> {
    if !(fine_window > 0.0) || points == 0 {
        return Err(invalid("fine window must be positive with at least one point"));
    }
    if !(coarse_end >= coarse_start) {
        return Err(invalid("coarse range must be ordered"));
    }
    if !(coarse_step > 0.0) {
        return Err(invalid("coarse step must be positive"));
    }
    if coarse_step < fine_window * (1.0 - 1e-12) {
        return Err(Error::OverlappingWindows {
            step: coarse_step,
            window: fine_window,
        });
    }
    let span = coarse_end - coarse_start;
    let windows = ((span / coarse_step * (1.0 - 1e-12)).ceil() as usize).max(1);
    let fine_step = fine_window / points as f64;
    let coarse_positions: Vec<f64> = (0..windows).map(|k| coarse_start + k as f64 * coarse_step).collect();
    let delays = coarse_positions
        .iter()
        .flat_map(|&c| (0..points).map(move |j| c + j as f64 * fine_step))
        .collect();
    Ok(DelayScan {
        coarse_positions,
        fine_step,
        delays,
    })
}
