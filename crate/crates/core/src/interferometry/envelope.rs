use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};

use super::interferogram::Interferogram;
use crate::error::{invalid, Error, Result};
use crate::fit::{lm_minimize, Bounds, Envelope, EnvelopeShape, FitProblem, FitResult, Model};

/// Fewest samples accepted inside one fringe period.
pub const MIN_POINTS_PER_FRINGE: usize = 8;

/// Largest relative change of the local fringe frequency versus the hint.
const MAX_CHIRP: f64 = 0.2;

/// Fringe visibility, one value per fringe period.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VisibilityTrace {
    pub delays: Vec<f64>,
    pub visibility: Vec<f64>,
}

fn wrap(phase: f64) -> f64 {
    (phase + PI).rem_euclid(TAU) - PI
}

/// Least-squares `c + a·cos(ω(τ−m)) + b·sin(ω(τ−m))` over one window.
fn fringe_fit(delays: &[f64], values: &[f64], omega: f64, mid: f64) -> Option<(f64, f64, f64)> {
    let mut ata = Matrix3::zeros();
    let mut aty = Vector3::zeros();
    for (&t, &y) in delays.iter().zip(values) {
        let (s, c) = (omega * (t - mid)).sin_cos();
        let row = Vector3::new(1.0, c, s);
        ata += row * row.transpose();
        aty += row * y;
    }
    let sol = ata.cholesky()?.solve(&aty);
    Some((sol[0], sol[1], sol[2]))
}

/// Visibility `(I_max − I_min)/(I_max + I_min)` for each successive fringe
/// period, obtained from a sinusoid fit within the period. The local fringe
/// frequency starts at `omega0_hint` and follows the measured phase drift.
pub fn extract_visibility(ig: &Interferogram, omega0_hint: f64) -> Result<VisibilityTrace> {
    if !(omega0_hint > 0.0 && omega0_hint.is_finite()) {
        return Err(invalid("fringe frequency hint must be positive"));
    }
    let d = &ig.delays;
    if d.len() != ig.intensity.len() {
        return Err(invalid("delay and intensity lengths differ"));
    }
    if d.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::UnsortedGrid);
    }
    let mut trace = VisibilityTrace::default();
    let Some(&last) = d.last() else { return Ok(trace) };
    let mut omega = omega0_hint;
    let mut start = d[0];
    let mut i0 = 0;
    let mut previous: Option<(f64, f64)> = None;
    loop {
        let period = TAU / omega;
        let end = start + period;
        if end > last + 1e-9 * period {
            break;
        }
        while i0 < d.len() && d[i0] < start {
            i0 += 1;
        }
        let i1 = d[i0..].partition_point(|&t| t < end) + i0;
        let points = i1 - i0;
        if points < MIN_POINTS_PER_FRINGE {
            return Err(Error::Undersampled {
                points,
                needed: MIN_POINTS_PER_FRINGE,
            });
        }
        let mid = start + 0.5 * period;
        let (c, a, b) = fringe_fit(&d[i0..i1], &ig.intensity[i0..i1], omega, mid)
            .ok_or_else(|| invalid("degenerate fringe window"))?;
        let amplitude = a.hypot(b);
        let v = if c > 0.0 { amplitude / c } else { 0.0 };
        trace.delays.push(mid);
        trace.visibility.push(v);

        let phase = (-b).atan2(a);
        if amplitude > 1e-3 * c.abs() {
            if let Some((prev_mid, prev_phase)) = previous {
                let span = mid - prev_mid;
                let refined = omega + wrap(phase - prev_phase - omega * span) / span;
                omega = refined.clamp(omega0_hint * (1.0 - MAX_CHIRP), omega0_hint * (1.0 + MAX_CHIRP));
            }
            previous = Some((mid, phase));
        } else {
            previous = None;
        }
        start = end;
    }
    Ok(trace)
}

/// Requested envelope shape; `Auto` fits both and keeps the better one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeChoice {
    Exponential,
    Gaussian,
    Auto,
}

impl std::str::FromStr for ShapeChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp" | "exponential" => Ok(ShapeChoice::Exponential),
            "gauss" | "gaussian" => Ok(ShapeChoice::Gaussian),
            "auto" => Ok(ShapeChoice::Auto),
            other => Err(invalid(format!(
                "unknown envelope shape `{other}` (expected exp, gauss or auto)"
            ))),
        }
    }
}

/// Envelope fit plus the shape comparison.
#[derive(Debug, Clone)]
pub struct EnvelopeFit {
    pub fit: FitResult,
    pub shape: EnvelopeShape,
    /// `ln(SSR_exp / SSR_gauss)`: positive favours the Gaussian. Present when both
    /// shapes were fitted.
    pub shape_metric: Option<f64>,
}

impl EnvelopeFit {
    /// Fitted 1/e coherence time.
    pub fn t2_star(&self) -> f64 {
        self.fit.value("t2_star").unwrap_or(f64::NAN)
    }

    pub fn v0(&self) -> f64 {
        self.fit.value("v0").unwrap_or(f64::NAN)
    }
}

fn fit_shape(v: &VisibilityTrace, shape: EnvelopeShape) -> Result<FitResult> {
    let model: Arc<dyn Model> = Arc::new(Envelope(shape));
    let n = v.delays.len();
    let problem = FitProblem::new(model, v.delays.clone(), v.visibility.clone(), vec![1.0; n])
        .with_bounds(vec![Bounds::POSITIVE, Bounds::POSITIVE])
        .scaled_covariance(true);
    let mut fit = lm_minimize(&problem)?;
    let t = fit.value("t2_star").unwrap_or(0.0);
    let reach = v.delays.iter().cloned().fold(f64::MIN, f64::max);
    if reach < 2.0 * t {
        fit.push_flag("short_span");
    }
    Ok(fit)
}

/// Fits `V0·e^{−τ/T2*}` or `V0·e^{−(τ/T2*)²}` to a visibility trace.
pub fn fit_envelope(v: &VisibilityTrace, choice: ShapeChoice) -> Result<EnvelopeFit> {
    if v.delays.len() != v.visibility.len() {
        return Err(invalid("delay and visibility lengths differ"));
    }
    if v.delays.len() < 6 {
        return Err(Error::InvalidFit(format!(
            "envelope fit needs at least 6 points, got {}",
            v.delays.len()
        )));
    }
    match choice {
        ShapeChoice::Exponential => Ok(EnvelopeFit {
            fit: fit_shape(v, EnvelopeShape::Exponential)?,
            shape: EnvelopeShape::Exponential,
            shape_metric: None,
        }),
        ShapeChoice::Gaussian => Ok(EnvelopeFit {
            fit: fit_shape(v, EnvelopeShape::Gaussian)?,
            shape: EnvelopeShape::Gaussian,
            shape_metric: None,
        }),
        ShapeChoice::Auto => {
            let exp = fit_shape(v, EnvelopeShape::Exponential)?;
            let gauss = fit_shape(v, EnvelopeShape::Gaussian)?;
            let floor = f64::MIN_POSITIVE;
            let metric = (exp.chi2.max(floor) / gauss.chi2.max(floor)).ln();
            let (fit, shape) = if metric > 0.0 {
                (gauss, EnvelopeShape::Gaussian)
            } else {
                (exp, EnvelopeShape::Exponential)
            };
            Ok(EnvelopeFit {
                fit,
                shape,
                shape_metric: Some(metric),
            })
        }
    }
}
