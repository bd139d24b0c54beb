//! Built-in fit models.

use std::f64::consts::{PI, SQRT_2};

use statrs::function::erf::erfc;

use super::model::{Model, ParamSpec};
use crate::units::FWHM_PER_SIGMA;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Straight line `slope·x + intercept`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Linear;

impl Model for Linear {
    fn id(&self) -> &str {
        "linear"
    }

    fn params(&self) -> Vec<ParamSpec> {
        vec![ParamSpec::new("slope", "y/x"), ParamSpec::new("intercept", "y")]
    }

    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        p[0] * x + p[1]
    }

    fn gradient(&self, x: f64, _p: &[f64], out: &mut [f64]) -> bool {
        out[0] = x;
        out[1] = 1.0;
        true
    }

    fn initial_guess(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let (slope, intercept) = least_squares_line(x, y).unwrap_or((0.0, mean(y)));
        vec![slope, intercept]
    }
}

/// Two-level saturation curve `I_inf / (1 + P_sat / P)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Saturation;

impl Model for Saturation {
    fn id(&self) -> &str {
        "saturation"
    }

    fn params(&self) -> Vec<ParamSpec> {
        vec![ParamSpec::new("i_inf", "Hz"), ParamSpec::new("p_sat", "W")]
    }

    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        p[0] * x / (x + p[1])
    }

    fn gradient(&self, x: f64, p: &[f64], out: &mut [f64]) -> bool {
        let d = x + p[1];
        out[0] = x / d;
        out[1] = -p[0] * x / (d * d);
        true
    }

    /// Lineweaver-Burk regression: `1/I = 1/I_inf + (P_sat/I_inf)·(1/P)`.
    fn initial_guess(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let (ix, iy): (Vec<f64>, Vec<f64>) = x
            .iter()
            .zip(y)
            .filter(|(&a, &b)| a > 0.0 && b > 0.0)
            .map(|(a, b)| (1.0 / a, 1.0 / b))
            .unzip();
        if let Some((slope, intercept)) = least_squares_line(&ix, &iy) {
            if intercept > 0.0 && slope > 0.0 {
                return vec![1.0 / intercept, slope / intercept];
            }
        }
        let ymax = y.iter().cloned().fold(f64::MIN, f64::max).max(f64::MIN_POSITIVE);
        vec![1.5 * ymax, median(x).abs().max(f64::MIN_POSITIVE)]
    }
}

/// Sum of `n` area-normalised Lorentzians. Parameters per peak: center, fwhm, area.
#[derive(Debug, Clone)]
pub struct MultiLorentzian {
    peaks: usize,
    id: String,
}

impl MultiLorentzian {
    pub fn new(peaks: usize) -> Self {
        MultiLorentzian {
            peaks: peaks.max(1),
            id: "multi_lorentzian".into(),
        }
    }

    pub fn peaks(&self) -> usize {
        self.peaks
    }
}

impl Model for MultiLorentzian {
    fn id(&self) -> &str {
        &self.id
    }

    fn params(&self) -> Vec<ParamSpec> {
        (1..=self.peaks)
            .flat_map(|k| {
                [
                    ParamSpec::new(format!("center_{k}"), "eV"),
                    ParamSpec::new(format!("fwhm_{k}"), "eV"),
                    ParamSpec::new(format!("area_{k}"), "counts·eV"),
                ]
            })
            .collect()
    }

    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        p.chunks_exact(3)
            .map(|c| {
                let dx = x - c[0];
                let hw = 0.5 * c[1];
                c[2] * c[1] / (2.0 * PI) / (dx * dx + hw * hw)
            })
            .sum()
    }

    fn gradient(&self, x: f64, p: &[f64], out: &mut [f64]) -> bool {
        for (c, g) in p.chunks_exact(3).zip(out.chunks_exact_mut(3)) {
            let (center, w, area) = (c[0], c[1], c[2]);
            let dx = x - center;
            let d = dx * dx + 0.25 * w * w;
            let shape = w / (2.0 * PI) / d;
            g[0] = area * w / (2.0 * PI) * 2.0 * dx / (d * d);
            g[1] = area / (2.0 * PI * d) * (1.0 - w * w / (2.0 * d));
            g[2] = shape;
        }
        true
    }

    /// Peaks at the tallest local maxima, widths from the half-height crossings.
    fn initial_guess(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let n = x.len();
        let mut maxima: Vec<usize> = (0..n)
            .filter(|&i| {
                let left = i == 0 || y[i] > y[i - 1];
                let right = i + 1 == n || y[i] >= y[i + 1];
                left && right && y[i] > 0.0
            })
            .collect();
        maxima.sort_by(|&a, &b| y[b].total_cmp(&y[a]).then(a.cmp(&b)));
        maxima.truncate(self.peaks);
        let span = if n > 1 { x[n - 1] - x[0] } else { 1.0 };
        while maxima.len() < self.peaks && n > 0 {
            // Fewer maxima than requested: seed the rest evenly across the grid.
            let k = maxima.len();
            maxima.push(((k + 1) * (n - 1) / (self.peaks + 1)).min(n - 1));
        }
        maxima.sort_unstable();
        let mut out = Vec::with_capacity(3 * self.peaks);
        for &i in &maxima {
            let half = 0.5 * y[i];
            let mut lo = i;
            while lo > 0 && y[lo] > half {
                lo -= 1;
            }
            let mut hi = i;
            while hi + 1 < n && y[hi] > half {
                hi += 1;
            }
            let step = if n > 1 { span / (n - 1) as f64 } else { 1.0 };
            let fwhm = (x[hi] - x[lo]).max(2.0 * step);
            let height = y[i].max(f64::MIN_POSITIVE);
            out.extend_from_slice(&[x[i], fwhm, height * PI * fwhm / 2.0]);
        }
        out
    }
}

/// Exponential decay convolved with a Gaussian instrument response plus a flat
/// background. `amplitude` is the integrated number of counts per unit x.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExpIrf;

/// `exp(z²)·erfc(z)` without overflow for large positive `z`.
pub fn erfcx(z: f64) -> f64 {
    if z < 20.0 {
        (z * z).exp() * erfc(z)
    } else {
        let iz2 = 1.0 / (z * z);
        1.0 / (z * PI.sqrt()) * (1.0 - 0.5 * iz2 + 0.75 * iz2 * iz2 - 1.875 * iz2 * iz2 * iz2)
    }
}

/// Exponentially modified Gaussian density at offset `u` (normalised to unit area),
/// and the Gaussian density at the same point.
fn emg(u: f64, tau: f64, sigma: f64) -> (f64, f64) {
    if sigma <= 0.0 {
        let f = if u >= 0.0 { (-u / tau).exp() / tau } else { 0.0 };
        return (f, 0.0);
    }
    let gauss = INV_SQRT_2PI / sigma * (-0.5 * u * u / (sigma * sigma)).exp();
    let z = (sigma / tau - u / sigma) / SQRT_2;
    let f = if z >= 0.0 {
        0.5 / tau * (-0.5 * u * u / (sigma * sigma)).exp() * erfcx(z)
    } else {
        0.5 / tau * (0.5 * sigma * sigma / (tau * tau) - u / tau).exp() * erfc(z)
    };
    (f, gauss)
}

impl Model for ExpIrf {
    fn id(&self) -> &str {
        "exp_irf"
    }

    fn params(&self) -> Vec<ParamSpec> {
        vec![
            ParamSpec::new("amplitude", "counts·s"),
            ParamSpec::new("t1", "s"),
            ParamSpec::new("t0", "s"),
            ParamSpec::new("irf_fwhm", "s"),
            ParamSpec::new("background", "counts"),
        ]
    }

    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        let (f, _) = emg(x - p[2], p[1], p[3].abs() / FWHM_PER_SIGMA);
        p[0] * f + p[4]
    }

    fn gradient(&self, x: f64, p: &[f64], out: &mut [f64]) -> bool {
        let (amp, tau) = (p[0], p[1]);
        let sigma = p[3].abs() / FWHM_PER_SIGMA;
        let u = x - p[2];
        let (f, g) = emg(u, tau, sigma);
        out[0] = f;
        out[4] = 1.0;
        if sigma <= 0.0 {
            out[1] = amp * f * (u / (tau * tau) - 1.0 / tau);
            out[2] = amp * f / tau;
            out[3] = 0.0;
            return true;
        }
        out[1] =
            amp * (f * (-1.0 / tau - sigma * sigma / tau.powi(3) + u / (tau * tau)) + sigma * sigma / tau.powi(3) * g);
        out[2] = -amp * (g - f) / tau;
        let d_sigma = f * sigma / (tau * tau) - g * (sigma / (tau * tau) + u / (tau * sigma));
        out[3] = amp * d_sigma * p[3].signum() / FWHM_PER_SIGMA;
        true
    }

    fn initial_guess(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n < 2 {
            return vec![1.0, 1.0, 0.0, 0.0, 0.0];
        }
        let step = (x[n - 1] - x[0]) / (n - 1) as f64;
        let mut sorted = y.to_vec();
        sorted.sort_by(f64::total_cmp);
        let background = sorted[n / 10].max(0.0);
        let (imax, &ymax) = y.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        let peak = ymax - background;
        let target = background + peak / std::f64::consts::E;
        let mut j = imax;
        while j + 1 < n && y[j] > target {
            j += 1;
        }
        let tau = (x[j] - x[imax]).max(2.0 * step);
        vec![peak.max(1.0) * tau, tau, x[imax], 2.0 * step, background]
    }
}

/// Three-level antibunching/bunching curve
/// `baseline·(1 − (1+a)·e^{−|τ|/tau1} + a·e^{−|τ|/tau2})`.
#[derive(Debug, Clone, Copy, Default)]
pub struct G2ThreeLevel;

impl Model for G2ThreeLevel {
    fn id(&self) -> &str {
        "g2_three_level"
    }

    fn params(&self) -> Vec<ParamSpec> {
        vec![
            ParamSpec::new("tau1", "s"),
            ParamSpec::new("tau2", "s"),
            ParamSpec::new("a", ""),
            ParamSpec::new("baseline", ""),
        ]
    }

    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        let t = x.abs();
        p[3] * (1.0 - (1.0 + p[2]) * (-t / p[0]).exp() + p[2] * (-t / p[1]).exp())
    }

    fn gradient(&self, x: f64, p: &[f64], out: &mut [f64]) -> bool {
        let t = x.abs();
        let (tau1, tau2, a, b) = (p[0], p[1], p[2], p[3]);
        let e1 = (-t / tau1).exp();
        let e2 = (-t / tau2).exp();
        out[0] = -b * (1.0 + a) * e1 * t / (tau1 * tau1);
        out[1] = b * a * e2 * t / (tau2 * tau2);
        out[2] = b * (e2 - e1);
        out[3] = 1.0 - (1.0 + a) * e1 + a * e2;
        true
    }

    fn initial_guess(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut pts: Vec<(f64, f64)> = x.iter().map(|v| v.abs()).zip(y.iter().cloned()).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = pts.len();
        if n < 4 {
            return vec![1e-9, 1e-6, 0.5, 1.0];
        }
        let tail = &pts[n - (n / 10).max(1)..];
        let baseline = mean(&tail.iter().map(|p| p.1).collect::<Vec<_>>()).max(f64::MIN_POSITIVE);
        let (ipk, peak) = pts
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, p)| if p.1 > acc.1 { (i, p.1) } else { acc });
        let a = (peak / baseline - 1.0).max(0.05);
        // Bunching decay: excess falls to 1/e of its maximum.
        let excess_target = baseline * (1.0 + a / std::f64::consts::E);
        let tau2 = pts[ipk..]
            .iter()
            .find(|p| p.1 < excess_target)
            .map(|p| p.0)
            .unwrap_or(pts[n - 1].0 / 4.0);
        // Antibunching rise: first point reaching half the peak.
        let y0 = pts[0].1;
        let half = 0.5 * (y0 + peak);
        let tau1 = pts
            .iter()
            .find(|p| p.1 >= half)
            .map(|p| p.0 / std::f64::consts::LN_2)
            .unwrap_or(tau2 / 100.0);
        let tau1 = tau1.max(pts[1].0.max(f64::MIN_POSITIVE));
        vec![tau1, tau2.max(2.0 * tau1), a, baseline]
    }
}

/// Visibility envelope shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeShape {
    Exponential,
    Gaussian,
}

impl EnvelopeShape {
    pub fn model_id(self) -> &'static str {
        match self {
            EnvelopeShape::Exponential => "envelope_exp",
            EnvelopeShape::Gaussian => "envelope_gauss",
        }
    }
}

/// `V0·e^{−τ/T}` or `V0·e^{−(τ/T)²}`.
#[derive(Debug, Clone, Copy)]
pub struct Envelope(pub EnvelopeShape);

impl Model for Envelope {
    fn id(&self) -> &str {
        self.0.model_id()
    }

    fn params(&self) -> Vec<ParamSpec> {
        vec![ParamSpec::new("v0", ""), ParamSpec::new("t2_star", "s")]
    }

    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        let r = x / p[1];
        match self.0 {
            EnvelopeShape::Exponential => p[0] * (-r).exp(),
            EnvelopeShape::Gaussian => p[0] * (-r * r).exp(),
        }
    }

    fn gradient(&self, x: f64, p: &[f64], out: &mut [f64]) -> bool {
        let r = x / p[1];
        match self.0 {
            EnvelopeShape::Exponential => {
                let e = (-r).exp();
                out[0] = e;
                out[1] = p[0] * e * r / p[1];
            }
            EnvelopeShape::Gaussian => {
                let e = (-r * r).exp();
                out[0] = e;
                out[1] = p[0] * e * 2.0 * r * r / p[1];
            }
        }
        true
    }

    fn initial_guess(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut pts: Vec<(f64, f64)> = x.iter().cloned().zip(y.iter().cloned()).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let v0 = pts.first().map(|p| p.1).unwrap_or(1.0).max(1e-6);
        let target = v0 / std::f64::consts::E;
        let t = pts
            .iter()
            .find(|p| p.1 < target)
            .map(|p| p.0)
            .or_else(|| pts.last().map(|p| p.0))
            .unwrap_or(1.0);
        let t = if t > 0.0 { t } else { 1.0 };
        vec![v0, t]
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s[s.len() / 2]
}

fn least_squares_line(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    if x.len() < 2 {
        return None;
    }
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}
