//! Closed-form statistics of the G/E/D rate model.

use crate::error::{invalid, Result};

/// Steady-state populations `[G, E, D]` under CW pumping.
pub fn steady_state(t1: f64, pump_rate: f64, shelve_rate: f64, deshelve_rate: f64) -> [f64; 3] {
    if pump_rate <= 0.0 {
        return [1.0, 0.0, 0.0];
    }
    let gamma = 1.0 / t1;
    let dark_per_e = if shelve_rate > 0.0 {
        shelve_rate / deshelve_rate
    } else {
        0.0
    };
    let ground_per_e = (gamma + shelve_rate) / pump_rate;
    let pe = 1.0 / (1.0 + ground_per_e + dark_per_e);
    [ground_per_e * pe, pe, dark_per_e * pe]
}

/// Mean photon emission rate (Hz) under CW pumping.
pub fn cw_emission_rate(t1: f64, pump_rate: f64, shelve_rate: f64, deshelve_rate: f64) -> f64 {
    steady_state(t1, pump_rate, shelve_rate, deshelve_rate)[1] / t1
}

/// Parameters of `g2(τ) = 1 − (1+a)·e^{−|τ|/tau1} + a·e^{−|τ|/tau2}` implied by the rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeLevelG2 {
    pub tau1: f64,
    pub tau2: f64,
    pub a: f64,
}

impl ThreeLevelG2 {
    pub fn eval(&self, tau: f64) -> f64 {
        let t = tau.abs();
        1.0 - (1.0 + self.a) * (-t / self.tau1).exp() + self.a * (-t / self.tau2).exp()
    }
}

/// Exact CW g2 of the three-level model.
///
/// After a detection the emitter is in G, so `g2(τ) = p_E(τ | G at 0) / p_E(∞)`.
/// The relaxation eigenvalues are the roots of `λ² + Tλ + S = 0`.
pub fn analytic_g2(t1: f64, pump_rate: f64, shelve_rate: f64, deshelve_rate: f64) -> Result<ThreeLevelG2> {
    if !(t1 > 0.0 && pump_rate > 0.0) {
        return Err(invalid("T1 and pump rate must be positive"));
    }
    let (r, g, ks, kd) = (pump_rate, 1.0 / t1, shelve_rate, deshelve_rate);
    if ks == 0.0 {
        return Ok(ThreeLevelG2 {
            tau1: 1.0 / (r + g),
            tau2: f64::INFINITY,
            a: 0.0,
        });
    }
    if kd <= 0.0 {
        return Err(invalid("deshelve rate must be positive when shelving is on"));
    }
    let trace = r + g + ks + kd;
    let det = r * ks + r * kd + g * kd + ks * kd;
    let disc = trace * trace - 4.0 * det;
    if disc < 0.0 {
        return Err(invalid(
            "rates give oscillating populations; g2 is not a sum of two exponentials",
        ));
    }
    let root = disc.sqrt();
    let fast = -0.5 * (trace + root);
    // Stable form of the small root.
    let slow = det / fast;
    let ss = steady_state(t1, r, ks, kd)[1];
    // c_fast + c_slow = −ss, fast·c_fast + slow·c_slow = r.
    let c_slow = (r + fast * ss) / (slow - fast);
    Ok(ThreeLevelG2 {
        tau1: -1.0 / fast,
        tau2: -1.0 / slow,
        a: c_slow / ss,
    })
}

/// Shelve and deshelve rates that produce the requested bunching time and amplitude.
pub fn calibrate_blinking(t1: f64, pump_rate: f64, tau2: f64, a: f64) -> Result<(f64, f64)> {
    if !(tau2 > 0.0 && a > 0.0 && t1 > 0.0 && pump_rate > 0.0) {
        return Err(invalid("calibration needs positive T1, pump rate, tau2 and a"));
    }
    let bright = pump_rate / (pump_rate + 1.0 / t1);
    let kd0 = 1.0 / (tau2 * (1.0 + a));
    let mut x = [(a * kd0 / bright).ln(), kd0.ln()];
    let residual = |x: &[f64; 2]| -> Option<[f64; 2]> {
        let m = analytic_g2(t1, pump_rate, x[0].exp(), x[1].exp()).ok()?;
        Some([(m.tau2 / tau2).ln(), (m.a / a).ln()])
    };
    let mut f = residual(&x).ok_or_else(|| invalid("calibration start point is invalid"))?;
    for _ in 0..100 {
        if f[0].abs().max(f[1].abs()) < 1e-13 {
            return Ok((x[0].exp(), x[1].exp()));
        }
        let h = 1e-7;
        let mut jac = [[0.0; 2]; 2];
        for k in 0..2 {
            let mut xp = x;
            xp[k] += h;
            let fp = residual(&xp).ok_or_else(|| invalid("calibration left the valid region"))?;
            jac[0][k] = (fp[0] - f[0]) / h;
            jac[1][k] = (fp[1] - f[1]) / h;
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dx = [
            -(jac[1][1] * f[0] - jac[0][1] * f[1]) / det,
            -(-jac[1][0] * f[0] + jac[0][0] * f[1]) / det,
        ];
        let norm0 = f[0].hypot(f[1]);
        let mut step = 1.0;
        loop {
            let trial = [x[0] + step * dx[0], x[1] + step * dx[1]];
            if let Some(ft) = residual(&trial) {
                if ft[0].hypot(ft[1]) < norm0 {
                    x = trial;
                    f = ft;
                    break;
                }
            }
            step *= 0.5;
            if step < 1e-6 {
                return Err(invalid(format!(
                    "no blinking rates reproduce tau2 = {tau2} s with a = {a}"
                )));
            }
        }
    }
    if f[0].abs().max(f[1].abs()) < 1e-9 {
        Ok((x[0].exp(), x[1].exp()))
    } else {
        Err(invalid(format!(
            "no blinking rates reproduce tau2 = {tau2} s with a = {a}"
        )))
    }
}

/// Excitation rate that gives an antibunching time `tau1` in the two-level limit.
pub fn pump_rate_for_tau1(t1: f64, tau1: f64) -> Result<f64> {
    let r = 1.0 / tau1 - 1.0 / t1;
    if !(r > 0.0) {
        return Err(invalid(format!(
            "antibunching time {tau1} s must be shorter than T1 = {t1} s"
        )));
    }
    Ok(r)
}
