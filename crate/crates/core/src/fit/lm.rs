//! Weighted Levenberg-Marquardt least squares.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use super::model::{model_gradient, Model, ParamSpec};
use super::transform::{Bounds, Transform};
use crate::error::{Error, Result};

const LAMBDA_INITIAL: f64 = 1e-3;
const LAMBDA_MAX: f64 = 1e16;
const LAMBDA_MIN: f64 = 1e-15;
const SINGULAR_TOL: f64 = 1e-13;
/// Largest acceptable cosine between the residual vector and any Jacobian column at a stall.
const STALL_COSINE: f64 = 1e-6;
/// Residual norm, relative to the weighted data norm, treated as an exact fit at a stall.
/// Below this the residual is rounding noise and its direction carries no information.
const EXACT_FIT: f64 = 1e-10;

/// Everything the engine needs for one fit.
#[derive(Clone)]
pub struct FitProblem {
    pub model: Arc<dyn Model>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub sigma: Vec<f64>,
    pub initial: Vec<f64>,
    pub bounds: Vec<Bounds>,
    pub max_iterations: usize,
    /// Relative objective decrease that counts as converged.
    pub ftol: f64,
    /// Gradient infinity norm that counts as converged.
    pub gtol: f64,
    /// Scale the covariance by the reduced chi-square (for data without absolute errors).
    pub scale_covariance: bool,
}

impl std::fmt::Debug for FitProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FitProblem")
            .field("model", &self.model.id())
            .field("points", &self.x.len())
            .field("initial", &self.initial)
            .field("bounds", &self.bounds)
            .finish()
    }
}

impl FitProblem {
    /// New problem with the model's own starting point and no bounds.
    pub fn new(model: Arc<dyn Model>, x: Vec<f64>, y: Vec<f64>, sigma: Vec<f64>) -> Self {
        let initial = model.initial_guess(&x, &y);
        let n = initial.len();
        FitProblem {
            model,
            x,
            y,
            sigma,
            initial,
            bounds: vec![Bounds::FREE; n],
            max_iterations: 200,
            ftol: 1e-10,
            gtol: 1e-12,
            scale_covariance: false,
        }
    }

    pub fn with_initial(mut self, initial: Vec<f64>) -> Self {
        self.initial = initial;
        self
    }

    pub fn with_bounds(mut self, bounds: Vec<Bounds>) -> Self {
        self.bounds = bounds;
        self
    }

    /// Sets the bounds of the named parameter. Unknown names are ignored.
    pub fn bound(mut self, name: &str, b: Bounds) -> Self {
        if let Some(k) = self.model.params().iter().position(|p| p.name == name) {
            self.bounds[k] = b;
            if b.is_fixed() {
                self.initial[k] = b.lo;
            }
        }
        self
    }

    pub fn max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn scaled_covariance(mut self, on: bool) -> Self {
        self.scale_covariance = on;
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.model.params().len();
        let m = self.x.len();
        if self.y.len() != m || self.sigma.len() != m {
            return Err(Error::InvalidFit("x, y and sigma lengths differ".into()));
        }
        if self.initial.len() != n || self.bounds.len() != n {
            return Err(Error::InvalidFit(format!(
                "model `{}` has {} parameters, got {} initial values and {} bounds",
                self.model.id(),
                n,
                self.initial.len(),
                self.bounds.len()
            )));
        }
        if let Some(s) = self.sigma.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::InvalidFit(format!("sigma must be positive, got {s}")));
        }
        if self.x.iter().chain(&self.y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidFit("data contain non-finite values".into()));
        }
        for b in &self.bounds {
            if !(b.lo <= b.hi) {
                return Err(Error::InvalidFit(format!("bounds [{}, {}] are inverted", b.lo, b.hi)));
            }
        }
        if self.initial.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidFit("initial parameters must be finite".into()));
        }
        let free = self.bounds.iter().filter(|b| !b.is_fixed()).count();
        if m < free {
            return Err(Error::InvalidFit(format!(
                "{m} data points cannot constrain {free} free parameters"
            )));
        }
        Ok(())
    }
}

/// Outcome of a fit. Non-convergence is reported here, never as an error.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: String,
    pub params: Vec<ParamSpec>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    pub chi2: f64,
    pub chi2_reduced: f64,
    pub converged: bool,
    pub iterations: usize,
    pub flags: Vec<String>,
    /// Objective after every accepted step, starting with the initial point.
    pub objective_trace: Vec<f64>,
    /// Largest cosine between the residual vector and a Jacobian column at the optimum.
    pub gradient_cosine: f64,
}

impl FitResult {
    fn index(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.index(name).map(|k| self.values[k])
    }

    pub fn error(&self, name: &str) -> Option<f64> {
        self.index(name).map(|k| self.stderr[k])
    }

    pub fn has_flag(&self, prefix: &str) -> bool {
        self.flags.iter().any(|f| f.starts_with(prefix))
    }

    pub fn push_flag(&mut self, flag: impl Into<String>) {
        let flag = flag.into();
        if !self.flags.contains(&flag) {
            self.flags.push(flag);
        }
    }

    /// Shared FitResult JSON schema. Keys come out sorted.
    pub fn to_json(&self) -> Value {
        let mut params = Map::new();
        for (k, spec) in self.params.iter().enumerate() {
            params.insert(
                spec.name.clone(),
                json!({ "value": finite_or_null(self.values[k]), "stderr": finite_or_null(self.stderr[k]), "unit": spec.unit }),
            );
        }
        json!({
            "model": self.model,
            "params": Value::Object(params),
            "chi2_reduced": finite_or_null(self.chi2_reduced),
            "converged": self.converged,
            "iterations": self.iterations,
            "flags": self.flags,
        })
    }
}

fn finite_or_null(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

struct Workspace<'a> {
    problem: &'a FitProblem,
    transforms: Vec<Transform>,
    free: Vec<usize>,
    base: Vec<f64>,
}

impl<'a> Workspace<'a> {
    fn external(&self, u: &[f64]) -> Vec<f64> {
        let mut p = self.base.clone();
        for (j, &k) in self.free.iter().enumerate() {
            p[k] = self.transforms[k].to_external(u[j]);
        }
        p
    }

    fn residuals(&self, p: &[f64]) -> DVector<f64> {
        let pr = self.problem;
        DVector::from_iterator(
            pr.x.len(),
            pr.x.iter()
                .zip(&pr.y)
                .zip(&pr.sigma)
                .map(|((&x, &y), &s)| (y - pr.model.eval(x, p)) / s),
        )
    }

    /// Jacobian of `f/sigma` with respect to the free external parameters.
    fn jacobian_external(&self, p: &[f64]) -> DMatrix<f64> {
        let pr = self.problem;
        let n_all = p.len();
        let mut grad = vec![0.0; n_all];
        let mut jac = DMatrix::zeros(pr.x.len(), self.free.len());
        for (i, (&x, &s)) in pr.x.iter().zip(&pr.sigma).enumerate() {
            model_gradient(pr.model.as_ref(), x, p, &mut grad);
            for (j, &k) in self.free.iter().enumerate() {
                jac[(i, j)] = grad[k] / s;
            }
        }
        jac
    }

    fn jacobian_internal(&self, u: &[f64], p: &[f64]) -> DMatrix<f64> {
        let mut jac = self.jacobian_external(p);
        for (j, &k) in self.free.iter().enumerate() {
            let d = self.transforms[k].derivative(u[j]);
            jac.column_mut(j).scale_mut(d);
        }
        jac
    }
}

fn objective(r: &DVector<f64>) -> f64 {
    r.norm_squared()
}

fn column_scales(jac: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(
        jac.ncols(),
        jac.column_iter().map(|c| {
            let n = c.norm();
            if n > 0.0 && n.is_finite() {
                1.0 / n
            } else {
                1.0
            }
        }),
    )
}

fn max_cosine(jac: &DMatrix<f64>, r: &DVector<f64>) -> f64 {
    let rn = r.norm();
    if rn == 0.0 {
        return 0.0;
    }
    jac.column_iter()
        .map(|c| {
            let cn = c.norm();
            if cn == 0.0 {
                0.0
            } else {
                (c.dot(r) / (cn * rn)).abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Minimises the weighted sum of squared residuals with damped Gauss-Newton steps.
///
/// Errors only when the problem itself is malformed; a fit that fails to
/// converge comes back with `converged == false` and explanatory flags.
pub fn lm_minimize(problem: &FitProblem) -> Result<FitResult> {
    problem.validate()?;
    let transforms: Vec<Transform> = problem.bounds.iter().map(|&b| Transform::for_bounds(b)).collect();
    let free: Vec<usize> = (0..problem.bounds.len())
        .filter(|&k| !problem.bounds[k].is_fixed())
        .collect();
    let mut base = problem.initial.clone();
    for (k, b) in problem.bounds.iter().enumerate() {
        if b.is_fixed() {
            base[k] = b.lo;
        }
    }
    let ws = Workspace {
        problem,
        transforms,
        free,
        base,
    };

    let mut u: Vec<f64> = ws
        .free
        .iter()
        .map(|&k| ws.transforms[k].to_internal(problem.initial[k]))
        .collect();
    let mut p = ws.external(&u);
    let mut r = ws.residuals(&p);
    let mut obj = objective(&r);
    let mut flags = Vec::new();
    let mut trace = vec![obj];
    let mut converged = false;
    let mut iterations = 0;
    let data_norm = problem
        .y
        .iter()
        .zip(&problem.sigma)
        .map(|(y, s)| (y / s).powi(2))
        .sum::<f64>()
        .sqrt();
    let mut lambda = LAMBDA_INITIAL;

    if !obj.is_finite() {
        flags.push("non_finite".to_string());
    } else if ws.free.is_empty() {
        converged = true;
    } else {
        'outer: loop {
            if iterations >= problem.max_iterations {
                flags.push("max_iterations".to_string());
                break;
            }
            let jac = ws.jacobian_internal(&u, &p);
            let grad = jac.transpose() * &r;
            let gnorm = grad.amax();
            if gnorm < problem.gtol || obj == 0.0 {
                converged = true;
                break;
            }
            let scales = column_scales(&jac);
            let scaled = &jac * DMatrix::from_diagonal(&scales);
            let normal = scaled.transpose() * &scaled;
            let g = grad.component_mul(&scales);
            loop {
                let mut damped = normal.clone();
                for j in 0..damped.nrows() {
                    damped[(j, j)] += lambda;
                }
                let step = match damped.cholesky() {
                    Some(ch) => ch.solve(&g).component_mul(&scales),
                    None => {
                        lambda *= 10.0;
                        if lambda > LAMBDA_MAX {
                            break 'outer;
                        }
                        continue;
                    }
                };
                let trial_u: Vec<f64> = u.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
                let trial_p = ws.external(&trial_u);
                let trial_r = ws.residuals(&trial_p);
                let trial_obj = objective(&trial_r);
                if trial_obj.is_finite() && trial_obj < obj {
                    let rel = (obj - trial_obj) / obj;
                    u = trial_u;
                    p = trial_p;
                    r = trial_r;
                    obj = trial_obj;
                    trace.push(obj);
                    iterations += 1;
                    lambda = (lambda / 10.0).max(LAMBDA_MIN);
                    if rel < problem.ftol {
                        converged = true;
                        break 'outer;
                    }
                    break;
                }
                lambda *= 10.0;
                if lambda > LAMBDA_MAX {
                    // No step along the gradient reduces the objective: a numerical optimum
                    // provided the gradient is orthogonal to the residual.
                    if max_cosine(&jac, &r) < STALL_COSINE || obj.sqrt() <= EXACT_FIT * data_norm {
                        converged = true;
                    } else {
                        flags.push("stalled".to_string());
                    }
                    break 'outer;
                }
            }
        }
    }

    let m = problem.x.len();
    let dof = m.saturating_sub(ws.free.len());
    let chi2_reduced = if dof > 0 { obj / dof as f64 } else { f64::NAN };
    let jac_ext = ws.jacobian_external(&p);
    let gradient_cosine = max_cosine(&jac_ext, &r);
    let specs = problem.model.params();
    let mut stderr = vec![0.0; specs.len()];
    let scale = if problem.scale_covariance && chi2_reduced.is_finite() {
        chi2_reduced.sqrt()
    } else {
        1.0
    };
    let (free_err, singular) = covariance_errors(&jac_ext);
    if singular {
        flags.push("singular_normal_equations".to_string());
    }
    for (j, &k) in ws.free.iter().enumerate() {
        stderr[k] = free_err[j] * scale;
        if !stderr[k].is_finite() {
            flags.push(format!("degenerate:{}", specs[k].name));
        } else if p[k] != 0.0 && stderr[k] > p[k].abs() {
            flags.push(format!("poorly_constrained:{}", specs[k].name));
        }
    }
    if !obj.is_finite() {
        converged = false;
    }

    Ok(FitResult {
        model: problem.model.id().to_string(),
        params: specs,
        values: p,
        stderr,
        chi2: obj,
        chi2_reduced,
        converged,
        iterations,
        flags,
        objective_trace: trace,
        gradient_cosine,
    })
}

/// Standard errors from `(JᵀJ)⁻¹`, column-scaled so that unit choices do not
/// masquerade as singularity. Null directions give infinite errors.
fn covariance_errors(jac: &DMatrix<f64>) -> (Vec<f64>, bool) {
    let n = jac.ncols();
    if n == 0 {
        return (vec![], false);
    }
    let mut zero_cols = vec![false; n];
    for (j, c) in jac.column_iter().enumerate() {
        zero_cols[j] = !(c.norm() > 0.0);
    }
    let scales = column_scales(jac);
    let scaled = jac * DMatrix::from_diagonal(&scales);
    let normal = scaled.transpose() * scaled;
    if normal.iter().any(|v| !v.is_finite()) {
        return (vec![f64::NAN; n], true);
    }
    let eig = SymmetricEigen::new(normal);
    let emax = eig.eigenvalues.amax();
    let tol = SINGULAR_TOL * emax.max(f64::MIN_POSITIVE);
    let mut singular = false;
    let mut var = vec![0.0; n];
    let mut null_hit = zero_cols.clone();
    for (idx, &e) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(idx);
        if e > tol {
            for k in 0..n {
                var[k] += v[k] * v[k] / e;
            }
        } else {
            singular = true;
            for k in 0..n {
                if v[k].abs() > 1e-6 {
                    null_hit[k] = true;
                }
            }
        }
    }
    let errs = (0..n)
        .map(|k| {
            if null_hit[k] {
                f64::INFINITY
            } else {
                var[k].sqrt() * scales[k]
            }
        })
        .collect();
    (errs, singular || zero_cols.iter().any(|&z| z))
}

/// Runs the problem from each start and keeps the best result. Ties break on
/// lowest objective, then lexicographically lowest parameter vector, so the
/// outcome does not depend on scheduling.
pub fn lm_multistart(problem: &FitProblem, starts: &[Vec<f64>]) -> Result<FitResult> {
    problem.validate()?;
    let results: Vec<FitResult> = starts
        .par_iter()
        .map(|s| lm_minimize(&problem.clone().with_initial(s.clone())))
        .collect::<Result<_>>()?;
    let best = results.into_iter().filter(|r| r.chi2.is_finite()).min_by(|a, b| {
        a.chi2.total_cmp(&b.chi2).then_with(|| {
            a.values
                .iter()
                .zip(&b.values)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    best.ok_or_else(|| Error::InvalidFit("every start produced a non-finite objective".into()))
}
