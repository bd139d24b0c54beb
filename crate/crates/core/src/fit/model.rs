/// Name and unit of one model parameter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: String,
    pub unit: &'static str,
}

impl ParamSpec {
    pub fn new(name: impl Into<String>, unit: &'static str) -> Self {
        ParamSpec {
            name: name.into(),
            unit,
        }
    }
}

/// A scalar curve `y = f(x; p)` that the LM engine can fit.
pub trait Model: Send + Sync {
    fn id(&self) -> &str;

    fn params(&self) -> Vec<ParamSpec>;

    fn eval(&self, x: f64, p: &[f64]) -> f64;

    /// Writes the analytic partial derivatives into `out`. Returns `false` if the
    /// model has none, in which case central differences are used.
    fn gradient(&self, _x: f64, _p: &[f64], _out: &mut [f64]) -> bool {
        false
    }

    /// Starting point derived from the data.
    fn initial_guess(&self, x: &[f64], y: &[f64]) -> Vec<f64>;
}

/// Relative step for central finite differences.
pub const FD_RELATIVE_STEP: f64 = 1e-6;

/// Central-difference gradient with relative step [`FD_RELATIVE_STEP`].
pub fn numeric_gradient(model: &dyn Model, x: f64, p: &[f64], out: &mut [f64]) {
    let mut work = p.to_vec();
    for k in 0..p.len() {
        let h = if p[k] != 0.0 {
            FD_RELATIVE_STEP * p[k].abs()
        } else {
            FD_RELATIVE_STEP
        };
        work[k] = p[k] + h;
        let up = model.eval(x, &work);
        work[k] = p[k] - h;
        let down = model.eval(x, &work);
        work[k] = p[k];
        out[k] = (up - down) / (2.0 * h);
    }
}

/// Analytic gradient when available, otherwise central differences.
pub fn model_gradient(model: &dyn Model, x: f64, p: &[f64], out: &mut [f64]) {
    if !model.gradient(x, p, out) {
        numeric_gradient(model, x, p, out);
    }
}
