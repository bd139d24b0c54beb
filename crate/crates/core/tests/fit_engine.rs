use std::sync::Arc;

use approx::assert_relative_eq;
use photonstats::fit::{
    lm_minimize, lm_multistart, registry, Bounds, FitProblem, Linear, Model, ModelRegistry, MultiLorentzian, ParamSpec,
    Saturation,
};
use photonstats::photophys::{evaluate_spectrum, linear_grid};
use photonstats::{presets, Error};
use proptest::prelude::*;

/// Two-residual Rosenbrock valley: r0 = 10(b − a²), r1 = 1 − a.
struct Rosenbrock;

impl Model for Rosenbrock {
    fn id(&self) -> &str {
        "rosenbrock"
    }
    fn params(&self) -> Vec<ParamSpec> {
        vec![ParamSpec::new("a", ""), ParamSpec::new("b", "")]
    }
    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        if x == 0.0 {
            10.0 * (p[1] - p[0] * p[0])
        } else {
            1.0 - p[0]
        }
    }
    fn initial_guess(&self, _x: &[f64], _y: &[f64]) -> Vec<f64> {
        vec![-1.2, 1.0]
    }
}

fn saturation_sweep() -> (Vec<f64>, Vec<f64>) {
    let truth = [presets::I_INF_CW, presets::P_SAT_CW];
    let p: Vec<f64> = (1..=12).map(|k| 0.05e-3 + (k - 1) as f64 * 0.45e-3).collect();
    let y = p.iter().map(|&x| Saturation.eval(x, &truth)).collect();
    (p, y)
}

#[test]
fn linear_exact_data_is_recovered_with_zero_residual() {
    let x: Vec<f64> = (0..10).map(f64::from).collect();
    let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 2.0).collect();
    let fit = lm_minimize(&FitProblem::new(Arc::new(Linear), x, y, vec![1.0; 10])).unwrap();
    assert!(fit.converged);
    assert_relative_eq!(fit.values[0], 3.0, epsilon = 1e-10);
    assert_relative_eq!(fit.values[1], -2.0, epsilon = 1e-10);
    assert!(fit.chi2 < 1e-20, "{}", fit.chi2);
}

#[test]
fn noiseless_saturation_recovers_reference_values() {
    let (p, y) = saturation_sweep();
    let sigma = y.iter().map(|v| 0.05 * v).collect();
    let fit = lm_minimize(&FitProblem::new(Arc::new(Saturation), p, y, sigma).with_initial(vec![10e3, 1e-3])).unwrap();
    assert!(fit.converged, "{:?}", fit.flags);
    assert_relative_eq!(fit.value("i_inf").unwrap(), 18.0e3, max_relative = 1e-8);
    assert_relative_eq!(fit.value("p_sat").unwrap(), 0.54e-3, max_relative = 1e-8);
}

#[test]
fn rosenbrock_converges_from_standard_start() {
    let problem = FitProblem::new(Arc::new(Rosenbrock), vec![0.0, 1.0], vec![0.0, 0.0], vec![1.0, 1.0]);
    let fit = lm_minimize(&problem).unwrap();
    assert!(fit.converged, "{:?}", fit.flags);
    assert!(fit.iterations <= 200);
    assert_relative_eq!(fit.values[0], 1.0, epsilon = 1e-6);
    assert_relative_eq!(fit.values[1], 1.0, epsilon = 1e-6);
}

#[test]
fn accepted_objective_never_increases() {
    let problem = FitProblem::new(Arc::new(Rosenbrock), vec![0.0, 1.0], vec![0.0, 0.0], vec![1.0, 1.0]);
    let fit = lm_minimize(&problem).unwrap();
    assert!(fit.objective_trace.len() > 2);
    assert!(fit.objective_trace.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn iteration_cap_is_flagged() {
    let problem =
        FitProblem::new(Arc::new(Rosenbrock), vec![0.0, 1.0], vec![0.0, 0.0], vec![1.0, 1.0]).max_iterations(2);
    let fit = lm_minimize(&problem).unwrap();
    assert!(!fit.converged);
    assert!(fit.has_flag("max_iterations"));
}

#[test]
fn fixed_parameter_stays_put_and_has_zero_error() {
    let (p, y) = saturation_sweep();
    let sigma = vec![100.0; p.len()];
    let problem = FitProblem::new(Arc::new(Saturation), p, y, sigma).bound("p_sat", Bounds::fixed(0.6e-3));
    let fit = lm_minimize(&problem).unwrap();
    assert_eq!(fit.value("p_sat"), Some(0.6e-3));
    assert_eq!(fit.error("p_sat"), Some(0.0));
}

#[test]
fn degenerate_direction_reports_infinite_error() {
    // Only the sum of the two slopes is identifiable.
    struct TwoSlopes;
    impl Model for TwoSlopes {
        fn id(&self) -> &str {
            "two_slopes"
        }
        fn params(&self) -> Vec<ParamSpec> {
            vec![ParamSpec::new("u", ""), ParamSpec::new("v", "")]
        }
        fn eval(&self, x: f64, p: &[f64]) -> f64 {
            (p[0] + p[1]) * x
        }
        fn initial_guess(&self, _x: &[f64], _y: &[f64]) -> Vec<f64> {
            vec![1.0, 1.0]
        }
    }
    let x: Vec<f64> = (1..8).map(f64::from).collect();
    let y = x.iter().map(|v| 5.0 * v).collect();
    let fit = lm_minimize(&FitProblem::new(Arc::new(TwoSlopes), x, y, vec![1.0; 7])).unwrap();
    assert!(fit.has_flag("singular_normal_equations"));
    assert!(fit.stderr.iter().all(|e| e.is_infinite()));
}

#[test]
fn invalid_problems_are_rejected() {
    let m: Arc<dyn Model> = Arc::new(Linear);
    let cases = [
        FitProblem::new(m.clone(), vec![1.0, 2.0], vec![1.0], vec![1.0, 1.0]),
        FitProblem::new(m.clone(), vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0], vec![1.0, 0.0, 1.0]),
        FitProblem::new(m.clone(), vec![1.0], vec![1.0], vec![1.0]),
        FitProblem::new(m.clone(), vec![1.0, 2.0, 3.0], vec![1.0, f64::NAN, 3.0], vec![1.0; 3]),
    ];
    for problem in &cases {
        assert!(matches!(lm_minimize(problem), Err(Error::InvalidFit(_))));
    }
}

#[test]
fn multistart_keeps_the_lowest_chi2() {
    let (p, y) = saturation_sweep();
    let sigma: Vec<f64> = y.iter().map(|v| 0.05 * v).collect();
    let problem = FitProblem::new(Arc::new(Saturation), p, y, sigma);
    let starts = vec![vec![1e3, 1e-2], vec![18e3, 0.54e-3], vec![50e3, 1e-5]];
    let best = lm_multistart(&problem, &starts).unwrap();
    for s in &starts {
        let single = lm_minimize(&problem.clone().with_initial(s.clone())).unwrap();
        assert!(best.chi2 <= single.chi2);
    }
}

#[test]
fn registry_lists_builtins_and_rejects_unknown_ids() {
    let reg = registry();
    assert!(reg.len() >= 5);
    for id in [
        "saturation",
        "multi_lorentzian",
        "exp_irf",
        "g2_three_level",
        "envelope_exp",
        "envelope_gauss",
    ] {
        assert!(reg.ids().contains(&id), "{id} missing");
    }
    assert!(matches!(reg.get("voigt"), Err(Error::UnknownModel(id)) if id == "voigt"));
}

#[test]
fn duplicate_registration_fails() {
    let mut reg = ModelRegistry::empty();
    reg.register("linear", Arc::new(|_| Arc::new(Linear) as Arc<dyn Model>))
        .unwrap();
    let again = reg.register("linear", Arc::new(|_| Arc::new(Linear) as Arc<dyn Model>));
    assert!(matches!(again, Err(Error::DuplicateModel(_))));
}

#[test]
fn multi_lorentzian_initializer_proposes_local_maxima() {
    let grid = linear_grid(1.50, 1.85, 3501);
    let spec = evaluate_spectrum(&presets::reference_spectrum(), &grid).unwrap();
    let model = MultiLorentzian::new(2);
    let guess = model.initial_guess(spec.energies(), spec.counts());
    // Independent oracle: strict local maxima of the sampled curve.
    let y = spec.counts();
    let maxima: Vec<f64> = (1..y.len() - 1)
        .filter(|&i| y[i] > y[i - 1] && y[i] > y[i + 1])
        .map(|i| grid[i])
        .collect();
    assert_eq!(maxima.len(), 2, "{maxima:?}");
    let mut centers = [guess[0], guess[3]];
    centers.sort_by(f64::total_cmp);
    assert_relative_eq!(centers[0], maxima[0], epsilon = 1e-12);
    assert_relative_eq!(centers[1], maxima[1], epsilon = 1e-12);
}

#[test]
fn fit_result_json_has_stable_schema() {
    let (p, y) = saturation_sweep();
    let sigma = y.iter().map(|v| 0.05 * v).collect();
    let fit = lm_minimize(&FitProblem::new(Arc::new(Saturation), p, y, sigma)).unwrap();
    let json = fit.to_json();
    assert_eq!(json["model"], "saturation");
    assert_eq!(json["params"]["p_sat"]["unit"], "W");
    assert!(json["params"]["i_inf"]["value"].is_number());
    assert!(json["converged"].as_bool().unwrap());
    assert!(json["flags"].is_array());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Rescaling the data and its errors together leaves the optimum unchanged.
    #[test]
    fn scaling_data_and_sigma_is_invariant(scale in 1e-3f64..1e3, i_inf in 1e3f64..1e5, p_sat in 1e-4f64..5e-3) {
        let p: Vec<f64> = (1..=12).map(|k| 0.05e-3 * 100f64.powf((k - 1) as f64 / 11.0)).collect();
        let y: Vec<f64> = p.iter().enumerate().map(|(k, &x)| Saturation.eval(x, &[i_inf, p_sat]) * (1.0 + 0.02 * ((k as f64) * 1.7).sin())).collect();
        let sigma: Vec<f64> = y.iter().map(|v| 0.05 * v).collect();
        let base = lm_minimize(&FitProblem::new(Arc::new(Saturation), p.clone(), y.clone(), sigma.clone())).unwrap();
        let ys = y.iter().map(|v| v * scale).collect();
        let ss = sigma.iter().map(|v| v * scale).collect();
        let scaled = lm_minimize(&FitProblem::new(Arc::new(Saturation), p, ys, ss)).unwrap();
        prop_assert!((scaled.values[0] / scale - base.values[0]).abs() <= 1e-8 * base.values[0]);
        prop_assert!((scaled.values[1] - base.values[1]).abs() <= 1e-8 * base.values[1]);
        prop_assert!((scaled.chi2 - base.chi2).abs() <= 1e-8 * base.chi2.max(1e-12));
    }

    /// Bounded parameters never leave their interval.
    #[test]
    fn bounds_are_respected(lo in 0.1f64..1.0, width in 0.01f64..0.5) {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let problem = FitProblem::new(Arc::new(Linear), x, y, vec![1.0; 10]).bound("slope", Bounds::new(lo, lo + width));
        let fit = lm_minimize(&problem).unwrap();
        prop_assert!(fit.values[0] >= lo && fit.values[0] <= lo + width);
    }
}
