use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use photonstats::correlator::{
    correlate, correlate_multires, fit_g2, fit_lifetime, lifetime_histogram_shifted, normalize_cw, normalize_pulsed,
};
use photonstats::emitter::{simulate_stream, ConfigMap, SimSetup};
use photonstats::fit::{lm_minimize, registry, FitProblem};
use photonstats::fit::{Model, MultiLorentzian};
use photonstats::interferometry::{extract_visibility, fit_envelope, interferogram_from_spectrum, write_delay_csv};
use photonstats::photophys::{
    apply_filter, evaluate_spectrum, linear_grid, source_to_detector_efficiency, t2_star_from_t2, FilterSpec,
    ParametricSpectrum, SampledSpectrum,
};
use photonstats::tags::TagStream;
use photonstats::units::{ev_to_rad_per_s, FS, MW, NS, PS};
use serde_json::{json, Value};

use crate::output::Manifest;
use crate::{
    CliError, CliResult, FitspecArgs, G2Args, G2Mode, LifetimeArgs, MichelsonArgs, SaturationArgs, SimulateArgs,
};
use crate::{EXIT_CONFIG, EXIT_FEW_COINCIDENCES, EXIT_IO, MIN_COINCIDENCES};

/// Samples per narrowest linewidth when a parametric spectrum is gridded.
const SAMPLES_PER_FWHM: f64 = 20.0;
/// Half-span of the grid in units of the widest linewidth.
const GRID_HALF_SPAN_FWHM: f64 = 60.0;
const MAX_GRID_POINTS: usize = 1 << 20;

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::new(EXIT_IO, format!("{}: {e}", path.display())))
}

fn load_stream(path: &Path) -> CliResult<TagStream> {
    TagStream::load(path).map_err(|e| {
        let e = CliError::from(e);
        CliError::new(e.code, format!("{}: {}", path.display(), e.message))
    })
}

fn to_bytes(write: impl FnOnce(&mut Vec<u8>) -> photonstats::Result<()>) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn finish(mut manifest: Manifest, json_path: Option<&PathBuf>, summary: Value) -> CliResult<Value> {
    if let Some(path) = json_path {
        manifest.output_json(path, &summary)?;
    }
    manifest.finish()?;
    Ok(summary)
}

fn positive(name: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::new(
            EXIT_CONFIG,
            format!("--{name} must be positive, got {v}"),
        ))
    }
}

pub fn simulate(args: &SimulateArgs) -> CliResult<Value> {
    let text = read_text(&args.config)?;
    let map = ConfigMap::parse(&text)?;
    let setup = SimSetup::from_map(&map)?;
    let stream = simulate_stream(&setup.emitter, &setup.sim, &setup.detector, setup.detectors)?;
    let mut manifest = Manifest::new("simulate");
    manifest.config(map.snapshot()).seed(setup.sim.seed).input(&args.config);
    manifest.output(&args.out, &to_bytes(|b| stream.write_ptag(b))?)?;
    manifest.finish()?;

    let counts: Vec<usize> = (0..stream.channel_count()).map(|c| stream.count(c)).collect();
    let detections: usize = counts.iter().take(setup.detectors as usize).sum();
    Ok(json!({
        "channel_counts": counts,
        "detections": detections,
        "duration_s": setup.sim.duration,
        "mean_rate_hz": detections as f64 / setup.sim.duration,
        "output": args.out.display().to_string(),
        "seed": setup.sim.seed,
        "sync_channel": if setup.emitter.drive.is_pulsed() { Some(setup.detectors) } else { None },
        "tags": stream.len(),
    }))
}

pub fn g2(args: &G2Args) -> CliResult<Value> {
    let stream = load_stream(&args.input)?;
    let (a, b) = (args.channels[0], args.channels[1]);
    stream.check_channel(a)?;
    stream.check_channel(b)?;
    let bin = positive("bin", args.bin)? * NS;
    let mut manifest = Manifest::new("g2");
    manifest
        .input(&args.input)
        .setting("mode", format!("{:?}", args.mode).to_lowercase())
        .setting("channels", format!("{a},{b}"))
        .setting("bin_ns", args.bin)
        .setting("fit", args.fit);
    let mut summary = json!({ "channels": [a, b], "mode": format!("{:?}", args.mode).to_lowercase() });

    match args.mode {
        G2Mode::Cw => {
            let window = positive("window", args.window.unwrap_or(100.0))? * NS;
            let h = match args.octaves {
                Some(octaves) => {
                    let linear = ((window / bin).round() as usize).max(2) & !1;
                    manifest.setting("octaves", octaves).setting("linear_bins", linear);
                    correlate_multires(&stream, a, b, bin, linear, octaves)?
                }
                None => {
                    manifest.setting("window_ns", window / NS);
                    correlate(&stream, a, b, bin, window)?
                }
            };
            check_pairs(h.total())?;
            let duration = stream.span();
            let rates = (stream.count(a) as f64 / duration, stream.count(b) as f64 / duration);
            let g = normalize_cw(&h, rates, duration)?;
            manifest.output(&args.out, &to_bytes(|buf| g.write_csv(buf))?)?;
            summary["pairs"] = json!(h.total());
            summary["g2_0"] = json!(g.at_zero());
            summary["rates_hz"] = json!([rates.0, rates.1]);
            if args.fit {
                let fit = fit_g2(&g)?;
                summary["fit"] = fit.to_json();
            }
        }
        G2Mode::Pulsed => {
            let period = positive(
                "rep-period",
                args.rep_period
                    .ok_or_else(|| CliError::new(EXIT_CONFIG, "--rep-period is required in pulsed mode"))?,
            )? * NS;
            let window = args
                .window
                .map_or(Ok(10.0 * period), |w| positive("window", w).map(|w| w * NS))?;
            manifest
                .setting("rep_period_ns", period / NS)
                .setting("window_ns", window / NS)
                .setting("exclude", args.exclude);
            let h = correlate(&stream, a, b, bin, window)?;
            check_pairs(h.total())?;
            manifest.output(&args.out, &to_bytes(|buf| h.write_csv(buf))?)?;
            let p = normalize_pulsed(&h, period, args.exclude)?;
            summary["pairs"] = json!(h.total());
            summary["g2_0"] = json!(p.g2_0);
            summary["g2_0_stderr"] = json!(p.g2_0_stderr);
            summary["far_peak_mean"] = json!(p.far_peak_mean);
            summary["excluded_peaks"] = json!(p.excluded);
            if args.fit {
                summary["fit"] = json!(null);
                summary["note"] = json!("the three-level fit applies to CW histograms only");
            }
        }
    }
    finish(manifest, args.json.as_ref(), summary)
}

fn check_pairs(pairs: u64) -> CliResult<()> {
    if pairs < MIN_COINCIDENCES {
        return Err(CliError::new(
            EXIT_FEW_COINCIDENCES,
            format!("only {pairs} coincidences in the window, need at least {MIN_COINCIDENCES}"),
        ));
    }
    Ok(())
}

pub fn lifetime(args: &LifetimeArgs) -> CliResult<Value> {
    let stream = load_stream(&args.input)?;
    let sync = args.sync_channel.unwrap_or(stream.channel_count().saturating_sub(1));
    let bin = positive("bin", args.bin)? * NS;
    if !(args.pre_trigger >= 0.0) || !(args.irf_fwhm_ps >= 0.0) {
        return Err(CliError::new(
            EXIT_CONFIG,
            "--pre-trigger and --irf-fwhm-ps must be non-negative",
        ));
    }
    let h = lifetime_histogram_shifted(&stream, sync, args.channel, bin, args.pre_trigger * NS)?;
    let fit = fit_lifetime(&h, args.irf_fwhm_ps * PS)?;
    let mut manifest = Manifest::new("lifetime");
    manifest
        .input(&args.input)
        .setting("channel", args.channel)
        .setting("sync_channel", sync)
        .setting("bin_ns", args.bin)
        .setting("pre_trigger_ns", args.pre_trigger)
        .setting("irf_fwhm_ps", args.irf_fwhm_ps);
    manifest.output(&args.out, &to_bytes(|buf| h.write_csv(buf))?)?;
    let summary = json!({
        "counts": h.total(),
        "fit": fit.to_json(),
        "t1_ns": fit.value("t1").map(|v| v / NS),
        "t1_stderr_ns": fit.error("t1").map(|v| v / NS),
    });
    finish(manifest, args.json.as_ref(), summary)
}

/// Reads a sampled CSV, or grids a parametric JSON finely enough for its narrowest line.
fn load_spectrum(path: &Path) -> CliResult<SampledSpectrum> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        let spec = ParametricSpectrum::from_json(&read_text(path)?)?;
        let comps = spec.components();
        let widest = comps.iter().map(|c| c.fwhm_ev).fold(0.0, f64::max);
        let narrowest = comps.iter().map(|c| c.fwhm_ev).fold(f64::INFINITY, f64::min);
        let lo = comps.iter().map(|c| c.center_ev).fold(f64::INFINITY, f64::min) - GRID_HALF_SPAN_FWHM * widest;
        let hi = comps.iter().map(|c| c.center_ev).fold(f64::NEG_INFINITY, f64::max) + GRID_HALF_SPAN_FWHM * widest;
        let lo = lo.max(1e-3);
        let n = (((hi - lo) / narrowest * SAMPLES_PER_FWHM) as usize + 1).clamp(64, MAX_GRID_POINTS);
        Ok(evaluate_spectrum(&spec, &linear_grid(lo, hi, n))?)
    } else {
        let file = fs::File::open(path).map_err(|e| CliError::new(EXIT_IO, format!("{}: {e}", path.display())))?;
        Ok(SampledSpectrum::read_csv(BufReader::new(file))?)
    }
}

pub fn fitspec(args: &FitspecArgs) -> CliResult<Value> {
    if args.max_components == 0 {
        return Err(CliError::new(EXIT_CONFIG, "--max-components must be at least 1"));
    }
    let spec = load_spectrum(&args.input)?;
    let dec = photonstats::spectral_fit::decompose_spectrum(&spec, args.max_components)?;
    let model = MultiLorentzian::new(dec.fit.values.len() / 3);
    let mut csv = String::from("energy_eV,counts,model\n");
    for (&e, &c) in spec.energies().iter().zip(spec.counts()) {
        csv.push_str(&format!("{e},{c},{}\n", model.eval(e, &dec.fit.values)));
    }
    let mut manifest = Manifest::new("fitspec");
    manifest
        .input(&args.input)
        .setting("max_components", args.max_components);
    manifest.output(&args.out, csv.as_bytes())?;
    let components: Vec<Value> = dec
        .spectrum
        .components()
        .iter()
        .map(|c| json!({ "kind": c.kind.as_str(), "center_ev": c.center_ev, "fwhm_ev": c.fwhm_ev, "area": c.area }))
        .collect();
    let summary = json!({ "components": components, "dw_factor": dec.dw_factor, "fit": dec.fit.to_json() });
    finish(manifest, args.json.as_ref(), summary)
}

/// Powers (W), rates (Hz) and optional rate errors (Hz).
type SaturationData = (Vec<f64>, Vec<f64>, Option<Vec<f64>>);

fn read_saturation_csv(path: &Path) -> CliResult<SaturationData> {
    let text = read_text(path)?;
    let format = |msg: String| CliError::new(EXIT_IO, format!("{}: {msg}", path.display()));
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| format("empty file".into()))?.trim();
    let with_sigma = match header {
        "power_mW,rate_Hz" => false,
        "power_mW,rate_Hz,sigma_Hz" => true,
        other => {
            return Err(format(format!(
                "expected header `power_mW,rate_Hz[,sigma_Hz]`, got `{other}`"
            )))
        }
    };
    let (mut p, mut r, mut s) = (Vec::new(), Vec::new(), Vec::new());
    for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| format(format!("line {}: bad number", n + 2)))?;
        if fields.len() != if with_sigma { 3 } else { 2 } {
            return Err(format(format!("line {}: wrong number of fields", n + 2)));
        }
        p.push(fields[0] * MW);
        r.push(fields[1]);
        if with_sigma {
            s.push(fields[2]);
        }
    }
    Ok((p, r, with_sigma.then_some(s)))
}

pub fn saturation(args: &SaturationArgs) -> CliResult<Value> {
    let (power, rate, sigma) = read_saturation_csv(&args.input)?;
    let model = registry().get("saturation")?;
    let problem = match sigma {
        Some(s) => FitProblem::new(model, power, rate, s),
        // Without errors, unit weights and a covariance scaled by the residual.
        None => {
            let n = power.len();
            FitProblem::new(model, power, rate, vec![1.0; n]).scaled_covariance(true)
        }
    };
    let fit = lm_minimize(&problem)?;
    let mut summary = json!({
        "fit": fit.to_json(),
        "i_inf_hz": fit.value("i_inf"),
        "i_inf_stderr_hz": fit.error("i_inf"),
        "p_sat_mw": fit.value("p_sat").map(|v| v / MW),
        "p_sat_stderr_mw": fit.error("p_sat").map(|v| v / MW),
    });
    let mut manifest = Manifest::new("saturation");
    manifest.input(&args.input);
    if let Some(t1) = args.t1_ns {
        let t1 = positive("t1-ns", t1)? * NS;
        manifest.setting("t1_ns", t1 / NS);
        summary["source_to_detector_efficiency"] = json!(source_to_detector_efficiency(fit.values[0], t1));
    }
    finish(manifest, args.json.as_ref(), summary)
}

pub fn michelson(args: &MichelsonArgs) -> CliResult<Value> {
    let spec = load_spectrum(&args.input)?;
    let filter = FilterSpec::new(args.highpass_ev, args.lowpass_ev)?;
    let filtered = apply_filter(&spec, &filter);
    if !(filtered.integral() > 0.0) {
        return Err(CliError::new(EXIT_CONFIG, "the filter removes the whole spectrum"));
    }
    if args.points_per_fringe == 0 {
        return Err(CliError::new(EXIT_CONFIG, "--points-per-fringe must be positive"));
    }
    let reach = positive("max-delay-fs", args.max_delay_fs)? * FS;
    let omega0 = ev_to_rad_per_s(filtered.peak_energy());
    let step = std::f64::consts::TAU / omega0 / args.points_per_fringe as f64;
    let delays: Vec<f64> = (0..=(reach / step) as usize).map(|k| k as f64 * step).collect();
    let ig = interferogram_from_spectrum(&filtered, args.v0, &delays)?;
    let trace = extract_visibility(&ig, omega0)?;
    let env = fit_envelope(&trace, args.shape.into())?;

    let mut manifest = Manifest::new("michelson");
    manifest
        .input(&args.input)
        .setting("shape", format!("{:?}", args.shape).to_lowercase())
        .setting("v0", args.v0)
        .setting("max_delay_fs", args.max_delay_fs)
        .setting("points_per_fringe", args.points_per_fringe);
    if let Some(e) = args.lowpass_ev {
        manifest.setting("lowpass_ev", e);
    }
    if let Some(e) = args.highpass_ev {
        manifest.setting("highpass_ev", e);
    }
    manifest.output(
        &args.out,
        &to_bytes(|buf| write_delay_csv(buf, &ig.delays, &ig.intensity))?,
    )?;
    let vis_path = args.out.with_extension("visibility.csv");
    manifest.output(
        &vis_path,
        &to_bytes(|buf| write_delay_csv(buf, &trace.delays, &trace.visibility))?,
    )?;

    let mut summary = json!({
        "coherence_time_fs": env.t2_star() / FS,
        "fit": env.fit.to_json(),
        "shape": env.fit.model,
        "shape_metric": env.shape_metric,
        "v0": env.v0(),
        "visibility_csv": vis_path.display().to_string(),
    });
    if let Some(t1) = args.t1_ns {
        let t1 = positive("t1-ns", t1)? * NS;
        manifest.setting("t1_ns", t1 / NS);
        summary["t2_star_fs"] = json!(t2_star_from_t2(env.t2_star(), t1)? / FS);
    }
    finish(manifest, args.json.as_ref(), summary)
}
