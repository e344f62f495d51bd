//! Subcommand implementations. Every output is text, written with Rust's
//! shortest-round-trip float formatting, so identical inputs and seeds
//! produce byte-identical files. The one exception, wall-clock timing, is
//! opt-in and quarantined in its own file.

use std::fs;
use std::path::Path;

use sha2::Digest;

use ample_core::dataio::{
    attach_lines, classify_dataset, filter_dataset, load_dataset, save_dataset, RawDataset,
};
use ample_core::fitting::{
    fit_abg, fit_ample, fit_ci, AbgFitData, AmpleFitData, CiFitData, FitConfig, FitResult,
};
use ample_core::metrics::{mean_sim_time, MetricsReport, ThrRange};
use ample_core::models::presets::{
    builtin_ample, load_preset, save_preset, write_preset, ParamPreset, Scenario,
};
use ample_core::models::{
    collapse_line, predict_abg, predict_ample, predict_ci, ModelKind, ModelParams, SamplePoint,
};
use ample_core::regionmap::{GeoPoint, Los, RegionMap};
use ample_core::synth::{describe_spec, generate_dataset, SynthSpec};

use crate::config::{resolve_d0, resolve_filter, FileConfig};
use crate::{CliError, EvaluateArgs, FitArgs, HeatmapArgs, PredictArgs, SynthArgs, TraceArgs};

fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn parse_los(value: &str) -> Los {
    match value {
        "los" => Los::Los,
        _ => Los::Nlos,
    }
}

/// Load, filter and (when a map is at hand) classify a dataset.
fn prepare_dataset(
    dataset: &Path,
    map: Option<&RegionMap>,
    flags: &crate::FilterFlags,
    cfg: &FileConfig,
    env_filter: Option<Los>,
) -> Result<RawDataset, CliError> {
    let raw = load_dataset(dataset)?;
    let spec = resolve_filter(flags, cfg)?;
    let mut data = filter_dataset(&raw, &spec)?;
    if data.is_empty() {
        return Err(CliError::Data(format!(
            "no points of {} survive the filter",
            dataset.display()
        )));
    }
    if let Some(map) = map {
        let report = classify_dataset(&mut data, map)?;
        log::info!("classified {} links against the map", report.classified);
    }
    if let Some(class) = env_filter {
        if map.is_none() {
            return Err(CliError::Usage(
                "an environment filter needs --map to classify links".into(),
            ));
        }
        let keep: Vec<usize> = data
            .points()
            .iter()
            .enumerate()
            .filter(|(_, p)| p.los == Some(class))
            .map(|(i, _)| i)
            .collect();
        if keep.is_empty() {
            return Err(CliError::Data(format!("no {class} links in the dataset")));
        }
        let points: Vec<SamplePoint> = keep.iter().map(|&i| data.points()[i].clone()).collect();
        let tags: Vec<String> = keep.iter().map(|&i| data.tags()[i].clone()).collect();
        data = RawDataset::new(points, tags, data.source.clone());
    }
    Ok(data)
}

fn mean_prediction(params: &ModelParams, point: &SamplePoint) -> Result<f64, CliError> {
    match params {
        ModelParams::Ample(p) => {
            let line = point.line.as_ref().ok_or_else(|| {
                CliError::Data("ample prediction needs a traced line matrix".into())
            })?;
            Ok(predict_ample(p, line, point.freq_ghz)?)
        }
        ModelParams::Ci(p) => Ok(predict_ci(p, point.freq_ghz, point.distance3d)?),
        ModelParams::Abg(p) => Ok(predict_abg(p, point.freq_ghz, point.distance3d)),
    }
}

fn predictions_for(
    params: &ModelParams,
    data: &mut RawDataset,
    map: Option<&RegionMap>,
    d0: f64,
) -> Result<Vec<f64>, CliError> {
    if matches!(params, ModelParams::Ample(_)) {
        let map = map.ok_or_else(|| {
            CliError::Usage("ample parameters need --map for line tracing".into())
        })?;
        let report = attach_lines(data, map, d0)?;
        log::info!("traced {} line matrices", report.traced);
    }
    data.points().iter().map(|p| mean_prediction(params, p)).collect()
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

pub fn fit(args: FitArgs) -> Result<u8, CliError> {
    let model: ModelKind = args.model.parse().map_err(CliError::Usage)?;
    let cfg_file = FileConfig::load(args.filter.config.as_deref())?;
    let d0 = resolve_d0(args.d0, &cfg_file)?;

    let map = match &args.map {
        Some(path) => Some(RegionMap::load(path)?),
        None => None,
    };
    if model == ModelKind::Ample && map.is_none() {
        return Err(CliError::Usage("--model ample requires --map".into()));
    }
    let env_filter = args.env_filter.as_deref().map(parse_los);
    let mut data =
        prepare_dataset(&args.dataset, map.as_ref(), &args.filter, &cfg_file, env_filter)?;

    // Starting point: explicit preset, or the built-in defaults.
    let init: ModelParams = match &args.init {
        Some(path) => load_preset(path)?.params,
        None => match model {
            ModelKind::Ample => {
                let scenario: Scenario = args.scenario.parse().map_err(CliError::Usage)?;
                ModelParams::Ample(builtin_ample(scenario, parse_los(&args.environment)))
            }
            ModelKind::Ci => FitConfig::ci_default(d0).init,
            ModelKind::Abg => FitConfig::abg_default().init,
        },
    };
    if init.kind() != model {
        return Err(CliError::Usage(format!(
            "--init preset is {} but --model is {model}",
            init.kind()
        )));
    }
    let mut fit_cfg = FitConfig::new(init);
    fit_cfg.step_size = args.step_size;
    fit_cfg.max_iters = args.max_iters;
    fit_cfg.grad_tol = args.grad_tol;
    fit_cfg.sigma_floor = args.sigma_floor;

    let result: FitResult = match model {
        ModelKind::Ample => {
            let map = map.as_ref().expect("checked above");
            attach_lines(&mut data, map, d0)?;
            let features = AmpleFitData::from_samples(map, data.points(), d0)?;
            fit_ample(&features, &fit_cfg)?
        }
        ModelKind::Ci => {
            let features = CiFitData::from_samples(data.points(), d0)?;
            fit_ci(&features, &fit_cfg)?
        }
        ModelKind::Abg => {
            let features = AbgFitData::from_samples(data.points())?;
            fit_abg(&features, &fit_cfg)?
        }
    };

    ensure_out_dir(&args.out_dir)?;
    let preset = ParamPreset {
        scenario: Some(args.scenario.clone()),
        environment: args
            .env_filter
            .clone()
            .or_else(|| Some(args.environment.clone())),
        params: result.params.clone(),
    };
    let preset_path = args.out_dir.join(format!("fit_{model}.params"));
    save_preset(&preset, &preset_path)?;

    let filter_spec = resolve_filter(&args.filter, &cfg_file)?;
    let bins = ample_core::dataio::bin_histogram(&data, &filter_spec);
    let largest_bin = bins.iter().map(|(_, c)| *c).max().unwrap_or(0);

    let mut log_text = String::new();
    log_text.push_str("# fit run log\n");
    log_text.push_str(&format!("model {model}\n"));
    log_text.push_str(&format!("dataset {}\n", args.dataset.display()));
    log_text.push_str(&format!("points {}\n", data.len()));
    log_text.push_str(&format!(
        "distance_bins {} (bin width {} m, largest bin {largest_bin} points)\n",
        bins.len(),
        filter_spec.distance_bin
    ));
    log_text.push_str(&format!("d0_m {d0}\n"));
    log_text.push_str(&format!("step_size {}\n", fit_cfg.step_size));
    log_text.push_str(&format!("max_iters {}\n", fit_cfg.max_iters));
    log_text.push_str(&format!("grad_tol {}\n", fit_cfg.grad_tol));
    log_text.push_str(&format!("sigma_floor {}\n", fit_cfg.sigma_floor));
    log_text.push_str(&format!("rank_deficient {}\n", result.rank_deficient));
    for (iter, nll) in &result.nll_trace {
        log_text.push_str(&format!("iter {iter} nll {nll}\n"));
    }
    log_text.push_str(&format!("iters {}\n", result.iters));
    log_text.push_str(&format!("converged {}\n", result.converged));
    log_text.push_str(&format!("grad_norm {}\n", result.grad_norm));
    log_text.push_str(&format!("final_nll {}\n", result.final_nll));
    log_text.push_str("# fitted parameters\n");
    log_text.push_str(&write_preset(&preset));
    fs::write(args.out_dir.join(format!("fit_{model}.log")), log_text)?;

    println!(
        "fit {model}: {} points, {} iterations, converged={}, preset at {}",
        data.len(),
        result.iters,
        result.converged,
        preset_path.display()
    );
    if result.rank_deficient {
        log::warn!("design is rank deficient; some parameters are not identifiable");
    }
    Ok(if result.converged { 0 } else { 3 })
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

pub fn predict(args: PredictArgs) -> Result<(), CliError> {
    let preset = load_preset(&args.params)?;
    let cfg_file = FileConfig::load(args.filter.config.as_deref())?;
    let d0 = resolve_d0(args.d0, &cfg_file)?;
    let map = match &args.map {
        Some(path) => Some(RegionMap::load(path)?),
        None => None,
    };
    let mut data = prepare_dataset(&args.dataset, map.as_ref(), &args.filter, &cfg_file, None)?;
    let preds = predictions_for(&preset.params, &mut data, map.as_ref(), d0)?;

    ensure_out_dir(&args.out_dir)?;
    let with_los = data.points().iter().all(|p| p.los.is_some());
    let mut out = String::new();
    out.push_str("tx_lat,tx_lon,rx_lat,rx_lon,distance3d_m,freq_ghz,path_loss_db");
    if with_los {
        out.push_str(",los");
    }
    out.push_str(",city,pred_db\n");
    for ((p, tag), pred) in data.points().iter().zip(data.tags()).zip(&preds) {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}",
            p.tx.lat, p.tx.lon, p.rx.lat, p.rx.lon, p.distance3d, p.freq_ghz, p.path_loss_db
        ));
        if with_los {
            out.push_str(&format!(",{}", p.los.expect("checked")));
        }
        out.push_str(&format!(",{tag},{pred}\n"));
    }
    let path = args.out_dir.join("predictions.csv");
    fs::write(&path, out)?;
    println!("predict: {} points written to {}", preds.len(), path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

fn resolve_thr_range(
    args: &EvaluateArgs,
    cfg: &FileConfig,
    data: &RawDataset,
) -> Result<ThrRange, CliError> {
    let base = match args.env.as_deref() {
        Some("los") => ThrRange::los_default(),
        Some(_) => ThrRange::nlos_default(),
        None => {
            let flags: Vec<Los> = data.points().iter().filter_map(|p| p.los).collect();
            if flags.is_empty() {
                log::warn!(
                    "no LOS information (no map, no los column); using the NLOS threshold range"
                );
                ThrRange::nlos_default()
            } else {
                let los = flags.iter().filter(|l| **l == Los::Los).count();
                if 2 * los > flags.len() {
                    ThrRange::los_default()
                } else {
                    ThrRange::nlos_default()
                }
            }
        }
    };
    let range = ThrRange::new(
        args.thr_min.or(cfg.num("thr_min")?).unwrap_or(base.lt_min),
        args.thr_max.or(cfg.num("thr_max")?).unwrap_or(base.lt_max),
        args.thr_step.or(cfg.num("thr_step")?).unwrap_or(base.step),
    )?;
    Ok(range)
}

/// Per-point model arithmetic for the timing run, over pre-assembled inputs.
/// For ample the line matrices are pre-collapsed (map information is
/// pre-information, like the dataset itself); the closure still evaluates
/// the full model expression including its logarithms.
fn timed_eval(
    params: &ModelParams,
    data: &RawDataset,
    rounds: u32,
) -> Result<f64, CliError> {
    let t = match params {
        ModelParams::Ample(p) => {
            let rows: Vec<(Vec<f64>, f64, f64)> = data
                .points()
                .iter()
                .map(|s| {
                    let line = s.line.as_ref().expect("lines attached");
                    let d = collapse_line(line, p.n.len())?;
                    Ok((d, f64::from(line.penetrations), s.freq_ghz))
                })
                .collect::<Result<_, ample_core::models::ModelError>>()?;
            mean_sim_time(
                |i| {
                    let (d, pen, f) = &rows[i];
                    let mut acc = p.a;
                    for (dm, nm) in d.iter().zip(&p.n) {
                        acc += dm * nm;
                    }
                    acc + pen * p.x + 10.0 * p.gamma * f.log10()
                },
                rows.len(),
                rounds,
            )?
        }
        ModelParams::Ci(p) => {
            let rows: Vec<(f64, f64)> =
                data.points().iter().map(|s| (s.freq_ghz, s.distance3d)).collect();
            let p = *p;
            mean_sim_time(
                |i| {
                    let (f, d) = rows[i];
                    predict_ci(&p, f, d).unwrap_or(f64::NAN)
                },
                rows.len(),
                rounds,
            )?
        }
        ModelParams::Abg(p) => {
            let rows: Vec<(f64, f64)> =
                data.points().iter().map(|s| (s.freq_ghz, s.distance3d)).collect();
            let p = *p;
            mean_sim_time(
                |i| {
                    let (f, d) = rows[i];
                    predict_abg(&p, f, d)
                },
                rows.len(),
                rounds,
            )?
        }
    };
    Ok(t)
}

fn fit_summary(fit: &ample_core::metrics::DistFit) -> String {
    use ample_core::metrics::FamilyParams;
    match fit.params {
        FamilyParams::Normal { mean, std } => format!("normal mean {mean} std {std}"),
        FamilyParams::LogNormal { mu, sigma } => format!("lognormal mu {mu} sigma {sigma}"),
        FamilyParams::Gamma { shape, scale } => format!("gamma shape {shape} scale {scale}"),
        FamilyParams::Weibull { shape, scale } => format!("weibull shape {shape} scale {scale}"),
        FamilyParams::Rayleigh { sigma } => format!("rayleigh sigma {sigma}"),
        FamilyParams::Ricean { nu, sigma } => format!("ricean nu {nu} sigma {sigma}"),
        FamilyParams::ChiSquare { dof } => format!("chisquare dof {dof}"),
    }
}

pub fn evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let preset = load_preset(&args.params)?;
    let cfg_file = FileConfig::load(args.filter.config.as_deref())?;
    let d0 = resolve_d0(args.d0, &cfg_file)?;
    let map = match &args.map {
        Some(path) => Some(RegionMap::load(path)?),
        None => None,
    };
    let env_filter = args.env.as_deref().map(parse_los);
    let mut data =
        prepare_dataset(&args.dataset, map.as_ref(), &args.filter, &cfg_file, env_filter)?;
    let range = resolve_thr_range(&args, &cfg_file, &data)?;

    let preds = predictions_for(&preset.params, &mut data, map.as_ref(), d0)?;
    let reference = data.path_losses();
    let mut report = MetricsReport::compute(&preds, &reference, &range)?;

    ensure_out_dir(&args.out_dir)?;

    // Machine-readable records.
    let mut records = String::new();
    records.push_str(&format!("model {}\n", preset.params.kind()));
    records.push_str(&format!("points {}\n", preds.len()));
    records.push_str(&format!("thr_min {}\n", range.lt_min));
    records.push_str(&format!("thr_max {}\n", range.lt_max));
    records.push_str(&format!("thr_step {}\n", range.step));
    records.push_str(&format!("rmse_db {}\n", report.rmse_db));
    records.push_str(&format!("mae_db {}\n", report.mae_db));
    records.push_str(&format!("ahre_pct {}\n", report.ahre_pct));
    records.push_str(&format!("pmde {}\n", report.pmde));
    records.push_str(&format!("pred_fit {}\n", fit_summary(&report.pred_fit)));
    records.push_str(&format!("ref_fit {}\n", fit_summary(&report.ref_fit)));
    fs::write(args.out_dir.join("metrics.dat"), &records)?;

    // Human-readable table.
    let mut table = String::new();
    table.push_str(&format!(
        "model {} on {} ({} points)\n",
        preset.params.kind(),
        args.dataset.display(),
        preds.len()
    ));
    table.push_str(&format!(
        "thresholds {}..{} dB step {}\n\n",
        range.lt_min, range.lt_max, range.step
    ));
    table.push_str(&format!("{:<10} {:>12}\n", "metric", "value"));
    table.push_str(&format!("{:<10} {:>12.4}\n", "rmse_db", report.rmse_db));
    table.push_str(&format!("{:<10} {:>12.4}\n", "mae_db", report.mae_db));
    table.push_str(&format!("{:<10} {:>12.4}\n", "ahre_pct", report.ahre_pct));
    table.push_str(&format!("{:<10} {:>12.4}\n", "pmde", report.pmde));
    table.push_str(&format!("\npredicted distribution: {}\n", fit_summary(&report.pred_fit)));
    table.push_str(&format!("reference distribution: {}\n", fit_summary(&report.ref_fit)));
    fs::write(args.out_dir.join("report.txt"), &table)?;

    // CDF of the absolute error, for plotting.
    let mut abs_err: Vec<f64> = preds
        .iter()
        .zip(&reference)
        .map(|(p, r)| (p - r).abs())
        .collect();
    abs_err.sort_by(|a, b| a.partial_cmp(b).expect("finite errors"));
    let mut cdf = String::from("# abs_error_db cdf\n");
    let z = abs_err.len() as f64;
    for (i, e) in abs_err.iter().enumerate() {
        cdf.push_str(&format!("{} {}\n", e, (i + 1) as f64 / z));
    }
    fs::write(args.out_dir.join("cdf_abs_error.dat"), cdf)?;

    // Optional machine-dependent timing, kept out of the deterministic files.
    if let Some(rounds) = args.rounds.or(cfg_file.num("rounds")?.map(|v| v as u32)) {
        if rounds == 0 {
            return Err(CliError::Usage("--rounds must be at least 1".into()));
        }
        let t = timed_eval(&preset.params, &data, rounds)?;
        report.t_p_ns = Some(t);
        let timing = format!("# wall-clock measurement; machine-dependent\nrounds {rounds}\nt_p_ns {t}\n");
        fs::write(args.out_dir.join("timing.dat"), timing)?;
    }

    println!(
        "evaluate {}: rmse {:.4} dB, mae {:.4} dB, ahre {:.4} %, pmde {:.4}{}",
        preset.params.kind(),
        report.rmse_db,
        report.mae_db,
        report.ahre_pct,
        report.pmde,
        match report.t_p_ns {
            Some(t) => format!(", t_p {t:.1} ns"),
            None => String::new(),
        }
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

pub fn synth(args: SynthArgs) -> Result<(), CliError> {
    let recipe_bytes = fs::read(&args.recipe)?;
    let spec = SynthSpec::load(&args.recipe)?;
    let (map, dataset, report) = generate_dataset(&spec)?;

    ensure_out_dir(&args.out_dir)?;
    let map_path = args.out_dir.join("synth_map.map");
    map.save(&map_path)?;
    let data_path = args.out_dir.join("synth_dataset.csv");
    save_dataset(&dataset, &data_path)?;

    let mut manifest = String::from("# synth manifest\n");
    manifest.push_str(&format!("recipe {}\n", args.recipe.display()));
    manifest.push_str(&format!(
        "recipe_sha256 {}\n",
        hex_digest(sha2::Sha256::digest(&recipe_bytes).as_slice())
    ));
    for (k, v) in describe_spec(&spec, &map, &report) {
        manifest.push_str(&format!("{k} {v}\n"));
    }
    fs::write(args.out_dir.join("manifest.txt"), manifest)?;

    println!(
        "synth: {} points ({} skipped) to {}",
        report.emitted,
        report.skipped(),
        data_path.display()
    );
    Ok(())
}

fn hex_digest(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

// ---------------------------------------------------------------------------
// heatmap
// ---------------------------------------------------------------------------

fn format_cell(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v}")
    }
}

fn write_grid(
    path: &Path,
    comment: &str,
    nx: usize,
    ny: usize,
    res: f64,
    origin: GeoPoint,
    values: &[f64],
) -> Result<(), CliError> {
    let mut out = String::new();
    out.push_str(&format!("# {comment}\n"));
    out.push_str(&format!("width {nx}\n"));
    out.push_str(&format!("height {ny}\n"));
    out.push_str(&format!("cell_size_m {res}\n"));
    out.push_str(&format!("origin_lat {}\n", origin.lat));
    out.push_str(&format!("origin_lon {}\n", origin.lon));
    for y in (0..ny).rev() {
        let row: Vec<String> =
            (0..nx).map(|x| format_cell(values[y * nx + x])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn heatmap(args: HeatmapArgs) -> Result<(), CliError> {
    let preset = load_preset(&args.params)?;
    let map = RegionMap::load(&args.map)?;
    let tx = GeoPoint::new(args.tx_lat, args.tx_lon);
    let (tx_x, tx_y) = map.geo_to_grid(tx)?;
    let res = args.resolution.unwrap_or_else(|| map.cell_size());
    if !(res > 0.0) {
        return Err(CliError::Usage(format!("resolution must be positive, got {res}")));
    }
    if !(args.freq > 0.0) {
        return Err(CliError::Usage(format!("frequency must be positive, got {}", args.freq)));
    }
    let nx = (map.extent_x() / res).floor() as usize;
    let ny = (map.extent_y() / res).floor() as usize;
    let dh = args.tx_height - args.rx_height;

    let mut values = vec![f64::NAN; nx * ny];
    for iy in 0..ny {
        for ix in 0..nx {
            let x = (ix as f64 + 0.5) * res;
            let y = (iy as f64 + 0.5) * res;
            let ground = (x - tx_x).hypot(y - tx_y);
            let pred = match &preset.params {
                ModelParams::Ample(p) => {
                    if ground <= args.d0 {
                        f64::NAN
                    } else {
                        let rx = map.grid_to_geo(x, y);
                        match map.trace_line(tx, rx, args.d0) {
                            Ok(line) => predict_ample(p, &line, args.freq)?,
                            Err(_) => f64::NAN,
                        }
                    }
                }
                ModelParams::Ci(p) => {
                    let d = ground.hypot(dh);
                    predict_ci(p, args.freq, d).unwrap_or(f64::NAN)
                }
                ModelParams::Abg(p) => {
                    let d = ground.hypot(dh);
                    if d > 0.0 {
                        predict_abg(p, args.freq, d)
                    } else {
                        f64::NAN
                    }
                }
            };
            values[iy * nx + ix] = pred;
        }
    }

    ensure_out_dir(&args.out_dir)?;
    write_grid(
        &args.out_dir.join("heatmap.grid"),
        &format!("predicted path loss (dB), model {}, {} GHz", preset.params.kind(), args.freq),
        nx,
        ny,
        res,
        map.origin(),
        &values,
    )?;

    if let Some(reference) = &args.reference {
        let data = load_dataset(reference)?;
        let mut sums = vec![0.0f64; nx * ny];
        let mut counts = vec![0u32; nx * ny];
        for p in data.points() {
            let Ok((x, y)) = map.geo_to_grid(p.rx) else { continue };
            let ix = ((x / res).floor() as usize).min(nx.saturating_sub(1));
            let iy = ((y / res).floor() as usize).min(ny.saturating_sub(1));
            sums[iy * nx + ix] += p.path_loss_db;
            counts[iy * nx + ix] += 1;
        }
        let mut errors = vec![f64::NAN; nx * ny];
        for i in 0..nx * ny {
            if counts[i] > 0 && !values[i].is_nan() {
                errors[i] = (values[i] - sums[i] / f64::from(counts[i])).abs();
            }
        }
        write_grid(
            &args.out_dir.join("error_grid.grid"),
            "absolute prediction error vs reference (dB); nan where no reference point",
            nx,
            ny,
            res,
            map.origin(),
            &errors,
        )?;
    }

    println!("heatmap: {nx}x{ny} grid at {res} m written to {}", args.out_dir.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// trace
// ---------------------------------------------------------------------------

pub fn trace(args: TraceArgs) -> Result<(), CliError> {
    let map = RegionMap::load(&args.map)?;
    let tx = GeoPoint::new(args.tx_lat, args.tx_lon);
    let rx = GeoPoint::new(args.rx_lat, args.rx_lon);
    let line = map.trace_line(tx, rx, args.d0)?;
    let los = map.classify_los(tx, rx)?;
    let d = collapse_line(&line, map.region_count())?;

    println!("segments ({}):", line.segments.len());
    println!("{:>4} {:>7} {:>12} {:>12}  region", "idx", "code", "length_m", "cum_m");
    let mut cum = 0.0;
    for (i, seg) in line.segments.iter().enumerate() {
        cum += seg.length;
        let label = match ample_core::regionmap::RegionCode::from_u8(seg.region) {
            Some(code) => code.label(),
            None => "ci",
        };
        println!("{:>4} {:>7} {:>12.4} {:>12.4}  {label}", i, seg.region, seg.length, cum);
    }
    println!("total_length_m {}", line.total_length);
    println!("penetrations {}", line.penetrations);
    println!("los {los}");
    for (i, dm) in d.iter().enumerate() {
        println!("d{} {}", i + 1, dm);
    }
    Ok(())
}
