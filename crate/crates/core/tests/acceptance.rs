//! Acceptance suite: one orchestrated run that prints a pass/fail line per
//! criterion (run with `-- --nocapture` to see them on success). Every
//! tolerance is pinned in code; a criterion failure fails the whole test
//! after all criteria have reported.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use statrs::distribution::ContinuousCDF;

use ample_core::fitting::{
    fit_abg, fit_ample, fit_ci, fit_ci_closed_form, grad_abg, grad_ample, grad_ci, nll_abg,
    nll_ample, nll_ci, AbgFitData, AmpleFitData, CiFitData, FitConfig,
};
use ample_core::metrics::{ahre, fit_best_distribution, mae, pmde, rmse, Family, ThrRange};
use ample_core::models::presets::{builtin_ample, Scenario};
use ample_core::models::{
    fspl, predict_abg, predict_ample, predict_ci, sample_shadowing, AbgParams, AmpleParams,
    CiParams,
};
use ample_core::regionmap::{GeoPoint, LineMatrix, Los, Segment};
use ample_core::synth::{generate_dataset, MapRecipe, MapSource, SynthSpec};
use ample_core::{ModelParams, RawDataset};

use common::{compare_runs, cut_runs, normalize_runs, penetrations_from_runs, random_map, rle_oracle};

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Option<Duration>,
    run: fn() -> Result<String, String>,
}

#[test]
fn acceptance_criteria() {
    let criteria = [
        Criterion {
            id: 1,
            name: "gradient correctness vs finite differences",
            budget: Some(Duration::from_secs(10)),
            run: criterion_1,
        },
        Criterion {
            id: 2,
            name: "CI descent agrees with the closed-form MLE",
            budget: Some(Duration::from_secs(60)),
            run: criterion_2,
        },
        Criterion {
            id: 3,
            name: "CI parameter recovery from synthetic data",
            budget: Some(Duration::from_secs(120)),
            run: criterion_3,
        },
        Criterion {
            id: 4,
            name: "AMPLE self-consistency (noise-free and noisy)",
            budget: Some(Duration::from_secs(600)),
            run: criterion_4,
        },
        Criterion {
            id: 5,
            name: "trace geometry matches the centimeter oracle",
            budget: Some(Duration::from_secs(60)),
            run: criterion_5,
        },
        Criterion {
            id: 6,
            name: "metric identities and the analytic PMDE overlap",
            budget: Some(Duration::from_secs(60)),
            run: criterion_6,
        },
        Criterion {
            id: 7,
            name: "AIC selects each self-sampled family",
            budget: Some(Duration::from_secs(300)),
            run: criterion_7,
        },
        Criterion {
            id: 8,
            name: "AMPLE beats CI/ABG on heterogeneous NLOS data",
            budget: None,
            run: criterion_8,
        },
    ];

    let mut failures = Vec::new();
    for c in &criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.run));
        let elapsed = start.elapsed();
        let result = match outcome {
            Ok(Ok(detail)) => {
                if let Some(budget) = c.budget {
                    if elapsed > budget {
                        Err(format!("over budget: {elapsed:.1?} > {budget:.1?}"))
                    } else {
                        Ok(detail)
                    }
                } else {
                    Ok(detail)
                }
            }
            Ok(Err(reason)) => Err(reason),
            Err(panic) => Err(match panic.downcast_ref::<String>() {
                Some(s) => format!("panic: {s}"),
                None => "panic".to_string(),
            }),
        };
        match result {
            Ok(detail) => {
                println!("criterion {} ({}): PASS in {elapsed:.1?} — {detail}", c.id, c.name)
            }
            Err(reason) => {
                println!("criterion {} ({}): FAIL in {elapsed:.1?} — {reason}", c.id, c.name);
                failures.push(c.id);
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}

// ---------------------------------------------------------------------------
// helpers
// ---------------------------------------------------------------------------

fn fd_grad(f: &dyn Fn(&[f64]) -> f64, at: &[f64]) -> Vec<f64> {
    (0..at.len())
        .map(|i| {
            let h = 1e-6 * at[i].abs().max(1.0);
            let mut hi = at.to_vec();
            let mut lo = at.to_vec();
            hi[i] += h;
            lo[i] -= h;
            (f(&hi) - f(&lo)) / (2.0 * h)
        })
        .collect()
}

/// Relative 1e-6 agreement, with an absolute floor at the finite-difference
/// oracle's own noise: central differences of an NLL of magnitude F with
/// step h >= 1e-6 carry rounding error around eps*F/h ~ 2e-10 F, so below
/// 1e-9 F the oracle has nothing left to say.
fn check_grad(analytic: &[f64], numeric: &[f64], nll: f64, label: &str) -> Result<(), String> {
    let floor = 1e-9 * nll.abs().max(1.0);
    for (i, (a, n)) in analytic.iter().zip(numeric).enumerate() {
        let tol = (1e-6 * a.abs().max(n.abs())).max(floor);
        if (a - n).abs() > tol {
            return Err(format!("{label} component {i}: analytic {a}, numeric {n}"));
        }
    }
    Ok(())
}

fn random_line(rng: &mut ChaCha8Rng) -> LineMatrix {
    let mut segments = vec![Segment { region: 0, length: 1.0 }];
    for _ in 0..rng.gen_range(1..5) {
        segments.push(Segment {
            region: rng.gen_range(1..=4),
            length: rng.gen_range(3.0..250.0),
        });
    }
    LineMatrix::new(segments, rng.gen_range(0..8)).unwrap()
}

fn ci_rows(rng: &mut ChaCha8Rng, z: usize, n: f64, sigma: f64, d_lo: f64, d_hi: f64) -> Vec<(f64, f64, f64)> {
    (0..z)
        .map(|_| {
            let d = rng.gen_range(d_lo..d_hi);
            let f = [0.85, 2.1, 5.0][rng.gen_range(0..3)];
            let noise = sample_shadowing(sigma, rng);
            (f, d, fspl(f, 1.0) + 10.0 * n * d.log10() + noise)
        })
        .collect()
}

fn unwrap_ci(params: ModelParams) -> CiParams {
    match params {
        ModelParams::Ci(p) => p,
        other => panic!("expected ci params, got {:?}", other.kind()),
    }
}

fn unwrap_ample(params: ModelParams) -> AmpleParams {
    match params {
        ModelParams::Ample(p) => p,
        other => panic!("expected ample params, got {:?}", other.kind()),
    }
}

// ---------------------------------------------------------------------------
// criteria
// ---------------------------------------------------------------------------

/// Analytic gradients match central finite differences to relative 1e-6 on
/// 100 random (params, dataset) pairs per model, 50 points each. Datasets
/// are drawn from the model family around the evaluation point so the NLL
/// stays within the finite-difference oracle's resolution.
fn criterion_1() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let perturb = |rng: &mut ChaCha8Rng, v: f64| v * rng.gen_range(0.8..1.2) + rng.gen_range(-0.5..0.5);
    for trial in 0..100 {
        // AMPLE
        let truth = AmpleParams {
            a: rng.gen_range(40.0..70.0),
            n: (0..4).map(|_| rng.gen_range(1.0..3.0)).collect(),
            x: rng.gen_range(0.0..0.5),
            gamma: rng.gen_range(0.0..2.5),
            sigma: rng.gen_range(0.5..6.0),
        };
        let lines: Vec<(LineMatrix, f64, f64)> = (0..50)
            .map(|_| {
                let line = random_line(&mut rng);
                let f = rng.gen_range(0.5..6.0);
                let l = predict_ample(&truth, &line, f).unwrap()
                    + sample_shadowing(truth.sigma, &mut rng);
                (line, f, l)
            })
            .collect();
        let data = AmpleFitData::from_lines(lines.iter().map(|(l, f, y)| (l, *f, *y)), 4)
            .map_err(|e| e.to_string())?;
        let params = AmpleParams {
            a: perturb(&mut rng, truth.a),
            n: truth.n.iter().map(|v| perturb(&mut rng, *v)).collect(),
            x: perturb(&mut rng, truth.x),
            gamma: perturb(&mut rng, truth.gamma),
            sigma: rng.gen_range(0.5..10.0),
        };
        let nll = nll_ample(&params, &data).map_err(|e| e.to_string())?;
        let analytic = grad_ample(&params, &data).map_err(|e| e.to_string())?;
        let theta: Vec<f64> = [params.a]
            .into_iter()
            .chain(params.n.iter().copied())
            .chain([params.x, params.gamma, params.sigma])
            .collect();
        let numeric = fd_grad(
            &|v: &[f64]| {
                nll_ample(
                    &AmpleParams {
                        a: v[0],
                        n: v[1..5].to_vec(),
                        x: v[5],
                        gamma: v[6],
                        sigma: v[7],
                    },
                    &data,
                )
                .unwrap()
            },
            &theta,
        );
        check_grad(&analytic, &numeric, nll, &format!("ample trial {trial}"))?;

        // CI
        let (n_true, sigma_true) = (rng.gen_range(1.5..4.0), rng.gen_range(0.5..8.0));
        let rows = ci_rows(&mut rng, 50, n_true, sigma_true, 10.0, 900.0);
        let data = CiFitData::from_observations(rows, 1.0).map_err(|e| e.to_string())?;
        let p = CiParams {
            n: perturb(&mut rng, n_true),
            sigma: rng.gen_range(0.5..10.0),
            d0: 1.0,
        };
        let nll = nll_ci(&p, &data).map_err(|e| e.to_string())?;
        let analytic = grad_ci(&p, &data).map_err(|e| e.to_string())?;
        let numeric = fd_grad(
            &|v: &[f64]| nll_ci(&CiParams { n: v[0], sigma: v[1], d0: 1.0 }, &data).unwrap(),
            &[p.n, p.sigma],
        );
        check_grad(&analytic, &numeric, nll, &format!("ci trial {trial}"))?;

        // ABG
        let truth = AbgParams {
            alpha: rng.gen_range(1.5..4.5),
            beta: rng.gen_range(10.0..50.0),
            gamma: rng.gen_range(0.0..2.5),
            sigma: rng.gen_range(0.5..6.0),
        };
        let rows: Vec<(f64, f64, f64)> = (0..50)
            .map(|_| {
                let f = rng.gen_range(0.5..6.0);
                let d = rng.gen_range(5.0..1200.0);
                let l = predict_abg(&truth, f, d) + sample_shadowing(truth.sigma, &mut rng);
                (f, d, l)
            })
            .collect();
        let data = AbgFitData::from_observations(rows).map_err(|e| e.to_string())?;
        let p = AbgParams {
            alpha: perturb(&mut rng, truth.alpha),
            beta: perturb(&mut rng, truth.beta),
            gamma: perturb(&mut rng, truth.gamma),
            sigma: rng.gen_range(0.5..10.0),
        };
        let nll = nll_abg(&p, &data).map_err(|e| e.to_string())?;
        let analytic = grad_abg(&p, &data).map_err(|e| e.to_string())?;
        let numeric = fd_grad(
            &|v: &[f64]| {
                nll_abg(
                    &AbgParams { alpha: v[0], beta: v[1], gamma: v[2], sigma: v[3] },
                    &data,
                )
                .unwrap()
            },
            &[p.alpha, p.beta, p.gamma, p.sigma],
        );
        check_grad(&analytic, &numeric, nll, &format!("abg trial {trial}"))?;
    }
    Ok("3 models x 100 random pairs x 50 points, rel tol 1e-6".into())
}

/// Gradient-descent CI fits agree with the independent closed form on 100
/// random datasets: |dn| < 1e-3, |dsigma| < 1e-2.
fn criterion_2() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut max_dn = 0.0f64;
    let mut max_ds = 0.0f64;
    for trial in 0..100 {
        let z = rng.gen_range(80..600);
        let n = rng.gen_range(1.5..4.0);
        let sigma = rng.gen_range(1.0..10.0);
        let rows = ci_rows(&mut rng, z, n, sigma, 15.0, 1200.0);
        let data = CiFitData::from_observations(rows, 1.0).map_err(|e| e.to_string())?;
        // Small datasets contract the sigma mode slowly (step * 2Z / sigma^2
        // per iteration); give the descent a budget that reaches the stated
        // tolerance instead of comparing a half-converged iterate.
        let mut cfg = FitConfig::ci_default(1.0);
        cfg.max_iters = 10_000_000;
        let gd = unwrap_ci(fit_ci(&data, &cfg).map_err(|e| e.to_string())?.params);
        let cf = fit_ci_closed_form(&data).map_err(|e| e.to_string())?;
        let dn = (gd.n - cf.n).abs();
        let ds = (gd.sigma - cf.sigma).abs();
        max_dn = max_dn.max(dn);
        max_ds = max_ds.max(ds);
        if dn >= 1e-3 || ds >= 1e-2 {
            return Err(format!("trial {trial}: dn {dn}, dsigma {ds}"));
        }
    }
    Ok(format!("100 datasets, max |dn| {max_dn:.2e}, max |dsigma| {max_ds:.2e}"))
}

/// Synthetic CI data at n = 2.26, sigma = 5.06, 12,000 points over
/// 30-800 m: fitted n within 0.03, sigma within 0.15.
fn criterion_3() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let rows = ci_rows(&mut rng, 12_000, 2.26, 5.06, 30.0, 800.0);
    let data = CiFitData::from_observations(rows, 1.0).map_err(|e| e.to_string())?;
    let fit = unwrap_ci(fit_ci(&data, &FitConfig::ci_default(1.0)).map_err(|e| e.to_string())?.params);
    if (fit.n - 2.26).abs() > 0.03 {
        return Err(format!("n {} not within 0.03 of 2.26", fit.n));
    }
    if (fit.sigma - 5.06).abs() > 0.15 {
        return Err(format!("sigma {} not within 0.15 of 5.06", fit.sigma));
    }
    Ok(format!("n {:.4} (truth 2.26), sigma {:.4} (truth 5.06)", fit.n, fit.sigma))
}

fn uma_recipe(seed_shift: u64) -> MapRecipe {
    MapRecipe {
        width: 240,
        height: 240,
        cell_size: 5.0,
        origin: GeoPoint::new(53.37 + seed_shift as f64 * 0.02, -1.50),
        block_cells: 8,
        street_cells: 4,
        building_fill: 0.25,
        foliage_patches: 12,
        water_patches: 4,
    }
}

fn uma_spec(truth: AmpleParams, seed: u64, res: f64, city: &str) -> SynthSpec {
    let recipe = uma_recipe(seed % 7);
    let tx = GeoPoint::new(recipe.origin.lat + 0.0054, recipe.origin.lon + 0.0091);
    SynthSpec {
        map: MapSource::Recipe(recipe),
        tx,
        tx_height_m: 30.0,
        rx_height_m: 1.5,
        rx_resolution_m: res,
        freqs_ghz: vec![0.85, 2.1, 5.0],
        true_params: ModelParams::Ample(truth),
        seed,
        d0: 1.0,
        city: city.to_string(),
    }
}

/// Noise-free AMPLE data reaches at-least-true-params likelihood and
/// sub-0.1 dB predictive error; noisy data recovers sigma and validates at
/// the noise floor.
fn criterion_4() -> Result<String, String> {
    let preset = builtin_ample(Scenario::Uma, Los::Nlos);

    // Noise-free, 5,000 links.
    let mut truth0 = preset.clone();
    truth0.sigma = 0.0;
    let (map, data, _) = generate_dataset(&uma_spec(truth0, 404, 24.0, "clean"))
        .map_err(|e| e.to_string())?;
    if data.len() < 5_000 {
        return Err(format!("noise-free dataset too small: {}", data.len()));
    }
    let points = &data.points()[..5_000];
    let features = AmpleFitData::from_samples(&map, points, 1.0).map_err(|e| e.to_string())?;
    let nll_true = nll_ample(&preset, &features).map_err(|e| e.to_string())?;
    let cfg = FitConfig::new(ModelParams::Ample(preset.clone()));
    let fit = fit_ample(&features, &cfg).map_err(|e| e.to_string())?;
    if fit.final_nll > nll_true + 1e-6 {
        return Err(format!("fitted NLL {} above true-params NLL {}", fit.final_nll, nll_true));
    }
    let fitted = unwrap_ample(fit.params);
    let mut sq = 0.0;
    for p in points {
        let line = p.line.as_ref().expect("synth caches lines");
        let pred = predict_ample(&fitted, line, p.freq_ghz).map_err(|e| e.to_string())?;
        sq += (pred - p.path_loss_db) * (pred - p.path_loss_db);
    }
    let rmse_truth = (sq / points.len() as f64).sqrt();
    if rmse_truth >= 0.1 {
        return Err(format!("noise-free prediction rmse {rmse_truth} dB >= 0.1"));
    }

    // Noisy, 50,000 links, plus an independent validation city.
    let (map_n, data_n, _) = generate_dataset(&uma_spec(preset.clone(), 405, 7.5, "fitcity"))
        .map_err(|e| e.to_string())?;
    if data_n.len() < 50_000 {
        return Err(format!("noisy dataset too small: {}", data_n.len()));
    }
    let points_n = &data_n.points()[..50_000];
    let features_n =
        AmpleFitData::from_samples(&map_n, points_n, 1.0).map_err(|e| e.to_string())?;
    let fit_n = fit_ample(&features_n, &cfg).map_err(|e| e.to_string())?;
    let fitted_n = unwrap_ample(fit_n.params);
    if (fitted_n.sigma - 9.53).abs() > 0.3 {
        return Err(format!("fitted sigma {} not within 0.3 of 9.53", fitted_n.sigma));
    }

    let (_, data_v, _) = generate_dataset(&uma_spec(preset.clone(), 406, 12.0, "valcity"))
        .map_err(|e| e.to_string())?;
    let mut sq = 0.0;
    for p in data_v.points() {
        let line = p.line.as_ref().expect("synth caches lines");
        let pred = predict_ample(&fitted_n, line, p.freq_ghz).map_err(|e| e.to_string())?;
        sq += (pred - p.path_loss_db) * (pred - p.path_loss_db);
    }
    let rmse_val = (sq / data_v.len() as f64).sqrt();
    if !(0.95 * 9.53..=1.05 * 9.53).contains(&rmse_val) {
        return Err(format!("validation rmse {rmse_val} outside [{}, {}]", 0.95 * 9.53, 1.05 * 9.53));
    }
    Ok(format!(
        "noise-free rmse {rmse_truth:.2e} dB; fitted sigma {:.3}; validation rmse {rmse_val:.3}",
        fitted_n.sigma
    ))
}

/// 1,000 random links over 10 random maps: segment lengths match the 1 cm
/// sampling oracle within a cell diagonal, totals match ground distance to
/// 1e-6 relative, penetration counts match the oracle's face count.
fn criterion_5() -> Result<String, String> {
    let d0 = 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut excused = 0usize;
    for map_idx in 0..10 {
        let map = random_map(1000 + map_idx, 0.1 + 0.04 * map_idx as f64);
        let diagonal = map.cell_size() * 2.0f64.sqrt();
        for link in 0..100 {
            let (a, b, ground) = loop {
                let ax = rng.gen_range(0.02..0.98) * map.extent_x();
                let ay = rng.gen_range(0.02..0.98) * map.extent_y();
                let bx = rng.gen_range(0.02..0.98) * map.extent_x();
                let by = rng.gen_range(0.02..0.98) * map.extent_y();
                let ground = (ax - bx).hypot(ay - by);
                if ground > 5.0 {
                    break (map.grid_to_geo(ax, ay), map.grid_to_geo(bx, by), ground);
                }
            };
            let line = map.trace_line(a, b, d0).map_err(|e| e.to_string())?;
            let label = format!("map {map_idx} link {link}");

            let sum: f64 = line.segments.iter().map(|s| s.length).sum();
            if (sum - ground).abs() > 1e-6 * ground.max(1.0) {
                return Err(format!("{label}: length sum {sum} vs ground {ground}"));
            }

            let oracle = rle_oracle(&map, a, b);
            let traced: Vec<(u8, f64)> =
                line.segments[1..].iter().map(|s| (s.region, s.length)).collect();
            let sampled: Vec<(u8, f64)> =
                cut_runs(&oracle, d0).iter().map(|(c, l)| (c.index(), *l)).collect();
            compare_runs(
                &normalize_runs(&traced, diagonal),
                &normalize_runs(&sampled, diagonal),
                diagonal,
            )
            .map_err(|e| format!("{label}: {e}"))?;

            let p_oracle = penetrations_from_runs(&oracle, 0.02);
            if line.penetrations != p_oracle {
                // The oracle is blind below its sampling scale; excuse a
                // mismatch only when a genuinely sub-resolution run exists.
                if oracle.iter().any(|(_, l)| *l < 0.05) {
                    excused += 1;
                } else {
                    return Err(format!(
                        "{label}: penetrations {} vs oracle {p_oracle}",
                        line.penetrations
                    ));
                }
            }
        }
    }
    if excused > 10 {
        return Err(format!("{excused} sub-resolution penetration excuses (max 10)"));
    }
    Ok(format!("1000 links, 10 maps, {excused} sub-resolution excuses"))
}

/// Self-evaluation identities, the analytic two-normal PMDE overlap, and the
/// two-point AHRE hand case.
fn criterion_6() -> Result<String, String> {
    // Self-evaluation on a noise-free synthetic CI dataset.
    let spec = SynthSpec {
        map: MapSource::Recipe(uma_recipe(1)),
        tx: GeoPoint::new(53.39 + 0.0054, -1.50 + 0.0091),
        tx_height_m: 30.0,
        rx_height_m: 1.5,
        rx_resolution_m: 18.0,
        freqs_ghz: vec![2.1],
        true_params: ModelParams::Ci(CiParams { n: 2.26, sigma: 0.0, d0: 1.0 }),
        seed: 606,
        d0: 1.0,
        city: "self".into(),
    };
    let (_, data, _) = generate_dataset(&spec).map_err(|e| e.to_string())?;
    let truth = CiParams { n: 2.26, sigma: 0.0, d0: 1.0 };
    let preds: Vec<f64> = data
        .points()
        .iter()
        .map(|p| predict_ci(&truth, p.freq_ghz, p.distance3d).unwrap())
        .collect();
    let refs = data.path_losses();
    let r = rmse(&preds, &refs).map_err(|e| e.to_string())?;
    let m = mae(&preds, &refs).map_err(|e| e.to_string())?;
    let a = ahre(&preds, &refs, &ThrRange::los_default()).map_err(|e| e.to_string())?;
    if r != 0.0 || m != 0.0 || a != 0.0 {
        return Err(format!("self-evaluation not exact: rmse {r}, mae {m}, ahre {a}"));
    }
    let p_self = pmde(&preds, &refs).map_err(|e| e.to_string())?;
    if p_self.value >= 0.02 {
        return Err(format!("self-evaluation pmde {}", p_self.value));
    }

    // Analytic overlap: unit normals one sigma apart integrate |f-g| to
    // 2 (2 Phi(1/2) - 1).
    let phi = statrs::distribution::Normal::new(0.0, 1.0).unwrap();
    let analytic = 2.0 * (2.0 * phi.cdf(0.5) - 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(607);
    let da = rand_distr::Normal::new(0.0, 1.0).unwrap();
    let db = rand_distr::Normal::new(1.0, 1.0).unwrap();
    let xs: Vec<f64> = (0..100_000).map(|_| da.sample(&mut rng)).collect();
    let ys: Vec<f64> = (0..100_000).map(|_| db.sample(&mut rng)).collect();
    let overlap = pmde(&xs, &ys).map_err(|e| e.to_string())?;
    if (overlap.value - analytic).abs() > 0.01 {
        return Err(format!("pmde {} vs analytic {analytic}", overlap.value));
    }

    // Two-point AHRE hand case.
    let hand = ahre(&[95.0, 105.0], &[105.0, 95.0], &ThrRange::new(100.0, 100.0, 1.0).unwrap())
        .map_err(|e| e.to_string())?;
    if hand != 100.0 {
        return Err(format!("two-point ahre {hand} != 100"));
    }
    Ok(format!(
        "self-eval exact; pmde {:.4} vs analytic {:.4}; hand ahre exact",
        overlap.value, analytic
    ))
}

/// Each candidate family, self-sampled at 1e5 points over 100 seeds, wins
/// the AIC selection (or loses only to a family that nests it) at least 95
/// times.
fn criterion_7() -> Result<String, String> {
    type Sampler = Box<dyn Fn(&mut ChaCha8Rng) -> f64>;
    let families: Vec<(Family, Vec<Family>, Sampler)> = vec![
        // A Ricean with nu >> sigma is statistically indistinguishable from a
        // positive normal at this sample size, so the normal sample has a
        // spread that reaches non-positive values; real-line support is what
        // separates the normal family within this candidate set.
        (Family::Normal, vec![], {
            let d = rand_distr::Normal::new(100.0, 25.0).unwrap();
            Box::new(move |rng| d.sample(rng))
        }),
        (Family::LogNormal, vec![], {
            let d = rand_distr::LogNormal::new(1.0, 0.5).unwrap();
            Box::new(move |rng| d.sample(rng))
        }),
        (Family::Gamma, vec![], {
            let d = rand_distr::Gamma::new(3.0, 1.5).unwrap();
            Box::new(move |rng| d.sample(rng))
        }),
        (Family::Weibull, vec![], {
            let d = rand_distr::Weibull::new(10.0, 1.7).unwrap();
            Box::new(move |rng| d.sample(rng))
        }),
        // Weibull(shape 2) and Ricean(nu 0) both nest Rayleigh.
        (Family::Rayleigh, vec![Family::Weibull, Family::Ricean], {
            Box::new(move |rng| 3.0 * (-2.0 * (1.0 - rng.gen::<f64>()).ln()).sqrt())
        }),
        (Family::Ricean, vec![], {
            let d = rand_distr::Normal::new(0.0, 2.0).unwrap();
            Box::new(move |rng| {
                let a: f64 = 5.0 + d.sample(rng);
                let b: f64 = d.sample(rng);
                a.hypot(b)
            })
        }),
        // Chi-square is gamma with shape k/2, scale 2.
        (Family::ChiSquare, vec![Family::Gamma], {
            let d = rand_distr::ChiSquared::new(5.0).unwrap();
            Box::new(move |rng| d.sample(rng))
        }),
    ];

    let mut summary = Vec::new();
    for (family, allowed, sampler) in &families {
        let mut wins = 0;
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(7_000 + seed * 7 + *family as u64);
            let data: Vec<f64> = (0..100_000).map(|_| sampler(&mut rng)).collect();
            let best = fit_best_distribution(&data).map_err(|e| e.to_string())?;
            if best.family == *family || allowed.contains(&best.family) {
                wins += 1;
            }
        }
        if wins < 95 {
            return Err(format!("{family}: only {wins}/100 selections"));
        }
        summary.push(format!("{family} {wins}"));
    }
    Ok(summary.join(", "))
}

/// On NLOS-dominated synthetic data with heterogeneous region exponents,
/// the environment-aware fit validates strictly better than CI and ABG,
/// across 10 seeds.
fn criterion_8() -> Result<String, String> {
    let truth = builtin_ample(Scenario::Umi, Los::Nlos);
    let mut margins = Vec::new();
    for seed in 0..10u64 {
        // Dense blocks plus plenty of small foliage patches: the region mix
        // actually varies link to link, which is the regime the
        // environment-aware model is for.
        let origin_lat = 51.48 + seed as f64 * 0.015;
        let umi_recipe = MapRecipe {
            width: 150,
            height: 150,
            cell_size: 5.0,
            origin: GeoPoint::new(origin_lat, -0.16),
            block_cells: 10,
            street_cells: 2,
            building_fill: 0.45,
            foliage_patches: 220,
            water_patches: 16,
        };
        let make = |s: u64, city: &str| SynthSpec {
            map: MapSource::Recipe(umi_recipe.clone()),
            tx: GeoPoint::new(origin_lat + 0.0034, -0.16 + 0.0055),
            tx_height_m: 15.0,
            rx_height_m: 1.5,
            rx_resolution_m: 10.0,
            freqs_ghz: vec![0.85, 2.1, 5.0],
            true_params: ModelParams::Ample(truth.clone()),
            seed: s,
            d0: 1.0,
            city: city.to_string(),
        };
        let (map_e, data_e, _) = generate_dataset(&make(800 + seed, "extract"))
            .map_err(|e| e.to_string())?;
        let (_, data_v, _) = generate_dataset(&make(900 + seed, "validate"))
            .map_err(|e| e.to_string())?;

        let nlos_only = |data: &RawDataset| -> Vec<ample_core::SamplePoint> {
            data.points()
                .iter()
                .filter(|p| p.los == Some(Los::Nlos))
                .cloned()
                .collect()
        };
        let ex = nlos_only(&data_e);
        let va = nlos_only(&data_v);
        if ex.len() < 2_000 || va.len() < 2_000 {
            return Err(format!("seed {seed}: too few NLOS links ({}, {})", ex.len(), va.len()));
        }

        // Fit all three models on the extraction city. The AMPLE start is a
        // different environment's preset, so the descent has real work to do;
        // it also gets a budget that actually reaches the gradient tolerance,
        // since iteration cost is independent of the dataset size.
        let ample_features =
            AmpleFitData::from_samples(&map_e, &ex, 1.0).map_err(|e| e.to_string())?;
        let mut ample_cfg = FitConfig::new(ModelParams::Ample(builtin_ample(Scenario::Umi, Los::Los)));
        ample_cfg.max_iters = 10_000_000;
        let ample_fit = unwrap_ample(
            fit_ample(&ample_features, &ample_cfg).map_err(|e| e.to_string())?.params,
        );
        let ci_features = CiFitData::from_samples(&ex, 1.0).map_err(|e| e.to_string())?;
        let ci_fit = unwrap_ci(
            fit_ci(&ci_features, &FitConfig::ci_default(1.0)).map_err(|e| e.to_string())?.params,
        );
        let abg_features = AbgFitData::from_samples(&ex).map_err(|e| e.to_string())?;
        let abg_fit = match fit_abg(&abg_features, &FitConfig::abg_default())
            .map_err(|e| e.to_string())?
            .params
        {
            ModelParams::Abg(p) => p,
            _ => unreachable!(),
        };

        // Validate on the other city.
        let mut sq = [0.0f64; 3];
        for p in &va {
            let line = p.line.as_ref().expect("synth caches lines");
            let pa = predict_ample(&ample_fit, line, p.freq_ghz).map_err(|e| e.to_string())?;
            let pc = predict_ci(&ci_fit, p.freq_ghz, p.distance3d).map_err(|e| e.to_string())?;
            let pb = ample_core::models::predict_abg(&abg_fit, p.freq_ghz, p.distance3d);
            sq[0] += (pa - p.path_loss_db).powi(2);
            sq[1] += (pc - p.path_loss_db).powi(2);
            sq[2] += (pb - p.path_loss_db).powi(2);
        }
        let z = va.len() as f64;
        let (r_ample, r_ci, r_abg) = ((sq[0] / z).sqrt(), (sq[1] / z).sqrt(), (sq[2] / z).sqrt());
        if !(r_ample < r_ci && r_ample < r_abg) {
            return Err(format!(
                "seed {seed}: ample {r_ample:.3} vs ci {r_ci:.3}, abg {r_abg:.3}"
            ));
        }
        margins.push(r_ci.min(r_abg) - r_ample);
    }
    let min_margin = margins.iter().fold(f64::INFINITY, |a, b| a.min(*b));
    Ok(format!("10 seeds, min margin {min_margin:.3} dB"))
}
