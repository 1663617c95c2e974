use std::f64::consts::TAU;

use rayon::prelude::*;
use serde_json::json;

use crate::analytics::{
    f_corrected_with_delta, f_encoded, f_physical, fit_error_curve, fit_line, fit_sinusoid,
    fit_sinusoid_free, lambda_ratio, pure_fidelity, ErrorFit, FitKind, FitPoint,
};
use crate::channels::{dephasing_params, error_operator_set, MU_B_OVER_HBAR};
use crate::code::{hamming_saturation, kl_conditions, prepare_logical, spin_cat_codewords, LogicalQubit};
use crate::error::{Error, Result};
use crate::linalg::c;
use crate::rng::{derive_seed, substream};
use crate::spinops::{Basis, SpinManifold};
use crate::state::{DensityMatrix, Ket};
use crate::tomography::{
    bootstrap_fidelity, complete_settings, measurement_map_rank, mle_reconstruct, projector_set,
    simulate_measurements, standard_settings, MeasurementSetting,
};

use super::config::{ExperimentConfig, ExperimentKind, FidelityPath, SettingGrid};
use super::pipeline::{PointOutcome, Series, SeriesKind};
use super::record::{Provenance, RunRecord, Table};

const TOMO_TAG: u64 = 0x746f_6d6f;
const LAMBDA_TAG: u64 = 0x6c61_6d62;
const BOOTSTRAP_DATASETS: u64 = 8;

pub fn run(cfg: &ExperimentConfig) -> Result<RunRecord> {
    match cfg.experiment {
        ExperimentKind::Fig3Sweep => run_fig3_sweep(cfg),
        ExperimentKind::PhaseSweep => run_phase_sweep(cfg),
        ExperimentKind::Breakeven => run_breakeven(cfg),
        ExperimentKind::ErasureScan => run_erasure_scan(cfg),
        ExperimentKind::KlReport => run_kl_report(cfg),
        ExperimentKind::TomoCalibration => run_tomo_calibration(cfg),
    }
}

fn record(cfg: &ExperimentConfig, tables: Vec<Table>, summary: serde_json::Value) -> Result<RunRecord> {
    Ok(RunRecord { experiment: cfg.experiment.name().into(), provenance: Provenance::new(cfg)?, tables, summary })
}

fn settings(grid: SettingGrid) -> Vec<MeasurementSetting> {
    match grid {
        SettingGrid::Standard => standard_settings(),
        SettingGrid::Complete => complete_settings(),
    }
}

/// Error and its uncertainty for one point, via the configured fidelity path.
struct Evaluated {
    outcome: PointOutcome,
    error: f64,
    sigma: f64,
}

fn evaluate(cfg: &ExperimentConfig, series: &Series, sigma_phi: f64, delay: f64, point: u64) -> Result<Evaluated> {
    let seed = cfg.seed()?;
    let outcome = series.run_point(sigma_phi, delay, cfg.trials, seed, point)?;
    match cfg.fidelity_path {
        FidelityPath::Oracle => {
            let (error, sigma) = (outcome.error(), outcome.fidelity_sigma);
            Ok(Evaluated { outcome, error, sigma })
        }
        FidelityPath::Realistic => {
            let m = *series.manifold();
            let rho = DensityMatrix::from_matrix(outcome.rho.clone(), Basis::Spin(m))?;
            let grid = settings(cfg.tomography.settings);
            let groups = projector_set(&m, &grid)?;
            let mut rng = substream(seed, &[TOMO_TAG, series.kind as u64, point]);
            let recs = simulate_measurements(&rho, &groups, cfg.tomography.shots, &mut rng, cfg.tomography.readout_error)?;
            let fit = mle_reconstruct(&m, &recs)?;
            let ideal = Ket::new(series.target().clone(), Basis::Spin(m))?;
            let f = pure_fidelity(&fit.rho_est, &ideal)?;
            let boot = bootstrap_fidelity(
                &fit.rho_est,
                &ideal.to_density(),
                &grid,
                cfg.tomography.shots,
                cfg.tomography.bootstrap_resamples,
                derive_seed(seed, &[TOMO_TAG, series.kind as u64, point, 1]),
                false,
            )?;
            Ok(Evaluated { outcome, error: 1.0 - f, sigma: boot.sigma })
        }
    }
}

fn series_list(cfg: &ExperimentConfig) -> Result<Vec<Series>> {
    let mut kinds = vec![SeriesKind::Physical, SeriesKind::Uncorrected];
    if cfg.correction.enabled {
        kinds.push(SeriesKind::Corrected);
    }
    kinds.into_iter().map(|k| Series::new(k, cfg)).collect()
}

/// Analytic error for a series, with the configured offset injected.
fn theory_error(cfg: &ExperimentConfig, series: &Series, chi: f64) -> Result<f64> {
    let g = series.g_j();
    let f = match series.kind {
        SeriesKind::Physical => f_physical(chi, g),
        SeriesKind::Uncorrected => f_encoded(chi, g),
        SeriesKind::Corrected if cfg.correction.second_order => return Ok(f64::NAN),
        SeriesKind::Corrected => f_corrected_with_delta(chi, cfg.control_delta()?, g),
    };
    Ok(1.0 - series.inject_offset(f))
}

pub fn run_fig3_sweep(cfg: &ExperimentConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let grid = cfg.fig3_grid();
    let mut table = Table::new(
        "fig3_sweep",
        &["sigma_phi_over_gJ", "series", "error", "error_sigma", "n_trials", "n_erasures", "chi", "theory", "model"],
    );
    let mut agreement = serde_json::Map::new();
    for series in series_list(cfg)? {
        let (mut max_z, mut max_z_model): (f64, f64) = (0.0, 0.0);
        for (i, &x) in grid.iter().enumerate() {
            let chi = 0.5 * x * x;
            let ev = evaluate(cfg, &series, x * series.g_j(), cfg.correction.delay, i as u64)?;
            let theory = theory_error(cfg, &series, chi)?;
            let model = 1.0 - series.oracle_fidelity(x * series.g_j())?;
            if ev.sigma > 0.0 {
                if theory.is_finite() {
                    max_z = max_z.max((ev.error - theory).abs() / ev.sigma);
                }
                max_z_model = max_z_model.max((ev.error - model).abs() / ev.sigma);
            }
            table.push(vec![
                x.into(),
                series.kind.label().into(),
                ev.error.into(),
                ev.sigma.into(),
                ev.outcome.n_trials.into(),
                ev.outcome.erased.into(),
                chi.into(),
                theory.into(),
                model.into(),
            ]);
        }
        agreement.insert(series.kind.label().into(), json!({ "max_abs_z": max_z, "max_abs_z_model": max_z_model }));
    }
    let summary = json!({ "delta": cfg.control_delta()?, "agreement": agreement });
    record(cfg, vec![table], summary)
}

pub fn run_phase_sweep(cfg: &ExperimentConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let x = cfg.phase.sigma_phi_over_gj;
    let chi = 0.5 * x * x;
    let n = cfg.phase.points;
    let mut table = Table::new("phase_sweep", &["phi_c", "error", "error_sigma", "n_trials", "n_erasures"]);
    let (mut phis, mut errs, mut sigmas) = (Vec::new(), Vec::new(), Vec::new());
    for k in 0..n {
        let phi = TAU * k as f64 / n as f64;
        let series = Series::new(SeriesKind::Corrected, cfg)?.with_phi_c(cfg, phi)?;
        let ev = evaluate(cfg, &series, x * series.g_j(), cfg.correction.delay, k as u64)?;
        table.push(vec![phi.into(), ev.error.into(), ev.sigma.into(), ev.outcome.n_trials.into(), ev.outcome.erased.into()]);
        phis.push(phi);
        errs.push(ev.error);
        sigmas.push(ev.sigma.max(1e-15));
    }
    let fixed = fit_sinusoid(&phis, &errs, &sigmas, 1.0)?;
    let free = fit_sinusoid_free(&phis, &errs, &sigmas, 0.5, 1.5)?;
    let series = Series::new(SeriesKind::Corrected, cfg)?;
    let reference = series.inject_offset(f_corrected_with_delta(chi, cfg.control_delta()?, series.g_j()));
    let optimum_fidelity = 1.0 - fixed.minimum();
    let summary = json!({
        "sigma_phi_over_gJ": x,
        "chi": chi,
        "fit": fixed,
        "fit_free_period": free,
        "period": free.period(),
        "period_sigma": free.period_sigma(),
        "optimum_phi_c": (fixed.phase + std::f64::consts::PI).rem_euclid(TAU),
        "optimum_fidelity": optimum_fidelity,
        "reference_fidelity": reference,
        "fit_failed": fixed.failed,
    });
    record(cfg, vec![table], summary)
}

fn chi_at(sigma_b: f64, t: f64) -> f64 {
    0.5 * (MU_B_OVER_HBAR * sigma_b * t).powi(2)
}

fn fit_json(fit: &ErrorFit) -> serde_json::Value {
    json!({
        "kind": fit.kind,
        "coefficient": fit.coefficient,
        "coefficient_sigma": fit.coefficient_sigma(),
        "offset": fit.offset,
        "offset_sigma": fit.offset_sigma(),
        "offset_fixed": fit.offset_fixed,
        "covariance": fit.covariance,
        "chi_squared": fit.chi_squared,
        "aic": fit.aic(),
    })
}

pub fn run_breakeven(cfg: &ExperimentConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let seed = cfg.seed()?;
    let delays = cfg.delay_grid();
    let sigma_b = cfg.noise.sigma_b;
    let mut table = Table::new(
        "breakeven",
        &["t_seconds", "chi", "series", "error", "error_sigma", "n_trials", "n_erasures"],
    );
    let mut points: Vec<(SeriesKind, Vec<FitPoint>)> = Vec::new();
    for series in series_list(cfg)? {
        let mut pts = Vec::new();
        for (i, &t) in delays.iter().enumerate() {
            let chi = chi_at(sigma_b, t);
            let sigma_phi = series.g_j() * MU_B_OVER_HBAR * sigma_b * t;
            let ev = evaluate(cfg, &series, sigma_phi, t, i as u64)?;
            table.push(vec![
                t.into(),
                chi.into(),
                series.kind.label().into(),
                ev.error.into(),
                ev.sigma.into(),
                ev.outcome.n_trials.into(),
                ev.outcome.erased.into(),
            ]);
            pts.push(FitPoint { t, chi, epsilon: ev.error, sigma: ev.sigma.max(1e-12) });
        }
        points.push((series.kind, pts));
    }
    let get = |k: SeriesKind| points.iter().find(|(s, _)| *s == k).map(|(_, p)| p.as_slice());
    let physical = fit_error_curve(get(SeriesKind::Physical).expect("physical series"), FitKind::Linear)?;
    let uncorrected = fit_error_curve(get(SeriesKind::Uncorrected).expect("uncorrected series"), FitKind::Linear)?;
    let mut fits = serde_json::Map::new();
    fits.insert("physical".into(), fit_json(&physical));
    fits.insert("uncorrected".into(), fit_json(&uncorrected));

    let mut lambda_table = Table::new(
        "lambda",
        &["epsilon", "lambda", "lambda_lo", "lambda_hi", "tau_physical", "tau_logical", "flag"],
    );
    let mut ratio = json!(null);
    if let Some(cor) = get(SeriesKind::Corrected) {
        let quad = fit_error_curve(cor, FitKind::Quadratic)?;
        let cubic = fit_error_curve(cor, FitKind::Cubic)?;
        fits.insert("corrected".into(), fit_json(&quad));
        fits.insert("corrected_cubic".into(), fit_json(&cubic));
        let logical = if cfg.correction.second_order { &cubic } else { &quad };
        let noise = dephasing_params(sigma_b, 0.0, cfg.physical.g_j)?;
        let lam = lambda_ratio(
            logical,
            &physical,
            &cfg.analysis.epsilon_grid,
            cfg.analysis.resamples,
            &noise,
            derive_seed(seed, &[LAMBDA_TAG]),
        );
        for p in lam {
            match p.result {
                Some(r) => lambda_table.push(vec![
                    p.epsilon.into(),
                    r.lambda.into(),
                    r.lambda_lo.into(),
                    r.lambda_hi.into(),
                    r.tau_physical.into(),
                    r.tau_logical.into(),
                    "".into(),
                ]),
                None => lambda_table.push(vec![
                    p.epsilon.into(),
                    f64::NAN.into(),
                    f64::NAN.into(),
                    f64::NAN.into(),
                    f64::NAN.into(),
                    f64::NAN.into(),
                    p.flag.unwrap_or_default().into(),
                ]),
            }
        }
        let phys = get(SeriesKind::Physical).expect("physical series");
        let best = phys
            .iter()
            .zip(cor)
            .map(|(p, c)| {
                let r = p.epsilon / c.epsilon;
                let s = r * ((p.sigma / p.epsilon).powi(2) + (c.sigma / c.epsilon).powi(2)).sqrt();
                (p.t, r, s)
            })
            .max_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((t, r, s)) = best {
            ratio = json!({ "t_seconds": t, "ratio": r, "ratio_sigma": s });
        }
    }
    let summary = json!({ "sigma_b": sigma_b, "fits": fits, "peak_error_ratio": ratio });
    record(cfg, vec![table, lambda_table], summary)
}

pub fn run_erasure_scan(cfg: &ExperimentConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let delays = cfg.delay_grid();
    let sigma_b = cfg.noise.sigma_b;
    let series = Series::new(SeriesKind::Corrected, cfg)?;
    let mut table = Table::new("erasure_scan", &["t_seconds", "erasure_fraction", "erasure_sigma", "n_trials", "n_erasures"]);
    let (mut ts, mut fs, mut ss) = (Vec::new(), Vec::new(), Vec::new());
    for (i, &t) in delays.iter().enumerate() {
        let sigma_phi = series.g_j() * MU_B_OVER_HBAR * sigma_b * t;
        let out = series.run_point(sigma_phi, t, cfg.trials, cfg.seed()?, i as u64)?;
        table.push(vec![
            t.into(),
            out.erasure_fraction.into(),
            out.erasure_sigma.into(),
            out.n_trials.into(),
            out.erased.into(),
        ]);
        ts.push(t);
        fs.push(out.erasure_fraction);
        ss.push(out.erasure_sigma.max(1e-12));
    }
    let fit = fit_line(&ts, &fs, &ss)?;
    let max = fs.iter().copied().fold(0.0, f64::max);
    let summary = json!({
        "heating_rate": cfg.correction.heating_rate,
        "residual_excitation": cfg.correction.residual_excitation,
        "slope": fit.slope,
        "slope_sigma": fit.slope_sigma(),
        "intercept": fit.intercept,
        "fit": fit,
        "max_erasure_fraction": max,
    });
    record(cfg, vec![table], summary)
}

pub fn run_kl_report(cfg: &ExperimentConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let m = SpinManifold::new(cfg.logical.j, cfg.logical.g_j)?;
    let pair = spin_cat_codewords(&m)?;
    let mut table = Table::new(
        "kl_report",
        &["max_order", "j", "k", "zero_zero", "one_one", "zero_one_abs", "exact_zero_zero", "exact_one_one", "satisfied"],
    );
    let mut orders = serde_json::Map::new();
    for &order in &cfg.kl.max_orders {
        let rep = kl_conditions(&pair, &error_operator_set(&m, order))?;
        for e in &rep.entries {
            let exact = |x: &Option<crate::code::Exact>| x.map_or(String::new(), |v| v.to_string());
            table.push(vec![
                order.into(),
                e.j.into(),
                e.k.into(),
                e.zero_zero.re.into(),
                e.one_one.re.into(),
                e.zero_one.norm().into(),
                exact(&e.exact_zero_zero).into(),
                exact(&e.exact_one_one).into(),
                e.satisfied.into(),
            ]);
        }
        orders.insert(
            order.to_string(),
            json!({ "satisfied": rep.satisfied, "violations": rep.violations().count() }),
        );
    }
    let hamming = hamming_saturation(&m, (m.twice_j() - 1) / 2)?;
    record(cfg, vec![table], json!({ "orders": orders, "hamming": hamming }))
}

/// One calibration reconstruction: fidelity, likelihood and monotonicity.
struct Calib {
    fidelity: f64,
    log_likelihood: f64,
    iterations: usize,
    converged: bool,
    monotone: bool,
}

pub fn run_tomo_calibration(cfg: &ExperimentConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let seed = cfg.seed()?;
    let m = SpinManifold::new(cfg.logical.j, cfg.logical.g_j)?;
    let q = LogicalQubit::new(c(cfg.state.alpha[0], cfg.state.alpha[1]), c(cfg.state.beta[0], cfg.state.beta[1]))?;
    let psi = prepare_logical(&q, &m)?;
    let truth = psi.to_density();
    let grid = settings(cfg.tomography.settings);
    let groups = projector_set(&m, &grid)?;
    let t = &cfg.tomography;
    let reconstruct = |shots: u64, s: u64| -> Result<(Calib, DensityMatrix)> {
        let mut rng = substream(seed, &[TOMO_TAG, shots, s]);
        let recs = simulate_measurements(&truth, &groups, shots, &mut rng, t.readout_error)?;
        let fit = mle_reconstruct(&m, &recs)?;
        let monotone = fit.history.windows(2).all(|w| w[1] >= w[0]);
        let cal = Calib {
            fidelity: pure_fidelity(&fit.rho_est, &psi)?,
            log_likelihood: fit.log_likelihood,
            iterations: fit.iterations,
            converged: fit.converged,
            monotone,
        };
        Ok((cal, fit.rho_est))
    };
    let runs: Vec<(Calib, DensityMatrix)> =
        (0..t.seeds as u64).into_par_iter().map(|s| reconstruct(t.shots, s)).collect::<Result<_>>()?;
    let mut table = Table::new("tomo_calibration", &["seed_index", "fidelity", "log_likelihood", "iterations", "converged", "monotone"]);
    for (i, (cal, _)) in runs.iter().enumerate() {
        table.push(vec![
            i.into(),
            cal.fidelity.into(),
            cal.log_likelihood.into(),
            cal.iterations.into(),
            cal.converged.into(),
            cal.monotone.into(),
        ]);
    }
    let mut fids: Vec<f64> = runs.iter().map(|(c, _)| c.fidelity).collect();
    fids.sort_by(f64::total_cmp);

    // Median bootstrap spread at `shots` and `4 * shots` over independent datasets.
    let boot = |shots: u64| -> Result<serde_json::Value> {
        let sigmas: Vec<f64> = (0..BOOTSTRAP_DATASETS)
            .into_par_iter()
            .map(|k| {
                let (_, rho_est) = reconstruct(shots, u64::MAX - k)?;
                let seed = derive_seed(seed, &[TOMO_TAG, shots, k]);
                Ok(bootstrap_fidelity(&rho_est, &truth, &grid, shots, t.bootstrap_resamples, seed, false)?.sigma)
            })
            .collect::<Result<_>>()?;
        Ok(json!({ "shots": shots, "sigma": median(&sigmas), "sigma_per_dataset": sigmas, "resamples": t.bootstrap_resamples }))
    };
    let b1 = boot(t.shots)?;
    let b4 = boot(4 * t.shots)?;
    let ratio = b1["sigma"].as_f64().unwrap_or(f64::NAN) / b4["sigma"].as_f64().unwrap_or(f64::NAN);
    let summary = json!({
        "median_fidelity": median(&fids),
        "min_fidelity": fids.first().copied().unwrap_or(f64::NAN),
        "max_fidelity": fids.last().copied().unwrap_or(f64::NAN),
        "all_monotone": runs.iter().all(|(c, _)| c.monotone),
        "all_converged": runs.iter().all(|(c, _)| c.converged),
        "measurement_rank": measurement_map_rank(&groups),
        "projectors": groups.len() * m.dim(),
        "bootstrap": [b1, b4],
        "bootstrap_sigma_ratio": ratio,
        "bootstrap_shot_exponent": ratio.ln() / 4f64.ln(),
    });
    record(cfg, vec![table], summary)
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    match v.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => v[n / 2],
        n => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

/// Exit-code class for an error raised by a run.
pub fn exit_code(err: &Error) -> i32 {
    if matches!(err, Error::Config(_)) {
        2
    } else if err.is_numerical_guard() {
        3
    } else {
        1
    }
}
