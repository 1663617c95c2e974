//! Projective qudit tomography: rotated `Jz` projectors, sampled counts,
//! diluted RρR maximum-likelihood reconstruction and parametric bootstrap.

use std::f64::consts::FRAC_PI_4;
use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::uhlmann_fidelity;
use crate::error::{Error, Result};
use crate::linalg::{r, CMatrix, CVector};
use crate::rng::substream;
use crate::spinops::{rotation_x, rotation_y, Basis, SpinManifold};
use crate::state::DensityMatrix;

pub const PROBABILITY_FLOOR: f64 = 1e-12;
pub const LIKELIHOOD_TOL: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSetting {
    pub theta_x: f64,
    pub theta_y: f64,
}

impl MeasurementSetting {
    pub fn new(theta_x: f64, theta_y: f64) -> Self {
        MeasurementSetting { theta_x, theta_y }
    }
}

/// All nine settings with both angles drawn from `{0, π/4, π/2}`.
pub fn standard_settings() -> Vec<MeasurementSetting> {
    let angles = [0.0, FRAC_PI_4, 2.0 * FRAC_PI_4];
    angles
        .iter()
        .flat_map(|&tx| angles.iter().map(move |&ty| MeasurementSetting::new(tx, ty)))
        .collect()
}

/// Sixteen settings on `{0, π/6, π/3, π/2}²`; unlike [`standard_settings`] this
/// grid reaches full rank on the `d = 6` Hermitian space.
pub fn complete_settings() -> Vec<MeasurementSetting> {
    let angles: Vec<f64> = (0..4).map(|k| k as f64 * std::f64::consts::PI / 6.0).collect();
    angles
        .iter()
        .flat_map(|&tx| angles.iter().map(move |&ty| MeasurementSetting::new(tx, ty)))
        .collect()
}

/// The rank-1 projectors `U|m⟩⟨m|U†` of one setting, stored as the vectors `U|m⟩`.
#[derive(Clone, Debug)]
pub struct ProjectorGroup {
    pub setting: MeasurementSetting,
    pub vectors: Vec<CVector>,
}

impl ProjectorGroup {
    pub fn projector(&self, m: usize) -> CMatrix {
        &self.vectors[m] * self.vectors[m].adjoint()
    }

    pub fn probabilities(&self, rho: &CMatrix) -> Vec<f64> {
        self.vectors.iter().map(|v| v.dotc(&(rho * v)).re).collect()
    }
}

/// `U = R_y(θy)·R_x(θx)`: the x rotation acts first.
pub fn projector_set(manifold: &SpinManifold, settings: &[MeasurementSetting]) -> Result<Vec<ProjectorGroup>> {
    if settings.is_empty() {
        return Err(Error::Config("at least one measurement setting is required".into()));
    }
    Ok(settings
        .iter()
        .map(|s| {
            let u = rotation_y(manifold, s.theta_y).matrix() * rotation_x(manifold, s.theta_x).matrix();
            let vectors = (0..manifold.dim()).map(|m| u.column(m).into_owned()).collect();
            ProjectorGroup { setting: *s, vectors }
        })
        .collect())
}

/// Rank of the real linear map from Hermitian `ρ` (d² real parameters) to
/// outcome probabilities. Each group sums to `I`, so the trace direction is
/// always included and a complete set has rank `d²`.
pub fn measurement_map_rank(groups: &[ProjectorGroup]) -> usize {
    let d = groups.first().map_or(0, |g| g.vectors.len());
    let rows: Vec<Vec<f64>> = groups
        .iter()
        .flat_map(|g| (0..d).map(move |m| g.projector(m)))
        .map(|p| {
            let mut row = Vec::with_capacity(d * d);
            for i in 0..d {
                row.push(p[(i, i)].re);
            }
            for i in 0..d {
                for j in (i + 1)..d {
                    row.push(2.0 * p[(j, i)].re);
                    row.push(-2.0 * p[(j, i)].im);
                }
            }
            row
        })
        .collect();
    let a = DMatrix::from_fn(rows.len(), d * d, |i, j| rows[i][j]);
    let sv = a.singular_values();
    let tol = 1e-9 * sv.max();
    sv.iter().filter(|&&s| s > tol).count()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub setting: MeasurementSetting,
    pub counts: Vec<u64>,
    pub shots: u64,
}

impl MeasurementRecord {
    pub fn new(setting: MeasurementSetting, counts: Vec<u64>) -> Self {
        let shots = counts.iter().sum();
        MeasurementRecord { setting, counts, shots }
    }
}

#[derive(Serialize, Deserialize)]
struct RecordLine {
    theta_x: f64,
    theta_y: f64,
    counts: Vec<u64>,
    shots: u64,
}

/// One JSON object per line: `theta_x`, `theta_y`, `counts`, `shots`.
pub fn write_records<W: Write>(mut out: W, records: &[MeasurementRecord]) -> Result<()> {
    for rec in records {
        let line = RecordLine {
            theta_x: rec.setting.theta_x,
            theta_y: rec.setting.theta_y,
            counts: rec.counts.clone(),
            shots: rec.shots,
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_records<R: BufRead>(input: R) -> Result<Vec<MeasurementRecord>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let l: RecordLine = serde_json::from_str(&line)?;
        if l.counts.iter().sum::<u64>() != l.shots {
            return Err(Error::Config(format!("counts {:?} do not sum to shots {}", l.counts, l.shots)));
        }
        out.push(MeasurementRecord {
            setting: MeasurementSetting::new(l.theta_x, l.theta_y),
            counts: l.counts,
            shots: l.shots,
        });
    }
    Ok(out)
}

/// Outcome weights for one setting. Counts, or `shots·p` in the infinite-shot limit.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub setting: MeasurementSetting,
    pub weights: Vec<f64>,
}

impl From<&MeasurementRecord> for Observation {
    fn from(rec: &MeasurementRecord) -> Self {
        Observation { setting: rec.setting, weights: rec.counts.iter().map(|&c| c as f64).collect() }
    }
}

pub fn born_probabilities(rho: &DensityMatrix, groups: &[ProjectorGroup]) -> Result<Vec<Vec<f64>>> {
    groups
        .iter()
        .map(|g| {
            if g.vectors.len() != rho.dim() {
                return Err(Error::DimensionMismatch { expected: g.vectors.len(), actual: rho.dim() });
            }
            let p = g.probabilities(rho.matrix());
            let total: f64 = p.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::ProbabilitySum(total));
            }
            Ok(p)
        })
        .collect()
}

/// Symmetric readout confusion: with probability `rate` the outcome is uniform.
fn with_readout_error(p: &[f64], rate: f64) -> Vec<f64> {
    let u = 1.0 / p.len() as f64;
    p.iter().map(|&x| ((1.0 - rate) * x + rate * u).max(0.0)).collect()
}

/// Multinomial draw via sequential conditional binomials.
fn multinomial<R: Rng + ?Sized>(p: &[f64], shots: u64, rng: &mut R) -> Vec<u64> {
    let mut left = shots;
    let mut mass = 1.0;
    let mut out = Vec::with_capacity(p.len());
    for (k, &pk) in p.iter().enumerate() {
        let n = if k + 1 == p.len() || left == 0 {
            left
        } else {
            let q = (pk / mass).clamp(0.0, 1.0);
            Binomial::new(left, q).expect("valid binomial").sample(rng)
        };
        out.push(n);
        left -= n;
        mass -= pk;
    }
    out
}

pub fn simulate_measurements<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    groups: &[ProjectorGroup],
    shots: u64,
    rng: &mut R,
    readout_error: f64,
) -> Result<Vec<MeasurementRecord>> {
    if !(0.0..=1.0).contains(&readout_error) {
        return Err(Error::Config(format!("readout error rate must be in [0, 1], got {readout_error}")));
    }
    let probs = born_probabilities(rho, groups)?;
    Ok(groups
        .iter()
        .zip(probs)
        .map(|(g, p)| MeasurementRecord::new(g.setting, multinomial(&with_readout_error(&p, readout_error), shots, rng)))
        .collect())
}

/// Noise-free observations `shots·p`.
pub fn exact_observations(
    rho: &DensityMatrix,
    groups: &[ProjectorGroup],
    shots: f64,
    readout_error: f64,
) -> Result<Vec<Observation>> {
    let probs = born_probabilities(rho, groups)?;
    Ok(groups
        .iter()
        .zip(probs)
        .map(|(g, p)| Observation {
            setting: g.setting,
            weights: with_readout_error(&p, readout_error).into_iter().map(|x| x * shots).collect(),
        })
        .collect())
}

#[derive(Clone, Debug)]
pub struct MleResult {
    pub rho_est: DensityMatrix,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Some outcome with nonzero weight had model probability below the floor.
    pub floored: bool,
    pub rank_deficient: bool,
    /// Log-likelihood after every accepted iteration.
    pub history: Vec<f64>,
}

#[derive(Serialize)]
struct MleJson<'a> {
    rho_est: Vec<Vec<[f64; 2]>>,
    log_likelihood: f64,
    iterations: usize,
    converged: bool,
    floored: bool,
    rank_deficient: bool,
    labels: &'a [String],
}

impl MleResult {
    pub fn to_json(&self) -> Result<String> {
        let m = self.rho_est.matrix();
        let labels = self.rho_est.basis().labels();
        let j = MleJson {
            rho_est: (0..m.nrows()).map(|i| (0..m.ncols()).map(|k| [m[(i, k)].re, m[(i, k)].im]).collect()).collect(),
            log_likelihood: self.log_likelihood,
            iterations: self.iterations,
            converged: self.converged,
            floored: self.floored,
            rank_deficient: self.rank_deficient,
            labels: &labels,
        };
        Ok(serde_json::to_string(&j)?)
    }
}

fn log_likelihood(rho: &CMatrix, groups: &[ProjectorGroup], obs: &[Observation]) -> (f64, bool) {
    let mut ll = 0.0;
    let mut floored = false;
    for (g, o) in groups.iter().zip(obs) {
        for (p, &n) in g.probabilities(rho).into_iter().zip(&o.weights) {
            if n > 0.0 {
                if p < PROBABILITY_FLOOR {
                    floored = true;
                }
                ll += n * p.max(PROBABILITY_FLOOR).ln();
            }
        }
    }
    (ll, floored)
}

fn r_operator(rho: &CMatrix, groups: &[ProjectorGroup], obs: &[Observation]) -> CMatrix {
    let d = rho.nrows();
    let mut out = CMatrix::zeros(d, d);
    for (g, o) in groups.iter().zip(obs) {
        for (v, &n) in g.vectors.iter().zip(&o.weights) {
            if n > 0.0 {
                let p = v.dotc(&(rho * v)).re.max(PROBABILITY_FLOOR);
                out += (v * v.adjoint()) * r(n / p);
            }
        }
    }
    out
}

fn normalized_hermitian(m: CMatrix) -> CMatrix {
    let h = (&m + m.adjoint()) * r(0.5);
    let tr = h.trace().re;
    h.unscale(tr)
}

/// Diluted RρR iteration from the maximally mixed state.
pub fn mle_from_observations(
    manifold: &SpinManifold,
    groups: &[ProjectorGroup],
    obs: &[Observation],
) -> Result<MleResult> {
    if groups.len() != obs.len() {
        return Err(Error::DimensionMismatch { expected: groups.len(), actual: obs.len() });
    }
    let d = manifold.dim();
    let rank_deficient = measurement_map_rank(groups) < d * d;
    let mut rho = CMatrix::identity(d, d).unscale(d as f64);
    let (mut ll, _) = log_likelihood(&rho, groups, obs);
    let mut history = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let rop = r_operator(&rho, groups, obs);
        let full = normalized_hermitian(&rop * &rho * &rop);
        let mut lambda = 0.0;
        let mut accepted = None;
        for _ in 0..30 {
            let cand = if lambda == 0.0 { full.clone() } else { full.scale(1.0 - lambda) + rho.scale(lambda) };
            let (cl, _) = log_likelihood(&cand, groups, obs);
            if cl >= ll {
                accepted = Some((cand, cl));
                break;
            }
            lambda = 0.5 * (1.0 + lambda);
        }
        let Some((cand, cl)) = accepted else {
            converged = true;
            break;
        };
        let gain = cl - ll;
        rho = cand;
        ll = cl;
        history.push(ll);
        if gain < LIKELIHOOD_TOL {
            converged = true;
            break;
        }
    }
    let (_, floored) = log_likelihood(&rho, groups, obs);
    let rho_est = DensityMatrix::from_matrix(rho, Basis::Spin(*manifold))?;
    Ok(MleResult { rho_est, log_likelihood: ll, iterations, converged, floored, rank_deficient, history })
}

pub fn mle_reconstruct(manifold: &SpinManifold, records: &[MeasurementRecord]) -> Result<MleResult> {
    let settings: Vec<MeasurementSetting> = records.iter().map(|r| r.setting).collect();
    let groups = projector_set(manifold, &settings)?;
    for rec in records {
        if rec.counts.len() != manifold.dim() {
            return Err(Error::DimensionMismatch { expected: manifold.dim(), actual: rec.counts.len() });
        }
    }
    let obs: Vec<Observation> = records.iter().map(Observation::from).collect();
    mle_from_observations(manifold, &groups, &obs)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub fidelity: f64,
    pub sigma: f64,
    pub resamples: usize,
}

/// Parametric bootstrap: resample from `rho_est`, refit, and take the spread of refitted fidelities.
/// With `exact` the resampled records are the noise-free expectations.
pub fn bootstrap_fidelity(
    rho_est: &DensityMatrix,
    rho_ideal: &DensityMatrix,
    settings: &[MeasurementSetting],
    shots: u64,
    resamples: usize,
    seed: u64,
    exact: bool,
) -> Result<BootstrapResult> {
    if resamples < 2 {
        return Err(Error::Config(format!("bootstrap needs at least 2 resamples, got {resamples}")));
    }
    let manifold = *rho_est.basis().spin().ok_or(Error::NotSpinBasis)?;
    let groups = projector_set(&manifold, settings)?;
    let fidelity = uhlmann_fidelity(rho_est, rho_ideal)?;
    let refits: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let obs = if exact {
                exact_observations(rho_est, &groups, shots as f64, 0.0)?
            } else {
                let mut rng = substream(seed, &[b as u64]);
                simulate_measurements(rho_est, &groups, shots, &mut rng, 0.0)?
                    .iter()
                    .map(Observation::from)
                    .collect()
            };
            let fit = mle_from_observations(&manifold, &groups, &obs)?;
            uhlmann_fidelity(&fit.rho_est, rho_ideal)
        })
        .collect::<Result<_>>()?;
    let mean = refits.iter().sum::<f64>() / resamples as f64;
    let var = refits.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (resamples - 1) as f64;
    Ok(BootstrapResult { fidelity, sigma: var.sqrt(), resamples })
}
