//! Per-point Monte Carlo: prepare, dephase, decode, optionally heat and
//! correct, post-select, and average.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::code::{decode_unitary, prepare_logical, LogicalQubit};
use crate::channels::dephase_matrix;
use crate::correction::{heating_probability, CorrectionConfig, TrialCorrector};
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, CVector, C64};
use crate::rng::substream;
use crate::spinops::SpinManifold;

use super::config::{ErasureDetection, ExperimentConfig};

const BLOCK: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesKind {
    Physical,
    Uncorrected,
    Corrected,
}

impl SeriesKind {
    pub fn label(self) -> &'static str {
        match self {
            SeriesKind::Physical => "physical",
            SeriesKind::Uncorrected => "uncorrected",
            SeriesKind::Corrected => "corrected",
        }
    }

    fn tag(self) -> u64 {
        match self {
            SeriesKind::Physical => 1,
            SeriesKind::Uncorrected => 2,
            SeriesKind::Corrected => 3,
        }
    }
}

struct Recovery {
    corrector: TrialCorrector,
    residual_excitation: f64,
    heating_rate: f64,
    detection: ErasureDetection,
    /// Width of the post-correction control phase `φ` in `e^{-iφJz}`.
    control_sigma: f64,
}

/// Everything needed to simulate one series at any noise strength.
pub struct Series {
    pub kind: SeriesKind,
    manifold: SpinManifold,
    m_values: Vec<f64>,
    encoded: CVector,
    decode: CMatrix,
    target: CVector,
    recovery: Option<Recovery>,
    offset: f64,
}

#[derive(Clone, Debug)]
pub struct PointOutcome {
    pub fidelity: f64,
    pub fidelity_sigma: f64,
    pub n_trials: usize,
    /// Expected number of erased trials.
    pub erased: f64,
    pub erasure_fraction: f64,
    pub erasure_sigma: f64,
    /// Post-selected trial-averaged state in the decoded frame, offset included.
    pub rho: CMatrix,
}

impl PointOutcome {
    pub fn error(&self) -> f64 {
        1.0 - self.fidelity
    }
}

#[derive(Clone)]
struct Partial {
    rho: CMatrix,
    a: f64,
    b: f64,
    aa: f64,
    bb: f64,
    ab: f64,
    erase: f64,
}

impl Partial {
    fn zero(d: usize) -> Self {
        Partial { rho: CMatrix::zeros(d, d), a: 0.0, b: 0.0, aa: 0.0, bb: 0.0, ab: 0.0, erase: 0.0 }
    }

    fn merge(mut self, o: &Partial) -> Self {
        self.rho += &o.rho;
        self.a += o.a;
        self.b += o.b;
        self.aa += o.aa;
        self.bb += o.bb;
        self.ab += o.ab;
        self.erase += o.erase;
        self
    }
}

fn logical_qubit(cfg: &ExperimentConfig) -> Result<LogicalQubit> {
    let a = c(cfg.state.alpha[0], cfg.state.alpha[1]);
    let b = c(cfg.state.beta[0], cfg.state.beta[1]);
    let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
    LogicalQubit::new(a / n, b / n)
}

impl Series {
    pub fn new(kind: SeriesKind, cfg: &ExperimentConfig) -> Result<Self> {
        let q = logical_qubit(cfg)?;
        let (manifold, encoded, decode, offset) = match kind {
            SeriesKind::Physical => {
                let m = SpinManifold::new(cfg.physical.j, cfg.physical.g_j)?;
                let v = CVector::from_vec(vec![q.alpha, q.beta]);
                (m, v, CMatrix::identity(2, 2), cfg.offsets.physical)
            }
            SeriesKind::Uncorrected | SeriesKind::Corrected => {
                let m = SpinManifold::new(cfg.logical.j, cfg.logical.g_j)?;
                let v = prepare_logical(&q, &m)?.amplitudes().clone();
                let off = if kind == SeriesKind::Corrected { cfg.offsets.corrected } else { cfg.offsets.uncorrected };
                (m, v, decode_unitary(&m).into_matrix(), off)
            }
        };
        let recovery = if kind == SeriesKind::Corrected {
            let cc = CorrectionConfig {
                phi_c: cfg.correction.phi_c,
                pulse_model: cfg.correction.pulse_model,
                heating_rate: cfg.correction.heating_rate,
                fock_cutoff: cfg.correction.fock_cutoff,
            };
            Some(Recovery {
                corrector: TrialCorrector::new(&cc, cfg.correction.second_order)?,
                residual_excitation: cfg.correction.residual_excitation,
                heating_rate: cfg.correction.heating_rate,
                detection: cfg.correction.erasure_detection,
                control_sigma: cfg.control_delta()? / manifold.j(),
            })
        } else {
            None
        };
        let target = &decode * &encoded;
        Ok(Series { kind, m_values: manifold.m_values(), manifold, encoded, decode, target, recovery, offset })
    }

    pub fn manifold(&self) -> &SpinManifold {
        &self.manifold
    }

    pub fn g_j(&self) -> f64 {
        self.manifold.g_j()
    }

    pub fn dim(&self) -> usize {
        self.manifold.dim()
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Ideal state in the frame the fidelity is evaluated in.
    pub fn target(&self) -> &CVector {
        &self.target
    }

    /// Replaces the recovery sideband phase.
    pub fn with_phi_c(mut self, cfg: &ExperimentConfig, phi_c: f64) -> Result<Self> {
        if let Some(rec) = self.recovery.as_mut() {
            let cc = CorrectionConfig {
                phi_c,
                pulse_model: cfg.correction.pulse_model,
                heating_rate: cfg.correction.heating_rate,
                fock_cutoff: cfg.correction.fock_cutoff,
            };
            rec.corrector = TrialCorrector::new(&cc, cfg.correction.second_order)?;
        }
        Ok(self)
    }

    /// Exact fidelity of the simulated model at zero delay, from the trial-averaged
    /// density matrix instead of samples. The corrected series keeps the
    /// motional ground-state branch.
    pub fn oracle_fidelity(&self, sigma_phi: f64) -> Result<f64> {
        let rho = dephase_matrix(&(&self.encoded * self.encoded.adjoint()), &self.manifold, sigma_phi);
        let mut rho = &self.decode * rho * self.decode.adjoint();
        if let Some(rec) = &self.recovery {
            let eig = rho.clone().symmetric_eigen();
            let mut block = CMatrix::zeros(6, 6);
            for (k, &w) in eig.eigenvalues.iter().enumerate() {
                if w > 1e-15 {
                    block += rec.corrector.apply(&eig.eigenvectors.column(k).into_owned(), 0).d52 * c(w, 0.0);
                }
            }
            rho = dephase_matrix(&block, &self.manifold, rec.control_sigma);
        }
        let f = self.target.dotc(&(&rho * &self.target)).re / rho.trace().re;
        Ok(self.inject_offset(f))
    }

    /// Depolarizing probability that produces the configured constant error.
    fn depolarizing(&self) -> f64 {
        self.offset / (1.0 - 1.0 / self.dim() as f64)
    }

    /// Error of an analytic fidelity after the same offset injection.
    pub fn inject_offset(&self, fidelity: f64) -> f64 {
        let p = self.depolarizing();
        (1.0 - p) * fidelity + p / self.dim() as f64
    }

    fn phase_diag(&self, phi: f64) -> Vec<C64> {
        self.m_values.iter().map(|m| C64::from_polar(1.0, -phi * m)).collect()
    }

    fn trial(&self, sigma_phi: f64, weights: &[f64], rng: &mut impl Rng) -> (CMatrix, f64) {
        let z: f64 = rng.sample(StandardNormal);
        let phases = self.phase_diag(sigma_phi * z);
        let noisy = CVector::from_iterator(self.dim(), self.encoded.iter().zip(&phases).map(|(a, p)| a * p));
        let decoded = &self.decode * noisy;
        match &self.recovery {
            None => (&decoded * decoded.adjoint(), 0.0),
            Some(rec) => {
                let mut block = CMatrix::zeros(6, 6);
                let mut erase = 0.0;
                for (n, &w) in weights.iter().enumerate() {
                    if n > 0 && rec.detection == ErasureDetection::Motional {
                        erase += w;
                    } else if w > 0.0 {
                        let out = rec.corrector.apply(&decoded, n);
                        block += out.d52 * C64::from(w);
                        erase += w * out.p_erase;
                    }
                }
                if rec.control_sigma > 0.0 {
                    let zc: f64 = rng.sample(StandardNormal);
                    let ph = self.phase_diag(rec.control_sigma * zc);
                    for i in 0..6 {
                        for j in 0..6 {
                            block[(i, j)] *= ph[i] * ph[j].conj();
                        }
                    }
                }
                (block, erase)
            }
        }
    }

    /// Fock weights for `n = 0, 1, 2`: residual excitation then one heating jump.
    fn motional_weights(&self, delay: f64) -> Result<Vec<f64>> {
        match &self.recovery {
            None => Ok(vec![1.0]),
            Some(rec) => {
                let rt = rec.heating_rate * delay;
                if rt > 0.5 {
                    return Err(Error::HeatingRegime { rt });
                }
                let e = rec.residual_excitation;
                let p = heating_probability(rec.heating_rate, delay);
                Ok(vec![(1.0 - e) * (1.0 - p), e * (1.0 - p) + (1.0 - e) * p, e * p])
            }
        }
    }

    /// Runs `trials` trials at phase-noise width `sigma_phi` after a heating delay.
    /// Trial `k` of point `point` draws from its own stream, so the result is
    /// independent of how blocks are scheduled.
    pub fn run_point(&self, sigma_phi: f64, delay: f64, trials: usize, seed: u64, point: u64) -> Result<PointOutcome> {
        if trials == 0 {
            return Err(Error::Config("trials must be > 0".into()));
        }
        let weights = self.motional_weights(delay)?;
        let d = self.dim();
        let blocks = trials.div_ceil(BLOCK);
        let partials: Vec<Partial> = (0..blocks)
            .into_par_iter()
            .map(|blk| {
                let mut acc = Partial::zero(d);
                for k in blk * BLOCK..((blk + 1) * BLOCK).min(trials) {
                    let mut rng = substream(seed, &[self.kind.tag(), point, k as u64]);
                    let (rho, erase) = self.trial(sigma_phi, &weights, &mut rng);
                    let b = rho.trace().re;
                    let a = self.target.dotc(&(&rho * &self.target)).re;
                    acc.a += a;
                    acc.b += b;
                    acc.aa += a * a;
                    acc.bb += b * b;
                    acc.ab += a * b;
                    acc.erase += erase;
                    acc.rho += rho;
                }
                acc
            })
            .collect();
        let total = partials.iter().fold(Partial::zero(d), |acc, p| acc.merge(p));
        let n = trials as f64;
        if total.b <= 1e-300 {
            return Err(Error::InvalidDensityMatrix("every trial was erased".into()));
        }
        let ratio = total.a / total.b;
        let var = if trials > 1 {
            ((total.aa - 2.0 * ratio * total.ab + ratio * ratio * total.bb) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        let mean_b = total.b / n;
        let raw_sigma = (var / n).sqrt() / mean_b;
        let p = self.depolarizing();
        let rho = total.rho.unscale(total.b) * C64::from(1.0 - p) + CMatrix::identity(d, d) * C64::from(p / d as f64);
        let q = (total.erase / n).clamp(0.0, 1.0);
        Ok(PointOutcome {
            fidelity: (1.0 - p) * ratio + p / d as f64,
            fidelity_sigma: (1.0 - p) * raw_sigma,
            n_trials: trials,
            erased: total.erase,
            erasure_fraction: q,
            erasure_sigma: (q * (1.0 - q) / n).sqrt(),
            rho,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ExperimentKind;

    fn cfg() -> ExperimentConfig {
        let mut c = ExperimentConfig::for_experiment(ExperimentKind::Fig3Sweep);
        c.seed = Some(3);
        c.offsets.physical = 0.0;
        c.control.offset = None;
        c
    }

    #[test]
    fn noiseless_point_is_perfect() {
        for kind in [SeriesKind::Physical, SeriesKind::Uncorrected, SeriesKind::Corrected] {
            let s = Series::new(kind, &cfg()).unwrap();
            let out = s.run_point(0.0, 0.0, 300, 1, 0).unwrap();
            assert!(out.error().abs() < 1e-12, "{kind:?} {}", out.error());
        }
    }

    #[test]
    fn points_are_schedule_independent() {
        let s = Series::new(SeriesKind::Corrected, &cfg()).unwrap();
        let a = s.run_point(0.4, 1e-3, 700, 9, 2).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| s.run_point(0.4, 1e-3, 700, 9, 2).unwrap());
        assert_eq!(a.fidelity.to_bits(), b.fidelity.to_bits());
        assert_eq!(a.rho, b.rho);
    }

    #[test]
    fn oracle_matches_closed_forms_and_samples() {
        let c = cfg();
        let u = Series::new(SeriesKind::Uncorrected, &c).unwrap();
        let k = Series::new(SeriesKind::Corrected, &c).unwrap();
        let g = u.g_j();
        for x in [0.1, 0.3] {
            let chi = 0.5 * x * x;
            assert!((u.oracle_fidelity(x * g).unwrap() - crate::analytics::f_encoded(chi, g)).abs() < 1e-12);
            assert!((k.oracle_fidelity(x * g).unwrap() - crate::analytics::f_corrected(chi, g)).abs() < 1e-12);
        }
        let mut c = cfg();
        c.control.offset = Some(0.022);
        let k = Series::new(SeriesKind::Corrected, &c).unwrap();
        let out = k.run_point(0.3 * g, 0.0, 4000, 5, 0).unwrap();
        let oracle = k.oracle_fidelity(0.3 * g).unwrap();
        assert!((out.fidelity - oracle).abs() < 4.0 * out.fidelity_sigma, "{} {oracle}", out.fidelity);
    }

    #[test]
    fn offset_sets_zero_noise_error() {
        let mut c = cfg();
        c.offsets.corrected = 0.022;
        let s = Series::new(SeriesKind::Corrected, &c).unwrap();
        let out = s.run_point(0.0, 0.0, 50, 1, 0).unwrap();
        assert!((out.error() - 0.022).abs() < 1e-12);
    }
}
