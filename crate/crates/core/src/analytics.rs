//! Closed-form fidelities, Uhlmann fidelity, error-curve fits and lifetimes.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen, Vector2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::channels::{DephasingParams, MU_B_OVER_HBAR};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::state::{DensityMatrix, Ket};

/// `(Tr √(√ρ σ √ρ))²`, clamped to `[0, 1]`.
pub fn uhlmann_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), actual: sigma.dim() });
    }
    Ok(fidelity_matrices(rho.matrix(), sigma.matrix()))
}

pub(crate) fn fidelity_matrices(rho: &CMatrix, sigma: &CMatrix) -> f64 {
    // A rank-one argument reduces the fidelity to `Tr ρσ`, which avoids taking
    // square roots of round-off sized eigenvalues.
    let purity = |m: &CMatrix| (m * m).trace().re;
    if (purity(rho) - 1.0).abs() < 1e-12 || (purity(sigma) - 1.0).abs() < 1e-12 {
        return (rho * sigma).trace().re.clamp(0.0, 1.0);
    }
    let s = linalg::sqrt_psd(rho);
    let inner = linalg::Spectral::of(&(&s * sigma * &s));
    let floor = 1e-14 * inner.values.amax();
    let root: f64 = inner.values.iter().filter(|&&l| l > floor).map(|l| l.sqrt()).sum();
    root.powi(2).clamp(0.0, 1.0)
}

/// `⟨ψ|ρ|ψ⟩`, the Uhlmann fidelity against a pure state.
pub fn pure_fidelity(rho: &DensityMatrix, psi: &Ket) -> Result<f64> {
    if rho.dim() != psi.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), actual: psi.dim() });
    }
    Ok(rho.expectation(&psi.normalized()).clamp(0.0, 1.0))
}

pub fn f_physical(chi: f64, g_j: f64) -> f64 {
    0.5 * (1.0 + (-g_j * g_j * chi).exp())
}

pub fn f_encoded(chi: f64, g_j: f64) -> f64 {
    let x = g_j * g_j * chi;
    let e = |k: f64| (-k * x).exp();
    (e(25.0) + 10.0 * e(16.0) + 45.0 * e(9.0) + 120.0 * e(4.0) + 210.0 * e(1.0) + 126.0) / 512.0
}

pub fn f_corrected(chi: f64, g_j: f64) -> f64 {
    let x = g_j * g_j * chi;
    let e = |k: f64| (-k * x).exp();
    (-e(25.0) - 5.0 * e(16.0) - 5.0 * e(9.0) + 20.0 * e(4.0) + 70.0 * e(1.0) + 49.0) / 128.0
}

/// Corrected fidelity with an extra Gaussian control-phase error of width `delta`.
///
/// The bracketed closed form evaluates to the infidelity (it vanishes at
/// `chi = delta = 0`), so the fidelity is one minus it.
pub fn f_corrected_with_delta(chi: f64, delta: f64, g_j: f64) -> f64 {
    let x = g_j * g_j * chi;
    let big_e = (2.0 * delta * delta).exp();
    let ex = |k: f64| (k * x).exp();
    let bracket = -1.0 + 5.0 * big_e + 20.0 * big_e * ex(9.0) - 80.0 * big_e * ex(21.0)
        + 316.0 * big_e * ex(25.0)
        - 70.0 * ex(24.0) * (3.0 + big_e)
        + 5.0 * ex(16.0) * (-9.0 + 13.0 * big_e);
    1.0 - (-2.0 * delta * delta - 25.0 * x).exp() * bracket / 512.0
}

/// `delta` whose χ-independent infidelity `(1 - e^{-2δ²})/2` equals `offset`.
pub fn delta_for_offset(offset: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&offset) {
        return Err(Error::Config(format!("control offset must be in [0, 0.5), got {offset}")));
    }
    Ok((-(1.0 - 2.0 * offset).ln() / 2.0).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Physical,
    Encoded,
    Corrected,
    CorrectedWithDelta,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityCurveParams {
    pub g_j: f64,
    pub delta: f64,
    pub kind: CurveKind,
}

impl FidelityCurveParams {
    pub fn new(kind: CurveKind, g_j: f64, delta: f64) -> Result<Self> {
        if delta < 0.0 {
            return Err(Error::Negative { name: "delta", value: delta });
        }
        Ok(FidelityCurveParams { g_j, delta, kind })
    }

    pub fn fidelity(&self, chi: f64) -> f64 {
        match self.kind {
            CurveKind::Physical => f_physical(chi, self.g_j),
            CurveKind::Encoded => f_encoded(chi, self.g_j),
            CurveKind::Corrected => f_corrected(chi, self.g_j),
            CurveKind::CorrectedWithDelta => f_corrected_with_delta(chi, self.delta, self.g_j),
        }
    }

    pub fn error(&self, chi: f64) -> f64 {
        1.0 - self.fidelity(chi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitKind {
    Linear,
    Quadratic,
    Cubic,
}

impl FitKind {
    pub fn power(self) -> i32 {
        match self {
            FitKind::Linear => 1,
            FitKind::Quadratic => 2,
            FitKind::Cubic => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub t: f64,
    pub chi: f64,
    pub epsilon: f64,
    pub sigma: f64,
}

/// `ε = coefficient · χ^p + offset`, weighted least squares.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorFit {
    pub kind: FitKind,
    pub coefficient: f64,
    pub offset: f64,
    /// Row-major over `(coefficient, offset)`.
    pub covariance: [[f64; 2]; 2],
    /// True when the free offset came out negative and was pinned to zero.
    pub offset_fixed: bool,
    pub chi_squared: f64,
    pub points: Vec<FitPoint>,
}

impl ErrorFit {
    pub fn predict(&self, chi: f64) -> f64 {
        self.coefficient * chi.powi(self.kind.power()) + self.offset
    }

    pub fn coefficient_sigma(&self) -> f64 {
        self.covariance[0][0].sqrt()
    }

    pub fn offset_sigma(&self) -> f64 {
        self.covariance[1][1].sqrt()
    }

    pub fn n_params(&self) -> usize {
        if self.offset_fixed {
            1
        } else {
            2
        }
    }

    /// Akaike information criterion for Gaussian errors of known width.
    pub fn aic(&self) -> f64 {
        self.chi_squared + 2.0 * self.n_params() as f64
    }

    /// Smallest χ at which the fitted error reaches `epsilon`.
    pub fn invert(&self, epsilon: f64) -> Result<f64> {
        invert_curve(self.kind, self.coefficient, self.offset, epsilon)
    }
}

fn invert_curve(kind: FitKind, coefficient: f64, offset: f64, epsilon: f64) -> Result<f64> {
    if epsilon < offset {
        return Err(Error::UnreachableCutoff { epsilon, offset });
    }
    if coefficient <= 0.0 {
        return Err(Error::DegenerateFit(format!("non-positive coefficient {coefficient}")));
    }
    Ok(((epsilon - offset) / coefficient).powf(1.0 / kind.power() as f64))
}

pub fn fit_error_curve(points: &[FitPoint], kind: FitKind) -> Result<ErrorFit> {
    if points.len() < 3 {
        return Err(Error::DegenerateFit(format!("need at least 3 points, got {}", points.len())));
    }
    if let Some(p) = points.iter().find(|p| !(p.sigma > 0.0) || !p.sigma.is_finite()) {
        return Err(Error::DegenerateFit(format!("uncertainty must be positive, got {}", p.sigma)));
    }
    let pw = kind.power();
    let x: Vec<f64> = points.iter().map(|p| p.chi.powi(pw)).collect();
    let w: Vec<f64> = points.iter().map(|p| 1.0 / (p.sigma * p.sigma)).collect();

    let mut normal = Matrix2::zeros();
    let mut rhs = Vector2::zeros();
    for ((xi, wi), p) in x.iter().zip(&w).zip(points) {
        let row = Vector2::new(*xi, 1.0);
        normal += row * row.transpose() * *wi;
        rhs += row * (*wi * p.epsilon);
    }
    let scale = normal[(0, 0)] * normal[(1, 1)];
    if normal.determinant().abs() <= 1e-12 * scale.abs() || scale == 0.0 {
        return Err(Error::DegenerateFit("design matrix is singular".into()));
    }
    let inv = normal.try_inverse().ok_or_else(|| Error::DegenerateFit("design matrix is singular".into()))?;
    let beta = inv * rhs;
    let (coefficient, offset, covariance, offset_fixed) = if beta[1] < 0.0 {
        let sxx: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi * xi).sum();
        let sxy: f64 = x.iter().zip(&w).zip(points).map(|((xi, wi), p)| wi * xi * p.epsilon).sum();
        (sxy / sxx, 0.0, [[1.0 / sxx, 0.0], [0.0, 0.0]], true)
    } else {
        (beta[0], beta[1], [[inv[(0, 0)], inv[(0, 1)]], [inv[(1, 0)], inv[(1, 1)]]], false)
    };
    if offset > 1.0 {
        return Err(Error::DegenerateFit(format!("fitted offset {offset} exceeds 1")));
    }
    let chi_squared = x
        .iter()
        .zip(&w)
        .zip(points)
        .map(|((xi, wi), p)| wi * (p.epsilon - coefficient * xi - offset).powi(2))
        .sum();
    Ok(ErrorFit { kind, coefficient, offset, covariance, offset_fixed, chi_squared, points: points.to_vec() })
}

/// Weighted linear least squares: returns `(β, (AᵀWA)⁻¹, χ²)`.
pub fn weighted_least_squares(design: &[Vec<f64>], y: &[f64], sigma: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>, f64)> {
    let n = design.len();
    let k = design.first().map_or(0, Vec::len);
    if n < k || k == 0 || y.len() != n || sigma.len() != n {
        return Err(Error::DegenerateFit(format!("{n} points for {k} parameters")));
    }
    if let Some(s) = sigma.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
        return Err(Error::DegenerateFit(format!("uncertainty must be positive, got {s}")));
    }
    let a = DMatrix::from_fn(n, k, |i, j| design[i][j] / sigma[i]);
    let b = DVector::from_fn(n, |i, _| y[i] / sigma[i]);
    let normal = a.transpose() * &a;
    let cov = normal
        .clone()
        .try_inverse()
        .filter(|c| c.iter().all(|x| x.is_finite()))
        .ok_or_else(|| Error::DegenerateFit("design matrix is singular".into()))?;
    let beta = &cov * (a.transpose() * &b);
    let chi_squared = (&a * &beta - &b).norm_squared();
    Ok((beta.iter().copied().collect(), cov, chi_squared))
}

/// `y = slope·x + intercept`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub covariance: [[f64; 2]; 2],
    pub chi_squared: f64,
}

impl LineFit {
    pub fn slope_sigma(&self) -> f64 {
        self.covariance[0][0].sqrt()
    }
}

pub fn fit_line(x: &[f64], y: &[f64], sigma: &[f64]) -> Result<LineFit> {
    let design: Vec<Vec<f64>> = x.iter().map(|&xi| vec![xi, 1.0]).collect();
    let (beta, cov, chi_squared) = weighted_least_squares(&design, y, sigma)?;
    Ok(LineFit {
        slope: beta[0],
        intercept: beta[1],
        covariance: [[cov[(0, 0)], cov[(0, 1)]], [cov[(1, 0)], cov[(1, 1)]]],
        chi_squared,
    })
}

/// `y = A·cos(ω·φ - φ₀) + C` with `A ≥ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinusoidFit {
    pub amplitude: f64,
    pub amplitude_sigma: f64,
    pub phase: f64,
    pub offset: f64,
    pub offset_sigma: f64,
    pub omega: f64,
    /// Zero when ω was held fixed.
    pub omega_sigma: f64,
    pub chi_squared: f64,
    /// Modulation amplitude below three standard errors.
    pub failed: bool,
}

impl SinusoidFit {
    pub fn period(&self) -> f64 {
        TAU / self.omega
    }

    pub fn period_sigma(&self) -> f64 {
        TAU * self.omega_sigma / (self.omega * self.omega)
    }

    pub fn minimum(&self) -> f64 {
        self.offset - self.amplitude
    }

    pub fn maximum(&self) -> f64 {
        self.offset + self.amplitude
    }
}

pub fn fit_sinusoid(phi: &[f64], y: &[f64], sigma: &[f64], omega: f64) -> Result<SinusoidFit> {
    let design: Vec<Vec<f64>> = phi.iter().map(|&p| vec![(omega * p).cos(), (omega * p).sin(), 1.0]).collect();
    let (beta, cov, chi_squared) = weighted_least_squares(&design, y, sigma)?;
    let (a, b) = (beta[0], beta[1]);
    let amplitude = a.hypot(b);
    let amplitude_sigma = if amplitude > 0.0 {
        let g = [a / amplitude, b / amplitude];
        (g[0] * g[0] * cov[(0, 0)] + 2.0 * g[0] * g[1] * cov[(0, 1)] + g[1] * g[1] * cov[(1, 1)]).max(0.0).sqrt()
    } else {
        cov[(0, 0)].max(cov[(1, 1)]).sqrt()
    };
    Ok(SinusoidFit {
        amplitude,
        amplitude_sigma,
        phase: b.atan2(a),
        offset: beta[2],
        offset_sigma: cov[(2, 2)].sqrt(),
        omega,
        omega_sigma: 0.0,
        chi_squared,
        failed: amplitude < 3.0 * amplitude_sigma,
    })
}

/// Sinusoid fit with free angular frequency, scanned over `[lo, hi]`; the
/// frequency uncertainty comes from the `Δχ² = 1` curvature at the minimum.
pub fn fit_sinusoid_free(phi: &[f64], y: &[f64], sigma: &[f64], lo: f64, hi: f64) -> Result<SinusoidFit> {
    let chi2 = |w: f64| fit_sinusoid(phi, y, sigma, w).map(|f| f.chi_squared);
    let steps = 400;
    let mut best = (lo, f64::INFINITY);
    for i in 0..=steps {
        let w = lo + (hi - lo) * i as f64 / steps as f64;
        let c = chi2(w)?;
        if c < best.1 {
            best = (w, c);
        }
    }
    // Golden-section refinement inside one grid cell on each side.
    let h = (hi - lo) / steps as f64;
    let (mut a, mut b) = ((best.0 - h).max(lo), (best.0 + h).min(hi));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if chi2(c)? < chi2(d)? {
            b = d;
        } else {
            a = c;
        }
    }
    let omega = 0.5 * (a + b);
    let mut fit = fit_sinusoid(phi, y, sigma, omega)?;
    let dh = 1e-4 * omega.abs().max(1e-3);
    let curvature = (chi2(omega + dh)? - 2.0 * fit.chi_squared + chi2(omega - dh)?) / (dh * dh);
    fit.omega_sigma = if curvature > 0.0 { (2.0 / curvature).sqrt() } else { f64::INFINITY };
    Ok(fit)
}

/// Delay at which a dephasing strength `chi` is reached for field width `sigma_b`.
pub fn time_for_chi(chi: f64, sigma_b: f64) -> f64 {
    (2.0 * chi).sqrt() / (MU_B_OVER_HBAR * sigma_b)
}

/// Seconds until the fitted error reaches `epsilon` for the template's σ_B.
pub fn useful_lifetime(fit: &ErrorFit, epsilon: f64, noise: &DephasingParams) -> Result<f64> {
    if noise.sigma_b <= 0.0 {
        return Err(Error::Config(format!("sigma_b must be positive, got {}", noise.sigma_b)));
    }
    Ok(time_for_chi(fit.invert(epsilon)?, noise.sigma_b))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LifetimeResult {
    pub epsilon: f64,
    pub tau_physical: f64,
    pub tau_logical: f64,
    pub lambda: f64,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub band: Vec<f64>,
}

/// One ε grid point: either a result or the reason it is unreachable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaPoint {
    pub epsilon: f64,
    pub result: Option<LifetimeResult>,
    pub flag: Option<String>,
}

/// Draws of `(coefficient, offset)` from the fit covariance.
fn parameter_draws(fit: &ErrorFit, n: usize, rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let cov = Matrix2::new(fit.covariance[0][0], fit.covariance[0][1], fit.covariance[1][0], fit.covariance[1][1]);
    let eig = SymmetricEigen::new(cov);
    let root = eig.eigenvectors
        * Matrix2::from_diagonal(&eig.eigenvalues.map(|v| v.max(0.0).sqrt()))
        * eig.eigenvectors.transpose();
    (0..n)
        .map(|_| {
            let z = Vector2::new(StandardNormal.sample(rng), StandardNormal.sample(rng));
            let d = root * z;
            (fit.coefficient + d[0], fit.offset + d[1])
        })
        .collect()
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.len() == 1 {
        return sorted[0];
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `Λ(ε) = τ_L(ε)/τ_P(ε)` on a grid, with a band from `resamples` parameter draws.
pub fn lambda_ratio(
    fit_logical: &ErrorFit,
    fit_physical: &ErrorFit,
    epsilon_grid: &[f64],
    resamples: usize,
    noise: &DephasingParams,
    seed: u64,
) -> Vec<LambdaPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws_l = parameter_draws(fit_logical, resamples, &mut rng);
    let draws_p = parameter_draws(fit_physical, resamples, &mut rng);
    epsilon_grid
        .iter()
        .map(|&epsilon| {
            let central = useful_lifetime(fit_logical, epsilon, noise)
                .and_then(|tl| Ok((tl, useful_lifetime(fit_physical, epsilon, noise)?)));
            match central {
                Err(e) => LambdaPoint { epsilon, result: None, flag: Some(e.to_string()) },
                Ok((tau_logical, tau_physical)) => {
                    let lambda = if tau_physical > 0.0 { tau_logical / tau_physical } else { f64::INFINITY };
                    let mut band: Vec<f64> = draws_l
                        .iter()
                        .zip(&draws_p)
                        .filter_map(|(&(bl, cl), &(bp, cp))| {
                            let xl = invert_curve(fit_logical.kind, bl, cl.max(0.0), epsilon).ok()?;
                            let xp = invert_curve(fit_physical.kind, bp, cp.max(0.0), epsilon).ok()?;
                            (xp > 0.0).then(|| (xl / xp).sqrt())
                        })
                        .collect();
                    band.sort_by(f64::total_cmp);
                    let (lambda_lo, lambda_hi) = if band.is_empty() {
                        (lambda, lambda)
                    } else {
                        (percentile(&band, 0.16), percentile(&band, 0.84))
                    };
                    LambdaPoint {
                        epsilon,
                        result: Some(LifetimeResult { epsilon, tau_physical, tau_logical, lambda, lambda_lo, lambda_hi, band }),
                        flag: None,
                    }
                }
            }
        })
        .collect()
}

/// Max-abs difference between a state and the product of its marginals.
pub fn product_deviation(full: &CMatrix, a: &CMatrix, b: &CMatrix) -> f64 {
    linalg::max_abs_diff(full, &linalg::kron(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::dephasing_params;
    use crate::spinops::{Basis, SpinManifold};

    fn pts(f: impl Fn(f64) -> f64) -> Vec<FitPoint> {
        (1..=8)
            .map(|i| {
                let chi = 0.005 * i as f64;
                FitPoint { t: 0.0, chi, epsilon: f(chi), sigma: 1e-3 }
            })
            .collect()
    }

    #[test]
    fn closed_forms_start_at_one() {
        assert_eq!(f_physical(0.0, 2.0), 1.0);
        assert!((f_encoded(0.0, 1.2) - 1.0).abs() < 1e-15);
        assert!((f_corrected(0.0, 1.2) - 1.0).abs() < 1e-15);
        assert!((f_corrected_with_delta(0.0, 0.0, 1.2) - 1.0).abs() < 1e-15);
        assert!((f_physical(1e6, 2.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn delta_limit_and_offset() {
        for i in 0..20 {
            let chi = 0.01 * i as f64;
            assert!((f_corrected_with_delta(chi, 0.0, 1.2) - f_corrected(chi, 1.2)).abs() < 1e-12);
        }
        let d = delta_for_offset(0.022).unwrap();
        assert!((1.0 - f_corrected_with_delta(0.0, d, 1.2) - 0.022).abs() < 1e-12);
    }

    #[test]
    fn mixed_state_fidelity_with_pure() {
        let b = Basis::Spin(SpinManifold::d52());
        let mixed = DensityMatrix::maximally_mixed(b.clone());
        let psi = Ket::basis_vector(b, 2).to_density();
        assert!((uhlmann_fidelity(&mixed, &psi).unwrap() - 1.0 / 6.0).abs() < 1e-10);
        assert!((uhlmann_fidelity(&psi, &mixed).unwrap() - 1.0 / 6.0).abs() < 1e-10);
    }

    #[test]
    fn exact_fits() {
        let lin = fit_error_curve(&pts(|x| 2.0 * x + 0.004), FitKind::Linear).unwrap();
        assert!((lin.coefficient - 2.0).abs() < 1e-9 && (lin.offset - 0.004).abs() < 1e-9);
        let quad = fit_error_curve(&pts(|x| 15.552 * x * x + 0.022), FitKind::Quadratic).unwrap();
        assert!((quad.coefficient - 15.552).abs() < 1e-9 && (quad.offset - 0.022).abs() < 1e-9);
        assert!(lin.chi_squared < 1e-12);
        let pinned = fit_error_curve(&pts(|x| 2.0 * x - 0.01), FitKind::Linear).unwrap();
        assert!(pinned.offset_fixed && pinned.offset == 0.0);
        assert!(fit_error_curve(&pts(|x| x)[..2], FitKind::Linear).is_err());
    }

    #[test]
    fn sinusoid_recovers_parameters() {
        let phi: Vec<f64> = (0..12).map(|k| k as f64 * TAU / 12.0).collect();
        let y: Vec<f64> = phi.iter().map(|p| 0.1 * (p - 0.4).cos() + 0.3).collect();
        let s = vec![1e-3; 12];
        let fit = fit_sinusoid(&phi, &y, &s, 1.0).unwrap();
        assert!((fit.amplitude - 0.1).abs() < 1e-12 && (fit.phase - 0.4).abs() < 1e-12);
        assert!((fit.offset - 0.3).abs() < 1e-12 && !fit.failed);
        let free = fit_sinusoid_free(&phi, &y, &s, 0.5, 1.5).unwrap();
        assert!((free.omega - 1.0).abs() < 1e-6);
        let line = fit_line(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0], &[0.1; 3]).unwrap();
        assert!((line.slope - 2.0).abs() < 1e-12 && (line.intercept - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lifetime_inversion() {
        let noise = dephasing_params(0.78e-9, 0.0, 2.0).unwrap();
        let fit = fit_error_curve(&pts(|x| 2.0 * x), FitKind::Linear).unwrap();
        let t = useful_lifetime(&fit, 0.03, &noise).unwrap();
        let expect = 0.03f64.sqrt() / (std::f64::consts::TAU * 13.99624604e9 * 0.78e-9);
        assert!((t - expect).abs() < 1e-12 * expect);
        let wide = dephasing_params(1.56e-9, 0.0, 2.0).unwrap();
        assert!((useful_lifetime(&fit, 0.03, &wide).unwrap() - t / 2.0).abs() < 1e-15);
        let quad = fit_error_curve(&pts(|x| 15.0 * x * x + 0.02), FitKind::Quadratic).unwrap();
        assert!(useful_lifetime(&quad, quad.offset, &noise).unwrap().abs() < 1e-6);
        assert!(matches!(useful_lifetime(&quad, 0.01, &noise), Err(Error::UnreachableCutoff { .. })));
    }

    #[test]
    fn lambda_identical_and_zero_covariance() {
        let noise = dephasing_params(0.78e-9, 0.0, 2.0).unwrap();
        let mut fit = fit_error_curve(&pts(|x| 2.0 * x + 0.004), FitKind::Linear).unwrap();
        let out = lambda_ratio(&fit, &fit, &[0.01, 0.03], 100, &noise, 1);
        for p in &out {
            assert!((p.result.as_ref().unwrap().lambda - 1.0).abs() < 1e-12);
        }
        fit.covariance = [[0.0; 2]; 2];
        let out = lambda_ratio(&fit, &fit, &[0.03], 100, &noise, 1);
        let r = out[0].result.as_ref().unwrap();
        assert!(r.band.iter().all(|&l| (l - 1.0).abs() < 1e-12));
        assert_eq!((r.lambda_lo, r.lambda_hi), (1.0, 1.0));
        let flagged = lambda_ratio(&fit, &fit, &[0.001], 10, &noise, 1);
        assert!(flagged[0].result.is_none() && flagged[0].flag.is_some());
    }
}
