//! Magnetic dephasing noise on a spin manifold.
//!
//! The quasi-static field model draws one Gaussian phase per trial and applies
//! `exp(-iφ Jz)`. Averaged over trials this is the Gaussian dephasing channel,
//! which damps `ρ[m,n]` by `exp(-σ²(m-n)²/2)`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{r, CMatrix, C64};
use crate::spinops::{angular_momentum_ops, rotation_y, Basis, Operator, RotationGenerator, SpinManifold};
use crate::state::DensityMatrix;

/// Bohr magneton over ħ in rad s⁻¹ T⁻¹ (2π × 13.99624604 GHz/T).
pub const MU_B_OVER_HBAR: f64 = TAU * 1.399624604e10;

/// Field width extracted from the ground-state qubit, in tesla.
pub const DEFAULT_SIGMA_B: f64 = 0.78e-9;

/// Measured `D5/2` quadrupole shift between `|m|=5/2` and `|m|=1/2`, in Hz.
pub const QUADRUPOLE_SHIFT_HZ: f64 = 38.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DephasingParams {
    pub sigma_b: f64,
    pub t: f64,
    pub g_j: f64,
    pub sigma_phi: f64,
    pub chi: f64,
}

impl DephasingParams {
    /// `μ_B σ_B / ħ`, the dephasing rate scale in rad/s.
    pub fn rate(&self) -> f64 {
        MU_B_OVER_HBAR * self.sigma_b
    }
}

pub fn dephasing_params(sigma_b: f64, t: f64, g_j: f64) -> Result<DephasingParams> {
    if sigma_b < 0.0 {
        return Err(Error::Negative { name: "sigma_b", value: sigma_b });
    }
    if t < 0.0 {
        return Err(Error::Negative { name: "t", value: t });
    }
    let scale = MU_B_OVER_HBAR * sigma_b * t;
    Ok(DephasingParams {
        sigma_b,
        t,
        g_j,
        sigma_phi: g_j * scale,
        chi: 0.5 * scale * scale,
    })
}

/// `χ = σ_φ² / (2 g_J²)`.
pub fn chi_from_sigma_phi(sigma_phi: f64, g_j: f64) -> f64 {
    sigma_phi * sigma_phi / (2.0 * g_j * g_j)
}

/// `σ_φ = g_J √(2χ)`.
pub fn sigma_phi_from_chi(chi: f64, g_j: f64) -> f64 {
    g_j * (2.0 * chi).sqrt()
}

/// Damping factor of `ρ[m,n]` for label distance `Δm`.
#[inline]
pub fn dephasing_factor(sigma_phi: f64, delta_m: f64) -> f64 {
    (-0.5 * sigma_phi * sigma_phi * delta_m * delta_m).exp()
}

/// Applies the Gaussian dephasing channel entrywise.
pub fn dephase(rho: &DensityMatrix, sigma_phi: f64) -> Result<DensityMatrix> {
    if sigma_phi < 0.0 {
        return Err(Error::Negative { name: "sigma_phi", value: sigma_phi });
    }
    let manifold = rho.basis().spin().ok_or(Error::NotSpinBasis)?;
    Ok(DensityMatrix::from_parts(
        dephase_matrix(rho.matrix(), manifold, sigma_phi),
        rho.basis().clone(),
    ))
}

pub(crate) fn dephase_matrix(rho: &CMatrix, manifold: &SpinManifold, sigma_phi: f64) -> CMatrix {
    if sigma_phi == 0.0 {
        return rho.clone();
    }
    let m = manifold.m_values();
    let mut out = rho.clone();
    for i in 0..m.len() {
        for j in 0..m.len() {
            if i != j {
                out[(i, j)] *= dephasing_factor(sigma_phi, m[i] - m[j]);
            }
        }
    }
    out
}

/// Draws per-trial phase errors and builds the RF rotation sequence
/// `R_y(-π/2) · R_x(φ) · R_y(π/2)`, which equals `exp(-iφ Jz)`.
#[derive(Clone, Debug)]
pub struct ErrorSampler {
    manifold: SpinManifold,
    pre: Operator,
    post: Operator,
    jx: RotationGenerator,
    normal: Option<Normal<f64>>,
}

impl ErrorSampler {
    pub fn new(manifold: &SpinManifold, sigma_phi: f64) -> Result<Self> {
        if sigma_phi < 0.0 {
            return Err(Error::Negative { name: "sigma_phi", value: sigma_phi });
        }
        let ops = angular_momentum_ops(manifold);
        Ok(ErrorSampler {
            manifold: *manifold,
            pre: rotation_y(manifold, FRAC_PI_2),
            post: rotation_y(manifold, -FRAC_PI_2),
            jx: RotationGenerator::new(manifold, &ops.jx)?,
            normal: (sigma_phi > 0.0).then(|| Normal::new(0.0, sigma_phi).expect("finite width")),
        })
    }

    pub fn sample_phase<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.normal.map_or(0.0, |n| n.sample(rng))
    }

    /// The rotation sequence for a given phase.
    pub fn unitary(&self, phi: f64) -> Operator {
        &(&self.post * &self.jx.rotation(phi)) * &self.pre
    }

    /// Diagonal of `exp(-iφ Jz)` in basis order; same operator as [`Self::unitary`].
    pub fn phases(&self, phi: f64) -> Vec<C64> {
        self.manifold
            .m_values()
            .into_iter()
            .map(|m| C64::from_polar(1.0, -phi * m))
            .collect()
    }
}

pub fn sample_error_unitary<R: Rng + ?Sized>(
    manifold: &SpinManifold,
    sigma_phi: f64,
    rng: &mut R,
) -> Result<(f64, Operator)> {
    let sampler = ErrorSampler::new(manifold, sigma_phi)?;
    let phi = sampler.sample_phase(rng);
    Ok((phi, sampler.unitary(phi)))
}

/// The discrete error basis `{I, Jz, Jz², ..., Jz^k}`.
#[derive(Clone, Debug)]
pub struct ErrorOperatorSet {
    pub manifold: SpinManifold,
    pub max_order: u32,
    pub operators: Vec<Operator>,
}

impl ErrorOperatorSet {
    /// Diagonal entries `m^k` of operator `k`, in basis order.
    pub fn diagonal(&self, k: usize) -> Vec<f64> {
        self.manifold.m_values().iter().map(|m| m.powi(k as i32)).collect()
    }
}

pub fn error_operator_set(manifold: &SpinManifold, max_order: u32) -> ErrorOperatorSet {
    let basis = Basis::Spin(*manifold);
    let m = manifold.m_values();
    let operators = (0..=max_order)
        .map(|k| {
            let diag: Vec<C64> = m.iter().map(|x| r(x.powi(k as i32))).collect();
            Operator::diagonal(basis.clone(), &diag).expect("dimension matches manifold")
        })
        .collect();
    ErrorOperatorSet { manifold: *manifold, max_order, operators }
}

/// `exp(-i 2π ΔQ t Jz²)`. Positive `ΔQ` raises the outer `|m|` states.
/// The compensating laser pulse is the same call with `-ΔQ`.
pub fn quadrupole_unitary(manifold: &SpinManifold, delta_q: f64, t: f64) -> Result<Operator> {
    if t < 0.0 {
        return Err(Error::Negative { name: "t", value: t });
    }
    let diag: Vec<C64> = manifold
        .m_values()
        .iter()
        .map(|m| C64::from_polar(1.0, -2.0 * PI * delta_q * t * m * m))
        .collect();
    Operator::diagonal(Basis::Spin(*manifold), &diag)
}

/// Coefficient of `Jz²` that reproduces a given `|m|=J` vs `|m|=1/2` shift.
pub fn quadrupole_coefficient(manifold: &SpinManifold, outer_inner_shift_hz: f64) -> f64 {
    let j = manifold.j();
    outer_inner_shift_hz / (j * j - 0.25)
}
