//! Pure states and density matrices over an [`Operator`] basis.

use crate::error::{Error, Result};
use crate::linalg::{self, r, CMatrix, CVector, Spectral, C64};
use crate::spinops::{Basis, Operator, SpinManifold};

/// Tolerance for trace, Hermiticity and positivity of density matrices.
pub const STATE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    amplitudes: CVector,
    basis: Basis,
}

impl Ket {
    pub fn new(amplitudes: CVector, basis: Basis) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::DimensionMismatch { expected: basis.dim(), actual: amplitudes.len() });
        }
        Ok(Ket { amplitudes, basis })
    }

    pub(crate) fn from_parts(amplitudes: CVector, basis: Basis) -> Self {
        Ket { amplitudes, basis }
    }

    /// Basis vector `|m⟩` of a spin manifold.
    pub fn spin_basis(manifold: &SpinManifold, m: f64) -> Result<Self> {
        let idx = manifold
            .index_of(m)
            .ok_or_else(|| Error::InvalidManifold(format!("m = {m} not in manifold J = {}", manifold.j())))?;
        Ok(Self::basis_vector(Basis::Spin(*manifold), idx))
    }

    pub fn basis_vector(basis: Basis, index: usize) -> Self {
        let mut v = CVector::zeros(basis.dim());
        v[index] = r(1.0);
        Ket { amplitudes: v, basis }
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amplitudes[index]
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm_sqr().sqrt();
        Ket { amplitudes: self.amplitudes.unscale(n), basis: self.basis.clone() }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Ket) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn scaled(&self, s: C64) -> Self {
        Ket { amplitudes: self.amplitudes.map(|z| z * s), basis: self.basis.clone() }
    }

    pub fn add(&self, other: &Ket) -> Self {
        Ket { amplitudes: &self.amplitudes + &other.amplitudes, basis: self.basis.clone() }
    }

    pub fn transformed(&self, op: &Operator) -> Self {
        Ket { amplitudes: op.apply(&self.amplitudes), basis: self.basis.clone() }
    }

    /// Global phase fixed so the first non-negligible amplitude is real positive.
    pub fn canonical_phase(&self) -> Self {
        let lead = self
            .amplitudes
            .iter()
            .find(|z| z.norm() > 1e-12)
            .copied()
            .unwrap_or(r(1.0));
        let phase = lead.conj() / lead.norm();
        self.scaled(phase)
    }

    /// `|⟨self|other⟩|`, i.e. equality up to global phase when it is 1.
    pub fn overlap_abs(&self, other: &Ket) -> f64 {
        self.inner(other).norm()
    }

    pub fn projector(&self) -> CMatrix {
        &self.amplitudes * self.amplitudes.adjoint()
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::from_parts(self.normalized().projector(), self.basis.clone())
    }
}

/// Hermitian, positive semidefinite, unit-trace operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(Operator);

impl DensityMatrix {
    pub fn new(op: Operator) -> Result<Self> {
        validate(op.matrix())?;
        Ok(DensityMatrix(op))
    }

    pub fn from_matrix(matrix: CMatrix, basis: Basis) -> Result<Self> {
        Self::new(Operator::new(matrix, basis)?)
    }

    pub(crate) fn from_parts(matrix: CMatrix, basis: Basis) -> Self {
        DensityMatrix(Operator::from_parts(matrix, basis))
    }

    pub fn maximally_mixed(basis: Basis) -> Self {
        let d = basis.dim();
        DensityMatrix::from_parts(CMatrix::identity(d, d).unscale(d as f64), basis)
    }

    pub fn operator(&self) -> &Operator {
        &self.0
    }

    pub fn matrix(&self) -> &CMatrix {
        self.0.matrix()
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0.into_matrix()
    }

    pub fn basis(&self) -> &Basis {
        self.0.basis()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.0.entry(row, col)
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(self.matrix()).re
    }

    pub fn purity(&self) -> f64 {
        linalg::trace(&(self.matrix() * self.matrix())).re
    }

    pub fn populations(&self) -> Vec<f64> {
        self.matrix().diagonal().iter().map(|z| z.re).collect()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        Spectral::of(self.matrix()).values.iter().copied().collect()
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn expectation(&self, psi: &Ket) -> f64 {
        psi.amplitudes().dotc(&(self.matrix() * psi.amplitudes())).re
    }

    pub fn evolve(&self, u: &Operator) -> DensityMatrix {
        DensityMatrix::from_parts(u.conjugate(self.matrix()), self.basis().clone())
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        linalg::max_abs_diff(self.matrix(), other.matrix())
    }

    /// Convex combination `(1-p) self + p other`.
    pub fn mix(&self, other: &DensityMatrix, p: f64) -> DensityMatrix {
        DensityMatrix::from_parts(self.matrix().scale(1.0 - p) + other.matrix().scale(p), self.basis().clone())
    }
}

fn validate(m: &CMatrix) -> Result<()> {
    let herm = linalg::hermiticity_error(m);
    if herm > STATE_TOL {
        return Err(Error::InvalidDensityMatrix(format!("not Hermitian (deviation {herm:e})")));
    }
    let tr = linalg::trace(m).re;
    if (tr - 1.0).abs() > STATE_TOL {
        return Err(Error::InvalidDensityMatrix(format!("trace {tr}")));
    }
    let min = Spectral::of(m).min_value();
    if min < -STATE_TOL {
        return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {min:e}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn canonical_phase_makes_lead_real() {
        let m = SpinManifold::ground();
        let k = Ket::new(CVector::from_vec(vec![c(0.0, 0.6), c(0.8, 0.0)]), Basis::Spin(m)).unwrap();
        let can = k.canonical_phase();
        assert!((can.amplitude(0) - r(0.6)).norm() < 1e-15);
        assert!((can.amplitude(1) - c(0.0, -0.8)).norm() < 1e-15);
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        let b = Basis::Spin(SpinManifold::ground());
        let not_unit = CMatrix::identity(2, 2);
        assert!(DensityMatrix::from_matrix(not_unit, b.clone()).is_err());
        let negative = CMatrix::from_row_slice(2, 2, &[r(1.5), r(0.0), r(0.0), r(-0.5)]);
        assert!(DensityMatrix::from_matrix(negative, b.clone()).is_err());
        assert!(DensityMatrix::from_matrix(CMatrix::identity(2, 2).scale(0.5), b).is_ok());
    }
}
