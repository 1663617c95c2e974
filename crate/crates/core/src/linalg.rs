//! Dense complex helpers shared by the physics modules.
//!
//! Everything here works on small matrices (dimension ≤ ~100); the
//! Hermitian eigendecomposition is the single numerical workhorse.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn r(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn hermiticity_error(a: &CMatrix) -> f64 {
    max_abs_diff(a, &a.adjoint())
}

pub fn unitarity_error(u: &CMatrix) -> f64 {
    let n = u.nrows();
    max_abs_diff(&(u.adjoint() * u), &CMatrix::identity(n, n))
}

pub fn trace(a: &CMatrix) -> C64 {
    a.diagonal().sum()
}

/// Eigendecomposition of a Hermitian matrix, `H = V diag(λ) V†`.
#[derive(Clone, Debug)]
pub struct Spectral {
    pub values: DVector<f64>,
    pub vectors: CMatrix,
}

impl Spectral {
    /// The input is symmetrized before decomposition so that round-off in the
    /// anti-Hermitian part cannot leak into the eigenvectors.
    pub fn of(h: &CMatrix) -> Self {
        let sym = (h + h.adjoint()).scale(0.5);
        let eig = sym.symmetric_eigen();
        Spectral {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        }
    }

    /// `V f(λ) V†` for a complex-valued spectral function.
    pub fn map<F: Fn(f64) -> C64>(&self, f: F) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let fj = f(self.values[j]);
            for i in 0..n {
                scaled[(i, j)] *= fj;
            }
        }
        scaled * self.vectors.adjoint()
    }

    /// `exp(-i scale H)`.
    pub fn exp_i(&self, scale: f64) -> CMatrix {
        self.map(|l| C64::from_polar(1.0, -scale * l))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Principal square root of a PSD matrix. Eigenvalues in `[-clamp, 0)` are
/// treated as zero; anything more negative is passed through `max(0)` too,
/// callers validate positivity separately.
pub fn sqrt_psd(a: &CMatrix) -> CMatrix {
    Spectral::of(a).map(|l| r(l.max(0.0).sqrt()))
}

/// Kronecker product `a ⊗ b` (row index of `a` is the slow one).
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `U ρ U†`.
pub fn conjugate(u: &CMatrix, rho: &CMatrix) -> CMatrix {
    u * rho * u.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_of_diagonal() {
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![r(4.0), r(0.25), r(-1e-14)]));
        let s = sqrt_psd(&a);
        assert!((s[(0, 0)].re - 2.0).abs() < 1e-14);
        assert!((s[(1, 1)].re - 0.5).abs() < 1e-14);
        assert!(s[(2, 2)].norm() < 1e-7);
    }

    #[test]
    fn exp_of_pauli_y() {
        // exp(-i θ σy) = cos θ I - i sin θ σy
        let sy = CMatrix::from_row_slice(2, 2, &[r(0.0), c(0.0, -1.0), c(0.0, 1.0), r(0.0)]);
        let theta = 0.7;
        let u = Spectral::of(&sy).exp_i(theta);
        let expect = CMatrix::from_row_slice(
            2,
            2,
            &[r(theta.cos()), r(-theta.sin()), r(theta.sin()), r(theta.cos())],
        );
        assert!(max_abs_diff(&u, &expect) < 1e-14);
    }
}
