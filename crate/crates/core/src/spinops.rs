//! Angular-momentum algebra and SU(2) rotations on a `(2J+1)`-level manifold.
//!
//! Basis vectors are ordered by descending `m_J` (`+J` first), so `Jz` is
//! `diag(J, J-1, ..., -J)`. Rotations follow `R(n, θ) = exp(-iθ n·J)`.

use std::fmt;
use std::ops::Mul;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, r, CMatrix, CVector, Spectral, C64, I};

/// Max-abs tolerance for unitarity and Hermiticity checks.
pub const OPERATOR_TOL: f64 = 1e-12;

/// A spin-`J` manifold with its Landé factor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinManifold {
    twice_j: u32,
    g_j: f64,
}

impl SpinManifold {
    pub fn new(j: f64, g_j: f64) -> Result<Self> {
        let twice = 2.0 * j;
        if !(twice.is_finite() && twice >= 0.0 && (twice - twice.round()).abs() < 1e-9) {
            return Err(Error::InvalidManifold(format!("2J must be a non-negative integer, got J = {j}")));
        }
        if !g_j.is_finite() {
            return Err(Error::InvalidManifold(format!("non-finite Landé factor {g_j}")));
        }
        Ok(Self::from_twice_j(twice.round() as u32, g_j))
    }

    pub const fn from_twice_j(twice_j: u32, g_j: f64) -> Self {
        SpinManifold { twice_j, g_j }
    }

    /// The `D5/2` manifold of a calcium ion (`g_J = 6/5`).
    pub const fn d52() -> Self {
        Self::from_twice_j(5, 1.2)
    }

    /// The `S1/2` ground-state qubit (`g_J = 2`).
    pub const fn ground() -> Self {
        Self::from_twice_j(1, 2.0)
    }

    pub fn j(&self) -> f64 {
        self.twice_j as f64 / 2.0
    }

    pub fn twice_j(&self) -> u32 {
        self.twice_j
    }

    pub fn dim(&self) -> usize {
        self.twice_j as usize + 1
    }

    pub fn g_j(&self) -> f64 {
        self.g_j
    }

    pub fn is_half_integer(&self) -> bool {
        self.twice_j % 2 == 1
    }

    /// `m_J` labels in basis order, `+J` down to `-J`.
    pub fn m_values(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.m_at(k)).collect()
    }

    pub fn m_at(&self, index: usize) -> f64 {
        self.j() - index as f64
    }

    pub fn index_of(&self, m: f64) -> Option<usize> {
        let k = self.j() - m;
        if k < -1e-9 || (k - k.round()).abs() > 1e-9 {
            return None;
        }
        let k = k.round() as usize;
        (k < self.dim()).then_some(k)
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.dim())
            .map(|k| format_half_integer(self.twice_j as i64 - 2 * k as i64))
            .collect()
    }
}

/// Formats `twice / 2` as `+5/2`, `-1`, `0`, ...
pub fn format_half_integer(twice: i64) -> String {
    if twice == 0 {
        "0".to_string()
    } else if twice % 2 == 0 {
        format!("{:+}", twice / 2)
    } else {
        format!("{:+}/2", twice)
    }
}

/// The ordered basis an [`Operator`] acts on.
#[derive(Clone, Debug, PartialEq)]
pub enum Basis {
    Spin(SpinManifold),
    Labeled(Arc<[String]>),
}

impl Basis {
    pub fn labeled<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Basis::Labeled(labels.into_iter().map(Into::into).collect::<Vec<_>>().into())
    }

    pub fn dim(&self) -> usize {
        match self {
            Basis::Spin(m) => m.dim(),
            Basis::Labeled(l) => l.len(),
        }
    }

    pub fn labels(&self) -> Vec<String> {
        match self {
            Basis::Spin(m) => m.labels(),
            Basis::Labeled(l) => l.to_vec(),
        }
    }

    pub fn spin(&self) -> Option<&SpinManifold> {
        match self {
            Basis::Spin(m) => Some(m),
            Basis::Labeled(_) => None,
        }
    }

    fn same_space(&self, other: &Basis) -> bool {
        match (self, other) {
            (Basis::Spin(a), Basis::Spin(b)) => a.twice_j == b.twice_j,
            _ => self.labels() == other.labels(),
        }
    }
}

/// Dense complex square matrix tied to an ordered basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    matrix: CMatrix,
    basis: Basis,
}

impl Operator {
    pub fn new(matrix: CMatrix, basis: Basis) -> Result<Self> {
        let d = basis.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: matrix.nrows().max(matrix.ncols()) });
        }
        Ok(Operator { matrix, basis })
    }

    pub(crate) fn from_parts(matrix: CMatrix, basis: Basis) -> Self {
        debug_assert_eq!(matrix.nrows(), basis.dim());
        Operator { matrix, basis }
    }

    pub fn identity(basis: Basis) -> Self {
        let d = basis.dim();
        Operator { matrix: CMatrix::identity(d, d), basis }
    }

    pub fn diagonal(basis: Basis, entries: &[C64]) -> Result<Self> {
        Self::new(CMatrix::from_diagonal(&CVector::from_column_slice(entries)), basis)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Operator { matrix: self.matrix.adjoint(), basis: self.basis.clone() }
    }

    pub fn scale(&self, s: C64) -> Self {
        Operator { matrix: self.matrix.map(|x| x * s), basis: self.basis.clone() }
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    pub fn unitarity_error(&self) -> f64 {
        linalg::unitarity_error(&self.matrix)
    }

    pub fn hermiticity_error(&self) -> f64 {
        linalg::hermiticity_error(&self.matrix)
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_error() <= OPERATOR_TOL
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_error() <= OPERATOR_TOL
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        linalg::max_abs_diff(&self.matrix, &other.matrix)
    }

    /// `self · rho · self†`.
    pub fn conjugate(&self, rho: &CMatrix) -> CMatrix {
        linalg::conjugate(&self.matrix, rho)
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        &self.matrix * v
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        Operator::from_parts(
            &self.matrix * &other.matrix - &other.matrix * &self.matrix,
            self.basis.clone(),
        )
    }

    pub fn pow(&self, k: u32) -> Operator {
        let mut acc = Operator::identity(self.basis.clone());
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }
}

impl Mul for &Operator {
    type Output = Operator;

    fn mul(self, rhs: &Operator) -> Operator {
        assert!(self.basis.same_space(&rhs.basis), "operator basis mismatch");
        Operator::from_parts(&self.matrix * &rhs.matrix, self.basis.clone())
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels = self.basis.labels();
        for (i, l) in labels.iter().enumerate() {
            write!(f, "{l:>6} |")?;
            for j in 0..self.dim() {
                let z = self.matrix[(i, j)];
                write!(f, " {:+.4}{:+.4}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Cartesian and ladder components of `J` on one manifold.
#[derive(Clone, Debug)]
pub struct AngularMomentum {
    pub jx: Operator,
    pub jy: Operator,
    pub jz: Operator,
    pub jplus: Operator,
    pub jminus: Operator,
}

pub fn angular_momentum_ops(manifold: &SpinManifold) -> AngularMomentum {
    let d = manifold.dim();
    let j = manifold.j();
    let basis = Basis::Spin(*manifold);

    let mut jz = CMatrix::zeros(d, d);
    let mut jp = CMatrix::zeros(d, d);
    for k in 0..d {
        let m = manifold.m_at(k);
        jz[(k, k)] = r(m);
        // J+|m> = sqrt(J(J+1) - m(m+1)) |m+1>; |m+1> sits one row up.
        if k > 0 {
            jp[(k - 1, k)] = r((j * (j + 1.0) - m * (m + 1.0)).sqrt());
        }
    }
    let jm = jp.adjoint();
    let jx = (&jp + &jm).scale(0.5);
    let jy = (&jp - &jm).map(|z| z / (2.0 * I));

    AngularMomentum {
        jx: Operator::from_parts(jx, basis.clone()),
        jy: Operator::from_parts(jy, basis.clone()),
        jz: Operator::from_parts(jz, basis.clone()),
        jplus: Operator::from_parts(jp, basis.clone()),
        jminus: Operator::from_parts(jm, basis),
    }
}

/// `exp(-i · scale · H)` for Hermitian `H`, via its eigendecomposition.
pub fn expm_antihermitian(h: &Operator, scale: f64) -> Result<Operator> {
    let deviation = h.hermiticity_error();
    if deviation > OPERATOR_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(Operator::from_parts(Spectral::of(h.matrix()).exp_i(scale), h.basis().clone()))
}

/// `R(n, θ) = exp(-iθ n·J)`.
pub fn su2_rotation(manifold: &SpinManifold, axis: [f64; 3], angle: f64) -> Result<Operator> {
    let norm = axis.iter().map(|a| a * a).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NonUnitAxis { norm });
    }
    let ops = angular_momentum_ops(manifold);
    let generator = ops.jx.matrix().scale(axis[0]) + ops.jy.matrix().scale(axis[1]) + ops.jz.matrix().scale(axis[2]);
    Ok(Operator::from_parts(Spectral::of(&generator).exp_i(angle), Basis::Spin(*manifold)))
}

pub fn rotation_x(manifold: &SpinManifold, angle: f64) -> Operator {
    su2_rotation(manifold, [1.0, 0.0, 0.0], angle).expect("unit axis")
}

pub fn rotation_y(manifold: &SpinManifold, angle: f64) -> Operator {
    su2_rotation(manifold, [0.0, 1.0, 0.0], angle).expect("unit axis")
}

pub fn rotation_z(manifold: &SpinManifold, angle: f64) -> Operator {
    su2_rotation(manifold, [0.0, 0.0, 1.0], angle).expect("unit axis")
}

/// Cached spectral data for repeated `exp(-iφ n·J)` evaluation at varying φ.
#[derive(Clone, Debug)]
pub struct RotationGenerator {
    manifold: SpinManifold,
    spectral: Spectral,
}

impl RotationGenerator {
    pub fn new(manifold: &SpinManifold, generator: &Operator) -> Result<Self> {
        let deviation = generator.hermiticity_error();
        if deviation > OPERATOR_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(RotationGenerator { manifold: *manifold, spectral: Spectral::of(generator.matrix()) })
    }

    pub fn rotation(&self, angle: f64) -> Operator {
        Operator::from_parts(self.spectral.exp_i(angle), Basis::Spin(self.manifold))
    }
}
