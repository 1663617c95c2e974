//! Spin-cat codewords, logical encode/decode and the Knill–Laflamme check.
//!
//! The codewords are `U_enc (|-J⟩ ∓ |+J⟩)/√2` with `U_enc = exp(+iπ/2 Jy)`,
//! i.e. the `∓` cat of `Jx` extremal states written in the `Jz` basis.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use num_rational::Ratio;
use serde::{Serialize, Serializer};

use crate::channels::ErrorOperatorSet;
use crate::error::{Error, Result};
use crate::linalg::{r, C64};
use crate::spinops::{rotation_y, Operator, SpinManifold};
use crate::state::Ket;

/// Tolerance on KL equalities.
pub const KL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogicalQubit {
    pub alpha: C64,
    pub beta: C64,
}

impl LogicalQubit {
    pub fn new(alpha: C64, beta: C64) -> Result<Self> {
        let norm_sqr = alpha.norm_sqr() + beta.norm_sqr();
        if (norm_sqr - 1.0).abs() > KL_TOL {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(LogicalQubit { alpha, beta })
    }

    pub fn zero() -> Self {
        LogicalQubit { alpha: r(1.0), beta: r(0.0) }
    }

    /// `(|0⟩ - i|1⟩)/√2`, the state used for tomography and benchmarking.
    pub fn minus_i() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        LogicalQubit { alpha: r(s), beta: C64::new(0.0, -s) }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CodewordPair {
    pub zero: Ket,
    pub one: Ket,
}

impl CodewordPair {
    pub fn manifold(&self) -> SpinManifold {
        *self.zero.basis().spin().expect("codewords live on a spin manifold")
    }

    /// True when no basis state carries amplitude in both codewords.
    pub fn disjoint_supports(&self) -> bool {
        self.zero
            .amplitudes()
            .iter()
            .zip(self.one.amplitudes().iter())
            .all(|(a, b)| a.norm() < 1e-15 || b.norm() < 1e-15)
    }
}

pub fn encode_unitary(manifold: &SpinManifold) -> Operator {
    rotation_y(manifold, -FRAC_PI_2)
}

pub fn decode_unitary(manifold: &SpinManifold) -> Operator {
    encode_unitary(manifold).adjoint()
}

/// Spin-cat codewords for a half-integer manifold, phase-canonicalized.
pub fn spin_cat_codewords(manifold: &SpinManifold) -> Result<CodewordPair> {
    if !manifold.is_half_integer() {
        return Err(Error::InvalidManifold(format!(
            "spin-cat codewords need half-integer J, got J = {}",
            manifold.j()
        )));
    }
    let j = manifold.j();
    let low = Ket::spin_basis(manifold, -j)?;
    let high = Ket::spin_basis(manifold, j)?;
    let enc = encode_unitary(manifold);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let cat = |sign: f64| low.add(&high.scaled(r(sign))).scaled(r(s)).transformed(&enc);
    Ok(CodewordPair {
        zero: clean(cat(-1.0)).canonical_phase(),
        one: clean(cat(1.0)).canonical_phase(),
    })
}

/// Zeroes amplitudes that are pure round-off so supports are exact.
fn clean(k: Ket) -> Ket {
    let amps = k.amplitudes().map(|z| if z.norm() < 1e-14 { r(0.0) } else { z });
    Ket::from_parts(amps, k.basis().clone())
}

/// `α|0⟩ + β|1⟩` in the physical basis.
pub fn prepare_logical(q: &LogicalQubit, manifold: &SpinManifold) -> Result<Ket> {
    let q = LogicalQubit::new(q.alpha, q.beta)?;
    let pair = spin_cat_codewords(manifold)?;
    Ok(pair.zero.scaled(q.alpha).add(&pair.one.scaled(q.beta)))
}

/// Rational value rendered as `p/q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Exact(pub Ratio<i128>);

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self.0.denom() == 1 {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct KlEntry {
    pub j: u32,
    pub k: u32,
    pub zero_zero: C64,
    pub one_one: C64,
    pub zero_one: C64,
    pub exact_zero_zero: Option<Exact>,
    pub exact_one_one: Option<Exact>,
    pub exact_zero_one: Option<Exact>,
    pub satisfied: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct KlReport {
    pub twice_j: u32,
    pub max_order: u32,
    pub entries: Vec<KlEntry>,
    pub satisfied: bool,
}

impl KlReport {
    pub fn entry(&self, j: u32, k: u32) -> Option<&KlEntry> {
        self.entries.iter().find(|e| e.j == j && e.k == k)
    }

    pub fn violations(&self) -> impl Iterator<Item = &KlEntry> {
        self.entries.iter().filter(|e| !e.satisfied)
    }
}

/// Evaluates `⟨a|E_j† E_k|b⟩` for all ordered pairs of the error set.
pub fn kl_conditions(pair: &CodewordPair, errs: &ErrorOperatorSet) -> Result<KlReport> {
    let d = pair.zero.dim();
    if pair.one.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, actual: pair.one.dim() });
    }
    if errs.manifold.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, actual: errs.manifold.dim() });
    }
    let manifold = errs.manifold;
    let exact_pops = (rational_populations(&pair.zero), rational_populations(&pair.one));

    let mut entries = Vec::new();
    for (j, ej) in errs.operators.iter().enumerate() {
        for (k, ek) in errs.operators.iter().enumerate() {
            let prod = &ej.adjoint() * ek;
            let sandwich = |a: &Ket, b: &Ket| a.inner(&b.transformed(&prod));
            let zero_zero = sandwich(&pair.zero, &pair.zero);
            let one_one = sandwich(&pair.one, &pair.one);
            let zero_one = sandwich(&pair.zero, &pair.one);
            let power = (j + k) as u32;
            let exact_zero_zero = exact_pops.0.as_ref().map(|p| exact_moment(p, &manifold, power));
            let exact_one_one = exact_pops.1.as_ref().map(|p| exact_moment(p, &manifold, power));
            let exact_zero_one = pair.disjoint_supports().then(|| Exact(Ratio::from_integer(0)));
            let satisfied = (zero_zero - one_one).norm() <= KL_TOL && zero_one.norm() <= KL_TOL;
            entries.push(KlEntry {
                j: j as u32,
                k: k as u32,
                zero_zero,
                one_one,
                zero_one,
                exact_zero_zero,
                exact_one_one,
                exact_zero_one,
                satisfied,
            });
        }
    }
    let satisfied = entries.iter().all(|e| e.satisfied);
    Ok(KlReport { twice_j: manifold.twice_j(), max_order: errs.max_order, entries, satisfied })
}

/// Populations as integers over a common power-of-two denominator, when the
/// floating amplitudes are dyadic rationals to round-off.
fn rational_populations(k: &Ket) -> Option<(Vec<i128>, i128)> {
    let pops: Vec<f64> = k.amplitudes().iter().map(|z| z.norm_sqr()).collect();
    for bits in 0..=40u32 {
        let denom = 1i128 << bits;
        let nums: Vec<i128> = pops.iter().map(|p| (p * denom as f64).round() as i128).collect();
        let close = pops
            .iter()
            .zip(&nums)
            .all(|(p, n)| (p - *n as f64 / denom as f64).abs() < 1e-13);
        if close && nums.iter().sum::<i128>() == denom {
            return Some((nums, denom));
        }
    }
    None
}

/// `Σ_m p_m m^power` evaluated on doubled labels so everything stays integral.
fn exact_moment((nums, denom): &(Vec<i128>, i128), manifold: &SpinManifold, power: u32) -> Exact {
    let twice_j = manifold.twice_j() as i128;
    let total: i128 = nums
        .iter()
        .enumerate()
        .map(|(idx, n)| n * (twice_j - 2 * idx as i128).pow(power))
        .sum();
    Exact(Ratio::new(total, denom * 2i128.pow(power)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HammingReport {
    pub twice_j: u32,
    pub dim: usize,
    pub codewords: usize,
    pub syndrome_classes: usize,
    /// `⌊J - 1/2⌋`, the highest correctable dephasing order.
    pub max_correctable_order: u32,
    pub saturated: bool,
}

/// Codeword × syndrome count against the manifold dimension.
pub fn hamming_saturation(manifold: &SpinManifold, correctable_orders: u32) -> Result<HammingReport> {
    if !manifold.is_half_integer() {
        return Err(Error::InvalidManifold("Hamming accounting needs half-integer J".into()));
    }
    let dim = manifold.dim();
    let classes = correctable_orders as usize + 1;
    Ok(HammingReport {
        twice_j: manifold.twice_j(),
        dim,
        codewords: 2,
        syndrome_classes: classes,
        max_correctable_order: (manifold.twice_j() - 1) / 2,
        saturated: 2 * classes == dim,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::error_operator_set;

    #[test]
    fn codeword_norms_and_supports() {
        let pair = spin_cat_codewords(&SpinManifold::d52()).unwrap();
        assert!((pair.zero.norm_sqr() - 1.0).abs() < 1e-12);
        assert!((pair.one.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(pair.zero.inner(&pair.one).norm() < 1e-12);
        assert!(pair.disjoint_supports());
    }

    #[test]
    fn integer_spin_rejected() {
        assert!(spin_cat_codewords(&SpinManifold::new(2.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn rational_moments() {
        let pair = spin_cat_codewords(&SpinManifold::d52()).unwrap();
        let pops = rational_populations(&pair.zero).unwrap();
        assert_eq!(pops.1, 16);
        assert_eq!(exact_moment(&pops, &SpinManifold::d52(), 2).to_string(), "5/4");
        assert_eq!(exact_moment(&pops, &SpinManifold::d52(), 4).to_string(), "65/16");
        assert_eq!(exact_moment(&pops, &SpinManifold::d52(), 0).to_string(), "1");
    }

    #[test]
    fn unnormalized_logical_rejected() {
        assert!(LogicalQubit::new(r(1.0), r(1.0)).is_err());
        let q = LogicalQubit { alpha: r(0.9), beta: r(0.0) };
        assert!(prepare_logical(&q, &SpinManifold::d52()).is_err());
    }

    #[test]
    fn hamming_counts() {
        let h = hamming_saturation(&SpinManifold::d52(), 2).unwrap();
        assert!(h.saturated);
        assert_eq!(h.max_correctable_order, 2);
        assert!(hamming_saturation(&SpinManifold::ground(), 0).unwrap().saturated);
        assert!(hamming_saturation(&SpinManifold::new(1.5, 1.0).unwrap(), 1).unwrap().saturated);
        assert!(!hamming_saturation(&SpinManifold::d52(), 1).unwrap().saturated);
    }

    #[test]
    fn kl_dimension_mismatch() {
        let pair = spin_cat_codewords(&SpinManifold::d52()).unwrap();
        let errs = error_operator_set(&SpinManifold::new(1.5, 1.0).unwrap(), 2);
        assert!(matches!(kl_conditions(&pair, &errs), Err(Error::DimensionMismatch { .. })));
    }
}
