//! Measurement-free recovery through the ion's motional mode.
//!
//! The internal space is the 8-level ion (`S1/2` pair plus the `D5/2`
//! sextet), tensored with one or two truncated oscillator modes. Fock index
//! `n` runs over `0..=fock_cutoff`. Composite index layout is
//! `internal ⊗ mode0 ⊗ mode1` with the internal index slowest.
//!
//! First-order recovery: carrier π-pulses move `D±3/2 → S±1/2`, then blue
//! sideband π-pulses move `S±1/2|n⟩ → D±5/2|n+1⟩`. With the mode in `|0⟩`
//! the error-free `D±5/2|0⟩` branch has no sideband partner and is untouched.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, r, CMatrix, CVector, C64};
use crate::spinops::{format_half_integer, Basis, Operator, SpinManifold};
use crate::state::{DensityMatrix, Ket, STATE_TOL};

/// Populations above this in a mode's top Fock level trip the truncation guard.
pub const TRUNCATION_GUARD: f64 = 1e-6;

pub const DEFAULT_FOCK_CUTOFF: usize = 3;

/// Heating rate of the axial mode, quanta per second.
pub const PAPER_HEATING_RATE: f64 = 8.8;

/// One of the eight internal levels, labelled by `2·m_J`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IonLevel {
    S(i8),
    D(i8),
}

impl IonLevel {
    pub const ALL: [IonLevel; 8] = [
        IonLevel::S(-1),
        IonLevel::S(1),
        IonLevel::D(-5),
        IonLevel::D(-3),
        IonLevel::D(-1),
        IonLevel::D(1),
        IonLevel::D(3),
        IonLevel::D(5),
    ];

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&l| l == self).expect("valid ion level")
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn is_ground(self) -> bool {
        matches!(self, IonLevel::S(_))
    }

    /// Index in the descending-`m` `D5/2` spin basis.
    pub fn d52_index(self) -> Option<usize> {
        match self {
            IonLevel::D(twice_m) => Some(((5 - twice_m as i32) / 2) as usize),
            IonLevel::S(_) => None,
        }
    }

    pub fn from_d52_index(k: usize) -> Self {
        IonLevel::D(5 - 2 * k as i8)
    }

    pub fn label(self) -> String {
        match self {
            IonLevel::S(m) => format!("S{}", format_half_integer(m as i64)),
            IonLevel::D(m) => format!("D{}", format_half_integer(m as i64)),
        }
    }

    fn valid(self) -> bool {
        Self::ALL.contains(&self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseModel {
    /// Exact π swap on every sideband pair.
    Ideal,
    /// Pulse area π on `|0⟩↔|1⟩`, so `π√(n+1)` on `|n⟩↔|n+1⟩`.
    Calibrated,
}

impl Default for PulseModel {
    fn default() -> Self {
        PulseModel::Calibrated
    }
}

/// Ion levels ⊗ one or two truncated Fock modes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompositeSpace {
    fock_cutoff: usize,
    n_modes: usize,
}

impl CompositeSpace {
    pub fn new(fock_cutoff: usize, n_modes: usize) -> Result<Self> {
        if fock_cutoff < 2 {
            return Err(Error::InvalidPulse(format!("fock cutoff must be >= 2, got {fock_cutoff}")));
        }
        if !(1..=2).contains(&n_modes) {
            return Err(Error::InvalidPulse(format!("one or two motional modes supported, got {n_modes}")));
        }
        Ok(CompositeSpace { fock_cutoff, n_modes })
    }

    pub fn fock_cutoff(&self) -> usize {
        self.fock_cutoff
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn fock_dim(&self) -> usize {
        self.fock_cutoff + 1
    }

    pub fn motion_dim(&self) -> usize {
        self.fock_dim().pow(self.n_modes as u32)
    }

    pub fn dim(&self) -> usize {
        IonLevel::ALL.len() * self.motion_dim()
    }

    /// Composite index of `level ⊗ |n_0, n_1, ...⟩`.
    pub fn index(&self, level: IonLevel, fock: &[usize]) -> usize {
        debug_assert_eq!(fock.len(), self.n_modes);
        level.index() * self.motion_dim() + self.motion_index(fock)
    }

    fn motion_index(&self, fock: &[usize]) -> usize {
        fock.iter().fold(0, |acc, &n| acc * self.fock_dim() + n)
    }

    fn motion_tuple(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.n_modes];
        for slot in out.iter_mut().rev() {
            *slot = idx % self.fock_dim();
            idx /= self.fock_dim();
        }
        out
    }

    pub fn basis(&self) -> Basis {
        let mut labels = Vec::with_capacity(self.dim());
        for level in IonLevel::ALL {
            for mi in 0..self.motion_dim() {
                let n = self.motion_tuple(mi);
                let ns: Vec<String> = n.iter().map(|x| x.to_string()).collect();
                labels.push(format!("{}|{}>", level.label(), ns.join(",")));
            }
        }
        Basis::labeled(labels)
    }

    pub fn internal_basis() -> Basis {
        Basis::labeled(IonLevel::ALL.iter().map(|l| l.label()))
    }
}

/// Initial motional state of one mode.
#[derive(Clone, Debug, PartialEq)]
pub enum MotionalState {
    Fock(usize),
    /// Geometric distribution with mean occupation `n̄`, truncated and renormalized.
    Thermal(f64),
    /// Explicit Fock populations.
    Populations(Vec<f64>),
}

impl MotionalState {
    pub fn populations(&self, fock_cutoff: usize) -> Result<Vec<f64>> {
        let dim = fock_cutoff + 1;
        match self {
            MotionalState::Fock(n) => {
                if *n > fock_cutoff {
                    return Err(Error::TruncationGuard { population: 1.0 });
                }
                let mut p = vec![0.0; dim];
                p[*n] = 1.0;
                Ok(p)
            }
            MotionalState::Thermal(nbar) => {
                if *nbar < 0.0 {
                    return Err(Error::Negative { name: "nbar", value: *nbar });
                }
                let x = nbar / (1.0 + nbar);
                let raw: Vec<f64> = (0..dim).map(|n| (1.0 - x) * x.powi(n as i32)).collect();
                let total: f64 = raw.iter().sum();
                Ok(raw.into_iter().map(|p| p / total).collect())
            }
            MotionalState::Populations(p) => {
                if p.len() > dim && p[dim..].iter().any(|&x| x > 0.0) {
                    return Err(Error::TruncationGuard { population: p[dim..].iter().sum() });
                }
                if p.iter().any(|&x| x < 0.0) {
                    return Err(Error::Negative { name: "population", value: p.iter().copied().fold(0.0, f64::min) });
                }
                let mut out = vec![0.0; dim];
                for (o, x) in out.iter_mut().zip(p) {
                    *o = *x;
                }
                let total: f64 = out.iter().sum();
                if (total - 1.0).abs() > STATE_TOL {
                    return Err(Error::NotNormalized { norm_sqr: total });
                }
                Ok(out)
            }
        }
    }
}

/// Density matrix on [`CompositeSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct CompositeState {
    space: CompositeSpace,
    rho: CMatrix,
}

impl CompositeState {
    pub fn new(space: CompositeSpace, rho: CMatrix) -> Result<Self> {
        let basis = space.basis();
        DensityMatrix::from_matrix(rho.clone(), basis)?;
        Ok(CompositeState { space, rho })
    }

    pub(crate) fn from_parts(space: CompositeSpace, rho: CMatrix) -> Self {
        CompositeState { space, rho }
    }

    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.rho).re
    }

    pub fn to_density(&self) -> Result<DensityMatrix> {
        DensityMatrix::from_matrix(self.rho.clone(), self.space.basis())
    }

    pub fn evolve(&self, u: &Operator) -> CompositeState {
        CompositeState { space: self.space.clone(), rho: u.conjugate(&self.rho) }
    }

    /// Partial trace over all motional modes.
    pub fn reduced_internal(&self) -> CMatrix {
        let md = self.space.motion_dim();
        let n = IonLevel::ALL.len();
        CMatrix::from_fn(n, n, |a, b| (0..md).map(|k| self.rho[(a * md + k, b * md + k)]).sum())
    }

    /// Partial trace over the ion and all other modes.
    pub fn reduced_mode(&self, mode: usize) -> CMatrix {
        let fd = self.space.fock_dim();
        let md = self.space.motion_dim();
        let mut out = CMatrix::zeros(fd, fd);
        for level in 0..IonLevel::ALL.len() {
            for i in 0..md {
                let ti = self.space.motion_tuple(i);
                for j in 0..md {
                    let tj = self.space.motion_tuple(j);
                    let others_match = (0..self.space.n_modes).all(|m| m == mode || ti[m] == tj[m]);
                    if others_match {
                        out[(ti[mode], tj[mode])] += self.rho[(level * md + i, level * md + j)];
                    }
                }
            }
        }
        out
    }

    /// Partial trace over the ion, all modes kept.
    pub fn reduced_motion(&self) -> CMatrix {
        let md = self.space.motion_dim();
        CMatrix::from_fn(md, md, |i, j| {
            (0..IonLevel::ALL.len()).map(|l| self.rho[(l * md + i, l * md + j)]).sum()
        })
    }

    pub fn mode_populations(&self, mode: usize) -> Vec<f64> {
        self.reduced_mode(mode).diagonal().iter().map(|z| z.re).collect()
    }

    pub fn top_level_population(&self, mode: usize) -> f64 {
        *self.mode_populations(mode).last().expect("non-empty mode")
    }

    pub fn ground_population(&self) -> f64 {
        let internal = self.reduced_internal();
        IonLevel::ALL
            .iter()
            .filter(|l| l.is_ground())
            .map(|l| internal[(l.index(), l.index())].re)
            .sum()
    }

    /// The `D5/2` block of the reduced internal state in descending-`m` order.
    /// Unnormalized: its trace is the population left in `D5/2`.
    pub fn d52_block(&self) -> CMatrix {
        d52_block_of(&self.reduced_internal())
    }

    fn guard(&self) -> Result<()> {
        for mode in 0..self.space.n_modes {
            let population = self.top_level_population(mode);
            if population >= TRUNCATION_GUARD {
                return Err(Error::TruncationGuard { population });
            }
        }
        Ok(())
    }
}

fn d52_block_of(internal: &CMatrix) -> CMatrix {
    CMatrix::from_fn(6, 6, |a, b| {
        internal[(IonLevel::from_d52_index(a).index(), IonLevel::from_d52_index(b).index())]
    })
}

/// Input to [`lift`]: either a `D5/2` state or a full 8-level ion state.
fn internal_matrix(internal: &DensityMatrix) -> Result<CMatrix> {
    match internal.dim() {
        6 => {
            let mut m = CMatrix::zeros(8, 8);
            for a in 0..6 {
                for b in 0..6 {
                    m[(IonLevel::from_d52_index(a).index(), IonLevel::from_d52_index(b).index())] =
                        internal.entry(a, b);
                }
            }
            Ok(m)
        }
        8 => Ok(internal.matrix().clone()),
        d => Err(Error::DimensionMismatch { expected: 6, actual: d }),
    }
}

/// Product state `internal ⊗ motion`.
pub fn lift(internal: &DensityMatrix, motion: &[MotionalState], fock_cutoff: usize) -> Result<CompositeState> {
    let space = CompositeSpace::new(fock_cutoff, motion.len())?;
    let ion = internal_matrix(internal)?;
    let mut mot = CMatrix::from_element(1, 1, r(1.0));
    for m in motion {
        let p = m.populations(fock_cutoff)?;
        let diag = CMatrix::from_diagonal(&CVector::from_iterator(p.len(), p.into_iter().map(r)));
        mot = linalg::kron(&mot, &diag);
    }
    Ok(CompositeState::from_parts(space, linalg::kron(&ion, &mot)))
}

fn check_pair(a: IonLevel, b: IonLevel) -> Result<()> {
    if !a.valid() || !b.valid() {
        return Err(Error::InvalidPulse(format!("unknown level in pair ({a:?}, {b:?})")));
    }
    if a == b {
        return Err(Error::InvalidPulse(format!("pulse needs two distinct levels, got {a:?} twice")));
    }
    Ok(())
}

/// Writes the two-level rotation `exp(-iθ/2 (e^{iφ}|a⟩⟨b| + h.c.))` into `u`.
fn embed_rotation(u: &mut CMatrix, a: usize, b: usize, theta: f64, phase: f64) {
    let (s, c) = (0.5 * theta).sin_cos();
    let off = C64::new(0.0, -s);
    u[(a, a)] = r(c);
    u[(b, b)] = r(c);
    u[(a, b)] = off * C64::from_polar(1.0, phase);
    u[(b, a)] = off * C64::from_polar(1.0, -phase);
}

/// Carrier π-pulse swapping `level_a ↔ level_b` for every motional state.
pub fn carrier_pi(space: &CompositeSpace, level_a: IonLevel, level_b: IonLevel, phase: f64) -> Result<Operator> {
    check_pair(level_a, level_b)?;
    let d = space.dim();
    let mut u = CMatrix::identity(d, d);
    for mi in 0..space.motion_dim() {
        let n = space.motion_tuple(mi);
        embed_rotation(&mut u, space.index(level_a, &n), space.index(level_b, &n), PI, phase);
    }
    Operator::new(u, space.basis())
}

/// Blue-sideband π-pulse on `|s⟩|n⟩ ↔ |d⟩|n+1⟩` of one mode.
pub fn blue_sideband_pi(
    space: &CompositeSpace,
    s: IonLevel,
    d: IonLevel,
    phase: f64,
    model: PulseModel,
    mode: usize,
) -> Result<Operator> {
    check_pair(s, d)?;
    if !s.is_ground() || d.is_ground() {
        return Err(Error::InvalidPulse(format!("sideband must couple an S level to a D level, got ({s:?}, {d:?})")));
    }
    if mode >= space.n_modes {
        return Err(Error::InvalidPulse(format!("mode {mode} out of range")));
    }
    let dim = space.dim();
    let mut u = CMatrix::identity(dim, dim);
    for mi in 0..space.motion_dim() {
        let lower = space.motion_tuple(mi);
        let n = lower[mode];
        if n + 1 > space.fock_cutoff {
            continue;
        }
        let mut upper = lower.clone();
        upper[mode] = n + 1;
        let theta = match model {
            PulseModel::Ideal => PI,
            PulseModel::Calibrated => PI * ((n + 1) as f64).sqrt(),
        };
        embed_rotation(&mut u, space.index(s, &lower), space.index(d, &upper), theta, phase);
    }
    Operator::new(u, space.basis())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectionConfig {
    /// Relative phase of the two sideband pulses, split as `±φ_c/2`.
    pub phi_c: f64,
    pub pulse_model: PulseModel,
    pub heating_rate: f64,
    pub fock_cutoff: usize,
}

impl Default for CorrectionConfig {
    fn default() -> Self {
        CorrectionConfig {
            phi_c: 0.0,
            pulse_model: PulseModel::Calibrated,
            heating_rate: PAPER_HEATING_RATE,
            fock_cutoff: DEFAULT_FOCK_CUTOFF,
        }
    }
}

impl CorrectionConfig {
    pub fn ideal() -> Self {
        CorrectionConfig { pulse_model: PulseModel::Ideal, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.heating_rate < 0.0 {
            return Err(Error::Negative { name: "heating_rate", value: self.heating_rate });
        }
        if self.fock_cutoff < 2 {
            return Err(Error::InvalidPulse(format!("fock cutoff must be >= 2, got {}", self.fock_cutoff)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrectionReport {
    pub p0: f64,
    pub p1: f64,
    pub p_erase: f64,
    pub rho_internal: DensityMatrix,
}

/// The ordered pulse list of one correction stage.
fn stage_pulses(
    space: &CompositeSpace,
    from_twice_m: i8,
    phi_c: f64,
    model: PulseModel,
    mode: usize,
) -> Result<Vec<Operator>> {
    Ok(vec![
        carrier_pi(space, IonLevel::D(-from_twice_m), IonLevel::S(-1), 0.0)?,
        carrier_pi(space, IonLevel::D(from_twice_m), IonLevel::S(1), 0.0)?,
        blue_sideband_pi(space, IonLevel::S(-1), IonLevel::D(-5), 0.5 * phi_c, model, mode)?,
        blue_sideband_pi(space, IonLevel::S(1), IonLevel::D(5), -0.5 * phi_c, model, mode)?,
    ])
}

fn product(space: &CompositeSpace, pulses: &[Operator]) -> Operator {
    pulses
        .iter()
        .fold(Operator::identity(space.basis()), |acc, p| p * &acc)
}

/// First-order recovery unitary `U_c` on a composite space (mode 0).
pub fn correction_unitary(space: &CompositeSpace, cfg: &CorrectionConfig) -> Result<Operator> {
    Ok(product(space, &stage_pulses(space, 3, cfg.phi_c, cfg.pulse_model, 0)?))
}

/// First- then second-order recovery, the latter through mode 1.
pub fn second_order_unitary(space: &CompositeSpace, cfg: &CorrectionConfig) -> Result<Operator> {
    if space.n_modes < 2 {
        return Err(Error::InvalidPulse("second-order correction needs two motional modes".into()));
    }
    let mut pulses = stage_pulses(space, 3, cfg.phi_c, cfg.pulse_model, 0)?;
    pulses.extend(stage_pulses(space, 1, cfg.phi_c, cfg.pulse_model, 1)?);
    Ok(product(space, &pulses))
}

fn report(state: &CompositeState) -> Result<CorrectionReport> {
    let pops = state.mode_populations(0);
    let internal = DensityMatrix::from_matrix(state.reduced_internal(), CompositeSpace::internal_basis())?;
    Ok(CorrectionReport {
        p0: pops[0],
        p1: pops[1],
        p_erase: state.ground_population(),
        rho_internal: internal,
    })
}

pub fn apply_correction(state: &CompositeState, cfg: &CorrectionConfig) -> Result<(CompositeState, CorrectionReport)> {
    cfg.validate()?;
    state.guard()?;
    let u = correction_unitary(state.space(), cfg)?;
    let out = state.evolve(&u);
    let rep = report(&out)?;
    Ok((out, rep))
}

pub fn correct_second_order(
    state: &CompositeState,
    cfg: &CorrectionConfig,
) -> Result<(CompositeState, CorrectionReport)> {
    cfg.validate()?;
    state.guard()?;
    let u = second_order_unitary(state.space(), cfg)?;
    let out = state.evolve(&u);
    let rep = report(&out)?;
    Ok((out, rep))
}

#[derive(Clone, Debug)]
pub struct Erasure {
    pub p_erase: f64,
    /// Projection onto `D5/2`, renormalized; `None` when nothing survives.
    pub post_selected: Option<CompositeState>,
}

impl Erasure {
    pub fn flagged(&self) -> bool {
        self.post_selected.is_none()
    }
}

/// Fluorescence detection of any `S1/2` population.
pub fn detect_erasure(state: &CompositeState) -> Erasure {
    let space = state.space().clone();
    let md = space.motion_dim();
    let keep: Vec<usize> = IonLevel::ALL
        .iter()
        .filter(|l| !l.is_ground())
        .flat_map(|l| (0..md).map(move |k| l.index() * md + k))
        .collect();
    let mut projected = CMatrix::zeros(space.dim(), space.dim());
    for &i in &keep {
        for &j in &keep {
            projected[(i, j)] = state.rho[(i, j)];
        }
    }
    let kept = linalg::trace(&projected).re;
    let total = state.trace();
    let p_erase = (total - kept).max(0.0);
    let post_selected = (kept > 1e-12).then(|| CompositeState::from_parts(space, projected.unscale(kept)));
    Erasure { p_erase, post_selected }
}

/// Single-jump heating of mode 0 over a delay: with probability
/// `1 - exp(-rate·t)` the Fock index rises by one (the top level is absorbing).
pub fn heat(state: &CompositeState, rate: f64, t: f64) -> Result<CompositeState> {
    if rate < 0.0 {
        return Err(Error::Negative { name: "rate", value: rate });
    }
    if t < 0.0 {
        return Err(Error::Negative { name: "t", value: t });
    }
    let rt = rate * t;
    if rt > 0.5 {
        return Err(Error::HeatingRegime { rt });
    }
    if rt == 0.0 {
        return Ok(state.clone());
    }
    let p = 1.0 - (-rt).exp();
    let space = state.space();
    let dim = space.dim();
    let md = space.motion_dim();
    let top = space.fock_cutoff;
    let mut jumped = CMatrix::zeros(dim, dim);
    // Kraus operators A_n = |n+1⟩⟨n| (n < top), A_top = |top⟩⟨top|.
    for src in 0..=top {
        let dst = (src + 1).min(top);
        let rows: Vec<(usize, usize)> = (0..dim)
            .filter(|&i| space.motion_tuple(i % md)[0] == src)
            .map(|i| {
                let mut t = space.motion_tuple(i % md);
                t[0] = dst;
                (i, (i / md) * md + space.motion_index(&t))
            })
            .collect();
        for &(i, ii) in &rows {
            for &(j, jj) in &rows {
                jumped[(ii, jj)] += state.rho[(i, j)];
            }
        }
    }
    Ok(CompositeState::from_parts(space.clone(), state.rho.scale(1.0 - p) + jumped.scale(p)))
}

/// Probability of at least one heating jump in `t`.
pub fn heating_probability(rate: f64, t: f64) -> f64 {
    1.0 - (-rate * t).exp()
}

/// Precomputed `U_c` for many pure-state trials in the Monte Carlo harness.
#[derive(Clone, Debug)]
pub struct TrialCorrector {
    space: CompositeSpace,
    unitary: CMatrix,
}

/// Result of correcting one pure `D5/2` input with a definite Fock state.
#[derive(Clone, Debug)]
pub struct TrialOutcome {
    /// Population detected in `S1/2`.
    pub p_erase: f64,
    /// Unnormalized `D5/2` block (descending `m`) after tracing out motion.
    pub d52: CMatrix,
}

impl TrialCorrector {
    pub fn new(cfg: &CorrectionConfig, second_order: bool) -> Result<Self> {
        cfg.validate()?;
        let space = CompositeSpace::new(cfg.fock_cutoff, if second_order { 2 } else { 1 })?;
        let u = if second_order { second_order_unitary(&space, cfg)? } else { correction_unitary(&space, cfg)? };
        Ok(TrialCorrector { space, unitary: u.into_matrix() })
    }

    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    /// Corrects `|ψ⟩ ⊗ |n, 0, ...⟩`; `psi` is in the descending-`m` `D5/2` basis.
    pub fn apply(&self, psi: &CVector, fock: usize) -> TrialOutcome {
        let md = self.space.motion_dim();
        let mut tuple = vec![0; self.space.n_modes];
        tuple[0] = fock.min(self.space.fock_cutoff);
        let mi = self.space.motion_index(&tuple);
        let mut v = CVector::zeros(self.space.dim());
        for (k, amp) in psi.iter().enumerate() {
            v[IonLevel::from_d52_index(k).index() * md + mi] = *amp;
        }
        let w = &self.unitary * v;
        let p_erase: f64 = IonLevel::ALL
            .iter()
            .filter(|l| l.is_ground())
            .flat_map(|l| (0..md).map(move |k| l.index() * md + k))
            .map(|i| w[i].norm_sqr())
            .sum();
        let d52 = CMatrix::from_fn(6, 6, |a, b| {
            let ia = IonLevel::from_d52_index(a).index() * md;
            let ib = IonLevel::from_d52_index(b).index() * md;
            (0..md).map(|k| w[ia + k] * w[ib + k].conj()).sum()
        });
        TrialOutcome { p_erase, d52 }
    }
}

/// `|ψ⟩` on the `D5/2` manifold as a density matrix ready for [`lift`].
pub fn d52_density(psi: &Ket) -> Result<DensityMatrix> {
    match psi.basis().spin() {
        Some(m) if m.dim() == 6 => Ok(psi.to_density()),
        _ => Err(Error::DimensionMismatch { expected: 6, actual: psi.dim() }),
    }
}

/// The `D5/2` block of a reduced internal state as a spin-basis density matrix.
pub fn internal_to_d52(internal: &DensityMatrix) -> Result<DensityMatrix> {
    if internal.dim() != 8 {
        return Err(Error::DimensionMismatch { expected: 8, actual: internal.dim() });
    }
    let block = d52_block_of(internal.matrix());
    let tr = linalg::trace(&block).re;
    if tr <= 1e-12 {
        return Err(Error::InvalidDensityMatrix("no population in D5/2".into()));
    }
    DensityMatrix::from_matrix(block.unscale(tr), Basis::Spin(SpinManifold::d52()))
}
