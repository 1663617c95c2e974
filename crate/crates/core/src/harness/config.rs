use std::f64::consts::FRAC_1_SQRT_2;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytics::delta_for_offset;
use crate::channels::DEFAULT_SIGMA_B;
use crate::correction::{PulseModel, DEFAULT_FOCK_CUTOFF, PAPER_HEATING_RATE};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    #[default]
    Fig3Sweep,
    PhaseSweep,
    Breakeven,
    ErasureScan,
    KlReport,
    TomoCalibration,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Fig3Sweep => "fig3_sweep",
            ExperimentKind::PhaseSweep => "phase_sweep",
            ExperimentKind::Breakeven => "breakeven",
            ExperimentKind::ErasureScan => "erasure_scan",
            ExperimentKind::KlReport => "kl_report",
            ExperimentKind::TomoCalibration => "tomo_calibration",
        }
    }
}

/// What marks a trial as an erasure.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErasureDetection {
    /// Any motional excitation present when the correction starts, plus any
    /// bright population left by the ground-state branch. Only that branch is kept.
    #[default]
    Motional,
    /// Bright `S1/2` population after correction, from every motional branch.
    Fluorescence,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpec {
    pub j: f64,
    pub g_j: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StateSpec {
    /// `[re, im]` of the `|0̄⟩` amplitude.
    pub alpha: [f64; 2],
    pub beta: [f64; 2],
}

impl Default for StateSpec {
    fn default() -> Self {
        StateSpec { alpha: [FRAC_1_SQRT_2, 0.0], beta: [0.0, -FRAC_1_SQRT_2] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSpec {
    /// Applied-noise grid for `fig3_sweep`, in units of `σ_φ/g_J`.
    pub sigma_phi_over_gj: Option<Vec<f64>>,
    /// Residual field width in tesla.
    pub sigma_b: f64,
    /// Delay grid in seconds for `breakeven` and `erasure_scan`.
    pub delays: Option<Vec<f64>>,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec { sigma_phi_over_gj: None, sigma_b: DEFAULT_SIGMA_B, delays: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrectionSpec {
    pub enabled: bool,
    pub second_order: bool,
    pub pulse_model: PulseModel,
    pub phi_c: f64,
    pub heating_rate: f64,
    pub fock_cutoff: usize,
    /// Probability of starting in `|1⟩` after cooling.
    pub residual_excitation: f64,
    /// Heating delay before correction when no delay grid applies.
    pub delay: f64,
    pub erasure_detection: ErasureDetection,
}

impl Default for CorrectionSpec {
    fn default() -> Self {
        CorrectionSpec {
            enabled: true,
            second_order: false,
            pulse_model: PulseModel::Calibrated,
            phi_c: 0.0,
            heating_rate: PAPER_HEATING_RATE,
            fock_cutoff: DEFAULT_FOCK_CUTOFF,
            residual_excitation: 0.02,
            delay: 0.0,
            erasure_detection: ErasureDetection::Motional,
        }
    }
}

/// Gaussian control-phase error after correction, set either directly or
/// through the χ-independent error it produces.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlSpec {
    pub delta: Option<f64>,
    pub offset: Option<f64>,
}

/// Constant errors injected by depolarizing toward the maximally mixed state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OffsetSpec {
    pub physical: f64,
    pub uncorrected: f64,
    pub corrected: f64,
}

impl Default for OffsetSpec {
    fn default() -> Self {
        OffsetSpec { physical: 0.004, uncorrected: 0.0, corrected: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FidelityPath {
    /// Exact fidelity of the trial-averaged state.
    #[default]
    Oracle,
    /// Simulated tomography and MLE of the trial-averaged state.
    Realistic,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SettingGrid {
    #[default]
    Standard,
    Complete,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TomographySpec {
    pub shots: u64,
    pub readout_error: f64,
    pub settings: SettingGrid,
    /// Independent reconstructions in `tomo_calibration`.
    pub seeds: usize,
    pub bootstrap_resamples: usize,
}

impl Default for TomographySpec {
    fn default() -> Self {
        TomographySpec { shots: 200, readout_error: 0.0, settings: SettingGrid::Standard, seeds: 100, bootstrap_resamples: 100 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseSpec {
    pub points: usize,
    pub sigma_phi_over_gj: f64,
}

impl Default for PhaseSpec {
    fn default() -> Self {
        PhaseSpec { points: 12, sigma_phi_over_gj: 0.2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSpec {
    pub epsilon_grid: Vec<f64>,
    pub resamples: usize,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        AnalysisSpec { epsilon_grid: vec![0.025, 0.03, 0.035, 0.04, 0.05, 0.06], resamples: 100 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KlSpec {
    pub max_orders: Vec<u32>,
}

impl Default for KlSpec {
    fn default() -> Self {
        KlSpec { max_orders: vec![2, 3] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: Option<u64>,
    pub trials: usize,
    pub logical: ManifoldSpec,
    pub physical: ManifoldSpec,
    pub state: StateSpec,
    pub noise: NoiseSpec,
    pub correction: CorrectionSpec,
    pub control: ControlSpec,
    pub offsets: OffsetSpec,
    pub fidelity_path: FidelityPath,
    pub tomography: TomographySpec,
    pub phase: PhaseSpec,
    pub analysis: AnalysisSpec,
    pub kl: KlSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: ExperimentKind::default(),
            seed: None,
            trials: 10_000,
            logical: ManifoldSpec { j: 2.5, g_j: 1.2 },
            physical: ManifoldSpec { j: 0.5, g_j: 2.0 },
            state: StateSpec::default(),
            noise: NoiseSpec::default(),
            correction: CorrectionSpec::default(),
            control: ControlSpec::default(),
            offsets: OffsetSpec::default(),
            fidelity_path: FidelityPath::default(),
            tomography: TomographySpec::default(),
            phase: PhaseSpec::default(),
            analysis: AnalysisSpec::default(),
            kl: KlSpec::default(),
        }
    }
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config(format!("{name} must not be empty")));
    }
    if let Some(x) = grid.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::Config(format!("{name} entries must be finite and non-negative, got {x}")));
    }
    Ok(())
}

fn check_unit(name: &str, x: f64, hi: f64) -> Result<()> {
    if !(0.0..hi).contains(&x) {
        return Err(Error::Config(format!("{name} must be in [0, {hi}), got {x}")));
    }
    Ok(())
}

impl ExperimentConfig {
    /// Defaults for one experiment kind. The dephasing sweep carries its constant
    /// corrected-series error as a control phase, the break-even run as depolarizing.
    pub fn for_experiment(kind: ExperimentKind) -> Self {
        let mut cfg = ExperimentConfig { experiment: kind, ..Self::default() };
        match kind {
            ExperimentKind::Fig3Sweep => cfg.control.offset = Some(0.022),
            ExperimentKind::Breakeven => cfg.offsets.corrected = 0.022,
            _ => {}
        }
        cfg
    }

    /// Parses a TOML config, filling missing fields from the defaults of its
    /// experiment kind.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let err = |e: &dyn std::fmt::Display| Error::Config(e.to_string());
        let user: toml::Table = toml::from_str(text).map_err(|e| err(&e))?;
        let kind = match user.get("experiment") {
            Some(v) => v.clone().try_into::<ExperimentKind>().map_err(|e| err(&e))?,
            None => ExperimentKind::default(),
        };
        let mut base = toml::Table::try_from(Self::for_experiment(kind)).map_err(|e| err(&e))?;
        merge(&mut base, user);
        toml::Value::Table(base).try_into().map_err(|e| err(&e))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::Config("a seed is required (config `seed` or --seed)".into()))
    }

    pub fn fig3_grid(&self) -> Vec<f64> {
        self.noise
            .sigma_phi_over_gj
            .clone()
            .unwrap_or_else(|| (0..=10).map(|k| 0.05 * k as f64).collect())
    }

    pub fn delay_grid(&self) -> Vec<f64> {
        self.noise.delays.clone().unwrap_or_else(|| match self.experiment {
            ExperimentKind::ErasureScan => (0..=8).map(|k| 1e-3 * k as f64).collect(),
            _ => (1..=11).map(|k| 0.5e-3 * k as f64).collect(),
        })
    }

    /// Control-phase width `δ` after resolving `control.offset`.
    pub fn control_delta(&self) -> Result<f64> {
        match (self.control.delta, self.control.offset) {
            (Some(_), Some(_)) => Err(Error::Config("set control.delta or control.offset, not both".into())),
            (Some(d), None) if d < 0.0 => Err(Error::Config(format!("control.delta must be >= 0, got {d}"))),
            (Some(d), None) => Ok(d),
            (None, Some(o)) => delta_for_offset(o),
            (None, None) => Ok(0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.seed()?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be > 0".into()));
        }
        if self.logical.j != 2.5 {
            return Err(Error::Config(format!("logical manifold must have j = 2.5, got {}", self.logical.j)));
        }
        if self.physical.j != 0.5 {
            return Err(Error::Config(format!("physical manifold must have j = 0.5, got {}", self.physical.j)));
        }
        for (name, g) in [("logical.g_j", self.logical.g_j), ("physical.g_j", self.physical.g_j)] {
            if !(g > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {g}")));
            }
        }
        let norm = self.state.alpha.iter().chain(&self.state.beta).map(|x| x * x).sum::<f64>();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("state amplitudes must be normalized, |α|²+|β|² = {norm}")));
        }
        if !(self.noise.sigma_b > 0.0) {
            return Err(Error::Config(format!("noise.sigma_b must be positive, got {}", self.noise.sigma_b)));
        }
        check_grid("noise.sigma_phi_over_gj", &self.fig3_grid())?;
        check_grid("noise.delays", &self.delay_grid())?;
        let c = &self.correction;
        if c.heating_rate < 0.0 {
            return Err(Error::Config(format!("correction.heating_rate must be >= 0, got {}", c.heating_rate)));
        }
        if c.fock_cutoff < 2 {
            return Err(Error::Config(format!("correction.fock_cutoff must be >= 2, got {}", c.fock_cutoff)));
        }
        check_unit("correction.residual_excitation", c.residual_excitation, 1.0)?;
        if c.delay < 0.0 {
            return Err(Error::Config(format!("correction.delay must be >= 0, got {}", c.delay)));
        }
        self.control_delta()?;
        check_unit("offsets.physical", self.offsets.physical, 0.5)?;
        check_unit("offsets.uncorrected", self.offsets.uncorrected, 5.0 / 6.0)?;
        check_unit("offsets.corrected", self.offsets.corrected, 5.0 / 6.0)?;
        let t = &self.tomography;
        if t.shots == 0 || t.seeds == 0 {
            return Err(Error::Config("tomography.shots and tomography.seeds must be > 0".into()));
        }
        if t.bootstrap_resamples < 2 {
            return Err(Error::Config("tomography.bootstrap_resamples must be >= 2".into()));
        }
        check_unit("tomography.readout_error", t.readout_error, 1.0 + f64::EPSILON)?;
        if self.phase.points < 10 {
            return Err(Error::Config(format!("phase.points must be >= 10, got {}", self.phase.points)));
        }
        check_grid("phase.sigma_phi_over_gj", &[self.phase.sigma_phi_over_gj])?;
        check_grid("analysis.epsilon_grid", &self.analysis.epsilon_grid)?;
        if self.kl.max_orders.is_empty() {
            return Err(Error::Config("kl.max_orders must not be empty".into()));
        }
        match self.experiment {
            ExperimentKind::PhaseSweep if !c.enabled => {
                Err(Error::Config("phase_sweep requires correction.enabled = true".into()))
            }
            ExperimentKind::ErasureScan if !(c.heating_rate > 0.0) => {
                Err(Error::Config("erasure_scan requires correction.heating_rate > 0".into()))
            }
            _ => Ok(()),
        }
    }

    /// SHA-256 of the canonical JSON form of the resolved config.
    pub fn sha256(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// JSON-schema description of the TOML config accepted by the CLI.
fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

pub fn config_schema() -> serde_json::Value {
    use serde_json::json;
    let num = json!({"type": "number"});
    let nonneg = json!({"type": "number", "minimum": 0});
    let grid = json!({"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1});
    let manifold = json!({"type": "object", "properties": {"j": num, "g_j": {"type": "number", "exclusiveMinimum": 0}},
        "required": ["j", "g_j"], "additionalProperties": false});
    json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "spincat experiment config",
        "type": "object",
        "additionalProperties": false,
        "properties": {
            "experiment": {"enum": ["fig3_sweep", "phase_sweep", "breakeven", "erasure_scan", "kl_report", "tomo_calibration"]},
            "seed": {"type": "integer", "minimum": 0},
            "trials": {"type": "integer", "minimum": 1},
            "logical": manifold,
            "physical": manifold,
            "state": {"type": "object", "additionalProperties": false, "properties": {
                "alpha": {"type": "array", "items": num, "minItems": 2, "maxItems": 2},
                "beta": {"type": "array", "items": num, "minItems": 2, "maxItems": 2}}},
            "noise": {"type": "object", "additionalProperties": false, "properties": {
                "sigma_phi_over_gj": grid, "sigma_b": {"type": "number", "exclusiveMinimum": 0}, "delays": grid}},
            "correction": {"type": "object", "additionalProperties": false, "properties": {
                "enabled": {"type": "boolean"}, "second_order": {"type": "boolean"},
                "pulse_model": {"enum": ["ideal", "calibrated"]}, "phi_c": num,
                "heating_rate": nonneg, "fock_cutoff": {"type": "integer", "minimum": 2},
                "residual_excitation": {"type": "number", "minimum": 0, "exclusiveMaximum": 1}, "delay": nonneg,
                "erasure_detection": {"enum": ["motional", "fluorescence"]}}},
            "control": {"type": "object", "additionalProperties": false, "properties": {
                "delta": nonneg, "offset": {"type": "number", "minimum": 0, "exclusiveMaximum": 0.5}}},
            "offsets": {"type": "object", "additionalProperties": false, "properties": {
                "physical": nonneg, "uncorrected": nonneg, "corrected": nonneg}},
            "fidelity_path": {"enum": ["oracle", "realistic"]},
            "tomography": {"type": "object", "additionalProperties": false, "properties": {
                "shots": {"type": "integer", "minimum": 1}, "readout_error": {"type": "number", "minimum": 0, "maximum": 1},
                "settings": {"enum": ["standard", "complete"]}, "seeds": {"type": "integer", "minimum": 1},
                "bootstrap_resamples": {"type": "integer", "minimum": 2}}},
            "phase": {"type": "object", "additionalProperties": false, "properties": {
                "points": {"type": "integer", "minimum": 10}, "sigma_phi_over_gj": nonneg}},
            "analysis": {"type": "object", "additionalProperties": false, "properties": {
                "epsilon_grid": grid, "resamples": {"type": "integer", "minimum": 1}}},
            "kl": {"type": "object", "additionalProperties": false, "properties": {
                "max_orders": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1}}}
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_fills_from_experiment_defaults() {
        let cfg = ExperimentConfig::from_toml_str("experiment = \"fig3_sweep\"\nseed = 1\n[correction]\nphi_c = 0.5\n").unwrap();
        assert_eq!(cfg.control.offset, Some(0.022));
        assert_eq!(cfg.correction.phi_c, 0.5);
        assert_eq!(cfg.correction.heating_rate, PAPER_HEATING_RATE);
        let bad = ExperimentConfig::from_toml_str("seed = 1\n[correction]\nbogus = 1\n");
        assert!(matches!(bad, Err(Error::Config(_))));
    }

    #[test]
    fn parses_and_validates() {
        let cfg = ExperimentConfig::from_toml_str(
            "experiment = \"breakeven\"\nseed = 5\ntrials = 100\n[offsets]\nphysical = 0.004\ncorrected = 0.022\n",
        )
        .unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::Breakeven);
        assert_eq!(cfg.offsets.corrected, 0.022);
        assert_eq!(cfg.delay_grid().len(), 11);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::from_toml_str("bogus = 1").is_err());
        let mut cfg = ExperimentConfig::for_experiment(ExperimentKind::Fig3Sweep);
        assert!(cfg.validate().is_err());
        cfg.seed = Some(1);
        cfg.validate().unwrap();
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
        cfg.trials = 10;
        cfg.noise.sigma_phi_over_gj = Some(vec![]);
        assert!(cfg.validate().is_err());
        cfg.noise.sigma_phi_over_gj = None;
        cfg.control = ControlSpec { delta: Some(0.1), offset: Some(0.02) };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let mut a = ExperimentConfig::for_experiment(ExperimentKind::KlReport);
        a.seed = Some(1);
        let mut b = a.clone();
        assert_eq!(a.sha256(), b.sha256());
        b.seed = Some(2);
        assert_ne!(a.sha256(), b.sha256());
    }
}
