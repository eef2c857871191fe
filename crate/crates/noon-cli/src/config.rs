//! Experiment configuration: a single JSON document with blocks for the
//! preset, source, elements, detectors, scan, and output. Unknown keys are
//! rejected and all physical parameters are range-checked at load time.
//!
//! A run manifest (the config echo written next to every table) is itself
//! loadable as a config, so any run can be reproduced from its manifest.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use noon_sim::detect::{DetectorBank, DetectorModel, SplitterCascade};
use noon_sim::preset::{preset_noon3, preset_noon4, CircuitPreset, Noon3Params};
use noon_sim::source::{OverlapModel, PairDistribution};

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// "noon3" or "noon4" (for `simulate`); `hom` and `hwp2-cal` runs read
    /// their parameters from the same blocks.
    pub preset: String,
    pub source: SourceBlock,
    pub elements: ElementsBlock,
    pub detectors: DetectorsBlock,
    pub scan: ScanBlock,
    pub output: OutputBlock,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            preset: "noon3".into(),
            source: SourceBlock::default(),
            elements: ElementsBlock::default(),
            detectors: DetectorsBlock::default(),
            scan: ScanBlock::default(),
            output: OutputBlock::default(),
        }
    }
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SourceBlock {
    /// "thermal", "poissonian", or "fixed".
    pub kind: String,
    /// Per-pulse single-pair probability scale γ.
    pub gamma: f64,
    /// Pair number for the "fixed" kind.
    pub fixed_pairs: u8,
    /// Pair-number truncation.
    pub n_max_pairs: u8,
    /// Wave-packet overlap ξ(0) between the two arms.
    pub xi: f64,
    /// Coherence scale of the delay envelope ξ(τ) = ξ·exp(−(τ/τ_c)²).
    pub tau_c: f64,
    /// Path delay τ (same units as τ_c).
    pub delay: f64,
}

impl Default for SourceBlock {
    fn default() -> Self {
        Self {
            kind: "thermal".into(),
            gamma: 0.05,
            fixed_pairs: 2,
            n_max_pairs: 4,
            xi: 1.0,
            tau_c: 1.0,
            delay: 0.0,
        }
    }
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ElementsBlock {
    /// PPBS intensity transmission for H (paper: 0.99).
    pub t_h: f64,
    /// PPBS intensity transmission for V (paper: 0.31, ideal: 1/3).
    pub t_v: f64,
    /// PPBS birefringence φ in radians.
    pub phi_rad: f64,
    pub hwp1_deg: f64,
    pub qwp2_deg: f64,
    /// HWP2 angle; omit for the compensating θ = φ/4.
    pub hwp2_deg: Option<f64>,
    pub qwp3_deg: f64,
}

impl Default for ElementsBlock {
    fn default() -> Self {
        Self {
            t_h: 0.99,
            t_v: 0.31,
            phi_rad: 0.0,
            hwp1_deg: 22.5,
            qwp2_deg: 45.0,
            hwp2_deg: None,
            qwp3_deg: 45.0,
        }
    }
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorsBlock {
    /// Efficiencies of SPC1..SPC4.
    pub eta: Vec<f64>,
    /// Dark-click probability per pulse, shared by all detectors.
    pub dark_prob: f64,
    /// Two-way coupler split fractions of the cascade (paper: 43:57 twice).
    pub cascade_ratios: Vec<f64>,
}

impl Default for DetectorsBlock {
    fn default() -> Self {
        Self {
            eta: vec![1.0, 1.0, 1.0, 1.0],
            dark_prob: 0.0,
            cascade_ratios: vec![0.43, 0.43],
        }
    }
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ScanBlock {
    /// Explicit HWP3 angles in degrees; overrides the range when present.
    pub angles_deg: Option<Vec<f64>>,
    pub start_deg: f64,
    /// Exclusive range end: `points` angles cover [start, stop).
    pub stop_deg: f64,
    pub points: usize,
    pub pulses_per_point: u64,
    pub seed: u64,
    /// Delays for `hom` runs; defaults to a symmetric grid over ±4τ_c.
    pub delays: Option<Vec<f64>>,
}

impl Default for ScanBlock {
    fn default() -> Self {
        Self {
            angles_deg: None,
            start_deg: 0.0,
            stop_deg: 90.0,
            points: 19,
            pulses_per_point: 1_000_000,
            seed: 1,
            delays: None,
        }
    }
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    /// File-name prefix for the emitted CSV and manifest.
    pub prefix: String,
    /// Skip Monte Carlo sampling.
    pub analytic_only: bool,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { prefix: "run".into(), analytic_only: false }
    }
}

/// Run manifest: the resolved config plus provenance, written beside every
/// table and accepted anywhere a config is.
#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub engine_version: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub herald_probability: Option<f64>,
}

impl ExperimentConfig {
    /// Loads a config, accepting either a bare config document or a run
    /// manifest wrapping one.
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| format!("invalid JSON: {e}"))?;
        let config = if value.get("config").is_some() {
            let manifest: RunManifest =
                serde_json::from_value(value).map_err(|e| format!("invalid manifest: {e}"))?;
            manifest.config
        } else {
            serde_json::from_value(value).map_err(|e| format!("invalid config: {e}"))?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !matches!(self.preset.as_str(), "noon3" | "noon4") {
            return Err(format!(
                "unknown preset '{}' (expected noon3 or noon4)",
                self.preset
            ));
        }
        if !matches!(self.source.kind.as_str(), "thermal" | "poissonian" | "fixed") {
            return Err(format!(
                "unknown source kind '{}' (expected thermal, poissonian, or fixed)",
                self.source.kind
            ));
        }
        let s = &self.source;
        if s.kind != "fixed" && !(0.0..1.0).contains(&s.gamma) {
            return Err(format!("source.gamma must lie in [0, 1), got {}", s.gamma));
        }
        if !(0.0..=1.0).contains(&s.xi) {
            return Err(format!("source.xi must lie in [0, 1], got {}", s.xi));
        }
        if s.tau_c <= 0.0 {
            return Err(format!("source.tau_c must be positive, got {}", s.tau_c));
        }
        if s.n_max_pairs == 0 || s.n_max_pairs > 8 {
            return Err(format!("source.n_max_pairs must lie in 1..=8, got {}", s.n_max_pairs));
        }
        if s.kind == "fixed" && s.fixed_pairs > s.n_max_pairs {
            return Err(format!(
                "source.fixed_pairs {} exceeds n_max_pairs {}",
                s.fixed_pairs, s.n_max_pairs
            ));
        }
        let e = &self.elements;
        for (name, t) in [("t_h", e.t_h), ("t_v", e.t_v)] {
            if !(0.0..=1.0).contains(&t) {
                return Err(format!("elements.{name} must lie in [0, 1], got {t}"));
            }
        }
        let d = &self.detectors;
        if d.eta.len() != d.cascade_ratios.len() + 2 {
            return Err(format!(
                "detectors.eta lists {} efficiencies but the cascade feeds {} detectors plus SPC1",
                d.eta.len(),
                d.cascade_ratios.len() + 1
            ));
        }
        for &eta in &d.eta {
            if !(0.0..=1.0).contains(&eta) {
                return Err(format!("detector efficiency must lie in [0, 1], got {eta}"));
            }
        }
        if !(0.0..1.0).contains(&d.dark_prob) {
            return Err(format!("detectors.dark_prob must lie in [0, 1), got {}", d.dark_prob));
        }
        for &r in &d.cascade_ratios {
            if !(0.0..=1.0).contains(&r) {
                return Err(format!("cascade ratio must lie in [0, 1], got {r}"));
            }
        }
        let sc = &self.scan;
        if sc.angles_deg.as_ref().is_some_and(|a| a.is_empty()) {
            return Err("scan.angles_deg must not be empty".into());
        }
        if sc.angles_deg.is_none() {
            if sc.points == 0 {
                return Err("scan.points must be ≥ 1".into());
            }
            if sc.stop_deg <= sc.start_deg {
                return Err(format!(
                    "scan range [{}, {}) is empty",
                    sc.start_deg, sc.stop_deg
                ));
            }
        }
        if sc.pulses_per_point == 0 {
            return Err("scan.pulses_per_point must be ≥ 1".into());
        }
        Ok(())
    }

    /// HWP3 scan angles in degrees.
    pub fn scan_angles(&self) -> Vec<f64> {
        match &self.scan.angles_deg {
            Some(a) => a.clone(),
            None => {
                let n = self.scan.points;
                let step = (self.scan.stop_deg - self.scan.start_deg) / n as f64;
                (0..n).map(|i| self.scan.start_deg + i as f64 * step).collect()
            }
        }
    }

    /// HOM delays.
    pub fn hom_delays(&self) -> Vec<f64> {
        match &self.scan.delays {
            Some(d) => d.clone(),
            None => {
                let span = 4.0 * self.source.tau_c;
                let n = 41;
                (0..n)
                    .map(|i| -span + 2.0 * span * i as f64 / (n - 1) as f64)
                    .collect()
            }
        }
    }

    pub fn pair_distribution(&self) -> Result<PairDistribution, String> {
        let s = &self.source;
        match s.kind.as_str() {
            "thermal" => PairDistribution::thermal(s.gamma, s.n_max_pairs),
            "poissonian" => PairDistribution::poissonian(s.gamma, s.n_max_pairs),
            "fixed" => Ok(PairDistribution::fixed(s.fixed_pairs)),
            other => return Err(format!("unknown source kind '{other}'")),
        }
        .map_err(|e| e.to_string())
    }

    pub fn overlap_model(&self) -> Result<OverlapModel, String> {
        OverlapModel::new(self.source.xi, self.source.tau_c).map_err(|e| e.to_string())
    }

    pub fn noon3_params(&self) -> Result<Noon3Params, String> {
        let e = &self.elements;
        Ok(Noon3Params {
            pairs: self.pair_distribution()?,
            overlap: self.overlap_model()?,
            delay: self.source.delay,
            t_h: e.t_h,
            t_v: e.t_v,
            phi: e.phi_rad,
            hwp1: e.hwp1_deg.to_radians(),
            qwp2: e.qwp2_deg.to_radians(),
            hwp2: e.hwp2_deg.map(f64::to_radians),
            qwp3: e.qwp3_deg.to_radians(),
            n_max: 2 * self.source.n_max_pairs as u32,
        })
    }

    pub fn build_preset(&self) -> Result<CircuitPreset, String> {
        match self.preset.as_str() {
            "noon3" => preset_noon3(&self.noon3_params()?).map_err(|e| e.to_string()),
            "noon4" => preset_noon4().map_err(|e| e.to_string()),
            other => Err(format!("unknown preset '{other}'")),
        }
    }

    pub fn detector_bank(&self) -> Result<DetectorBank, String> {
        let d = &self.detectors;
        let herald = DetectorModel::new(d.eta[0], d.dark_prob).map_err(|e| e.to_string())?;
        let cascade_dets = d.eta[1..]
            .iter()
            .map(|&eta| DetectorModel::new(eta, d.dark_prob))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let cascade =
            SplitterCascade::new(d.cascade_ratios.clone()).map_err(|e| e.to_string())?;
        Ok(DetectorBank { herald, cascade, cascade_dets })
    }

}
