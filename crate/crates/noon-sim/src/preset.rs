//! Assembled circuits: the heralded N=3 NOON-state generator and its N=4
//! extension.
//!
//! The N=3 chain is: SPDC double-pair source → (overlap rotation on the
//! lower arm) → mirror/QWP1 polarization flip on the upper arm → PBS2 merge
//! → HWP1 (22.5°) → PPBS with heralding arm → QWP2 (45°) → HWP2 (φ/4) →
//! measurement stage (QWP3 at 45°, scanned HWP3, PBS3 transmitted port into
//! the fiber-splitter cascade).
//!
//! The N=4 preset feeds |3_H, 3_V⟩ through HWP1, then a pair of
//! V-reflectance-1/3 PPBSs with an HWP at 45° in between; detecting exactly
//! one photon on each reflected arm heralds a four-photon NOON state.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::elements::{CircuitElement, PartialPbs, WavePlate};
use crate::error::FockError;
use crate::fock::{ConditionOutcome, FockState, DEFAULT_N_MAX};
use crate::mode::{ModeId, ModeRegistry, PathLabel, Pol};
use crate::source::{spdc_state, OverlapModel, PairDistribution};

/// Photon source feeding a preset.
#[derive(Clone, Debug)]
pub enum PresetSource {
    /// SPDC pair source with a wave-packet overlap model and a path delay.
    Spdc {
        pairs: PairDistribution,
        overlap: OverlapModel,
        delay: f64,
    },
    /// A fixed input ket, e.g. |3_H, 3_V⟩ for the N=4 scheme.
    Basis(Vec<(ModeId, u8)>),
}

/// A fully described circuit: registry, ordered elements, heralding wires,
/// and the measurement stage.
#[derive(Clone, Debug)]
pub struct CircuitPreset {
    pub registry: Arc<ModeRegistry>,
    pub source: PresetSource,
    /// Static elements, applied in list order (ends before QWP3/HWP3).
    pub elements: Vec<CircuitElement>,
    /// Paths carrying heralding detectors; disjoint from the measured path.
    pub herald_paths: Vec<PathLabel>,
    /// Exact per-wire photon counts defining the heralded state.
    pub herald_counts: Vec<u32>,
    /// QWP3 angle (radians) of the measurement stage.
    pub qwp3: f64,
    /// PBS3-transmitted port observed by the detector cascade.
    pub observed: (PathLabel, Pol),
    pub n_max: u32,
}

impl CircuitPreset {
    /// Builds the bare source state; the wave-packet overlap rotation is the
    /// first circuit element when the source is partially distinguishable.
    pub fn initial_state(&self) -> Result<FockState, FockError> {
        match &self.source {
            PresetSource::Spdc { pairs, .. } => {
                spdc_state(pairs, self.registry.clone(), self.n_max)
            }
            PresetSource::Basis(occupation) => {
                FockState::basis_state(self.registry.clone(), occupation, self.n_max)
            }
        }
    }

    /// Evolves the source through the first `k` elements.
    pub fn evolve_through(&self, k: usize) -> Result<FockState, FockError> {
        let mut state = self.initial_state()?;
        for element in &self.elements[..k] {
            state = state.apply_unitary(&element.unitary(&self.registry)?)?;
        }
        Ok(state)
    }

    /// State after all static elements, before the QWP3/HWP3 analyzer.
    pub fn state_before_analyzer(&self) -> Result<FockState, FockError> {
        self.evolve_through(self.elements.len())
    }

    /// Index just past the first element matched by `pred`, for staged
    /// evolution up to a named point of the circuit.
    pub fn index_after(&self, pred: impl Fn(&CircuitElement) -> bool) -> Option<usize> {
        self.elements.iter().position(pred).map(|i| i + 1)
    }

    /// All registered modes on the heralding wires.
    pub fn herald_modes(&self) -> Vec<Vec<ModeId>> {
        self.herald_paths
            .iter()
            .map(|&p| self.registry.modes_on_path(p))
            .collect()
    }

    /// Conditions each heralding wire on its exact photon count and returns
    /// the renormalized heralded state together with the joint probability.
    ///
    /// A zero-probability herald yields `(None, probability)`.
    pub fn heralded_state(&self) -> Result<(Option<FockState>, f64), FockError> {
        let mut state = self.state_before_analyzer()?;
        let mut probability = 1.0;
        for (path, &count) in self.herald_paths.iter().zip(&self.herald_counts) {
            let modes = state.registry().modes_on_path(*path);
            let ConditionOutcome { state: kept, probability: p } =
                state.condition_exact_total(&modes, count)?;
            probability *= p;
            match kept {
                Some(s) => state = s,
                None => return Ok((None, probability)),
            }
        }
        Ok((Some(state), probability))
    }
}

/// Parameters of the N=3 preset. Defaults are the ideal values; the paper's
/// measured hardware uses `t_h = 0.99`, `t_v = 0.31`.
#[derive(Clone, Debug)]
pub struct Noon3Params {
    pub pairs: PairDistribution,
    pub overlap: OverlapModel,
    pub delay: f64,
    /// PPBS intensity transmission for H.
    pub t_h: f64,
    /// PPBS intensity transmission for V (1/3 ideal).
    pub t_v: f64,
    /// PPBS birefringence φ (radians).
    pub phi: f64,
    /// HWP1 angle, radians (22.5° ideal).
    pub hwp1: f64,
    /// QWP2 angle, radians (45° ideal).
    pub qwp2: f64,
    /// HWP2 angle, radians; `None` selects the compensating θ = φ/4.
    pub hwp2: Option<f64>,
    /// QWP3 angle, radians (45° for fringe scans, 0° for HWP2 calibration).
    pub qwp3: f64,
    pub n_max: u32,
}

impl Noon3Params {
    /// Ideal circuit parameters around a given source.
    pub fn ideal(pairs: PairDistribution) -> Self {
        Self {
            pairs,
            overlap: OverlapModel::ideal(),
            delay: 0.0,
            t_h: 1.0,
            t_v: 1.0 / 3.0,
            phi: 0.0,
            hwp1: 22.5f64.to_radians(),
            qwp2: PI / 4.0,
            hwp2: None,
            qwp3: PI / 4.0,
            n_max: DEFAULT_N_MAX,
        }
    }

    pub fn hwp2_angle(&self) -> f64 {
        self.hwp2.unwrap_or(self.phi / 4.0)
    }
}

fn registry_for_paths(
    paths: &[PathLabel],
    internals: &[u8],
) -> Result<Arc<ModeRegistry>, FockError> {
    let mut modes = Vec::new();
    for &path in paths {
        for &pol in &[Pol::H, Pol::V] {
            for &k in internals {
                modes.push(ModeId::new(path, pol, k));
            }
        }
    }
    ModeRegistry::new(modes)
}

/// The heralded three-photon NOON-state circuit of the experiment.
pub fn preset_noon3(params: &Noon3Params) -> Result<CircuitPreset, FockError> {
    if 2 * params.pairs.n_max_pairs as u32 > params.n_max {
        return Err(FockError::TruncationExceeded {
            total: 2 * params.pairs.n_max_pairs as u32,
            n_max: params.n_max,
        });
    }
    let distinguishable = params.overlap.xi_at(params.delay) < 1.0 - 1e-15;
    let internals: &[u8] = if distinguishable { &[0, 1] } else { &[0] };
    let registry = registry_for_paths(
        &[PathLabel::Upper, PathLabel::Lower, PathLabel::Main, PathLabel::Herald(0)],
        internals,
    )?;

    let mut elements = Vec::new();
    if distinguishable {
        elements.push(CircuitElement::Overlap {
            path: PathLabel::Lower,
            xi: params.overlap.xi_at(params.delay),
        });
    }
    elements.push(CircuitElement::PolFlip { path: PathLabel::Upper });
    elements.push(CircuitElement::Pbs { a: PathLabel::Upper, b: PathLabel::Lower });
    elements.push(CircuitElement::PathRelabel { from: PathLabel::Lower, to: PathLabel::Main });
    elements.push(CircuitElement::Plate(WavePlate::half(params.hwp1, PathLabel::Main)));
    elements.push(CircuitElement::Ppbs(PartialPbs::new(
        params.t_h,
        params.t_v,
        params.phi,
        PathLabel::Main,
        PathLabel::Herald(0),
    )?));
    elements.push(CircuitElement::Plate(WavePlate::quarter(params.qwp2, PathLabel::Main)));
    elements.push(CircuitElement::Plate(WavePlate::half(params.hwp2_angle(), PathLabel::Main)));

    Ok(CircuitPreset {
        registry,
        source: PresetSource::Spdc {
            pairs: params.pairs,
            overlap: params.overlap,
            delay: params.delay,
        },
        elements,
        herald_paths: vec![PathLabel::Herald(0)],
        herald_counts: vec![1],
        qwp3: params.qwp3,
        observed: (PathLabel::Main, Pol::H),
        n_max: params.n_max,
    })
}

/// The N=4 extension: |3_H, 3_V⟩ through HWP1, two V-reflectance-1/3 PPBSs
/// with an HWP at 45° in between, heralding one photon on each reflected
/// arm. The analyzer pair QWP2 at 0° / HWP2 at 67.5° rotates the heralded
/// state onto the four-photon NOON state.
pub fn preset_noon4() -> Result<CircuitPreset, FockError> {
    let registry = registry_for_paths(
        &[PathLabel::Main, PathLabel::Herald(0), PathLabel::Herald(1)],
        &[0],
    )?;
    let t_v = 2.0 / 3.0; // reflectance 1/3 for V
    let elements = vec![
        CircuitElement::Plate(WavePlate::half(22.5f64.to_radians(), PathLabel::Main)),
        CircuitElement::Ppbs(PartialPbs::new(
            1.0,
            t_v,
            0.0,
            PathLabel::Main,
            PathLabel::Herald(0),
        )?),
        CircuitElement::Plate(WavePlate::half(45f64.to_radians(), PathLabel::Main)),
        CircuitElement::Ppbs(PartialPbs::new(
            1.0,
            t_v,
            0.0,
            PathLabel::Main,
            PathLabel::Herald(1),
        )?),
        CircuitElement::Plate(WavePlate::quarter(0.0, PathLabel::Main)),
        CircuitElement::Plate(WavePlate::half(67.5f64.to_radians(), PathLabel::Main)),
    ];
    Ok(CircuitPreset {
        registry: registry.clone(),
        source: PresetSource::Basis(vec![
            (ModeId::base(PathLabel::Main, Pol::H), 3),
            (ModeId::base(PathLabel::Main, Pol::V), 3),
        ]),
        elements,
        herald_paths: vec![PathLabel::Herald(0), PathLabel::Herald(1)],
        herald_counts: vec![1, 1],
        qwp3: PI / 4.0,
        observed: (PathLabel::Main, Pol::H),
        n_max: DEFAULT_N_MAX,
    })
}

/// The normalized N=3 NOON target `(i|3_H,0_V⟩ + |0_H,3_V⟩)/√2` on the given
/// main-path modes.
pub fn noon3_target(registry: Arc<ModeRegistry>) -> Result<FockState, FockError> {
    let h = ModeId::base(PathLabel::Main, Pol::H);
    let v = ModeId::base(PathLabel::Main, Pol::V);
    let ih = registry.index_of(h)?;
    let iv = registry.index_of(v)?;
    let mut occ_h = vec![0u8; registry.len()];
    occ_h[ih] = 3;
    let mut occ_v = vec![0u8; registry.len()];
    occ_v[iv] = 3;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    FockState::from_terms(
        registry,
        vec![
            (occ_h, num_complex::Complex64::new(0.0, s)),
            (occ_v, num_complex::Complex64::new(s, 0.0)),
        ],
        DEFAULT_N_MAX,
    )
}

/// The normalized N=4 NOON target `(|4_H,0_V⟩ − |0_H,4_V⟩)/√2`.
pub fn noon4_target(registry: Arc<ModeRegistry>) -> Result<FockState, FockError> {
    let h = ModeId::base(PathLabel::Main, Pol::H);
    let v = ModeId::base(PathLabel::Main, Pol::V);
    let ih = registry.index_of(h)?;
    let iv = registry.index_of(v)?;
    let mut occ_h = vec![0u8; registry.len()];
    occ_h[ih] = 4;
    let mut occ_v = vec![0u8; registry.len()];
    occ_v[iv] = 4;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    FockState::from_terms(
        registry,
        vec![
            (occ_h, num_complex::Complex64::new(s, 0.0)),
            (occ_v, num_complex::Complex64::new(-s, 0.0)),
        ],
        DEFAULT_N_MAX,
    )
}
