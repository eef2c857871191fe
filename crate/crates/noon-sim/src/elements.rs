//! Optical elements as single-particle unitaries.
//!
//! Wave plates follow the convention `U(θ, δ) = R(θ)·diag(e^{iδ}, 1)·R(−θ)`
//! with `R` a real rotation: the plate axis inclined at `θ` from horizontal
//! carries the retardance phase `e^{iδ}` (the slow axis). Beam splitters
//! transmit with real amplitude `√T` and reflect with `i√(1−T)`; the full
//! PBS moves the crossing polarization between paths with unit amplitude.
//! Both conventions are validated against the known circuit outcomes in the
//! acceptance suite.
//!
//! Every element acts identically on each internal (temporal/spectral)
//! label registered for its target path(s); the produced unitary is block
//! diagonal over internal labels.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::FockError;
use crate::fock::SingleParticleUnitary;
use crate::mode::{ModeId, ModeRegistry, PathLabel, Pol};

/// A retarder plate on one spatial path.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct WavePlate {
    /// Retardance in radians: π for a half-wave plate, π/2 for a quarter-wave plate.
    pub retardance: f64,
    /// Inclination of the slow axis with respect to the horizontal axis, radians.
    pub angle: f64,
    /// Spatial path the plate sits in.
    pub path: PathLabel,
}

impl WavePlate {
    pub fn new(retardance: f64, angle: f64, path: PathLabel) -> Result<Self, FockError> {
        if !(retardance > 0.0 && retardance < 2.0 * PI) {
            return Err(FockError::InvalidParameter(format!(
                "wave-plate retardance must lie in (0, 2π), got {retardance}"
            )));
        }
        Ok(Self { retardance, angle, path })
    }

    /// Half-wave plate at `angle` radians.
    pub fn half(angle: f64, path: PathLabel) -> Self {
        Self { retardance: PI, angle, path }
    }

    /// Quarter-wave plate at `angle` radians.
    pub fn quarter(angle: f64, path: PathLabel) -> Self {
        Self { retardance: PI / 2.0, angle, path }
    }
}

/// Partially polarizing beam splitter between a through path and a reflect path.
///
/// `t_h`/`t_v` are intensity transmissions. The birefringence phase `e^{iφ}`
/// is applied on the through output port of the V block, so every
/// transmitted V photon acquires it.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct PartialPbs {
    pub t_h: f64,
    pub t_v: f64,
    pub birefringence_phi: f64,
    pub through: PathLabel,
    pub reflect: PathLabel,
}

impl PartialPbs {
    pub fn new(
        t_h: f64,
        t_v: f64,
        birefringence_phi: f64,
        through: PathLabel,
        reflect: PathLabel,
    ) -> Result<Self, FockError> {
        for (name, t) in [("t_H", t_h), ("t_V", t_v)] {
            if !(0.0..=1.0).contains(&t) {
                return Err(FockError::InvalidParameter(format!(
                    "{name} must lie in [0, 1], got {t}"
                )));
            }
        }
        Ok(Self { t_h, t_v, birefringence_phi, through, reflect })
    }
}

/// The 2×2 Jones matrix of a wave plate: `R(θ)·diag(e^{iδ}, 1)·R(−θ)`.
pub fn jones_waveplate(angle: f64, retardance: f64) -> DMatrix<Complex64> {
    let (s, c) = angle.sin_cos();
    let e = Complex64::from_polar(1.0, retardance);
    let one = Complex64::new(1.0, 0.0);
    let cross = (e - one) * Complex64::new(c * s, 0.0);
    DMatrix::from_row_slice(
        2,
        2,
        &[
            e * (c * c) + Complex64::new(s * s, 0.0),
            cross,
            cross,
            e * (s * s) + Complex64::new(c * c, 0.0),
        ],
    )
}

/// Internal labels for which `path` has a mode of polarization `pol`.
fn internals_on(registry: &ModeRegistry, path: PathLabel, pol: Pol) -> BTreeSet<u8> {
    registry
        .modes_on_path(path)
        .into_iter()
        .filter(|m| m.pol == pol)
        .map(|m| m.internal)
        .collect()
}

/// Assembles a block-diagonal unitary from independent mode blocks.
fn block_unitary(
    blocks: Vec<(Vec<ModeId>, DMatrix<Complex64>)>,
) -> Result<SingleParticleUnitary, FockError> {
    let dim: usize = blocks.iter().map(|(m, _)| m.len()).sum();
    let mut modes = Vec::with_capacity(dim);
    let mut matrix = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    let mut offset = 0;
    for (block_modes, block) in blocks {
        let k = block_modes.len();
        matrix.view_mut((offset, offset), (k, k)).copy_from(&block);
        modes.extend(block_modes);
        offset += k;
    }
    SingleParticleUnitary::new(modes, matrix)
}

/// Wave plate lifted to all internal labels on its path.
pub fn waveplate_unitary(
    wp: &WavePlate,
    registry: &ModeRegistry,
) -> Result<SingleParticleUnitary, FockError> {
    let jones = jones_waveplate(wp.angle, wp.retardance);
    let internals_h = internals_on(registry, wp.path, Pol::H);
    let internals_v = internals_on(registry, wp.path, Pol::V);
    if internals_h != internals_v || internals_h.is_empty() {
        return Err(FockError::InvalidParameter(format!(
            "path {} must carry matching H and V modes",
            wp.path
        )));
    }
    let blocks = internals_h
        .into_iter()
        .map(|k| {
            (
                vec![
                    ModeId::new(wp.path, Pol::H, k),
                    ModeId::new(wp.path, Pol::V, k),
                ],
                jones.clone(),
            )
        })
        .collect();
    block_unitary(blocks)
}

/// Polarizing beam splitter: H passes straight through on each path, V
/// swaps between the two paths with unit amplitude.
pub fn pbs_unitary(
    a: PathLabel,
    b: PathLabel,
    registry: &ModeRegistry,
) -> Result<SingleParticleUnitary, FockError> {
    let internals: BTreeSet<u8> = internals_on(registry, a, Pol::V)
        .intersection(&internals_on(registry, b, Pol::V))
        .copied()
        .collect();
    if internals.is_empty() {
        return Err(FockError::InvalidParameter(format!(
            "paths {a} and {b} share no V modes to swap"
        )));
    }
    let swap = DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
        ],
    );
    let blocks = internals
        .into_iter()
        .map(|k| {
            (
                vec![ModeId::new(a, Pol::V, k), ModeId::new(b, Pol::V, k)],
                swap.clone(),
            )
        })
        .collect();
    block_unitary(blocks)
}

/// Two-port beam-splitter block with transmission `t` and an extra phase on
/// the through output port.
fn bs_block(t: f64, through_phase: f64) -> DMatrix<Complex64> {
    let tr = Complex64::new(t.sqrt(), 0.0);
    let rf = Complex64::new(0.0, (1.0 - t).sqrt());
    let ph = Complex64::from_polar(1.0, through_phase);
    DMatrix::from_row_slice(2, 2, &[tr * ph, rf * ph, rf, tr])
}

/// Partially polarizing beam splitter lifted to all internal labels.
pub fn ppbs_unitary(
    p: &PartialPbs,
    registry: &ModeRegistry,
) -> Result<SingleParticleUnitary, FockError> {
    let mut blocks = Vec::new();
    for (pol, t, phase) in [(Pol::H, p.t_h, 0.0), (Pol::V, p.t_v, p.birefringence_phi)] {
        let internals: BTreeSet<u8> = internals_on(registry, p.through, pol)
            .intersection(&internals_on(registry, p.reflect, pol))
            .copied()
            .collect();
        if internals.is_empty() {
            return Err(FockError::InvalidParameter(format!(
                "paths {} and {} must both carry {pol} modes",
                p.through, p.reflect
            )));
        }
        for k in internals {
            blocks.push((
                vec![
                    ModeId::new(p.through, pol, k),
                    ModeId::new(p.reflect, pol, k),
                ],
                bs_block(t, phase),
            ));
        }
    }
    block_unitary(blocks)
}

/// Couples `mode` to a dedicated loss mode with through-amplitude `√η`.
pub fn loss_element(
    mode: ModeId,
    transmission: f64,
    loss_mode: ModeId,
    registry: &ModeRegistry,
) -> Result<SingleParticleUnitary, FockError> {
    if !(0.0..=1.0).contains(&transmission) {
        return Err(FockError::InvalidParameter(format!(
            "loss transmission must lie in [0, 1], got {transmission}"
        )));
    }
    registry.index_of(mode)?;
    registry.index_of(loss_mode)?;
    SingleParticleUnitary::new(vec![mode, loss_mode], bs_block(transmission, 0.0))
}

/// Exact polarization relabel H↔V on one path (the mirror + QWP1 combination
/// of the upper arm, modeled at unit efficiency).
pub fn pol_flip_unitary(
    path: PathLabel,
    registry: &ModeRegistry,
) -> Result<SingleParticleUnitary, FockError> {
    let internals: BTreeSet<u8> = internals_on(registry, path, Pol::H)
        .intersection(&internals_on(registry, path, Pol::V))
        .copied()
        .collect();
    if internals.is_empty() {
        return Err(FockError::InvalidParameter(format!(
            "path {path} must carry both polarizations"
        )));
    }
    let swap = DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
        ],
    );
    let blocks = internals
        .into_iter()
        .map(|k| {
            (
                vec![ModeId::new(path, Pol::H, k), ModeId::new(path, Pol::V, k)],
                swap.clone(),
            )
        })
        .collect();
    block_unitary(blocks)
}

/// Relabels every mode of `from` to the (empty) corresponding mode of `to`.
pub fn path_relabel_unitary(
    from: PathLabel,
    to: PathLabel,
    registry: &ModeRegistry,
) -> Result<SingleParticleUnitary, FockError> {
    let from_modes = registry.modes_on_path(from);
    if from_modes.is_empty() {
        return Err(FockError::InvalidParameter(format!("path {from} has no modes")));
    }
    let swap = DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
        ],
    );
    let mut blocks = Vec::new();
    for m in from_modes {
        let partner = ModeId::new(to, m.pol, m.internal);
        registry.index_of(partner)?;
        blocks.push((vec![m, partner], swap.clone()));
    }
    block_unitary(blocks)
}

/// Rotation between internal labels 0 and 1 on every polarization of `path`:
/// internal 0 maps to `ξ·(internal 0) + √(1−ξ²)·(internal 1)`.
pub fn overlap_unitary(
    path: PathLabel,
    xi: f64,
    registry: &ModeRegistry,
) -> Result<SingleParticleUnitary, FockError> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(FockError::InvalidParameter(format!(
            "overlap ξ must lie in [0, 1], got {xi}"
        )));
    }
    let s = (1.0 - xi * xi).sqrt();
    let rot = DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(xi, 0.0),
            Complex64::new(-s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(xi, 0.0),
        ],
    );
    let mut blocks = Vec::new();
    for pol in [Pol::H, Pol::V] {
        let internals = internals_on(registry, path, pol);
        if internals.contains(&0) && internals.contains(&1) {
            blocks.push((
                vec![ModeId::new(path, pol, 0), ModeId::new(path, pol, 1)],
                rot.clone(),
            ));
        }
    }
    if blocks.is_empty() {
        return Err(FockError::InvalidParameter(format!(
            "path {path} has no internal-label pair (0, 1) to rotate"
        )));
    }
    block_unitary(blocks)
}

/// One step of an assembled circuit.
#[derive(Clone, Debug)]
pub enum CircuitElement {
    Plate(WavePlate),
    /// Full PBS between two paths: H passes, V swaps.
    Pbs { a: PathLabel, b: PathLabel },
    Ppbs(PartialPbs),
    /// Mirror + QWP1 polarization flip, modeled as an exact relabel.
    PolFlip { path: PathLabel },
    /// Pure spatial relabel of a wire.
    PathRelabel { from: PathLabel, to: PathLabel },
    Loss { mode: ModeId, transmission: f64, loss_mode: ModeId },
    /// Partial-distinguishability rotation on a path's internal labels.
    Overlap { path: PathLabel, xi: f64 },
}

impl CircuitElement {
    pub fn unitary(&self, registry: &ModeRegistry) -> Result<SingleParticleUnitary, FockError> {
        match *self {
            CircuitElement::Plate(ref wp) => waveplate_unitary(wp, registry),
            CircuitElement::Pbs { a, b } => pbs_unitary(a, b, registry),
            CircuitElement::Ppbs(ref p) => ppbs_unitary(p, registry),
            CircuitElement::PolFlip { path } => pol_flip_unitary(path, registry),
            CircuitElement::PathRelabel { from, to } => path_relabel_unitary(from, to, registry),
            CircuitElement::Loss { mode, transmission, loss_mode } => {
                loss_element(mode, transmission, loss_mode, registry)
            }
            CircuitElement::Overlap { path, xi } => overlap_unitary(path, xi, registry),
        }
    }
}
