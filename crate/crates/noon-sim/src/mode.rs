//! Named bosonic modes and the registry that fixes their storage order.
//!
//! A mode is identified by a spatial path, a polarization, and a small
//! internal (temporal/spectral) label used to model partial
//! distinguishability. Every state and element refers to modes through a
//! shared [`ModeRegistry`], which assigns each registered mode a fixed
//! index into occupation vectors.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::FockError;

/// Polarization of a mode.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pol {
    H,
    V,
}

impl fmt::Display for Pol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pol::H => write!(f, "H"),
            Pol::V => write!(f, "V"),
        }
    }
}

/// Spatial-path label of a mode.
///
/// `Herald(0)` is the heralding arm of the three-photon scheme; the
/// four-photon scheme adds `Herald(1)`. `Loss(k)` paths receive photons
/// removed by loss elements and are never observed directly.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PathLabel {
    Upper,
    Lower,
    Main,
    Herald(u8),
    Loss(u8),
    Detector(u8),
}

impl fmt::Display for PathLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathLabel::Upper => write!(f, "upper"),
            PathLabel::Lower => write!(f, "lower"),
            PathLabel::Main => write!(f, "main"),
            PathLabel::Herald(k) => write!(f, "herald-{k}"),
            PathLabel::Loss(k) => write!(f, "loss-{k}"),
            PathLabel::Detector(k) => write!(f, "detector-{k}"),
        }
    }
}

/// One bosonic mode: (path, polarization, internal label).
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeId {
    pub path: PathLabel,
    pub pol: Pol,
    pub internal: u8,
}

impl ModeId {
    pub fn new(path: PathLabel, pol: Pol, internal: u8) -> Self {
        Self { path, pol, internal }
    }

    /// Mode with the default internal label 0.
    pub fn base(path: PathLabel, pol: Pol) -> Self {
        Self { path, pol, internal: 0 }
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.path, self.pol, self.internal)
    }
}

/// Ordered collection of registered modes.
///
/// Occupation vectors are indexed by registration order. Each mode is
/// registered exactly once; lookups of unregistered modes are errors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeRegistry {
    modes: Vec<ModeId>,
    index: HashMap<ModeId, usize>,
}

impl ModeRegistry {
    /// Builds a registry from a list of distinct modes.
    pub fn new(modes: Vec<ModeId>) -> Result<Arc<Self>, FockError> {
        let mut index = HashMap::with_capacity(modes.len());
        for (i, &m) in modes.iter().enumerate() {
            if index.insert(m, i).is_some() {
                return Err(FockError::DuplicateMode(m));
            }
        }
        Ok(Arc::new(Self { modes, index }))
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[ModeId] {
        &self.modes
    }

    pub fn contains(&self, mode: ModeId) -> bool {
        self.index.contains_key(&mode)
    }

    /// Index of `mode` in occupation vectors.
    pub fn index_of(&self, mode: ModeId) -> Result<usize, FockError> {
        self.index.get(&mode).copied().ok_or(FockError::UnregisteredMode(mode))
    }

    /// All registered modes on `path`.
    pub fn modes_on_path(&self, path: PathLabel) -> Vec<ModeId> {
        self.modes.iter().copied().filter(|m| m.path == path).collect()
    }

    /// Registry with `removed` dropped, preserving the order of the rest.
    pub fn without(&self, removed: &[ModeId]) -> Result<Arc<Self>, FockError> {
        for &m in removed {
            self.index_of(m)?;
        }
        let kept = self
            .modes
            .iter()
            .copied()
            .filter(|m| !removed.contains(m))
            .collect();
        Self::new(kept)
    }
}
