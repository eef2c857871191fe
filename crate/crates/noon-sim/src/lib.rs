//! Desk-scale exact simulator of heralded photonic NOON-state generation.
//!
//! The library evolves sparse multimode Fock states through polarization
//! linear optics, conditions on heralding detections, computes detector
//! cascade coincidence statistics analytically, generates Monte Carlo
//! counts over pulse trains, and fits the resulting interference fringes
//! for visibility and figure-of-merit analysis.
//!
//! Entry points:
//! - [`preset::preset_noon3`] / [`preset::preset_noon4`] build the two
//!   experiment circuits;
//! - [`detect::fringe_scan`] and [`detect::mc_sample_counts`] produce
//!   fringe tables;
//! - [`analysis`] hosts fitting, background subtraction, and
//!   figure-of-merit computations.

pub mod analysis;
pub mod detect;
pub mod elements;
pub mod error;
pub mod fock;
pub mod mc;
pub mod mode;
pub mod preset;
pub mod source;

pub use error::{FitError, FockError};
pub use fock::{ConditionOutcome, FockState, SingleParticleUnitary, DEFAULT_N_MAX};
pub use mode::{ModeId, ModeRegistry, PathLabel, Pol};
