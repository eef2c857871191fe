//! Error types shared across the simulator.

use thiserror::Error;

use crate::mode::ModeId;

#[derive(Debug, Error)]
pub enum FockError {
    #[error("mode {0} registered more than once")]
    DuplicateMode(ModeId),

    #[error("mode {0} is not registered")]
    UnregisteredMode(ModeId),

    #[error("total photon number {total} exceeds the truncation bound n_max = {n_max}")]
    TruncationExceeded { total: u32, n_max: u32 },

    #[error("states refer to different mode registries")]
    RegistryMismatch,

    #[error("matrix is not unitary (max |U\u{2020}U - I| = {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("matrix dimension {dim} does not match {modes} modes")]
    DimensionMismatch { dim: usize, modes: usize },

    #[error("heralding branch has probability below 1e-14")]
    ZeroProbabilityBranch,

    #[error("state has support outside the requested mode set")]
    SupportOutsideModes,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Error)]
pub enum FitError {
    #[error("need at least 4 points spanning one period, got {0}")]
    TooFewPoints(usize),

    #[error("design matrix is rank deficient (normal-equations determinant {det:.3e})")]
    RankDeficient { det: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
