//! Compressed channel estimation from reduced pilot observations.
//!
//! The pipeline factors into four pieces:
//!
//! * [`training`]: analog pilot combiners with per-slot whitening, so the
//!   post-combining noise stays white, plus the least-squares baseline.
//! * [`dictionary`]: frequency-dependent steering dictionaries on a uniform
//!   spatial-frequency grid, shared by all subcarriers of one grid.
//! * [`pursuit`]: greedy sparse recovery over one or many subcarriers with a
//!   residual-energy stopping rule.
//! * [`bounds`]: genie-aided error bounds and sensing-matrix diagnostics.

use thiserror::Error;

pub mod bounds;
pub mod dictionary;
pub mod pursuit;
pub mod training;

#[derive(Debug, Error, PartialEq)]
pub enum EstimationError {
    #[error("{chains} chains cannot combine {antennas} antennas")]
    ChainCountExceedsAntennas { chains: usize, antennas: usize },
    #[error("chain count {chains} must divide the antenna count {antennas}")]
    ChainCountMustDivide { chains: usize, antennas: usize },
    #[error("slot count must be positive")]
    NoSlots,
    #[error("pilot power must be positive and finite, got {0}")]
    InvalidPilotPower(f64),
    #[error("noise power must be non-negative and finite, got {0}")]
    InvalidNoisePower(f64),
    #[error("failed to whiten the pilot combiner after repeated redraws")]
    WhiteningFailed,
    #[error("dictionary grid size {0} must be odd")]
    EvenGrid(usize),
    #[error("dictionary grid size must be positive")]
    EmptyGrid,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("least squares needs at least as many measurements ({measurements}) as antennas ({antennas})")]
    Underdetermined { measurements: usize, antennas: usize },
    #[error("combiner is rank deficient; least squares is undefined")]
    RankDeficientCombiner,
    #[error("subcarrier index {s} out of range for {count} subcarriers")]
    SubcarrierOutOfRange { s: usize, count: usize },
    #[error("empty support")]
    EmptySupport,
    #[error("support solve failed; atoms are numerically dependent")]
    DegenerateSupport,
    #[error("pursuit inputs must contain at least one subcarrier")]
    NoSubcarriers,
    #[error("tolerance must be non-negative and finite, got {0}")]
    InvalidTolerance(f64),
}
