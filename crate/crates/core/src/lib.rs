//! Wideband terahertz massive-MIMO link toolkit.
//!
//! The crate models an uplink in which a base station with a large uniform
//! planar array receives a multipath channel spread over several tens of GHz.
//! At that scale the array response is frequency dependent (beam squint), so
//! every layer here carries the subcarrier offset `f` explicitly:
//!
//! * [`array`] — planar/linear geometry, frequency-dependent steering vectors,
//!   spatial frequencies, the virtual subarray partition and the element
//!   power pattern.
//! * [`channel`] — OFDM grid, molecular absorption and reflection losses,
//!   multipath synthesis (plane or spherical wavefront) and randomized path
//!   sampling.
//! * [`combining`] — true-time-delay analog beams, per-path MRC, hybrid SVD
//!   front ends and waterfilling.
//! * [`estimation`] — pilot ensembles, wideband sparsifying dictionaries,
//!   greedy pursuit (OMP and its group variants), least squares and the
//!   Cramer-Rao diagnostics.
//! * [`metrics`] — NMSE, average SNR, achievable-rate and CDF summaries.
//!
//! All randomness flows through caller-supplied RNGs so that Monte-Carlo
//! trials can be re-seeded per trial index and reproduced exactly.

pub mod array;
pub mod channel;
pub mod combining;
pub mod estimation;
pub mod metrics;
pub mod numeric;

/// Propagation speed used everywhere, in m/s.
///
/// Fixed at exactly 3.0e8 so that derived quantities stay round: a 300 GHz
/// carrier has a 1 mm wavelength and half-wavelength spacing of 0.5 mm.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;
