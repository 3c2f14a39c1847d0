//! Receive combining over wide bandwidths.
//!
//! A frequency-flat phase-shifter beam steered at the carrier drifts off
//! target as the subcarrier offset grows (beam squint). Inserting one delay
//! line per virtual subarray restores the alignment up to a residual that
//! factors into two Dirichlet kernels, one per array axis:
//!
//! ```text
//! |w(f)^H a(dir, f)|^2 / N_B = D_E(2*pi*f*dx)^2 * D_F(2*pi*f*dy)^2
//! ```
//!
//! with `E x F` the subarray extent and `dx`, `dy` the per-element axis
//! delays of the steering direction. The identity is exact and doubles as a
//! cross-check for the combiner implementations here.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::array::{dirichlet, ArrayError, ArrayGeometry, Direction, VirtualPartition};
use crate::numeric::RANK_TOLERANCE;

#[derive(Debug, Error, PartialEq)]
pub enum CombiningError {
    #[error("power budget must be positive and finite, got {0}")]
    InvalidBudget(f64),
    #[error("noise power must be positive and finite, got {0}")]
    InvalidNoise(f64),
    #[error("no stream carries positive gain")]
    NoUsableStream,
}

/// Beamforming gain of `weights` toward the response `a`, normalized so a
/// unit-norm weight vector matched to a unit-modulus response scores 1.
pub fn normalized_gain(weights: &DVector<Complex64>, response: &DVector<Complex64>) -> f64 {
    weights.dotc(response).norm_sqr() / response.len() as f64
}

/// Unit-norm combiner matched to the response at subcarrier offset `f`.
pub fn matched_combiner(geom: &ArrayGeometry, dir: &Direction, f: f64) -> DVector<Complex64> {
    geom.response(dir, f) / Complex64::new((geom.antenna_count() as f64).sqrt(), 0.0)
}

/// Phase-shifter-only combiner tuned at the carrier, applied at every
/// subcarrier unchanged.
pub fn narrowband_combiner(geom: &ArrayGeometry, dir: &Direction) -> DVector<Complex64> {
    matched_combiner(geom, dir, 0.0)
}

// ── Delay-augmented analog beam ─────────────────────────────────────────────

/// Analog beam built from carrier-tuned phase shifters plus one delay line
/// per virtual subarray; the subarray at block `(q, p)` delays its feed by
/// `q*E*dx + p*F*dy` so the block phase tracks the subcarrier offset.
#[derive(Clone, Debug)]
pub struct TtdCombiner {
    carrier_weights: DVector<Complex64>,
    block_delays: Vec<f64>,
    partition: VirtualPartition,
}

impl TtdCombiner {
    pub fn new(
        geom: &ArrayGeometry,
        partition: VirtualPartition,
        dir: &Direction,
    ) -> Result<Self, ArrayError> {
        partition.validate(geom)?;
        let (dx, dy) = geom.axis_delays(dir);
        let rows_per = geom.rows() / partition.x_subarrays();
        let cols_per = geom.cols() / partition.y_subarrays();
        let scale = Complex64::new(1.0 / (geom.antenna_count() as f64).sqrt(), 0.0);
        let mut carrier_weights = DVector::zeros(geom.antenna_count());
        let mut block_delays = vec![0.0; geom.antenna_count()];
        for n in 0..geom.rows() {
            for m in 0..geom.cols() {
                let i = geom.flat_index(n, m);
                let phase = -2.0
                    * std::f64::consts::PI
                    * geom.carrier()
                    * (n as f64 * dx + m as f64 * dy);
                carrier_weights[i] = scale * Complex64::from_polar(1.0, phase);
                block_delays[i] =
                    (n / rows_per * rows_per) as f64 * dx + (m / cols_per * cols_per) as f64 * dy;
            }
        }
        Ok(Self {
            carrier_weights,
            block_delays,
            partition,
        })
    }

    /// Weight vector applied at subcarrier offset `f`; always unit norm.
    pub fn weights(&self, f: f64) -> DVector<Complex64> {
        DVector::from_iterator(
            self.carrier_weights.len(),
            self.carrier_weights
                .iter()
                .zip(&self.block_delays)
                .map(|(w, t)| w * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f * t)),
        )
    }

    /// Delay lines spent on this beam (the reference block needs none).
    pub fn delay_count(&self) -> usize {
        self.partition.ttd_count()
    }
}

/// Closed-form normalized gain of the delay-augmented beam toward its own
/// steering direction at offset `f`. A `1 x 1` partition predicts the
/// narrowband beam, a per-element partition predicts 1 at every offset.
pub fn squint_gain_prediction(
    geom: &ArrayGeometry,
    partition: &VirtualPartition,
    dir: &Direction,
    f: f64,
) -> Result<f64, ArrayError> {
    partition.validate(geom)?;
    let (dx, dy) = geom.axis_delays(dir);
    let rows_per = geom.rows() / partition.x_subarrays();
    let cols_per = geom.cols() / partition.y_subarrays();
    let gx = dirichlet(rows_per, 2.0 * std::f64::consts::PI * f * dx);
    let gy = dirichlet(cols_per, 2.0 * std::f64::consts::PI * f * dy);
    Ok(gx * gx * gy * gy)
}

// ── Digital layers ──────────────────────────────────────────────────────────

/// Maximal-ratio digital layer behind analog beams: `w = F (F^H h)`.
/// Passing the channel itself as the single beam recovers fully digital MRC.
pub fn hybrid_mrc_weights(
    beams: &[DVector<Complex64>],
    channel: &DVector<Complex64>,
) -> DVector<Complex64> {
    let mut w = DVector::zeros(channel.len());
    for beam in beams {
        w.axpy(beam.dotc(channel), beam, Complex64::new(1.0, 0.0));
    }
    w
}

/// Post-combining SNR gain `|w^H h|^2 / ||w||^2`; zero when the beams are
/// orthogonal to the channel.
pub fn combining_gain(weights: &DVector<Complex64>, channel: &DVector<Complex64>) -> f64 {
    let norm_sq = weights.norm_squared();
    if norm_sq <= 0.0 {
        return 0.0;
    }
    weights.dotc(channel).norm_sqr() / norm_sq
}

/// Singular values of the channel seen through the subspace spanned by the
/// analog beams, with the post-combining noise kept white. Rank-deficient
/// beam sets are handled by orthonormalizing the span first.
pub fn subspace_singulars(
    beams: &DMatrix<Complex64>,
    channel: &DMatrix<Complex64>,
) -> Vec<f64> {
    let svd = beams.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.max();
    if smax <= 0.0 {
        return vec![0.0; channel.ncols().min(channel.nrows())];
    }
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > RANK_TOLERANCE * smax)
        .count();
    let basis = u.columns(0, rank);
    let effective = basis.adjoint() * channel;
    effective.svd(false, false).singular_values.iter().copied().collect()
}

// ── Power allocation ────────────────────────────────────────────────────────

/// Waterfilling over parallel streams: maximizes `sum log2(1 + p_i g_i /
/// noise)` subject to `sum p_i = budget`, `p_i >= 0`. Returns the per-stream
/// powers in input order.
pub fn waterfilling(
    gains: &[f64],
    noise: f64,
    budget: f64,
) -> Result<Vec<f64>, CombiningError> {
    if !(budget.is_finite() && budget > 0.0) {
        return Err(CombiningError::InvalidBudget(budget));
    }
    if !(noise.is_finite() && noise > 0.0) {
        return Err(CombiningError::InvalidNoise(noise));
    }
    let floors: Vec<f64> = gains
        .iter()
        .map(|&g| if g > 0.0 { noise / g } else { f64::INFINITY })
        .collect();
    let min_floor = floors.iter().copied().fold(f64::INFINITY, f64::min);
    if !min_floor.is_finite() {
        return Err(CombiningError::NoUsableStream);
    }
    let spend = |level: f64| -> f64 {
        floors
            .iter()
            .map(|&fl| (level - fl).max(0.0))
            .sum::<f64>()
    };
    let mut lo = min_floor;
    let mut hi = min_floor + budget;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if spend(mid) > budget {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let level = 0.5 * (lo + hi);
    // Exact budget despite bisection rounding: rescale the active powers.
    let mut powers: Vec<f64> = floors.iter().map(|&fl| (level - fl).max(0.0)).collect();
    let total: f64 = powers.iter().sum();
    if total > 0.0 {
        let correction = budget / total;
        for p in &mut powers {
            *p *= correction;
        }
    }
    Ok(powers)
}

// ── Tests ───────────────────────────────────────────────────────────────────
