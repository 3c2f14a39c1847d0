//! Pilot-phase analog combining.
//!
//! During training the array listens through `chains` RF chains for several
//! slots; slot `t` applies a combiner `W_t` and delivers `W_t^H (sqrt(P_p) h
//! + n_t)`. Raw random-sign combiners correlate the projected noise across
//! chains, so each slot is whitened on construction: `W_t <- W_t (L^H)^-1`
//! with `W_t^H W_t = L L^H`, which makes the per-slot columns exactly
//! orthonormal and the stacked noise white with the antenna-level power.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use super::EstimationError;
use crate::numeric::{complex_gaussian_vector, lstsq, RANK_TOLERANCE};

/// Stacked pilot combiner `[W_1 .. W_T]` with orthonormal per-slot columns.
#[derive(Clone, Debug)]
pub struct TrainingEnsemble {
    combiner: DMatrix<Complex64>,
    chains: usize,
    pilot_power: f64,
}

impl TrainingEnsemble {
    /// Random-sign combiner, one whitened `antennas x chains` block per slot.
    /// A slot whose Gram factor degenerates is redrawn.
    pub fn random<R: Rng + ?Sized>(
        antennas: usize,
        chains: usize,
        slots: usize,
        pilot_power: f64,
        rng: &mut R,
    ) -> Result<Self, EstimationError> {
        check_layout(antennas, chains, pilot_power)?;
        if slots == 0 {
            return Err(EstimationError::NoSlots);
        }
        let scale = 1.0 / (antennas as f64).sqrt();
        let mut combiner = DMatrix::zeros(antennas, slots * chains);
        for t in 0..slots {
            let mut redraws = 0;
            loop {
                let raw = DMatrix::from_fn(antennas, chains, |_, _| {
                    Complex64::new(if rng.gen::<bool>() { scale } else { -scale }, 0.0)
                });
                if let Some(white) = whiten_slot(&raw) {
                    combiner.columns_mut(t * chains, chains).copy_from(&white);
                    break;
                }
                redraws += 1;
                if redraws > 64 {
                    return Err(EstimationError::WhiteningFailed);
                }
            }
        }
        Ok(Self {
            combiner,
            chains,
            pilot_power,
        })
    }

    /// Exhaustive DFT training: the stacked combiner is the unitary DFT
    /// matrix, swept `chains` columns per slot.
    pub fn dft(antennas: usize, chains: usize, pilot_power: f64) -> Result<Self, EstimationError> {
        check_layout(antennas, chains, pilot_power)?;
        if antennas % chains != 0 {
            return Err(EstimationError::ChainCountMustDivide { chains, antennas });
        }
        let scale = 1.0 / (antennas as f64).sqrt();
        let combiner = DMatrix::from_fn(antennas, antennas, |a, b| {
            Complex64::from_polar(
                scale,
                -2.0 * std::f64::consts::PI * (a as f64) * (b as f64) / antennas as f64,
            )
        });
        Ok(Self {
            combiner,
            chains,
            pilot_power,
        })
    }

    pub fn antennas(&self) -> usize {
        self.combiner.nrows()
    }

    pub fn chains(&self) -> usize {
        self.chains
    }

    pub fn slots(&self) -> usize {
        self.combiner.ncols() / self.chains
    }

    /// Total scalar observations per subcarrier.
    pub fn measurements(&self) -> usize {
        self.combiner.ncols()
    }

    pub fn pilot_power(&self) -> f64 {
        self.pilot_power
    }

    pub fn combiner(&self) -> &DMatrix<Complex64> {
        &self.combiner
    }

    /// Noise-free stacked observation `sqrt(P_p) W^H h`.
    pub fn measure_noiseless(&self, channel: &DVector<Complex64>) -> DVector<Complex64> {
        debug_assert_eq!(channel.len(), self.antennas());
        self.combiner.adjoint() * channel * Complex64::new(self.pilot_power.sqrt(), 0.0)
    }

    /// Stacked observation with fresh antenna-level noise of total power
    /// `noise_power` per antenna in every slot.
    pub fn measure<R: Rng + ?Sized>(
        &self,
        channel: &DVector<Complex64>,
        noise_power: f64,
        rng: &mut R,
    ) -> DVector<Complex64> {
        debug_assert_eq!(channel.len(), self.antennas());
        let scaled = channel * Complex64::new(self.pilot_power.sqrt(), 0.0);
        let mut out = DVector::zeros(self.measurements());
        for t in 0..self.slots() {
            let noise = complex_gaussian_vector(rng, self.antennas(), noise_power);
            let slot = self.combiner.columns(t * self.chains, self.chains);
            let y = slot.adjoint() * (&scaled + noise);
            out.rows_mut(t * self.chains, self.chains).copy_from(&y);
        }
        out
    }
}

fn check_layout(antennas: usize, chains: usize, pilot_power: f64) -> Result<(), EstimationError> {
    if chains == 0 || chains > antennas {
        return Err(EstimationError::ChainCountExceedsAntennas { chains, antennas });
    }
    if !(pilot_power.is_finite() && pilot_power > 0.0) {
        return Err(EstimationError::InvalidPilotPower(pilot_power));
    }
    Ok(())
}

/// Cholesky-based whitening `W (L^H)^-1`; `None` when the slot's columns are
/// too close to dependent to trust the factor.
fn whiten_slot(raw: &DMatrix<Complex64>) -> Option<DMatrix<Complex64>> {
    let gram = raw.adjoint() * raw;
    let chol = gram.cholesky()?;
    let l = chol.l();
    if l.diagonal().iter().any(|d| d.re < 1e-3) {
        return None;
    }
    let inv = l.adjoint().try_inverse()?;
    Some(raw * inv)
}

// ── Multi-antenna users ─────────────────────────────────────────────────────

/// Orthonormal pilot directions transmitted by a multi-antenna user.
#[derive(Clone, Debug)]
pub struct UserPilots {
    matrix: DMatrix<Complex64>,
}

impl UserPilots {
    pub fn random<R: Rng + ?Sized>(
        antennas: usize,
        count: usize,
        rng: &mut R,
    ) -> Result<Self, EstimationError> {
        if count == 0 || count > antennas {
            return Err(EstimationError::ChainCountExceedsAntennas {
                chains: count,
                antennas,
            });
        }
        let scale = 1.0 / (antennas as f64).sqrt();
        for _ in 0..=64 {
            let raw = DMatrix::from_fn(antennas, count, |_, _| {
                Complex64::new(if rng.gen::<bool>() { scale } else { -scale }, 0.0)
            });
            if let Some(white) = whiten_slot(&raw) {
                return Ok(Self { matrix: white });
            }
        }
        Err(EstimationError::WhiteningFailed)
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn count(&self) -> usize {
        self.matrix.ncols()
    }
}

/// Uplink observation of a channel matrix: the user sweeps its pilot
/// directions (outer index) while the array sweeps its slots (inner index),
/// matching the row order of a user (x) base-station Kronecker sensing model.
pub fn measure_mimo<R: Rng + ?Sized>(
    ensemble: &TrainingEnsemble,
    pilots: &UserPilots,
    channel: &DMatrix<Complex64>,
    noise_power: f64,
    rng: &mut R,
) -> DVector<Complex64> {
    debug_assert_eq!(channel.nrows(), ensemble.antennas());
    debug_assert_eq!(channel.ncols(), pilots.matrix.nrows());
    let block = ensemble.measurements();
    let mut out = DVector::zeros(pilots.count() * block);
    for j in 0..pilots.count() {
        let excited = channel * pilots.matrix.column(j);
        let y = ensemble.measure(&excited, noise_power, rng);
        out.rows_mut(j * block, block).copy_from(&y);
    }
    out
}

// ── Least squares baseline ──────────────────────────────────────────────────

/// Unstructured estimate `argmin || y - sqrt(P_p) W^H h ||`; needs at least
/// as many observations as antennas and a full-rank combiner.
pub fn ls_estimate(
    ensemble: &TrainingEnsemble,
    observation: &DVector<Complex64>,
) -> Result<DVector<Complex64>, EstimationError> {
    let (m, n) = (ensemble.measurements(), ensemble.antennas());
    if m < n {
        return Err(EstimationError::Underdetermined {
            measurements: m,
            antennas: n,
        });
    }
    if observation.len() != m {
        return Err(EstimationError::DimensionMismatch {
            expected: m,
            got: observation.len(),
        });
    }
    let system = ensemble.combiner.adjoint() * Complex64::new(ensemble.pilot_power.sqrt(), 0.0);
    Ok(lstsq(&system, observation))
}

/// Expected squared error of [`ls_estimate`] under white noise of power
/// `noise_power`: `(noise/P_p) * sum_i 1/s_i^2` over the combiner's singular
/// values, which collapses to `noise * antennas / P_p` for unitary training.
pub fn ls_mse(ensemble: &TrainingEnsemble, noise_power: f64) -> Result<f64, EstimationError> {
    if !(noise_power.is_finite() && noise_power >= 0.0) {
        return Err(EstimationError::InvalidNoisePower(noise_power));
    }
    let singulars = ensemble.combiner.clone().svd(false, false).singular_values;
    let smax = singulars.max();
    if ensemble.measurements() < ensemble.antennas()
        || singulars.iter().any(|&s| s <= RANK_TOLERANCE * smax)
    {
        return Err(EstimationError::RankDeficientCombiner);
    }
    Ok(noise_power / ensemble.pilot_power * singulars.iter().map(|s| s.powi(-2)).sum::<f64>())
}

// ── Tests ───────────────────────────────────────────────────────────────────
