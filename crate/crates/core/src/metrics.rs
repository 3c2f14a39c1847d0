//! Estimation-quality and link-level figures of merit.
//!
//! Rates follow the per-subcarrier decomposition `R = sum_s dF * log2(1 +
//! SINR_s)` with the data power split evenly across subcarriers and the
//! noise integrated over one subcarrier spacing, `dF * sigma0`. Estimation
//! quality is the energy-normalized squared error over the whole grid.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::combining::{waterfilling, CombiningError};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("need the same number of reference and estimate entries, got {reference} vs {estimate}")]
    LengthMismatch { reference: usize, estimate: usize },
    #[error("reference has zero energy; the normalized error is undefined")]
    ZeroReference,
    #[error("no subcarriers given")]
    Empty,
    #[error("power {0} must be positive and finite")]
    InvalidPower(f64),
    #[error("noise density {0} must be positive and finite")]
    InvalidNoise(f64),
    #[error("subcarrier spacing {0} must be positive and finite")]
    InvalidSpacing(f64),
    #[error(transparent)]
    Allocation(#[from] CombiningError),
}

// ── Unit helpers ────────────────────────────────────────────────────────────

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

// ── Estimation quality ──────────────────────────────────────────────────────

/// Normalized squared error `sum_s ||h_s - e_s||^2 / sum_s ||h_s||^2`.
pub fn nmse(
    reference: &[DVector<Complex64>],
    estimate: &[DVector<Complex64>],
) -> Result<f64, MetricsError> {
    normalized_error(reference, estimate, |a, b| (a - b).norm_squared(), |a| {
        a.norm_squared()
    })
}

/// Matrix-channel variant of [`nmse`] with Frobenius norms.
pub fn nmse_mats(
    reference: &[DMatrix<Complex64>],
    estimate: &[DMatrix<Complex64>],
) -> Result<f64, MetricsError> {
    normalized_error(reference, estimate, |a, b| (a - b).norm_squared(), |a| {
        a.norm_squared()
    })
}

fn normalized_error<T>(
    reference: &[T],
    estimate: &[T],
    err: impl Fn(&T, &T) -> f64,
    energy: impl Fn(&T) -> f64,
) -> Result<f64, MetricsError> {
    if reference.is_empty() {
        return Err(MetricsError::Empty);
    }
    if reference.len() != estimate.len() {
        return Err(MetricsError::LengthMismatch {
            reference: reference.len(),
            estimate: estimate.len(),
        });
    }
    let total: f64 = reference.iter().map(&energy).sum();
    if total <= 0.0 {
        return Err(MetricsError::ZeroReference);
    }
    let sq: f64 = reference
        .iter()
        .zip(estimate)
        .map(|(a, b)| err(a, b))
        .sum();
    Ok(sq / total)
}

/// Average pilot SNR `variance * pilot_power / noise_power` for statistical
/// path gains of the given variance.
pub fn avg_snr(gain_variance: f64, pilot_power: f64, noise_power: f64) -> f64 {
    gain_variance * pilot_power / noise_power
}

/// Gain variance that realizes a target average pilot SNR.
pub fn gain_variance_for_snr(snr: f64, pilot_power: f64, noise_power: f64) -> f64 {
    snr * noise_power / pilot_power
}

// ── Achievable rate ─────────────────────────────────────────────────────────

#[derive(Clone, Copy, Debug)]
pub struct RateConfig {
    /// Transmit power budget in watts, split evenly over the subcarriers.
    pub total_power: f64,
    /// One-sided noise power spectral density in W/Hz.
    pub noise_density: f64,
    /// Subcarrier spacing in Hz.
    pub subcarrier_spacing: f64,
}

impl RateConfig {
    fn check(&self, subcarriers: usize) -> Result<(f64, f64), MetricsError> {
        if subcarriers == 0 {
            return Err(MetricsError::Empty);
        }
        if !(self.total_power.is_finite() && self.total_power > 0.0) {
            return Err(MetricsError::InvalidPower(self.total_power));
        }
        if !(self.noise_density.is_finite() && self.noise_density > 0.0) {
            return Err(MetricsError::InvalidNoise(self.noise_density));
        }
        if !(self.subcarrier_spacing.is_finite() && self.subcarrier_spacing > 0.0) {
            return Err(MetricsError::InvalidSpacing(self.subcarrier_spacing));
        }
        Ok((
            self.total_power / subcarriers as f64,
            self.subcarrier_spacing * self.noise_density,
        ))
    }
}

/// Rate in bit/s from per-subcarrier combining gains `|w^H h|^2 / ||w||^2`.
pub fn rate_from_gains(gains: &[f64], cfg: &RateConfig) -> Result<f64, MetricsError> {
    let (data_power, noise) = cfg.check(gains.len())?;
    Ok(gains
        .iter()
        .map(|&g| cfg.subcarrier_spacing * (1.0 + data_power * g / noise).log2())
        .sum())
}

/// Rate under channel-estimate beamforming: the residual estimation error
/// enters the effective SINR as self-interference,
/// `SINR_s = P_d ||e_s||^2 / (dF*sigma0 + P_d * q_s / ||e_s||^2)` with
/// `q_s = e_s^H R_err e_s`.
pub fn rate_with_estimation_error(
    estimate_energy: &[f64],
    error_quadratic: &[f64],
    cfg: &RateConfig,
) -> Result<f64, MetricsError> {
    if estimate_energy.len() != error_quadratic.len() {
        return Err(MetricsError::LengthMismatch {
            reference: estimate_energy.len(),
            estimate: error_quadratic.len(),
        });
    }
    let (data_power, noise) = cfg.check(estimate_energy.len())?;
    Ok(estimate_energy
        .iter()
        .zip(error_quadratic)
        .map(|(&e, &q)| {
            if e <= 0.0 {
                return 0.0;
            }
            let sinr = data_power * e / (noise + data_power * q / e);
            cfg.subcarrier_spacing * (1.0 + sinr).log2()
        })
        .sum())
}

/// Waterfilled rate over per-subcarrier singular-value sets: the budget is
/// shared across every (subcarrier, stream) pair.
pub fn rate_svd(singulars: &[Vec<f64>], cfg: &RateConfig) -> Result<f64, MetricsError> {
    let (_, noise) = cfg.check(singulars.len().max(1))?;
    let gains: Vec<f64> = singulars
        .iter()
        .flat_map(|per_s| per_s.iter().map(|s| s * s))
        .collect();
    if gains.is_empty() {
        return Err(MetricsError::Empty);
    }
    let powers = waterfilling(&gains, noise, cfg.total_power)?;
    Ok(gains
        .iter()
        .zip(&powers)
        .map(|(&g, &p)| cfg.subcarrier_spacing * (1.0 + p * g / noise).log2())
        .sum())
}

// ── Empirical distribution ──────────────────────────────────────────────────

/// Sorted (value, probability) pairs of the empirical CDF, `p_i = (i+1)/n`.
pub fn empirical_cdf(values: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("CDF values must be comparable"));
    let n = sorted.len() as f64;
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, v)| (v, (i + 1) as f64 / n))
        .collect()
}

// ── Tests ───────────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
        assert!(
            (a - b).abs() <= tol,
            "{what}: {a} vs {b} (|diff| = {})",
            (a - b).abs()
        );
    }

    // 1. Exact estimates score zero; a known perturbation scores its energy
    //    ratio; validation errors.
    #[test]
    fn nmse_basics() {
        let h = vec![DVector::from_element(4, Complex64::new(1.0, 0.0)); 3];
        assert_eq!(nmse(&h, &h).unwrap(), 0.0);

        let mut off = h.clone();
        off[1][2] += Complex64::new(0.0, 3.0);
        // 9 units of error over 12 units of energy.
        assert_close(nmse(&h, &off).unwrap(), 0.75, 1e-14, "known ratio");

        assert!(matches!(
            nmse(&h, &h[..2].to_vec()),
            Err(MetricsError::LengthMismatch { .. })
        ));
        let zeros = vec![DVector::zeros(4); 3];
        assert!(matches!(nmse(&zeros, &h), Err(MetricsError::ZeroReference)));
        assert!(matches!(nmse(&[], &[]), Err(MetricsError::Empty)));
    }

    // 2. Average pilot SNR at the reference operating point, and the
    //    variance/SNR round trip.
    #[test]
    fn snr_operating_point() {
        let pilot = dbm_to_watts(10.0) / 400.0; // 10 dBm over 400 subcarriers
        assert_close(pilot, 2.5e-5, 1e-19, "pilot power");
        let noise = dbm_to_watts(-174.0) * 1e8; // -174 dBm/Hz over 100 MHz
        let snr = avg_snr(1e-9, pilot, noise);
        assert_close(snr, 0.06279716078773950, 1e-15, "average pilot SNR");
        assert_close(linear_to_db(snr), -12.02059991327964, 1e-12, "in dB");

        let back = gain_variance_for_snr(snr, pilot, noise);
        assert_close(back, 1e-9, 1e-22, "round trip");
    }

    // 3. One subcarrier at unit SINR yields exactly the subcarrier spacing
    //    in bit/s.
    #[test]
    fn unit_sinr_rate() {
        let cfg = RateConfig {
            total_power: 2.0,
            noise_density: 0.5,
            subcarrier_spacing: 4.0,
        };
        // data power 2, noise 2: gain 1 puts SINR at 1.
        let r = rate_from_gains(&[1.0], &cfg).unwrap();
        assert_close(r, 4.0, 1e-12, "one bit per symbol");
        assert!(rate_from_gains(&[], &cfg).is_err());
    }

    // 4. Zero residual error reduces the estimate-based rate to the perfect
    //    formula with gain equal to the estimate energy; error lowers it.
    #[test]
    fn estimation_error_penalty() {
        let cfg = RateConfig {
            total_power: 1.0,
            noise_density: 1e-3,
            subcarrier_spacing: 10.0,
        };
        let energy = [2.0, 1.5, 0.5, 3.0];
        let clean = rate_with_estimation_error(&energy, &[0.0; 4], &cfg).unwrap();
        let direct = rate_from_gains(&energy, &cfg).unwrap();
        assert_close(clean, direct, 1e-9, "error-free agreement");

        let noisy = rate_with_estimation_error(&energy, &[0.1; 4], &cfg).unwrap();
        assert!(noisy < clean);
        // A dead subcarrier contributes nothing rather than a NaN.
        let r = rate_with_estimation_error(&[0.0], &[0.0], &cfg).unwrap();
        assert_eq!(r, 0.0);
    }

    // 5. Waterfilled SVD rate never loses to equal power, and a single
    //    stream spends the whole budget.
    #[test]
    fn svd_rate_allocation() {
        let cfg = RateConfig {
            total_power: 0.8,
            noise_density: 0.01,
            subcarrier_spacing: 2.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..25 {
            let singulars: Vec<Vec<f64>> = (0..3)
                .map(|_| (0..2).map(|_| rng.gen_range(0.05..2.0)).collect())
                .collect();
            let water = rate_svd(&singulars, &cfg).unwrap();
            let noise = cfg.noise_density * cfg.subcarrier_spacing;
            let equal: f64 = singulars
                .iter()
                .flatten()
                .map(|s| {
                    cfg.subcarrier_spacing
                        * (1.0 + (cfg.total_power / 6.0) * s * s / noise).log2()
                })
                .sum();
            assert!(water >= equal - 1e-9, "waterfilling lost: {water} < {equal}");
        }

        let single = rate_svd(&[vec![1.5]], &cfg).unwrap();
        let noise = cfg.noise_density * cfg.subcarrier_spacing;
        let want = cfg.subcarrier_spacing * (1.0 + cfg.total_power * 2.25 / noise).log2();
        assert_close(single, want, 1e-9, "single stream takes all power");
    }

    // 6. Empirical CDF ordering, probabilities, and duplicate handling.
    #[test]
    fn cdf_fixture() {
        let cdf = empirical_cdf(&[3.0, 1.0, 2.0]);
        let want = [(1.0, 1.0 / 3.0), (2.0, 2.0 / 3.0), (3.0, 1.0)];
        for ((v, p), (wv, wp)) in cdf.iter().zip(want.iter()) {
            assert_close(*v, *wv, 0.0, "value");
            assert_close(*p, *wp, 1e-15, "probability");
        }
        let dup = empirical_cdf(&[1.0, 1.0]);
        assert_eq!(dup, vec![(1.0, 0.5), (1.0, 1.0)]);
        assert!(empirical_cdf(&[]).is_empty());
    }
}
