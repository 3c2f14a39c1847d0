//! Wideband multipath channel synthesis.
//!
//! Channels are evaluated on an OFDM grid of `S` subcarriers spanning a
//! bandwidth `B` around the carrier; subcarrier `s` sits at the offset
//! `f_s = (s - (S-1)/2) * B/S`. Each propagation path contributes
//!
//! ```text
//! h(f) += beta(f) * g(dir) * a(dir, f) * exp(-j*2*pi*f*tau)
//! ```
//!
//! where `beta` folds the frequency-dependent attenuation together with the
//! carrier phase `exp(-j*2*pi*fc*tau)`, `g` is an optional element-pattern
//! amplitude and `a` the steering vector. Physical gains follow the
//! spreading-plus-molecular-absorption law for the direct path and a
//! Fresnel/Rayleigh-roughness reflection loss for single-bounce paths;
//! statistical gains are frequency-flat complex Gaussians.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::array::{ArrayGeometry, Direction, ElementPattern, SpatialFrequency};
use crate::numeric::complex_gaussian;
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("subcarrier count must be positive")]
    EmptySubcarrierGrid,
    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),
    #[error("delay spread must be positive and finite, got {0}")]
    InvalidDelaySpread(f64),
    #[error("bandwidth {bandwidth} below one coherence interval {coherence}")]
    BandwidthBelowCoherence { bandwidth: f64, coherence: f64 },
    #[error("propagation distance must be positive and finite, got {0}")]
    InvalidDistance(f64),
    #[error("incidence angle {0} outside [-pi/2, pi/2]")]
    InvalidIncidence(f64),
    #[error("path count must be positive")]
    NoPaths,
    #[error("gain variance must be positive and finite, got {0}")]
    InvalidVariance(f64),
    #[error("multi-antenna synthesis needs a departure azimuth on every path")]
    MissingDeparture,
    #[error("spherical synthesis is defined for line-of-sight paths only")]
    SphericalNeedsLineOfSight,
    #[error("could not place {count} grid points at separation {separation} on a {grid_x}x{grid_y} grid")]
    GridTooCrowded {
        count: usize,
        separation: usize,
        grid_x: usize,
        grid_y: usize,
    },
}

// ── OFDM grid ───────────────────────────────────────────────────────────────

/// Symmetric OFDM subcarrier grid over a total bandwidth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OfdmGrid {
    subcarriers: usize,
    bandwidth: f64,
}

impl OfdmGrid {
    pub fn new(subcarriers: usize, bandwidth: f64) -> Result<Self, ChannelError> {
        if subcarriers == 0 {
            return Err(ChannelError::EmptySubcarrierGrid);
        }
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(ChannelError::InvalidBandwidth(bandwidth));
        }
        Ok(Self {
            subcarriers,
            bandwidth,
        })
    }

    /// Grid sized so each subcarrier stays inside one coherence bandwidth
    /// `B_c = 1/(2*delay_spread)`: `S = floor(B / B_c)`.
    pub fn from_coherence(bandwidth: f64, delay_spread: f64) -> Result<Self, ChannelError> {
        if !(delay_spread.is_finite() && delay_spread > 0.0) {
            return Err(ChannelError::InvalidDelaySpread(delay_spread));
        }
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(ChannelError::InvalidBandwidth(bandwidth));
        }
        let count = (2.0 * bandwidth * delay_spread).floor();
        if count < 1.0 {
            return Err(ChannelError::BandwidthBelowCoherence {
                bandwidth,
                coherence: 0.5 / delay_spread,
            });
        }
        Self::new(count as usize, bandwidth)
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Subcarrier spacing `B/S`.
    pub fn spacing(&self) -> f64 {
        self.bandwidth / self.subcarriers as f64
    }

    /// Frequency offset of subcarrier `s` from the carrier.
    pub fn frequency(&self, s: usize) -> f64 {
        debug_assert!(s < self.subcarriers);
        (s as f64 - (self.subcarriers as f64 - 1.0) / 2.0) * self.spacing()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.subcarriers).map(|s| self.frequency(s)).collect()
    }
}

// ── Propagation losses ──────────────────────────────────────────────────────

/// Reflecting-medium description: molecular absorption coefficient (1/m),
/// complex refractive index and surface roughness (m).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Medium {
    pub absorption: f64,
    pub refractive_index: Complex64,
    pub roughness: f64,
}

impl Default for Medium {
    fn default() -> Self {
        Self {
            absorption: 0.0033,
            refractive_index: Complex64::new(2.24, -0.025),
            roughness: 0.088e-3,
        }
    }
}

/// Direct-path amplitude attenuation: free-space spreading at `fc + f` times
/// the molecular absorption envelope `exp(-absorption*distance/2)`.
pub fn los_attenuation(
    f: f64,
    carrier: f64,
    distance: f64,
    absorption: f64,
) -> Result<f64, ChannelError> {
    if !(distance.is_finite() && distance > 0.0) {
        return Err(ChannelError::InvalidDistance(distance));
    }
    let spreading = SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * (carrier + f) * distance);
    Ok(spreading * (-0.5 * absorption * distance).exp())
}

/// Smooth-surface Fresnel reflection coefficient scaled by the Rayleigh
/// roughness factor; the refraction angle follows the complex principal
/// branch of `asin(sin(phi_i)/n)`.
pub fn reflection_coefficient(
    f: f64,
    carrier: f64,
    incidence: f64,
    medium: &Medium,
) -> Result<Complex64, ChannelError> {
    if !incidence.is_finite() || incidence.abs() > std::f64::consts::FRAC_PI_2 {
        return Err(ChannelError::InvalidIncidence(incidence));
    }
    let n = medium.refractive_index;
    let cos_i = Complex64::new(incidence.cos(), 0.0);
    let cos_t = (Complex64::new(incidence.sin(), 0.0) / n).asin().cos();
    let fresnel = (cos_i - n * cos_t) / (cos_i + n * cos_t);
    let freq = carrier + f;
    let rough = (-8.0
        * std::f64::consts::PI.powi(2)
        * freq
        * freq
        * medium.roughness
        * medium.roughness
        * incidence.cos().powi(2)
        / (SPEED_OF_LIGHT * SPEED_OF_LIGHT))
        .exp();
    Ok(fresnel * rough)
}

/// Single-bounce amplitude attenuation `|Gamma| * los_attenuation`.
pub fn nlos_attenuation(
    f: f64,
    carrier: f64,
    distance: f64,
    incidence: f64,
    medium: &Medium,
) -> Result<f64, ChannelError> {
    let gamma = reflection_coefficient(f, carrier, incidence, medium)?;
    Ok(gamma.norm() * los_attenuation(f, carrier, distance, medium.absorption)?)
}

// ── Paths ───────────────────────────────────────────────────────────────────

/// How a path's complex gain depends on frequency.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PathGain {
    /// Direct path at the given range; physical spreading and absorption.
    Los { distance: f64 },
    /// Single-bounce path: direct-path spreading over the total traversed
    /// `distance` scaled by the reflection loss at `incidence`.
    Reflected { distance: f64, incidence: f64 },
    /// Frequency-flat statistical gain (already a complex draw).
    Fixed { gain: Complex64 },
}

/// One propagation path of the multipath channel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Path {
    pub gain: PathGain,
    /// Time of arrival in seconds.
    pub delay: f64,
    /// Direction of arrival at the base station.
    pub arrival: Direction,
    /// Departure azimuth at the user (multi-antenna synthesis only).
    pub departure: Option<f64>,
}

impl Path {
    /// Complex gain at subcarrier offset `f`, including the carrier phase
    /// `exp(-j*2*pi*fc*delay)` for the physical models. The `exp(-j*2*pi*f*delay)`
    /// factor is applied separately during synthesis.
    pub fn beta(&self, f: f64, carrier: f64, medium: &Medium) -> Result<Complex64, ChannelError> {
        match self.gain {
            PathGain::Los { distance } => {
                let alpha = los_attenuation(f, carrier, distance, medium.absorption)?;
                Ok(Complex64::from_polar(
                    alpha,
                    -2.0 * std::f64::consts::PI * carrier * self.delay,
                ))
            }
            PathGain::Reflected {
                distance,
                incidence,
            } => {
                let alpha = nlos_attenuation(f, carrier, distance, incidence, medium)?;
                Ok(Complex64::from_polar(
                    alpha,
                    -2.0 * std::f64::consts::PI * carrier * self.delay,
                ))
            }
            PathGain::Fixed { gain } => Ok(gain),
        }
    }
}

// ── Synthesis ───────────────────────────────────────────────────────────────

/// User-side uniform linear array.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UserArray {
    pub antennas: usize,
    pub spacing: f64,
}

impl UserArray {
    pub fn half_wavelength(antennas: usize, carrier: f64) -> Self {
        Self {
            antennas,
            spacing: SPEED_OF_LIGHT / (2.0 * carrier),
        }
    }
}

/// Per-subcarrier channel vectors `h[s]` for a single-antenna user.
///
/// `pattern` applies the base-station element amplitude per path.
pub fn synth_channel(
    geom: &ArrayGeometry,
    grid: &OfdmGrid,
    paths: &[Path],
    medium: &Medium,
    pattern: Option<&ElementPattern>,
) -> Result<Vec<DVector<Complex64>>, ChannelError> {
    let mut out = vec![DVector::zeros(geom.antenna_count()); grid.subcarriers()];
    for path in paths {
        let amp = pattern.map_or(1.0, |p| p.amplitude(&path.arrival));
        for (s, h) in out.iter_mut().enumerate() {
            let f = grid.frequency(s);
            let scale = path.beta(f, geom.carrier(), medium)? * amp
                * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f * path.delay);
            h.axpy(scale, &geom.response(&path.arrival, f), Complex64::new(1.0, 0.0));
        }
    }
    Ok(out)
}

/// Spherical-wavefront variant of [`synth_channel`] for near-field studies.
///
/// Every path must be line-of-sight; the steering vector then carries the
/// full range phase `exp(-j*2*pi*(fc+f)*D/c)`, so no separate arrival-delay
/// factor is applied (the plane-wave model reproduces it in the far field
/// when `delay = distance/c`).
pub fn synth_channel_spherical(
    geom: &ArrayGeometry,
    grid: &OfdmGrid,
    paths: &[Path],
    medium: &Medium,
    pattern: Option<&ElementPattern>,
) -> Result<Vec<DVector<Complex64>>, ChannelError> {
    let mut out = vec![DVector::zeros(geom.antenna_count()); grid.subcarriers()];
    for path in paths {
        let PathGain::Los { distance } = path.gain else {
            return Err(ChannelError::SphericalNeedsLineOfSight);
        };
        let amp = pattern.map_or(1.0, |p| p.amplitude(&path.arrival));
        for (s, h) in out.iter_mut().enumerate() {
            let f = grid.frequency(s);
            let alpha = los_attenuation(f, geom.carrier(), distance, medium.absorption)?;
            let a = geom
                .spherical_response(&path.arrival, distance, f)
                .map_err(|_| ChannelError::InvalidDistance(distance))?;
            h.axpy(Complex64::new(alpha * amp, 0.0), &a, Complex64::new(1.0, 0.0));
        }
    }
    Ok(out)
}

/// Per-subcarrier channel matrices `H[s]` between a multi-antenna user and
/// the base station, `H[s] = sum_l beta_l g_l a_B(dir_l, f) a_U(phi_l, f)^H
/// exp(-j*2*pi*f*tau_l)`.
pub fn synth_mimo_channel(
    geom: &ArrayGeometry,
    user: &UserArray,
    grid: &OfdmGrid,
    paths: &[Path],
    medium: &Medium,
    pattern: Option<&ElementPattern>,
) -> Result<Vec<DMatrix<Complex64>>, ChannelError> {
    let mut out = vec![DMatrix::zeros(geom.antenna_count(), user.antennas); grid.subcarriers()];
    for path in paths {
        let departure = path.departure.ok_or(ChannelError::MissingDeparture)?;
        let amp = pattern.map_or(1.0, |p| p.amplitude(&path.arrival));
        for (s, h) in out.iter_mut().enumerate() {
            let f = grid.frequency(s);
            let scale = path.beta(f, geom.carrier(), medium)? * amp
                * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f * path.delay);
            let a_bs = geom.response(&path.arrival, f);
            let a_user =
                crate::array::ula_response(user.antennas, user.spacing, geom.carrier(), departure, f);
            // Rank-one update scale * a_bs * a_user^H.
            h.gerc(scale, &a_bs, &a_user, Complex64::new(1.0, 0.0));
        }
    }
    Ok(out)
}

// ── Random path sampling ────────────────────────────────────────────────────

/// Arrival-delay window used by the random samplers, seconds.
pub const DELAY_WINDOW: (f64, f64) = (50e-9, 55e-9);

fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> Direction {
    let azimuth = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
    let polar = rng.gen_range(-std::f64::consts::FRAC_PI_2..std::f64::consts::FRAC_PI_2);
    Direction::new(azimuth, polar).expect("sampled angles are in range")
}

/// `count` statistical paths: uniform arrival angles, delays in
/// [`DELAY_WINDOW`], frequency-flat gains `CN(0, variance)`. Draw order per
/// path is azimuth, polar, delay, gain (and departure azimuth last, when
/// requested), so seeded streams reproduce exactly.
pub fn sample_statistical_paths<R: Rng + ?Sized>(
    count: usize,
    variance: f64,
    with_departure: bool,
    rng: &mut R,
) -> Result<Vec<Path>, ChannelError> {
    if count == 0 {
        return Err(ChannelError::NoPaths);
    }
    if !(variance.is_finite() && variance > 0.0) {
        return Err(ChannelError::InvalidVariance(variance));
    }
    Ok((0..count)
        .map(|_| {
            let arrival = random_direction(rng);
            let delay = rng.gen_range(DELAY_WINDOW.0..DELAY_WINDOW.1);
            let gain = complex_gaussian(rng, variance);
            let departure = with_departure
                .then(|| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI));
            Path {
                gain: PathGain::Fixed { gain },
                delay,
                arrival,
                departure,
            }
        })
        .collect())
}

/// Physical-gain channel: an optional direct path at `delay = distance/c`
/// followed by `nlos_count` single-bounce paths with uniform incidence
/// angles and delays in [`DELAY_WINDOW`].
pub fn sample_physical_paths<R: Rng + ?Sized>(
    nlos_count: usize,
    distance: f64,
    include_los: bool,
    with_departure: bool,
    rng: &mut R,
) -> Result<Vec<Path>, ChannelError> {
    if nlos_count == 0 && !include_los {
        return Err(ChannelError::NoPaths);
    }
    if !(distance.is_finite() && distance > 0.0) {
        return Err(ChannelError::InvalidDistance(distance));
    }
    let mut paths = Vec::with_capacity(nlos_count + usize::from(include_los));
    if include_los {
        let arrival = random_direction(rng);
        let departure = with_departure
            .then(|| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI));
        paths.push(Path {
            gain: PathGain::Los { distance },
            delay: distance / SPEED_OF_LIGHT,
            arrival,
            departure,
        });
    }
    for _ in 0..nlos_count {
        let arrival = random_direction(rng);
        let delay = rng.gen_range(DELAY_WINDOW.0..DELAY_WINDOW.1);
        let incidence =
            rng.gen_range(-std::f64::consts::FRAC_PI_2..std::f64::consts::FRAC_PI_2);
        let departure = with_departure
            .then(|| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI));
        paths.push(Path {
            gain: PathGain::Reflected {
                distance,
                incidence,
            },
            delay,
            arrival,
            departure,
        });
    }
    Ok(paths)
}

/// Statistical paths whose arrival directions sit exactly on a
/// `grid_x` x `grid_y` spatial-frequency dictionary grid, pairwise separated
/// by at least `separation` grid cells (Chebyshev distance) and strictly
/// inside the physical disk. With `user_grid` set, departure azimuths land
/// on the matching user-side grid.
pub fn sample_on_grid_paths<R: Rng + ?Sized>(
    grid_x: usize,
    grid_y: usize,
    count: usize,
    separation: usize,
    variance: f64,
    user_grid: Option<usize>,
    rng: &mut R,
) -> Result<Vec<Path>, ChannelError> {
    if count == 0 {
        return Err(ChannelError::NoPaths);
    }
    if !(variance.is_finite() && variance > 0.0) {
        return Err(ChannelError::InvalidVariance(variance));
    }
    let half_x = (grid_x as i64 - 1) / 2;
    let half_y = (grid_y as i64 - 1) / 2;
    let mut cells: Vec<(i64, i64)> = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while cells.len() < count {
        attempts += 1;
        if attempts > 10_000 {
            return Err(ChannelError::GridTooCrowded {
                count,
                separation,
                grid_x,
                grid_y,
            });
        }
        let qx = rng.gen_range(-half_x..=half_x);
        let qy = rng.gen_range(-half_y..=half_y);
        let wx = qx as f64 / grid_x as f64;
        let wy = qy as f64 / grid_y as f64;
        if wx * wx + wy * wy >= 0.25 {
            continue;
        }
        if cells
            .iter()
            .any(|&(px, py)| (qx - px).abs().max((qy - py).abs()) < separation as i64)
        {
            continue;
        }
        cells.push((qx, qy));
    }
    Ok(cells
        .into_iter()
        .map(|(qx, qy)| {
            let w = SpatialFrequency::new(qx as f64 / grid_x as f64, qy as f64 / grid_y as f64)
                .expect("cell filtered to the open disk");
            let delay = rng.gen_range(DELAY_WINDOW.0..DELAY_WINDOW.1);
            let gain = complex_gaussian(rng, variance);
            let departure = user_grid.map(|gu| {
                let half_u = (gu as i64 - 1) / 2;
                let qu = rng.gen_range(-half_u..=half_u);
                (2.0 * qu as f64 / gu as f64).asin()
            });
            Path {
                gain: PathGain::Fixed { gain },
                delay,
                arrival: w.direction(),
                departure,
            }
        })
        .collect())
}

// ── Tests ───────────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
        assert!(
            (a - b).abs() <= tol,
            "{what}: {a} vs {b} (|diff| = {})",
            (a - b).abs()
        );
    }

    // 1. Four-subcarrier grid over 4 GHz: spacing 1 GHz, offsets ±0.5, ±1.5 GHz.
    #[test]
    fn grid_frequencies() {
        let grid = OfdmGrid::new(4, 4e9).unwrap();
        assert_close(grid.spacing(), 1e9, 1e-6, "spacing");
        let f = grid.frequencies();
        let want = [-1.5e9, -0.5e9, 0.5e9, 1.5e9];
        for (got, want) in f.iter().zip(want.iter()) {
            assert_close(*got, *want, 1e-3, "frequency");
        }
        assert_close(f.iter().sum::<f64>(), 0.0, 1e-6, "symmetry");
        assert_eq!(OfdmGrid::new(1, 1e9).unwrap().frequency(0), 0.0);
    }

    // 2. Coherence sizing: 5 ns spread in 40 GHz gives 400 subcarriers of
    //    100 MHz; the 100x100 aperture delay gives the 18-subcarrier grid.
    #[test]
    fn grid_from_coherence() {
        let grid = OfdmGrid::from_coherence(40e9, 5e-9).unwrap();
        assert_eq!(grid.subcarriers(), 400);
        assert_close(grid.spacing(), 1e8, 1e-3, "coherence spacing");

        let geom = ArrayGeometry::half_wavelength(100, 100, 3e11).unwrap();
        let los = OfdmGrid::from_coherence(40e9, geom.max_aperture_delay()).unwrap();
        assert_eq!(los.subcarriers(), 18);

        assert!(matches!(
            OfdmGrid::from_coherence(1e6, 1e-12),
            Err(ChannelError::BandwidthBelowCoherence { .. })
        ));
        assert!(OfdmGrid::new(0, 1e9).is_err());
        assert!(OfdmGrid::new(4, -1.0).is_err());
    }

    // 3. Direct-path attenuation: frozen Table-II value, monotone in range
    //    and frequency.
    #[test]
    fn los_attenuation_reference() {
        let a = los_attenuation(0.0, 3e11, 15.0, 0.0033).unwrap();
        assert_close(a, 5.175473491513833e-6, 1e-15, "los attenuation");
        assert!((a - 5.175e-6).abs() < 1e-9, "matches rounded fixture");

        let further = los_attenuation(0.0, 3e11, 20.0, 0.0033).unwrap();
        let higher = los_attenuation(20e9, 3e11, 15.0, 0.0033).unwrap();
        assert!(further < a && higher < a);
        assert!(los_attenuation(0.0, 3e11, 0.0, 0.0033).is_err());
    }

    // 4. Reflection coefficient: lossless normal incidence collapses to
    //    (1-n)/(1+n); Table-II fixture frozen from the closed form; passivity.
    #[test]
    fn reflection_fixtures() {
        let smooth = Medium {
            absorption: 0.0,
            refractive_index: Complex64::new(2.24, 0.0),
            roughness: 0.0,
        };
        let g = reflection_coefficient(0.0, 3e11, 0.0, &smooth).unwrap();
        let want = (1.0 - 2.24) / (1.0 + 2.24);
        assert_close(g.re, want, 1e-12, "fresnel re");
        assert_close(g.im, 0.0, 1e-12, "fresnel im");

        let medium = Medium::default();
        let g = reflection_coefficient(0.0, 3e11, 0.0, &medium).unwrap();
        assert_close(g.re, -0.20766944621764979, 1e-12, "gamma re");
        assert_close(g.im, 0.002584094298075018, 1e-12, "gamma im");
        assert_close(g.norm(), 0.20768552293235723, 1e-12, "gamma magnitude");

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let phi = rng.gen_range(-FRAC_PI_2..FRAC_PI_2);
            let f = rng.gen_range(-20e9..20e9);
            let g = reflection_coefficient(f, 3e11, phi, &medium).unwrap();
            assert!(g.norm() <= 1.0 + 1e-12, "|Gamma| = {}", g.norm());
        }

        // Roughness strictly attenuates relative to the smooth surface.
        let rough_only = Medium {
            roughness: 0.0,
            ..medium
        };
        let smooth_mag = reflection_coefficient(0.0, 3e11, 0.3, &rough_only)
            .unwrap()
            .norm();
        let rough_mag = reflection_coefficient(0.0, 3e11, 0.3, &medium).unwrap().norm();
        assert!(rough_mag < smooth_mag);

        assert!(reflection_coefficient(0.0, 3e11, 2.0, &medium).is_err());
    }

    // 5. Single-bounce attenuation fixture at 45 degrees and its bound by the
    //    direct path.
    #[test]
    fn nlos_attenuation_reference() {
        let medium = Medium::default();
        let a = nlos_attenuation(0.0, 3e11, 15.0, FRAC_PI_4, &medium).unwrap();
        assert_close(a, 1.909153160600257e-6, 1e-15, "nlos attenuation");
        let direct = los_attenuation(0.0, 3e11, 15.0, medium.absorption).unwrap();
        assert!(a < direct);
    }

    // 6. Path gains: physical paths carry exp(-j*2*pi*fc*tau), statistical
    //    gains are frequency flat.
    #[test]
    fn path_beta_phases() {
        let medium = Medium::default();
        let arrival = Direction::new(0.3, 0.2).unwrap();
        let delay = 50.4e-9; // fractional carrier cycles
        let path = Path {
            gain: PathGain::Los { distance: 15.0 },
            delay,
            arrival,
            departure: None,
        };
        let beta = path.beta(0.0, 3e11, &medium).unwrap();
        assert_close(
            beta.norm(),
            los_attenuation(0.0, 3e11, 15.0, medium.absorption).unwrap(),
            1e-18,
            "beta magnitude",
        );
        let want = -2.0 * PI * 3e11 * delay;
        let diff = (beta.arg() - want).rem_euclid(2.0 * PI);
        assert!(diff.min(2.0 * PI - diff) < 1e-6, "carrier phase");

        let fixed = Path {
            gain: PathGain::Fixed {
                gain: Complex64::new(0.5, -0.25),
            },
            delay,
            arrival,
            departure: None,
        };
        assert_eq!(
            fixed.beta(0.0, 3e11, &medium).unwrap(),
            fixed.beta(15e9, 3e11, &medium).unwrap()
        );
    }

    // 7. Synthesis against the direct formula on a small array.
    #[test]
    fn synth_matches_direct_formula() {
        let geom = ArrayGeometry::half_wavelength(3, 2, 3e11).unwrap();
        let grid = OfdmGrid::new(3, 10e9).unwrap();
        let medium = Medium::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let paths = sample_statistical_paths(2, 1e-9, false, &mut rng).unwrap();
        let h = synth_channel(&geom, &grid, &paths, &medium, None).unwrap();
        for s in 0..3 {
            let f = grid.frequency(s);
            let mut want = DVector::zeros(6);
            for p in &paths {
                let scale = p.beta(f, geom.carrier(), &medium).unwrap()
                    * Complex64::from_polar(1.0, -2.0 * PI * f * p.delay);
                want += geom.response(&p.arrival, f) * scale;
            }
            assert!((&h[s] - &want).norm() < 1e-20, "subcarrier {s}");
        }
    }

    // 8. The element pattern scales each path by its arrival amplitude.
    #[test]
    fn synth_applies_pattern() {
        let geom = ArrayGeometry::half_wavelength(2, 2, 3e11).unwrap();
        let grid = OfdmGrid::new(1, 1e9).unwrap();
        let medium = Medium::default();
        let pattern = ElementPattern::default();
        let path = Path {
            gain: PathGain::Fixed {
                gain: Complex64::new(1.0, 0.0),
            },
            delay: 0.0,
            arrival: Direction::new(0.7, 0.1).unwrap(),
            departure: None,
        };
        let plain = synth_channel(&geom, &grid, &[path], &medium, None).unwrap();
        let shaped = synth_channel(&geom, &grid, &[path], &medium, Some(&pattern)).unwrap();
        let amp = pattern.amplitude(&path.arrival);
        assert!((&shaped[0] - &plain[0].clone() * Complex64::new(amp, 0.0)).norm() < 1e-9 * amp);
    }

    // 9. A single path yields a rank-one channel matrix.
    #[test]
    fn mimo_single_path_rank_one() {
        let geom = ArrayGeometry::half_wavelength(3, 3, 3e11).unwrap();
        let user = UserArray::half_wavelength(2, 3e11);
        let grid = OfdmGrid::new(2, 8e9).unwrap();
        let medium = Medium::default();
        let path = Path {
            gain: PathGain::Fixed {
                gain: Complex64::new(0.3, 0.4),
            },
            delay: 51e-9,
            arrival: Direction::new(-0.4, 0.5).unwrap(),
            departure: Some(0.6),
        };
        let h = synth_mimo_channel(&geom, &user, &grid, &[path], &medium, None).unwrap();
        assert_eq!(h[0].shape(), (9, 2));
        let sv = h[0].clone().svd(false, false).singular_values;
        assert!(sv[0] > 1.0);
        assert!(sv[1] < 1e-12 * sv[0], "second singular value {}", sv[1]);

        let no_departure = Path {
            departure: None,
            ..path
        };
        assert!(matches!(
            synth_mimo_channel(&geom, &user, &grid, &[no_departure], &medium, None),
            Err(ChannelError::MissingDeparture)
        ));
    }

    // 10. Far-field spherical synthesis converges to the plane-wave model
    //     when the delay is consistent with the range.
    #[test]
    fn spherical_synthesis_far_field() {
        let geom = ArrayGeometry::half_wavelength(4, 4, 3e11).unwrap();
        let grid = OfdmGrid::new(3, 10e9).unwrap();
        let medium = Medium::default();
        let distance = 5e3; // far beyond Fraunhofer (0.0162 m here)
        let path = Path {
            gain: PathGain::Los { distance },
            delay: distance / SPEED_OF_LIGHT,
            arrival: Direction::new(0.5, 0.3).unwrap(),
            departure: None,
        };
        let plane = synth_channel(&geom, &grid, &[path], &medium, None).unwrap();
        let sph = synth_channel_spherical(&geom, &grid, &[path], &medium, None).unwrap();
        for s in 0..3 {
            let rel = (&plane[s] - &sph[s]).norm() / plane[s].norm();
            assert!(rel < 1e-3, "subcarrier {s}: relative deviation {rel}");
        }

        let fixed = Path {
            gain: PathGain::Fixed {
                gain: Complex64::new(1.0, 0.0),
            },
            ..path
        };
        assert!(matches!(
            synth_channel_spherical(&geom, &grid, &[fixed], &medium, None),
            Err(ChannelError::SphericalNeedsLineOfSight)
        ));
    }

    // 11. Samplers: deterministic under a seed, in-range draws, second moment
    //     within 3% over 1e5 draws.
    #[test]
    fn sampler_statistics() {
        let mut a = ChaCha8Rng::seed_from_u64(42);
        let mut b = ChaCha8Rng::seed_from_u64(42);
        assert_eq!(
            sample_statistical_paths(3, 1e-9, true, &mut a).unwrap(),
            sample_statistical_paths(3, 1e-9, true, &mut b).unwrap()
        );

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut power = 0.0;
        let n = 100_000;
        for _ in 0..n / 5 {
            for p in sample_statistical_paths(5, 1e-9, false, &mut rng).unwrap() {
                assert!(p.delay >= DELAY_WINDOW.0 && p.delay < DELAY_WINDOW.1);
                assert!(p.arrival.polar().abs() < FRAC_PI_2);
                let PathGain::Fixed { gain } = p.gain else {
                    panic!("statistical sampler must produce fixed gains")
                };
                power += gain.norm_sqr();
            }
        }
        let mean = power / n as f64;
        assert!(
            (mean - 1e-9).abs() < 0.03e-9,
            "mean path power {mean} vs 1e-9"
        );
    }

    // 12. Physical sampler: direct path delay equals distance/c (50 ns at
    //     15 m) and bounce paths carry incidence angles.
    #[test]
    fn physical_sampler_layout() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let paths = sample_physical_paths(2, 15.0, true, false, &mut rng).unwrap();
        assert_eq!(paths.len(), 3);
        assert!(matches!(paths[0].gain, PathGain::Los { .. }));
        assert_close(paths[0].delay, 50e-9, 1e-18, "los delay");
        for p in &paths[1..] {
            assert!(matches!(p.gain, PathGain::Reflected { .. }));
        }
        assert!(sample_physical_paths(0, 15.0, false, false, &mut rng).is_err());
    }

    // 13. On-grid sampler: distinct separated cells inside the disk, exact
    //     grid angles.
    #[test]
    fn on_grid_sampler_separation() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let paths = sample_on_grid_paths(33, 33, 4, 3, 1e-9, None, &mut rng).unwrap();
            assert_eq!(paths.len(), 4);
            let cells: Vec<(i64, i64)> = paths
                .iter()
                .map(|p| {
                    let w = SpatialFrequency::from_direction(&p.arrival);
                    let qx = (w.wx() * 33.0).round() as i64;
                    let qy = (w.wy() * 33.0).round() as i64;
                    // Angles must round-trip to exact grid cells.
                    assert!((w.wx() * 33.0 - qx as f64).abs() < 1e-9);
                    assert!((w.wy() * 33.0 - qy as f64).abs() < 1e-9);
                    (qx, qy)
                })
                .collect();
            for i in 0..cells.len() {
                for j in 0..i {
                    let d = (cells[i].0 - cells[j].0)
                        .abs()
                        .max((cells[i].1 - cells[j].1).abs());
                    assert!(d >= 3, "cells {i} and {j} too close: {d}");
                }
            }
        }

        // Impossible packing reports rather than spinning forever.
        assert!(matches!(
            sample_on_grid_paths(5, 5, 10, 4, 1e-9, None, &mut rng),
            Err(ChannelError::GridTooCrowded { .. })
        ));
    }
}
