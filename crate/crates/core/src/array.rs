//! Array geometry and frequency-dependent steering.
//!
//! A uniform planar array (UPA) lies in the xy-plane with `rows` elements
//! along x (index `n`) and `cols` elements along y (index `m`), spaced `d`
//! apart. A plane wave from azimuth `phi` and polar angle `theta` (boresight
//! is `theta = 0`) reaches element `(n, m)` with the extra delay
//!
//! ```text
//! tau(n, m) = d * (n*sin(theta)*cos(phi) + m*sin(theta)*sin(phi)) / c
//! ```
//!
//! and the steering vector at subcarrier offset `f` from the carrier `fc` has
//! entries `exp(-j*2*pi*(fc + f)*tau(n, m))`. Because the phase scales with
//! `fc + f` rather than `fc` alone, wide bandwidths squint the beam; that
//! effect is what the rest of the crate measures and corrects.
//!
//! Vectors are flattened with the y index fastest, `index = n*cols + m`,
//! which makes the UPA response the Kronecker product of its two axis
//! factors, `a = a_x ⊗ a_y`.

use nalgebra::DVector;
use num_complex::Complex64;
use thiserror::Error;

use crate::SPEED_OF_LIGHT;

#[derive(Debug, Error, PartialEq)]
pub enum ArrayError {
    #[error("array dimensions must be positive, got {rows}x{cols}")]
    EmptyArray { rows: usize, cols: usize },
    #[error("antenna spacing must be positive and finite, got {0}")]
    InvalidSpacing(f64),
    #[error("carrier frequency must be positive and finite, got {0}")]
    InvalidCarrier(f64),
    #[error("azimuth {0} outside [-pi, pi]")]
    AzimuthOutOfRange(f64),
    #[error("polar angle {0} outside [-pi/2, pi/2]")]
    PolarOutOfRange(f64),
    #[error("antenna index ({n}, {m}) outside a {rows}x{cols} array")]
    IndexOutOfRange {
        n: usize,
        m: usize,
        rows: usize,
        cols: usize,
    },
    #[error("spatial frequency ({wx}, {wy}) lies outside the radius-1/2 disk")]
    OutsideDisk { wx: f64, wy: f64 },
    #[error("partition {x_subarrays}x{y_subarrays} does not tile a {rows}x{cols} array")]
    PartitionMismatch {
        x_subarrays: usize,
        y_subarrays: usize,
        rows: usize,
        cols: usize,
    },
    #[error("subarray counts must be positive, got {0}x{1}")]
    EmptyPartition(usize, usize),
    #[error("scatterer distance must be positive and finite, got {0}")]
    InvalidDistance(f64),
}

// ── Directions and spatial frequencies ──────────────────────────────────────

/// Arrival (or departure) direction in radians.
///
/// `azimuth` lives in `[-pi, pi]` and `polar` in `[-pi/2, pi/2]` with the
/// array boresight at `polar = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Direction {
    azimuth: f64,
    polar: f64,
}

impl Direction {
    pub fn new(azimuth: f64, polar: f64) -> Result<Self, ArrayError> {
        if !azimuth.is_finite() || azimuth.abs() > std::f64::consts::PI {
            return Err(ArrayError::AzimuthOutOfRange(azimuth));
        }
        if !polar.is_finite() || polar.abs() > std::f64::consts::FRAC_PI_2 {
            return Err(ArrayError::PolarOutOfRange(polar));
        }
        Ok(Self { azimuth, polar })
    }

    pub fn azimuth(&self) -> f64 {
        self.azimuth
    }

    pub fn polar(&self) -> f64 {
        self.polar
    }

    /// Direction cosines along the two array axes,
    /// `(sin(theta)cos(phi), sin(theta)sin(phi))`.
    pub fn axis_sines(&self) -> (f64, f64) {
        let st = self.polar.sin();
        (st * self.azimuth.cos(), st * self.azimuth.sin())
    }
}

/// Normalized spatial frequency pair, `w = sin(theta)/2 * (cos(phi), sin(phi))`.
///
/// Physical directions always land inside the closed disk
/// `wx^2 + wy^2 <= 1/4`; construction rejects anything outside it, which is
/// how off-disk dictionary grid points are filtered at angle read-out.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpatialFrequency {
    wx: f64,
    wy: f64,
}

impl SpatialFrequency {
    pub fn new(wx: f64, wy: f64) -> Result<Self, ArrayError> {
        // Keep a one-ulp style slack: directions computed from angles may
        // overshoot the boundary by rounding alone.
        if !wx.is_finite() || !wy.is_finite() || wx * wx + wy * wy > 0.25 + 1e-12 {
            return Err(ArrayError::OutsideDisk { wx, wy });
        }
        Ok(Self { wx, wy })
    }

    pub fn from_direction(dir: &Direction) -> Self {
        let (ux, uy) = dir.axis_sines();
        Self {
            wx: 0.5 * ux,
            wy: 0.5 * uy,
        }
    }

    pub fn wx(&self) -> f64 {
        self.wx
    }

    pub fn wy(&self) -> f64 {
        self.wy
    }

    /// Inverse mapping. The polar angle comes back in `[0, pi/2]`; a source
    /// below the horizon is represented by the mirrored azimuth, which has an
    /// identical steering vector.
    pub fn direction(&self) -> Direction {
        let radius = (self.wx * self.wx + self.wy * self.wy).sqrt();
        let polar = (2.0 * radius).min(1.0).asin();
        let azimuth = if radius == 0.0 {
            0.0
        } else {
            self.wy.atan2(self.wx)
        };
        Direction { azimuth, polar }
    }
}

// ── Geometry ────────────────────────────────────────────────────────────────

/// Uniform planar array geometry; a ULA is the `cols = 1` special case.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArrayGeometry {
    rows: usize,
    cols: usize,
    spacing: f64,
    carrier: f64,
}

impl ArrayGeometry {
    pub fn new(rows: usize, cols: usize, spacing: f64, carrier: f64) -> Result<Self, ArrayError> {
        if rows == 0 || cols == 0 {
            return Err(ArrayError::EmptyArray { rows, cols });
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(ArrayError::InvalidSpacing(spacing));
        }
        if !(carrier.is_finite() && carrier > 0.0) {
            return Err(ArrayError::InvalidCarrier(carrier));
        }
        Ok(Self {
            rows,
            cols,
            spacing,
            carrier,
        })
    }

    /// Standard half-wavelength layout, `d = c / (2 fc)`.
    pub fn half_wavelength(rows: usize, cols: usize, carrier: f64) -> Result<Self, ArrayError> {
        if !(carrier.is_finite() && carrier > 0.0) {
            return Err(ArrayError::InvalidCarrier(carrier));
        }
        Self::new(rows, cols, SPEED_OF_LIGHT / (2.0 * carrier), carrier)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn carrier(&self) -> f64 {
        self.carrier
    }

    pub fn antenna_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier
    }

    /// Flattened index of element `(n, m)`, y axis fastest.
    pub fn flat_index(&self, n: usize, m: usize) -> usize {
        n * self.cols + m
    }

    /// Propagation delay of element `(n, m)` relative to the array origin.
    pub fn delay(&self, dir: &Direction, n: usize, m: usize) -> Result<f64, ArrayError> {
        if n >= self.rows || m >= self.cols {
            return Err(ArrayError::IndexOutOfRange {
                n,
                m,
                rows: self.rows,
                cols: self.cols,
            });
        }
        let (ux, uy) = dir.axis_sines();
        Ok(self.spacing * (n as f64 * ux + m as f64 * uy) / SPEED_OF_LIGHT)
    }

    /// Per-axis delay increments `(dx, dy)` in seconds; `delay(n, m)` equals
    /// `n*dx + m*dy`.
    pub fn axis_delays(&self, dir: &Direction) -> (f64, f64) {
        let (ux, uy) = dir.axis_sines();
        (
            self.spacing * ux / SPEED_OF_LIGHT,
            self.spacing * uy / SPEED_OF_LIGHT,
        )
    }

    /// Plane-wave steering vector at subcarrier offset `f` from the carrier.
    ///
    /// Entry `n*cols + m` equals `exp(-j*2*pi*(fc + f)*tau(n, m))`; every
    /// entry has unit modulus.
    pub fn response(&self, dir: &Direction, f: f64) -> DVector<Complex64> {
        let (dx, dy) = self.axis_delays(dir);
        let omega = 2.0 * std::f64::consts::PI * (self.carrier + f);
        let ax: Vec<Complex64> = (0..self.rows)
            .map(|n| Complex64::from_polar(1.0, -omega * dx * n as f64))
            .collect();
        let ay: Vec<Complex64> = (0..self.cols)
            .map(|m| Complex64::from_polar(1.0, -omega * dy * m as f64))
            .collect();
        let mut out = DVector::zeros(self.antenna_count());
        for n in 0..self.rows {
            for m in 0..self.cols {
                out[n * self.cols + m] = ax[n] * ay[m];
            }
        }
        out
    }

    /// Spherical-wavefront steering vector for a scatterer at range
    /// `distance` along `dir`.
    ///
    /// Entry `(n, m)` is `exp(-j*2*pi*(fc + f)*D(n, m)/c)` with `D(n, m)` the
    /// exact scatterer-to-element distance. The source is placed so that the
    /// far-field limit reproduces `response` times the common factor
    /// `exp(-j*2*pi*(fc + f)*distance/c)`, keeping the plane and spherical
    /// models steerable with the same beams.
    pub fn spherical_response(
        &self,
        dir: &Direction,
        distance: f64,
        f: f64,
    ) -> Result<DVector<Complex64>, ArrayError> {
        if !(distance.is_finite() && distance > 0.0) {
            return Err(ArrayError::InvalidDistance(distance));
        }
        let (ux, uy) = dir.axis_sines();
        let x = distance * ux;
        let y = distance * uy;
        let z = distance * dir.polar.cos();
        let omega = 2.0 * std::f64::consts::PI * (self.carrier + f) / SPEED_OF_LIGHT;
        let mut out = DVector::zeros(self.antenna_count());
        for n in 0..self.rows {
            let px = x + n as f64 * self.spacing;
            for m in 0..self.cols {
                let py = y + m as f64 * self.spacing;
                let range = (px * px + py * py + z * z).sqrt();
                out[n * self.cols + m] = Complex64::from_polar(1.0, -omega * range);
            }
        }
        Ok(out)
    }

    /// Fraunhofer distance `2*D_max^2 / lambda` with `D_max` the aperture
    /// diagonal; beyond it the plane-wave model is conventionally valid.
    pub fn fraunhofer_distance(&self) -> f64 {
        let dx = (self.rows - 1) as f64 * self.spacing;
        let dy = (self.cols - 1) as f64 * self.spacing;
        2.0 * (dx * dx + dy * dy) / self.wavelength()
    }

    /// Worst-case propagation delay spread across the aperture (diagonal
    /// traversal), the quantity that bounds per-subcarrier flatness.
    pub fn max_aperture_delay(&self) -> f64 {
        let dx = (self.rows - 1) as f64 * self.spacing;
        let dy = (self.cols - 1) as f64 * self.spacing;
        (dx * dx + dy * dy).sqrt() / SPEED_OF_LIGHT
    }
}

/// Steering vector of a `count`-element ULA toward azimuth `azimuth`,
/// entry `k` being `exp(-j*2*pi*(fc + f)*k*d*sin(azimuth)/c)`.
pub fn ula_response(
    count: usize,
    spacing: f64,
    carrier: f64,
    azimuth: f64,
    f: f64,
) -> DVector<Complex64> {
    let step = -2.0 * std::f64::consts::PI * (carrier + f) * spacing * azimuth.sin()
        / SPEED_OF_LIGHT;
    DVector::from_iterator(
        count,
        (0..count).map(|k| Complex64::from_polar(1.0, step * k as f64)),
    )
}

// ── Dirichlet envelope ──────────────────────────────────────────────────────

/// Normalized Dirichlet kernel `sin(n*x/2) / (n*sin(x/2))`.
///
/// This is the gain envelope of an `n`-element uniform sum of phasors spaced
/// `x` apart. At the removable singularities `x = 2*pi*k` the limit is
/// `(-1)^(k*(n-1))`; magnitude never exceeds 1.
pub fn dirichlet(n: usize, x: f64) -> f64 {
    debug_assert!(n > 0);
    let half = 0.5 * x;
    let denom = half.sin();
    if denom.abs() < 1e-9 {
        // Within 1e-9 of a grating lobe the quadratic correction is below
        // f64 noise for any practical n, so return the signed limit.
        let k = (x / (2.0 * std::f64::consts::PI)).round() as i64;
        let sign = if (k * (n as i64 - 1)) % 2 == 0 { 1.0 } else { -1.0 };
        return sign;
    }
    (n as f64 * half).sin() / (n as f64 * denom)
}

// ── Virtual subarray partition ──────────────────────────────────────────────

/// Largest subarray extent `k` satisfying `(k - 1) < sqrt(2)*fc/bandwidth`,
/// clamped to `limit`. Subarrays no wider than this stay approximately
/// frequency flat, so one true-time-delay line per subarray suffices.
pub fn max_subarray_extent(carrier: f64, bandwidth: f64, limit: usize) -> usize {
    if !(bandwidth > 0.0) {
        return limit;
    }
    let threshold = std::f64::consts::SQRT_2 * carrier / bandwidth;
    // Largest integer strictly below threshold + 1.
    let k = (threshold + 1.0).ceil() as usize - 1;
    k.clamp(1, limit.max(1))
}

/// Partition of a UPA into `x_subarrays * y_subarrays` equal tiles, each
/// served by a single true-time-delay element (minus the reference tile).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VirtualPartition {
    x_subarrays: usize,
    y_subarrays: usize,
}

impl VirtualPartition {
    pub fn new(x_subarrays: usize, y_subarrays: usize) -> Result<Self, ArrayError> {
        if x_subarrays == 0 || y_subarrays == 0 {
            return Err(ArrayError::EmptyPartition(x_subarrays, y_subarrays));
        }
        Ok(Self {
            x_subarrays,
            y_subarrays,
        })
    }

    /// Coarsest partition whose tiles satisfy the flatness rule for the given
    /// bandwidth, using only divisors of the array dimensions.
    pub fn for_geometry(geom: &ArrayGeometry, bandwidth: f64) -> Self {
        let pick = |len: usize| -> usize {
            let max_extent = max_subarray_extent(geom.carrier(), bandwidth, len);
            let extent = (1..=max_extent).rev().find(|k| len % k == 0).unwrap_or(1);
            len / extent
        };
        Self {
            x_subarrays: pick(geom.rows()),
            y_subarrays: pick(geom.cols()),
        }
    }

    pub fn x_subarrays(&self) -> usize {
        self.x_subarrays
    }

    pub fn y_subarrays(&self) -> usize {
        self.y_subarrays
    }

    pub fn validate(&self, geom: &ArrayGeometry) -> Result<(), ArrayError> {
        if geom.rows() % self.x_subarrays != 0 || geom.cols() % self.y_subarrays != 0 {
            return Err(ArrayError::PartitionMismatch {
                x_subarrays: self.x_subarrays,
                y_subarrays: self.y_subarrays,
                rows: geom.rows(),
                cols: geom.cols(),
            });
        }
        Ok(())
    }

    /// Tile extent along x, `rows / x_subarrays`.
    pub fn subarray_rows(&self, geom: &ArrayGeometry) -> usize {
        geom.rows() / self.x_subarrays
    }

    /// Tile extent along y, `cols / y_subarrays`.
    pub fn subarray_cols(&self, geom: &ArrayGeometry) -> usize {
        geom.cols() / self.y_subarrays
    }

    /// Number of delay lines: one per tile, with the reference tile needing
    /// none.
    pub fn ttd_count(&self) -> usize {
        self.x_subarrays * self.y_subarrays - 1
    }
}

// ── Element power pattern ───────────────────────────────────────────────────

/// Sectorized element power pattern with parabolic azimuth/elevation rolloff
/// and bounded front-to-back attenuation, evaluated in dBi.
///
/// The polar angle maps onto the pattern's elevation coordinate as
/// `theta_pat = polar_deg + 90`, so boresight hits the pattern maximum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElementPattern {
    /// Peak gain in dBi.
    pub max_gain_db: f64,
    /// Azimuth 3 dB beamwidth in degrees.
    pub az_3db_deg: f64,
    /// Elevation 3 dB beamwidth in degrees.
    pub el_3db_deg: f64,
    /// Front-to-back attenuation bound in dB.
    pub front_back_db: f64,
    /// Elevation side-lobe attenuation bound in dB.
    pub side_lobe_db: f64,
}

impl Default for ElementPattern {
    fn default() -> Self {
        Self {
            max_gain_db: 50.0,
            az_3db_deg: 65.0,
            el_3db_deg: 65.0,
            front_back_db: 30.0,
            side_lobe_db: 30.0,
        }
    }
}

impl ElementPattern {
    pub fn gain_db(&self, dir: &Direction) -> f64 {
        let az_deg = dir.azimuth().to_degrees();
        let el_deg = dir.polar().to_degrees(); // theta_pat - 90
        let az_att = (12.0 * (az_deg / self.az_3db_deg).powi(2)).min(self.front_back_db);
        let el_att = (12.0 * (el_deg / self.el_3db_deg).powi(2)).min(self.side_lobe_db);
        self.max_gain_db - (az_att + el_att).min(self.front_back_db)
    }

    /// Amplitude factor applied to a steering vector, `sqrt(10^(gain/10))`.
    pub fn amplitude(&self, dir: &Direction) -> f64 {
        10f64.powf(self.gain_db(dir) / 20.0)
    }
}

// ── Tests ───────────────────────────────────────────────────────────────────
