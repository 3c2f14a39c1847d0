//! Steering dictionaries on a uniform spatial-frequency grid.
//!
//! Grid point `(qx, qy)` (integer offsets from the grid center) encodes the
//! spatial-frequency pair `(qx/Gx, qy/Gy)`. An atom at subcarrier offset `f`
//! is the Kronecker product of the two axis factors with entries
//!
//! ```text
//! exp(-j * 2*pi * (fc + f) * (d/c) * 2*w * n)
//! ```
//!
//! so the very same grid steers correctly at every subcarrier; freezing the
//! factors at `f = 0` instead gives the squint-blind dictionary that
//! narrowband recovery schemes implicitly use. Odd grid sizes keep the grid
//! symmetric around broadside. At the critical sizes `Gx = N`, `Gy = M` and
//! `f = 0` the atoms are mutually orthogonal.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::training::TrainingEnsemble;
use super::EstimationError;
use crate::array::{ArrayError, ArrayGeometry, Direction, SpatialFrequency};
use crate::channel::OfdmGrid;

#[derive(Clone, Debug)]
pub struct WidebandDictionary {
    rows: usize,
    cols: usize,
    spacing: f64,
    carrier: f64,
    frequencies: Vec<f64>,
    grid_x: usize,
    grid_y: usize,
    flat: bool,
}

impl WidebandDictionary {
    pub fn new(
        geom: &ArrayGeometry,
        grid: &OfdmGrid,
        grid_x: usize,
        grid_y: usize,
    ) -> Result<Self, EstimationError> {
        Self::build(geom, grid, grid_x, grid_y, false)
    }

    /// Squint-blind variant: every subcarrier reuses the carrier-frequency
    /// atoms.
    pub fn narrowband(
        geom: &ArrayGeometry,
        grid: &OfdmGrid,
        grid_x: usize,
        grid_y: usize,
    ) -> Result<Self, EstimationError> {
        Self::build(geom, grid, grid_x, grid_y, true)
    }

    fn build(
        geom: &ArrayGeometry,
        grid: &OfdmGrid,
        grid_x: usize,
        grid_y: usize,
        flat: bool,
    ) -> Result<Self, EstimationError> {
        for g in [grid_x, grid_y] {
            if g == 0 {
                return Err(EstimationError::EmptyGrid);
            }
            if g % 2 == 0 {
                return Err(EstimationError::EvenGrid(g));
            }
        }
        Ok(Self {
            rows: geom.rows(),
            cols: geom.cols(),
            spacing: geom.spacing(),
            carrier: geom.carrier(),
            frequencies: grid.frequencies(),
            grid_x,
            grid_y,
            flat,
        })
    }

    pub fn antennas(&self) -> usize {
        self.rows * self.cols
    }

    pub fn columns(&self) -> usize {
        self.grid_x * self.grid_y
    }

    pub fn subcarriers(&self) -> usize {
        self.frequencies.len()
    }

    pub fn grid_x(&self) -> usize {
        self.grid_x
    }

    pub fn grid_y(&self) -> usize {
        self.grid_y
    }

    fn effective_frequency(&self, s: usize) -> Result<f64, EstimationError> {
        let f = *self
            .frequencies
            .get(s)
            .ok_or(EstimationError::SubcarrierOutOfRange {
                s,
                count: self.frequencies.len(),
            })?;
        Ok(if self.flat { 0.0 } else { f })
    }

    /// Spatial frequencies of column `g = qx * Gy + qy`.
    pub fn spatial_frequency(&self, col: usize) -> (f64, f64) {
        debug_assert!(col < self.columns());
        let qx = (col / self.grid_y) as i64 - (self.grid_x as i64 - 1) / 2;
        let qy = (col % self.grid_y) as i64 - (self.grid_y as i64 - 1) / 2;
        (
            qx as f64 / self.grid_x as f64,
            qy as f64 / self.grid_y as f64,
        )
    }

    /// Physical look direction of a column; corner columns whose frequency
    /// pair leaves the unit disk have none.
    pub fn direction(&self, col: usize) -> Result<Direction, ArrayError> {
        let (wx, wy) = self.spatial_frequency(col);
        Ok(SpatialFrequency::new(wx, wy)?.direction())
    }

    /// Grid column closest to a spatial-frequency pair.
    pub fn nearest_column(&self, wx: f64, wy: f64) -> usize {
        let clamp = |w: f64, g: usize| -> i64 {
            let half = (g as i64 - 1) / 2;
            ((w * g as f64).round() as i64).clamp(-half, half)
        };
        let qx = clamp(wx, self.grid_x) + (self.grid_x as i64 - 1) / 2;
        let qy = clamp(wy, self.grid_y) + (self.grid_y as i64 - 1) / 2;
        qx as usize * self.grid_y + qy as usize
    }

    /// Axis factor along the row index: `rows x grid_x`.
    pub fn x_factor(&self, s: usize) -> Result<DMatrix<Complex64>, EstimationError> {
        let f = self.effective_frequency(s)?;
        Ok(axis_factor(self.rows, self.grid_x, self.spacing, self.carrier, f))
    }

    /// Axis factor along the column index: `cols x grid_y`.
    pub fn y_factor(&self, s: usize) -> Result<DMatrix<Complex64>, EstimationError> {
        let f = self.effective_frequency(s)?;
        Ok(axis_factor(self.cols, self.grid_y, self.spacing, self.carrier, f))
    }

    /// Single atom, laid out like the array response (row index slow).
    pub fn column(&self, s: usize, col: usize) -> Result<DVector<Complex64>, EstimationError> {
        let ax = self.x_factor(s)?;
        let ay = self.y_factor(s)?;
        Ok(self.assemble_column(&ax, &ay, col))
    }

    fn assemble_column(
        &self,
        ax: &DMatrix<Complex64>,
        ay: &DMatrix<Complex64>,
        col: usize,
    ) -> DVector<Complex64> {
        let (qx, qy) = (col / self.grid_y, col % self.grid_y);
        let mut out = DVector::zeros(self.antennas());
        for n in 0..self.rows {
            let xn = ax[(n, qx)];
            for m in 0..self.cols {
                out[n * self.cols + m] = xn * ay[(m, qy)];
            }
        }
        out
    }

    /// Atoms for a support set, one column per support entry.
    pub fn atom_matrix(
        &self,
        s: usize,
        support: &[usize],
    ) -> Result<DMatrix<Complex64>, EstimationError> {
        if support.is_empty() {
            return Err(EstimationError::EmptySupport);
        }
        let ax = self.x_factor(s)?;
        let ay = self.y_factor(s)?;
        let mut out = DMatrix::zeros(self.antennas(), support.len());
        for (k, &col) in support.iter().enumerate() {
            out.column_mut(k)
                .copy_from(&self.assemble_column(&ax, &ay, col));
        }
        Ok(out)
    }
}

fn axis_factor(
    len: usize,
    grid: usize,
    spacing: f64,
    carrier: f64,
    f: f64,
) -> DMatrix<Complex64> {
    let half = (grid as i64 - 1) / 2;
    let base = -2.0 * std::f64::consts::PI * (carrier + f) * spacing / crate::SPEED_OF_LIGHT;
    DMatrix::from_fn(len, grid, |n, q| {
        let w = (q as i64 - half) as f64 / grid as f64;
        Complex64::from_polar(1.0, base * 2.0 * w * n as f64)
    })
}

/// Sensing matrix `sqrt(P_p) W^H A_s` for one subcarrier, assembled one
/// observation row at a time through the factored form
/// `row_b = vec(Ay_f^T C_b Ax_f)` with `C_b` the conjugated combiner column
/// reshaped to `cols x rows`; avoids the dense `W^H A` product.
pub fn sensing_matrix(
    ensemble: &TrainingEnsemble,
    dict: &WidebandDictionary,
    s: usize,
) -> Result<DMatrix<Complex64>, EstimationError> {
    if ensemble.antennas() != dict.antennas() {
        return Err(EstimationError::DimensionMismatch {
            expected: dict.antennas(),
            got: ensemble.antennas(),
        });
    }
    let ax = dict.x_factor(s)?;
    let ay = dict.y_factor(s)?;
    let scale = Complex64::new(ensemble.pilot_power().sqrt(), 0.0);
    let (rows, cols) = (dict.rows, dict.cols);
    let mut phi = DMatrix::zeros(ensemble.measurements(), dict.columns());
    let mut conj_col = DMatrix::<Complex64>::zeros(cols, rows);
    for b in 0..ensemble.measurements() {
        let w = ensemble.combiner().column(b);
        // Column-major fill: entry (m, n) takes the conjugate of w[n*cols+m].
        for n in 0..rows {
            for m in 0..cols {
                conj_col[(m, n)] = w[n * cols + m].conj();
            }
        }
        let inner = &conj_col.transpose() * &ay; // rows x grid_y
        let flat = (inner.transpose() * &ax) * scale; // grid_y x grid_x
        phi.row_mut(b)
            .copy_from_slice(flat.as_slice()); // column-major == qx slow, qy fast
    }
    Ok(phi)
}

// ── Tests ───────────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(rows: usize, cols: usize, gx: usize, gy: usize) -> (ArrayGeometry, OfdmGrid, WidebandDictionary) {
        let geom = ArrayGeometry::half_wavelength(rows, cols, 3e11).unwrap();
        let grid = OfdmGrid::new(4, 20e9).unwrap();
        let dict = WidebandDictionary::new(&geom, &grid, gx, gy).unwrap();
        (geom, grid, dict)
    }

    // 1. Critical grid at the carrier: atoms form an orthogonal basis with
    //    squared norms equal to the antenna count.
    #[test]
    fn critical_grid_is_orthogonal() {
        let geom = ArrayGeometry::half_wavelength(5, 3, 3e11).unwrap();
        let grid = OfdmGrid::new(1, 1e9).unwrap(); // single subcarrier at f = 0
        let dict = WidebandDictionary::new(&geom, &grid, 5, 3).unwrap();
        let a = dict.atom_matrix(0, &(0..15).collect::<Vec<_>>()).unwrap();
        let gram = a.adjoint() * a;
        let target = DMatrix::<Complex64>::identity(15, 15) * Complex64::new(15.0, 0.0);
        assert!((gram - target).norm() < 1e-9);
    }

    // 2. An on-grid column inside the disk reproduces the array response of
    //    its look direction at the same subcarrier.
    #[test]
    fn columns_match_steering_vectors() {
        let (geom, _, dict) = setup(4, 4, 7, 7);
        for s in [0usize, 3] {
            for col in 0..dict.columns() {
                let Ok(dir) = dict.direction(col) else { continue };
                let atom = dict.column(s, col).unwrap();
                let f = dict.frequencies[s];
                let response = geom.response(&dir, f);
                assert!(
                    (&atom - &response).norm() < 1e-9,
                    "column {col} deviates at subcarrier {s}"
                );
            }
        }
    }

    // 3. Spatial-frequency bookkeeping: round trip through nearest_column,
    //    grid symmetry, and the flat variant's frequency blindness.
    #[test]
    fn grid_bookkeeping() {
        let (geom, grid, dict) = setup(4, 4, 9, 7);
        for col in 0..dict.columns() {
            let (wx, wy) = dict.spatial_frequency(col);
            assert!(wx.abs() < 0.5 && wy.abs() < 0.5);
            assert_eq!(dict.nearest_column(wx, wy), col);
        }
        let center = dict.nearest_column(0.0, 0.0);
        let (wx, wy) = dict.spatial_frequency(center);
        assert_eq!((wx, wy), (0.0, 0.0));

        let flat = WidebandDictionary::narrowband(&geom, &grid, 9, 7).unwrap();
        let a0 = flat.column(0, 13).unwrap();
        let a3 = flat.column(3, 13).unwrap();
        assert!((a0 - a3).norm() < 1e-12);

        assert!(matches!(
            WidebandDictionary::new(&geom, &grid, 8, 7),
            Err(EstimationError::EvenGrid(8))
        ));
        assert!(dict.column(9, 0).is_err());
    }

    // 4. Factored sensing assembly equals the dense product on random
    //    ensembles.
    #[test]
    fn sensing_matrix_matches_dense_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let (_, _, dict) = setup(4, 3, 5, 5);
        let ens = TrainingEnsemble::random(12, 2, 3, 2.5e-5, &mut rng).unwrap();
        for s in 0..2 {
            let fast = sensing_matrix(&ens, &dict, s).unwrap();
            let atoms = dict
                .atom_matrix(s, &(0..dict.columns()).collect::<Vec<_>>())
                .unwrap();
            let dense = ens.combiner().adjoint() * atoms * Complex64::new(2.5e-5_f64.sqrt(), 0.0);
            assert!(
                (&fast - &dense).norm() < 1e-9 * dense.norm(),
                "subcarrier {s}"
            );
        }

        let mismatched = TrainingEnsemble::random(8, 2, 2, 1.0, &mut rng).unwrap();
        assert!(sensing_matrix(&mismatched, &dict, 0).is_err());
    }
}
