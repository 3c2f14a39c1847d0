//! Greedy sparse recovery over one or many subcarriers.
//!
//! All variants share one loop: score every unused dictionary column by the
//! sum over subcarriers of `|phi_g^H r_s|`, admit the best one, refit the
//! admitted set per subcarrier by least squares, and stop once the average
//! residual energy `(1/S) sum_s ||r_s||^2` falls to the tolerance or the
//! atom budget runs out. Joint scoring across subcarriers is what makes the
//! group variant robust: a frequency-consistent dictionary concentrates one
//! physical path on one column at every subcarrier, so the per-subcarrier
//! evidence adds up coherently.
//!
//! Subset detection runs the loop on a few probe subcarriers only and then
//! refits the final support on all of them; the support search dominates the
//! cost, so this trades a controlled accuracy loss for a large speedup.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::dictionary::WidebandDictionary;
use super::EstimationError;
use crate::numeric::{lstsq, solve_hermitian_vec};

#[derive(Clone, Copy, Debug)]
pub struct PursuitOptions {
    /// Stop once the average residual energy is at or below this value.
    pub tolerance: f64,
    /// Hard cap on admitted columns.
    pub max_atoms: usize,
}

#[derive(Clone, Debug)]
pub struct GroupPursuitResult {
    /// Admitted columns in selection order.
    pub support: Vec<usize>,
    /// Per-subcarrier coefficients, aligned with `support`.
    pub gains: Vec<DVector<Complex64>>,
    /// Average residual energy before any selection and after each one.
    pub residual_trace: Vec<f64>,
    /// Whether the tolerance was reached before the atom budget ran out.
    pub reached_tolerance: bool,
}

/// Single-subcarrier orthogonal matching pursuit.
pub fn omp(
    observation: &DVector<Complex64>,
    sensing: &DMatrix<Complex64>,
    opts: &PursuitOptions,
) -> Result<GroupPursuitResult, EstimationError> {
    gsomp(
        std::slice::from_ref(observation),
        std::slice::from_ref(sensing),
        opts,
    )
}

/// Group pursuit with joint scoring over all given subcarriers.
pub fn gsomp(
    observations: &[DVector<Complex64>],
    sensing: &[DMatrix<Complex64>],
    opts: &PursuitOptions,
) -> Result<GroupPursuitResult, EstimationError> {
    let (support, residual_trace, reached_tolerance) =
        detect_support(observations, sensing, opts)?;
    let gains = refit(observations, sensing, &support)?;
    Ok(GroupPursuitResult {
        support,
        gains,
        residual_trace,
        reached_tolerance,
    })
}

/// Group pursuit that searches the support on the subcarriers listed in
/// `probes` and refits the coefficients on every subcarrier.
pub fn gsomp_probed(
    observations: &[DVector<Complex64>],
    sensing: &[DMatrix<Complex64>],
    probes: &[usize],
    opts: &PursuitOptions,
) -> Result<GroupPursuitResult, EstimationError> {
    validate_inputs(observations, sensing, opts)?;
    let mut probe_obs = Vec::with_capacity(probes.len());
    let mut probe_phi = Vec::with_capacity(probes.len());
    for &s in probes {
        if s >= observations.len() {
            return Err(EstimationError::SubcarrierOutOfRange {
                s,
                count: observations.len(),
            });
        }
        probe_obs.push(observations[s].clone());
        probe_phi.push(sensing[s].clone());
    }
    let (support, residual_trace, reached_tolerance) =
        detect_support(&probe_obs, &probe_phi, opts)?;
    let gains = refit(observations, sensing, &support)?;
    Ok(GroupPursuitResult {
        support,
        gains,
        residual_trace,
        reached_tolerance,
    })
}

fn validate_inputs(
    observations: &[DVector<Complex64>],
    sensing: &[DMatrix<Complex64>],
    opts: &PursuitOptions,
) -> Result<(), EstimationError> {
    if observations.is_empty() || observations.len() != sensing.len() {
        return Err(EstimationError::NoSubcarriers);
    }
    if !(opts.tolerance.is_finite() && opts.tolerance >= 0.0) {
        return Err(EstimationError::InvalidTolerance(opts.tolerance));
    }
    let columns = sensing[0].ncols();
    for (y, phi) in observations.iter().zip(sensing) {
        if phi.nrows() != y.len() {
            return Err(EstimationError::DimensionMismatch {
                expected: phi.nrows(),
                got: y.len(),
            });
        }
        if phi.ncols() != columns {
            return Err(EstimationError::DimensionMismatch {
                expected: columns,
                got: phi.ncols(),
            });
        }
    }
    Ok(())
}

fn detect_support(
    observations: &[DVector<Complex64>],
    sensing: &[DMatrix<Complex64>],
    opts: &PursuitOptions,
) -> Result<(Vec<usize>, Vec<f64>, bool), EstimationError> {
    validate_inputs(observations, sensing, opts)?;
    let count = observations.len() as f64;
    let columns = sensing[0].ncols();
    // Column norms vary under partial combining; scoring the raw correlation
    // would bias selection toward long columns, so scores are matched-filter
    // normalized.
    let inv_norms: Vec<Vec<f64>> = sensing
        .iter()
        .map(|phi| {
            (0..columns)
                .map(|g| {
                    let n = phi.column(g).norm();
                    if n > 0.0 {
                        1.0 / n
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let mut residuals: Vec<DVector<Complex64>> = observations.to_vec();
    let mut energy = residuals.iter().map(|r| r.norm_squared()).sum::<f64>() / count;
    let mut trace = vec![energy];
    let mut support: Vec<usize> = Vec::new();
    let mut used = vec![false; columns];

    while energy > opts.tolerance && support.len() < opts.max_atoms.min(columns) {
        let mut scores = vec![0.0f64; columns];
        for ((phi, r), inv) in sensing.iter().zip(&residuals).zip(&inv_norms) {
            let corr = phi.ad_mul(r);
            for (g, c) in corr.iter().enumerate() {
                scores[g] += c.norm() * inv[g];
            }
        }
        let mut best = usize::MAX;
        let mut best_score = -1.0;
        for (g, &score) in scores.iter().enumerate() {
            if !used[g] && score > best_score {
                best = g;
                best_score = score;
            }
        }
        if best == usize::MAX || best_score <= 0.0 {
            // No column correlates with the residual at all; selecting one
            // would be arbitrary.
            break;
        }
        used[best] = true;
        support.push(best);

        for ((phi, y), r) in sensing.iter().zip(observations).zip(&mut residuals) {
            let atoms = gather(phi, &support);
            let x = support_solve(&atoms, y)?;
            *r = y - atoms * x;
        }
        energy = residuals.iter().map(|r| r.norm_squared()).sum::<f64>() / count;
        trace.push(energy);
    }
    Ok((support, trace, energy <= opts.tolerance))
}

fn refit(
    observations: &[DVector<Complex64>],
    sensing: &[DMatrix<Complex64>],
    support: &[usize],
) -> Result<Vec<DVector<Complex64>>, EstimationError> {
    observations
        .iter()
        .zip(sensing)
        .map(|(y, phi)| {
            if support.is_empty() {
                Ok(DVector::zeros(0))
            } else {
                support_solve(&gather(phi, support), y)
            }
        })
        .collect()
}

fn gather(phi: &DMatrix<Complex64>, support: &[usize]) -> DMatrix<Complex64> {
    let mut atoms = DMatrix::zeros(phi.nrows(), support.len());
    for (k, &g) in support.iter().enumerate() {
        atoms.column_mut(k).copy_from(&phi.column(g));
    }
    atoms
}

/// Least squares on the admitted columns; normal equations first, SVD when
/// the Gram matrix loses definiteness.
fn support_solve(
    atoms: &DMatrix<Complex64>,
    y: &DVector<Complex64>,
) -> Result<DVector<Complex64>, EstimationError> {
    let gram = atoms.ad_mul(atoms);
    let rhs = DVector::from(atoms.ad_mul(y));
    match solve_hermitian_vec(&gram, &rhs) {
        Some(x) => Ok(x),
        None => Ok(lstsq(atoms, y)),
    }
}

// ── Kronecker-factored pursuit for multi-antenna users ──────────────────────

/// One subcarrier of a sensing operator with the form `kron(user, base)`.
///
/// Combined column `g = gu * base.ncols() + gb` and combined row
/// `j * base.nrows() + b`: the user index runs outermost on both axes, which
/// matches the pilot-outer stacking of multi-antenna measurements. The
/// factors stay separate because the materialized product is quadratically
/// larger than anything the pursuit actually needs.
#[derive(Clone, Debug)]
pub struct FactoredSensing {
    user: DMatrix<Complex64>,
    base: DMatrix<Complex64>,
}

impl FactoredSensing {
    pub fn new(user: DMatrix<Complex64>, base: DMatrix<Complex64>) -> Self {
        Self { user, base }
    }

    pub fn rows(&self) -> usize {
        self.user.nrows() * self.base.nrows()
    }

    pub fn columns(&self) -> usize {
        self.user.ncols() * self.base.ncols()
    }

    /// Materialized combined column, entry `[j * block + b] = user[j] * base[b]`.
    pub fn column(&self, g: usize) -> DVector<Complex64> {
        let block = self.base.nrows();
        let (gu, gb) = (g / self.base.ncols(), g % self.base.ncols());
        let mut out = DVector::zeros(self.rows());
        for (j, uj) in self.user.column(gu).iter().enumerate() {
            for (b, cb) in self.base.column(gb).iter().enumerate() {
                out[j * block + b] = uj * cb;
            }
        }
        out
    }

    fn inv_norms(&self) -> Vec<f64> {
        let user: Vec<f64> = (0..self.user.ncols())
            .map(|g| self.user.column(g).norm())
            .collect();
        let base: Vec<f64> = (0..self.base.ncols())
            .map(|g| self.base.column(g).norm())
            .collect();
        let mut out = Vec::with_capacity(user.len() * base.len());
        for nu in &user {
            for nb in &base {
                let n = nu * nb;
                out.push(if n > 0.0 { 1.0 / n } else { 0.0 });
            }
        }
        out
    }

    /// `|(u ⊗ b)^H r|` for every combined column via two small products:
    /// reshaping `r` into a `block x pilots` matrix `R` turns the correlation
    /// into `base^H R conj(user)`.
    fn accumulate_scores(&self, r: &DVector<Complex64>, inv: &[f64], scores: &mut [f64]) {
        let block = self.base.nrows();
        let pilots = self.user.nrows();
        let rmat = DMatrix::from_column_slice(block, pilots, r.as_slice());
        let corr = self.base.ad_mul(&rmat) * self.user.conjugate();
        let base_cols = self.base.ncols();
        for gu in 0..self.user.ncols() {
            for gb in 0..base_cols {
                let g = gu * base_cols + gb;
                scores[g] += corr[(gb, gu)].norm() * inv[g];
            }
        }
    }

    fn gather(&self, support: &[usize]) -> DMatrix<Complex64> {
        let mut atoms = DMatrix::zeros(self.rows(), support.len());
        for (k, &g) in support.iter().enumerate() {
            atoms.column_mut(k).copy_from(&self.column(g));
        }
        atoms
    }
}

/// Group pursuit over Kronecker-factored subcarrier operators. Identical
/// selection rule and stopping logic to [`gsomp`]; only the scoring and the
/// column materialization exploit the factorization.
pub fn gmmv(
    observations: &[DVector<Complex64>],
    sensing: &[FactoredSensing],
    opts: &PursuitOptions,
) -> Result<GroupPursuitResult, EstimationError> {
    if observations.is_empty() || observations.len() != sensing.len() {
        return Err(EstimationError::NoSubcarriers);
    }
    if !(opts.tolerance.is_finite() && opts.tolerance >= 0.0) {
        return Err(EstimationError::InvalidTolerance(opts.tolerance));
    }
    let columns = sensing[0].columns();
    for (y, phi) in observations.iter().zip(sensing) {
        if phi.rows() != y.len() {
            return Err(EstimationError::DimensionMismatch {
                expected: phi.rows(),
                got: y.len(),
            });
        }
        if phi.columns() != columns {
            return Err(EstimationError::DimensionMismatch {
                expected: columns,
                got: phi.columns(),
            });
        }
    }

    let count = observations.len() as f64;
    let inv_norms: Vec<Vec<f64>> = sensing.iter().map(|phi| phi.inv_norms()).collect();
    let mut residuals: Vec<DVector<Complex64>> = observations.to_vec();
    let mut energy = residuals.iter().map(|r| r.norm_squared()).sum::<f64>() / count;
    let mut trace = vec![energy];
    let mut support: Vec<usize> = Vec::new();
    let mut used = vec![false; columns];

    while energy > opts.tolerance && support.len() < opts.max_atoms.min(columns) {
        let mut scores = vec![0.0f64; columns];
        for ((phi, r), inv) in sensing.iter().zip(&residuals).zip(&inv_norms) {
            phi.accumulate_scores(r, inv, &mut scores);
        }
        let mut best = usize::MAX;
        let mut best_score = -1.0;
        for (g, &score) in scores.iter().enumerate() {
            if !used[g] && score > best_score {
                best = g;
                best_score = score;
            }
        }
        if best == usize::MAX || best_score <= 0.0 {
            break;
        }
        used[best] = true;
        support.push(best);

        for ((phi, y), r) in sensing.iter().zip(observations).zip(&mut residuals) {
            let atoms = phi.gather(&support);
            let x = support_solve(&atoms, y)?;
            *r = y - atoms * x;
        }
        energy = residuals.iter().map(|r| r.norm_squared()).sum::<f64>() / count;
        trace.push(energy);
    }

    let gains = observations
        .iter()
        .zip(sensing)
        .map(|(y, phi)| {
            if support.is_empty() {
                Ok(DVector::zeros(0))
            } else {
                support_solve(&phi.gather(&support), y)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GroupPursuitResult {
        support,
        gains,
        residual_trace: trace,
        reached_tolerance: energy <= opts.tolerance,
    })
}

/// Channel matrices implied by a factored pursuit result:
/// `H_s = sum_k x_k a_base(gb_k) a_user(gu_k)^H` with `g = gu * G_base + gb`.
pub fn reconstruct_mimo_channel(
    base_dict: &WidebandDictionary,
    user_dict: &WidebandDictionary,
    support: &[usize],
    gains: &[DVector<Complex64>],
) -> Result<Vec<DMatrix<Complex64>>, EstimationError> {
    let base_cols = base_dict.columns();
    gains
        .iter()
        .enumerate()
        .map(|(s, x)| {
            let mut h = DMatrix::zeros(base_dict.antennas(), user_dict.antennas());
            if support.is_empty() {
                return Ok(h);
            }
            if x.len() != support.len() {
                return Err(EstimationError::DimensionMismatch {
                    expected: support.len(),
                    got: x.len(),
                });
            }
            for (k, &g) in support.iter().enumerate() {
                let a = base_dict.column(s, g % base_cols)?;
                let u = user_dict.column(s, g / base_cols)?;
                h.gerc(x[k], &a, &u, Complex64::new(1.0, 0.0));
            }
            Ok(h)
        })
        .collect()
}

/// Channel vectors implied by a pursuit result: `h_s = A_s(support) x_s`.
pub fn reconstruct_channel(
    dict: &WidebandDictionary,
    support: &[usize],
    gains: &[DVector<Complex64>],
) -> Result<Vec<DVector<Complex64>>, EstimationError> {
    gains
        .iter()
        .enumerate()
        .map(|(s, x)| {
            if support.is_empty() {
                return Ok(DVector::zeros(dict.antennas()));
            }
            if x.len() != support.len() {
                return Err(EstimationError::DimensionMismatch {
                    expected: support.len(),
                    got: x.len(),
                });
            }
            Ok(dict.atom_matrix(s, support)? * x)
        })
        .collect()
}

// ── Tests ───────────────────────────────────────────────────────────────────
