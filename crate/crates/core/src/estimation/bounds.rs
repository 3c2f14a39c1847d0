//! Genie-aided error bounds and sensing diagnostics.
//!
//! With the true support known, the remaining gain estimation is linear and
//! its error floor is exact: for one subcarrier with sensing columns `Phi_I`
//! and steering atoms `B_I`, white noise of power `sigma2` leaves
//!
//! ```text
//! E || h - h_hat ||^2 = sigma2 * tr( (Phi_I^H Phi_I)^-1 B_I^H B_I )
//! ```
//!
//! and the full error covariance `R_e = sigma2 * B_I M^-1 B_I^H`, which this
//! module only ever exposes through quadratic forms to avoid materializing
//! an antennas-squared matrix.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::EstimationError;
use crate::numeric::{solve_hermitian, solve_hermitian_vec};

fn checked_gram(
    phi_support: &DMatrix<Complex64>,
    noise_power: f64,
) -> Result<DMatrix<Complex64>, EstimationError> {
    if phi_support.ncols() == 0 {
        return Err(EstimationError::EmptySupport);
    }
    if !(noise_power.is_finite() && noise_power >= 0.0) {
        return Err(EstimationError::InvalidNoisePower(noise_power));
    }
    Ok(phi_support.ad_mul(phi_support))
}

/// Expected squared channel error on one subcarrier given the true support.
pub fn support_error_floor(
    phi_support: &DMatrix<Complex64>,
    atoms_support: &DMatrix<Complex64>,
    noise_power: f64,
) -> Result<f64, EstimationError> {
    let gram = checked_gram(phi_support, noise_power)?;
    let target = atoms_support.ad_mul(atoms_support);
    let solved = solve_hermitian(&gram, &target).ok_or(EstimationError::DegenerateSupport)?;
    Ok(noise_power * solved.diagonal().iter().map(|d| d.re).sum::<f64>())
}

/// Quadratic form `v^H R_e v` of the genie error covariance.
pub fn support_error_quadratic(
    phi_support: &DMatrix<Complex64>,
    atoms_support: &DMatrix<Complex64>,
    v: &DVector<Complex64>,
    noise_power: f64,
) -> Result<f64, EstimationError> {
    let gram = checked_gram(phi_support, noise_power)?;
    let w = DVector::from(atoms_support.ad_mul(v));
    let z = solve_hermitian_vec(&gram, &w).ok_or(EstimationError::DegenerateSupport)?;
    Ok(noise_power * w.dotc(&z).re)
}

/// Sum of normalized column cross-correlations `|phi_i^H phi_j| /
/// (||phi_i|| ||phi_j||)` over ordered pairs `i != j`. Zero for orthogonal
/// columns; grows as the sensing matrix loses discriminating power.
pub fn total_coherence(phi: &DMatrix<Complex64>) -> f64 {
    let norms: Vec<f64> = (0..phi.ncols()).map(|j| phi.column(j).norm()).collect();
    let gram = phi.ad_mul(phi);
    let mut total = 0.0;
    for i in 0..phi.ncols() {
        for j in 0..phi.ncols() {
            if i != j && norms[i] > 0.0 && norms[j] > 0.0 {
                total += gram[(i, j)].norm() / (norms[i] * norms[j]);
            }
        }
    }
    total
}

// ── Tests ───────────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::numeric::{complex_gaussian, complex_gaussian_vector};

    fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
        assert!(
            (a - b).abs() <= tol,
            "{what}: {a} vs {b} (|diff| = {})",
            (a - b).abs()
        );
    }

    fn dft(n: usize) -> DMatrix<Complex64> {
        DMatrix::from_fn(n, n, |a, b| {
            Complex64::from_polar(
                1.0 / (n as f64).sqrt(),
                -2.0 * std::f64::consts::PI * (a * b) as f64 / n as f64,
            )
        })
    }

    // 1. Semi-unitary sensing with unit-modulus atoms: the floor collapses
    //    to paths * antennas * noise / pilot power.
    #[test]
    fn semi_unitary_floor() {
        let antennas = 16;
        let paths = 3;
        let pilot: f64 = 2.5e-5;
        let noise = 4e-13;
        let u = dft(antennas);
        let phi = DMatrix::from(u.columns(0, paths)) * Complex64::new(pilot.sqrt(), 0.0);
        let atoms = DMatrix::from(u.columns(5, paths)) * Complex64::new((antennas as f64).sqrt(), 0.0);
        let floor = support_error_floor(&phi, &atoms, noise).unwrap();
        let want = paths as f64 * antennas as f64 * noise / pilot;
        assert_close(floor, want, 1e-9 * want, "semi-unitary floor");
    }

    // 2. The quadratic form agrees with the explicitly assembled covariance
    //    on a random instance, and the floor is its trace.
    #[test]
    fn quadratic_form_matches_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let phi = DMatrix::from_fn(10, 3, |_, _| complex_gaussian(&mut rng, 1.0));
        let atoms = DMatrix::from_fn(7, 3, |_, _| complex_gaussian(&mut rng, 1.0));
        let noise = 0.37;

        let gram = phi.ad_mul(&phi);
        let inv = gram.clone().try_inverse().unwrap();
        let cov = (&atoms * inv * atoms.adjoint()) * Complex64::new(noise, 0.0);

        let floor = support_error_floor(&phi, &atoms, noise).unwrap();
        let trace = cov.diagonal().iter().map(|d| d.re).sum::<f64>();
        assert_close(floor, trace, 1e-9 * trace, "floor as trace");

        for _ in 0..10 {
            let v = complex_gaussian_vector(&mut rng, 7, 1.0);
            let quad = support_error_quadratic(&phi, &atoms, &v, noise).unwrap();
            let direct = (v.adjoint() * &cov * &v)[(0, 0)].re;
            assert_close(quad, direct, 1e-9 * direct.abs().max(1e-12), "quadratic form");
        }
    }

    // 3. Coherence: zero for orthogonal columns, two for one duplicated
    //    pair, invariant to column scaling.
    #[test]
    fn coherence_cases() {
        let u = dft(8);
        let ortho = DMatrix::from(u.columns(0, 4));
        assert!(total_coherence(&ortho) < 1e-9);

        let mut dup = DMatrix::zeros(8, 2);
        dup.column_mut(0).copy_from(&u.column(1));
        dup.column_mut(1).copy_from(&u.column(1));
        assert_close(total_coherence(&dup), 2.0, 1e-9, "duplicated pair");

        let mut scaled = dup.clone();
        scaled.column_mut(1).scale_mut(7.5);
        assert_close(total_coherence(&scaled), 2.0, 1e-9, "scale invariance");
    }

    // 4. Degenerate supports and empty supports are reported, not solved.
    #[test]
    fn degenerate_support_detected() {
        let u = dft(8);
        // Integer entries keep the rank-one Gram exactly singular.
        let dup = DMatrix::from_fn(8, 2, |i, _| Complex64::new((i + 1) as f64, 0.0));
        let atoms = DMatrix::from(u.columns(0, 2));
        assert!(matches!(
            support_error_floor(&dup, &atoms, 1.0),
            Err(EstimationError::DegenerateSupport)
        ));
        let empty: DMatrix<Complex64> = DMatrix::zeros(8, 0);
        assert!(matches!(
            support_error_floor(&empty, &empty, 1.0),
            Err(EstimationError::EmptySupport)
        ));
        assert!(support_error_floor(&atoms, &atoms, f64::NAN).is_err());
    }
}
