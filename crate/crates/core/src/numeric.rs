//! Small dense linear-algebra and sampling helpers shared by the estimation
//! and combining layers.

use nalgebra::{DMatrix, DVector, Dyn};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Rank tolerance used by the pseudoinverse-style solves, relative to the
/// largest singular value.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Minimum-norm least-squares solution of `a x = b` via SVD, discarding
/// singular values below `RANK_TOLERANCE` times the largest one.
pub fn lstsq(a: &DMatrix<Complex64>, b: &DVector<Complex64>) -> DVector<Complex64> {
    debug_assert_eq!(a.nrows(), b.nrows());
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = if smax > 0.0 { RANK_TOLERANCE * smax } else { f64::MAX };
    svd.solve(b, eps)
        .expect("SVD solve cannot fail when both factors are computed")
}

/// Solves the Hermitian positive-definite system `m x = rhs` by Cholesky.
/// Returns `None` when `m` is not positive definite to working precision.
pub fn solve_hermitian(
    m: &DMatrix<Complex64>,
    rhs: &DMatrix<Complex64>,
) -> Option<DMatrix<Complex64>> {
    checked_cholesky(m).map(|chol| chol.solve(rhs))
}

/// Single right-hand-side variant of [`solve_hermitian`].
pub fn solve_hermitian_vec(
    m: &DMatrix<Complex64>,
    rhs: &DVector<Complex64>,
) -> Option<DVector<Complex64>> {
    checked_cholesky(m).map(|chol| chol.solve(rhs))
}

/// A zero pivot in the last column slips through nalgebra's factorization
/// because nothing remains to divide by it, so the factor diagonal needs an
/// explicit rank check.
fn checked_cholesky(m: &DMatrix<Complex64>) -> Option<nalgebra::Cholesky<Complex64, Dyn>> {
    let chol = nalgebra::Cholesky::new(m.clone())?;
    let diag = chol.l_dirty().diagonal();
    let dmax = diag.iter().fold(0.0f64, |acc, d| acc.max(d.re));
    if diag
        .iter()
        .any(|d| !d.re.is_finite() || d.re <= RANK_TOLERANCE.sqrt() * dmax)
    {
        return None;
    }
    Some(chol)
}

/// One circularly-symmetric complex Gaussian sample with variance `variance`
/// (real and imaginary parts each carry half of it).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(scale * re, scale * im)
}

/// Vector of iid circularly-symmetric complex Gaussians.
pub fn complex_gaussian_vector<R: Rng + ?Sized>(
    rng: &mut R,
    len: usize,
    variance: f64,
) -> DVector<Complex64> {
    DVector::from_iterator(len, (0..len).map(|_| complex_gaussian(rng, variance)))
}

/// Kronecker product `a ⊗ b` for dense complex matrices.
pub fn kronecker(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = DMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let scale = a[(i, j)];
            for p in 0..br {
                for q in 0..bc {
                    out[(i * br + p, j * bc + q)] = scale * b[(p, q)];
                }
            }
        }
    }
    out
}
