//! Dense kernels shared by the modules: norms, random orthogonal factors,
//! orthonormal complements and seeded random streams.

use nalgebra::{DMatrix, DVector, QR};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Random stream used by every stochastic operation.
///
/// ChaCha8 is a counter-based generator, so a `(seed, draw index)` pair
/// reproduces the same value on every platform.
pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent child seed (SplitMix64 finalizer).
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    let mut z = parent
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn gaussian_vector(len: usize, rng: &mut Rng) -> DVector<f64> {
    DVector::from_fn(len, |_, _| StandardNormal.sample(rng))
}

/// Haar-distributed `rows x cols` matrix with orthonormal columns.
///
/// QR of a Gaussian matrix, with the column signs fixed so that `R` has a
/// positive diagonal.
pub fn haar_orthonormal(rows: usize, cols: usize, rng: &mut Rng) -> DMatrix<f64> {
    assert!(rows >= cols);
    let g = gaussian_matrix(rows, cols, rng);
    let qr = QR::new(g);
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..cols {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Thin SVD `m = u diag(s) v_t`, singular values descending.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub v_t: DMatrix<f64>,
}

fn to_faer(m: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin SVD through faer; nalgebra's bidiagonal QR can stop with
/// residuals around `1e-9` on blocks of orthonormal factors, which is far
/// too coarse for the reference decomposition. `None` if the iteration
/// does not converge (non-finite input).
pub fn svd(m: &DMatrix<f64>) -> Option<ThinSvd> {
    let f = to_faer(m).thin_svd().ok()?;
    let s = f.S().column_vector();
    Some(ThinSvd {
        u: from_faer(f.U()),
        s: DVector::from_fn(s.nrows(), |i, _| s[i]),
        v_t: from_faer(f.V()).transpose(),
    })
}

/// Singular values in descending order; `NaN`s if the SVD fails.
pub fn singular_values(m: &DMatrix<f64>) -> DVector<f64> {
    let k = m.nrows().min(m.ncols());
    if k == 0 {
        return DVector::zeros(0);
    }
    match to_faer(m).singular_values() {
        Ok(s) => DVector::from_vec(s),
        Err(_) => DVector::from_element(k, f64::NAN),
    }
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).iter().copied().fold(0.0, f64::max)
}

/// `(sigma_max, sigma_min)` over the `min(rows, cols)` singular values.
pub fn extreme_singular_values(m: &DMatrix<f64>) -> (f64, f64) {
    let s = singular_values(m);
    let max = s.iter().copied().fold(0.0, f64::max);
    let min = s.iter().copied().fold(f64::INFINITY, f64::min);
    (max, min)
}

/// 2-norm condition number `sigma_max / sigma_min` by full SVD.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let (max, min) = extreme_singular_values(m);
    max / min
}

/// Orthonormal basis of the orthogonal complement of `range(u)`, where `u`
/// has orthonormal columns.
///
/// Householder QR of `[u, 0]` gives a full square orthogonal factor whose
/// trailing columns span the complement.
pub fn orthonormal_complement(u: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, n) = u.shape();
    assert!(m >= n);
    if m == n {
        return DMatrix::zeros(m, 0);
    }
    let mut padded = DMatrix::zeros(m, m);
    padded.columns_mut(0, n).copy_from(u);
    let q = QR::new(padded).q();
    q.columns(n, m - n).into_owned()
}

/// Returns `(s + s^T) / 2`.
pub fn symmetric_part(s: &DMatrix<f64>) -> DMatrix<f64> {
    (s + s.transpose()) * 0.5
}

/// `|| q^T q - I ||_2`.
pub fn orthonormality_defect(q: &DMatrix<f64>) -> f64 {
    let n = q.ncols();
    spectral_norm(&(q.transpose() * q - DMatrix::identity(n, n)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_factor_is_orthonormal() {
        let mut rng = rng_from_seed(3);
        let q = haar_orthonormal(12, 5, &mut rng);
        assert!(orthonormality_defect(&q) < 1e-14);
    }

    #[test]
    fn complement_spans_the_rest() {
        let mut rng = rng_from_seed(9);
        let u = haar_orthonormal(7, 3, &mut rng);
        let perp = orthonormal_complement(&u);
        assert_eq!(perp.shape(), (7, 4));
        let mut full = DMatrix::zeros(7, 7);
        full.columns_mut(0, 3).copy_from(&u);
        full.columns_mut(3, 4).copy_from(&perp);
        assert!(orthonormality_defect(&full) < 1e-14);
    }

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(1, 0);
        let b = derive_seed(1, 1);
        let c = derive_seed(2, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, derive_seed(1, 0));
    }

    #[test]
    fn svd_reconstructs_block_of_orthonormal_factor() {
        // Lower block of a tall orthonormal factor: singular values fill
        // (0, 1) densely, which is where loose convergence shows up.
        let mut rng = rng_from_seed(4);
        let q = haar_orthonormal(85, 39, &mut rng);
        let block = q.rows(45, 40).into_owned();
        let f = svd(&block).unwrap();
        let rebuilt = &f.u * DMatrix::from_diagonal(&f.s) * &f.v_t;
        assert!(spectral_norm(&(&block - rebuilt)) < 1e-14);
        assert!(orthonormality_defect(&f.u) < 1e-14 && orthonormality_defect(&f.v_t.transpose()) < 1e-14);
        assert!(f.s.as_slice().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn norm_of_diagonal() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -7.0, 1.0]));
        assert_eq!(spectral_norm(&d), 7.0);
        assert!((condition_number(&d) - 7.0).abs() < 1e-15);
    }
}
