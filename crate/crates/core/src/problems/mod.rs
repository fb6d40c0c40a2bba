//! Test problems: random pairs with prescribed conditioning, the
//! first-difference operator, normalization and Matrix Market ingestion.

pub mod mtx;

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, rng_from_seed};

pub use mtx::{read_matrix_market, write_matrix_market, MtxError};

/// A dense full-column-rank pair `(A, B)` with `A: m x n` and `B: p x n`.
#[derive(Debug, Clone)]
pub struct MatrixPair {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    label: String,
}

impl MatrixPair {
    /// Validates shapes and numerical full column rank of both factors.
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, label: impl Into<String>) -> Result<Self> {
        let (m, n) = a.shape();
        let (p, nb) = b.shape();
        if n == 0 {
            return Err(Error::InvalidArgument("pair has no columns".into()));
        }
        if nb != n {
            return Err(Error::InvalidArgument(format!(
                "A has {n} columns but B has {nb}"
            )));
        }
        if m < n || p < n {
            return Err(Error::InvalidArgument(format!(
                "need m >= n and p >= n, got m={m}, p={p}, n={n}"
            )));
        }
        check_full_column_rank(&a, "A")?;
        check_full_column_rank(&b, "B")?;
        Ok(Self {
            a,
            b,
            label: label.into(),
        })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `(m, p, n)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.a.nrows(), self.b.nrows(), self.a.ncols())
    }

    /// The pair `(B, A)`: same vectors, reciprocal generalized singular values.
    pub fn swapped(&self) -> Self {
        Self {
            a: self.b.clone(),
            b: self.a.clone(),
            label: format!("{}-swapped", self.label),
        }
    }
}

fn check_full_column_rank(m: &DMatrix<f64>, what: &'static str) -> Result<()> {
    let (max, min) = linalg::extreme_singular_values(m);
    let tol = m.nrows().max(m.ncols()) as f64 * f64::EPSILON * max;
    if !(min > tol) {
        return Err(Error::RankDeficient {
            what,
            detail: format!("sigma_min = {min:e}, sigma_max = {max:e}"),
        });
    }
    Ok(())
}

/// Singular values `1/cond + j (1 - 1/cond) / (n - 1)`, `j = 0..n`, ascending.
///
/// For `n = 1` the single value is 1.
pub fn singular_value_grid(n: usize, cond: f64) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let lo = 1.0 / cond;
    let step = (1.0 - lo) / (n - 1) as f64;
    (0..n)
        .map(|j| if j == n - 1 { 1.0 } else { lo + j as f64 * step })
        .collect()
}

/// `rows x n` matrix with exactly the singular values of
/// [`singular_value_grid`], built as `Q_left * diag(grid) * Q_right^T` from
/// Haar-distributed factors.
pub(crate) fn matrix_with_grid(rows: usize, n: usize, cond: f64, rng: &mut linalg::Rng) -> DMatrix<f64> {
    let left = linalg::haar_orthonormal(rows, n, rng);
    let right = linalg::haar_orthonormal(n, n, rng);
    let grid = DVector::from_vec(singular_value_grid(n, cond));
    left * DMatrix::from_diagonal(&grid) * right.transpose()
}

/// Random dense pair with `||A|| = ||B|| = 1`, `kappa(A) = cond_a` and
/// `kappa(B) = cond_b`. Deterministic per seed.
pub fn gen_random_pair(
    m: usize,
    n: usize,
    p: usize,
    cond_a: f64,
    cond_b: f64,
    seed: u64,
) -> Result<MatrixPair> {
    if n == 0 || m < n || p < n {
        return Err(Error::InvalidArgument(format!(
            "need n >= 1, m >= n, p >= n; got m={m}, n={n}, p={p}"
        )));
    }
    for (name, c) in [("cond_a", cond_a), ("cond_b", cond_b)] {
        if !(c >= 1.0) || !c.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "{name} must be a finite number >= 1, got {c}"
            )));
        }
    }
    let mut rng = rng_from_seed(seed);
    let a = matrix_with_grid(m, n, cond_a, &mut rng);
    let b = matrix_with_grid(p, n, cond_b, &mut rng);
    let label = format!("random-m{m}-n{n}-p{p}-ca{cond_a:e}-cb{cond_b:e}-s{seed}");
    MatrixPair::new(a, b, label)
}

/// The `(n+1) x n` lower-bidiagonal first-difference matrix: `+1` on the
/// diagonal, `-1` on the subdiagonal.
pub fn first_difference_matrix(n: usize) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "first-difference matrix needs n >= 1".into(),
        ));
    }
    let mut d = DMatrix::zeros(n + 1, n);
    for j in 0..n {
        d[(j, j)] = 1.0;
        d[(j + 1, j)] = -1.0;
    }
    Ok(d)
}

/// Returns `m / ||m||_2`.
pub fn normalize(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let norm = linalg::spectral_norm(m);
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "cannot normalize a matrix with 2-norm {norm}"
        )));
    }
    Ok(m / norm)
}

/// Reads a dense matrix from a Matrix Market file.
pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(read_matrix_market(std::io::BufReader::new(file))?)
}

/// Writes `m` in Matrix Market array format with round-trip exact values.
pub fn save_matrix_market(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_matrix_market(&mut w, m).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Builds the realistic-problem layout: `A = A0 / ||A0||` paired with the
/// normalized first-difference operator of matching order.
pub fn pair_with_first_difference(a0: &DMatrix<f64>, label: impl Into<String>) -> Result<MatrixPair> {
    let a = normalize(a0)?;
    let b = normalize(&first_difference_matrix(a0.ncols())?)?;
    MatrixPair::new(a, b, label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{condition_number, singular_values, spectral_norm};

    #[test]
    fn grid_endpoints() {
        let g = singular_value_grid(5, 100.0);
        assert_eq!(g[0], 0.01);
        assert_eq!(g[4], 1.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(singular_value_grid(1, 1e5), vec![1.0]);
        assert!(singular_value_grid(3, 1.0).iter().all(|&s| s == 1.0));
    }

    #[test]
    fn random_pair_has_prescribed_spectrum() {
        let pair = gen_random_pair(50, 30, 40, 1e5, 10.0, 7).unwrap();
        let kappa = condition_number(pair.a());
        assert!((0.999e5..=1.001e5).contains(&kappa), "kappa(A) = {kappa}");
        let mut s = singular_values(pair.a()).as_slice().to_vec();
        s.reverse();
        for (got, want) in s.iter().zip(singular_value_grid(30, 1e5)) {
            assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
        }
        assert!((spectral_norm(pair.b()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_case() {
        let pair = gen_random_pair(2, 2, 2, 1.0, 1.0, 11).unwrap();
        for m in [pair.a(), pair.b()] {
            let defect = m.transpose() * m - DMatrix::<f64>::identity(2, 2);
            assert!(defect.norm() < 1e-14);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let p1 = gen_random_pair(9, 6, 8, 10.0, 3.0, 5).unwrap();
        let p2 = gen_random_pair(9, 6, 8, 10.0, 3.0, 5).unwrap();
        let p3 = gen_random_pair(9, 6, 8, 10.0, 3.0, 6).unwrap();
        assert_eq!(p1.a(), p2.a());
        assert_eq!(p1.b(), p2.b());
        assert_ne!(p1.a(), p3.a());
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(
            gen_random_pair(3, 4, 5, 1.0, 1.0, 0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            gen_random_pair(5, 4, 5, 0.5, 1.0, 0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            gen_random_pair(5, 0, 5, 1.0, 1.0, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn pair_rejects_rank_deficiency() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let b = DMatrix::identity(2, 2);
        assert!(matches!(
            MatrixPair::new(a, b, "x"),
            Err(Error::RankDeficient { what: "A", .. })
        ));
    }

    #[test]
    fn first_difference_small_cases() {
        let d2 = first_difference_matrix(2).unwrap();
        assert_eq!(d2, DMatrix::from_row_slice(3, 2, &[1.0, 0.0, -1.0, 1.0, 0.0, -1.0]));
        let d1 = first_difference_matrix(1).unwrap();
        assert_eq!(d1, DMatrix::from_row_slice(2, 1, &[1.0, -1.0]));
        assert!(first_difference_matrix(0).is_err());
    }

    #[test]
    fn first_difference_columns() {
        let d = first_difference_matrix(6).unwrap();
        for col in d.column_iter() {
            assert_eq!(col.iter().filter(|&&v| v == 1.0).count(), 1);
            assert_eq!(col.iter().filter(|&&v| v == -1.0).count(), 1);
            assert_eq!(col.sum(), 0.0);
        }
    }

    #[test]
    fn first_difference_smallest_singular_value() {
        // D^T D is tridiag(-1, 2, -1) of order n, eigenvalues 4 sin^2(k pi / (2 (n + 1))).
        let n = 4;
        let s = singular_values(&first_difference_matrix(n).unwrap());
        let want = 2.0 * (std::f64::consts::PI / (2.0 * (n as f64 + 1.0))).sin();
        assert!((s[n - 1] - want).abs() < 1e-14, "{} vs {want}", s[n - 1]);
        let want_max = 2.0 * (n as f64 * std::f64::consts::PI / (2.0 * (n as f64 + 1.0))).sin();
        assert!((s[0] - want_max).abs() < 1e-14);
    }

    #[test]
    fn normalize_examples() {
        let m = DMatrix::<f64>::identity(3, 3) * 2.0;
        assert!((normalize(&m).unwrap() - DMatrix::identity(3, 3)).norm() < 1e-15);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0]));
        let nd = normalize(&d).unwrap();
        assert!((nd[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((nd[(1, 1)] - 1.0 / 3.0).abs() < 1e-15);
        assert!(normalize(&DMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn normalize_random() {
        let mut rng = rng_from_seed(4);
        let m = linalg::gaussian_matrix(20, 10, &mut rng);
        let m = &m * (5.3 / spectral_norm(&m));
        let n = normalize(&m).unwrap();
        assert!((spectral_norm(&n) - 1.0).abs() <= 1e-12);
    }
}
