//! Krylov estimates of the 2-norm condition number of a tall matrix and the
//! formulation choice they drive.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::augmented::Formulation;
use crate::error::{Error, Result};
use crate::linalg::{self, derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CondMethod {
    LanczosInv,
    RandomizedLsqr,
    Bidiag,
}

impl CondMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            CondMethod::LanczosInv => "lanczos-inv",
            CondMethod::RandomizedLsqr => "lsqr",
            CondMethod::Bidiag => "bidiag",
        }
    }
}

impl fmt::Display for CondMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CondMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lanczos-inv" | "lanczos" => Ok(CondMethod::LanczosInv),
            "lsqr" | "randomized-lsqr" => Ok(CondMethod::RandomizedLsqr),
            "bidiag" => Ok(CondMethod::Bidiag),
            other => Err(Error::InvalidArgument(format!(
                "unknown condition estimator `{other}` (expected lanczos-inv, lsqr or bidiag)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CondEstimate {
    pub value: f64,
    pub method: CondMethod,
    pub steps: usize,
    pub converged: bool,
}

pub const DEFAULT_STEPS: usize = 20;
pub const LSQR_TOL: f64 = 1e-10;

// Random streams are split off the caller's seed so that estimating a
// matrix generated from the same seed does not reuse its draws.
const LSQR_STREAM: u64 = 0x4c53_5152;
const BIDIAG_STREAM: u64 = 0x4249_4449;

/// Largest eigenvalue of the symmetric tridiagonal matrix with the given
/// diagonal and off-diagonal.
fn tridiagonal_max(diag: &[f64], off: &[f64]) -> f64 {
    let k = diag.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = diag[i];
        if i + 1 < k {
            t[(i, i + 1)] = off[i];
            t[(i + 1, i)] = off[i];
        }
    }
    SymmetricEigen::new(t).eigenvalues.max()
}

/// Top Ritz value of `op` after at most `k` Lanczos steps with full
/// reorthogonalization. Also reports the number of steps taken and whether
/// the process stopped on an invariant subspace or a settled Ritz value.
fn lanczos_top(
    n: usize,
    k: usize,
    start: &DVector<f64>,
    mut op: impl FnMut(&DVector<f64>) -> DVector<f64>,
) -> (f64, usize, bool) {
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(k);
    let mut diag = Vec::with_capacity(k);
    let mut off = Vec::with_capacity(k);
    let mut q = start / start.norm();
    let mut top = 0.0;
    let mut previous = f64::NAN;
    for step in 0..k.min(n) {
        let mut w = op(&q);
        let a = q.dot(&w);
        diag.push(a);
        basis.push(q.clone());
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&w);
                w.axpy(-c, b, 1.0);
            }
        }
        top = tridiagonal_max(&diag, &off);
        let beta = w.norm();
        let scale = diag.iter().fold(0.0_f64, |s, d| s.max(d.abs())).max(top.abs());
        if beta <= 1e-13 * scale || step + 1 == n {
            return (top, step + 1, true);
        }
        previous = if step + 1 == k { previous } else { top };
        if step + 1 < k {
            off.push(beta);
            q = w / beta;
        }
    }
    let settled = (top - previous).abs() <= 1e-6 * top.abs();
    (top, k.min(n), settled)
}

fn deterministic_start(n: usize) -> DVector<f64> {
    // Irregular positive weights, so no coordinate direction is missed.
    DVector::from_fn(n, |i, _| 1.0 + ((i as f64 + 1.0) * 0.618_033_988_749_895).fract())
}

/// Lanczos on `(M^T M)^{-1}` through a Cholesky factor of `M^T M`.
///
/// The estimate is `sqrt(theta_inv * theta)` where `theta_inv` and `theta`
/// are the top Ritz values of `(M^T M)^{-1}` and `M^T M` after `k` steps;
/// both are lower bounds, so the estimate never exceeds `kappa(M)`.
pub fn estimate_lanczos_inv(m: &DMatrix<f64>, k: usize) -> Result<CondEstimate> {
    check_shape(m, k)?;
    let n = m.ncols();
    let mut g = m.transpose() * m;
    for j in 0..n {
        for i in (j + 1)..n {
            g[(j, i)] = g[(i, j)];
        }
    }
    let l = Cholesky::new(g.clone())
        .ok_or(Error::RankDeficient {
            what: "M",
            detail: "Cholesky factorization of M^T M failed".into(),
        })?
        .l();
    let lt = l.transpose();
    let start = deterministic_start(n);
    let (inv_top, steps, inv_done) = lanczos_top(n, k, &start, |v| {
        let y = l.solve_lower_triangular(v).expect("nonsingular factor");
        lt.solve_upper_triangular(&y).expect("nonsingular factor")
    });
    let (top, _, top_done) = lanczos_top(n, k, &start, |v| &g * v);
    let value = (inv_top * top).sqrt().max(1.0);
    Ok(CondEstimate {
        value,
        method: CondMethod::LanczosInv,
        steps,
        converged: inv_done && top_done,
    })
}

/// `‖M e‖ / ‖e‖`.
pub fn error_ratio(m: &DMatrix<f64>, e: &DVector<f64>) -> f64 {
    (m * e).norm() / e.norm()
}

/// Randomized estimate from the error of an LSQR solve of a consistent
/// least squares problem with a Gaussian solution `x*`.
///
/// `sigma_min` is estimated by the smallest `‖M e_k‖ / ‖e_k‖` over the
/// iterates, since near convergence the error is dominated by rounding and
/// no longer points along the smallest singular direction. `sigma_max` is
/// the largest singular value of the bidiagonal LSQR builds. Iterates whose
/// error is below `1e2 eps ‖x*‖` are skipped; if none qualifies the
/// estimate is 1 and marked not converged.
pub fn estimate_lsqr(m: &DMatrix<f64>, seed: u64, max_iter: usize, tol: f64) -> Result<CondEstimate> {
    check_shape(m, 1)?;
    let n = m.ncols();
    let mut rng = rng_from_seed(derive_seed(seed, LSQR_STREAM));
    let x_star = linalg::gaussian_vector(n, &mut rng);
    let b = m * &x_star;
    let floor = 1e2 * f64::EPSILON * x_star.norm();

    let mut alphas = Vec::new();
    let mut betas = Vec::new();

    let mut beta = b.norm();
    let mut u = &b / beta;
    let mut v = m.tr_mul(&u);
    let mut alpha = v.norm();
    v /= alpha;
    alphas.push(alpha);

    let mut w = v.clone();
    let mut x = DVector::zeros(n);
    let mut phi_bar = beta;
    let mut rho_bar = alpha;
    let b_norm = beta;

    let mut min_ratio = f64::INFINITY;
    let mut steps = 0;
    for _ in 0..max_iter {
        steps += 1;
        u = m * &v - &u * alpha;
        beta = u.norm();
        if beta > 0.0 {
            u /= beta;
        }
        betas.push(beta);
        v = m.tr_mul(&u) - &v * beta;
        alpha = v.norm();
        if alpha > 0.0 {
            v /= alpha;
        }

        let rho = rho_bar.hypot(beta);
        let c = rho_bar / rho;
        let s = beta / rho;
        let theta = s * alpha;
        rho_bar = -c * alpha;
        let phi = c * phi_bar;
        phi_bar *= s;
        x.axpy(phi / rho, &w, 1.0);
        w = &v - &w * (theta / rho);

        let e = &x - &x_star;
        if e.norm() >= floor {
            min_ratio = min_ratio.min(error_ratio(m, &e));
        }

        if phi_bar.abs() <= tol * b_norm || alpha == 0.0 || beta == 0.0 {
            break;
        }
        alphas.push(alpha);
    }

    let k = betas.len();
    let mut bk = DMatrix::zeros(k + 1, k);
    for j in 0..k {
        bk[(j, j)] = alphas[j];
        bk[(j + 1, j)] = betas[j];
    }
    let smax = linalg::singular_values(&bk).max();
    let converged = min_ratio.is_finite();
    let value = if converged { (smax / min_ratio).max(1.0) } else { 1.0 };
    Ok(CondEstimate {
        value,
        method: CondMethod::RandomizedLsqr,
        steps,
        converged,
    })
}

/// `k` steps of Golub-Kahan bidiagonalization with full
/// reorthogonalization from a seeded Gaussian start; the estimate is the
/// ratio of the extreme singular values of the projected `(k+1) x k`
/// lower bidiagonal matrix.
pub fn estimate_bidiag(m: &DMatrix<f64>, k: usize, seed: u64) -> Result<CondEstimate> {
    check_shape(m, k)?;
    let (rows, n) = m.shape();
    let mut rng = rng_from_seed(derive_seed(seed, BIDIAG_STREAM));
    let start = linalg::gaussian_vector(rows, &mut rng);
    let tiny = 1e-13 * m.norm();

    let mut us: Vec<DVector<f64>> = vec![&start / start.norm()];
    let mut vs: Vec<DVector<f64>> = Vec::new();
    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut broke_down = false;

    for j in 0..k.min(n) {
        let mut v = m.tr_mul(&us[j]);
        if let Some(prev) = vs.last() {
            v.axpy(-betas[j - 1], prev, 1.0);
        }
        reorthogonalize(&mut v, &vs);
        let alpha = v.norm();
        if alpha <= tiny {
            broke_down = true;
            break;
        }
        vs.push(v / alpha);
        alphas.push(alpha);

        let mut u = m * &vs[j] - &us[j] * alpha;
        reorthogonalize(&mut u, &us);
        let beta = u.norm();
        betas.push(beta);
        if beta <= tiny {
            broke_down = true;
            break;
        }
        us.push(u / beta);
    }

    let cols = alphas.len();
    if cols == 0 {
        return Err(Error::RankDeficient {
            what: "M",
            detail: "M^T applied to the start vector vanished".into(),
        });
    }
    let mut bk = DMatrix::zeros(cols + 1, cols);
    for j in 0..cols {
        bk[(j, j)] = alphas[j];
        if j < betas.len() {
            bk[(j + 1, j)] = betas[j];
        }
    }
    let (smax, smin) = linalg::extreme_singular_values(&bk);
    Ok(CondEstimate {
        value: (smax / smin).max(1.0),
        method: CondMethod::Bidiag,
        steps: cols,
        converged: broke_down || cols == n,
    })
}

fn reorthogonalize(w: &mut DVector<f64>, basis: &[DVector<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = b.dot(w);
            w.axpy(-c, b, 1.0);
        }
    }
}

fn check_shape(m: &DMatrix<f64>, k: usize) -> Result<()> {
    if m.ncols() == 0 || m.nrows() < m.ncols() {
        return Err(Error::InvalidArgument(format!(
            "condition estimation needs a tall nonempty matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("step count k must be at least 1".into()));
    }
    Ok(())
}

/// Runs `method` with `k` steps (LSQR ignores `k` and iterates up to `4n`
/// times).
pub fn estimate(method: CondMethod, m: &DMatrix<f64>, k: usize, seed: u64) -> Result<CondEstimate> {
    match method {
        CondMethod::LanczosInv => estimate_lanczos_inv(m, k),
        CondMethod::RandomizedLsqr => estimate_lsqr(m, seed, 4 * m.ncols(), LSQR_TOL),
        CondMethod::Bidiag => estimate_bidiag(m, k, seed),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Choice {
    Hat,
    Tilde,
    Either,
}

impl Choice {
    pub fn as_str(self) -> &'static str {
        match self {
            Choice::Hat => "hat",
            Choice::Tilde => "tilde",
            Choice::Either => "either",
        }
    }

    /// The formulation to run; `Either` resolves to Hat.
    pub fn formulation(self) -> Formulation {
        match self {
            Choice::Tilde => Formulation::Tilde,
            Choice::Hat | Choice::Either => Formulation::Hat,
        }
    }
}

/// Prefers the pencil whose positive definite block is built from the
/// better conditioned matrix: an ill-conditioned `A` selects Hat, an
/// ill-conditioned `B` selects Tilde.
pub fn choose_formulation(kappa_a: f64, kappa_b: f64) -> Choice {
    if kappa_a > 2.0 * kappa_b {
        Choice::Hat
    } else if kappa_b > 2.0 * kappa_a {
        Choice::Tilde
    } else {
        Choice::Either
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::matrix_with_grid;
    use proptest::prelude::*;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_row_slice(v))
    }

    fn generated(n: usize, cond: f64, seed: u64) -> DMatrix<f64> {
        let mut rng = rng_from_seed(seed);
        matrix_with_grid(n + n / 2, n, cond, &mut rng)
    }

    #[test]
    fn identity_gives_one() {
        let i = DMatrix::<f64>::identity(5, 5);
        assert!((estimate_lanczos_inv(&i, 1).unwrap().value - 1.0).abs() < 1e-14);
        assert!((estimate_bidiag(&(i.clone() * 3.0), 20, 1).unwrap().value - 1.0).abs() < 1e-12);
        let q = {
            let mut rng = rng_from_seed(2);
            linalg::haar_orthonormal(8, 8, &mut rng)
        };
        let e = estimate_lsqr(&q, 3, 32, LSQR_TOL).unwrap();
        assert!(e.value < 1.0 + 1e-8, "{e:?}");
    }

    #[test]
    fn two_point_spectra_are_exact() {
        let e = estimate_lanczos_inv(&diag(&[1.0, 1e-3]), 2).unwrap();
        assert!((e.value - 1e3).abs() <= 1e-6 * 1e3, "{e:?}");
        let e = estimate_bidiag(&diag(&[1.0, 0.5]), 2, 4).unwrap();
        assert!((e.value - 2.0).abs() <= 1e-12, "{e:?}");
        assert!(e.converged);
    }

    #[test]
    fn engineered_error_ratio() {
        let e2 = DVector::from_row_slice(&[0.0, 1.0]);
        assert_eq!(error_ratio(&diag(&[1.0, 0.1]), &e2), 0.1);
    }

    #[test]
    fn lower_bound_and_monotone_in_k() {
        let m = generated(60, 1e3, 5);
        let truth = linalg::condition_number(&m);
        let mut last_lz = 0.0;
        let mut last_bd = 0.0;
        for k in 1..=15 {
            let lz = estimate_lanczos_inv(&m, k).unwrap().value;
            let bd = estimate_bidiag(&m, k, 9).unwrap().value;
            assert!(lz <= truth * (1.0 + 1e-8) && bd <= truth * (1.0 + 1e-8));
            assert!(lz >= last_lz * (1.0 - 1e-12) && bd >= last_bd * (1.0 - 1e-12));
            last_lz = lz;
            last_bd = bd;
        }
    }

    #[test]
    fn lsqr_is_close_for_moderate_condition() {
        let m = generated(80, 1e2, 6);
        let truth = linalg::condition_number(&m);
        let e = estimate(CondMethod::RandomizedLsqr, &m, 20, 7).unwrap();
        assert!(e.converged);
        assert!(e.value <= truth * 10.0 && e.value >= truth / 10.0, "{e:?} vs {truth}");
    }

    #[test]
    fn rank_deficient_input_rejected() {
        let mut m = DMatrix::<f64>::identity(4, 3);
        m.column_mut(2).fill(0.0);
        assert!(matches!(estimate_lanczos_inv(&m, 3), Err(Error::RankDeficient { .. })));
        assert!(estimate_lanczos_inv(&DMatrix::zeros(2, 3), 3).is_err());
    }

    #[test]
    fn choice_examples() {
        assert_eq!(choose_formulation(1e2, 1e2), Choice::Either);
        assert_eq!(choose_formulation(1e7, 1e2), Choice::Hat);
        assert_eq!(choose_formulation(1e2, 1e7), Choice::Tilde);
        assert_eq!(choose_formulation(2.0, 1.0), Choice::Either);
        assert_eq!(Choice::Either.formulation(), Formulation::Hat);
        assert_eq!("LSQR".parse::<CondMethod>().unwrap(), CondMethod::RandomizedLsqr);
    }

    proptest! {
        #[test]
        fn choice_is_swap_symmetric(ka in 1.0f64..1e8, kb in 1.0f64..1e8) {
            let mirrored = match choose_formulation(kb, ka) {
                Choice::Hat => Choice::Tilde,
                Choice::Tilde => Choice::Hat,
                Choice::Either => Choice::Either,
            };
            prop_assert_eq!(choose_formulation(ka, kb), mirrored);
        }
    }
}
