//! Dense symmetric-definite generalized eigensolver and controlled
//! perturbation of augmented pencils.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::augmented::{AugmentedPencil, InjectedNorms};
use crate::error::{Error, Result};
use crate::linalg::{self, rng_from_seed, spectral_norm};

/// Eigenpair `(lambda, w)` of `M w = lambda N w`, with `w^T N w = 1`.
#[derive(Debug, Clone)]
pub struct GenEigenpair {
    pub value: f64,
    pub vector: DVector<f64>,
    /// `||M w - lambda N w|| / ((||M|| + |lambda| ||N||) ||w||)`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationSpec {
    pub epsilon: f64,
    pub seed: u64,
}

impl PerturbationSpec {
    pub fn new(epsilon: f64, seed: u64) -> Self {
        PerturbationSpec { epsilon, seed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    /// Largest positive eigenvalues.
    Largest,
    /// Positive eigenvalues closest to the shift.
    Near(f64),
}

/// All `d` eigenpairs, values descending.
///
/// Reduces to the standard problem `L^{-1} M L^{-T} q = lambda q` with
/// `N = L L^T` and back-transforms `w = L^{-T} q`.
pub fn solve_pencil(pencil: &AugmentedPencil) -> Result<Vec<GenEigenpair>> {
    let l = pencil.cholesky_factor()?;
    let m = pencil.lhs();
    let d = pencil.order();

    let lm = l
        .solve_lower_triangular(m)
        .ok_or(Error::NotPositiveDefinite("N"))?;
    let c = l
        .solve_lower_triangular(&lm.transpose())
        .ok_or(Error::NotPositiveDefinite("N"))?;
    let eig = SymmetricEigen::new(linalg::symmetric_part(&c));

    let lt = l.transpose();
    let w = lt
        .solve_upper_triangular(&eig.eigenvectors)
        .ok_or(Error::NotPositiveDefinite("N"))?;

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let norm_m = spectral_norm(m);
    let norm_n = spectral_norm(pencil.rhs());
    let mw = m * &w;
    let nw = pencil.rhs() * &w;
    Ok(order
        .into_iter()
        .map(|k| {
            let value = eig.eigenvalues[k];
            let vector = w.column(k).into_owned();
            let r = (mw.column(k) - nw.column(k) * value).norm();
            let denom = (norm_m + value.abs() * norm_n) * vector.norm();
            let residual = if denom > 0.0 { r / denom } else { r };
            GenEigenpair {
                value,
                vector,
                residual,
            }
        })
        .collect())
}

/// Symmetric Gaussian matrix rescaled to spectral norm `target`.
fn symmetric_noise(d: usize, target: f64, rng: &mut linalg::Rng) -> DMatrix<f64> {
    let g = linalg::gaussian_matrix(d, d, rng);
    let e = linalg::symmetric_part(&g);
    let norm = spectral_norm(&e);
    e * (target / norm)
}

/// `(M + E, N + F)` with random symmetric `E`, `F` of norms `eps ||M||` and
/// `eps ||N||`.
pub fn perturb_pencil(pencil: &AugmentedPencil, spec: PerturbationSpec) -> Result<AugmentedPencil> {
    let eps = spec.epsilon;
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "perturbation epsilon must be finite and non-negative, got {eps}"
        )));
    }
    if eps == 0.0 {
        return Ok(pencil.clone());
    }
    let (nmax, nmin) = linalg::extreme_singular_values(pencil.rhs());
    let limit = nmin / (2.0 * nmax);
    if eps >= limit {
        return Err(Error::PerturbationTooLarge {
            epsilon: eps,
            limit,
        });
    }

    let d = pencil.order();
    let mut rng = rng_from_seed(spec.seed);
    let delta_m = spectral_norm(pencil.lhs()) * eps;
    let delta_n = nmax * eps;
    let e = symmetric_noise(d, delta_m, &mut rng);
    let f = symmetric_noise(d, delta_n, &mut rng);
    let m = pencil.lhs() + e;
    let n = pencil.rhs() + f;
    if Cholesky::new(n.clone()).is_none() {
        return Err(Error::PerturbationTooLarge {
            epsilon: eps,
            limit,
        });
    }
    Ok(pencil.with_perturbation(m, n, InjectedNorms { delta_m, delta_n }))
}

/// The `count` positive-eigenvalue pairs closest to `target`, closest first.
///
/// Ties go to the larger eigenvalue, then to the earlier input position.
pub fn select_eigenpairs(
    pairs: &[GenEigenpair],
    target: Target,
    count: usize,
) -> Result<Vec<GenEigenpair>> {
    let mut candidates: Vec<(usize, &GenEigenpair)> =
        pairs.iter().enumerate().filter(|(_, p)| p.value > 0.0).collect();
    if candidates.len() < count {
        return Err(Error::Selection {
            requested: count,
            available: candidates.len(),
        });
    }
    candidates.sort_by(|(i, a), (j, b)| {
        let by_distance = match target {
            Target::Largest => std::cmp::Ordering::Equal,
            Target::Near(tau) => (a.value - tau).abs().total_cmp(&(b.value - tau).abs()),
        };
        by_distance
            .then(b.value.total_cmp(&a.value))
            .then(i.cmp(j))
    });
    Ok(candidates
        .into_iter()
        .take(count)
        .map(|(_, p)| p.clone())
        .collect())
}
