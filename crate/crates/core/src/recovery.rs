//! Recovery of GSVD components `(alpha, beta, u, v, x)` from eigenpairs of
//! either augmented pencil.

use nalgebra::DVector;

use crate::augmented::{self, Formulation};
use crate::eigensolve::{solve_pencil, GenEigenpair};
use crate::error::{Error, Result};
use crate::problems::MatrixPair;

#[derive(Debug, Clone)]
pub struct RecoveredComponent {
    pub form: Formulation,
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub u: DVector<f64>,
    pub v: DVector<f64>,
    pub x: DVector<f64>,
}

/// `beta = 1 / sqrt(1 + sigma^2)`, `alpha = sigma * beta`.
pub fn sigma_to_alphabeta(sigma: f64) -> Result<(f64, f64)> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Domain(format!(
            "generalized singular value must be positive and finite, got {sigma}"
        )));
    }
    let beta = 1.0 / sigma.hypot(1.0);
    Ok((sigma * beta, beta))
}

fn split(eig: &GenEigenpair, top: usize) -> Result<(DVector<f64>, DVector<f64>, f64)> {
    if !(eig.value > 0.0) {
        return Err(Error::Domain(format!(
            "recovery needs a positive eigenvalue, got {}",
            eig.value
        )));
    }
    let head = eig.vector.rows(0, top).into_owned();
    let tail = eig.vector.rows(top, eig.vector.len() - top).into_owned();
    let norm = head.norm();
    if norm == 0.0 {
        return Err(Error::DegenerateVector("leading block of the eigenvector is zero"));
    }
    Ok((head, tail, norm))
}

pub fn recover_from_hat(pair: &MatrixPair, eig: &GenEigenpair) -> Result<RecoveredComponent> {
    let (m, _, n) = pair.dims();
    if eig.vector.len() != m + n {
        return Err(Error::Contract(format!(
            "Hat eigenvector has length {}, expected {}",
            eig.vector.len(),
            m + n
        )));
    }
    let (wu, wx, nu) = split(eig, m)?;
    let sigma = eig.value;
    let (alpha, beta) = sigma_to_alphabeta(sigma)?;
    let u = wu / nu;
    let x = wx * (beta / nu);
    let bx = pair.b() * &x;
    let nb = bx.norm();
    if nb == 0.0 {
        return Err(Error::DegenerateVector("B x is zero"));
    }
    Ok(RecoveredComponent {
        form: Formulation::Hat,
        alpha,
        beta,
        sigma,
        u,
        v: bx / nb,
        x,
    })
}

pub fn recover_from_tilde(pair: &MatrixPair, eig: &GenEigenpair) -> Result<RecoveredComponent> {
    let (_, p, n) = pair.dims();
    if eig.vector.len() != p + n {
        return Err(Error::Contract(format!(
            "Tilde eigenvector has length {}, expected {}",
            eig.vector.len(),
            p + n
        )));
    }
    let (wv, wx, nv) = split(eig, p)?;
    let sigma = 1.0 / eig.value;
    let (alpha, beta) = sigma_to_alphabeta(sigma)?;
    let v = wv / nv;
    let x = wx * (alpha / nv);
    let ax = pair.a() * &x;
    let na = ax.norm();
    if na == 0.0 {
        return Err(Error::DegenerateVector("A x is zero"));
    }
    Ok(RecoveredComponent {
        form: Formulation::Tilde,
        alpha,
        beta,
        sigma,
        u: ax / na,
        v,
        x,
    })
}

pub fn recover(pair: &MatrixPair, form: Formulation, eig: &GenEigenpair) -> Result<RecoveredComponent> {
    match form {
        Formulation::Hat => recover_from_hat(pair, eig),
        Formulation::Tilde => recover_from_tilde(pair, eig),
    }
}

/// Recovers all `n` components from a full eigendecomposition of the
/// pencil `form`, sorted by descending `sigma`.
pub fn recover_from_eigenpairs(
    pair: &MatrixPair,
    form: Formulation,
    pairs: &[GenEigenpair],
) -> Result<Vec<RecoveredComponent>> {
    let (_, _, n) = pair.dims();
    let mut sorted: Vec<&GenEigenpair> = pairs.iter().collect();
    sorted.sort_by(|a, b| b.value.total_cmp(&a.value));
    let positive = sorted.iter().filter(|e| e.value > 0.0).count();
    if sorted.len() < n || !(sorted[n - 1].value > 0.0) {
        let nth = sorted.get(n - 1).map_or(f64::NAN, |e| e.value);
        let next = sorted.get(n).map_or(f64::NAN, |e| e.value);
        return Err(Error::SpectrumAnomaly {
            expected: n,
            found: positive,
            detail: format!(
                "{form} pencil: eigenvalue {n} is {nth:e}, eigenvalue {} is {next:e}",
                n + 1
            ),
        });
    }
    let mut out = sorted[..n]
        .iter()
        .map(|e| recover(pair, form, e))
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| b.sigma.total_cmp(&a.sigma));
    Ok(out)
}

pub fn recover_all(pair: &MatrixPair, form: Formulation) -> Result<Vec<RecoveredComponent>> {
    let pencil = augmented::build(pair, form)?;
    let pairs = solve_pencil(&pencil)?;
    recover_from_eigenpairs(pair, form, &pairs)
}
