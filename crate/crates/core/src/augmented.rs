//! The two augmented symmetric-definite pencils of a matrix pair and their
//! exact eigendecompositions assembled from GSVD factors.
//!
//! * Hat: `M = [[0, A], [A^T, 0]]`, `N = blockdiag(I_m, B^T B)`; positive
//!   eigenvalues are the generalized singular values `sigma_i`.
//! * Tilde: `M = [[0, B], [B^T, 0]]`, `N = blockdiag(I_p, A^T A)`; positive
//!   eigenvalues are `1 / sigma_i`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::oracle::GsvdFactors;
use crate::problems::MatrixPair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    Hat,
    Tilde,
}

impl Formulation {
    pub fn as_str(self) -> &'static str {
        match self {
            Formulation::Hat => "hat",
            Formulation::Tilde => "tilde",
        }
    }

    pub fn other(self) -> Self {
        match self {
            Formulation::Hat => Formulation::Tilde,
            Formulation::Tilde => Formulation::Hat,
        }
    }
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Formulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hat" => Ok(Formulation::Hat),
            "tilde" => Ok(Formulation::Tilde),
            other => Err(Error::InvalidArgument(format!("unknown formulation `{other}`"))),
        }
    }
}

/// Spectral norms of an injected perturbation `(dM, dN)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InjectedNorms {
    pub delta_m: f64,
    pub delta_n: f64,
}

#[derive(Debug, Clone)]
pub struct AugmentedPencil {
    m: DMatrix<f64>,
    n: DMatrix<f64>,
    form: Formulation,
    dims: (usize, usize, usize),
    /// Lower Cholesky factor of the Gram block of `N`, valid while `N` is
    /// the unperturbed `blockdiag(I, G^T G)`.
    gram_factor: Option<DMatrix<f64>>,
    injected: Option<InjectedNorms>,
}

impl AugmentedPencil {
    pub fn lhs(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn rhs(&self) -> &DMatrix<f64> {
        &self.n
    }

    pub fn form(&self) -> Formulation {
        self.form
    }

    /// `(m, p, n)` of the pair the pencil was built from.
    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn order(&self) -> usize {
        self.m.nrows()
    }

    /// Length of the leading block: `m` for Hat, `p` for Tilde.
    pub fn top_len(&self) -> usize {
        let (m, p, _) = self.dims;
        match self.form {
            Formulation::Hat => m,
            Formulation::Tilde => p,
        }
    }

    pub fn injected(&self) -> Option<InjectedNorms> {
        self.injected
    }

    /// Lower triangular `L` with `N = L L^T`.
    pub fn cholesky_factor(&self) -> Result<DMatrix<f64>> {
        match &self.gram_factor {
            Some(g) => {
                let top = self.top_len();
                let d = self.order();
                let mut l = DMatrix::zeros(d, d);
                l.view_mut((0, 0), (top, top)).fill_with_identity();
                l.view_mut((top, top), (d - top, d - top)).copy_from(g);
                Ok(l)
            }
            None => Cholesky::new(self.n.clone())
                .map(|c| c.l())
                .ok_or(Error::NotPositiveDefinite("N")),
        }
    }

    /// Replaces `(M, N)` by a perturbed copy.
    pub(crate) fn with_perturbation(
        &self,
        m: DMatrix<f64>,
        n: DMatrix<f64>,
        injected: InjectedNorms,
    ) -> Self {
        AugmentedPencil {
            m,
            n,
            form: self.form,
            dims: self.dims,
            gram_factor: None,
            injected: Some(injected),
        }
    }
}

/// `G^T G` with both triangles taken from the same dot products.
fn gram(g: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = g.transpose() * g;
    let n = out.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            out[(j, i)] = out[(i, j)];
        }
    }
    out
}

fn assemble(top: &DMatrix<f64>, spd: &DMatrix<f64>, form: Formulation, dims: (usize, usize, usize)) -> Result<AugmentedPencil> {
    let (rows, n) = top.shape();
    let d = rows + n;
    let mut m = DMatrix::zeros(d, d);
    m.view_mut((0, rows), (rows, n)).copy_from(top);
    m.view_mut((rows, 0), (n, rows)).copy_from(&top.transpose());

    let g = gram(spd);
    let factor = Cholesky::new(g.clone()).ok_or(Error::RankDeficient {
        what: match form {
            Formulation::Hat => "B",
            Formulation::Tilde => "A",
        },
        detail: "Cholesky factorization of the Gram matrix failed".into(),
    })?;
    let mut nmat = DMatrix::zeros(d, d);
    nmat.view_mut((0, 0), (rows, rows)).fill_with_identity();
    nmat.view_mut((rows, rows), (n, n)).copy_from(&g);
    Ok(AugmentedPencil {
        m,
        n: nmat,
        form,
        dims,
        gram_factor: Some(factor.l()),
        injected: None,
    })
}

pub fn build_hat(pair: &MatrixPair) -> Result<AugmentedPencil> {
    assemble(pair.a(), pair.b(), Formulation::Hat, pair.dims())
}

pub fn build_tilde(pair: &MatrixPair) -> Result<AugmentedPencil> {
    assemble(pair.b(), pair.a(), Formulation::Tilde, pair.dims())
}

pub fn build(pair: &MatrixPair, form: Formulation) -> Result<AugmentedPencil> {
    match form {
        Formulation::Hat => build_hat(pair),
        Formulation::Tilde => build_tilde(pair),
    }
}

#[derive(Debug, Clone)]
pub struct ExactEigenStructure {
    /// `(Sigma, -Sigma, 0)` for Hat, `(Sigma^{-1}, -Sigma^{-1}, 0)` for Tilde.
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

pub fn exact_structure_from_gsvd(
    factors: &GsvdFactors,
    form: Formulation,
) -> Result<ExactEigenStructure> {
    let n = factors.n();
    let shapes_ok = factors.x.nrows() == n
        && factors.u.ncols() == n
        && factors.v.ncols() == n
        && factors.alpha.len() == n
        && factors.beta.len() == n
        && factors.sigma.len() == n;
    if !shapes_ok {
        return Err(Error::Contract("factor shapes disagree".into()));
    }
    for i in 0..n {
        let (a, b) = (factors.alpha[i], factors.beta[i]);
        if !(a > 0.0 && b > 0.0) || (a * a + b * b - 1.0).abs() > 1e-10 {
            return Err(Error::Contract(format!(
                "component {i}: alpha^2 + beta^2 = {:e}",
                a * a + b * b
            )));
        }
    }

    let (left, scale) = match form {
        Formulation::Hat => (&factors.u, &factors.beta),
        Formulation::Tilde => (&factors.v, &factors.alpha),
    };
    let top = left.nrows();
    let d = top + n;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut w = factors.x.clone();
    for (j, mut col) in w.column_iter_mut().enumerate() {
        col /= scale[j];
    }
    let perp = linalg::orthonormal_complement(left);

    let mut y = DMatrix::zeros(d, d);
    y.view_mut((0, 0), (top, n)).copy_from(&(left * h));
    y.view_mut((0, n), (top, n)).copy_from(&(left * h));
    y.view_mut((0, 2 * n), (top, top - n)).copy_from(&perp);
    y.view_mut((top, 0), (n, n)).copy_from(&(&w * h));
    y.view_mut((top, n), (n, n)).copy_from(&(&w * -h));

    let positive = match form {
        Formulation::Hat => factors.sigma.clone(),
        Formulation::Tilde => factors.sigma.map(|s| 1.0 / s),
    };
    let mut values = DVector::zeros(d);
    values.rows_mut(0, n).copy_from(&positive);
    values.rows_mut(n, n).copy_from(&(-&positive));
    Ok(ExactEigenStructure { values, vectors: y })
}
