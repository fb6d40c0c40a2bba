//! First-order perturbation bounds for the eigenpairs of the augmented
//! pencils and for the GSVD components recovered from them.
//!
//! Perturbation norms follow the pencil roles: for Hat, `eps_e` bounds the
//! change of `M = [[0, A], [A^T, 0]]` and `eps_f` the change of
//! `N = blockdiag(I, B^T B)`. For Tilde, `eps_e` bounds the change of
//! `N = blockdiag(I, A^T A)` and `eps_f` that of `M = [[0, B], [B^T, 0]]`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::augmented::Formulation;
use crate::error::{Error, Result};
use crate::linalg;
use crate::metrics::sin_angle;
use crate::oracle::GsvdFactors;
use crate::problems::MatrixPair;

/// Stand-in for the unobservable `1 + O(eps)` factors.
pub const SLACK: f64 = 1.1;

/// `‖A‖`, `‖B‖`, `‖A^+‖`, `‖B^+‖` by full SVD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairNorms {
    pub a: f64,
    pub b: f64,
    pub a_pinv: f64,
    pub b_pinv: f64,
}

impl PairNorms {
    pub fn new(pair: &MatrixPair) -> Self {
        let (a, amin) = linalg::extreme_singular_values(pair.a());
        let (b, bmin) = linalg::extreme_singular_values(pair.b());
        PairNorms {
            a,
            b,
            a_pinv: 1.0 / amin,
            b_pinv: 1.0 / bmin,
        }
    }

    /// `‖N^{-1}‖` of the pencil: `max{1, ‖B^+‖^2}` for Hat,
    /// `max{1, ‖A^+‖^2}` for Tilde.
    pub fn cond_term(&self, form: Formulation) -> f64 {
        let p = match form {
            Formulation::Hat => self.b_pinv,
            Formulation::Tilde => self.a_pinv,
        };
        (p * p).max(1.0)
    }

    /// The matrix mapping `x` to the recovered left vector that is not
    /// part of the eigenvector: `B` for Hat, `A` for Tilde.
    pub fn mapped_norm(&self, form: Formulation) -> f64 {
        match form {
            Formulation::Hat => self.b,
            Formulation::Tilde => self.a,
        }
    }
}

/// Chordal error bound for a computed generalized singular value.
///
/// Hat: `(‖x‖^2 + beta^2) / (2 beta)`, Tilde: `(‖x‖^2 + alpha^2) / (2 alpha)`,
/// times `sqrt(eps_e^2 + eps_f^2)` and [`SLACK`].
pub fn bound_sigma(form: Formulation, x_norm: f64, alpha: f64, beta: f64, eps_e: f64, eps_f: f64) -> f64 {
    let s = match form {
        Formulation::Hat => beta,
        Formulation::Tilde => alpha,
    };
    (x_norm * x_norm + s * s) / (2.0 * s) * eps_e.hypot(eps_f) * SLACK
}

/// The same bound in terms of an exact eigenvector `y` of `(M, N)`:
/// `‖y‖^2 / sqrt((y^T M y)^2 + (y^T N y)^2)`, times the perturbation size
/// and [`SLACK`].
pub fn bound_sigma_from_eigenvector(
    m: &DMatrix<f64>,
    n: &DMatrix<f64>,
    y: &DVector<f64>,
    eps_e: f64,
    eps_f: f64,
) -> f64 {
    let ym = y.dot(&(m * y));
    let yn = y.dot(&(n * y));
    y.norm_squared() / ym.hypot(yn) * eps_e.hypot(eps_f) * SLACK
}

/// `min_i min{|1 - t_i|, 1}` over the separation ratios, or 1 when empty.
fn separation(ratios: impl Iterator<Item = f64>) -> f64 {
    ratios.map(|t| (1.0 - t).abs().min(1.0)).fold(1.0, f64::min)
}

/// Angle bound for the computed eigenvector of the pencil `form`.
///
/// `sigma` is the computed generalized singular value and `others` the
/// remaining exact ones; `cond_term` is [`PairNorms::cond_term`]. Returns
/// `+inf` when `sigma` coincides with one of `others`.
pub fn bound_eigvec(
    form: Formulation,
    sigma: f64,
    others: &[f64],
    cond_term: f64,
    eps_e: f64,
    eps_f: f64,
) -> f64 {
    let pert = eps_e.hypot(sigma * eps_f);
    let (sep, scale) = match form {
        Formulation::Hat => (separation(others.iter().map(|&s| s / sigma)), sigma),
        Formulation::Tilde => (separation(others.iter().map(|&s| sigma / s)), 1.0),
    };
    if sep == 0.0 {
        return f64::INFINITY;
    }
    cond_term / (scale * sep) * pert
}

/// `(gamma1, gamma2)`: the minima of `min{|1 - s_i/s|, 1}` and
/// `min{|1 - s/s_i|, 1}` over `others`.
pub fn gamma_pair(sigma: f64, others: &[f64]) -> (f64, f64) {
    let g1 = separation(others.iter().map(|&s| s / sigma));
    let g2 = separation(others.iter().map(|&s| sigma / s));
    (g1, g2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    X,
    U,
    V,
}

impl Which {
    pub const ALL: [Which; 3] = [Which::X, Which::U, Which::V];

    pub fn as_str(self) -> &'static str {
        match self {
            Which::X => "x",
            Which::U => "u",
            Which::V => "v",
        }
    }
}

/// Factor relating the angle of a recovered vector to the eigenvector angle.
///
/// `x_scaled_norm` is `‖x / beta‖` for Hat and `‖x / alpha‖` for Tilde.
pub fn recovered_factor(form: Formulation, which: Which, x_scaled_norm: f64, matrix_norm: f64) -> f64 {
    let s2 = x_scaled_norm * x_scaled_norm;
    let stacked = (1.0 + s2).sqrt();
    match (form, which) {
        (_, Which::X) => (1.0 + 1.0 / s2).sqrt(),
        (Formulation::Hat, Which::U) | (Formulation::Tilde, Which::V) => stacked,
        (Formulation::Hat, Which::V) | (Formulation::Tilde, Which::U) => matrix_norm * stacked,
    }
}

pub fn bound_recovered(
    form: Formulation,
    which: Which,
    x_scaled_norm: f64,
    matrix_norm: f64,
    eigvec_bound: f64,
) -> f64 {
    recovered_factor(form, which, x_scaled_norm, matrix_norm) * eigvec_bound
}

/// `sqrt(1 + max{‖a‖^2/‖b‖^2, ‖b‖^2/‖a‖^2})`.
pub fn rho_factor(a_norm: f64, b_norm: f64) -> Result<f64> {
    if !(a_norm > 0.0 && b_norm > 0.0) {
        return Err(Error::Domain(format!(
            "rho needs positive norms, got {a_norm} and {b_norm}"
        )));
    }
    let r = (a_norm / b_norm).max(b_norm / a_norm);
    Ok((1.0 + r * r).sqrt())
}

/// Both sides of the three inequalities linking the angles of two blocks
/// to the angle of the stacked vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StackedAngleCheck {
    /// `‖a‖^2 sin^2(a', a) + ‖b‖^2 sin^2(b', b)` vs `(‖a‖^2 + ‖b‖^2) sin^2`.
    pub weighted: (f64, f64),
    /// `min{sin(a', a), sin(b', b)}` vs the stacked sine.
    pub min: (f64, f64),
    /// `sqrt(sin^2(a', a) + sin^2(b', b))` vs `rho` times the stacked sine.
    pub rho: (f64, f64),
}

impl StackedAngleCheck {
    pub fn holds(&self, slack: f64) -> bool {
        [self.weighted, self.min, self.rho]
            .iter()
            .all(|&(lhs, rhs)| lhs <= rhs + slack * rhs.max(1.0))
    }
}

pub fn stacked_angle_check(
    a: &DVector<f64>,
    a_approx: &DVector<f64>,
    b: &DVector<f64>,
    b_approx: &DVector<f64>,
) -> Result<StackedAngleCheck> {
    let sa = sin_angle(a_approx, a)?;
    let sb = sin_angle(b_approx, b)?;
    let stack = |top: &DVector<f64>, bottom: &DVector<f64>| {
        let mut v = DVector::zeros(top.len() + bottom.len());
        v.rows_mut(0, top.len()).copy_from(top);
        v.rows_mut(top.len(), bottom.len()).copy_from(bottom);
        v
    };
    let s = sin_angle(&stack(a_approx, b_approx), &stack(a, b))?;
    let (na2, nb2) = (a.norm_squared(), b.norm_squared());
    let rho = rho_factor(a.norm(), b.norm())?;
    Ok(StackedAngleCheck {
        weighted: (na2 * sa * sa + nb2 * sb * sb, (na2 + nb2) * s * s),
        min: (sa.min(sb), s),
        rho: (sa.hypot(sb), rho * s),
    })
}

/// Per-component norm relations of the right generalized singular vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XNormCheck {
    pub x_norm: f64,
    /// `1 / sqrt(‖A‖^2 + ‖B‖^2)`.
    pub x_lower: f64,
    /// `min{‖A^+‖, ‖B^+‖}`.
    pub x_upper: f64,
    /// `(‖x‖^2 + beta^2) / (‖x‖^2 + alpha^2)`.
    pub ratio: f64,
    /// `1 + ‖A‖^2 + ‖B‖^2`; the ratio lies strictly inside
    /// `(1 / ratio_limit, ratio_limit)`.
    pub ratio_limit: f64,
    /// `‖x / beta‖` against `1 / ‖B‖`.
    pub x_beta: f64,
    pub x_beta_lower: f64,
    /// `‖x / alpha‖` against `1 / ‖A‖`.
    pub x_alpha: f64,
    pub x_alpha_lower: f64,
}

impl XNormCheck {
    pub fn x_bracket_holds(&self, slack: f64) -> bool {
        self.x_norm >= self.x_lower * (1.0 - slack) && self.x_norm <= self.x_upper * (1.0 + slack)
    }

    pub fn ratio_bracket_holds(&self, slack: f64) -> bool {
        self.ratio > (1.0 - slack) / self.ratio_limit && self.ratio < self.ratio_limit * (1.0 + slack)
    }

    pub fn scaled_lower_bounds_hold(&self, slack: f64) -> bool {
        self.x_beta >= self.x_beta_lower * (1.0 - slack)
            && self.x_alpha >= self.x_alpha_lower * (1.0 - slack)
    }

    pub fn holds(&self, slack: f64) -> bool {
        self.x_bracket_holds(slack) && self.ratio_bracket_holds(slack) && self.scaled_lower_bounds_hold(slack)
    }
}

pub fn scaled_x_lower_bounds(factors: &GsvdFactors, norms: &PairNorms) -> Vec<XNormCheck> {
    let stacked2 = norms.a * norms.a + norms.b * norms.b;
    (0..factors.n())
        .map(|i| {
            let xn = factors.x.column(i).norm();
            let (al, be) = (factors.alpha[i], factors.beta[i]);
            XNormCheck {
                x_norm: xn,
                x_lower: 1.0 / stacked2.sqrt(),
                x_upper: norms.a_pinv.min(norms.b_pinv),
                ratio: (xn * xn + be * be) / (xn * xn + al * al),
                ratio_limit: 1.0 + stacked2,
                x_beta: xn / be,
                x_beta_lower: 1.0 / norms.b,
                x_alpha: xn / al,
                x_alpha_lower: 1.0 / norms.a,
            }
        })
        .collect()
}

/// Perturbation norms seen by one pencil, in the roles described in the
/// module documentation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PencilEps {
    pub eps_e: f64,
    pub eps_f: f64,
}

impl PencilEps {
    /// Maps `(‖dM‖, ‖dN‖)` of a pencil to its `(eps_e, eps_f)`.
    pub fn from_pencil_norms(form: Formulation, delta_m: f64, delta_n: f64) -> Self {
        match form {
            Formulation::Hat => PencilEps {
                eps_e: delta_m,
                eps_f: delta_n,
            },
            Formulation::Tilde => PencilEps {
                eps_e: delta_n,
                eps_f: delta_m,
            },
        }
    }
}

/// All bounds of one formulation for one component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FormBounds {
    pub sigma: f64,
    pub eigvec: f64,
    pub x: f64,
    pub u: f64,
    pub v: f64,
}

impl FormBounds {
    pub fn get(&self, which: Which) -> f64 {
        match which {
            Which::X => self.x,
            Which::U => self.u,
            Which::V => self.v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComponentBounds {
    pub index: usize,
    pub sigma: f64,
    pub hat: FormBounds,
    pub tilde: FormBounds,
    pub gamma1: f64,
    pub gamma2: f64,
    /// Stacked-angle amplification for `[u; x/beta]` and `[v; x/alpha]`.
    pub rho_hat: f64,
    pub rho_tilde: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub eps_hat: PencilEps,
    pub eps_tilde: PencilEps,
    pub components: Vec<ComponentBounds>,
}

/// Bounds of one formulation for component `i`, evaluated at the computed
/// value `sigma_computed`.
pub fn form_bounds(
    form: Formulation,
    factors: &GsvdFactors,
    norms: &PairNorms,
    i: usize,
    sigma_computed: f64,
    eps: PencilEps,
) -> FormBounds {
    let others: Vec<f64> = (0..factors.n())
        .filter(|&j| j != i)
        .map(|j| factors.sigma[j])
        .collect();
    let xn = factors.x.column(i).norm();
    let (al, be) = (factors.alpha[i], factors.beta[i]);
    let eig = bound_eigvec(form, sigma_computed, &others, norms.cond_term(form), eps.eps_e, eps.eps_f);
    let scaled = match form {
        Formulation::Hat => xn / be,
        Formulation::Tilde => xn / al,
    };
    let mn = norms.mapped_norm(form);
    FormBounds {
        sigma: bound_sigma(form, xn, al, be, eps.eps_e, eps.eps_f),
        eigvec: eig,
        x: bound_recovered(form, Which::X, scaled, mn, eig),
        u: bound_recovered(form, Which::U, scaled, mn, eig),
        v: bound_recovered(form, Which::V, scaled, mn, eig),
    }
}

/// Evaluates every bound for every component. Computed values default to
/// the exact ones when not supplied.
pub fn evaluate_bounds(
    factors: &GsvdFactors,
    norms: &PairNorms,
    eps_hat: PencilEps,
    eps_tilde: PencilEps,
    sigma_hat: Option<&[f64]>,
    sigma_tilde: Option<&[f64]>,
) -> BoundReport {
    let n = factors.n();
    let components = (0..n)
        .map(|i| {
            let s = factors.sigma[i];
            let others: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| factors.sigma[j]).collect();
            let (gamma1, gamma2) = gamma_pair(s, &others);
            let xn = factors.x.column(i).norm();
            ComponentBounds {
                index: i,
                sigma: s,
                hat: form_bounds(Formulation::Hat, factors, norms, i, sigma_hat.map_or(s, |v| v[i]), eps_hat),
                tilde: form_bounds(
                    Formulation::Tilde,
                    factors,
                    norms,
                    i,
                    sigma_tilde.map_or(s, |v| v[i]),
                    eps_tilde,
                ),
                gamma1,
                gamma2,
                rho_hat: rho_factor(1.0, xn / factors.beta[i]).unwrap_or(f64::INFINITY),
                rho_tilde: rho_factor(1.0, xn / factors.alpha[i]).unwrap_or(f64::INFINITY),
            }
        })
        .collect();
    BoundReport {
        eps_hat,
        eps_tilde,
        components,
    }
}
