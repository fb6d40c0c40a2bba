//! Reference GSVD through a thin QR of the stacked matrix followed by a CS
//! decomposition of the two orthonormal blocks.

use nalgebra::{DMatrix, DVector, QR};

use crate::error::{Error, Result};
use crate::linalg;
use crate::problems::MatrixPair;

/// `A = U diag(alpha) X^{-1}`, `B = V diag(beta) X^{-1}` with
/// `alpha_i^2 + beta_i^2 = 1` and `sigma_i = alpha_i / beta_i` descending.
#[derive(Debug, Clone)]
pub struct GsvdFactors {
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub x: DMatrix<f64>,
    pub alpha: DVector<f64>,
    pub beta: DVector<f64>,
    pub sigma: DVector<f64>,
}

impl GsvdFactors {
    pub fn n(&self) -> usize {
        self.x.ncols()
    }

    /// `X^{-1}` by LU; only meant for verification.
    pub fn x_inverse(&self) -> Option<DMatrix<f64>> {
        self.x.clone().try_inverse()
    }
}

/// Norm data of `X`.
#[derive(Debug, Clone)]
pub struct XNorms {
    pub norm_x: f64,
    pub norm_x_inv: f64,
    pub column_norms: DVector<f64>,
}

/// One component before sorting.
struct Component {
    alpha: f64,
    beta: f64,
    u: DVector<f64>,
    v: DVector<f64>,
    w: DVector<f64>,
}

const SPLIT: f64 = std::f64::consts::FRAC_1_SQRT_2;

pub fn gsvd_reference(pair: &MatrixPair) -> Result<GsvdFactors> {
    let (m, p, n) = pair.dims();
    let mut stacked = DMatrix::zeros(m + p, n);
    stacked.rows_mut(0, m).copy_from(pair.a());
    stacked.rows_mut(m, p).copy_from(pair.b());

    let qr = QR::new(stacked);
    let r = qr.r();
    let q = qr.q();
    let rmax = r.diagonal().iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let rmin = r.diagonal().iter().fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
    if !(rmin > n as f64 * f64::EPSILON * rmax) {
        return Err(Error::RankDeficient {
            what: "[A; B]",
            detail: format!("R diagonal ranges over [{rmin:e}, {rmax:e}]"),
        });
    }
    let q1 = q.rows(0, m).into_owned();
    let q2 = q.rows(m, p).into_owned();

    // Cosines come from the SVD of Q1 where they are small, sines from the
    // SVD of Q2 where those are small; the complementary value is a column
    // norm in each case.
    let no_conv = |what| Error::Domain(format!("SVD of {what} did not converge"));
    let svd1 = linalg::svd(&q1).ok_or_else(|| no_conv("Q1"))?;
    let svd2 = linalg::svd(&q2).ok_or_else(|| no_conv("Q2"))?;
    let (u1, vt1) = (&svd1.u, &svd1.v_t);
    let (v2, vt2) = (&svd2.u, &svd2.v_t);

    let small_alpha = svd1.s.iter().filter(|&&a| a <= SPLIT).count();
    let mut comps = Vec::with_capacity(n);
    for i in (n - small_alpha)..n {
        let w = vt1.row(i).transpose();
        let t = &q2 * &w;
        let beta = t.norm();
        comps.push(Component {
            alpha: svd1.s[i],
            beta,
            u: u1.column(i).into_owned(),
            v: t / beta,
            w,
        });
    }
    for j in small_alpha..n {
        let w = vt2.row(j).transpose();
        let s = &q1 * &w;
        let alpha = s.norm();
        comps.push(Component {
            alpha,
            beta: svd2.s[j],
            u: s / alpha,
            v: v2.column(j).into_owned(),
            w,
        });
    }

    for c in &comps {
        if !(c.alpha > 0.0 && c.beta > 0.0) {
            return Err(Error::RankDeficient {
                what: "A or B",
                detail: format!("zero cosine or sine (alpha={:e}, beta={:e})", c.alpha, c.beta),
            });
        }
    }
    comps.sort_by(|a, b| (b.alpha / b.beta).total_cmp(&(a.alpha / a.beta)));

    let mut u = DMatrix::zeros(m, n);
    let mut v = DMatrix::zeros(p, n);
    let mut w = DMatrix::zeros(n, n);
    for (k, c) in comps.iter().enumerate() {
        u.set_column(k, &c.u);
        v.set_column(k, &c.v);
        w.set_column(k, &c.w);
    }
    let x = r
        .solve_upper_triangular(&w)
        .ok_or_else(|| Error::RankDeficient {
            what: "[A; B]",
            detail: "triangular solve with R failed".into(),
        })?;
    let alpha = DVector::from_iterator(n, comps.iter().map(|c| c.alpha));
    let beta = DVector::from_iterator(n, comps.iter().map(|c| c.beta));
    let sigma = alpha.component_div(&beta);
    Ok(GsvdFactors {
        u,
        v,
        x,
        alpha,
        beta,
        sigma,
    })
}

pub fn x_matrix_norms(factors: &GsvdFactors) -> XNorms {
    let (norm_x, smin) = linalg::extreme_singular_values(&factors.x);
    let column_norms = DVector::from_iterator(
        factors.n(),
        factors.x.column_iter().map(|c| c.norm()),
    );
    XNorms {
        norm_x,
        norm_x_inv: 1.0 / smin,
        column_norms,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{orthonormality_defect, spectral_norm};
    use crate::problems::gen_random_pair;

    fn residuals(pair: &MatrixPair, f: &GsvdFactors) -> (f64, f64) {
        let xi = f.x_inverse().unwrap();
        let ra = pair.a() - &f.u * DMatrix::from_diagonal(&f.alpha) * &xi;
        let rb = pair.b() - &f.v * DMatrix::from_diagonal(&f.beta) * &xi;
        (
            spectral_norm(&ra) / spectral_norm(pair.a()),
            spectral_norm(&rb) / spectral_norm(pair.b()),
        )
    }

    #[test]
    fn symmetric_case() {
        let a = DMatrix::<f64>::identity(2, 2) * SPLIT;
        let pair = MatrixPair::new(a.clone(), a, "sym").unwrap();
        let f = gsvd_reference(&pair).unwrap();
        for i in 0..2 {
            assert!((f.alpha[i] - SPLIT).abs() < 1e-15);
            assert!((f.beta[i] - SPLIT).abs() < 1e-15);
            assert!((f.sigma[i] - 1.0).abs() < 1e-15);
        }
        assert!(orthonormality_defect(&f.u) < 1e-15);
        assert!(orthonormality_defect(&f.v) < 1e-15);
    }

    #[test]
    fn diagonal_case() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.5]));
        let pair = MatrixPair::new(a, DMatrix::identity(2, 2), "diag").unwrap();
        let f = gsvd_reference(&pair).unwrap();
        assert!((f.sigma[0] - 1.0).abs() < 1e-15);
        assert!((f.sigma[1] - 0.5).abs() < 1e-15);
        assert!((f.alpha[0] - SPLIT).abs() < 1e-15);
        assert!((f.alpha[1] - 0.5 / 1.25_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn random_pair_invariants() {
        let pair = gen_random_pair(40, 25, 30, 1e3, 1e2, 17).unwrap();
        let f = gsvd_reference(&pair).unwrap();
        for i in 0..f.n() {
            assert!((f.alpha[i].powi(2) + f.beta[i].powi(2) - 1.0).abs() <= 1e-13);
            let bx = (pair.b() * f.x.column(i)).norm();
            assert!((bx - f.beta[i]).abs() <= 1e-10 * f.beta[i]);
        }
        assert!(f.sigma.as_slice().windows(2).all(|w| w[0] >= w[1]));
        let (ra, rb) = residuals(&pair, &f);
        assert!(ra <= 1e-12 && rb <= 1e-12, "{ra:e} {rb:e}");
        assert!(orthonormality_defect(&f.u) <= 1e-12);
        assert!(orthonormality_defect(&f.v) <= 1e-12);
    }

    #[test]
    fn x_norm_bounds() {
        let pair = gen_random_pair(30, 20, 25, 50.0, 20.0, 2).unwrap();
        let f = gsvd_reference(&pair).unwrap();
        let xn = x_matrix_norms(&f);
        let (_, smin_a) = linalg::extreme_singular_values(pair.a());
        let (_, smin_b) = linalg::extreme_singular_values(pair.b());
        let pinv = (1.0 / smin_a).min(1.0 / smin_b);
        assert!(xn.norm_x <= pinv * (1.0 + 1e-10));
        let stacked_norm =
            (spectral_norm(pair.a()).powi(2) + spectral_norm(pair.b()).powi(2)).sqrt();
        assert!(xn.norm_x_inv <= stacked_norm * (1.0 + 1e-10));
    }

    #[test]
    fn identity_x_norms() {
        let f = GsvdFactors {
            u: DMatrix::identity(3, 3),
            v: DMatrix::identity(3, 3),
            x: DMatrix::identity(3, 3),
            alpha: DVector::from_element(3, SPLIT),
            beta: DVector::from_element(3, SPLIT),
            sigma: DVector::from_element(3, 1.0),
        };
        let xn = x_matrix_norms(&f);
        assert!((xn.norm_x - 1.0).abs() < 1e-15);
        assert!((xn.norm_x_inv - 1.0).abs() < 1e-15);
        assert!(xn.column_norms.iter().all(|&c| c == 1.0));
    }
}
