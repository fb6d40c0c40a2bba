//! Accuracy measures: chordal distance, vector angles and the win
//! percentage / mean order-of-magnitude gap between the two formulations.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracle::GsvdFactors;
use crate::recovery::RecoveredComponent;

/// `|a - b| / (sqrt(1 + a^2) sqrt(1 + b^2))`.
pub fn chordal(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.hypot(1.0) * b.hypot(1.0))
}

/// Sine of the angle between `v1` and `v2`, in `[0, 1]`.
pub fn sin_angle(v1: &DVector<f64>, v2: &DVector<f64>) -> Result<f64> {
    if v1.len() != v2.len() {
        return Err(Error::Domain(format!(
            "sin_angle: lengths {} and {} differ",
            v1.len(),
            v2.len()
        )));
    }
    let n1 = v1.norm();
    let n2 = v2.norm();
    if n1 == 0.0 || n2 == 0.0 {
        return Err(Error::Domain("sin_angle: zero vector".into()));
    }
    // Project unit vectors so that neither argument's scale matters.
    let a = v1 / n1;
    let b = v2 / n2;
    let r = &a - &b * b.dot(&a);
    Ok(r.norm().clamp(0.0, 1.0))
}

/// Errors of one computed component against the exact one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComponentErrors {
    pub chordal: f64,
    pub sin_x: f64,
    pub sin_u: f64,
    pub sin_v: f64,
}

impl ComponentErrors {
    pub fn get(&self, q: Quantity) -> f64 {
        match q {
            Quantity::Sigma => self.chordal,
            Quantity::X => self.sin_x,
            Quantity::U => self.sin_u,
            Quantity::V => self.sin_v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyRow {
    pub index: usize,
    pub sigma_exact: f64,
    pub hat: Option<ComponentErrors>,
    pub tilde: Option<ComponentErrors>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    Sigma,
    X,
    U,
    V,
}

impl Quantity {
    pub const ALL: [Quantity; 4] = [Quantity::Sigma, Quantity::X, Quantity::U, Quantity::V];

    pub fn as_str(self) -> &'static str {
        match self {
            Quantity::Sigma => "sigma",
            Quantity::X => "x",
            Quantity::U => "u",
            Quantity::V => "v",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PctAcc {
    /// Percentage of components where Hat is strictly more accurate.
    pub pct: f64,
    /// Mean of `log10(tilde error) - log10(hat error)`.
    pub acc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aggregates {
    pub sigma: PctAcc,
    pub x: PctAcc,
    pub u: PctAcc,
    pub v: PctAcc,
}

impl Aggregates {
    pub fn get(&self, q: Quantity) -> PctAcc {
        match q {
            Quantity::Sigma => self.sigma,
            Quantity::X => self.x,
            Quantity::U => self.u,
            Quantity::V => self.v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyReport {
    pub rows: Vec<AccuracyRow>,
    /// Present only when both formulations were run.
    pub aggregates: Option<Aggregates>,
}

fn clamp_log10(err: f64) -> f64 {
    if err == 0.0 {
        f64::EPSILON.log10()
    } else {
        err.log10()
    }
}

/// Win percentage and mean log10 gap of paired error lists.
pub fn pct_acc(hat: &[f64], tilde: &[f64]) -> PctAcc {
    assert_eq!(hat.len(), tilde.len());
    let n = hat.len();
    if n == 0 {
        return PctAcc { pct: 0.0, acc: 0.0 };
    }
    let wins = hat.iter().zip(tilde).filter(|(h, t)| h < t).count();
    let gap: f64 = hat
        .iter()
        .zip(tilde)
        .map(|(&h, &t)| clamp_log10(t) - clamp_log10(h))
        .sum();
    PctAcc {
        pct: 100.0 * wins as f64 / n as f64,
        acc: gap / n as f64,
    }
}

/// `(pct, acc)` per quantity; `None` if any row misses a formulation.
pub fn aggregate(rows: &[AccuracyRow]) -> Option<Aggregates> {
    let pairs: Option<Vec<(ComponentErrors, ComponentErrors)>> =
        rows.iter().map(|r| Some((r.hat?, r.tilde?))).collect();
    let pairs = pairs?;
    if pairs.is_empty() {
        return None;
    }
    let one = |q: Quantity| {
        let h: Vec<f64> = pairs.iter().map(|(h, _)| h.get(q)).collect();
        let t: Vec<f64> = pairs.iter().map(|(_, t)| t.get(q)).collect();
        pct_acc(&h, &t)
    };
    Some(Aggregates {
        sigma: one(Quantity::Sigma),
        x: one(Quantity::X),
        u: one(Quantity::U),
        v: one(Quantity::V),
    })
}

/// Errors of recovered components against the oracle, paired by rank.
///
/// Both lists are in descending `sigma` order.
pub fn component_errors(
    exact: &GsvdFactors,
    computed: &[RecoveredComponent],
) -> Result<Vec<ComponentErrors>> {
    if computed.len() != exact.n() {
        return Err(Error::Contract(format!(
            "{} recovered components for {} exact ones",
            computed.len(),
            exact.n()
        )));
    }
    computed
        .iter()
        .enumerate()
        .map(|(i, c)| {
            Ok(ComponentErrors {
                chordal: chordal(c.sigma, exact.sigma[i]),
                sin_x: sin_angle(&c.x, &exact.x.column(i).into_owned())?,
                sin_u: sin_angle(&c.u, &exact.u.column(i).into_owned())?,
                sin_v: sin_angle(&c.v, &exact.v.column(i).into_owned())?,
            })
        })
        .collect()
}

pub fn accuracy_report(
    exact: &GsvdFactors,
    hat: Option<&[RecoveredComponent]>,
    tilde: Option<&[RecoveredComponent]>,
) -> Result<AccuracyReport> {
    let hat = hat.map(|c| component_errors(exact, c)).transpose()?;
    let tilde = tilde.map(|c| component_errors(exact, c)).transpose()?;
    let rows: Vec<AccuracyRow> = (0..exact.n())
        .map(|i| AccuracyRow {
            index: i,
            sigma_exact: exact.sigma[i],
            hat: hat.as_ref().map(|h| h[i]),
            tilde: tilde.as_ref().map(|t| t[i]),
        })
        .collect();
    let aggregates = aggregate(&rows);
    Ok(AccuracyReport { rows, aggregates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(xs)
    }

    fn errs(e: f64) -> ComponentErrors {
        ComponentErrors {
            chordal: e,
            sin_x: e,
            sin_u: e,
            sin_v: e,
        }
    }

    #[test]
    fn chordal_examples() {
        assert_eq!(chordal(3.7, 3.7), 0.0);
        assert!((chordal(1.0, 0.0) - std::f64::consts::FRAC_1_SQRT_2).abs() < 4e-16);
        assert!((chordal(1.0 / 3.0, 1.0 / 7.0) - chordal(3.0, 7.0)).abs() < 1e-16);
    }

    #[test]
    fn angle_examples() {
        let a = v(&[1.0, -2.0, 0.5]);
        assert_eq!(sin_angle(&a, &a).unwrap(), 0.0);
        assert!(sin_angle(&a, &(-&a)).unwrap() < 1e-16);
        assert_eq!(sin_angle(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 1.0);
        let s = sin_angle(&v(&[1.0, 1.0]), &v(&[1.0, 0.0])).unwrap();
        assert!((s - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(matches!(sin_angle(&v(&[0.0, 0.0]), &a.rows(0, 2).into_owned()), Err(Error::Domain(_))));
    }

    #[test]
    fn aggregate_examples() {
        let rows: Vec<AccuracyRow> = (0..4)
            .map(|i| AccuracyRow {
                index: i,
                sigma_exact: 1.0,
                hat: Some(errs(1e-8)),
                tilde: Some(errs(1e-8)),
            })
            .collect();
        let agg = aggregate(&rows).unwrap();
        assert_eq!(agg.sigma, PctAcc { pct: 0.0, acc: 0.0 });

        let rows: Vec<AccuracyRow> = (0..4)
            .map(|i| AccuracyRow {
                index: i,
                sigma_exact: 1.0,
                hat: Some(errs(1e-9 * (i + 1) as f64)),
                tilde: Some(errs(1e-8 * (i + 1) as f64)),
            })
            .collect();
        let agg = aggregate(&rows).unwrap();
        for q in Quantity::ALL {
            assert_eq!(agg.get(q).pct, 100.0);
            assert!((agg.get(q).acc - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_errors_are_clamped() {
        let r = pct_acc(&[0.0], &[f64::EPSILON]);
        assert_eq!(r.pct, 100.0);
        assert_eq!(r.acc, 0.0);
    }

    #[test]
    fn missing_side_gives_no_aggregate() {
        let rows = vec![AccuracyRow {
            index: 0,
            sigma_exact: 1.0,
            hat: Some(errs(1e-9)),
            tilde: None,
        }];
        assert!(aggregate(&rows).is_none());
    }

    proptest! {
        #[test]
        fn chordal_is_a_metric(a in -1e3f64..1e3, b in -1e3f64..1e3, c in -1e3f64..1e3) {
            prop_assert!((chordal(a, b) - chordal(b, a)).abs() <= 1e-14);
            prop_assert!(chordal(a, c) <= chordal(a, b) + chordal(b, c) + 1e-14);
            prop_assert!(chordal(a, b) < 1.0);
        }

        #[test]
        fn chordal_reciprocal_invariance(a in 1e-3f64..1e3, b in 1e-3f64..1e3) {
            prop_assert!((chordal(1.0 / a, 1.0 / b) - chordal(a, b)).abs() <= 1e-14);
        }

        #[test]
        fn angle_scale_invariant_and_symmetric(
            xs in proptest::collection::vec(-1.0f64..1.0, 4),
            ys in proptest::collection::vec(-1.0f64..1.0, 4),
            s in 1e-3f64..1e3,
            t in -1e3f64..-1e-3,
        ) {
            let a = v(&xs);
            let b = v(&ys);
            prop_assume!(a.norm() > 1e-3 && b.norm() > 1e-3);
            let base = sin_angle(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&base));
            prop_assert!((sin_angle(&b, &a).unwrap() - base).abs() <= 1e-14);
            prop_assert!((sin_angle(&(&a * s), &(&b * t)).unwrap() - base).abs() <= 1e-14);
        }

        #[test]
        fn acc_sign_tracks_geometric_mean(
            hat in proptest::collection::vec(1e-16f64..1.0, 1..30),
            shift in -3.0f64..3.0,
        ) {
            let tilde: Vec<f64> = hat.iter().map(|h| h * 10f64.powf(shift)).collect();
            let r = pct_acc(&hat, &tilde);
            prop_assert!((r.acc - shift).abs() <= 1e-9);
            prop_assert!((0.0..=100.0).contains(&r.pct));
        }
    }
}
