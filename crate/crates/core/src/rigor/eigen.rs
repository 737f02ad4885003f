//! Certified bounds on the largest eigenvalue of a symmetric interval matrix.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::cholesky::certify_positive_definite;
use super::interval::{mul_up, Interval};
use super::matrix::IntervalMatrix;
use crate::error::{Error, Result};

/// True iff `lambda_try I - S` is certified positive definite for every
/// symmetric member `S`, which proves `lambda_max(S) < lambda_try`.
pub fn lambda_max_upper(s: &IntervalMatrix, lambda_try: f64) -> bool {
    let n = s.nrows();
    let shift = IntervalMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Interval::point(lambda_try)
        } else {
            Interval::point(0.0)
        }
    });
    certify_positive_definite(&shift.sub(s))
}

/// Rigorous lower bound of `lambda_max(S)` from the Rayleigh quotient of `v`,
/// valid for every symmetric member `S`.
pub fn rayleigh_lower(s: &IntervalMatrix, v: &DVector<f64>) -> Result<f64> {
    let n = s.nrows();
    if v.len() != n {
        return Err(Error::Dimension(format!("vector of length {} for {n}x{n} matrix", v.len())));
    }
    if v.iter().all(|x| *x == 0.0) {
        return Err(Error::Dimension("Rayleigh quotient of the zero vector".into()));
    }
    let col = DMatrix::from_column_slice(n, 1, v.as_slice());
    let sv = s.mul_point(&col);
    let mut num = Interval::point(0.0);
    let mut den = Interval::point(0.0);
    for i in 0..n {
        let vi = Interval::point(v[i]);
        num = num + vi * sv.entry(i, 0);
        den = den + vi.sqr();
    }
    Ok(num.div(den)?.lo)
}

/// Number of inflation steps `(1 + 2^-k)` tried before giving up.
pub const MAX_INFLATIONS: usize = 48;

/// Enclose `lambda_max(S)` for a symmetric interval matrix.
///
/// A floating-point eigendecomposition of the midpoint supplies the
/// estimate and its eigenvector; the eigenvector gives the lower bound, and
/// the estimate is inflated by `(1 + 2^-k)` for `k = 48, 47, ...` until
/// [`lambda_max_upper`] certifies it.
pub fn enclose_lambda_max(s: &IntervalMatrix) -> Result<Interval> {
    let n = s.nrows();
    assert_eq!(n, s.ncols());
    let s = s.symmetrize();
    let eig = SymmetricEigen::new(s.mid().clone());
    let (imax, est) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, x)| if x > acc.1 { (i, x) } else { acc });
    let v = eig.eigenvectors.column(imax).into_owned();
    let lower = rayleigh_lower(&s, &v)?;

    let base = est.abs().max(s.inf_norm_up() * f64::EPSILON).max(f64::MIN_POSITIVE);
    for step in 0..MAX_INFLATIONS {
        let k = MAX_INFLATIONS - step;
        let trial = est + mul_up(base, 2f64.powi(-(k as i32)));
        if lambda_max_upper(&s, trial) {
            return Ok(Interval {
                lo: lower.min(trial),
                hi: trial,
            });
        }
    }
    Err(Error::EigenBoundNotCertified {
        attempts: MAX_INFLATIONS,
    })
}
