//! Positive definiteness certificates.

use nalgebra::DMatrix;

use super::interval::{add_up, mul_up, sub_down, Interval};
use super::matrix::{gamma_ratio_up, IntervalMatrix};

/// Interval Cholesky factorization.
///
/// Runs the Cholesky recurrence in interval arithmetic on the lower
/// triangle. On success the returned lower-triangular interval matrix
/// contains the exact Cholesky factor of every symmetric member, and every
/// symmetric member is positive definite. `None` means positive
/// definiteness could not be verified, which is not a proof of the
/// contrary.
///
/// The lower bandwidth of the input is detected and respected, so banded
/// inputs cost `O(n b^2)`.
pub fn verified_cholesky(s: &IntervalMatrix) -> Option<IntervalMatrix> {
    let n = s.nrows();
    assert_eq!(n, s.ncols(), "square input");
    let band = lower_bandwidth(s);
    let mut l = vec![vec![Interval::point(0.0); n]; n];
    for j in 0..n {
        let k0 = j.saturating_sub(band);
        let mut d = s.entry(j, j);
        for k in k0..j {
            d = d - l[j][k].sqr();
        }
        if d.lo <= 0.0 {
            return None;
        }
        let ljj = d.sqrt().ok()?;
        l[j][j] = ljj;
        for i in (j + 1)..n.min(j + band + 1) {
            let mut t = s.entry(i, j);
            for k in i.saturating_sub(band).max(k0)..j {
                t = t - l[i][k] * l[j][k];
            }
            l[i][j] = t.div(ljj).ok()?;
        }
    }
    Some(IntervalMatrix::from_fn(n, n, |i, j| {
        if i >= j {
            l[i][j]
        } else {
            Interval::point(0.0)
        }
    }))
}

fn lower_bandwidth(s: &IntervalMatrix) -> usize {
    let n = s.nrows();
    let mut band = 0;
    for j in 0..n {
        for i in (j + band + 1)..n {
            if s.mid()[(i, j)] != 0.0 || s.rad()[(i, j)] != 0.0 {
                band = i - j;
            }
        }
    }
    band
}

/// Certify that every symmetric member of `s` is positive definite.
///
/// Floating-point Cholesky on a diagonally shifted midpoint. If the plain
/// floating-point factorization of `F = mid(S) - c I` completes, the
/// backward error of Cholesky gives `lambda_min(F) >= -gamma_{n+1}/(1 -
/// gamma_{n+1}) tr(F)`; the shift `c` is chosen to dominate that term plus
/// `||rad(S)||_2`, so the midpoint minus the radius is still positive
/// definite. Costs one `O(n^3/3)` factorization and no interval arithmetic.
pub fn certify_positive_definite(s: &IntervalMatrix) -> bool {
    let n = s.nrows();
    assert_eq!(n, s.ncols(), "square input");
    if n == 0 {
        return true;
    }
    let s = s.symmetrize();
    let mid = s.mid();
    if (0..n).any(|i| !(mid[(i, i)] > 0.0)) || mid.iter().any(|x| !x.is_finite()) {
        return false;
    }
    // ||rad||_2 <= ||rad||_inf for symmetric nonnegative rad
    let r = s.rad_inf_norm_up();
    let trace = (0..n).fold(0.0, |acc, i| add_up(acc, mid[(i, i)]));
    let max_diag = (0..n).map(|i| mid[(i, i)]).fold(0.0, f64::max);
    let theta = mul_up(gamma_ratio_up(n + 1), trace);
    let under = mul_up(
        mul_up(4.0 * n as f64, add_up(2.0 * n as f64, max_diag)),
        f64::MIN_POSITIVE * f64::EPSILON,
    );
    let theta = add_up(theta, under);
    let c = add_up(add_up(theta, r), add_up(theta * 2f64.powi(-20), f64::MIN_POSITIVE));

    let mut f = mid.clone();
    for i in 0..n {
        f[(i, i)] = sub_down(mid[(i, i)], c);
    }
    float_cholesky_in_place(&mut f)
}

/// Plain floating-point Cholesky; returns false on a nonpositive pivot.
fn float_cholesky_in_place(a: &mut DMatrix<f64>) -> bool {
    let n = a.nrows();
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= a[(j, k)] * a[(j, k)];
        }
        if !(d > 0.0) {
            return false;
        }
        let ljj = d.sqrt();
        a[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut t = a[(i, j)];
            for k in 0..j {
                t -= a[(i, k)] * a[(j, k)];
            }
            a[(i, j)] = t / ljj;
        }
    }
    true
}
