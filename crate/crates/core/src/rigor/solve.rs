//! Verified enclosure of `K^{-1} B`.

use nalgebra::DMatrix;

use super::interval::{add_up, div_up, mul_up, sub_down};
use super::matrix::IntervalMatrix;
use crate::error::{Error, Result};

/// Enclose the solution set `{K^{-1} B : K in [K], B in [B]}`.
///
/// With an approximate inverse `R` of `mid(K)` and approximate solution
/// `X~ = R mid(B)`, the error `E = X - X~` satisfies
/// `E = (I - R K) E + R (B - K X~)`. If `alpha >= ||I - R[K]||_inf` is below
/// one, column `j` obeys `||e_j||_inf <= ||z_j||_inf / (1 - alpha)` with
/// `z = R ([B] - [K] X~)`, and entrywise
/// `|E - z| <= |I - R[K]| * ||e_j||_inf`.
pub fn enclose_solve(k: &IntervalMatrix, b: &IntervalMatrix) -> Result<IntervalMatrix> {
    let n = k.nrows();
    if k.ncols() != n || b.nrows() != n {
        return Err(Error::Dimension(format!(
            "K is {}x{}, right-hand side has {} rows",
            k.nrows(),
            k.ncols(),
            b.nrows()
        )));
    }
    let r = k.mid().clone().lu().try_inverse().ok_or(Error::Singular)?;
    let ri = IntervalMatrix::from_point(r.clone());

    let c = IntervalMatrix::identity(n).sub(&ri.mul(k));
    let c_mag = c.mag();
    let row_c: Vec<f64> = (0..n)
        .map(|i| c_mag.row(i).iter().fold(0.0, |acc, x| add_up(acc, *x)))
        .collect();
    let alpha = row_c.iter().copied().fold(0.0, f64::max);
    if !(alpha < 1.0) {
        return Err(Error::VerificationFailed { alpha });
    }

    let x_approx: DMatrix<f64> = &r * b.mid();
    let residual = b.sub(&k.mul_point(&x_approx));
    let z = ri.mul(&residual);
    let z_mag = z.mag();

    let denom = sub_down(1.0, alpha);
    let ncols = b.ncols();
    let col_bound: Vec<f64> = (0..ncols)
        .map(|j| div_up(z_mag.column(j).iter().copied().fold(0.0, f64::max), denom))
        .collect();

    let mut mid = x_approx;
    let mut rad = DMatrix::zeros(n, ncols);
    for j in 0..ncols {
        for i in 0..n {
            let corr = z.mid()[(i, j)];
            let s = mid[(i, j)] + corr;
            // half an ulp of the rounded midpoint update
            let round = add_up(mul_up(s.abs(), f64::EPSILON), 4.9406564584124654e-324);
            mid[(i, j)] = s;
            rad[(i, j)] = add_up(add_up(z.rad()[(i, j)], mul_up(row_c[i], col_bound[j])), round);
        }
    }
    Ok(IntervalMatrix::from_mid_rad(mid, rad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rigor::Interval;
    use num::{BigRational, Zero};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q(x: f64) -> BigRational {
        BigRational::from_float(x).unwrap()
    }

    /// Exact rational solve by Gauss-Jordan elimination.
    fn exact_solve(k: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<Vec<BigRational>> {
        let n = k.nrows();
        let mut a: Vec<Vec<BigRational>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| q(k[(i, j)]))
                    .chain((0..b.ncols()).map(|j| q(b[(i, j)])))
                    .collect()
            })
            .collect();
        for col in 0..n {
            let p = (col..n).find(|&r| !a[r][col].is_zero()).unwrap();
            a.swap(col, p);
            let pivot = a[col][col].clone();
            for x in a[col].iter_mut() {
                *x = x.clone() / pivot.clone();
            }
            for r in 0..n {
                if r != col && !a[r][col].is_zero() {
                    let f = a[r][col].clone();
                    let pivot_row = a[col].clone();
                    for (x, y) in a[r].iter_mut().zip(pivot_row) {
                        *x -= f.clone() * y;
                    }
                }
            }
        }
        a.into_iter().map(|row| row[n..].to_vec()).collect()
    }

    fn check_contains(enc: &IntervalMatrix, exact: &[Vec<BigRational>]) {
        for (i, row) in exact.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                let e = enc.entry(i, j);
                assert!(q(e.lo) <= *x && *x <= q(e.hi), "entry ({i},{j}) {e} misses exact value");
            }
        }
    }

    #[test]
    fn scalar_example() {
        let k = IntervalMatrix::from_point(DMatrix::from_element(1, 1, 2.0));
        let b = IntervalMatrix::from_point(DMatrix::from_element(1, 1, 1.0));
        let x = enclose_solve(&k, &b).unwrap();
        assert!(x.entry(0, 0).contains(0.5));
        assert!(x.entry(0, 0).width() < 1e-15);
    }

    #[test]
    fn seven_thirds() {
        // (A + nu B) for m = n = 1, nu = 1 is 7/3; solution of (7/3) x = 1 is 3/7
        let k = IntervalMatrix::from_fn(1, 1, |_, _| Interval::from_ratio(7.0, 3.0));
        let b = IntervalMatrix::identity(1);
        let x = enclose_solve(&k, &b).unwrap();
        let e = x.entry(0, 0);
        assert!(q(e.lo) <= BigRational::new(3.into(), 7.into()));
        assert!(q(e.hi) >= BigRational::new(3.into(), 7.into()));
    }

    #[test]
    fn identity_contains_rhs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = DMatrix::from_fn(6, 3, |_, _| rng.gen_range(-10.0..10.0));
        let x = enclose_solve(&IntervalMatrix::identity(6), &IntervalMatrix::from_point(b.clone())).unwrap();
        assert!(x.contains(&b));
    }

    #[test]
    fn singular_and_ill_conditioned() {
        let k = IntervalMatrix::from_point(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]));
        let b = IntervalMatrix::identity(2);
        assert!(matches!(
            enclose_solve(&k, &b),
            Err(Error::Singular) | Err(Error::VerificationFailed { .. })
        ));
        // a huge radius destroys contraction
        let k = IntervalMatrix::from_mid_rad(DMatrix::identity(2, 2), DMatrix::from_element(2, 2, 0.9));
        assert!(matches!(enclose_solve(&k, &b), Err(Error::VerificationFailed { .. })));
    }

    #[test]
    fn random_systems_contain_exact_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..200 {
            let n = rng.gen_range(1..9);
            let k = DMatrix::from_fn(n, n, |i, j| {
                rng.gen_range(-1.0..1.0) + if i == j { n as f64 } else { 0.0 }
            });
            let b = DMatrix::from_fn(n, 2, |_, _| rng.gen_range(-1.0..1.0));
            let enc = enclose_solve(&IntervalMatrix::from_point(k.clone()), &IntervalMatrix::from_point(b.clone()))
                .unwrap_or_else(|e| panic!("trial {trial}: {e}"));
            check_contains(&enc, &exact_solve(&k, &b));
        }
    }

    #[test]
    fn dimension_100_integer_system() {
        // integer entries keep the exact rational solve affordable
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 100;
        let k = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                (4 * n) as f64
            } else {
                rng.gen_range(-3i32..=3) as f64
            }
        });
        let b = DMatrix::from_fn(n, 1, |_, _| rng.gen_range(-50i32..=50) as f64);
        let enc = enclose_solve(&IntervalMatrix::from_point(k.clone()), &IntervalMatrix::from_point(b.clone())).unwrap();
        check_contains(&enc, &exact_solve(&k, &b));
        assert!(enc.max_relative_radius() < 1e-10);
    }
}
