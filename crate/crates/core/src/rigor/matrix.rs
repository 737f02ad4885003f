//! Interval matrices in midpoint-radius form.
//!
//! Products are evaluated with ordinary floating-point GEMM on the
//! midpoints; the rounding error of any summation order is covered by the
//! a priori bound `|fl(A B) - A B| <= gamma_n |A| |B| + n * eta`, with
//! `gamma_n = n u / (1 - n u)` and `eta` the smallest subnormal. All radius
//! bookkeeping is done with upward-rounded scalar operations.

use nalgebra::DMatrix;

use super::interval::{add_up, mul_up, sub_down, sub_up, Interval};

const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;
// smallest positive subnormal
const ETA: f64 = f64::from_bits(1);

/// Upper bound of `gamma_n / (1 - gamma_n)`.
pub(crate) fn gamma_ratio_up(n: usize) -> f64 {
    let nu = Interval::point(n as f64) * Interval::point(UNIT_ROUNDOFF);
    let one = Interval::point(1.0);
    let gamma = nu.div(one - nu).expect("dimension far below 1/u");
    gamma.div(one - gamma).expect("dimension far below 1/u").hi
}

/// A rectangular matrix of intervals `mid[i,j] +- rad[i,j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalMatrix {
    mid: DMatrix<f64>,
    rad: DMatrix<f64>,
}

impl IntervalMatrix {
    pub fn from_point(m: DMatrix<f64>) -> Self {
        let rad = DMatrix::zeros(m.nrows(), m.ncols());
        Self { mid: m, rad }
    }

    /// Build from midpoint and radius; radii must be nonnegative.
    pub fn from_mid_rad(mid: DMatrix<f64>, rad: DMatrix<f64>) -> Self {
        assert_eq!(mid.shape(), rad.shape());
        debug_assert!(rad.iter().all(|r| *r >= 0.0));
        Self { mid, rad }
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> Interval) -> Self {
        let mut mid = DMatrix::zeros(nrows, ncols);
        let mut rad = DMatrix::zeros(nrows, ncols);
        for j in 0..ncols {
            for i in 0..nrows {
                let (m, r) = to_mid_rad(f(i, j));
                mid[(i, j)] = m;
                rad[(i, j)] = r;
            }
        }
        Self { mid, rad }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_point(DMatrix::identity(n, n))
    }

    pub fn nrows(&self) -> usize {
        self.mid.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.mid.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.mid.shape()
    }

    pub fn mid(&self) -> &DMatrix<f64> {
        &self.mid
    }

    pub fn rad(&self) -> &DMatrix<f64> {
        &self.rad
    }

    pub fn is_point(&self) -> bool {
        self.rad.iter().all(|r| *r == 0.0)
    }

    pub fn entry(&self, i: usize, j: usize) -> Interval {
        let (m, r) = (self.mid[(i, j)], self.rad[(i, j)]);
        Interval {
            lo: sub_down(m, r),
            hi: add_up(m, r),
        }
    }

    pub fn lo(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.nrows(), self.ncols(), |i, j| self.entry(i, j).lo)
    }

    pub fn hi(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.nrows(), self.ncols(), |i, j| self.entry(i, j).hi)
    }

    /// Entrywise upper bound of `|x|` over the interval.
    pub fn mag(&self) -> DMatrix<f64> {
        self.mid.zip_map(&self.rad, |m, r| add_up(m.abs(), r))
    }

    pub fn transpose(&self) -> Self {
        Self {
            mid: self.mid.transpose(),
            rad: self.rad.transpose(),
        }
    }

    pub fn contains(&self, m: &DMatrix<f64>) -> bool {
        m.shape() == self.shape()
            && (0..self.nrows()).all(|i| (0..self.ncols()).all(|j| self.entry(i, j).contains(m[(i, j)])))
    }

    pub fn contains_matrix(&self, other: &IntervalMatrix) -> bool {
        other.shape() == self.shape()
            && (0..self.nrows()).all(|i| {
                (0..self.ncols()).all(|j| self.entry(i, j).contains_interval(&other.entry(i, j)))
            })
    }

    pub fn map_entries(&self, mut f: impl FnMut(Interval) -> Interval) -> Self {
        Self::from_fn(self.nrows(), self.ncols(), |i, j| f(self.entry(i, j)))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape());
        Self::from_fn(self.nrows(), self.ncols(), |i, j| self.entry(i, j) + other.entry(i, j))
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape());
        Self::from_fn(self.nrows(), self.ncols(), |i, j| self.entry(i, j) - other.entry(i, j))
    }

    pub fn scale(&self, s: Interval) -> Self {
        self.map_entries(|x| x * s)
    }

    /// Columns `start..start + count`.
    pub fn columns(&self, start: usize, count: usize) -> Self {
        Self {
            mid: self.mid.columns(start, count).into_owned(),
            rad: self.rad.columns(start, count).into_owned(),
        }
    }

    /// `[self, other]` side by side.
    pub fn hcat(&self, other: &Self) -> Self {
        assert_eq!(self.nrows(), other.nrows());
        let (n, p, q) = (self.nrows(), self.ncols(), other.ncols());
        let mut mid = DMatrix::zeros(n, p + q);
        let mut rad = DMatrix::zeros(n, p + q);
        mid.columns_mut(0, p).copy_from(&self.mid);
        mid.columns_mut(p, q).copy_from(&other.mid);
        rad.columns_mut(0, p).copy_from(&self.rad);
        rad.columns_mut(p, q).copy_from(&other.rad);
        Self { mid, rad }
    }

    /// Kronecker product `self (x) other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (p, q) = self.shape();
        let (r, s) = other.shape();
        Self::from_fn(p * r, q * s, |i, j| {
            self.entry(i / r, j / s) * other.entry(i % r, j % s)
        })
    }

    /// Rigorous enclosure of the product `self * other`.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols(), other.nrows(), "inner dimensions");
        let n = self.ncols();
        let g = gamma_ratio_up(n);
        let f = add_up(1.0, g);
        let under = mul_up(n as f64, ETA);

        let mid = &self.mid * &other.mid;
        let abs_a = self.mid.abs();
        let abs_b = other.mid.abs();
        // rounding error of the midpoint product
        let mut rad = (&abs_a * &abs_b).map(|t| add_up(mul_up(g, t), under));

        let a_point = self.is_point();
        let b_point = other.is_point();
        if !b_point {
            let t = &abs_a * &other.rad;
            rad.zip_apply(&t, |r, t| *r = add_up(*r, add_up(mul_up(f, t), under)));
        }
        if !a_point {
            let t = &self.rad * other.mag();
            rad.zip_apply(&t, |r, t| *r = add_up(*r, add_up(mul_up(f, t), under)));
        }
        Self { mid, rad }
    }

    /// Product with a point matrix on the right.
    pub fn mul_point(&self, other: &DMatrix<f64>) -> Self {
        self.mul(&Self::from_point(other.clone()))
    }

    /// Replace `mid` and `rad` by a symmetric pair still containing every
    /// symmetric matrix of the original set.
    pub fn symmetrize(&self) -> Self {
        assert_eq!(self.nrows(), self.ncols());
        let n = self.nrows();
        let mut mid = self.mid.clone();
        let mut rad = self.rad.clone();
        for j in 0..n {
            for i in (j + 1)..n {
                let (a, b) = (self.mid[(i, j)], self.mid[(j, i)]);
                let m = 0.5 * a + 0.5 * b;
                let ra = add_up(sub_up(m, a).abs().max(sub_up(a, m).abs()), self.rad[(i, j)]);
                let rb = add_up(sub_up(m, b).abs().max(sub_up(b, m).abs()), self.rad[(j, i)]);
                // a symmetric member lies in both intervals, hence in the smaller
                let r = ra.min(rb);
                mid[(i, j)] = m;
                mid[(j, i)] = m;
                rad[(i, j)] = r;
                rad[(j, i)] = r;
            }
        }
        Self { mid, rad }
    }

    /// Upper bound of the infinity norm over all members.
    pub fn inf_norm_up(&self) -> f64 {
        let mag = self.mag();
        (0..self.nrows())
            .map(|i| mag.row(i).iter().fold(0.0, |acc, x| add_up(acc, *x)))
            .fold(0.0, f64::max)
    }

    /// Upper bound of the infinity norm of the radius matrix.
    pub fn rad_inf_norm_up(&self) -> f64 {
        (0..self.nrows())
            .map(|i| self.rad.row(i).iter().fold(0.0, |acc, x| add_up(acc, *x)))
            .fold(0.0, f64::max)
    }

    /// Largest relative radius over the entries with nonzero midpoint.
    pub fn max_relative_radius(&self) -> f64 {
        self.mid
            .iter()
            .zip(self.rad.iter())
            .filter(|(m, _)| **m != 0.0)
            .map(|(m, r)| r / m.abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn to_mid_rad(iv: Interval) -> (f64, f64) {
    let m = iv.mid();
    let r = sub_up(iv.hi, m).max(sub_up(m, iv.lo)).max(0.0);
    (m, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::BigRational;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q(x: f64) -> BigRational {
        BigRational::from_float(x).unwrap()
    }

    fn exact_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<Vec<BigRational>> {
        (0..a.nrows())
            .map(|i| {
                (0..b.ncols())
                    .map(|j| (0..a.ncols()).fold(q(0.0), |acc, k| acc + q(a[(i, k)]) * q(b[(k, j)])))
                    .collect()
            })
            .collect()
    }

    fn encloses_exact(iv: &IntervalMatrix, exact: &[Vec<BigRational>]) -> bool {
        exact.iter().enumerate().all(|(i, row)| {
            row.iter().enumerate().all(|(j, x)| {
                let e = iv.entry(i, j);
                q(e.lo) <= *x && *x <= q(e.hi)
            })
        })
    }

    #[test]
    fn point_product_contains_exact_for_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..1000 {
            let (p, n, r) = (rng.gen_range(1..6), rng.gen_range(1..8), rng.gen_range(1..6));
            let scale = if trial % 3 == 0 { 1e-8 } else { 1.0 };
            let a = DMatrix::from_fn(p, n, |_, _| rng.gen_range(-1.0..1.0) * scale);
            let b = DMatrix::from_fn(n, r, |_, _| rng.gen_range(-1.0..1.0) / 3.0);
            let c = IntervalMatrix::from_point(a.clone()).mul(&IntervalMatrix::from_point(b.clone()));
            assert!(encloses_exact(&c, &exact_product(&a, &b)), "trial {trial}");
        }
    }

    #[test]
    fn interval_product_contains_vertex_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.gen_range(1..5);
            let am = DMatrix::from_fn(3, n, |_, _| rng.gen_range(-2.0..2.0));
            let ar = DMatrix::from_fn(3, n, |_, _| rng.gen_range(0.0..0.1));
            let bm = DMatrix::from_fn(n, 2, |_, _| rng.gen_range(-2.0..2.0));
            let br = DMatrix::from_fn(n, 2, |_, _| rng.gen_range(0.0..0.1));
            let a = IntervalMatrix::from_mid_rad(am.clone(), ar.clone());
            let b = IntervalMatrix::from_mid_rad(bm.clone(), br.clone());
            let c = a.mul(&b);
            // random members of the input sets
            for _ in 0..5 {
                let x = DMatrix::from_fn(3, n, |i, j| am[(i, j)] + ar[(i, j)] * rng.gen_range(-1.0..1.0) * 0.999);
                let y = DMatrix::from_fn(n, 2, |i, j| bm[(i, j)] + br[(i, j)] * rng.gen_range(-1.0..1.0) * 0.999);
                assert!(encloses_exact(&c, &exact_product(&x, &y)));
            }
        }
    }

    #[test]
    fn kron_matches_definition() {
        let a = IntervalMatrix::from_point(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        let b = IntervalMatrix::from_point(DMatrix::from_row_slice(2, 1, &[5.0, 6.0]));
        let k = a.kron(&b);
        assert_eq!(k.shape(), (4, 2));
        assert_eq!(k.mid()[(3, 1)], 24.0);
        assert_eq!(k.mid()[(1, 0)], 6.0);
        assert_eq!(k.mid()[(2, 1)], 20.0);
        assert!(k.is_point());
    }

    #[test]
    fn symmetrize_keeps_symmetric_members() {
        let mid = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5000001, 2.0]);
        let rad = DMatrix::from_element(2, 2, 1e-6);
        let s = IntervalMatrix::from_mid_rad(mid, rad).symmetrize();
        assert_eq!(s.mid()[(0, 1)], s.mid()[(1, 0)]);
        assert!(s.entry(0, 1).contains(0.5000005));
    }

    proptest! {
        #[test]
        fn widening_inputs_never_shrinks_product(w in 0.0..0.5f64, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let am = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
            let bm = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
            let r = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(0.0..0.1));
            let a = IntervalMatrix::from_mid_rad(am.clone(), r.clone());
            let aw = IntervalMatrix::from_mid_rad(am, r.map(|x| x + w));
            let b = IntervalMatrix::from_point(bm);
            prop_assert!(aw.mul(&b).contains_matrix(&a.mul(&b)));
        }
    }
}
