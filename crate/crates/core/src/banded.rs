//! Banded LU factorization with partial pivoting.
//!
//! Same pivoting scheme as LAPACK `gbtrf`: row interchanges are applied to
//! the trailing columns only, so the multipliers of `L` stay where they were
//! computed and the solve replays swaps and eliminations step by step. With
//! pivoting the upper factor grows to bandwidth `kl + ku`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    piv: Vec<usize>,
}

impl BandedLu {
    /// Factor the `n x n` matrix whose entry `(i, j)` is `f(i, j)` for
    /// `-kl <= j - i <= ku` and zero elsewhere.
    pub fn factor(n: usize, kl: usize, ku: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let width = 2 * kl + ku + 1;
        let mut lu = Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
            piv: vec![0; n],
        };
        for i in 0..n {
            for j in i.saturating_sub(kl)..n.min(i + ku + 1) {
                *lu.at_mut(i, j) = f(i, j);
            }
        }
        lu.eliminate()?;
        Ok(lu)
    }

    pub fn from_dense(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols());
        let mut kl = 0;
        let mut ku = 0;
        for j in 0..n {
            for i in 0..n {
                if a[(i, j)] != 0.0 {
                    if i > j {
                        kl = kl.max(i - j);
                    } else {
                        ku = ku.max(j - i);
                    }
                }
            }
        }
        Self::factor(n, kl, ku, |i, j| a[(i, j)])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + (j + self.kl - i)]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * self.width + (j + self.kl - i)]
    }

    fn eliminate(&mut self) -> Result<()> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for k in 0..n {
            let last_row = (n - 1).min(k + kl);
            let last_col = (n - 1).min(k + kl + ku);
            let mut p = k;
            let mut best = self.at(k, k).abs();
            for i in (k + 1)..=last_row {
                let v = self.at(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > 0.0) || !best.is_finite() {
                return Err(Error::Singular);
            }
            self.piv[k] = p;
            if p != k {
                for j in k..=last_col {
                    let a = self.at(k, j);
                    let b = self.at(p, j);
                    *self.at_mut(k, j) = b;
                    *self.at_mut(p, j) = a;
                }
            }
            let pivot = self.at(k, k);
            for i in (k + 1)..=last_row {
                let l = self.at(i, k) / pivot;
                *self.at_mut(i, k) = l;
                if l != 0.0 {
                    for j in (k + 1)..=last_col {
                        let v = self.at(k, j);
                        *self.at_mut(i, j) -= l * v;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        assert_eq!(b.len(), n);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in (k + 1)..=(n - 1).min(k + kl) {
                    b[i] -= self.at(i, k) * bk;
                }
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in (i + 1)..=(n - 1).min(i + kl + ku) {
                s -= self.at(i, j) * b[j];
            }
            b[i] = s / self.at(i, i);
        }
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = b.clone();
        self.solve_in_place(x.as_mut_slice());
        x
    }

    /// Solve for every column of `b`.
    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut x = b.clone();
        for mut col in x.column_iter_mut() {
            self.solve_in_place(col.as_mut_slice());
        }
        x
    }
}
