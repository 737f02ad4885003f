//! The five stability constants as spectral norms.
//!
//! | constant | operator                               |
//! |----------|----------------------------------------|
//! | `eta`    | `M^{T/2} (A + nu B)^{-1} A^{1/2}`      |
//! | `eta_hat`| `A^{T/2} (G + nu M)^{-1} U^{1/2}`      |
//! | `gamma1` | `nu M^{T/2} (A + nu B)^{-1} W^{1/2}`   |
//! | `gamma0` | `nu U^{T/2} (A + nu B)^{-1} W^{1/2}`   |
//! | `gammaT` | `nu Y^{T/2} (A + nu B)^{-1} W^{1/2}`   |
//!
//! `X^{1/2}` denotes a Cholesky factor (`Y^{1/2}` is the rank-`n` factor
//! `y_T (x) L_s`); the norms do not depend on which factor is used.
//!
//! Fast mode uses the generalized eigenbasis `Ks v = lambda Ms v`, in which
//! every operator is block diagonal with `n` blocks of size `m`:
//! block `j` of `A + nu B` is `At + nu lambda_j Gt^T`, of `G + nu M` is
//! `Gt + nu lambda_j Ut`, and `Ms`, `Ks` become `1`, `lambda_j`. Each block
//! norm is the square root of the top eigenvalue of a Gram matrix. Rigorous
//! mode works on the dense interval matrices instead.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::{decimal_enclosure, interval_cholesky, interval_factors, GlobalSystem};
use crate::banded::BandedLu;
use crate::error::{Error, Result};
use crate::rigor::{enclose_lambda_max, enclose_solve, Enclosure, Interval, IntervalMatrix, Mode, RIGOROUS_DOF_LIMIT};

/// The `(nu, h, k)` configuration a set of constants belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityConfig {
    pub nu: f64,
    pub h_cells: usize,
    pub k_cells: usize,
    pub final_time: f64,
    pub mode: Mode,
}

impl StabilityConfig {
    pub fn of(sys: &GlobalSystem, mode: Mode) -> Self {
        Self {
            nu: sys.nu,
            h_cells: sys.factors.space.n_cells,
            k_cells: sys.factors.time.m_cells,
            final_time: sys.factors.time.final_time,
            mode,
        }
    }

    /// Same mesh, diffusion and final time (the mode may differ).
    pub fn same_problem(&self, other: &Self) -> bool {
        self.nu == other.nu
            && self.h_cells == other.h_cells
            && self.k_cells == other.k_cells
            && self.final_time == other.final_time
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityConstants {
    pub eta: Enclosure,
    pub eta_hat: Enclosure,
    pub gamma1: Enclosure,
    pub gamma0: Enclosure,
    #[serde(rename = "gammaT")]
    pub gamma_t: Enclosure,
    pub config: StabilityConfig,
}

impl StabilityConstants {
    pub fn as_array(&self) -> [Enclosure; 5] {
        [self.eta, self.eta_hat, self.gamma1, self.gamma0, self.gamma_t]
    }

    pub fn max_relative_width(&self) -> f64 {
        self.as_array().iter().map(|e| e.relative_width()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gammas {
    pub gamma1: Enclosure,
    pub gamma0: Enclosure,
    pub gamma_t: Enclosure,
}

/// Which constants a computation should produce.
#[derive(Debug, Clone, Copy)]
struct Wanted {
    eta_gammas: bool,
    eta_hat: bool,
}

const ALL: Wanted = Wanted {
    eta_gammas: true,
    eta_hat: true,
};

pub fn compute_eta(sys: &GlobalSystem, mode: Mode) -> Result<Enclosure> {
    Ok(compute(sys, mode, Wanted { eta_gammas: true, eta_hat: false })?[0])
}

pub fn compute_eta_hat(sys: &GlobalSystem, mode: Mode) -> Result<Enclosure> {
    Ok(compute(sys, mode, Wanted { eta_gammas: false, eta_hat: true })?[1])
}

pub fn compute_gammas(sys: &GlobalSystem, mode: Mode) -> Result<Gammas> {
    let v = compute(sys, mode, Wanted { eta_gammas: true, eta_hat: false })?;
    Ok(Gammas {
        gamma1: v[2],
        gamma0: v[3],
        gamma_t: v[4],
    })
}

/// All five constants, sharing the factorizations between them.
pub fn compute_all(sys: &GlobalSystem, mode: Mode) -> Result<StabilityConstants> {
    let v = compute(sys, mode, ALL)?;
    Ok(StabilityConstants {
        eta: v[0],
        eta_hat: v[1],
        gamma1: v[2],
        gamma0: v[3],
        gamma_t: v[4],
        config: StabilityConfig::of(sys, mode),
    })
}

fn compute(sys: &GlobalSystem, mode: Mode, wanted: Wanted) -> Result<[Enclosure; 5]> {
    match mode {
        Mode::Fast => Ok(block_constants(sys, wanted)?.map(Enclosure::fast)),
        Mode::Rigorous => rigorous_constants(sys, wanted),
    }
}

/// How the largest singular value of a dense operator is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralMethod {
    /// Symmetric eigensolver on the Gram matrix.
    Eigen,
    /// Power iteration on the Gram matrix with the caps below.
    Power,
}

pub const POWER_MAX_ITERATIONS: usize = 10_000;
pub const POWER_TOLERANCE: f64 = 1e-12;

/// Largest singular value of `x`.
pub fn spectral_norm(x: &DMatrix<f64>, method: SpectralMethod) -> Result<f64> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Ok(0.0);
    }
    let gram = if x.nrows() < x.ncols() {
        x * x.transpose()
    } else {
        x.tr_mul(x)
    };
    let lambda = match method {
        SpectralMethod::Eigen => top_eigenvalue(&gram),
        SpectralMethod::Power => power_iteration(|v| &gram * v, gram.nrows())?,
    };
    Ok(lambda.max(0.0).sqrt())
}

fn top_eigenvalue(s: &DMatrix<f64>) -> f64 {
    s.clone().symmetric_eigenvalues().iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Largest eigenvalue of a symmetric positive semidefinite operator.
///
/// Starts from the normalized all-ones vector and stops when the Rayleigh
/// quotient changes by less than [`POWER_TOLERANCE`] relative. If that
/// stalls, a two-vector subspace iteration with a fixed second start vector
/// takes over, which handles a near-tie between the top two eigenvalues.
pub fn power_iteration(apply: impl Fn(&DVector<f64>) -> DVector<f64>, dim: usize) -> Result<f64> {
    if dim == 0 {
        return Ok(0.0);
    }
    let mut v = DVector::from_element(dim, 1.0 / (dim as f64).sqrt());
    let mut rho = 0.0;
    for _ in 0..POWER_MAX_ITERATIONS {
        let w = apply(&v);
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        v = w / norm;
        if (next - rho).abs() <= POWER_TOLERANCE * next.abs() {
            return Ok(next);
        }
        rho = next;
    }
    subspace_iteration(&apply, v)
}

fn subspace_iteration(apply: &impl Fn(&DVector<f64>) -> DVector<f64>, start: DVector<f64>) -> Result<f64> {
    let dim = start.len();
    let mut q = DMatrix::zeros(dim, 2);
    q.set_column(0, &start);
    // deterministic second direction
    q.set_column(1, &DVector::from_fn(dim, |i, _| ((i * 7919 % 97) as f64) - 48.0));
    let mut theta = 0.0;
    for _ in 0..POWER_MAX_ITERATIONS {
        q = q.qr().q();
        let mut z = DMatrix::zeros(dim, q.ncols());
        for c in 0..q.ncols() {
            z.set_column(c, &apply(&q.column(c).into_owned()));
        }
        let h = q.tr_mul(&z);
        let h = (&h + h.transpose()) * 0.5;
        let next = top_eigenvalue(&h);
        if (next - theta).abs() <= POWER_TOLERANCE * next.abs() {
            return Ok(next);
        }
        theta = next;
        q = z;
    }
    Err(Error::NoConvergence {
        iterations: 2 * POWER_MAX_ITERATIONS,
    })
}

/// Generalized eigenvalues of `Ks v = lambda Ms v`, ascending.
pub fn space_eigenvalues(sys: &GlobalSystem) -> Result<Vec<f64>> {
    let ls = &sys.chol_ms;
    let inv = ls
        .clone()
        .solve_lower_triangular(&DMatrix::identity(sys.n(), sys.n()))
        .ok_or(Error::Singular)?;
    let s = &inv * &sys.factors.ks * inv.transpose();
    let s = (&s + s.transpose()) * 0.5;
    let mut lambda: Vec<f64> = s.symmetric_eigenvalues().iter().copied().collect();
    lambda.sort_by(f64::total_cmp);
    Ok(lambda)
}

/// Norms of one spatial block.
#[derive(Debug, Clone, Copy, Default)]
struct BlockNorms {
    /// `|| Lu^T (At + nu l Gt^T)^{-1} La ||`
    sigma: f64,
    /// `|| y^T (At + nu l Gt^T)^{-1} La ||`
    sigma_t: f64,
    /// `|| La^T (Gt + nu l Ut)^{-1} Lu ||`
    sigma_hat: f64,
}

fn tridiagonal_lu(a: &DMatrix<f64>) -> Result<BandedLu> {
    BandedLu::factor(a.nrows(), 1, 1, |i, j| a[(i, j)])
}

fn block_norms(sys: &GlobalSystem, lambda: f64, wanted: Wanted) -> Result<BlockNorms> {
    let f = &sys.factors;
    let nl = sys.nu * lambda;
    let mut out = BlockNorms::default();
    if wanted.eta_gammas {
        let k = &f.at + f.gt.transpose() * nl;
        let z = tridiagonal_lu(&k)?.solve_matrix(&sys.chol_at);
        out.sigma = spectral_norm(&(sys.chol_ut.transpose() * &z), SpectralMethod::Eigen)?;
        out.sigma_t = z.row(sys.m() - 1).norm();
    }
    if wanted.eta_hat {
        let g = &f.gt + &f.ut * nl;
        let z = tridiagonal_lu(&g)?.solve_matrix(&sys.chol_ut);
        out.sigma_hat = spectral_norm(&(sys.chol_at.transpose() * &z), SpectralMethod::Eigen)?;
    }
    Ok(out)
}

/// `[eta, eta_hat, gamma1, gamma0, gammaT]` through the block decomposition.
fn block_constants(sys: &GlobalSystem, wanted: Wanted) -> Result<[f64; 5]> {
    let lambda = space_eigenvalues(sys)?;
    let blocks: Vec<BlockNorms> = lambda
        .par_iter()
        .map(|&l| block_norms(sys, l, wanted))
        .collect::<Result<_>>()?;
    let nu = sys.nu;
    let mut v = [0.0f64; 5];
    for (&l, b) in lambda.iter().zip(&blocks) {
        let r = l.sqrt();
        v[0] = v[0].max(r * b.sigma);
        v[1] = v[1].max(b.sigma_hat);
        v[2] = v[2].max(nu * l * b.sigma);
        v[3] = v[3].max(nu * r * b.sigma);
        v[4] = v[4].max(nu * r * b.sigma_t);
    }
    Ok(v)
}

/// Largest `m * n` accepted by [`dense_constants`].
pub const DENSE_DOF_LIMIT: usize = 2000;

/// `[eta, eta_hat, gamma1, gamma0, gammaT]` from the assembled global
/// matrices, without the block decomposition. For cross-checks.
pub fn dense_constants(sys: &GlobalSystem, method: SpectralMethod) -> Result<[f64; 5]> {
    let dofs = sys.dofs();
    if dofs > DENSE_DOF_LIMIT {
        return Err(Error::RigorousTooLarge {
            dofs,
            limit: DENSE_DOF_LIMIT,
        });
    }
    let nu = sys.nu;
    let lu_q = sys.q_matrix_dense().lu();
    let la = sys.chol_a().to_dense();
    let lw = sys.chol_w().to_dense();
    let lm = sys.chol_m().to_dense();
    let lu = sys.chol_u().to_dense();
    let yh = sys.y_half().to_dense();
    let za = lu_q.solve(&la).ok_or(Error::Singular)?;
    let zw = lu_q.solve(&lw).ok_or(Error::Singular)?;
    let zh = sys.qhat_matrix_dense().lu().solve(&lu).ok_or(Error::Singular)?;
    Ok([
        spectral_norm(&(lm.transpose() * &za), method)?,
        spectral_norm(&(la.transpose() * &zh), method)?,
        nu * spectral_norm(&(lm.transpose() * &zw), method)?,
        nu * spectral_norm(&(lu.transpose() * &zw), method)?,
        nu * spectral_norm(&(yh.transpose() * &zw), method)?,
    ])
}

/// Enclosure of the largest singular value over every member of `[X]`.
pub fn enclose_spectral_norm(x: &IntervalMatrix) -> Result<Interval> {
    let gram = if x.nrows() < x.ncols() {
        x.mul(&x.transpose())
    } else {
        x.transpose().mul(x)
    };
    let lam = enclose_lambda_max(&gram)?;
    Ok(Interval {
        lo: lam.lo.max(0.0),
        hi: lam.hi.max(0.0),
    }
    .sqrt()?)
}

fn rigorous_constants(sys: &GlobalSystem, wanted: Wanted) -> Result<[Enclosure; 5]> {
    let dofs = sys.dofs();
    if dofs > RIGOROUS_DOF_LIMIT {
        return Err(Error::RigorousTooLarge {
            dofs,
            limit: RIGOROUS_DOF_LIMIT,
        });
    }
    let f = interval_factors(&sys.factors.space, &sys.factors.time);
    let c = interval_cholesky(&f)?;
    let nu = decimal_enclosure(sys.nu);
    let zero = Enclosure::rigorous(Interval::point(0.0));
    let mut out = [zero; 5];

    let la = c.at.kron(&c.ms);
    let lu = c.ut.kron(&c.ms);
    if wanted.eta_gammas {
        let a = f.at.kron(&f.ms);
        let b = f.gt.transpose().kron(&f.ks);
        let k = a.add(&b.scale(nu));
        let lw = c.at.kron(&c.ks);
        let lm = c.ut.kron(&c.ks);
        let yh = f.yt.kron(&c.ms);
        let z = enclose_solve(&k, &la.hcat(&lw))?;
        let za = z.columns(0, dofs);
        let zw = z.columns(dofs, dofs);
        out[0] = Enclosure::rigorous(enclose_spectral_norm(&lm.transpose().mul(&za))?);
        out[2] = Enclosure::rigorous(nu * enclose_spectral_norm(&lm.transpose().mul(&zw))?);
        out[3] = Enclosure::rigorous(nu * enclose_spectral_norm(&lu.transpose().mul(&zw))?);
        out[4] = Enclosure::rigorous(nu * enclose_spectral_norm(&yh.transpose().mul(&zw))?);
    }
    if wanted.eta_hat {
        let g = f.gt.kron(&f.ms);
        let m = f.ut.kron(&f.ks);
        let ghat = g.add(&m.scale(nu));
        let z = enclose_solve(&ghat, &lu)?;
        out[1] = Enclosure::rigorous(enclose_spectral_norm(&la.transpose().mul(&z))?);
    }
    Ok(out)
}
