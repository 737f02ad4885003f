//! Elemental time/space factors and the Kronecker-structured global system.
//!
//! Global degrees of freedom are ordered time-major: the basis function
//! `psi_p(t) s_q(x)` has index `p * n + q` (0-based), so every global matrix
//! is `(time factor) (x) (space factor)`:
//!
//! | matrix | entry                                  | factors          |
//! |--------|----------------------------------------|------------------|
//! | `A`    | `<d_t phi_j, d_t phi_i>`               | `At (x) Ms`      |
//! | `M`    | `<grad phi_j, grad phi_i>`             | `Ut (x) Ks`      |
//! | `B`    | `<grad phi_j, d_t grad phi_i>`         | `Gt^T (x) Ks`    |
//! | `G`    | `<d_t phi_j, phi_i>`                   | `Gt (x) Ms`      |
//! | `U`    | `<phi_j, phi_i>`                       | `Ut (x) Ms`      |
//! | `W`    | `<d_t grad phi_j, d_t grad phi_i>`     | `At (x) Ks`      |
//! | `Y`    | `<phi_j(., T), phi_i(., T)>`           | `y y^T (x) Ms`   |

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::{SpaceMesh, TimeMesh};
use crate::quadrature::{gauss_legendre, on_interval};
use crate::rigor::{verified_cholesky, Interval, IntervalMatrix};

/// The small tensor factors of every global matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorMatrices {
    pub space: SpaceMesh,
    pub time: TimeMesh,
    /// space mass `<s_j, s_i>`
    pub ms: DMatrix<f64>,
    /// space stiffness `<s_j', s_i'>`
    pub ks: DMatrix<f64>,
    /// time stiffness `<psi_j', psi_i'>`
    pub at: DMatrix<f64>,
    /// time mass `<psi_j, psi_i>`
    pub ut: DMatrix<f64>,
    /// time drift, `gt[p, q] = <psi_q', psi_p>`
    pub gt: DMatrix<f64>,
    /// endpoint values `psi_i(T)`
    pub yt: DVector<f64>,
}

/// One closed-form entry `(row, col, num / den * T^t_pow)`.
type Entry = (usize, usize, f64, f64, i32);

/// Entries of the factor matrices as rationals times a power of `T`, so the
/// same closed forms feed both the floating-point and the interval paths.
struct Entries {
    ms: Vec<Entry>,
    ks: Vec<Entry>,
    at: Vec<Entry>,
    ut: Vec<Entry>,
    gt: Vec<Entry>,
}

/// Assemble P1 cell matrices; stiffness `(1/h)[[1,-1],[-1,1]]`, mass
/// `(h/6)[[2,1],[1,2]]`, drift `(1/2)[[-1,1],[-1,1]]`. The time node `t_0`
/// and the space boundary nodes are dropped.
fn closed_form_entries(space: &SpaceMesh, time: &TimeMesh) -> Entries {
    let n = space.dofs();
    let m = time.dofs();
    let ncell = space.n_cells as f64;
    let mcell = time.m_cells as f64;

    let mut e = Entries {
        ms: Vec::new(),
        ks: Vec::new(),
        at: Vec::new(),
        ut: Vec::new(),
        gt: Vec::new(),
    };
    // h = 1/N: h/6 = 1/(6N), 2h/3 = 2/(3N), 1/h = N
    for i in 0..n {
        e.ms.push((i, i, 2.0, 3.0 * ncell, 0));
        e.ks.push((i, i, 2.0 * ncell, 1.0, 0));
        if i + 1 < n {
            for (a, b) in [(i, i + 1), (i + 1, i)] {
                e.ms.push((a, b, 1.0, 6.0 * ncell, 0));
                e.ks.push((a, b, -ncell, 1.0, 0));
            }
        }
    }
    // k = T/M: 1/k = M T^-1, k/6 = T/(6M); the last node has only its left cell
    for p in 0..m {
        let last = p + 1 == m;
        let c = if last { 1.0 } else { 2.0 };
        e.at.push((p, p, c * mcell, 1.0, -1));
        e.ut.push((p, p, c, 3.0 * mcell, 1));
        if last {
            e.gt.push((p, p, 1.0, 2.0, 0));
        } else {
            for (a, b) in [(p, p + 1), (p + 1, p)] {
                e.at.push((a, b, -mcell, 1.0, -1));
                e.ut.push((a, b, 1.0, 6.0 * mcell, 1));
            }
            e.gt.push((p, p + 1, 1.0, 2.0, 0));
            e.gt.push((p + 1, p, -1.0, 2.0, 0));
        }
    }
    e
}

fn dense(dim: usize, entries: &[Entry], t: f64) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(dim, dim);
    for &(i, j, num, den, tp) in entries {
        out[(i, j)] = match tp {
            0 => num / den,
            1 => num * t / den,
            _ => num / (den * t),
        };
    }
    out
}

fn interval_dense(dim: usize, entries: &[Entry], t: Interval) -> IntervalMatrix {
    let mut cells = vec![Interval::point(0.0); dim * dim];
    for &(i, j, num, den, tp) in entries {
        let r = Interval::point(num).div(Interval::point(den)).expect("nonzero denominator");
        cells[i * dim + j] = match tp {
            0 => r,
            1 => r * t,
            _ => r.div(t).expect("positive final time"),
        };
    }
    IntervalMatrix::from_fn(dim, dim, |i, j| cells[i * dim + j])
}

pub fn elemental_matrices(space: &SpaceMesh, time: &TimeMesh) -> FactorMatrices {
    let e = closed_form_entries(space, time);
    let (n, m) = (space.dofs(), time.dofs());
    let t = time.final_time;
    let mut yt = DVector::zeros(m);
    yt[m - 1] = 1.0;
    FactorMatrices {
        space: *space,
        time: *time,
        ms: dense(n, &e.ms, t),
        ks: dense(n, &e.ks, t),
        at: dense(m, &e.at, t),
        ut: dense(m, &e.ut, t),
        gt: dense(m, &e.gt, t),
        yt,
    }
}

/// Enclosure of a user-supplied decimal parameter such as `0.1` or `1`.
pub fn decimal_enclosure(x: f64) -> Interval {
    if x.fract() == 0.0 && x.abs() < 9.0e15 {
        Interval::point(x)
    } else {
        Interval::around(x)
    }
}

/// Interval versions of the factor matrices, containing the exact integrals.
#[derive(Debug, Clone)]
pub struct IntervalFactors {
    pub ms: IntervalMatrix,
    pub ks: IntervalMatrix,
    pub at: IntervalMatrix,
    pub ut: IntervalMatrix,
    pub gt: IntervalMatrix,
    pub yt: IntervalMatrix,
}

pub fn interval_factors(space: &SpaceMesh, time: &TimeMesh) -> IntervalFactors {
    let e = closed_form_entries(space, time);
    let t = decimal_enclosure(time.final_time);
    let (n, m) = (space.dofs(), time.dofs());
    IntervalFactors {
        ms: interval_dense(n, &e.ms, t),
        ks: interval_dense(n, &e.ks, t),
        at: interval_dense(m, &e.at, t),
        ut: interval_dense(m, &e.ut, t),
        gt: interval_dense(m, &e.gt, t),
        yt: IntervalMatrix::from_fn(m, 1, |i, _| Interval::point(if i + 1 == m { 1.0 } else { 0.0 })),
    }
}

/// A Kronecker product `time (x) space` kept in factored form.
#[derive(Debug, Clone, PartialEq)]
pub struct Kron {
    pub time: DMatrix<f64>,
    pub space: DMatrix<f64>,
}

impl Kron {
    pub fn new(time: DMatrix<f64>, space: DMatrix<f64>) -> Self {
        Self { time, space }
    }

    pub fn nrows(&self) -> usize {
        self.time.nrows() * self.space.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.time.ncols() * self.space.ncols()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        self.time.kronecker(&self.space)
    }

    /// `(T (x) S) v` as `S V T^T` with `V` the space-by-time reshaping of `v`.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        assert_eq!(v.len(), self.ncols());
        let vm = DMatrix::from_column_slice(self.space.ncols(), self.time.ncols(), v.as_slice());
        let out = &self.space * vm * self.time.transpose();
        DVector::from_column_slice(out.as_slice())
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.time.transpose(), self.space.transpose())
    }

    pub fn quad_form(&self, v: &DVector<f64>) -> f64 {
        v.dot(&self.apply(v))
    }
}

/// The global space-time system for one `(nu, h, k)` configuration.
#[derive(Debug, Clone)]
pub struct GlobalSystem {
    pub nu: f64,
    pub factors: FactorMatrices,
    /// Cholesky factors of the time/space factors.
    pub chol_at: DMatrix<f64>,
    pub chol_ut: DMatrix<f64>,
    pub chol_ms: DMatrix<f64>,
    pub chol_ks: DMatrix<f64>,
}

fn cholesky(m: &DMatrix<f64>, which: &'static str) -> Result<DMatrix<f64>> {
    m.clone()
        .cholesky()
        .map(|c| c.l())
        .ok_or(Error::AssemblyIntegrity { which })
}

pub fn build_global_system(factors: FactorMatrices, nu: f64) -> Result<GlobalSystem> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::BadDiffusion(nu));
    }
    Ok(GlobalSystem {
        nu,
        chol_at: cholesky(&factors.at, "At")?,
        chol_ut: cholesky(&factors.ut, "Ut")?,
        chol_ms: cholesky(&factors.ms, "Ms")?,
        chol_ks: cholesky(&factors.ks, "Ks")?,
        factors,
    })
}

impl GlobalSystem {
    pub fn assemble(space: &SpaceMesh, time: &TimeMesh, nu: f64) -> Result<Self> {
        build_global_system(elemental_matrices(space, time), nu)
    }

    pub fn n(&self) -> usize {
        self.factors.space.dofs()
    }

    pub fn m(&self) -> usize {
        self.factors.time.dofs()
    }

    pub fn dofs(&self) -> usize {
        self.n() * self.m()
    }

    pub fn a(&self) -> Kron {
        Kron::new(self.factors.at.clone(), self.factors.ms.clone())
    }

    pub fn mstiff(&self) -> Kron {
        Kron::new(self.factors.ut.clone(), self.factors.ks.clone())
    }

    pub fn b(&self) -> Kron {
        Kron::new(self.factors.gt.transpose(), self.factors.ks.clone())
    }

    pub fn g(&self) -> Kron {
        Kron::new(self.factors.gt.clone(), self.factors.ms.clone())
    }

    pub fn u(&self) -> Kron {
        Kron::new(self.factors.ut.clone(), self.factors.ms.clone())
    }

    pub fn w(&self) -> Kron {
        Kron::new(self.factors.at.clone(), self.factors.ks.clone())
    }

    pub fn y(&self) -> Kron {
        let y = &self.factors.yt;
        Kron::new(y * y.transpose(), self.factors.ms.clone())
    }

    /// Rank-`n` factor of `Y`: `y_T (x) L_s` with `Ms = L_s L_s^T`.
    pub fn y_half(&self) -> Kron {
        Kron::new(
            DMatrix::from_column_slice(self.m(), 1, self.factors.yt.as_slice()),
            self.chol_ms.clone(),
        )
    }

    pub fn chol_a(&self) -> Kron {
        Kron::new(self.chol_at.clone(), self.chol_ms.clone())
    }

    pub fn chol_m(&self) -> Kron {
        Kron::new(self.chol_ut.clone(), self.chol_ks.clone())
    }

    pub fn chol_u(&self) -> Kron {
        Kron::new(self.chol_ut.clone(), self.chol_ms.clone())
    }

    pub fn chol_w(&self) -> Kron {
        Kron::new(self.chol_at.clone(), self.chol_ks.clone())
    }

    /// Dense `A + nu B`, the matrix of the scheme `Q`.
    pub fn q_matrix_dense(&self) -> DMatrix<f64> {
        self.a().to_dense() + self.b().to_dense() * self.nu
    }

    /// Dense `G + nu M`, the matrix of the comparison scheme.
    pub fn qhat_matrix_dense(&self) -> DMatrix<f64> {
        self.g().to_dense() + self.mstiff().to_dense() * self.nu
    }
}

/// Full matrices computed entry by entry with tensor Gauss quadrature,
/// independently of the closed-form factors. For small instances only.
#[derive(Debug, Clone)]
pub struct BruteForceSystem {
    pub a: DMatrix<f64>,
    pub m: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub y: DMatrix<f64>,
    /// `A + nu B`
    pub k: DMatrix<f64>,
}

pub const ORACLE_DOF_LIMIT: usize = 400;

pub fn brute_force_assembly(
    space: &SpaceMesh,
    time: &TimeMesh,
    nu: f64,
    quad_order: usize,
) -> Result<BruteForceSystem> {
    let (n, m) = (space.dofs(), time.dofs());
    let dofs = n * m;
    if dofs > ORACLE_DOF_LIMIT {
        return Err(Error::OracleTooLarge {
            dofs,
            limit: ORACLE_DOF_LIMIT,
        });
    }
    let rule = gauss_legendre(quad_order.max(1));
    let zero = || DMatrix::<f64>::zeros(dofs, dofs);
    let (mut a, mut mm, mut b, mut g, mut u, mut w, mut y) =
        (zero(), zero(), zero(), zero(), zero(), zero(), zero());
    let idx = |p: usize, q: usize| p * n + q;

    for c in 0..time.m_cells {
        let (t0, t1) = (time.node(c), time.node(c + 1));
        // time dofs with support on this cell
        let tdofs: Vec<usize> = (0..m).filter(|&p| p + 1 == c || p == c).collect();
        for e in 0..space.n_cells {
            let (x0, x1) = (space.node(e), space.node(e + 1));
            let sdofs: Vec<usize> = (0..n).filter(|&q| q + 1 == e || q == e).collect();
            for (t, wt) in on_interval(&rule, t0, t1) {
                for (x, wx) in on_interval(&rule, x0, x1) {
                    let wq = wt * wx;
                    for &pi in &tdofs {
                        for &qi in &sdofs {
                            let (ti, dti) = (time.basis(pi, t), time.basis_deriv(pi, t));
                            let (si, dsi) = (space.basis(qi, x), space.basis_deriv(qi, x));
                            for &pj in &tdofs {
                                for &qj in &sdofs {
                                    let (tj, dtj) = (time.basis(pj, t), time.basis_deriv(pj, t));
                                    let (sj, dsj) = (space.basis(qj, x), space.basis_deriv(qj, x));
                                    let (i, j) = (idx(pi, qi), idx(pj, qj));
                                    // phi = psi(t) s(x): d_t phi = psi' s, grad phi = psi s'
                                    a[(i, j)] += wq * (dtj * sj) * (dti * si);
                                    mm[(i, j)] += wq * (tj * dsj) * (ti * dsi);
                                    b[(i, j)] += wq * (tj * dsj) * (dti * dsi);
                                    g[(i, j)] += wq * (dtj * sj) * (ti * si);
                                    u[(i, j)] += wq * (tj * sj) * (ti * si);
                                    w[(i, j)] += wq * (dtj * dsj) * (dti * dsi);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    // final-time trace: only functions with psi(T) != 0 contribute
    let tf = time.final_time;
    for e in 0..space.n_cells {
        let (x0, x1) = (space.node(e), space.node(e + 1));
        for (x, wx) in on_interval(&rule, x0, x1) {
            for pi in 0..m {
                for qi in 0..n {
                    let vi = time.basis(pi, tf) * space.basis(qi, x);
                    if vi == 0.0 {
                        continue;
                    }
                    for pj in 0..m {
                        for qj in 0..n {
                            let vj = time.basis(pj, tf) * space.basis(qj, x);
                            y[(idx(pi, qi), idx(pj, qj))] += wx * vi * vj;
                        }
                    }
                }
            }
        }
    }
    let k = &a + &b * nu;
    Ok(BruteForceSystem {
        a,
        m: mm,
        b,
        g,
        u,
        w,
        y,
        k,
    })
}

/// Write the nonzero entries of `mat` as `row col value` lines (1-based).
pub fn write_triplets<W: Write>(mut out: W, mat: &DMatrix<f64>) -> io::Result<()> {
    for j in 0..mat.ncols() {
        for i in 0..mat.nrows() {
            let v = mat[(i, j)];
            if v != 0.0 {
                writeln!(out, "{} {} {:.17e}", i + 1, j + 1, v)?;
            }
        }
    }
    Ok(())
}

/// Verified interval Cholesky factors of the four SPD time/space factors.
#[derive(Debug, Clone)]
pub struct IntervalCholesky {
    pub at: IntervalMatrix,
    pub ut: IntervalMatrix,
    pub ms: IntervalMatrix,
    pub ks: IntervalMatrix,
}

pub fn interval_cholesky(f: &IntervalFactors) -> Result<IntervalCholesky> {
    let go = |m: &IntervalMatrix, which| verified_cholesky(m).ok_or(Error::AssemblyIntegrity { which });
    Ok(IntervalCholesky {
        at: go(&f.at, "At")?,
        ut: go(&f.ut, "Ut")?,
        ms: go(&f.ms, "Ms")?,
        ks: go(&f.ks, "Ks")?,
    })
}

/// Summary of the matrix shapes for reports.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Dimensions {
    pub m: usize,
    pub n: usize,
    pub mn: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn meshes(nc: usize, mc: usize) -> (SpaceMesh, TimeMesh) {
        (SpaceMesh::new(nc).unwrap(), TimeMesh::new(mc, 1.0).unwrap())
    }

    #[test]
    fn single_hat_and_single_time_cell() {
        let (s, t) = meshes(2, 1);
        let f = elemental_matrices(&s, &t);
        assert_relative_eq!(f.ms[(0, 0)], 1.0 / 3.0, max_relative = 1e-15);
        assert_eq!(f.ks[(0, 0)], 4.0);
        assert_eq!(f.at[(0, 0)], 1.0);
        assert_relative_eq!(f.ut[(0, 0)], 1.0 / 3.0, max_relative = 1e-15);
        assert_eq!(f.gt[(0, 0)], 0.5);
        assert_eq!(f.yt[0], 1.0);
    }

    #[test]
    fn global_one_by_one() {
        let (s, t) = meshes(2, 1);
        let sys = GlobalSystem::assemble(&s, &t, 1.0).unwrap();
        let one = |k: Kron| k.to_dense()[(0, 0)];
        assert_relative_eq!(one(sys.a()), 1.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(one(sys.mstiff()), 4.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(one(sys.b()), 2.0, max_relative = 1e-15);
        assert_relative_eq!(one(sys.g()), 1.0 / 6.0, max_relative = 1e-15);
        assert_relative_eq!(one(sys.u()), 1.0 / 9.0, max_relative = 1e-15);
        assert_relative_eq!(one(sys.w()), 4.0, max_relative = 1e-15);
        assert_relative_eq!(one(sys.y_half()), 1.0 / 3f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn drift_identity() {
        for mc in [1, 2, 5, 17] {
            let (s, t) = meshes(3, mc);
            let f = elemental_matrices(&s, &t);
            let lhs = &f.gt + f.gt.transpose();
            let rhs = &f.yt * f.yt.transpose();
            assert!((lhs - rhs).abs().max() < 1e-15);
        }
    }

    #[test]
    fn kron_cholesky_identity() {
        let (s, t) = meshes(5, 4);
        let sys = GlobalSystem::assemble(&s, &t, 0.3).unwrap();
        for (l, full) in [
            (sys.chol_a(), sys.a()),
            (sys.chol_m(), sys.mstiff()),
            (sys.chol_u(), sys.u()),
            (sys.chol_w(), sys.w()),
        ] {
            let ld = l.to_dense();
            let diff = &ld * ld.transpose() - full.to_dense();
            assert!(diff.abs().max() < 1e-12 * full.to_dense().abs().max());
        }
        let yh = sys.y_half().to_dense();
        assert!((&yh * yh.transpose() - sys.y().to_dense()).abs().max() < 1e-14);
    }

    #[test]
    fn kron_apply_matches_dense() {
        let (s, t) = meshes(4, 3);
        let sys = GlobalSystem::assemble(&s, &t, 1.0).unwrap();
        let v = DVector::from_fn(sys.dofs(), |i, _| (i as f64 * 0.37).sin());
        for k in [sys.a(), sys.b(), sys.g(), sys.w()] {
            let d = k.to_dense() * &v;
            assert!((k.apply(&v) - d).abs().max() < 1e-12);
        }
    }

    #[test]
    fn brute_force_matches_small_examples() {
        let (s, t) = meshes(2, 1);
        let bf = brute_force_assembly(&s, &t, 1.0, 3).unwrap();
        assert_relative_eq!(bf.w[(0, 0)], 4.0, max_relative = 1e-13);
        assert_relative_eq!(bf.k[(0, 0)], 7.0 / 3.0, max_relative = 1e-13);
        let sys = GlobalSystem::assemble(&s, &t, 1.0).unwrap();
        assert!((bf.k.clone() - sys.q_matrix_dense()).abs().max() < 1e-13);

        // m = 2, n = 1: Y lives in the last time block only
        let (s, t) = meshes(2, 2);
        let bf = brute_force_assembly(&s, &t, 1.0, 3).unwrap();
        assert_eq!(bf.y[(0, 0)], 0.0);
        assert_eq!(bf.y[(0, 1)], 0.0);
        assert!(bf.y[(1, 1)] > 0.0);
    }

    #[test]
    fn brute_force_rejects_oversize() {
        let (s, t) = meshes(21, 21);
        assert!(matches!(
            brute_force_assembly(&s, &t, 1.0, 3),
            Err(Error::OracleTooLarge { .. })
        ));
    }

    #[test]
    fn drift_identity_against_quadrature() {
        let (s, t) = meshes(2, 2);
        let bf = brute_force_assembly(&s, &t, 1.0, 4).unwrap();
        // with n = 1 and Ms = [h*2/3], G + G^T = Y
        let lhs = &bf.g + bf.g.transpose();
        assert!((lhs - &bf.y).abs().max() < 1e-13);
    }

    #[test]
    fn nonpositive_diffusion_rejected() {
        let (s, t) = meshes(3, 3);
        let f = elemental_matrices(&s, &t);
        assert!(build_global_system(f.clone(), 0.0).is_err());
        assert!(build_global_system(f, -1.0).is_err());
    }

    #[test]
    fn interval_factors_contain_float_factors() {
        let (s, t) = meshes(5, 7);
        let f = elemental_matrices(&s, &t);
        let iv = interval_factors(&s, &t);
        assert!(iv.ms.contains(&f.ms));
        assert!(iv.ks.contains(&f.ks));
        assert!(iv.at.contains(&f.at));
        assert!(iv.ut.contains(&f.ut));
        assert!(iv.gt.contains(&f.gt));
        let ch = interval_cholesky(&iv).unwrap();
        let sys = build_global_system(f, 1.0).unwrap();
        assert!((ch.at.mid() - &sys.chol_at).abs().max() < 1e-13);
    }

    #[test]
    fn triplets_format() {
        let mut buf = Vec::new();
        write_triplets(&mut buf, &DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -2.5, 0.0])).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("1 1 "));
        assert!(lines[1].starts_with("2 1 -2.5"));
    }
}
