//! Full-discrete solutions, discrete norms and manufactured-solution checks.
//!
//! The scheme `Q` solves `(A + nu B) u = b` with `b_i = <f, d_t phi_i>`; the
//! comparison scheme `Q^` solves `(G + nu M) u = b^` with `b^_i = <f, phi_i>`.
//! Both global matrices have bandwidth `n + 1` in the time-major ordering and
//! are factored by banded LU with partial pivoting.

use std::f64::consts::PI;
use std::io::{self, Write};

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::{GlobalSystem, Kron};
use crate::banded::BandedLu;
use crate::error::{Error, Result};
use crate::estimates::{base_constants, stability_report, tilde_constants, Apriori};
use crate::norms::compute_all;
use crate::quadrature::{gauss_legendre, on_interval};
use crate::rigor::Mode;

/// Exact solutions with zero initial and boundary values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ManufacturedCase {
    /// `sin(pi x) (1 - e^{-t})`
    U1,
    /// `x (1 - x) t`
    U2,
    /// `sin(2 pi x) sin(t) t`
    U3,
    /// `0`
    Zero,
}

impl ManufacturedCase {
    pub const ALL: [ManufacturedCase; 4] = [Self::U1, Self::U2, Self::U3, Self::Zero];

    pub fn label(&self) -> &'static str {
        match self {
            Self::U1 => "u1",
            Self::U2 => "u2",
            Self::U3 => "u3",
            Self::Zero => "zero",
        }
    }

    pub fn parse(label: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.label() == label)
            .ok_or_else(|| Error::UnknownCase(label.to_string()))
    }

    pub fn u(&self, x: f64, t: f64) -> f64 {
        match self {
            Self::U1 => (PI * x).sin() * (1.0 - (-t).exp()),
            Self::U2 => x * (1.0 - x) * t,
            Self::U3 => (2.0 * PI * x).sin() * t.sin() * t,
            Self::Zero => 0.0,
        }
    }

    pub fn u_t(&self, x: f64, t: f64) -> f64 {
        match self {
            Self::U1 => (PI * x).sin() * (-t).exp(),
            Self::U2 => x * (1.0 - x),
            Self::U3 => (2.0 * PI * x).sin() * (t.cos() * t + t.sin()),
            Self::Zero => 0.0,
        }
    }

    pub fn u_x(&self, x: f64, t: f64) -> f64 {
        match self {
            Self::U1 => PI * (PI * x).cos() * (1.0 - (-t).exp()),
            Self::U2 => (1.0 - 2.0 * x) * t,
            Self::U3 => 2.0 * PI * (2.0 * PI * x).cos() * t.sin() * t,
            Self::Zero => 0.0,
        }
    }

    pub fn u_xx(&self, x: f64, t: f64) -> f64 {
        match self {
            Self::U1 => -PI * PI * (PI * x).sin() * (1.0 - (-t).exp()),
            Self::U2 => -2.0 * t,
            Self::U3 => -4.0 * PI * PI * (2.0 * PI * x).sin() * t.sin() * t,
            Self::Zero => 0.0,
        }
    }

    /// Right-hand side `u_t - nu u_xx`.
    pub fn f(&self, nu: f64, x: f64, t: f64) -> f64 {
        self.u_t(x, t) - nu * self.u_xx(x, t)
    }
}

/// Which test functions the load vector uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LoadForm {
    /// `<f, d_t phi_i>`, for the scheme `Q`.
    A0,
    /// `<f, phi_i>`, for the scheme `Q^`.
    A0Hat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scheme {
    Q,
    QHat,
}

impl Scheme {
    pub fn load_form(&self) -> LoadForm {
        match self {
            Scheme::Q => LoadForm::A0,
            Scheme::QHat => LoadForm::A0Hat,
        }
    }
}

/// Coefficient vector in the time-major basis ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub values: DVector<f64>,
    pub m: usize,
    pub n: usize,
}

impl Coefficients {
    pub fn new(values: DVector<f64>, m: usize, n: usize) -> Result<Self> {
        if values.len() != m * n {
            return Err(Error::Dimension(format!("{} coefficients for m*n = {}", values.len(), m * n)));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { values, m, n })
    }

    pub fn zeros(sys: &GlobalSystem) -> Self {
        Self {
            values: DVector::zeros(sys.dofs()),
            m: sys.m(),
            n: sys.n(),
        }
    }

    /// Coefficients of the interpolant of `g` at the space-time nodes.
    pub fn interpolate(sys: &GlobalSystem, g: impl Fn(f64, f64) -> f64) -> Self {
        let (space, time) = (&sys.factors.space, &sys.factors.time);
        let n = sys.n();
        let values = DVector::from_fn(sys.dofs(), |i, _| g(space.dof_coord(i % n), time.dof_coord(i / n)));
        Self { values, m: sys.m(), n }
    }

    fn check(&self, sys: &GlobalSystem) -> Result<()> {
        if self.m != sys.m() || self.n != sys.n() {
            return Err(Error::Dimension(format!(
                "coefficients for m={}, n={} used with m={}, n={}",
                self.m,
                self.n,
                sys.m(),
                sys.n()
            )));
        }
        Ok(())
    }

    /// Value of the discrete function at global node `(time node p, space node q)`.
    pub fn nodal(&self, p: usize, q: usize) -> f64 {
        if p == 0 || q == 0 || q > self.n {
            0.0
        } else {
            self.values[(p - 1) * self.n + (q - 1)]
        }
    }
}

fn check_order(order: usize, min: usize) -> Result<()> {
    if order < min {
        return Err(Error::QuadratureOrder { got: order, min });
    }
    Ok(())
}

/// Gauss points and weights of one space-time cell in reference form:
/// `(tau, xi, weight)` with `tau, xi` in `[0, 1]` and weights summing to one.
fn reference_rule(order: usize) -> Vec<(f64, f64, f64)> {
    let rule: Vec<(f64, f64)> = on_interval(&gauss_legendre(order), 0.0, 1.0).collect();
    let mut out = Vec::with_capacity(order * order);
    for &(tau, wt) in &rule {
        for &(xi, wx) in &rule {
            out.push((tau, xi, wt * wx));
        }
    }
    out
}

/// Load vector `<g, d_t phi_i>` or `<g, phi_i>` by tensor Gauss quadrature.
pub fn load_vector_fn(
    sys: &GlobalSystem,
    g: impl Fn(f64, f64) -> f64 + Sync,
    form: LoadForm,
    quad_order: usize,
) -> Result<Coefficients> {
    check_order(quad_order, 3)?;
    let (space, time) = (&sys.factors.space, &sys.factors.time);
    let (n, nc, mc) = (sys.n(), space.n_cells, time.m_cells);
    let (h, k) = (space.h, time.k);
    let rule = reference_rule(quad_order);
    // each time cell touches time dofs c-1 and c; sum the slabs in order
    let slabs: Vec<Vec<(usize, f64)>> = (0..mc)
        .into_par_iter()
        .map(|c| {
            let t0 = time.node(c);
            let mut acc = Vec::new();
            for e in 0..nc {
                let x0 = space.node(e);
                // local [left time][left space], ...
                let mut local = [[0.0f64; 2]; 2];
                for &(tau, xi, w) in &rule {
                    let v = g(x0 + xi * h, t0 + tau * k) * w * h * k;
                    let tv = match form {
                        LoadForm::A0 => [-1.0 / k, 1.0 / k],
                        LoadForm::A0Hat => [1.0 - tau, tau],
                    };
                    let sv = [1.0 - xi, xi];
                    for a in 0..2 {
                        for b in 0..2 {
                            local[a][b] += v * tv[a] * sv[b];
                        }
                    }
                }
                for a in 0..2 {
                    let tnode = c + a;
                    if tnode == 0 {
                        continue;
                    }
                    for b in 0..2 {
                        let snode = e + b;
                        if snode == 0 || snode == nc {
                            continue;
                        }
                        acc.push(((tnode - 1) * n + snode - 1, local[a][b]));
                    }
                }
            }
            acc
        })
        .collect();
    let mut values = DVector::zeros(sys.dofs());
    for slab in slabs {
        for (i, v) in slab {
            values[i] += v;
        }
    }
    Coefficients::new(values, sys.m(), n)
}

pub fn load_vector(case: ManufacturedCase, sys: &GlobalSystem, form: LoadForm, quad_order: usize) -> Result<Coefficients> {
    let nu = sys.nu;
    load_vector_fn(sys, move |x, t| case.f(nu, x, t), form, quad_order)
}

/// Global matrix of a scheme in factored form, as `(time, space)` pairs.
fn scheme_terms(sys: &GlobalSystem, scheme: Scheme) -> [Kron; 2] {
    match scheme {
        Scheme::Q => {
            let mut b = sys.b();
            b.time *= sys.nu;
            [sys.a(), b]
        }
        Scheme::QHat => {
            let mut m = sys.mstiff();
            m.time *= sys.nu;
            [sys.g(), m]
        }
    }
}

fn apply_terms(terms: &[Kron; 2], v: &DVector<f64>) -> DVector<f64> {
    terms[0].apply(v) + terms[1].apply(v)
}

/// Relative residual above which a refinement pass runs.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
const MAX_REFINEMENTS: usize = 3;

#[derive(Debug, Clone)]
pub struct Solution {
    pub coefficients: Coefficients,
    pub relative_residual: f64,
    pub refinements: usize,
}

/// Solve the scheme for the given load vector.
pub fn solve_scheme(sys: &GlobalSystem, load: &Coefficients, scheme: Scheme) -> Result<Solution> {
    load.check(sys)?;
    let terms = scheme_terms(sys, scheme);
    let n = sys.n();
    let entry = |i: usize, j: usize| {
        let (p, q, pp, qq) = (i / n, i % n, j / n, j % n);
        terms.iter().map(|t| t.time[(p, pp)] * t.space[(q, qq)]).sum::<f64>()
    };
    let lu = BandedLu::factor(sys.dofs(), n + 1, n + 1, entry)?;
    let b = &load.values;
    let bnorm = b.norm();
    let mut x = lu.solve(b);
    let rel = |x: &DVector<f64>| {
        let r = b - apply_terms(&terms, x);
        let rn = r.norm();
        (r, if bnorm == 0.0 { rn } else { rn / bnorm })
    };
    let (mut r, mut res) = rel(&x);
    let mut refinements = 0;
    while res > RESIDUAL_TOLERANCE && refinements < MAX_REFINEMENTS {
        x += lu.solve(&r);
        refinements += 1;
        (r, res) = rel(&x);
    }
    Ok(Solution {
        coefficients: Coefficients::new(x, sys.m(), n)?,
        relative_residual: res,
        refinements,
    })
}

/// `K u - load` for the scheme matrix `K`.
pub fn residual(sys: &GlobalSystem, coef: &Coefficients, load: &Coefficients, scheme: Scheme) -> Result<DVector<f64>> {
    coef.check(sys)?;
    load.check(sys)?;
    Ok(apply_terms(&scheme_terms(sys, scheme), &coef.values) - &load.values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscreteNorms {
    pub v1l2: f64,
    pub l2h1: f64,
    pub l2l2: f64,
    pub final_l2: f64,
}

pub fn discrete_norms(coef: &Coefficients, sys: &GlobalSystem) -> Result<DiscreteNorms> {
    coef.check(sys)?;
    let v = &coef.values;
    let q = |k: Kron| k.quad_form(v).max(0.0).sqrt();
    Ok(DiscreteNorms {
        v1l2: q(sys.a()),
        l2h1: q(sys.mstiff()),
        l2l2: q(sys.u()),
        final_l2: q(sys.y()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorNorms {
    pub l2h1: f64,
    pub l2l2: f64,
    pub final_l2: f64,
    pub f_norm: f64,
}

/// Continuous error norms of `u - u_h` by Gauss quadrature per cell.
pub fn error_vs_exact(coef: &Coefficients, case: ManufacturedCase, sys: &GlobalSystem, quad_order: usize) -> Result<ErrorNorms> {
    coef.check(sys)?;
    check_order(quad_order, 5)?;
    let (space, time) = (&sys.factors.space, &sys.factors.time);
    let (nc, mc) = (space.n_cells, time.m_cells);
    let (h, k, nu) = (space.h, time.k, sys.nu);
    let rule = reference_rule(quad_order);
    let line: Vec<(f64, f64)> = on_interval(&gauss_legendre(quad_order), 0.0, 1.0).collect();

    let per_slab: Vec<[f64; 3]> = (0..mc)
        .into_par_iter()
        .map(|c| {
            let t0 = time.node(c);
            let mut s = [0.0f64; 3];
            for e in 0..nc {
                let x0 = space.node(e);
                let nod = [
                    [coef.nodal(c, e), coef.nodal(c, e + 1)],
                    [coef.nodal(c + 1, e), coef.nodal(c + 1, e + 1)],
                ];
                for &(tau, xi, w) in &rule {
                    let (x, t) = (x0 + xi * h, t0 + tau * k);
                    let tv = [1.0 - tau, tau];
                    let uh = tv[0] * (nod[0][0] * (1.0 - xi) + nod[0][1] * xi) + tv[1] * (nod[1][0] * (1.0 - xi) + nod[1][1] * xi);
                    let uh_x = (tv[0] * (nod[0][1] - nod[0][0]) + tv[1] * (nod[1][1] - nod[1][0])) / h;
                    let wa = w * h * k;
                    s[0] += wa * (case.u_x(x, t) - uh_x).powi(2);
                    s[1] += wa * (case.u(x, t) - uh).powi(2);
                    s[2] += wa * case.f(nu, x, t).powi(2);
                }
            }
            s
        })
        .collect();
    let mut tot = [0.0f64; 3];
    for s in per_slab {
        for i in 0..3 {
            tot[i] += s[i];
        }
    }

    let tf = time.final_time;
    let mut fin = 0.0;
    for e in 0..nc {
        let x0 = space.node(e);
        let (a, b) = (coef.nodal(mc, e), coef.nodal(mc, e + 1));
        for &(xi, w) in &line {
            let d = case.u(x0 + xi * h, tf) - (a * (1.0 - xi) + b * xi);
            fin += w * h * d * d;
        }
    }
    Ok(ErrorNorms {
        l2h1: tot[0].sqrt(),
        l2l2: tot[1].sqrt(),
        final_l2: fin.sqrt(),
        f_norm: tot[2].sqrt(),
    })
}

/// Quadrature order used for loads and error norms.
pub const DEFAULT_QUAD_ORDER: usize = 5;

/// One inequality `lhs <= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
}

impl BoundCheck {
    fn new(name: &str, lhs: f64, rhs: f64) -> Self {
        Self {
            name: name.to_string(),
            lhs,
            rhs,
        }
    }

    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + 1e-8
    }

    pub fn strict(&self) -> bool {
        self.lhs < self.rhs
    }

    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub case: ManufacturedCase,
    pub scheme: Scheme,
    pub nu: f64,
    pub h_cells: usize,
    pub k_cells: usize,
    pub norms: DiscreteNorms,
    pub errors: ErrorNorms,
    pub relative_residual: f64,
    pub checks: Vec<BoundCheck>,
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(BoundCheck::holds)
    }

    pub fn all_strict(&self) -> bool {
        self.checks.iter().all(BoundCheck::strict)
    }
}

/// Solve one manufactured case and compare against every applicable bound.
///
/// Scheme `Q` is checked against its V1L2 and L2H1_0 stability bounds and
/// the three error estimates; scheme `Q^` against its two stability bounds.
pub fn validate_case(sys: &GlobalSystem, case: ManufacturedCase, scheme: Scheme) -> Result<ValidationReport> {
    let load = load_vector(case, sys, scheme.load_form(), DEFAULT_QUAD_ORDER)?;
    let sol = solve_scheme(sys, &load, scheme)?;
    let norms = discrete_norms(&sol.coefficients, sys)?;
    let errors = error_vs_exact(&sol.coefficients, case, sys, DEFAULT_QUAD_ORDER)?;
    let consts = compute_all(sys, Mode::Fast)?;
    let ap = Apriori::new(&sys.factors.space, &sys.factors.time, Mode::Fast);
    let f = errors.f_norm;
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    match scheme {
        Scheme::Q => {
            let base = base_constants(&ap, sys.nu)?;
            let ec = tilde_constants(&base, &consts, &ap)?;
            checks.push(BoundCheck::new("V1L2 stability", norms.v1l2, f));
            checks.push(BoundCheck::new("L2H1 stability (eta)", norms.l2h1, consts.eta.value() * f));
            checks.push(BoundCheck::new("L2H1 error", errors.l2h1, ec.c1_tilde.value() * f));
            checks.push(BoundCheck::new("L2L2 error", errors.l2l2, ec.c0_tilde.value() * f));
            checks.push(BoundCheck::new("final-time L2 error", errors.final_l2, ec.c0_t_tilde.value() * f));
        }
        Scheme::QHat => {
            let b = stability_report(&consts, &ap);
            checks.push(BoundCheck::new("L2H1 stability (C_p/nu)", norms.l2h1, b.qhat_l2h1.value() * f));
            checks.push(BoundCheck::new("V1L2 stability (eta_hat)", norms.v1l2, consts.eta_hat.value() * f));
            notes.push(format!(
                "eta_hat = {:.4} grows like 1/k: this scheme is not stable in V1L2 uniformly in k",
                consts.eta_hat.value()
            ));
        }
    }
    Ok(ValidationReport {
        case,
        scheme,
        nu: sys.nu,
        h_cells: sys.factors.space.n_cells,
        k_cells: sys.factors.time.m_cells,
        norms,
        errors,
        relative_residual: sol.relative_residual,
        checks,
        notes,
    })
}

/// CSV of `(t, x, value)` at every space-time node, boundary included.
pub fn write_solution_csv<W: Write>(mut out: W, coef: &Coefficients, sys: &GlobalSystem) -> io::Result<()> {
    let (space, time) = (&sys.factors.space, &sys.factors.time);
    writeln!(out, "t,x,value")?;
    for p in 0..=time.m_cells {
        for q in 0..=space.n_cells {
            writeln!(out, "{},{},{}", time.node(p), space.node(q), coef.nodal(p, q))?;
        }
    }
    Ok(())
}
