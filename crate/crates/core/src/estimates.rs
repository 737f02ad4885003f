//! A priori error constants and stability bounds.
//!
//! Base constants for the projection error:
//!
//! ```text
//! C1 = (2 / nu) C_Omega + C_inv C_J
//! C0 = (8 / nu) C_Omega^2 + C_J
//! c0 = sqrt(8 / nu) C_Omega
//! ```
//!
//! and their corrections for the full-discrete scheme, with
//! `d = C_J C_inv`: `~C1 = C1 + d gamma1`, `~C0 = C0 + d gamma0`,
//! `~c0 = c0 + d gammaT`. The estimates assume the right-hand side has the
//! regularity required by the underlying interpolation results; that is
//! left to the caller and noted in reports.

use serde::Serialize;

use crate::assembly::{decimal_enclosure, GlobalSystem};
use crate::error::{Error, Result};
use crate::mesh::{apriori_constants, SpaceMesh, TimeMesh, POINCARE_NOTE};
use crate::norms::{compute_all, StabilityConfig, StabilityConstants};
use crate::rigor::{Enclosure, Interval, Mode, WIDTH_WARNING};

/// Mesh constants `C_Omega`, `C_J`, `C_inv`, `C_p` as enclosures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Apriori {
    pub c_omega: Enclosure,
    pub c_j: Enclosure,
    pub c_inv: Enclosure,
    pub c_p: Enclosure,
    pub h_cells: usize,
    pub k_cells: usize,
    pub final_time: f64,
    pub mode: Mode,
}

impl Apriori {
    pub fn new(space: &SpaceMesh, time: &TimeMesh, mode: Mode) -> Self {
        let (c_omega, c_j, c_inv, c_p) = match mode {
            Mode::Fast => {
                let a = apriori_constants(space, time);
                (
                    Enclosure::fast(a.c_omega),
                    Enclosure::fast(a.c_j),
                    Enclosure::fast(a.c_inv),
                    Enclosure::fast(a.c_p),
                )
            }
            Mode::Rigorous => {
                let pi = Interval::pi();
                let n = Interval::point(space.n_cells as f64);
                let m = Interval::point(time.m_cells as f64);
                let t = decimal_enclosure(time.final_time);
                let one = Interval::point(1.0);
                let h = one.div(n).expect("n_cells >= 2");
                let k = t.div(m).expect("m_cells >= 1");
                let sqrt12 = Interval::point(12.0).sqrt().expect("positive");
                (
                    Enclosure::rigorous(h.div(pi).expect("pi > 0")),
                    Enclosure::rigorous(k.div(pi).expect("pi > 0")),
                    Enclosure::rigorous(sqrt12 * n),
                    Enclosure::rigorous(one.div(pi).expect("pi > 0")),
                )
            }
        };
        Self {
            c_omega,
            c_j,
            c_inv,
            c_p,
            h_cells: space.n_cells,
            k_cells: time.m_cells,
            final_time: time.final_time,
            mode,
        }
    }

    /// The correction factor `C_J C_inv` of the tilde constants.
    pub fn coupling(&self) -> Enclosure {
        combine(self.mode, || self.c_j.value() * self.c_inv.value(), || {
            self.c_j.interval() * self.c_inv.interval()
        })
    }
}

/// Evaluate a formula as a point estimate or an enclosure, by mode.
fn combine(mode: Mode, fast: impl FnOnce() -> f64, rigorous: impl FnOnce() -> Interval) -> Enclosure {
    match mode {
        Mode::Fast => Enclosure::fast(fast()),
        Mode::Rigorous => Enclosure::rigorous(rigorous()),
    }
}

fn nu_interval(nu: f64) -> Interval {
    decimal_enclosure(nu)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaseConstants {
    pub c1: Enclosure,
    pub c0: Enclosure,
    pub c0_t: Enclosure,
    pub nu: f64,
    pub h_cells: usize,
    pub k_cells: usize,
    pub final_time: f64,
}

pub fn base_constants(ap: &Apriori, nu: f64) -> Result<BaseConstants> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::BadDiffusion(nu));
    }
    let (co, cj, ci) = (ap.c_omega, ap.c_j, ap.c_inv);
    let c1 = combine(
        ap.mode,
        || 2.0 / nu * co.value() + ci.value() * cj.value(),
        || {
            Interval::point(2.0).div(nu_interval(nu)).expect("nu > 0") * co.interval()
                + ci.interval() * cj.interval()
        },
    );
    let c0 = combine(
        ap.mode,
        || 8.0 / nu * co.value() * co.value() + cj.value(),
        || Interval::point(8.0).div(nu_interval(nu)).expect("nu > 0") * co.interval().sqr() + cj.interval(),
    );
    let c0_t = combine(
        ap.mode,
        || (8.0 / nu).sqrt() * co.value(),
        || {
            let r = Interval::point(8.0).div(nu_interval(nu)).expect("nu > 0");
            r.sqrt().expect("positive") * co.interval()
        },
    );
    Ok(BaseConstants {
        c1,
        c0,
        c0_t,
        nu,
        h_cells: ap.h_cells,
        k_cells: ap.k_cells,
        final_time: ap.final_time,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorConstants {
    pub c1: Enclosure,
    pub c0: Enclosure,
    pub c0_t: Enclosure,
    pub c1_tilde: Enclosure,
    pub c0_tilde: Enclosure,
    pub c0_t_tilde: Enclosure,
}

/// Add the `C_J C_inv gamma` corrections to the base constants.
pub fn tilde_constants(base: &BaseConstants, gammas: &StabilityConstants, ap: &Apriori) -> Result<ErrorConstants> {
    let cfg = gammas.config;
    let base_cfg = StabilityConfig {
        nu: base.nu,
        h_cells: base.h_cells,
        k_cells: base.k_cells,
        final_time: base.final_time,
        mode: cfg.mode,
    };
    if !cfg.same_problem(&base_cfg) {
        return Err(Error::ConfigMismatch(format!(
            "constants for nu={}, h=1/{}, k=T/{}, T={} combined with gammas for nu={}, h=1/{}, k=T/{}, T={}",
            base.nu, base.h_cells, base.k_cells, base.final_time, cfg.nu, cfg.h_cells, cfg.k_cells, cfg.final_time
        )));
    }
    if ap.h_cells != base.h_cells || ap.k_cells != base.k_cells || ap.final_time != base.final_time {
        return Err(Error::ConfigMismatch("mesh constants belong to a different mesh".into()));
    }
    let d = ap.coupling();
    let add = |c: Enclosure, g: Enclosure| {
        combine(ap.mode, || c.value() + d.value() * g.value(), || {
            c.interval() + d.interval() * g.interval()
        })
    };
    Ok(ErrorConstants {
        c1: base.c1,
        c0: base.c0,
        c0_t: base.c0_t,
        c1_tilde: add(base.c1, gammas.gamma1),
        c0_tilde: add(base.c0, gammas.gamma0),
        c0_t_tilde: add(base.c0_t, gammas.gamma_t),
    })
}

/// Stability bounds `||discrete solution|| <= constant * ||f||`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityBounds {
    /// `||Q u||_{V1 L2}`: always 1.
    pub q_v1l2: Enclosure,
    /// `||Q u||_{L2 H1_0}`: `eta`.
    pub q_l2h1: Enclosure,
    /// `||Q^ u||_{L2 H1_0}`: `C_p / nu`.
    pub qhat_l2h1: Enclosure,
    /// `||Q^ u||_{V1 L2}`: `eta_hat`.
    pub qhat_v1l2: Enclosure,
    pub poincare_note: String,
}

pub fn stability_report(consts: &StabilityConstants, ap: &Apriori) -> StabilityBounds {
    let nu = consts.config.nu;
    let one = match ap.mode {
        Mode::Fast => Enclosure::fast(1.0),
        Mode::Rigorous => Enclosure::rigorous(Interval::point(1.0)),
    };
    StabilityBounds {
        q_v1l2: one,
        q_l2h1: consts.eta,
        qhat_l2h1: combine(ap.mode, || ap.c_p.value() / nu, || {
            ap.c_p.interval().div(nu_interval(nu)).expect("nu > 0")
        }),
        qhat_v1l2: consts.eta_hat,
        poincare_note: POINCARE_NOTE.to_string(),
    }
}

/// Hypothesis reminder attached to every report.
pub const REGULARITY_NOTE: &str =
    "the base estimates assume f in L2(J; X(Omega)) and the corrected ones f in L2(J; L2(Omega)); not checked";

/// Everything known about one `(nu, h, k)` configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsReport {
    pub config: StabilityConfig,
    pub apriori: Apriori,
    pub stability: StabilityConstants,
    pub errors: ErrorConstants,
    pub bounds: StabilityBounds,
    pub notes: Vec<String>,
    pub warnings: Vec<String>,
}

pub fn constants_report(sys: &GlobalSystem, mode: Mode) -> Result<ConstantsReport> {
    let ap = Apriori::new(&sys.factors.space, &sys.factors.time, mode);
    let stability = compute_all(sys, mode)?;
    let base = base_constants(&ap, sys.nu)?;
    let errors = tilde_constants(&base, &stability, &ap)?;
    let bounds = stability_report(&stability, &ap);
    let mut warnings = Vec::new();
    if mode == Mode::Rigorous {
        let names = ["eta", "eta_hat", "gamma1", "gamma0", "gammaT"];
        for (name, e) in names.iter().zip(stability.as_array()) {
            if e.relative_width() > WIDTH_WARNING {
                warnings.push(format!("{name}: relative enclosure width {:.2e}", e.relative_width()));
            }
        }
    }
    Ok(ConstantsReport {
        config: stability.config,
        apriori: ap,
        stability,
        errors,
        bounds,
        notes: vec![POINCARE_NOTE.to_string(), REGULARITY_NOTE.to_string()],
        warnings,
    })
}

#[cfg(test)]
// four-digit table values such as 0.7071 are data, not approximate constants
#[allow(clippy::approx_constant)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn ap(nc: usize, mc: usize, mode: Mode) -> Apriori {
        Apriori::new(&SpaceMesh::new(nc).unwrap(), &TimeMesh::new(mc, 1.0).unwrap(), mode)
    }

    fn fake_gammas(nu: f64, nc: usize, mc: usize, g: [f64; 3]) -> StabilityConstants {
        let z = Enclosure::fast(0.0);
        StabilityConstants {
            eta: z,
            eta_hat: z,
            gamma1: Enclosure::fast(g[0]),
            gamma0: Enclosure::fast(g[1]),
            gamma_t: Enclosure::fast(g[2]),
            config: StabilityConfig {
                nu,
                h_cells: nc,
                k_cells: mc,
                final_time: 1.0,
                mode: Mode::Fast,
            },
        }
    }

    #[test]
    fn base_examples() {
        // independent evaluation from the definitions
        let (h, k) = (0.2, 0.025);
        let (co, cj, ci) = (h / PI, k / PI, 12f64.sqrt() / h);
        let b = base_constants(&ap(5, 40, Mode::Fast), 1.0).unwrap();
        assert_relative_eq!(b.c1.value(), 2.0 * co + ci * cj, max_relative = 1e-14);
        assert!((b.c1.value() - 0.26515).abs() < 1e-5);
        assert!((b.c0.value() - 0.040380).abs() < 1e-6);
        assert!((b.c0_t.value() - 0.18006).abs() < 1e-5);
        let b2 = base_constants(&ap(5, 40, Mode::Fast), 2.0).unwrap();
        assert_relative_eq!(b2.c1.value(), co + ci * cj, max_relative = 1e-14);
        assert!((b2.c1.value() - 0.20149).abs() < 1e-5);
        assert!(base_constants(&ap(5, 40, Mode::Fast), 0.0).is_err());
    }

    #[test]
    fn c1_grows_when_h_halves_with_k_fixed() {
        let mut prev = 0.0;
        for nc in [5, 10, 20, 40] {
            let c = base_constants(&ap(nc, 40, Mode::Fast), 1.0).unwrap().c1.value();
            assert!(c > prev);
            prev = c;
        }
    }

    #[test]
    fn c0_t_decreases_in_nu() {
        let a = ap(10, 40, Mode::Fast);
        let mut prev = f64::INFINITY;
        for nu in [0.01, 0.1, 0.5, 1.0, 4.0] {
            let c = base_constants(&a, nu).unwrap().c0_t.value();
            assert!(c < prev);
            prev = c;
        }
    }

    #[test]
    fn tilde_examples() {
        let a = ap(5, 40, Mode::Fast);
        let b = base_constants(&a, 1.0).unwrap();
        assert!((a.coupling().value() - 0.13783).abs() < 5e-6);
        let e = tilde_constants(&b, &fake_gammas(1.0, 5, 40, [1.6381, 0.3014, 0.7071]), &a).unwrap();
        assert!((e.c1_tilde.value() - 0.49093).abs() < 5e-5);
        assert!((e.c0_t_tilde.value() - 0.27753).abs() < 5e-5);
        assert!(e.c1_tilde.value() >= e.c1.value());
        assert!(e.c0_tilde.value() >= e.c0.value());

        let zero = tilde_constants(&b, &fake_gammas(1.0, 5, 40, [0.0; 3]), &a).unwrap();
        assert_eq!(zero.c1_tilde, b.c1);
        assert_eq!(zero.c0_tilde, b.c0);
        assert_eq!(zero.c0_t_tilde, b.c0_t);
    }

    #[test]
    fn mismatched_configurations_rejected() {
        let a = ap(5, 40, Mode::Fast);
        let b = base_constants(&a, 1.0).unwrap();
        for g in [fake_gammas(0.1, 5, 40, [1.0; 3]), fake_gammas(1.0, 10, 40, [1.0; 3]), fake_gammas(1.0, 5, 80, [1.0; 3])] {
            assert!(matches!(tilde_constants(&b, &g, &a), Err(Error::ConfigMismatch(_))));
        }
        let other = ap(5, 80, Mode::Fast);
        assert!(tilde_constants(&b, &fake_gammas(1.0, 5, 40, [1.0; 3]), &other).is_err());
    }

    #[test]
    fn stability_bounds() {
        for (nu, want) in [(1.0, 1.0 / PI), (0.01, 100.0 / PI)] {
            let a = ap(5, 40, Mode::Fast);
            let s = stability_report(&fake_gammas(nu, 5, 40, [0.0; 3]), &a);
            assert_relative_eq!(s.qhat_l2h1.value(), want, max_relative = 1e-14);
            assert_eq!(s.q_v1l2.value(), 1.0);
        }
        let a = ap(5, 40, Mode::Fast);
        assert!((stability_report(&fake_gammas(1.0, 5, 40, [0.0; 3]), &a).qhat_l2h1.value() - 0.3183).abs() < 1e-4);
        assert!((stability_report(&fake_gammas(0.01, 5, 40, [0.0; 3]), &a).qhat_l2h1.value() - 31.83).abs() < 1e-2);
    }

    #[test]
    fn rigorous_constants_contain_fast() {
        for &(nc, mc, nu) in &[(5, 40, 1.0), (10, 80, 0.1), (20, 400, 0.01)] {
            let fa = ap(nc, mc, Mode::Fast);
            let ra = ap(nc, mc, Mode::Rigorous);
            let fb = base_constants(&fa, nu).unwrap();
            let rb = base_constants(&ra, nu).unwrap();
            for (f, r) in [(fb.c1, rb.c1), (fb.c0, rb.c0), (fb.c0_t, rb.c0_t)] {
                assert!(r.contains(f.value()) && r.is_rigorous());
                assert!(r.relative_width() < 1e-14);
            }
        }
    }

    #[test]
    fn full_report_rigorous_contains_fast() {
        let sys = GlobalSystem::assemble(&SpaceMesh::new(4).unwrap(), &TimeMesh::new(6, 1.0).unwrap(), 0.1).unwrap();
        let f = constants_report(&sys, Mode::Fast).unwrap();
        let r = constants_report(&sys, Mode::Rigorous).unwrap();
        let pairs = [
            (f.errors.c1_tilde, r.errors.c1_tilde),
            (f.errors.c0_tilde, r.errors.c0_tilde),
            (f.errors.c0_t_tilde, r.errors.c0_t_tilde),
        ];
        for (fe, re) in pairs {
            assert!(re.lo <= re.hi);
            assert!(re.contains(fe.value()), "{re:?} vs {fe:?}");
        }
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn refinement_shrinks_c1_tilde() {
        // h -> h/2 with k -> k/4
        let mut prev = f64::INFINITY;
        for (nc, mc) in [(5, 40), (10, 160)] {
            let sys = GlobalSystem::assemble(&SpaceMesh::new(nc).unwrap(), &TimeMesh::new(mc, 1.0).unwrap(), 0.1).unwrap();
            let c = constants_report(&sys, Mode::Fast).unwrap().errors.c1_tilde.value();
            assert!(c < prev, "{c} !< {prev}");
            prev = c;
        }
    }
}
