//! Single-configuration commands: constants report, validation, exports.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use stfem::assembly::{write_triplets, GlobalSystem};
use stfem::estimates::{constants_report, ConstantsReport};
use stfem::mesh::{SpaceMesh, TimeMesh};
use stfem::rigor::{Enclosure, Mode, RIGOROUS_DOF_LIMIT};
use stfem::solver::{load_vector, solve_scheme, write_solution_csv, Solution, ValidationReport, DEFAULT_QUAD_ORDER};

use crate::config::RunConfig;
use crate::error::CliError;

pub fn single_system(cfg: &RunConfig) -> Result<GlobalSystem, CliError> {
    let (nu, h, k) = cfg.single_point()?;
    Ok(GlobalSystem::assemble(&SpaceMesh::new(h)?, &TimeMesh::new(k, cfg.final_time)?, nu)?)
}

pub fn compute_constants(cfg: &RunConfig) -> Result<ConstantsReport, CliError> {
    let sys = single_system(cfg)?;
    if cfg.mode == Mode::Rigorous && sys.dofs() > RIGOROUS_DOF_LIMIT {
        return Err(CliError::Usage(format!(
            "rigorous constants need m*n <= {RIGOROUS_DOF_LIMIT} (got {}); rerun with --mode fast",
            sys.dofs()
        )));
    }
    Ok(constants_report(&sys, cfg.mode)?)
}

/// Every reported quantity with its name, in report order.
pub fn constant_rows(r: &ConstantsReport) -> Vec<(&'static str, Enclosure)> {
    let (a, s, e, b) = (&r.apriori, &r.stability, &r.errors, &r.bounds);
    vec![
        ("C_Omega", a.c_omega),
        ("C_J", a.c_j),
        ("C_inv", a.c_inv),
        ("C_p", a.c_p),
        ("eta", s.eta),
        ("eta_hat", s.eta_hat),
        ("gamma1", s.gamma1),
        ("gamma0", s.gamma0),
        ("gammaT", s.gamma_t),
        ("C1", e.c1),
        ("C0", e.c0),
        ("c0", e.c0_t),
        ("C1_tilde", e.c1_tilde),
        ("C0_tilde", e.c0_tilde),
        ("c0_tilde", e.c0_t_tilde),
        ("Q_V1L2_bound", b.q_v1l2),
        ("Q_L2H1_bound", b.q_l2h1),
        ("Qhat_L2H1_bound", b.qhat_l2h1),
        ("Qhat_V1L2_bound", b.qhat_v1l2),
    ]
}

pub fn constants_csv<W: Write>(out: W, r: &ConstantsReport) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["quantity", "value", "lo", "hi", "width"])?;
    for (name, e) in constant_rows(r) {
        w.write_record([
            name.to_string(),
            e.value().to_string(),
            e.lo.to_string(),
            e.hi.to_string(),
            e.width().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn constants_markdown(r: &ConstantsReport) -> String {
    let c = &r.config;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "### Constants for ν={}, h=1/{}, k={}/{} ({})\n",
        c.nu, c.h_cells, c.final_time, c.k_cells, c.mode
    );
    let rigorous = c.mode == Mode::Rigorous;
    if rigorous {
        let _ = writeln!(s, "| quantity | value | lower | upper | rel. width |\n|---|---|---|---|---|");
    } else {
        let _ = writeln!(s, "| quantity | value |\n|---|---|");
    }
    for (name, e) in constant_rows(r) {
        if rigorous {
            let _ = writeln!(s, "| {name} | {:.6} | {:.10} | {:.10} | {:.1e} |", e.value(), e.lo, e.hi, e.relative_width());
        } else {
            let _ = writeln!(s, "| {name} | {:.6} |", e.value());
        }
    }
    for n in &r.notes {
        let _ = writeln!(s, "\n- {n}");
    }
    for w in &r.warnings {
        let _ = writeln!(s, "\n- warning: {w}");
    }
    s
}

pub fn validation_csv<W: Write>(out: W, r: &ValidationReport) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["check", "lhs", "rhs", "margin", "holds"])?;
    for c in &r.checks {
        w.write_record([
            c.name.clone(),
            c.lhs.to_string(),
            c.rhs.to_string(),
            c.margin().to_string(),
            c.holds().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn validation_markdown(r: &ValidationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "### Validation: case {}, scheme {:?}, ν={}, h=1/{}, k=1/{}\n",
        r.case.label(),
        r.scheme,
        r.nu,
        r.h_cells,
        r.k_cells
    );
    let _ = writeln!(s, "| check | lhs | rhs | margin | holds |\n|---|---|---|---|---|");
    for c in &r.checks {
        let _ = writeln!(s, "| {} | {:.6e} | {:.6e} | {:.3e} | {} |", c.name, c.lhs, c.rhs, c.margin(), c.holds());
    }
    let e = &r.errors;
    let _ = writeln!(
        s,
        "\n‖f‖ = {:.6e}; errors: L2H1 {:.6e}, L2L2 {:.6e}, final L2 {:.6e}; residual {:.1e}",
        e.f_norm, e.l2h1, e.l2l2, e.final_l2, r.relative_residual
    );
    for n in &r.notes {
        let _ = writeln!(s, "\n- {n}");
    }
    s
}

pub fn solve_case(cfg: &RunConfig) -> Result<(GlobalSystem, Solution), CliError> {
    let sys = single_system(cfg)?;
    let load = load_vector(cfg.case, &sys, cfg.scheme.load_form(), DEFAULT_QUAD_ORDER)?;
    let sol = solve_scheme(&sys, &load, cfg.scheme)?;
    Ok((sys, sol))
}

pub fn solution_csv<W: Write>(out: W, sys: &GlobalSystem, sol: &Solution) -> Result<(), CliError> {
    write_solution_csv(out, &sol.coefficients, sys)?;
    Ok(())
}

/// Largest instance whose dense matrices are dumped.
pub const MATRIX_DUMP_LIMIT: usize = 2000;

/// One triplet file per global matrix, named after the matrix.
pub fn dump_matrices(sys: &GlobalSystem, dir: &Path) -> Result<Vec<String>, CliError> {
    if sys.dofs() > MATRIX_DUMP_LIMIT {
        return Err(CliError::Usage(format!(
            "matrix dump needs m*n <= {MATRIX_DUMP_LIMIT} (got {})",
            sys.dofs()
        )));
    }
    fs::create_dir_all(dir)?;
    let mats = [
        ("A", sys.a().to_dense()),
        ("M", sys.mstiff().to_dense()),
        ("B", sys.b().to_dense()),
        ("G", sys.g().to_dense()),
        ("U", sys.u().to_dense()),
        ("W", sys.w().to_dense()),
        ("Y", sys.y().to_dense()),
        ("Q", sys.q_matrix_dense()),
        ("Qhat", sys.qhat_matrix_dense()),
    ];
    let mut names = Vec::new();
    for (name, m) in mats {
        let file = format!("{name}.txt");
        let mut w = BufWriter::new(File::create(dir.join(&file))?);
        write_triplets(&mut w, &m)?;
        w.flush()?;
        names.push(file);
    }
    Ok(names)
}
