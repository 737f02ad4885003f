//! Sweeps over the `(nu, h, k)` grid and renders the stability tables.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use stfem::assembly::GlobalSystem;
use stfem::mesh::{SpaceMesh, TimeMesh};
use stfem::norms::{compute_eta, compute_eta_hat, compute_gammas};
use stfem::rigor::{Enclosure, Mode, RIGOROUS_DOF_LIMIT};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TableKind {
    Eta,
    EtaHat,
    Gamma,
}

impl TableKind {
    pub fn columns(&self) -> &'static [&'static str] {
        match self {
            TableKind::Eta => &["eta"],
            TableKind::EtaHat => &["eta_hat"],
            TableKind::Gamma => &["gamma1", "gamma0", "gammaT"],
        }
    }

    fn pretty(col: &str) -> &'static str {
        match col {
            "eta" => "η",
            "eta_hat" => "η̂",
            "gamma1" => "γ₁",
            "gamma0" => "γ₀",
            _ => "γ_T",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellStatus {
    /// Floating-point estimate from a fast-mode run.
    Estimate,
    /// Certified enclosure.
    Certified,
    /// Rigorous mode was requested but the instance exceeds the dense cap.
    FastOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableCell {
    pub nu: f64,
    pub h_cells: usize,
    pub k_cells: usize,
    pub status: CellStatus,
    pub values: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl TableCell {
    pub fn width(&self, i: usize) -> f64 {
        self.hi[i] - self.lo[i]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableArtifact {
    pub which: TableKind,
    pub mode: Mode,
    pub final_time: f64,
    pub nu: Vec<f64>,
    pub h_cells: Vec<usize>,
    pub k_cells: Vec<usize>,
    pub columns: Vec<&'static str>,
    /// Ordered by `nu`, then `h`, then `k`.
    pub cells: Vec<TableCell>,
}

impl TableArtifact {
    pub fn cell(&self, nu_idx: usize, h_idx: usize, k_idx: usize) -> &TableCell {
        let (nh, nk) = (self.h_cells.len(), self.k_cells.len());
        &self.cells[(nu_idx * nh + h_idx) * nk + k_idx]
    }
}

fn compute_cell(which: TableKind, nu: f64, h: usize, k: usize, final_time: f64, mode: Mode) -> Result<TableCell, CliError> {
    let sys = GlobalSystem::assemble(&SpaceMesh::new(h)?, &TimeMesh::new(k, final_time)?, nu)?;
    let (run_mode, status) = match mode {
        Mode::Fast => (Mode::Fast, CellStatus::Estimate),
        Mode::Rigorous if sys.dofs() > RIGOROUS_DOF_LIMIT => (Mode::Fast, CellStatus::FastOnly),
        Mode::Rigorous => (Mode::Rigorous, CellStatus::Certified),
    };
    let encs: Vec<Enclosure> = match which {
        TableKind::Eta => vec![compute_eta(&sys, run_mode)?],
        TableKind::EtaHat => vec![compute_eta_hat(&sys, run_mode)?],
        TableKind::Gamma => {
            let g = compute_gammas(&sys, run_mode)?;
            vec![g.gamma1, g.gamma0, g.gamma_t]
        }
    };
    Ok(TableCell {
        nu,
        h_cells: h,
        k_cells: k,
        status,
        values: encs.iter().map(Enclosure::value).collect(),
        lo: encs.iter().map(|e| e.lo).collect(),
        hi: encs.iter().map(|e| e.hi).collect(),
    })
}

/// Compute every grid cell on a bounded pool; results keep grid order.
pub fn compute_table(cfg: &RunConfig, which: TableKind) -> Result<TableArtifact, CliError> {
    let points: Vec<(f64, usize, usize)> = cfg
        .nu
        .iter()
        .flat_map(|&nu| cfg.h_cells.iter().flat_map(move |&h| cfg.k_cells.iter().map(move |&k| (nu, h, k))))
        .collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    let cells = pool.install(|| {
        points
            .par_iter()
            .map(|&(nu, h, k)| compute_cell(which, nu, h, k, cfg.final_time, cfg.mode))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(TableArtifact {
        which,
        mode: cfg.mode,
        final_time: cfg.final_time,
        nu: cfg.nu.clone(),
        h_cells: cfg.h_cells.clone(),
        k_cells: cfg.k_cells.clone(),
        columns: which.columns().to_vec(),
        cells,
    })
}

/// Display precision: 4 decimals, or 2 for `eta_hat >= 10`. Digits are
/// truncated, not rounded, as in the reference tables (0.301493 -> 0.3014).
pub fn display_value(which: TableKind, v: f64) -> String {
    let digits = if which == TableKind::EtaHat && v >= 10.0 { 2 } else { 4 };
    format!("{:.*}", digits, truncate(v, digits))
}

fn truncate(v: f64, digits: usize) -> f64 {
    let s = 10f64.powi(digits as i32);
    // the guard keeps decimal-exact inputs such as 0.3015 from dropping a unit
    (v * s * (1.0 + 4.0 * f64::EPSILON)).trunc() / s
}

fn step_label(final_time: f64, cells: usize) -> String {
    if final_time == 1.0 {
        format!("1/{cells}")
    } else {
        format!("{final_time}/{cells}")
    }
}

fn group_label(nu: f64, h: usize) -> String {
    format!("nu={nu} h=1/{h}")
}

fn widths_shown(t: &TableArtifact) -> bool {
    t.mode == Mode::Rigorous
}

/// One header row, one row per `k`; full-precision values.
pub fn write_csv<W: Write>(out: W, t: &TableArtifact) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["k_cells".to_string()];
    for &nu in &t.nu {
        for &h in &t.h_cells {
            for col in &t.columns {
                header.push(format!("{col}[{}]", group_label(nu, h)));
                if widths_shown(t) {
                    header.push(format!("{col}_width[{}]", group_label(nu, h)));
                }
            }
        }
    }
    w.write_record(&header)?;
    for (ki, &k) in t.k_cells.iter().enumerate() {
        let mut row = vec![k.to_string()];
        for ni in 0..t.nu.len() {
            for hi in 0..t.h_cells.len() {
                let c = t.cell(ni, hi, ki);
                for i in 0..t.columns.len() {
                    row.push(c.values[i].to_string());
                    if widths_shown(t) {
                        row.push(match c.status {
                            CellStatus::FastOnly => "fast-only".to_string(),
                            _ => c.width(i).to_string(),
                        });
                    }
                }
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn markdown_cells(t: &TableArtifact, c: &TableCell) -> Vec<String> {
    let mut out = Vec::new();
    for i in 0..t.columns.len() {
        out.push(display_value(t.which, c.values[i]));
        if widths_shown(t) {
            out.push(match c.status {
                CellStatus::FastOnly => "fast-only".to_string(),
                _ => format!("{:.1e}", c.width(i)),
            });
        }
    }
    out
}

fn markdown_block(t: &TableArtifact, title: &str, nus: &[usize]) -> String {
    let mut head = vec![title.to_string()];
    for &ni in nus {
        for &h in &t.h_cells {
            for col in &t.columns {
                let name = TableKind::pretty(col);
                let label = if nus.len() == 1 {
                    format!("h=1/{h} {name}")
                } else {
                    format!("ν={} h=1/{h}", t.nu[ni])
                };
                head.push(label.clone());
                if widths_shown(t) {
                    head.push("width".to_string());
                }
            }
        }
    }
    let mut s = String::new();
    let _ = writeln!(s, "| {} |", head.join(" | "));
    let _ = writeln!(s, "|{}", "---|".repeat(head.len()));
    for (ki, &k) in t.k_cells.iter().enumerate() {
        let mut row = vec![step_label(t.final_time, k)];
        for &ni in nus {
            for hi in 0..t.h_cells.len() {
                row.extend(markdown_cells(t, t.cell(ni, hi, ki)));
            }
        }
        let _ = writeln!(s, "| {} |", row.join(" | "));
    }
    s
}

/// Layout: one table for `eta`/`eta_hat`, one per `nu` for the gammas.
pub fn render_markdown(t: &TableArtifact) -> String {
    let mut s = String::new();
    let mode = if t.mode == Mode::Rigorous { " (rigorous)" } else { "" };
    match t.which {
        TableKind::Gamma => {
            for ni in 0..t.nu.len() {
                let _ = writeln!(s, "### γ₁, γ₀, γ_T for ν={}{mode}\n", t.nu[ni]);
                s.push_str(&markdown_block(t, "k", &[ni]));
                s.push('\n');
            }
        }
        which => {
            let name = TableKind::pretty(which.columns()[0]);
            let _ = writeln!(s, "### {name}{mode}\n");
            let all: Vec<usize> = (0..t.nu.len()).collect();
            s.push_str(&markdown_block(t, "k", &all));
        }
    }
    s
}
