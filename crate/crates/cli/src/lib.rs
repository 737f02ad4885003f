//! Front end for `stfem`: table sweeps, constant reports, manufactured-solution
//! validation and matrix/solution export.

pub mod config;
pub mod error;
pub mod report;
pub mod table;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{parse_case, parse_mode, parse_scheme, Format, Overrides, RunConfig};
pub use error::CliError;
use table::TableKind;

#[derive(Debug, Parser)]
#[command(name = "stfem", version, about = "Space-time FEM for the heat equation: stability and error constants")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep the (nu, h, k) grid and print one of the stability tables
    Table {
        #[arg(value_enum)]
        which: TableArg,
    },
    /// Full constants report for a single (nu, h, k)
    Constants,
    /// Solve a manufactured case and check every stability and error bound
    Validate,
    /// Solve a manufactured case and export nodal values as CSV (t, x, value)
    Solve,
    /// Write every global matrix as (row, col, value) triplets into --out
    Matrices,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableArg {
    Eta,
    #[value(alias = "eta_hat")]
    EtaHat,
    Gamma,
}

impl From<TableArg> for TableKind {
    fn from(t: TableArg) -> Self {
        match t {
            TableArg::Eta => TableKind::Eta,
            TableArg::EtaHat => TableKind::EtaHat,
            TableArg::Gamma => TableKind::Gamma,
        }
    }
}

#[derive(Debug, Default, Args)]
pub struct Flags {
    /// key=value file applied before the flags below
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Diffusion coefficients, comma separated
    #[arg(long, global = true)]
    pub nu: Option<String>,
    /// Space cell counts (h = 1/N), comma separated
    #[arg(long, global = true)]
    pub h_cells: Option<String>,
    /// Time cell counts (k = T/M), comma separated
    #[arg(long, global = true)]
    pub k_cells: Option<String>,
    /// Final time
    #[arg(long = "T", global = true)]
    pub final_time: Option<String>,
    /// fast or rigorous
    #[arg(long, global = true)]
    pub mode: Option<String>,
    /// csv, markdown or json
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// Output file (directory for `matrices`); stdout if absent
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Manufactured case: u1, u2, u3 or zero
    #[arg(long, global = true)]
    pub case: Option<String>,
    /// q or qhat
    #[arg(long, global = true)]
    pub scheme: Option<String>,
    /// Worker threads for table sweeps
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

impl Flags {
    fn overrides(&self) -> Result<Overrides, CliError> {
        let mut text = String::new();
        let mut put = |k: &str, v: &Option<String>| {
            if let Some(v) = v {
                text.push_str(&format!("{k}={v}\n"));
            }
        };
        put("nu", &self.nu);
        put("h-cells", &self.h_cells);
        put("k-cells", &self.k_cells);
        put("T", &self.final_time);
        let mut o = Overrides::parse_file_contents(&text)?;
        o.mode = self.mode.as_deref().map(parse_mode).transpose()?;
        o.format = self.format.as_deref().map(str::parse).transpose()?;
        o.case = self.case.as_deref().map(parse_case).transpose()?;
        o.scheme = self.scheme.as_deref().map(parse_scheme).transpose()?;
        o.out = self.out.clone();
        o.threads = self.threads;
        Ok(o)
    }

    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(p) => Overrides::from_file(p)?,
            None => Overrides::default(),
        };
        RunConfig::resolve(file.merged(self.overrides()?))
    }
}

fn sink(cfg: &RunConfig) -> Result<Box<dyn Write>, CliError> {
    Ok(match &cfg.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = cli.flags.resolve()?;
    match &cli.command {
        Command::Table { which } => {
            let t = table::compute_table(&cfg, (*which).into())?;
            let mut out = sink(&cfg)?;
            match cfg.format {
                Format::Csv => table::write_csv(&mut out, &t)?,
                Format::Markdown => out.write_all(table::render_markdown(&t).as_bytes())?,
                Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&t)?)?,
            }
            out.flush()?;
        }
        Command::Constants => {
            let r = report::compute_constants(&cfg)?;
            let mut out = sink(&cfg)?;
            match cfg.format {
                Format::Csv => report::constants_csv(&mut out, &r)?,
                Format::Markdown => out.write_all(report::constants_markdown(&r).as_bytes())?,
                Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&r)?)?,
            }
            out.flush()?;
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
        }
        Command::Validate => {
            let sys = report::single_system(&cfg)?;
            let r = stfem::solver::validate_case(&sys, cfg.case, cfg.scheme)?;
            let mut out = sink(&cfg)?;
            match cfg.format {
                Format::Csv => report::validation_csv(&mut out, &r)?,
                Format::Markdown => out.write_all(report::validation_markdown(&r).as_bytes())?,
                Format::Json => {
                    let v = serde_json::json!({ "all_hold": r.all_hold(), "report": r });
                    writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?
                }
            }
            out.flush()?;
            let failed = r.checks.iter().filter(|c| !c.holds()).count();
            if failed > 0 {
                return Err(CliError::Violation(failed));
            }
        }
        Command::Solve => {
            let (sys, sol) = report::solve_case(&cfg)?;
            let mut out = sink(&cfg)?;
            report::solution_csv(&mut out, &sys, &sol)?;
            out.flush()?;
        }
        Command::Matrices => {
            let dir = cfg
                .out
                .clone()
                .ok_or_else(|| CliError::Usage("matrices needs --out <directory>".into()))?;
            let sys = report::single_system(&cfg)?;
            for f in report::dump_matrices(&sys, &dir)? {
                eprintln!("wrote {}", dir.join(f).display());
            }
        }
    }
    Ok(())
}
