//! Run configuration: built-in defaults, then a key=value file, then flags.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use stfem::rigor::Mode;
use stfem::solver::{ManufacturedCase, Scheme};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Markdown,
    Json,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "markdown" | "md" => Ok(Format::Markdown),
            "json" => Ok(Format::Json),
            _ => Err(CliError::Usage(format!("unknown format `{s}` (csv, markdown, json)"))),
        }
    }
}

pub fn parse_mode(s: &str) -> Result<Mode, CliError> {
    match s.to_ascii_lowercase().as_str() {
        "fast" => Ok(Mode::Fast),
        "rigorous" => Ok(Mode::Rigorous),
        _ => Err(CliError::Usage(format!("unknown mode `{s}` (fast, rigorous)"))),
    }
}

pub fn parse_scheme(s: &str) -> Result<Scheme, CliError> {
    match s.to_ascii_lowercase().as_str() {
        "q" => Ok(Scheme::Q),
        "qhat" | "q-hat" | "q_hat" => Ok(Scheme::QHat),
        _ => Err(CliError::Usage(format!("unknown scheme `{s}` (q, qhat)"))),
    }
}

pub fn parse_case(s: &str) -> Result<ManufacturedCase, CliError> {
    ManufacturedCase::parse(&s.to_ascii_lowercase()).map_err(|e| CliError::Usage(e.to_string()))
}

fn parse_list<T: FromStr>(key: &str, s: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<T>().map_err(|_| CliError::Usage(format!("bad value `{p}` for {key}"))))
        .collect()
}

/// Settings that may come from a config file or from flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub nu: Option<Vec<f64>>,
    pub h_cells: Option<Vec<usize>>,
    pub k_cells: Option<Vec<usize>>,
    pub final_time: Option<f64>,
    pub mode: Option<Mode>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub case: Option<ManufacturedCase>,
    pub scheme: Option<Scheme>,
    pub threads: Option<usize>,
}

impl Overrides {
    /// Parse `key = value` lines; `#` starts a comment.
    pub fn parse_file_contents(text: &str) -> Result<Self, CliError> {
        let mut o = Overrides::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", lineno + 1)))?;
            o.set(key.trim(), value.trim())
                .map_err(|e| CliError::Usage(format!("config line {}: {e}", lineno + 1)))?;
        }
        Ok(o)
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse_file_contents(&text)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = key.to_ascii_lowercase().replace('_', "-");
        match key.as_str() {
            "nu" => self.nu = Some(parse_list("nu", value)?),
            "h-cells" | "h" => self.h_cells = Some(parse_list("h-cells", value)?),
            "k-cells" | "k" => self.k_cells = Some(parse_list("k-cells", value)?),
            "t" | "final-time" => {
                self.final_time = Some(value.parse().map_err(|_| CliError::Usage(format!("bad value `{value}` for T")))?)
            }
            "mode" => self.mode = Some(parse_mode(value)?),
            "format" => self.format = Some(value.parse()?),
            "out" => self.out = Some(PathBuf::from(value)),
            "case" => self.case = Some(parse_case(value)?),
            "scheme" => self.scheme = Some(parse_scheme(value)?),
            "threads" => {
                self.threads = Some(value.parse().map_err(|_| CliError::Usage(format!("bad value `{value}` for threads")))?)
            }
            _ => return Err(CliError::Usage(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Fields set in `other` win.
    pub fn merged(self, other: Overrides) -> Overrides {
        Overrides {
            nu: other.nu.or(self.nu),
            h_cells: other.h_cells.or(self.h_cells),
            k_cells: other.k_cells.or(self.k_cells),
            final_time: other.final_time.or(self.final_time),
            mode: other.mode.or(self.mode),
            format: other.format.or(self.format),
            out: other.out.or(self.out),
            case: other.case.or(self.case),
            scheme: other.scheme.or(self.scheme),
            threads: other.threads.or(self.threads),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub nu: Vec<f64>,
    pub h_cells: Vec<usize>,
    pub k_cells: Vec<usize>,
    pub final_time: f64,
    pub mode: Mode,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub case: ManufacturedCase,
    pub scheme: Scheme,
    pub threads: Option<usize>,
}

pub const TABLE_NU: [f64; 3] = [1.0, 0.1, 0.01];
pub const TABLE_H_CELLS: [usize; 3] = [5, 10, 20];

/// `40, 80, ..., 400`.
pub fn table_k_cells() -> Vec<usize> {
    (1..=10).map(|i| 40 * i).collect()
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            nu: TABLE_NU.to_vec(),
            h_cells: TABLE_H_CELLS.to_vec(),
            k_cells: table_k_cells(),
            final_time: 1.0,
            mode: Mode::Fast,
            format: Format::Markdown,
            out: None,
            case: ManufacturedCase::U1,
            scheme: Scheme::Q,
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn resolve(o: Overrides) -> Result<Self, CliError> {
        let d = RunConfig::default();
        let cfg = RunConfig {
            nu: o.nu.unwrap_or(d.nu),
            h_cells: o.h_cells.unwrap_or(d.h_cells),
            k_cells: o.k_cells.unwrap_or(d.k_cells),
            final_time: o.final_time.unwrap_or(d.final_time),
            mode: o.mode.unwrap_or(d.mode),
            format: o.format.unwrap_or(d.format),
            out: o.out.or(d.out),
            case: o.case.unwrap_or(d.case),
            scheme: o.scheme.unwrap_or(d.scheme),
            threads: o.threads.or(d.threads),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.nu.is_empty() || self.h_cells.is_empty() || self.k_cells.is_empty() {
            return Err(CliError::Usage("nu, h-cells and k-cells lists must be nonempty".into()));
        }
        if let Some(nu) = self.nu.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(CliError::Usage(format!("nu must be positive and finite (got {nu})")));
        }
        if let Some(h) = self.h_cells.iter().find(|h| **h < 2) {
            return Err(CliError::Usage(format!("h-cells must be at least 2 (got {h})")));
        }
        if self.k_cells.contains(&0) {
            return Err(CliError::Usage("k-cells must be at least 1".into()));
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return Err(CliError::Usage(format!("T must be positive and finite (got {})", self.final_time)));
        }
        if self.threads == Some(0) {
            return Err(CliError::Usage("threads must be at least 1".into()));
        }
        Ok(())
    }

    /// The single `(nu, h, k)` point, or a usage error for a grid.
    pub fn single_point(&self) -> Result<(f64, usize, usize), CliError> {
        match (self.nu.as_slice(), self.h_cells.as_slice(), self.k_cells.as_slice()) {
            ([nu], [h], [k]) => Ok((*nu, *h, *k)),
            _ => Err(CliError::Usage(
                "this command needs exactly one value each for --nu, --h-cells and --k-cells".into(),
            )),
        }
    }
}
