//! Run configuration: command-line flags, flat TOML config files, and the
//! merge between them.
//!
//! Precedence is strict: command-line flags override config-file values,
//! which override built-in defaults. Config files are flat key/value TOML
//! documents whose keys are exactly the [`RunConfig`] field names (plus an
//! optional `[tolerances]` table mapping suite names to residual
//! tolerances); unknown keys are rejected by name with a usage error.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Deserialize;

/// A mistake in how the tool was invoked: missing or contradictory fields,
/// malformed values, unknown config keys. Reported on stderr with exit
/// code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

pub type UsageResult<T> = Result<T, UsageError>;

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

/// The six subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    EvalPsi,
    EvalPhiQuad,
    EvalPhiClosed,
    Verify,
    Calibrate,
    Tabulate,
}

impl Command {
    pub fn parse(s: &str) -> UsageResult<Command> {
        match s {
            "eval-psi" => Ok(Command::EvalPsi),
            "eval-phi-quad" => Ok(Command::EvalPhiQuad),
            "eval-phi-closed" => Ok(Command::EvalPhiClosed),
            "verify" => Ok(Command::Verify),
            "calibrate" => Ok(Command::Calibrate),
            "tabulate" => Ok(Command::Tabulate),
            other => Err(usage(format!(
                "unknown command '{other}'; expected one of eval-psi, eval-phi-quad, \
                 eval-phi-closed, verify, calibrate, tabulate"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Command::EvalPsi => "eval-psi",
            Command::EvalPhiQuad => "eval-phi-quad",
            Command::EvalPhiClosed => "eval-phi-closed",
            Command::Verify => "verify",
            Command::Calibrate => "calibrate",
            Command::Tabulate => "tabulate",
        }
    }

    fn default_format(self) -> OutputFormat {
        match self {
            Command::Tabulate => OutputFormat::Csv,
            _ => OutputFormat::Text,
        }
    }
}

/// Report/output rendering format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

impl OutputFormat {
    pub fn parse(s: &str) -> UsageResult<OutputFormat> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "text" => Ok(OutputFormat::Text),
            other => Err(usage(format!(
                "unknown output format '{other}'; expected json, csv, or text"
            ))),
        }
    }
}

/// What `tabulate` sweeps: the normalized expansion or the closed-form
/// joint eigenfunction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Psi,
    Phi,
}

impl Which {
    pub fn parse(s: &str) -> UsageResult<Which> {
        match s {
            "psi" => Ok(Which::Psi),
            "phi" => Ok(Which::Phi),
            other => Err(usage(format!(
                "unknown tabulation target '{other}'; expected psi or phi"
            ))),
        }
    }
}

/// Options shared by every subcommand. All optional so a config file can
/// supply any of them; [`assemble`] enforces per-command requirements.
#[derive(clap::Args, Clone, Default, Debug)]
pub struct CommonOpts {
    /// Model parameter a (must exceed m - 1)
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,

    /// Integer coupling m >= 1
    #[arg(long)]
    pub m: Option<u32>,

    /// Number of points N (inferred from --x/--y when points are given)
    #[arg(long)]
    pub n: Option<usize>,

    /// Spatial points: comma-separated re:im pairs, e.g. "0.7:0,0.1:0"
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<String>,

    /// Spectral points: comma-separated re:im pairs
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<String>,

    /// Verification suite name (run `cmeig verify --help` for the list)
    #[arg(long)]
    pub suite: Option<String>,

    /// Probe-generation seed (default 42)
    #[arg(long)]
    pub seed: Option<u64>,

    /// Probe-count override
    #[arg(long)]
    pub probes: Option<usize>,

    /// Residual-tolerance override
    #[arg(long, allow_negative_numbers = true)]
    pub tolerance: Option<f64>,

    /// Quadrature: half-length of the truncated integration interval
    #[arg(long = "truncation-l")]
    pub truncation_l: Option<f64>,

    /// Quadrature: number of panels per dimension
    #[arg(long)]
    pub panels: Option<usize>,

    /// Quadrature: Gauss-Legendre nodes per panel (>= 4 so the halved-order
    /// error estimate stays meaningful)
    #[arg(long = "nodes-per-panel")]
    pub nodes_per_panel: Option<usize>,

    /// Quadrature: accuracy target for the error estimate
    #[arg(long = "target-tol")]
    pub target_tol: Option<f64>,

    /// Write output to this file instead of stdout
    #[arg(long = "output")]
    pub output_path: Option<PathBuf>,

    /// Output format: json, csv, or text
    #[arg(long = "format")]
    pub output_format: Option<String>,

    /// Tabulation target: psi or phi (default phi)
    #[arg(long)]
    pub which: Option<String>,

    /// Tabulation: lower bound of the swept first coordinate
    #[arg(long = "grid-min", allow_negative_numbers = true)]
    pub grid_min: Option<f64>,

    /// Tabulation: upper bound of the swept first coordinate
    #[arg(long = "grid-max", allow_negative_numbers = true)]
    pub grid_max: Option<f64>,

    /// Tabulation: number of grid points
    #[arg(long = "grid-steps")]
    pub grid_steps: Option<usize>,
}

/// Flat config file. Field names are the exact permitted keys; anything
/// else is rejected by name.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<String>,
    pub a: Option<f64>,
    pub m: Option<u32>,
    pub n: Option<usize>,
    pub x: Option<String>,
    pub y: Option<String>,
    pub suite: Option<String>,
    pub seed: Option<u64>,
    pub probes: Option<usize>,
    pub tolerance: Option<f64>,
    /// Per-suite tolerance map; a bare `tolerance` (or the flag) wins over
    /// the map entry for the suite being run.
    pub tolerances: Option<BTreeMap<String, f64>>,
    pub truncation_l: Option<f64>,
    pub panels: Option<usize>,
    pub nodes_per_panel: Option<usize>,
    pub target_tol: Option<f64>,
    pub output_path: Option<String>,
    pub output_format: Option<String>,
    pub which: Option<String>,
    pub grid_min: Option<f64>,
    pub grid_max: Option<f64>,
    pub grid_steps: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> UsageResult<FileConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config file {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| usage(format!("config file {}: {e}", path.display())))
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub a: f64,
    pub m: u32,
    pub n: usize,
    pub x: Option<Vec<Complex64>>,
    pub y: Option<Vec<Complex64>>,
    pub suite: Option<String>,
    pub seed: u64,
    pub probes: Option<usize>,
    pub tolerance: Option<f64>,
    pub truncation_l: Option<f64>,
    pub panels: Option<usize>,
    pub nodes_per_panel: Option<usize>,
    pub target_tol: Option<f64>,
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
    pub which: Which,
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_steps: usize,
}

/// Parses `re:im` pairs separated by commas; a bare `re` means `re:0`.
pub fn parse_points(list: &str) -> UsageResult<Vec<Complex64>> {
    let mut out = Vec::new();
    for token in list.split(',') {
        let token = token.trim();
        if token.is_empty() {
            return Err(usage(format!("empty point in list '{list}'")));
        }
        let (re_s, im_s) = token.split_once(':').unwrap_or((token, "0"));
        let re: f64 = re_s.trim().parse().map_err(|_| {
            usage(format!(
                "cannot parse '{re_s}' in point '{token}' as a number"
            ))
        })?;
        let im: f64 = im_s.trim().parse().map_err(|_| {
            usage(format!(
                "cannot parse '{im_s}' in point '{token}' as a number"
            ))
        })?;
        if !re.is_finite() || !im.is_finite() {
            return Err(usage(format!("point '{token}' is not finite")));
        }
        out.push(Complex64::new(re, im));
    }
    Ok(out)
}

/// Extracts real parts, rejecting any point with a nonzero imaginary part.
pub fn real_parts(points: &[Complex64], label: &str) -> UsageResult<Vec<f64>> {
    for pt in points {
        if pt.im != 0.0 {
            return Err(usage(format!(
                "this command requires real points, but {label} contains {}:{}",
                pt.re, pt.im
            )));
        }
    }
    Ok(points.iter().map(|pt| pt.re).collect())
}

/// Merges flags over file values over defaults and enforces per-command
/// requirements.
pub fn assemble(command: Command, opts: &CommonOpts, file: &FileConfig) -> UsageResult<RunConfig> {
    let a = opts
        .a
        .or(file.a)
        .ok_or_else(|| usage("missing model parameter: give --a or config key `a`"))?;
    let m = opts
        .m
        .or(file.m)
        .ok_or_else(|| usage("missing coupling: give --m or config key `m`"))?;
    let seed = opts.seed.or(file.seed).unwrap_or(42);
    let probes = opts.probes.or(file.probes);
    let suite = opts.suite.clone().or_else(|| file.suite.clone());

    let tolerance = opts.tolerance.or(file.tolerance).or_else(|| {
        suite
            .as_deref()
            .and_then(|s| file.tolerances.as_ref().and_then(|map| map.get(s).copied()))
    });

    let x = match opts.x.as_deref().or(file.x.as_deref()) {
        Some(s) => Some(parse_points(s)?),
        None => None,
    };
    let y = match opts.y.as_deref().or(file.y.as_deref()) {
        Some(s) => Some(parse_points(s)?),
        None => None,
    };
    if x.is_some() != y.is_some() {
        return Err(usage(
            "points must be given for both x and y, or for neither",
        ));
    }
    if let (Some(xs), Some(ys)) = (&x, &y) {
        if xs.len() != ys.len() {
            return Err(usage(format!(
                "x has {} points but y has {}",
                xs.len(),
                ys.len()
            )));
        }
        if xs.is_empty() {
            return Err(usage("point lists must be nonempty"));
        }
    }

    let explicit_n = opts.n.or(file.n);
    let n = match (&x, explicit_n) {
        (Some(xs), Some(n)) if xs.len() != n => {
            return Err(usage(format!(
                "n is {n} but {} points were given",
                xs.len()
            )));
        }
        (Some(xs), _) => xs.len(),
        (None, Some(n)) => n,
        (None, None) => match command {
            Command::Verify | Command::Calibrate => 2,
            _ => {
                return Err(usage(
                    "missing point count: give --n with a probe seed, or explicit --x/--y points",
                ));
            }
        },
    };

    let output_format = match opts
        .output_format
        .as_deref()
        .or(file.output_format.as_deref())
    {
        Some(s) => OutputFormat::parse(s)?,
        None => command.default_format(),
    };
    let output_path = opts
        .output_path
        .clone()
        .or_else(|| file.output_path.as_deref().map(PathBuf::from));
    let which = match opts.which.as_deref().or(file.which.as_deref()) {
        Some(s) => Which::parse(s)?,
        None => Which::Phi,
    };

    let rc = RunConfig {
        command,
        a,
        m,
        n,
        x,
        y,
        suite,
        seed,
        probes,
        tolerance,
        truncation_l: opts.truncation_l.or(file.truncation_l),
        panels: opts.panels.or(file.panels),
        nodes_per_panel: opts.nodes_per_panel.or(file.nodes_per_panel),
        target_tol: opts.target_tol.or(file.target_tol),
        output_path,
        output_format,
        which,
        grid_min: opts.grid_min.or(file.grid_min).unwrap_or(-1.0),
        grid_max: opts.grid_max.or(file.grid_max).unwrap_or(1.0),
        grid_steps: opts.grid_steps.or(file.grid_steps).unwrap_or(25),
    };
    validate(&rc)?;
    Ok(rc)
}

fn validate(rc: &RunConfig) -> UsageResult<()> {
    match rc.command {
        Command::Verify => {
            if rc.suite.is_none() {
                return Err(usage(
                    "verify requires a suite: give --suite or config key `suite`",
                ));
            }
        }
        Command::Tabulate => {
            if rc.x.is_none() {
                return Err(usage(
                    "tabulate requires explicit --x and --y points (the first x \
                     coordinate is swept over the grid)",
                ));
            }
            if rc.grid_min >= rc.grid_max || rc.grid_min.is_nan() || rc.grid_max.is_nan() {
                return Err(usage(format!(
                    "grid bounds must satisfy grid-min < grid-max, got {} and {}",
                    rc.grid_min, rc.grid_max
                )));
            }
            if rc.grid_steps == 0 {
                return Err(usage("grid-steps must be at least 1"));
            }
        }
        Command::EvalPsi | Command::EvalPhiQuad | Command::EvalPhiClosed | Command::Calibrate => {}
    }
    if let Some(npp) = rc.nodes_per_panel {
        if npp < 4 {
            return Err(usage(
                "nodes-per-panel must be at least 4: the accuracy estimate compares \
                 against a run with half the nodes, which degenerates below that",
            ));
        }
    }
    match (rc.command, rc.output_format) {
        (Command::Verify, _) => {}
        (Command::Calibrate, OutputFormat::Csv) => {
            return Err(usage("calibrate supports json or text output, not csv"));
        }
        (Command::Tabulate, f) if f != OutputFormat::Csv => {
            return Err(usage("tabulate emits csv only"));
        }
        (Command::EvalPsi | Command::EvalPhiQuad | Command::EvalPhiClosed, OutputFormat::Csv) => {
            return Err(usage("eval commands support json or text output, not csv"));
        }
        _ => {}
    }
    Ok(())
}
