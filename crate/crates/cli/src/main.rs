//! `cmeig`: evaluate, verify, calibrate, and tabulate the integer-coupling
//! relativistic eigenfunctions exposed by the core library.
//!
//! Exit codes: 0 when the run succeeds and every verified case passes;
//! 1 on verification failure, calibration failure, runtime evaluation
//! failure, or I/O error; 2 on usage errors (bad flags, malformed or
//! unknown config keys, invalid parameters, missing required fields).
//!
//! Determinism: identical argv and seed produce byte-identical JSON
//! reports apart from the `runtime_ms` field.

mod cache;
mod config;
mod report;

use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use cmeig_core::harness::{self, SuiteConfig};
use cmeig_core::quadrature::{self, QuadratureSpec};
use cmeig_core::{ba, build_params, Error, ModelParams};

use crate::cache::SeriesCache;
use crate::config::{
    assemble, Command, CommonOpts, FileConfig, OutputFormat, RunConfig, UsageError, Which,
};

#[derive(Parser)]
#[command(
    name = "cmeig",
    version,
    about = "Eigenfunction engine: series evaluation, quadrature, verification suites, \
             calibration, and tabulation",
    after_help = "Config files are flat TOML whose keys match the long flag names with \
                  underscores (a, m, n, x, y, suite, seed, probes, tolerance, \
                  truncation_l, panels, nodes_per_panel, target_tol, output_path, \
                  output_format, which, grid_min, grid_max, grid_steps, command), plus \
                  an optional [tolerances] table mapping suite names to tolerances. \
                  Command-line flags override file values. Unknown keys are rejected."
)]
struct Cli {
    /// Flat TOML config file; command-line flags override its values
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<std::path::PathBuf>,

    #[command(subcommand)]
    command: Option<CliCommand>,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Evaluate the normalized expansion at spatial points x and spectral
    /// points y (the underlying function of (ix, iy)); caches coefficients
    EvalPsi(CommonOpts),
    /// Evaluate the joint eigenfunction at real points by nested line
    /// quadrature of its defining recursion (N <= 3), with an error estimate
    EvalPhiQuad(CommonOpts),
    /// Evaluate the joint eigenfunction at real points through the
    /// antisymmetrized closed form (N <= 4)
    EvalPhiClosed(CommonOpts),
    /// Run a verification suite and report per-case residuals.
    /// Suites: ba_normalization, vanishing, self_duality, eigenvalue,
    /// antisymmetry, shift_invariance, similarity, contour_vs_residue,
    /// theorem_n2, theorem_n3, prop_psiN
    Verify(CommonOpts),
    /// Compare quadrature against the closed-form conventions over seeded
    /// probes and report which convention, if any, is confirmed
    Calibrate(CommonOpts),
    /// Emit a CSV grid sweeping the first x coordinate, holding the other
    /// coordinates and the spectral points fixed
    Tabulate(CommonOpts),
}

impl CliCommand {
    fn split(self) -> (Command, CommonOpts) {
        match self {
            CliCommand::EvalPsi(o) => (Command::EvalPsi, o),
            CliCommand::EvalPhiQuad(o) => (Command::EvalPhiQuad, o),
            CliCommand::EvalPhiClosed(o) => (Command::EvalPhiClosed, o),
            CliCommand::Verify(o) => (Command::Verify, o),
            CliCommand::Calibrate(o) => (Command::Calibrate, o),
            CliCommand::Tabulate(o) => (Command::Tabulate, o),
        }
    }
}

/// Everything that can go wrong after configuration is resolved.
#[derive(Debug)]
enum RunError {
    Core(Error),
    Io(std::io::Error),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Core(e) => write!(f, "{e}"),
            RunError::Io(e) => write!(f, "i/o: {e}"),
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> RunError {
        RunError::Core(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> RunError {
        RunError::Io(e)
    }
}

/// Exit-code policy. Calibration failure is a *verification* outcome (the
/// data refused every convention), not a usage mistake, so it maps to 1
/// even though the core reports it through the config-error variant.
fn exit_code_for(err: &RunError) -> u8 {
    match err {
        RunError::Io(_) => 1,
        RunError::Core(e) => match e {
            Error::Config(msg) if msg.starts_with("calibration failed") => 1,
            Error::InvalidParameter(_)
            | Error::IndexOutOfRange(_)
            | Error::Precondition(_)
            | Error::Config(_)
            | Error::SizeLimit(_) => 2,
            Error::PoleProximity { .. } | Error::Accuracy { .. } | Error::ContourCollision(_) => 1,
        },
    }
}

fn main() -> ExitCode {
    ExitCode::from(run())
}

fn run() -> u8 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };

    let file = match &cli.config {
        Some(path) => match FileConfig::load(path) {
            Ok(f) => f,
            Err(e) => return usage_exit(&e),
        },
        None => FileConfig::default(),
    };

    let (command, opts) = match cli.command {
        Some(sub) => sub.split(),
        None => match file.command.as_deref() {
            Some(name) => match Command::parse(name) {
                Ok(c) => (c, CommonOpts::default()),
                Err(e) => return usage_exit(&e),
            },
            None => {
                eprintln!(
                    "error: no command given; name a subcommand or set the config key \
                     `command` (see --help)"
                );
                return 2;
            }
        },
    };

    let rc = match assemble(command, &opts, &file) {
        Ok(rc) => rc,
        Err(e) => return usage_exit(&e),
    };

    match dispatch(&rc) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    }
}

fn usage_exit(err: &UsageError) -> u8 {
    eprintln!("error: {err}");
    2
}

fn dispatch(rc: &RunConfig) -> Result<u8, RunError> {
    match rc.command {
        Command::Verify => run_verify(rc),
        Command::Calibrate => run_calibrate(rc),
        Command::EvalPsi | Command::EvalPhiQuad | Command::EvalPhiClosed => run_eval(rc),
        Command::Tabulate => run_tabulate(rc),
    }
}

// ---------------------------------------------------------------------------
// verify / calibrate
// ---------------------------------------------------------------------------

fn run_verify(rc: &RunConfig) -> Result<u8, RunError> {
    let sc = SuiteConfig {
        suite: rc.suite.clone().expect("validated by assemble"),
        a: rc.a,
        m: rc.m,
        n: rc.n,
        seed: rc.seed,
        probes: rc.probes,
        tolerance: rc.tolerance,
    };
    let report = harness::run_suite(&sc)?;
    let rendered = match rc.output_format {
        OutputFormat::Json => report::render_json(&report),
        OutputFormat::Csv => report::render_csv(&report),
        OutputFormat::Text => report::render_text(&report),
    };
    report::emit(&rendered, rc.output_path.as_deref())?;
    Ok(if report.all_pass() { 0 } else { 1 })
}

fn run_calibrate(rc: &RunConfig) -> Result<u8, RunError> {
    let params = build_params(rc.a, rc.m)?;
    let probes = harness::calibration_probes(rc.seed, rc.probes.unwrap_or(10));
    let record = harness::calibrate(&params, &probes)?;
    let rendered = match rc.output_format {
        OutputFormat::Json => report::render_calibration_json(&record),
        OutputFormat::Text => report::render_calibration_text(&record),
        OutputFormat::Csv => unreachable!("rejected by config validation"),
    };
    report::emit(&rendered, rc.output_path.as_deref())?;
    Ok(if record.selected.is_some() { 0 } else { 1 })
}

// ---------------------------------------------------------------------------
// eval-psi / eval-phi-quad / eval-phi-closed
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct EvalOutput {
    command: &'static str,
    a: f64,
    m: u32,
    n: usize,
    x: Vec<[f64; 2]>,
    y: Vec<[f64; 2]>,
    value: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    error_estimate: Option<f64>,
}

fn points_line(label: &str, pts: &[Complex64]) -> String {
    let body: Vec<String> = pts
        .iter()
        .map(|z| format!("{}:{}", report::fmt_f64(z.re), report::fmt_f64(z.im)))
        .collect();
    format!("{label} = {}\n", body.join(","))
}

fn render_eval(rc: &RunConfig, out: &EvalOutput) -> String {
    match rc.output_format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(out).expect("plain data serializes");
            s.push('\n');
            s
        }
        OutputFormat::Text => {
            let mut s = format!(
                "command: {} (a = {}, m = {}, n = {})\n",
                out.command, out.a, out.m, out.n
            );
            let xc: Vec<Complex64> = out.x.iter().map(|p| Complex64::new(p[0], p[1])).collect();
            let yc: Vec<Complex64> = out.y.iter().map(|p| Complex64::new(p[0], p[1])).collect();
            s.push_str(&points_line("x", &xc));
            s.push_str(&points_line("y", &yc));
            s.push_str(&format!(
                "value = {} + {} i\n",
                report::fmt_f64(out.value[0]),
                report::fmt_f64(out.value[1])
            ));
            if let Some(est) = out.error_estimate {
                s.push_str(&format!("error estimate <= {:.3e}\n", est));
            }
            s
        }
        OutputFormat::Csv => unreachable!("rejected by config validation"),
    }
}

/// Explicit points when given; otherwise real separated probe points drawn
/// from the seed (the separation keeps every evaluation route away from its
/// coincident-coordinate poles).
fn points_or_probe(rc: &RunConfig) -> (Vec<Complex64>, Vec<Complex64>) {
    match (&rc.x, &rc.y) {
        (Some(x), Some(y)) => (x.clone(), y.clone()),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(rc.seed);
            let x = draw_separated(&mut rng, rc.n, 0.15);
            let y = draw_separated(&mut rng, rc.n, 0.15);
            (
                x.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
                y.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
            )
        }
    }
}

fn draw_separated(rng: &mut ChaCha8Rng, n: usize, sep: f64) -> Vec<f64> {
    loop {
        let cand: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ok = cand
            .iter()
            .enumerate()
            .all(|(j, &vj)| cand[..j].iter().all(|&vk| (vj - vk).abs() >= sep));
        if ok {
            return cand;
        }
    }
}

/// Quadrature rule: defaults derived from the parameters and points, with
/// any explicit overrides applied and re-validated.
fn quad_spec(params: &ModelParams, rc: &RunConfig, x: &[f64]) -> Result<QuadratureSpec, RunError> {
    let base = QuadratureSpec::default_for(params, x);
    Ok(QuadratureSpec::new(
        rc.truncation_l.unwrap_or(base.truncation_l),
        rc.panels.unwrap_or(base.panels),
        rc.nodes_per_panel.unwrap_or(base.nodes_per_panel),
        rc.target_tol.unwrap_or(base.target_tol),
    )?)
}

/// Expansion at `x`, through the content-addressed cache when possible.
fn cached_series(
    params: &ModelParams,
    cache: &SeriesCache,
    a: f64,
    m: u32,
    x: &[Complex64],
) -> Result<ba::SeriesExpansion, Error> {
    let key = SeriesCache::key(a, m, x);
    if let Some(series) = cache.load(&key, a, m, x) {
        return Ok(series);
    }
    let series = ba::psi_series(params, x)?;
    cache.store(&key, &series);
    Ok(series)
}

fn run_eval(rc: &RunConfig) -> Result<u8, RunError> {
    let params = build_params(rc.a, rc.m)?;
    let (x, y) = points_or_probe(rc);

    let (value, estimate) = match rc.command {
        Command::EvalPsi => {
            let cache = SeriesCache::from_env();
            let series = cached_series(&params, &cache, rc.a, rc.m, &x)?;
            (series.contract(&params, &y)?, None)
        }
        Command::EvalPhiQuad => {
            let xr = config::real_parts(&x, "x").map_err(usage_to_core)?;
            let yr = config::real_parts(&y, "y").map_err(usage_to_core)?;
            let spec = quad_spec(&params, rc, &xr)?;
            let (v, est) = quadrature::phi_quadrature_with_estimate(&params, &xr, &yr, &spec)?;
            (v, Some(est))
        }
        Command::EvalPhiClosed => {
            let xr = config::real_parts(&x, "x").map_err(usage_to_core)?;
            let yr = config::real_parts(&y, "y").map_err(usage_to_core)?;
            (harness::phi_closed_form(&params, &xr, &yr)?, None)
        }
        _ => unreachable!("run_eval dispatches eval commands only"),
    };

    let out = EvalOutput {
        command: rc.command.name(),
        a: rc.a,
        m: rc.m,
        n: x.len(),
        x: x.iter().map(|z| [z.re, z.im]).collect(),
        y: y.iter().map(|z| [z.re, z.im]).collect(),
        value: [value.re, value.im],
        error_estimate: estimate,
    };
    report::emit(&render_eval(rc, &out), rc.output_path.as_deref())?;
    Ok(0)
}

/// Point-shape mistakes surface after parsing (points may come from probe
/// generation), so they are routed through the core precondition variant,
/// which the exit policy maps to the usage code.
fn usage_to_core(err: UsageError) -> RunError {
    RunError::Core(Error::Precondition(err.0))
}

// ---------------------------------------------------------------------------
// tabulate
// ---------------------------------------------------------------------------

fn run_tabulate(rc: &RunConfig) -> Result<u8, RunError> {
    let params = build_params(rc.a, rc.m)?;
    let x = rc.x.clone().expect("validated by assemble");
    let y = rc.y.clone().expect("validated by assemble");
    if rc.which == Which::Phi {
        config::real_parts(&x, "x").map_err(usage_to_core)?;
        config::real_parts(&y, "y").map_err(usage_to_core)?;
    }
    let cache = SeriesCache::from_env();

    let mut csv = String::from("x0,value_re,value_im\n");
    for i in 0..rc.grid_steps {
        let t = if rc.grid_steps == 1 {
            rc.grid_min
        } else {
            rc.grid_min + (rc.grid_max - rc.grid_min) * (i as f64) / ((rc.grid_steps - 1) as f64)
        };
        let mut xi = x.clone();
        xi[0] = Complex64::new(t, x[0].im);
        let value = match rc.which {
            Which::Psi => cached_series(&params, &cache, rc.a, rc.m, &xi)
                .and_then(|s| s.contract(&params, &y)),
            Which::Phi => {
                let xr: Vec<f64> = xi.iter().map(|z| z.re).collect();
                let yr: Vec<f64> = y.iter().map(|z| z.re).collect();
                harness::phi_closed_form(&params, &xr, &yr)
            }
        };
        // A grid point that collides with a fixed coordinate (or otherwise
        // fails) becomes a NaN row rather than aborting the sweep.
        let (re, im) = match value {
            Ok(v) => (v.re, v.im),
            Err(_) => (f64::NAN, f64::NAN),
        };
        csv.push_str(&format!(
            "{},{},{}\n",
            report::fmt_f64(t),
            report::fmt_f64(re),
            report::fmt_f64(im)
        ));
    }
    report::emit(&csv, rc.output_path.as_deref())?;
    Ok(0)
}
