//! Joint-eigenfunction closed form, convention calibration, and the named
//! verification suites.
//!
//! The hyperbolic joint eigenfunction `Phi_N` has two independent evaluation
//! routes in this crate: nested quadrature over real lines
//! ([`crate::quadrature::phi_quadrature`]) and a closed-form antisymmetrized
//! combination of exact expansion evaluations ([`phi_closed_form`]). The two
//! routes originate in sources with different normalization conventions, so
//! the closed form carries an explicit convention choice: an overall
//! constant, and the scaling of the spectral-difference denominator.
//! [`calibrate`] measures which convention reproduces quadrature — ratio
//! constancy across probes first, then the unit-constant test — and its
//! verdict is the authority. The default convention shipped in
//! [`phi_closed_form`] is the calibration winner on the reference fixture
//! (`a = 2.5`, `m = 2`), frozen at compile time and re-verified both by unit
//! tests here and at runtime by the `theorem_n2` suite.
//!
//! [`run_suite`] executes one of the named verification suites (see
//! [`SUITE_NAMES`]) with seeded, reproducible probe generation and returns a
//! [`VerificationReport`] of per-case residuals against pinned tolerances.
//! Probe generation is deterministic in the seed, and every numerical
//! reduction underneath uses a fixed summation order, so a report's residuals
//! are bit-reproducible run to run.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ba::{
    check_antisymmetry, check_shift_invariance, check_vanishing, normalization_t, psi_eval,
    psi_eval_ba, psi_series, varphi_eval,
};
use crate::error::{Error, Result};
use crate::params::{
    bracket, build_params, i_pow, pairs, permutations_with_sign, two_sinh, ModelParams,
    MIN_RE_SEPARATION, PI,
};
use crate::qdiff::{eigen_residual, similarity_diagnose, Slot};
use crate::quadrature::{
    phi_quadrature, psi_residue_formula, varphi2_contour, ContourSpec, QuadratureSpec,
};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Relative spread below which a quadrature/closed-form ratio counts as
/// constant during calibration, and deviation from 1 below which the
/// constant counts as unity.
pub const CALIBRATION_SPREAD_TOL: f64 = 1e-5;

/// The verification suites understood by [`run_suite`].
pub const SUITE_NAMES: [&str; 11] = [
    "ba_normalization",
    "vanishing",
    "self_duality",
    "eigenvalue",
    "antisymmetry",
    "shift_invariance",
    "similarity",
    "contour_vs_residue",
    "theorem_n2",
    "theorem_n3",
    "prop_psiN",
];

/// `|lhs - rhs| / max(|lhs|, |rhs|, tiny)`.
fn rel_residual(lhs: Complex64, rhs: Complex64) -> f64 {
    (lhs - rhs).norm() / lhs.norm().max(rhs.norm()).max(1e-300)
}

// ---------------------------------------------------------------------------
// Closed form and its convention candidates
// ---------------------------------------------------------------------------

/// Scaling convention of the spectral-difference denominator in the closed
/// form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SpectralDenominator {
    /// `prod_{j<k} 2 sinh(pi (y_j - y_k))` — the argument is *not* divided
    /// by `a`.
    Plain,
    /// `prod_{j<k} 2 sinh(pi (y_k - y_j) / a)`.
    ScaledByA,
}

/// Overall constant in front of the antisymmetrized sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum OverallConstant {
    /// `i^{m N(N-1)/2} (a/P)^{(N-1)(N-2)/2}` with `P = prod_{n=1}^{m-1}
    /// 2 sin(pi n / a)`.
    Derived,
    /// `(2 i^m)^{N(N-1)/2} (P/a)^{(N-1)(N-2)/2}`.
    Printed,
}

/// One closed-form normalization candidate. Each candidate is internally
/// consistent: the `Derived` constant is paired with the `(y_j - y_k)`
/// orientation it was derived with, the `Printed` constant with the
/// `(y_k - y_j)` orientation of its source.
#[derive(Debug, Clone, Copy)]
struct ClosedFormConvention {
    name: &'static str,
    denom: SpectralDenominator,
    constant: OverallConstant,
}

/// The four candidates the calibration discriminates between. Entry 0 is the
/// shipped default: the calibration winner on the reference fixture
/// (`a = 2.5`, `m = 2`), re-verified by `calibration_identifies_shipped_convention`
/// and by every `theorem_n2` run. The denominator scaling is resolved by
/// stage 1 (ratio constancy under varying spectral separations) and the
/// constant by stage 2 (ratio equal to 1).
const CONVENTIONS: [ClosedFormConvention; 4] = [
    ClosedFormConvention {
        name: "derived-constant/plain-sinh",
        denom: SpectralDenominator::Plain,
        constant: OverallConstant::Derived,
    },
    ClosedFormConvention {
        name: "printed-constant/scaled-sinh",
        denom: SpectralDenominator::ScaledByA,
        constant: OverallConstant::Printed,
    },
    ClosedFormConvention {
        name: "printed-constant/plain-sinh",
        denom: SpectralDenominator::Plain,
        constant: OverallConstant::Printed,
    },
    ClosedFormConvention {
        name: "derived-constant/scaled-sinh",
        denom: SpectralDenominator::ScaledByA,
        constant: OverallConstant::Derived,
    },
];

/// Name of the convention [`phi_closed_form`] ships with.
pub const SHIPPED_CONVENTION: &str = CONVENTIONS[0].name;

fn convention_constant(params: &ModelParams, n: usize, constant: OverallConstant) -> Complex64 {
    let pair_count = (n * n.saturating_sub(1) / 2) as u32;
    let aspect = ((n as i64 - 1) * (n as i64 - 2) / 2) as i32;
    let p_prod = params.sin_prod();
    match constant {
        OverallConstant::Derived => i_pow(params.m * pair_count) * (params.a / p_prod).powi(aspect),
        OverallConstant::Printed => {
            2.0f64.powi(pair_count as i32)
                * i_pow(params.m * pair_count)
                * (p_prod / params.a).powi(aspect)
        }
    }
}

fn phi_closed_form_with(
    params: &ModelParams,
    x: &[f64],
    y: &[f64],
    conv: &ClosedFormConvention,
) -> Result<Complex64> {
    let n = x.len();
    if n == 0 || n > 4 {
        return Err(Error::InvalidParameter(format!(
            "closed form supports 1..=4 points, got {n}"
        )));
    }
    if y.len() != n {
        return Err(Error::Precondition(format!(
            "closed form: x has {n} coordinates but y has {}",
            y.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Precondition(
            "closed form: coordinates must be finite".into(),
        ));
    }
    // Coinciding coordinates are genuine poles of the formula: zeros of the
    // spatial normalization product (x) or of the spectral denominator (y).
    for (j, k) in pairs(n) {
        let dx = (x[j] - x[k]).abs();
        if dx < MIN_RE_SEPARATION {
            return Err(Error::PoleProximity {
                context: "closed form spatial coordinates",
                magnitude: dx,
                tolerance: MIN_RE_SEPARATION,
            });
        }
        let dy = (y[j] - y[k]).abs();
        if dy < MIN_RE_SEPARATION {
            return Err(Error::PoleProximity {
                context: "closed form spectral coordinates",
                magnitude: dy,
                tolerance: MIN_RE_SEPARATION,
            });
        }
    }
    let xc: Vec<Complex64> = x.iter().map(|&v| Complex64::from(v)).collect();
    let yc: Vec<Complex64> = y.iter().map(|&v| Complex64::from(v)).collect();
    let mut num = Complex64::new(0.0, 0.0);
    for (perm, sign) in permutations_with_sign(n) {
        let xs: Vec<Complex64> = perm.iter().map(|&i| xc[i]).collect();
        num += (sign as f64) * psi_eval(params, &xs, &yc)?;
    }
    let mut den = normalization_t(params, &xc);
    for (j, k) in pairs(n) {
        den *= match conv.denom {
            SpectralDenominator::Plain => Complex64::from(2.0 * (PI * (y[j] - y[k])).sinh()),
            SpectralDenominator::ScaledByA => two_sinh(params.a, Complex64::from(y[k] - y[j])),
        };
    }
    Ok(convention_constant(params, n, conv.constant) * num / den)
}

/// Closed-form evaluation of the joint eigenfunction `Phi_N(x, y)` at real
/// `x, y` with pairwise-distinct coordinates:
///
/// ```text
/// Phi_N(x, y) = C_N * sum_{sigma in S_N} sgn(sigma) psi_N(i sigma(x), i y)
///               / ( prod_{j<k} 2 sinh(pi (y_j - y_k)) * T_N(x) )
/// ```
///
/// where `T_N` is the spatial normalization product and
/// `C_N = i^{m N(N-1)/2} (a/P)^{(N-1)(N-2)/2}`. This normalization (spectral
/// sinh *not* scaled by `1/a`, and this constant) is the convention selected
/// by [`calibrate`] against the quadrature route; see [`SHIPPED_CONVENTION`].
///
/// Supported sizes are `N = 1..=4` (the `N = 1` value is the plane wave
/// `e^{2 pi i x y / a}`). Coinciding `x` or `y` coordinates are poles and are
/// rejected with [`Error::PoleProximity`].
pub fn phi_closed_form(params: &ModelParams, x: &[f64], y: &[f64]) -> Result<Complex64> {
    phi_closed_form_with(params, x, y, &CONVENTIONS[0])
}

// ---------------------------------------------------------------------------
// Calibration
// ---------------------------------------------------------------------------

/// Measured behaviour of one closed-form convention candidate against the
/// quadrature route.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateOutcome {
    /// Candidate name (see the convention table in this module's source).
    pub name: String,
    /// Real part of the mean quadrature/closed-form ratio over the probes.
    pub mean_ratio_re: f64,
    /// Imaginary part of the mean ratio.
    pub mean_ratio_im: f64,
    /// `max_i |ratio_i - mean| / |mean|` over the probes.
    pub relative_spread: f64,
    /// `|mean - 1|`: distance of the constant from unity.
    pub unit_deviation: f64,
    /// Stage 1 verdict: the ratio is constant in `(x, y)`.
    pub constant_ratio: bool,
    /// Stage 2 verdict: constant ratio *and* equal to 1; the calibration
    /// winner.
    pub selected: bool,
}

/// Result of calibrating the closed-form normalization against quadrature.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationRecord {
    /// Parameter `a` of the fixture.
    pub a: f64,
    /// Integer coupling `m` of the fixture.
    pub m: u32,
    /// Number of `(x, y)` probes used.
    pub probe_count: usize,
    /// Spread/unity tolerance applied ([`CALIBRATION_SPREAD_TOL`]).
    pub spread_tolerance: f64,
    /// Per-candidate measurements, in the fixed candidate order (shipped
    /// default first).
    pub candidates: Vec<CandidateOutcome>,
    /// Name of the winning candidate, if exactly the two-stage test singled
    /// one out. `None` means every candidate with a constant ratio missed
    /// unity; that outcome is reported, never patched over.
    pub selected: Option<String>,
}

/// Deterministic two-point calibration probes: `count` pairs `(x, y)` of
/// real, pairwise-separated coordinates in `[-1, 1]`. Every odd-indexed
/// probe reuses the preceding `x` with the spectral differences tripled
/// about their midpoint — the discriminating deformation that separates the
/// two spectral-denominator scalings (a wrong scaling gives an
/// `x`-independent but `y`-dependent ratio, which only varying `|y_1 - y_2|`
/// exposes). Base spectral separations are capped at 0.5 so the tripled
/// twins keep the quadrature integrand's oscillation wavelength comfortably
/// above the coarse error-estimate resolution.
pub fn calibration_probes(seed: u64, count: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = suite_rng(seed, SALT_CALIBRATION);
    let mut probes = Vec::with_capacity(count);
    while probes.len() < count {
        let x = draw_separated(&mut rng, 2, 0.15);
        let y = loop {
            let y = draw_separated(&mut rng, 2, 0.15);
            if (y[0] - y[1]).abs() <= 0.5 {
                break y;
            }
        };
        probes.push((x.clone(), y.clone()));
        if probes.len() < count {
            let mid = (y[0] + y[1]) / 2.0;
            let tripled: Vec<f64> = y.iter().map(|&v| mid + 3.0 * (v - mid)).collect();
            probes.push((x, tripled));
        }
    }
    probes
}

/// Two-stage calibration of the closed-form normalization at `N = 2`.
///
/// Stage 1 (ratio mode): for each convention candidate, compute the ratio
/// `phi_quadrature / closed form` at every probe and test whether it is
/// constant in `(x, y)` to [`CALIBRATION_SPREAD_TOL`] relative spread.
/// Stage 2 (constant mode): among candidates with a constant ratio, test
/// whether the constant is 1 to the same tolerance; the first match in the
/// fixed candidate order is recorded as `selected`.
///
/// If *no* candidate passes stage 1 the calibration has failed outright and
/// an [`Error::Config`] is returned with the best spread observed — a
/// failure is reported, never silently patched. Stage-1 success with no
/// stage-2 winner is an honest `selected: None` record.
pub fn calibrate(
    params: &ModelParams,
    probes: &[(Vec<f64>, Vec<f64>)],
) -> Result<CalibrationRecord> {
    if probes.is_empty() {
        return Err(Error::Precondition("calibrate: no probes supplied".into()));
    }
    for (x, y) in probes {
        if x.len() != 2 || y.len() != 2 {
            return Err(Error::Precondition(
                "calibrate: calibration runs on two-point probes".into(),
            ));
        }
    }
    let quads: Vec<Complex64> = probes
        .par_iter()
        .map(|(x, y)| {
            let spec = QuadratureSpec::default_for(params, x);
            phi_quadrature(params, x, y, &spec)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut candidates = Vec::with_capacity(CONVENTIONS.len());
    let mut selected = None;
    for conv in &CONVENTIONS {
        let mut ratios = Vec::with_capacity(probes.len());
        for ((x, y), &quad) in probes.iter().zip(&quads) {
            let closed = phi_closed_form_with(params, x, y, conv)?;
            if closed.norm() < 1e-280 {
                return Err(Error::Precondition(format!(
                    "calibrate: closed form vanishes at a probe under candidate {}; \
                     probes must be generic",
                    conv.name
                )));
            }
            ratios.push(quad / closed);
        }
        let mean = ratios.iter().sum::<Complex64>() / ratios.len() as f64;
        let spread = ratios
            .iter()
            .map(|r| (r - mean).norm())
            .fold(0.0f64, f64::max)
            / mean.norm().max(1e-300);
        let unit_deviation = (mean - ONE).norm();
        let constant_ratio = spread.is_finite() && spread <= CALIBRATION_SPREAD_TOL;
        let is_winner =
            constant_ratio && unit_deviation <= CALIBRATION_SPREAD_TOL && selected.is_none();
        if is_winner {
            selected = Some(conv.name.to_string());
        }
        candidates.push(CandidateOutcome {
            name: conv.name.to_string(),
            mean_ratio_re: mean.re,
            mean_ratio_im: mean.im,
            relative_spread: spread,
            unit_deviation,
            constant_ratio,
            selected: is_winner,
        });
    }
    if !candidates.iter().any(|c| c.constant_ratio) {
        let best = candidates
            .iter()
            .map(|c| c.relative_spread)
            .fold(f64::INFINITY, f64::min);
        return Err(Error::Config(format!(
            "calibration failed: no closed-form convention has a constant \
             quadrature/closed-form ratio (best relative spread {best:.3e} \
             over {} probes)",
            probes.len()
        )));
    }
    Ok(CalibrationRecord {
        a: params.a,
        m: params.m,
        probe_count: probes.len(),
        spread_tolerance: CALIBRATION_SPREAD_TOL,
        candidates,
        selected,
    })
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// One verified case inside a suite run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseResult {
    /// Position of the case in the suite's deterministic enumeration.
    pub case_index: usize,
    /// Hex digest of the exact case inputs (parameters, indices, probe
    /// coordinates), for reproducing a case without storing the vectors.
    pub inputs_digest: String,
    /// Scale-relative residual of the identity under test.
    pub residual: f64,
    /// Tolerance the residual is held to.
    pub tolerance: f64,
    /// `residual <= tolerance`.
    pub pass: bool,
}

/// Mean and spread of a diagnostic ratio collected across a suite's cases
/// (present for the suites that measure one: calibration ratios for
/// `theorem_n2`, identified-constant ratios for `similarity`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioDiagnostics {
    /// Real part of the mean ratio.
    pub mean_ratio_re: f64,
    /// Imaginary part of the mean ratio.
    pub mean_ratio_im: f64,
    /// `max_i |ratio_i - mean| / |mean|`.
    pub relative_spread: f64,
}

/// Outcome of one verification suite run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    /// The suite that ran (one of [`SUITE_NAMES`]).
    pub suite_name: String,
    /// Calibration performed during the run (`theorem_n2` only; `null`
    /// elsewhere — `theorem_n3` deliberately runs with the frozen
    /// convention and no recalibration).
    pub calibration: Option<CalibrationRecord>,
    /// Per-case results in deterministic order.
    pub cases: Vec<CaseResult>,
    /// Optional ratio diagnostics (see [`RatioDiagnostics`]).
    pub ratio_diagnostics: Option<RatioDiagnostics>,
    /// Wall-clock duration of the run in milliseconds. Everything else in
    /// the report is deterministic for a given config; this field is not.
    pub runtime_ms: u64,
}

impl VerificationReport {
    /// True when every case passed.
    pub fn all_pass(&self) -> bool {
        self.cases.iter().all(|c| c.pass)
    }
}

fn digest_parts(parts: &[String]) -> String {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update(part.as_bytes());
        hasher.update(b";");
    }
    let digest = hasher.finalize();
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn fmt_f(v: f64) -> String {
    format!("{v:.17e}")
}

fn fmt_c(z: Complex64) -> String {
    format!("{:.17e}{:+.17e}i", z.re, z.im)
}

fn fmt_fs(v: &[f64]) -> String {
    v.iter().map(|&t| fmt_f(t)).collect::<Vec<_>>().join(",")
}

fn fmt_cs(v: &[Complex64]) -> String {
    v.iter().map(|&z| fmt_c(z)).collect::<Vec<_>>().join(",")
}

fn case(idx: usize, digest: String, residual: f64, tolerance: f64) -> CaseResult {
    CaseResult {
        case_index: idx,
        inputs_digest: digest,
        residual,
        tolerance,
        pass: residual <= tolerance,
    }
}

// ---------------------------------------------------------------------------
// Probe generation
// ---------------------------------------------------------------------------

const SALT_CALIBRATION: u64 = 0x0001;
const SALT_NORMALIZATION: u64 = 0x0002;
const SALT_VANISHING: u64 = 0x0003;
const SALT_SELF_DUALITY: u64 = 0x0004;
const SALT_EIGENVALUE: u64 = 0x0005;
const SALT_ANTISYMMETRY: u64 = 0x0006;
const SALT_SHIFT: u64 = 0x0007;
const SALT_SIMILARITY: u64 = 0x0008;
const SALT_CONTOUR: u64 = 0x0009;
const SALT_THEOREM_N3: u64 = 0x000B;
const SALT_PROP_PSIN: u64 = 0x000C;

/// One stream per (seed, suite): suites never share or reorder each other's
/// draws, so adding a suite cannot silently change another suite's probes.
fn suite_rng(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(salt))
}

/// `n` uniform draws from `[-1, 1]`, redrawn until pairwise separated by
/// `min_sep`.
fn draw_separated(rng: &mut ChaCha8Rng, n: usize, min_sep: f64) -> Vec<f64> {
    'outer: loop {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        for (j, k) in pairs(n) {
            if (v[j] - v[k]).abs() < min_sep {
                continue 'outer;
            }
        }
        return v;
    }
}

/// Complex probes whose real parts and imaginary parts are each pairwise
/// separated by 0.15.
fn draw_complex_separated(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    let re = draw_separated(rng, n, 0.15);
    let im = draw_separated(rng, n, 0.15);
    re.iter()
        .zip(&im)
        .map(|(&r, &i)| Complex64::new(r, i))
        .collect()
}

fn to_complex(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&t| Complex64::from(t)).collect()
}

// ---------------------------------------------------------------------------
// Suite runner
// ---------------------------------------------------------------------------

/// Configuration of a verification-suite run.
#[derive(Debug, Clone)]
pub struct SuiteConfig {
    /// Suite name; one of [`SUITE_NAMES`].
    pub suite: String,
    /// Model parameter `a`.
    pub a: f64,
    /// Integer coupling `m >= 1`.
    pub m: u32,
    /// Number of points `N` (suites with a fixed size validate this field).
    pub n: usize,
    /// Probe-generation seed; identical configs produce bit-identical
    /// reports apart from `runtime_ms`.
    pub seed: u64,
    /// Probe-count override; `None` uses the suite's default.
    pub probes: Option<usize>,
    /// Tolerance override; `None` uses the suite's pinned default.
    pub tolerance: Option<f64>,
}

impl SuiteConfig {
    /// Config with the default seed (42) and suite-default probe counts and
    /// tolerances.
    pub fn new(suite: impl Into<String>, a: f64, m: u32, n: usize) -> Self {
        SuiteConfig {
            suite: suite.into(),
            a,
            m,
            n,
            seed: 42,
            probes: None,
            tolerance: None,
        }
    }
}

type SuiteParts = (
    Vec<CaseResult>,
    Option<RatioDiagnostics>,
    Option<CalibrationRecord>,
);

/// Runs one named verification suite and reports per-case residuals.
///
/// Unknown suite names are a configuration error naming the known suites.
/// Probe generation is seeded ([`SuiteConfig::seed`]) and all reductions are
/// fixed-order, so everything in the report except `runtime_ms` is
/// deterministic for a given config.
pub fn run_suite(config: &SuiteConfig) -> Result<VerificationReport> {
    let params = build_params(config.a, config.m)?;
    let start = Instant::now();
    let (cases, ratio_diagnostics, calibration) = match config.suite.as_str() {
        "ba_normalization" => suite_ba_normalization(&params, config)?,
        "vanishing" => suite_vanishing(&params, config)?,
        "self_duality" => suite_self_duality(&params, config)?,
        "eigenvalue" => suite_eigenvalue(&params, config)?,
        "antisymmetry" => suite_antisymmetry(&params, config)?,
        "shift_invariance" => suite_shift_invariance(&params, config)?,
        "similarity" => suite_similarity(&params, config)?,
        "contour_vs_residue" => suite_contour_vs_residue(&params, config)?,
        "theorem_n2" => suite_theorem_n2(&params, config)?,
        "theorem_n3" => suite_theorem_n3(&params, config)?,
        "prop_psiN" => suite_prop_psin(&params, config)?,
        other => {
            return Err(Error::Config(format!(
                "unknown suite '{other}'; known suites: {}",
                SUITE_NAMES.join(", ")
            )))
        }
    };
    Ok(VerificationReport {
        suite_name: config.suite.clone(),
        calibration,
        cases,
        ratio_diagnostics,
        runtime_ms: start.elapsed().as_millis() as u64,
    })
}

fn check_suite_n(config: &SuiteConfig, lo: usize, hi: usize) -> Result<usize> {
    if config.n < lo || config.n > hi {
        return Err(Error::Config(format!(
            "suite '{}' supports n in {lo}..={hi}, got {}",
            config.suite, config.n
        )));
    }
    Ok(config.n)
}

/// Exact-expansion normalization: the dominant coefficient of the `psi_N`
/// expansion equals the bracket product `prod_{j<k} prod_{s=1}^{p}
/// [s + u_k - u_j]` at `u = i x`.
fn suite_ba_normalization(params: &ModelParams, config: &SuiteConfig) -> Result<SuiteParts> {
    let n = check_suite_n(config, 2, 4)?;
    let tol = config.tolerance.unwrap_or(1e-10);
    let count = config.probes.unwrap_or(5);
    let mut rng = suite_rng(config.seed, SALT_NORMALIZATION);
    let mut cases = Vec::with_capacity(count);
    for idx in 0..count {
        let x = draw_separated(&mut rng, n, 0.15);
        let xc = to_complex(&x);
        let series = psi_series(params, &xc)?;
        let mut expect = ONE;
        for (j, k) in pairs(n) {
            for s in 1..=params.p {
                expect *= bracket(params, Complex64::from(s as f64) + I * (xc[k] - xc[j]));
            }
        }
        let residual = rel_residual(series.leading(), expect);
        let digest = digest_parts(&[
            "ba_normalization".into(),
            fmt_f(params.a),
            params.m.to_string(),
            fmt_fs(&x),
        ]);
        cases.push(case(idx, digest, residual, tol));
    }
    Ok((cases, None, None))
}

/// Resonance vanishing: for every admissible `(j, k, s)` the two spectral
/// shifts `v ± (s/2)(e_j - e_k)` give equal values whenever
/// `q^{2(v_j - v_k)} = 1`.
fn suite_vanishing(params: &ModelParams, config: &SuiteConfig) -> Result<SuiteParts> {
    let n = check_suite_n(config, 2, 4)?;
    if params.p == 0 {
        return Err(Error::Config(
            "vanishing suite requires m >= 2 (there are no admissible s at m = 1)".into(),
        ));
    }
    let tol = config.tolerance.unwrap_or(1e-9);
    let count = config.probes.unwrap_or(5);
    let mut rng = suite_rng(config.seed, SALT_VANISHING);
    let mut cases = Vec::new();
    let mut idx = 0usize;
    for _ in 0..count {
        let x = draw_separated(&mut rng, n, 0.15);
        let u: Vec<Complex64> = x.iter().map(|&v| I * v).collect();
        let v_base = draw_separated(&mut rng, n, 0.15);
        for (j0, k0) in pairs(n) {
            for s in 1..=params.p {
                // Cycle through resonance classes: v_j - v_k in {a, 0, 2a}.
                let offset = [params.a, 0.0, 2.0 * params.a][idx % 3];
                let mut v = v_base.clone();
                v[j0] = v[k0] + offset;
                let vc = to_complex(&v);
                let residual = check_vanishing(params, j0 + 1, k0 + 1, s, &u, &vc)?;
                let digest = digest_parts(&[
                    "vanishing".into(),
                    fmt_f(params.a),
                    params.m.to_string(),
                    format!("j={} k={} s={s}", j0 + 1, k0 + 1),
                    fmt_fs(&x),
                    fmt_fs(&v),
                ]);
                cases.push(case(idx, digest, residual, tol));
                idx += 1;
            }
        }
    }
    Ok((cases, None, None))
}

/// Self-duality: `psi(u, v) = psi(v, u)` at generic complex probes.
fn suite_self_duality(params: &ModelParams, config: &SuiteConfig) -> Result<SuiteParts> {
    let n = check_suite_n(config, 2, 4)?;
    let tol = config.tolerance.unwrap_or(1e-9);
    let count = config.probes.unwrap_or(10);
    let mut rng = suite_rng(config.seed, SALT_SELF_DUALITY);
    let specs: Vec<(Vec<Complex64>, Vec<Complex64>)> = (0..count)
        .map(|_| {
            (
                draw_complex_separated(&mut rng, n),
                draw_complex_separated(&mut rng, n),
            )
        })
        .collect();
    let residuals: Vec<f64> = specs
        .par_iter()
        .map(|(u, v)| {
            let lhs = psi_eval_ba(params, u, v)?;
            let rhs = psi_eval_ba(params, v, u)?;
            Ok(rel_residual(lhs, rhs))
        })
        .collect::<Result<Vec<_>>>()?;
    let cases = specs
        .iter()
        .zip(residuals)
        .enumerate()
        .map(|(idx, ((u, v), residual))| {
            let digest = digest_parts(&[
                "self_duality".into(),
                fmt_f(params.a),
                params.m.to_string(),
                fmt_cs(u),
                fmt_cs(v),
            ]);
            case(idx, digest, residual, tol)
        })
        .collect();
    Ok((cases, None, None))
}

/// Joint eigenvalue relations of orders `r = 1..=N` in both argument slots.
fn suite_eigenvalue(params: &ModelParams, config: &SuiteConfig) -> Result<SuiteParts> {
    let n = check_suite_n(config, 2, 4)?;
    let tol = config.tolerance.unwrap_or(1e-8);
    let count = config.probes.unwrap_or(5);
    let mut rng = suite_rng(config.seed, SALT_EIGENVALUE);
    let mut specs = Vec::new();
    for _ in 0..count {
        let u = draw_complex_separated(&mut rng, n);
        let v = draw_complex_separated(&mut rng, n);
        for r in 1..=n {
            for slot in [Slot::Second, Slot::First] {
                specs.push((u.clone(), v.clone(), r, slot));
            }
        }
    }
    let residuals: Vec<f64> = specs
        .par_iter()
        .map(|(u, v, r, slot)| eigen_residual(params, *r, u, v, *slot))
        .collect::<Result<Vec<_>>>()?;
    let cases = specs
        .iter()
        .zip(residuals)
        .enumerate()
        .map(|(idx, ((u, v, r, slot), residual))| {
            let digest = digest_parts(&[
                "eigenvalue".into(),
                fmt_f(params.a),
                params.m.to_string(),
                format!("r={r} slot={slot:?}"),
                fmt_cs(u),
                fmt_cs(v),
            ]);
            case(idx, digest, residual, tol)
        })
        .collect();
    Ok((cases, None, None))
}

/// Antisymmetry of the expansion under every simultaneous permutation of the
/// two argument lists.
fn suite_antisymmetry(params: &ModelParams, config: &SuiteConfig) -> Result<SuiteParts> {
    let n = check_suite_n(config, 2, 4)?;
    let tol = config.tolerance.unwrap_or(1e-10);
    let count = config.probes.unwrap_or(5);
    let mut rng = suite_rng(config.seed, SALT_ANTISYMMETRY);
    let mut cases = Vec::new();
    let mut idx = 0usize;
    for _ in 0..count {
        let x = draw_complex_separated(&mut rng, n);
        let y = draw_complex_separated(&mut rng, n);
        for (sigma, _sign) in permutations_with_sign(n) {
            let residual = check_antisymmetry(params, &x, &y, &sigma)?;
            let digest = digest_parts(&[
                "antisymmetry".into(),
                fmt_f(params.a),
                params.m.to_string(),
                format!("{sigma:?}"),
                fmt_cs(&x),
                fmt_cs(&y),
            ]);
            cases.push(case(idx, digest, residual, tol));
            idx += 1;
        }
    }
    Ok((cases, None, None))
}

/// Half-period shift invariance of the pre-normalized expansion under every
/// sign pattern `delta in {+-1}^N`.
fn suite_shift_invariance(params: &ModelParams, config: &SuiteConfig) -> Result<SuiteParts> {
    let n = check_suite_n(config, 2, 4)?;
    let tol = config.tolerance.unwrap_or(1e-9);
    let count = config.probes.unwrap_or(5);
    let mut rng = suite_rng(config.seed, SALT_SHIFT);
    let mut patterns: Vec<Vec<i8>> = vec![vec![1; n]];
    for bits in 1..(1usize << n) {
        patterns.push(
            (0..n)
                .map(|j| if bits >> j & 1 == 1 { -1 } else { 1 })
                .collect(),
        );
    }
    let mut cases = Vec::new();
    let mut idx = 0usize;
    for _ in 0..count {
        let z = draw_complex_separated(&mut rng, n);
        let u = draw_complex_separated(&mut rng, n);
        for delta in &patterns {
            let residual = check_shift_invariance(params, &z, &u, delta)?;
            let digest = digest_parts(&[
                "shift_invariance".into(),
                fmt_f(params.a),
                params.m.to_string(),
                format!("{delta:?}"),
                fmt_cs(&z),
                fmt_cs(&u),
            ]);
            cases.push(case(idx, digest, residual, tol));
            idx += 1;
        }
    }
    Ok((cases, None, None))
}

/// Similarity transform between the conjugated and plain operator families.
///
/// The identity as stated fails by an exact overall constant
/// `q^{(2m-1) r (N-1)}`; a case therefore passes when EITHER the literal
/// residual is within tolerance OR the measured RHS/LHS ratio matches that
/// identified constant to the same tolerance (the structured discrepancy
/// diagnosis). The recorded residual is the smaller of the two deviations,
/// and the report's ratio diagnostics aggregate `ratio / identified
/// constant` across cases, whose constancy at 1 is the diagnosis summary.
fn suite_similarity(params: &ModelParams, config: &SuiteConfig) -> Result<SuiteParts> {
    let n = check_suite_n(config, 2, 3)?;
    let tol = config.tolerance.unwrap_or(1e-9);
    let count = config.probes.unwrap_or(5);
    let mut rng = suite_rng(config.seed, SALT_SIMILARITY);
    let mut cases = Vec::new();
    let mut normalized_ratios = Vec::new();
    let mut idx = 0usize;
    for _ in 0..count {
        // Probes must vary both the coordinate separations and the frequency
        // spacing of the exponential test function: for N = 2, r = 1 the
        // mismatch ratio depends exactly on those two combinations.
        let x = draw_complex_separated(&mut rng, n);
        let freq = Complex64::new(rng.random_range(-0.8..0.8), rng.random_range(-0.4..0.4));
        let spacing = rng.random_range(0.3..0.9);
        let f = |w: &[Complex64]| -> Result<Complex64> {
            let ip: Complex64 = w
                .iter()
                .enumerate()
                .map(|(i, &wj)| wj * (freq + Complex64::from(spacing * i as f64)))
                .sum();
            Ok(params.q_pow(2.0 * ip))
        };
        for r in 1..=n {
            let diag = similarity_diagnose(params, r, &x, f)?;
            let identified = params.q_pow(Complex64::from(
                ((2 * params.m - 1) as f64) * (r * (n - 1)) as f64,
            ));
            let diagnosis_dev = (diag.ratio - identified).norm() / identified.norm();
            let residual = diag.residual_printed.min(diagnosis_dev);
            normalized_ratios.push(diag.ratio / identified);
            let digest = digest_parts(&[
                "similarity".into(),
                fmt_f(params.a),
                params.m.to_string(),
                format!("r={r}"),
                fmt_cs(&x),
                fmt_c(freq),
                fmt_f(spacing),
            ]);
            cases.push(case(idx, digest, residual, tol));
            idx += 1;
        }
    }
    let mean = normalized_ratios.iter().sum::<Complex64>() / normalized_ratios.len() as f64;
    let spread = normalized_ratios
        .iter()
        .map(|r| (r - mean).norm())
        .fold(0.0f64, f64::max)
        / mean.norm().max(1e-300);
    let diagnostics = RatioDiagnostics {
        mean_ratio_re: mean.re,
        mean_ratio_im: mean.im,
        relative_spread: spread,
    };
    Ok((cases, Some(diagnostics), None))
}

/// Two-point expansion evaluated by a rectangle contour integral against the
/// residue-series route, plus deformation invariance of the contour.
fn suite_contour_vs_residue(params: &ModelParams, config: &SuiteConfig) -> Result<SuiteParts> {
    if config.n != 2 {
        return Err(Error::Config(format!(
            "suite 'contour_vs_residue' runs at n = 2, got {}",
            config.n
        )));
    }
    let tol = config.tolerance.unwrap_or(1e-8);
    let deform_tol = 1e-9;
    let count = config.probes.unwrap_or(10);
    let mut rng = suite_rng(config.seed, SALT_CONTOUR);
    let specs: Vec<(Vec<f64>, Vec<f64>)> = (0..count)
        .map(|_| {
            (
                draw_separated(&mut rng, 2, 0.3),
                draw_separated(&mut rng, 2, 0.15),
            )
        })
        .collect();
    let values: Vec<(f64, f64)> = specs
        .par_iter()
        .map(|(x, y)| {
            let xc = to_complex(x);
            let yc = to_complex(y);
            let contour = ContourSpec::two_point_default(params, &xc)?;
            let via_contour = varphi2_contour(params, &xc, &yc, &contour)?;
            let via_series = varphi_eval(params, &xc, &yc)?;
            // The required pole tower reaches up to (m-1)/2 off the real
            // axis and its nearest excluded images sit at a - (m-1)/2, so a
            // valid half-height lives in ((m-1)/2, a - (m-1)/2); the default
            // uses the band's midpoint a/2, the deformed box 40% of the band.
            let band_lo = (params.m as f64 - 1.0) / 2.0;
            let deformed = ContourSpec::new(
                contour.center,
                0.85 * contour.half_width,
                band_lo + 0.4 * (params.a - (params.m as f64 - 1.0)),
                224,
            )?;
            let via_deformed = varphi2_contour(params, &xc, &yc, &deformed)?;
            Ok((
                rel_residual(via_contour, via_series),
                rel_residual(via_deformed, via_contour),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut cases = Vec::with_capacity(2 * count);
    for (pidx, ((x, y), (route_residual, deform_residual))) in specs.iter().zip(values).enumerate()
    {
        let base = vec![fmt_f(params.a), params.m.to_string(), fmt_fs(x), fmt_fs(y)];
        let mut d1 = vec!["contour_vs_residue/route".to_string()];
        d1.extend(base.iter().cloned());
        cases.push(case(2 * pidx, digest_parts(&d1), route_residual, tol));
        let mut d2 = vec!["contour_vs_residue/deformation".to_string()];
        d2.extend(base);
        cases.push(case(
            2 * pidx + 1,
            digest_parts(&d2),
            deform_residual,
            deform_tol,
        ));
    }
    Ok((cases, None, None))
}

/// Two-point quadrature/closed-form agreement, preceded by a full
/// calibration whose record ships in the report. The ratio diagnostics echo
/// the shipped convention's stage-1 measurement.
fn suite_theorem_n2(params: &ModelParams, config: &SuiteConfig) -> Result<SuiteParts> {
    if config.n != 2 {
        return Err(Error::Config(format!(
            "suite 'theorem_n2' runs at n = 2, got {}",
            config.n
        )));
    }
    let tol = config.tolerance.unwrap_or(1e-6);
    let count = config.probes.unwrap_or(10);
    let probes = calibration_probes(config.seed, count);
    let calibration = calibrate(params, &probes)?;
    let shipped = &calibration.candidates[0];
    let diagnostics = RatioDiagnostics {
        mean_ratio_re: shipped.mean_ratio_re,
        mean_ratio_im: shipped.mean_ratio_im,
        relative_spread: shipped.relative_spread,
    };
    let residuals: Vec<f64> = probes
        .par_iter()
        .map(|(x, y)| {
            let spec = QuadratureSpec::default_for(params, x);
            let quad = phi_quadrature(params, x, y, &spec)?;
            let closed = phi_closed_form(params, x, y)?;
            Ok(rel_residual(quad, closed))
        })
        .collect::<Result<Vec<_>>>()?;
    let cases = probes
        .iter()
        .zip(residuals)
        .enumerate()
        .map(|(idx, ((x, y), residual))| {
            let digest = digest_parts(&[
                "theorem_n2".into(),
                fmt_f(params.a),
                params.m.to_string(),
                fmt_fs(x),
                fmt_fs(y),
            ]);
            case(idx, digest, residual, tol)
        })
        .collect();
    Ok((cases, Some(diagnostics), Some(calibration)))
}

/// Three-point quadrature/closed-form agreement with the frozen convention —
/// deliberately no recalibration, so a pass certifies that the two-point
/// calibration transfers to `N = 3` unchanged.
fn suite_theorem_n3(params: &ModelParams, config: &SuiteConfig) -> Result<SuiteParts> {
    if config.n != 3 {
        return Err(Error::Config(format!(
            "suite 'theorem_n3' runs at n = 3, got {}",
            config.n
        )));
    }
    let tol = config.tolerance.unwrap_or(1e-3);
    let count = config.probes.unwrap_or(3);
    let mut rng = suite_rng(config.seed, SALT_THEOREM_N3);
    let specs: Vec<(Vec<f64>, Vec<f64>)> = (0..count)
        .map(|_| {
            (
                draw_separated(&mut rng, 3, 0.25),
                draw_separated(&mut rng, 3, 0.25),
            )
        })
        .collect();
    let residuals: Vec<f64> = specs
        .par_iter()
        .map(|(x, y)| {
            let spec = QuadratureSpec::default_for(params, x);
            let quad = phi_quadrature(params, x, y, &spec)?;
            let closed = phi_closed_form(params, x, y)?;
            Ok(rel_residual(quad, closed))
        })
        .collect::<Result<Vec<_>>>()?;
    let cases = specs
        .iter()
        .zip(residuals)
        .enumerate()
        .map(|(idx, ((x, y), residual))| {
            let digest = digest_parts(&[
                "theorem_n3".into(),
                fmt_f(params.a),
                params.m.to_string(),
                fmt_fs(x),
                fmt_fs(y),
            ]);
            case(idx, digest, residual, tol)
        })
        .collect();
    Ok((cases, None, None))
}

/// Residue-integral construction of `psi_N` from `psi_{N-1}` over nested
/// rectangle contours, against direct exact evaluation.
fn suite_prop_psin(params: &ModelParams, config: &SuiteConfig) -> Result<SuiteParts> {
    let n = check_suite_n(config, 2, 3)?;
    let tol = config.tolerance.unwrap_or(if n == 2 { 1e-6 } else { 1e-4 });
    let count = config.probes.unwrap_or(5);
    let mut rng = suite_rng(config.seed, SALT_PROP_PSIN);
    let specs: Vec<(Vec<f64>, Vec<f64>)> = (0..count)
        .map(|_| {
            (
                draw_separated(&mut rng, n, 0.3),
                draw_separated(&mut rng, n, 0.15),
            )
        })
        .collect();
    let residuals: Vec<f64> = specs
        .par_iter()
        .map(|(x, y)| {
            let yc = to_complex(y);
            let contours = ContourSpec::residue_defaults(params, x)?;
            let via_contours = psi_residue_formula(params, x, &yc, &contours)?;
            let direct = psi_eval(params, &to_complex(x), &yc)?;
            Ok(rel_residual(via_contours, direct))
        })
        .collect::<Result<Vec<_>>>()?;
    let cases = specs
        .iter()
        .zip(residuals)
        .enumerate()
        .map(|(idx, ((x, y), residual))| {
            let digest = digest_parts(&[
                "prop_psiN".into(),
                fmt_f(params.a),
                params.m.to_string(),
                fmt_fs(x),
                fmt_fs(y),
            ]);
            case(idx, digest, residual, tol)
        })
        .collect();
    Ok((cases, None, None))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    const STD_X2: [f64; 2] = [0.7, 0.1];
    const STD_Y2: [f64; 2] = [0.3, -0.2];
    const STD_X3: [f64; 3] = [0.8, 0.15, -0.55];
    const STD_Y3: [f64; 3] = [0.4, -0.1, -0.35];

    #[test]
    fn closed_form_matches_quadrature_two_point() {
        for m in [1u32, 2, 3] {
            let params = build_params(2.5, m).unwrap();
            let spec = QuadratureSpec::default_for(&params, &STD_X2);
            let quad = phi_quadrature(&params, &STD_X2, &STD_Y2, &spec).unwrap();
            let closed = phi_closed_form(&params, &STD_X2, &STD_Y2).unwrap();
            let r = rel_residual(quad, closed);
            assert!(
                r < 1e-9,
                "m = {m}: quad {quad:?} vs closed {closed:?}, rel {r:.3e}"
            );
        }
    }

    #[test]
    fn closed_form_matches_frozen_quadrature_value() {
        // The quadrature value at this probe was frozen from a 26-digit
        // independent evaluation; the closed form agrees to that precision,
        // so it must reproduce the frozen value to f64 accuracy.
        let params = build_params(2.5, 2).unwrap();
        let closed = phi_closed_form(&params, &STD_X2, &STD_Y2).unwrap();
        let expect = c(0.06373299475372189, 0.00642881160671976);
        let r = rel_residual(closed, expect);
        assert!(
            r < 1e-10,
            "closed {closed:?} vs frozen {expect:?}, rel {r:.3e}"
        );
    }

    #[test]
    fn closed_form_three_point_matches_quadrature() {
        let params = build_params(2.5, 2).unwrap();
        let spec = QuadratureSpec::default_for(&params, &STD_X3);
        let quad = phi_quadrature(&params, &STD_X3, &STD_Y3, &spec).unwrap();
        let closed = phi_closed_form(&params, &STD_X3, &STD_Y3).unwrap();
        let r = rel_residual(quad, closed);
        assert!(r < 1e-6, "quad {quad:?} vs closed {closed:?}, rel {r:.3e}");
    }

    #[test]
    fn closed_form_is_x_permutation_invariant() {
        let params = build_params(2.5, 2).unwrap();
        let base = phi_closed_form(&params, &STD_X3, &STD_Y3).unwrap();
        for (perm, _sign) in permutations_with_sign(3) {
            let xp: Vec<f64> = perm.iter().map(|&i| STD_X3[i]).collect();
            let v = phi_closed_form(&params, &xp, &STD_Y3).unwrap();
            let r = rel_residual(v, base);
            assert!(r < 1e-10, "perm {perm:?}: {v:?} vs {base:?}, rel {r:.3e}");
        }
    }

    #[test]
    fn closed_form_single_point_is_plane_wave() {
        let params = build_params(2.5, 2).unwrap();
        let v = phi_closed_form(&params, &[0.37], &[-0.61]).unwrap();
        let expect = (2.0 * PI * I * 0.37 * -0.61 / params.a).exp();
        assert!(rel_residual(v, expect) < 1e-14);
    }

    #[test]
    fn closed_form_rejects_bad_inputs() {
        let params = build_params(2.5, 2).unwrap();
        match phi_closed_form(&params, &[0.5, 0.5 + 1e-9], &STD_Y2) {
            Err(Error::PoleProximity { .. }) => {}
            other => panic!("coincident x: {other:?}"),
        }
        match phi_closed_form(&params, &STD_X2, &[0.3, 0.3]) {
            Err(Error::PoleProximity { .. }) => {}
            other => panic!("coincident y: {other:?}"),
        }
        match phi_closed_form(&params, &STD_X2, &STD_Y3) {
            Err(Error::Precondition(_)) => {}
            other => panic!("length mismatch: {other:?}"),
        }
        match phi_closed_form(&params, &[], &[]) {
            Err(Error::InvalidParameter(_)) => {}
            other => panic!("empty: {other:?}"),
        }
    }

    #[test]
    fn calibration_identifies_shipped_convention() {
        let params = build_params(2.5, 2).unwrap();
        let probes = calibration_probes(7, 6);
        let record = calibrate(&params, &probes).unwrap();
        assert_eq!(record.selected.as_deref(), Some(SHIPPED_CONVENTION));
        let shipped = &record.candidates[0];
        assert!(shipped.selected && shipped.constant_ratio);
        assert!(
            shipped.relative_spread < 1e-8,
            "shipped spread {:.3e}",
            shipped.relative_spread
        );
        assert!(
            shipped.unit_deviation < 1e-8,
            "shipped unit deviation {:.3e}",
            shipped.unit_deviation
        );
        // Wrong spectral scaling fails stage 1 (the y-tripled twins expose it).
        for idx in [1usize, 3] {
            let cand = &record.candidates[idx];
            assert!(
                !cand.constant_ratio && cand.relative_spread > 1e-3,
                "candidate {} spread {:.3e} unexpectedly constant",
                cand.name,
                cand.relative_spread
            );
        }
        // Wrong constant with the right scaling passes stage 1 but fails
        // stage 2: at N = 2, m = 2 the ratio of constants is exactly 1/2
        // (the orientations differ by a sign as well, making it -(-1/2)).
        let mixed = &record.candidates[2];
        assert!(mixed.constant_ratio, "mixed candidate should be constant");
        assert!(
            !mixed.selected && mixed.unit_deviation > 0.4,
            "mixed candidate unit deviation {:.3e}",
            mixed.unit_deviation
        );
        // The record is serializable and round-trips.
        let json = serde_json::to_string(&record).unwrap();
        let back: CalibrationRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back.selected, record.selected);
        assert_eq!(back.candidates.len(), record.candidates.len());
    }

    #[test]
    fn calibration_probes_vary_spectral_separation() {
        let probes = calibration_probes(42, 10);
        assert_eq!(probes.len(), 10);
        for (x, y) in &probes {
            assert!((x[0] - x[1]).abs() >= 0.15);
            assert!((y[0] - y[1]).abs() >= 0.15);
        }
        // Odd-indexed probes are y-tripled twins of their predecessors.
        for pair in probes.chunks(2) {
            if let [(x1, y1), (x2, y2)] = pair {
                assert_eq!(x1, x2);
                let d1 = y1[0] - y1[1];
                let d2 = y2[0] - y2[1];
                assert!((d2 - 3.0 * d1).abs() < 1e-12, "d1 = {d1}, d2 = {d2}");
            }
        }
    }

    #[test]
    fn run_suite_rejects_unknown_names_and_bad_sizes() {
        let cfg = SuiteConfig::new("no_such_suite", 2.5, 2, 2);
        match run_suite(&cfg) {
            Err(Error::Config(msg)) => assert!(msg.contains("no_such_suite")),
            other => panic!("unknown suite: {other:?}"),
        }
        let cfg = SuiteConfig::new("theorem_n3", 2.5, 2, 2);
        match run_suite(&cfg) {
            Err(Error::Config(msg)) => assert!(msg.contains("n = 3")),
            other => panic!("wrong n: {other:?}"),
        }
        let cfg = SuiteConfig::new("vanishing", 2.5, 1, 2);
        match run_suite(&cfg) {
            Err(Error::Config(msg)) => assert!(msg.contains("m >= 2")),
            other => panic!("vanishing at m = 1: {other:?}"),
        }
    }

    #[test]
    fn run_suite_is_deterministic() {
        let mut cfg = SuiteConfig::new("self_duality", 2.5, 2, 2);
        cfg.seed = 9;
        cfg.probes = Some(3);
        let r1 = run_suite(&cfg).unwrap();
        let r2 = run_suite(&cfg).unwrap();
        assert_eq!(r1.cases.len(), r2.cases.len());
        for (a, b) in r1.cases.iter().zip(&r2.cases) {
            assert_eq!(a.inputs_digest, b.inputs_digest);
            assert_eq!(a.residual.to_bits(), b.residual.to_bits());
        }
        // A different seed draws different probes.
        cfg.seed = 10;
        let r3 = run_suite(&cfg).unwrap();
        assert_ne!(r1.cases[0].inputs_digest, r3.cases[0].inputs_digest);
    }

    #[test]
    fn structural_suites_pass() {
        for (suite, m, n) in [
            ("ba_normalization", 2u32, 3usize),
            ("vanishing", 2, 2),
            ("self_duality", 2, 2),
            ("eigenvalue", 2, 2),
            ("antisymmetry", 2, 3),
            ("shift_invariance", 2, 2),
            ("similarity", 2, 2),
        ] {
            let mut cfg = SuiteConfig::new(suite, 2.5, m, n);
            cfg.probes = Some(2);
            let report = run_suite(&cfg).unwrap();
            assert!(!report.cases.is_empty(), "{suite}: no cases");
            assert!(
                report.all_pass(),
                "{suite}: failing cases {:?}",
                report.cases.iter().filter(|c| !c.pass).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn similarity_suite_reports_identified_constant() {
        let mut cfg = SuiteConfig::new("similarity", 3.7, 2, 2);
        cfg.probes = Some(2);
        let report = run_suite(&cfg).unwrap();
        assert!(report.all_pass());
        let diag = report
            .ratio_diagnostics
            .expect("similarity ships diagnostics");
        // ratio / identified-constant should be 1 with negligible spread.
        assert!((c(diag.mean_ratio_re, diag.mean_ratio_im) - ONE).norm() < 1e-9);
        assert!(diag.relative_spread < 1e-9);
    }

    #[test]
    fn quadrature_suites_pass() {
        let mut cfg = SuiteConfig::new("contour_vs_residue", 2.5, 2, 2);
        cfg.probes = Some(2);
        let report = run_suite(&cfg).unwrap();
        assert!(report.all_pass(), "contour_vs_residue: {:?}", report.cases);

        let mut cfg = SuiteConfig::new("theorem_n2", 2.5, 2, 2);
        cfg.probes = Some(4);
        let report = run_suite(&cfg).unwrap();
        assert!(report.all_pass(), "theorem_n2: {:?}", report.cases);
        let calibration = report.calibration.expect("theorem_n2 ships calibration");
        assert_eq!(calibration.selected.as_deref(), Some(SHIPPED_CONVENTION));
        assert!(report.ratio_diagnostics.is_some());

        let mut cfg = SuiteConfig::new("prop_psiN", 2.5, 2, 2);
        cfg.probes = Some(2);
        let report = run_suite(&cfg).unwrap();
        assert!(report.all_pass(), "prop_psiN: {:?}", report.cases);
    }

    #[test]
    fn theorem_n3_suite_passes_without_recalibration() {
        let mut cfg = SuiteConfig::new("theorem_n3", 2.5, 2, 3);
        cfg.probes = Some(1);
        let report = run_suite(&cfg).unwrap();
        assert!(report.all_pass(), "theorem_n3: {:?}", report.cases);
        assert!(report.calibration.is_none());
    }
}
