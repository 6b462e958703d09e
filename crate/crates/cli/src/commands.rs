use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use bellgap::bell::{dense_operator_norm, operator_norm, EIGEN_MAX_QUBITS};
use bellgap::lhv::{check_mrs_with, EnumerationOptions, MrsCheck};
use bellgap::linalg::{schmidt_decompose, STATE_MAX_QUBITS};
use bellgap::separability::{
    maximize_over_separable, random_mixed_separable, verify_lhv_representation, SeparableOptimum,
};
use bellgap::violation::{violation_report, CSV_HEADER};
use bellgap::{
    BellKind, Bipartition, GhzSpec, LhvBoundResult, MixedSeparableInput, OptimizerConfig, PureState, Target,
    ViolationReport,
};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::args::{
    BoundsArgs, Format, GhzArgs, OptimizeArgs, OptimizerArgs, ReportArgs, SchmidtArgs, VerifyLhvArgs, DEFAULT_THETAS,
};
use crate::{Failure, Outcome};

/// Separable optimum must land this close to its bound.
pub const OPTIMIZE_TOL: f64 = 1e-6;
/// Largest LHV residual accepted by `verify-lhv`.
pub const LHV_RESIDUAL_TOL: f64 = 1e-10;
/// Agreement between the closed-form and eigensolver operator norms.
pub const NORM_TOL: f64 = 1e-8;
/// Agreement of GHZ ratios with their closed forms.
pub const RATIO_TOL: f64 = 1e-9;

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn require_qubits(values: Option<Vec<usize>>) -> Result<Vec<usize>, Failure> {
    let ns = values.ok_or_else(|| Failure::Input("pass --n or --n-range".into()))?;
    if ns.contains(&0) {
        return Err(Failure::Input("N must be at least 1".into()));
    }
    Ok(ns)
}

fn optimizer_config(a: &OptimizerArgs) -> Result<OptimizerConfig, Failure> {
    let cfg = OptimizerConfig {
        restarts: a.restarts,
        max_iterations: a.max_iterations,
        rng_seed: a.seed,
        ..OptimizerConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Enumerated bounds up to the cap, closed form above it.
fn lhv_bounds(n: usize, opts: EnumerationOptions) -> Result<LhvBoundResult, Failure> {
    if n <= opts.max_qubits() {
        Ok(bellgap::lhv::enumerate_bounds_with(n, opts)?)
    } else {
        Ok(LhvBoundResult::closed_form(n)?)
    }
}

#[derive(Serialize)]
struct BoundsOutput<'a> {
    command: &'static str,
    checks: &'a [MrsCheck],
    pass: bool,
}

pub fn bounds(a: &BoundsArgs) -> Result<Outcome, Failure> {
    let ns = require_qubits(a.qubits.values())?;
    let opts = EnumerationOptions { cap: a.cap, symmetry_reduction: a.reduce };
    let checks = ns.iter().map(|&n| check_mrs_with(n, opts)).collect::<Result<Vec<_>, _>>()?;
    let pass = checks.iter().all(|c| c.pass);
    Ok(Outcome { text: to_json(&BoundsOutput { command: "bounds", checks: &checks, pass }), passed: pass })
}

fn ghz_reports(ns: &[usize], thetas: &[f64], opts: EnumerationOptions) -> Result<Vec<ViolationReport>, Failure> {
    let mut reports = Vec::with_capacity(ns.len() * thetas.len());
    for &n in ns {
        if n < 2 {
            return Err(Failure::Input(format!("GHZ states need N >= 2, got {n}")));
        }
        if n > STATE_MAX_QUBITS {
            return Err(Failure::Capacity(format!("GHZ state vector needs N <= {STATE_MAX_QUBITS}, got N = {n}")));
        }
        let lhv = lhv_bounds(n, opts)?;
        for &theta in thetas {
            reports.push(violation_report(&GhzSpec::new(n, theta)?, &lhv)?);
        }
    }
    Ok(reports)
}

#[derive(Serialize)]
struct GhzOutput<'a> {
    command: &'static str,
    reports: &'a [ViolationReport],
}

pub fn ghz(a: &GhzArgs, format: Format) -> Result<Outcome, Failure> {
    let ns = require_qubits(a.qubits.values())?;
    let opts = EnumerationOptions { cap: a.cap, symmetry_reduction: false };
    let reports = ghz_reports(&ns, &a.thetas(), opts)?;
    let text = match format {
        Format::Json => to_json(&GhzOutput { command: "ghz", reports: &reports }),
        Format::Csv => {
            let mut s = String::from(CSV_HEADER);
            s.push('\n');
            for r in &reports {
                s.push_str(&r.csv_row());
                s.push('\n');
            }
            s
        }
    };
    Ok(Outcome { text, passed: true })
}

#[derive(Serialize)]
struct TargetSummary {
    #[serde(flatten)]
    optimum: SeparableOptimum,
    deviation: f64,
    pass: bool,
}

fn optimize_all(n: usize, cfg: &OptimizerConfig) -> Result<Vec<TargetSummary>, Failure> {
    Target::ALL
        .iter()
        .map(|&t| {
            let optimum = maximize_over_separable(n, t, cfg)?;
            let deviation = (optimum.value - optimum.bound).abs();
            Ok(TargetSummary { optimum, deviation, pass: deviation <= OPTIMIZE_TOL })
        })
        .collect()
}

#[derive(Serialize)]
struct OptimizeOutput<'a> {
    command: &'static str,
    n_qubits: usize,
    config: &'a OptimizerConfig,
    tolerance: f64,
    targets: Vec<TargetSummary>,
    pass: bool,
}

pub fn optimize(a: &OptimizeArgs) -> Result<Outcome, Failure> {
    if a.n == 0 {
        return Err(Failure::Input("N must be at least 1".into()));
    }
    let config = optimizer_config(&a.optimizer)?;
    let targets = optimize_all(a.n, &config)?;
    let pass = targets.iter().all(|t| t.pass);
    let out =
        OptimizeOutput { command: "optimize", n_qubits: a.n, config: &config, tolerance: OPTIMIZE_TOL, targets, pass };
    Ok(Outcome { text: to_json(&out), passed: pass })
}

#[derive(Serialize)]
struct VerifyOutput {
    command: &'static str,
    source: &'static str,
    n_qubits: usize,
    terms: usize,
    settings_checked: u64,
    residual: f64,
    threshold: f64,
    pass: bool,
}

pub fn verify_lhv(a: &VerifyLhvArgs) -> Result<Outcome, Failure> {
    let (input, source): (MixedSeparableInput, _) = match &a.input {
        Some(path) => (read_json(path)?, "file"),
        None => (random_mixed_separable(a.n, a.terms, a.seed)?, "generated"),
    };
    let residual = verify_lhv_representation(&input)?;
    let pass = residual < LHV_RESIDUAL_TOL;
    let out = VerifyOutput {
        command: "verify-lhv",
        source,
        n_qubits: input.n_qubits(),
        terms: input.terms().len(),
        settings_checked: 1u64 << input.n_qubits(),
        residual,
        threshold: LHV_RESIDUAL_TOL,
        pass,
    };
    Ok(Outcome { text: to_json(&out), passed: pass })
}

#[derive(Serialize)]
struct SchmidtOutput {
    command: &'static str,
    n_qubits: usize,
    cut: String,
    coefficients: Vec<f64>,
    rank: usize,
    verdict: &'static str,
    reconstruction_error: f64,
}

pub fn schmidt(a: &SchmidtArgs) -> Result<Outcome, Failure> {
    let state: PureState = read_json(&a.input)?;
    let cut = Bipartition::parse(state.n_qubits(), &a.cut)?;
    let r = schmidt_decompose(&state, &cut)?;
    let out = SchmidtOutput {
        command: "schmidt",
        n_qubits: state.n_qubits(),
        cut: cut.to_string(),
        verdict: if r.is_entangled() { "entangled" } else { "separable" },
        coefficients: r.coefficients,
        rank: r.rank,
        reconstruction_error: r.reconstruction_error,
    };
    Ok(Outcome { text: to_json(&out), passed: true })
}

#[derive(Serialize)]
struct NormCheck {
    closed_form: f64,
    eigensolver: Option<f64>,
    pass: bool,
}

#[derive(Serialize)]
struct ReportEntry {
    n_qubits: usize,
    /// Scan against the MRS bound, absent above the cap.
    mrs: Option<MrsCheck>,
    lhv: LhvBoundResult,
    separable: Vec<TargetSummary>,
    ghz: Vec<ViolationReport>,
    operator_norm: NormCheck,
    failures: Vec<String>,
    pass: bool,
}

#[derive(Serialize)]
struct ReportOutput<'a> {
    command: &'static str,
    config: &'a OptimizerConfig,
    enumeration_cap: usize,
    entries: Vec<ReportEntry>,
    summary: BTreeMap<&'static str, usize>,
    pass: bool,
}

fn report_entry(n: usize, cap: usize, cfg: &OptimizerConfig) -> Result<ReportEntry, Failure> {
    let opts = EnumerationOptions { cap, symmetry_reduction: false };
    let mut failures = Vec::new();

    let mrs = if n <= opts.max_qubits() { Some(check_mrs_with(n, opts)?) } else { None };
    if mrs.as_ref().is_some_and(|c| !c.pass) {
        failures.push("enumerated LHV bound differs from the MRS bound".to_string());
    }
    let lhv = match &mrs {
        Some(c) => c.result.clone(),
        None => LhvBoundResult::closed_form(n)?,
    };

    let separable = optimize_all(n, cfg)?;
    for t in separable.iter().filter(|t| !t.pass) {
        failures.push(format!(
            "separable {:?} optimum {} misses bound {}",
            t.optimum.target, t.optimum.value, t.optimum.bound
        ));
    }

    let ghz = if n >= 2 { ghz_reports(&[n], &DEFAULT_THETAS, opts)? } else { Vec::new() };
    let full = 2f64.powi(n as i32 - 1);
    for r in ghz.iter().filter(|r| r.theta == 0.0 || r.theta == PI / 2.0) {
        if !r.maximality_flag {
            failures.push(format!("GHZ at theta {} does not reach the operator norm", r.theta));
        }
        if (r.ratio_vs_separable - full).abs() > RATIO_TOL * full {
            failures
                .push(format!("GHZ separability ratio {} at theta {}, expected {full}", r.ratio_vs_separable, r.theta));
        }
    }

    let closed_form = operator_norm(n, BellKind::Plus)?;
    let eigensolver = if n <= EIGEN_MAX_QUBITS {
        let plus = dense_operator_norm(n, BellKind::Plus)?;
        let minus = dense_operator_norm(n, BellKind::Minus)?;
        Some(if (plus - closed_form).abs() > (minus - closed_form).abs() { plus } else { minus })
    } else {
        None
    };
    let norm_pass = eigensolver.is_none_or(|e| (e - closed_form).abs() <= NORM_TOL);
    if !norm_pass {
        failures.push("eigensolver operator norm differs from 2^(N-1)".to_string());
    }

    Ok(ReportEntry {
        n_qubits: n,
        mrs,
        lhv,
        separable,
        ghz,
        operator_norm: NormCheck { closed_form, eigensolver, pass: norm_pass },
        pass: failures.is_empty(),
        failures,
    })
}

pub fn report(a: &ReportArgs) -> Result<Outcome, Failure> {
    let ns = match a.qubits.values() {
        Some(ns) => require_qubits(Some(ns))?,
        None => (1..=8).collect(),
    };
    let config = optimizer_config(&a.optimizer)?;
    let entries = ns.iter().map(|&n| report_entry(n, a.cap, &config)).collect::<Result<Vec<_>, _>>()?;
    let passed = entries.iter().filter(|e| e.pass).count();
    let summary = BTreeMap::from([("entries", entries.len()), ("passed", passed), ("failed", entries.len() - passed)]);
    let pass = passed == entries.len();
    let out = ReportOutput { command: "report", config: &config, enumeration_cap: a.cap, entries, summary, pass };
    Ok(Outcome { text: to_json(&out), passed: pass })
}
