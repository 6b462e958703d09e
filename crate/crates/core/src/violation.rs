//! GHZ-family states `(|↑…↑⟩ + e^{iθ}|↓…↓⟩)/√2` and how far their Bell
//! values exceed the separable and local-reality bounds.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bell::{bell_values_pure, operator_norm, BellKind, BellValues};
use crate::error::{BellError, Result};
use crate::lhv::{BoundSource, LhvBoundResult};
use crate::linalg::PureState;

/// Agreement tolerance between computed and closed-form GHZ values.
pub const GHZ_TOL: f64 = 1e-9;
/// Tolerance for "attains the operator norm".
pub const MAXIMALITY_TOL: f64 = 1e-9;

pub const SEPARABLE_BOUND_INDIVIDUAL: f64 = 1.0;
pub const SEPARABLE_BOUND_SUM: f64 = SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GhzSpec {
    pub n_qubits: usize,
    pub theta: f64,
}

impl GhzSpec {
    pub fn new(n_qubits: usize, theta: f64) -> Result<Self> {
        if n_qubits < 2 {
            return Err(BellError::domain(format!("GHZ states need N >= 2, got {n_qubits}")));
        }
        if !theta.is_finite() {
            return Err(BellError::domain("theta must be finite"));
        }
        Ok(Self { n_qubits, theta })
    }

    /// `(2^(N−1) cos θ, 2^(N−1) sin θ)`.
    pub fn closed_form(&self) -> BellValues {
        let w = 2f64.powi(self.n_qubits as i32 - 1);
        BellValues { plus: w * self.theta.cos(), minus: w * self.theta.sin() }
    }
}

pub fn ghz_state(spec: &GhzSpec) -> Result<PureState> {
    let spec = GhzSpec::new(spec.n_qubits, spec.theta)?;
    let d =
        1usize.checked_shl(spec.n_qubits as u32).filter(|_| spec.n_qubits <= crate::linalg::STATE_MAX_QUBITS).ok_or(
            BellError::Capacity { what: "GHZ state", requested: spec.n_qubits, max: crate::linalg::STATE_MAX_QUBITS },
        )?;
    let mut amps = vec![Complex64::new(0.0, 0.0); d];
    amps[0] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    amps[d - 1] = Complex64::from_polar(FRAC_1_SQRT_2, spec.theta);
    PureState::new(spec.n_qubits, amps)
}

/// Bell values of the GHZ state through the two-amplitude sparse path,
/// checked against the closed form.
pub fn ghz_expectations(spec: &GhzSpec) -> Result<BellValues> {
    let values = bell_values_pure(&ghz_state(spec)?);
    let expected = spec.closed_form();
    let scale = 2f64.powi(spec.n_qubits as i32 - 1).max(1.0);
    for kind in BellKind::BOTH {
        let diff = (values.get(kind) - expected.get(kind)).abs();
        // Absolute up to N = 21; beyond that rounding grows with 2^(N−1).
        if diff > GHZ_TOL * (scale / 2f64.powi(20)).max(1.0) {
            return Err(BellError::Inconsistent(format!(
                "GHZ ⟨B{kind}⟩ = {}, closed form {}",
                values.get(kind),
                expected.get(kind)
            )));
        }
    }
    Ok(values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub n_qubits: usize,
    pub theta: f64,
    pub quantum_plus: f64,
    pub quantum_minus: f64,
    /// `|⟨B+⟩| + |⟨B−⟩|`.
    pub quantum_sum: f64,
    pub separable_bound_individual: f64,
    pub separable_bound_sum: f64,
    pub lhv_bound_individual: f64,
    pub lhv_bound_sum: f64,
    pub lhv_source: BoundSource,
    /// `max(|⟨B+⟩|, |⟨B−⟩|) / 1`.
    pub ratio_vs_separable: f64,
    /// `quantum_sum / √2`.
    pub ratio_sum_vs_separable: f64,
    /// Individual form for odd N, sum form for even N.
    pub ratio_vs_lhv: f64,
    /// `‖B±‖ = 2^(N−1)`.
    pub operator_norm: f64,
    /// `max(|⟨B+⟩|, |⟨B−⟩|)` equals the operator norm: no state does better.
    pub maximality_flag: bool,
    /// Basis of the maximality claim.
    pub maximality_basis: String,
}

pub const CSV_HEADER: &str = "n,theta,q_plus,q_minus,q_sum,sep_bound,lhv_bound,ratio_sep,ratio_lhv,maximal";

impl ViolationReport {
    /// LHV bound used in `ratio_vs_lhv`.
    pub fn lhv_bound(&self) -> f64 {
        if self.n_qubits % 2 == 1 {
            self.lhv_bound_individual
        } else {
            self.lhv_bound_sum
        }
    }

    /// One row under [`CSV_HEADER`].
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.n_qubits,
            self.theta,
            self.quantum_plus,
            self.quantum_minus,
            self.quantum_sum,
            self.separable_bound_individual,
            self.lhv_bound(),
            self.ratio_vs_separable,
            self.ratio_vs_lhv,
            self.maximality_flag
        )
    }
}

pub fn violation_report(spec: &GhzSpec, lhv: &LhvBoundResult) -> Result<ViolationReport> {
    if lhv.n_qubits != spec.n_qubits {
        return Err(BellError::domain(format!(
            "LHV bounds are for N = {}, GHZ state has N = {}",
            lhv.n_qubits, spec.n_qubits
        )));
    }
    let q = ghz_expectations(spec)?;
    let n = spec.n_qubits;
    let lhv_individual = lhv.bound_individual();
    let ratio_vs_lhv = if n % 2 == 1 { q.max_abs() / lhv_individual } else { q.abs_sum() / lhv.max_sum };
    let norm = operator_norm(n, BellKind::Plus)?;
    Ok(ViolationReport {
        n_qubits: n,
        theta: spec.theta,
        quantum_plus: q.plus,
        quantum_minus: q.minus,
        quantum_sum: q.abs_sum(),
        separable_bound_individual: SEPARABLE_BOUND_INDIVIDUAL,
        separable_bound_sum: SEPARABLE_BOUND_SUM,
        lhv_bound_individual: lhv_individual,
        lhv_bound_sum: lhv.max_sum,
        lhv_source: lhv.source,
        ratio_vs_separable: q.max_abs() / SEPARABLE_BOUND_INDIVIDUAL,
        ratio_sum_vs_separable: q.abs_sum() / SEPARABLE_BOUND_SUM,
        ratio_vs_lhv,
        operator_norm: norm,
        maximality_flag: (q.max_abs() - norm).abs() <= MAXIMALITY_TOL,
        maximality_basis: "numerical certificate".to_string(),
    })
}
