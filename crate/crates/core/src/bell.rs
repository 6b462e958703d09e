//! The Bell operators
//!
//! ```text
//! B+ = ½ (⊗σ+ + ⊗σ−),    B− = (1/2i) (⊗σ+ − ⊗σ−),    σ± = σx ± iσy
//! ```
//!
//! Since `σ+ = [[0,2],[0,0]]`, the string `⊗σ+` has a single nonzero entry
//! `2^N` at `(0, 2^N − 1)`, and `B±` are rank-two operators coupling `|↑…↑⟩`
//! with `|↓…↓⟩`. [`SparseBell`] stores exactly that structure and is the
//! production path. [`BellExpansion`] writes the same operators as real
//! combinations of `σx`/`σy` tensor strings and is kept as an independent
//! cross-check.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{BellError, Result};
use crate::linalg::{check_dense_cap, pauli_x, pauli_y, DensityOperator, PureState};

/// Largest N for which the `2^(N−1)`-term monomial expansion is built.
pub const EXPANSION_MAX_QUBITS: usize = 20;
/// Largest N for which the sparse form is indexable (`2^N − 1` fits a `usize`).
pub const SPARSE_MAX_QUBITS: usize = 62;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BellKind {
    Plus,
    Minus,
}

impl BellKind {
    pub const BOTH: [BellKind; 2] = [BellKind::Plus, BellKind::Minus];
}

impl fmt::Display for BellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BellKind::Plus => "plus",
            BellKind::Minus => "minus",
        })
    }
}

/// `⟨B+⟩` and `⟨B−⟩` of one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BellValues {
    pub plus: f64,
    pub minus: f64,
}

impl BellValues {
    pub fn get(&self, kind: BellKind) -> f64 {
        match kind {
            BellKind::Plus => self.plus,
            BellKind::Minus => self.minus,
        }
    }

    /// `|⟨B+⟩| + |⟨B−⟩|`.
    pub fn abs_sum(&self) -> f64 {
        self.plus.abs() + self.minus.abs()
    }

    /// `max(|⟨B+⟩|, |⟨B−⟩|)`.
    pub fn max_abs(&self) -> f64 {
        self.plus.abs().max(self.minus.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PauliAxis {
    X,
    Y,
}

impl PauliAxis {
    pub fn matrix(self) -> Matrix2<Complex64> {
        match self {
            PauliAxis::X => pauli_x(),
            PauliAxis::Y => pauli_y(),
        }
    }

    fn letter(self) -> char {
        match self {
            PauliAxis::X => 'x',
            PauliAxis::Y => 'y',
        }
    }
}

/// One axis choice per qubit, written as a string over `{x, y}` (qubit 1 first).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PauliSetting(Vec<PauliAxis>);

impl PauliSetting {
    pub fn new(axes: Vec<PauliAxis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(BellError::domain("a setting covers at least one qubit"));
        }
        Ok(Self(axes))
    }

    /// Setting whose qubit `k` is `y` iff bit `k` of `mask` is set, qubit 1
    /// being the most significant of the `n` bits.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        Self((0..n).map(|k| if mask >> (n - 1 - k) & 1 == 1 { PauliAxis::Y } else { PauliAxis::X }).collect())
    }

    /// All `2^n` settings in mask order.
    pub fn all(n: usize) -> impl Iterator<Item = PauliSetting> {
        (0..1u64 << n).map(move |m| Self::from_mask(n, m))
    }

    pub fn axes(&self) -> &[PauliAxis] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn y_count(&self) -> usize {
        self.0.iter().filter(|&&a| a == PauliAxis::Y).count()
    }

    /// Nonzero entry of column `col` of `⊗_k σ_{a_k}`: every factor is monomial,
    /// so each column holds exactly one entry, found factor by factor.
    pub fn column_entry(&self, col: usize) -> (usize, Complex64) {
        let n = self.0.len();
        let mut row = 0usize;
        let mut value = Complex64::new(1.0, 0.0);
        for (k, axis) in self.0.iter().enumerate() {
            let bit = (col >> (n - 1 - k)) & 1;
            let m = axis.matrix();
            let out = if m[(0, bit)] != Complex64::new(0.0, 0.0) { 0 } else { 1 };
            value *= m[(out, bit)];
            row = (row << 1) | out;
        }
        (row, value)
    }
}

impl fmt::Display for PauliSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|a| write!(f, "{}", a.letter()))
    }
}

impl FromStr for PauliSetting {
    type Err = BellError;

    fn from_str(s: &str) -> Result<Self> {
        let axes = s
            .chars()
            .map(|ch| match ch {
                'x' => Ok(PauliAxis::X),
                'y' => Ok(PauliAxis::Y),
                other => Err(BellError::domain(format!("setting character {other:?} not in {{x, y}}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(axes)
    }
}

impl TryFrom<String> for PauliSetting {
    type Error = BellError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PauliSetting> for String {
    fn from(s: PauliSetting) -> Self {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellTerm {
    pub setting: PauliSetting,
    pub coeff: f64,
}

/// `B = Σ_a c(a) ⊗_k σ_{a_k}` over settings `a ∈ {x, y}^N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawExpansion")]
pub struct BellExpansion {
    n_qubits: usize,
    kind: BellKind,
    terms: Vec<BellTerm>,
}

#[derive(Deserialize)]
struct RawExpansion {
    n_qubits: usize,
    kind: BellKind,
    terms: Vec<BellTerm>,
}

impl TryFrom<RawExpansion> for BellExpansion {
    type Error = BellError;

    fn try_from(raw: RawExpansion) -> Result<Self> {
        Self::new(raw.n_qubits, raw.kind, raw.terms)
    }
}

impl BellExpansion {
    pub fn new(n_qubits: usize, kind: BellKind, terms: Vec<BellTerm>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(BellError::domain("expansion needs at least one qubit"));
        }
        let mut seen = std::collections::HashSet::new();
        for t in &terms {
            if t.setting.len() != n_qubits {
                return Err(BellError::domain(format!("setting {} has wrong length", t.setting)));
            }
            if t.coeff == 0.0 || !t.coeff.is_finite() {
                return Err(BellError::domain(format!("coefficient of {} must be finite and nonzero", t.setting)));
            }
            if !seen.insert(&t.setting) {
                return Err(BellError::domain(format!("setting {} repeated", t.setting)));
            }
        }
        Ok(Self { n_qubits, kind, terms })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn kind(&self) -> BellKind {
        self.kind
    }

    pub fn terms(&self) -> &[BellTerm] {
        &self.terms
    }

    pub fn coeff(&self, setting: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.setting.to_string() == setting).map(|t| t.coeff)
    }
}

/// Two-entry form of `B±`: `weight` times `(1, 1)` (Plus) or `(−i, +i)` (Minus)
/// at `(0, 2^N − 1)` and `(2^N − 1, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SparseBell {
    n_qubits: usize,
    kind: BellKind,
    weight: f64,
}

impl SparseBell {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn kind(&self) -> BellKind {
        self.kind
    }

    /// `2^(N−1)`.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn last_index(&self) -> usize {
        (1usize << self.n_qubits) - 1
    }

    /// Value at `(0, 2^N − 1)`; the `(2^N − 1, 0)` entry is its conjugate.
    pub fn upper_value(&self) -> Complex64 {
        match self.kind {
            BellKind::Plus => Complex64::new(self.weight, 0.0),
            BellKind::Minus => Complex64::new(0.0, -self.weight),
        }
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        let last = self.last_index();
        if row == 0 && col == last {
            self.upper_value()
        } else if row == last && col == 0 {
            self.upper_value().conj()
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        check_dense_cap("dense Bell operator", self.n_qubits)?;
        let d = 1usize << self.n_qubits;
        let mut m = DMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
        m[(0, d - 1)] = self.upper_value();
        m[(d - 1, 0)] = self.upper_value().conj();
        Ok(m)
    }

    /// Operator norm; the nonzero eigenvalues are `±weight`.
    pub fn norm(&self) -> f64 {
        self.weight
    }
}

fn check_qubits(n: usize, max: usize, what: &'static str) -> Result<()> {
    if n == 0 {
        return Err(BellError::domain("N must be at least 1"));
    }
    if n > max {
        return Err(BellError::Capacity { what, requested: n, max });
    }
    Ok(())
}

pub fn build_sparse(n: usize, kind: BellKind) -> Result<SparseBell> {
    check_qubits(n, SPARSE_MAX_QUBITS, "sparse Bell operator")?;
    Ok(SparseBell { n_qubits: n, kind, weight: 2f64.powi(n as i32 - 1) })
}

/// Expands `½(⊗(σx + iσy) ± ⊗(σx − iσy))` (divided by `i` for Minus).
///
/// A setting with `n_y` factors of `σy` picks up `i^{n_y}` from the first
/// string and `(−i)^{n_y}` from the second, so its coefficient is
/// `Re(i^{n_y})` for Plus and `Im(i^{n_y})` for Minus. Zero coefficients are
/// dropped, leaving `2^(N−1)` terms.
pub fn expand_monomials(n: usize, kind: BellKind) -> Result<BellExpansion> {
    check_qubits(n, EXPANSION_MAX_QUBITS, "monomial expansion")?;
    let i = Complex64::new(0.0, 1.0);
    let terms = PauliSetting::all(n)
        .filter_map(|setting| {
            let phase = i.powu(setting.y_count() as u32);
            let coeff = match kind {
                BellKind::Plus => phase.re,
                BellKind::Minus => phase.im,
            };
            // powu leaves only exact 0/±1 up to rounding on the vanishing part.
            (coeff.abs() > 0.5).then(|| BellTerm { setting, coeff: coeff.round() })
        })
        .collect();
    BellExpansion::new(n, kind, terms)
}

/// `Σ_a c(a) ⊗_k σ_{a_k}` as a dense matrix.
pub fn dense_from_expansion(exp: &BellExpansion) -> Result<DMatrix<Complex64>> {
    check_dense_cap("dense Bell operator", exp.n_qubits())?;
    let d = 1usize << exp.n_qubits();
    let mut m = DMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
    for term in exp.terms() {
        for col in 0..d {
            let (row, value) = term.setting.column_entry(col);
            m[(row, col)] += value * term.coeff;
        }
    }
    Ok(m)
}

/// `⟨ψ|B±|ψ⟩ = 2^N Re/Im(ψ_0* ψ_{2^N−1})`, reading two amplitudes.
pub fn bell_expectation_pure(state: &PureState, kind: BellKind) -> f64 {
    let n = state.n_qubits();
    let z = state.amplitude(0).conj() * state.amplitude(state.dim() - 1);
    let scale = 2f64.powi(n as i32);
    match kind {
        BellKind::Plus => scale * z.re,
        BellKind::Minus => scale * z.im,
    }
}

pub fn bell_values_pure(state: &PureState) -> BellValues {
    BellValues {
        plus: bell_expectation_pure(state, BellKind::Plus),
        minus: bell_expectation_pure(state, BellKind::Minus),
    }
}

/// `Tr(ρ B±) = 2^N Re/Im(ρ[2^N−1][0])`.
pub fn bell_expectation_mixed(rho: &DensityOperator, kind: BellKind) -> f64 {
    let n = rho.n_qubits();
    let z = rho.entry(rho.dim() - 1, 0);
    let scale = 2f64.powi(n as i32);
    match kind {
        BellKind::Plus => scale * z.re,
        BellKind::Minus => scale * z.im,
    }
}

pub fn bell_values_mixed(rho: &DensityOperator) -> BellValues {
    BellValues {
        plus: bell_expectation_mixed(rho, BellKind::Plus),
        minus: bell_expectation_mixed(rho, BellKind::Minus),
    }
}

/// `‖B±‖ = 2^(N−1)`, read off the two-entry form.
pub fn operator_norm(n: usize, kind: BellKind) -> Result<f64> {
    Ok(build_sparse(n, kind)?.norm())
}

/// Largest N for which [`dense_spectrum`] runs a full eigensolve.
pub const EIGEN_MAX_QUBITS: usize = 10;

/// Ascending eigenvalues of the dense operator built from the monomial expansion.
pub fn dense_spectrum(n: usize, kind: BellKind) -> Result<Vec<f64>> {
    check_qubits(n, EIGEN_MAX_QUBITS, "dense eigensolve")?;
    let dense = dense_from_expansion(&expand_monomials(n, kind)?)?;
    let mut eig: Vec<f64> = SymmetricEigen::new(dense).eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// Operator norm from a dense eigensolve, `max |λ|`.
pub fn dense_operator_norm(n: usize, kind: BellKind) -> Result<f64> {
    Ok(dense_spectrum(n, kind)?.iter().fold(0.0f64, |m, e| m.max(e.abs())))
}
