//! Complex state algebra for N-qubit systems: single-qubit and product states,
//! normalized state vectors, density operators and Schmidt decomposition.

use std::fmt;

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{BellError, Result};

pub type ComplexScalar = Complex64;

/// Tolerance on `|α|² + |β|² = 1` for a single qubit.
pub const QUBIT_NORM_TOL: f64 = 1e-12;
/// Tolerance on `Σ|ψ_b|² = 1` for a state vector.
pub const STATE_NORM_TOL: f64 = 1e-10;
/// Hermiticity and unit-trace tolerance for density operators.
pub const DENSITY_TOL: f64 = 1e-10;
/// Smallest eigenvalue accepted for a density operator.
pub const EIGEN_FLOOR: f64 = -1e-8;
/// Hermiticity tolerance for observables and for `Im Tr(ρO)`.
pub const OBSERVABLE_TOL: f64 = 1e-8;
/// Squared singular values at or below this do not count towards the Schmidt rank.
pub const SCHMIDT_RANK_TOL: f64 = 1e-10;
/// Largest N for which 2^N × 2^N matrices are materialized.
pub const DENSE_MAX_QUBITS: usize = 12;
/// Largest N for which a full amplitude vector is materialized.
pub const STATE_MAX_QUBITS: usize = 26;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn pauli_x() -> Matrix2<Complex64> {
    Matrix2::new(ZERO, ONE, ONE, ZERO)
}

pub fn pauli_y() -> Matrix2<Complex64> {
    Matrix2::new(ZERO, -I, I, ZERO)
}

pub fn pauli_z() -> Matrix2<Complex64> {
    Matrix2::new(ONE, ZERO, ZERO, -ONE)
}

/// Converts a fixed 2×2 matrix into a dynamically sized one.
pub fn to_dynamic(m: &Matrix2<Complex64>) -> DMatrix<Complex64> {
    DMatrix::from_iterator(2, 2, m.iter().copied())
}

fn is_finite(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

pub(crate) fn check_dense_cap(what: &'static str, n: usize) -> Result<()> {
    if n > DENSE_MAX_QUBITS {
        return Err(BellError::Capacity { what, requested: n, max: DENSE_MAX_QUBITS });
    }
    Ok(())
}

/// Largest deviation from Hermiticity, `max |M_ij − conj(M_ji)|`.
pub fn hermitian_defect(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Pure state of one qubit, `α|↑⟩ + β|↓⟩`.
///
/// Serialized as `[re_α, im_α, re_β, im_β]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct QubitPure {
    alpha: Complex64,
    beta: Complex64,
}

impl QubitPure {
    pub fn new(alpha: Complex64, beta: Complex64) -> Result<Self> {
        if !is_finite(alpha) || !is_finite(beta) {
            return Err(BellError::domain("qubit amplitudes must be finite"));
        }
        let norm = alpha.norm_sqr() + beta.norm_sqr();
        if (norm - 1.0).abs() > QUBIT_NORM_TOL {
            return Err(BellError::domain(format!("qubit |α|²+|β|² = {norm}, expected 1")));
        }
        Ok(Self { alpha, beta })
    }

    pub fn up() -> Self {
        Self { alpha: ONE, beta: ZERO }
    }

    pub fn down() -> Self {
        Self { alpha: ZERO, beta: ONE }
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn beta(&self) -> Complex64 {
        self.beta
    }

    /// `⟨σ+⟩ = ⟨σx⟩ + i⟨σy⟩ = 2 α* β`.
    pub fn sigma_plus_expectation(&self) -> Complex64 {
        2.0 * self.alpha.conj() * self.beta
    }

    /// `(⟨σx⟩, ⟨σy⟩, ⟨σz⟩)`.
    pub fn bloch_vector(&self) -> [f64; 3] {
        let s = self.sigma_plus_expectation();
        [s.re, s.im, self.alpha.norm_sqr() - self.beta.norm_sqr()]
    }
}

impl TryFrom<[f64; 4]> for QubitPure {
    type Error = BellError;

    fn try_from(v: [f64; 4]) -> Result<Self> {
        Self::new(Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3]))
    }
}

impl From<QubitPure> for [f64; 4] {
    fn from(q: QubitPure) -> Self {
        [q.alpha.re, q.alpha.im, q.beta.re, q.beta.im]
    }
}

/// `(cos θ/2, e^{iφ} sin θ/2)`: the qubit with polar angle θ and azimuth φ on
/// the Bloch sphere.
pub fn bloch_to_qubit(theta: f64, phi: f64) -> Result<QubitPure> {
    if !theta.is_finite() || !phi.is_finite() {
        return Err(BellError::domain("Bloch angles must be finite"));
    }
    let (s, c) = (theta / 2.0).sin_cos();
    QubitPure::new(Complex64::new(c, 0.0), Complex64::from_polar(s, phi))
}

/// Normalized amplitude vector over the σz basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPureState")]
pub struct PureState {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

#[derive(Deserialize)]
struct RawPureState {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl TryFrom<RawPureState> for PureState {
    type Error = BellError;

    fn try_from(raw: RawPureState) -> Result<Self> {
        Self::new(raw.n_qubits, raw.amplitudes)
    }
}

impl PureState {
    pub fn new(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(BellError::domain("a state needs at least one qubit"));
        }
        if n_qubits > STATE_MAX_QUBITS {
            return Err(BellError::Capacity { what: "state vector", requested: n_qubits, max: STATE_MAX_QUBITS });
        }
        if amplitudes.len() != 1usize << n_qubits {
            return Err(BellError::domain(format!(
                "{} amplitudes given for {n_qubits} qubits, expected {}",
                amplitudes.len(),
                1usize << n_qubits
            )));
        }
        if !amplitudes.iter().all(|&a| is_finite(a)) {
            return Err(BellError::domain("amplitudes must be finite"));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > STATE_NORM_TOL {
            return Err(BellError::domain(format!("state norm² = {norm}, expected 1")));
        }
        Ok(Self { n_qubits, amplitudes })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > STATE_MAX_QUBITS || index >= 1usize << n_qubits {
            return Err(BellError::domain(format!("basis index {index} invalid for {n_qubits} qubits")));
        }
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        amplitudes[index] = ONE;
        Ok(Self { n_qubits, amplitudes })
    }

    /// Haar-random state from normalized complex Gaussian amplitudes.
    pub fn random<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Result<Self> {
        if n_qubits == 0 || n_qubits > STATE_MAX_QUBITS {
            return Err(BellError::domain(format!("cannot sample {n_qubits}-qubit state")));
        }
        let mut amplitudes: Vec<Complex64> = (0..1usize << n_qubits)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Self::new(n_qubits, amplitudes)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes[index]
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    /// `⟨ψ|O|ψ⟩` for a dense observable of matching dimension.
    pub fn expectation_dense(&self, observable: &DMatrix<Complex64>) -> Result<f64> {
        let d = self.dim();
        if observable.nrows() != d || observable.ncols() != d {
            return Err(BellError::domain("observable dimension does not match state"));
        }
        let mut acc = ZERO;
        for i in 0..d {
            let row: Complex64 = (0..d).map(|j| observable[(i, j)] * self.amplitudes[j]).sum();
            acc += self.amplitudes[i].conj() * row;
        }
        if acc.im.abs() > OBSERVABLE_TOL {
            return Err(BellError::Inconsistent(format!("⟨ψ|O|ψ⟩ has imaginary part {}", acc.im)));
        }
        Ok(acc.re)
    }
}

/// `⊗_k ψ^(k)` as a list of single-qubit states, qubit 1 first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<QubitPure>", into = "Vec<QubitPure>")]
pub struct ProductState {
    qubits: Vec<QubitPure>,
}

impl ProductState {
    pub fn new(qubits: Vec<QubitPure>) -> Result<Self> {
        if qubits.is_empty() {
            return Err(BellError::domain("a product state needs at least one qubit"));
        }
        Ok(Self { qubits })
    }

    pub fn n_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn qubits(&self) -> &[QubitPure] {
        &self.qubits
    }
}

impl TryFrom<Vec<QubitPure>> for ProductState {
    type Error = BellError;

    fn try_from(qubits: Vec<QubitPure>) -> Result<Self> {
        Self::new(qubits)
    }
}

impl From<ProductState> for Vec<QubitPure> {
    fn from(p: ProductState) -> Self {
        p.qubits
    }
}

/// Amplitude vector of a product state: entry `b` is `∏_k (α_k if bit_k(b) = 0 else β_k)`.
pub fn tensor_product(parts: &ProductState) -> Result<PureState> {
    let n = parts.n_qubits();
    if n > STATE_MAX_QUBITS {
        return Err(BellError::Capacity { what: "state vector", requested: n, max: STATE_MAX_QUBITS });
    }
    let mut amps = vec![ONE];
    for q in parts.qubits() {
        // Appending a less significant bit: new index = 2·old + bit.
        amps = amps.iter().flat_map(|&a| [a * q.alpha, a * q.beta]).collect();
    }
    PureState::new(n, amps)
}

/// Density operator on `2^N` dimensions, serialized row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDensity", into = "RawDensity")]
pub struct DensityOperator {
    n_qubits: usize,
    matrix: DMatrix<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct RawDensity {
    n_qubits: usize,
    matrix: Vec<Vec<Complex64>>,
}

impl TryFrom<RawDensity> for DensityOperator {
    type Error = BellError;

    fn try_from(raw: RawDensity) -> Result<Self> {
        let d = raw.matrix.len();
        if raw.matrix.iter().any(|row| row.len() != d) {
            return Err(BellError::domain("density matrix rows must all have length equal to the row count"));
        }
        let matrix = DMatrix::from_fn(d, d, |i, j| raw.matrix[i][j]);
        Self::new(raw.n_qubits, matrix)
    }
}

impl From<DensityOperator> for RawDensity {
    fn from(rho: DensityOperator) -> Self {
        let d = rho.dim();
        RawDensity {
            n_qubits: rho.n_qubits,
            matrix: (0..d).map(|i| (0..d).map(|j| rho.matrix[(i, j)]).collect()).collect(),
        }
    }
}

impl DensityOperator {
    /// Validates shape, Hermiticity, unit trace and positivity.
    pub fn new(n_qubits: usize, matrix: DMatrix<Complex64>) -> Result<Self> {
        let rho = Self::checked_hermitian(n_qubits, matrix)?;
        let lowest = SymmetricEigen::new(rho.matrix.clone()).eigenvalues.iter().fold(f64::INFINITY, |m, &e| m.min(e));
        if lowest < EIGEN_FLOOR {
            return Err(BellError::domain(format!("density operator has eigenvalue {lowest} below {EIGEN_FLOOR}")));
        }
        Ok(rho)
    }

    /// Everything except the positivity check, for matrices that are positive
    /// by construction (outer products and their convex combinations).
    pub(crate) fn checked_hermitian(n_qubits: usize, matrix: DMatrix<Complex64>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(BellError::domain("a density operator needs at least one qubit"));
        }
        check_dense_cap("density operator", n_qubits)?;
        let d = 1usize << n_qubits;
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(BellError::domain(format!(
                "density matrix is {}×{}, expected {d}×{d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if !matrix.iter().all(|&z| is_finite(z)) {
            return Err(BellError::domain("density matrix entries must be finite"));
        }
        let defect = hermitian_defect(&matrix);
        if defect > DENSITY_TOL {
            return Err(BellError::domain(format!("density matrix not Hermitian (defect {defect})")));
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > DENSITY_TOL || trace.im.abs() > DENSITY_TOL {
            return Err(BellError::domain(format!("density matrix trace {trace}, expected 1")));
        }
        Ok(Self { n_qubits, matrix })
    }

    /// `I / 2^N`.
    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        check_dense_cap("density operator", n_qubits)?;
        let d = 1usize << n_qubits;
        Self::checked_hermitian(n_qubits, DMatrix::identity(d, d) / Complex64::from(d as f64))
    }

    /// Random full-rank state `G G† / Tr(G G†)` with Gaussian `G`.
    pub fn random<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Result<Self> {
        check_dense_cap("density operator", n_qubits)?;
        let d = 1usize << n_qubits;
        let g = DMatrix::from_fn(d, d, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
        let m = &g * g.adjoint();
        let tr = m.trace();
        let mut m = m / tr;
        // Symmetrize away rounding.
        let adj = m.adjoint();
        m = (m + adj) * Complex64::from(0.5);
        Self::checked_hermitian(n_qubits, m)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }
}

/// `|ψ⟩⟨ψ|`.
pub fn density_from_pure(state: &PureState) -> Result<DensityOperator> {
    check_dense_cap("density operator", state.n_qubits())?;
    let psi = state.amplitudes();
    let d = psi.len();
    let matrix = DMatrix::from_fn(d, d, |i, j| psi[i] * psi[j].conj());
    DensityOperator::checked_hermitian(state.n_qubits(), matrix)
}

/// `Re Tr(ρ O)` for a Hermitian observable; fails if the trace is not real.
pub fn expectation(rho: &DensityOperator, observable: &DMatrix<Complex64>) -> Result<f64> {
    let d = rho.dim();
    if observable.nrows() != d || observable.ncols() != d {
        return Err(BellError::domain(format!(
            "observable is {}×{}, density operator is {d}×{d}",
            observable.nrows(),
            observable.ncols()
        )));
    }
    let defect = hermitian_defect(observable);
    if defect > OBSERVABLE_TOL {
        return Err(BellError::domain(format!("observable not Hermitian (defect {defect})")));
    }
    let mut trace = ZERO;
    for i in 0..d {
        for j in 0..d {
            trace += rho.matrix[(i, j)] * observable[(j, i)];
        }
    }
    if trace.im.abs() > OBSERVABLE_TOL {
        return Err(BellError::Inconsistent(format!("Tr(ρO) has imaginary part {}", trace.im)));
    }
    Ok(trace.re)
}

/// Assignment of every qubit to one of two sides. Qubits are 0-based internally
/// and 1-based in the textual form `"1,2|3,4"`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bipartition {
    n_qubits: usize,
    side_one: Vec<usize>,
    side_two: Vec<usize>,
}

impl Bipartition {
    /// Side one is `side_one` (0-based), side two is everything else.
    pub fn new(n_qubits: usize, side_one: &[usize]) -> Result<Self> {
        let mut seen = vec![false; n_qubits];
        for &q in side_one {
            if q >= n_qubits {
                return Err(BellError::domain(format!("qubit {} out of range 1..={n_qubits}", q + 1)));
            }
            if seen[q] {
                return Err(BellError::domain(format!("qubit {} named twice", q + 1)));
            }
            seen[q] = true;
        }
        let mut one: Vec<usize> = side_one.to_vec();
        one.sort_unstable();
        let two: Vec<usize> = (0..n_qubits).filter(|&q| !seen[q]).collect();
        if one.is_empty() || two.is_empty() {
            return Err(BellError::domain("both sides of a cut must be non-empty"));
        }
        Ok(Self { n_qubits, side_one: one, side_two: two })
    }

    /// Parses `"1,3|2,4"` (both sides listed, every qubit exactly once) or
    /// `"1,3"` (side two is the complement).
    pub fn parse(n_qubits: usize, text: &str) -> Result<Self> {
        let parse_side = |s: &str| -> Result<Vec<usize>> {
            s.split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(|t| match t.parse::<usize>() {
                    Ok(q) if q >= 1 => Ok(q - 1),
                    _ => Err(BellError::domain(format!("bad qubit label {t:?}"))),
                })
                .collect()
        };
        let mut halves = text.split('|');
        let first = parse_side(halves.next().unwrap_or(""))?;
        let second = halves.next().map(parse_side).transpose()?;
        if halves.next().is_some() {
            return Err(BellError::domain("a cut has exactly two sides"));
        }
        let cut = Self::new(n_qubits, &first)?;
        if let Some(mut second) = second {
            let mut all: Vec<usize> = first.iter().chain(&second).copied().collect();
            all.sort_unstable();
            if all.windows(2).any(|w| w[0] == w[1]) {
                return Err(BellError::domain("a qubit is named on both sides of the cut"));
            }
            second.sort_unstable();
            if second != cut.side_two {
                return Err(BellError::domain("cut must list every qubit exactly once"));
            }
        }
        Ok(cut)
    }

    /// All `2^(N−1) − 1` cuts with qubit 1 on side one.
    pub fn all(n_qubits: usize) -> Vec<Self> {
        if n_qubits < 2 {
            return Vec::new();
        }
        (0..(1usize << (n_qubits - 1)) - 1)
            .map(|mask| {
                let side: Vec<usize> =
                    std::iter::once(0).chain((1..n_qubits).filter(|q| mask >> (q - 1) & 1 == 1)).collect();
                Self::new(n_qubits, &side).expect("complement of a proper subset is non-empty")
            })
            .collect()
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn side_one(&self) -> &[usize] {
        &self.side_one
    }

    pub fn side_two(&self) -> &[usize] {
        &self.side_two
    }
}

impl fmt::Display for Bipartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |side: &[usize]| side.iter().map(|q| (q + 1).to_string()).collect::<Vec<_>>().join(",");
        write!(f, "{}|{}", list(&self.side_one), list(&self.side_two))
    }
}

/// `ψ = Σ_i √p_i ψ_i^(1) ⊗ ψ_i^(2)`, truncated to the `rank` terms above tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct SchmidtResult {
    pub coefficients: Vec<f64>,
    pub rank: usize,
    pub left_vectors: Vec<Vec<Complex64>>,
    pub right_vectors: Vec<Vec<Complex64>>,
    /// `max_b |ψ_b − Σ_i √p_i ψ_i^(1) ψ_i^(2)|` over the retained terms.
    pub reconstruction_error: f64,
}

impl SchmidtResult {
    pub fn is_entangled(&self) -> bool {
        self.rank > 1
    }
}

/// Coefficient matrix `M[r, c]` of the state reshaped along the cut; rows
/// enumerate side one, columns side two, each in qubit order with the lowest
/// qubit most significant.
pub fn reshape_along_cut(state: &PureState, cut: &Bipartition) -> Result<DMatrix<Complex64>> {
    let n = state.n_qubits();
    if cut.n_qubits() != n {
        return Err(BellError::domain(format!("cut is for {} qubits, state has {n}", cut.n_qubits())));
    }
    let gather = |b: usize, side: &[usize]| side.iter().fold(0usize, |acc, &q| (acc << 1) | ((b >> (n - 1 - q)) & 1));
    let rows = 1usize << cut.side_one().len();
    let cols = 1usize << cut.side_two().len();
    let mut m = DMatrix::from_element(rows, cols, ZERO);
    for (b, &amp) in state.amplitudes().iter().enumerate() {
        m[(gather(b, cut.side_one()), gather(b, cut.side_two()))] = amp;
    }
    Ok(m)
}

pub fn schmidt_decompose(state: &PureState, cut: &Bipartition) -> Result<SchmidtResult> {
    schmidt_decompose_with_tol(state, cut, SCHMIDT_RANK_TOL)
}

pub fn schmidt_decompose_with_tol(state: &PureState, cut: &Bipartition, rank_tol: f64) -> Result<SchmidtResult> {
    check_dense_cap("Schmidt decomposition", state.n_qubits())?;
    let m = reshape_along_cut(state, cut)?;
    // The reduced density matrix of the smaller side carries the Schmidt
    // weights as eigenvalues. nalgebra's complex SVD occasionally returns a
    // factorization that does not recompose for rank-deficient inputs, while
    // the Hermitian eigensolver is reliable here.
    let rows_smaller = m.nrows() <= m.ncols();
    let reduced = if rows_smaller { &m * m.adjoint() } else { m.adjoint() * &m };
    let eig = SymmetricEigen::new(reduced);

    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let kept: Vec<usize> = order.into_iter().filter(|&i| eig.eigenvalues[i] > rank_tol).collect();

    let coefficients: Vec<f64> = kept.iter().map(|&i| eig.eigenvalues[i]).collect();
    // M = Σ √p_i l_i r_iᵀ. With M M† u = p u the partner is r = Mᵀ u* / √p;
    // with M† M w = p w it is l = M w / √p and r = w*.
    let mut left_vectors = Vec::with_capacity(kept.len());
    let mut right_vectors = Vec::with_capacity(kept.len());
    for (&i, &p) in kept.iter().zip(&coefficients) {
        let vec = eig.eigenvectors.column(i);
        let scale = Complex64::from(1.0 / p.sqrt());
        if rows_smaller {
            let partner = m.transpose() * vec.map(|z| z.conj()) * scale;
            left_vectors.push(vec.iter().copied().collect::<Vec<_>>());
            right_vectors.push(partner.iter().copied().collect::<Vec<_>>());
        } else {
            let partner = &m * vec * scale;
            left_vectors.push(partner.iter().copied().collect());
            right_vectors.push(vec.iter().map(|z| z.conj()).collect());
        }
    }

    let mut reconstruction_error = 0.0f64;
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let rebuilt: Complex64 = coefficients
                .iter()
                .zip(left_vectors.iter().zip(&right_vectors))
                .map(|(p, (l, rv))| p.sqrt() * l[r] * rv[c])
                .sum();
            reconstruction_error = reconstruction_error.max((rebuilt - m[(r, c)]).norm());
        }
    }

    Ok(SchmidtResult { rank: coefficients.len(), coefficients, left_vectors, right_vectors, reconstruction_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn bloch_poles_and_equator() {
        let north = bloch_to_qubit(0.0, 0.0).unwrap();
        assert_eq!(north.alpha(), ONE);
        assert_eq!(north.beta(), ZERO);

        let south = bloch_to_qubit(PI, 0.0).unwrap();
        assert!(south.alpha().norm() < 1e-15);
        assert!((south.beta() - ONE).norm() < 1e-15);

        let eq = bloch_to_qubit(FRAC_PI_2, FRAC_PI_2).unwrap();
        assert!((eq.alpha() - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((eq.beta() - c(0.0, FRAC_1_SQRT_2)).norm() < 1e-15);
    }

    #[test]
    fn bloch_rejects_non_finite() {
        assert!(matches!(bloch_to_qubit(f64::NAN, 0.0), Err(BellError::Domain(_))));
        assert!(matches!(bloch_to_qubit(0.0, f64::INFINITY), Err(BellError::Domain(_))));
    }

    #[test]
    fn qubit_rejects_unnormalized() {
        assert!(QubitPure::new(ONE, ONE).is_err());
        assert!(QubitPure::new(c(f64::NAN, 0.0), ZERO).is_err());
    }

    #[test]
    fn tensor_product_basis_and_single_qubit() {
        let up2 = ProductState::new(vec![QubitPure::up(); 2]).unwrap();
        let psi = tensor_product(&up2).unwrap();
        assert_eq!(psi.amplitudes(), &[ONE, ZERO, ZERO, ZERO]);

        let plus = QubitPure::new(c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)).unwrap();
        let psi = tensor_product(&ProductState::new(vec![plus]).unwrap()).unwrap();
        assert_eq!(psi.amplitudes(), &[c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)]);
    }

    #[test]
    fn tensor_product_matches_triple_loop_kronecker() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let qubits: Vec<QubitPure> = (0..3)
            .map(|_| bloch_to_qubit(rng.random_range(0.0..PI), rng.random_range(0.0..2.0 * PI)).unwrap())
            .collect();
        let psi = tensor_product(&ProductState::new(qubits.clone()).unwrap()).unwrap();
        let amp = |q: &QubitPure, bit: usize| if bit == 0 { q.alpha() } else { q.beta() };
        for b1 in 0..2 {
            for b2 in 0..2 {
                for b3 in 0..2 {
                    let expected = amp(&qubits[0], b1) * amp(&qubits[1], b2) * amp(&qubits[2], b3);
                    let idx = (b1 << 2) | (b2 << 1) | b3;
                    assert!((psi.amplitude(idx) - expected).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn empty_product_is_rejected() {
        assert!(matches!(ProductState::new(vec![]), Err(BellError::Domain(_))));
    }

    #[test]
    fn density_examples() {
        let up = PureState::basis(1, 0).unwrap();
        let rho = density_from_pure(&up).unwrap();
        assert_eq!(rho.entry(0, 0), ONE);
        assert_eq!(rho.entry(1, 1), ZERO);

        let plus = PureState::new(1, vec![c(FRAC_1_SQRT_2, 0.0); 2]).unwrap();
        let rho = density_from_pure(&plus).unwrap();
        for z in rho.matrix().iter() {
            assert_abs_diff_eq!(z.re, 0.5, epsilon = 1e-15);
        }

        let ghz = PureState::new(2, vec![c(FRAC_1_SQRT_2, 0.0), ZERO, ZERO, c(FRAC_1_SQRT_2, 0.0)]).unwrap();
        let rho = density_from_pure(&ghz).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let corner = (i == 0 || i == 3) && (j == 0 || j == 3);
                let expected = if corner { 0.5 } else { 0.0 };
                assert!((rho.entry(i, j) - c(expected, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn pure_density_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let psi = PureState::random(4, &mut rng).unwrap();
        let rho = density_from_pure(&psi).unwrap();
        let sq = rho.matrix() * rho.matrix();
        assert!((sq - rho.matrix()).iter().all(|z| z.norm() < 1e-10));
        let eig = SymmetricEigen::new(rho.matrix().clone());
        let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(ev[ev.len() - 1], 1.0, epsilon = 1e-8);
        assert!(ev[..ev.len() - 1].iter().all(|e| e.abs() < 1e-8));
    }

    #[test]
    fn unnormalized_state_rejected() {
        assert!(matches!(PureState::new(1, vec![ONE, ONE]), Err(BellError::Domain(_))));
        assert!(PureState::new(2, vec![ONE]).is_err());
    }

    #[test]
    fn density_validation() {
        let not_hermitian = DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.1, 0.0), ZERO, c(0.5, 0.0)]);
        assert!(DensityOperator::new(1, not_hermitian).is_err());
        let bad_trace = DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), ZERO, ZERO, c(0.4, 0.0)]);
        assert!(DensityOperator::new(1, bad_trace).is_err());
        let negative = DMatrix::from_row_slice(2, 2, &[c(1.5, 0.0), ZERO, ZERO, c(-0.5, 0.0)]);
        assert!(DensityOperator::new(1, negative).is_err());
        let ok = DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0)]);
        assert!(DensityOperator::new(1, ok).is_ok());
    }

    #[test]
    fn expectation_examples() {
        let up = density_from_pure(&PureState::basis(1, 0).unwrap()).unwrap();
        assert_eq!(expectation(&up, &to_dynamic(&pauli_z())).unwrap(), 1.0);
        let mixed = DensityOperator::maximally_mixed(1).unwrap();
        assert_eq!(expectation(&mixed, &to_dynamic(&pauli_x())).unwrap(), 0.0);
    }

    #[test]
    fn expectation_dimension_mismatch() {
        let mixed = DensityOperator::maximally_mixed(2).unwrap();
        assert!(matches!(expectation(&mixed, &to_dynamic(&pauli_x())), Err(BellError::Domain(_))));
    }

    #[test]
    fn expectation_real_for_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=4 {
            let rho = DensityOperator::random(n, &mut rng).unwrap();
            let d = 1 << n;
            let g = DMatrix::from_fn(d, d, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
            let h = &g + g.adjoint();
            assert!(expectation(&rho, &h).is_ok());
        }
    }

    #[test]
    fn dense_cap_enforced() {
        assert!(matches!(DensityOperator::maximally_mixed(DENSE_MAX_QUBITS + 1), Err(BellError::Capacity { .. })));
    }

    #[test]
    fn singlet_schmidt() {
        let s = FRAC_1_SQRT_2;
        let singlet = PureState::new(2, vec![ZERO, c(s, 0.0), c(-s, 0.0), ZERO]).unwrap();
        let cut = Bipartition::parse(2, "1|2").unwrap();
        let r = schmidt_decompose(&singlet, &cut).unwrap();
        assert_eq!(r.rank, 2);
        assert_abs_diff_eq!(r.coefficients[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.coefficients[1], 0.5, epsilon = 1e-12);
        assert!(r.reconstruction_error < 1e-12);
        assert!(r.is_entangled());
    }

    #[test]
    fn schmidt_vectors_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let psi = PureState::random(5, &mut rng).unwrap();
        let cut = Bipartition::new(5, &[1, 3]).unwrap();
        let r = schmidt_decompose(&psi, &cut).unwrap();
        assert_abs_diff_eq!(r.coefficients.iter().sum::<f64>(), 1.0, epsilon = 1e-10);
        assert!(r.coefficients.windows(2).all(|w| w[0] >= w[1]));
        for vecs in [&r.left_vectors, &r.right_vectors] {
            for (i, a) in vecs.iter().enumerate() {
                for (j, b) in vecs.iter().enumerate() {
                    let ip: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((ip - c(expected, 0.0)).norm() < 1e-10);
                }
            }
        }
        assert!(r.reconstruction_error < 1e-10);
    }

    // Rank-one reshapes with many zero singular values are where nalgebra's
    // complex SVD went wrong; sweep every cut of random product and generic states.
    #[test]
    fn schmidt_all_cuts() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..40 {
            let n = 5 + trial % 3;
            let qubits = (0..n)
                .map(|_| bloch_to_qubit(rng.random_range(0.0..PI), rng.random_range(0.0..2.0 * PI)).unwrap())
                .collect();
            let product = tensor_product(&ProductState::new(qubits).unwrap()).unwrap();
            let generic = PureState::random(n, &mut rng).unwrap();
            for cut in Bipartition::all(n) {
                let r = schmidt_decompose(&product, &cut).unwrap();
                assert_eq!(r.rank, 1, "cut {cut}");
                assert_abs_diff_eq!(r.coefficients[0], 1.0, epsilon = 1e-10);
                assert!(r.reconstruction_error < 1e-10);

                let g = schmidt_decompose(&generic, &cut).unwrap();
                assert_abs_diff_eq!(g.coefficients.iter().sum::<f64>(), 1.0, epsilon = 1e-10);
                assert!(g.reconstruction_error < 1e-10, "cut {cut}: {}", g.reconstruction_error);
            }
        }
    }

    #[test]
    fn cut_parsing() {
        let cut = Bipartition::parse(4, "1,2|3,4").unwrap();
        assert_eq!(cut.side_one(), &[0, 1]);
        assert_eq!(cut.side_two(), &[2, 3]);
        assert_eq!(cut.to_string(), "1,2|3,4");
        assert_eq!(Bipartition::parse(4, "2").unwrap().side_two(), &[0, 2, 3]);
        assert!(Bipartition::parse(4, "1,1|2,3,4").is_err());
        assert!(Bipartition::parse(4, "1,2|2,3,4").is_err());
        assert!(Bipartition::parse(4, "1,2|3").is_err());
        assert!(Bipartition::parse(4, "1,2,3,4").is_err());
        assert!(Bipartition::parse(4, "0|1,2,3").is_err());
        assert!(Bipartition::parse(4, "5").is_err());
        assert_eq!(Bipartition::all(4).len(), 7);
    }

    #[test]
    fn state_json_schema() {
        let psi = PureState::basis(1, 1).unwrap();
        let json = serde_json::to_string(&psi).unwrap();
        assert_eq!(json, r#"{"n_qubits":1,"amplitudes":[[0.0,0.0],[1.0,0.0]]}"#);
        let back: PureState = serde_json::from_str(&json).unwrap();
        assert_eq!(back, psi);
        assert!(serde_json::from_str::<PureState>(r#"{"n_qubits":1,"amplitudes":[[1.0,0.0],[1.0,0.0]]}"#).is_err());

        let rho = DensityOperator::maximally_mixed(1).unwrap();
        let json = serde_json::to_string(&rho).unwrap();
        assert_eq!(json, r#"{"n_qubits":1,"matrix":[[[0.5,0.0],[0.0,0.0]],[[0.0,0.0],[0.5,0.0]]]}"#);
        let back: DensityOperator = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rho);
    }
}
