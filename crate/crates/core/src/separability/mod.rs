//! Separable states and the Bell correlations they can produce.
//!
//! A separable density operator is a convex combination of product states.
//! Splitting every single-qubit factor into its eigenprojectors rewrites it as
//! a convex combination of *pure* product states, and for those
//! `⟨⊗σ+⟩ = ∏_k 2 α_k* β_k` has modulus at most one. Convexity then bounds
//! `|Tr ρB±| ≤ 1` and `|Tr ρB+| + |Tr ρB−| ≤ √2` for every separable ρ.

mod optimize;

pub use optimize::{maximize_over_separable, OptimizerConfig, SeparableOptimum, Target};

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::bell::{BellValues, PauliAxis, PauliSetting};
use crate::error::{BellError, Result};
use crate::linalg::{
    bloch_to_qubit, check_dense_cap, pauli_x, pauli_y, pauli_z, tensor_product, to_dynamic, DensityOperator,
    ProductState, QubitPure, DENSITY_TOL, EIGEN_FLOOR,
};

/// Tolerance on `Σ r_I = 1`.
pub const WEIGHT_SUM_TOL: f64 = 1e-10;
/// Refined terms lighter than this are dropped.
pub const DROP_WEIGHT: f64 = 1e-14;
/// Largest N for which the dense side of the LHV identity is checked.
pub const VERIFY_MAX_QUBITS: usize = 10;

fn check_weights(weights: impl Iterator<Item = f64>) -> Result<()> {
    let mut total = 0.0;
    let mut count = 0usize;
    for w in weights {
        if !(w.is_finite() && w > 0.0) {
            return Err(BellError::domain(format!("weight {w} must be positive and finite")));
        }
        total += w;
        count += 1;
    }
    if count == 0 {
        return Err(BellError::domain("a decomposition needs at least one term"));
    }
    if (total - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(BellError::domain(format!("weights sum to {total}, expected 1")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparableTerm {
    pub weight: f64,
    pub qubits: ProductState,
}

/// `ρ = Σ_I r_I ⊗_k |ψ_I^(k)⟩⟨ψ_I^(k)|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSeparable")]
pub struct SeparableDecomposition {
    n_qubits: usize,
    terms: Vec<SeparableTerm>,
}

#[derive(Deserialize)]
struct RawSeparable {
    n_qubits: usize,
    terms: Vec<SeparableTerm>,
}

impl TryFrom<RawSeparable> for SeparableDecomposition {
    type Error = BellError;

    fn try_from(raw: RawSeparable) -> Result<Self> {
        Self::new(raw.n_qubits, raw.terms)
    }
}

impl SeparableDecomposition {
    pub fn new(n_qubits: usize, terms: Vec<SeparableTerm>) -> Result<Self> {
        check_weights(terms.iter().map(|t| t.weight))?;
        if let Some(t) = terms.iter().find(|t| t.qubits.n_qubits() != n_qubits) {
            return Err(BellError::domain(format!(
                "term has {} qubits, decomposition has {n_qubits}",
                t.qubits.n_qubits()
            )));
        }
        Ok(Self { n_qubits, terms })
    }

    pub fn single(product: ProductState) -> Self {
        Self { n_qubits: product.n_qubits(), terms: vec![SeparableTerm { weight: 1.0, qubits: product }] }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[SeparableTerm] {
        &self.terms
    }

    /// Assembled `Σ_I r_I |ψ_I⟩⟨ψ_I|`.
    pub fn density(&self) -> Result<DensityOperator> {
        check_dense_cap("separable density", self.n_qubits)?;
        let d = 1usize << self.n_qubits;
        let mut m = DMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
        for t in &self.terms {
            let psi = tensor_product(&t.qubits)?;
            let a = psi.amplitudes();
            for i in 0..d {
                for j in 0..d {
                    m[(i, j)] += a[i] * a[j].conj() * t.weight;
                }
            }
        }
        DensityOperator::checked_hermitian(self.n_qubits, m)
    }
}

/// Density operator of one qubit, serialized as a 2×2 row-major matrix of
/// `[re, im]` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[Complex64; 2]; 2]", into = "[[Complex64; 2]; 2]")]
pub struct QubitDensity {
    matrix: Matrix2<Complex64>,
}

impl QubitDensity {
    pub fn new(matrix: Matrix2<Complex64>) -> Result<Self> {
        if !matrix.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(BellError::domain("factor entries must be finite"));
        }
        let herm =
            (matrix[(0, 1)] - matrix[(1, 0)].conj()).norm().max(matrix[(0, 0)].im.abs()).max(matrix[(1, 1)].im.abs());
        if herm > DENSITY_TOL {
            return Err(BellError::domain("factor is not Hermitian"));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > DENSITY_TOL || tr.im.abs() > DENSITY_TOL {
            return Err(BellError::domain(format!("factor trace {tr}, expected 1")));
        }
        let q = Self { matrix };
        let (low, _) = q.eigenvalues();
        if low < EIGEN_FLOOR {
            return Err(BellError::domain(format!("factor has negative eigenvalue {low}")));
        }
        Ok(q)
    }

    /// `(I + r·σ) / 2`.
    pub fn from_bloch(r: [f64; 3]) -> Result<Self> {
        let re = |v: f64| Complex64::new(v, 0.0);
        let m = (Matrix2::identity() + pauli_x() * re(r[0]) + pauli_y() * re(r[1]) + pauli_z() * re(r[2])) * re(0.5);
        Self::new(m)
    }

    pub fn from_pure(q: &QubitPure) -> Self {
        let v = [q.alpha(), q.beta()];
        Self { matrix: Matrix2::from_fn(|i, j| v[i] * v[j].conj()) }
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.matrix
    }

    /// `Tr(ρ σ_axis)`.
    pub fn expectation(&self, axis: PauliAxis) -> f64 {
        (self.matrix * axis.matrix()).trace().re
    }

    pub fn bloch_vector(&self) -> [f64; 3] {
        let z = self.matrix[(0, 0)].re - self.matrix[(1, 1)].re;
        [self.expectation(PauliAxis::X), self.expectation(PauliAxis::Y), z]
    }

    /// `((1 − |r|)/2, (1 + |r|)/2)`.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let [x, y, z] = self.bloch_vector();
        let r = (x * x + y * y + z * z).sqrt();
        ((1.0 - r) / 2.0, (1.0 + r) / 2.0)
    }

    /// `ρ = Σ_s c_s |ψ_s⟩⟨ψ_s|` with the larger weight first. The eigenvectors
    /// are the Bloch states along `±r`; for `ρ = I/2` they are `↑` and `↓`.
    pub fn eigen_decomposition(&self) -> [(f64, QubitPure); 2] {
        let [x, y, z] = self.bloch_vector();
        let r = (x * x + y * y + z * z).sqrt();
        let (low, high) = ((1.0 - r) / 2.0, (1.0 + r) / 2.0);
        if r < 1e-15 {
            return [(high, QubitPure::up()), (low, QubitPure::down())];
        }
        let theta = (z / r).clamp(-1.0, 1.0).acos();
        let phi = y.atan2(x);
        let along = bloch_to_qubit(theta, phi).expect("finite angles");
        let against = bloch_to_qubit(std::f64::consts::PI - theta, phi + std::f64::consts::PI).expect("finite angles");
        [(high, along), (low.max(0.0), against)]
    }
}

impl TryFrom<[[Complex64; 2]; 2]> for QubitDensity {
    type Error = BellError;

    fn try_from(m: [[Complex64; 2]; 2]) -> Result<Self> {
        Self::new(Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1]))
    }
}

impl From<QubitDensity> for [[Complex64; 2]; 2] {
    fn from(q: QubitDensity) -> Self {
        let m = q.matrix;
        [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedTerm {
    pub weight: f64,
    pub factors: Vec<QubitDensity>,
}

fn default_observables() -> Vec<PauliAxis> {
    vec![PauliAxis::X, PauliAxis::Y]
}

/// `ρ = Σ_i r_i ⊗_k ρ_i^(k)` with arbitrary single-qubit factors.
///
/// `observables` names the per-site observable set; only `["x", "y"]` is
/// currently accepted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMixed")]
pub struct MixedSeparableInput {
    n_qubits: usize,
    observables: Vec<PauliAxis>,
    terms: Vec<MixedTerm>,
}

#[derive(Deserialize)]
struct RawMixed {
    n_qubits: usize,
    #[serde(default = "default_observables")]
    observables: Vec<PauliAxis>,
    terms: Vec<MixedTerm>,
}

impl TryFrom<RawMixed> for MixedSeparableInput {
    type Error = BellError;

    fn try_from(raw: RawMixed) -> Result<Self> {
        let mut obs = raw.observables.clone();
        obs.sort();
        if obs != default_observables() {
            return Err(BellError::domain("only the observable set [\"x\", \"y\"] is supported"));
        }
        Self::new(raw.n_qubits, raw.terms)
    }
}

impl MixedSeparableInput {
    pub fn new(n_qubits: usize, terms: Vec<MixedTerm>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(BellError::domain("N must be at least 1"));
        }
        check_weights(terms.iter().map(|t| t.weight))?;
        if let Some(t) = terms.iter().find(|t| t.factors.len() != n_qubits) {
            return Err(BellError::domain(format!(
                "term has {} factors, input has {n_qubits} qubits",
                t.factors.len()
            )));
        }
        Ok(Self { n_qubits, observables: default_observables(), terms })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[MixedTerm] {
        &self.terms
    }

    /// Assembled `Σ_i r_i ⊗_k ρ_i^(k)` by Kronecker products.
    pub fn density(&self) -> Result<DensityOperator> {
        check_dense_cap("separable density", self.n_qubits)?;
        let d = 1usize << self.n_qubits;
        let mut m = DMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
        for t in &self.terms {
            let product = t.factors.iter().fold(DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)), |acc, f| {
                acc.kronecker(&to_dynamic(f.matrix()))
            });
            m += product * Complex64::new(t.weight, 0.0);
        }
        DensityOperator::checked_hermitian(self.n_qubits, m)
    }
}

/// `∏_k 2 α_k* β_k = ⟨⊗σ+⟩`; real part `⟨B+⟩`, imaginary part `⟨B−⟩`.
pub fn product_bell_value(p: &ProductState) -> Complex64 {
    p.qubits().iter().map(QubitPure::sigma_plus_expectation).product()
}

/// `(Σ_I r_I Re v_I, Σ_I r_I Im v_I)` with `v_I` the product value of term I.
pub fn separable_bell_values(d: &SeparableDecomposition) -> BellValues {
    let total: Complex64 = d.terms().iter().map(|t| product_bell_value(&t.qubits) * t.weight).sum();
    BellValues { plus: total.re, minus: total.im }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Refinement {
    pub decomposition: SeparableDecomposition,
    /// Product terms dropped for weight below [`DROP_WEIGHT`].
    pub dropped_terms: usize,
    pub dropped_weight: f64,
}

/// Eigendecomposes every factor and expands the products over eigenvector
/// choices, giving weights `r_i ∏_k c_{i s_k}^(k)` on pure product states.
pub fn refine_to_pure(m: &MixedSeparableInput) -> Result<Refinement> {
    let n = m.n_qubits();
    let mut terms = Vec::new();
    let mut dropped_terms = 0usize;
    let mut dropped_weight = 0.0;
    for t in m.terms() {
        let eig: Vec<[(f64, QubitPure); 2]> = t.factors.iter().map(QubitDensity::eigen_decomposition).collect();
        if n >= usize::BITS as usize {
            return Err(BellError::Capacity { what: "pure refinement", requested: n, max: usize::BITS as usize - 1 });
        }
        for choice in 0..1usize << n {
            let mut weight = t.weight;
            let mut qubits = Vec::with_capacity(n);
            for (k, pair) in eig.iter().enumerate() {
                let (c, q) = pair[(choice >> (n - 1 - k)) & 1];
                weight *= c;
                qubits.push(q);
            }
            if weight < DROP_WEIGHT {
                dropped_terms += 1;
                dropped_weight += weight.max(0.0);
                continue;
            }
            terms.push(SeparableTerm { weight, qubits: ProductState::new(qubits)? });
        }
    }
    Ok(Refinement { decomposition: SeparableDecomposition::new(n, terms)?, dropped_terms, dropped_weight })
}

/// `A^(k)(a, i) = Tr(ρ_i^(k) σ_a)` for `a ∈ {x, y}`, with the term weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LhvTable {
    pub n_qubits: usize,
    pub weights: Vec<f64>,
    /// `values[i][k] = [A^(k)(x, i), A^(k)(y, i)]`.
    pub values: Vec<Vec<[f64; 2]>>,
}

impl LhvTable {
    pub fn value(&self, term: usize, qubit: usize, axis: PauliAxis) -> f64 {
        self.values[term][qubit][match axis {
            PauliAxis::X => 0,
            PauliAxis::Y => 1,
        }]
    }

    /// `Σ_i r_i ∏_k A^(k)(a_k, i)`.
    pub fn correlation(&self, setting: &PauliSetting) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(i, r)| r * setting.axes().iter().enumerate().map(|(k, &a)| self.value(i, k, a)).product::<f64>())
            .sum()
    }
}

const RESPONSE_TOL: f64 = 1e-12;

pub fn build_lhv_table(m: &MixedSeparableInput) -> Result<LhvTable> {
    let values: Vec<Vec<[f64; 2]>> = m
        .terms()
        .iter()
        .map(|t| t.factors.iter().map(|f| [f.expectation(PauliAxis::X), f.expectation(PauliAxis::Y)]).collect())
        .collect();
    if let Some(v) = values.iter().flatten().flatten().find(|v| v.abs() > 1.0 + RESPONSE_TOL) {
        return Err(BellError::Inconsistent(format!("response {v} outside [-1, 1]")));
    }
    Ok(LhvTable { n_qubits: m.n_qubits(), weights: m.terms().iter().map(|t| t.weight).collect(), values })
}

/// Largest `|Tr(ρ ⊗_k σ_{a_k}) − Σ_i r_i ∏_k A^(k)(a_k, i)|` over all `2^N`
/// settings, with the trace taken on the assembled density matrix.
pub fn verify_lhv_representation(m: &MixedSeparableInput) -> Result<f64> {
    let n = m.n_qubits();
    if n > VERIFY_MAX_QUBITS {
        return Err(BellError::Capacity { what: "LHV representation check", requested: n, max: VERIFY_MAX_QUBITS });
    }
    let rho = m.density()?;
    let table = build_lhv_table(m)?;
    let d = rho.dim();
    let mut residual = 0.0f64;
    for setting in PauliSetting::all(n) {
        // Tr(ρP) = Σ_col ρ[col, row] P[row, col]; P has one entry per column.
        let trace: Complex64 = (0..d)
            .map(|col| {
                let (row, value) = setting.column_entry(col);
                rho.entry(col, row) * value
            })
            .sum();
        residual = residual.max((trace.re - table.correlation(&setting)).abs()).max(trace.im.abs());
    }
    Ok(residual)
}

fn flat_simplex<R: Rng>(k: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1).max(f64::MIN_POSITIVE)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

fn uniform_direction<R: Rng>(rng: &mut R) -> (f64, f64) {
    let cos_theta: f64 = rng.random_range(-1.0..=1.0);
    (cos_theta.acos(), rng.random_range(0.0..std::f64::consts::TAU))
}

/// Weights uniform on the simplex, qubits uniform on the Bloch sphere.
pub fn random_separable(n: usize, num_terms: usize, rng_seed: u64) -> Result<SeparableDecomposition> {
    if n == 0 || num_terms == 0 {
        return Err(BellError::domain("need N >= 1 and at least one term"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let weights = flat_simplex(num_terms, &mut rng);
    let terms = weights
        .into_iter()
        .map(|weight| {
            let qubits = (0..n)
                .map(|_| {
                    let (theta, phi) = uniform_direction(&mut rng);
                    bloch_to_qubit(theta, phi)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SeparableTerm { weight, qubits: ProductState::new(qubits)? })
        })
        .collect::<Result<Vec<_>>>()?;
    SeparableDecomposition::new(n, terms)
}

/// Like [`random_separable`], with mixed factors whose Bloch vectors are
/// uniform in the unit ball.
pub fn random_mixed_separable(n: usize, num_terms: usize, rng_seed: u64) -> Result<MixedSeparableInput> {
    if n == 0 || num_terms == 0 {
        return Err(BellError::domain("need N >= 1 and at least one term"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let weights = flat_simplex(num_terms, &mut rng);
    let terms = weights
        .into_iter()
        .map(|weight| {
            let factors = (0..n)
                .map(|_| {
                    let (theta, phi) = uniform_direction(&mut rng);
                    let r = rng.random::<f64>().cbrt();
                    QubitDensity::from_bloch([
                        r * theta.sin() * phi.cos(),
                        r * theta.sin() * phi.sin(),
                        r * theta.cos(),
                    ])
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(MixedTerm { weight, factors })
        })
        .collect::<Result<Vec<_>>>()?;
    MixedSeparableInput::new(n, terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{bell_expectation_pure, bell_values_mixed, BellKind};
    use crate::linalg::{density_from_pure, PureState};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, FRAC_PI_8, SQRT_2};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn plus_state() -> QubitPure {
        QubitPure::new(c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)).unwrap()
    }

    fn max_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
        (a - b).iter().fold(0.0f64, |m, z| m.max(z.norm()))
    }

    #[test]
    fn product_value_examples() {
        let ups = ProductState::new(vec![QubitPure::up(); 3]).unwrap();
        assert_eq!(product_bell_value(&ups), c(0.0, 0.0));

        let pluses = ProductState::new(vec![plus_state(); 3]).unwrap();
        assert!((product_bell_value(&pluses) - c(1.0, 0.0)).norm() < 1e-15);

        let q = QubitPure::new(c(FRAC_1_SQRT_2, 0.0), Complex64::from_polar(FRAC_1_SQRT_2, FRAC_PI_8)).unwrap();
        let v = product_bell_value(&ProductState::new(vec![q; 2]).unwrap());
        assert!((v - Complex64::from_polar(1.0, FRAC_PI_4)).norm() < 1e-15);
        assert_abs_diff_eq!(v.re + v.im, SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn product_value_matches_sparse_state_path() {
        for seed in 0..20 {
            let d = random_separable(4, 1, seed).unwrap();
            let p = &d.terms()[0].qubits;
            let v = product_bell_value(p);
            let psi = tensor_product(p).unwrap();
            assert!((v.re - bell_expectation_pure(&psi, BellKind::Plus)).abs() < 1e-10);
            assert!((v.im - bell_expectation_pure(&psi, BellKind::Minus)).abs() < 1e-10);
        }
    }

    #[test]
    fn separable_value_examples() {
        let single = SeparableDecomposition::single(ProductState::new(vec![plus_state(); 3]).unwrap());
        let v = separable_bell_values(&single);
        assert_abs_diff_eq!(v.plus, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.minus, 0.0, epsilon = 1e-15);

        // Flipping β → −β on every qubit of an odd-N product negates the value.
        let minus_q = QubitPure::new(c(FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0)).unwrap();
        let mix = SeparableDecomposition::new(
            3,
            vec![
                SeparableTerm { weight: 0.5, qubits: ProductState::new(vec![plus_state(); 3]).unwrap() },
                SeparableTerm { weight: 0.5, qubits: ProductState::new(vec![minus_q; 3]).unwrap() },
            ],
        )
        .unwrap();
        let v = separable_bell_values(&mix);
        assert_abs_diff_eq!(v.plus, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.minus, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn separable_values_match_assembled_density() {
        for n in 2..=6 {
            let d = random_separable(n, 5, 100 + n as u64).unwrap();
            let direct = separable_bell_values(&d);
            let dense = bell_values_mixed(&d.density().unwrap());
            assert!((direct.plus - dense.plus).abs() < 1e-9);
            assert!((direct.minus - dense.minus).abs() < 1e-9);
        }
    }

    #[test]
    fn decomposition_validation() {
        let p = ProductState::new(vec![QubitPure::up(); 2]).unwrap();
        let t = |w: f64| SeparableTerm { weight: w, qubits: p.clone() };
        assert!(SeparableDecomposition::new(2, vec![t(0.5), t(0.4)]).is_err());
        assert!(SeparableDecomposition::new(2, vec![t(1.2), t(-0.2)]).is_err());
        assert!(SeparableDecomposition::new(2, vec![]).is_err());
        assert!(SeparableDecomposition::new(3, vec![t(1.0)]).is_err());
        assert!(SeparableDecomposition::new(2, vec![t(0.5), t(0.5)]).is_ok());
    }

    #[test]
    fn random_separable_examples() {
        let d = random_separable(2, 1, 99).unwrap();
        assert_eq!(d.terms().len(), 1);
        assert_eq!(d.terms()[0].weight, 1.0);
        let d = random_separable(3, 4, 7).unwrap();
        let total: f64 = d.terms().iter().map(|t| t.weight).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(random_separable(3, 4, 7).unwrap(), d);
        assert_ne!(random_separable(3, 4, 8).unwrap(), d);
    }

    #[test]
    fn qubit_density_eigen() {
        let mixed = QubitDensity::from_bloch([0.0, 0.0, 0.0]).unwrap();
        let [(w0, q0), (w1, q1)] = mixed.eigen_decomposition();
        assert_eq!((w0, w1), (0.5, 0.5));
        assert_eq!((q0, q1), (QubitPure::up(), QubitPure::down()));

        let tilted = QubitDensity::from_bloch([0.3, -0.4, 0.5]).unwrap();
        let rebuilt: Matrix2<Complex64> = tilted
            .eigen_decomposition()
            .iter()
            .map(|(w, q)| QubitDensity::from_pure(q).matrix() * Complex64::new(*w, 0.0))
            .sum();
        assert!((rebuilt - tilted.matrix()).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn qubit_density_validation() {
        assert!(QubitDensity::from_bloch([0.0, 0.0, 1.2]).is_err());
        let bad_trace = Matrix2::new(c(0.6, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.6, 0.0));
        assert!(QubitDensity::new(bad_trace).is_err());
        let not_herm = Matrix2::new(c(0.5, 0.0), c(0.2, 0.0), c(0.1, 0.0), c(0.5, 0.0));
        assert!(QubitDensity::new(not_herm).is_err());
    }

    fn mixed_from(n: usize, terms: Vec<(f64, Vec<QubitDensity>)>) -> MixedSeparableInput {
        MixedSeparableInput::new(n, terms.into_iter().map(|(weight, factors)| MixedTerm { weight, factors }).collect())
            .unwrap()
    }

    #[test]
    fn refine_examples() {
        let up = QubitDensity::from_pure(&QubitPure::up());
        let plus = QubitDensity::from_pure(&plus_state());
        let pure = mixed_from(2, vec![(0.3, vec![up, plus]), (0.7, vec![plus, plus])]);
        let r = refine_to_pure(&pure).unwrap();
        assert_eq!(r.decomposition.terms().len(), 2);
        assert_eq!(r.dropped_terms, 6);
        assert_abs_diff_eq!(r.decomposition.terms()[0].weight, 0.3, epsilon = 1e-15);

        let half = QubitDensity::from_bloch([0.0; 3]).unwrap();
        let r = refine_to_pure(&mixed_from(1, vec![(1.0, vec![half])])).unwrap();
        let terms = r.decomposition.terms();
        assert_eq!(terms.len(), 2);
        assert_eq!((terms[0].weight, terms[1].weight), (0.5, 0.5));
        assert_eq!(terms[0].qubits.qubits()[0], QubitPure::up());
        assert_eq!(terms[1].qubits.qubits()[0], QubitPure::down());

        let input = mixed_from(2, vec![(1.0, vec![half, plus])]);
        let r = refine_to_pure(&input).unwrap();
        assert_eq!(r.decomposition.terms().len(), 2);
        assert!(r.decomposition.terms().iter().all(|t| (t.weight - 0.5).abs() < 1e-15));
        // Dense oracle: I/2 ⊗ |+⟩⟨+| by Kronecker product.
        let oracle = to_dynamic(half.matrix()).kronecker(&to_dynamic(plus.matrix()));
        assert!(max_diff(r.decomposition.density().unwrap().matrix(), &oracle) < 1e-10);
    }

    #[test]
    fn refine_preserves_density_and_values() {
        for seed in 0..10 {
            let input = random_mixed_separable(3, 4, seed).unwrap();
            let r = refine_to_pure(&input).unwrap();
            let before = input.density().unwrap();
            let after = r.decomposition.density().unwrap();
            assert!(max_diff(before.matrix(), after.matrix()) < 1e-10);
            let a = bell_values_mixed(&before);
            let b = separable_bell_values(&r.decomposition);
            assert!((a.plus - b.plus).abs() < 1e-10 && (a.minus - b.minus).abs() < 1e-10);
        }
    }

    #[test]
    fn lhv_table_examples() {
        let up = QubitDensity::from_pure(&QubitPure::up());
        let plus = QubitDensity::from_pure(&plus_state());
        let t = build_lhv_table(&mixed_from(2, vec![(1.0, vec![up, plus])])).unwrap();
        assert_eq!(t.values[0][0], [0.0, 0.0]);
        assert!((t.values[0][1][0] - 1.0).abs() < 1e-15);
        assert!(t.values[0][1][1].abs() < 1e-15);

        // Direct 2×2 oracle: Tr(ρσx) = 2 Re ρ01, Tr(ρσy) = −2 Im ρ01.
        let input = random_mixed_separable(3, 3, 17).unwrap();
        let t = build_lhv_table(&input).unwrap();
        for (i, term) in input.terms().iter().enumerate() {
            for (k, f) in term.factors.iter().enumerate() {
                let r01 = f.matrix()[(0, 1)];
                assert!((t.values[i][k][0] - 2.0 * r01.re).abs() < 1e-14);
                assert!((t.values[i][k][1] + 2.0 * r01.im).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn lhv_representation_examples() {
        let plus = QubitDensity::from_pure(&plus_state());
        let up = QubitDensity::from_pure(&QubitPure::up());
        assert!(verify_lhv_representation(&mixed_from(2, vec![(1.0, vec![plus, up])])).unwrap() < 1e-12);

        let half = QubitDensity::from_bloch([0.0; 3]).unwrap();
        let input = mixed_from(3, vec![(1.0, vec![half; 3])]);
        assert!(verify_lhv_representation(&input).unwrap() < 1e-12);
        let table = build_lhv_table(&input).unwrap();
        assert!(PauliSetting::all(3).all(|s| table.correlation(&s) == 0.0));

        let input = random_mixed_separable(3, 5, 2024).unwrap();
        assert!(verify_lhv_representation(&input).unwrap() < 1e-10);
    }

    #[test]
    fn lhv_dense_side_matches_kronecker_trace() {
        let input = random_mixed_separable(2, 3, 5).unwrap();
        let rho = input.density().unwrap();
        let table = build_lhv_table(&input).unwrap();
        for s in PauliSetting::all(2) {
            let a = s.axes();
            let op = to_dynamic(&a[0].matrix()).kronecker(&to_dynamic(&a[1].matrix()));
            let tr = (rho.matrix() * op).trace();
            assert!((tr.re - table.correlation(&s)).abs() < 1e-12);
        }
    }

    #[test]
    fn verify_cap() {
        let input = random_mixed_separable(11, 1, 0).unwrap();
        assert!(matches!(verify_lhv_representation(&input), Err(BellError::Capacity { .. })));
    }

    #[test]
    fn mixed_json() {
        let json =
            r#"{"n_qubits":1,"terms":[{"weight":1.0,"factors":[[[[0.5,0.0],[0.0,0.0]],[[0.0,0.0],[0.5,0.0]]]]}]}"#;
        let m: MixedSeparableInput = serde_json::from_str(json).unwrap();
        assert_eq!(m.n_qubits(), 1);
        let out = serde_json::to_string(&m).unwrap();
        assert!(out.contains(r#""observables":["x","y"]"#));
        let again: MixedSeparableInput = serde_json::from_str(&out).unwrap();
        assert_eq!(again, m);
        let bad_obs = r#"{"n_qubits":1,"observables":["x"],"terms":[{"weight":1.0,"factors":[[[[0.5,0.0],[0.0,0.0]],[[0.0,0.0],[0.5,0.0]]]]}]}"#;
        assert!(serde_json::from_str::<MixedSeparableInput>(bad_obs).is_err());
        let bad_weight = json.replace("\"weight\":1.0", "\"weight\":0.9");
        assert!(serde_json::from_str::<MixedSeparableInput>(&bad_weight).is_err());
    }

    #[test]
    fn separable_json() {
        let d = random_separable(2, 2, 3).unwrap();
        let v = serde_json::to_value(&d).unwrap();
        assert_eq!(v["terms"][0]["qubits"][0].as_array().unwrap().len(), 4);
        let back: SeparableDecomposition = serde_json::from_value(v).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn pure_density_of_product_has_same_values() {
        let d = random_separable(3, 1, 12).unwrap();
        let psi: PureState = tensor_product(&d.terms()[0].qubits).unwrap();
        let rho = density_from_pure(&psi).unwrap();
        let a = separable_bell_values(&d);
        let b = bell_values_mixed(&rho);
        assert!((a.plus - b.plus).abs() < 1e-12 && (a.minus - b.minus).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn product_value_modulus_at_most_one(
            angles in prop::collection::vec((0.0..std::f64::consts::PI, 0.0..std::f64::consts::TAU), 1..10)
        ) {
            let qubits = angles.iter().map(|&(t, p)| bloch_to_qubit(t, p).unwrap()).collect();
            let v = product_bell_value(&ProductState::new(qubits).unwrap());
            prop_assert!(v.norm() <= 1.0 + 1e-12);
        }

        #[test]
        fn separable_inequalities_hold(n in 2usize..=8, terms in 1usize..6, seed in any::<u64>()) {
            let v = separable_bell_values(&random_separable(n, terms, seed).unwrap());
            prop_assert!(v.plus.abs() <= 1.0 + 1e-12);
            prop_assert!(v.minus.abs() <= 1.0 + 1e-12);
            prop_assert!(v.abs_sum() <= SQRT_2 + 1e-12);
        }

        #[test]
        fn lhv_identity_holds(n in 1usize..=4, terms in 1usize..6, seed in any::<u64>()) {
            let input = random_mixed_separable(n, terms, seed).unwrap();
            prop_assert!(verify_lhv_representation(&input).unwrap() < 1e-10);
        }
    }
}
