//! Local-hidden-variable maxima of `⟨B±⟩`.
//!
//! In an LHV model `⟨B+⟩ + i⟨B−⟩ = ∫ dλ ρ(λ) ∏_k (σx^(k)(λ) + iσy^(k)(λ))` with
//! every `σ(λ) ∈ [−1, 1]`. The integrand is multilinear in the `2N` response
//! values, so over each box it is extremal at a vertex `σ = ±1`; averaging
//! over `λ` takes convex combinations of those vertex values. Hence:
//!
//! * `max |⟨B±⟩|` over all LHV models is the maximum of `|Re|` (`|Im|`) over
//!   the `2^(2N)` deterministic assignments;
//! * `max |⟨B+⟩| + |⟨B−⟩|` is `max_{s1,s2 = ±1} max_vertex s1·Re + s2·Im`,
//!   because `|u| + |v|` of a mixture is the largest of these four linear
//!   functionals.
//!
//! Each factor `x + iy` is a Gaussian integer, so products are computed
//! exactly in `i64` and the maxima are exact integers.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{BellError, Result};

/// Default largest N for a full `2^(2N)` scan.
pub const DEFAULT_ENUMERATION_CAP: usize = 13;
/// Exact `i64` products stay in range far beyond any feasible enumeration.
const HARD_MAX_QUBITS: usize = 31;
const CHUNK: u64 = 1 << 15;

/// Deterministic response `σx^(k)(λ), σy^(k)(λ) ∈ {−1, +1}` for every qubit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LhvAssignment {
    x_signs: Vec<i8>,
    y_signs: Vec<i8>,
}

impl LhvAssignment {
    pub fn new(x_signs: Vec<i8>, y_signs: Vec<i8>) -> Result<Self> {
        if x_signs.is_empty() || x_signs.len() != y_signs.len() {
            return Err(BellError::domain("x and y signs must be non-empty and of equal length"));
        }
        if x_signs.iter().chain(&y_signs).any(|&s| s != 1 && s != -1) {
            return Err(BellError::domain("LHV responses must be exactly ±1"));
        }
        Ok(Self { x_signs, y_signs })
    }

    /// Decodes `index = x_mask·2^N + y_mask`, where a set bit means −1 and
    /// qubit 1 is the most significant bit of each mask.
    pub fn from_index(n: usize, index: u64) -> Self {
        let signs =
            |mask: u64| -> Vec<i8> { (0..n).map(|k| if mask >> (n - 1 - k) & 1 == 1 { -1 } else { 1 }).collect() };
        let full = (1u64 << n) - 1;
        Self { x_signs: signs(index >> n), y_signs: signs(index & full) }
    }

    pub fn index(&self) -> u64 {
        let mask = |s: &[i8]| s.iter().fold(0u64, |acc, &v| (acc << 1) | u64::from(v == -1));
        (mask(&self.x_signs) << self.n_qubits()) | mask(&self.y_signs)
    }

    pub fn n_qubits(&self) -> usize {
        self.x_signs.len()
    }

    pub fn x_signs(&self) -> &[i8] {
        &self.x_signs
    }

    pub fn y_signs(&self) -> &[i8] {
        &self.y_signs
    }

    /// The same assignment with every `σx` response negated.
    pub fn flip_x(&self) -> Self {
        Self { x_signs: self.x_signs.iter().map(|s| -s).collect(), y_signs: self.y_signs.clone() }
    }

    /// The same assignment with every `σy` response negated.
    pub fn flip_y(&self) -> Self {
        Self { x_signs: self.x_signs.clone(), y_signs: self.y_signs.iter().map(|s| -s).collect() }
    }

    /// `∏_k (x_k + i y_k)` as an exact Gaussian integer.
    pub fn gaussian_product(&self) -> (i64, i64) {
        self.x_signs
            .iter()
            .zip(&self.y_signs)
            .fold((1, 0), |acc, (&x, &y)| gauss_mul(acc, (i64::from(x), i64::from(y))))
    }
}

impl fmt::Display for LhvAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let signs = |s: &[i8]| s.iter().map(|&v| if v > 0 { '+' } else { '-' }).collect::<String>();
        write!(f, "x:{},y:{}", signs(&self.x_signs), signs(&self.y_signs))
    }
}

impl FromStr for LhvAssignment {
    type Err = BellError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || BellError::domain(format!("expected \"x:<signs>,y:<signs>\", got {s:?}"));
        let (xs, ys) = s.split_once(',').ok_or_else(bad)?;
        let xs = xs.strip_prefix("x:").ok_or_else(bad)?;
        let ys = ys.strip_prefix("y:").ok_or_else(bad)?;
        let parse = |t: &str| -> Result<Vec<i8>> {
            t.chars()
                .map(|c| match c {
                    '+' => Ok(1),
                    '-' => Ok(-1),
                    _ => Err(bad()),
                })
                .collect()
        };
        Self::new(parse(xs)?, parse(ys)?)
    }
}

impl TryFrom<String> for LhvAssignment {
    type Error = BellError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<LhvAssignment> for String {
    fn from(a: LhvAssignment) -> Self {
        a.to_string()
    }
}

fn gauss_mul(a: (i64, i64), b: (i64, i64)) -> (i64, i64) {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

/// `∏_k (x_k + i y_k)`; the real part is the `B+` value and the imaginary part
/// the `B−` value of this deterministic strategy.
pub fn evaluate_assignment(a: &LhvAssignment) -> Complex64 {
    let (re, im) = a.gaussian_product();
    Complex64::new(re as f64, im as f64)
}

fn product_for_index(n: usize, index: u64) -> (i64, i64) {
    let x_mask = index >> n;
    let y_mask = index & ((1u64 << n) - 1);
    let mut acc = (1i64, 0i64);
    for k in (0..n).rev() {
        let x = 1 - 2 * ((x_mask >> k) & 1) as i64;
        let y = 1 - 2 * ((y_mask >> k) & 1) as i64;
        acc = gauss_mul(acc, (x, y));
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSource {
    /// Maxima from scanning deterministic assignments.
    Enumeration,
    /// Maxima `2^⌊N/2⌋` and `2^⌈N/2⌉` from the parity structure of the products,
    /// used where a scan is out of reach.
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LhvWitnesses {
    pub plus: LhvAssignment,
    pub minus: LhvAssignment,
    pub sum: LhvAssignment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LhvBoundResult {
    pub n_qubits: usize,
    /// `max |⟨B+⟩_LHV|`.
    pub max_abs_plus: f64,
    /// `max |⟨B−⟩_LHV|`.
    pub max_abs_minus: f64,
    /// `max |⟨B+⟩_LHV| + |⟨B−⟩_LHV|` over all LHV mixtures.
    pub max_sum: f64,
    pub witnesses: LhvWitnesses,
    pub assignments_scanned: u64,
    /// `2^(2N) / assignments_scanned`; 1 for a full scan, 4 with sign-flip reduction.
    pub reduction_factor: u64,
    pub source: BoundSource,
}

impl LhvBoundResult {
    pub fn bound_individual(&self) -> f64 {
        self.max_abs_plus.max(self.max_abs_minus)
    }

    /// Bound for `N` beyond the scan cap: every product has modulus `2^(N/2)`
    /// and phase `π(N/4 + k/2)`, so the extremes are `2^⌊N/2⌋` and `2^⌈N/2⌉`.
    /// Witnesses are the all-`+1` assignment and its last-`y` flip, one of which
    /// is real and one imaginary for even N.
    pub fn closed_form(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(BellError::domain("N must be at least 1"));
        }
        if n > HARD_MAX_QUBITS {
            return Err(BellError::Capacity { what: "LHV bound", requested: n, max: HARD_MAX_QUBITS });
        }
        let all_up = LhvAssignment::from_index(n, 0);
        let mut flipped = all_up.clone();
        flipped.y_signs[n - 1] = -1;
        let (p0, p1) = (all_up.gaussian_product(), flipped.gaussian_product());
        let pick = |f: fn((i64, i64)) -> i64| if f(p0) >= f(p1) { all_up.clone() } else { flipped.clone() };
        Ok(Self {
            n_qubits: n,
            max_abs_plus: 2f64.powi((n / 2) as i32),
            max_abs_minus: 2f64.powi((n / 2) as i32),
            max_sum: 2f64.powi(n.div_ceil(2) as i32),
            witnesses: LhvWitnesses { plus: pick(|p| p.0.abs()), minus: pick(|p| p.1.abs()), sum: all_up.clone() },
            assignments_scanned: 0,
            reduction_factor: 1,
            source: BoundSource::ClosedForm,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationOptions {
    /// Largest N scanned in full; the sign-flip reduction allows one more.
    pub cap: usize,
    /// Scan one representative per orbit of the global flips of all `x` or
    /// all `y` responses (a factor 4 fewer evaluations).
    pub symmetry_reduction: bool,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        Self { cap: DEFAULT_ENUMERATION_CAP, symmetry_reduction: false }
    }
}

impl EnumerationOptions {
    pub fn max_qubits(&self) -> usize {
        let m = if self.symmetry_reduction { self.cap + 1 } else { self.cap };
        m.min(HARD_MAX_QUBITS)
    }
}

/// Best value seen, ties resolved towards the lowest assignment index.
#[derive(Debug, Clone, Copy)]
struct Best {
    value: i64,
    index: u64,
}

impl Best {
    const NONE: Best = Best { value: i64::MIN, index: u64::MAX };

    fn offer(&mut self, value: i64, index: u64) {
        if value > self.value || (value == self.value && index < self.index) {
            *self = Best { value, index };
        }
    }

    fn merge(mut self, other: Best) -> Best {
        self.offer(other.value, other.index);
        self
    }
}

#[derive(Debug, Clone, Copy)]
struct Scan {
    plus: Best,
    minus: Best,
    sum: Best,
}

impl Scan {
    const EMPTY: Scan = Scan { plus: Best::NONE, minus: Best::NONE, sum: Best::NONE };

    fn offer(&mut self, (re, im): (i64, i64), index: u64) {
        self.plus.offer(re.abs(), index);
        self.minus.offer(im.abs(), index);
        for (s1, s2) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
            self.sum.offer(s1 * re + s2 * im, index);
        }
    }

    fn merge(self, other: Scan) -> Scan {
        Scan { plus: self.plus.merge(other.plus), minus: self.minus.merge(other.minus), sum: self.sum.merge(other.sum) }
    }
}

fn scan_full(n: usize) -> Scan {
    let total = 1u64 << (2 * n);
    let chunks = total.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut scan = Scan::EMPTY;
            for index in c * CHUNK..((c + 1) * CHUNK).min(total) {
                scan.offer(product_for_index(n, index), index);
            }
            scan
        })
        .reduce(|| Scan::EMPTY, Scan::merge)
}

/// Scans representatives with `x_1 = y_1 = +1` and offers all four orbit
/// images: flipping every `y` conjugates the product, flipping every `x` maps
/// it to `(−1)^N` times its conjugate.
fn scan_reduced(n: usize) -> Scan {
    let half = 1u64 << (n - 1);
    let full = (1u64 << n) - 1;
    let sign: i64 = if n.is_multiple_of(2) { 1 } else { -1 };
    let reps = half * half;
    let chunks = reps.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut scan = Scan::EMPTY;
            for r in c * CHUNK..((c + 1) * CHUNK).min(reps) {
                let (x_mask, y_mask) = (r / half, r % half);
                let index = (x_mask << n) | y_mask;
                let (re, im) = product_for_index(n, index);
                scan.offer((re, im), index);
                scan.offer((re, -im), (x_mask << n) | (y_mask ^ full));
                scan.offer((sign * re, -sign * im), ((x_mask ^ full) << n) | y_mask);
                scan.offer((sign * re, sign * im), ((x_mask ^ full) << n) | (y_mask ^ full));
            }
            scan
        })
        .reduce(|| Scan::EMPTY, Scan::merge)
}

pub fn enumerate_bounds(n: usize) -> Result<LhvBoundResult> {
    enumerate_bounds_with(n, EnumerationOptions::default())
}

pub fn enumerate_bounds_with(n: usize, opts: EnumerationOptions) -> Result<LhvBoundResult> {
    if n == 0 {
        return Err(BellError::domain("N must be at least 1"));
    }
    let max = opts.max_qubits();
    if n > max {
        return Err(BellError::Capacity { what: "LHV enumeration", requested: n, max });
    }
    // A single qubit has no non-trivial orbit representative split.
    let reduce = opts.symmetry_reduction && n >= 2;
    let (scan, scanned, factor) =
        if reduce { (scan_reduced(n), 1u64 << (2 * (n - 1)), 4) } else { (scan_full(n), 1u64 << (2 * n), 1) };
    let witness = |b: Best| LhvAssignment::from_index(n, b.index);
    Ok(LhvBoundResult {
        n_qubits: n,
        max_abs_plus: scan.plus.value as f64,
        max_abs_minus: scan.minus.value as f64,
        max_sum: scan.sum.value as f64,
        witnesses: LhvWitnesses { plus: witness(scan.plus), minus: witness(scan.minus), sum: witness(scan.sum) },
        assignments_scanned: scanned,
        reduction_factor: factor,
        source: BoundSource::Enumeration,
    })
}

/// Which quantity the classical local-reality inequality bounds for this parity of N.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MrsForm {
    /// Odd N: `|⟨B±⟩| ≤ 2^((N−1)/2)`.
    Individual,
    /// Even N: `|⟨B+⟩| + |⟨B−⟩| ≤ 2^(N/2)`.
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticBounds {
    pub n_qubits: usize,
    pub form: MrsForm,
    pub individual: f64,
    /// Only given in closed form for even N.
    pub sum: Option<f64>,
}

pub fn analytic_bounds(n: usize) -> Result<AnalyticBounds> {
    if n == 0 {
        return Err(BellError::domain("N must be at least 1"));
    }
    Ok(if n % 2 == 1 {
        AnalyticBounds {
            n_qubits: n,
            form: MrsForm::Individual,
            individual: 2f64.powi(((n - 1) / 2) as i32),
            sum: None,
        }
    } else {
        let b = 2f64.powi((n / 2) as i32);
        AnalyticBounds { n_qubits: n, form: MrsForm::Sum, individual: b, sum: Some(b) }
    })
}

/// Agreement tolerance between enumerated and closed-form maxima.
pub const MRS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MrsComparison {
    pub quantity: &'static str,
    pub expected: f64,
    pub enumerated: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MrsCheck {
    pub n_qubits: usize,
    pub form: MrsForm,
    pub comparisons: Vec<MrsComparison>,
    pub pass: bool,
    pub result: LhvBoundResult,
}

pub fn check_mrs(n: usize) -> Result<MrsCheck> {
    check_mrs_with(n, EnumerationOptions::default())
}

/// Compares the scan against the closed-form bound for this parity of N.
/// A mismatch is reported in the result, not as an error.
pub fn check_mrs_with(n: usize, opts: EnumerationOptions) -> Result<MrsCheck> {
    let result = enumerate_bounds_with(n, opts)?;
    let analytic = analytic_bounds(n)?;
    let cmp = |quantity, expected: f64, enumerated: f64| MrsComparison {
        quantity,
        expected,
        enumerated,
        pass: (expected - enumerated).abs() <= MRS_TOL,
    };
    let comparisons = match analytic.form {
        MrsForm::Individual => vec![
            cmp("max_abs_plus", analytic.individual, result.max_abs_plus),
            cmp("max_abs_minus", analytic.individual, result.max_abs_minus),
        ],
        MrsForm::Sum => vec![cmp("max_sum", analytic.sum.expect("even N"), result.max_sum)],
    };
    Ok(MrsCheck { n_qubits: n, form: analytic.form, pass: comparisons.iter().all(|c| c.pass), comparisons, result })
}
