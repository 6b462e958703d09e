//! Multi-start coordinate ascent for the largest Bell value reachable by a
//! separable state.
//!
//! Mixing cannot raise `|·|` of an affine functional, so the search runs over
//! pure product states only, parameterized by one Bloch angle pair per qubit.
//! Each sweep line-searches every angle in turn: a coarse grid picks a
//! bracket, golden-section search refines inside it, and a move is accepted
//! only when it improves the objective.

use std::f64::consts::{PI, SQRT_2, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::product_bell_value;
use crate::error::{BellError, Result};
use crate::linalg::{bloch_to_qubit, ProductState};

const GRID_POINTS: usize = 16;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Which separable maximum to search for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Plus,
    Minus,
    /// `|⟨B+⟩| + |⟨B−⟩|`.
    Sum,
}

impl Target {
    pub const ALL: [Target; 3] = [Target::Plus, Target::Minus, Target::Sum];

    /// Separable bound: 1 for each of `⟨B±⟩`, √2 for the sum.
    pub fn bound(self) -> f64 {
        match self {
            Target::Plus | Target::Minus => 1.0,
            Target::Sum => SQRT_2,
        }
    }

    fn score(self, v: Complex64) -> f64 {
        match self {
            Target::Plus => v.re,
            Target::Minus => v.im,
            Target::Sum => v.re.abs() + v.im.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    /// Sweeps over all coordinates per restart.
    pub max_iterations: usize,
    pub step_tolerance: f64,
    pub value_tolerance: f64,
    pub rng_seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { restarts: 64, max_iterations: 500, step_tolerance: 1e-10, value_tolerance: 1e-9, rng_seed: 0 }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iterations == 0 {
            return Err(BellError::domain("restarts and max_iterations must be positive"));
        }
        if !(self.step_tolerance > 0.0 && self.value_tolerance > 0.0) {
            return Err(BellError::domain("tolerances must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparableOptimum {
    pub target: Target,
    pub value: f64,
    pub bound: f64,
    pub witness: ProductState,
    /// `(θ_k, φ_k)` per qubit.
    pub angles: Vec<(f64, f64)>,
    /// Restart that produced the optimum (lowest index on ties).
    pub restart: usize,
    pub sweeps: usize,
}

fn product_from(angles: &[f64]) -> ProductState {
    let qubits = angles.chunks_exact(2).map(|a| bloch_to_qubit(a[0], a[1]).expect("finite angles")).collect();
    ProductState::new(qubits).expect("at least one qubit")
}

fn objective(target: Target, angles: &[f64]) -> f64 {
    target.score(product_bell_value(&product_from(angles)))
}

/// Golden-section maximization of a unimodal function on `[lo, hi]`.
fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut a = hi - INV_PHI * (hi - lo);
    let mut b = lo + INV_PHI * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > tol {
        if fa >= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - INV_PHI * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + INV_PHI * (hi - lo);
            fb = f(b);
        }
    }
    if fa >= fb {
        (a, fa)
    } else {
        (b, fb)
    }
}

/// Best position for coordinate `j`: polar angles live on `[0, π]`, azimuths
/// are periodic. Returns `(position, value)`.
fn line_search(target: Target, angles: &mut [f64], j: usize, tol: f64) -> (f64, f64) {
    let polar = j.is_multiple_of(2);
    let (lo, hi) = if polar { (0.0, PI) } else { (0.0, TAU) };
    let step = (hi - lo) / GRID_POINTS as f64;
    let grid_len = if polar { GRID_POINTS + 1 } else { GRID_POINTS };

    let mut eval = |x: f64| {
        angles[j] = x;
        objective(target, angles)
    };
    let (mut best_x, mut best_v) = (lo, f64::NEG_INFINITY);
    for g in 0..grid_len {
        let x = lo + step * g as f64;
        let v = eval(x);
        if v > best_v {
            (best_x, best_v) = (x, v);
        }
    }
    let (a, b) =
        if polar { ((best_x - step).max(lo), (best_x + step).min(hi)) } else { (best_x - step, best_x + step) };
    let snapshot = angles.to_vec();
    let (x, v) = golden_section(
        |x| {
            let mut trial = snapshot.clone();
            trial[j] = x;
            objective(target, &trial)
        },
        a,
        b,
        tol,
    );
    if v > best_v {
        let x = if polar { x } else { x.rem_euclid(TAU) };
        (x, v)
    } else {
        (best_x, best_v)
    }
}

struct RestartOutcome {
    value: f64,
    angles: Vec<f64>,
    sweeps: usize,
}

fn ascend(target: Target, n: usize, cfg: &OptimizerConfig, restart: usize) -> RestartOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    rng.set_stream(restart as u64);
    let mut angles: Vec<f64> = (0..n).flat_map(|_| [rng.random_range(0.0..PI), rng.random_range(0.0..TAU)]).collect();
    let mut value = objective(target, &angles);
    let mut sweeps = 0;
    for _ in 0..cfg.max_iterations {
        sweeps += 1;
        let start = value;
        let mut largest_move = 0.0f64;
        for j in 0..angles.len() {
            let current = angles[j];
            let (x, v) = line_search(target, &mut angles, j, cfg.step_tolerance);
            if v > value {
                largest_move = largest_move.max((x - current).abs());
                angles[j] = x;
                value = v;
            } else {
                angles[j] = current;
            }
        }
        if value - start < cfg.value_tolerance || largest_move < cfg.step_tolerance {
            break;
        }
    }
    RestartOutcome { value, angles, sweeps }
}

/// Largest `⟨B+⟩`, `⟨B−⟩` or `|⟨B+⟩| + |⟨B−⟩|` found over product states.
///
/// Restarts are independent (each seeded from `rng_seed` on its own stream)
/// and merged by value with the lowest restart index winning ties, so the
/// result does not depend on thread scheduling.
pub fn maximize_over_separable(n: usize, target: Target, cfg: &OptimizerConfig) -> Result<SeparableOptimum> {
    if n == 0 {
        return Err(BellError::domain("N must be at least 1"));
    }
    cfg.validate()?;
    let outcomes: Vec<RestartOutcome> = (0..cfg.restarts).into_par_iter().map(|r| ascend(target, n, cfg, r)).collect();
    let (restart, best) = outcomes
        .into_iter()
        .enumerate()
        .reduce(|acc, cand| if cand.1.value > acc.1.value { cand } else { acc })
        .expect("at least one restart");
    Ok(SeparableOptimum {
        target,
        value: best.value,
        bound: target.bound(),
        witness: product_from(&best.angles),
        angles: best.angles.chunks_exact(2).map(|a| (a[0], a[1])).collect(),
        restart,
        sweeps: best.sweeps,
    })
}
