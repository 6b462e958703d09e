//! Bell correlations of N-qubit systems: the rank-two Bell operators `B±`,
//! their local-hidden-variable maxima, the separable-state maxima and the
//! violations attained by GHZ-family states.
//!
//! Basis convention used throughout: qubit 1 is the most significant bit of a
//! basis index and `↑` (the +1 eigenstate of `σz`) is bit value 0, so index 0
//! is `|↑…↑⟩` and index `2^N − 1` is `|↓…↓⟩`.

pub mod bell;
pub mod error;
pub mod lhv;
pub mod linalg;
pub mod separability;
pub mod violation;

pub use bell::{BellExpansion, BellKind, BellValues, PauliAxis, PauliSetting, SparseBell};
pub use error::{BellError, Result};
pub use lhv::{LhvAssignment, LhvBoundResult};
pub use linalg::{Bipartition, DensityOperator, ProductState, PureState, QubitPure, SchmidtResult};
pub use separability::{MixedSeparableInput, OptimizerConfig, SeparableDecomposition, Target};
pub use violation::{GhzSpec, ViolationReport};
