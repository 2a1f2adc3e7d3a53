//! Differentiable constraint reasoning over categorical assignments.
//!
//! The crate models a constraint problem as a [`ConstraintProgram`]: `n`
//! positions, a shared symbol domain of size `k`, and groups that are either
//! *exactly-one* (each symbol occurs exactly once among the members) or
//! *sum-equals* (member digits add to a target). A candidate solution is a
//! [`SoftAssignment`], one probability row per position.
//!
//! Everything else is built from one primitive: a soft consequence operator
//! that maps each member's row to the probability that it takes a symbol
//! *and* its group mates leave that choice consistent. Fixed points of the
//! operator at one-hot rows are exactly the discrete solutions, which makes
//! the squared residual a loss whose zeros are the valid assignments
//! ([`residual_loss`], [`residual_grad`]). On top of that sit fixed-point
//! iteration with evidence clamping ([`refine()`]), sequential constrained
//! decoding ([`greedy_decode`]), gradient descent on the residual
//! ([`descent_solve`]), and a benchmark harness with exact checkers and
//! solvers to score the results ([`oracle`], [`run_benchmark`]).
//!
//! Numeric code is generic over the scalar via [`Real`]; `f64` is the
//! default type parameter everywhere, with `F32`-suffixed aliases exported
//! at the root for the single-precision instantiations.

// Kernel loops index several parallel buffers by position/symbol; iterator
// rewrites obscure the correspondence.
#![allow(clippy::needless_range_loop)]

pub mod assignment;
pub mod bench;
pub mod decode;
pub mod descent;
pub mod files;
pub mod format;
pub mod kernel;
pub mod oracle;
pub mod perception;
pub mod program;
pub mod refine;
pub mod rng;
pub mod scalar;
pub mod schedule;

pub use assignment::{AssignmentError, SoftAssignment};
pub use bench::{
    calibrate_flip_rate, run_benchmark, run_benchmark_as, BenchReport, BoardOutcome,
    PipelineConfig, SuiteConfig,
};
pub use decode::{
    feasible_symbols, greedy_decode, restore_clues, Commit, DecodeResult, DecodeStatus,
};
pub use descent::{descent_solve, DescentError, DescentReport};
pub use files::{
    build_corpus, load_board, load_corpus, save_board, save_corpus, BoardRecord, Corpus,
    FileError,
};
pub use format::{parse_program, serialize_program, ParseError};
pub use kernel::{
    residual_grad, residual_loss, tp_exactly_one, tp_exactly_one_logspace, tp_image, tp_sum,
    KernelError, LossReport, TpImage,
};
pub use oracle::{
    check_constraints, generate_solution, naive_tp_exactly_one, naive_tp_sum, random_clue_mask,
    solve_backtracking, verify_independent, DiscreteBoard, Metrics, OracleError, SolveOutcome,
};
pub use perception::{
    peak_mass, simulate_perception, simulate_perception_with, temperature_for_peak, NoiseConfig,
};
pub use program::{
    ConstraintGroup, ConstraintProgram, GroupKind, ProgramError, Provenance, SymbolDomain,
};
pub use refine::{
    clamp_evidence, refine, sym_accuracy, ClampSource, Instance, RefineConfig, RefineError,
    ZeroRowFallback,
};
pub use rng::{derive_seed, rng_from_seed, splitmix64};
pub use scalar::Real;
pub use schedule::{curriculum_alpha, curriculum_beta, ScheduleConfig};

/// Single-precision soft assignment.
pub type SoftAssignmentF32 = SoftAssignment<f32>;
/// Single-precision instance.
pub type InstanceF32 = Instance<f32>;
/// Single-precision decode result.
pub type DecodeResultF32 = DecodeResult<f32>;
