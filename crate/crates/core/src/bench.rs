//! Benchmark harness: generate a seeded board suite, push every board
//! through perception → clamp → refine → clue restoration → decode (or plain
//! argmax), and score the results with the exact checkers.
//!
//! Boards are independent work items processed in parallel; per-board seeds
//! are derived from the suite seed by index, and aggregation runs in board
//! order, so reports are bit-identical regardless of thread count.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decode::{greedy_decode, restore_clues, DecodeStatus};
use crate::oracle::{
    check_constraints, generate_solution, random_clue_mask, verify_independent, DiscreteBoard,
    Metrics,
};
use crate::perception::{simulate_perception_with, NoiseConfig};
use crate::program::ConstraintProgram;
use crate::refine::{clamp_evidence, refine, ClampSource, Instance, RefineConfig};
use crate::scalar::Real;

/// A seeded family of boards: everything needed to regenerate it exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub box_size: usize,
    pub count: usize,
    pub clue_count: usize,
    pub seed: u64,
}

impl SuiteConfig {
    /// Stable identifier used in reports and corpus manifests.
    pub fn id(&self) -> String {
        format!(
            "sudoku{}-n{}-c{}-seed{}",
            self.box_size, self.count, self.clue_count, self.seed
        )
    }

    pub fn board_seed(&self, index: usize) -> u64 {
        crate::rng::derive_seed(self.seed, 2 * index as u64)
    }

    pub fn mask_seed(&self, index: usize) -> u64 {
        crate::rng::derive_seed(self.seed, 2 * index as u64 + 1)
    }
}

/// What happens between perception and scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub refine_iterations: usize,
    /// Greedy decode when true; plain per-row argmax when false.
    pub decode: bool,
    /// Whether perception noise may flip evidence cells too.
    pub flip_evidence: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self { refine_iterations: 10, decode: true, flip_evidence: true }
    }
}

/// Per-board scoring detail kept alongside the aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoardOutcome {
    pub index: usize,
    pub correct_cells: usize,
    pub board_correct: bool,
    pub csr: bool,
    pub vcsr: bool,
    pub dead_end: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchReport {
    pub suite_id: String,
    pub suite: SuiteConfig,
    pub noise: NoiseConfig,
    pub pipeline: PipelineConfig,
    pub metrics: Metrics,
    pub per_board: Vec<BoardOutcome>,
}

fn run_board<S: Real>(
    index: usize,
    suite: &SuiteConfig,
    pipeline: &PipelineConfig,
    noise: &NoiseConfig,
    program: &Arc<ConstraintProgram>,
) -> BoardOutcome {
    let n = program.positions();
    let board = generate_solution(suite.box_size, suite.board_seed(index));
    let mask = random_clue_mask(n, suite.clue_count, suite.mask_seed(index));
    let board_noise = NoiseConfig {
        seed: crate::rng::derive_seed(noise.seed, index as u64),
        ..*noise
    };
    let mut inst: Instance<S> =
        simulate_perception_with(&board, &mask, &board_noise, program, pipeline.flip_evidence);
    let raw = inst.dist.clone();
    clamp_evidence(&mut inst, ClampSource::Argmax).expect("argmax clamping cannot fail");
    if pipeline.refine_iterations > 0 {
        let cfg = RefineConfig {
            iterations: pipeline.refine_iterations,
            ..RefineConfig::default()
        };
        refine(&mut inst, &cfg).expect("suite programs fit the kernel");
    }
    restore_clues(&mut inst.dist, &raw, &mask);
    let (cells, dead_end) = if pipeline.decode {
        let result = greedy_decode(&mut inst);
        (result.assignment, result.status == DecodeStatus::DeadEnd)
    } else {
        (inst.dist.argmax(), false)
    };
    let correct_cells = cells
        .iter()
        .zip(&board.cells)
        .filter(|(&got, &want)| got == want)
        .count();
    let decoded = DiscreteBoard::new(n, board.k, cells);
    // Incomplete (dead) boards fail both satisfaction checks by definition.
    let csr = check_constraints(&decoded, program).unwrap_or(false);
    let vcsr = verify_independent(&decoded, program).unwrap_or(false);
    BoardOutcome {
        index,
        correct_cells,
        board_correct: correct_cells == n,
        csr,
        vcsr,
        dead_end,
    }
}

/// Run the full pipeline over the suite. Scalar-generic; the common
/// instantiation is [`run_benchmark`].
pub fn run_benchmark_as<S: Real>(
    suite: &SuiteConfig,
    pipeline: &PipelineConfig,
    noise: &NoiseConfig,
) -> BenchReport {
    let program = Arc::new(ConstraintProgram::sudoku(suite.box_size));
    let n = program.positions();
    let per_board: Vec<BoardOutcome> = (0..suite.count)
        .into_par_iter()
        .map(|index| run_board::<S>(index, suite, pipeline, noise, &program))
        .collect();
    // par_iter keeps index order, so this aggregation is deterministic.
    let boards = per_board.len();
    let correct: usize = per_board.iter().map(|b| b.correct_cells).sum();
    let metrics = Metrics {
        sym_acc: correct as f64 / (boards * n) as f64,
        board_acc: count(&per_board, |b| b.board_correct) as f64 / boards as f64,
        csr: count(&per_board, |b| b.csr) as f64 / boards as f64,
        vcsr: count(&per_board, |b| b.vcsr) as f64 / boards as f64,
        boards,
        dead_ends: count(&per_board, |b| b.dead_end),
    };
    BenchReport {
        suite_id: suite.id(),
        suite: *suite,
        noise: *noise,
        pipeline: *pipeline,
        metrics,
        per_board,
    }
}

/// [`run_benchmark_as`] at the default `f64` scalar.
pub fn run_benchmark(
    suite: &SuiteConfig,
    pipeline: &PipelineConfig,
    noise: &NoiseConfig,
) -> BenchReport {
    run_benchmark_as::<f64>(suite, pipeline, noise)
}

fn count(boards: &[BoardOutcome], f: impl Fn(&BoardOutcome) -> bool) -> usize {
    boards.iter().filter(|b| f(b)).count()
}

/// Fraction of suite boards whose raw perception argmax satisfies all
/// constraints (no refinement, no decode).
pub fn raw_argmax_csr(suite: &SuiteConfig, noise: &NoiseConfig) -> f64 {
    let pipeline = PipelineConfig {
        refine_iterations: 0,
        decode: false,
        flip_evidence: true,
    };
    run_benchmark(suite, &pipeline, noise).metrics.csr
}

/// Binary-search a flip rate whose raw-argmax CSR lands inside `band`.
/// CSR decreases in the flip rate, so plain bisection on the empirical
/// estimate converges; panics if 40 halvings cannot hit the band (possible
/// only if the band is narrower than the suite's sampling resolution).
pub fn calibrate_flip_rate(
    suite: &SuiteConfig,
    temperature: f64,
    band: (f64, f64),
) -> (f64, f64) {
    assert!(band.0 < band.1, "empty target band");
    let (mut lo, mut hi) = (0.0f64, 0.05f64);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let noise = NoiseConfig::new(mid, temperature, suite.seed ^ 0x5EED);
        let csr = raw_argmax_csr(suite, &noise);
        if csr > band.1 {
            lo = mid; // too clean: flip more
        } else if csr < band.0 {
            hi = mid; // too noisy: flip less
        } else {
            return (mid, csr);
        }
    }
    panic!("no flip rate found for CSR band {band:?}");
}
