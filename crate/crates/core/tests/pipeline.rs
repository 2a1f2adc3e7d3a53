//! Cross-module runs: generator diversity, the full noisy pipeline against
//! the backtracking solver, and a corpus driving the benchmark end to end.

use std::collections::HashSet;
use std::sync::Arc;

use softcsp::*;

#[test]
fn generated_boards_are_diverse() {
    let mut seen = HashSet::new();
    for i in 0..1000u64 {
        let board = generate_solution(3, derive_seed(4242, i));
        seen.insert(board.cells);
    }
    assert!(
        seen.len() >= 990,
        "only {} distinct boards out of 1000 seeds",
        seen.len()
    );
}

#[test]
fn noisy_pipeline_recovers_the_unique_solution() {
    let program = Arc::new(ConstraintProgram::sudoku(3));
    // Not every 45-clue subset determines its board, so take the first
    // seeded draw the solver proves unique.
    let (board, mask) = (0..10u64)
        .find_map(|t| {
            let board = generate_solution(3, derive_seed(77, 2 * t));
            let mask = random_clue_mask(81, 45, derive_seed(77, 2 * t + 1));
            let clues: Vec<i32> = board
                .cells
                .iter()
                .zip(&mask)
                .map(|(&c, &m)| if m { c } else { -1 })
                .collect();
            let puzzle = DiscreteBoard::new(81, 9, clues);
            match solve_backtracking(&puzzle, &program).unwrap() {
                SolveOutcome::Unique(solution) => {
                    assert_eq!(
                        solution.cells, board.cells,
                        "solver must find the generating board"
                    );
                    Some((board, mask))
                }
                _ => None,
            }
        })
        .expect("one of ten 45-clue draws should be uniquely solvable");

    // Noisy blanks (reliable clue reads), then the standard pipeline.
    let noise = NoiseConfig::new(0.02, temperature_for_peak(0.9, 9), derive_seed(77, 2));
    let mut inst: Instance<f64> = simulate_perception_with(&board, &mask, &noise, &program, false);
    let raw = inst.dist.clone();
    clamp_evidence(&mut inst, ClampSource::Argmax).unwrap();
    refine(&mut inst, &RefineConfig::default()).unwrap();
    restore_clues(&mut inst.dist, &raw, &mask);
    let result = greedy_decode(&mut inst);

    assert_eq!(result.status, DecodeStatus::Complete);
    assert_eq!(
        result.assignment, board.cells,
        "pipeline must reproduce the unique solution"
    );
}

#[test]
fn saved_corpus_drives_a_perfect_noiseless_benchmark() {
    let suite = SuiteConfig { box_size: 3, count: 10, clue_count: 45, seed: 5 };
    let dir = std::env::temp_dir().join(format!("softcsp-pipeline-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    save_corpus(&dir, &build_corpus(&suite)).unwrap();
    let corpus = load_corpus(&dir).unwrap();
    assert_eq!(corpus.manifest, suite);
    assert_eq!(corpus.boards.len(), 10);

    let noise = NoiseConfig::new(0.0, temperature_for_peak(0.9, 9), 0);
    let pipeline = PipelineConfig { refine_iterations: 10, decode: true, flip_evidence: true };
    let report = run_benchmark(&corpus.manifest, &pipeline, &noise);
    assert_eq!(report.metrics.csr, 1.0, "noiseless decode must satisfy every board");
    assert_eq!(report.metrics.vcsr, 1.0);
    assert_eq!(report.metrics.dead_ends, 0);
    std::fs::remove_dir_all(&dir).unwrap();
}
