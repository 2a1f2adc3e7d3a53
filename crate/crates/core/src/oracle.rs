//! Ground-truth machinery: discrete boards, constraint checkers, an exact
//! backtracking solver, seeded board generation, and naive reference
//! implementations of the soft operators.
//!
//! Two checkers exist on purpose. [`check_constraints`] walks the stored
//! groups; [`verify_independent`] re-derives the structure from the builder
//! parameters with separate index arithmetic and shares no code with it.
//! Agreement between the two is part of the acceptance surface, so resist
//! any urge to fold them together.

use rand::Rng;
use thiserror::Error;

use crate::assignment::SoftAssignment;
use crate::program::{ConstraintGroup, ConstraintProgram, GroupKind, Provenance};
use crate::rng::rng_from_seed;
use crate::scalar::Real;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("board has unassigned cell {0}")]
    IncompleteBoard(usize),
    #[error("board is {got} cells, program has {expected} positions")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("unsupported program: {0}")]
    UnsupportedProgram(&'static str),
    #[error("instance too large for brute force: {0}")]
    SizeLimit(&'static str),
}

/// Complete or partial discrete assignment; `-1` marks an empty cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteBoard {
    pub n: usize,
    pub k: usize,
    pub cells: Vec<i32>,
}

impl DiscreteBoard {
    pub fn new(n: usize, k: usize, cells: Vec<i32>) -> Self {
        assert_eq!(cells.len(), n, "cell count must match n");
        debug_assert!(cells.iter().all(|&c| c >= -1 && (c as i64) < k as i64));
        Self { n, k, cells }
    }

    pub fn empty(n: usize, k: usize) -> Self {
        Self { n, k, cells: vec![-1; n] }
    }

    pub fn is_complete(&self) -> bool {
        self.cells.iter().all(|&c| c >= 0)
    }
}

/// Aggregate quality of a benchmark run. `csr` checks the stored groups,
/// `vcsr` the independently re-derived ones; the two are expected to agree
/// board for board.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Metrics {
    /// Fraction of cells matching the reference labels.
    pub sym_acc: f64,
    /// Fraction of boards with every cell correct.
    pub board_acc: f64,
    /// Fraction of boards satisfying all constraints.
    pub csr: f64,
    /// Same fraction per the independent verifier.
    pub vcsr: f64,
    /// Boards evaluated.
    pub boards: usize,
    /// Boards that hit at least one dead end while decoding.
    pub dead_ends: usize,
}

fn check_complete(board: &DiscreteBoard, program: &ConstraintProgram) -> Result<(), OracleError> {
    if board.n != program.positions() {
        return Err(OracleError::ShapeMismatch {
            expected: program.positions(),
            got: board.n,
        });
    }
    if let Some(pos) = board.cells.iter().position(|&c| c < 0) {
        return Err(OracleError::IncompleteBoard(pos));
    }
    Ok(())
}

/// True iff the complete board satisfies every group: exactly-one groups have
/// pairwise-distinct symbols (each symbol exactly once when |members| = k),
/// sum groups hit their target.
pub fn check_constraints(
    board: &DiscreteBoard,
    program: &ConstraintProgram,
) -> Result<bool, OracleError> {
    check_complete(board, program)?;
    let k = program.symbols();
    let mut seen = vec![false; k];
    for group in program.groups() {
        match group.kind {
            GroupKind::ExactlyOne => {
                seen.iter_mut().for_each(|s| *s = false);
                for &m in &group.members {
                    let sym = board.cells[m] as usize;
                    if seen[sym] {
                        return Ok(false);
                    }
                    seen[sym] = true;
                }
            }
            GroupKind::SumEq => {
                let sum: i64 = group.members.iter().map(|&m| board.cells[m] as i64).sum();
                if sum != group.target.expect("validated sum group has a target") {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Validity per structure re-derived from the builder parameters. Rejects
/// hand-written programs: with no recorded pedigree there is nothing to
/// re-derive against.
pub fn verify_independent(
    board: &DiscreteBoard,
    program: &ConstraintProgram,
) -> Result<bool, OracleError> {
    check_complete(board, program)?;
    match program.provenance() {
        Provenance::Sudoku { box_size } => {
            let s = box_size * box_size;
            let at = |r: usize, c: usize| board.cells[r * s + c] as usize;
            // Rows and columns: each symbol exactly once.
            for r in 0..s {
                let mut row_seen = vec![false; s];
                let mut col_seen = vec![false; s];
                for c in 0..s {
                    if row_seen[at(r, c)] || col_seen[at(c, r)] {
                        return Ok(false);
                    }
                    row_seen[at(r, c)] = true;
                    col_seen[at(c, r)] = true;
                }
            }
            // Boxes.
            for br in 0..box_size {
                for bc in 0..box_size {
                    let mut seen = vec![false; s];
                    for dr in 0..box_size {
                        for dc in 0..box_size {
                            let sym = at(br * box_size + dr, bc * box_size + dc);
                            if seen[sym] {
                                return Ok(false);
                            }
                            seen[sym] = true;
                        }
                    }
                }
            }
            Ok(true)
        }
        Provenance::Addition { addends, target } => {
            let sum: i64 = (0..addends).map(|i| board.cells[i] as i64).sum();
            Ok(sum == target)
        }
        Provenance::Handwritten => Err(OracleError::UnsupportedProgram(
            "hand-written program has no generator provenance",
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveOutcome {
    /// Exactly one completion; carried inline.
    Unique(DiscreteBoard),
    /// At least two completions (search stops at the second).
    Multiple,
    Unsatisfiable,
}

struct Search<'a> {
    program: &'a ConstraintProgram,
    cells: Vec<i32>,
    /// Feasible-symbol bitmask per cell, maintained by forward checking.
    feasible: Vec<u64>,
    k: usize,
}

impl<'a> Search<'a> {
    /// Peers = positions sharing at least one group with `pos`.
    fn peers(&self, pos: usize) -> impl Iterator<Item = usize> + '_ {
        self.program
            .membership(pos)
            .iter()
            .flat_map(|&g| self.program.groups()[g].members.iter().copied())
            .filter(move |&q| q != pos)
    }

    fn assign(&mut self, pos: usize, sym: usize) -> Vec<(usize, u64)> {
        self.cells[pos] = sym as i32;
        let mut undo = Vec::new();
        let bit = 1u64 << sym;
        for q in self.peers(pos).collect::<Vec<_>>() {
            if self.cells[q] < 0 && self.feasible[q] & bit != 0 {
                undo.push((q, self.feasible[q]));
                self.feasible[q] &= !bit;
            }
        }
        undo
    }

    fn unassign(&mut self, pos: usize, undo: Vec<(usize, u64)>) {
        self.cells[pos] = -1;
        for (q, mask) in undo {
            self.feasible[q] = mask;
        }
    }

    /// Unassigned cell with the fewest feasible symbols, lowest index on ties.
    fn select(&self) -> Option<usize> {
        let mut best: Option<(usize, u32)> = None;
        for pos in 0..self.cells.len() {
            if self.cells[pos] >= 0 {
                continue;
            }
            let count = self.feasible[pos].count_ones();
            if best.is_none_or(|(_, c)| count < c) {
                best = Some((pos, count));
            }
        }
        best.map(|(pos, _)| pos)
    }

    /// Count completions up to `limit`, storing the first in `found`.
    fn count(&mut self, limit: usize, found: &mut Option<Vec<i32>>) -> usize {
        let Some(pos) = self.select() else {
            if found.is_none() {
                *found = Some(self.cells.clone());
            }
            return 1;
        };
        let mut total = 0;
        for sym in 0..self.k {
            if self.feasible[pos] & (1 << sym) == 0 {
                continue;
            }
            let undo = self.assign(pos, sym);
            total += self.count(limit - total, found);
            self.unassign(pos, undo);
            if total >= limit {
                break;
            }
        }
        total
    }
}

fn start_search<'a>(
    board: &DiscreteBoard,
    program: &'a ConstraintProgram,
) -> Result<Option<Search<'a>>, OracleError> {
    if board.n != program.positions() {
        return Err(OracleError::ShapeMismatch {
            expected: program.positions(),
            got: board.n,
        });
    }
    let k = program.symbols();
    if k > 64 {
        return Err(OracleError::UnsupportedProgram("solver is limited to 64 symbols"));
    }
    for g in program.groups() {
        if g.kind != GroupKind::ExactlyOne || g.members.len() != k {
            return Err(OracleError::UnsupportedProgram(
                "solver needs exactly-one groups with |members| = k",
            ));
        }
    }
    let full = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
    let mut search = Search {
        program,
        cells: vec![-1; board.n],
        feasible: vec![full; board.n],
        k,
    };
    // Seed the fixed cells; a direct conflict is unsatisfiable before search.
    for pos in 0..board.n {
        let sym = board.cells[pos];
        if sym < 0 {
            continue;
        }
        if search.feasible[pos] & (1 << sym) == 0 {
            return Ok(None);
        }
        search.assign(pos, sym as usize);
    }
    Ok(Some(search))
}

/// Exhaustive solution count (early exit at two) for Latin-regime programs:
/// depth-first search with forward checking, minimum-remaining-values cell
/// order, symbols ascending. Fully deterministic.
pub fn solve_backtracking(
    board: &DiscreteBoard,
    program: &ConstraintProgram,
) -> Result<SolveOutcome, OracleError> {
    let Some(mut search) = start_search(board, program)? else {
        return Ok(SolveOutcome::Unsatisfiable);
    };
    let mut found = None;
    match search.count(2, &mut found) {
        0 => Ok(SolveOutcome::Unsatisfiable),
        1 => {
            let cells = found.expect("count == 1 stores the solution");
            Ok(SolveOutcome::Unique(DiscreteBoard::new(board.n, board.k, cells)))
        }
        _ => Ok(SolveOutcome::Multiple),
    }
}

/// Complete random Latin board for box size `b`: randomized backtracking,
/// cells in row-major order, symbol order shuffled per cell by ChaCha8.
pub fn generate_solution(box_size: usize, seed: u64) -> DiscreteBoard {
    let program = ConstraintProgram::sudoku(box_size);
    let s = box_size * box_size;
    let n = s * s;
    let mut rng = rng_from_seed(seed);
    let empty = DiscreteBoard::empty(n, s);
    let mut search = start_search(&empty, &program)
        .expect("sudoku program is solver-supported")
        .expect("empty board has no conflicts");
    let mut orders: Vec<Vec<usize>> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut order: Vec<usize> = (0..s).collect();
        // Fisher-Yates; draws consumed up front so backtracking cannot skew
        // the stream.
        for i in (1..s).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        orders.push(order);
    }
    fn fill(search: &mut Search, orders: &[Vec<usize>], pos: usize) -> bool {
        if pos == orders.len() {
            return true;
        }
        for &sym in &orders[pos] {
            if search.feasible[pos] & (1 << sym) == 0 {
                continue;
            }
            let undo = search.assign(pos, sym);
            if fill(search, orders, pos + 1) {
                return true;
            }
            search.unassign(pos, undo);
        }
        false
    }
    assert!(fill(&mut search, &orders, 0), "empty board is always completable");
    DiscreteBoard::new(n, s, search.cells)
}

/// Exactly `clue_count` positions drawn without replacement: Fisher-Yates
/// shuffle of all positions, first `clue_count` become evidence.
pub fn random_clue_mask(n: usize, clue_count: usize, seed: u64) -> Vec<bool> {
    assert!(clue_count <= n, "cannot reveal {clue_count} of {n} cells");
    let mut rng = rng_from_seed(seed);
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let mut mask = vec![false; n];
    for &pos in order.iter().take(clue_count) {
        mask[pos] = true;
    }
    mask
}

/// Reference exactly-one operator: the definition, one product per entry,
/// no shared scratch with the kernel path.
pub fn naive_tp_exactly_one<S: Real>(
    p: &SoftAssignment<S>,
    group: &ConstraintGroup,
) -> Result<Vec<Vec<S>>, OracleError> {
    if group.kind != GroupKind::ExactlyOne {
        return Err(OracleError::UnsupportedProgram("expected an exactly-one group"));
    }
    if p.positions() * p.symbols() > 1000 {
        return Err(OracleError::SizeLimit("naive exactly-one capped at n * k <= 1000"));
    }
    let k = p.symbols();
    let mut out = Vec::with_capacity(group.members.len());
    for &i in &group.members {
        let mut row = Vec::with_capacity(k);
        for s in 0..k {
            let mut acc = p.get(i, s);
            for &j in &group.members {
                if j != i {
                    acc *= S::one() - p.get(j, s);
                }
            }
            row.push(acc);
        }
        out.push(row);
    }
    Ok(out)
}

/// Reference sum operator: exhaustive enumeration of the other members'
/// digit tuples.
pub fn naive_tp_sum<S: Real>(dists: &[&[S]], target: i64) -> Result<Vec<Vec<S>>, OracleError> {
    let n = dists.len();
    if n > 6 {
        return Err(OracleError::SizeLimit("naive sum capped at 6 addends"));
    }
    if n == 0 {
        return Err(OracleError::UnsupportedProgram("need at least one distribution"));
    }
    let k = dists[0].len();
    assert!(dists.iter().all(|d| d.len() == k), "mixed arities");

    // P(sum of `others` = t) by recursive enumeration.
    fn mass<S: Real>(others: &[&[S]], t: i64) -> S {
        match others.split_first() {
            None => {
                if t == 0 {
                    S::one()
                } else {
                    S::zero()
                }
            }
            Some((first, rest)) => {
                let mut acc = S::zero();
                for (d, &pd) in first.iter().enumerate() {
                    if pd != S::zero() {
                        acc += pd * mass(rest, t - d as i64);
                    }
                }
                acc
            }
        }
    }

    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let others: Vec<&[S]> = (0..n).filter(|&j| j != i).map(|j| dists[j]).collect();
        let mut row = Vec::with_capacity(k);
        for d in 0..k {
            row.push(dists[i][d] * mass(&others, target - d as i64));
        }
        out.push(row);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{tp_exactly_one, tp_sum};

    #[test]
    fn generated_solutions_are_valid() {
        for b in 2..=3 {
            for seed in 0..5 {
                let board = generate_solution(b, seed);
                let program = ConstraintProgram::sudoku(b);
                assert_eq!(check_constraints(&board, &program), Ok(true));
                assert_eq!(verify_independent(&board, &program), Ok(true));
            }
        }
    }

    #[test]
    fn generation_is_seed_deterministic() {
        assert_eq!(generate_solution(3, 77), generate_solution(3, 77));
        assert_ne!(generate_solution(3, 77), generate_solution(3, 78));
    }

    #[test]
    fn checkers_reject_a_row_swap() {
        let program = ConstraintProgram::sudoku(3);
        let mut board = generate_solution(3, 1);
        // Swapping two cells of one row keeps the row a permutation but
        // breaks their columns.
        board.cells.swap(0, 1);
        assert_eq!(check_constraints(&board, &program), Ok(false));
        assert_eq!(verify_independent(&board, &program), Ok(false));
    }

    #[test]
    fn checkers_agree_on_mutations() {
        let program = ConstraintProgram::sudoku(2);
        let mut rng = rng_from_seed(5);
        for seed in 0..50 {
            let mut board = generate_solution(2, seed);
            // Corrupt a random cell half the time.
            if rng.random::<bool>() {
                let pos = rng.random_range(0..16);
                board.cells[pos] = rng.random_range(0..4);
            }
            assert_eq!(
                check_constraints(&board, &program),
                verify_independent(&board, &program),
                "checkers disagree on {:?}",
                board.cells
            );
        }
    }

    #[test]
    fn incomplete_board_is_an_error() {
        let program = ConstraintProgram::sudoku(2);
        let mut board = generate_solution(2, 0);
        board.cells[7] = -1;
        assert_eq!(
            check_constraints(&board, &program),
            Err(OracleError::IncompleteBoard(7))
        );
        assert_eq!(
            verify_independent(&board, &program),
            Err(OracleError::IncompleteBoard(7))
        );
    }

    #[test]
    fn verify_needs_provenance() {
        let program: ConstraintProgram =
            crate::format::serialize_program(&ConstraintProgram::sudoku(2))
                .parse()
                .unwrap();
        let board = generate_solution(2, 3);
        assert!(matches!(
            verify_independent(&board, &program),
            Err(OracleError::UnsupportedProgram(_))
        ));
    }

    #[test]
    fn verify_addition_sums() {
        let program = ConstraintProgram::addition(3, 10, 15).unwrap();
        let good = DiscreteBoard::new(3, 10, vec![9, 5, 1]);
        let bad = DiscreteBoard::new(3, 10, vec![9, 5, 2]);
        assert_eq!(verify_independent(&good, &program), Ok(true));
        assert_eq!(verify_independent(&bad, &program), Ok(false));
        assert_eq!(check_constraints(&good, &program), Ok(true));
        assert_eq!(check_constraints(&bad, &program), Ok(false));
    }

    #[test]
    fn solver_confirms_solved_board() {
        let program = ConstraintProgram::sudoku(2);
        let board = generate_solution(2, 11);
        match solve_backtracking(&board, &program).unwrap() {
            SolveOutcome::Unique(sol) => assert_eq!(sol, board),
            other => panic!("solved board must be its own unique completion, got {other:?}"),
        }
    }

    #[test]
    fn solver_restores_single_blank() {
        let program = ConstraintProgram::sudoku(2);
        let board = generate_solution(2, 13);
        for pos in [0, 5, 15] {
            let mut partial = board.clone();
            partial.cells[pos] = -1;
            match solve_backtracking(&partial, &program).unwrap() {
                SolveOutcome::Unique(sol) => assert_eq!(sol, board),
                other => panic!("one blank in a Latin board is forced, got {other:?}"),
            }
        }
    }

    #[test]
    fn empty_board_has_many_solutions() {
        let program = ConstraintProgram::sudoku(2);
        let board = DiscreteBoard::empty(16, 4);
        assert_eq!(solve_backtracking(&board, &program).unwrap(), SolveOutcome::Multiple);
    }

    #[test]
    fn conflicting_clues_unsatisfiable() {
        let program = ConstraintProgram::sudoku(2);
        let mut board = DiscreteBoard::empty(16, 4);
        board.cells[0] = 2;
        board.cells[1] = 2; // same row
        assert_eq!(
            solve_backtracking(&board, &program).unwrap(),
            SolveOutcome::Unsatisfiable
        );
    }

    #[test]
    fn solver_rejects_sum_programs() {
        let program = ConstraintProgram::addition(2, 4, 3).unwrap();
        let board = DiscreteBoard::empty(2, 4);
        assert!(matches!(
            solve_backtracking(&board, &program),
            Err(OracleError::UnsupportedProgram(_))
        ));
    }

    #[test]
    fn clue_masks_count_and_determinism() {
        let mask = random_clue_mask(81, 45, 9);
        assert_eq!(mask.iter().filter(|&&m| m).count(), 45);
        assert_eq!(mask, random_clue_mask(81, 45, 9));
        assert_ne!(mask, random_clue_mask(81, 45, 10));
        assert_eq!(random_clue_mask(81, 0, 1).iter().filter(|&&m| m).count(), 0);
        assert_eq!(random_clue_mask(81, 81, 1).iter().filter(|&&m| m).count(), 81);
    }

    #[test]
    fn naive_matches_kernel_exactly_one() {
        let mut rng = rng_from_seed(21);
        let p = SoftAssignment::<f64>::random(&mut rng, 9, 9);
        let group = ConstraintGroup::exactly_one("g", (0..9).collect());
        let fast = tp_exactly_one(&p, &group).unwrap();
        let slow = naive_tp_exactly_one(&p, &group).unwrap();
        for slot in 0..9 {
            for s in 0..9 {
                assert!((fast.get(slot, s) - slow[slot][s]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn naive_matches_kernel_sum() {
        let mut rng = rng_from_seed(22);
        let p = SoftAssignment::<f64>::random(&mut rng, 4, 10);
        let rows: Vec<&[f64]> = (0..4).map(|i| p.row(i)).collect();
        for target in [0, 14, 27] {
            let fast = tp_sum(&rows, target).unwrap();
            let slow = naive_tp_sum(&rows, target).unwrap();
            for i in 0..4 {
                for d in 0..10 {
                    assert!((fast[i][d] - slow[i][d]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn brute_force_size_limits() {
        let p = SoftAssignment::<f64>::uniform(200, 9);
        let group = ConstraintGroup::exactly_one("g", (0..9).collect());
        assert!(matches!(
            naive_tp_exactly_one(&p, &group),
            Err(OracleError::SizeLimit(_))
        ));
        let u = [0.25; 4];
        let rows: Vec<&[f64]> = (0..7).map(|_| &u[..]).collect();
        assert!(matches!(naive_tp_sum(&rows, 5), Err(OracleError::SizeLimit(_))));
    }
}
