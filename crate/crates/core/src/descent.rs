//! Gradient descent on the fixed-point residual: the loss is differentiable
//! all the way down, so plain descent over per-position logits can solve
//! small boards with no search at all.
//!
//! The free parameters are logits, one row per non-evidence position,
//! initialized to `ln(max(p, prob_epsilon))`. Each step reconstructs the
//! distribution by rowwise softmax, evaluates the residual loss and its
//! gradient with respect to the raw probabilities, chains that gradient
//! through the softmax Jacobian, and takes a fixed-size step. Evidence rows
//! are copied from the input and never move.

use thiserror::Error;

use crate::kernel::{residual_grad, residual_loss, KernelError};
use crate::refine::Instance;
use crate::scalar::Real;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DescentError {
    #[error("loss or gradient became non-finite at step {step}")]
    NonFinite { step: usize },
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, Clone)]
pub struct DescentReport<S: Real = f64> {
    /// The input instance with its distribution at the final iterate.
    pub instance: Instance<S>,
    /// Loss per iterate, including both endpoints: `steps + 1` entries.
    pub losses: Vec<S>,
}

/// Rowwise softmax of `logits` into `out`, max-subtracted for stability.
fn softmax_row<S: Real>(logits: &[S], out: &mut [S]) {
    let max = logits.iter().copied().fold(S::neg_infinity(), S::max);
    let mut sum = S::zero();
    for (o, &l) in out.iter_mut().zip(logits) {
        let e = (l - max).exp();
        *o = e;
        sum += e;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

/// Minimize the residual loss by fixed-step gradient descent on logits.
pub fn descent_solve<S: Real>(
    inst: &Instance<S>,
    steps: usize,
    step_size: S,
) -> Result<DescentReport<S>, DescentError> {
    let n = inst.dist.positions();
    let k = inst.dist.symbols();
    let mut result = inst.clone();
    let mut logits: Vec<S> = inst
        .dist
        .data()
        .iter()
        .map(|&v| v.max(S::prob_epsilon()).ln())
        .collect();
    let mut losses = Vec::with_capacity(steps + 1);

    let reconstruct = |logits: &[S], inst: &mut Instance<S>| {
        for pos in 0..n {
            if inst.mask[pos] {
                continue;
            }
            let row = inst.dist.row_mut(pos);
            softmax_row(&logits[pos * k..(pos + 1) * k], row);
        }
    };

    reconstruct(&logits, &mut result);
    for step in 0..=steps {
        let loss = residual_loss(&result.dist, &result.program)?.total;
        if !loss.is_finite() {
            return Err(DescentError::NonFinite { step });
        }
        losses.push(loss);
        if step == steps {
            break;
        }
        let grad = residual_grad(&result.dist, &result.program)?;
        for pos in 0..n {
            if result.mask[pos] {
                continue;
            }
            let p = result.dist.row(pos);
            let g = &grad[pos * k..(pos + 1) * k];
            // Softmax Jacobian: dL/dtheta_a = p_a * (g_a - sum_s g_s * p_s).
            let inner: S = g.iter().zip(p).map(|(&gs, &ps)| gs * ps).sum();
            for s in 0..k {
                let dtheta = p[s] * (g[s] - inner);
                if !dtheta.is_finite() {
                    return Err(DescentError::NonFinite { step });
                }
                logits[pos * k + s] -= step_size * dtheta;
            }
        }
        reconstruct(&logits, &mut result);
    }
    Ok(DescentReport { instance: result, losses })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::assignment::SoftAssignment;
    use crate::decode::{greedy_decode, DecodeStatus};
    use crate::oracle::{check_constraints, generate_solution, random_clue_mask, DiscreteBoard};
    use crate::program::ConstraintProgram;
    use crate::refine::{clamp_evidence, ClampSource};

    #[test]
    fn valid_one_hot_is_already_a_minimum() {
        let board = generate_solution(2, 17);
        let program = Arc::new(ConstraintProgram::sudoku(2));
        let dist = SoftAssignment::<f64>::one_hot(&board.cells, 4).unwrap();
        let inst = Instance::new(program, dist.clone(), vec![false; 16], board.cells);
        let report = descent_solve(&inst, 5, 0.5).unwrap();
        for &l in &report.losses {
            assert!(l < 1e-20, "loss {l} should be numerically zero throughout");
        }
        for pos in 0..16 {
            for s in 0..4 {
                let delta = (report.instance.dist.get(pos, s) - dist.get(pos, s)).abs();
                // Softmax round-trip through clamped logits costs ~k * 1e-12.
                assert!(delta < 1e-9, "entry ({pos}, {s}) moved by {delta}");
            }
        }
    }

    #[test]
    fn descent_solves_a_clued_board() {
        let board = generate_solution(2, 23);
        let program = Arc::new(ConstraintProgram::sudoku(2));
        let mask = random_clue_mask(16, 8, 23);
        let mut inst = Instance::new(
            Arc::clone(&program),
            SoftAssignment::<f64>::uniform(16, 4),
            mask,
            board.cells.clone(),
        );
        clamp_evidence(&mut inst, ClampSource::Labels).unwrap();
        let report = descent_solve(&inst, 2000, 1.0).unwrap();
        assert_eq!(report.losses.len(), 2001);
        assert!(
            report.losses.last().unwrap() < &1e-3,
            "descent should reach a near-solution, got {}",
            report.losses.last().unwrap()
        );
        assert!(report.losses.last().unwrap() < report.losses.first().unwrap());
        let mut solved = report.instance;
        let result = greedy_decode(&mut solved);
        assert_eq!(result.status, DecodeStatus::Complete);
        let decoded = DiscreteBoard::new(16, 4, result.assignment);
        assert_eq!(check_constraints(&decoded, &program), Ok(true));
    }

    #[test]
    fn evidence_rows_never_move() {
        let board = generate_solution(2, 29);
        let program = Arc::new(ConstraintProgram::sudoku(2));
        let mask = random_clue_mask(16, 6, 29);
        let mut inst = Instance::new(
            program,
            SoftAssignment::<f64>::uniform(16, 4),
            mask.clone(),
            board.cells,
        );
        clamp_evidence(&mut inst, ClampSource::Labels).unwrap();
        let before = inst.dist.clone();
        let report = descent_solve(&inst, 50, 0.5).unwrap();
        for pos in 0..16 {
            if mask[pos] {
                assert_eq!(
                    report.instance.dist.row(pos),
                    before.row(pos),
                    "evidence row {pos} moved"
                );
            }
        }
    }

    #[test]
    fn first_step_is_deterministic() {
        let program = Arc::new(ConstraintProgram::sudoku(3));
        let inst = Instance::new(
            program,
            SoftAssignment::<f64>::uniform(81, 9),
            vec![false; 81],
            vec![-1; 81],
        );
        let a = descent_solve(&inst, 1, 0.5).unwrap();
        let b = descent_solve(&inst, 1, 0.5).unwrap();
        assert_eq!(a.losses, b.losses);
        assert_eq!(a.instance.dist, b.instance.dist);
    }

    #[test]
    fn zero_steps_reports_initial_loss_only() {
        let program = Arc::new(ConstraintProgram::sudoku(2));
        let inst = Instance::new(
            program,
            SoftAssignment::<f64>::uniform(16, 4),
            vec![false; 16],
            vec![-1; 16],
        );
        let report = descent_solve(&inst, 0, 0.5).unwrap();
        assert_eq!(report.losses.len(), 1);
        assert!(report.losses[0] > 0.0, "uniform board is not a fixed point");
    }
}
