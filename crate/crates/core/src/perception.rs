//! Simulated perception: turn a ground-truth board into soft rows the way a
//! calibrated classifier head would — a temperature-controlled peak on one
//! symbol, the rest uniform — with an occasional misread that moves the peak
//! to a uniformly random wrong symbol.

use std::sync::Arc;

use rand::Rng;

use crate::assignment::SoftAssignment;
use crate::oracle::DiscreteBoard;
use crate::program::ConstraintProgram;
use crate::refine::Instance;
use crate::rng::rng_from_seed;
use crate::scalar::Real;

/// Noise model for [`simulate_perception`]. Parameters stay `f64` regardless
/// of the pipeline scalar; the draws happen in double precision either way.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NoiseConfig {
    /// Probability that a cell's peak lands on a wrong symbol.
    pub flip_rate: f64,
    /// Softmax temperature of the per-cell distribution.
    pub temperature: f64,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn new(flip_rate: f64, temperature: f64, seed: u64) -> Self {
        assert!((0.0..=1.0).contains(&flip_rate), "flip rate must be a probability");
        assert!(temperature > 0.0, "temperature must be positive");
        Self { flip_rate, temperature, seed }
    }
}

/// Peak mass of a two-level softmax over `k` symbols at temperature `t`:
/// logit 1 on the peak, 0 elsewhere.
pub fn peak_mass(t: f64, k: usize) -> f64 {
    assert!(k >= 2, "need at least two symbols");
    1.0 / (1.0 + (k as f64 - 1.0) * (-1.0 / t).exp())
}

/// Temperature that puts `peak` mass on the top symbol; inverse of
/// [`peak_mass`] in its strictly-decreasing region.
pub fn temperature_for_peak(peak: f64, k: usize) -> f64 {
    let uniform = 1.0 / k as f64;
    assert!(peak > uniform && peak < 1.0, "peak must lie in (1/k, 1)");
    1.0 / (peak * (k as f64 - 1.0) / (1.0 - peak)).ln()
}

/// Soften a complete board into per-cell distributions and flip a fraction
/// of peaks. Clue cells flip like any other; see
/// [`simulate_perception_with`] to exempt them.
pub fn simulate_perception<S: Real>(
    board: &DiscreteBoard,
    mask: &[bool],
    noise: &NoiseConfig,
    program: &Arc<ConstraintProgram>,
) -> Instance<S> {
    simulate_perception_with(board, mask, noise, program, true)
}

/// As [`simulate_perception`], but with `flip_evidence = false` the masked
/// cells always peak on the true symbol, modeling a perception head whose
/// clue readings are reliable. The RNG stream is consumed identically either
/// way, so the two variants agree everywhere no flip fires.
pub fn simulate_perception_with<S: Real>(
    board: &DiscreteBoard,
    mask: &[bool],
    noise: &NoiseConfig,
    program: &Arc<ConstraintProgram>,
    flip_evidence: bool,
) -> Instance<S> {
    assert!(board.is_complete(), "perception needs a fully labeled board");
    assert_eq!(board.n, program.positions(), "board size must match program");
    assert_eq!(board.n, mask.len(), "mask length must match board");
    let k = board.k;
    let peak = peak_mass(noise.temperature, k);
    let rest = (1.0 - peak) / (k as f64 - 1.0);
    let mut rng = rng_from_seed(noise.seed);
    let mut data = Vec::with_capacity(board.n * k);
    for pos in 0..board.n {
        let truth = board.cells[pos] as usize;
        // Both draws happen unconditionally so the stream never depends on
        // the mask or the flip outcome.
        let u: f64 = rng.random();
        let wrong = rng.random_range(0..k - 1);
        let flip = u < noise.flip_rate && (flip_evidence || !mask[pos]);
        let top = if flip {
            if wrong >= truth { wrong + 1 } else { wrong }
        } else {
            truth
        };
        for s in 0..k {
            let v = if s == top { peak } else { rest };
            data.push(S::from_f64_lossy(v));
        }
    }
    let dist = SoftAssignment::new(board.n, k, data)
        .expect("softened one-hot rows are stochastic by construction");
    let labels = board.cells.clone();
    Instance::new(Arc::clone(program), dist, mask.to_vec(), labels)
}
