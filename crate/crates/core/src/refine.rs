//! Fixed-point refinement: repeatedly replace each row by the mean of its
//! groups' operator images, renormalize, and re-clamp evidence.
//!
//! One step: for every group, compute the consequence image of its members;
//! for every position, average the images of all groups containing it, then
//! normalize the averaged row back onto the simplex. Positions in no group
//! keep their row. Rows whose averaged mass collapses below
//! [`Real::dead_mass`] have no information left; the fallback decides what
//! replaces them.

use std::sync::Arc;

use thiserror::Error;

use crate::assignment::SoftAssignment;
use crate::kernel::{tp_image, KernelError};
use crate::program::ConstraintProgram;
use crate::scalar::Real;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RefineError {
    #[error("position {0} is evidence but has no label")]
    MissingLabel(usize),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// A problem instance in flight: the program, the current soft assignment,
/// which positions are evidence, and the reference labels (`-1` = unknown).
#[derive(Debug, Clone)]
pub struct Instance<S: Real = f64> {
    pub program: Arc<ConstraintProgram>,
    pub dist: SoftAssignment<S>,
    /// Evidence mask: `true` positions are clamped during refinement.
    pub mask: Vec<bool>,
    /// Ground-truth labels where known, `-1` elsewhere.
    pub labels: Vec<i32>,
}

impl<S: Real> Instance<S> {
    pub fn new(
        program: Arc<ConstraintProgram>,
        dist: SoftAssignment<S>,
        mask: Vec<bool>,
        labels: Vec<i32>,
    ) -> Self {
        let n = program.positions();
        assert_eq!(dist.positions(), n, "assignment height must match program");
        assert_eq!(mask.len(), n, "mask length must match program");
        assert_eq!(labels.len(), n, "label length must match program");
        Self { program, dist, mask, labels }
    }
}

/// Where clamping takes the evidence symbol from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClampSource {
    /// The stored reference labels; errors if an evidence position has none.
    Labels,
    /// The argmax of the position's current row.
    Argmax,
}

/// What replaces a row whose averaged mass is effectively zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroRowFallback {
    /// Keep the row from before the step.
    #[default]
    KeepPrevious,
    /// Reset to the uniform distribution.
    Uniform,
}

#[derive(Debug, Clone, Copy)]
pub struct RefineConfig {
    pub iterations: usize,
    /// Re-clamp evidence rows after every step (to their values at entry).
    pub reclamp_evidence: bool,
    pub zero_row_fallback: ZeroRowFallback,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            iterations: 10,
            reclamp_evidence: true,
            zero_row_fallback: ZeroRowFallback::KeepPrevious,
        }
    }
}

/// Overwrite evidence rows with one-hot distributions.
pub fn clamp_evidence<S: Real>(
    inst: &mut Instance<S>,
    source: ClampSource,
) -> Result<(), RefineError> {
    let k = inst.dist.symbols();
    for pos in 0..inst.dist.positions() {
        if !inst.mask[pos] {
            continue;
        }
        let sym = match source {
            ClampSource::Labels => {
                let l = inst.labels[pos];
                if l < 0 {
                    return Err(RefineError::MissingLabel(pos));
                }
                l as usize
            }
            ClampSource::Argmax => inst.dist.argmax_row(pos),
        };
        let row = inst.dist.row_mut(pos);
        for s in 0..k {
            row[s] = if s == sym { S::one() } else { S::zero() };
        }
    }
    Ok(())
}

/// Run `cfg.iterations` refinement steps in place.
pub fn refine<S: Real>(inst: &mut Instance<S>, cfg: &RefineConfig) -> Result<(), RefineError> {
    let n = inst.dist.positions();
    let k = inst.dist.symbols();
    let program = Arc::clone(&inst.program);
    // Evidence snapshot taken once at entry; re-clamping restores these rows,
    // not whatever the previous step produced.
    let snapshot: Vec<Vec<S>> = (0..n)
        .map(|pos| {
            if inst.mask[pos] {
                inst.dist.row(pos).to_vec()
            } else {
                Vec::new()
            }
        })
        .collect();
    let mut acc = vec![S::zero(); n * k];
    for _ in 0..cfg.iterations {
        acc.iter_mut().for_each(|a| *a = S::zero());
        for group in program.groups() {
            let image = tp_image(&inst.dist, group)?;
            for (slot, &pos) in group.members.iter().enumerate() {
                for s in 0..k {
                    acc[pos * k + s] += image.get(slot, s);
                }
            }
        }
        for pos in 0..n {
            let groups = program.membership(pos).len();
            if groups == 0 {
                continue;
            }
            let inv = S::one() / S::from_f64_lossy(groups as f64);
            let mass: S = (0..k).map(|s| acc[pos * k + s]).sum::<S>() * inv;
            let row = inst.dist.row_mut(pos);
            if mass < S::dead_mass() {
                match cfg.zero_row_fallback {
                    ZeroRowFallback::KeepPrevious => {}
                    ZeroRowFallback::Uniform => {
                        let u = S::one() / S::from_f64_lossy(k as f64);
                        row.iter_mut().for_each(|v| *v = u);
                    }
                }
                continue;
            }
            for s in 0..k {
                row[s] = acc[pos * k + s] * inv / mass;
            }
        }
        if cfg.reclamp_evidence {
            for pos in 0..n {
                if inst.mask[pos] {
                    inst.dist.row_mut(pos).copy_from_slice(&snapshot[pos]);
                }
            }
        }
    }
    Ok(())
}

/// Fraction of labeled positions whose argmax matches the label.
pub fn sym_accuracy<S: Real>(inst: &Instance<S>) -> Option<f64> {
    let mut labeled = 0usize;
    let mut correct = 0usize;
    for pos in 0..inst.dist.positions() {
        let l = inst.labels[pos];
        if l < 0 {
            continue;
        }
        labeled += 1;
        if inst.dist.argmax_row(pos) == l as usize {
            correct += 1;
        }
    }
    if labeled == 0 {
        return None;
    }
    Some(correct as f64 / labeled as f64)
}
