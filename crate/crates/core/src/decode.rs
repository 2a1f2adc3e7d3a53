//! Constrained greedy decoding: turn a refined soft assignment into a
//! discrete one by committing positions most-confident-first and propagating
//! each commitment through its exactly-one groups.
//!
//! Evidence positions commit first (in position order) to the argmax their
//! row had at entry. After that, each round commits the uncommitted position
//! with the highest single-symbol probability, zeroes that symbol in every
//! uncommitted exactly-one peer, and renormalizes the touched rows. A row
//! whose mass collapses below [`Real::dead_mass`] is a dead end: the
//! position is marked dead and skipped; there is no backtracking.
//!
//! Ties break deterministically: lowest position first, then lowest symbol.

use crate::assignment::SoftAssignment;
use crate::program::GroupKind;
use crate::refine::Instance;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeStatus {
    /// Every position committed.
    Complete,
    /// At least one position died along the way.
    DeadEnd,
}

/// One committed position, in commitment order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Commit<S: Real = f64> {
    pub position: usize,
    pub symbol: usize,
    /// The probability the row gave the symbol at commit time.
    pub confidence: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult<S: Real = f64> {
    /// Discrete assignment; `-1` at dead positions.
    pub assignment: Vec<i32>,
    pub status: DecodeStatus,
    pub trace: Vec<Commit<S>>,
    pub dead_positions: Vec<usize>,
}

/// Copy evidence rows of `pre` over `post`, undoing whatever refinement did
/// to them. `pre` is typically the raw perception output.
pub fn restore_clues<S: Real>(
    post: &mut SoftAssignment<S>,
    pre: &SoftAssignment<S>,
    mask: &[bool],
) {
    assert_eq!(post.positions(), pre.positions(), "assignment heights differ");
    assert_eq!(post.positions(), mask.len(), "mask length mismatch");
    for pos in 0..post.positions() {
        if mask[pos] {
            post.row_mut(pos).copy_from_slice(pre.row(pos));
        }
    }
}

/// Symbols with strictly positive mass at `pos`, ascending.
pub fn feasible_symbols<S: Real>(inst: &Instance<S>, pos: usize) -> Vec<usize> {
    (0..inst.dist.symbols())
        .filter(|&s| inst.dist.get(pos, s) > S::zero())
        .collect()
}

struct Decoder<'a, S: Real> {
    inst: &'a mut Instance<S>,
    committed: Vec<bool>,
    dead: Vec<bool>,
    result: DecodeResult<S>,
}

impl<'a, S: Real> Decoder<'a, S> {
    fn commit(&mut self, pos: usize, sym: usize) {
        let k = self.inst.dist.symbols();
        let confidence = self.inst.dist.get(pos, sym);
        self.committed[pos] = true;
        self.result.assignment[pos] = sym as i32;
        self.result.trace.push(Commit { position: pos, symbol: sym, confidence });
        let row = self.inst.dist.row_mut(pos);
        for s in 0..k {
            row[s] = if s == sym { S::one() } else { S::zero() };
        }
        self.propagate(pos, sym);
    }

    /// Remove `sym` from every uncommitted exactly-one peer of `pos`.
    fn propagate(&mut self, pos: usize, sym: usize) {
        let program = std::sync::Arc::clone(&self.inst.program);
        for &g in program.membership(pos) {
            let group = &program.groups()[g];
            if group.kind != GroupKind::ExactlyOne {
                continue;
            }
            for &peer in &group.members {
                if peer == pos || self.committed[peer] || self.dead[peer] {
                    continue;
                }
                if self.inst.dist.get(peer, sym) == S::zero() {
                    continue;
                }
                self.inst.dist.row_mut(peer)[sym] = S::zero();
                let mass: S = self.inst.dist.row(peer).iter().copied().sum();
                if mass < S::dead_mass() {
                    self.mark_dead(peer);
                } else {
                    self.inst.dist.row_mut(peer).iter_mut().for_each(|v| *v /= mass);
                }
            }
        }
    }

    fn mark_dead(&mut self, pos: usize) {
        self.dead[pos] = true;
        self.result.dead_positions.push(pos);
    }

    /// Highest current max-probability among live uncommitted positions;
    /// ties by position, then symbol (argmax_row already breaks low).
    fn best(&self) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize, S)> = None;
        for pos in 0..self.committed.len() {
            if self.committed[pos] || self.dead[pos] {
                continue;
            }
            let sym = self.inst.dist.argmax_row(pos);
            let p = self.inst.dist.get(pos, sym);
            if best.is_none_or(|(_, _, q)| p > q) {
                best = Some((pos, sym, p));
            }
        }
        best.map(|(pos, sym, _)| (pos, sym))
    }
}

/// Decode `inst` in place; the instance's distribution ends one-hot at the
/// committed positions.
pub fn greedy_decode<S: Real>(inst: &mut Instance<S>) -> DecodeResult<S> {
    let n = inst.dist.positions();
    let mut dec = Decoder {
        inst,
        committed: vec![false; n],
        dead: vec![false; n],
        result: DecodeResult {
            assignment: vec![-1; n],
            status: DecodeStatus::Complete,
            trace: Vec::with_capacity(n),
            dead_positions: Vec::new(),
        },
    };
    // Phase 1: evidence locks to its current argmax in position order. A
    // one-hot evidence row contradicted by an earlier lock goes all-zero
    // during propagation and is dead by the time its turn comes.
    for pos in 0..n {
        if !dec.inst.mask[pos] || dec.dead[pos] {
            continue;
        }
        let sym = dec.inst.dist.argmax_row(pos);
        dec.commit(pos, sym);
    }
    while let Some((pos, sym)) = dec.best() {
        dec.commit(pos, sym);
    }
    if !dec.result.dead_positions.is_empty() {
        dec.result.status = DecodeStatus::DeadEnd;
    }
    dec.result
}
