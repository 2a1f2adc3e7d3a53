//! Soft immediate-consequence operators and the fixed-point residual.
//!
//! For an exactly-one group the operator maps each member/symbol probability
//! to the probability that the member claims the symbol *unopposed*:
//!
//! ```text
//! T(p)[i, s] = p[i, s] * prod over other members j of (1 - p[j, s])
//! ```
//!
//! For a sum group over digit positions the operator keeps the probability
//! that the remaining digits complete the target sum, computed by prefix and
//! suffix convolutions of the member distributions (cost O(N * k * sum range)
//! instead of naive enumeration).
//!
//! The residual loss is the squared distance between an assignment and its
//! image, summed over every group term. Row-stochastic one-hot assignments
//! that satisfy every group are exactly the zero-residual points in the
//! Latin-square regime (all groups exactly-one with |members| = k). The
//! gradient here is with respect to the raw probability entries; softmax or
//! any other parameterization is the caller's chain rule.

use thiserror::Error;

use crate::assignment::SoftAssignment;
use crate::program::{ConstraintGroup, ConstraintProgram, GroupKind};
use crate::scalar::Real;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KernelError {
    #[error("group {group:?} is {found:?}, expected {expected:?}")]
    KindMismatch {
        group: String,
        expected: GroupKind,
        found: GroupKind,
    },
    #[error("assignment is {an} x {ak} but program needs {pn} x {pk}")]
    ShapeMismatch {
        an: usize,
        ak: usize,
        pn: usize,
        pk: usize,
    },
    #[error("sum operator needs at least one distribution")]
    EmptyInput,
    #[error("distribution {index} has {got} symbols, expected {expected}")]
    MixedArity {
        index: usize,
        expected: usize,
        got: usize,
    },
}

/// Operator image restricted to one group: row `slot` corresponds to
/// `members()[slot]`. Rows are not normalized; the operator is contractive,
/// not stochastic.
#[derive(Debug, Clone, PartialEq)]
pub struct TpImage<S: Real = f64> {
    k: usize,
    members: Vec<usize>,
    data: Vec<S>,
}

impl<S: Real> TpImage<S> {
    fn new(k: usize, members: Vec<usize>, data: Vec<S>) -> Self {
        debug_assert_eq!(data.len(), members.len() * k);
        Self { k, members, data }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn row(&self, slot: usize) -> &[S] {
        &self.data[slot * self.k..(slot + 1) * self.k]
    }

    pub fn get(&self, slot: usize, s: usize) -> S {
        self.data[slot * self.k + s]
    }
}

/// Total residual with per-group contributions; `total` is the sum of the
/// contributions in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct LossReport<S: Real = f64> {
    pub total: S,
    pub per_group: Vec<(String, S)>,
}

fn expect_kind(group: &ConstraintGroup, expected: GroupKind) -> Result<(), KernelError> {
    if group.kind != expected {
        return Err(KernelError::KindMismatch {
            group: group.name.clone(),
            expected,
            found: group.kind,
        });
    }
    Ok(())
}

fn check_shape<S: Real>(
    p: &SoftAssignment<S>,
    program: &ConstraintProgram,
) -> Result<(), KernelError> {
    if p.positions() != program.positions() || p.symbols() != program.symbols() {
        return Err(KernelError::ShapeMismatch {
            an: p.positions(),
            ak: p.symbols(),
            pn: program.positions(),
            pk: program.symbols(),
        });
    }
    Ok(())
}

/// Exactly-one operator via leave-one-out prefix/suffix products: O(g * k)
/// for a group of g members.
pub fn tp_exactly_one<S: Real>(
    p: &SoftAssignment<S>,
    group: &ConstraintGroup,
) -> Result<TpImage<S>, KernelError> {
    expect_kind(group, GroupKind::ExactlyOne)?;
    let g = group.members.len();
    let k = p.symbols();
    let mut data = vec![S::zero(); g * k];
    let mut pre = vec![S::one(); g + 1];
    let mut suf = vec![S::one(); g + 1];
    for s in 0..k {
        for j in 0..g {
            pre[j + 1] = pre[j] * (S::one() - p.get(group.members[j], s));
        }
        for j in (0..g).rev() {
            suf[j] = suf[j + 1] * (S::one() - p.get(group.members[j], s));
        }
        for j in 0..g {
            data[j * k + s] = p.get(group.members[j], s) * pre[j] * suf[j + 1];
        }
    }
    Ok(TpImage::new(k, group.members.clone(), data))
}

/// Same operator with the peer product taken as `exp(sum log1p(-p))`.
/// Probabilities are clamped to at most `1 - prob_epsilon()` first so the
/// logs stay finite at exact ones.
pub fn tp_exactly_one_logspace<S: Real>(
    p: &SoftAssignment<S>,
    group: &ConstraintGroup,
) -> Result<TpImage<S>, KernelError> {
    expect_kind(group, GroupKind::ExactlyOne)?;
    let g = group.members.len();
    let k = p.symbols();
    let cap = S::one() - S::prob_epsilon();
    let mut data = vec![S::zero(); g * k];
    let mut pre = vec![S::zero(); g + 1];
    let mut suf = vec![S::zero(); g + 1];
    for s in 0..k {
        for j in 0..g {
            let v = p.get(group.members[j], s).min(cap);
            pre[j + 1] = pre[j] + (-v).ln_1p();
        }
        for j in (0..g).rev() {
            let v = p.get(group.members[j], s).min(cap);
            suf[j] = suf[j + 1] + (-v).ln_1p();
        }
        for j in 0..g {
            data[j * k + s] = p.get(group.members[j], s) * (pre[j] + suf[j + 1]).exp();
        }
    }
    Ok(TpImage::new(k, group.members.clone(), data))
}

/// Full convolution of two PMFs indexed from zero.
fn conv<S: Real>(a: &[S], b: &[S]) -> Vec<S> {
    let mut out = vec![S::zero(); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == S::zero() {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Single convolution coefficient `(a * b)[t]`; zero outside range.
fn conv_at<S: Real>(a: &[S], b: &[S], t: i64) -> S {
    if t < 0 || t as usize > a.len() + b.len() - 2 {
        return S::zero();
    }
    let t = t as usize;
    let lo = t.saturating_sub(b.len() - 1);
    let hi = t.min(a.len() - 1);
    let mut acc = S::zero();
    for i in lo..=hi {
        acc += a[i] * b[t - i];
    }
    acc
}

/// Leave-one-out prefix (`F[i]` = sum PMF of dists `0..i`) and suffix
/// (`B[i]` = sum PMF of dists `i..N`) convolutions.
fn sum_prefixes<S: Real>(dists: &[&[S]]) -> (Vec<Vec<S>>, Vec<Vec<S>>) {
    let n = dists.len();
    let mut fwd: Vec<Vec<S>> = Vec::with_capacity(n + 1);
    fwd.push(vec![S::one()]);
    for i in 0..n {
        let next = conv(&fwd[i], dists[i]);
        fwd.push(next);
    }
    let mut bwd: Vec<Vec<S>> = vec![Vec::new(); n + 1];
    bwd[n] = vec![S::one()];
    for i in (0..n).rev() {
        bwd[i] = conv(dists[i], &bwd[i + 1]);
    }
    (fwd, bwd)
}

/// Sum-group operator: `out[i, d] = p[i, d] * P(sum of other digits = target - d)`.
/// Distributions are given in member order; all must share one arity.
pub fn tp_sum<S: Real>(dists: &[&[S]], target: i64) -> Result<Vec<Vec<S>>, KernelError> {
    let n = dists.len();
    if n == 0 {
        return Err(KernelError::EmptyInput);
    }
    let k = dists[0].len();
    for (i, d) in dists.iter().enumerate() {
        if d.len() != k {
            return Err(KernelError::MixedArity {
                index: i,
                expected: k,
                got: d.len(),
            });
        }
    }
    let (fwd, bwd) = sum_prefixes(dists);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = vec![S::zero(); k];
        for (d, slot) in row.iter_mut().enumerate() {
            *slot = dists[i][d] * conv_at(&fwd[i], &bwd[i + 1], target - d as i64);
        }
        out.push(row);
    }
    Ok(out)
}

/// Operator image for any group kind.
pub fn tp_image<S: Real>(
    p: &SoftAssignment<S>,
    group: &ConstraintGroup,
) -> Result<TpImage<S>, KernelError> {
    match group.kind {
        GroupKind::ExactlyOne => tp_exactly_one(p, group),
        GroupKind::SumEq => {
            let rows: Vec<&[S]> = group.members.iter().map(|&m| p.row(m)).collect();
            let target = group.target.expect("validated sum group has a target");
            let image = tp_sum(&rows, target)?;
            let k = p.symbols();
            let mut data = Vec::with_capacity(group.members.len() * k);
            for row in image {
                data.extend(row);
            }
            Ok(TpImage::new(k, group.members.clone(), data))
        }
    }
}

/// Squared fixed-point residual, summed over every group/member/symbol term.
pub fn residual_loss<S: Real>(
    p: &SoftAssignment<S>,
    program: &ConstraintProgram,
) -> Result<LossReport<S>, KernelError> {
    check_shape(p, program)?;
    let k = p.symbols();
    let mut per_group = Vec::with_capacity(program.groups().len());
    let mut total = S::zero();
    for group in program.groups() {
        let image = tp_image(p, group)?;
        let mut acc = S::zero();
        for (slot, &m) in group.members.iter().enumerate() {
            for s in 0..k {
                let r = p.get(m, s) - image.get(slot, s);
                acc += r * r;
            }
        }
        per_group.push((group.name.clone(), acc));
        total += acc;
    }
    Ok(LossReport { total, per_group })
}

/// Analytic gradient of [`residual_loss`] with respect to the raw entries,
/// returned flat in row-major `n x k` order.
///
/// Derivation per exactly-one group, writing `q = 1 - p` and `Q_i` for the
/// leave-one-out product over the group at a fixed symbol:
///
/// ```text
/// r_i        = p_i (1 - Q_i)
/// dr_i/dp_i  = 1 - Q_i
/// dr_i/dp_j  = p_i * Q_ij          (Q_ij leaves out both i and j)
/// dL/dp_j    = 2 r_j (1 - Q_j) + sum over i != j of 2 r_i p_i Q_ij
/// ```
///
/// Sum groups are analogous with leave-one-out convolutions `L_i` and
/// leave-two-out convolutions `M_ij`:
///
/// ```text
/// r_id         = p_id (1 - L_i[S - d])
/// dr_id/dp_jc  = -p_id * M_ij[S - d - c]    for j != i
/// ```
pub fn residual_grad<S: Real>(
    p: &SoftAssignment<S>,
    program: &ConstraintProgram,
) -> Result<Vec<S>, KernelError> {
    check_shape(p, program)?;
    let k = p.symbols();
    let two = S::from_f64_lossy(2.0);
    let mut grad = vec![S::zero(); p.positions() * k];
    for group in program.groups() {
        match group.kind {
            GroupKind::ExactlyOne => {
                let g = group.members.len();
                let mut pre = vec![S::one(); g + 1];
                let mut suf = vec![S::one(); g + 1];
                let mut v = vec![S::zero(); g];
                let mut r = vec![S::zero(); g];
                for s in 0..k {
                    for j in 0..g {
                        v[j] = p.get(group.members[j], s);
                        pre[j + 1] = pre[j] * (S::one() - v[j]);
                    }
                    for j in (0..g).rev() {
                        suf[j] = suf[j + 1] * (S::one() - v[j]);
                    }
                    for j in 0..g {
                        let q_j = pre[j] * suf[j + 1];
                        r[j] = v[j] * (S::one() - q_j);
                        grad[group.members[j] * k + s] += two * r[j] * (S::one() - q_j);
                    }
                    for i in 0..g {
                        let mut mid = S::one();
                        for j in i + 1..g {
                            let q_ij = pre[i] * mid * suf[j + 1];
                            grad[group.members[j] * k + s] += two * r[i] * v[i] * q_ij;
                            grad[group.members[i] * k + s] += two * r[j] * v[j] * q_ij;
                            mid *= S::one() - v[j];
                        }
                    }
                }
            }
            GroupKind::SumEq => {
                let target = group.target.expect("validated sum group has a target");
                let rows: Vec<&[S]> = group.members.iter().map(|&m| p.row(m)).collect();
                let nn = rows.len();
                let (fwd, bwd) = sum_prefixes(&rows);
                // Residuals and the diagonal term.
                let mut r = vec![S::zero(); nn * k];
                for i in 0..nn {
                    for d in 0..k {
                        let l = conv_at(&fwd[i], &bwd[i + 1], target - d as i64);
                        let ri = rows[i][d] * (S::one() - l);
                        r[i * k + d] = ri;
                        grad[group.members[i] * k + d] += two * ri * (S::one() - l);
                    }
                }
                // Cross terms through the leave-two-out convolutions.
                for i in 0..nn {
                    let mut mid = fwd[i].clone();
                    for j in i + 1..nn {
                        let m_ij = conv(&mid, &bwd[j + 1]);
                        for c in 0..k {
                            let mut acc_j = S::zero(); // dL/dp[j, c] from i's residuals
                            let mut acc_i = S::zero(); // dL/dp[i, c] from j's residuals
                            for d in 0..k {
                                let t = target - d as i64 - c as i64;
                                let mv = conv_at_vec(&m_ij, t);
                                if mv != S::zero() {
                                    acc_j += r[i * k + d] * rows[i][d] * mv;
                                    acc_i += r[j * k + d] * rows[j][d] * mv;
                                }
                            }
                            grad[group.members[j] * k + c] -= two * acc_j;
                            grad[group.members[i] * k + c] -= two * acc_i;
                        }
                        if j + 1 < nn {
                            mid = conv(&mid, rows[j]);
                        }
                    }
                }
            }
        }
    }
    Ok(grad)
}

/// PMF lookup with zero outside range.
fn conv_at_vec<S: Real>(a: &[S], t: i64) -> S {
    if t < 0 || t as usize >= a.len() {
        S::zero()
    } else {
        a[t as usize]
    }
}
