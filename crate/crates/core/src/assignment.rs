//! Soft assignments: an `n x k` row-stochastic matrix, one distribution over
//! symbols per position. Stored flat in row-major order.

use rand::Rng;
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, PartialEq)]
pub enum AssignmentError {
    #[error("expected {expected} entries for {n} x {k}, got {got}")]
    ShapeMismatch {
        n: usize,
        k: usize,
        expected: usize,
        got: usize,
    },
    #[error("row {row} entry {col} is outside [0, 1]")]
    EntryOutOfRange { row: usize, col: usize },
    #[error("row {row} sums to {sum}, not 1 within {tol}")]
    RowNotStochastic { row: usize, sum: f64, tol: f64 },
    #[error("position {0} has no label")]
    MissingLabel(usize),
}


#[derive(Debug, Clone, PartialEq)]
pub struct SoftAssignment<S: Real = f64> {
    n: usize,
    k: usize,
    data: Vec<S>,
}

impl<S: Real> SoftAssignment<S> {
    /// Validated constructor: entries in [0, 1], rows summing to 1 within
    /// [`Real::row_sum_tol`] (1e-9 for `f64`). Operations that need exact
    /// stochasticity renormalize themselves.
    pub fn new(n: usize, k: usize, data: Vec<S>) -> Result<Self, AssignmentError> {
        if data.len() != n * k {
            return Err(AssignmentError::ShapeMismatch {
                n,
                k,
                expected: n * k,
                got: data.len(),
            });
        }
        let a = Self { n, k, data };
        for i in 0..n {
            let mut sum = S::zero();
            for (c, &v) in a.row(i).iter().enumerate() {
                if !(S::zero()..=S::one()).contains(&v) {
                    return Err(AssignmentError::EntryOutOfRange { row: i, col: c });
                }
                sum += v;
            }
            let dev = (sum - S::one()).abs();
            if dev > S::row_sum_tol() {
                return Err(AssignmentError::RowNotStochastic {
                    row: i,
                    sum: sum.to_f64().unwrap_or(f64::NAN),
                    tol: S::row_sum_tol().to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(a)
    }

    /// Shape-checked only. The kernel operators are defined entrywise and are
    /// evaluated off the simplex during finite-difference probing, so this is
    /// the entry point for free-variable contexts.
    pub fn from_raw(n: usize, k: usize, data: Vec<S>) -> Result<Self, AssignmentError> {
        if data.len() != n * k {
            return Err(AssignmentError::ShapeMismatch {
                n,
                k,
                expected: n * k,
                got: data.len(),
            });
        }
        Ok(Self { n, k, data })
    }

    pub fn uniform(n: usize, k: usize) -> Self {
        let v = S::one() / S::from_usize(k).expect("k fits in S");
        Self { n, k, data: vec![v; n * k] }
    }

    /// Rows drawn uniformly from the probability simplex (normalized
    /// exponential draws). Draws happen in `f64` so the stream is identical
    /// across scalar types.
    pub fn random(rng: &mut impl Rng, n: usize, k: usize) -> Self {
        let mut data = Vec::with_capacity(n * k);
        for _ in 0..n {
            let start = data.len();
            let mut sum = 0.0;
            for _ in 0..k {
                // Inverse-CDF exponential; random::<f64>() is in [0, 1).
                let e = -(1.0 - rng.random::<f64>()).ln();
                sum += e;
                data.push(e);
            }
            for v in &mut data[start..] {
                *v /= sum;
            }
        }
        Self {
            n,
            k,
            data: data.into_iter().map(S::from_f64_lossy).collect(),
        }
    }

    /// Exact one-hot rows from complete labels.
    pub fn one_hot(labels: &[i32], k: usize) -> Result<Self, AssignmentError> {
        let n = labels.len();
        let mut data = vec![S::zero(); n * k];
        for (i, &l) in labels.iter().enumerate() {
            if l < 0 || l as usize >= k {
                return Err(AssignmentError::MissingLabel(i));
            }
            data[i * k + l as usize] = S::one();
        }
        Ok(Self { n, k, data })
    }

    pub fn positions(&self) -> usize {
        self.n
    }

    pub fn symbols(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.k..(i + 1) * self.k]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [S] {
        &mut self.data[i * self.k..(i + 1) * self.k]
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn get(&self, i: usize, s: usize) -> S {
        self.data[i * self.k + s]
    }

    pub fn set(&mut self, i: usize, s: usize, v: S) {
        self.data[i * self.k + s] = v;
    }

    /// Argmax with ties broken toward the lowest symbol index.
    pub fn argmax_row(&self, i: usize) -> usize {
        let row = self.row(i);
        let mut best = 0;
        for (s, &v) in row.iter().enumerate().skip(1) {
            if v > row[best] {
                best = s;
            }
        }
        best
    }

    /// Per-position argmax as a label vector.
    pub fn argmax(&self) -> Vec<i32> {
        (0..self.n).map(|i| self.argmax_row(i) as i32).collect()
    }

    pub fn is_row_stochastic(&self, tol: f64) -> bool {
        let tol = S::from_f64_lossy(tol);
        (0..self.n).all(|i| {
            let sum: S = self.row(i).iter().copied().sum();
            (sum - S::one()).abs() <= tol
                && self.row(i).iter().all(|&v| v >= S::zero() && v <= S::one())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_rows() {
        let a = SoftAssignment::<f64>::new(2, 2, vec![0.9, 0.1, 0.2, 0.8]).unwrap();
        assert_eq!(a.row(0), &[0.9, 0.1]);
        assert_eq!(a.row(1), &[0.2, 0.8]);
        assert_eq!(a.get(1, 1), 0.8);
    }

    #[test]
    fn rejects_bad_shape_and_rows() {
        assert!(matches!(
            SoftAssignment::<f64>::new(2, 2, vec![1.0; 3]),
            Err(AssignmentError::ShapeMismatch { .. })
        ));
        assert!(matches!(
            SoftAssignment::<f64>::new(1, 2, vec![0.7, 0.2]),
            Err(AssignmentError::RowNotStochastic { row: 0, .. })
        ));
        assert!(matches!(
            SoftAssignment::<f64>::new(1, 2, vec![1.5, -0.5]),
            Err(AssignmentError::EntryOutOfRange { row: 0, col: 0 })
        ));
    }

    #[test]
    fn from_raw_skips_numeric_validation() {
        let a = SoftAssignment::<f64>::from_raw(1, 2, vec![0.7, 0.2]).unwrap();
        assert!(!a.is_row_stochastic(1e-9));
    }

    #[test]
    fn uniform_rows_sum_to_one() {
        let a = SoftAssignment::<f64>::uniform(81, 9);
        assert!(a.is_row_stochastic(1e-12));
        assert_eq!(a.get(3, 4), 1.0 / 9.0);
    }

    #[test]
    fn one_hot_from_labels() {
        let a = SoftAssignment::<f64>::one_hot(&[2, 0], 3).unwrap();
        assert_eq!(a.row(0), &[0.0, 0.0, 1.0]);
        assert_eq!(a.row(1), &[1.0, 0.0, 0.0]);
        assert!(matches!(
            SoftAssignment::<f64>::one_hot(&[-1], 3),
            Err(AssignmentError::MissingLabel(0))
        ));
    }

    #[test]
    fn argmax_breaks_ties_low() {
        let a = SoftAssignment::<f64>::from_raw(1, 3, vec![0.4, 0.4, 0.2]).unwrap();
        assert_eq!(a.argmax_row(0), 0, "tie must resolve to lowest symbol");
    }

    #[test]
    fn works_in_f32() {
        let a = SoftAssignment::<f32>::uniform(4, 4);
        assert!(a.is_row_stochastic(1e-6));
    }

    #[test]
    fn random_rows_are_stochastic_and_seeded() {
        let mut r1 = crate::rng::rng_from_seed(4);
        let mut r2 = crate::rng::rng_from_seed(4);
        let a = SoftAssignment::<f64>::random(&mut r1, 10, 5);
        let b = SoftAssignment::<f64>::random(&mut r2, 10, 5);
        assert!(a.is_row_stochastic(1e-12));
        assert_eq!(a, b, "same seed must give the same board");
    }
}
