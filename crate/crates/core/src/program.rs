//! Constraint programs: positions, a symbol domain, and constraint groups.
//!
//! A program is the discrete skeleton the soft operators run over. Groups come
//! in two kinds: `ExactlyOne` (each symbol claimed by at most one member, the
//! Latin-square building block) and `SumEq` (member digits sum to a target).
//! Positions are 0-indexed; grid programs use row-major order.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProgramError {
    #[error("domain needs at least two symbols, got {0}")]
    DomainTooSmall(usize),
    #[error("domain has {labels} labels for {k} symbols")]
    LabelCountMismatch { k: usize, labels: usize },
    #[error("duplicate symbol label {0:?}")]
    DuplicateLabel(String),
    #[error("group {0:?} declared twice")]
    DuplicateGroupName(String),
    #[error("group {0:?} has no members")]
    EmptyGroup(String),
    #[error("group {group:?} lists position {position} twice")]
    DuplicateMember { group: String, position: usize },
    #[error("group {group:?} member {position} out of range for {n} positions")]
    MemberOutOfRange {
        group: String,
        position: usize,
        n: usize,
    },
    #[error("group {group:?} target {target} outside [0, {max}]")]
    TargetOutOfRange {
        group: String,
        target: i64,
        max: i64,
    },
    #[error("exactly-one group {0:?} carries a sum target")]
    UnexpectedTarget(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolDomain {
    k: usize,
    labels: Vec<String>,
}

impl SymbolDomain {
    pub fn new(k: usize, labels: Vec<String>) -> Result<Self, ProgramError> {
        if k < 2 {
            return Err(ProgramError::DomainTooSmall(k));
        }
        if labels.len() != k {
            return Err(ProgramError::LabelCountMismatch {
                k,
                labels: labels.len(),
            });
        }
        for (i, a) in labels.iter().enumerate() {
            if labels[..i].contains(a) {
                return Err(ProgramError::DuplicateLabel(a.clone()));
            }
        }
        Ok(Self { k, labels })
    }

    /// Default display labels `"1" ..= "k"`; what the text format assumes when
    /// the domain line carries no explicit labels.
    pub fn with_default_labels(k: usize) -> Result<Self, ProgramError> {
        Self::new(k, (1..=k).map(|s| s.to_string()).collect())
    }

    /// Digit labels `"0" ..= "k-1"`, used when symbols encode digit values.
    pub fn digits(k: usize) -> Result<Self, ProgramError> {
        Self::new(k, (0..k).map(|s| s.to_string()).collect())
    }

    pub fn size(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn has_default_labels(&self) -> bool {
        self.labels
            .iter()
            .enumerate()
            .all(|(i, l)| *l == (i + 1).to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKind {
    ExactlyOne,
    SumEq,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintGroup {
    pub name: String,
    pub kind: GroupKind,
    pub members: Vec<usize>,
    /// Present exactly for `SumEq`; the sum of member digit values.
    pub target: Option<i64>,
}

impl ConstraintGroup {
    pub fn exactly_one(name: impl Into<String>, members: Vec<usize>) -> Self {
        Self {
            name: name.into(),
            kind: GroupKind::ExactlyOne,
            members,
            target: None,
        }
    }

    pub fn sum_eq(name: impl Into<String>, target: i64, members: Vec<usize>) -> Self {
        Self {
            name: name.into(),
            kind: GroupKind::SumEq,
            members,
            target: Some(target),
        }
    }
}

/// How a program came to exist. Builders record their parameters so the
/// independent verifier can re-derive structure without trusting the stored
/// groups; parsed programs carry no such pedigree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Sudoku { box_size: usize },
    Addition { addends: usize, target: i64 },
    Handwritten,
}

#[derive(Debug, Clone)]
pub struct ConstraintProgram {
    n: usize,
    domain: SymbolDomain,
    groups: Vec<ConstraintGroup>,
    /// `membership[i]` = indices into `groups` containing position `i`,
    /// in declaration order.
    membership: Vec<Vec<usize>>,
    provenance: Provenance,
}

/// Equality is structural: same positions, domain, and groups. Provenance is
/// bookkeeping for the verifier and deliberately excluded so that a program
/// equals its serialize/parse round trip.
impl PartialEq for ConstraintProgram {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.domain == other.domain && self.groups == other.groups
    }
}

impl ConstraintProgram {
    pub fn new(
        n: usize,
        domain: SymbolDomain,
        groups: Vec<ConstraintGroup>,
        provenance: Provenance,
    ) -> Result<Self, ProgramError> {
        let k = domain.size();
        for (gi, g) in groups.iter().enumerate() {
            if groups[..gi].iter().any(|h| h.name == g.name) {
                return Err(ProgramError::DuplicateGroupName(g.name.clone()));
            }
            if g.members.is_empty() {
                return Err(ProgramError::EmptyGroup(g.name.clone()));
            }
            for (mi, &p) in g.members.iter().enumerate() {
                if p >= n {
                    return Err(ProgramError::MemberOutOfRange {
                        group: g.name.clone(),
                        position: p,
                        n,
                    });
                }
                if g.members[..mi].contains(&p) {
                    return Err(ProgramError::DuplicateMember {
                        group: g.name.clone(),
                        position: p,
                    });
                }
            }
            match (g.kind, g.target) {
                (GroupKind::SumEq, Some(t)) => {
                    let max = (k as i64 - 1) * g.members.len() as i64;
                    if t < 0 || t > max {
                        return Err(ProgramError::TargetOutOfRange {
                            group: g.name.clone(),
                            target: t,
                            max,
                        });
                    }
                }
                (GroupKind::SumEq, None) => {
                    return Err(ProgramError::TargetOutOfRange {
                        group: g.name.clone(),
                        target: -1,
                        max: 0,
                    })
                }
                (GroupKind::ExactlyOne, Some(_)) => {
                    return Err(ProgramError::UnexpectedTarget(g.name.clone()))
                }
                (GroupKind::ExactlyOne, None) => {}
            }
        }
        let mut membership = vec![Vec::new(); n];
        for (gi, g) in groups.iter().enumerate() {
            for &p in &g.members {
                membership[p].push(gi);
            }
        }
        Ok(Self {
            n,
            domain,
            groups,
            membership,
            provenance,
        })
    }

    /// Latin-square program for an `s x s` grid with `s = box_size^2`:
    /// one exactly-one group per row, column, and box. Every cell belongs to
    /// exactly three groups.
    ///
    /// Panics if `box_size < 2`; smaller boards have no box structure.
    pub fn sudoku(box_size: usize) -> Self {
        assert!(box_size >= 2, "box_size must be at least 2, got {box_size}");
        let s = box_size * box_size;
        let n = s * s;
        let domain = SymbolDomain::with_default_labels(s).expect("s >= 4");
        let mut groups = Vec::with_capacity(3 * s);
        for r in 0..s {
            groups.push(ConstraintGroup::exactly_one(
                format!("row{r}"),
                (0..s).map(|c| r * s + c).collect(),
            ));
        }
        for c in 0..s {
            groups.push(ConstraintGroup::exactly_one(
                format!("col{c}"),
                (0..s).map(|r| r * s + c).collect(),
            ));
        }
        for b in 0..s {
            let (br, bc) = (b / box_size, b % box_size);
            let members = (0..s)
                .map(|i| {
                    let (dr, dc) = (i / box_size, i % box_size);
                    (br * box_size + dr) * s + bc * box_size + dc
                })
                .collect();
            groups.push(ConstraintGroup::exactly_one(format!("box{b}"), members));
        }
        Self::new(n, domain, groups, Provenance::Sudoku { box_size })
            .expect("sudoku construction is valid by design")
    }

    /// Program with one `SumEq` group over `addends` digit positions in
    /// `0..k-1`, summing to `target`.
    pub fn addition(addends: usize, k: usize, target: i64) -> Result<Self, ProgramError> {
        assert!(addends >= 1, "need at least one addend");
        let domain = SymbolDomain::digits(k)?;
        let group = ConstraintGroup::sum_eq("sum", target, (0..addends).collect());
        Self::new(addends, domain, vec![group], Provenance::Addition { addends, target })
    }

    pub fn positions(&self) -> usize {
        self.n
    }

    pub fn domain(&self) -> &SymbolDomain {
        &self.domain
    }

    pub fn symbols(&self) -> usize {
        self.domain.size()
    }

    pub fn groups(&self) -> &[ConstraintGroup] {
        &self.groups
    }

    pub fn membership(&self, position: usize) -> &[usize] {
        &self.membership[position]
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Number of scalar residual terms: sum over groups of |members| * k.
    pub fn residual_terms(&self) -> usize {
        self.groups
            .iter()
            .map(|g| g.members.len() * self.domain.size())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sudoku3_shape() {
        let p = ConstraintProgram::sudoku(3);
        assert_eq!(p.positions(), 81);
        assert_eq!(p.symbols(), 9);
        assert_eq!(p.groups().len(), 27);
        assert!(p.groups().iter().all(|g| g.members.len() == 9));
        assert!(p.groups().iter().all(|g| g.kind == GroupKind::ExactlyOne));
        for i in 0..81 {
            assert_eq!(p.membership(i).len(), 3, "cell {i} must sit in 3 groups");
        }
        // Cell 0 is in row 0, column 0, box 0.
        let names: Vec<_> = p.membership(0).iter().map(|&g| p.groups()[g].name.as_str()).collect();
        assert_eq!(names, ["row0", "col0", "box0"]);
    }

    #[test]
    fn sudoku2_shape() {
        let p = ConstraintProgram::sudoku(2);
        assert_eq!(p.positions(), 16);
        assert_eq!(p.groups().len(), 12);
        assert!(p.groups().iter().all(|g| g.members.len() == 4));
    }

    #[test]
    fn sudoku_membership_consistent_with_groups() {
        for b in 2..=4 {
            let p = ConstraintProgram::sudoku(b);
            for (gi, g) in p.groups().iter().enumerate() {
                for &m in &g.members {
                    assert!(p.membership(m).contains(&gi));
                }
            }
            let total: usize = (0..p.positions()).map(|i| p.membership(i).len()).sum();
            assert_eq!(total, p.groups().iter().map(|g| g.members.len()).sum::<usize>());
        }
    }

    #[test]
    fn residual_term_counts() {
        assert_eq!(ConstraintProgram::sudoku(3).residual_terms(), 2187);
        assert_eq!(ConstraintProgram::sudoku(2).residual_terms(), 192);
        let single = ConstraintProgram::new(
            3,
            SymbolDomain::with_default_labels(3).unwrap(),
            vec![ConstraintGroup::exactly_one("g", vec![0, 1, 2])],
            Provenance::Handwritten,
        )
        .unwrap();
        assert_eq!(single.residual_terms(), 9);
    }

    #[test]
    fn addition_program() {
        let p = ConstraintProgram::addition(2, 10, 18).unwrap();
        assert_eq!(p.positions(), 2);
        assert_eq!(p.symbols(), 10);
        assert_eq!(p.groups().len(), 1);
        assert_eq!(p.groups()[0].target, Some(18));
        assert_eq!(p.groups()[0].members, vec![0, 1]);
        assert!(ConstraintProgram::addition(8, 10, 0).is_ok());
        assert!(ConstraintProgram::addition(4, 10, 36).is_ok());
    }

    #[test]
    fn addition_target_out_of_range() {
        let err = ConstraintProgram::addition(4, 10, 37).unwrap_err();
        assert!(matches!(err, ProgramError::TargetOutOfRange { target: 37, max: 36, .. }));
        let err = ConstraintProgram::addition(4, 10, -1).unwrap_err();
        assert!(matches!(err, ProgramError::TargetOutOfRange { .. }));
    }

    #[test]
    fn duplicate_group_name_rejected() {
        let err = ConstraintProgram::new(
            4,
            SymbolDomain::with_default_labels(2).unwrap(),
            vec![
                ConstraintGroup::exactly_one("g", vec![0, 1]),
                ConstraintGroup::exactly_one("g", vec![2, 3]),
            ],
            Provenance::Handwritten,
        )
        .unwrap_err();
        assert_eq!(err, ProgramError::DuplicateGroupName("g".into()));
    }

    #[test]
    fn duplicate_member_rejected() {
        let err = ConstraintProgram::new(
            4,
            SymbolDomain::with_default_labels(2).unwrap(),
            vec![ConstraintGroup::exactly_one("g", vec![1, 1])],
            Provenance::Handwritten,
        )
        .unwrap_err();
        assert!(matches!(err, ProgramError::DuplicateMember { position: 1, .. }));
    }

    #[test]
    fn member_out_of_range_rejected() {
        let err = ConstraintProgram::new(
            4,
            SymbolDomain::with_default_labels(2).unwrap(),
            vec![ConstraintGroup::exactly_one("g", vec![0, 4])],
            Provenance::Handwritten,
        )
        .unwrap_err();
        assert!(matches!(err, ProgramError::MemberOutOfRange { position: 4, n: 4, .. }));
    }

    #[test]
    fn domain_validation() {
        assert!(matches!(
            SymbolDomain::with_default_labels(1),
            Err(ProgramError::DomainTooSmall(1))
        ));
        assert!(matches!(
            SymbolDomain::new(2, vec!["a".into(), "a".into()]),
            Err(ProgramError::DuplicateLabel(_))
        ));
        assert!(matches!(
            SymbolDomain::new(3, vec!["a".into(), "b".into()]),
            Err(ProgramError::LabelCountMismatch { k: 3, labels: 2 })
        ));
    }

    #[test]
    fn provenance_ignored_by_equality() {
        let a = ConstraintProgram::sudoku(2);
        let b = ConstraintProgram::new(
            a.positions(),
            a.domain().clone(),
            a.groups().to_vec(),
            Provenance::Handwritten,
        )
        .unwrap();
        assert_eq!(a, b);
    }
}
