//! Problems: variables, initial domains, and the constraint catalog.

use crate::domain::{FiniteDomain, MAX_VALUE};
use crate::store::Store;

/// One constraint over variable indices. The catalog is the minimal closed
/// set needed to express the bundled benchmark models.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConstraintSpec {
    /// `x_i = x_j + c`
    EqOffset(usize, usize, i32),
    /// `x_i != x_j + c`
    NeqOffset(usize, usize, i32),
    /// `x_i < x_j`
    LessThan(usize, usize),
    /// `x_i + x_j = x_k`
    Sum(usize, usize, usize),
    /// All listed variables take pairwise distinct values. Decomposed into
    /// pairwise `NeqOffset(.., .., 0)` when a problem is built.
    AllDifferent(Vec<usize>),
}

impl ConstraintSpec {
    /// Variable indices the constraint mentions.
    pub fn vars(&self) -> Vec<usize> {
        match *self {
            ConstraintSpec::EqOffset(i, j, _)
            | ConstraintSpec::NeqOffset(i, j, _) => vec![i, j],
            ConstraintSpec::LessThan(i, j) => vec![i, j],
            ConstraintSpec::Sum(i, j, k) => vec![i, j, k],
            ConstraintSpec::AllDifferent(ref vs) => vs.clone(),
        }
    }

    /// Direct evaluation on a full assignment.
    pub fn satisfied_by(&self, tuple: &[u8]) -> bool {
        match *self {
            ConstraintSpec::EqOffset(i, j, c) => tuple[i] as i32 == tuple[j] as i32 + c,
            ConstraintSpec::NeqOffset(i, j, c) => tuple[i] as i32 != tuple[j] as i32 + c,
            ConstraintSpec::LessThan(i, j) => tuple[i] < tuple[j],
            ConstraintSpec::Sum(i, j, k) => {
                tuple[i] as i32 + tuple[j] as i32 == tuple[k] as i32
            }
            ConstraintSpec::AllDifferent(ref vs) => {
                let mut seen = 0u64;
                for &v in vs {
                    let bit = 1u64 << tuple[v];
                    if seen & bit != 0 {
                        return false;
                    }
                    seen |= bit;
                }
                true
            }
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ProblemError {
    #[error("constraint references variable {var} but the problem has {n} variables")]
    VariableOutOfRange { var: usize, n: usize },
    #[error("constraint offset {offset} cannot keep values within 0..=63")]
    OffsetOutOfRange { offset: i32 },
    #[error("initial store has {got} domains for {n} variables")]
    InitialStoreMismatch { n: usize, got: usize },
}

/// An immutable problem: the triple of variables (by count), initial domains,
/// and constraints. `AllDifferent` inputs are decomposed into pairwise
/// disequalities at build time, so the stored constraint list contains only
/// the four primitive forms.
#[derive(Debug, Clone)]
pub struct Problem {
    n: usize,
    initial: Store,
    constraints: Vec<ConstraintSpec>,
    /// For each variable, the indices of constraints that mention it.
    incidence: Vec<Vec<u32>>,
}

impl Problem {
    pub fn new(
        initial: Store,
        constraints: Vec<ConstraintSpec>,
    ) -> Result<Problem, ProblemError> {
        let n = initial.len();
        let mut flat = Vec::with_capacity(constraints.len());
        for c in constraints {
            for &var in &c.vars() {
                if var >= n {
                    return Err(ProblemError::VariableOutOfRange { var, n });
                }
            }
            match c {
                ConstraintSpec::EqOffset(_, _, c) | ConstraintSpec::NeqOffset(_, _, c)
                    if c.unsigned_abs() > MAX_VALUE as u32 =>
                {
                    return Err(ProblemError::OffsetOutOfRange { offset: c });
                }
                ConstraintSpec::AllDifferent(vs) => {
                    for a in 0..vs.len() {
                        for b in a + 1..vs.len() {
                            flat.push(ConstraintSpec::NeqOffset(vs[a], vs[b], 0));
                        }
                    }
                }
                other => flat.push(other),
            }
        }
        let mut incidence = vec![Vec::new(); n];
        for (ci, c) in flat.iter().enumerate() {
            for var in c.vars() {
                let row = &mut incidence[var];
                if row.last() != Some(&(ci as u32)) {
                    row.push(ci as u32);
                }
            }
        }
        Ok(Problem { n, initial, constraints: flat, incidence })
    }

    #[inline]
    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn initial(&self) -> &Store {
        &self.initial
    }

    pub fn constraints(&self) -> &[ConstraintSpec] {
        &self.constraints
    }

    /// Indices of the constraints mentioning `var`.
    pub fn constraints_on(&self, var: usize) -> &[u32] {
        &self.incidence[var]
    }

    /// Direct evaluation of every constraint; the propagation engine plays no
    /// part here.
    pub fn check_tuple(&self, tuple: &[u8]) -> bool {
        tuple.len() == self.n
            && tuple
                .iter()
                .zip(self.initial.domains())
                .all(|(&v, d)| d.contains(v))
            && self.constraints.iter().all(|c| c.satisfied_by(tuple))
    }
}

/// A full assignment claimed to satisfy a problem.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Solution(pub Vec<u8>);

impl Solution {
    pub fn values(&self) -> &[u8] {
        &self.0
    }

    pub fn check(&self, problem: &Problem) -> bool {
        problem.check_tuple(&self.0)
    }
}

/// Convenience for building initial stores from per-variable domains.
pub fn store_of(domains: Vec<FiniteDomain>) -> Store {
    Store::new(domains)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom(values: &[u8]) -> FiniteDomain {
        values.iter().copied().collect()
    }

    #[test]
    fn alldifferent_decomposes_pairwise() {
        let p = Problem::new(
            Store::uniform(4, 3),
            vec![ConstraintSpec::AllDifferent(vec![0, 1, 2, 3])],
        )
        .unwrap();
        assert_eq!(p.constraints().len(), 6);
        assert!(p
            .constraints()
            .iter()
            .all(|c| matches!(c, ConstraintSpec::NeqOffset(_, _, 0))));
    }

    #[test]
    fn rejects_bad_indices_and_offsets() {
        let err = Problem::new(
            Store::uniform(2, 3),
            vec![ConstraintSpec::LessThan(0, 2)],
        )
        .unwrap_err();
        assert_eq!(err, ProblemError::VariableOutOfRange { var: 2, n: 2 });

        let err = Problem::new(
            Store::uniform(2, 3),
            vec![ConstraintSpec::EqOffset(0, 1, 64)],
        )
        .unwrap_err();
        assert_eq!(err, ProblemError::OffsetOutOfRange { offset: 64 });
    }

    #[test]
    fn check_tuple_covers_domains_and_constraints() {
        let p = Problem::new(
            Store::new(vec![dom(&[0, 1]), dom(&[0, 1, 2])]),
            vec![ConstraintSpec::LessThan(0, 1)],
        )
        .unwrap();
        assert!(p.check_tuple(&[0, 2]));
        assert!(!p.check_tuple(&[1, 1]));
        assert!(!p.check_tuple(&[2, 2])); // 2 outside var 0's initial domain
        assert!(!p.check_tuple(&[0]));
    }

    #[test]
    fn alldifferent_direct_eval_matches_pairwise() {
        let all = ConstraintSpec::AllDifferent(vec![0, 1, 2]);
        for tuple in [[0u8, 1, 2], [0, 0, 2], [1, 2, 1]] {
            let pairwise = (0..3).all(|a| {
                (a + 1..3).all(|b| ConstraintSpec::NeqOffset(a, b, 0).satisfied_by(&tuple))
            });
            assert_eq!(all.satisfied_by(&tuple), pairwise);
        }
    }
}
