//! Builders for the three bundled benchmark problems: non-attacking queens,
//! fixed-length Golomb rulers, and Langford sequences.

use crate::domain::FiniteDomain;
use crate::problem::{ConstraintSpec, Problem, ProblemError};
use crate::store::Store;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelSpec {
    Queens { n: u8 },
    /// Satisfaction form: all rulers with `marks` marks of length at most
    /// `length` (the optimisation version is out of scope, so the domain of
    /// the last mark is bounded from above by a known ruler length).
    Golomb { marks: u8, length: u8 },
    Langford { sets: u8, symbols: u8, symmetry_break: bool },
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("queens size {n} outside 4..=63")]
    QueensSize { n: u8 },
    #[error("golomb needs marks >= 3 and length <= 63, got {marks} marks, length {length}")]
    GolombSize { marks: u8, length: u8 },
    #[error("langford needs sets >= 2, symbols >= 1 and sets*symbols <= 63, got ({sets},{symbols})")]
    LangfordSize { sets: u8, symbols: u8 },
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

impl ModelSpec {
    pub fn build(&self) -> Result<Problem, ModelError> {
        match *self {
            ModelSpec::Queens { n } => build_queens(n),
            ModelSpec::Golomb { marks, length } => build_golomb(marks, length),
            ModelSpec::Langford { sets, symbols, symmetry_break } => {
                build_langford_with(sets, symbols, symmetry_break)
            }
        }
    }

    pub fn name(&self) -> String {
        match *self {
            ModelSpec::Queens { n } => format!("queens-{n}"),
            ModelSpec::Golomb { marks, length } => format!("golomb-{marks}-{length}"),
            ModelSpec::Langford { sets, symbols, .. } => format!("langford-{sets}-{symbols}"),
        }
    }

    /// Problem-specific semantic check, independent of the constraint
    /// catalog's direct evaluation.
    pub fn semantic_check(&self, tuple: &[u8]) -> bool {
        match *self {
            ModelSpec::Queens { n } => queens_ok(tuple, n),
            ModelSpec::Golomb { marks, length } => golomb_ok(tuple, marks, length),
            ModelSpec::Langford { sets, symbols, .. } => langford_ok(tuple, sets, symbols),
        }
    }
}

/// One variable per row holding the queen's column; `NeqOffset` pairs rule
/// out shared columns and both diagonals.
pub fn build_queens(n: u8) -> Result<Problem, ModelError> {
    if !(4..=63).contains(&n) {
        return Err(ModelError::QueensSize { n });
    }
    let n = n as usize;
    let mut constraints = Vec::with_capacity(3 * n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let d = (j - i) as i32;
            constraints.push(ConstraintSpec::NeqOffset(i, j, 0));
            constraints.push(ConstraintSpec::NeqOffset(i, j, d));
            constraints.push(ConstraintSpec::NeqOffset(i, j, -d));
        }
    }
    Ok(Problem::new(Store::uniform(n, n as u8 - 1), constraints)?)
}

/// Index of the difference variable for marks `i < j` in a ruler with `m`
/// marks: differences are laid out after the marks, ordered (0,1), (0,2),
/// ..., (0,m-1), (1,2), ...
pub fn golomb_diff_var(m: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < m);
    let before = i * m - i * (i + 1) / 2;
    m + before + (j - i - 1)
}

/// Marks `m_0 < m_1 < ... < m_{marks-1}` with `m_0 = 0`, one difference
/// variable per pair tied in by `Sum`, all differences pairwise distinct,
/// and the standard mirror break `d(0,1) < d(m-2,m-1)`.
pub fn build_golomb(marks: u8, length: u8) -> Result<Problem, ModelError> {
    if marks < 3 || length > 63 || (length as usize) < marks as usize - 1 {
        return Err(ModelError::GolombSize { marks, length });
    }
    let m = marks as usize;
    let n_diffs = m * (m - 1) / 2;
    let mut domains = Vec::with_capacity(m + n_diffs);
    domains.push(FiniteDomain::singleton(0));
    domains.extend(std::iter::repeat(FiniteDomain::range(0, length)).take(m - 1));
    domains.extend(std::iter::repeat(FiniteDomain::range(1, length)).take(n_diffs));

    let mut constraints = Vec::new();
    for i in 0..m - 1 {
        constraints.push(ConstraintSpec::LessThan(i, i + 1));
    }
    let mut diff_vars = Vec::with_capacity(n_diffs);
    for i in 0..m {
        for j in i + 1..m {
            let d = golomb_diff_var(m, i, j);
            // m_i + d_ij = m_j
            constraints.push(ConstraintSpec::Sum(i, d, j));
            diff_vars.push(d);
        }
    }
    constraints.push(ConstraintSpec::AllDifferent(diff_vars));
    constraints.push(ConstraintSpec::LessThan(
        golomb_diff_var(m, 0, 1),
        golomb_diff_var(m, m - 2, m - 1),
    ));
    Ok(Problem::new(Store::new(domains), constraints)?)
}

/// Position variable for occurrence `occ` of `symbol` (1-based) when every
/// symbol appears `sets` times.
pub fn langford_pos_var(sets: usize, symbol: usize, occ: usize) -> usize {
    debug_assert!(symbol >= 1 && occ < sets);
    (symbol - 1) * sets + occ
}

pub fn build_langford(sets: u8, symbols: u8) -> Result<Problem, ModelError> {
    build_langford_with(sets, symbols, true)
}

/// Position variables per (symbol, occurrence) over slots `0..sets*symbols`;
/// consecutive occurrences of symbol `s` sit `s+1` slots apart and all
/// positions differ. The mirror break pins the first occurrence of the
/// largest symbol to the left half of the positions it can occupy, via a
/// `LessThan` against an extra fixed-domain bound variable.
pub fn build_langford_with(
    sets: u8,
    symbols: u8,
    symmetry_break: bool,
) -> Result<Problem, ModelError> {
    let slots = sets as usize * symbols as usize;
    if sets < 2 || symbols < 1 || slots > 63 {
        return Err(ModelError::LangfordSize { sets, symbols });
    }
    let (k, n) = (sets as usize, symbols as usize);
    let mut domains = vec![FiniteDomain::range(0, slots as u8 - 1); slots];
    let mut constraints = Vec::new();
    for s in 1..=n {
        for o in 0..k - 1 {
            constraints.push(ConstraintSpec::EqOffset(
                langford_pos_var(k, s, o + 1),
                langford_pos_var(k, s, o),
                s as i32 + 1,
            ));
        }
    }
    constraints.push(ConstraintSpec::AllDifferent((0..slots).collect()));
    if symmetry_break {
        // Reversal maps the first occurrence of symbol n at position q to
        // kn - 1 - (k-1)(n+1) - q; keeping q strictly below the midpoint
        // discards exactly one of each mirror pair.
        let pair_sum = slots as i32 - 1 - (k as i32 - 1) * (n as i32 + 1);
        let bound = (pair_sum / 2 + 1).clamp(0, slots as i32 - 1) as u8;
        let bound_var = domains.len();
        domains.push(FiniteDomain::singleton(bound));
        constraints.push(ConstraintSpec::LessThan(langford_pos_var(k, n, 0), bound_var));
    }
    Ok(Problem::new(Store::new(domains), constraints)?)
}

/// No two queens share a column or diagonal.
pub fn queens_ok(tuple: &[u8], n: u8) -> bool {
    let n = n as usize;
    if tuple.len() != n {
        return false;
    }
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (tuple[i] as i32, tuple[j] as i32);
            if a == b || (a - b).abs() == (j - i) as i32 {
                return false;
            }
        }
    }
    true
}

/// Marks ascend from 0, stay within `length`, and all pairwise differences
/// (recomputed from the marks alone) are distinct.
pub fn golomb_ok(tuple: &[u8], marks: u8, length: u8) -> bool {
    let m = marks as usize;
    if tuple.len() < m || tuple[0] != 0 || tuple[m - 1] > length {
        return false;
    }
    let marks = &tuple[..m];
    if !marks.windows(2).all(|w| w[0] < w[1]) {
        return false;
    }
    let mut seen = 0u64;
    for i in 0..m {
        for j in i + 1..m {
            let d = marks[j] - marks[i];
            if seen & (1 << d) != 0 {
                return false;
            }
            seen |= 1 << d;
        }
    }
    true
}

/// Reconstruct the sequence from the position variables and check that the
/// occurrences of symbol `s` are exactly `s+1` slots apart.
pub fn langford_ok(tuple: &[u8], sets: u8, symbols: u8) -> bool {
    let (k, n) = (sets as usize, symbols as usize);
    let slots = k * n;
    if tuple.len() < slots {
        return false;
    }
    let mut seq = vec![0usize; slots];
    for s in 1..=n {
        for o in 0..k {
            let p = tuple[langford_pos_var(k, s, o)] as usize;
            if p >= slots || seq[p] != 0 {
                return false;
            }
            seq[p] = s;
            if o > 0 {
                let prev = tuple[langford_pos_var(k, s, o - 1)] as usize;
                if p != prev + s + 1 {
                    return false;
                }
            }
        }
    }
    seq.iter().all(|&s| s != 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn queens_sizes() {
        let p = build_queens(4).unwrap();
        assert_eq!(p.num_vars(), 4);
        assert_eq!(p.constraints().len(), 18);
        assert!(build_queens(3).is_err());
        assert!(build_queens(64).is_err());
    }

    #[test]
    fn golomb_variable_layout() {
        let m = 4;
        assert_eq!(golomb_diff_var(m, 0, 1), 4);
        assert_eq!(golomb_diff_var(m, 0, 3), 6);
        assert_eq!(golomb_diff_var(m, 1, 2), 7);
        assert_eq!(golomb_diff_var(m, 2, 3), 9);
        let p = build_golomb(4, 6).unwrap();
        assert_eq!(p.num_vars(), 10);
    }

    #[test]
    fn golomb_semantic_check() {
        assert!(golomb_ok(&[0, 1, 4, 6], 4, 6));
        assert!(!golomb_ok(&[0, 1, 2, 6], 4, 6)); // d(0,1) = d(1,2)
        assert!(!golomb_ok(&[0, 4, 1, 6], 4, 6)); // not ascending
    }

    #[test]
    fn langford_semantic_check() {
        // 3 1 2 1 3 2: symbol positions (0-based): 1 at 1,3; 2 at 2,5; 3 at 0,4.
        let tuple = [1, 3, 2, 5, 0, 4];
        assert!(langford_ok(&tuple, 2, 3));
        let bad = [1, 4, 2, 5, 0, 3];
        assert!(!langford_ok(&bad, 2, 3));
    }

    #[test]
    fn langford_break_bound() {
        // For (2,3) the bound variable pins the first occurrence of symbol 3
        // below 1, keeping "3 1 2 1 3 2" and dropping its mirror.
        let p = build_langford_with(2, 3, true).unwrap();
        assert_eq!(p.num_vars(), 7);
        assert_eq!(p.initial().domain(6), FiniteDomain::singleton(1));
        let without = build_langford_with(2, 3, false).unwrap();
        assert_eq!(without.num_vars(), 6);
    }
}
