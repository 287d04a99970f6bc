//! Reference enumerator used by tests to cross-check the solver.
//!
//! Solutions are found by plain depth-first enumeration over the variables in
//! index order, checking each constraint by direct arithmetic as soon as all
//! of its variables are assigned. No propagation, no bit tricks, no work
//! distribution: this code shares nothing with the solver's search path.

use stealcsp::problem::{ConstraintSpec, Problem};
use stealcsp::store::Store;

/// Direct arithmetic evaluation, written independently of the solver's own
/// `satisfied_by`.
fn holds(c: &ConstraintSpec, assignment: &[i32]) -> bool {
    match *c {
        ConstraintSpec::EqOffset(i, j, off) => assignment[i] == assignment[j] + off,
        ConstraintSpec::NeqOffset(i, j, off) => assignment[i] != assignment[j] + off,
        ConstraintSpec::LessThan(i, j) => assignment[i] < assignment[j],
        ConstraintSpec::Sum(i, j, k) => assignment[i] + assignment[j] == assignment[k],
        ConstraintSpec::AllDifferent(ref vs) => {
            for a in 0..vs.len() {
                for b in a + 1..vs.len() {
                    if assignment[vs[a]] == assignment[vs[b]] {
                        return false;
                    }
                }
            }
            true
        }
    }
}

/// All solutions of `problem` restricted to the sub-search space `store`,
/// sorted lexicographically.
pub fn enumerate_in(problem: &Problem, store: &Store) -> Vec<Vec<u8>> {
    let n = problem.num_vars();
    assert_eq!(store.len(), n);
    // Constraints become checkable once their highest-indexed variable is set.
    let mut ready_at: Vec<Vec<&ConstraintSpec>> = vec![Vec::new(); n];
    for c in problem.constraints() {
        if let Some(&last) = c.vars().iter().max() {
            ready_at[last].push(c);
        }
    }
    let mut assignment = vec![-1i32; n];
    let mut out = Vec::new();
    dfs(0, n, store, &ready_at, &mut assignment, &mut out);
    out
}

fn dfs(
    var: usize,
    n: usize,
    store: &Store,
    ready_at: &[Vec<&ConstraintSpec>],
    assignment: &mut [i32],
    out: &mut Vec<Vec<u8>>,
) {
    if var == n {
        out.push(assignment.iter().map(|&v| v as u8).collect());
        return;
    }
    for v in store.domain(var).iter() {
        assignment[var] = v as i32;
        if ready_at[var].iter().all(|c| holds(c, assignment)) {
            dfs(var + 1, n, store, ready_at, assignment, out);
        }
    }
    assignment[var] = -1;
}

/// All solutions of the problem from its initial store.
pub fn enumerate(problem: &Problem) -> Vec<Vec<u8>> {
    enumerate_in(problem, problem.initial())
}

/// Solution count from the initial store.
pub fn count(problem: &Problem) -> usize {
    enumerate(problem).len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use stealcsp::domain::FiniteDomain;
    use stealcsp::models;

    #[test]
    fn counts_tiny_queens() {
        assert_eq!(count(&models::build_queens(4).unwrap()), 2);
        assert_eq!(count(&models::build_queens(5).unwrap()), 10);
        assert_eq!(count(&models::build_queens(6).unwrap()), 4);
    }

    #[test]
    fn enumerates_within_substore() {
        let p = models::build_queens(4).unwrap();
        let sub = p.initial().with_domain(0, FiniteDomain::singleton(1));
        let sols = enumerate_in(&p, &sub);
        assert_eq!(sols, vec![vec![1, 3, 0, 2]]);
    }

    #[test]
    fn langford_known_counts() {
        let l23 = models::build_langford_with(2, 3, false).unwrap();
        assert_eq!(count(&l23), 2); // one sequence and its mirror
        let l23b = models::build_langford_with(2, 3, true).unwrap();
        assert_eq!(count(&l23b), 1);
        let l25 = models::build_langford_with(2, 5, true).unwrap();
        assert_eq!(count(&l25), 0);
    }

    #[test]
    fn golomb_perfect_ruler() {
        let g = models::build_golomb(4, 6).unwrap();
        let sols = enumerate(&g);
        assert_eq!(sols.len(), 1);
        assert_eq!(&sols[0][..4], &[0, 1, 4, 6]);
        assert_eq!(count(&models::build_golomb(4, 5).unwrap()), 0);
    }
}
