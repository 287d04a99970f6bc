//! Per-constraint revision and fixpoint propagation.
//!
//! Binary constraints are revised to domain consistency (cheap with 64-bit
//! masks); the ternary `Sum` is revised to bounds consistency. A constraint
//! re-enters the queue whenever a variable it mentions changes, so a single
//! revision pass need not be idempotent.

use crate::domain::FiniteDomain;
use crate::problem::{ConstraintSpec, Problem};
use crate::store::Store;
use std::collections::VecDeque;

/// A domain wiped out during revision. A normal search outcome, not an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Failed;

#[inline]
fn narrow(
    s: &mut Store,
    var: usize,
    d: FiniteDomain,
    changed: &mut impl FnMut(usize),
) -> Result<(), Failed> {
    if d == s.domain(var) {
        return Ok(());
    }
    if d.is_empty() {
        return Err(Failed);
    }
    s.set_domain(var, d);
    changed(var);
    Ok(())
}

/// Revise one constraint in place, reporting each narrowed variable through
/// `changed`. Removed values are exactly those with no support under the
/// constraint's consistency level.
pub fn revise_in_place(
    c: &ConstraintSpec,
    s: &mut Store,
    changed: &mut impl FnMut(usize),
) -> Result<(), Failed> {
    match *c {
        ConstraintSpec::EqOffset(i, j, off) => {
            let di = s.domain(i).intersect(s.domain(j).shift(off));
            narrow(s, i, di, changed)?;
            let dj = s.domain(j).intersect(s.domain(i).shift(-off));
            narrow(s, j, dj, changed)
        }
        ConstraintSpec::NeqOffset(i, j, off) => {
            if let (true, Some(w)) = (s.domain(j).is_singleton(), s.domain(j).min()) {
                let forbidden = w as i32 + off;
                if (0..64).contains(&forbidden) {
                    narrow(s, i, s.domain(i).remove(forbidden as u8), changed)?;
                }
            }
            if let (true, Some(v)) = (s.domain(i).is_singleton(), s.domain(i).min()) {
                let forbidden = v as i32 - off;
                if (0..64).contains(&forbidden) {
                    narrow(s, j, s.domain(j).remove(forbidden as u8), changed)?;
                }
            }
            Ok(())
        }
        ConstraintSpec::LessThan(i, j) => {
            let (di, dj) = (s.domain(i), s.domain(j));
            let max_j = dj.max().ok_or(Failed)?;
            narrow(s, i, di.below(max_j), changed)?;
            let min_i = s.domain(i).min().ok_or(Failed)?;
            narrow(s, j, dj.above(min_i), changed)
        }
        ConstraintSpec::Sum(i, j, k) => {
            let bounds = |d: FiniteDomain| -> Result<(i32, i32), Failed> {
                Ok((d.min().ok_or(Failed)? as i32, d.max().ok_or(Failed)? as i32))
            };
            let (imin, imax) = bounds(s.domain(i))?;
            let (jmin, jmax) = bounds(s.domain(j))?;
            narrow(s, k, s.domain(k).clamp(imin + jmin, imax + jmax), changed)?;
            let (kmin, kmax) = bounds(s.domain(k))?;
            narrow(s, i, s.domain(i).clamp(kmin - jmax, kmax - jmin), changed)?;
            let (imin2, imax2) = bounds(s.domain(i))?;
            narrow(s, j, s.domain(j).clamp(kmin - imax2, kmax - imin2), changed)
        }
        ConstraintSpec::AllDifferent(ref vs) => {
            for a in 0..vs.len() {
                for b in a + 1..vs.len() {
                    revise_in_place(&ConstraintSpec::NeqOffset(vs[a], vs[b], 0), s, changed)?;
                }
            }
            Ok(())
        }
    }
}

/// Revise one constraint, returning the narrowed store and the variables that
/// changed, or `Failed` if some domain emptied.
pub fn revise_constraint(
    c: &ConstraintSpec,
    s: &Store,
) -> Result<(Store, Vec<usize>), Failed> {
    let mut out = s.clone();
    let mut changed = Vec::new();
    revise_in_place(c, &mut out, &mut |v| changed.push(v))?;
    changed.sort_unstable();
    changed.dedup();
    Ok((out, changed))
}

/// FIFO revision queue with duplicate suppression, reusable across calls. One
/// engine instance per worker; no state is shared.
pub struct Engine {
    queue: VecDeque<u32>,
    pending: Vec<bool>,
}

impl Engine {
    pub fn new(problem: &Problem) -> Engine {
        Engine {
            queue: VecDeque::new(),
            pending: vec![false; problem.constraints().len()],
        }
    }

    fn enqueue(&mut self, ci: u32) {
        if !std::mem::replace(&mut self.pending[ci as usize], true) {
            self.queue.push_back(ci);
        }
    }

    /// Run revisions to the unique fixpoint reachable from `store`, seeding
    /// the queue with every constraint incident to `seed_vars`.
    pub fn propagate(
        &mut self,
        problem: &Problem,
        store: &mut Store,
        seed_vars: impl IntoIterator<Item = usize>,
    ) -> Result<(), Failed> {
        self.queue.clear();
        self.pending.iter_mut().for_each(|p| *p = false);
        for var in seed_vars {
            for &ci in problem.constraints_on(var) {
                self.enqueue(ci);
            }
        }
        let constraints = problem.constraints();
        while let Some(ci) = self.queue.pop_front() {
            self.pending[ci as usize] = false;
            let mut touched: Vec<usize> = Vec::new();
            let result = revise_in_place(&constraints[ci as usize], store, &mut |v| {
                touched.push(v)
            });
            if result.is_err() {
                // Leave the queue dirty; the next call clears it.
                return Err(Failed);
            }
            for var in touched {
                for &c in problem.constraints_on(var) {
                    self.enqueue(c);
                }
            }
        }
        Ok(())
    }
}

/// One-shot propagation on an owned store.
pub fn propagate(
    problem: &Problem,
    store: &Store,
    seed_vars: impl IntoIterator<Item = usize>,
) -> Result<Store, Failed> {
    let mut out = store.clone();
    Engine::new(problem).propagate(problem, &mut out, seed_vars)?;
    Ok(out)
}
