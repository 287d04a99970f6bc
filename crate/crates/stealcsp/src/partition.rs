//! Splitting a store into pairwise-disjoint parts that cover it.
//!
//! Two strategies: `even` cuts the first wide-enough domain into near-equal
//! contiguous runs; `eager` does a partial breadth-first expansion that
//! mostly yields parts with a singleton prefix.

use crate::domain::FiniteDomain;
use crate::store::Store;
use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum PartitionStrategy {
    Even,
    Eager,
}

impl PartitionStrategy {
    pub fn name(self) -> &'static str {
        match self {
            PartitionStrategy::Even => "even",
            PartitionStrategy::Eager => "eager",
        }
    }
}

impl std::str::FromStr for PartitionStrategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "even" => Ok(PartitionStrategy::Even),
            "eager" => Ok(PartitionStrategy::Eager),
            other => Err(format!("unknown partition strategy `{other}` (expected even|eager)")),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PartitionError {
    #[error("no variable has a domain with at least {k} values")]
    NoSplitVariable { k: usize },
    #[error("cannot partition into 0 parts")]
    ZeroParts,
}

/// Split into `k` parts on the first variable with at least `k` values: the
/// domain is cut into contiguous ascending runs, `floor(d/k)` values in the
/// first `k - d mod k` parts and one more in the rest. All other domains are
/// copied unchanged.
pub fn even_split(s: &Store, k: usize) -> Result<Vec<Store>, PartitionError> {
    if k == 0 {
        return Err(PartitionError::ZeroParts);
    }
    if k == 1 {
        return Ok(vec![s.clone()]);
    }
    let var = (0..s.len())
        .find(|&v| s.domain(v).size() as usize >= k)
        .ok_or(PartitionError::NoSplitVariable { k })?;
    let values: Vec<u8> = s.domain(var).iter().collect();
    let d = values.len();
    let (base, extra) = (d / k, d % k);
    let mut parts = Vec::with_capacity(k);
    let mut at = 0;
    for part in 0..k {
        let run = if part < k - extra { base } else { base + 1 };
        let dom: FiniteDomain = values[at..at + run].iter().copied().collect();
        parts.push(s.with_domain(var, dom));
        at += run;
    }
    debug_assert_eq!(at, d);
    Ok(parts)
}

/// Partial breadth-first expansion, seeded with a work queue of stores.
///
/// Takes the head store, finds its first non-singleton variable with domain
/// `{v1..vd}`: if `k <= d` the result is the head fixed to each of
/// `v1..v(k-1)`, a remainder keeping `{vk..vd}`, then the untouched rest of
/// the queue; otherwise the head is expanded into its `d` single-value
/// stores, appended behind the queue, and the split recurses with `k-d+1`.
///
/// A fully-assigned head cannot be expanded; it is emitted as an atomic part
/// and `k` drops by one. When the space runs out, fewer than `k` parts come
/// back, which the caller can detect from the length.
pub fn eager_split(k: usize, seed: Vec<Store>) -> Result<Vec<Store>, PartitionError> {
    if k == 0 {
        return Err(PartitionError::ZeroParts);
    }
    let mut queue: VecDeque<Store> = seed.into();
    let mut atomic = Vec::new();
    let mut k = k;
    loop {
        let Some(head) = queue.front() else {
            return Ok(atomic); // space exhausted: fewer than k parts
        };
        let Some(var) = (0..head.len()).find(|&v| head.domain(v).size() > 1) else {
            atomic.push(queue.pop_front().unwrap());
            k -= 1;
            if k == 0 {
                atomic.extend(queue);
                return Ok(atomic);
            }
            continue;
        };
        let head = queue.pop_front().unwrap();
        let values: Vec<u8> = head.domain(var).iter().collect();
        let d = values.len();
        if k <= d {
            let mut parts = Vec::with_capacity(k + queue.len() + atomic.len());
            for &v in &values[..k - 1] {
                parts.push(head.with_assigned(var, v));
            }
            let rest: FiniteDomain = values[k - 1..].iter().copied().collect();
            parts.push(head.with_domain(var, rest));
            parts.extend(queue);
            parts.extend(atomic);
            return Ok(parts);
        }
        for &v in &values {
            queue.push_back(head.with_assigned(var, v));
        }
        k = k - d + 1;
    }
}

/// Split one store with the given strategy.
pub fn split(strategy: PartitionStrategy, s: &Store, k: usize) -> Result<Vec<Store>, PartitionError> {
    match strategy {
        PartitionStrategy::Even => even_split(s, k),
        PartitionStrategy::Eager => eager_split(k, vec![s.clone()]),
    }
}

/// Exact partition check: the parts' cross products must be pairwise
/// disjoint and union to the original's cross product.
///
/// Partitions produced by splitting domains variable-by-variable (both
/// bundled strategies) are verified structurally by grouping parts on the
/// first variable where they differ from the original; anything else falls
/// back to exact enumeration, which panics above a size cap rather than
/// answer unreliably.
pub fn verify_partition(original: &Store, parts: &[Store]) -> bool {
    if parts.iter().any(|p| p.len() != original.len()) {
        return false;
    }
    for p in parts {
        for v in 0..original.len() {
            if !p.domain(v).is_subset_of(original.domain(v)) {
                return false;
            }
        }
    }
    if parts.iter().any(|p| p.domains().iter().any(|d| d.is_empty())) {
        return false;
    }
    verify_cover(original, &parts.iter().collect::<Vec<_>>(), 0)
}

const ENUMERATION_CAP: u128 = 1 << 22;

fn verify_cover(original: &Store, parts: &[&Store], var: usize) -> bool {
    if parts.len() == 1 {
        return (var..original.len()).all(|v| parts[0].domain(v) == original.domain(v));
    }
    if var == original.len() {
        // Identical zero-width tails: a partition only if there is one part.
        return parts.len() == 1;
    }
    // Group parts by their domain on `var`.
    let mut groups: Vec<(FiniteDomain, Vec<&Store>)> = Vec::new();
    for &p in parts {
        let d = p.domain(var);
        match groups.iter_mut().find(|(g, _)| *g == d) {
            Some((_, members)) => members.push(p),
            None => groups.push((d, vec![p])),
        }
    }
    let mut union = 0u64;
    let mut disjoint = true;
    for (d, _) in &groups {
        disjoint &= union & d.mask() == 0;
        union |= d.mask();
    }
    if disjoint && union == original.domain(var).mask() {
        return groups.iter().all(|(d, members)| {
            let sub = original.with_domain(var, *d);
            verify_cover(&sub, members, var + 1)
        });
    }
    if groups.len() == 1 && groups[0].0 == original.domain(var) {
        return verify_cover(original, parts, var + 1);
    }
    // Domains on `var` overlap without covering structure: enumerate.
    let size = original.tuple_count();
    assert!(
        size <= ENUMERATION_CAP,
        "partition too large for exact verification ({size} tuples)"
    );
    enumerate_cover(original, parts)
}

fn enumerate_cover(original: &Store, parts: &[&Store]) -> bool {
    let n = original.len();
    let mut tuple = vec![0u8; n];
    fn rec(original: &Store, parts: &[&Store], tuple: &mut [u8], var: usize) -> bool {
        if var == tuple.len() {
            let hits = parts
                .iter()
                .filter(|p| tuple.iter().enumerate().all(|(v, &x)| p.domain(v).contains(x)))
                .count();
            return hits == 1;
        }
        original.domain(var).iter().all(|x| {
            tuple[var] = x;
            rec(original, parts, tuple, var + 1)
        })
    }
    rec(original, parts, &mut tuple, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom(values: &[u8]) -> FiniteDomain {
        values.iter().copied().collect()
    }

    #[test]
    fn even_split_run_sizes_follow_formula() {
        let s = Store::new(vec![FiniteDomain::range(0, 9), dom(&[1, 2])]);
        let parts = even_split(&s, 4).unwrap();
        let sizes: Vec<u32> = parts.iter().map(|p| p.domain(0).size()).collect();
        assert_eq!(sizes, vec![2, 2, 3, 3]);
        assert_eq!(parts[0].domain(0), dom(&[0, 1]));
        assert_eq!(parts[3].domain(0), dom(&[7, 8, 9]));
        for p in &parts {
            assert_eq!(p.domain(1), dom(&[1, 2]));
        }
        assert!(verify_partition(&s, &parts));
    }

    #[test]
    fn even_split_singletons_and_identity() {
        let s = Store::new(vec![dom(&[3, 5, 7, 9])]);
        let parts = even_split(&s, 4).unwrap();
        assert!(parts.iter().all(|p| p.domain(0).is_singleton()));

        let s = Store::new(vec![dom(&[1, 2, 3])]);
        assert_eq!(even_split(&s, 1).unwrap(), vec![s.clone()]);
    }

    #[test]
    fn even_split_needs_wide_domain() {
        let s = Store::new(vec![dom(&[1, 2]), dom(&[1, 2, 3])]);
        // Variable 1 is the first with >= 3 values.
        let parts = even_split(&s, 3).unwrap();
        assert!(parts.iter().all(|p| p.domain(0) == dom(&[1, 2])));
        assert_eq!(
            even_split(&s, 4),
            Err(PartitionError::NoSplitVariable { k: 4 })
        );
    }

    /// Expansion of a three-variable store with domains {a,b,c} into six
    /// parts, traced by hand against the breadth-first algorithm (a=0, b=1,
    /// c=2).
    #[test]
    fn eager_split_three_by_three_into_six() {
        let abc = dom(&[0, 1, 2]);
        let s = Store::new(vec![abc, abc, abc]);
        let parts = eager_split(6, vec![s.clone()]).unwrap();
        let expect = vec![
            s.with_assigned(0, 1).with_assigned(1, 0),
            s.with_assigned(0, 1).with_domain(1, dom(&[1, 2])),
            s.with_assigned(0, 2),
            s.with_assigned(0, 0).with_assigned(1, 0),
            s.with_assigned(0, 0).with_assigned(1, 1),
            s.with_assigned(0, 0).with_assigned(1, 2),
        ];
        assert_eq!(parts, expect);
        assert!(verify_partition(&s, &parts));
    }

    #[test]
    fn eager_split_base_case_and_identity() {
        let s = Store::new(vec![dom(&[2]), dom(&[1, 3, 5, 7])]);
        let parts = eager_split(3, vec![s.clone()]).unwrap();
        assert_eq!(
            parts,
            vec![
                s.with_assigned(1, 1),
                s.with_assigned(1, 3),
                s.with_domain(1, dom(&[5, 7])),
            ]
        );
        assert_eq!(eager_split(1, vec![s.clone()]).unwrap(), vec![s]);
    }

    #[test]
    fn eager_split_passes_through_assigned_stores() {
        let solved = Store::new(vec![dom(&[1]), dom(&[2])]);
        let open = Store::new(vec![dom(&[3, 4]), dom(&[2])]);
        let parts = eager_split(3, vec![solved.clone(), open.clone()]).unwrap();
        assert_eq!(parts.len(), 3);
        assert!(parts.contains(&solved));
        // Exhausted space yields fewer parts than requested.
        let tiny = Store::new(vec![dom(&[1, 2])]);
        let parts = eager_split(5, vec![tiny.clone()]).unwrap();
        assert_eq!(parts.len(), 2);
        assert!(verify_partition(&tiny, &parts));
    }

    #[test]
    fn verify_partition_rejects_overlap_and_gaps() {
        let s = Store::new(vec![dom(&[0, 1, 2]), dom(&[0, 1])]);
        let a = s.with_domain(0, dom(&[0, 1]));
        let b = s.with_domain(0, dom(&[1, 2])); // value 1 duplicated
        assert!(!verify_partition(&s, &[a.clone(), b]));
        let c = s.with_domain(0, dom(&[2]));
        assert!(verify_partition(&s, &[a.clone(), c.clone()]));
        assert!(!verify_partition(&s, &[a, c.with_domain(1, dom(&[0]))]));
    }

    #[test]
    fn verify_partition_enumeration_fallback() {
        // Parts overlapping on var 0 but still a valid partition overall.
        let s = Store::new(vec![dom(&[0, 1]), dom(&[0, 1])]);
        let parts = vec![
            s.with_assigned(1, 0),                        // x1 in {0,1}, x2 = 0
            s.with_assigned(0, 0).with_assigned(1, 1),    // (0,1)
            s.with_assigned(0, 1).with_assigned(1, 1),    // (1,1)
        ];
        assert!(verify_partition(&s, &parts));
    }
}
