//! Per-worker pools of idle search spaces with the owner/thief deque
//! discipline.
//!
//! The owner appends and removes at the tail; thieves remove at the head.
//! The owner stays off the pool mutex as long as the pool is comfortably
//! deep (size >= SAFE-SIZE), so its only steady-state cost is a size check.
//! Removals below SAFE-SIZE re-check the size under the mutex. A thief
//! first takes the team-wide stealing lock, picks the victim with the
//! biggest pool, then takes that pool's mutex and removes the head entry
//! only if the size is still at least THRESHOLD.
//!
//! Safety of the unlocked owner fast path rests on THRESHOLD >= 2: a steal
//! never touches the last two entries' tail side, so a concurrent unlocked
//! tail removal and a locked head removal always hit different slots. When a
//! configuration asks for THRESHOLD < 2 the pool falls back to locking every
//! owner removal.

use crate::store::Store;
use std::cell::UnsafeCell;
use std::mem::MaybeUninit;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

/// An idle search space plus the variable whose domain shrank just before it
/// was pooled; propagation re-seeds from that variable on retrieval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolEntry {
    pub store: Store,
    pub split_var: usize,
}

struct Buffer {
    slots: Box<[UnsafeCell<MaybeUninit<PoolEntry>>]>,
}

impl Buffer {
    fn with_capacity(cap: usize) -> Buffer {
        let slots = (0..cap)
            .map(|_| UnsafeCell::new(MaybeUninit::uninit()))
            .collect::<Vec<_>>()
            .into_boxed_slice();
        Buffer { slots }
    }

    #[inline]
    fn cap(&self) -> usize {
        self.slots.len()
    }

    /// Move an entry out of slot `index % cap`.
    ///
    /// Caller must guarantee the slot holds an initialized entry and that no
    /// other thread touches this slot concurrently.
    #[inline]
    unsafe fn take(&self, index: usize) -> PoolEntry {
        (*self.slots[index % self.cap()].get()).assume_init_read()
    }

    /// Write an entry into slot `index % cap`.
    ///
    /// Caller must guarantee the slot is vacant and unobserved by others.
    #[inline]
    unsafe fn put(&self, index: usize, entry: PoolEntry) {
        (*self.slots[index % self.cap()].get()).write(entry);
    }
}

pub struct Pool {
    /// Ring storage; replaced only by the owner while holding `mutex`.
    buf: UnsafeCell<Buffer>,
    /// Advanced by thieves under `mutex`; head <= tail always.
    head: AtomicUsize,
    /// Advanced/retreated by the owner only.
    tail: AtomicUsize,
    mutex: Mutex<()>,
    /// Times the owner took `mutex` for a removal (not growth); the protocol
    /// invariant is that this never happens at size >= SAFE-SIZE.
    owner_removal_locks: AtomicU64,
}

unsafe impl Send for Pool {}
unsafe impl Sync for Pool {}

impl Pool {
    pub fn with_capacity(cap: usize) -> Pool {
        Pool {
            buf: UnsafeCell::new(Buffer::with_capacity(cap.max(2))),
            head: AtomicUsize::new(0),
            tail: AtomicUsize::new(0),
            mutex: Mutex::new(()),
            owner_removal_locks: AtomicU64::new(0),
        }
    }

    /// Racy size read; exact only for the owner or under the pool mutex.
    #[inline]
    pub fn size(&self) -> usize {
        let t = self.tail.load(Ordering::Relaxed);
        let h = self.head.load(Ordering::Relaxed);
        t.saturating_sub(h)
    }

    pub fn owner_removal_locks(&self) -> u64 {
        self.owner_removal_locks.load(Ordering::Relaxed)
    }

    /// Owner-only: append at the tail. No lock unless the ring must grow.
    pub fn push(&self, entry: PoolEntry) {
        let t = self.tail.load(Ordering::Relaxed);
        let h = self.head.load(Ordering::Acquire);
        let buf = unsafe { &*self.buf.get() };
        if t - h == buf.cap() {
            self.grow(h, t);
        }
        let buf = unsafe { &*self.buf.get() };
        unsafe { buf.put(t, entry) };
        self.tail.store(t + 1, Ordering::Release);
    }

    #[cold]
    fn grow(&self, h: usize, t: usize) {
        let _guard = self.mutex.lock().unwrap();
        // Thieves are shut out by the mutex and the owner is this thread, so
        // the buffer can be swapped wholesale. Head may have advanced before
        // the lock landed; re-read it.
        let h = self.head.load(Ordering::Relaxed).max(h);
        let old = unsafe { &*self.buf.get() };
        let new = Buffer::with_capacity(old.cap() * 2);
        for i in h..t {
            unsafe { new.put(i, old.take(i)) };
        }
        unsafe { *self.buf.get() = new };
    }

    /// Owner-only: remove the tail entry. Locks the pool below `safe_size`,
    /// re-checking the size once inside; returns `None` on an empty pool
    /// (the caller then turns to stealing).
    pub fn pop(&self, safe_size: usize) -> Option<PoolEntry> {
        let t = self.tail.load(Ordering::Relaxed);
        let h = self.head.load(Ordering::Acquire);
        if t == h {
            return None;
        }
        if t - h < safe_size {
            let _guard = self.mutex.lock().unwrap();
            self.owner_removal_locks.fetch_add(1, Ordering::Relaxed);
            let h = self.head.load(Ordering::Relaxed);
            if t == h {
                return None;
            }
            let t2 = t - 1;
            let entry = unsafe { (*self.buf.get()).take(t2) };
            self.tail.store(t2, Ordering::Release);
            Some(entry)
        } else {
            // Fast path: deep pool, no thief can reach the tail slot.
            let t2 = t - 1;
            self.tail.store(t2, Ordering::Release);
            let entry = unsafe { (*self.buf.get()).take(t2) };
            Some(entry)
        }
    }

    /// Thief-side: remove the head entry if the pool still holds at least
    /// `threshold` entries. Callers must already hold the team stealing
    /// lock; the pool mutex is taken here.
    pub fn steal(&self, threshold: usize) -> Option<PoolEntry> {
        let _guard = self.mutex.lock().unwrap();
        let h = self.head.load(Ordering::Relaxed);
        let t = self.tail.load(Ordering::Acquire);
        if t.saturating_sub(h) < threshold.max(1) {
            return None;
        }
        let entry = unsafe { (*self.buf.get()).take(h) };
        self.head.store(h + 1, Ordering::Release);
        debug_assert!(t - (h + 1) >= threshold.max(1) - 1);
        Some(entry)
    }
}

impl Drop for Pool {
    fn drop(&mut self) {
        let h = *self.head.get_mut();
        let t = *self.tail.get_mut();
        let buf = self.buf.get_mut();
        for i in h..t {
            unsafe { drop(buf.take(i)) };
        }
    }
}

/// All pools of one team plus the team-global stealing lock.
pub struct TeamPools {
    pools: Vec<Pool>,
    stealing: Mutex<()>,
    threshold: usize,
    safe_size: usize,
}

/// Thief id used by the controller when it steals on behalf of another team.
pub const CONTROLLER_THIEF: usize = usize::MAX;

impl TeamPools {
    /// `safe_size` is forced to "always lock" when `threshold < 2`, which is
    /// the regime where an unlocked tail removal could race a steal.
    pub fn new(workers: usize, safe_size: usize, threshold: usize) -> Arc<TeamPools> {
        let effective_safe = if threshold < 2 { usize::MAX } else { safe_size.max(2) };
        Arc::new(TeamPools {
            pools: (0..workers).map(|_| Pool::with_capacity(256)).collect(),
            stealing: Mutex::new(()),
            threshold,
            safe_size: effective_safe,
        })
    }

    pub fn workers(&self) -> usize {
        self.pools.len()
    }

    pub fn threshold(&self) -> usize {
        self.threshold
    }

    pub fn pool(&self, worker: usize) -> &Pool {
        &self.pools[worker]
    }

    /// Owner-side append; never blocks on the pool mutex.
    pub fn pool_put(&self, owner: usize, store: Store, split_var: usize) {
        self.pools[owner].push(PoolEntry { store, split_var });
    }

    /// Owner-side tail removal with this team's effective SAFE-SIZE; `None`
    /// on an empty pool.
    pub fn pop_own(&self, owner: usize) -> Option<PoolEntry> {
        self.pools[owner].pop(self.safe_size)
    }

    /// Owner-side removal per the pool discipline; on an empty own pool this
    /// falls through to a steal attempt. `None` means no work anywhere in
    /// the team right now.
    pub fn pool_get(&self, owner: usize) -> Option<PoolEntry> {
        if let Some(entry) = self.pop_own(owner) {
            return Some(entry);
        }
        self.steal_work(owner)
    }

    /// One steal attempt: pick the teammate with the biggest pool (ties go
    /// to the lowest worker id) and take its head entry if it still holds at
    /// least THRESHOLD entries.
    pub fn steal_work(&self, thief: usize) -> Option<PoolEntry> {
        let _guard = self.stealing.lock().unwrap();
        let mut victim: Option<(usize, usize)> = None;
        for (id, pool) in self.pools.iter().enumerate() {
            if id == thief {
                continue;
            }
            let size = pool.size();
            if victim.map_or(size > 0, |(_, best)| size > best) {
                victim = Some((id, size));
            }
        }
        let (id, _) = victim?;
        self.pools[id].steal(self.threshold)
    }

    /// Steal on behalf of an external team (same protocol as the workers).
    pub fn steal_for_supply(&self) -> Option<PoolEntry> {
        self.steal_work(CONTROLLER_THIEF)
    }

    /// Racy snapshot of every pool's size.
    pub fn sizes(&self) -> Vec<usize> {
        self.pools.iter().map(|p| p.size()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::FiniteDomain;
    use std::sync::atomic::AtomicBool;
    use std::sync::Barrier;

    fn entry(id: u64) -> PoolEntry {
        // Encode the id in the store so loss/duplication is observable.
        let mask = FiniteDomain::from_mask(id << 1 | 1);
        PoolEntry { store: Store::new(vec![mask]), split_var: id as usize & 0xffff }
    }

    fn id_of(e: &PoolEntry) -> u64 {
        e.store.domain(0).mask() >> 1
    }

    #[test]
    fn owner_is_lifo_thief_is_fifo() {
        let pools = TeamPools::new(2, 4, 2);
        for id in 0..6 {
            pools.pool_put(0, entry(id).store, id as usize);
        }
        // Owner takes the most recent entry.
        let got = pools.pool_get(0).unwrap();
        assert_eq!(got.split_var, 5);
        // A thief takes the oldest.
        let stolen = pools.steal_work(1).unwrap();
        assert_eq!(stolen.split_var, 0);
        let stolen = pools.steal_work(1).unwrap();
        assert_eq!(stolen.split_var, 1);
    }

    #[test]
    fn steal_refused_below_threshold() {
        let pools = TeamPools::new(3, 4, 2);
        pools.pool_put(1, entry(2).store, 7);
        assert_eq!(pools.pool(1).size(), 1);
        assert!(pools.steal_work(0).is_none());
        pools.pool_put(1, entry(4).store, 8);
        // Threshold boundary: size 2 is stealable.
        assert!(pools.steal_work(0).is_some());
        assert_eq!(pools.pool(1).size(), 1);
    }

    #[test]
    fn biggest_pool_wins_ties_to_lowest_id() {
        let pools = TeamPools::new(4, 4, 2);
        for id in 0..5u64 {
            pools.pool_put(1, entry(id).store, 100 + id as usize);
        }
        for id in 0..2u64 {
            pools.pool_put(2, entry(id).store, 200 + id as usize);
        }
        let got = pools.steal_work(0).unwrap();
        assert_eq!(got.split_var, 100);
        // Tie between pools of equal size goes to the lower worker id.
        let pools = TeamPools::new(4, 4, 2);
        for id in 0..2u64 {
            pools.pool_put(2, entry(id).store, 200 + id as usize);
            pools.pool_put(3, entry(id).store, 300 + id as usize);
        }
        assert_eq!(pools.steal_work(0).unwrap().split_var, 200);
    }

    #[test]
    fn two_thieves_serialized_both_succeed() {
        let pools = TeamPools::new(3, 4, 2);
        for id in 0..5u64 {
            pools.pool_put(0, entry(id).store, id as usize);
        }
        // Deterministic serialization: the stealing lock admits one thief at
        // a time; with size staying >= THRESHOLD both succeed.
        let a = pools.steal_work(1).unwrap();
        let b = pools.steal_work(2).unwrap();
        assert_eq!((a.split_var, b.split_var), (0, 1));
        assert_eq!(pools.pool(0).size(), 3);
    }

    #[test]
    fn owner_locks_only_below_safe_size() {
        let pools = TeamPools::new(1, 3, 2);
        for id in 0..4u64 {
            pools.pool_put(0, entry(id).store, id as usize);
        }
        let pool = pools.pool(0);
        assert_eq!(pool.owner_removal_locks(), 0);
        // size 4, then 3: both >= SAFE-SIZE(3), no lock.
        pools.pool_get(0).unwrap();
        pools.pool_get(0).unwrap();
        assert_eq!(pool.owner_removal_locks(), 0);
        // size 2 < 3: locked removal.
        pools.pool_get(0).unwrap();
        assert_eq!(pool.owner_removal_locks(), 1);
        pools.pool_get(0).unwrap();
        assert_eq!(pool.owner_removal_locks(), 2);
    }

    #[test]
    fn threshold_one_forces_locking_owner() {
        let pools = TeamPools::new(2, 4, 1);
        pools.pool_put(0, entry(0).store, 0);
        pools.pool_put(0, entry(2).store, 1);
        pools.pool_get(0).unwrap();
        assert!(pools.pool(0).owner_removal_locks() >= 1);
        // A single remaining entry is stealable at threshold 1.
        assert!(pools.steal_work(1).is_some());
        assert!(pools.pool_get(0).is_none());
    }

    #[test]
    fn growth_preserves_order_and_entries() {
        let pool = Pool::with_capacity(2);
        for id in 0..64u64 {
            pool.push(entry(id));
        }
        assert_eq!(pool.size(), 64);
        for expect in (0..64u64).rev() {
            let e = pool.pop(2).unwrap();
            assert_eq!(id_of(&e), expect);
        }
        assert!(pool.pop(2).is_none());
    }

    /// Stress: one owner and three thieves hammer a pool; every entry must
    /// be removed exactly once.
    #[test]
    fn stress_no_loss_no_duplication() {
        const PUSHES: u64 = 100_000;
        let pools = TeamPools::new(4, 4, 2);
        let stop = Arc::new(AtomicBool::new(false));
        let barrier = Arc::new(Barrier::new(4));

        let mut thieves = Vec::new();
        for t in 1..4usize {
            let pools = Arc::clone(&pools);
            let stop = Arc::clone(&stop);
            let barrier = Arc::clone(&barrier);
            thieves.push(std::thread::spawn(move || {
                barrier.wait();
                let mut got = Vec::new();
                while !stop.load(Ordering::Relaxed) {
                    if let Some(e) = pools.steal_work(t) {
                        got.push(id_of(&e));
                    }
                }
                // Drain whatever is left once the owner is done.
                while let Some(e) = pools.steal_work(t) {
                    got.push(id_of(&e));
                }
                got
            }));
        }

        let owner = {
            let pools = Arc::clone(&pools);
            let barrier = Arc::clone(&barrier);
            std::thread::spawn(move || {
                barrier.wait();
                let mut got = Vec::new();
                let mut next = 0u64;
                while next < PUSHES {
                    // Bursts of pushes and pops keep the size crossing the
                    // SAFE-SIZE and THRESHOLD boundaries.
                    let burst = 1 + (next % 7);
                    for _ in 0..burst {
                        if next == PUSHES {
                            break;
                        }
                        pools.pool(0).push(entry(next));
                        next += 1;
                    }
                    for _ in 0..(next % 5) {
                        if let Some(e) = pools.pool(0).pop(4) {
                            got.push(id_of(&e));
                        }
                    }
                }
                got
            })
        };

        let mut seen = owner.join().unwrap();
        stop.store(true, Ordering::Relaxed);
        for th in thieves {
            seen.extend(th.join().unwrap());
        }
        while let Some(e) = pools.pool(0).pop(usize::MAX) {
            seen.push(id_of(&e));
        }
        seen.sort_unstable();
        assert_eq!(seen.len(), PUSHES as usize, "entries lost or duplicated");
        for (i, &id) in seen.iter().enumerate() {
            assert_eq!(id, i as u64);
        }
    }
}
