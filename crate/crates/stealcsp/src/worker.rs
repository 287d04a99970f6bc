//! The search driver: depth-first splitting with a pool of idle search
//! spaces, never backtracking. When the current space fails, the worker
//! draws from its pool; when the pool is empty it tries one steal from the
//! teammate with the biggest pool, and reports idle if that fails.

use crate::pool::TeamPools;
use crate::problem::Problem;
use crate::propagate::Engine;
use crate::store::Store;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum VarHeuristic {
    /// Lowest index with a non-singleton domain.
    LexFirst,
    /// Smallest non-singleton domain, ties to the lowest index.
    MinDomain,
}

impl std::str::FromStr for VarHeuristic {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lex-first" => Ok(VarHeuristic::LexFirst),
            "min-domain" => Ok(VarHeuristic::MinDomain),
            other => Err(format!("unknown variable heuristic `{other}` (expected lex-first|min-domain)")),
        }
    }
}

/// Only one value heuristic is bundled: take the smallest value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum ValueHeuristic {
    #[default]
    MinValue,
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct WorkerConfig {
    /// Below this pool size the owner locks for removals.
    pub safe_size: usize,
    /// Minimum victim pool size for a steal to succeed.
    pub threshold: usize,
    pub var_heuristic: VarHeuristic,
    pub value_heuristic: ValueHeuristic,
}

impl Default for WorkerConfig {
    fn default() -> WorkerConfig {
        WorkerConfig {
            safe_size: 4,
            threshold: 2,
            var_heuristic: VarHeuristic::LexFirst,
            value_heuristic: ValueHeuristic::MinValue,
        }
    }
}

/// Per-worker counters; merged by the team and again by the main controller.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SearchStats {
    pub nodes_explored: u64,
    pub splits: u64,
    pub steals_attempted: u64,
    pub steals_succeeded: u64,
    pub solutions_found: u64,
    /// Node counts keyed by the value of the run's attribution variable
    /// (the first variable the root-level partition splits on).
    pub nodes_by_first_value: Vec<u64>,
    /// How long after the stop signal this worker kept running.
    pub stop_latency: Option<Duration>,
}

impl Default for SearchStats {
    fn default() -> SearchStats {
        SearchStats {
            nodes_explored: 0,
            splits: 0,
            steals_attempted: 0,
            steals_succeeded: 0,
            solutions_found: 0,
            nodes_by_first_value: vec![0; 64],
            stop_latency: None,
        }
    }
}

impl SearchStats {
    pub fn merge(&mut self, other: &SearchStats) {
        self.nodes_explored += other.nodes_explored;
        self.splits += other.splits;
        self.steals_attempted += other.steals_attempted;
        self.steals_succeeded += other.steals_succeeded;
        self.solutions_found += other.solutions_found;
        for (a, b) in self.nodes_by_first_value.iter_mut().zip(&other.nodes_by_first_value) {
            *a += b;
        }
        self.stop_latency = self.stop_latency.max(other.stop_latency);
    }
}

/// `None` iff every domain is a singleton.
pub fn select_variable(s: &Store, h: VarHeuristic) -> Option<usize> {
    match h {
        VarHeuristic::LexFirst => (0..s.len()).find(|&v| s.domain(v).size() > 1),
        VarHeuristic::MinDomain => (0..s.len())
            .filter(|&v| s.domain(v).size() > 1)
            .min_by_key(|&v| s.domain(v).size()),
    }
}

/// Split `s` on `var`: the first store fixes `var` to the heuristic's value,
/// the second removes that value; all other domains are untouched.
pub fn split_search_space(var: usize, s: &Store, h: ValueHeuristic) -> (Store, Store) {
    let d = s.domain(var);
    assert!(d.size() >= 2, "split on a domain of size {}", d.size());
    let ValueHeuristic::MinValue = h;
    let v = d.min().unwrap();
    let current = s.with_assigned(var, v);
    let other = s.with_domain(var, d.remove(v));
    (current, other)
}

/// Stop signal shared by a team: the flag plus the instant it was raised,
/// for latency instrumentation.
#[derive(Default)]
pub struct StopSignal {
    flag: AtomicBool,
    raised_at: Mutex<Option<Instant>>,
}

impl StopSignal {
    pub fn raise(&self) {
        let mut at = self.raised_at.lock().unwrap();
        if at.is_none() {
            *at = Some(Instant::now());
        }
        self.flag.store(true, Ordering::Release);
    }

    #[inline]
    pub fn is_raised(&self) -> bool {
        self.flag.load(Ordering::Acquire)
    }

    pub fn latency_from_raise(&self) -> Duration {
        let at = self.raised_at.lock().unwrap();
        at.map(|t| t.elapsed()).unwrap_or_default()
    }
}

#[derive(Debug, PartialEq, Eq)]
pub enum StepOutcome {
    /// One split or one pool retrieval happened; call again.
    Progress,
    /// The current space narrowed to a single tuple.
    Solution(Vec<u8>),
    /// Own pool empty and the steal attempt failed: no work in the team.
    Idle,
    Stopped,
}

/// One worker's search state. Live runs wrap it in a thread; protocol tests
/// drive `step` directly for deterministic schedules.
pub struct Worker {
    pub id: usize,
    problem: Arc<Problem>,
    pools: Arc<TeamPools>,
    stop: Arc<StopSignal>,
    engine: Engine,
    config: WorkerConfig,
    current: Option<Store>,
    attribution_var: Option<usize>,
    pub stats: SearchStats,
}

impl Worker {
    pub fn new(
        id: usize,
        problem: Arc<Problem>,
        pools: Arc<TeamPools>,
        stop: Arc<StopSignal>,
        config: WorkerConfig,
        attribution_var: Option<usize>,
    ) -> Worker {
        let engine = Engine::new(&problem);
        Worker {
            id,
            problem,
            pools,
            stop,
            engine,
            config,
            current: None,
            attribution_var,
            stats: SearchStats::default(),
        }
    }

    /// Adopt a store already at propagation fixpoint as the current space.
    pub fn adopt(&mut self, store: Store) {
        self.count_node(&store);
        self.current = Some(store);
    }

    pub fn has_work(&self) -> bool {
        self.current.is_some()
    }

    fn count_node(&mut self, s: &Store) {
        self.stats.nodes_explored += 1;
        if let Some(v) = self.attribution_var.and_then(|var| s.domain(var).min()) {
            self.stats.nodes_by_first_value[v as usize] += 1;
        }
    }

    /// One search step: a split and propagation of the kept half, a pool
    /// retrieval and propagation, or a solution emission.
    pub fn step(&mut self) -> StepOutcome {
        if self.stop.is_raised() {
            if self.stats.stop_latency.is_none() {
                self.stats.stop_latency = Some(self.stop.latency_from_raise());
            }
            return StepOutcome::Stopped;
        }
        let Some(current) = self.current.take() else {
            // Draw from the pool, stealing if it is empty.
            let entry = match self.pools.pop_own(self.id) {
                Some(e) => Some(e),
                None => {
                    self.stats.steals_attempted += 1;
                    let stolen = self.pools.steal_work(self.id);
                    if stolen.is_some() {
                        self.stats.steals_succeeded += 1;
                    }
                    stolen
                }
            };
            let Some(entry) = entry else {
                return StepOutcome::Idle;
            };
            let mut store = entry.store;
            self.count_node(&store);
            // The split variable shrank just before pooling; re-propagate
            // from it.
            if self
                .engine
                .propagate(&self.problem, &mut store, [entry.split_var])
                .is_ok()
            {
                self.current = Some(store);
            }
            return StepOutcome::Progress;
        };
        let Some(var) = select_variable(&current, self.config.var_heuristic) else {
            let tuple = current.as_tuple().expect("singleton store");
            assert!(
                self.problem.check_tuple(&tuple),
                "engine bug: emitted tuple fails direct constraint evaluation"
            );
            self.stats.solutions_found += 1;
            return StepOutcome::Solution(tuple);
        };
        self.stats.splits += 1;
        let (mut kept, other) = split_search_space(var, &current, self.config.value_heuristic);
        self.pools.pool_put(self.id, other, var);
        self.count_node(&kept);
        if self.engine.propagate(&self.problem, &mut kept, [var]).is_ok() {
            self.current = Some(kept);
        }
        StepOutcome::Progress
    }

    /// Drive steps until idle or stopped, handing each solution to `emit`.
    /// Solutions count as exhausted leaves: the search continues from the
    /// pool afterwards.
    pub fn run(&mut self, mut emit: impl FnMut(Vec<u8>)) -> StepOutcome {
        loop {
            match self.step() {
                StepOutcome::Progress => {}
                StepOutcome::Solution(t) => emit(t),
                done => return done,
            }
        }
    }
}
