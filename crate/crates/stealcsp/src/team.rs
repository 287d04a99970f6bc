//! Team controller and inter-team protocol: idleness detection, the
//! supplier-based work-request chain, solution forwarding, and termination.
//!
//! Both controllers are plain state machines: events go in, directives come
//! out, and the caller (a live driver or a deterministic test harness)
//! performs the sends, steals, and worker restarts they name. This keeps
//! every protocol decision replayable under any message interleaving.

use crate::partition::PartitionStrategy;
use crate::store::Store;
use crate::transport::{NodeId, ProtocolMessage, MAIN_CONTROLLER};
use crate::worker::WorkerConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SearchMode {
    /// Stop at the first solution.
    First,
    /// Count every solution.
    All,
}

impl std::str::FromStr for SearchMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "first" => Ok(SearchMode::First),
            "all" => Ok(SearchMode::All),
            other => Err(format!("unknown mode `{other}` (expected first|all)")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TeamConfig {
    pub team_id: NodeId,
    pub teams_total: u16,
    pub workers: usize,
    pub intra_strategy: PartitionStrategy,
    pub worker_config: WorkerConfig,
    pub mode: SearchMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Running,
    /// All workers idle; polling other teams for work.
    Draining,
    /// STOP received; workers halted, waiting to go away.
    Stopped,
    Terminated,
}

/// What the caller must do on the controller's behalf.
#[derive(Debug, PartialEq, Eq)]
pub enum Directive {
    Send { dst: NodeId, msg: ProtocolMessage },
    /// Steal one entry from this team's pools (head entry, THRESHOLD rule)
    /// and feed the result back through `after_supply_attempt`.
    TrySupply { requester: NodeId },
    /// Split the store among the workers with the intra-team strategy and
    /// restart those that receive a live part; report the outcome through
    /// `on_distributed`.
    Distribute { store: Store },
    /// Raise the team stop signal and release every worker.
    StopWorkers,
    /// The team is done; tear down and leave the transport.
    Finished,
}

/// Per-team controller state machine.
pub struct ControllerState {
    pub team_id: NodeId,
    teams_total: u16,
    workers: usize,
    idle: Vec<bool>,
    phase: Phase,
    /// True while this team holds the supplier role.
    supplier_role: bool,
    /// Local belief of who supplies work; may go stale, it is a hint only.
    supplier_hint: NodeId,
    /// Teams seen to be unreachable or terminated; never polled again.
    terminated_peers: Vec<NodeId>,
    /// Teams already polled in the current drain round.
    polled: Vec<NodeId>,
    /// The team whose REQUEST_WORK reply is outstanding.
    awaiting: Option<NodeId>,
    pub requests_sent: u64,
    pub supplies_sent: u64,
}

impl ControllerState {
    pub fn new(cfg: &TeamConfig) -> ControllerState {
        ControllerState {
            team_id: cfg.team_id,
            teams_total: cfg.teams_total,
            workers: cfg.workers,
            idle: vec![false; cfg.workers],
            phase: Phase::Running,
            // Team 0 starts out with the supplier role.
            supplier_role: cfg.team_id == 0,
            supplier_hint: 0,
            terminated_peers: Vec::new(),
            polled: Vec::new(),
            awaiting: None,
            requests_sent: 0,
            supplies_sent: 0,
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn is_supplier(&self) -> bool {
        self.supplier_role
    }

    pub fn idle_count(&self) -> usize {
        self.idle.iter().filter(|&&b| b).count()
    }

    /// Mark workers that never received an initial store; call once after
    /// bootstrap distribution.
    pub fn start(&mut self, has_work: &[bool]) -> Vec<Directive> {
        assert_eq!(has_work.len(), self.workers);
        for (w, &busy) in has_work.iter().enumerate() {
            self.idle[w] = !busy;
        }
        if self.idle_count() == self.workers {
            self.begin_drain()
        } else {
            Vec::new()
        }
    }

    /// A worker's steal attempt failed: it notified us and now waits.
    pub fn on_worker_idle(&mut self, worker: usize) -> Vec<Directive> {
        self.idle[worker] = true;
        if self.phase == Phase::Running && self.idle_count() == self.workers {
            self.begin_drain()
        } else {
            Vec::new()
        }
    }

    /// Forward a found solution to the main controller.
    pub fn on_worker_solution(&mut self, tuple: Vec<u8>) -> Vec<Directive> {
        vec![Directive::Send {
            dst: MAIN_CONTROLLER,
            msg: ProtocolMessage::Solution { tuple },
        }]
    }

    pub fn on_message(&mut self, src: NodeId, msg: ProtocolMessage) -> Vec<Directive> {
        match msg {
            ProtocolMessage::RequestWork { from } => {
                debug_assert_eq!(src, from);
                if matches!(self.phase, Phase::Stopped | Phase::Terminated) {
                    vec![Directive::Send { dst: from, msg: ProtocolMessage::NoWork }]
                } else {
                    vec![Directive::TrySupply { requester: from }]
                }
            }
            ProtocolMessage::NoWork => {
                if self.phase == Phase::Draining && self.awaiting == Some(src) {
                    self.advance_poll()
                } else {
                    Vec::new()
                }
            }
            ProtocolMessage::SupplyWork { store } => {
                if matches!(self.phase, Phase::Stopped | Phase::Terminated) {
                    // A stop crossed the supply; the run is over anyway.
                    return Vec::new();
                }
                // Receiving work makes this team the new supplier.
                self.supplier_role = true;
                self.supplier_hint = self.team_id;
                self.phase = Phase::Running;
                self.awaiting = None;
                self.polled.clear();
                vec![Directive::Distribute { store }]
            }
            ProtocolMessage::Stop => {
                self.phase = Phase::Stopped;
                vec![
                    Directive::StopWorkers,
                    Directive::Send {
                        dst: MAIN_CONTROLLER,
                        msg: ProtocolMessage::TeamIdle { team: self.team_id },
                    },
                    self.finish(),
                ]
            }
            ProtocolMessage::Terminate => {
                vec![Directive::StopWorkers, self.finish()]
            }
            ProtocolMessage::Solution { .. } | ProtocolMessage::TeamIdle { .. } => Vec::new(),
        }
    }

    /// Outcome of a `TrySupply`: ship the store (the requester becomes the
    /// new supplier) or decline.
    pub fn after_supply_attempt(&mut self, requester: NodeId, stolen: Option<Store>) -> Vec<Directive> {
        match stolen {
            Some(store) => {
                self.supplies_sent += 1;
                self.supplier_role = false;
                self.supplier_hint = requester;
                vec![Directive::Send {
                    dst: requester,
                    msg: ProtocolMessage::SupplyWork { store },
                }]
            }
            None => vec![Directive::Send { dst: requester, msg: ProtocolMessage::NoWork }],
        }
    }

    /// Outcome of a `Distribute`: which workers got a live part. Workers
    /// left without work stay idle; if nobody could be restarted the drain
    /// resumes immediately.
    pub fn on_distributed(&mut self, restarted: &[usize]) -> Vec<Directive> {
        for &w in restarted {
            self.idle[w] = false;
        }
        if self.phase == Phase::Running && self.idle_count() == self.workers {
            self.begin_drain()
        } else {
            Vec::new()
        }
    }

    /// The live driver saw `peer` unreachable (terminated); skip it forever.
    pub fn on_peer_unreachable(&mut self, peer: NodeId) -> Vec<Directive> {
        if !self.terminated_peers.contains(&peer) {
            self.terminated_peers.push(peer);
        }
        if self.phase == Phase::Draining && self.awaiting == Some(peer) {
            self.advance_poll()
        } else {
            Vec::new()
        }
    }

    /// No reply from the awaited team within the poll timeout: treat like
    /// NO_WORK and move on.
    pub fn on_poll_timeout(&mut self) -> Vec<Directive> {
        if self.phase == Phase::Draining && self.awaiting.is_some() {
            self.advance_poll()
        } else {
            Vec::new()
        }
    }

    fn begin_drain(&mut self) -> Vec<Directive> {
        self.phase = Phase::Draining;
        self.polled.clear();
        self.awaiting = None;
        // Ask the believed supplier first, then everyone else by ascending
        // team id from our own.
        let first = if self.supplier_hint != self.team_id
            && !self.terminated_peers.contains(&self.supplier_hint)
            && self.supplier_hint < self.teams_total
        {
            Some(self.supplier_hint)
        } else {
            self.next_target()
        };
        match first {
            Some(target) => self.send_request(target),
            None => vec![
                Directive::Send {
                    dst: MAIN_CONTROLLER,
                    msg: ProtocolMessage::TeamIdle { team: self.team_id },
                },
                self.finish(),
            ],
        }
    }

    fn advance_poll(&mut self) -> Vec<Directive> {
        if let Some(prev) = self.awaiting.take() {
            if !self.polled.contains(&prev) {
                self.polled.push(prev);
            }
        }
        match self.next_target() {
            Some(target) => self.send_request(target),
            None => {
                self.phase = Phase::Terminated;
                vec![
                    Directive::Send {
                        dst: MAIN_CONTROLLER,
                        msg: ProtocolMessage::TeamIdle { team: self.team_id },
                    },
                    self.finish(),
                ]
            }
        }
    }

    fn send_request(&mut self, target: NodeId) -> Vec<Directive> {
        self.awaiting = Some(target);
        self.requests_sent += 1;
        vec![Directive::Send {
            dst: target,
            msg: ProtocolMessage::RequestWork { from: self.team_id },
        }]
    }

    fn next_target(&self) -> Option<NodeId> {
        (1..self.teams_total)
            .map(|step| (self.team_id + step) % self.teams_total)
            .find(|t| {
                !self.polled.contains(t)
                    && !self.terminated_peers.contains(t)
                    && self.awaiting != Some(*t)
            })
    }

    fn finish(&mut self) -> Directive {
        self.phase = Phase::Terminated;
        Directive::Finished
    }
}

/// Directives of the main controller (a pure coordinator).
#[derive(Debug, PartialEq, Eq)]
pub enum MainDirective {
    Send { dst: NodeId, msg: ProtocolMessage },
    /// Termination detected: emit the report.
    FinishRun,
}

pub struct MainState {
    mode: SearchMode,
    teams: u16,
    pub solutions: Vec<Vec<u8>>,
    idle_teams: Vec<NodeId>,
    stop_broadcast: bool,
    pub finished: bool,
}

impl MainState {
    pub fn new(mode: SearchMode, teams: u16) -> MainState {
        MainState {
            mode,
            teams,
            solutions: Vec::new(),
            idle_teams: Vec::new(),
            stop_broadcast: false,
            finished: false,
        }
    }

    pub fn idle_teams(&self) -> usize {
        self.idle_teams.len()
    }

    /// `validate` is the direct-evaluation soundness gate; an emitted tuple
    /// that fails it is an engine bug and panics the run.
    pub fn on_message(
        &mut self,
        src: NodeId,
        msg: ProtocolMessage,
        validate: impl Fn(&[u8]) -> bool,
    ) -> Vec<MainDirective> {
        match msg {
            ProtocolMessage::Solution { tuple } => {
                assert!(
                    validate(&tuple),
                    "engine bug: solution from team {src} fails direct constraint evaluation"
                );
                match self.mode {
                    SearchMode::All => {
                        self.solutions.push(tuple);
                        Vec::new()
                    }
                    SearchMode::First => {
                        if self.solutions.is_empty() {
                            self.solutions.push(tuple);
                        }
                        if self.stop_broadcast {
                            return Vec::new(); // later arrivals are discarded
                        }
                        self.stop_broadcast = true;
                        (0..self.teams)
                            .map(|t| MainDirective::Send { dst: t, msg: ProtocolMessage::Stop })
                            .collect()
                    }
                }
            }
            ProtocolMessage::TeamIdle { team } => {
                if !self.idle_teams.contains(&team) {
                    self.idle_teams.push(team);
                }
                if self.idle_teams.len() == self.teams as usize && !self.finished {
                    self.finished = true;
                    vec![MainDirective::FinishRun]
                } else {
                    Vec::new()
                }
            }
            _ => Vec::new(),
        }
    }

    /// Abort path: tell every team to go away.
    pub fn abort(&mut self) -> Vec<MainDirective> {
        (0..self.teams)
            .map(|t| MainDirective::Send { dst: t, msg: ProtocolMessage::Terminate })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::FiniteDomain;

    fn cfg(team: NodeId, teams: u16, workers: usize, mode: SearchMode) -> TeamConfig {
        TeamConfig {
            team_id: team,
            teams_total: teams,
            workers,
            intra_strategy: PartitionStrategy::Even,
            worker_config: WorkerConfig::default(),
            mode,
        }
    }

    fn store() -> Store {
        Store::new(vec![[1u8, 2, 3].into_iter().collect::<FiniteDomain>()])
    }

    #[test]
    fn drain_starts_only_when_all_workers_idle() {
        let mut c = ControllerState::new(&cfg(1, 3, 4, SearchMode::All));
        assert!(c.start(&[true, true, true, true]).is_empty());
        assert!(c.on_worker_idle(0).is_empty());
        assert!(c.on_worker_idle(1).is_empty());
        assert!(c.on_worker_idle(2).is_empty());
        let d = c.on_worker_idle(3);
        // All four idle: one request to the believed supplier (team 0).
        assert_eq!(
            d,
            vec![Directive::Send { dst: 0, msg: ProtocolMessage::RequestWork { from: 1 } }]
        );
        assert_eq!(c.phase(), Phase::Draining);
    }

    #[test]
    fn supply_revives_team_and_transfers_role() {
        let mut c = ControllerState::new(&cfg(1, 3, 2, SearchMode::All));
        c.start(&[true, true]);
        c.on_worker_idle(0);
        c.on_worker_idle(1);
        assert!(!c.is_supplier());
        let d = c.on_message(0, ProtocolMessage::SupplyWork { store: store() });
        assert!(matches!(d[..], [Directive::Distribute { .. }]));
        assert!(c.is_supplier());
        assert_eq!(c.phase(), Phase::Running);
        assert!(c.on_distributed(&[0, 1]).is_empty());
        assert_eq!(c.idle_count(), 0);
    }

    #[test]
    fn full_poll_round_then_team_idle() {
        let mut c = ControllerState::new(&cfg(1, 3, 1, SearchMode::All));
        c.start(&[true]);
        let d = c.on_worker_idle(0);
        assert_eq!(
            d,
            vec![Directive::Send { dst: 0, msg: ProtocolMessage::RequestWork { from: 1 } }]
        );
        let d = c.on_message(0, ProtocolMessage::NoWork);
        assert_eq!(
            d,
            vec![Directive::Send { dst: 2, msg: ProtocolMessage::RequestWork { from: 1 } }]
        );
        let d = c.on_message(2, ProtocolMessage::NoWork);
        assert_eq!(
            d,
            vec![
                Directive::Send {
                    dst: MAIN_CONTROLLER,
                    msg: ProtocolMessage::TeamIdle { team: 1 }
                },
                Directive::Finished,
            ]
        );
        assert_eq!(c.phase(), Phase::Terminated);
    }

    #[test]
    fn supplier_that_cannot_help_declines() {
        let mut c = ControllerState::new(&cfg(0, 2, 1, SearchMode::All));
        let d = c.on_message(1, ProtocolMessage::RequestWork { from: 1 });
        assert_eq!(d, vec![Directive::TrySupply { requester: 1 }]);
        let d = c.after_supply_attempt(1, None);
        assert_eq!(d, vec![Directive::Send { dst: 1, msg: ProtocolMessage::NoWork }]);
        assert!(c.is_supplier()); // declining does not move the role
        let d = c.after_supply_attempt(1, Some(store()));
        assert!(matches!(
            d[..],
            [Directive::Send { dst: 1, msg: ProtocolMessage::SupplyWork { .. } }]
        ));
        assert!(!c.is_supplier());
        assert_eq!(c.supplies_sent, 1);
    }

    #[test]
    fn unreachable_peers_are_skipped() {
        let mut c = ControllerState::new(&cfg(2, 4, 1, SearchMode::All));
        c.start(&[true]);
        c.on_worker_idle(0); // asks supplier team 0
        let d = c.on_peer_unreachable(0);
        assert_eq!(
            d,
            vec![Directive::Send { dst: 3, msg: ProtocolMessage::RequestWork { from: 2 } }]
        );
        let d = c.on_message(3, ProtocolMessage::NoWork);
        assert_eq!(
            d,
            vec![Directive::Send { dst: 1, msg: ProtocolMessage::RequestWork { from: 2 } }]
        );
        // Team 0 is never polled again.
        let d = c.on_message(1, ProtocolMessage::NoWork);
        assert!(matches!(d[0], Directive::Send { dst: MAIN_CONTROLLER, .. }));
    }

    #[test]
    fn stop_acks_and_finishes() {
        let mut c = ControllerState::new(&cfg(1, 2, 2, SearchMode::First));
        c.start(&[true, true]);
        let d = c.on_message(MAIN_CONTROLLER, ProtocolMessage::Stop);
        assert_eq!(d.len(), 3);
        assert_eq!(d[0], Directive::StopWorkers);
        assert_eq!(
            d[1],
            Directive::Send { dst: MAIN_CONTROLLER, msg: ProtocolMessage::TeamIdle { team: 1 } }
        );
        assert_eq!(d[2], Directive::Finished);
        // Requests arriving afterwards get a plain refusal.
        let d = c.on_message(0, ProtocolMessage::RequestWork { from: 0 });
        assert_eq!(d, vec![Directive::Send { dst: 0, msg: ProtocolMessage::NoWork }]);
    }

    #[test]
    fn first_mode_reports_exactly_one_solution() {
        let mut m = MainState::new(SearchMode::First, 2);
        let d = m.on_message(0, ProtocolMessage::Solution { tuple: vec![1, 2] }, |_| true);
        assert_eq!(d.len(), 2); // STOP to both teams
        // A near-simultaneous second arrival is discarded.
        let d = m.on_message(1, ProtocolMessage::Solution { tuple: vec![3, 4] }, |_| true);
        assert!(d.is_empty());
        assert_eq!(m.solutions, vec![vec![1, 2]]);
        let d = m.on_message(0, ProtocolMessage::TeamIdle { team: 0 }, |_| true);
        assert!(d.is_empty());
        let d = m.on_message(1, ProtocolMessage::TeamIdle { team: 1 }, |_| true);
        assert_eq!(d, vec![MainDirective::FinishRun]);
    }

    #[test]
    #[should_panic(expected = "engine bug")]
    fn invalid_solution_is_a_hard_failure() {
        let mut m = MainState::new(SearchMode::All, 1);
        m.on_message(0, ProtocolMessage::Solution { tuple: vec![0] }, |_| false);
    }

    #[test]
    fn supplier_uniqueness_across_role_transfers() {
        let mut teams: Vec<ControllerState> = (0..3)
            .map(|t| ControllerState::new(&cfg(t, 3, 1, SearchMode::All)))
            .collect();
        let holders = |ts: &[ControllerState]| ts.iter().filter(|c| c.is_supplier()).count();
        assert_eq!(holders(&teams), 1);
        // Team 2 requests from team 0; between the send and the receipt the
        // role is held by nobody, never by two.
        teams[0].on_message(2, ProtocolMessage::RequestWork { from: 2 });
        teams[0].after_supply_attempt(2, Some(store()));
        assert_eq!(holders(&teams), 0);
        teams[2].on_message(0, ProtocolMessage::SupplyWork { store: store() });
        assert_eq!(holders(&teams), 1);
        assert!(teams[2].is_supplier());
    }
}
