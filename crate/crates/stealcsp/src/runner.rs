//! Run orchestration: bootstrap partitioning, live team drivers, the main
//! controller loop, and the two deployment shapes (teams as threads over the
//! in-process hub, or one OS process per team over sockets).

use crate::models::{ModelError, ModelSpec};
use crate::partition::{self, PartitionError, PartitionStrategy};
use crate::pool::TeamPools;
use crate::problem::Problem;
use crate::propagate;
use crate::stats::TeamReport;
use crate::store::{Store, StoreStatus};
use crate::team::{ControllerState, Directive, MainDirective, MainState, SearchMode, TeamConfig};
use crate::transport::hub::{Hub, TraceEntry};
use crate::transport::socket::{team_connect, SocketTransport};
use crate::transport::{NodeId, ProtocolMessage, Transport, TransportError, MAIN_CONTROLLER};
use crate::worker::{SearchStats, StepOutcome, StopSignal, Worker, WorkerConfig};
use std::collections::VecDeque;
use std::net::SocketAddrV4;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::time::{Duration, Instant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Backend {
    InProcess,
    Spawn,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::InProcess => "in-process",
            Backend::Spawn => "spawn",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub mode: SearchMode,
    pub teams: u16,
    pub workers_per_team: usize,
    pub inter_strategy: PartitionStrategy,
    pub intra_strategy: PartitionStrategy,
    pub worker_config: WorkerConfig,
    pub backend: Backend,
    pub timeout: Duration,
    /// Reserved reproducibility seed (STEALCSP_SEED); every built-in
    /// tie-break is deterministic, so nothing consumes it today.
    pub seed: u64,
}

impl RunConfig {
    pub fn new(model: ModelSpec) -> RunConfig {
        RunConfig {
            model,
            mode: SearchMode::All,
            teams: 1,
            workers_per_team: 1,
            inter_strategy: PartitionStrategy::Even,
            intra_strategy: PartitionStrategy::Even,
            worker_config: WorkerConfig::default(),
            backend: Backend::InProcess,
            timeout: Duration::from_secs(300),
            seed: 0,
        }
    }

    pub fn config_label(&self) -> String {
        format!("{}x{}/{}", self.teams, self.workers_per_team, self.backend.name())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("model: {0}")]
    Model(#[from] ModelError),
    #[error("partition: {0}")]
    Partition(#[from] PartitionError),
    #[error("run timed out; diagnostic: {diagnostic}")]
    Timeout { diagnostic: String },
    #[error("transport: {0}")]
    Transport(#[from] TransportError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("protocol fault: {0}")]
    Protocol(String),
}

#[derive(Debug, Clone)]
pub struct Report {
    pub model: String,
    pub mode: SearchMode,
    pub teams: u16,
    pub workers_per_team: usize,
    pub inter_strategy: PartitionStrategy,
    pub intra_strategy: PartitionStrategy,
    pub backend: Backend,
    pub config_label: String,
    /// Every solution in ALL mode; at most one in FIRST mode.
    pub solutions: Vec<Vec<u8>>,
    pub team_reports: Vec<TeamReport>,
    pub aggregate: SearchStats,
    pub supplies: u64,
    pub requests: u64,
    /// Search wall time: bootstrap and teardown excluded. In FIRST mode this
    /// ends at the first solution's arrival.
    pub time: Duration,
    pub attribution_var: Option<usize>,
}

impl Report {
    pub fn solution_count(&self) -> usize {
        self.solutions.len()
    }
}

/// Propagate the initial store to its fixpoint; `None` means the problem is
/// unsatisfiable at the root.
pub fn bootstrap_root(problem: &Problem) -> Option<Store> {
    propagate::propagate(problem, problem.initial(), 0..problem.num_vars()).ok()
}

/// The variable whose value keys the per-subtree work statistics: the first
/// variable the root-level split can touch.
pub fn attribution_variable(root: &Store) -> Option<usize> {
    (0..root.len()).find(|&v| root.domain(v).size() > 1)
}

/// Inter-team partition: exactly `teams` slots, `None` where the strategy
/// produced fewer parts than teams.
pub fn split_for_teams(
    root: &Store,
    teams: u16,
    strategy: PartitionStrategy,
) -> Result<Vec<Option<Store>>, PartitionError> {
    let parts = partition::split(strategy, root, teams as usize)?;
    let mut slots: Vec<Option<Store>> = parts.into_iter().map(Some).collect();
    slots.resize(teams as usize, None);
    Ok(slots)
}

/// Intra-team partition of one store into per-worker fixpoints. A store too
/// small to split goes whole to the first worker; parts that fail
/// propagation are dropped.
pub fn worker_stores(
    problem: &Problem,
    part: &Store,
    workers: usize,
    strategy: PartitionStrategy,
) -> Vec<Option<Store>> {
    let mut out = vec![None; workers];
    let Ok(fixpoint) = propagate::propagate(problem, part, 0..problem.num_vars()) else {
        return out;
    };
    let parts = match partition::split(strategy, &fixpoint, workers) {
        Ok(parts) => parts,
        Err(PartitionError::NoSplitVariable { .. }) => vec![fixpoint],
        Err(PartitionError::ZeroParts) => unreachable!("workers >= 1"),
    };
    for (slot, p) in out.iter_mut().zip(parts) {
        *slot = propagate::propagate(problem, &p, 0..problem.num_vars()).ok();
    }
    out
}

enum WorkerCommand {
    Run(Store),
    Terminate,
}

enum TeamEvent {
    Solution(Vec<u8>),
    Idle(usize),
    Net(NodeId, ProtocolMessage),
}

fn worker_thread(
    mut w: Worker,
    events: Sender<TeamEvent>,
    commands: Receiver<WorkerCommand>,
) -> SearchStats {
    loop {
        match commands.recv() {
            Ok(WorkerCommand::Run(store)) => {
                w.adopt(store);
                let outcome = w.run(|tuple| {
                    let _ = events.send(TeamEvent::Solution(tuple));
                });
                match outcome {
                    StepOutcome::Idle => {
                        if events.send(TeamEvent::Idle(w.id)).is_err() {
                            break;
                        }
                    }
                    StepOutcome::Stopped => break,
                    _ => unreachable!("run only returns Idle or Stopped"),
                }
            }
            Ok(WorkerCommand::Terminate) | Err(_) => break,
        }
    }
    w.stats
}

/// How long a draining controller waits for a poll reply before writing the
/// polled team off.
const POLL_REPLY_TIMEOUT: Duration = Duration::from_secs(5);
const CONTROLLER_TICK: Duration = Duration::from_millis(50);

/// Run one team to completion: workers as threads, the controller state
/// machine driven by worker events and transport messages.
pub fn run_team(
    cfg: TeamConfig,
    problem: Arc<Problem>,
    initial: Vec<Option<Store>>,
    attribution_var: Option<usize>,
    transport: Arc<dyn Transport>,
    deadline: Instant,
) -> Result<TeamReport, RunError> {
    let workers = cfg.workers;
    let pools = TeamPools::new(
        workers,
        cfg.worker_config.safe_size,
        cfg.worker_config.threshold,
    );
    let stop = Arc::new(StopSignal::default());
    let (event_tx, event_rx) = mpsc::channel::<TeamEvent>();

    let mut command_txs = Vec::with_capacity(workers);
    let mut handles = Vec::with_capacity(workers);
    for w in 0..workers {
        let (cmd_tx, cmd_rx) = mpsc::channel();
        let worker = Worker::new(
            w,
            Arc::clone(&problem),
            Arc::clone(&pools),
            Arc::clone(&stop),
            cfg.worker_config,
            attribution_var,
        );
        let ev = event_tx.clone();
        handles.push(std::thread::spawn(move || worker_thread(worker, ev, cmd_rx)));
        command_txs.push(cmd_tx);
    }

    // Pump transport messages into the controller's event stream.
    let finished = Arc::new(AtomicBool::new(false));
    let pump = {
        let transport = Arc::clone(&transport);
        let finished = Arc::clone(&finished);
        let tx = event_tx.clone();
        std::thread::spawn(move || loop {
            match transport.receive(CONTROLLER_TICK) {
                Ok((src, msg)) => {
                    if tx.send(TeamEvent::Net(src, msg)).is_err() {
                        break;
                    }
                }
                Err(TransportError::Timeout) => {
                    if finished.load(Ordering::Acquire) {
                        break;
                    }
                }
                Err(_) => break,
            }
        })
    };

    let mut state = ControllerState::new(&cfg);
    let mut done = false;
    let mut last_request_at: Option<Instant> = None;

    let execute = |state: &mut ControllerState,
                       first: Vec<Directive>,
                       done: &mut bool,
                       last_request_at: &mut Option<Instant>|
     -> Result<(), RunError> {
        let mut queue: VecDeque<Directive> = first.into();
        while let Some(directive) = queue.pop_front() {
            match directive {
                Directive::Send { dst, msg } => {
                    let is_request = matches!(msg, ProtocolMessage::RequestWork { .. });
                    match transport.send(dst, msg) {
                        Ok(()) => {
                            if is_request {
                                *last_request_at = Some(Instant::now());
                            }
                        }
                        Err(TransportError::Unreachable(peer)) if peer != MAIN_CONTROLLER => {
                            queue.extend(state.on_peer_unreachable(peer));
                        }
                        Err(TransportError::Unreachable(_)) => {
                            // Main controller gone: the run is being torn
                            // down around us; just finish.
                            *done = true;
                        }
                        Err(e) => return Err(e.into()),
                    }
                }
                Directive::TrySupply { requester } => {
                    let stolen = pools.steal_for_supply().map(|e| e.store);
                    queue.extend(state.after_supply_attempt(requester, stolen));
                }
                Directive::Distribute { store } => {
                    let parts = worker_stores(&problem, &store, workers, cfg.intra_strategy);
                    let mut restarted = Vec::new();
                    for (w, part) in parts.into_iter().enumerate() {
                        if let Some(p) = part {
                            if command_txs[w].send(WorkerCommand::Run(p)).is_ok() {
                                restarted.push(w);
                            }
                        }
                    }
                    queue.extend(state.on_distributed(&restarted));
                }
                Directive::StopWorkers => {
                    stop.raise();
                    for tx in &command_txs {
                        let _ = tx.send(WorkerCommand::Terminate);
                    }
                }
                Directive::Finished => {
                    for tx in &command_txs {
                        let _ = tx.send(WorkerCommand::Terminate);
                    }
                    *done = true;
                }
            }
        }
        Ok(())
    };

    // Hand out the bootstrap stores.
    let mut has_work = vec![false; workers];
    for (w, slot) in initial.into_iter().enumerate() {
        if let Some(store) = slot {
            if command_txs[w].send(WorkerCommand::Run(store)).is_ok() {
                has_work[w] = true;
            }
        }
    }
    let start_directives = state.start(&has_work);
    execute(&mut state, start_directives, &mut done, &mut last_request_at)?;

    while !done {
        if Instant::now() > deadline {
            stop.raise();
            for tx in &command_txs {
                let _ = tx.send(WorkerCommand::Terminate);
            }
            finished.store(true, Ordering::Release);
            return Err(RunError::Timeout {
                diagnostic: format!(
                    "team {} deadline exceeded in phase {:?} with {} idle workers",
                    cfg.team_id,
                    state.phase(),
                    state.idle_count()
                ),
            });
        }
        let event = event_rx.recv_timeout(CONTROLLER_TICK);
        let directives = match event {
            Ok(TeamEvent::Solution(tuple)) => state.on_worker_solution(tuple),
            Ok(TeamEvent::Idle(w)) => state.on_worker_idle(w),
            Ok(TeamEvent::Net(src, msg)) => state.on_message(src, msg),
            Err(RecvTimeoutError::Timeout) => {
                if last_request_at.map_or(false, |t| t.elapsed() > POLL_REPLY_TIMEOUT) {
                    last_request_at = None;
                    state.on_poll_timeout()
                } else {
                    Vec::new()
                }
            }
            Err(RecvTimeoutError::Disconnected) => {
                return Err(RunError::Protocol("worker event channel broke".into()))
            }
        };
        execute(&mut state, directives, &mut done, &mut last_request_at)?;
    }

    finished.store(true, Ordering::Release);
    transport.close();
    let _ = pump.join();

    let mut stats = SearchStats::default();
    for handle in handles {
        let worker_stats = handle
            .join()
            .map_err(|_| RunError::Protocol("worker thread panicked".into()))?;
        stats.merge(&worker_stats);
    }
    Ok(TeamReport {
        team: cfg.team_id,
        stats,
        supplies_sent: state.supplies_sent,
        requests_sent: state.requests_sent,
    })
}

/// Early-exit reports for degenerate roots.
fn trivial_report(cfg: &RunConfig, solutions: Vec<Vec<u8>>, attribution: Option<usize>) -> Report {
    Report {
        model: cfg.model.name(),
        mode: cfg.mode,
        teams: cfg.teams,
        workers_per_team: cfg.workers_per_team,
        inter_strategy: cfg.inter_strategy,
        intra_strategy: cfg.intra_strategy,
        backend: cfg.backend,
        config_label: cfg.config_label(),
        solutions,
        team_reports: Vec::new(),
        aggregate: SearchStats::default(),
        supplies: 0,
        requests: 0,
        time: Duration::ZERO,
        attribution_var: attribution,
    }
}

fn finish_report(
    cfg: &RunConfig,
    main: MainState,
    team_reports: Vec<TeamReport>,
    time: Duration,
    attribution: Option<usize>,
) -> Report {
    let mut aggregate = SearchStats::default();
    let mut supplies = 0;
    let mut requests = 0;
    for tr in &team_reports {
        aggregate.merge(&tr.stats);
        supplies += tr.supplies_sent;
        requests += tr.requests_sent;
    }
    Report {
        model: cfg.model.name(),
        mode: cfg.mode,
        teams: cfg.teams,
        workers_per_team: cfg.workers_per_team,
        inter_strategy: cfg.inter_strategy,
        intra_strategy: cfg.intra_strategy,
        backend: cfg.backend,
        config_label: cfg.config_label(),
        solutions: main.solutions,
        team_reports,
        aggregate,
        supplies,
        requests,
        time,
        attribution_var: attribution,
    }
}

/// Shared main-controller loop: collect solutions and idle notices, stop on
/// the first solution in FIRST mode, and detect termination.
fn drive_main(
    transport: &dyn Transport,
    problem: &Problem,
    mode: SearchMode,
    teams: u16,
    t0: Instant,
    deadline: Instant,
) -> Result<(MainState, Duration), RunError> {
    let mut main = MainState::new(mode, teams);
    let mut first_solution_at: Option<Instant> = None;
    loop {
        if Instant::now() > deadline {
            for d in main.abort() {
                if let MainDirective::Send { dst, msg } = d {
                    let _ = transport.send(dst, msg);
                }
            }
            return Err(RunError::Timeout {
                diagnostic: format!(
                    "main controller: {}/{} teams idle, {} solutions so far",
                    main.idle_teams(),
                    teams,
                    main.solutions.len()
                ),
            });
        }
        match transport.receive(CONTROLLER_TICK) {
            Ok((src, msg)) => {
                let got_solution = matches!(msg, ProtocolMessage::Solution { .. });
                let directives = main.on_message(src, msg, |t| problem.check_tuple(t));
                if got_solution && first_solution_at.is_none() && !main.solutions.is_empty() {
                    first_solution_at = Some(Instant::now());
                }
                let mut finished = false;
                for d in directives {
                    match d {
                        MainDirective::Send { dst, msg } => {
                            // STOP racing a self-terminated team is benign.
                            let _ = transport.send(dst, msg);
                        }
                        MainDirective::FinishRun => finished = true,
                    }
                }
                if finished {
                    let end = match mode {
                        SearchMode::First => first_solution_at.unwrap_or_else(Instant::now),
                        SearchMode::All => Instant::now(),
                    };
                    return Ok((main, end - t0));
                }
            }
            Err(TransportError::Timeout) => continue,
            Err(e) => return Err(e.into()),
        }
    }
}

/// Teams as thread groups in this process, over the in-process hub.
pub fn run_in_process(cfg: &RunConfig) -> Result<Report, RunError> {
    run_in_process_traced(cfg).map(|(report, _)| report)
}

/// Same, returning the full message trace for protocol assertions.
pub fn run_in_process_traced(cfg: &RunConfig) -> Result<(Report, Vec<TraceEntry>), RunError> {
    let problem = Arc::new(cfg.model.build()?);
    let Some(root) = bootstrap_root(&problem) else {
        return Ok((trivial_report(cfg, Vec::new(), None), Vec::new()));
    };
    let attribution = attribution_variable(&root);
    if root.status() == StoreStatus::Solution {
        let tuple = root.as_tuple().expect("solution store");
        assert!(problem.check_tuple(&tuple), "engine bug: root fixpoint fails direct check");
        return Ok((trivial_report(cfg, vec![tuple], attribution), Vec::new()));
    }
    let team_parts = split_for_teams(&root, cfg.teams, cfg.inter_strategy)?;
    let worker_inits: Vec<Vec<Option<Store>>> = team_parts
        .iter()
        .map(|part| match part {
            Some(p) => worker_stores(&problem, p, cfg.workers_per_team, cfg.intra_strategy),
            None => vec![None; cfg.workers_per_team],
        })
        .collect();

    let hub = Hub::new();
    let main_endpoint = hub.register(MAIN_CONTROLLER);
    let deadline = Instant::now() + cfg.timeout;
    let team_deadline = deadline + Duration::from_secs(5);

    let t0 = Instant::now();
    let mut team_handles = Vec::new();
    for (team, inits) in worker_inits.into_iter().enumerate() {
        let team_cfg = TeamConfig {
            team_id: team as NodeId,
            teams_total: cfg.teams,
            workers: cfg.workers_per_team,
            intra_strategy: cfg.intra_strategy,
            worker_config: cfg.worker_config,
            mode: cfg.mode,
        };
        let endpoint: Arc<dyn Transport> = Arc::new(hub.register(team as NodeId));
        let problem = Arc::clone(&problem);
        team_handles.push(std::thread::spawn(move || {
            run_team(team_cfg, problem, inits, attribution, endpoint, team_deadline)
        }));
    }

    let drive = drive_main(&main_endpoint, &problem, cfg.mode, cfg.teams, t0, deadline);
    let mut team_reports = Vec::new();
    let mut team_errors = Vec::new();
    for handle in team_handles {
        match handle.join() {
            Ok(Ok(report)) => team_reports.push(report),
            Ok(Err(e)) => team_errors.push(e.to_string()),
            Err(_) => team_errors.push("team thread panicked".into()),
        }
    }
    main_endpoint.close();
    let (main, time) = drive?;
    if !team_errors.is_empty() {
        return Err(RunError::Protocol(team_errors.join("; ")));
    }
    hub.assert_drained(cfg.mode == SearchMode::First);
    team_reports.sort_by_key(|r| r.team);
    let trace = hub.trace();
    Ok((finish_report(cfg, main, team_reports, time, attribution), trace))
}

/// What a spawned team process needs to find its coordinator.
#[derive(Debug, Clone)]
pub struct SpawnChildSpec {
    pub team_id: u16,
    pub coordinator: SocketAddrV4,
}

/// One OS process per team over loopback sockets. `spawn_child` launches a
/// team process (stdout piped) that runs [`run_team_child`] and prints its
/// team report as one JSON line.
pub fn run_spawn(
    cfg: &RunConfig,
    spawn_child: impl Fn(&SpawnChildSpec) -> std::io::Result<std::process::Child>,
) -> Result<Report, RunError> {
    let problem = Arc::new(cfg.model.build()?);
    let Some(root) = bootstrap_root(&problem) else {
        return Ok(trivial_report(cfg, Vec::new(), None));
    };
    let attribution = attribution_variable(&root);
    if root.status() == StoreStatus::Solution {
        let tuple = root.as_tuple().expect("solution store");
        return Ok(trivial_report(cfg, vec![tuple], attribution));
    }
    // Children recompute the same partition; failing early here keeps
    // partition errors ahead of any process spawn.
    split_for_teams(&root, cfg.teams, cfg.inter_strategy)?;

    let transport = SocketTransport::bind(MAIN_CONTROLLER)?;
    let coordinator = transport.listener_addr();
    let mut children = Vec::new();
    for team_id in 0..cfg.teams {
        let spec = SpawnChildSpec { team_id, coordinator };
        match spawn_child(&spec) {
            Ok(child) => children.push(child),
            Err(e) => {
                for mut c in children {
                    let _ = c.kill();
                    let _ = c.wait();
                }
                return Err(e.into());
            }
        }
    }

    let deadline = Instant::now() + cfg.timeout;
    let bootstrap = transport.wait_for_peers(cfg.teams as usize, Duration::from_secs(30));
    if bootstrap.is_err() {
        for c in &mut children {
            let _ = c.kill();
        }
        for mut c in children {
            let _ = c.wait();
        }
        return Err(RunError::Protocol("teams failed to register in time".into()));
    }
    let map = transport.peer_addresses();
    transport.broadcast_address_map(&map)?;
    let t0 = Instant::now();

    let drive = drive_main(&transport, &problem, cfg.mode, cfg.teams, t0, deadline);
    let (main, time) = match drive {
        Ok(ok) => ok,
        Err(e) => {
            for c in &mut children {
                let _ = c.kill();
            }
            for mut c in children {
                let _ = c.wait();
            }
            return Err(e);
        }
    };

    let mut team_reports = Vec::new();
    for child in children {
        let out = child
            .wait_with_output()
            .map_err(|e| RunError::Protocol(format!("child wait: {e}")))?;
        if !out.status.success() {
            return Err(RunError::Protocol(format!(
                "team process exited with {}",
                out.status
            )));
        }
        let stdout = String::from_utf8_lossy(&out.stdout);
        let line = stdout
            .lines()
            .rev()
            .find(|l| !l.trim().is_empty())
            .ok_or_else(|| RunError::Protocol("team process printed no report".into()))?;
        let report: TeamReport = serde_json::from_str(line)
            .map_err(|e| RunError::Protocol(format!("bad team report: {e}")))?;
        team_reports.push(report);
    }
    transport.close();
    team_reports.sort_by_key(|r| r.team);
    Ok(finish_report(cfg, main, team_reports, time, attribution))
}

/// Entry point of a spawned team process: rebuild the problem, recompute the
/// two-level bootstrap partition, join the coordinator, run the team.
pub fn run_team_child(
    cfg: &RunConfig,
    team_id: u16,
    coordinator: SocketAddrV4,
) -> Result<TeamReport, RunError> {
    let problem = Arc::new(cfg.model.build()?);
    let root = bootstrap_root(&problem)
        .ok_or_else(|| RunError::Protocol("child spawned for an empty root".into()))?;
    let attribution = attribution_variable(&root);
    let team_parts = split_for_teams(&root, cfg.teams, cfg.inter_strategy)?;
    let inits = match &team_parts[team_id as usize] {
        Some(part) => worker_stores(&problem, part, cfg.workers_per_team, cfg.intra_strategy),
        None => vec![None; cfg.workers_per_team],
    };

    let transport = SocketTransport::bind(team_id)?;
    let (stream, map) = team_connect(
        coordinator,
        team_id,
        transport.listener_addr(),
        Duration::from_secs(30),
    )?;
    transport.adopt_stream(MAIN_CONTROLLER, stream);
    transport.learn_addresses(&map);

    let team_cfg = TeamConfig {
        team_id,
        teams_total: cfg.teams,
        workers: cfg.workers_per_team,
        intra_strategy: cfg.intra_strategy,
        worker_config: cfg.worker_config,
        mode: cfg.mode,
    };
    let deadline = Instant::now() + cfg.timeout + Duration::from_secs(5);
    run_team(team_cfg, problem, inits, attribution, Arc::new(transport), deadline)
}

/// Dispatch on the configured backend.
pub fn run(
    cfg: &RunConfig,
    spawn_child: impl Fn(&SpawnChildSpec) -> std::io::Result<std::process::Child>,
) -> Result<Report, RunError> {
    match cfg.backend {
        Backend::InProcess => run_in_process(cfg),
        Backend::Spawn => run_spawn(cfg, spawn_child),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn queens_cfg(n: u8, teams: u16, workers: usize) -> RunConfig {
        let mut cfg = RunConfig::new(ModelSpec::Queens { n });
        cfg.teams = teams;
        cfg.workers_per_team = workers;
        cfg
    }

    #[test]
    fn sequential_queens_counts() {
        for (n, expect) in [(4u8, 2usize), (5, 10), (6, 4)] {
            let report = run_in_process(&queens_cfg(n, 1, 1)).unwrap();
            assert_eq!(report.solution_count(), expect, "queens {n}");
        }
    }

    #[test]
    fn sequential_run_has_no_coordination_traffic() {
        let (report, trace) = run_in_process_traced(&queens_cfg(6, 1, 1)).unwrap();
        assert_eq!(report.solution_count(), 4);
        assert_eq!(report.supplies, 0);
        assert_eq!(report.aggregate.steals_succeeded, 0);
        use crate::transport::MessageKind::*;
        assert!(trace
            .iter()
            .all(|t| !matches!(t.kind, RequestWork | SupplyWork | NoWork | Stop)));
    }

    #[test]
    fn two_teams_partition_root_exactly() {
        let cfg = queens_cfg(8, 2, 2);
        let problem = cfg.model.build().unwrap();
        let root = bootstrap_root(&problem).unwrap();
        let parts = split_for_teams(&root, 2, PartitionStrategy::Even).unwrap();
        // Compose both levels and check the 4 worker stores partition the root.
        let mut leaves = Vec::new();
        for part in parts.iter().flatten() {
            // Raw intra split (no propagation) to keep the partition exact.
            let sub = crate::partition::split(PartitionStrategy::Even, part, 2).unwrap();
            leaves.extend(sub);
        }
        assert_eq!(leaves.len(), 4);
        assert!(crate::partition::verify_partition(&root, &leaves));
    }

    #[test]
    fn multi_team_counts_match_sequential() {
        let sequential = run_in_process(&queens_cfg(6, 1, 1)).unwrap();
        for (teams, workers) in [(1u16, 2usize), (2, 2), (3, 2)] {
            let report = run_in_process(&queens_cfg(6, teams, workers)).unwrap();
            assert_eq!(
                report.solution_count(),
                sequential.solution_count(),
                "{teams}x{workers}"
            );
        }
    }

    #[test]
    fn first_mode_yields_one_valid_solution() {
        let mut cfg = queens_cfg(8, 2, 2);
        cfg.mode = SearchMode::First;
        let report = run_in_process(&cfg).unwrap();
        assert_eq!(report.solution_count(), 1);
        let problem = cfg.model.build().unwrap();
        assert!(problem.check_tuple(&report.solutions[0]));
    }

    #[test]
    fn unsatisfiable_terminates_with_drain() {
        let mut cfg = RunConfig::new(ModelSpec::Langford { sets: 2, symbols: 5, symmetry_break: true });
        cfg.teams = 2;
        cfg.workers_per_team = 2;
        let (report, trace) = run_in_process_traced(&cfg).unwrap();
        assert_eq!(report.solution_count(), 0);
        use crate::transport::MessageKind::*;
        assert!(trace.iter().any(|t| t.kind == RequestWork));
        let idle_teams: Vec<_> = trace
            .iter()
            .filter(|t| t.kind == TeamIdle)
            .map(|t| t.src)
            .collect();
        assert!(idle_teams.contains(&0) && idle_teams.contains(&1));
    }
}
