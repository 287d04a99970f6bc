//! Command-line front end for the work-stealing CSP solver.
//!
//! A run is configured entirely by flags: the model, the search mode, the
//! team/worker shape, the partition strategies, and the deployment backend
//! (threads in this process, or one spawned process per team over loopback
//! sockets). The hidden `team` subcommand is what the spawned processes run.

mod csv;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use stealcsp::models::ModelSpec;
use stealcsp::partition::PartitionStrategy;
use stealcsp::runner::{self, Backend, Report, RunConfig, RunError, SpawnChildSpec};
use stealcsp::stats::first_value_table;
use stealcsp::team::SearchMode;
use stealcsp::worker::{ValueHeuristic, VarHeuristic, WorkerConfig};
use std::net::SocketAddrV4;
use std::process::{ExitCode, Stdio};
use std::time::Duration;

#[derive(Parser)]
#[command(
    name = "stealcsp",
    about = "Finite-domain CSP solver with two-level work stealing",
    args_conflicts_with_subcommands = true
)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: Option<RunArgs>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one team process and report to a coordinator (used by --spawn).
    #[command(hide = true)]
    Team(TeamArgs),
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Problem family: queens | golomb | langford
    #[arg(long)]
    model: String,

    /// Board size for queens (4..=63).
    #[arg(long)]
    n: Option<u8>,

    /// Number of marks for golomb.
    #[arg(long)]
    marks: Option<u8>,

    /// Ruler length bound for golomb (satisfaction form).
    #[arg(long)]
    length: Option<u8>,

    /// Occurrences per symbol for langford.
    #[arg(long)]
    sets: Option<u8>,

    /// Number of symbols for langford.
    #[arg(long)]
    symbols: Option<u8>,

    /// Drop the langford mirror symmetry break (for oracle comparisons).
    #[arg(long)]
    no_symmetry_break: bool,

    /// first: stop at the first solution; all: count every solution.
    #[arg(long, default_value = "all")]
    mode: SearchMode,

    #[arg(long, default_value_t = 1)]
    teams: u16,

    /// Workers per team.
    #[arg(long, default_value_t = 1)]
    workers: usize,

    /// Partition strategy for both levels: even | eager.
    #[arg(long, default_value = "even")]
    strategy: PartitionStrategy,

    /// Override the inter-team strategy.
    #[arg(long)]
    inter_strategy: Option<PartitionStrategy>,

    /// Override the intra-team strategy.
    #[arg(long)]
    intra_strategy: Option<PartitionStrategy>,

    /// Pool size below which the owner locks for removals.
    #[arg(long, default_value_t = 4)]
    safe_size: usize,

    /// Minimum pool size for steals; 0 disables stealing entirely.
    #[arg(long, default_value_t = 2)]
    threshold: usize,

    /// Variable selection: lex-first | min-domain.
    #[arg(long, default_value = "lex-first")]
    var_heuristic: VarHeuristic,

    /// Teams as threads in this process.
    #[arg(long, conflicts_with = "spawn")]
    in_process: bool,

    /// One OS process per team over loopback sockets.
    #[arg(long)]
    spawn: bool,

    /// Abort the run after this many seconds.
    #[arg(long, default_value_t = 300)]
    timeout_secs: u64,

    /// Write machine-readable statistics to this CSV path.
    #[arg(long)]
    stats: Option<std::path::PathBuf>,
}

#[derive(Args)]
struct TeamArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    team_id: u16,
    /// Coordinator address, host:port.
    #[arg(long)]
    coordinator: SocketAddrV4,
}

impl RunArgs {
    fn model_spec(&self) -> anyhow::Result<ModelSpec> {
        let need = |v: Option<u8>, flag: &str| {
            v.with_context(|| format!("--model {} requires --{flag}", self.model))
        };
        match self.model.as_str() {
            "queens" => Ok(ModelSpec::Queens { n: need(self.n, "n")? }),
            "golomb" => Ok(ModelSpec::Golomb {
                marks: need(self.marks, "marks")?,
                length: need(self.length, "length")?,
            }),
            "langford" => Ok(ModelSpec::Langford {
                sets: need(self.sets, "sets")?,
                symbols: need(self.symbols, "symbols")?,
                symmetry_break: !self.no_symmetry_break,
            }),
            other => anyhow::bail!("unknown model `{other}` (expected queens|golomb|langford)"),
        }
    }

    fn to_config(&self) -> anyhow::Result<RunConfig> {
        anyhow::ensure!(self.teams >= 1, "--teams must be at least 1");
        anyhow::ensure!(self.workers >= 1, "--workers must be at least 1");
        let seed = std::env::var("STEALCSP_SEED")
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or(0);
        // threshold 0 means "never steal": the comparison knob for measuring
        // what work sharing buys.
        let threshold = if self.threshold == 0 { usize::MAX } else { self.threshold };
        let mut cfg = RunConfig::new(self.model_spec()?);
        cfg.mode = self.mode;
        cfg.teams = self.teams;
        cfg.workers_per_team = self.workers;
        cfg.inter_strategy = self.inter_strategy.unwrap_or(self.strategy);
        cfg.intra_strategy = self.intra_strategy.unwrap_or(self.strategy);
        cfg.worker_config = WorkerConfig {
            safe_size: self.safe_size,
            threshold,
            var_heuristic: self.var_heuristic,
            value_heuristic: ValueHeuristic::MinValue,
        };
        cfg.backend = if self.spawn { Backend::Spawn } else { Backend::InProcess };
        cfg.timeout = Duration::from_secs(self.timeout_secs);
        cfg.seed = seed;
        Ok(cfg)
    }

    /// Argument vector for a spawned team process; must reproduce this
    /// configuration exactly so the child derives the same partition.
    fn child_args(&self, spec: &SpawnChildSpec) -> Vec<String> {
        let mut args = vec![
            "team".into(),
            "--model".into(),
            self.model.clone(),
            "--mode".into(),
            match self.mode {
                SearchMode::First => "first".into(),
                SearchMode::All => "all".into(),
            },
            "--teams".into(),
            self.teams.to_string(),
            "--workers".into(),
            self.workers.to_string(),
            "--strategy".into(),
            self.strategy.name().into(),
            "--safe-size".into(),
            self.safe_size.to_string(),
            "--threshold".into(),
            self.threshold.to_string(),
            "--var-heuristic".into(),
            match self.var_heuristic {
                VarHeuristic::LexFirst => "lex-first".into(),
                VarHeuristic::MinDomain => "min-domain".into(),
            },
            "--timeout-secs".into(),
            self.timeout_secs.to_string(),
        ];
        let mut opt = |flag: &str, v: Option<u8>| {
            if let Some(v) = v {
                args.push(flag.into());
                args.push(v.to_string());
            }
        };
        opt("--n", self.n);
        opt("--marks", self.marks);
        opt("--length", self.length);
        opt("--sets", self.sets);
        opt("--symbols", self.symbols);
        if self.no_symmetry_break {
            args.push("--no-symmetry-break".into());
        }
        if let Some(s) = self.inter_strategy {
            args.push("--inter-strategy".into());
            args.push(s.name().into());
        }
        if let Some(s) = self.intra_strategy {
            args.push("--intra-strategy".into());
            args.push(s.name().into());
        }
        args.push("--team-id".into());
        args.push(spec.team_id.to_string());
        args.push("--coordinator".into());
        args.push(spec.coordinator.to_string());
        args
    }
}

fn render(report: &Report) {
    println!(
        "model {} | mode {} | {} team(s) x {} worker(s) | {}/{} | backend {}",
        report.model,
        match report.mode {
            SearchMode::First => "first",
            SearchMode::All => "all",
        },
        report.teams,
        report.workers_per_team,
        report.inter_strategy.name(),
        report.intra_strategy.name(),
        report.backend.name(),
    );
    println!("solutions: {}", report.solution_count());
    if report.mode == SearchMode::First {
        if let Some(first) = report.solutions.first() {
            println!("first solution: {first:?}");
        }
    }
    println!("search time: {:.3} ms", report.time.as_secs_f64() * 1e3);
    let a = &report.aggregate;
    println!(
        "nodes: {} | splits: {} | steals ok/failed: {}/{} | supplies: {}",
        a.nodes_explored,
        a.splits,
        a.steals_succeeded,
        a.steals_attempted - a.steals_succeeded,
        report.supplies,
    );
    for tr in &report.team_reports {
        println!(
            "  team {}: nodes={} splits={} steals={}/{} requests={} supplies={}",
            tr.team,
            tr.stats.nodes_explored,
            tr.stats.splits,
            tr.stats.steals_succeeded,
            tr.stats.steals_attempted,
            tr.requests_sent,
            tr.supplies_sent,
        );
    }
    let table = first_value_table(&report.aggregate);
    if !table.is_empty() {
        println!("work share by first split value:");
        for row in &table {
            println!("  {:>2}: {:>8} nodes  {:6.2}%", row.value, row.nodes, row.percent);
        }
    }
}

fn run_main(args: &RunArgs) -> anyhow::Result<ExitCode> {
    let cfg = args.to_config()?;
    let exe = std::env::current_exe().context("cannot locate own executable")?;
    let spawner = |spec: &SpawnChildSpec| {
        std::process::Command::new(&exe)
            .args(args.child_args(spec))
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
    };
    match runner::run(&cfg, spawner) {
        Ok(report) => {
            render(&report);
            if let Some(path) = &args.stats {
                csv::emit_stats(&report, path)
                    .with_context(|| format!("writing stats to {}", path.display()))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Err(RunError::Timeout { diagnostic }) => {
            eprintln!("run timed out; diagnostic dump:\n  {diagnostic}");
            Ok(ExitCode::FAILURE)
        }
        Err(e) => Err(e.into()),
    }
}

fn team_main(args: &TeamArgs) -> anyhow::Result<ExitCode> {
    let cfg = args.run.to_config()?;
    let report = runner::run_team_child(&cfg, args.team_id, args.coordinator)?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match (&cli.command, &cli.run) {
        (Some(Command::Team(team)), _) => team_main(team),
        (None, Some(run)) => run_main(run),
        (None, None) => {
            eprintln!("nothing to do: pass --model (see --help)");
            return ExitCode::from(2);
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
