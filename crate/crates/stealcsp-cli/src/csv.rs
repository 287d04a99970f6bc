//! Machine-readable run statistics. One file, two tables: a single summary
//! row, then the per-first-split-value work distribution.

use stealcsp::runner::Report;
use stealcsp::stats::first_value_table;
use stealcsp::team::SearchMode;
use std::io::Write;
use std::path::Path;

pub fn emit_stats(report: &Report, path: &Path) -> std::io::Result<()> {
    let mut out = std::fs::File::create(path)?;
    write!(out, "{}", render(report))?;
    Ok(())
}

pub fn render(report: &Report) -> String {
    let a = &report.aggregate;
    let mut s = String::new();
    s.push_str(
        "config,model,mode,teams,workers,strategy_inter,strategy_intra,solutions,nodes,steals_ok,steals_fail,supplies,time_ms\n",
    );
    s.push_str(&format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{:.3}\n",
        report.config_label,
        report.model,
        match report.mode {
            SearchMode::First => "first",
            SearchMode::All => "all",
        },
        report.teams,
        report.workers_per_team,
        report.inter_strategy.name(),
        report.intra_strategy.name(),
        report.solution_count(),
        a.nodes_explored,
        a.steals_succeeded,
        a.steals_attempted - a.steals_succeeded,
        report.supplies,
        report.time.as_secs_f64() * 1e3,
    ));
    s.push_str("first_split_value,nodes,percent\n");
    for row in first_value_table(a) {
        s.push_str(&format!("{},{},{:.3}\n", row.value, row.nodes, row.percent));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use stealcsp::models::ModelSpec;
    use stealcsp::runner::{run_in_process, RunConfig};

    #[test]
    fn summary_row_matches_report() {
        let cfg = RunConfig::new(ModelSpec::Queens { n: 6 });
        let report = run_in_process(&cfg).unwrap();
        let text = render(&report);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "config,model,mode,teams,workers,strategy_inter,strategy_intra,solutions,nodes,steals_ok,steals_fail,supplies,time_ms"
        );
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields[1], "queens-6");
        assert_eq!(fields[7], "4"); // solutions
        assert_eq!(fields[9], "0"); // sequential: steals_ok
        assert_eq!(fields[11], "0"); // sequential: supplies
        assert_eq!(lines[2], "first_split_value,nodes,percent");
    }

    #[test]
    fn percent_column_sums_to_100() {
        let cfg = RunConfig::new(ModelSpec::Queens { n: 7 });
        let report = run_in_process(&cfg).unwrap();
        let text = render(&report);
        let sum: f64 = text
            .lines()
            .skip(3)
            .map(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap())
            .sum();
        assert!((sum - 100.0).abs() < 0.1, "percent sum {sum}");
    }
}
