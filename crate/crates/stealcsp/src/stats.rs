//! Aggregated run statistics and the per-first-split-value work table.

use crate::worker::SearchStats;

/// One team's final accounting, shipped from child processes as a JSON line.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TeamReport {
    pub team: u16,
    pub stats: SearchStats,
    pub supplies_sent: u64,
    pub requests_sent: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirstValueRow {
    pub value: u8,
    pub nodes: u64,
    pub percent: f64,
}

/// Node counts per value of the attribution variable, as percentages of the
/// total. Rows appear in ascending value order; zero rows are skipped.
pub fn first_value_table(stats: &SearchStats) -> Vec<FirstValueRow> {
    let total: u64 = stats.nodes_by_first_value.iter().sum();
    if total == 0 {
        return Vec::new();
    }
    stats
        .nodes_by_first_value
        .iter()
        .enumerate()
        .filter(|(_, &n)| n > 0)
        .map(|(v, &n)| FirstValueRow {
            value: v as u8,
            nodes: n,
            percent: n as f64 * 100.0 / total as f64,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_percentages_sum_to_100() {
        let mut stats = SearchStats::default();
        stats.nodes_by_first_value[1] = 300;
        stats.nodes_by_first_value[2] = 100;
        stats.nodes_by_first_value[9] = 600;
        let table = first_value_table(&stats);
        assert_eq!(table.len(), 3);
        assert_eq!(table[0].value, 1);
        assert!((table.iter().map(|r| r.percent).sum::<f64>() - 100.0).abs() < 1e-9);
        assert!((table[2].percent - 60.0).abs() < 1e-9);
    }

    #[test]
    fn empty_stats_give_empty_table() {
        assert!(first_value_table(&SearchStats::default()).is_empty());
    }
}
