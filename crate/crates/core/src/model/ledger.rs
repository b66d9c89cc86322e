use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Usage;
use crate::toolbus::AgentRole;

/// Currency per token.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub rate_in: f64,
    pub rate_out: f64,
}

impl Rates {
    pub fn cost(&self, tokens_in: u64, tokens_out: u64) -> f64 {
        tokens_in as f64 * self.rate_in + tokens_out as f64 * self.rate_out
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsageEntry {
    pub iterations: u64,
    pub tool_calls: u64,
    pub tokens_in: u64,
    pub tokens_out: u64,
}

impl UsageEntry {
    fn add(&mut self, other: &UsageEntry) {
        self.iterations += other.iterations;
        self.tool_calls += other.tool_calls;
        self.tokens_in += other.tokens_in;
        self.tokens_out += other.tokens_out;
    }
}

/// Per (agent, refinement round) activity and spend.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UsageLedger {
    rates: Rates,
    entries: BTreeMap<AgentRole, BTreeMap<u32, UsageEntry>>,
}

impl UsageLedger {
    pub fn new(rates: Rates) -> Self {
        UsageLedger {
            rates,
            entries: BTreeMap::new(),
        }
    }

    pub fn rates(&self) -> Rates {
        self.rates
    }

    /// Marks that `role` had a turn in `round`, even if it did no work.
    pub fn touch(&mut self, role: AgentRole, round: u32) {
        self.entries
            .entry(role)
            .or_default()
            .entry(round)
            .or_default();
    }

    pub fn record(
        &mut self,
        role: AgentRole,
        round: u32,
        iterations: u64,
        tool_calls: u64,
        usage: Usage,
    ) {
        self.entries
            .entry(role)
            .or_default()
            .entry(round)
            .or_default()
            .add(&UsageEntry {
                iterations,
                tool_calls,
                tokens_in: usage.tokens_in,
                tokens_out: usage.tokens_out,
            });
    }

    pub fn entry(&self, role: AgentRole, round: u32) -> Option<&UsageEntry> {
        self.entries.get(&role)?.get(&round)
    }

    pub fn entries(&self) -> impl Iterator<Item = (AgentRole, u32, &UsageEntry)> {
        self.entries
            .iter()
            .flat_map(|(role, rounds)| rounds.iter().map(move |(r, e)| (*role, *r, e)))
    }

    pub fn totals(&self) -> UsageEntry {
        let mut total = UsageEntry::default();
        for (_, _, e) in self.entries() {
            total.add(e);
        }
        total
    }

    pub fn total_cost(&self) -> f64 {
        let t = self.totals();
        self.rates.cost(t.tokens_in, t.tokens_out)
    }
}

/// One agent's row: per-round iterations and tool calls plus aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsageRow {
    pub agent: String,
    pub rounds: Vec<u32>,
    pub iterations: Vec<u64>,
    pub tool_calls: Vec<u64>,
    pub tokens_in: u64,
    pub tokens_out: u64,
    pub cost: f64,
}

impl UsageRow {
    /// Per-round values joined by `/`, or `--` when the agent never ran.
    pub fn render_per_round(values: &[u64]) -> String {
        if values.is_empty() {
            "--".to_string()
        } else {
            values
                .iter()
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join("/")
        }
    }

    pub fn iterations_cell(&self) -> String {
        Self::render_per_round(&self.iterations)
    }

    pub fn tool_calls_cell(&self) -> String {
        Self::render_per_round(&self.tool_calls)
    }

    pub fn tokens(&self) -> u64 {
        self.tokens_in + self.tokens_out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsageTable {
    pub rows: Vec<UsageRow>,
    pub total_iterations: u64,
    pub total_tool_calls: u64,
    pub total_tokens_in: u64,
    pub total_tokens_out: u64,
    pub total_cost: f64,
}

impl UsageTable {
    pub fn row(&self, agent: &str) -> Option<&UsageRow> {
        self.rows.iter().find(|r| r.agent == agent)
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens_in + self.total_tokens_out
    }
}

/// Rows for RES, GEN, PAT, CVA and REF in that order, plus totals.
pub fn summarize_usage(ledger: &UsageLedger) -> UsageTable {
    let rows = AgentRole::ALL
        .iter()
        .map(|&role| {
            let rounds = ledger.entries.get(&role);
            let per_round: Vec<(u32, &UsageEntry)> =
                rounds.into_iter().flatten().map(|(r, e)| (*r, e)).collect();
            let tokens_in = per_round.iter().map(|(_, e)| e.tokens_in).sum();
            let tokens_out = per_round.iter().map(|(_, e)| e.tokens_out).sum();
            UsageRow {
                agent: role.report_label().to_string(),
                rounds: per_round.iter().map(|(r, _)| *r).collect(),
                iterations: per_round.iter().map(|(_, e)| e.iterations).collect(),
                tool_calls: per_round.iter().map(|(_, e)| e.tool_calls).collect(),
                tokens_in,
                tokens_out,
                cost: ledger.rates.cost(tokens_in, tokens_out),
            }
        })
        .collect();
    let totals = ledger.totals();
    UsageTable {
        rows,
        total_iterations: totals.iterations,
        total_tool_calls: totals.tool_calls,
        total_tokens_in: totals.tokens_in,
        total_tokens_out: totals.tokens_out,
        total_cost: ledger.total_cost(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_ledger_is_all_zero() {
        let t = summarize_usage(&UsageLedger::default());
        assert_eq!(t.rows.len(), 5);
        assert!(t
            .rows
            .iter()
            .all(|r| r.iterations.is_empty() && r.tokens() == 0 && r.cost == 0.0));
        assert_eq!(
            (
                t.total_iterations,
                t.total_tool_calls,
                t.total_tokens(),
                t.total_cost
            ),
            (0, 0, 0, 0.0)
        );
        assert_eq!(t.row("REF").unwrap().iterations_cell(), "--");
    }

    #[test]
    fn per_round_cells_join_with_slashes() {
        let mut l = UsageLedger::new(Rates {
            rate_in: 0.5,
            rate_out: 2.0,
        });
        l.record(
            AgentRole::Patching,
            0,
            5,
            11,
            Usage {
                tokens_in: 10,
                tokens_out: 1,
            },
        );
        for round in 1..4 {
            l.touch(AgentRole::Patching, round);
        }
        let t = summarize_usage(&l);
        let pat = t.row("PAT").unwrap();
        assert_eq!(pat.iterations_cell(), "5/0/0/0");
        assert_eq!(pat.tool_calls_cell(), "11/0/0/0");
        assert_eq!(pat.cost, 10.0 * 0.5 + 2.0);
    }

    #[test]
    fn totals_are_column_sums() {
        let mut l = UsageLedger::new(Rates {
            rate_in: 1e-6,
            rate_out: 3e-6,
        });
        l.record(
            AgentRole::Research,
            0,
            17,
            44,
            Usage {
                tokens_in: 1000,
                tokens_out: 200,
            },
        );
        l.record(
            AgentRole::CoverageAnalysis,
            0,
            16,
            28,
            Usage {
                tokens_in: 500,
                tokens_out: 50,
            },
        );
        l.record(
            AgentRole::CoverageAnalysis,
            1,
            14,
            22,
            Usage {
                tokens_in: 400,
                tokens_out: 40,
            },
        );
        l.record(
            AgentRole::CoverageAnalysis,
            1,
            1,
            0,
            Usage {
                tokens_in: 1,
                tokens_out: 1,
            },
        );
        let t = summarize_usage(&l);
        assert_eq!(t.row("RES").unwrap().iterations_cell(), "17");
        assert_eq!(t.row("CVA").unwrap().iterations_cell(), "16/15");
        assert_eq!(
            t.total_iterations,
            t.rows.iter().flat_map(|r| &r.iterations).sum::<u64>()
        );
        assert_eq!(
            t.total_tool_calls,
            t.rows.iter().flat_map(|r| &r.tool_calls).sum::<u64>()
        );
        assert_eq!(
            t.total_tokens_in,
            t.rows.iter().map(|r| r.tokens_in).sum::<u64>()
        );
        assert!((t.total_cost - (1901.0 * 1e-6 + 291.0 * 3e-6)).abs() < 1e-12);
    }
}
