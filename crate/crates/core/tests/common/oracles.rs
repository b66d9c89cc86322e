//! Brute-force reference implementations and random input generators.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use harnessgen::callgraph::{CallFacts, MethodFact};
use harnessgen::coverage::{
    CoverageStatus, EventKind, MethodCoverage, MethodTotals, RecordingTrace, TraceEvent,
};
use rand::Rng;

#[derive(Debug, Clone)]
pub struct Digraph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

pub fn node_id(i: usize) -> String {
    format!("pkg.C{}.m{i}()", i % 4)
}

impl Digraph {
    pub fn facts(&self) -> CallFacts {
        let methods = (0..self.n).map(|i| MethodFact {
            id: node_id(i),
            class: format!("pkg.C{}", i % 4),
        });
        let calls = self.edges.iter().map(|&(a, b)| (node_id(a), node_id(b)));
        CallFacts::new(methods, calls).expect("generated facts are well formed")
    }

    /// Plain BFS over every edge, stopping expansion at `limit`.
    pub fn depths(&self, root: usize, limit: u32) -> BTreeMap<usize, u32> {
        let mut dist = BTreeMap::from([(root, 0u32)]);
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            if dist[&u] == limit {
                continue;
            }
            for &(a, b) in &self.edges {
                if a == u && !dist.contains_key(&b) {
                    dist.insert(b, dist[&u] + 1);
                    queue.push_back(b);
                }
            }
        }
        dist
    }

    /// Distances from `from` using only edges between `allowed` nodes.
    pub fn distances_within(
        &self,
        allowed: &BTreeSet<usize>,
        from: usize,
        max: u32,
    ) -> BTreeMap<usize, u32> {
        let mut dist = BTreeMap::from([(from, 0u32)]);
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            if dist[&u] == max {
                continue;
            }
            for &(a, b) in &self.edges {
                if a == u && allowed.contains(&b) && !dist.contains_key(&b) {
                    dist.insert(b, dist[&u] + 1);
                    queue.push_back(b);
                }
            }
        }
        dist
    }
}

pub fn random_digraph(rng: &mut impl Rng) -> Digraph {
    let n = rng.gen_range(1..=50);
    let m = rng.gen_range(0..=150);
    let edges = (0..m)
        .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n)))
        .collect();
    Digraph { n, edges }
}

/// Random trace whose timestamps and window bounds sit on a quarter-second
/// grid, so events regularly land exactly on a window boundary.
pub fn random_trace(rng: &mut impl Rng) -> RecordingTrace {
    let methods = rng.gen_range(1..=5);
    let totals: Vec<MethodTotals> = (0..methods)
        .map(|i| MethodTotals {
            id: format!("M{i}"),
            lines_total: rng.gen_range(0..=10),
            branches_total: rng.gen_range(0..=6),
        })
        .collect();
    let mut bounds: Vec<u32> = (0..rng.gen_range(0..=8))
        .map(|_| rng.gen_range(0..=400))
        .collect();
    bounds.sort_unstable();
    bounds.dedup();
    let windows: Vec<(f64, f64)> = bounds
        .chunks_exact(2)
        .map(|c| (f64::from(c[0]) / 4.0, f64::from(c[1]) / 4.0))
        .collect();
    let events = (0..rng.gen_range(0..=60))
        .map(|_| {
            let method = rng.gen_range(0..=methods);
            TraceEvent {
                // index `methods` names an undeclared method
                method: format!("M{method}"),
                line: rng.gen_range(1..=12),
                kind: if rng.gen_bool(0.7) {
                    EventKind::LineHit
                } else {
                    EventKind::BranchHit
                },
                timestamp: f64::from(rng.gen_range(0..=400u32)) / 4.0,
            }
        })
        .collect();
    RecordingTrace {
        totals,
        events,
        windows,
        campaign_seconds: 100.0,
    }
}

/// Per-method (lines, branches) covered, counting distinct indices of
/// in-window events, checked against every window linearly.
pub fn windowed_counts(trace: &RecordingTrace, windowed: bool) -> BTreeMap<String, (u64, u64)> {
    let mut out = BTreeMap::new();
    for t in &trace.totals {
        let hits = |kind: EventKind| {
            let set: BTreeSet<u64> = trace
                .events
                .iter()
                .filter(|e| e.method == t.id && e.kind == kind)
                .filter(|e| {
                    !windowed
                        || trace
                            .windows
                            .iter()
                            .any(|&(s, f)| s <= e.timestamp && e.timestamp <= f)
                })
                .map(|e| e.line)
                .collect();
            set.len() as u64
        };
        out.insert(
            t.id.clone(),
            (
                hits(EventKind::LineHit).min(t.lines_total),
                hits(EventKind::BranchHit).min(t.branches_total),
            ),
        );
    }
    out
}

/// Status straight from the definition: covered when every line is hit,
/// partial when some are, uncovered otherwise.
pub fn expected_status(c: Option<&MethodCoverage>) -> CoverageStatus {
    match c {
        None => CoverageStatus::Uncovered,
        Some(c) if c.lines_total == 0 || c.lines_covered == 0 => CoverageStatus::Uncovered,
        Some(c) if c.lines_covered >= c.lines_total => CoverageStatus::Covered,
        Some(_) => CoverageStatus::Partial,
    }
}

pub fn expected_percent(counters: &[&MethodCoverage], lines: bool) -> f64 {
    let (mut covered, mut total) = (0f64, 0f64);
    for c in counters {
        if lines {
            covered += c.lines_covered as f64;
            total += c.lines_total as f64;
        } else {
            covered += c.branches_covered as f64;
            total += c.branches_total as f64;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        covered / total * 100.0
    }
}

pub fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}
