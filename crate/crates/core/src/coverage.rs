//! Per-method coverage counters, recording windows and the annotated view.
//!
//! Method-targeted measurement counts only the events that happen while
//! recording is switched on, i.e. while the target method is executing. The
//! harness switches recording off for its own setup code, so incidental
//! initialisation never shows up in the numbers.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::callgraph::{CallGraph, CallGraphNode};
use crate::error::{self, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MethodCoverage {
    pub id: String,
    pub lines_total: u64,
    pub lines_covered: u64,
    pub branches_total: u64,
    pub branches_covered: u64,
}

impl MethodCoverage {
    pub fn empty(id: impl Into<String>, lines_total: u64, branches_total: u64) -> Self {
        MethodCoverage {
            id: id.into(),
            lines_total,
            lines_covered: 0,
            branches_total,
            branches_covered: 0,
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.lines_covered <= self.lines_total && self.branches_covered <= self.branches_total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageScope {
    MethodTargeted,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Line,
    Branch,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportMetadata {
    /// Trace events naming methods without declared totals.
    #[serde(default)]
    pub dropped_events: u64,
}

impl ReportMetadata {
    fn is_empty(&self) -> bool {
        self.dropped_events == 0
    }
}

/// Coverage exchange format:
/// `{"scope": "method_targeted"|"full", "campaign_seconds": n, "methods": [..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub scope: CoverageScope,
    pub campaign_seconds: f64,
    pub methods: Vec<MethodCoverage>,
    #[serde(default, skip_serializing_if = "ReportMetadata::is_empty")]
    pub metadata: ReportMetadata,
}

impl CoverageReport {
    pub fn empty(scope: CoverageScope) -> Self {
        CoverageReport {
            scope,
            campaign_seconds: 0.0,
            methods: Vec::new(),
            metadata: ReportMetadata::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: CoverageReport = error::parse_json(text, "<coverage>")?;
        report.validate()?;
        Ok(report)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let report: CoverageReport = error::read_json(path)?;
        report.validate()?;
        Ok(report)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for (i, m) in self.methods.iter().enumerate() {
            if !seen.insert(m.id.as_str()) {
                return Err(Error::parse(
                    format!("methods[{i}].id"),
                    format!("duplicate method {:?}", m.id),
                ));
            }
            if !m.is_consistent() {
                return Err(Error::parse(
                    format!("methods[{i}]"),
                    "covered exceeds total",
                ));
            }
        }
        if self.campaign_seconds.is_nan() || self.campaign_seconds < 0.0 {
            return Err(Error::parse("campaign_seconds", "must be non-negative"));
        }
        Ok(())
    }

    pub fn method(&self, id: &str) -> Option<&MethodCoverage> {
        self.methods.iter().find(|m| m.id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    LineHit,
    BranchHit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub method: String,
    /// Line number for line hits, branch index for branch hits.
    pub line: u64,
    pub kind: EventKind,
    pub timestamp: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodTotals {
    pub id: String,
    pub lines_total: u64,
    pub branches_total: u64,
}

/// Raw execution events plus the intervals during which recording was on.
/// Windows are closed intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingTrace {
    pub totals: Vec<MethodTotals>,
    pub events: Vec<TraceEvent>,
    pub windows: Vec<(f64, f64)>,
    #[serde(default)]
    pub campaign_seconds: f64,
}

impl RecordingTrace {
    pub fn validate(&self) -> Result<()> {
        for (i, &(start, end)) in self.windows.iter().enumerate() {
            if end < start {
                return Err(Error::BadArgs(format!("window {i} ends before it starts")));
            }
            if i > 0 && start <= self.windows[i - 1].1 {
                return Err(Error::BadArgs(format!(
                    "window {i} overlaps or precedes window {}",
                    i - 1
                )));
            }
        }
        Ok(())
    }

    pub fn in_window(&self, timestamp: f64) -> bool {
        // windows are sorted, so a binary search finds the candidate
        let idx = self
            .windows
            .partition_point(|&(start, _)| start <= timestamp);
        idx > 0 && timestamp <= self.windows[idx - 1].1
    }
}

/// Counts only events inside a recording window.
pub fn apply_recording_windows(trace: &RecordingTrace) -> Result<CoverageReport> {
    trace.validate()?;
    Ok(aggregate(trace, CoverageScope::MethodTargeted, |e| {
        trace.in_window(e.timestamp)
    }))
}

/// Counts every event regardless of recording state.
pub fn aggregate_full(trace: &RecordingTrace) -> CoverageReport {
    aggregate(trace, CoverageScope::Full, |_| true)
}

fn aggregate(
    trace: &RecordingTrace,
    scope: CoverageScope,
    keep: impl Fn(&TraceEvent) -> bool,
) -> CoverageReport {
    let mut lines: BTreeMap<&str, BTreeSet<u64>> = BTreeMap::new();
    let mut branches: BTreeMap<&str, BTreeSet<u64>> = BTreeMap::new();
    let totals: BTreeMap<&str, &MethodTotals> =
        trace.totals.iter().map(|t| (t.id.as_str(), t)).collect();
    let mut dropped = 0;
    for event in &trace.events {
        if !totals.contains_key(event.method.as_str()) {
            log::warn!(
                "dropping coverage event for undeclared method {}",
                event.method
            );
            dropped += 1;
            continue;
        }
        if !keep(event) {
            continue;
        }
        let target = match event.kind {
            EventKind::LineHit => &mut lines,
            EventKind::BranchHit => &mut branches,
        };
        target
            .entry(event.method.as_str())
            .or_default()
            .insert(event.line);
    }
    let methods = trace
        .totals
        .iter()
        .map(|t| {
            let count = |m: &BTreeMap<&str, BTreeSet<u64>>, total: u64| {
                m.get(t.id.as_str())
                    .map_or(0, |s| (s.len() as u64).min(total))
            };
            MethodCoverage {
                id: t.id.clone(),
                lines_total: t.lines_total,
                lines_covered: count(&lines, t.lines_total),
                branches_total: t.branches_total,
                branches_covered: count(&branches, t.branches_total),
            }
        })
        .collect();
    CoverageReport {
        scope,
        campaign_seconds: trace.campaign_seconds,
        methods,
        metadata: ReportMetadata {
            dropped_events: dropped,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoverageStatus {
    Uncovered,
    Partial,
    Covered,
}

impl CoverageStatus {
    /// Classification by line counters; absent counters are uncovered.
    pub fn classify(counters: Option<&MethodCoverage>) -> Self {
        match counters {
            Some(c) if c.lines_total > 0 && c.lines_covered == c.lines_total => {
                CoverageStatus::Covered
            }
            Some(c) if c.lines_covered > 0 && c.lines_covered < c.lines_total => {
                CoverageStatus::Partial
            }
            _ => CoverageStatus::Uncovered,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CoverageStatus::Uncovered => "uncovered",
            CoverageStatus::Partial => "partial",
            CoverageStatus::Covered => "covered",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedNode {
    pub node: CallGraphNode,
    pub status: CoverageStatus,
    pub counters: Option<MethodCoverage>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedCoverageView {
    pub root: String,
    pub depth_limit: u32,
    /// Nodes keyed by call depth, ordered by id within each depth.
    pub groups: BTreeMap<u32, Vec<AnnotatedNode>>,
    /// Report entries with no matching callgraph node.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ignored_methods: Vec<String>,
}

impl AnnotatedCoverageView {
    pub fn entries(&self) -> impl Iterator<Item = &AnnotatedNode> {
        self.groups.values().flatten()
    }

    pub fn status_of(&self, id: &str) -> Option<CoverageStatus> {
        self.entries().find(|e| e.node.id == id).map(|e| e.status)
    }

    fn statuses(&self) -> BTreeMap<&str, CoverageStatus> {
        self.entries()
            .map(|e| (e.node.id.as_str(), e.status))
            .collect()
    }
}

pub fn merge_with_callgraph(report: &CoverageReport, graph: &CallGraph) -> AnnotatedCoverageView {
    let by_id: BTreeMap<&str, &MethodCoverage> =
        report.methods.iter().map(|m| (m.id.as_str(), m)).collect();
    let mut groups: BTreeMap<u32, Vec<AnnotatedNode>> = BTreeMap::new();
    for node in graph.nodes() {
        let counters = by_id.get(node.id.as_str()).map(|c| (*c).clone());
        groups.entry(node.depth).or_default().push(AnnotatedNode {
            node: node.clone(),
            status: CoverageStatus::classify(counters.as_ref()),
            counters,
        });
    }
    for group in groups.values_mut() {
        group.sort_by(|a, b| a.node.id.cmp(&b.node.id));
    }
    let ignored_methods = report
        .methods
        .iter()
        .filter(|m| graph.node(&m.id).is_none())
        .map(|m| m.id.clone())
        .collect();
    AnnotatedCoverageView {
        root: graph.root().to_string(),
        depth_limit: graph.depth_limit(),
        groups,
        ignored_methods,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Percentage {
    pub value: f64,
    /// Set when nothing was measurable, so `value` is a placeholder 0.
    pub zero_denominator: bool,
}

/// Anything that yields per-method counters.
pub trait CoverageCounters {
    fn counters(&self) -> Box<dyn Iterator<Item = &MethodCoverage> + '_>;
}

impl CoverageCounters for CoverageReport {
    fn counters(&self) -> Box<dyn Iterator<Item = &MethodCoverage> + '_> {
        Box::new(self.methods.iter())
    }
}

impl CoverageCounters for AnnotatedCoverageView {
    fn counters(&self) -> Box<dyn Iterator<Item = &MethodCoverage> + '_> {
        Box::new(self.entries().filter_map(|e| e.counters.as_ref()))
    }
}

impl CoverageCounters for [MethodCoverage] {
    fn counters(&self) -> Box<dyn Iterator<Item = &MethodCoverage> + '_> {
        Box::new(self.iter())
    }
}

pub fn coverage_percent<C: CoverageCounters + ?Sized>(source: &C, metric: Metric) -> Percentage {
    let (covered, total) = source
        .counters()
        .fold((0u64, 0u64), |(c, t), m| match metric {
            Metric::Line => (c + m.lines_covered, t + m.lines_total),
            Metric::Branch => (c + m.branches_covered, t + m.branches_total),
        });
    if total == 0 {
        Percentage {
            value: 0.0,
            zero_denominator: true,
        }
    } else {
        Percentage {
            value: 100.0 * covered as f64 / total as f64,
            zero_denominator: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewDiff {
    pub newly_covered: Vec<String>,
    pub regressed: Vec<String>,
    pub delta_percent: f64,
}

/// Status transitions between two views over the same callgraph.
pub fn diff_views(prev: &AnnotatedCoverageView, curr: &AnnotatedCoverageView) -> Result<ViewDiff> {
    let before = prev.statuses();
    let after = curr.statuses();
    if prev.root != curr.root || !before.keys().eq(after.keys()) {
        return Err(Error::BadArgs(
            "coverage views cover different callgraphs".into(),
        ));
    }
    let mut newly_covered = Vec::new();
    let mut regressed = Vec::new();
    for (id, &now) in &after {
        let then = before[id];
        if now == CoverageStatus::Covered && then != CoverageStatus::Covered {
            newly_covered.push(id.to_string());
        }
        if now < then {
            regressed.push(id.to_string());
        }
    }
    Ok(ViewDiff {
        newly_covered,
        regressed,
        delta_percent: coverage_percent(curr, Metric::Line).value
            - coverage_percent(prev, Metric::Line).value,
    })
}
