use crate::coverage::{AnnotatedCoverageView, AnnotatedNode, ViewDiff};

fn counter_line(entry: &AnnotatedNode) -> String {
    let (lc, lt, bc, bt) = entry.counters.as_ref().map_or((0, 0, 0, 0), |c| {
        (
            c.lines_covered,
            c.lines_total,
            c.branches_covered,
            c.branches_total,
        )
    });
    format!(
        "{} {} lines {lc}/{lt} branches {bc}/{bt}",
        entry.status.as_str(),
        entry.node.id
    )
}

/// Prompt rendering of a coverage view: one section per call depth, with
/// uncovered and partial methods ahead of covered ones.
pub fn render_annotated_view(view: &AnnotatedCoverageView) -> String {
    let mut out = format!(
        "Coverage of methods reachable from {} (depth limit {})\n",
        view.root, view.depth_limit
    );
    for (depth, entries) in &view.groups {
        let mut sorted: Vec<&AnnotatedNode> = entries.iter().collect();
        sorted.sort_by(|a, b| (a.status, &a.node.id).cmp(&(b.status, &b.node.id)));
        out.push_str(&format!("Depth {depth}:\n"));
        for e in sorted {
            out.push_str("  ");
            out.push_str(&counter_line(e));
            out.push('\n');
        }
    }
    out
}

pub fn render_view_diff(diff: &ViewDiff) -> String {
    let list = |v: &[String]| {
        if v.is_empty() {
            "none".to_string()
        } else {
            v.join(", ")
        }
    };
    format!(
        "Line coverage change: {:+.2} points\nNewly covered: {}\nRegressed: {}\n",
        diff.delta_percent,
        list(&diff.newly_covered),
        list(&diff.regressed)
    )
}
