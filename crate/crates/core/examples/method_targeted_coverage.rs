//! Coverage recorded only while the target method runs, compared with
//! whole-process coverage of the same trace.

use harnessgen::coverage::{
    aggregate_full, apply_recording_windows, coverage_percent, EventKind, MethodTotals, Metric,
    RecordingTrace, TraceEvent,
};

fn hit(method: &str, line: u64, timestamp: f64) -> TraceEvent {
    TraceEvent {
        method: method.into(),
        line,
        kind: EventKind::LineHit,
        timestamp,
    }
}

fn main() -> harnessgen::Result<()> {
    // Setup code runs at t=0.5, then two calls into the target between t=1
    // and t=2 and between t=3 and t=4. The helper is also called during
    // setup, which must not count.
    let trace = RecordingTrace {
        totals: vec![
            MethodTotals {
                id: "Lib.setup()".into(),
                lines_total: 4,
                branches_total: 0,
            },
            MethodTotals {
                id: "Lib.target()".into(),
                lines_total: 5,
                branches_total: 0,
            },
            MethodTotals {
                id: "Lib.helper()".into(),
                lines_total: 5,
                branches_total: 0,
            },
        ],
        events: vec![
            hit("Lib.setup()", 1, 0.5),
            hit("Lib.setup()", 2, 0.5),
            hit("Lib.helper()", 5, 0.6),
            hit("Lib.target()", 1, 1.0),
            hit("Lib.helper()", 1, 1.5),
            hit("Lib.target()", 2, 2.0),
            hit("Lib.helper()", 2, 2.5),
            hit("Lib.target()", 3, 3.5),
        ],
        windows: vec![(1.0, 2.0), (3.0, 4.0)],
        campaign_seconds: 5.0,
    };

    let targeted = apply_recording_windows(&trace)?;
    let full = aggregate_full(&trace);
    for (name, report) in [("method-targeted", &targeted), ("full", &full)] {
        println!(
            "{name}: {:.1}% lines",
            coverage_percent(report, Metric::Line).value
        );
        for m in &report.methods {
            println!("  {:<14} {}/{}", m.id, m.lines_covered, m.lines_total);
        }
    }
    Ok(())
}
