//! Agent-driven fuzz harness generation.
//!
//! Five tool-calling agents research a target method, write a harness for
//! it, repair compile errors, judge coverage and refine the harness, with
//! the orchestrator compiling and fuzzing in between. The agents see the
//! target library only through the query tools in [`toolbus`], and coverage
//! is measured only while the target method runs.

pub mod agents;
pub mod callgraph;
pub mod cli;
pub mod code_index;
pub mod coverage;
pub mod docs_index;
pub mod ecosystem;
pub mod error;
pub mod model;
pub mod orchestrator;
pub mod toolbus;

pub use error::{Error, Result};
