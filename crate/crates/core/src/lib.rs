//! Workflow-pattern engine and analyzer.
//!
//! This crate parses a small textual process language into a token-based net,
//! executes cases of it deterministically or stochastically, and verifies
//! routing semantics and net soundness by bounded state-space exploration.
//!
//! The main pieces:
//!
//! - [`model`]: the process graph (nodes, gateways, edges), markings, and
//!   structural validation via [`model::build_process`].
//! - [`dsl`]: the `.wfp` text format — [`dsl::parse`] and [`dsl::serialize`].
//! - [`dot`]: Graphviz rendering of a definition.
//! - [`engine`]: the token game — enablement, firing rules for the nine
//!   routing patterns (and/xor/or splits and joins, multi-merge,
//!   discriminator, n-of-m), deciders, and [`engine::run_to_completion`].
//! - [`analyzer`]: bounded exhaustive exploration, soundness classification,
//!   trace enumeration, and a brute-force or-join oracle.
//! - [`cli`]: the command implementations behind the `wfp` binary.
//!
//! ```
//! use wfp_core::{dsl, engine};
//!
//! let def = dsl::parse(
//!     "process demo { start s; end e; task greet; s -> greet; greet -> e; }",
//! )
//! .unwrap();
//! let (case, log) = engine::run_to_completion(
//!     &def,
//!     "case-1",
//!     &engine::Decider::Deterministic,
//!     None,
//!     engine::DEFAULT_OR_JOIN_BOUND,
//!     engine::DEFAULT_STEP_LIMIT,
//! )
//! .unwrap();
//! assert_eq!(case.status, engine::CaseStatus::Completed);
//! assert_eq!(log.len(), 3); // started, greet completed, completed
//! ```

pub mod analyzer;
pub mod cli;
pub mod dot;
pub mod dsl;
pub mod engine;
pub mod event;
pub mod model;

pub use analyzer::{check_soundness, enumerate_traces, explore, oracle_or_join, SoundnessReport, StateGraph};
pub use dot::export_dot;
pub use dsl::{parse, serialize, ParseError, ParseFailure};
pub use engine::{
    enabled_elements, evaluate_or_join, fire, run_to_completion, start_case, CaseState,
    CaseStatus, Choice, Decider, Enabled, EngineError, JoinState, OrJoinVerdict,
};
pub use event::{Event, EventKind, EventLog};
pub use model::{
    build_process, Edge, GatewayKind, Marking, NodeId, NodeKind, ProcessDefinition,
    ValidationReport,
};
