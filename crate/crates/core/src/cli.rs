//! Command implementations behind the `wfp` binary: configuration, output
//! rendering, and the exit-code contract.
//!
//! Exit codes: 0 success (valid / completed / sound), 2 parse or validation
//! failure, 3 unreadable file, 4 improper completion, 5 deadlock, 6 exceeded
//! bound (step limit, or-join bound, truncated exploration, script errors at
//! run time).

use std::fs;
use std::path::PathBuf;

use serde::Serialize;

use crate::analyzer::{self, SoundnessReport, DEFAULT_MAX_STATES};
use crate::dsl::{self, ParseFailure};
use crate::dot::export_dot;
use crate::engine::{
    run_to_completion, CaseStatus, Decider, ScriptEntry, DEFAULT_OR_JOIN_BOUND,
    DEFAULT_STEP_LIMIT,
};
use crate::model::{NodeId, ProcessDefinition};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_UNREADABLE: i32 = 3;
pub const EXIT_IMPROPER: i32 = 4;
pub const EXIT_DEADLOCK: i32 = 5;
pub const EXIT_BOUND: i32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Validate,
    Run,
    Explore,
    Dot,
}

/// Everything one invocation needs. `seed` and `decider_script` are mutually
/// exclusive.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input_path: PathBuf,
    pub command: Command,
    pub seed: Option<u64>,
    pub decider_script: Option<PathBuf>,
    pub max_states: usize,
    pub or_join_bound: usize,
    pub step_limit: usize,
    pub output_path: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(command: Command, input_path: impl Into<PathBuf>) -> Self {
        RunConfig {
            input_path: input_path.into(),
            command,
            seed: None,
            decider_script: None,
            max_states: DEFAULT_MAX_STATES,
            or_join_bound: DEFAULT_OR_JOIN_BOUND,
            step_limit: DEFAULT_STEP_LIMIT,
            output_path: None,
        }
    }
}

/// Outcome of one command: what to print, where, and the process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CmdResult {
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl CmdResult {
    fn ok(stdout: String) -> Self {
        CmdResult { exit_code: EXIT_OK, stdout, stderr: String::new() }
    }

    fn fail(exit_code: i32, stderr: String) -> Self {
        CmdResult { exit_code, stdout: String::new(), stderr }
    }
}

/// Runs one command against the configured input file.
pub fn execute(cfg: &RunConfig) -> CmdResult {
    if cfg.seed.is_some() && cfg.decider_script.is_some() {
        return CmdResult::fail(
            EXIT_INVALID,
            "error: --seed and --script are mutually exclusive\n".into(),
        );
    }
    let text = match fs::read_to_string(&cfg.input_path) {
        Ok(text) => text,
        Err(err) => {
            return CmdResult::fail(
                EXIT_UNREADABLE,
                format!("error: cannot read {}: {err}\n", cfg.input_path.display()),
            )
        }
    };
    let def = match dsl::parse(&text) {
        Ok(def) => def,
        Err(ParseFailure::Syntax(errors)) => {
            let mut stderr = String::new();
            for e in errors {
                stderr.push_str(&format!("error: {e}\n"));
            }
            return CmdResult::fail(EXIT_INVALID, stderr);
        }
        Err(ParseFailure::Invalid(report)) => {
            let mut stderr = String::new();
            for v in report.violations {
                stderr.push_str(&format!("error: {v}\n"));
            }
            return CmdResult::fail(EXIT_INVALID, stderr);
        }
    };
    match cfg.command {
        Command::Validate => cmd_validate(&def),
        Command::Run => cmd_run(cfg, &def),
        Command::Explore => cmd_explore(cfg, &def),
        Command::Dot => cmd_dot(&def),
    }
}

fn cmd_validate(def: &ProcessDefinition) -> CmdResult {
    CmdResult::ok(format!(
        "OK: process {}, {} nodes, {} edges\n",
        def.name(),
        def.node_count(),
        def.edge_count()
    ))
}

fn cmd_dot(def: &ProcessDefinition) -> CmdResult {
    CmdResult::ok(export_dot(def))
}

fn cmd_run(cfg: &RunConfig, def: &ProcessDefinition) -> CmdResult {
    let decider = if let Some(path) = &cfg.decider_script {
        match load_script(path) {
            Ok(entries) => Decider::Scripted(entries),
            Err(result) => return result,
        }
    } else if let Some(seed) = cfg.seed {
        Decider::Seeded(seed)
    } else {
        Decider::Deterministic
    };
    match run_to_completion(def, "c1", &decider, cfg.seed, cfg.or_join_bound, cfg.step_limit) {
        Ok((case, log)) => {
            let exit_code = match case.status {
                CaseStatus::Completed => EXIT_OK,
                CaseStatus::CompletedImproperly => EXIT_IMPROPER,
                CaseStatus::Deadlocked => EXIT_DEADLOCK,
                CaseStatus::Running => unreachable!("run loop drains to a terminal status"),
            };
            CmdResult { exit_code, stdout: log.to_jsonl(), stderr: String::new() }
        }
        Err(err) => CmdResult::fail(EXIT_BOUND, format!("error: {}: {err}\n", err.code())),
    }
}

#[derive(Serialize)]
struct ExploreReport<'a> {
    states: usize,
    transitions: usize,
    traces: usize,
    soundness: &'a SoundnessReport,
}

fn cmd_explore(cfg: &RunConfig, def: &ProcessDefinition) -> CmdResult {
    let graph = match analyzer::explore(def, cfg.max_states, cfg.or_join_bound) {
        Ok(graph) => graph,
        Err(err) => return CmdResult::fail(EXIT_BOUND, format!("error: {}: {err}\n", err.code())),
    };
    let traces = analyzer::traces_from_graph(def, &graph, cfg.max_states);
    let report = analyzer::soundness_from_graph(def, &graph);
    let rendered = ExploreReport {
        states: graph.states.len(),
        transitions: graph.transitions.len(),
        traces: traces.len(),
        soundness: &report,
    };
    let stdout = format!(
        "{}\n",
        serde_json::to_string_pretty(&rendered).expect("report serializes")
    );
    let exit_code = if report.sound {
        EXIT_OK
    } else if report.truncated {
        EXIT_BOUND
    } else if !report.deadlock_states.is_empty() {
        EXIT_DEADLOCK
    } else {
        EXIT_IMPROPER
    };
    CmdResult { exit_code, stdout, stderr: String::new() }
}

/// Script file: one decision per line, `<node> <label-or-index>[,<more>]`.
/// Blank lines and `#` comments are skipped.
fn load_script(path: &PathBuf) -> Result<Vec<ScriptEntry>, CmdResult> {
    let text = fs::read_to_string(path).map_err(|err| {
        CmdResult::fail(
            EXIT_UNREADABLE,
            format!("error: cannot read {}: {err}\n", path.display()),
        )
    })?;
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let node_text = parts.next().expect("non-empty line");
        let picks_text = parts.next();
        let bad = |msg: &str| {
            CmdResult::fail(
                EXIT_INVALID,
                format!("error: script line {}: {msg}\n", lineno + 1),
            )
        };
        let node = NodeId::new(node_text).map_err(|_| bad("invalid node id"))?;
        let Some(picks_text) = picks_text else {
            return Err(bad("missing branch choice"));
        };
        if parts.next().is_some() {
            return Err(bad("trailing tokens after the choice"));
        }
        let picks: Vec<String> = picks_text
            .split(',')
            .map(|p| p.trim().to_owned())
            .filter(|p| !p.is_empty())
            .collect();
        if picks.is_empty() {
            return Err(bad("empty branch choice"));
        }
        entries.push(ScriptEntry { node, picks });
    }
    Ok(entries)
}
