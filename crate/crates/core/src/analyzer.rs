//! Bounded exhaustive exploration of a definition's state space, soundness
//! classification, and brute-force oracles used to cross-check the engine.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt::Write;

use serde::Serialize;
use thiserror::Error;

use crate::engine::{
    enabled_elements_bounded, fire_bounded, start_case, CaseState, CaseStatus, Choice, Enabled,
    EngineError, DEFAULT_OR_JOIN_BOUND,
};
use crate::model::{GatewayKind, Marking, NodeId, NodeKind, ProcessDefinition};

/// Ceiling on distinct states stored by one exploration.
pub const DEFAULT_MAX_STATES: usize = 100_000;

/// Canonicalized case snapshot: marking, per-join (fired, arrived) sorted by
/// node id, and terminal status. Join rounds are log metadata and excluded so
/// loop nets stay finite-state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StateSnapshot {
    pub marking: Marking,
    pub join_states: Vec<(NodeId, bool, u32)>,
    pub status: CaseStatus,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub from: usize,
    pub node: NodeId,
    pub choice: Choice,
    pub to: usize,
}

/// Explored reachability graph over canonical case states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateGraph {
    pub states: Vec<StateSnapshot>,
    pub transitions: Vec<Transition>,
    pub initial: usize,
    pub truncated: bool,
}

/// Soundness verdict: no deadlocks, no improper completions, no node that
/// never fires, within the explored bound.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SoundnessReport {
    pub sound: bool,
    pub deadlock_states: Vec<String>,
    pub improper_completion_states: Vec<String>,
    pub dead_nodes: Vec<NodeId>,
    pub truncated: bool,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalyzerError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("oracle state space exceeded the {0}-state cap")]
    OracleCap(usize),
    #[error("node {0} is not an or-join")]
    NotOrJoin(NodeId),
}

impl AnalyzerError {
    pub fn code(&self) -> &'static str {
        match self {
            AnalyzerError::Engine(e) => e.code(),
            AnalyzerError::OracleCap(_) => "ORACLE_CAP",
            AnalyzerError::NotOrJoin(_) => "NOT_ORJOIN",
        }
    }
}

/// Snapshot with the case's own status; used as the dedup key.
fn raw_snapshot(case: &CaseState) -> StateSnapshot {
    StateSnapshot {
        marking: case.marking.clone(),
        join_states: case
            .join_states
            .iter()
            .map(|(id, js)| (id.clone(), js.fired, js.arrived))
            .collect(),
        status: case.status,
    }
}

/// Snapshot with a running-but-stuck case relabeled as deadlocked.
fn snapshot(case: &CaseState, enabled: &[Enabled]) -> StateSnapshot {
    let mut snap = raw_snapshot(case);
    if snap.status == CaseStatus::Running && enabled.is_empty() {
        snap.status = CaseStatus::Deadlocked;
    }
    snap
}

/// Human-readable marking: `from->to:count` for each marked edge, or `empty`.
pub fn marking_summary(def: &ProcessDefinition, marking: &Marking) -> String {
    let parts: Vec<String> = marking
        .marked_edges()
        .map(|(e, c)| format!("{}:{}", def.edge(e).reference(), c))
        .collect();
    if parts.is_empty() {
        "empty".into()
    } else {
        parts.join(", ")
    }
}

/// Breadth-first closure of the firing relation from the initial state,
/// deduplicating canonical states, stopping once `max_states` distinct states
/// are stored (`truncated` set). Discovery order is deterministic.
pub fn explore(
    def: &ProcessDefinition,
    max_states: usize,
    or_join_bound: usize,
) -> Result<StateGraph, EngineError> {
    let (initial, _) = start_case(def, "explore");
    let initial_enabled = enabled_elements_bounded(def, &initial, or_join_bound)?;

    // Dedup on the raw snapshot (status before deadlock normalization), so
    // the enabled set is computed once per distinct state.
    let mut states = vec![snapshot(&initial, &initial_enabled)];
    let mut index: HashMap<StateSnapshot, usize> = HashMap::from([(raw_snapshot(&initial), 0)]);
    let mut transitions = Vec::new();
    let mut truncated = false;
    let mut queue: VecDeque<(usize, CaseState, Vec<Enabled>)> =
        VecDeque::from([(0, initial, initial_enabled)]);

    'bfs: while let Some((from, case, enabled)) = queue.pop_front() {
        for element in &enabled {
            for choice in &element.choices {
                let (next, _) = fire_bounded(def, &case, &element.node, choice, or_join_bound)?;
                let key = raw_snapshot(&next);
                let to = match index.get(&key) {
                    Some(&i) => i,
                    None => {
                        if states.len() >= max_states {
                            truncated = true;
                            break 'bfs;
                        }
                        let next_enabled = if next.status == CaseStatus::Running {
                            enabled_elements_bounded(def, &next, or_join_bound)?
                        } else {
                            Vec::new()
                        };
                        let i = states.len();
                        states.push(snapshot(&next, &next_enabled));
                        index.insert(key, i);
                        queue.push_back((i, next, next_enabled));
                        i
                    }
                };
                transitions.push(Transition {
                    from,
                    node: element.node.clone(),
                    choice: choice.clone(),
                    to,
                });
            }
        }
    }

    Ok(StateGraph { states, transitions, initial: 0, truncated })
}

/// Classifies every explored terminal state and reports nodes that never
/// fire.
pub fn check_soundness(
    def: &ProcessDefinition,
    max_states: usize,
) -> Result<SoundnessReport, EngineError> {
    let graph = explore(def, max_states, DEFAULT_OR_JOIN_BOUND)?;
    Ok(soundness_from_graph(def, &graph))
}

/// The soundness classification of an already-explored graph.
pub fn soundness_from_graph(def: &ProcessDefinition, graph: &StateGraph) -> SoundnessReport {
    let mut deadlock_states = Vec::new();
    let mut improper_completion_states = Vec::new();
    for state in &graph.states {
        match state.status {
            CaseStatus::Deadlocked => {
                deadlock_states.push(marking_summary(def, &state.marking));
            }
            CaseStatus::CompletedImproperly => {
                improper_completion_states.push(marking_summary(def, &state.marking));
            }
            _ => {}
        }
    }
    let fired: HashSet<&NodeId> = graph.transitions.iter().map(|t| &t.node).collect();
    let mut dead_nodes: Vec<NodeId> = def
        .nodes()
        .filter(|(id, kind)| {
            !matches!(kind, NodeKind::Start | NodeKind::End) && !fired.contains(id)
        })
        .map(|(id, _)| id.clone())
        .collect();
    dead_nodes.sort();
    let sound = deadlock_states.is_empty()
        && improper_completion_states.is_empty()
        && dead_nodes.is_empty()
        && !graph.truncated;
    SoundnessReport {
        sound,
        deadlock_states,
        improper_completion_states,
        dead_nodes,
        truncated: graph.truncated,
    }
}

// ---------------------------------------------------------------------------
// Brute-force or-join oracle
// ---------------------------------------------------------------------------

/// Successor relation written independently of the engine, used only by the
/// oracle. States are (marking, per-counting-join (fired, arrived)) with the
/// counting joins in node declaration order.
struct OracleStepper<'a> {
    def: &'a ProcessDefinition,
    counting_joins: Vec<usize>,
    skip: usize,
}

type OracleState = (Marking, Vec<(bool, u32)>);

impl<'a> OracleStepper<'a> {
    fn new(def: &'a ProcessDefinition, skip: usize) -> Self {
        let counting_joins = (0..def.node_count())
            .filter(|&i| {
                matches!(
                    def.kind(i),
                    NodeKind::Gateway(GatewayKind::Discriminator | GatewayKind::NOfM(_))
                )
            })
            .collect();
        OracleStepper { def, counting_joins, skip }
    }

    fn state_of(&self, case: &CaseState) -> OracleState {
        let aux = self
            .counting_joins
            .iter()
            .map(|&i| {
                let js = &case.join_states[self.def.node_id(i)];
                (js.fired, js.arrived)
            })
            .collect();
        (case.marking.clone(), aux)
    }

    fn successors(&self, state: &OracleState) -> Vec<OracleState> {
        let def = self.def;
        let (marking, aux) = state;
        // Once End's edge is marked the case stops; nothing fires afterwards.
        if marking.is_marked(def.end_edge()) {
            return Vec::new();
        }
        let mut out = Vec::new();
        for idx in 0..def.node_count() {
            if idx == self.skip {
                continue;
            }
            let inputs = def.incoming(idx);
            let first_marked = inputs.iter().copied().find(|&e| marking.is_marked(e));
            let consume_one_produce = |consumed: usize, produced: &[usize]| {
                let mut m = marking.clone();
                m.take(consumed);
                for &e in produced {
                    m.add(e);
                }
                (m, aux.clone())
            };
            match def.kind(idx) {
                NodeKind::Start | NodeKind::End => {}
                NodeKind::Task => {
                    if let Some(e) = first_marked {
                        out.push(consume_one_produce(e, &[def.outgoing(idx)[0]]));
                    }
                }
                NodeKind::Gateway(GatewayKind::AndSplit) => {
                    if let Some(e) = first_marked {
                        out.push(consume_one_produce(e, def.outgoing(idx)));
                    }
                }
                NodeKind::Gateway(GatewayKind::XorSplit) => {
                    if let Some(e) = first_marked {
                        for &branch in def.outgoing(idx) {
                            out.push(consume_one_produce(e, &[branch]));
                        }
                    }
                }
                NodeKind::Gateway(GatewayKind::OrSplit) => {
                    if let Some(e) = first_marked {
                        let branches = def.outgoing(idx);
                        for mask in 1u32..(1 << branches.len()) {
                            let subset: Vec<usize> = branches
                                .iter()
                                .enumerate()
                                .filter(|(i, _)| mask & (1 << i) != 0)
                                .map(|(_, &b)| b)
                                .collect();
                            out.push(consume_one_produce(e, &subset));
                        }
                    }
                }
                NodeKind::Gateway(GatewayKind::AndJoin) => {
                    if inputs.iter().all(|&e| marking.is_marked(e)) {
                        let mut m = marking.clone();
                        for &e in inputs {
                            m.take(e);
                        }
                        m.add(def.outgoing(idx)[0]);
                        out.push((m, aux.clone()));
                    }
                }
                NodeKind::Gateway(GatewayKind::XorJoin | GatewayKind::MultiMerge) => {
                    if let Some(e) = first_marked {
                        out.push(consume_one_produce(e, &[def.outgoing(idx)[0]]));
                    }
                }
                NodeKind::Gateway(GatewayKind::OrJoin) => {
                    // Another or-join inside the search: local rule, consume
                    // every marked input.
                    if first_marked.is_some() {
                        let mut m = marking.clone();
                        for &e in inputs {
                            if m.is_marked(e) {
                                m.take(e);
                            }
                        }
                        m.add(def.outgoing(idx)[0]);
                        out.push((m, aux.clone()));
                    }
                }
                NodeKind::Gateway(g @ (GatewayKind::Discriminator | GatewayKind::NOfM(_))) => {
                    if let Some(e) = first_marked {
                        let n = g.fire_threshold().expect("counting join");
                        let pos = self
                            .counting_joins
                            .iter()
                            .position(|&j| j == idx)
                            .expect("join indexed");
                        let mut m = marking.clone();
                        let mut a = aux.clone();
                        m.take(e);
                        let (mut fired, mut arrived) = a[pos];
                        arrived += 1;
                        if !fired && arrived == n {
                            fired = true;
                            m.add(def.outgoing(idx)[0]);
                        }
                        if arrived as usize == inputs.len() {
                            fired = false;
                            arrived = 0;
                        }
                        a[pos] = (fired, arrived);
                        out.push((m, a));
                    }
                }
            }
        }
        out
    }
}

/// Ground-truth or-join answer by depth-first exploration of everything the
/// net can do without firing the join itself: true iff at least one input is
/// marked and no reachable marking marks a currently unmarked input.
pub fn oracle_or_join(
    def: &ProcessDefinition,
    state: &CaseState,
    join: &NodeId,
) -> Result<bool, AnalyzerError> {
    let join_idx = def
        .node_index(join)
        .ok_or_else(|| AnalyzerError::Engine(EngineError::NoNode(join.clone())))?;
    if def.kind(join_idx) != NodeKind::Gateway(GatewayKind::OrJoin) {
        return Err(AnalyzerError::NotOrJoin(join.clone()));
    }
    let inputs = def.incoming(join_idx);
    if !inputs.iter().any(|&e| state.marking.is_marked(e)) {
        return Ok(false);
    }
    let waiting_for: Vec<usize> = inputs
        .iter()
        .copied()
        .filter(|&e| !state.marking.is_marked(e))
        .collect();
    if waiting_for.is_empty() {
        return Ok(true);
    }

    let stepper = OracleStepper::new(def, join_idx);
    let root = stepper.state_of(state);
    let mut seen: HashSet<OracleState> = HashSet::from([root.clone()]);
    let mut stack = vec![root];
    while let Some(current) = stack.pop() {
        for next in stepper.successors(&current) {
            if waiting_for.iter().any(|&e| next.0.is_marked(e)) {
                return Ok(false);
            }
            if seen.contains(&next) {
                continue;
            }
            if seen.len() >= DEFAULT_MAX_STATES {
                return Err(AnalyzerError::OracleCap(DEFAULT_MAX_STATES));
            }
            seen.insert(next.clone());
            stack.push(next);
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Trace enumeration
// ---------------------------------------------------------------------------

fn step_label(def: &ProcessDefinition, node: &NodeId, choice: &Choice) -> String {
    match choice {
        Choice::Default => node.as_str().to_owned(),
        other => format!("{}[{}]", node, other.render(def)),
    }
}

/// Maximal paths of the state graph from the initial state to terminal
/// states, as ordered firing labels. Paths never revisit a state, results
/// are deduplicated, and enumeration stops at `max_traces`.
pub fn enumerate_traces(
    def: &ProcessDefinition,
    max_traces: usize,
    max_states: usize,
) -> Result<BTreeSet<Vec<String>>, EngineError> {
    let graph = explore(def, max_states, DEFAULT_OR_JOIN_BOUND)?;
    Ok(traces_from_graph(def, &graph, max_traces))
}

/// As [`enumerate_traces`], over an already-explored graph.
pub fn traces_from_graph(
    def: &ProcessDefinition,
    graph: &StateGraph,
    max_traces: usize,
) -> BTreeSet<Vec<String>> {
    let mut adjacency: Vec<Vec<&Transition>> = vec![Vec::new(); graph.states.len()];
    for t in &graph.transitions {
        adjacency[t.from].push(t);
    }

    let mut traces = BTreeSet::new();
    let mut on_path = vec![false; graph.states.len()];
    // Iterative DFS: (state, cursor into its transitions).
    let mut stack: Vec<(usize, usize)> = vec![(graph.initial, 0)];
    let mut labels: Vec<String> = Vec::new();
    on_path[graph.initial] = true;

    while let Some((state, cursor)) = stack.pop() {
        if cursor == 0 && adjacency[state].is_empty() {
            traces.insert(labels.clone());
            if traces.len() >= max_traces {
                break;
            }
        }
        match adjacency[state].get(cursor) {
            Some(t) => {
                stack.push((state, cursor + 1));
                if !on_path[t.to] {
                    on_path[t.to] = true;
                    labels.push(step_label(def, &t.node, &t.choice));
                    stack.push((t.to, 0));
                }
            }
            None => {
                on_path[state] = false;
                if !stack.is_empty() {
                    labels.pop();
                }
            }
        }
    }
    traces
}

// ---------------------------------------------------------------------------
// State graph exports
// ---------------------------------------------------------------------------

impl StateGraph {
    /// DOT rendering: states labeled with marking summaries, transitions
    /// labeled with the fired node and choice.
    pub fn to_dot(&self, def: &ProcessDefinition) -> String {
        let mut out = String::from("digraph states {\n");
        for (i, state) in self.states.iter().enumerate() {
            let shape = match state.status {
                CaseStatus::Running => "ellipse",
                CaseStatus::Completed => "doublecircle",
                CaseStatus::CompletedImproperly => "doubleoctagon",
                CaseStatus::Deadlocked => "octagon",
            };
            writeln!(
                out,
                "  {} [shape={}, label=\"{}\"];",
                i,
                shape,
                marking_summary(def, &state.marking).replace('"', "\\\"")
            )
            .unwrap();
        }
        for t in &self.transitions {
            writeln!(
                out,
                "  {} -> {} [label=\"{}\"];",
                t.from,
                t.to,
                step_label(def, &t.node, &t.choice).replace('"', "\\\"")
            )
            .unwrap();
        }
        out.push_str("}\n");
        out
    }

    /// JSON rendering with states and transitions arrays.
    pub fn to_json(&self, def: &ProcessDefinition) -> String {
        #[derive(Serialize)]
        struct JsonState<'a> {
            index: usize,
            status: &'a str,
            marking: BTreeMap<String, u32>,
            #[serde(skip_serializing_if = "BTreeMap::is_empty")]
            joins: BTreeMap<&'a str, (bool, u32)>,
        }
        #[derive(Serialize)]
        struct JsonTransition<'a> {
            from: usize,
            node: &'a str,
            choice: String,
            to: usize,
        }
        #[derive(Serialize)]
        struct JsonGraph<'a> {
            initial: usize,
            truncated: bool,
            states: Vec<JsonState<'a>>,
            transitions: Vec<JsonTransition<'a>>,
        }
        let graph = JsonGraph {
            initial: self.initial,
            truncated: self.truncated,
            states: self
                .states
                .iter()
                .enumerate()
                .map(|(index, s)| JsonState {
                    index,
                    status: match s.status {
                        CaseStatus::Running => "running",
                        CaseStatus::Completed => "completed",
                        CaseStatus::CompletedImproperly => "completed_improperly",
                        CaseStatus::Deadlocked => "deadlocked",
                    },
                    marking: s
                        .marking
                        .marked_edges()
                        .map(|(e, c)| (def.edge(e).reference(), c))
                        .collect(),
                    joins: s
                        .join_states
                        .iter()
                        .map(|(id, fired, arrived)| (id.as_str(), (*fired, *arrived)))
                        .collect(),
                })
                .collect(),
            transitions: self
                .transitions
                .iter()
                .map(|t| JsonTransition {
                    from: t.from,
                    node: t.node.as_str(),
                    choice: t.choice.render(def),
                    to: t.to,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&graph).expect("graph serializes")
    }
}
