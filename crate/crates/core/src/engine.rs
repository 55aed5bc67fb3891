//! Token-game execution: enablement, firing rules, deciders, and case runs.

use std::collections::{BTreeMap, HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::event::{Event, EventKind, EventLog};
use crate::model::{GatewayKind, Marking, NodeId, NodeKind, ProcessDefinition};

/// Ceiling on the reachability search behind one or-join decision.
pub const DEFAULT_OR_JOIN_BOUND: usize = 10_000;
/// Ceiling on firings in one run before a livelock is suspected.
pub const DEFAULT_STEP_LIMIT: usize = 10_000;

/// Per-round progress of a discriminator or n-of-m join.
///
/// `arrived` counts tokens consumed in the current round; once it reaches the
/// join's in-degree the state resets to `(fired: false, arrived: 0)` and
/// `round` increments.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JoinState {
    pub fired: bool,
    pub arrived: u32,
    pub round: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CaseStatus {
    Running,
    Completed,
    CompletedImproperly,
    Deadlocked,
}

/// Full state of one case: marking, join bookkeeping, next event number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseState {
    pub case_id: String,
    pub marking: Marking,
    pub join_states: BTreeMap<NodeId, JoinState>,
    pub seq: u64,
    pub status: CaseStatus,
}

impl CaseState {
    fn emit(&mut self, events: &mut Vec<Event>, kind: EventKind, node: Option<NodeId>, detail: Option<String>) {
        events.push(Event {
            case_id: self.case_id.clone(),
            seq: self.seq,
            kind,
            node,
            detail,
        });
        self.seq += 1;
    }
}

/// A branch decision for one firing. `Branch` carries the chosen outgoing
/// edge of an exclusive split; `Branches` the chosen subset of a multi-choice
/// split, ascending by edge index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Choice {
    Default,
    Branch(usize),
    Branches(Vec<usize>),
}

impl Choice {
    /// Branch names as they appear in logs and traces.
    pub fn render(&self, def: &ProcessDefinition) -> String {
        match self {
            Choice::Default => "default".into(),
            Choice::Branch(e) => def.branch_name(*e),
            Choice::Branches(es) => es
                .iter()
                .map(|&e| def.branch_name(e))
                .collect::<Vec<_>>()
                .join(","),
        }
    }
}

/// A node whose firing rule is currently satisfied, with its choice domain in
/// canonical order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enabled {
    pub node: NodeId,
    pub choices: Vec<Choice>,
}

/// External source of branch decisions.
#[derive(Debug, Clone)]
pub enum Decider {
    /// Always the first choice in canonical order.
    Deterministic,
    /// Uniform choice from a seeded stream.
    Seeded(u64),
    /// Pre-scripted decisions, consumed in order; one entry per split firing.
    Scripted(Vec<ScriptEntry>),
}

/// One scripted decision: branch labels (or positional indices) for the named
/// split node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptEntry {
    pub node: NodeId,
    pub picks: Vec<String>,
}

/// Answer of the non-local or-join enablement question.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrJoinVerdict {
    Fire,
    Wait,
    BoundExceeded,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("case {0:?} is not running")]
    NotRunning(String),
    #[error("node {0} is not enabled")]
    NotEnabled(NodeId),
    #[error("invalid choice for node {node}: {reason}")]
    BadChoice { node: NodeId, reason: String },
    #[error("node {0} is not an or-join")]
    NotOrJoin(NodeId),
    #[error("or-join {join}: reachability search exceeded {bound} markings")]
    OrJoinBound { join: NodeId, bound: usize },
    #[error("step limit {0} exceeded; suspected livelock")]
    StepLimit(usize),
    #[error("scripted decider exhausted at node {0}")]
    ScriptShort(NodeId),
    #[error("unknown node {0}")]
    NoNode(NodeId),
}

impl EngineError {
    /// Stable error code, as used by the command-line frontend.
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::NotRunning(_) => "NOT_RUNNING",
            EngineError::NotEnabled(_) => "NOT_ENABLED",
            EngineError::BadChoice { .. } => "BAD_CHOICE",
            EngineError::NotOrJoin(_) => "NOT_ORJOIN",
            EngineError::OrJoinBound { .. } => "ORJOIN_BOUND",
            EngineError::StepLimit(_) => "STEP_LIMIT",
            EngineError::ScriptShort(_) => "SCRIPT_SHORT",
            EngineError::NoNode(_) => "NO_NODE",
        }
    }
}

/// Creates a fresh case: one token on Start's outgoing edge, join state
/// zeroed, and the `case_started` event at sequence 0.
pub fn start_case(def: &ProcessDefinition, case_id: impl Into<String>) -> (CaseState, Vec<Event>) {
    let mut join_states = BTreeMap::new();
    for (id, kind) in def.nodes() {
        if kind.gateway().and_then(GatewayKind::fire_threshold).is_some() {
            join_states.insert(id.clone(), JoinState::default());
        }
    }
    let mut state = CaseState {
        case_id: case_id.into(),
        marking: Marking::initial(def),
        join_states,
        seq: 0,
        status: CaseStatus::Running,
    };
    let mut events = Vec::new();
    state.emit(&mut events, EventKind::CaseStarted, None, None);
    (state, events)
}

/// Choice domain of a node under the local firing rules, or `None` when the
/// rule is unsatisfied. Or-joins use the local any-input-marked rule here;
/// callers that need the non-local decision go through [`evaluate_or_join`].
fn local_choices(def: &ProcessDefinition, marking: &Marking, idx: usize) -> Option<Vec<Choice>> {
    let any_in_marked = || def.incoming(idx).iter().any(|&e| marking.is_marked(e));
    match def.kind(idx) {
        NodeKind::Start | NodeKind::End => None,
        NodeKind::Task => {
            marking.is_marked(def.incoming(idx)[0]).then(|| vec![Choice::Default])
        }
        NodeKind::Gateway(g) => match g {
            GatewayKind::AndSplit => {
                marking.is_marked(def.incoming(idx)[0]).then(|| vec![Choice::Default])
            }
            GatewayKind::XorSplit => marking.is_marked(def.incoming(idx)[0]).then(|| {
                def.outgoing(idx).iter().map(|&e| Choice::Branch(e)).collect()
            }),
            GatewayKind::OrSplit => marking.is_marked(def.incoming(idx)[0]).then(|| {
                let out = def.outgoing(idx);
                // Non-empty subsets in binary-counting order over the
                // outgoing declaration order.
                (1u32..(1 << out.len()))
                    .map(|mask| {
                        Choice::Branches(
                            out.iter()
                                .enumerate()
                                .filter(|(i, _)| mask & (1 << i) != 0)
                                .map(|(_, &e)| e)
                                .collect(),
                        )
                    })
                    .collect()
            }),
            GatewayKind::AndJoin => def
                .incoming(idx)
                .iter()
                .all(|&e| marking.is_marked(e))
                .then(|| vec![Choice::Default]),
            GatewayKind::XorJoin
            | GatewayKind::MultiMerge
            | GatewayKind::OrJoin
            | GatewayKind::Discriminator
            | GatewayKind::NOfM(_) => any_in_marked().then(|| vec![Choice::Default]),
        },
    }
}

/// Enabled nodes in canonical order (node id ascending) with their choice
/// domains, using the default or-join bound.
pub fn enabled_elements(def: &ProcessDefinition, case: &CaseState) -> Result<Vec<Enabled>, EngineError> {
    enabled_elements_bounded(def, case, DEFAULT_OR_JOIN_BOUND)
}

/// As [`enabled_elements`], with an explicit bound on each or-join decision.
pub fn enabled_elements_bounded(
    def: &ProcessDefinition,
    case: &CaseState,
    or_join_bound: usize,
) -> Result<Vec<Enabled>, EngineError> {
    if case.status != CaseStatus::Running {
        return Err(EngineError::NotRunning(case.case_id.clone()));
    }
    let mut out = Vec::new();
    for &idx in def.nodes_by_id() {
        let Some(choices) = local_choices(def, &case.marking, idx) else {
            continue;
        };
        if def.kind(idx) == NodeKind::Gateway(GatewayKind::OrJoin) {
            match evaluate_or_join(def, case, def.node_id(idx), or_join_bound)? {
                OrJoinVerdict::Fire => {}
                OrJoinVerdict::Wait => continue,
                OrJoinVerdict::BoundExceeded => {
                    return Err(EngineError::OrJoinBound {
                        join: def.node_id(idx).clone(),
                        bound: or_join_bound,
                    })
                }
            }
        }
        out.push(Enabled { node: def.node_id(idx).clone(), choices });
    }
    Ok(out)
}

/// What applying one firing did, as needed for event emission.
enum StepOutcome {
    Produced,
    FiredRound(u64),
    AbsorbedRound(u64),
}

/// Applies the marking and join-state effects of firing `idx` with `choice`.
/// The caller has verified enablement and choice validity.
fn apply_firing(
    def: &ProcessDefinition,
    idx: usize,
    choice: &Choice,
    marking: &mut Marking,
    join_states: &mut BTreeMap<NodeId, JoinState>,
) -> StepOutcome {
    let take_first_marked_input = |marking: &mut Marking| {
        let &edge = def
            .incoming(idx)
            .iter()
            .find(|&&e| marking.is_marked(e))
            .expect("enablement checked");
        marking.take(edge);
    };
    match def.kind(idx) {
        NodeKind::Start | NodeKind::End => unreachable!("start/end never fire"),
        NodeKind::Task => {
            marking.take(def.incoming(idx)[0]);
            marking.add(def.outgoing(idx)[0]);
            StepOutcome::Produced
        }
        NodeKind::Gateway(g) => match g {
            GatewayKind::AndSplit => {
                marking.take(def.incoming(idx)[0]);
                for &e in def.outgoing(idx) {
                    marking.add(e);
                }
                StepOutcome::Produced
            }
            GatewayKind::XorSplit => {
                let Choice::Branch(e) = choice else { unreachable!("validated") };
                marking.take(def.incoming(idx)[0]);
                marking.add(*e);
                StepOutcome::Produced
            }
            GatewayKind::OrSplit => {
                let Choice::Branches(es) = choice else { unreachable!("validated") };
                marking.take(def.incoming(idx)[0]);
                for &e in es {
                    marking.add(e);
                }
                StepOutcome::Produced
            }
            GatewayKind::AndJoin => {
                for &e in def.incoming(idx) {
                    marking.take(e);
                }
                marking.add(def.outgoing(idx)[0]);
                StepOutcome::Produced
            }
            GatewayKind::XorJoin | GatewayKind::MultiMerge => {
                take_first_marked_input(marking);
                marking.add(def.outgoing(idx)[0]);
                StepOutcome::Produced
            }
            GatewayKind::OrJoin => {
                // Synchronize every active branch: one token from each
                // marked input, one token downstream.
                for &e in def.incoming(idx) {
                    if marking.is_marked(e) {
                        marking.take(e);
                    }
                }
                marking.add(def.outgoing(idx)[0]);
                StepOutcome::Produced
            }
            GatewayKind::Discriminator | GatewayKind::NOfM(_) => {
                let n = g.fire_threshold().expect("counting join");
                take_first_marked_input(marking);
                let js = join_states
                    .get_mut(def.node_id(idx))
                    .expect("join state initialized");
                js.arrived += 1;
                let round = js.round;
                let outcome = if !js.fired && js.arrived == n {
                    js.fired = true;
                    marking.add(def.outgoing(idx)[0]);
                    StepOutcome::FiredRound(round)
                } else {
                    StepOutcome::AbsorbedRound(round)
                };
                if js.arrived as usize == def.incoming(idx).len() {
                    js.fired = false;
                    js.arrived = 0;
                    js.round += 1;
                }
                outcome
            }
        },
    }
}

fn validate_choice(
    def: &ProcessDefinition,
    idx: usize,
    choice: &Choice,
) -> Result<Choice, EngineError> {
    let node = def.node_id(idx);
    let bad = |reason: &str| EngineError::BadChoice {
        node: node.clone(),
        reason: reason.into(),
    };
    match def.kind(idx).gateway() {
        Some(GatewayKind::XorSplit) => match choice {
            Choice::Branch(e) if def.outgoing(idx).contains(e) => Ok(choice.clone()),
            Choice::Branch(_) => Err(bad("chosen edge does not leave this node")),
            _ => Err(bad("exclusive split needs a single branch choice")),
        },
        Some(GatewayKind::OrSplit) => match choice {
            Choice::Branches(es) => {
                if es.is_empty() {
                    return Err(bad("multi-choice subset must be non-empty"));
                }
                let mut sorted = es.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != es.len() {
                    return Err(bad("duplicate branch in subset"));
                }
                if !sorted.iter().all(|e| def.outgoing(idx).contains(e)) {
                    return Err(bad("chosen edge does not leave this node"));
                }
                Ok(Choice::Branches(sorted))
            }
            _ => Err(bad("multi-choice split needs a branch subset")),
        },
        _ => match choice {
            Choice::Default => Ok(Choice::Default),
            _ => Err(bad("node has no branch choices")),
        },
    }
}

/// Fires an enabled node, returning the successor state and the events the
/// firing emitted. A token reaching End is consumed immediately: the case
/// completes (empty marking) or completes improperly (tokens remain).
pub fn fire(
    def: &ProcessDefinition,
    case: &CaseState,
    node: &NodeId,
    choice: &Choice,
) -> Result<(CaseState, Vec<Event>), EngineError> {
    fire_bounded(def, case, node, choice, DEFAULT_OR_JOIN_BOUND)
}

/// As [`fire`], with an explicit bound on the or-join decision.
pub fn fire_bounded(
    def: &ProcessDefinition,
    case: &CaseState,
    node: &NodeId,
    choice: &Choice,
    or_join_bound: usize,
) -> Result<(CaseState, Vec<Event>), EngineError> {
    if case.status != CaseStatus::Running {
        return Err(EngineError::NotRunning(case.case_id.clone()));
    }
    let idx = def
        .node_index(node)
        .ok_or_else(|| EngineError::NoNode(node.clone()))?;
    if local_choices(def, &case.marking, idx).is_none() {
        return Err(EngineError::NotEnabled(node.clone()));
    }
    if def.kind(idx) == NodeKind::Gateway(GatewayKind::OrJoin) {
        match evaluate_or_join(def, case, node, or_join_bound)? {
            OrJoinVerdict::Fire => {}
            OrJoinVerdict::Wait => return Err(EngineError::NotEnabled(node.clone())),
            OrJoinVerdict::BoundExceeded => {
                return Err(EngineError::OrJoinBound { join: node.clone(), bound: or_join_bound })
            }
        }
    }
    let choice = validate_choice(def, idx, choice)?;

    let mut next = case.clone();
    let mut events = Vec::new();
    let outcome = apply_firing(def, idx, &choice, &mut next.marking, &mut next.join_states);
    match (def.kind(idx), outcome) {
        (NodeKind::Task, _) => {
            next.emit(&mut events, EventKind::TaskCompleted, Some(node.clone()), None);
        }
        (NodeKind::Gateway(g), StepOutcome::Produced) => {
            let detail = match g {
                GatewayKind::XorSplit | GatewayKind::OrSplit => Some(choice.render(def)),
                _ => None,
            };
            next.emit(&mut events, EventKind::GatewayFired, Some(node.clone()), detail);
        }
        (NodeKind::Gateway(_), StepOutcome::FiredRound(round)) => {
            next.emit(
                &mut events,
                EventKind::GatewayFired,
                Some(node.clone()),
                Some(round.to_string()),
            );
        }
        (NodeKind::Gateway(_), StepOutcome::AbsorbedRound(round)) => {
            next.emit(
                &mut events,
                EventKind::TokenAbsorbed,
                Some(node.clone()),
                Some(round.to_string()),
            );
        }
        (NodeKind::Start | NodeKind::End, _) => unreachable!(),
    }

    let end_edge = def.end_edge();
    if next.marking.is_marked(end_edge) {
        next.marking.take(end_edge);
        if next.marking.is_empty() {
            next.status = CaseStatus::Completed;
            next.emit(&mut events, EventKind::CaseCompleted, None, None);
        } else {
            next.status = CaseStatus::CompletedImproperly;
            next.emit(&mut events, EventKind::CaseCompletedImproperly, None, None);
        }
    }
    Ok((next, events))
}

/// Non-local or-join enablement: fire iff at least one input is marked and no
/// marking reachable without firing the join itself can mark a currently
/// unmarked input.
///
/// The reachability search explores every element and every choice, capped at
/// `bound` distinct states; overtaking the cap yields `BoundExceeded` rather
/// than a guess. Other or-joins encountered during the search fire under the
/// local any-input-marked rule.
pub fn evaluate_or_join(
    def: &ProcessDefinition,
    case: &CaseState,
    join: &NodeId,
    bound: usize,
) -> Result<OrJoinVerdict, EngineError> {
    let join_idx = def
        .node_index(join)
        .ok_or_else(|| EngineError::NoNode(join.clone()))?;
    if def.kind(join_idx) != NodeKind::Gateway(GatewayKind::OrJoin) {
        return Err(EngineError::NotOrJoin(join.clone()));
    }
    let inputs = def.incoming(join_idx);
    if !inputs.iter().any(|&e| case.marking.is_marked(e)) {
        return Ok(OrJoinVerdict::Wait);
    }
    let waiting_for: Vec<usize> = inputs
        .iter()
        .copied()
        .filter(|&e| !case.marking.is_marked(e))
        .collect();
    if waiting_for.is_empty() {
        return Ok(OrJoinVerdict::Fire);
    }

    // Sub-state key: marking plus per-join (fired, arrived). Rounds are log
    // metadata and excluding them keeps loop nets finite.
    let canon = |marking: &Marking, joins: &BTreeMap<NodeId, JoinState>| {
        let aux: Vec<(bool, u32)> = joins.values().map(|j| (j.fired, j.arrived)).collect();
        (marking.clone(), aux)
    };

    let end_edge = def.end_edge();
    let mut seen: HashSet<(Marking, Vec<(bool, u32)>)> = HashSet::new();
    let mut queue: VecDeque<(Marking, BTreeMap<NodeId, JoinState>)> = VecDeque::new();
    seen.insert(canon(&case.marking, &case.join_states));
    queue.push_back((case.marking.clone(), case.join_states.clone()));

    while let Some((marking, joins)) = queue.pop_front() {
        // A token on End's edge stops the case; nothing fires afterwards.
        if marking.is_marked(end_edge) {
            continue;
        }
        for &idx in def.nodes_by_id() {
            if idx == join_idx {
                continue;
            }
            let Some(choices) = local_choices(def, &marking, idx) else {
                continue;
            };
            for choice in &choices {
                let mut next_marking = marking.clone();
                let mut next_joins = joins.clone();
                apply_firing(def, idx, choice, &mut next_marking, &mut next_joins);
                if waiting_for.iter().any(|&e| next_marking.is_marked(e)) {
                    return Ok(OrJoinVerdict::Wait);
                }
                let key = canon(&next_marking, &next_joins);
                if seen.contains(&key) {
                    continue;
                }
                if seen.len() >= bound {
                    return Ok(OrJoinVerdict::BoundExceeded);
                }
                seen.insert(key);
                queue.push_back((next_marking, next_joins));
            }
        }
    }
    Ok(OrJoinVerdict::Fire)
}

struct DeciderSession<'a> {
    decider: &'a Decider,
    rng: Option<ChaCha8Rng>,
    cursor: usize,
}

impl<'a> DeciderSession<'a> {
    fn new(decider: &'a Decider) -> Self {
        let rng = match decider {
            Decider::Seeded(seed) => Some(ChaCha8Rng::seed_from_u64(*seed)),
            _ => None,
        };
        DeciderSession { decider, rng, cursor: 0 }
    }

    fn choose(&mut self, def: &ProcessDefinition, enabled: &Enabled) -> Result<Choice, EngineError> {
        if enabled.choices.len() == 1 && enabled.choices[0] == Choice::Default {
            return Ok(Choice::Default);
        }
        match self.decider {
            Decider::Deterministic => Ok(enabled.choices[0].clone()),
            Decider::Seeded(_) => {
                let rng = self.rng.as_mut().expect("seeded session has rng");
                let pick = rng.gen_range(0..enabled.choices.len());
                Ok(enabled.choices[pick].clone())
            }
            Decider::Scripted(entries) => {
                let Some(entry) = entries.get(self.cursor) else {
                    return Err(EngineError::ScriptShort(enabled.node.clone()));
                };
                self.cursor += 1;
                if entry.node != enabled.node {
                    return Err(EngineError::BadChoice {
                        node: enabled.node.clone(),
                        reason: format!("script supplies a decision for {} here", entry.node),
                    });
                }
                resolve_picks(def, &enabled.node, &entry.picks)
            }
        }
    }
}

/// Resolves script tokens (edge label, or 0-based position among the node's
/// outgoing edges) into a concrete choice for the split.
pub fn resolve_picks(
    def: &ProcessDefinition,
    node: &NodeId,
    picks: &[String],
) -> Result<Choice, EngineError> {
    let idx = def
        .node_index(node)
        .ok_or_else(|| EngineError::NoNode(node.clone()))?;
    let bad = |reason: String| EngineError::BadChoice { node: node.clone(), reason };
    let out = def.outgoing(idx);
    let resolve_one = |token: &str| -> Result<usize, EngineError> {
        if let Ok(pos) = token.parse::<usize>() {
            return out
                .get(pos)
                .copied()
                .ok_or_else(|| bad(format!("branch index {pos} out of range")));
        }
        out.iter()
            .copied()
            .find(|&e| def.edge(e).label.as_deref() == Some(token))
            .ok_or_else(|| bad(format!("no outgoing branch labeled {token:?}")))
    };
    match def.kind(idx).gateway() {
        Some(GatewayKind::XorSplit) => {
            if picks.len() != 1 {
                return Err(bad("exclusive split takes exactly one branch".into()));
            }
            Ok(Choice::Branch(resolve_one(&picks[0])?))
        }
        Some(GatewayKind::OrSplit) => {
            if picks.is_empty() {
                return Err(bad("multi-choice split takes at least one branch".into()));
            }
            let mut edges = picks.iter().map(|p| resolve_one(p)).collect::<Result<Vec<_>, _>>()?;
            edges.sort_unstable();
            edges.dedup();
            Ok(Choice::Branches(edges))
        }
        _ => Err(bad("node takes no branch decision".into())),
    }
}

/// Runs one case to a terminal status. The scheduler picks the smallest
/// enabled node id, or uniformly under `scheduler_seed`; branch decisions
/// come from the decider. Runs are deterministic given both.
pub fn run_to_completion(
    def: &ProcessDefinition,
    case_id: impl Into<String>,
    decider: &Decider,
    scheduler_seed: Option<u64>,
    or_join_bound: usize,
    step_limit: usize,
) -> Result<(CaseState, EventLog), EngineError> {
    let (mut case, events) = start_case(def, case_id);
    let mut log = EventLog::new();
    log.append(events);
    let mut scheduler = scheduler_seed.map(ChaCha8Rng::seed_from_u64);
    let mut session = DeciderSession::new(decider);
    let mut steps = 0usize;

    while case.status == CaseStatus::Running {
        let enabled = enabled_elements_bounded(def, &case, or_join_bound)?;
        if enabled.is_empty() {
            case.status = CaseStatus::Deadlocked;
            let mut events = Vec::new();
            case.emit(&mut events, EventKind::CaseDeadlocked, None, None);
            log.append(events);
            break;
        }
        if steps >= step_limit {
            return Err(EngineError::StepLimit(step_limit));
        }
        steps += 1;
        let pick = match scheduler.as_mut() {
            Some(rng) => rng.gen_range(0..enabled.len()),
            None => 0,
        };
        let element = &enabled[pick];
        let choice = session.choose(def, element)?;
        let (next, events) = fire_bounded(def, &case, &element.node, &choice, or_join_bound)?;
        log.append(events);
        case = next;
    }
    Ok((case, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    fn id(s: &str) -> NodeId {
        NodeId::new(s).unwrap()
    }

    fn sequence3() -> ProcessDefinition {
        parse(
            "process P { start s; end e; task A; task B; task C; \
             s -> A; A -> B; B -> C; C -> e; }",
        )
        .unwrap()
    }

    fn and_net() -> ProcessDefinition {
        parse(
            "process P { start s; end e; task B; task C; gateway and_split G1; \
             gateway and_join G2; s -> G1; G1 -> B; G1 -> C; B -> G2; C -> G2; G2 -> e; }",
        )
        .unwrap()
    }

    #[test]
    fn start_case_places_one_token_and_logs_seq_zero() {
        let def = sequence3();
        let (case, events) = start_case(&def, "c1");
        assert_eq!(case.marking.count(def.start_edge()), 1);
        assert_eq!(case.marking.total(), 1);
        assert_eq!(case.seq, 1);
        assert_eq!(events[0].seq, 0);
        assert_eq!(events[0].kind, EventKind::CaseStarted);
    }

    #[test]
    fn and_join_waits_for_all_inputs() {
        let def = and_net();
        let (case, _) = start_case(&def, "c");
        // s -> G1 -> {B, C}
        let (case, _) = fire(&def, &case, &id("G1"), &Choice::Default).unwrap();
        let (case, _) = fire(&def, &case, &id("B"), &Choice::Default).unwrap();
        let enabled: Vec<String> = enabled_elements(&def, &case)
            .unwrap()
            .into_iter()
            .map(|e| e.node.as_str().to_owned())
            .collect();
        assert_eq!(enabled, vec!["C"], "join must wait for the second branch");
        let (case, _) = fire(&def, &case, &id("C"), &Choice::Default).unwrap();
        let enabled = enabled_elements(&def, &case).unwrap();
        assert_eq!(enabled.len(), 1);
        assert_eq!(enabled[0].node, id("G2"));
    }

    #[test]
    fn xor_split_marks_exactly_the_chosen_branch() {
        let def = parse(
            "process P { start s; end e; task T1; task T2; task T3; \
             gateway xor_split X; gateway xor_join M; s -> X; \
             X -> T1; X -> T2; X -> T3; T1 -> M; T2 -> M; T3 -> M; M -> e; }",
        )
        .unwrap();
        let (case, _) = start_case(&def, "c");
        let enabled = enabled_elements(&def, &case).unwrap();
        assert_eq!(enabled[0].choices.len(), 3);
        let Choice::Branch(second) = enabled[0].choices[1].clone() else {
            panic!("xor choices are single branches");
        };
        let (case, _) = fire(&def, &case, &id("X"), &Choice::Branch(second)).unwrap();
        assert_eq!(case.marking.count(second), 1);
        assert_eq!(case.marking.total(), 1);
    }

    #[test]
    fn or_split_marks_the_chosen_subset() {
        let def = parse(
            "process P { start s; end e; task T1; task T2; task T3; \
             gateway or_split O; gateway or_join J; s -> O; \
             O -> T1; O -> T2; O -> T3; T1 -> J; T2 -> J; T3 -> J; J -> e; }",
        )
        .unwrap();
        let (case, _) = start_case(&def, "c");
        let o = def.node_index(&id("O")).unwrap();
        let (b1, b3) = (def.outgoing(o)[0], def.outgoing(o)[2]);
        let (case, _) = fire(&def, &case, &id("O"), &Choice::Branches(vec![b1, b3])).unwrap();
        assert_eq!(case.marking.count(b1), 1);
        assert_eq!(case.marking.count(def.outgoing(o)[1]), 0);
        assert_eq!(case.marking.count(b3), 1);
    }

    #[test]
    fn or_split_choice_domain_is_binary_counting_order() {
        let def = parse(
            "process P { start s; end e; task T1; task T2; \
             gateway or_split O; gateway or_join J; s -> O; \
             O -> T1; O -> T2; T1 -> J; T2 -> J; J -> e; }",
        )
        .unwrap();
        let (case, _) = start_case(&def, "c");
        let o = def.node_index(&id("O")).unwrap();
        let (e1, e2) = (def.outgoing(o)[0], def.outgoing(o)[1]);
        let enabled = enabled_elements(&def, &case).unwrap();
        assert_eq!(
            enabled[0].choices,
            vec![
                Choice::Branches(vec![e1]),
                Choice::Branches(vec![e2]),
                Choice::Branches(vec![e1, e2]),
            ]
        );
    }

    #[test]
    fn discriminator_fires_first_absorbs_rest_and_resets() {
        let def = parse(
            "process P { start s; end e; gateway and_split G; task A; task B; task C; \
             gateway discriminator D; task T; s -> G; G -> A; G -> B; G -> C; \
             A -> D; B -> D; C -> D; D -> T; T -> e; }",
        )
        .unwrap();
        let (case, _) = start_case(&def, "c");
        let (case, _) = fire(&def, &case, &id("G"), &Choice::Default).unwrap();
        let (case, _) = fire(&def, &case, &id("A"), &Choice::Default).unwrap();
        let (case, _) = fire(&def, &case, &id("B"), &Choice::Default).unwrap();
        let (case, _) = fire(&def, &case, &id("C"), &Choice::Default).unwrap();

        let (case, ev) = fire(&def, &case, &id("D"), &Choice::Default).unwrap();
        assert_eq!(ev[0].kind, EventKind::GatewayFired);
        assert_eq!(case.join_states[&id("D")], JoinState { fired: true, arrived: 1, round: 0 });

        let (case, ev) = fire(&def, &case, &id("D"), &Choice::Default).unwrap();
        assert_eq!(ev[0].kind, EventKind::TokenAbsorbed);
        assert_eq!(case.join_states[&id("D")].arrived, 2);

        let (case, ev) = fire(&def, &case, &id("D"), &Choice::Default).unwrap();
        assert_eq!(ev[0].kind, EventKind::TokenAbsorbed);
        assert_eq!(case.join_states[&id("D")], JoinState { fired: false, arrived: 0, round: 1 });
    }

    #[test]
    fn sequence_runs_to_completion_in_chain_order() {
        let def = sequence3();
        let (case, log) = run_to_completion(
            &def,
            "c1",
            &Decider::Deterministic,
            None,
            DEFAULT_OR_JOIN_BOUND,
            DEFAULT_STEP_LIMIT,
        )
        .unwrap();
        assert_eq!(case.status, CaseStatus::Completed);
        let kinds: Vec<EventKind> = log.iter().map(|e| e.kind).collect();
        assert_eq!(
            kinds,
            vec![
                EventKind::CaseStarted,
                EventKind::TaskCompleted,
                EventKind::TaskCompleted,
                EventKind::TaskCompleted,
                EventKind::CaseCompleted,
            ]
        );
        let nodes: Vec<&str> = log
            .iter()
            .filter_map(|e| e.node.as_ref().map(NodeId::as_str))
            .collect();
        assert_eq!(nodes, vec!["A", "B", "C"]);
    }

    #[test]
    fn seq_numbers_are_gapless() {
        let def = and_net();
        let (_, log) = run_to_completion(
            &def,
            "c",
            &Decider::Deterministic,
            Some(11),
            DEFAULT_OR_JOIN_BOUND,
            DEFAULT_STEP_LIMIT,
        )
        .unwrap();
        for (i, event) in log.iter().enumerate() {
            assert_eq!(event.seq, i as u64);
        }
    }

    #[test]
    fn xor_into_and_join_deadlocks() {
        let def = parse(
            "process P { start s; end e; task A; task B; gateway xor_split X; \
             gateway and_join J; s -> X; X -> A; X -> B; A -> J; B -> J; J -> e; }",
        )
        .unwrap();
        let (case, log) = run_to_completion(
            &def,
            "c",
            &Decider::Deterministic,
            None,
            DEFAULT_OR_JOIN_BOUND,
            DEFAULT_STEP_LIMIT,
        )
        .unwrap();
        assert_eq!(case.status, CaseStatus::Deadlocked);
        assert_eq!(log.events().last().unwrap().kind, EventKind::CaseDeadlocked);
    }

    #[test]
    fn and_into_xor_join_completes_improperly() {
        let def = parse(
            "process P { start s; end e; task A; task B; task C; gateway and_split G; \
             gateway xor_join M; s -> G; G -> A; G -> B; G -> C; A -> M; B -> M; C -> M; M -> e; }",
        )
        .unwrap();
        let (case, log) = run_to_completion(
            &def,
            "c",
            &Decider::Deterministic,
            None,
            DEFAULT_OR_JOIN_BOUND,
            DEFAULT_STEP_LIMIT,
        )
        .unwrap();
        assert_eq!(case.status, CaseStatus::CompletedImproperly);
        assert!(log
            .iter()
            .any(|e| e.kind == EventKind::CaseCompletedImproperly));
        assert_eq!(case.marking.total(), 2, "two branch tokens remain");
    }

    #[test]
    fn or_join_waits_while_a_chosen_branch_is_still_upstream() {
        let def = parse(
            "process P { start s; end e; task T1; task T2; \
             gateway or_split O; gateway or_join J; s -> O; \
             O -> T1; O -> T2; T1 -> J; T2 -> J; J -> e; }",
        )
        .unwrap();
        let (case, _) = start_case(&def, "c");
        let o = def.node_index(&id("O")).unwrap();
        let both = Choice::Branches(def.outgoing(o).to_vec());
        let (case, _) = fire(&def, &case, &id("O"), &both).unwrap();
        let (case, _) = fire(&def, &case, &id("T1"), &Choice::Default).unwrap();
        // T1 done, T2 still holds a token upstream of the join.
        assert_eq!(
            evaluate_or_join(&def, &case, &id("J"), DEFAULT_OR_JOIN_BOUND).unwrap(),
            OrJoinVerdict::Wait
        );
        let (case, _) = fire(&def, &case, &id("T2"), &Choice::Default).unwrap();
        assert_eq!(
            evaluate_or_join(&def, &case, &id("J"), DEFAULT_OR_JOIN_BOUND).unwrap(),
            OrJoinVerdict::Fire
        );
        // Firing the join consumes both branch tokens.
        let (case, _) = fire(&def, &case, &id("J"), &Choice::Default).unwrap();
        assert_eq!(case.status, CaseStatus::Completed);
    }

    #[test]
    fn or_join_single_branch_fires_without_synchronization() {
        let def = parse(
            "process P { start s; end e; task T1; task T2; \
             gateway or_split O; gateway or_join J; s -> O; \
             O -> T1; O -> T2; T1 -> J; T2 -> J; J -> e; }",
        )
        .unwrap();
        let (case, _) = start_case(&def, "c");
        let o = def.node_index(&id("O")).unwrap();
        let first = Choice::Branches(vec![def.outgoing(o)[0]]);
        let (case, _) = fire(&def, &case, &id("O"), &first).unwrap();
        let (case, _) = fire(&def, &case, &id("T1"), &Choice::Default).unwrap();
        assert_eq!(
            evaluate_or_join(&def, &case, &id("J"), DEFAULT_OR_JOIN_BOUND).unwrap(),
            OrJoinVerdict::Fire
        );
    }

    #[test]
    fn or_join_with_no_marked_input_waits() {
        let def = parse(
            "process P { start s; end e; task T1; task T2; \
             gateway or_split O; gateway or_join J; s -> O; \
             O -> T1; O -> T2; T1 -> J; T2 -> J; J -> e; }",
        )
        .unwrap();
        let (case, _) = start_case(&def, "c");
        assert_eq!(
            evaluate_or_join(&def, &case, &id("J"), DEFAULT_OR_JOIN_BOUND).unwrap(),
            OrJoinVerdict::Wait
        );
        assert_eq!(
            evaluate_or_join(&def, &case, &id("T1"), 10).unwrap_err().code(),
            "NOT_ORJOIN"
        );
    }

    #[test]
    fn firing_a_non_enabled_node_is_rejected() {
        let def = sequence3();
        let (case, _) = start_case(&def, "c");
        let err = fire(&def, &case, &id("B"), &Choice::Default).unwrap_err();
        assert_eq!(err.code(), "NOT_ENABLED");
        let err = fire(&def, &case, &id("A"), &Choice::Branch(0)).unwrap_err();
        assert_eq!(err.code(), "BAD_CHOICE");
    }

    #[test]
    fn terminal_case_rejects_further_work() {
        let def = sequence3();
        let (case, _) = start_case(&def, "c");
        let mut case = case;
        for node in ["A", "B", "C"] {
            let (next, _) = fire(&def, &case, &id(node), &Choice::Default).unwrap();
            case = next;
        }
        assert_eq!(case.status, CaseStatus::Completed);
        assert_eq!(
            enabled_elements(&def, &case).unwrap_err().code(),
            "NOT_RUNNING"
        );
    }

    #[test]
    fn scripted_decider_exhaustion_and_mismatch() {
        let def = parse(
            "process P { start s; end e; task A; task B; gateway xor_split X; \
             gateway xor_join M; s -> X; X -> A [a]; X -> B [b]; A -> M; B -> M; M -> e; }",
        )
        .unwrap();
        let err = run_to_completion(
            &def,
            "c",
            &Decider::Scripted(vec![]),
            None,
            DEFAULT_OR_JOIN_BOUND,
            DEFAULT_STEP_LIMIT,
        )
        .unwrap_err();
        assert_eq!(err.code(), "SCRIPT_SHORT");

        let script = vec![ScriptEntry { node: id("X"), picks: vec!["b".into()] }];
        let (case, log) = run_to_completion(
            &def,
            "c",
            &Decider::Scripted(script),
            None,
            DEFAULT_OR_JOIN_BOUND,
            DEFAULT_STEP_LIMIT,
        )
        .unwrap();
        assert_eq!(case.status, CaseStatus::Completed);
        assert!(log
            .iter()
            .any(|e| e.kind == EventKind::TaskCompleted && e.node == Some(id("B"))));

        let wrong = vec![ScriptEntry { node: id("M"), picks: vec!["a".into()] }];
        let err = run_to_completion(
            &def,
            "c",
            &Decider::Scripted(wrong),
            None,
            DEFAULT_OR_JOIN_BOUND,
            DEFAULT_STEP_LIMIT,
        )
        .unwrap_err();
        assert_eq!(err.code(), "BAD_CHOICE");
    }

    #[test]
    fn seeded_runs_are_reproducible() {
        let def = and_net();
        let run = |seed| {
            run_to_completion(
                &def,
                "c",
                &Decider::Seeded(seed),
                Some(seed),
                DEFAULT_OR_JOIN_BOUND,
                DEFAULT_STEP_LIMIT,
            )
            .unwrap()
            .1
        };
        assert_eq!(run(7).to_jsonl(), run(7).to_jsonl());
    }
}
