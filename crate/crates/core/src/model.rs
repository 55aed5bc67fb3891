//! Process graph model: nodes, edges, markings, and structural validation.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

/// Words that introduce declarations in the textual format. They are rejected
/// as node ids so that every valid definition serializes to parseable text.
pub const RESERVED_WORDS: [&str; 5] = ["process", "start", "end", "task", "gateway"];

/// Identifier of a node within one process definition.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(String);

/// Rejected node id: ids are `[A-Za-z_][A-Za-z0-9_]*` and not a keyword.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid node id {0:?}")]
pub struct InvalidNodeId(pub String);

impl NodeId {
    /// Validates and wraps an id: non-empty, ASCII letters/digits/underscore,
    /// not starting with a digit, not a reserved word.
    pub fn new(id: impl Into<String>) -> Result<Self, InvalidNodeId> {
        let id = id.into();
        if Self::is_valid(&id) {
            Ok(NodeId(id))
        } else {
            Err(InvalidNodeId(id))
        }
    }

    pub fn is_valid(id: &str) -> bool {
        let mut chars = id.chars();
        let head_ok = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_');
        head_ok
            && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
            && !RESERVED_WORDS.contains(&id)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl serde::Serialize for NodeId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

/// Routing behaviour of a gateway node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GatewayKind {
    AndSplit,
    AndJoin,
    XorSplit,
    XorJoin,
    OrSplit,
    OrJoin,
    MultiMerge,
    /// Fires on the first arrival, absorbs the rest, resets once every input
    /// has delivered a token. Equivalent to `NOfM(1)`.
    Discriminator,
    /// Fires on the n-th arrival of the current round, absorbs the rest.
    NOfM(u32),
}

impl GatewayKind {
    pub fn is_split(self) -> bool {
        matches!(
            self,
            GatewayKind::AndSplit | GatewayKind::XorSplit | GatewayKind::OrSplit
        )
    }

    pub fn is_join(self) -> bool {
        !self.is_split()
    }

    /// Keyword used in the textual format.
    pub fn keyword(self) -> String {
        match self {
            GatewayKind::AndSplit => "and_split".into(),
            GatewayKind::AndJoin => "and_join".into(),
            GatewayKind::XorSplit => "xor_split".into(),
            GatewayKind::XorJoin => "xor_join".into(),
            GatewayKind::OrSplit => "or_split".into(),
            GatewayKind::OrJoin => "or_join".into(),
            GatewayKind::MultiMerge => "multi_merge".into(),
            GatewayKind::Discriminator => "discriminator".into(),
            GatewayKind::NOfM(n) => format!("n_of_m({n})"),
        }
    }

    /// Threshold of the fire-first join family, if this is one.
    pub fn fire_threshold(self) -> Option<u32> {
        match self {
            GatewayKind::Discriminator => Some(1),
            GatewayKind::NOfM(n) => Some(n),
            _ => None,
        }
    }
}

impl fmt::Display for GatewayKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.keyword())
    }
}

/// What a node is: the single entry, the single exit, an atomic task, or a
/// routing gateway.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Start,
    End,
    Task,
    Gateway(GatewayKind),
}

impl NodeKind {
    pub fn gateway(self) -> Option<GatewayKind> {
        match self {
            NodeKind::Gateway(g) => Some(g),
            _ => None,
        }
    }
}

/// Directed arc between two nodes. The optional label names the branch for
/// deciders, logs, and traces.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub label: Option<String>,
}

impl Edge {
    pub fn new(from: NodeId, to: NodeId) -> Self {
        Edge { from, to, label: None }
    }

    pub fn labeled(from: NodeId, to: NodeId, label: impl Into<String>) -> Self {
        Edge { from, to, label: Some(label.into()) }
    }

    /// `from->to`, the reference format used in reports and exports.
    pub fn reference(&self) -> String {
        format!("{}->{}", self.from, self.to)
    }
}

/// Structural violation found while building a definition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationCode {
    DupNode,
    BadEdge,
    Arity,
    Unreachable,
    BadN,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::DupNode => "DUP_NODE",
            ViolationCode::BadEdge => "BAD_EDGE",
            ViolationCode::Arity => "ARITY",
            ViolationCode::Unreachable => "UNREACHABLE",
            ViolationCode::BadN => "BAD_N",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One violated invariant, citing the node or edge at fault.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub code: ViolationCode,
    /// Node id, `from->to` edge reference, or the process name for
    /// process-level counts.
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.code, self.subject, self.message)
    }
}

/// Every structural violation of one build attempt.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, code: ViolationCode, subject: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            code,
            subject: subject.into(),
            message: message.into(),
        });
    }
}

/// Unknown node lookup.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("unknown node {0}")]
    NoNode(NodeId),
}

impl ModelError {
    pub fn code(&self) -> &'static str {
        match self {
            ModelError::NoNode(_) => "NO_NODE",
        }
    }
}

/// Immutable process graph. Construction via [`build_process`] guarantees the
/// structural invariants; the derived adjacency tables are fixed afterwards.
#[derive(Debug, Clone)]
pub struct ProcessDefinition {
    name: String,
    nodes: Vec<(NodeId, NodeKind)>,
    edges: Vec<Edge>,
    index: HashMap<NodeId, usize>,
    incoming: Vec<Vec<usize>>,
    outgoing: Vec<Vec<usize>>,
    /// Node indices sorted by id, the canonical firing order.
    by_id: Vec<usize>,
    start: usize,
    end: usize,
}

impl PartialEq for ProcessDefinition {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.nodes == other.nodes && self.edges == other.edges
    }
}

impl Eq for ProcessDefinition {}

impl ProcessDefinition {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Nodes in declaration order.
    pub fn nodes(&self) -> impl Iterator<Item = (&NodeId, NodeKind)> {
        self.nodes.iter().map(|(id, kind)| (id, *kind))
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, idx: usize) -> &Edge {
        &self.edges[idx]
    }

    pub fn node_index(&self, id: &NodeId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn node_id(&self, idx: usize) -> &NodeId {
        &self.nodes[idx].0
    }

    pub fn kind(&self, idx: usize) -> NodeKind {
        self.nodes[idx].1
    }

    pub fn node_kind(&self, id: &NodeId) -> Option<NodeKind> {
        self.node_index(id).map(|i| self.kind(i))
    }

    /// Incoming edge indices of a node, in edge declaration order.
    pub fn incoming(&self, idx: usize) -> &[usize] {
        &self.incoming[idx]
    }

    /// Outgoing edge indices of a node, in edge declaration order.
    pub fn outgoing(&self, idx: usize) -> &[usize] {
        &self.outgoing[idx]
    }

    /// Node indices sorted by id ascending.
    pub fn nodes_by_id(&self) -> &[usize] {
        &self.by_id
    }

    pub fn start_index(&self) -> usize {
        self.start
    }

    pub fn end_index(&self) -> usize {
        self.end
    }

    /// The edge leaving Start; the initial marking puts one token here.
    pub fn start_edge(&self) -> usize {
        self.outgoing[self.start][0]
    }

    /// The edge entering End; a token here terminates the case.
    pub fn end_edge(&self) -> usize {
        self.incoming[self.end][0]
    }

    /// Incoming and outgoing edges of a node, in declaration order.
    pub fn node_edges(&self, node: &NodeId) -> Result<(Vec<&Edge>, Vec<&Edge>), ModelError> {
        let idx = self
            .node_index(node)
            .ok_or_else(|| ModelError::NoNode(node.clone()))?;
        let incoming = self.incoming[idx].iter().map(|&e| &self.edges[e]).collect();
        let outgoing = self.outgoing[idx].iter().map(|&e| &self.edges[e]).collect();
        Ok((incoming, outgoing))
    }

    /// Branch name used in logs and traces: the edge label when present,
    /// otherwise the edge's position among its source's outgoing edges.
    pub fn branch_name(&self, edge_idx: usize) -> String {
        let edge = &self.edges[edge_idx];
        if let Some(label) = &edge.label {
            return label.clone();
        }
        let from = self.index[&edge.from];
        let pos = self.outgoing[from]
            .iter()
            .position(|&e| e == edge_idx)
            .unwrap_or(0);
        pos.to_string()
    }
}

/// Multiset of tokens over the edges of one definition, indexed by edge
/// declaration position.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Marking {
    counts: Vec<u32>,
}

impl Marking {
    pub fn empty(def: &ProcessDefinition) -> Self {
        Marking { counts: vec![0; def.edge_count()] }
    }

    /// One token on Start's outgoing edge.
    pub fn initial(def: &ProcessDefinition) -> Self {
        let mut m = Self::empty(def);
        m.counts[def.start_edge()] = 1;
        m
    }

    pub fn count(&self, edge: usize) -> u32 {
        self.counts[edge]
    }

    pub fn is_marked(&self, edge: usize) -> bool {
        self.counts[edge] > 0
    }

    pub fn add(&mut self, edge: usize) {
        self.counts[edge] += 1;
    }

    /// Removes one token; the caller must have checked the edge is marked.
    pub fn take(&mut self, edge: usize) {
        debug_assert!(self.counts[edge] > 0, "take from unmarked edge");
        self.counts[edge] -= 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.iter().all(|&c| c == 0)
    }

    /// `(edge index, count)` for every marked edge, ascending.
    pub fn marked_edges(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (i, c))
    }
}

fn edge_label_ok(label: &str) -> bool {
    !label.is_empty() && !label.contains([']', '\n', '\r'])
}

/// Builds a validated [`ProcessDefinition`], or reports every violated
/// structural invariant.
pub fn build_process(
    name: impl Into<String>,
    nodes: Vec<(NodeId, NodeKind)>,
    edges: Vec<Edge>,
) -> Result<ProcessDefinition, ValidationReport> {
    let name = name.into();
    let mut report = ValidationReport::default();

    let mut index: HashMap<NodeId, usize> = HashMap::new();
    for (pos, (id, _)) in nodes.iter().enumerate() {
        if index.insert(id.clone(), pos).is_some() {
            report.push(ViolationCode::DupNode, id.as_str(), "node id declared twice");
        }
    }

    let starts: Vec<&NodeId> = nodes
        .iter()
        .filter(|(_, k)| *k == NodeKind::Start)
        .map(|(id, _)| id)
        .collect();
    let ends: Vec<&NodeId> = nodes
        .iter()
        .filter(|(_, k)| *k == NodeKind::End)
        .map(|(id, _)| id)
        .collect();
    match starts.len() {
        0 => report.push(ViolationCode::Arity, &name, "process has no start node"),
        1 => {}
        _ => {
            for id in &starts[1..] {
                report.push(ViolationCode::Arity, id.as_str(), "more than one start node");
            }
        }
    }
    match ends.len() {
        0 => report.push(ViolationCode::Arity, &name, "process has no end node"),
        1 => {}
        _ => {
            for id in &ends[1..] {
                report.push(ViolationCode::Arity, id.as_str(), "more than one end node");
            }
        }
    }

    // Adjacency over edges whose endpoints resolve; broken edges are
    // reported and skipped so later checks stay meaningful.
    let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    let mut outgoing: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    let mut seen_pairs: HashSet<(usize, usize)> = HashSet::new();
    for (eidx, edge) in edges.iter().enumerate() {
        let from = index.get(&edge.from).copied();
        let to = index.get(&edge.to).copied();
        if from.is_none() || to.is_none() {
            report.push(
                ViolationCode::BadEdge,
                edge.reference(),
                "edge endpoint is not a declared node",
            );
            continue;
        }
        let (from, to) = (from.unwrap(), to.unwrap());
        if from == to {
            report.push(ViolationCode::BadEdge, edge.reference(), "self-loop edge");
            continue;
        }
        if !seen_pairs.insert((from, to)) {
            report.push(ViolationCode::BadEdge, edge.reference(), "duplicate edge");
            continue;
        }
        if let Some(label) = &edge.label {
            if !edge_label_ok(label) {
                report.push(
                    ViolationCode::BadEdge,
                    edge.reference(),
                    "label is empty or contains ']' or a line break",
                );
                continue;
            }
        }
        outgoing[from].push(eidx);
        incoming[to].push(eidx);
    }

    for (idx, (id, kind)) in nodes.iter().enumerate() {
        let n_in = incoming[idx].len();
        let n_out = outgoing[idx].len();
        let arity = |report: &mut ValidationReport, msg: String| {
            report.push(ViolationCode::Arity, id.as_str(), msg);
        };
        match kind {
            NodeKind::Start => {
                if n_in != 0 || n_out != 1 {
                    arity(&mut report, format!("start needs 0 in / 1 out, has {n_in} in / {n_out} out"));
                }
            }
            NodeKind::End => {
                if n_in != 1 || n_out != 0 {
                    arity(&mut report, format!("end needs 1 in / 0 out, has {n_in} in / {n_out} out"));
                }
            }
            NodeKind::Task => {
                if n_in != 1 || n_out != 1 {
                    arity(&mut report, format!("task needs 1 in / 1 out, has {n_in} in / {n_out} out"));
                }
            }
            NodeKind::Gateway(g) if g.is_split() => {
                if n_in != 1 || n_out < 2 {
                    arity(&mut report, format!("split needs 1 in / >=2 out, has {n_in} in / {n_out} out"));
                }
            }
            NodeKind::Gateway(g) => {
                if n_in < 2 || n_out != 1 {
                    arity(&mut report, format!("join needs >=2 in / 1 out, has {n_in} in / {n_out} out"));
                }
                if let GatewayKind::NOfM(n) = g {
                    if *n < 1 {
                        report.push(ViolationCode::BadN, id.as_str(), "n must be at least 1");
                    } else if *n as usize > n_in {
                        report.push(
                            ViolationCode::BadN,
                            id.as_str(),
                            format!("n = {n} exceeds the {n_in} incoming edges"),
                        );
                    }
                }
            }
        }
    }

    // Path coverage needs an unambiguous entry and exit.
    if starts.len() == 1 && ends.len() == 1 {
        let start_idx = index[starts[0]];
        let end_idx = index[ends[0]];
        let forward = closure(start_idx, &outgoing, &edges, &index, true);
        let backward = closure(end_idx, &incoming, &edges, &index, false);
        for (idx, (id, _)) in nodes.iter().enumerate() {
            if !forward.contains(&idx) || !backward.contains(&idx) {
                report.push(
                    ViolationCode::Unreachable,
                    id.as_str(),
                    "node is on no start-to-end path",
                );
            }
        }
    }

    if !report.ok() {
        return Err(report);
    }

    let start = index[starts[0]];
    let end = index[ends[0]];
    let mut by_id: Vec<usize> = (0..nodes.len()).collect();
    by_id.sort_by(|&a, &b| nodes[a].0.cmp(&nodes[b].0));
    Ok(ProcessDefinition {
        name,
        nodes,
        edges,
        index,
        incoming,
        outgoing,
        by_id,
        start,
        end,
    })
}

fn closure(
    from: usize,
    adjacency: &[Vec<usize>],
    edges: &[Edge],
    index: &HashMap<NodeId, usize>,
    forward: bool,
) -> HashSet<usize> {
    let mut seen = HashSet::from([from]);
    let mut queue = VecDeque::from([from]);
    while let Some(node) = queue.pop_front() {
        for &eidx in &adjacency[node] {
            let next_id = if forward { &edges[eidx].to } else { &edges[eidx].from };
            let next = index[next_id];
            if seen.insert(next) {
                queue.push_back(next);
            }
        }
    }
    seen
}
