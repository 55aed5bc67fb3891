//! Shared helpers for the integration suites: fixture loading and a
//! generator of random valid-by-construction definitions.

#![allow(dead_code)]

use std::fs;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wfp_core::model::{build_process, Edge, GatewayKind, NodeId, NodeKind, ProcessDefinition};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn fixture(name: &str) -> ProcessDefinition {
    let text = fs::read_to_string(fixture_path(name)).expect("fixture exists");
    wfp_core::dsl::parse(&text).expect("fixture parses")
}

struct NetGen {
    rng: ChaCha8Rng,
    next_id: u32,
    nodes: Vec<(NodeId, NodeKind)>,
    edges: Vec<Edge>,
}

impl NetGen {
    fn fresh(&mut self, prefix: &str) -> NodeId {
        self.next_id += 1;
        NodeId::new(format!("{}{}", prefix, self.next_id)).unwrap()
    }

    fn add(&mut self, id: &NodeId, kind: NodeKind) {
        self.nodes.push((id.clone(), kind));
    }

    fn edge(&mut self, from: &NodeId, to: &NodeId) {
        let label = if self.rng.gen_bool(0.25) {
            Some(format!("l{}", self.rng.gen_range(0..100u32)))
        } else {
            None
        };
        self.edges.push(Edge { from: from.clone(), to: to.clone(), label });
    }

    /// Builds one structured block and returns its (entry, exit) nodes; the
    /// caller wires exactly one edge in and one edge out, which keeps every
    /// arity invariant satisfied by construction.
    fn block(&mut self, depth: u32) -> (NodeId, NodeId) {
        let pick = if depth == 0 { 0 } else { self.rng.gen_range(0..10u32) };
        match pick {
            0..=3 => {
                let t = self.fresh("t");
                self.add(&t, NodeKind::Task);
                (t.clone(), t)
            }
            4..=5 => {
                let (a_in, a_out) = self.block(depth - 1);
                let (b_in, b_out) = self.block(depth - 1);
                self.edge(&a_out, &b_in);
                (a_in, b_out)
            }
            6..=8 => {
                let branches = self.rng.gen_range(2..=4usize);
                let (split, join) = match self.rng.gen_range(0..6u32) {
                    0 => (GatewayKind::AndSplit, GatewayKind::AndJoin),
                    1 => (GatewayKind::XorSplit, GatewayKind::XorJoin),
                    2 => (GatewayKind::OrSplit, GatewayKind::OrJoin),
                    3 => (GatewayKind::AndSplit, GatewayKind::MultiMerge),
                    4 => (GatewayKind::AndSplit, GatewayKind::Discriminator),
                    _ => (
                        GatewayKind::AndSplit,
                        GatewayKind::NOfM(self.rng.gen_range(1..=branches) as u32),
                    ),
                };
                let s = self.fresh("g");
                let j = self.fresh("g");
                self.add(&s, NodeKind::Gateway(split));
                self.add(&j, NodeKind::Gateway(join));
                for _ in 0..branches {
                    let (b_in, b_out) = self.block(depth - 1);
                    self.edge(&s, &b_in);
                    self.edge(&b_out, &j);
                }
                (s, j)
            }
            _ => {
                // Loop: merge at entry, exclusive split at exit, back edge.
                let merge = self.fresh("g");
                let split = self.fresh("g");
                self.add(&merge, NodeKind::Gateway(GatewayKind::XorJoin));
                self.add(&split, NodeKind::Gateway(GatewayKind::XorSplit));
                let (b_in, b_out) = self.block(depth - 1);
                self.edge(&merge, &b_in);
                self.edge(&b_out, &split);
                self.edge(&split, &merge);
                (merge, split)
            }
        }
    }
}

/// Deterministic random definition: same seed, same net.
pub fn random_net(seed: u64) -> ProcessDefinition {
    let mut gen = NetGen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        next_id: 0,
        nodes: Vec::new(),
        edges: Vec::new(),
    };
    let start = NodeId::new("s0").unwrap();
    let end = NodeId::new("e0").unwrap();
    gen.add(&start, NodeKind::Start);
    gen.add(&end, NodeKind::End);
    let (entry, exit) = gen.block(3);
    gen.edge(&start, &entry);
    gen.edge(&exit, &end);
    build_process(format!("net{seed}"), gen.nodes, gen.edges)
        .expect("generated nets are valid by construction")
}
