//! Graphviz rendering of process definitions.

use std::fmt::Write;

use crate::model::{GatewayKind, NodeKind, ProcessDefinition};

fn escape(text: &str) -> String {
    text.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Display tag for a gateway, shown inside the diamond.
fn gateway_tag(def: &ProcessDefinition, idx: usize, kind: GatewayKind) -> String {
    match kind {
        GatewayKind::AndSplit => "AND-split".into(),
        GatewayKind::AndJoin => "AND-join".into(),
        GatewayKind::XorSplit => "XOR-split".into(),
        GatewayKind::XorJoin => "XOR-join".into(),
        GatewayKind::OrSplit => "OR-split".into(),
        GatewayKind::OrJoin => "OR-join".into(),
        GatewayKind::MultiMerge => "MULTI-merge".into(),
        GatewayKind::Discriminator => "DISC".into(),
        GatewayKind::NOfM(n) => format!("{}-of-{}", n, def.incoming(idx).len()),
    }
}

/// Renders the definition as a DOT digraph: tasks as boxes, gateways as
/// diamonds annotated with their kind, start as a circle, end as a double
/// circle. Output is byte-deterministic.
pub fn export_dot(def: &ProcessDefinition) -> String {
    let mut out = String::new();
    writeln!(out, "digraph \"{}\" {{", escape(def.name())).unwrap();
    writeln!(out, "  rankdir=LR;").unwrap();
    for (idx, (id, kind)) in def.nodes().enumerate() {
        let attrs = match kind {
            NodeKind::Start => format!("shape=circle, label=\"{}\"", escape(id.as_str())),
            NodeKind::End => format!("shape=doublecircle, label=\"{}\"", escape(id.as_str())),
            NodeKind::Task => format!("shape=box, label=\"{}\"", escape(id.as_str())),
            NodeKind::Gateway(g) => format!(
                "shape=diamond, label=\"{}\\n{}\"",
                escape(id.as_str()),
                gateway_tag(def, idx, g)
            ),
        };
        writeln!(out, "  \"{}\" [{}];", escape(id.as_str()), attrs).unwrap();
    }
    for edge in def.edges() {
        match &edge.label {
            Some(label) => writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"{}\"];",
                escape(edge.from.as_str()),
                escape(edge.to.as_str()),
                escape(label)
            )
            .unwrap(),
            None => writeln!(
                out,
                "  \"{}\" -> \"{}\";",
                escape(edge.from.as_str()),
                escape(edge.to.as_str())
            )
            .unwrap(),
        }
    }
    out.push_str("}\n");
    out
}
