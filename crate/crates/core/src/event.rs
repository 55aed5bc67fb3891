//! Case lifecycle events and their JSONL wire form.

use serde::Serialize;

use crate::model::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    CaseStarted,
    TaskCompleted,
    GatewayFired,
    TokenAbsorbed,
    CaseCompleted,
    CaseCompletedImproperly,
    CaseDeadlocked,
}

/// One logged step of a case. `node` is absent for case-level events and
/// `detail` carries chosen branch names or the join round, when relevant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Event {
    #[serde(rename = "case")]
    pub case_id: String,
    pub seq: u64,
    pub kind: EventKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node: Option<NodeId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Ordered record of everything that happened to one case.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventLog {
    events: Vec<Event>,
}

impl EventLog {
    pub fn new() -> Self {
        EventLog::default()
    }

    pub fn push(&mut self, event: Event) {
        self.events.push(event);
    }

    pub fn append(&mut self, events: Vec<Event>) {
        self.events.extend(events);
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Event> {
        self.events.iter()
    }

    /// One JSON object per line, trailing newline included.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for event in &self.events {
            out.push_str(&serde_json::to_string(event).expect("events serialize"));
            out.push('\n');
        }
        out
    }
}
