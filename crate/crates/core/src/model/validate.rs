use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{AgentKind, CompetitionModel, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FindingCode {
    // errors
    EmptyName,
    InvalidId,
    DuplicateId,
    InvalidName,
    DuplicateNodeName,
    LapsNotPositive,
    EmptyAgentField,
    DanglingArrow,
    NotASimplePath,
    UnboundNode,
    MultipleBindings,
    // warnings
    TransitionAtPathEnd,
    UnusedAgent,
}

impl FindingCode {
    pub fn as_str(self) -> &'static str {
        match self {
            FindingCode::EmptyName => "EmptyName",
            FindingCode::InvalidId => "InvalidId",
            FindingCode::DuplicateId => "DuplicateId",
            FindingCode::InvalidName => "InvalidName",
            FindingCode::DuplicateNodeName => "DuplicateNodeName",
            FindingCode::LapsNotPositive => "LapsNotPositive",
            FindingCode::EmptyAgentField => "EmptyAgentField",
            FindingCode::DanglingArrow => "DanglingArrow",
            FindingCode::NotASimplePath => "NotASimplePath",
            FindingCode::UnboundNode => "UnboundNode",
            FindingCode::MultipleBindings => "MultipleBindings",
            FindingCode::TransitionAtPathEnd => "TransitionAtPathEnd",
            FindingCode::UnusedAgent => "UnusedAgent",
        }
    }
}

impl fmt::Display for FindingCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One validation finding. `id` is the offending node or agent id, when one exists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub code: FindingCode,
    pub message: String,
    pub id: Option<u32>,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.id {
            Some(id) => write!(f, "{} (id {}): {}", self.code, id, self.message),
            None => write!(f, "{}: {}", self.code, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Finding>,
    pub warnings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn has_error(&self, code: FindingCode) -> bool {
        self.errors.iter().any(|f| f.code == code)
    }

    pub fn has_warning(&self, code: FindingCode) -> bool {
        self.warnings.iter().any(|f| f.code == code)
    }

    fn error(&mut self, code: FindingCode, id: Option<u32>, message: impl Into<String>) {
        self.errors.push(Finding {
            code,
            message: message.into(),
            id,
        });
    }

    fn warning(&mut self, code: FindingCode, id: Option<u32>, message: impl Into<String>) {
        self.warnings.push(Finding {
            code,
            message: message.into(),
            id,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.errors {
            writeln!(f, "error: {e}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        write!(
            f,
            "{} errors, {} warnings",
            self.errors.len(),
            self.warnings.len()
        )
    }
}

pub(crate) fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub(super) fn validate(model: &CompetitionModel) -> ValidationReport {
    use FindingCode::*;

    let mut report = ValidationReport::default();

    if model.name.is_empty() {
        report.error(EmptyName, None, "competition name is empty");
    }

    let mut node_ids = BTreeSet::new();
    let mut node_names = BTreeSet::new();
    for node in &model.nodes {
        if node.id.0 == 0 {
            report.error(InvalidId, Some(0), "node ids must be positive");
        }
        if !node_ids.insert(node.id) {
            report.error(
                DuplicateId,
                Some(node.id.0),
                format!("node id {} declared more than once", node.id),
            );
        }
        if !is_identifier(&node.name) {
            report.error(
                InvalidName,
                Some(node.id.0),
                format!("node name {:?} is not an identifier", node.name),
            );
        } else if !node_names.insert(node.name.as_str()) {
            report.error(
                DuplicateNodeName,
                Some(node.id.0),
                format!("node name {:?} used more than once", node.name),
            );
        }
        if node.laps == 0 {
            report.error(
                LapsNotPositive,
                Some(node.id.0),
                format!("node {:?} has zero laps", node.name),
            );
        }
    }

    let mut agent_ids = BTreeSet::new();
    for agent in &model.agents {
        if agent.id.0 == 0 {
            report.error(InvalidId, Some(0), "agent ids must be positive");
        }
        if !agent_ids.insert(agent.id) {
            report.error(
                DuplicateId,
                Some(agent.id.0),
                format!("agent id {} declared more than once", agent.id),
            );
        }
        let (field, value) = match &agent.kind {
            AgentKind::Auto { endpoint } => ("endpoint", endpoint),
            AgentKind::Manual { source } => ("source", source),
        };
        if value.is_empty() {
            report.error(
                EmptyAgentField,
                Some(agent.id.0),
                format!("agent {} has an empty {field}", agent.id),
            );
        }
    }

    for arrow in &model.order_arrows {
        for end in [arrow.from, arrow.to] {
            if !node_ids.contains(&end) {
                report.error(
                    DanglingArrow,
                    Some(end.0),
                    format!("order arrow {} -> {} references unknown node {end}", arrow.from, arrow.to),
                );
            }
        }
    }
    let mut bindings_per_node: BTreeMap<NodeId, usize> = BTreeMap::new();
    let mut bound_agents = BTreeSet::new();
    for binding in &model.binding_arrows {
        if node_ids.contains(&binding.node) {
            *bindings_per_node.entry(binding.node).or_default() += 1;
        } else {
            report.error(
                DanglingArrow,
                Some(binding.node.0),
                format!("binding arrow references unknown node {}", binding.node),
            );
        }
        if agent_ids.contains(&binding.agent) {
            bound_agents.insert(binding.agent);
        } else {
            report.error(
                DanglingArrow,
                Some(binding.agent.0),
                format!("binding arrow references unknown agent {}", binding.agent),
            );
        }
    }

    let path = check_path(model, &node_ids, &mut report);

    for id in &node_ids {
        match bindings_per_node.get(id).copied().unwrap_or(0) {
            0 => report.error(UnboundNode, Some(id.0), format!("node {id} is not bound to an agent")),
            1 => {}
            n => report.error(
                MultipleBindings,
                Some(id.0),
                format!("node {id} is bound {n} times"),
            ),
        }
    }

    if let Some(path) = path {
        let ends = [path.first(), path.last()];
        let mut warned = BTreeSet::new();
        for id in ends.into_iter().flatten() {
            let node = model.node(*id).expect("path nodes exist");
            if node.kind.is_transition() && warned.insert(*id) {
                report.warning(
                    TransitionAtPathEnd,
                    Some(id.0),
                    format!("transition area {:?} is at an end of the path", node.name),
                );
            }
        }
    }
    for agent in &model.agents {
        if !bound_agents.contains(&agent.id) {
            report.warning(
                UnusedAgent,
                Some(agent.id.0),
                format!("agent {} is not bound to any node", agent.id),
            );
        }
    }

    report
}

/// Checks that the order arrows form one acyclic chain through every node and
/// returns that chain. Pushes `NotASimplePath` findings otherwise.
fn check_path(
    model: &CompetitionModel,
    node_ids: &BTreeSet<NodeId>,
    report: &mut ValidationReport,
) -> Option<Vec<NodeId>> {
    use FindingCode::NotASimplePath;

    if node_ids.is_empty() {
        return Some(Vec::new());
    }
    let mut next: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    let mut out_degree: BTreeMap<NodeId, usize> = BTreeMap::new();
    let mut in_degree: BTreeMap<NodeId, usize> = BTreeMap::new();
    let mut broken = false;
    for arrow in &model.order_arrows {
        if !node_ids.contains(&arrow.from) || !node_ids.contains(&arrow.to) {
            broken = true;
            continue;
        }
        if arrow.from == arrow.to {
            report.error(
                NotASimplePath,
                Some(arrow.from.0),
                format!("order arrow from node {} to itself", arrow.from),
            );
            broken = true;
            continue;
        }
        *out_degree.entry(arrow.from).or_default() += 1;
        *in_degree.entry(arrow.to).or_default() += 1;
        next.insert(arrow.from, arrow.to);
    }
    for (id, n) in &out_degree {
        if *n > 1 {
            report.error(
                NotASimplePath,
                Some(id.0),
                format!("node {id} has {n} outgoing order arrows"),
            );
            broken = true;
        }
    }
    for (id, n) in &in_degree {
        if *n > 1 {
            report.error(
                NotASimplePath,
                Some(id.0),
                format!("node {id} has {n} incoming order arrows"),
            );
            broken = true;
        }
    }
    if broken {
        return None;
    }

    let heads: Vec<NodeId> = node_ids
        .iter()
        .copied()
        .filter(|id| !in_degree.contains_key(id))
        .collect();
    match heads.as_slice() {
        [] => {
            report.error(NotASimplePath, None, "order arrows form a cycle");
            None
        }
        [head] => {
            let mut path = vec![*head];
            let mut cur = *head;
            while let Some(n) = next.get(&cur) {
                path.push(*n);
                cur = *n;
            }
            if path.len() == node_ids.len() {
                Some(path)
            } else {
                let stray = node_ids.iter().find(|id| !path.contains(id)).unwrap();
                report.error(
                    NotASimplePath,
                    Some(stray.0),
                    format!("node {stray} is on a cycle not reachable from the path start"),
                );
                None
            }
        }
        [_, second, ..] => {
            report.error(
                NotASimplePath,
                Some(second.0),
                format!(
                    "order arrows split into {} chains; node {second} starts another one",
                    heads.len()
                ),
            );
            None
        }
    }
}

/// The chain of a model without path errors. Callers must have validated.
pub(super) fn simple_path(model: &CompetitionModel) -> Option<Vec<NodeId>> {
    let ids = model.nodes.iter().map(|n| n.id).collect();
    check_path(model, &ids, &mut ValidationReport::default())
}
