//! Competition models: the meta-model as plain data types.
//!
//! A [`CompetitionModel`] is a small graph. Activity nodes (swim, bike, run and
//! the two transition areas) are chained by order arrows into the sequence the
//! competitors perform them in, and every node is bound to the agent that
//! reports crossings at its measuring place. Construction is permissive: any
//! collection may be empty and nothing is checked until [`validate`] runs.
//!
//! [`validate`]: CompetitionModel::validate

mod exchange;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use exchange::{from_exchange, to_exchange, SchemaError};
pub use validate::{Finding, FindingCode, ValidationReport};

/// Identifier of an [`ActivityNode`], assigned by whoever builds the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

/// Identifier of an [`Agent`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeKind {
    Swim,
    Bike,
    Run,
    TransitionArea1,
    TransitionArea2,
}

impl NodeKind {
    pub const ALL: [NodeKind; 5] = [
        NodeKind::Swim,
        NodeKind::Bike,
        NodeKind::Run,
        NodeKind::TransitionArea1,
        NodeKind::TransitionArea2,
    ];

    /// Keyword used for this kind in both the DSL and the exchange document.
    pub fn keyword(self) -> &'static str {
        match self {
            NodeKind::Swim => "swim",
            NodeKind::Bike => "bike",
            NodeKind::Run => "run",
            NodeKind::TransitionArea1 => "ta1",
            NodeKind::TransitionArea2 => "ta2",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.keyword() == word)
    }

    pub fn is_transition(self) -> bool {
        matches!(self, NodeKind::TransitionArea1 | NodeKind::TransitionArea2)
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// How an agent obtains crossings: from a networked device or from a person.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AgentKind {
    Auto { endpoint: String },
    Manual { source: String },
}

impl AgentKind {
    pub fn is_manual(&self) -> bool {
        matches!(self, AgentKind::Manual { .. })
    }
}

/// Editor layout coordinates. Carried by the exchange document only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Position {
    pub x: i64,
    pub y: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivityNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub name: String,
    /// Number of crossings at the node's measuring place needed to complete it.
    pub laps: u32,
    pub position: Option<Position>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Agent {
    pub id: AgentId,
    pub kind: AgentKind,
    pub position: Option<Position>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OrderArrow {
    pub from: NodeId,
    pub to: NodeId,
}

/// Binds a node to the agent that reports its crossings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BindingArrow {
    pub node: NodeId,
    pub agent: AgentId,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CompetitionModel {
    pub name: String,
    pub nodes: Vec<ActivityNode>,
    pub agents: Vec<Agent>,
    pub order_arrows: Vec<OrderArrow>,
    pub binding_arrows: Vec<BindingArrow>,
}

/// Raised by operations that require a model without validation errors.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("model is not valid ({} errors, first: {})", .0.errors.len(), first_error(.0))]
pub struct InvalidModel(pub ValidationReport);

fn first_error(report: &ValidationReport) -> String {
    report
        .errors
        .first()
        .map(|f| f.to_string())
        .unwrap_or_default()
}

impl CompetitionModel {
    pub fn new(name: impl Into<String>) -> Self {
        CompetitionModel {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn node(&self, id: NodeId) -> Option<&ActivityNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn agent(&self, id: AgentId) -> Option<&Agent> {
        self.agents.iter().find(|a| a.id == id)
    }

    /// The agent a node is bound to (the first binding, if several exist).
    pub fn binding_of(&self, node: NodeId) -> Option<AgentId> {
        self.binding_arrows
            .iter()
            .find(|b| b.node == node)
            .map(|b| b.agent)
    }

    pub fn validate(&self) -> ValidationReport {
        validate::validate(self)
    }

    /// Validates and hands back the report (warnings only) when there are no errors.
    pub fn ensure_valid(&self) -> Result<ValidationReport, InvalidModel> {
        let report = self.validate();
        if report.is_valid() {
            Ok(report)
        } else {
            Err(InvalidModel(report))
        }
    }

    /// Node ids in the order competitors perform them.
    pub fn ordering(&self) -> Result<Vec<NodeId>, InvalidModel> {
        self.ensure_valid()?;
        Ok(validate::simple_path(self).unwrap_or_default())
    }

    /// Measuring-place id of every node: the k-th node on the path gets `k`.
    /// Id 0 is the race-start signal and never appears here.
    pub fn measuring_places(&self) -> Result<BTreeMap<NodeId, u32>, InvalidModel> {
        Ok(self
            .ordering()?
            .into_iter()
            .zip(1..)
            .collect::<BTreeMap<_, _>>())
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn olympic_ordering_follows_arrows() {
        let m = olympic();
        let order = m.ordering().unwrap();
        assert_eq!(order, (1..=5).map(NodeId).collect::<Vec<_>>());
        let kinds: Vec<_> = order.iter().map(|id| m.node(*id).unwrap().kind).collect();
        assert_eq!(
            kinds,
            [
                NodeKind::Swim,
                NodeKind::TransitionArea1,
                NodeKind::Bike,
                NodeKind::TransitionArea2,
                NodeKind::Run
            ]
        );
    }

    #[test]
    fn ordering_of_declared_chain_and_single_node() {
        let mut m = CompetitionModel::new("X");
        m.agents.push(Agent {
            id: AgentId(1),
            kind: AgentKind::Manual { source: "c".into() },
            position: None,
        });
        m.nodes.push(node(1, NodeKind::Swim, "swim", 1));
        m.binding_arrows.push(BindingArrow {
            node: NodeId(1),
            agent: AgentId(1),
        });
        assert_eq!(m.ordering().unwrap(), vec![NodeId(1)]);

        m.nodes.push(node(2, NodeKind::TransitionArea1, "ta1", 1));
        m.nodes.push(node(3, NodeKind::Bike, "bike", 1));
        for id in [2, 3] {
            m.binding_arrows.push(BindingArrow {
                node: NodeId(id),
                agent: AgentId(1),
            });
        }
        // Arrows listed out of order; the chain is still 1 -> 2 -> 3.
        m.order_arrows.push(OrderArrow {
            from: NodeId(2),
            to: NodeId(3),
        });
        m.order_arrows.push(OrderArrow {
            from: NodeId(1),
            to: NodeId(2),
        });
        assert_eq!(m.ordering().unwrap(), vec![NodeId(1), NodeId(2), NodeId(3)]);
        let mps = m.measuring_places().unwrap();
        assert_eq!(mps[&NodeId(1)], 1);
        assert_eq!(mps[&NodeId(2)], 2);
        assert_eq!(mps[&NodeId(3)], 3);
    }

    #[test]
    fn measuring_places_of_olympic_and_empty() {
        let mps = olympic().measuring_places().unwrap();
        assert_eq!(mps.len(), 5);
        assert_eq!(mps.values().copied().collect::<Vec<_>>(), vec![1, 2, 3, 4, 5]);
        assert!(CompetitionModel::new("X")
            .measuring_places()
            .unwrap()
            .is_empty());
    }

    #[test]
    fn ordering_rejects_invalid_model() {
        let mut m = olympic();
        m.order_arrows.pop();
        let err = m.ordering().unwrap_err();
        assert!(err
            .0
            .errors
            .iter()
            .any(|f| f.code == FindingCode::NotASimplePath));
    }

    #[test]
    fn kind_keywords_round_trip() {
        for k in NodeKind::ALL {
            assert_eq!(NodeKind::from_keyword(k.keyword()), Some(k));
        }
        assert_eq!(NodeKind::from_keyword("skate"), None);
    }
}
