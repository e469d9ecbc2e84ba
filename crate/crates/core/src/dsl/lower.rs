use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use super::{SourceSpan, SyntaxTree};
use crate::model::{
    ActivityNode, Agent, AgentId, BindingArrow, CompetitionModel, NodeId, OrderArrow,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SemanticCode {
    DuplicateAgentId,
    UnknownAgent,
    DuplicateNodeName,
}

impl fmt::Display for SemanticCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SemanticCode::DuplicateAgentId => "DuplicateAgentId",
            SemanticCode::UnknownAgent => "UnknownAgent",
            SemanticCode::DuplicateNodeName => "DuplicateNodeName",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {code}: {message}")]
pub struct SemanticError {
    pub span: SourceSpan,
    pub code: SemanticCode,
    pub message: String,
}

/// Builds the model for a parsed program. Nodes get ids `1..=n` in declaration
/// order and are chained in that order.
pub fn lower(tree: &SyntaxTree) -> Result<CompetitionModel, SemanticError> {
    let mut agents = Vec::with_capacity(tree.agents.len());
    let mut agent_ids = BTreeSet::new();
    for decl in &tree.agents {
        if !agent_ids.insert(decl.id) {
            return Err(SemanticError {
                span: decl.id_span,
                code: SemanticCode::DuplicateAgentId,
                message: format!("agent {} is declared twice", decl.id),
            });
        }
        agents.push(Agent {
            id: AgentId(decl.id),
            kind: decl.kind.clone(),
            position: None,
        });
    }

    let mut names: BTreeMap<&str, u32> = BTreeMap::new();
    let mut model = CompetitionModel {
        name: tree.name.clone(),
        agents,
        ..Default::default()
    };
    for (decl, id) in tree.nodes.iter().zip(1u32..) {
        if let Some(first) = names.insert(&decl.name, id) {
            return Err(SemanticError {
                span: decl.name_span,
                code: SemanticCode::DuplicateNodeName,
                message: format!("node name `{}` already used by node {first}", decl.name),
            });
        }
        if !agent_ids.contains(&decl.agent) {
            return Err(SemanticError {
                span: decl.agent_span,
                code: SemanticCode::UnknownAgent,
                message: format!("agent {} is not declared", decl.agent),
            });
        }
        model.nodes.push(ActivityNode {
            id: NodeId(id),
            kind: decl.kind,
            name: decl.name.clone(),
            laps: decl.laps,
            position: None,
        });
        model.binding_arrows.push(BindingArrow {
            node: NodeId(id),
            agent: AgentId(decl.agent),
        });
        if id > 1 {
            model.order_arrows.push(OrderArrow {
                from: NodeId(id - 1),
                to: NodeId(id),
            });
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::super::{parse, OLYMPIC_SOURCE};
    use super::*;

    #[test]
    fn consecutive_declarations_are_chained() {
        let tree = parse(
            "competition \"C\"; agent 1 manual \"m\";
             swim a laps 1 agent 1; bike b laps 1 agent 1; run c laps 1 agent 1;",
        )
        .unwrap();
        let model = lower(&tree).unwrap();
        let arrows: Vec<_> = model.order_arrows.iter().map(|a| (a.from.0, a.to.0)).collect();
        assert_eq!(arrows, vec![(1, 2), (2, 3)]);
        assert_eq!(model.binding_arrows.len(), 3);
    }

    #[test]
    fn unknown_agent() {
        let tree = parse("competition \"C\"; agent 1 manual \"m\"; swim a laps 1 agent 9;").unwrap();
        let err = lower(&tree).unwrap_err();
        assert_eq!(err.code, SemanticCode::UnknownAgent);
        assert_eq!(err.span.column, 58);
    }

    #[test]
    fn duplicate_agent_and_node_name() {
        let tree =
            parse("competition \"C\"; agent 1 manual \"m\"; agent 1 auto \"x\";").unwrap();
        assert_eq!(lower(&tree).unwrap_err().code, SemanticCode::DuplicateAgentId);

        let tree = parse(
            "competition \"C\"; agent 1 manual \"m\"; swim a laps 1 agent 1; run a laps 1 agent 1;",
        )
        .unwrap();
        assert_eq!(lower(&tree).unwrap_err().code, SemanticCode::DuplicateNodeName);
    }

    #[test]
    fn olympic_lowers_to_a_valid_model() {
        let model = lower(&parse(OLYMPIC_SOURCE).unwrap()).unwrap();
        let report = model.validate();
        assert!(report.errors.is_empty(), "{report}");
        assert_eq!(model.nodes.len(), 5);
        assert_eq!(model.agents.len(), 2);
    }
}
