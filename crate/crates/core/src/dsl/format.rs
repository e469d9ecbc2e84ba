use std::fmt::Write;

use thiserror::Error;

use crate::model::{AgentKind, CompetitionModel, InvalidModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatError {
    #[error(transparent)]
    Invalid(#[from] InvalidModel),
    #[error("{0} cannot be written as a DSL string (contains `\"` or a line break)")]
    Unrepresentable(String),
}

fn quoted(s: &str, what: &str) -> Result<String, FormatError> {
    if s.contains(['"', '\n', '\r']) {
        return Err(FormatError::Unrepresentable(format!("{what} {s:?}")));
    }
    Ok(format!("\"{s}\""))
}

/// Canonical source for a valid model: one declaration per line, agents in
/// model order, nodes in path order.
///
/// Positions and node ids are not part of the text form; reparsing renumbers
/// nodes `1..=n` along the path.
pub fn format(model: &CompetitionModel) -> Result<String, FormatError> {
    let path = model.ordering()?;
    let mut out = String::new();
    writeln!(out, "competition {};", quoted(&model.name, "competition name")?).unwrap();
    for agent in &model.agents {
        let (kw, value) = match &agent.kind {
            AgentKind::Auto { endpoint } => ("auto", quoted(endpoint, "endpoint")?),
            AgentKind::Manual { source } => ("manual", quoted(source, "source")?),
        };
        writeln!(out, "agent {} {kw} {value};", agent.id).unwrap();
    }
    for id in path {
        let node = model.node(id).expect("path nodes exist");
        let agent = model.binding_of(id).expect("valid nodes are bound");
        writeln!(
            out,
            "{} {} laps {} agent {};",
            node.kind, node.name, node.laps, agent
        )
        .unwrap();
    }
    Ok(out)
}
