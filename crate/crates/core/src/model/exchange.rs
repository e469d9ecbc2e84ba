//! The JSON exchange document edited by the visual builder.
//!
//! Field names are fixed and unknown fields are rejected. Positions travel as
//! optional `x`/`y` pairs; giving only one of the two is a schema error.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    ActivityNode, Agent, AgentId, AgentKind, BindingArrow, CompetitionModel, NodeId, NodeKind,
    OrderArrow, Position,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("schema error at `{path}`: {message}")]
pub struct SchemaError {
    /// Dotted path to the offending field, e.g. `nodes[2].kind`.
    pub path: String,
    pub message: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    name: String,
    #[serde(default)]
    nodes: Vec<NodeDoc>,
    #[serde(default)]
    agents: Vec<AgentDoc>,
    #[serde(default)]
    order: Vec<OrderDoc>,
    #[serde(default)]
    bindings: Vec<BindingDoc>,
}

#[derive(Serialize, Deserialize, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum KindDoc {
    Swim,
    Bike,
    Run,
    Ta1,
    Ta2,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    id: u32,
    kind: KindDoc,
    name: String,
    laps: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    y: Option<i64>,
}

#[derive(Serialize, Deserialize, Clone, Copy, PartialEq)]
#[serde(rename_all = "lowercase")]
enum AgentKindDoc {
    Auto,
    Manual,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentDoc {
    id: u32,
    kind: AgentKindDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    endpoint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    y: Option<i64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OrderDoc {
    from: u32,
    to: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BindingDoc {
    node: u32,
    agent: u32,
}

impl From<NodeKind> for KindDoc {
    fn from(kind: NodeKind) -> Self {
        match kind {
            NodeKind::Swim => KindDoc::Swim,
            NodeKind::Bike => KindDoc::Bike,
            NodeKind::Run => KindDoc::Run,
            NodeKind::TransitionArea1 => KindDoc::Ta1,
            NodeKind::TransitionArea2 => KindDoc::Ta2,
        }
    }
}

impl From<KindDoc> for NodeKind {
    fn from(kind: KindDoc) -> Self {
        match kind {
            KindDoc::Swim => NodeKind::Swim,
            KindDoc::Bike => NodeKind::Bike,
            KindDoc::Run => NodeKind::Run,
            KindDoc::Ta1 => NodeKind::TransitionArea1,
            KindDoc::Ta2 => NodeKind::TransitionArea2,
        }
    }
}

fn split(position: Option<Position>) -> (Option<i64>, Option<i64>) {
    match position {
        Some(p) => (Some(p.x), Some(p.y)),
        None => (None, None),
    }
}

fn join(x: Option<i64>, y: Option<i64>, at: &str) -> Result<Option<Position>, SchemaError> {
    match (x, y) {
        (Some(x), Some(y)) => Ok(Some(Position { x, y })),
        (None, None) => Ok(None),
        (Some(_), None) => Err(SchemaError {
            path: format!("{at}.y"),
            message: "missing field `y` (x and y must be given together)".into(),
        }),
        (None, Some(_)) => Err(SchemaError {
            path: format!("{at}.x"),
            message: "missing field `x` (x and y must be given together)".into(),
        }),
    }
}

/// Serializes a model to a pretty-printed exchange document.
pub fn to_exchange(model: &CompetitionModel) -> String {
    let doc = Document {
        name: model.name.clone(),
        nodes: model
            .nodes
            .iter()
            .map(|n| {
                let (x, y) = split(n.position);
                NodeDoc {
                    id: n.id.0,
                    kind: n.kind.into(),
                    name: n.name.clone(),
                    laps: n.laps,
                    x,
                    y,
                }
            })
            .collect(),
        agents: model
            .agents
            .iter()
            .map(|a| {
                let (x, y) = split(a.position);
                let (kind, endpoint, source) = match &a.kind {
                    AgentKind::Auto { endpoint } => (AgentKindDoc::Auto, Some(endpoint.clone()), None),
                    AgentKind::Manual { source } => (AgentKindDoc::Manual, None, Some(source.clone())),
                };
                AgentDoc {
                    id: a.id.0,
                    kind,
                    endpoint,
                    source,
                    x,
                    y,
                }
            })
            .collect(),
        order: model
            .order_arrows
            .iter()
            .map(|o| OrderDoc {
                from: o.from.0,
                to: o.to.0,
            })
            .collect(),
        bindings: model
            .binding_arrows
            .iter()
            .map(|b| BindingDoc {
                node: b.node.0,
                agent: b.agent.0,
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("document serializes");
    text.push('\n');
    text
}

/// Parses an exchange document. Shape problems are reported with the path of
/// the offending field; semantic problems are left to `validate`.
pub fn from_exchange(text: &str) -> Result<CompetitionModel, SchemaError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: Document = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        SchemaError {
            path: if path == "." { String::new() } else { path },
            message: e.into_inner().to_string(),
        }
    })?;

    let mut nodes = Vec::with_capacity(doc.nodes.len());
    for (i, n) in doc.nodes.into_iter().enumerate() {
        nodes.push(ActivityNode {
            id: NodeId(n.id),
            kind: n.kind.into(),
            name: n.name,
            laps: n.laps,
            position: join(n.x, n.y, &format!("nodes[{i}]"))?,
        });
    }

    let mut agents = Vec::with_capacity(doc.agents.len());
    for (i, a) in doc.agents.into_iter().enumerate() {
        let at = format!("agents[{i}]");
        let kind = match (a.kind, a.endpoint, a.source) {
            (AgentKindDoc::Auto, Some(endpoint), None) => AgentKind::Auto { endpoint },
            (AgentKindDoc::Manual, None, Some(source)) => AgentKind::Manual { source },
            (AgentKindDoc::Auto, None, _) => return Err(missing(&at, "endpoint", "auto")),
            (AgentKindDoc::Manual, _, None) => return Err(missing(&at, "source", "manual")),
            (AgentKindDoc::Auto, Some(_), Some(_)) => return Err(stray(&at, "source", "auto")),
            (AgentKindDoc::Manual, Some(_), Some(_)) => {
                return Err(stray(&at, "endpoint", "manual"))
            }
        };
        agents.push(Agent {
            id: AgentId(a.id),
            kind,
            position: join(a.x, a.y, &at)?,
        });
    }

    Ok(CompetitionModel {
        name: doc.name,
        nodes,
        agents,
        order_arrows: doc
            .order
            .into_iter()
            .map(|o| OrderArrow {
                from: NodeId(o.from),
                to: NodeId(o.to),
            })
            .collect(),
        binding_arrows: doc
            .bindings
            .into_iter()
            .map(|b| BindingArrow {
                node: NodeId(b.node),
                agent: AgentId(b.agent),
            })
            .collect(),
    })
}

fn missing(at: &str, field: &str, kind: &str) -> SchemaError {
    SchemaError {
        path: format!("{at}.{field}"),
        message: format!("missing field `{field}` required by {kind} agents"),
    }
}

fn stray(at: &str, field: &str, kind: &str) -> SchemaError {
    SchemaError {
        path: format!("{at}.{field}"),
        message: format!("field `{field}` is not allowed on {kind} agents"),
    }
}
