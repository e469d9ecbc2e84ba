//! Proptest strategies for valid competition models.

use proptest::collection::{btree_set, vec};
use proptest::prelude::*;
use proptest::sample::Index;

use crate::model::{
    ActivityNode, Agent, AgentId, AgentKind, BindingArrow, CompetitionModel, NodeId, NodeKind,
    OrderArrow, Position,
};

fn kind() -> impl Strategy<Value = NodeKind> {
    prop::sample::select(NodeKind::ALL.to_vec())
}

fn text() -> impl Strategy<Value = String> {
    "[A-Za-z0-9 ._:-]{1,12}"
}

fn agent_kind() -> impl Strategy<Value = AgentKind> {
    prop_oneof![
        text().prop_map(|endpoint| AgentKind::Auto { endpoint }),
        text().prop_map(|source| AgentKind::Manual { source }),
    ]
}

fn names(n: usize) -> impl Strategy<Value = Vec<String>> {
    btree_set("[A-Za-z][A-Za-z0-9_]{0,6}", n)
        .prop_map(|s| s.into_iter().collect())
        .prop_shuffle()
}

/// Models shaped like the output of lowering DSL text: node ids `1..=n` in
/// path order, consecutive order arrows, no layout.
pub fn canonical_model(
    nodes: std::ops::RangeInclusive<usize>,
    laps: std::ops::RangeInclusive<u32>,
) -> impl Strategy<Value = CompetitionModel> {
    (nodes, 1usize..=3)
        .prop_flat_map(move |(n, agents)| {
            (
                text(),
                vec((kind(), laps.clone(), any::<Index>()), n),
                names(n),
                btree_set(1u32..1000, agents)
                    .prop_map(|s| s.into_iter().collect::<Vec<_>>())
                    .prop_shuffle(),
                vec(agent_kind(), agents),
            )
        })
        .prop_map(|(name, node_specs, names, agent_ids, agent_kinds)| {
            let mut m = CompetitionModel::new(name);
            for (id, kind) in agent_ids.iter().zip(agent_kinds) {
                m.agents.push(Agent {
                    id: AgentId(*id),
                    kind,
                    position: None,
                });
            }
            for (i, ((kind, laps, agent), name)) in node_specs.into_iter().zip(names).enumerate() {
                let id = NodeId(i as u32 + 1);
                m.nodes.push(ActivityNode {
                    id,
                    kind,
                    name,
                    laps,
                    position: None,
                });
                m.binding_arrows.push(BindingArrow {
                    node: id,
                    agent: AgentId(*agent.get(&agent_ids)),
                });
                if i > 0 {
                    m.order_arrows.push(OrderArrow {
                        from: NodeId(i as u32),
                        to: id,
                    });
                }
            }
            m
        })
}

fn position() -> impl Strategy<Value = Option<Position>> {
    prop::option::of((-2000i64..2000, -2000i64..2000).prop_map(|(x, y)| Position { x, y }))
}

/// Valid models with arbitrary ids, list order and layout, as the visual
/// builder might produce them.
pub fn valid_model() -> impl Strategy<Value = CompetitionModel> {
    canonical_model(0..=6, 1..=5)
        .prop_flat_map(|m| {
            let n = m.nodes.len();
            let a = m.agents.len();
            (
                Just(m),
                btree_set(1u32..10_000, n)
                    .prop_map(|s| s.into_iter().collect::<Vec<_>>())
                    .prop_shuffle(),
                vec(position(), n),
                vec(position(), a),
                Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
            )
        })
        .prop_map(|(mut m, ids, node_pos, agent_pos, order)| {
            let remap = |id: NodeId| NodeId(ids[id.0 as usize - 1]);
            for (node, pos) in m.nodes.iter_mut().zip(node_pos) {
                node.id = remap(node.id);
                node.position = pos;
            }
            for (agent, pos) in m.agents.iter_mut().zip(agent_pos) {
                agent.position = pos;
            }
            for arrow in &mut m.order_arrows {
                arrow.from = remap(arrow.from);
                arrow.to = remap(arrow.to);
            }
            for binding in &mut m.binding_arrows {
                binding.node = remap(binding.node);
            }
            let nodes = std::mem::take(&mut m.nodes);
            m.nodes = order.iter().map(|i| nodes[*i].clone()).collect();
            m.order_arrows.reverse();
            m
        })
}
