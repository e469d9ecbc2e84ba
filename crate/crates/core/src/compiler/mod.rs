//! Lowering of valid models into guarded-rule programs.
//!
//! Every node `K` on the path gets one program at its measuring place. With
//! `S` the next node on the path, the program is, in order:
//!
//! ```text
//! (LAPS[K] > 0)                          -> dec LAPS[K]
//! (LAPS[K] == 0 && unset FINISH[K])      -> upd FINISH[K]
//! (isset FINISH[K] && unset START[S])    -> upd START[S]     (only if S exists)
//! ```
//!
//! Rules run in order and each action is visible to the guards after it, so the
//! last lap's crossing both finishes `K` and starts `S` in one evaluation.

mod disasm;
mod ir;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::model::{AgentId, CompetitionModel, InvalidModel, NodeId, NodeKind};

pub use disasm::{disassemble, variable_name};
pub use ir::{Action, CmpOp, Guard, Rule, Value, Variable};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlPointProgram {
    pub mp: u32,
    pub node: NodeId,
    pub node_name: String,
    pub rules: Vec<Rule>,
}

/// A node on the compiled path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathNode {
    pub id: NodeId,
    pub name: String,
    pub kind: NodeKind,
    pub laps: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledProgram {
    pub name: String,
    pub path: Vec<PathNode>,
    /// Keyed by measuring place `1..=n`. Place 0 (start signal) has no program.
    pub programs: BTreeMap<u32, ControlPointProgram>,
    /// Initial value of every variable. Slot `3k`, `3k+1`, `3k+2` hold
    /// `Start`, `Finish` and `Laps` of the k-th path node.
    pub variables: Vec<(Variable, Value)>,
    pub agents: BTreeSet<AgentId>,
    /// Agents whose crossings are entered by hand.
    pub manual_agents: BTreeSet<AgentId>,
    positions: BTreeMap<NodeId, usize>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileError {
    #[error(transparent)]
    Invalid(#[from] InvalidModel),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("mp[{mp}] rule {rule}: variable {var:?} is not in the variable table")]
    UnknownVariable { mp: u32, rule: usize, var: Variable },
    #[error("mp[{mp}] rule {rule}: {what} applied to {var:?}")]
    IllTyped {
        mp: u32,
        rule: usize,
        what: &'static str,
        var: Variable,
    },
}

impl CompiledProgram {
    /// Index of `var` in the variable table.
    pub fn slot(&self, var: Variable) -> Option<usize> {
        let k = *self.positions.get(&var.node())?;
        Some(
            3 * k
                + match var {
                    Variable::Start(_) => 0,
                    Variable::Finish(_) => 1,
                    Variable::Laps(_) => 2,
                },
        )
    }

    pub fn node_count(&self) -> usize {
        self.path.len()
    }

    pub fn rule_count(&self) -> usize {
        self.programs.values().map(|p| p.rules.len()).sum()
    }

    /// Path position (0-based) of a node.
    pub fn position(&self, node: NodeId) -> Option<usize> {
        self.positions.get(&node).copied()
    }

    pub fn node_name(&self, node: NodeId) -> Option<&str> {
        self.position(node).map(|k| self.path[k].name.as_str())
    }

    /// Checks that every rule reads and writes variables of the right sort.
    pub fn check(&self) -> Result<(), TypeError> {
        for (mp, program) in &self.programs {
            for (i, rule) in program.rules.iter().enumerate() {
                let mut vars = rule.guard.variables();
                vars.push(rule.action.target());
                for var in vars {
                    if self.slot(var).is_none() {
                        return Err(TypeError::UnknownVariable {
                            mp: *mp,
                            rule: i,
                            var,
                        });
                    }
                }
                check_guard(&rule.guard, *mp, i)?;
                let (ok, what) = match rule.action {
                    Action::Upd(v) => (v.is_time(), "upd"),
                    Action::Dec(v) => (!v.is_time(), "dec"),
                };
                if !ok {
                    return Err(TypeError::IllTyped {
                        mp: *mp,
                        rule: i,
                        what,
                        var: rule.action.target(),
                    });
                }
            }
        }
        Ok(())
    }
}

fn check_guard(guard: &Guard, mp: u32, rule: usize) -> Result<(), TypeError> {
    let bad = |what, var| TypeError::IllTyped {
        mp,
        rule,
        what,
        var,
    };
    match guard {
        Guard::True => Ok(()),
        Guard::Cmp { var, .. } if var.is_time() => Err(bad("comparison", *var)),
        Guard::IsSet(var) | Guard::IsUnset(var) if !var.is_time() => Err(bad("set test", *var)),
        Guard::Cmp { .. } | Guard::IsSet(_) | Guard::IsUnset(_) => Ok(()),
        Guard::And(parts) => parts.iter().try_for_each(|g| check_guard(g, mp, rule)),
    }
}

/// Compiles a model that validates without errors.
pub fn compile(model: &CompetitionModel) -> Result<CompiledProgram, CompileError> {
    let order = model.ordering()?;
    let path: Vec<PathNode> = order
        .iter()
        .map(|id| {
            let n = model.node(*id).expect("path nodes exist");
            PathNode {
                id: n.id,
                name: n.name.clone(),
                kind: n.kind,
                laps: n.laps,
            }
        })
        .collect();

    let mut variables = Vec::with_capacity(3 * path.len());
    for node in &path {
        variables.push((Variable::Start(node.id), Value::Time(None)));
        variables.push((Variable::Finish(node.id), Value::Time(None)));
        variables.push((Variable::Laps(node.id), Value::Count(node.laps)));
    }

    let mut programs = BTreeMap::new();
    for (k, node) in path.iter().enumerate() {
        let this = node.id;
        let mut rules = vec![
            Rule {
                guard: Guard::Cmp {
                    var: Variable::Laps(this),
                    op: CmpOp::Gt,
                    value: 0,
                },
                action: Action::Dec(Variable::Laps(this)),
            },
            Rule {
                guard: Guard::And(vec![
                    Guard::Cmp {
                        var: Variable::Laps(this),
                        op: CmpOp::Eq,
                        value: 0,
                    },
                    Guard::IsUnset(Variable::Finish(this)),
                ]),
                action: Action::Upd(Variable::Finish(this)),
            },
        ];
        if let Some(next) = path.get(k + 1) {
            rules.push(Rule {
                guard: Guard::And(vec![
                    Guard::IsSet(Variable::Finish(this)),
                    Guard::IsUnset(Variable::Start(next.id)),
                ]),
                action: Action::Upd(Variable::Start(next.id)),
            });
        }
        let mp = k as u32 + 1;
        programs.insert(
            mp,
            ControlPointProgram {
                mp,
                node: this,
                node_name: node.name.clone(),
                rules,
            },
        );
    }

    Ok(CompiledProgram {
        name: model.name.clone(),
        positions: path.iter().enumerate().map(|(k, n)| (n.id, k)).collect(),
        path,
        programs,
        variables,
        agents: model.agents.iter().map(|a| a.id).collect(),
        manual_agents: model
            .agents
            .iter()
            .filter(|a| a.kind.is_manual())
            .map(|a| a.id)
            .collect(),
    })
}
