use std::fmt;

use crate::model::NodeId;

/// A slot in a competitor's variable store.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variable {
    Start(NodeId),
    Finish(NodeId),
    Laps(NodeId),
}

impl Variable {
    pub fn node(self) -> NodeId {
        match self {
            Variable::Start(n) | Variable::Finish(n) | Variable::Laps(n) => n,
        }
    }

    pub fn is_time(self) -> bool {
        !matches!(self, Variable::Laps(_))
    }
}

/// Contents of a variable slot. Times are milliseconds since the race epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Value {
    Time(Option<u64>),
    Count(u32),
}

impl Value {
    pub fn time(self) -> Option<u64> {
        match self {
            Value::Time(t) => t,
            Value::Count(_) => None,
        }
    }

    pub fn count(self) -> Option<u32> {
        match self {
            Value::Count(n) => Some(n),
            Value::Time(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Time(Some(t)) => write!(f, "{t}"),
            Value::Time(None) => f.write_str("unset"),
            Value::Count(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
        }
    }

    pub fn holds(self, lhs: i64, rhs: i64) -> bool {
        match self {
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
            CmpOp::Lt => lhs < rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Ge => lhs >= rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Guard {
    True,
    /// Only valid on `Laps` variables.
    Cmp { var: Variable, op: CmpOp, value: i64 },
    /// Only valid on `Start`/`Finish` variables.
    IsSet(Variable),
    IsUnset(Variable),
    And(Vec<Guard>),
}

impl Guard {
    /// Every variable the guard reads, in syntactic order.
    pub fn variables(&self) -> Vec<Variable> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut Vec<Variable>) {
        match self {
            Guard::True => {}
            Guard::Cmp { var, .. } | Guard::IsSet(var) | Guard::IsUnset(var) => out.push(*var),
            Guard::And(parts) => parts.iter().for_each(|g| g.collect(out)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    /// Sets a time variable to the triggering event's timestamp.
    Upd(Variable),
    /// Decrements a laps variable by one.
    Dec(Variable),
}

impl Action {
    pub fn target(self) -> Variable {
        match self {
            Action::Upd(v) | Action::Dec(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    pub guard: Guard,
    pub action: Action,
}
