use std::fmt::Write;

use super::{Action, CompiledProgram, Guard, Variable};

/// Line-oriented listing of a compiled program:
///
/// ```text
/// program "Olympic Triathlon"
/// mp[1] node=s
/// (LAPS[s] > 0) -> dec LAPS[s]
/// (LAPS[s] == 0 && unset FINISH[s]) -> upd FINISH[s]
/// (isset FINISH[s] && unset START[t1]) -> upd START[t1]
/// mp[2] node=t1
/// ...
/// ```
pub fn disassemble(program: &CompiledProgram) -> String {
    let mut out = String::new();
    writeln!(out, "program \"{}\"", program.name).unwrap();
    for (mp, block) in &program.programs {
        writeln!(out, "mp[{mp}] node={}", block.node_name).unwrap();
        for rule in &block.rules {
            writeln!(
                out,
                "({}) -> {}",
                guard(program, &rule.guard, true),
                action(program, rule.action)
            )
            .unwrap();
        }
    }
    out
}

/// Display name of a variable, e.g. `FINISH[swim]`.
pub fn variable_name(program: &CompiledProgram, v: Variable) -> String {
    let name = program.node_name(v.node()).map_or_else(|| format!("#{}", v.node()), str::to_string);
    match v {
        Variable::Start(_) => format!("START[{name}]"),
        Variable::Finish(_) => format!("FINISH[{name}]"),
        Variable::Laps(_) => format!("LAPS[{name}]"),
    }
}

fn guard(program: &CompiledProgram, g: &Guard, top: bool) -> String {
    match g {
        Guard::True => "true".into(),
        Guard::Cmp { var: v, op, value } => format!("{} {} {value}", variable_name(program, *v), op.symbol()),
        Guard::IsSet(v) => format!("isset {}", variable_name(program, *v)),
        Guard::IsUnset(v) => format!("unset {}", variable_name(program, *v)),
        Guard::And(parts) if parts.is_empty() => "true".into(),
        Guard::And(parts) => {
            let inner = parts
                .iter()
                .map(|p| guard(program, p, false))
                .collect::<Vec<_>>()
                .join(" && ");
            if top {
                inner
            } else {
                format!("({inner})")
            }
        }
    }
}

fn action(program: &CompiledProgram, a: Action) -> String {
    match a {
        Action::Upd(v) => format!("upd {}", variable_name(program, v)),
        Action::Dec(v) => format!("dec {}", variable_name(program, v)),
    }
}
