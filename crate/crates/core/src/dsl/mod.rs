//! The `.et` text language.
//!
//! ```text
//! Program    ::= 'competition' STRING ';' AgentDecl* NodeDecl*
//! AgentDecl  ::= 'agent' INT ( 'auto' STRING | 'manual' STRING ) ';'
//! NodeDecl   ::= KIND IDENT 'laps' INT 'agent' INT ';'
//! KIND       ::= 'swim' | 'bike' | 'run' | 'ta1' | 'ta2'
//! ```
//!
//! Integers are decimal and at least 1. Strings are double-quoted without
//! escapes and may not span lines. `//` starts a comment running to the end of
//! the line. Keywords are only special where the grammar expects them, so a
//! node may be called `run` or `laps`.
//!
//! Declaration order is the competition order: [`lower`] chains consecutive
//! node declarations with order arrows. [`format`] prints the canonical form.

mod format;
mod lexer;
mod lower;
mod parser;

use std::fmt;

use thiserror::Error;

use crate::model::{AgentKind, CompetitionModel, NodeKind};

pub use format::{format, FormatError};
pub use lower::{lower, SemanticCode, SemanticError};
pub use parser::parse;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SourceSpan {
    pub line: u32,
    pub column: u32,
    pub length: u32,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: expected {expected}, found {found}")]
pub struct SyntaxError {
    pub span: SourceSpan,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxTree {
    pub name: String,
    pub name_span: SourceSpan,
    pub agents: Vec<AgentDecl>,
    pub nodes: Vec<NodeDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentDecl {
    pub id: u32,
    pub kind: AgentKind,
    pub span: SourceSpan,
    pub id_span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeDecl {
    pub kind: NodeKind,
    pub name: String,
    pub laps: u32,
    pub agent: u32,
    pub span: SourceSpan,
    pub name_span: SourceSpan,
    pub agent_span: SourceSpan,
}

/// Either front-end failure, for callers that go straight from text to model.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error("{0}")]
    Semantic(#[from] SemanticError),
}

/// Parses and lowers in one step.
pub fn load(text: &str) -> Result<CompetitionModel, DslError> {
    Ok(lower(&parse(text)?)?)
}

#[cfg(test)]
pub(crate) const OLYMPIC_SOURCE: &str = r#"competition "Olympic Triathlon";
agent 1 auto "192.168.225.100";
agent 2 manual "console";
swim s  laps 2 agent 1;
ta1  t1 laps 1 agent 2;
bike b  laps 4 agent 1;
ta2  t2 laps 1 agent 2;
run  r  laps 3 agent 1;
"#;
