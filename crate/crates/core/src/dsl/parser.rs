use super::lexer::{tokenize, Token, TokenKind};
use super::{AgentDecl, NodeDecl, SourceSpan, SyntaxError, SyntaxTree};
use crate::model::{AgentKind, NodeKind};

/// Parses `.et` source. The first error ends the parse.
pub fn parse(text: &str) -> Result<SyntaxTree, SyntaxError> {
    let tokens = tokenize(text)?;
    Parser { tokens, pos: 0 }.program()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if tok.kind != TokenKind::Eof {
            self.pos += 1;
        }
        tok
    }

    fn error(&self, expected: impl Into<String>) -> SyntaxError {
        let tok = self.peek();
        SyntaxError {
            span: tok.span,
            expected: expected.into(),
            found: tok.kind.describe(),
        }
    }

    fn peek_word(&self) -> Option<&str> {
        match &self.peek().kind {
            TokenKind::Word(w) => Some(w),
            _ => None,
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<SourceSpan, SyntaxError> {
        if self.peek_word() == Some(kw) {
            Ok(self.bump().span)
        } else {
            Err(self.error(format!("`{kw}`")))
        }
    }

    fn semi(&mut self) -> Result<SourceSpan, SyntaxError> {
        if self.peek().kind == TokenKind::Semi {
            Ok(self.bump().span)
        } else {
            Err(self.error("`;`"))
        }
    }

    fn string(&mut self) -> Result<(String, SourceSpan), SyntaxError> {
        match &self.peek().kind {
            TokenKind::Str(s) => {
                let s = s.clone();
                Ok((s, self.bump().span))
            }
            _ => Err(self.error("a string")),
        }
    }

    fn positive_int(&mut self) -> Result<(u32, SourceSpan), SyntaxError> {
        let TokenKind::Int(digits) = &self.peek().kind else {
            return Err(self.error("an integer >= 1"));
        };
        match digits.parse::<u32>() {
            Ok(0) => Err(self.error("an integer >= 1")),
            Ok(n) => Ok((n, self.bump().span)),
            Err(_) => Err(self.error("an integer >= 1 that fits in 32 bits")),
        }
    }

    fn ident(&mut self) -> Result<(String, SourceSpan), SyntaxError> {
        match self.peek_word() {
            Some(w) if w.starts_with(|c: char| c.is_ascii_alphabetic()) => {
                let w = w.to_string();
                Ok((w, self.bump().span))
            }
            _ => Err(self.error("a node name")),
        }
    }

    fn program(mut self) -> Result<SyntaxTree, SyntaxError> {
        self.keyword("competition")?;
        let (name, name_span) = self.string()?;
        self.semi()?;

        let mut agents = Vec::new();
        while self.peek_word() == Some("agent") {
            agents.push(self.agent_decl()?);
        }
        let mut nodes = Vec::new();
        loop {
            // `phase` is accepted as an optional lead-in to a node declaration.
            if self.peek_word() == Some("phase") {
                self.bump();
                match self.peek_word().and_then(NodeKind::from_keyword) {
                    Some(kind) => {
                        nodes.push(self.node_decl(kind)?);
                        continue;
                    }
                    None => return Err(self.error("a node kind")),
                }
            }
            match self.peek_word().and_then(NodeKind::from_keyword) {
                Some(kind) => nodes.push(self.node_decl(kind)?),
                None if self.peek().kind == TokenKind::Eof => break,
                None if nodes.is_empty() => {
                    return Err(self.error("`agent`, a node kind or end of input"))
                }
                None => return Err(self.error("a node kind or end of input")),
            }
        }
        Ok(SyntaxTree {
            name,
            name_span,
            agents,
            nodes,
        })
    }

    fn agent_decl(&mut self) -> Result<AgentDecl, SyntaxError> {
        let start = self.keyword("agent")?;
        let (id, id_span) = self.positive_int()?;
        let kind = match self.peek_word() {
            Some("auto") => {
                self.bump();
                AgentKind::Auto {
                    endpoint: self.string()?.0,
                }
            }
            Some("manual") => {
                self.bump();
                AgentKind::Manual {
                    source: self.string()?.0,
                }
            }
            _ => return Err(self.error("`auto` or `manual`")),
        };
        let end = self.semi()?;
        Ok(AgentDecl {
            id,
            kind,
            span: cover(start, end),
            id_span,
        })
    }

    fn node_decl(&mut self, kind: NodeKind) -> Result<NodeDecl, SyntaxError> {
        let start = self.bump().span;
        let (name, name_span) = self.ident()?;
        self.keyword("laps")?;
        let (laps, _) = self.positive_int()?;
        self.keyword("agent")?;
        let (agent, agent_span) = self.positive_int()?;
        let end = self.semi()?;
        Ok(NodeDecl {
            kind,
            name,
            laps,
            agent,
            span: cover(start, end),
            name_span,
            agent_span,
        })
    }
}

/// Span from `start` through `end`; collapses to `start` across lines.
fn cover(start: SourceSpan, end: SourceSpan) -> SourceSpan {
    if start.line == end.line {
        SourceSpan {
            length: end.column + end.length - start.column,
            ..start
        }
    } else {
        start
    }
}
