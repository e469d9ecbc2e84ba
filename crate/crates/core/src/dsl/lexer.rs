use super::{SourceSpan, SyntaxError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(super) enum TokenKind {
    /// Letters, digits and underscores starting with a letter or underscore.
    /// Keywords are contextual, so every word lexes the same way.
    Word(String),
    Int(String),
    Str(String),
    Semi,
    Eof,
}

#[derive(Debug, Clone)]
pub(super) struct Token {
    pub kind: TokenKind,
    pub span: SourceSpan,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Word(w) => format!("`{w}`"),
            TokenKind::Int(i) => format!("`{i}`"),
            TokenKind::Str(s) => format!("string \"{s}\""),
            TokenKind::Semi => "`;`".into(),
            TokenKind::Eof => "end of input".into(),
        }
    }
}

pub(super) fn tokenize(text: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1u32, 1u32);

    while let Some(&c) = chars.peek() {
        let start = (line, column);
        let span = |len: u32| SourceSpan {
            line: start.0,
            column: start.1,
            length: len,
        };
        match c {
            '\n' => {
                chars.next();
                line += 1;
                column = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                column += 1;
            }
            '/' => {
                chars.next();
                column += 1;
                if chars.peek() == Some(&'/') {
                    while let Some(&c) = chars.peek() {
                        if c == '\n' {
                            break;
                        }
                        chars.next();
                        column += 1;
                    }
                } else {
                    return Err(SyntaxError {
                        span: span(1),
                        expected: "`//` comment".into(),
                        found: "`/`".into(),
                    });
                }
            }
            ';' => {
                chars.next();
                column += 1;
                tokens.push(Token {
                    kind: TokenKind::Semi,
                    span: span(1),
                });
            }
            '"' => {
                chars.next();
                column += 1;
                let mut value = String::new();
                loop {
                    match chars.peek() {
                        Some('"') => {
                            chars.next();
                            column += 1;
                            break;
                        }
                        Some('\n') | None => {
                            return Err(SyntaxError {
                                span: span(column - start.1),
                                expected: "closing `\"`".into(),
                                found: if chars.peek().is_some() {
                                    "end of line".into()
                                } else {
                                    "end of input".into()
                                },
                            });
                        }
                        Some(&c) => {
                            chars.next();
                            column += 1;
                            value.push(c);
                        }
                    }
                }
                tokens.push(Token {
                    kind: TokenKind::Str(value),
                    span: span(column - start.1),
                });
            }
            c if c.is_ascii_digit() => {
                let mut digits = String::new();
                while let Some(&c) = chars.peek() {
                    if !c.is_ascii_digit() {
                        break;
                    }
                    chars.next();
                    column += 1;
                    digits.push(c);
                }
                tokens.push(Token {
                    kind: TokenKind::Int(digits),
                    span: span(column - start.1),
                });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if !(c.is_ascii_alphanumeric() || c == '_') {
                        break;
                    }
                    chars.next();
                    column += 1;
                    word.push(c);
                }
                tokens.push(Token {
                    kind: TokenKind::Word(word),
                    span: span(column - start.1),
                });
            }
            other => {
                return Err(SyntaxError {
                    span: span(1),
                    expected: "a token".into(),
                    found: format!("{other:?}"),
                });
            }
        }
    }
    tokens.push(Token {
        kind: TokenKind::Eof,
        span: SourceSpan {
            line,
            column,
            length: 0,
        },
    });
    Ok(tokens)
}
