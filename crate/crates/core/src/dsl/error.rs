use std::fmt;

use serde::{Deserialize, Serialize};

/// Byte range into the source plus the 1-based line/column of its start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseErrorKind {
    Syntax,
    Validation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub message: String,
    pub span: Span,
}

impl ParseError {
    pub fn syntax(span: Span, message: impl Into<String>) -> ParseError {
        ParseError { kind: ParseErrorKind::Syntax, message: message.into(), span }
    }

    pub fn validation(span: Span, message: impl Into<String>) -> ParseError {
        ParseError { kind: ParseErrorKind::Validation, message: message.into(), span }
    }

    pub fn is_syntax(&self) -> bool {
        self.kind == ParseErrorKind::Syntax
    }

    /// `file:line:col: kind error: message`
    pub fn render(&self, file: &str) -> String {
        format!("{file}:{}:{}: {self}", self.span.line, self.span.col)
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            ParseErrorKind::Syntax => "syntax error",
            ParseErrorKind::Validation => "validation error",
        };
        write!(f, "{kind}: {}", self.message)
    }
}
