//! The intentional-agent language: agent classes (properties, perceptions
//! with `provide:` lists, actions with `ensure:` effects, rules) and an
//! optional `scenario { ... }` block.

mod ast;
mod error;
mod lexer;
mod parser;
mod print;

pub use ast::*;
pub use error::{ParseError, ParseErrorKind, Span};
pub use parser::{parse_clause, parse_effect_decl, parse_program, parse_query, parse_value};

/// EBNF of the accepted syntax, kept next to the parser it describes.
pub const GRAMMAR: &str = include_str!("grammar.ebnf");
