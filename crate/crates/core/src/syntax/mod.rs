//! Surface syntax: tokens, the tree, the parser and the emitter.

pub mod ast;
pub mod emit;
pub mod erase;
pub mod lexer;
pub mod parser;

pub use ast::*;
pub use erase::{erase, strip, strip_stmt, strip_type};
pub use emit::{emit_class, emit_function, emit_program, expr_str, type_str};
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::{parse, parse_expr, parse_expr_list};

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SyntaxError {
    #[error("{message}")]
    Lex { span: Span, message: String },
    #[error("{message}")]
    Parse { span: Span, message: String },
    #[error("duplicate declaration of `{name}`")]
    Duplicate { span: Span, name: String },
}

impl SyntaxError {
    pub fn span(&self) -> Span {
        match self {
            SyntaxError::Lex { span, .. } | SyntaxError::Parse { span, .. } | SyntaxError::Duplicate { span, .. } => *span,
        }
    }
}
