//! Front end of the controller language: tokenizer, recursive-descent
//! parser, AST, and the canonical renderer.

pub mod ast;
pub mod lexer;
mod parser;
mod render;

pub use ast::*;
pub use parser::parse;
pub use render::render;

/// Expression and action rendering, shared with the code generator.
pub mod text {
    pub use super::render::{actions, expr, literal, real};
}

#[cfg(test)]
mod tests;
