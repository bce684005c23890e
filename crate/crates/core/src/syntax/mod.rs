//! Feather source text: lexing, parsing, static checks, model construction
//! and serialization.

use std::fmt;

use thiserror::Error;

pub mod ast;
mod build;
pub mod lexer;
mod parser;
mod validate;

pub use build::{build_model, serialize_declarations, BuildError};
pub use parser::{parse_commands, parse_expr, parse_script};
pub use validate::{validate_commands, validate_declarations, validate_script, StaticDiagnostic};

use crate::model::FeatureModel;
use ast::{Command, Script};

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{pos}: {message}")]
pub struct ParseError {
    pub pos: Pos,
    pub message: String,
}

/// Any failure turning source text into a model and commands.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SyntaxError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))]
    Static(Vec<StaticDiagnostic>),
    #[error("{0}")]
    Build(#[from] BuildError),
}

/// Parses, checks and builds a combined script.
pub fn load_script(text: &str) -> Result<(FeatureModel, Vec<Command>), SyntaxError> {
    let Script {
        declarations,
        commands,
    } = parse_script(text)?;
    let diags = validate_declarations(&declarations)
        .into_iter()
        .chain(validate_commands(&commands))
        .collect::<Vec<_>>();
    if !diags.is_empty() {
        return Err(SyntaxError::Static(diags));
    }
    Ok((build_model(&declarations)?, commands))
}

/// Parses and checks a commands-only text.
pub fn load_commands(text: &str) -> Result<Vec<Command>, SyntaxError> {
    let commands = parse_commands(text)?;
    let diags = validate_commands(&commands);
    if !diags.is_empty() {
        return Err(SyntaxError::Static(diags));
    }
    Ok(commands)
}
