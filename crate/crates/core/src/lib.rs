//! Feather: a language for transforming feature models.

pub mod cli;
pub mod commands;
pub mod expr;
pub mod model;
pub mod resolver;
pub mod syntax;
pub mod tvl;
