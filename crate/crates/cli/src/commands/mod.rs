//! The five subcommands. Each returns a small summary that `main` prints.

pub mod eval;
pub mod generate;
pub mod importance;
pub mod sweep;
pub mod train;
