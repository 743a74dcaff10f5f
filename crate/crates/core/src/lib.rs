//! Core of a logic-program toolkit for math word problems: an exact-rational
//! Prolog dialect with a parser, canonical printer, a deterministic solver
//! built on delayed constraint propagation, and order permutations of
//! programs that preserve the solved answer.

pub mod ast;
pub mod error;
pub mod lexer;
pub mod parser;
pub mod permute;
pub mod printer;
pub mod rational;
pub mod solver;

pub use ast::{structural_eq, ArithExpr, ArithOp, Clause, CompareOp, Goal, Program, Term};
pub use error::ParseError;
pub use parser::parse_program;
pub use printer::pretty_print;
pub use rational::Rational;
pub use solver::{run_query_text, solve, ErrorKind, SolveLimits, SolveOutcome};
