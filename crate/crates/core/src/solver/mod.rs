//! The interpreter: SLD resolution over user clauses with a delayed
//! rational constraint store.
//!
//! `solve/1` is the query entry point. Call goals resolve against facts and
//! rules in clause order with backtracking; constraint, comparison, and
//! `is/2` goals enter the store and fire as variables become bound, so the
//! outcome does not depend on goal or clause order.

pub mod arith;
pub mod bindings;
pub mod store;

use std::collections::HashMap;
use std::fmt;
use std::time::{Duration, Instant};

use crate::ast::{Clause, Goal, Program, Term};
use crate::parser::parse_program;
use crate::rational::Rational;

pub use arith::eval_arith;
pub use bindings::Bindings;

use store::{ConstraintStore, Entry, PropagateFailure, Relation};

/// Classified failure modes of a solve run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    /// The source did not parse.
    ParseErrorKind,
    /// A call to a predicate with no clauses.
    ExistenceError,
    /// A bare variable used as a goal.
    InstantiationError,
    /// The program redefines a reserved built-in predicate.
    PermissionError,
    /// Arithmetic failure: division by zero, non-numeric operand, unknown
    /// function symbol, or an unisolatable constraint.
    EvaluationError,
    /// Success without a unique ground numeric answer.
    Underdetermined,
    /// Every derivation failed.
    NoSolution,
    /// Depth or step budget exhausted.
    DepthLimit,
    /// Wall-clock budget exhausted.
    Timeout,
}

impl ErrorKind {
    pub fn name(&self) -> &'static str {
        match self {
            ErrorKind::ParseErrorKind => "parse_error",
            ErrorKind::ExistenceError => "existence_error",
            ErrorKind::InstantiationError => "instantiation_error",
            ErrorKind::PermissionError => "permission_error",
            ErrorKind::EvaluationError => "evaluation_error",
            ErrorKind::Underdetermined => "underdetermined",
            ErrorKind::NoSolution => "no_solution",
            ErrorKind::DepthLimit => "depth_limit",
            ErrorKind::Timeout => "timeout",
        }
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveError {
    pub kind: ErrorKind,
    pub detail: String,
}

impl SolveError {
    pub fn new(kind: ErrorKind, detail: impl Into<String>) -> Self {
        SolveError {
            kind,
            detail: detail.into(),
        }
    }
}

/// Result of running a program: an exact answer or a classified error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveOutcome {
    Answer(Rational),
    Error { kind: ErrorKind, detail: String },
}

impl SolveOutcome {
    fn from_error(e: SolveError) -> Self {
        SolveOutcome::Error {
            kind: e.kind,
            detail: e.detail,
        }
    }

    pub fn answer(&self) -> Option<&Rational> {
        match self {
            SolveOutcome::Answer(value) => Some(value),
            SolveOutcome::Error { .. } => None,
        }
    }

    pub fn error_kind(&self) -> Option<ErrorKind> {
        match self {
            SolveOutcome::Answer(_) => None,
            SolveOutcome::Error { kind, .. } => Some(*kind),
        }
    }

    /// Same answer value or same error kind; details are free to differ.
    pub fn same_result(&self, other: &SolveOutcome) -> bool {
        match (self, other) {
            (SolveOutcome::Answer(a), SolveOutcome::Answer(b)) => a == b,
            (SolveOutcome::Error { kind: a, .. }, SolveOutcome::Error { kind: b, .. }) => a == b,
            _ => false,
        }
    }
}

impl fmt::Display for SolveOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveOutcome::Answer(value) => write!(f, "{value}"),
            SolveOutcome::Error { kind, detail } => write!(f, "{kind}: {detail}"),
        }
    }
}

/// Resource budget for one solve run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveLimits {
    pub max_depth: usize,
    pub max_steps: u64,
    pub timeout: Duration,
}

impl Default for SolveLimits {
    fn default() -> Self {
        SolveLimits {
            max_depth: 256,
            max_steps: 100_000,
            timeout: Duration::from_secs(5),
        }
    }
}

/// Heads a program may not define; redefinition is a permission error.
pub const RESERVED_HEADS: &[(&str, usize)] = &[
    ("length", 2),
    ("is", 2),
    ("=", 2),
    ("member", 2),
    ("append", 3),
    ("between", 3),
    ("msort", 2),
    ("sum_list", 2),
    ("=:=", 2),
    ("=\\=", 2),
    ("<", 2),
    (">", 2),
    ("=<", 2),
    (">=", 2),
];

/// Runs the query `solve(Answer)` against the program.
pub fn solve(program: &Program, limits: &SolveLimits) -> SolveOutcome {
    for clause in &program.clauses {
        if let Some((functor, arity)) = clause.head().and_then(|h| h.functor_arity()) {
            if RESERVED_HEADS.contains(&(functor, arity)) {
                return SolveOutcome::Error {
                    kind: ErrorKind::PermissionError,
                    detail: format!("predicate {functor}/{arity} is reserved"),
                };
            }
        }
    }

    let mut engine = Engine::new(program, limits);
    let query_var = "_Q";
    let query = Goal::Call(Term::Compound(
        "solve".into(),
        vec![Term::Var(query_var.into())],
    ));
    match engine.prove(&[query], 0) {
        Ok(()) => {
            if engine.store.pending_count() > 0 {
                return SolveOutcome::Error {
                    kind: ErrorKind::Underdetermined,
                    detail: format!(
                        "{} pending constraint(s): {}",
                        engine.store.pending_count(),
                        engine.store.pending_description()
                    ),
                };
            }
            match engine.bindings.resolve(&Term::Var(query_var.into())) {
                Term::Num(value) => SolveOutcome::Answer(value),
                Term::Var(name) => SolveOutcome::Error {
                    kind: ErrorKind::Underdetermined,
                    detail: format!("answer variable {name} is unbound"),
                },
                other if engine.bindings.is_ground(&other) => SolveOutcome::Error {
                    kind: ErrorKind::EvaluationError,
                    detail: format!(
                        "answer is not numeric: {}",
                        crate::printer::print_term(&other)
                    ),
                },
                other => SolveOutcome::Error {
                    kind: ErrorKind::Underdetermined,
                    detail: format!(
                        "answer contains unbound variables: {}",
                        crate::printer::print_term(&other)
                    ),
                },
            }
        }
        Err(Failure::Branch) => SolveOutcome::Error {
            kind: ErrorKind::NoSolution,
            detail: engine
                .last_contradiction
                .unwrap_or_else(|| "no derivation satisfies solve/1".into()),
        },
        Err(Failure::Fatal(e)) => SolveOutcome::from_error(e),
    }
}

/// Parses and solves, folding syntax errors into the outcome so callers
/// classify uniformly.
pub fn run_query_text(source: &str, limits: &SolveLimits) -> SolveOutcome {
    match parse_program(source) {
        Ok(program) => solve(&program, limits),
        Err(e) => SolveOutcome::Error {
            kind: ErrorKind::ParseErrorKind,
            detail: e.to_string(),
        },
    }
}

enum Failure {
    /// This branch failed; backtrack to the last choice point.
    Branch,
    /// Abort the whole run.
    Fatal(SolveError),
}

struct Engine<'p> {
    index: HashMap<(String, usize), Vec<&'p Clause>>,
    bindings: Bindings,
    store: ConstraintStore,
    limits: SolveLimits,
    deadline: Instant,
    steps: u64,
    fresh: usize,
    last_contradiction: Option<String>,
}

impl<'p> Engine<'p> {
    fn new(program: &'p Program, limits: &SolveLimits) -> Self {
        let mut index: HashMap<(String, usize), Vec<&Clause>> = HashMap::new();
        for clause in &program.clauses {
            if let Some((functor, arity)) = clause.head().and_then(|h| h.functor_arity()) {
                index
                    .entry((functor.to_string(), arity))
                    .or_default()
                    .push(clause);
            }
        }
        Engine {
            index,
            bindings: Bindings::new(),
            store: ConstraintStore::new(),
            limits: *limits,
            deadline: Instant::now() + limits.timeout,
            steps: 0,
            fresh: 0,
            last_contradiction: None,
        }
    }

    fn charge_step(&mut self) -> Result<(), Failure> {
        self.steps += 1;
        if self.steps > self.limits.max_steps {
            return Err(Failure::Fatal(SolveError::new(
                ErrorKind::DepthLimit,
                format!("step limit of {} exceeded", self.limits.max_steps),
            )));
        }
        if Instant::now() >= self.deadline {
            return Err(Failure::Fatal(SolveError::new(
                ErrorKind::Timeout,
                format!("timeout of {:?} exceeded", self.limits.timeout),
            )));
        }
        Ok(())
    }

    fn rename_apart(&mut self, clause: &Clause) -> Clause {
        let map: HashMap<String, String> = clause
            .variables()
            .into_iter()
            .map(|name| {
                let fresh = format!("_G{}", self.fresh);
                self.fresh += 1;
                (name, fresh)
            })
            .collect();
        clause.rename_vars(&map)
    }

    fn prove(&mut self, goals: &[Goal], depth: usize) -> Result<(), Failure> {
        self.charge_step()?;
        let Some((goal, rest)) = goals.split_first() else {
            return Ok(());
        };
        match goal {
            Goal::Constraint { lhs, rhs } => self.delay(
                Entry {
                    relation: Relation::Eq,
                    lhs: lhs.clone(),
                    rhs: rhs.clone(),
                },
                rest,
                depth,
            ),
            Goal::Is { target, expr } => self.delay(
                Entry {
                    relation: Relation::Eq,
                    lhs: term_to_arith(target),
                    rhs: expr.clone(),
                },
                rest,
                depth,
            ),
            Goal::Compare { op, lhs, rhs } => self.delay(
                Entry {
                    relation: Relation::Cmp(*op),
                    lhs: lhs.clone(),
                    rhs: rhs.clone(),
                },
                rest,
                depth,
            ),
            Goal::Call(term) => self.call(term, rest, depth),
        }
    }

    /// Adds a store entry, then continues with the remaining goals.
    fn delay(&mut self, entry: Entry, rest: &[Goal], depth: usize) -> Result<(), Failure> {
        match self.store.add(entry, &mut self.bindings) {
            Ok(()) => self.prove(rest, depth),
            Err(PropagateFailure::Contradiction(msg)) => {
                self.last_contradiction = Some(msg);
                Err(Failure::Branch)
            }
            Err(PropagateFailure::Fatal(e)) => Err(Failure::Fatal(e)),
        }
    }

    fn call(&mut self, term: &Term, rest: &[Goal], depth: usize) -> Result<(), Failure> {
        let callee = self.bindings.walk(term).clone();
        let Some((functor, arity)) = callee.functor_arity() else {
            let detail = match &callee {
                Term::Var(name) => format!("goal is an unbound variable ({name})"),
                other => format!(
                    "goal is not callable: {}",
                    crate::printer::print_term(other)
                ),
            };
            return Err(Failure::Fatal(SolveError::new(
                ErrorKind::InstantiationError,
                detail,
            )));
        };

        let alternatives: Vec<&Clause> = match self.index.get(&(functor.to_string(), arity)) {
            Some(clauses) => clauses.clone(),
            None => {
                let detail = if RESERVED_HEADS.contains(&(functor, arity)) {
                    format!("built-in {functor}/{arity} is not available in this dialect")
                } else {
                    format!("unknown predicate {functor}/{arity}")
                };
                return Err(Failure::Fatal(SolveError::new(
                    ErrorKind::ExistenceError,
                    detail,
                )));
            }
        };

        for clause in alternatives {
            self.charge_step()?;
            let saved_bindings = self.bindings.clone();
            let saved_store = self.store.clone();
            let renamed = self.rename_apart(clause);
            let (head, body, next_depth) = match renamed {
                Clause::Fact(head) => (head, Vec::new(), depth),
                Clause::Rule { head, body } => (head, body, depth + 1),
                Clause::Directive(_) => continue,
            };
            if next_depth > self.limits.max_depth {
                return Err(Failure::Fatal(SolveError::new(
                    ErrorKind::DepthLimit,
                    format!("depth limit of {} exceeded", self.limits.max_depth),
                )));
            }
            if self.bindings.unify(&callee, &head) {
                match self.store.propagate(&mut self.bindings) {
                    Ok(()) => {
                        let mut continuation = body;
                        continuation.extend_from_slice(rest);
                        match self.prove(&continuation, next_depth) {
                            Ok(()) => return Ok(()),
                            Err(Failure::Branch) => {}
                            Err(fatal) => return Err(fatal),
                        }
                    }
                    Err(PropagateFailure::Contradiction(msg)) => {
                        self.last_contradiction = Some(msg);
                    }
                    Err(PropagateFailure::Fatal(e)) => return Err(Failure::Fatal(e)),
                }
            }
            self.bindings = saved_bindings;
            self.store = saved_store;
        }
        Err(Failure::Branch)
    }
}

fn term_to_arith(term: &Term) -> crate::ast::ArithExpr {
    match term {
        Term::Var(name) => crate::ast::ArithExpr::VarRef(name.clone()),
        Term::Num(value) => crate::ast::ArithExpr::Const(value.clone()),
        other => crate::ast::ArithExpr::Opaque(Box::new(other.clone())),
    }
}
