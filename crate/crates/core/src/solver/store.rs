//! Delayed-evaluation constraint store with fixpoint propagation.
//!
//! Constraint, comparison, and `is/2` goals are not evaluated where they
//! appear in the body; they enter the store and fire as their variables
//! become bound. This is what makes goal order irrelevant to the result.

use std::collections::BTreeSet;

use crate::ast::{ArithExpr, CompareOp};
use crate::rational::Rational;
use crate::solver::arith::{
    count_occurrences, eval_arith, invert_once, linear_form, subst_expr, LinOutcome,
};
use crate::solver::bindings::Bindings;
use crate::solver::{ErrorKind, SolveError};

/// Equality (from `{L = R}` and `is/2`) or an arithmetic comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Relation {
    Eq,
    Cmp(CompareOp),
}

#[derive(Debug, Clone)]
pub struct Entry {
    pub relation: Relation,
    pub lhs: ArithExpr,
    pub rhs: ArithExpr,
}

impl Entry {
    /// Distinct unbound variables (representative names) under `bindings`.
    fn unknowns(&self, bindings: &Bindings) -> BTreeSet<String> {
        let mut vars = Vec::new();
        subst_expr(&self.lhs, bindings).collect_vars(&mut vars);
        subst_expr(&self.rhs, bindings).collect_vars(&mut vars);
        vars.into_iter().collect()
    }

    fn describe(&self) -> String {
        let goal = match self.relation {
            Relation::Eq => crate::ast::Goal::Constraint {
                lhs: self.lhs.clone(),
                rhs: self.rhs.clone(),
            },
            Relation::Cmp(op) => crate::ast::Goal::Compare {
                op,
                lhs: self.lhs.clone(),
                rhs: self.rhs.clone(),
            },
        };
        crate::printer::print_goal(&goal)
    }
}

/// Propagation failure: a contradiction backtracks, anything else aborts
/// the whole solve.
#[derive(Debug)]
pub enum PropagateFailure {
    Contradiction(String),
    Fatal(SolveError),
}

#[derive(Debug, Clone, Default)]
pub struct ConstraintStore {
    pending: Vec<Entry>,
}

impl ConstraintStore {
    pub fn new() -> Self {
        ConstraintStore::default()
    }

    pub fn pending_count(&self) -> usize {
        self.pending.len()
    }

    pub fn pending_description(&self) -> String {
        let shown: Vec<String> = self.pending.iter().map(|e| e.describe()).collect();
        shown.join(", ")
    }

    /// Adds an entry and propagates to fixpoint.
    pub fn add(&mut self, entry: Entry, bindings: &mut Bindings) -> Result<(), PropagateFailure> {
        self.pending.push(entry);
        self.propagate(bindings)
    }

    /// Repeats until no entry makes progress: ground entries are checked
    /// and dropped, single-unknown equalities are isolated and bind their
    /// variable (waking other entries), everything else stays pending.
    pub fn propagate(&mut self, bindings: &mut Bindings) -> Result<(), PropagateFailure> {
        loop {
            let mut progressed = false;
            let mut kept = Vec::with_capacity(self.pending.len());
            for entry in std::mem::take(&mut self.pending) {
                match step(&entry, bindings)? {
                    StepResult::Resolved => progressed = true,
                    StepResult::Pending => kept.push(entry),
                }
            }
            self.pending = kept;
            if !progressed {
                return Ok(());
            }
        }
    }
}

enum StepResult {
    Resolved,
    Pending,
}

fn step(entry: &Entry, bindings: &mut Bindings) -> Result<StepResult, PropagateFailure> {
    let unknowns = entry.unknowns(bindings);
    match unknowns.len() {
        0 => check_ground(entry, bindings).map(|()| StepResult::Resolved),
        1 if entry.relation == Relation::Eq => {
            let target = unknowns.into_iter().next().unwrap();
            isolate(entry, &target, bindings)
        }
        _ => Ok(StepResult::Pending),
    }
}

fn check_ground(entry: &Entry, bindings: &Bindings) -> Result<(), PropagateFailure> {
    let lhs = eval_arith(&entry.lhs, bindings).map_err(PropagateFailure::Fatal)?;
    let rhs = eval_arith(&entry.rhs, bindings).map_err(PropagateFailure::Fatal)?;
    let holds = match entry.relation {
        Relation::Eq => lhs == rhs,
        Relation::Cmp(CompareOp::Eq) => lhs == rhs,
        Relation::Cmp(CompareOp::Neq) => lhs != rhs,
        Relation::Cmp(CompareOp::Lt) => lhs < rhs,
        Relation::Cmp(CompareOp::Gt) => lhs > rhs,
        Relation::Cmp(CompareOp::Le) => lhs <= rhs,
        Relation::Cmp(CompareOp::Ge) => lhs >= rhs,
    };
    if holds {
        Ok(())
    } else {
        let op = match entry.relation {
            Relation::Eq => "=".to_string(),
            Relation::Cmp(op) => op.to_string(),
        };
        Err(PropagateFailure::Contradiction(format!(
            "constraint violated: {lhs} {op} {rhs} does not hold"
        )))
    }
}

/// Solves a single-unknown equality `lhs = rhs` for `target` and binds it.
fn isolate(
    entry: &Entry,
    target: &str,
    bindings: &mut Bindings,
) -> Result<StepResult, PropagateFailure> {
    let lhs = subst_expr(&entry.lhs, bindings);
    let rhs = subst_expr(&entry.rhs, bindings);

    let fatal = |e: SolveError| PropagateFailure::Fatal(e);

    let l = linear_form(&lhs, target).map_err(fatal)?;
    let r = linear_form(&rhs, target).map_err(fatal)?;
    if let (LinOutcome::Linear(l), LinOutcome::Linear(r)) = (&l, &r) {
        // coeff·target + offset = 0 form.
        let coeff = &l.coeff - &r.coeff;
        let offset = &l.offset - &r.offset;
        if coeff.is_zero() {
            return if offset.is_zero() {
                // Holds for every value; the entry adds no information.
                Ok(StepResult::Resolved)
            } else {
                Err(PropagateFailure::Fatal(SolveError::new(
                    ErrorKind::EvaluationError,
                    format!("cannot isolate {target}: zero coefficient"),
                )))
            };
        }
        let value = (-&offset).checked_div(&coeff).expect("nonzero coefficient");
        bind_solution(target, value, bindings);
        return Ok(StepResult::Resolved);
    }

    // Non-linear shape: invert a single occurrence (covers a target inside
    // a divisor, e.g. {10 = 100 / X}); give up otherwise.
    let total = count_occurrences(&lhs, target) + count_occurrences(&rhs, target);
    if total == 1 {
        let (with_target, other) = if count_occurrences(&lhs, target) == 1 {
            (&lhs, &rhs)
        } else {
            (&rhs, &lhs)
        };
        let value = match eval_arith(other, &Bindings::new()) {
            Ok(v) => v,
            Err(_) => return Ok(StepResult::Pending),
        };
        if let Some(solution) = invert_once(with_target, value, target).map_err(fatal)? {
            bind_solution(target, solution, bindings);
            return Ok(StepResult::Resolved);
        }
    }
    Ok(StepResult::Pending)
}

fn bind_solution(target: &str, value: Rational, bindings: &mut Bindings) {
    let bound = bindings.unify(
        &crate::ast::Term::Var(target.to_string()),
        &crate::ast::Term::Num(value),
    );
    debug_assert!(bound, "target was unbound by construction");
}
