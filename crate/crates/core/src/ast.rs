//! Abstract syntax for the solver dialect.
//!
//! A [`Program`] is an ordered list of clauses: directives, facts, and rules.
//! Rule bodies are sequences of [`Goal`]s; arithmetic lives in [`ArithExpr`]
//! under `{L = R}` constraints, `is/2`, and comparison goals.

use std::collections::HashMap;
use std::fmt;

use crate::rational::Rational;

/// A first-order term.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    /// Lowercase-leading identifier, e.g. `weng`.
    Atom(String),
    /// Uppercase/underscore-leading identifier, e.g. `Answer`, `_G3`.
    Var(String),
    /// Exact rational constant.
    Num(Rational),
    /// Functor with one or more arguments, e.g. `earn(weng, 12)`.
    Compound(String, Vec<Term>),
    /// Proper list written `[a, b, c]`.
    List(Vec<Term>),
}

impl Term {
    /// Functor name and arity for atoms and compounds; `None` otherwise.
    pub fn functor_arity(&self) -> Option<(&str, usize)> {
        match self {
            Term::Atom(name) => Some((name, 0)),
            Term::Compound(name, args) => Some((name, args.len())),
            _ => None,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    /// Collects variable names in first-occurrence order into `out`.
    pub fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Term::Var(name) => {
                if !out.iter().any(|v| v == name) {
                    out.push(name.clone());
                }
            }
            Term::Compound(_, args) => {
                for arg in args {
                    arg.collect_vars(out);
                }
            }
            Term::List(items) => {
                for item in items {
                    item.collect_vars(out);
                }
            }
            Term::Atom(_) | Term::Num(_) => {}
        }
    }

    fn rename_vars(&self, map: &HashMap<String, String>) -> Term {
        match self {
            Term::Var(name) => match map.get(name) {
                Some(new) => Term::Var(new.clone()),
                None => Term::Var(name.clone()),
            },
            Term::Compound(functor, args) => Term::Compound(
                functor.clone(),
                args.iter().map(|a| a.rename_vars(map)).collect(),
            ),
            Term::List(items) => Term::List(items.iter().map(|i| i.rename_vars(map)).collect()),
            Term::Atom(_) | Term::Num(_) => self.clone(),
        }
    }
}

/// Binary arithmetic operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl fmt::Display for ArithOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let symbol = match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        };
        f.write_str(symbol)
    }
}

/// Arithmetic comparison operator usable as a goal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompareOp {
    /// `=:=`
    Eq,
    /// `=\=`
    Neq,
    /// `<`
    Lt,
    /// `>`
    Gt,
    /// `=<`
    Le,
    /// `>=`
    Ge,
}

impl fmt::Display for CompareOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let symbol = match self {
            CompareOp::Eq => "=:=",
            CompareOp::Neq => "=\\=",
            CompareOp::Lt => "<",
            CompareOp::Gt => ">",
            CompareOp::Le => "=<",
            CompareOp::Ge => ">=",
        };
        f.write_str(symbol)
    }
}

/// An arithmetic expression as it appears inside `{…}`, `is/2`, or a
/// comparison goal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ArithExpr {
    Const(Rational),
    VarRef(String),
    Neg(Box<ArithExpr>),
    BinOp {
        op: ArithOp,
        lhs: Box<ArithExpr>,
        rhs: Box<ArithExpr>,
    },
    /// A non-arithmetic term in arithmetic position, e.g. `sum(Scores)` or a
    /// list. Such programs parse; evaluation rejects the term at solve time.
    Opaque(Box<Term>),
}

impl ArithExpr {
    pub fn bin(op: ArithOp, lhs: ArithExpr, rhs: ArithExpr) -> ArithExpr {
        ArithExpr::BinOp {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            ArithExpr::VarRef(name) => {
                if !out.iter().any(|v| v == name) {
                    out.push(name.clone());
                }
            }
            ArithExpr::Neg(inner) => inner.collect_vars(out),
            ArithExpr::BinOp { lhs, rhs, .. } => {
                lhs.collect_vars(out);
                rhs.collect_vars(out);
            }
            ArithExpr::Opaque(term) => term.collect_vars(out),
            ArithExpr::Const(_) => {}
        }
    }

    fn rename_vars(&self, map: &HashMap<String, String>) -> ArithExpr {
        match self {
            ArithExpr::VarRef(name) => match map.get(name) {
                Some(new) => ArithExpr::VarRef(new.clone()),
                None => ArithExpr::VarRef(name.clone()),
            },
            ArithExpr::Neg(inner) => ArithExpr::Neg(Box::new(inner.rename_vars(map))),
            ArithExpr::BinOp { op, lhs, rhs } => ArithExpr::BinOp {
                op: *op,
                lhs: Box::new(lhs.rename_vars(map)),
                rhs: Box::new(rhs.rename_vars(map)),
            },
            ArithExpr::Opaque(term) => ArithExpr::Opaque(Box::new(term.rename_vars(map))),
            ArithExpr::Const(_) => self.clone(),
        }
    }
}

/// One goal of a rule body.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Goal {
    /// Predicate invocation. The term is Atom, Compound, or a bare Var
    /// (legal syntax; a bare Var fails only at solve time).
    Call(Term),
    /// `{L = R}` rational constraint.
    Constraint { lhs: ArithExpr, rhs: ArithExpr },
    /// `Target is Expr`.
    Is { target: Term, expr: ArithExpr },
    /// Arithmetic comparison, e.g. `X =< Y + 1`.
    Compare {
        op: CompareOp,
        lhs: ArithExpr,
        rhs: ArithExpr,
    },
}

impl Goal {
    pub fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Goal::Call(term) => term.collect_vars(out),
            Goal::Constraint { lhs, rhs } => {
                lhs.collect_vars(out);
                rhs.collect_vars(out);
            }
            Goal::Is { target, expr } => {
                target.collect_vars(out);
                expr.collect_vars(out);
            }
            Goal::Compare { lhs, rhs, .. } => {
                lhs.collect_vars(out);
                rhs.collect_vars(out);
            }
        }
    }

    fn rename_vars(&self, map: &HashMap<String, String>) -> Goal {
        match self {
            Goal::Call(term) => Goal::Call(term.rename_vars(map)),
            Goal::Constraint { lhs, rhs } => Goal::Constraint {
                lhs: lhs.rename_vars(map),
                rhs: rhs.rename_vars(map),
            },
            Goal::Is { target, expr } => Goal::Is {
                target: target.rename_vars(map),
                expr: expr.rename_vars(map),
            },
            Goal::Compare { op, lhs, rhs } => Goal::Compare {
                op: *op,
                lhs: lhs.rename_vars(map),
                rhs: rhs.rename_vars(map),
            },
        }
    }
}

/// One clause of a program.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Clause {
    /// `:- term.` directive, e.g. the clpq use_module line.
    Directive(Term),
    /// Bodiless clause; head is Atom or Compound.
    Fact(Term),
    /// `head :- goal, …, goal.` with a non-empty body.
    Rule { head: Term, body: Vec<Goal> },
}

impl Clause {
    pub fn head(&self) -> Option<&Term> {
        match self {
            Clause::Fact(head) => Some(head),
            Clause::Rule { head, .. } => Some(head),
            Clause::Directive(_) => None,
        }
    }

    /// Variable names in first-occurrence order, head before body.
    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            Clause::Directive(term) => term.collect_vars(&mut out),
            Clause::Fact(head) => head.collect_vars(&mut out),
            Clause::Rule { head, body } => {
                head.collect_vars(&mut out);
                for goal in body {
                    goal.collect_vars(&mut out);
                }
            }
        }
        out
    }

    /// Renames every variable via `map`, leaving unmapped names untouched.
    pub fn rename_vars(&self, map: &HashMap<String, String>) -> Clause {
        match self {
            Clause::Directive(term) => Clause::Directive(term.rename_vars(map)),
            Clause::Fact(head) => Clause::Fact(head.rename_vars(map)),
            Clause::Rule { head, body } => Clause::Rule {
                head: head.rename_vars(map),
                body: body.iter().map(|g| g.rename_vars(map)).collect(),
            },
        }
    }

    /// Rewrites variables to canonical per-clause names (`V0`, `V1`, …) in
    /// first-occurrence order, so alpha-equivalent clauses compare equal.
    pub fn normalize_vars(&self) -> Clause {
        let vars = self.variables();
        let map: HashMap<String, String> = vars
            .into_iter()
            .enumerate()
            .map(|(i, name)| (name, format!("V{i}")))
            .collect();
        self.rename_vars(&map)
    }
}

/// An ordered list of clauses; the unit every pipeline stage passes around.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Program {
    pub clauses: Vec<Clause>,
}

impl Program {
    pub fn new(clauses: Vec<Clause>) -> Self {
        Program { clauses }
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    /// Index and body of the single `solve/1` rule, if present.
    pub fn solve_rule(&self) -> Option<(usize, &Term, &[Goal])> {
        self.clauses.iter().enumerate().find_map(|(i, c)| match c {
            Clause::Rule { head, body } if head.functor_arity() == Some(("solve", 1)) => {
                Some((i, head, body.as_slice()))
            }
            _ => None,
        })
    }

    /// Alpha-renames every clause to canonical variable names.
    pub fn normalize_vars(&self) -> Program {
        Program {
            clauses: self.clauses.iter().map(|c| c.normalize_vars()).collect(),
        }
    }
}

/// True iff the clause lists are equal element-wise after consistent
/// variable renaming within each clause.
pub fn structural_eq(a: &Program, b: &Program) -> bool {
    if a.clauses.len() != b.clauses.len() {
        return false;
    }
    a.clauses
        .iter()
        .zip(&b.clauses)
        .all(|(x, y)| x.normalize_vars() == y.normalize_vars())
}
