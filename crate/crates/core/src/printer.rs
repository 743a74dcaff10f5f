//! Canonical source rendering for programs.
//!
//! The output is deterministic and re-parses to a structurally equal
//! program: fractions print as `N/D` (which the parser folds back to one
//! constant), and operands are parenthesized exactly where precedence or
//! literal folding would otherwise change the parse.

use crate::ast::{ArithExpr, ArithOp, Clause, Goal, Program, Term};
use crate::rational::Rational;

/// Renders a whole program. Clause groups are separated by a blank line
/// whenever the neighboring clauses are not both facts or both directives;
/// the result ends with a newline unless the program is empty.
pub fn pretty_print(program: &Program) -> String {
    let mut out = String::new();
    let mut prev: Option<&Clause> = None;
    for clause in &program.clauses {
        if let Some(prev) = prev {
            let contiguous = matches!(
                (prev, clause),
                (Clause::Fact(_), Clause::Fact(_)) | (Clause::Directive(_), Clause::Directive(_))
            );
            if !contiguous {
                out.push('\n');
            }
        }
        out.push_str(&print_clause(clause));
        prev = Some(clause);
    }
    out
}

pub fn print_clause(clause: &Clause) -> String {
    match clause {
        Clause::Directive(term) => format!(":- {}.\n", print_term(term)),
        Clause::Fact(head) => format!("{}.\n", print_term(head)),
        Clause::Rule { head, body } => {
            let goals: Vec<String> = body
                .iter()
                .map(|g| format!("    {}", print_goal(g)))
                .collect();
            format!("{} :-\n{}.\n", print_term(head), goals.join(",\n"))
        }
    }
}

pub fn print_term(term: &Term) -> String {
    match term {
        Term::Atom(name) => name.clone(),
        Term::Var(name) => name.clone(),
        Term::Num(value) => value.to_string(),
        Term::Compound(functor, args) => {
            let rendered: Vec<String> = args.iter().map(print_term).collect();
            format!("{}({})", functor, rendered.join(", "))
        }
        Term::List(items) => {
            let rendered: Vec<String> = items.iter().map(print_term).collect();
            format!("[{}]", rendered.join(", "))
        }
    }
}

pub fn print_goal(goal: &Goal) -> String {
    match goal {
        Goal::Call(term) => print_term(term),
        Goal::Constraint { lhs, rhs } => {
            format!("{{{} = {}}}", print_arith(lhs, 1), print_arith(rhs, 1))
        }
        Goal::Is { target, expr } => {
            format!("{} is {}", print_term(target), print_arith(expr, 1))
        }
        Goal::Compare { op, lhs, rhs } => {
            format!("{} {} {}", print_arith(lhs, 1), op, print_arith(rhs, 1))
        }
    }
}

/// Binding strength used for parenthesization. Fractions rank at the
/// multiplicative level because `N/D` re-parses as a division; negative
/// integers rank at the unary level.
fn expr_prec(expr: &ArithExpr) -> u8 {
    match expr {
        ArithExpr::BinOp { op, .. } => op_prec(*op),
        ArithExpr::Neg(_) => 3,
        ArithExpr::Const(c) => const_prec(c),
        ArithExpr::VarRef(_) | ArithExpr::Opaque(_) => 4,
    }
}

fn const_prec(c: &Rational) -> u8 {
    if !c.is_integer() {
        2
    } else if c.is_negative() {
        3
    } else {
        4
    }
}

fn op_prec(op: ArithOp) -> u8 {
    match op {
        ArithOp::Add | ArithOp::Sub => 1,
        ArithOp::Mul | ArithOp::Div => 2,
    }
}

/// Prints `expr` in a context that binds at `ctx`; wraps in parentheses
/// when the expression binds looser.
fn print_arith(expr: &ArithExpr, ctx: u8) -> String {
    let rendered = match expr {
        ArithExpr::Const(value) => value.to_string(),
        ArithExpr::VarRef(name) => name.clone(),
        // A negated constant folds at parse time, so print it folded.
        ArithExpr::Neg(inner) => match inner.as_ref() {
            ArithExpr::Const(c) => return print_arith(&ArithExpr::Const(-c), ctx),
            other => format!("-{}", print_arith(other, 3)),
        },
        ArithExpr::BinOp { op, lhs, rhs } => {
            let prec = op_prec(*op);
            format!(
                "{} {} {}",
                print_arith(lhs, prec),
                op,
                print_arith(rhs, prec + 1)
            )
        }
        ArithExpr::Opaque(term) => print_term(term),
    };
    if expr_prec(expr) < ctx {
        format!("({rendered})")
    } else {
        rendered
    }
}
