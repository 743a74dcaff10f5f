//! Exact evaluation and symbolic isolation of arithmetic expressions.

use crate::ast::{ArithExpr, ArithOp, Term};
use crate::rational::Rational;
use crate::solver::bindings::Bindings;
use crate::solver::{ErrorKind, SolveError};

/// Substitutes bindings into an expression: bound variables become
/// constants (or opaque terms when bound non-numerically), unbound ones
/// their representative variable. The result mentions exactly the unknowns
/// that remain.
pub fn subst_expr(expr: &ArithExpr, bindings: &Bindings) -> ArithExpr {
    match expr {
        ArithExpr::Const(_) => expr.clone(),
        ArithExpr::VarRef(name) => {
            let resolved = bindings.resolve(&Term::Var(name.clone()));
            term_to_expr(resolved)
        }
        ArithExpr::Neg(inner) => ArithExpr::Neg(Box::new(subst_expr(inner, bindings))),
        ArithExpr::BinOp { op, lhs, rhs } => ArithExpr::BinOp {
            op: *op,
            lhs: Box::new(subst_expr(lhs, bindings)),
            rhs: Box::new(subst_expr(rhs, bindings)),
        },
        ArithExpr::Opaque(term) => term_to_expr(bindings.resolve(term)),
    }
}

fn term_to_expr(term: Term) -> ArithExpr {
    match term {
        Term::Num(n) => ArithExpr::Const(n),
        Term::Var(name) => ArithExpr::VarRef(name),
        other => ArithExpr::Opaque(Box::new(other)),
    }
}

fn opaque_detail(term: &Term) -> String {
    match term.functor_arity() {
        Some((name, arity)) => format!("unknown function symbol {name}/{arity}"),
        None => format!(
            "non-numeric term in arithmetic: {}",
            crate::printer::print_term(term)
        ),
    }
}

/// Evaluates an expression to an exact rational under `bindings`.
pub fn eval_arith(expr: &ArithExpr, bindings: &Bindings) -> Result<Rational, SolveError> {
    match expr {
        ArithExpr::Const(value) => Ok(value.clone()),
        ArithExpr::VarRef(name) => match bindings.resolve(&Term::Var(name.clone())) {
            Term::Num(value) => Ok(value),
            Term::Var(root) => Err(SolveError::new(
                ErrorKind::InstantiationError,
                format!("variable {root} is not bound to a number"),
            )),
            other => Err(SolveError::new(
                ErrorKind::EvaluationError,
                opaque_detail(&other),
            )),
        },
        ArithExpr::Neg(inner) => Ok(-&eval_arith(inner, bindings)?),
        ArithExpr::BinOp { op, lhs, rhs } => {
            let l = eval_arith(lhs, bindings)?;
            let r = eval_arith(rhs, bindings)?;
            match op {
                ArithOp::Add => Ok(&l + &r),
                ArithOp::Sub => Ok(&l - &r),
                ArithOp::Mul => Ok(&l * &r),
                ArithOp::Div => l
                    .checked_div(&r)
                    .ok_or_else(|| SolveError::new(ErrorKind::EvaluationError, "division by zero")),
            }
        }
        ArithExpr::Opaque(term) => {
            let resolved = bindings.resolve(term);
            if let Term::Num(value) = resolved {
                Ok(value)
            } else {
                Err(SolveError::new(
                    ErrorKind::EvaluationError,
                    opaque_detail(&resolved),
                ))
            }
        }
    }
}

/// `coeff · target + offset` over exact rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinForm {
    pub coeff: Rational,
    pub offset: Rational,
}

pub enum LinOutcome {
    Linear(LinForm),
    /// The target occurs non-linearly (product of unknowns or inside a
    /// divisor), so single-unknown isolation must fall back or stay pending.
    NonLinear,
}

/// Expresses `expr` as `coeff·target + offset`, requiring every other
/// variable to be bound. The expression must already be substituted (see
/// [`subst_expr`]), so any remaining variable is the target.
pub fn linear_form(expr: &ArithExpr, target: &str) -> Result<LinOutcome, SolveError> {
    let lin = match expr {
        ArithExpr::Const(value) => LinForm {
            coeff: Rational::zero(),
            offset: value.clone(),
        },
        ArithExpr::VarRef(name) => {
            if name == target {
                LinForm {
                    coeff: Rational::one(),
                    offset: Rational::zero(),
                }
            } else {
                // A second unknown slipped in; not isolatable here.
                return Ok(LinOutcome::NonLinear);
            }
        }
        ArithExpr::Neg(inner) => match linear_form(inner, target)? {
            LinOutcome::Linear(l) => LinForm {
                coeff: -&l.coeff,
                offset: -&l.offset,
            },
            LinOutcome::NonLinear => return Ok(LinOutcome::NonLinear),
        },
        ArithExpr::BinOp { op, lhs, rhs } => {
            let l = match linear_form(lhs, target)? {
                LinOutcome::Linear(l) => l,
                LinOutcome::NonLinear => return Ok(LinOutcome::NonLinear),
            };
            let r = match linear_form(rhs, target)? {
                LinOutcome::Linear(r) => r,
                LinOutcome::NonLinear => return Ok(LinOutcome::NonLinear),
            };
            match op {
                ArithOp::Add => LinForm {
                    coeff: &l.coeff + &r.coeff,
                    offset: &l.offset + &r.offset,
                },
                ArithOp::Sub => LinForm {
                    coeff: &l.coeff - &r.coeff,
                    offset: &l.offset - &r.offset,
                },
                ArithOp::Mul => {
                    if !l.coeff.is_zero() && !r.coeff.is_zero() {
                        return Ok(LinOutcome::NonLinear);
                    }
                    if l.coeff.is_zero() {
                        LinForm {
                            coeff: &l.offset * &r.coeff,
                            offset: &l.offset * &r.offset,
                        }
                    } else {
                        LinForm {
                            coeff: &l.coeff * &r.offset,
                            offset: &l.offset * &r.offset,
                        }
                    }
                }
                ArithOp::Div => {
                    if !r.coeff.is_zero() {
                        // Target in the divisor: not linear.
                        return Ok(LinOutcome::NonLinear);
                    }
                    if r.offset.is_zero() {
                        return Err(SolveError::new(
                            ErrorKind::EvaluationError,
                            "division by zero",
                        ));
                    }
                    LinForm {
                        coeff: &l.coeff / &r.offset,
                        offset: &l.offset / &r.offset,
                    }
                }
            }
        }
        ArithExpr::Opaque(term) => {
            return Err(SolveError::new(
                ErrorKind::EvaluationError,
                opaque_detail(term),
            ));
        }
    };
    Ok(LinOutcome::Linear(lin))
}

/// Counts occurrences of `target` in a substituted expression.
pub fn count_occurrences(expr: &ArithExpr, target: &str) -> usize {
    match expr {
        ArithExpr::VarRef(name) => usize::from(name == target),
        ArithExpr::Neg(inner) => count_occurrences(inner, target),
        ArithExpr::BinOp { lhs, rhs, .. } => {
            count_occurrences(lhs, target) + count_occurrences(rhs, target)
        }
        ArithExpr::Opaque(term) => {
            let mut vars = Vec::new();
            term.collect_vars(&mut vars);
            // Distinct names only, but a single occurrence is all we need
            // to force the opaque-term error on isolation.
            usize::from(vars.iter().any(|v| v == target))
        }
        ArithExpr::Const(_) => 0,
    }
}

/// Inverts `expr = value` for a target that occurs exactly once, walking
/// down the expression and peeling constant siblings. Handles the shapes
/// linear isolation cannot, chiefly a target inside a divisor
/// (`{10 = 100 / X}`). Returns `None` when some step is not invertible.
pub fn invert_once(
    expr: &ArithExpr,
    value: Rational,
    target: &str,
) -> Result<Option<Rational>, SolveError> {
    match expr {
        ArithExpr::VarRef(name) if name == target => Ok(Some(value)),
        ArithExpr::Neg(inner) => invert_once(inner, -&value, target),
        ArithExpr::BinOp { op, lhs, rhs } => {
            let in_lhs = count_occurrences(lhs, target) > 0;
            let (side, other, target_on_lhs) = if in_lhs {
                (lhs, rhs, true)
            } else {
                (rhs, lhs, false)
            };
            let c = match eval_arith(other, &Bindings::new()) {
                Ok(c) => c,
                // The constant side is not evaluable; give up on inversion.
                Err(_) => return Ok(None),
            };
            let next = match (op, target_on_lhs) {
                (ArithOp::Add, _) => &value - &c,
                (ArithOp::Sub, true) => &value + &c,
                (ArithOp::Sub, false) => &c - &value,
                (ArithOp::Mul, _) => match value.checked_div(&c) {
                    Some(next) => next,
                    None => return Ok(None),
                },
                (ArithOp::Div, true) => &value * &c,
                (ArithOp::Div, false) => {
                    // c / side = value, so side = c / value.
                    match c.checked_div(&value) {
                        Some(next) => next,
                        None => return Ok(None),
                    }
                }
            };
            invert_once(side, next, target)
        }
        _ => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::Goal;
    use crate::parser::parse_program;

    fn rat(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    /// Pulls the constraint right-hand side out of a one-goal solve rule.
    fn rhs_of(src: &str) -> ArithExpr {
        let program = parse_program(src).unwrap();
        let (_, _, body) = program.solve_rule().unwrap();
        match &body[0] {
            Goal::Constraint { rhs, .. } => rhs.clone(),
            Goal::Is { expr, .. } => expr.clone(),
            _ => panic!("expected arithmetic goal"),
        }
    }

    #[test]
    fn weng_arithmetic_is_exact() {
        // 12 / 60 * 50 = 10, the worked example rate computation.
        let expr = rhs_of("solve(X) :- {X = 12 / 60 * 50}.");
        assert_eq!(eval_arith(&expr, &Bindings::new()).unwrap(), rat(10));
    }

    #[test]
    fn unbound_operand_is_instantiation_error() {
        let expr = rhs_of("solve(X) :- {X = Y + 1}.");
        let err = eval_arith(&expr, &Bindings::new()).unwrap_err();
        assert_eq!(err.kind, ErrorKind::InstantiationError);
    }

    #[test]
    fn division_by_zero_is_evaluation_error() {
        let expr = rhs_of("solve(X) :- {X = 1 / 0}.");
        let err = eval_arith(&expr, &Bindings::new()).unwrap_err();
        assert_eq!(err.kind, ErrorKind::EvaluationError);
        assert_eq!(err.detail, "division by zero");
    }

    #[test]
    fn unknown_function_symbol_is_evaluation_error() {
        let expr = rhs_of("solve(X) :- X is sum(Scores) / 3.");
        let err = eval_arith(&expr, &Bindings::new()).unwrap_err();
        assert_eq!(err.kind, ErrorKind::EvaluationError);
        assert!(err.detail.contains("sum/1"));
    }

    #[test]
    fn linear_isolation_through_nested_ops() {
        // 3 * T - 5, target T: coeff 3, offset -5.
        let expr = rhs_of("solve(X) :- {X = 3 * T - 5}.");
        let LinOutcome::Linear(lin) = linear_form(&expr, "T").unwrap() else {
            panic!("expected linear");
        };
        assert_eq!(lin.coeff, rat(3));
        assert_eq!(lin.offset, rat(-5));
    }

    #[test]
    fn aliased_occurrences_accumulate() {
        // T + T = 2T.
        let expr = rhs_of("solve(X) :- {X = T + T}.");
        let LinOutcome::Linear(lin) = linear_form(&expr, "T").unwrap() else {
            panic!("expected linear");
        };
        assert_eq!(lin.coeff, rat(2));
    }

    #[test]
    fn target_in_divisor_is_nonlinear_then_invertible() {
        let expr = rhs_of("solve(X) :- {X = 100 / T}.");
        assert!(matches!(
            linear_form(&expr, "T").unwrap(),
            LinOutcome::NonLinear
        ));
        let solved = invert_once(&expr, rat(10), "T").unwrap().unwrap();
        assert_eq!(solved, rat(10));
    }

    #[test]
    fn inversion_peels_nested_structure() {
        // (T - 2) * 5 = 30  =>  T = 8.
        let expr = rhs_of("solve(X) :- {X = (T - 2) * 5}.");
        let solved = invert_once(&expr, rat(30), "T").unwrap().unwrap();
        assert_eq!(solved, rat(8));
    }

    #[test]
    fn product_of_unknowns_is_nonlinear_and_uninvertible() {
        let expr = rhs_of("solve(X) :- {X = T * T}.");
        assert!(matches!(
            linear_form(&expr, "T").unwrap(),
            LinOutcome::NonLinear
        ));
        assert_eq!(count_occurrences(&expr, "T"), 2);
    }
}
