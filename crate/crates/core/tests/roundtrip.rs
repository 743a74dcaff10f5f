//! Property tests: printing a program and reparsing it yields a
//! structurally identical program, and rational arithmetic is exact.
//!
//! The generators only build trees the parser itself can produce: negated
//! constants arrive folded, and a literal `Const / Const` arrives folded
//! unless the divisor is literally zero (which the parser keeps as a
//! division so it can fail at solve time).

use num_bigint::BigInt;
use proptest::prelude::*;

use mathlog_core::{
    parse_program, pretty_print, structural_eq, ArithExpr, ArithOp, Clause, CompareOp, Goal,
    Program, Rational, Term,
};

fn atom_name() -> impl Strategy<Value = String> {
    prop::sample::select(vec![
        "earn",
        "work",
        "price",
        "count",
        "rate",
        "shelf",
        "stock",
        "total",
        "ledger",
        "option",
        "cutoff",
        "scores",
        "use_module",
    ])
    .prop_map(str::to_string)
}

fn var_name() -> impl Strategy<Value = String> {
    prop::sample::select(vec![
        "X", "Y", "Z", "Total", "Rate", "Count", "Amount", "Minutes", "V1", "V2", "_Chosen",
    ])
    .prop_map(str::to_string)
}

fn rational() -> impl Strategy<Value = Rational> {
    (-10_000i64..10_000, 1i64..60).prop_map(|(n, d)| {
        Rational::new(BigInt::from(n), BigInt::from(d)).expect("nonzero denominator")
    })
}

fn scalar_term() -> impl Strategy<Value = Term> {
    prop_oneof![
        rational().prop_map(Term::Num),
        atom_name().prop_map(Term::Atom),
        var_name().prop_map(Term::Var),
    ]
}

fn flat_term() -> impl Strategy<Value = Term> {
    prop_oneof![
        4 => scalar_term(),
        1 => prop::collection::vec(scalar_term(), 0..4).prop_map(Term::List),
    ]
}

fn compound_term() -> impl Strategy<Value = Term> {
    (atom_name(), prop::collection::vec(flat_term(), 1..4))
        .prop_map(|(name, args)| Term::Compound(name, args))
}

/// A term that can head a clause or stand as a call goal.
fn callable_term() -> impl Strategy<Value = Term> {
    prop_oneof![
        5 => compound_term(),
        1 => atom_name().prop_map(Term::Atom),
    ]
}

/// Mirrors the parser's constant folding so generated trees stay in the
/// parser's normal form.
fn fold(op: ArithOp, lhs: ArithExpr, rhs: ArithExpr) -> ArithExpr {
    if op == ArithOp::Div {
        if let (ArithExpr::Const(l), ArithExpr::Const(r)) = (&lhs, &rhs) {
            if let Some(q) = l.checked_div(r) {
                return ArithExpr::Const(q);
            }
        }
    }
    ArithExpr::bin(op, lhs, rhs)
}

fn arith_expr() -> impl Strategy<Value = ArithExpr> {
    let leaf = prop_oneof![
        3 => rational().prop_map(ArithExpr::Const),
        3 => var_name().prop_map(ArithExpr::VarRef),
        1 => compound_term().prop_map(|t| ArithExpr::Opaque(Box::new(t))),
        1 => prop::collection::vec(scalar_term(), 0..3)
            .prop_map(|items| ArithExpr::Opaque(Box::new(Term::List(items)))),
    ];
    leaf.prop_recursive(3, 24, 2, |inner| {
        prop_oneof![
            (
                prop::sample::select(vec![ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div]),
                inner.clone(),
                inner.clone(),
            )
                .prop_map(|(op, l, r)| fold(op, l, r)),
            inner.prop_map(|e| match e {
                ArithExpr::Const(c) => ArithExpr::Const(-&c),
                other => ArithExpr::Neg(Box::new(other)),
            }),
        ]
    })
}

fn goal() -> impl Strategy<Value = Goal> {
    prop_oneof![
        3 => callable_term().prop_map(Goal::Call),
        1 => var_name().prop_map(|v| Goal::Call(Term::Var(v))),
        4 => (arith_expr(), arith_expr()).prop_map(|(lhs, rhs)| Goal::Constraint { lhs, rhs }),
        2 => (var_name(), arith_expr()).prop_map(|(v, expr)| Goal::Is {
            target: Term::Var(v),
            expr,
        }),
        2 => (
            prop::sample::select(vec![
                CompareOp::Eq,
                CompareOp::Neq,
                CompareOp::Lt,
                CompareOp::Gt,
                CompareOp::Le,
                CompareOp::Ge,
            ]),
            arith_expr(),
            arith_expr(),
        )
            .prop_map(|(op, lhs, rhs)| Goal::Compare { op, lhs, rhs }),
    ]
}

fn clause() -> impl Strategy<Value = Clause> {
    prop_oneof![
        1 => compound_term().prop_map(Clause::Directive),
        4 => callable_term().prop_map(Clause::Fact),
        3 => (callable_term(), prop::collection::vec(goal(), 1..5))
            .prop_map(|(head, body)| Clause::Rule { head, body }),
    ]
}

fn program() -> impl Strategy<Value = Program> {
    prop::collection::vec(clause(), 1..7).prop_map(Program::new)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(192))]

    #[test]
    fn printed_programs_reparse_identically(p in program()) {
        let printed = pretty_print(&p);
        let reparsed = parse_program(&printed)
            .unwrap_or_else(|e| panic!("reparse failed: {e}\n{printed}"));
        prop_assert!(
            structural_eq(&p, &reparsed),
            "round trip changed the program:\n{printed}\nvs\n{}",
            pretty_print(&reparsed)
        );
    }

    #[test]
    fn printing_is_stable_across_one_cycle(p in program()) {
        let once = pretty_print(&p);
        let again = pretty_print(&parse_program(&once).unwrap());
        prop_assert_eq!(once, again);
    }

    #[test]
    fn rational_add_sub_cancel(a in rational(), b in rational()) {
        let sum = &a + &b;
        prop_assert_eq!(&sum - &b, a);
    }

    #[test]
    fn rational_mul_div_cancel(a in rational(), b in rational()) {
        prop_assume!(!b.is_zero());
        let product = &a * &b;
        prop_assert_eq!(&product / &b, a);
    }

    #[test]
    fn rational_display_reparses(a in rational()) {
        let text = a.to_string();
        let parsed = if let Some((n, d)) = text.split_once('/') {
            Rational::new(n.parse::<BigInt>().unwrap(), d.parse::<BigInt>().unwrap()).unwrap()
        } else {
            Rational::from_bigint(text.parse::<BigInt>().unwrap())
        };
        prop_assert_eq!(parsed, a);
    }
}
