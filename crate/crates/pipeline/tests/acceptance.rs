//! Acceptance gate: nine end-to-end checks covering the interpreter, the
//! permutation machinery, the build loop, and the evaluation harness.
//! Each test prints one `[PASS]`/`[FAIL]` line (visible with
//! `cargo test -p mathlog-pipeline --test acceptance -- --nocapture`).

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use mathlog_core::permute::{permutation_set, DEFAULT_CLAUSE_LIMIT, DEFAULT_GOAL_LIMIT};
use mathlog_core::{
    parse_program, pretty_print, run_query_text, solve, structural_eq, ArithExpr, ArithOp, Clause,
    CompareOp, Goal, Program, Rational, SolveLimits, SolveOutcome, Term,
};
use mathlog_pipeline::builder::{export_dataset, load_checkpoint, BuilderState, SeedExample};
use mathlog_pipeline::dataset::write_jsonl;
use mathlog_pipeline::eval::format_accuracy;
use mathlog_pipeline::templates::{INSTRUCTION_PROLOG, INSTRUCTION_PROLOG_PERMUTED};
use mathlog_pipeline::{
    assemble_prompt, augment_with_proper, bootstrap, classify_report, evaluate_pairs,
    filter_integer, run_build, select_fixed_set, BuilderConfig, DatasetItem, EvalPair,
    MockBehavior, MockClient, Origin, PromptMode, QAItem, Truth,
};

/// Prints the verdict line even when the test panics mid-way.
struct Gate {
    name: &'static str,
    passed: bool,
}

impl Gate {
    fn new(name: &'static str) -> Gate {
        Gate {
            name,
            passed: false,
        }
    }

    fn pass(mut self) {
        self.passed = true;
    }
}

impl Drop for Gate {
    fn drop(&mut self) {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        println!("[{verdict}] {}", self.name);
    }
}

enum Expectation {
    Answer(String),
    Error(String),
}

struct Fixture {
    name: String,
    source: String,
    expect: Expectation,
}

fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn load_fixtures() -> Vec<Fixture> {
    let mut fixtures = Vec::new();
    let mut entries: Vec<PathBuf> = fs::read_dir(fixtures_dir())
        .expect("fixtures directory")
        .map(|e| e.expect("directory entry").path())
        .filter(|p| p.extension().is_some_and(|ext| ext == "pl"))
        .collect();
    entries.sort();
    for path in entries {
        let source = fs::read_to_string(&path).expect("fixture readable");
        let header = source.lines().next().expect("non-empty fixture");
        let rest = header
            .strip_prefix("% expect: ")
            .unwrap_or_else(|| panic!("{}: missing expectation header", path.display()));
        let expect = match rest.split_once(' ') {
            Some(("answer", value)) => Expectation::Answer(value.trim().to_string()),
            Some(("error", kind)) => Expectation::Error(kind.trim().to_string()),
            _ => panic!("{}: bad expectation header", path.display()),
        };
        fixtures.push(Fixture {
            name: path.file_name().unwrap().to_string_lossy().into_owned(),
            source,
            expect,
        });
    }
    fixtures
}

#[test]
fn criterion_1_round_trip() {
    let gate =
        Gate::new("criterion 1: parse-print-parse idempotent on the bundled corpus (under 5s)");
    let started = Instant::now();
    let fixtures = load_fixtures();
    assert!(
        fixtures.len() >= 50,
        "corpus too small: {} programs",
        fixtures.len()
    );
    for required in [
        "earn_per_minute.pl",
        "rowing_water_intake.pl",
        "baked_goods_length.pl",
        "race_team_girls.pl",
        "test_score_average.pl",
    ] {
        assert!(
            fixtures.iter().any(|f| f.name == required),
            "corpus lacks {required}"
        );
    }
    for fixture in &fixtures {
        let once =
            parse_program(&fixture.source).unwrap_or_else(|e| panic!("{}: {e}", fixture.name));
        let printed = pretty_print(&once);
        let twice =
            parse_program(&printed).unwrap_or_else(|e| panic!("{}: reprint: {e}", fixture.name));
        assert!(
            structural_eq(&once, &twice),
            "{}: round trip changed the program",
            fixture.name
        );
        assert_eq!(
            printed,
            pretty_print(&twice),
            "{}: printing is not a fixpoint",
            fixture.name
        );
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    gate.pass();
}

#[test]
fn criterion_2_permutation_invariance() {
    let gate = Gate::new(
        "criterion 2: every permutation-set member solves to the original outcome (under 60s)",
    );
    let started = Instant::now();
    let fixtures = load_fixtures();
    assert!(
        fixtures.len() >= 100,
        "need 100 programs, have {}",
        fixtures.len()
    );
    let limits = SolveLimits::default();
    let mut members_checked = 0usize;
    for fixture in &fixtures {
        let program = parse_program(&fixture.source).expect("fixture parses");
        let base = solve(&program, &limits);
        match (&fixture.expect, &base) {
            (Expectation::Answer(want), SolveOutcome::Answer(got)) => {
                assert_eq!(&got.to_string(), want, "{}", fixture.name);
            }
            (Expectation::Error(want), SolveOutcome::Error { kind, .. }) => {
                assert_eq!(kind.name(), want, "{}", fixture.name);
            }
            _ => panic!(
                "{}: outcome {base} contradicts the frozen header",
                fixture.name
            ),
        }
        let set = permutation_set(&program, DEFAULT_GOAL_LIMIT, DEFAULT_CLAUSE_LIMIT)
            .unwrap_or_else(|e| panic!("{}: {e}", fixture.name));
        for member in &set.members {
            let outcome = solve(member, &limits);
            assert!(
                base.same_result(&outcome),
                "{}: permutation changed {base} into {outcome}:\n{}",
                fixture.name,
                pretty_print(member)
            );
            members_checked += 1;
        }
    }
    assert!(
        members_checked > fixtures.len(),
        "permutation sets were trivial"
    );
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    gate.pass();
}

/// All orderings of 0..n, by recursive insertion; independent of the
/// library's permutation iterator.
fn all_orders(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for shorter in all_orders(n - 1) {
        for position in 0..=shorter.len() {
            let mut order = shorter.clone();
            order.insert(position, n - 1);
            out.push(order);
        }
    }
    out
}

fn factorial(n: usize) -> usize {
    (1..=n).product::<usize>().max(1)
}

fn int(value: usize) -> Rational {
    Rational::parse_decimal(&value.to_string()).expect("integer literal")
}

/// `clauses - 1` distinct facts plus a solve rule with `goals` distinct
/// constraint goals.
fn synthetic_program(goals: usize, clauses: usize) -> Program {
    assert!(clauses >= 1 && goals >= 1);
    let mut list: Vec<Clause> = (0..clauses - 1)
        .map(|i| Clause::Fact(Term::Compound(format!("f{i}"), vec![Term::Num(int(i))])))
        .collect();
    let body: Vec<Goal> = (0..goals)
        .map(|g| Goal::Constraint {
            lhs: ArithExpr::VarRef(format!("A{g}")),
            rhs: ArithExpr::Const(int(g)),
        })
        .collect();
    list.push(Clause::Rule {
        head: Term::Compound("solve".to_string(), vec![Term::Var("X".to_string())]),
        body,
    });
    Program::new(list)
}

/// Every goal ordering crossed with every clause ordering, as printed
/// text. The synthetic programs have no directives, so nothing is pinned.
fn exhaustive_universe(program: &Program) -> BTreeSet<String> {
    let (rule_index, _, body) = program.solve_rule().expect("solve rule");
    let body = body.to_vec();
    let mut universe = BTreeSet::new();
    for goal_order in all_orders(body.len()) {
        let mut variant = program.clone();
        let Clause::Rule { body: slot, .. } = &mut variant.clauses[rule_index] else {
            unreachable!("solve_rule points at a rule");
        };
        *slot = goal_order.iter().map(|&i| body[i].clone()).collect();
        for clause_order in all_orders(variant.clauses.len()) {
            let clauses = clause_order
                .iter()
                .map(|&i| variant.clauses[i].clone())
                .collect();
            universe.insert(pretty_print(&Program::new(clauses)));
        }
    }
    universe
}

#[test]
fn criterion_3_cardinality_law() {
    let gate = Gate::new(
        "criterion 3: |permutation_set| = min(10, g!) * min(10, c!), checked exhaustively",
    );
    for goals in 1..=4 {
        for clauses in 1..=4 {
            let program = synthetic_program(goals, clauses);
            let set = permutation_set(&program, DEFAULT_GOAL_LIMIT, DEFAULT_CLAUSE_LIMIT)
                .expect("permutation set");
            let expected = factorial(goals).min(10) * factorial(clauses).min(10);
            assert_eq!(set.members.len(), expected, "g={goals} c={clauses}");

            let printed: BTreeSet<String> = set.members.iter().map(pretty_print).collect();
            assert_eq!(
                printed.len(),
                set.members.len(),
                "g={goals} c={clauses}: members repeat"
            );
            let universe = exhaustive_universe(&program);
            assert!(
                printed.is_subset(&universe),
                "g={goals} c={clauses}: member outside the exhaustive enumeration"
            );
            assert!(
                printed.contains(&pretty_print(&program)),
                "identity missing"
            );
            if factorial(goals) <= 10 && factorial(clauses) <= 10 {
                assert_eq!(
                    printed, universe,
                    "g={goals} c={clauses}: uncapped set must equal the enumeration"
                );
            }
        }
    }
    let big = synthetic_program(4, 5);
    let set = permutation_set(&big, DEFAULT_GOAL_LIMIT, DEFAULT_CLAUSE_LIMIT).expect("set");
    assert_eq!(set.members.len(), 100, "g=4 c=5 must cap at 100");
    gate.pass();
}

/// Ground value in the eager oracle: a rational or a symbol.
#[derive(Clone, Debug, PartialEq)]
enum Value {
    Num(Rational),
    Sym(String),
}

type Env = HashMap<String, Value>;
type FactMap = HashMap<(String, usize), Vec<Vec<Term>>>;

fn eval_expr(expr: &ArithExpr, env: &Env) -> Option<Rational> {
    match expr {
        ArithExpr::Const(c) => Some(c.clone()),
        ArithExpr::VarRef(name) => match env.get(name)? {
            Value::Num(n) => Some(n.clone()),
            Value::Sym(_) => None,
        },
        ArithExpr::Neg(inner) => eval_expr(inner, env).map(|v| -&v),
        ArithExpr::BinOp { op, lhs, rhs } => {
            let l = eval_expr(lhs, env)?;
            let r = eval_expr(rhs, env)?;
            match op {
                ArithOp::Add => Some(&l + &r),
                ArithOp::Sub => Some(&l - &r),
                ArithOp::Mul => Some(&l * &r),
                ArithOp::Div => l.checked_div(&r),
            }
        }
        ArithExpr::Opaque(_) => None,
    }
}

fn bind(env: &Env, var: &str, value: Value, out: &mut Vec<Env>, rest: &[Goal], facts: &FactMap) {
    match env.get(var) {
        Some(existing) => {
            if *existing == value {
                eager_solutions(rest, facts, env.clone(), out);
            }
        }
        None => {
            let mut child = env.clone();
            child.insert(var.to_string(), value);
            eager_solutions(rest, facts, child, out);
        }
    }
}

/// Left-to-right eager execution: a constraint either checks two ground
/// sides or assigns a ground side to a bare variable, `is` needs a ground
/// expression, comparisons need both sides ground. No delaying, no
/// isolation; an ordering that needs either simply fails.
fn eager_solutions(goals: &[Goal], facts: &FactMap, env: Env, out: &mut Vec<Env>) {
    let Some(goal) = goals.first() else {
        out.push(env);
        return;
    };
    let rest = &goals[1..];
    match goal {
        Goal::Call(term) => {
            let Some((name, arity)) = term.functor_arity() else {
                return;
            };
            let args: Vec<Term> = match term {
                Term::Compound(_, args) => args.clone(),
                Term::Atom(_) => Vec::new(),
                _ => return,
            };
            let Some(rows) = facts.get(&(name.to_string(), arity)) else {
                return;
            };
            'rows: for row in rows {
                let mut child = env.clone();
                for (arg, fact_arg) in args.iter().zip(row) {
                    let fact_value = match fact_arg {
                        Term::Atom(a) => Value::Sym(a.clone()),
                        Term::Num(n) => Value::Num(n.clone()),
                        _ => continue 'rows,
                    };
                    match arg {
                        Term::Var(v) => match child.get(v) {
                            Some(existing) => {
                                if *existing != fact_value {
                                    continue 'rows;
                                }
                            }
                            None => {
                                child.insert(v.clone(), fact_value);
                            }
                        },
                        Term::Atom(a) => {
                            if fact_value != Value::Sym(a.clone()) {
                                continue 'rows;
                            }
                        }
                        Term::Num(n) => {
                            if fact_value != Value::Num(n.clone()) {
                                continue 'rows;
                            }
                        }
                        _ => continue 'rows,
                    }
                }
                eager_solutions(rest, facts, child, out);
            }
        }
        Goal::Constraint { lhs, rhs } => match (eval_expr(lhs, &env), eval_expr(rhs, &env)) {
            (Some(l), Some(r)) => {
                if l == r {
                    eager_solutions(rest, facts, env, out);
                }
            }
            (None, Some(r)) => {
                if let ArithExpr::VarRef(v) = lhs {
                    bind(&env, v, Value::Num(r), out, rest, facts);
                }
            }
            (Some(l), None) => {
                if let ArithExpr::VarRef(v) = rhs {
                    bind(&env, v, Value::Num(l), out, rest, facts);
                }
            }
            (None, None) => {}
        },
        Goal::Is { target, expr } => {
            let Some(value) = eval_expr(expr, &env) else {
                return;
            };
            match target {
                Term::Var(v) => bind(&env, v, Value::Num(value), out, rest, facts),
                Term::Num(n) if *n == value => {
                    eager_solutions(rest, facts, env, out);
                }
                _ => {}
            }
        }
        Goal::Compare { op, lhs, rhs } => {
            let (Some(l), Some(r)) = (eval_expr(lhs, &env), eval_expr(rhs, &env)) else {
                return;
            };
            let holds = match op {
                CompareOp::Eq => l == r,
                CompareOp::Neq => l != r,
                CompareOp::Lt => l < r,
                CompareOp::Gt => l > r,
                CompareOp::Le => l <= r,
                CompareOp::Ge => l >= r,
            };
            if holds {
                eager_solutions(rest, facts, env, out);
            }
        }
    }
}

/// Brute-force oracle: run the eager interpreter under every goal
/// ordering; succeed when at least one ordering grounds the query
/// variable and all successful derivations agree on the value. Abstains
/// (None) on helper rules, non-flat facts, long bodies, ambiguity, or
/// universal failure.
fn oracle_answer(program: &Program) -> Option<Rational> {
    let (rule_index, head, body) = program.solve_rule()?;
    if body.len() > 6 {
        return None;
    }
    let mut facts: FactMap = HashMap::new();
    for (i, clause) in program.clauses.iter().enumerate() {
        match clause {
            Clause::Directive(_) => {}
            Clause::Rule { .. } if i == rule_index => {}
            Clause::Rule { .. } => return None,
            Clause::Fact(fact_head) => {
                let (name, arity) = fact_head.functor_arity()?;
                if mathlog_core::solver::RESERVED_HEADS.contains(&(name, arity)) {
                    return None;
                }
                let args: Vec<Term> = match fact_head {
                    Term::Compound(_, args) => args.clone(),
                    Term::Atom(_) => Vec::new(),
                    _ => return None,
                };
                if !args
                    .iter()
                    .all(|a| matches!(a, Term::Atom(_) | Term::Num(_)))
                {
                    return None;
                }
                facts
                    .entry((name.to_string(), arity))
                    .or_default()
                    .push(args);
            }
        }
    }
    let Term::Compound(_, query_args) = head else {
        return None;
    };
    let Term::Var(query_var) = &query_args[0] else {
        return None;
    };
    let body = body.to_vec();
    let mut agreed: Option<Rational> = None;
    for order in all_orders(body.len()) {
        let goals: Vec<Goal> = order.iter().map(|&i| body[i].clone()).collect();
        let mut sols = Vec::new();
        eager_solutions(&goals, &facts, Env::new(), &mut sols);
        for sol in sols {
            if let Some(Value::Num(value)) = sol.get(query_var) {
                match &agreed {
                    None => agreed = Some(value.clone()),
                    Some(previous) if previous == value => {}
                    Some(_) => return None,
                }
            }
        }
    }
    agreed
}

#[test]
fn criterion_4_solver_vs_all_orderings_oracle() {
    let gate =
        Gate::new("criterion 4: solve agrees with the eager all-orderings oracle on 30+ programs");
    let fixtures = load_fixtures();
    let limits = SolveLimits::default();
    let mut agreed = 0usize;
    for fixture in &fixtures {
        let program = parse_program(&fixture.source).expect("fixture parses");
        let Some(expected) = oracle_answer(&program) else {
            continue;
        };
        match solve(&program, &limits) {
            SolveOutcome::Answer(got) => {
                assert_eq!(
                    got, expected,
                    "{}: solver disagrees with oracle",
                    fixture.name
                );
                agreed += 1;
            }
            other => panic!(
                "{}: oracle found {expected} but the solver said {other}",
                fixture.name
            ),
        }
    }
    assert!(agreed >= 30, "only {agreed} oracle-checkable programs");
    gate.pass();
}

#[test]
fn criterion_5_failure_kind_reproduction() {
    let gate = Gate::new(
        "criterion 5: the four bundled failure programs keep their error kinds and never match",
    );
    let cases = [
        ("rowing_water_intake.pl", "underdetermined"),
        ("baked_goods_length.pl", "permission_error"),
        ("race_team_girls.pl", "instantiation_error"),
        ("test_score_average.pl", "evaluation_error"),
    ];
    let limits = SolveLimits::default();
    let mut pairs = Vec::new();
    for (id, (name, kind)) in cases.iter().enumerate() {
        let source = fs::read_to_string(fixtures_dir().join(name)).expect("fixture readable");
        match run_query_text(&source, &limits) {
            SolveOutcome::Error { kind: got, .. } => {
                assert_eq!(got.name(), *kind, "{name}");
            }
            SolveOutcome::Answer(value) => panic!("{name}: unexpectedly answered {value}"),
        }
        pairs.push(EvalPair {
            id: id as u64,
            predicted_code: source,
            truth: Truth::Value(int(10)),
        });
    }
    let results = evaluate_pairs(&pairs, &limits, 2);
    let report = classify_report(&results, 0);
    assert_eq!(report.evaluated, 4);
    assert_eq!(report.matched, 0, "a failure program must never match");
    assert_eq!(report.buckets.none, 0);
    assert_eq!(report.buckets.interpreter_error, 4);
    assert_eq!(report.incorrect_total, 4);
    for (_, kind) in &cases {
        assert_eq!(report.interpreter_kinds.get(*kind), Some(&1), "{kind}");
    }
    gate.pass();
}

/// Pair whose prediction immediately answers `predicted` against a fixed
/// numeric truth.
fn numeric_pair(id: u64, truth: &str, predicted: &str) -> EvalPair {
    EvalPair {
        id,
        predicted_code: format!("solve(X) :-\n    {{X = {predicted}}}."),
        truth: Truth::Value(Rational::parse_decimal(truth).expect("truth literal")),
    }
}

#[test]
fn criterion_6_accuracy_formula_and_integer_filter() {
    let gate = Gate::new(
        "criterion 6: accuracy formatting on batches of 4, 10, 100 and exact integer filtering",
    );
    let limits = SolveLimits::default();

    // 4 samples, 3 correct: 75.0.
    let batch: Vec<EvalPair> = (0..4)
        .map(|id| {
            let truth = (id * 10).to_string();
            let predicted = if id == 3 {
                "1".to_string()
            } else {
                truth.clone()
            };
            numeric_pair(id, &truth, &predicted)
        })
        .collect();
    let (kept, excluded) = filter_integer(batch, &limits);
    assert!(excluded.is_empty());
    let results = evaluate_pairs(&kept, &limits, 2);
    let report = classify_report(&results, excluded.len());
    assert_eq!(report.evaluated, 4);
    assert_eq!(report.accuracy_display.as_deref(), Some("75.0"));

    // 10 samples, one non-integer truth filtered out, 7 of the other 9
    // correct: 700/9 rounds to 77.8.
    let mut batch: Vec<EvalPair> = (0..9)
        .map(|id| {
            let truth = (id + 1).to_string();
            let predicted = if id >= 7 {
                "0".to_string()
            } else {
                truth.clone()
            };
            numeric_pair(id, &truth, &predicted)
        })
        .collect();
    batch.push(numeric_pair(9, "3.5", "3.5"));
    let (kept, excluded) = filter_integer(batch, &limits);
    assert_eq!(
        excluded.len(),
        1,
        "exactly the non-integer truth is removed"
    );
    assert_eq!(excluded[0].id, 9);
    assert_eq!(kept.len(), 9);
    let results = evaluate_pairs(&kept, &limits, 2);
    let report = classify_report(&results, excluded.len());
    assert_eq!(report.evaluated, 9);
    assert_eq!(report.matched, 7);
    assert_eq!(report.accuracy_display.as_deref(), Some("77.8"));
    assert_eq!(report.excluded_non_integer, 1);

    // 100 samples, one excluded, 66 of 99 correct: 6600/99 rounds to 66.7.
    let mut batch: Vec<EvalPair> = (0..99)
        .map(|id| {
            let truth = (id + 1).to_string();
            let predicted = if id < 66 {
                truth.clone()
            } else {
                "0".to_string()
            };
            numeric_pair(id, &truth, &predicted)
        })
        .collect();
    batch.push(numeric_pair(99, "0.5", "0.5"));
    assert_eq!(batch.len(), 100);
    let (kept, excluded) = filter_integer(batch, &limits);
    assert_eq!(excluded.len(), 1);
    assert_eq!(excluded[0].id, 99);
    let results = evaluate_pairs(&kept, &limits, 4);
    let report = classify_report(&results, excluded.len());
    assert_eq!(report.evaluated, 99);
    assert_eq!(report.matched, 66);
    assert_eq!(report.accuracy_display.as_deref(), Some("66.7"));
    assert_eq!(format_accuracy(report.accuracy_percent.unwrap()), "66.7");
    gate.pass();
}

fn question(id: u64) -> String {
    format!("Question {id}: how many marbles remain?")
}

fn cot(id: u64) -> String {
    format!("Count them up.\n#### {}", id * 3)
}

fn good_code(id: u64) -> String {
    format!("solve(X) :-\n    {{X = {}}}.", id * 3)
}

/// A program that parses but always fails verification.
const BAD_CODE: &str = "solve(X) :-\n    {X = 1 / 0}.";

fn loop_corpus() -> Vec<QAItem> {
    (1..=25)
        .map(|id| QAItem {
            id,
            question: question(id),
            cot_answer: cot(id),
        })
        .collect()
}

fn loop_seeds() -> Vec<SeedExample> {
    (1..=10)
        .map(|id| SeedExample {
            id,
            question: question(id),
            cot_answer: cot(id),
            code: good_code(id),
        })
        .collect()
}

fn loop_config(trial_attempts: u32) -> BuilderConfig {
    BuilderConfig {
        trial_attempts,
        fixed_size: 10,
        random_size: 10,
        max_token_length: 4096,
        checkpoint_every: 1,
        rng_seed: 42,
        inflight: 3,
        ..BuilderConfig::default()
    }
}

/// Mock for the scripted loop. `context_rule` wires one extra target to
/// succeed only when the prompt contains a specific example question.
fn loop_mock(always_wrong: &[u64], context_rule: Option<(u64, String)>) -> MockClient {
    let mut mock = MockClient::new();
    let context_id = context_rule.as_ref().map(|(id, _)| *id);
    for id in 11..=25 {
        if Some(id) == context_id {
            continue;
        }
        let behavior = if always_wrong.contains(&id) {
            MockBehavior::Always(BAD_CODE.to_string())
        } else {
            MockBehavior::Always(good_code(id))
        };
        mock = mock.rule(question(id), behavior);
    }
    if let Some((id, required)) = context_rule {
        mock = mock.rule(
            question(id),
            MockBehavior::WithContext {
                required,
                code: good_code(id),
                fallback: BAD_CODE.to_string(),
            },
        );
    }
    mock
}

fn bootstrapped_state(config: &BuilderConfig) -> BuilderState {
    let mut state = bootstrap(&loop_corpus(), &loop_seeds(), config).expect("bootstrap");
    let fixed: Vec<u64> = (1..=10).collect();
    select_fixed_set(&mut state, &fixed, config).expect("fixed set");
    state
}

fn unsolved_after(rounds: u32, mock: &MockClient) -> BTreeSet<u64> {
    let config = loop_config(rounds);
    let outcome = run_build(
        &loop_corpus(),
        &config,
        mock,
        bootstrapped_state(&config),
        None,
    )
    .expect("build");
    outcome.state.unsolved
}

#[test]
fn criterion_7_scripted_loop_with_resume() {
    let gate = Gate::new(
        "criterion 7: scripted mock loop hits predicted leftovers; resume is byte-identical",
    );
    let corpus = loop_corpus();
    let stubborn = [13u64, 19, 24];
    let config = loop_config(2);

    // Round 0: bootstrap prompts contain only seed questions, so the
    // context-gated target behaves like an always-wrong one. 12 of 15
    // targets (80%) succeed.
    let plain_mock = loop_mock(&stubborn, None);
    let after_initial = unsolved_after(0, &plain_mock);
    assert_eq!(
        after_initial,
        BTreeSet::from(stubborn),
        "round 0 must leave exactly the scripted holdouts"
    );

    // Predict round 1 for target 13 from its deterministic few-shot draw:
    // pick a verified example absent from the round-1 prompt, making the
    // context rule miss, then check it appears in the round-2 prompt.
    let config0 = loop_config(0);
    let entering_round_1 = run_build(
        &corpus,
        &config0,
        &plain_mock,
        bootstrapped_state(&config0),
        None,
    )
    .expect("initial pass")
    .state;
    assert_eq!(entering_round_1.phase, 1);
    let target_13 = corpus.iter().find(|q| q.id == 13).expect("target 13");
    let prompt_r1 = assemble_prompt(
        &entering_round_1,
        &config,
        target_13,
        PromptMode::FixedPlusRandom,
    )
    .expect("round 1 prompt");
    let accepted: Vec<u64> = (11..=25).filter(|id| !stubborn.contains(id)).collect();
    let absent_r1: Vec<u64> = accepted
        .iter()
        .copied()
        .filter(|&id| !prompt_r1.contains(&question(id)))
        .collect();
    assert_eq!(
        absent_r1.len(),
        2,
        "a 10-of-12 draw leaves exactly two examples out"
    );

    let config1 = loop_config(1);
    let entering_round_2 = run_build(
        &corpus,
        &config1,
        &plain_mock,
        bootstrapped_state(&config1),
        None,
    )
    .expect("one retry round")
    .state;
    assert_eq!(entering_round_2.phase, 2);
    assert_eq!(entering_round_2.unsolved, BTreeSet::from(stubborn));
    let prompt_r2 = assemble_prompt(
        &entering_round_2,
        &config,
        target_13,
        PromptMode::FixedPlusRandom,
    )
    .expect("round 2 prompt");
    let lucky = absent_r1
        .iter()
        .copied()
        .find(|&id| prompt_r2.contains(&question(id)))
        .expect("an example left out of round 1 reappears in round 2");

    // The full scripted mock: target 13 succeeds only when the lucky
    // example is drawn, which happens in round 2 and not before.
    let scripted = loop_mock(&[19, 24], Some((13, question(lucky))));
    assert_eq!(unsolved_after(0, &scripted), BTreeSet::from(stubborn));
    assert_eq!(unsolved_after(1, &scripted), BTreeSet::from(stubborn));
    assert_eq!(unsolved_after(2, &scripted), BTreeSet::from([19, 24]));

    // Uninterrupted reference run.
    let reference = run_build(
        &corpus,
        &config,
        &scripted,
        bootstrapped_state(&config),
        None,
    )
    .expect("reference run");
    assert!(!reference.interrupted);
    let accepted_13 = reference
        .state
        .examples
        .iter()
        .find(|e| e.id == 13)
        .expect("target 13 verified in round 2");
    assert_eq!(accepted_13.origin, Origin::LlmVerified);
    assert_eq!(accepted_13.code, good_code(13));

    let dir = tempfile::tempdir().expect("temp dir");
    let reference_path = dir.path().join("reference.jsonl");
    write_jsonl(
        &reference_path,
        &export_dataset(&reference.state, &config.instruction),
    )
    .expect("write reference");
    let reference_bytes = fs::read(&reference_path).expect("read reference");

    // Interrupt at two different budgets (mid round 0 and mid round 1),
    // then resume from the checkpoint file; the final dataset must be
    // byte-identical to the uninterrupted run.
    for (index, budget) in [5usize, 17].into_iter().enumerate() {
        let checkpoint = dir.path().join(format!("ckpt_{index}.json"));
        let mut capped = config.clone();
        capped.request_budget = Some(budget);
        let halted = run_build(
            &corpus,
            &capped,
            &scripted,
            bootstrapped_state(&capped),
            Some(&checkpoint),
        )
        .expect("capped run");
        assert!(halted.interrupted, "budget {budget} must interrupt");

        let restored = load_checkpoint(&checkpoint).expect("checkpoint loads");
        let resumed = run_build(&corpus, &config, &scripted, restored, Some(&checkpoint))
            .expect("resumed run");
        assert!(!resumed.interrupted);
        let resumed_path = dir.path().join(format!("resumed_{index}.jsonl"));
        write_jsonl(
            &resumed_path,
            &export_dataset(&resumed.state, &config.instruction),
        )
        .expect("write resumed");
        assert_eq!(
            fs::read(&resumed_path).expect("read resumed"),
            reference_bytes,
            "budget {budget}: resumed dataset diverged"
        );
    }
    gate.pass();
}

#[test]
fn criterion_8_twelve_digit_exactness() {
    let gate = Gate::new("criterion 8: 12-digit operands evaluate to the frozen exact values");
    let limits = SolveLimits::default();
    let product = "\
pay(worker, 123456789012).
hours(worker, 987654321098).

solve(X) :-
    pay(worker, P),
    hours(worker, H),
    {X = P * H}.
";
    // Frozen from an independent big-integer computation.
    let cases = [
        (product.to_string(), "121932631136585886175176"),
        (
            "solve(X) :-\n    {X = 123456789012 + 987654321098}.".to_string(),
            "1111111110110",
        ),
        (
            "solve(X) :-\n    Y is 123456789012345 / 5,\n    {X = Y}.".to_string(),
            "24691357802469",
        ),
    ];
    for (source, expected) in &cases {
        match run_query_text(source, &limits) {
            SolveOutcome::Answer(value) => assert_eq!(&value.to_string(), expected),
            other => panic!("big-number program failed: {other}"),
        }
    }
    gate.pass();
}

#[test]
fn criterion_9_augmentation_ratios() {
    let gate = Gate::new(
        "criterion 9: ratios 1 and 2 over 100 items give 200 and 300 with exact templates",
    );
    let items: Vec<DatasetItem> = (0..100)
        .map(|i| DatasetItem {
            instruction: INSTRUCTION_PROLOG.to_string(),
            input: format!("Problem {i}: how much is earned?"),
            output: format!(
                "earn(w, {}).\nwork(w, 50).\n\nsolve(X) :-\n    earn(w, H),\n    work(w, M),\n    {{X = H / 60 * M}}.",
                i + 2
            ),
            origin: Origin::Manual,
        })
        .collect();
    for item in &items {
        let program = parse_program(&item.output).expect("item parses");
        let set = permutation_set(&program, DEFAULT_GOAL_LIMIT, DEFAULT_CLAUSE_LIMIT)
            .expect("permutation set");
        assert!(
            set.members.len() >= 3,
            "item needs 2+ non-identity permutations"
        );
    }
    for (n, expected_total) in [(1usize, 200usize), (2, 300)] {
        let (augmented, warnings) = augment_with_proper(&items, n, 99);
        assert!(warnings.is_empty(), "warnings: {warnings:?}");
        assert_eq!(augmented.len(), expected_total, "ratio {n}");
        for (index, item) in augmented.iter().enumerate() {
            let original = index % (n + 1) == 0;
            if original {
                assert_eq!(item.instruction, INSTRUCTION_PROLOG);
                assert!(!item.instruction.contains("in non-sequential order"));
                assert_eq!(item.origin, Origin::Manual);
            } else {
                assert_eq!(item.instruction, INSTRUCTION_PROLOG_PERMUTED);
                assert!(item.instruction.contains("in non-sequential order"));
                let parent = index / (n + 1);
                assert_eq!(item.input, items[parent].input);
                assert_ne!(
                    item.output, items[parent].output,
                    "permutation must reorder"
                );
                assert!(matches!(item.origin, Origin::Permuted { .. }));
            }
        }
    }
    gate.pass();
}
