//! Recursive-descent parser from token stream to [`Program`].
//!
//! The grammar is a closed dialect: directives, facts, rules, `{L = R}`
//! constraints, `is/2`, arithmetic comparisons, lists, atoms, variables,
//! and numbers. Anything else is a [`ParseError`] with a precise position,
//! which is what makes malformed machine-generated programs detectable.

use std::collections::HashSet;

use crate::ast::{ArithExpr, ArithOp, Clause, CompareOp, Goal, Program, Term};
use crate::error::ParseError;
use crate::lexer::{tokenize, Token, TokenKind};

/// Parses a full source text into a [`Program`].
pub fn parse_program(source: &str) -> Result<Program, ParseError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser::new(tokens, end_position(source));
    let mut clauses = Vec::new();
    while !parser.at_end() {
        clauses.push(parser.clause()?);
    }
    Ok(Program::new(clauses))
}

/// 1-based position one past the end of `source`.
fn end_position(source: &str) -> (usize, usize) {
    let line = 1 + source.matches('\n').count();
    let column = 1 + source.rsplit('\n').next().unwrap_or("").chars().count();
    (line, column)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn new(tokens: Vec<Token>, end: (usize, usize)) -> Self {
        Parser {
            tokens,
            pos: 0,
            end,
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek(&self) -> Option<&TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn peek_at(&self, offset: usize) -> Option<&TokenKind> {
        self.tokens.get(self.pos + offset).map(|t| &t.kind)
    }

    fn advance(&mut self) -> Option<&Token> {
        let tok = self.tokens.get(self.pos);
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    /// Error at the current token (or one past the end of input).
    fn error_here(&self, expected: impl Into<String>) -> ParseError {
        match self.tokens.get(self.pos) {
            Some(tok) => ParseError::new(tok.line, tok.column, expected, tok.lexeme.clone()),
            None => ParseError::new(self.end.0, self.end.1, expected, "end of input"),
        }
    }

    fn expect(&mut self, kind: &TokenKind, expected: &str) -> Result<(), ParseError> {
        if self.peek() == Some(kind) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error_here(expected))
        }
    }

    fn clause(&mut self) -> Result<Clause, ParseError> {
        let mut clause = if self.peek() == Some(&TokenKind::ColonDash) {
            self.pos += 1;
            let term = self.term()?;
            self.expect(&TokenKind::Period, "'.'")?;
            Clause::Directive(term)
        } else {
            let head_err = self.error_here("fact or rule head");
            let head = self.term()?;
            if head.functor_arity().is_none() {
                return Err(head_err);
            }
            if self.peek() == Some(&TokenKind::ColonDash) {
                self.pos += 1;
                let body = self.body()?;
                self.expect(&TokenKind::Period, "'.'")?;
                Clause::Rule { head, body }
            } else {
                self.expect(&TokenKind::Period, "'.'")?;
                Clause::Fact(head)
            }
        };
        freshen_anonymous(&mut clause);
        Ok(clause)
    }

    fn body(&mut self) -> Result<Vec<Goal>, ParseError> {
        let mut goals = vec![self.goal()?];
        while self.peek() == Some(&TokenKind::Comma) {
            self.pos += 1;
            goals.push(self.goal()?);
        }
        Ok(goals)
    }

    fn goal(&mut self) -> Result<Goal, ParseError> {
        if self.peek() == Some(&TokenKind::LBrace) {
            self.pos += 1;
            let lhs = self.arith()?;
            self.expect(&TokenKind::Equals, "'='")?;
            let rhs = self.arith()?;
            self.expect(&TokenKind::RBrace, "'}'")?;
            return Ok(Goal::Constraint { lhs, rhs });
        }

        let start_err = self.error_here("goal");
        let expr = self.arith()?;

        if let Some(TokenKind::Atom(name)) = self.peek() {
            if name == "is" {
                let target = expr_to_term(expr).ok_or_else(|| {
                    ParseError::new(
                        start_err.line,
                        start_err.column,
                        "variable before 'is'",
                        start_err.found.clone(),
                    )
                })?;
                self.pos += 1;
                let rhs = self.arith()?;
                return Ok(Goal::Is { target, expr: rhs });
            }
        }

        let compare = match self.peek() {
            Some(TokenKind::ArithEq) => Some(CompareOp::Eq),
            Some(TokenKind::ArithNeq) => Some(CompareOp::Neq),
            Some(TokenKind::Lt) => Some(CompareOp::Lt),
            Some(TokenKind::Gt) => Some(CompareOp::Gt),
            Some(TokenKind::Le) => Some(CompareOp::Le),
            Some(TokenKind::Ge) => Some(CompareOp::Ge),
            _ => None,
        };
        if let Some(op) = compare {
            self.pos += 1;
            let rhs = self.arith()?;
            return Ok(Goal::Compare { op, lhs: expr, rhs });
        }

        match expr {
            ArithExpr::Opaque(term) if term.functor_arity().is_some() => Ok(Goal::Call(*term)),
            ArithExpr::VarRef(name) => Ok(Goal::Call(Term::Var(name))),
            _ => Err(start_err),
        }
    }

    /// addsub := muldiv (('+' | '-') muldiv)*
    fn arith(&mut self) -> Result<ArithExpr, ParseError> {
        let mut lhs = self.muldiv()?;
        loop {
            let op = match self.peek() {
                Some(TokenKind::Plus) => ArithOp::Add,
                Some(TokenKind::Minus) => ArithOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.muldiv()?;
            lhs = ArithExpr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    /// muldiv := unary (('*' | '/') unary)*
    fn muldiv(&mut self) -> Result<ArithExpr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(TokenKind::Star) => ArithOp::Mul,
                Some(TokenKind::Slash) => ArithOp::Div,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = fold_binop(op, lhs, rhs);
        }
        Ok(lhs)
    }

    /// unary := '-' unary | primary; minus folds into numeric constants.
    fn unary(&mut self) -> Result<ArithExpr, ParseError> {
        if self.peek() == Some(&TokenKind::Minus) {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(match inner {
                ArithExpr::Const(c) => ArithExpr::Const(-&c),
                other => ArithExpr::Neg(Box::new(other)),
            });
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<ArithExpr, ParseError> {
        match self.peek() {
            Some(TokenKind::Number(_)) => {
                let Some(Token {
                    kind: TokenKind::Number(n),
                    ..
                }) = self.advance()
                else {
                    unreachable!()
                };
                Ok(ArithExpr::Const(n.clone()))
            }
            Some(TokenKind::Var(_)) => {
                let Some(Token {
                    kind: TokenKind::Var(name),
                    ..
                }) = self.advance()
                else {
                    unreachable!()
                };
                Ok(ArithExpr::VarRef(name.clone()))
            }
            Some(TokenKind::Atom(_)) => {
                let term = self.atom_or_compound()?;
                Ok(ArithExpr::Opaque(Box::new(term)))
            }
            Some(TokenKind::LBracket) => {
                let term = self.list()?;
                Ok(ArithExpr::Opaque(Box::new(term)))
            }
            Some(TokenKind::LParen) => {
                self.pos += 1;
                let inner = self.arith()?;
                self.expect(&TokenKind::RParen, "')'")?;
                Ok(inner)
            }
            _ => Err(self.error_here("expression")),
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.peek() {
            Some(TokenKind::Atom(_)) => self.atom_or_compound(),
            Some(TokenKind::Var(_)) => {
                let Some(Token {
                    kind: TokenKind::Var(name),
                    ..
                }) = self.advance()
                else {
                    unreachable!()
                };
                Ok(Term::Var(name.clone()))
            }
            Some(TokenKind::Number(_)) => self.number_term(false),
            Some(TokenKind::Minus) => {
                self.pos += 1;
                if matches!(self.peek(), Some(TokenKind::Number(_))) {
                    self.number_term(true)
                } else {
                    Err(self.error_here("number after '-'"))
                }
            }
            Some(TokenKind::LBracket) => self.list(),
            _ => Err(self.error_here("term")),
        }
    }

    /// A number, negated when `negative`, folding `N/D` literal fractions.
    fn number_term(&mut self, negative: bool) -> Result<Term, ParseError> {
        let Some(Token {
            kind: TokenKind::Number(n),
            ..
        }) = self.advance()
        else {
            unreachable!()
        };
        let mut value = n.clone();
        if negative {
            value = -&value;
        }
        if self.peek() == Some(&TokenKind::Slash) {
            if let Some(TokenKind::Number(_)) = self.peek_at(1) {
                self.pos += 1;
                let denom_err = self.error_here("nonzero denominator");
                let Some(Token {
                    kind: TokenKind::Number(d),
                    ..
                }) = self.advance()
                else {
                    unreachable!()
                };
                let folded = value.checked_div(d).ok_or(denom_err)?;
                return Ok(Term::Num(folded));
            }
        }
        Ok(Term::Num(value))
    }

    fn atom_or_compound(&mut self) -> Result<Term, ParseError> {
        let Some(Token {
            kind: TokenKind::Atom(name),
            ..
        }) = self.advance()
        else {
            unreachable!()
        };
        let name = name.clone();
        if self.peek() == Some(&TokenKind::LParen) {
            self.pos += 1;
            let mut args = vec![self.term()?];
            while self.peek() == Some(&TokenKind::Comma) {
                self.pos += 1;
                args.push(self.term()?);
            }
            self.expect(&TokenKind::RParen, "')'")?;
            Ok(Term::Compound(name, args))
        } else {
            Ok(Term::Atom(name))
        }
    }

    fn list(&mut self) -> Result<Term, ParseError> {
        self.expect(&TokenKind::LBracket, "'['")?;
        if self.peek() == Some(&TokenKind::RBracket) {
            self.pos += 1;
            return Ok(Term::List(Vec::new()));
        }
        let mut items = vec![self.term()?];
        while self.peek() == Some(&TokenKind::Comma) {
            self.pos += 1;
            items.push(self.term()?);
        }
        self.expect(&TokenKind::RBracket, "',' or ']'")?;
        Ok(Term::List(items))
    }
}

/// Folds division of two constants into an exact rational so that printed
/// `N/D` fractions re-parse to the same constant. A zero divisor stays a
/// `BinOp` and surfaces as an evaluation error at solve time.
fn fold_binop(op: ArithOp, lhs: ArithExpr, rhs: ArithExpr) -> ArithExpr {
    if op == ArithOp::Div {
        if let (ArithExpr::Const(a), ArithExpr::Const(b)) = (&lhs, &rhs) {
            if let Some(folded) = a.checked_div(b) {
                return ArithExpr::Const(folded);
            }
        }
    }
    ArithExpr::bin(op, lhs, rhs)
}

/// Converts an expression back to the term it denotes, for `is/2` targets.
fn expr_to_term(expr: ArithExpr) -> Option<Term> {
    match expr {
        ArithExpr::VarRef(name) => Some(Term::Var(name)),
        ArithExpr::Const(n) => Some(Term::Num(n)),
        ArithExpr::Opaque(term) => Some(*term),
        ArithExpr::Neg(_) | ArithExpr::BinOp { .. } => None,
    }
}

/// Renames each `_` occurrence to a distinct fresh variable, so anonymous
/// variables never alias each other within a clause.
fn freshen_anonymous(clause: &mut Clause) {
    let used: HashSet<String> = clause.variables().into_iter().collect();
    if !used.contains("_") {
        return;
    }
    let mut counter = 0;
    let mut fresh = || loop {
        let name = format!("_Anon{counter}");
        counter += 1;
        if !used.contains(&name) {
            return name;
        }
    };
    match clause {
        Clause::Directive(term) => freshen_term(term, &mut fresh),
        Clause::Fact(head) => freshen_term(head, &mut fresh),
        Clause::Rule { head, body } => {
            freshen_term(head, &mut fresh);
            for goal in body {
                freshen_goal(goal, &mut fresh);
            }
        }
    }
}

fn freshen_term(term: &mut Term, fresh: &mut impl FnMut() -> String) {
    match term {
        Term::Var(name) if name == "_" => *name = fresh(),
        Term::Compound(_, args) => {
            for arg in args {
                freshen_term(arg, fresh);
            }
        }
        Term::List(items) => {
            for item in items {
                freshen_term(item, fresh);
            }
        }
        _ => {}
    }
}

fn freshen_expr(expr: &mut ArithExpr, fresh: &mut impl FnMut() -> String) {
    match expr {
        ArithExpr::VarRef(name) if name == "_" => *name = fresh(),
        ArithExpr::Neg(inner) => freshen_expr(inner, fresh),
        ArithExpr::BinOp { lhs, rhs, .. } => {
            freshen_expr(lhs, fresh);
            freshen_expr(rhs, fresh);
        }
        ArithExpr::Opaque(term) => freshen_term(term, fresh),
        _ => {}
    }
}

fn freshen_goal(goal: &mut Goal, fresh: &mut impl FnMut() -> String) {
    match goal {
        Goal::Call(term) => freshen_term(term, fresh),
        Goal::Constraint { lhs, rhs } => {
            freshen_expr(lhs, fresh);
            freshen_expr(rhs, fresh);
        }
        Goal::Is { target, expr } => {
            freshen_term(target, fresh);
            freshen_expr(expr, fresh);
        }
        Goal::Compare { lhs, rhs, .. } => {
            freshen_expr(lhs, fresh);
            freshen_expr(rhs, fresh);
        }
    }
}
