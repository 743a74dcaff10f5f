//! Substitution map and unification with occurs-check.

use std::collections::HashMap;

use crate::ast::Term;

/// Variable substitution built up during resolution. Variables are global
/// names; clause instances are renamed apart before unification, so names
/// never collide between instantiations.
#[derive(Debug, Clone, Default)]
pub struct Bindings {
    map: HashMap<String, Term>,
}

impl Bindings {
    pub fn new() -> Self {
        Bindings::default()
    }

    /// Follows variable-to-variable links to the representative term:
    /// either an unbound variable or a non-variable term (not substituted
    /// inside).
    pub fn walk<'a>(&'a self, term: &'a Term) -> &'a Term {
        let mut current = term;
        while let Term::Var(name) = current {
            match self.map.get(name) {
                Some(next) => current = next,
                None => break,
            }
        }
        current
    }

    /// Fully substitutes bound variables, leaving unbound ones as their
    /// representative (root) variable.
    pub fn resolve(&self, term: &Term) -> Term {
        let walked = self.walk(term).clone();
        match walked {
            Term::Compound(functor, args) => {
                Term::Compound(functor, args.iter().map(|a| self.resolve(a)).collect())
            }
            Term::List(items) => Term::List(items.iter().map(|i| self.resolve(i)).collect()),
            other => other,
        }
    }

    pub fn is_ground(&self, term: &Term) -> bool {
        match self.walk(term) {
            Term::Var(_) => false,
            Term::Atom(_) | Term::Num(_) => true,
            Term::Compound(_, args) => args.iter().all(|a| self.is_ground(a)),
            Term::List(items) => items.iter().all(|i| self.is_ground(i)),
        }
    }

    /// True when `name` occurs in `term` (after dereferencing), which would
    /// make a binding cyclic.
    fn occurs(&self, name: &str, term: &Term) -> bool {
        match self.walk(term) {
            Term::Var(v) => v == name,
            Term::Compound(_, args) => args.iter().any(|a| self.occurs(name, a)),
            Term::List(items) => items.iter().any(|i| self.occurs(name, i)),
            Term::Atom(_) | Term::Num(_) => false,
        }
    }

    fn bind(&mut self, name: String, term: Term) {
        self.map.insert(name, term);
    }

    /// Extends the substitution to a most general unifier of `a` and `b`.
    /// Returns false (leaving any partial bindings in place; callers
    /// snapshot around choice points) when the terms do not unify.
    pub fn unify(&mut self, a: &Term, b: &Term) -> bool {
        let a = self.walk(a).clone();
        let b = self.walk(b).clone();
        match (a, b) {
            (Term::Var(x), Term::Var(y)) if x == y => true,
            (Term::Var(x), t) | (t, Term::Var(x)) => {
                if self.occurs(&x, &t) {
                    false
                } else {
                    self.bind(x, t);
                    true
                }
            }
            (Term::Atom(p), Term::Atom(q)) => p == q,
            (Term::Num(m), Term::Num(n)) => m == n,
            (Term::Compound(f, xs), Term::Compound(g, ys)) => {
                f == g && xs.len() == ys.len() && self.unify_all(&xs, &ys)
            }
            (Term::List(xs), Term::List(ys)) => xs.len() == ys.len() && self.unify_all(&xs, &ys),
            _ => false,
        }
    }

    fn unify_all(&mut self, xs: &[Term], ys: &[Term]) -> bool {
        xs.iter().zip(ys).all(|(x, y)| self.unify(x, y))
    }
}
