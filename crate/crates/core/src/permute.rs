//! Order permutations of programs.
//!
//! Two independent axes: the order of goals inside the `solve/1` rule, and
//! the order of fact/rule clauses (directives stay pinned where they are).
//! Because the solver is order-insensitive, every permutation keeps the
//! original outcome, which is what makes these usable as training
//! augmentations.

use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ast::{Clause, Goal, Program};
use crate::printer::pretty_print;

pub const DEFAULT_GOAL_LIMIT: usize = 10;
pub const DEFAULT_CLAUSE_LIMIT: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PermuteError {
    #[error("program has no solve/1 rule")]
    NoSolveRule,
}

/// All permuted variants of one program, identity arrangement first.
#[derive(Debug, Clone)]
pub struct PermutationSet {
    pub original: Program,
    /// Pairwise structurally distinct; `members[identity_index]` is the
    /// original arrangement.
    pub members: Vec<Program>,
    pub identity_index: usize,
}

/// Index sequences over `0..n` in lexicographic order, identity first.
struct IndexPermutations {
    current: Option<Vec<usize>>,
}

impl IndexPermutations {
    fn new(n: usize) -> Self {
        IndexPermutations {
            current: Some((0..n).collect()),
        }
    }
}

impl Iterator for IndexPermutations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.current.take()?;
        self.current = next_permutation(&current);
        Some(current)
    }
}

/// Standard next-permutation step; `None` after the last (descending)
/// arrangement.
fn next_permutation(seq: &[usize]) -> Option<Vec<usize>> {
    let mut next = seq.to_vec();
    let n = next.len();
    if n < 2 {
        return None;
    }
    let pivot = (0..n - 1).rev().find(|&i| next[i] < next[i + 1])?;
    let successor = (pivot + 1..n).rev().find(|&i| next[i] > next[pivot])?;
    next.swap(pivot, successor);
    next[pivot + 1..].reverse();
    Some(next)
}

fn apply_order<T: Clone>(items: &[T], order: &[usize]) -> Vec<T> {
    order.iter().map(|&i| items[i].clone()).collect()
}

/// Up to `limit` distinct goal orderings of the solve rule, identity first.
pub fn goal_permutations(program: &Program, limit: usize) -> Result<Vec<Program>, PermuteError> {
    let (rule_index, _, body) = program.solve_rule().ok_or(PermuteError::NoSolveRule)?;
    let body = body.to_vec();
    let mut seen: HashSet<Vec<Goal>> = HashSet::new();
    let mut out = Vec::new();
    for order in IndexPermutations::new(body.len()) {
        if out.len() >= limit {
            break;
        }
        let goals = apply_order(&body, &order);
        if !seen.insert(goals.clone()) {
            continue;
        }
        let mut variant = program.clone();
        let Clause::Rule { body, .. } = &mut variant.clauses[rule_index] else {
            unreachable!("solve_rule returned a non-rule clause");
        };
        *body = goals;
        out.push(variant);
    }
    Ok(out)
}

/// Clause index orders with directives pinned at their original positions,
/// identity first, up to `limit`.
fn clause_orders(program: &Program, limit: usize) -> Vec<Vec<usize>> {
    let movable: Vec<usize> = program
        .clauses
        .iter()
        .enumerate()
        .filter(|(_, c)| !matches!(c, Clause::Directive(_)))
        .map(|(i, _)| i)
        .collect();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut orders = Vec::new();
    for perm in IndexPermutations::new(movable.len()) {
        if orders.len() >= limit {
            break;
        }
        let mut order: Vec<usize> = (0..program.clauses.len()).collect();
        for (slot, &p) in movable.iter().zip(&perm) {
            order[*slot] = movable[p];
        }
        if seen.insert(order.clone()) {
            orders.push(order);
        }
    }
    orders
}

/// Up to `limit` orderings of the fact/rule clauses; directives do not
/// move.
pub fn clause_permutations(program: &Program, limit: usize) -> Vec<Program> {
    clause_orders(program, limit)
        .into_iter()
        .map(|order| Program::new(apply_order(&program.clauses, &order)))
        .collect()
}

/// The capped cross product of goal and clause permutations: every goal
/// ordering combined with every clause ordering, deduplicated
/// structurally.
pub fn permutation_set(
    program: &Program,
    goal_limit: usize,
    clause_limit: usize,
) -> Result<PermutationSet, PermuteError> {
    let goal_variants = goal_permutations(program, goal_limit)?;
    let orders = clause_orders(program, clause_limit);
    let mut members = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for goal_variant in &goal_variants {
        for order in &orders {
            let member = Program::new(apply_order(&goal_variant.clauses, order));
            let key = pretty_print(&member.normalize_vars());
            if seen.insert(key) {
                members.push(member);
            }
        }
    }
    Ok(PermutationSet {
        original: program.clone(),
        members,
        identity_index: 0,
    })
}

/// Draws `n` members uniformly without replacement, excluding the identity
/// arrangement; returns all non-identity members when `n` is larger.
/// Deterministic for a given seed.
pub fn sample_augmentations(set: &PermutationSet, n: usize, seed: u64) -> Vec<Program> {
    let candidates: Vec<&Program> = set
        .members
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != set.identity_index)
        .map(|(_, p)| p)
        .collect();
    if n >= candidates.len() {
        return candidates.into_iter().cloned().collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rand::seq::index::sample(&mut rng, candidates.len(), n)
        .into_iter()
        .map(|i| candidates[i].clone())
        .collect()
}
