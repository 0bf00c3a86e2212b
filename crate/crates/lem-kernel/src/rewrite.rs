//! The rewriting engine.
//!
//! Reduction is beta (unrestricted), the two value rules (`discard V in M`
//! drops a value, `copy^U V as y,z in M` substitutes a value twice), and six
//! commuting rules that float `discard`/`copy` out of function position and
//! out of each other. Redexes are located leftmost-outermost; at most one
//! rule applies at any node. Eta lives behind a separate entry point and is
//! only used to compute beta-eta normal forms for comparisons.

use crate::error::{KernelError, Result};
use crate::symbol::Symbol;
use crate::term::{
    app, children, copy, discard, lam, replace_at, subst, subterm_at, var, Term, TermNode,
};
use std::fmt;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RedexKind {
    Beta,
    DiscardValue,
    CopyValue,
    /// `(discard M in N) P -> discard M in N P`
    Comm1,
    /// `discard (discard M in N) in P -> discard M in (discard N in P)`
    Comm2,
    /// `copy (discard M in N) as y,z in P -> discard M in (copy N as y,z in P)`
    Comm3,
    /// `(copy M as y,z in N) P -> copy M as y,z in N P`
    Comm4,
    /// `discard (copy M as y,z in N) in P -> copy M as y,z in (discard N in P)`
    Comm5,
    /// `copy (copy M as y,z in N) as y',z' in P -> copy M as y,z in (copy N as y',z' in P)`
    Comm6,
    Eta,
}

impl RedexKind {
    pub fn is_commuting(&self) -> bool {
        matches!(
            self,
            RedexKind::Comm1
                | RedexKind::Comm2
                | RedexKind::Comm3
                | RedexKind::Comm4
                | RedexKind::Comm5
                | RedexKind::Comm6
        )
    }
}

impl fmt::Display for RedexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RedexKind::Beta => "beta",
            RedexKind::DiscardValue => "discard",
            RedexKind::CopyValue => "copy",
            RedexKind::Comm1 => "comm1",
            RedexKind::Comm2 => "comm2",
            RedexKind::Comm3 => "comm3",
            RedexKind::Comm4 => "comm4",
            RedexKind::Comm5 => "comm5",
            RedexKind::Comm6 => "comm6",
            RedexKind::Eta => "eta",
        };
        f.write_str(s)
    }
}

/// The rule applicable at the root of `t`, if any. The left sides are
/// pairwise disjoint, so this is deterministic.
pub fn root_redex(t: &Term, include_eta: bool) -> Option<RedexKind> {
    match t.node() {
        TermNode::App(f, _) => match f.node() {
            TermNode::Lam(_, _) => Some(RedexKind::Beta),
            TermNode::Discard { .. } => Some(RedexKind::Comm1),
            TermNode::Copy { .. } => Some(RedexKind::Comm4),
            _ => None,
        },
        TermNode::Discard { scrutinee, .. } => {
            if scrutinee.is_value() {
                Some(RedexKind::DiscardValue)
            } else {
                match scrutinee.node() {
                    TermNode::Discard { .. } => Some(RedexKind::Comm2),
                    TermNode::Copy { .. } => Some(RedexKind::Comm5),
                    _ => None,
                }
            }
        }
        TermNode::Copy { scrutinee, .. } => {
            if scrutinee.is_value() {
                Some(RedexKind::CopyValue)
            } else {
                match scrutinee.node() {
                    TermNode::Discard { .. } => Some(RedexKind::Comm3),
                    TermNode::Copy { .. } => Some(RedexKind::Comm6),
                    _ => None,
                }
            }
        }
        TermNode::Lam(x, body) if include_eta => match body.node() {
            TermNode::App(m, a) => {
                let is_eta = matches!(a.node(), TermNode::Var(v) if v == x) && !m.has_free(*x);
                is_eta.then_some(RedexKind::Eta)
            }
            _ => None,
        },
        _ => None,
    }
}

/// All redexes in leftmost-outermost (pre-)order as `(kind, path)` pairs.
pub fn find_redexes(t: &Term, include_eta: bool) -> Vec<(RedexKind, Vec<usize>)> {
    fn go(t: &Term, include_eta: bool, path: &mut Vec<usize>, out: &mut Vec<(RedexKind, Vec<usize>)>) {
        if let Some(kind) = root_redex(t, include_eta) {
            out.push((kind, path.clone()));
        }
        for (i, c) in children(t).into_iter().enumerate() {
            path.push(i);
            go(c, include_eta, path, out);
            path.pop();
        }
    }
    let mut out = Vec::new();
    go(t, include_eta, &mut Vec::new(), &mut out);
    out
}

/// The leftmost-outermost redex only. Pure beta-normal subtrees contain no
/// redex of any non-eta kind, so the search skips them; synthesized
/// selection tables are exactly such subtrees, and without the pruning
/// every step of a table dispatch would rescan the whole table.
fn first_redex(t: &Term, include_eta: bool) -> Option<(RedexKind, Vec<usize>)> {
    fn go(t: &Term, include_eta: bool, path: &mut Vec<usize>) -> Option<RedexKind> {
        if !include_eta && t.is_pure() && t.is_beta_normal() {
            return None;
        }
        if let Some(kind) = root_redex(t, include_eta) {
            return Some(kind);
        }
        for (i, c) in children(t).into_iter().enumerate() {
            path.push(i);
            if let Some(kind) = go(c, include_eta, path) {
                return Some(kind);
            }
            path.pop();
        }
        None
    }
    let mut path = Vec::new();
    go(t, include_eta, &mut path).map(|kind| (kind, path))
}

/// Rename the two copy binders away from the free variables of `incoming`,
/// which is about to move under them.
fn freshen_pair(
    left: Symbol,
    right: Symbol,
    body: &Term,
    incoming: &Term,
) -> (Symbol, Symbol, Term) {
    let mut body = body.clone();
    let mut l = left;
    let mut r = right;
    if incoming.has_free(l) {
        let fresh =
            Symbol::freshen(l, |s| !body.has_free(s) && !incoming.has_free(s) && s != r);
        body = subst(&body, l, &var(fresh));
        l = fresh;
    }
    if incoming.has_free(r) {
        let fresh =
            Symbol::freshen(r, |s| !body.has_free(s) && !incoming.has_free(s) && s != l);
        body = subst(&body, r, &var(fresh));
        r = fresh;
    }
    (l, r, body)
}

/// Contract the redex at the root. Panics if `kind` does not match; use
/// [`root_redex`] first.
pub fn contract_root(t: &Term, kind: RedexKind) -> Term {
    match (kind, t.node()) {
        (RedexKind::Beta, TermNode::App(f, a)) => {
            let TermNode::Lam(x, body) = f.node() else { unreachable!() };
            subst(body, *x, a)
        }
        (RedexKind::DiscardValue, TermNode::Discard { body, .. }) => body.clone(),
        (RedexKind::CopyValue, TermNode::Copy { scrutinee, left, right, body, .. }) => {
            subst(&subst(body, *left, scrutinee), *right, scrutinee)
        }
        (RedexKind::Comm1, TermNode::App(f, p)) => {
            let TermNode::Discard { ann, scrutinee, body } = f.node() else { unreachable!() };
            discard(ann.clone(), scrutinee.clone(), app(body.clone(), p.clone()))
        }
        (RedexKind::Comm2, TermNode::Discard { ann, scrutinee, body: p }) => {
            let TermNode::Discard { ann: ann_in, scrutinee: m, body: n } = scrutinee.node()
            else {
                unreachable!()
            };
            discard(
                ann_in.clone(),
                m.clone(),
                discard(ann.clone(), n.clone(), p.clone()),
            )
        }
        (RedexKind::Comm3, TermNode::Copy { ann, witness, scrutinee, left, right, body: p }) => {
            let TermNode::Discard { ann: ann_in, scrutinee: m, body: n } = scrutinee.node()
            else {
                unreachable!()
            };
            discard(
                ann_in.clone(),
                m.clone(),
                copy(ann.clone(), witness.clone(), n.clone(), *left, *right, p.clone()),
            )
        }
        (RedexKind::Comm4, TermNode::App(f, p)) => {
            let TermNode::Copy { ann, witness, scrutinee, left, right, body } = f.node() else {
                unreachable!()
            };
            let (l, r, body) = freshen_pair(*left, *right, body, p);
            copy(
                ann.clone(),
                witness.clone(),
                scrutinee.clone(),
                l,
                r,
                app(body, p.clone()),
            )
        }
        (RedexKind::Comm5, TermNode::Discard { ann, scrutinee, body: p }) => {
            let TermNode::Copy { ann: ann_in, witness, scrutinee: m, left, right, body: n } =
                scrutinee.node()
            else {
                unreachable!()
            };
            let (l, r, n) = freshen_pair(*left, *right, n, p);
            copy(
                ann_in.clone(),
                witness.clone(),
                m.clone(),
                l,
                r,
                discard(ann.clone(), n, p.clone()),
            )
        }
        (RedexKind::Comm6, TermNode::Copy { ann, witness, scrutinee, left, right, body: p }) => {
            let TermNode::Copy {
                ann: ann_in,
                witness: witness_in,
                scrutinee: m,
                left: y,
                right: z,
                body: n,
            } = scrutinee.node()
            else {
                unreachable!()
            };
            let (y, z, n) = freshen_pair(*y, *z, n, p);
            copy(
                ann_in.clone(),
                witness_in.clone(),
                m.clone(),
                y,
                z,
                copy(ann.clone(), witness.clone(), n, *left, *right, p.clone()),
            )
        }
        (RedexKind::Eta, TermNode::Lam(_, body)) => {
            let TermNode::App(m, _) = body.node() else { unreachable!() };
            m.clone()
        }
        (k, _) => panic!("contract_root: no {k} redex at root"),
    }
}

pub fn step_at(t: &Term, path: &[usize], kind: RedexKind) -> Term {
    let sub = subterm_at(t, path).expect("step_at: bad path");
    let contracted = contract_root(sub, kind);
    replace_at(t, path, contracted)
}

/// One leftmost-outermost step.
pub fn step(t: &Term) -> Option<(Term, RedexKind, Vec<usize>)> {
    let (kind, path) = first_redex(t, false)?;
    Some((step_at(t, &path, kind), kind, path))
}

#[derive(Clone, Debug)]
pub struct TraceStep {
    pub index: u64,
    pub kind: RedexKind,
    pub path: Vec<usize>,
    pub size_after: u64,
}

#[derive(Clone, Debug)]
pub struct Normalized {
    pub term: Term,
    pub steps: u64,
    pub trace: Vec<TraceStep>,
}

/// Normalize under beta + value + commuting rules, leftmost-outermost, with
/// a fuel bound. `traced` records every step for the CLI.
pub fn normalize_full(t: &Term, fuel: u64, traced: bool) -> Result<Normalized> {
    let mut cur = t.clone();
    let mut steps = 0u64;
    let mut trace = Vec::new();
    while let Some((next, kind, path)) = step(&cur) {
        steps += 1;
        if steps > fuel {
            return Err(KernelError::Resource(format!(
                "reduction did not terminate within {fuel} steps"
            )));
        }
        if traced {
            trace.push(TraceStep { index: steps, kind, path, size_after: next.size() });
        }
        cur = next;
    }
    Ok(Normalized { term: cur, steps, trace })
}

pub fn normalize(t: &Term, fuel: u64) -> Result<Term> {
    Ok(normalize_full(t, fuel, false)?.term)
}

fn eta_step(t: &Term) -> Option<Term> {
    fn go(t: &Term, path: &mut Vec<usize>) -> bool {
        if root_redex(t, true) == Some(RedexKind::Eta) {
            return true;
        }
        for (i, c) in children(t).into_iter().enumerate() {
            path.push(i);
            if go(c, path) {
                return true;
            }
            path.pop();
        }
        false
    }
    let mut path = Vec::new();
    go(t, &mut path).then(|| step_at(t, &path, RedexKind::Eta))
}

/// Beta-eta normal form: normalize, then interleave eta contractions (an
/// eta step in function position can expose new beta redexes).
pub fn beta_eta_nf(t: &Term, fuel: u64) -> Result<Term> {
    let mut cur = normalize(t, fuel)?;
    let mut budget = fuel;
    while let Some(next) = eta_step(&cur) {
        if budget == 0 {
            return Err(KernelError::Resource(
                "eta postprocessing exceeded its fuel".into(),
            ));
        }
        budget -= 1;
        cur = normalize(&next, fuel)?;
    }
    Ok(cur)
}

/// Least `k` such that `t I^k` normalizes to `I`, searched up to `max_args`.
/// Defined for pure terms; the basis of untyped erasure.
pub fn solve_to_identity(t: &Term, max_args: u32, fuel: u64) -> Option<u32> {
    let id = crate::sugar::id();
    for k in 0..=max_args {
        let mut applied = t.clone();
        for _ in 0..k {
            applied = app(applied, id.clone());
        }
        if let Ok(nf) = normalize(&applied, fuel) {
            if crate::term::alpha_eq(&nf, &id) {
                return Some(k);
            }
        }
    }
    None
}

/// An eraser for the given closed terms: `\x. x I^k` with `k` the largest
/// identity count any of them needs. With no inputs this is the identity.
pub fn untyped_eraser(terms: &[Term], max_args: u32, fuel: u64) -> Result<Term> {
    let mut k = 0;
    for t in terms {
        let n = solve_to_identity(t, max_args, fuel).ok_or_else(|| {
            KernelError::Unprovable(format!("{t} does not reduce to I under identity arguments"))
        })?;
        k = k.max(n);
    }
    let x = Symbol::intern("x");
    let mut body = var(x);
    for _ in 0..k {
        body = app(body, crate::sugar::id());
    }
    Ok(lam(x, body))
}
