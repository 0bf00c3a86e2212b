//! Term syntax: the linear lambda calculus extended with `discard` and
//! `copy`.
//!
//! Every constructor enforces linearity, so a [`Term`] is linear by
//! construction: each free variable occurs exactly once, every binder is
//! used. Sharing is by reference counting; size, free variables and the
//! structural flags are cached at each node, which keeps substitution along
//! a single variable occurrence proportional to the depth of the term.

use crate::symbol::Symbol;
use crate::ty::{self, Ty};
use std::fmt;
use std::rc::Rc;

#[derive(Clone, Debug)]
pub enum TermNode {
    Var(Symbol),
    Lam(Symbol, Term),
    App(Term, Term),
    /// `discard_s M in N`; the scrutinee has type `#s`.
    Discard {
        ann: Ty,
        scrutinee: Term,
        body: Term,
    },
    /// `copy^V_s M as y,z in N`; the witness `V` is a value of type `s`.
    Copy {
        ann: Ty,
        witness: Term,
        scrutinee: Term,
        left: Symbol,
        right: Symbol,
        body: Term,
    },
}

struct TermInner {
    node: TermNode,
    size: u64,
    /// Sorted, deduplicated by linearity (each free occurs exactly once).
    free: Box<[Symbol]>,
    /// No discard or copy node anywhere.
    pure: bool,
    /// No beta redex anywhere (commuting and value redexes not considered).
    beta_normal: bool,
}

#[derive(Clone)]
pub struct Term(Rc<TermInner>);

fn merge_disjoint(a: &[Symbol], b: &[Symbol], what: &str) -> Box<[Symbol]> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                panic!("linearity violation in {what}: variable {} used twice", a[i]);
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out.into_boxed_slice()
}

fn remove_bound(free: &[Symbol], binder: Symbol, what: &str) -> Box<[Symbol]> {
    match free.binary_search(&binder) {
        Ok(idx) => {
            let mut out = free.to_vec();
            out.remove(idx);
            out.into_boxed_slice()
        }
        Err(_) => panic!("linearity violation in {what}: binder {binder} unused"),
    }
}

pub fn var(name: Symbol) -> Term {
    Term(Rc::new(TermInner {
        node: TermNode::Var(name),
        size: 1,
        free: Box::new([name]),
        pure: true,
        beta_normal: true,
    }))
}

pub fn var_named(name: &str) -> Term {
    var(Symbol::intern(name))
}

pub fn lam(binder: Symbol, body: Term) -> Term {
    let free = remove_bound(body.free_vars(), binder, "abstraction");
    Term(Rc::new(TermInner {
        size: body.size() + 1,
        free,
        pure: body.is_pure(),
        beta_normal: body.is_beta_normal(),
        node: TermNode::Lam(binder, body),
    }))
}

pub fn app(fun: Term, arg: Term) -> Term {
    let free = merge_disjoint(fun.free_vars(), arg.free_vars(), "application");
    let beta_normal = fun.is_beta_normal()
        && arg.is_beta_normal()
        && !matches!(fun.node(), TermNode::Lam(_, _));
    Term(Rc::new(TermInner {
        size: fun.size() + arg.size() + 1,
        free,
        pure: fun.is_pure() && arg.is_pure(),
        beta_normal,
        node: TermNode::App(fun, arg),
    }))
}

pub fn discard(ann: Ty, scrutinee: Term, body: Term) -> Term {
    let free = merge_disjoint(scrutinee.free_vars(), body.free_vars(), "discard");
    Term(Rc::new(TermInner {
        size: scrutinee.size() + body.size() + 1,
        free,
        pure: false,
        beta_normal: scrutinee.is_beta_normal() && body.is_beta_normal(),
        node: TermNode::Discard { ann, scrutinee, body },
    }))
}

pub fn copy(
    ann: Ty,
    witness: Term,
    scrutinee: Term,
    left: Symbol,
    right: Symbol,
    body: Term,
) -> Term {
    assert!(
        witness.is_value(),
        "copy witness must be a value (closed, pure, normal): {witness}"
    );
    assert_ne!(left, right, "copy binders must be distinct");
    let body_free = remove_bound(body.free_vars(), left, "copy");
    let body_free = remove_bound(&body_free, right, "copy");
    let free = merge_disjoint(scrutinee.free_vars(), &body_free, "copy");
    Term(Rc::new(TermInner {
        size: scrutinee.size() + body.size() + witness.size() + 1,
        free,
        pure: false,
        beta_normal: scrutinee.is_beta_normal() && body.is_beta_normal(),
        node: TermNode::Copy { ann, witness, scrutinee, left, right, body },
    }))
}

impl Term {
    pub fn node(&self) -> &TermNode {
        &self.0.node
    }

    pub fn size(&self) -> u64 {
        self.0.size
    }

    pub fn free_vars(&self) -> &[Symbol] {
        &self.0.free
    }

    pub fn has_free(&self, v: Symbol) -> bool {
        self.0.free.binary_search(&v).is_ok()
    }

    pub fn is_closed(&self) -> bool {
        self.0.free.is_empty()
    }

    pub fn is_pure(&self) -> bool {
        self.0.pure
    }

    pub fn is_beta_normal(&self) -> bool {
        self.0.beta_normal
    }

    /// Values are the closed, pure, beta-normal terms. Variables are not
    /// values; neither is anything containing discard or copy.
    pub fn is_value(&self) -> bool {
        self.0.pure && self.0.free.is_empty() && self.0.beta_normal
    }

    pub fn ptr_eq(&self, other: &Term) -> bool {
        Rc::ptr_eq(&self.0, &other.0)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::print::term_to_string(self))
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::print::term_to_string(self))
    }
}

/// Renames the binder of an abstraction-like node away from `avoid`.
fn freshen_binder(binder: Symbol, body: &Term, avoid: &Term) -> (Symbol, Term) {
    if !avoid.has_free(binder) {
        return (binder, body.clone());
    }
    let fresh = Symbol::freshen(binder, |s| !body.has_free(s) && !avoid.has_free(s) && s != binder);
    (fresh, subst(body, binder, &var(fresh)))
}

/// Capture-avoiding substitution `m[n/x]`. Linearity bounds the work: only
/// the unique branch containing `x` is rebuilt.
pub fn subst(m: &Term, x: Symbol, n: &Term) -> Term {
    if !m.has_free(x) {
        return m.clone();
    }
    match m.node() {
        TermNode::Var(_) => n.clone(),
        TermNode::Lam(b, body) => {
            let (b, body) = freshen_binder(*b, body, n);
            lam(b, subst(&body, x, n))
        }
        TermNode::App(f, a) => {
            if f.has_free(x) {
                app(subst(f, x, n), a.clone())
            } else {
                app(f.clone(), subst(a, x, n))
            }
        }
        TermNode::Discard { ann, scrutinee, body } => {
            if scrutinee.has_free(x) {
                discard(ann.clone(), subst(scrutinee, x, n), body.clone())
            } else {
                discard(ann.clone(), scrutinee.clone(), subst(body, x, n))
            }
        }
        TermNode::Copy { ann, witness, scrutinee, left, right, body } => {
            if scrutinee.has_free(x) {
                copy(
                    ann.clone(),
                    witness.clone(),
                    subst(scrutinee, x, n),
                    *left,
                    *right,
                    body.clone(),
                )
            } else {
                let (l, body) = freshen_binder(*left, body, n);
                let (r, body) = freshen_binder(*right, &body, n);
                copy(ann.clone(), witness.clone(), scrutinee.clone(), l, r, subst(&body, x, n))
            }
        }
    }
}

/// Substitute a type for a free type variable inside every annotation.
pub fn subst_ty_in_term(m: &Term, a: Symbol, b: &Ty) -> Term {
    match m.node() {
        TermNode::Var(_) => m.clone(),
        TermNode::Lam(x, body) => lam(*x, subst_ty_in_term(body, a, b)),
        TermNode::App(f, arg) => app(subst_ty_in_term(f, a, b), subst_ty_in_term(arg, a, b)),
        TermNode::Discard { ann, scrutinee, body } => discard(
            ty::subst_ty(ann, a, b),
            subst_ty_in_term(scrutinee, a, b),
            subst_ty_in_term(body, a, b),
        ),
        TermNode::Copy { ann, witness, scrutinee, left, right, body } => copy(
            ty::subst_ty(ann, a, b),
            subst_ty_in_term(witness, a, b),
            subst_ty_in_term(scrutinee, a, b),
            *left,
            *right,
            subst_ty_in_term(body, a, b),
        ),
    }
}

pub fn alpha_eq(a: &Term, b: &Term) -> bool {
    fn lookup(pairs: &[(Symbol, Symbol)], x: Symbol, y: Symbol) -> bool {
        for (l, r) in pairs.iter().rev() {
            if *l == x || *r == y {
                return *l == x && *r == y;
            }
        }
        x == y
    }
    fn go(a: &Term, b: &Term, pairs: &mut Vec<(Symbol, Symbol)>) -> bool {
        match (a.node(), b.node()) {
            (TermNode::Var(x), TermNode::Var(y)) => lookup(pairs, *x, *y),
            (TermNode::Lam(x, m), TermNode::Lam(y, n)) => {
                pairs.push((*x, *y));
                let r = go(m, n, pairs);
                pairs.pop();
                r
            }
            (TermNode::App(f1, a1), TermNode::App(f2, a2)) => {
                go(f1, f2, pairs) && go(a1, a2, pairs)
            }
            (
                TermNode::Discard { ann: t1, scrutinee: s1, body: b1 },
                TermNode::Discard { ann: t2, scrutinee: s2, body: b2 },
            ) => ty::alpha_eq_ty(t1, t2) && go(s1, s2, pairs) && go(b1, b2, pairs),
            (
                TermNode::Copy { ann: t1, witness: w1, scrutinee: s1, left: l1, right: r1, body: b1 },
                TermNode::Copy { ann: t2, witness: w2, scrutinee: s2, left: l2, right: r2, body: b2 },
            ) => {
                if !ty::alpha_eq_ty(t1, t2) || !go(w1, w2, pairs) || !go(s1, s2, pairs) {
                    return false;
                }
                pairs.push((*l1, *l2));
                pairs.push((*r1, *r2));
                let r = go(b1, b2, pairs);
                pairs.pop();
                pairs.pop();
                r
            }
            _ => false,
        }
    }
    if a.ptr_eq(b) {
        return true;
    }
    if a.size() != b.size() || a.free_vars() != b.free_vars() {
        return false;
    }
    go(a, b, &mut Vec::new())
}

/// Child slots addressable by reduction paths. Witnesses are normal values
/// and are not traversed.
pub fn children(t: &Term) -> Vec<&Term> {
    match t.node() {
        TermNode::Var(_) => vec![],
        TermNode::Lam(_, b) => vec![b],
        TermNode::App(f, a) => vec![f, a],
        TermNode::Discard { scrutinee, body, .. } => vec![scrutinee, body],
        TermNode::Copy { scrutinee, body, .. } => vec![scrutinee, body],
    }
}

pub fn subterm_at<'a>(t: &'a Term, path: &[usize]) -> Option<&'a Term> {
    let mut cur = t;
    for &i in path {
        cur = *children(cur).get(i)?;
    }
    Some(cur)
}

/// Rebuild `t` with the subterm at `path` replaced by `new`.
pub fn replace_at(t: &Term, path: &[usize], new: Term) -> Term {
    let Some((&head, rest)) = path.split_first() else {
        return new;
    };
    match (t.node(), head) {
        (TermNode::Lam(x, b), 0) => lam(*x, replace_at(b, rest, new)),
        (TermNode::App(f, a), 0) => app(replace_at(f, rest, new), a.clone()),
        (TermNode::App(f, a), 1) => app(f.clone(), replace_at(a, rest, new)),
        (TermNode::Discard { ann, scrutinee, body }, 0) => {
            discard(ann.clone(), replace_at(scrutinee, rest, new), body.clone())
        }
        (TermNode::Discard { ann, scrutinee, body }, 1) => {
            discard(ann.clone(), scrutinee.clone(), replace_at(body, rest, new))
        }
        (TermNode::Copy { ann, witness, scrutinee, left, right, body }, 0) => copy(
            ann.clone(),
            witness.clone(),
            replace_at(scrutinee, rest, new),
            *left,
            *right,
            body.clone(),
        ),
        (TermNode::Copy { ann, witness, scrutinee, left, right, body }, 1) => copy(
            ann.clone(),
            witness.clone(),
            scrutinee.clone(),
            *left,
            *right,
            replace_at(body, rest, new),
        ),
        _ => panic!("replace_at: path goes nowhere"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sugar;

    fn s(n: &str) -> Symbol {
        Symbol::intern(n)
    }

    #[test]
    fn sizes() {
        let x = s("x");
        let y = s("y");
        assert_eq!(var(x).size(), 1);
        assert_eq!(lam(x, var(x)).size(), 2);
        let twist = lam(x, lam(y, app(var(y), var(x))));
        assert_eq!(twist.size(), 5);
        let id = sugar::id();
        let d = discard(sugar::unit_ty(), var(x), var(y));
        assert_eq!(d.size(), 3);
        let c = copy(sugar::unit_ty(), id.clone(), var(x), s("x1"), s("x2"), app(var(s("x1")), var(s("x2"))));
        assert_eq!(c.size(), 1 + 3 + id.size() + 1);
    }

    #[test]
    #[should_panic(expected = "linearity")]
    fn rejects_duplicate_use() {
        let x = s("x");
        app(var(x), var(x));
    }

    #[test]
    #[should_panic(expected = "linearity")]
    fn rejects_unused_binder() {
        lam(s("x"), var(s("y")));
    }

    #[test]
    fn value_flags() {
        let id = sugar::id();
        assert!(id.is_value());
        assert!(!var(s("x")).is_value());
        let redex = app(sugar::id(), sugar::id());
        assert!(redex.is_closed() && !redex.is_beta_normal() && !redex.is_value());
        let d = lam(s("x"), discard(sugar::unit_ty(), var(s("x")), sugar::id()));
        assert!(d.is_closed() && !d.is_pure() && !d.is_value());
    }

    #[test]
    fn substitution_follows_the_unique_occurrence() {
        let big = lam(s("a"), app(var(s("a")), var(s("x"))));
        let n = sugar::id();
        let r = subst(&big, s("x"), &n);
        assert!(r.is_closed());
        assert_eq!(r.size(), big.size() + n.size() - 1);
    }

    #[test]
    fn substitution_avoids_capture() {
        // (\y. x y)[y := n] keeps n's free y distinct from the binder.
        let m = lam(s("y"), app(var(s("x")), var(s("y"))));
        let n = var(s("y"));
        let r = subst(&m, s("x"), &n);
        match r.node() {
            TermNode::Lam(b, body) => {
                assert_ne!(b.as_str(), "y");
                match body.node() {
                    TermNode::App(f, a) => {
                        assert!(matches!(f.node(), TermNode::Var(v) if v.as_str() == "y"));
                        assert!(matches!(a.node(), TermNode::Var(v) if v == b));
                    }
                    other => panic!("unexpected body {other:?}"),
                }
            }
            other => panic!("unexpected result {other:?}"),
        }
    }

    #[test]
    fn alpha_equality() {
        let a = lam(s("x"), var(s("x")));
        let b = lam(s("y"), var(s("y")));
        assert!(alpha_eq(&a, &b));
        let c = lam(s("x"), lam(s("y"), app(var(s("x")), var(s("y")))));
        let d = lam(s("y"), lam(s("x"), app(var(s("y")), var(s("x")))));
        assert!(alpha_eq(&c, &d));
        let e = lam(s("x"), lam(s("y"), app(var(s("y")), var(s("x")))));
        assert!(!alpha_eq(&c, &e));
    }

    #[test]
    fn paths_roundtrip() {
        let t = lam(s("x"), app(sugar::id(), var(s("x"))));
        let inner = subterm_at(&t, &[0, 0]).unwrap();
        assert!(alpha_eq(inner, &sugar::id()));
        let replaced = replace_at(&t, &[0, 0], sugar::tt());
        assert_eq!(replaced.size(), t.size() - sugar::id().size() + sugar::tt().size());
    }
}
