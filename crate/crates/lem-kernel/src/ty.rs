//! Type syntax and the structural judgments on types.
//!
//! Grammar: linear types `A ::= a | s -o A | forall a. A` and full types
//! `s ::= A | #s`, where `#s` is well formed only when `s` is closed and has
//! no universal quantifier in negative position. Arrows may take a modal
//! type on the left but never return one.

use crate::error::{KernelError, Result};
use crate::symbol::Symbol;
use std::collections::BTreeSet;
use std::fmt;
use std::rc::Rc;

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Type {
    Var(Symbol),
    Arrow(Ty, Ty),
    Forall(Symbol, Ty),
    Bang(Ty),
}

pub type Ty = Rc<Type>;

pub fn tvar(name: &str) -> Ty {
    Rc::new(Type::Var(Symbol::intern(name)))
}

pub fn tvar_s(name: Symbol) -> Ty {
    Rc::new(Type::Var(name))
}

pub fn arrow(from: Ty, to: Ty) -> Ty {
    Rc::new(Type::Arrow(from, to))
}

pub fn forall(name: Symbol, body: Ty) -> Ty {
    Rc::new(Type::Forall(name, body))
}

pub fn bang(inner: Ty) -> Ty {
    Rc::new(Type::Bang(inner))
}

/// Node count: variables weigh 1, each connective adds 1.
pub fn ty_size(t: &Ty) -> u64 {
    match &**t {
        Type::Var(_) => 1,
        Type::Arrow(a, b) => ty_size(a) + ty_size(b) + 1,
        Type::Forall(_, a) | Type::Bang(a) => ty_size(a) + 1,
    }
}

pub fn free_ty_vars(t: &Ty) -> BTreeSet<Symbol> {
    fn go(t: &Ty, bound: &mut Vec<Symbol>, acc: &mut BTreeSet<Symbol>) {
        match &**t {
            Type::Var(v) => {
                if !bound.contains(v) {
                    acc.insert(*v);
                }
            }
            Type::Arrow(a, b) => {
                go(a, bound, acc);
                go(b, bound, acc);
            }
            Type::Forall(v, a) => {
                bound.push(*v);
                go(a, bound, acc);
                bound.pop();
            }
            Type::Bang(a) => go(a, bound, acc),
        }
    }
    let mut acc = BTreeSet::new();
    go(t, &mut Vec::new(), &mut acc);
    acc
}

pub fn is_closed_ty(t: &Ty) -> bool {
    free_ty_vars(t).is_empty()
}

/// True when the type mentions no modality at all. These are the types of
/// the modality-free fragment, the only ones translation and the eraser and
/// duplicator synthesizers operate on.
pub fn is_modality_free(t: &Ty) -> bool {
    match &**t {
        Type::Var(_) => true,
        Type::Arrow(a, b) => is_modality_free(a) && is_modality_free(b),
        Type::Forall(_, a) => is_modality_free(a),
        Type::Bang(_) => false,
    }
}

/// A type is strictly exponential when it is `#s` at the root. Everything
/// else is a linear type `A` (arrows may still carry `#` on the left).
pub fn is_strictly_exponential(t: &Ty) -> bool {
    matches!(&**t, Type::Bang(_))
}

pub fn is_linear_ty(t: &Ty) -> bool {
    !is_strictly_exponential(t)
}

/// Capture-avoiding substitution of `replacement` for free `var`.
pub fn subst_ty(t: &Ty, var: Symbol, replacement: &Ty) -> Ty {
    if !free_ty_vars(t).contains(&var) {
        return t.clone();
    }
    match &**t {
        Type::Var(v) => {
            if *v == var {
                replacement.clone()
            } else {
                t.clone()
            }
        }
        Type::Arrow(a, b) => arrow(subst_ty(a, var, replacement), subst_ty(b, var, replacement)),
        Type::Forall(b, body) => {
            if *b == var {
                t.clone()
            } else if free_ty_vars(replacement).contains(b) {
                let taken: BTreeSet<Symbol> =
                    free_ty_vars(body).union(&free_ty_vars(replacement)).copied().collect();
                let fresh = Symbol::freshen(*b, |s| !taken.contains(&s) && s != var);
                let renamed = subst_ty(body, *b, &tvar_s(fresh));
                forall(fresh, subst_ty(&renamed, var, replacement))
            } else {
                forall(*b, subst_ty(body, var, replacement))
            }
        }
        Type::Bang(a) => bang(subst_ty(a, var, replacement)),
    }
}

pub fn alpha_eq_ty(a: &Ty, b: &Ty) -> bool {
    fn go(a: &Ty, b: &Ty, pairs: &mut Vec<(Symbol, Symbol)>) -> bool {
        match (&**a, &**b) {
            (Type::Var(x), Type::Var(y)) => {
                for (l, r) in pairs.iter().rev() {
                    if l == x || r == y {
                        return l == x && r == y;
                    }
                }
                x == y
            }
            (Type::Arrow(a1, a2), Type::Arrow(b1, b2)) => {
                go(a1, b1, pairs) && go(a2, b2, pairs)
            }
            (Type::Forall(x, a1), Type::Forall(y, b1)) => {
                pairs.push((*x, *y));
                let r = go(a1, b1, pairs);
                pairs.pop();
                r
            }
            (Type::Bang(a1), Type::Bang(b1)) => go(a1, b1, pairs),
            _ => false,
        }
    }
    Rc::ptr_eq(a, b) || go(a, b, &mut Vec::new())
}

/// Canonical bound-variable renaming, used as a registry key and to compare
/// types structurally after [`alpha_eq_ty`]-insensitive operations. Bound
/// variables are renamed to `b1, b2, ...` in traversal order, skipping names
/// free in the input.
pub fn alpha_normalize_ty(t: &Ty) -> Ty {
    fn go(t: &Ty, counter: &mut u64, free: &BTreeSet<Symbol>) -> Ty {
        match &**t {
            Type::Var(_) => t.clone(),
            Type::Arrow(a, b) => arrow(go(a, counter, free), go(b, counter, free)),
            Type::Forall(v, body) => {
                let name = loop {
                    *counter += 1;
                    let cand = Symbol::intern(&format!("b{}", *counter));
                    if !free.contains(&cand) {
                        break cand;
                    }
                };
                let renamed = subst_ty(body, *v, &tvar_s(name));
                forall(name, go(&renamed, counter, free))
            }
            Type::Bang(a) => bang(go(a, counter, free)),
        }
    }
    let free = free_ty_vars(t);
    go(t, &mut 0, &free)
}

/// Polarity scan: does the type contain a universal quantifier at the given
/// polarity? Arrows flip the polarity of their left component; the modality
/// does not.
pub fn has_forall_at(t: &Ty, positive: bool) -> bool {
    match &**t {
        Type::Var(_) => false,
        Type::Arrow(a, b) => has_forall_at(a, !positive) || has_forall_at(b, positive),
        Type::Forall(_, a) => positive || has_forall_at(a, positive),
        Type::Bang(a) => has_forall_at(a, positive),
    }
}

fn has_forall_shallow(t: &Ty, positive: bool) -> bool {
    // Like `has_forall_at` but also reports positive quantifiers under other
    // positive quantifiers (the `positive ||` shortcut above stops at the
    // first one, which is all its callers need).
    match &**t {
        Type::Var(_) => false,
        Type::Arrow(a, b) => has_forall_shallow(a, !positive) || has_forall_shallow(b, positive),
        Type::Forall(_, a) => positive || has_forall_shallow(a, positive),
        Type::Bang(a) => has_forall_shallow(a, positive),
    }
}

/// A type is lazy when it has no negative universal quantification.
pub fn is_lazy_ty(t: &Ty) -> bool {
    !has_forall_at(t, false)
}

/// A judgment `x1:s1, ..., xn:sn |- M : t` is lazy when the conclusion type
/// is lazy and no context type has a positive universal quantification.
pub fn is_lazy_judgment<'a>(ctx_types: impl IntoIterator<Item = &'a Ty>, goal: &Ty) -> bool {
    is_lazy_ty(goal) && ctx_types.into_iter().all(|t| !has_forall_shallow(t, true))
}

/// Well-formedness of full types: every `#s` must have `s` closed, modality
/// free, and without negative quantifiers.
pub fn check_ty_wf(t: &Ty) -> Result<()> {
    match &**t {
        Type::Var(_) => Ok(()),
        Type::Arrow(a, b) => {
            check_ty_wf(a)?;
            if matches!(&**b, Type::Bang(_)) {
                return Err(KernelError::IllFormedModality {
                    span: None,
                    message: "an arrow cannot return a modal type".into(),
                });
            }
            check_ty_wf(b)
        }
        Type::Forall(_, a) => {
            if matches!(&**a, Type::Bang(_)) {
                return Err(KernelError::IllFormedModality {
                    span: None,
                    message: "a quantifier cannot bind over a modal type".into(),
                });
            }
            check_ty_wf(a)
        }
        Type::Bang(a) => {
            if !is_closed_ty(a) {
                let frees: Vec<String> =
                    free_ty_vars(a).iter().map(|s| s.as_str().to_string()).collect();
                return Err(KernelError::IllFormedModality {
                    span: None,
                    message: format!("modality on open type (free: {})", frees.join(", ")),
                });
            }
            if has_forall_at(a, false) {
                return Err(KernelError::IllFormedModality {
                    span: None,
                    message: "modality on a type with a negative quantifier".into(),
                });
            }
            check_ty_wf(a)
        }
    }
}

/// Syntactic class of a modality-free type.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TypeClass {
    /// `P ::= a | S -o P | forall a. P`
    Pi1,
    /// `S ::= a | P -o S`
    Sigma1,
    /// Quantifier-free types belong to both classes.
    Both,
    Neither,
}

fn is_pi1(t: &Ty) -> bool {
    match &**t {
        Type::Var(_) => true,
        Type::Arrow(a, b) => is_sigma1(a) && is_pi1(b),
        Type::Forall(_, a) => is_pi1(a),
        Type::Bang(_) => false,
    }
}

fn is_sigma1(t: &Ty) -> bool {
    match &**t {
        Type::Var(_) => true,
        Type::Arrow(a, b) => is_pi1(a) && is_sigma1(b),
        Type::Forall(_, _) => false,
        Type::Bang(_) => false,
    }
}

pub fn type_classify(t: &Ty) -> TypeClass {
    match (is_pi1(t), is_sigma1(t)) {
        (true, true) => TypeClass::Both,
        (true, false) => TypeClass::Pi1,
        (false, true) => TypeClass::Sigma1,
        (false, false) => TypeClass::Neither,
    }
}

/// Ground types are the closed `Pi1` linear types: exactly the types whose
/// values can be erased and duplicated.
pub fn is_ground(t: &Ty) -> bool {
    is_modality_free(t) && is_closed_ty(t) && is_pi1(t)
}

/// Strip every quantifier, replacing each bound variable with a fresh `g0,
/// g1, ...` drawn top-down, left-to-right. Idempotent on quantifier-free
/// types. The input must be modality free.
pub fn strip_minus(t: &Ty) -> Ty {
    assert!(is_modality_free(t), "strip_minus expects a modality-free type");
    fn go(t: &Ty, counter: &mut u64, avoid: &BTreeSet<Symbol>) -> Ty {
        match &**t {
            Type::Var(_) => t.clone(),
            Type::Arrow(a, b) => {
                let left = go(a, counter, avoid);
                let right = go(b, counter, avoid);
                arrow(left, right)
            }
            Type::Forall(v, body) => {
                let name = loop {
                    let cand = Symbol::intern(&format!("g{}", *counter));
                    *counter += 1;
                    if !avoid.contains(&cand) {
                        break cand;
                    }
                };
                go(&subst_ty(body, *v, &tvar_s(name)), counter, avoid)
            }
            Type::Bang(_) => unreachable!(),
        }
    }
    let avoid = free_ty_vars(t);
    go(t, &mut 0, &avoid)
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // The full precedence-aware printer lives in crate::print.
        write!(f, "{}", crate::print::ty_to_string_node(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sugar;

    #[test]
    fn sizes_of_pinned_types() {
        assert_eq!(ty_size(&sugar::unit_ty()), 4);
        assert_eq!(ty_size(&sugar::bool_ty()), 13);
        assert_eq!(ty_size(&strip_minus(&sugar::unit_ty())), 3);
        assert_eq!(ty_size(&strip_minus(&sugar::bool_ty())), 11);
    }

    #[test]
    fn quantifier_free_sizes_are_odd() {
        for t in [sugar::unit_ty(), sugar::bool_ty()] {
            assert_eq!(ty_size(&strip_minus(&t)) % 2, 1);
        }
    }

    #[test]
    fn strip_is_deterministic_and_idempotent() {
        let b = sugar::bool_ty();
        let g0 = tvar("g0");
        let g1 = tvar("g1");
        let expected = arrow(
            g0.clone(),
            arrow(
                g0.clone(),
                arrow(arrow(g0.clone(), arrow(g0.clone(), g1.clone())), g1.clone()),
            ),
        );
        let stripped = strip_minus(&b);
        assert_eq!(stripped, expected);
        assert_eq!(strip_minus(&stripped), stripped);

        let one = sugar::unit_ty();
        assert_eq!(strip_minus(&one), arrow(g0.clone(), g0));
    }

    #[test]
    fn strip_avoids_captured_free_names() {
        // forall a. a -o g0 must not reuse g0 for the bound variable.
        let t = forall(Symbol::intern("a"), arrow(tvar("a"), tvar("g0")));
        let stripped = strip_minus(&t);
        assert_eq!(stripped, arrow(tvar("g1"), tvar("g0")));
    }

    #[test]
    fn substitution_avoids_capture() {
        // (forall b. a -o b){ b / a } must rename the binder.
        let t = forall(Symbol::intern("b"), arrow(tvar("a"), tvar("b")));
        let r = subst_ty(&t, Symbol::intern("a"), &tvar("b"));
        match &*r {
            Type::Forall(v, body) => {
                assert_ne!(v.as_str(), "b");
                assert_eq!(**body, *arrow(tvar("b"), tvar_s(*v)));
            }
            other => panic!("expected a quantifier, got {other:?}"),
        }
    }

    #[test]
    fn alpha_equivalence_and_normalization() {
        let t1 = forall(Symbol::intern("a"), arrow(tvar("a"), tvar("a")));
        let t2 = forall(Symbol::intern("c"), arrow(tvar("c"), tvar("c")));
        assert!(alpha_eq_ty(&t1, &t2));
        assert_eq!(alpha_normalize_ty(&t1), alpha_normalize_ty(&t2));
        let t3 = forall(Symbol::intern("a"), arrow(tvar("a"), tvar("b")));
        assert!(!alpha_eq_ty(&t1, &t3));
    }

    #[test]
    fn classification_of_pinned_types() {
        assert_eq!(type_classify(&sugar::unit_ty()), TypeClass::Pi1);
        assert_eq!(type_classify(&sugar::bool_ty()), TypeClass::Pi1);
        assert!(is_ground(&sugar::bool_ty()));
        // N = #1 -o 1 is not even modality free.
        assert_eq!(type_classify(&sugar::nat_ty()), TypeClass::Neither);
        // S -o a with S = (forall b. b) -o a is Pi1 but not Sigma1.
        let s = arrow(forall(Symbol::intern("b"), tvar("b")), tvar("a"));
        assert_eq!(type_classify(&s), TypeClass::Sigma1);
        assert_eq!(type_classify(&arrow(s, tvar("a"))), TypeClass::Pi1);
        let qf = arrow(tvar("a"), tvar("a"));
        assert_eq!(type_classify(&qf), TypeClass::Both);
    }

    #[test]
    fn classification_matches_polarity_scan() {
        // On quantifier-positioned grammar classes the two views coincide.
        for t in [
            sugar::unit_ty(),
            sugar::bool_ty(),
            arrow(sugar::unit_ty(), sugar::unit_ty()),
            forall(Symbol::intern("a"), arrow(tvar("a"), tvar("a"))),
            arrow(forall(Symbol::intern("b"), tvar("b")), tvar("a")),
        ] {
            assert_eq!(is_pi1(&t), !has_forall_at(&t, false), "pi1 vs polarity on {t}");
            assert_eq!(is_sigma1(&t), !has_forall_at(&t, true), "sigma1 vs polarity on {t}");
        }
    }

    #[test]
    fn modality_well_formedness() {
        let one = sugar::unit_ty();
        assert!(check_ty_wf(&bang(one.clone())).is_ok());
        assert!(check_ty_wf(&bang(bang(one.clone()))).is_ok());
        assert!(check_ty_wf(&bang(sugar::bool_ty())).is_ok());
        // N itself is fine: the modality sits on 1 only.
        assert!(check_ty_wf(&sugar::nat_ty()).is_ok());
        // Open type under the modality.
        assert!(check_ty_wf(&bang(tvar("a"))).is_err());
        // #N puts the quantifier of the inner 1 in negative position.
        assert!(check_ty_wf(&bang(sugar::nat_ty())).is_err());
        // Same for #(1 -o 1): any closed left side of an arrow quantifies negatively.
        assert!(check_ty_wf(&bang(arrow(one.clone(), one.clone()))).is_err());
        // Arrows never return a modal type.
        assert!(check_ty_wf(&arrow(one.clone(), bang(one.clone()))).is_err());
    }

    #[test]
    fn lazy_types_and_judgments() {
        let one = sugar::unit_ty();
        let nat = sugar::nat_ty();
        assert!(is_lazy_ty(&one));
        assert!(is_lazy_ty(&sugar::bool_ty()));
        assert!(!is_lazy_ty(&nat), "N quantifies negatively under the modality argument");
        let qf = arrow(tvar("a"), tvar("a"));
        // Any #s context type is closed, hence quantifies positively.
        assert!(!is_lazy_judgment([&bang(one.clone())], &qf));
        assert!(!is_lazy_judgment([&one], &qf));
        // Open quantifier-free context types are fine.
        assert!(is_lazy_judgment([&qf], &qf));
        assert!(is_lazy_judgment([], &sugar::bool_ty()));
    }
}
