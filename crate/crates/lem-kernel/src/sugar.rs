//! Second-order encodings of the derived datatypes and the pinned boolean
//! gadgets.
//!
//! The unit `1 = forall a. a -o a`, tensor `A (x) B = forall c. (A -o B -o
//! c) -o c` and the booleans `B = forall a. a -o a -o a (x) a` are sugar
//! over the two kernel connectives; pairs and the `let` eliminators expand
//! to plain applications.

use crate::symbol::Symbol;
use crate::term::{app, lam, var, Term};
use crate::ty::{arrow, forall, free_ty_vars, tvar_s, Ty};

pub fn id() -> Term {
    let x = Symbol::intern("x");
    lam(x, var(x))
}

pub fn unit_ty() -> Ty {
    let a = Symbol::intern("a");
    forall(a, arrow(tvar_s(a), tvar_s(a)))
}

pub fn tensor_ty(left: Ty, right: Ty) -> Ty {
    let mut taken = free_ty_vars(&left);
    taken.extend(free_ty_vars(&right));
    let c = Symbol::freshen(Symbol::intern("c"), |s| !taken.contains(&s));
    arrow_chain_forall(c, left, right)
}

fn arrow_chain_forall(c: Symbol, left: Ty, right: Ty) -> Ty {
    forall(c, arrow(arrow(left, arrow(right, tvar_s(c))), tvar_s(c)))
}

/// Left-nested n-ary tensor: `[A, B, C]` becomes `(A (x) B) (x) C`.
pub fn tensor_tys(parts: &[Ty]) -> Ty {
    assert!(!parts.is_empty(), "empty tensor");
    let mut acc = parts[0].clone();
    for p in &parts[1..] {
        acc = tensor_ty(acc, p.clone());
    }
    acc
}

pub fn bool_ty() -> Ty {
    let a = Symbol::intern("a");
    forall(
        a,
        arrow(tvar_s(a), arrow(tvar_s(a), tensor_ty(tvar_s(a), tvar_s(a)))),
    )
}

/// `N = #1 -o 1`: the numeral type.
pub fn nat_ty() -> Ty {
    arrow(crate::ty::bang(unit_ty()), unit_ty())
}

/// `<M, N> = \z. z M N` with `z` fresh for both components.
pub fn pair(m: Term, n: Term) -> Term {
    let z = Symbol::freshen(Symbol::intern("z"), |s| !m.has_free(s) && !n.has_free(s));
    lam(z, app(app(var(z), m), n))
}

/// Left-nested tuple of two or more components.
pub fn tuple(parts: &[Term]) -> Term {
    assert!(parts.len() >= 2, "tuple needs at least two components");
    let mut acc = pair(parts[0].clone(), parts[1].clone());
    for p in &parts[2..] {
        acc = pair(acc, p.clone());
    }
    acc
}

/// `let M be x,y in N = M (\x. \y. N)`.
pub fn let_pair(scrutinee: Term, x: Symbol, y: Symbol, body: Term) -> Term {
    app(scrutinee, lam(x, lam(y, body)))
}

/// `let M be I in N = M N`.
pub fn let_unit(scrutinee: Term, body: Term) -> Term {
    app(scrutinee, body)
}

/// `M . N = \z. M (N z)`.
pub fn compose(m: Term, n: Term) -> Term {
    let z = Symbol::freshen(Symbol::intern("z"), |s| !m.has_free(s) && !n.has_free(s));
    lam(z, app(m, app(n, var(z))))
}

/// `tt = \x.\y.\z. z x y`.
pub fn tt() -> Term {
    let (x, y, z) = (Symbol::intern("x"), Symbol::intern("y"), Symbol::intern("z"));
    lam(x, lam(y, lam(z, app(app(var(z), var(x)), var(y)))))
}

/// `ff = \x.\y.\z. z y x`.
pub fn ff() -> Term {
    let (x, y, z) = (Symbol::intern("x"), Symbol::intern("y"), Symbol::intern("z"));
    lam(x, lam(y, lam(z, app(app(var(z), var(y)), var(x)))))
}

/// The pinned boolean eraser `\z. let z I I be x,y in let y be I in x`,
/// which unsugars to `\z. z I I (\x.\y. y x)`.
pub fn bool_eraser() -> Term {
    let (z, x, y) = (Symbol::intern("z"), Symbol::intern("x"), Symbol::intern("y"));
    lam(
        z,
        app(
            app(app(var(z), id()), id()),
            lam(x, lam(y, app(var(y), var(x)))),
        ),
    )
}

/// The pinned linear first projection for boolean pairs:
/// `pi1 = \z. z (\x.\y. (E_B y) x)`.
pub fn bool_pi1() -> Term {
    let (z, x, y) = (Symbol::intern("z"), Symbol::intern("x"), Symbol::intern("y"));
    lam(
        z,
        app(
            var(z),
            lam(x, lam(y, app(app(bool_eraser(), var(y)), var(x)))),
        ),
    )
}

/// n-ary abstraction helper.
pub fn lams(binders: &[Symbol], body: Term) -> Term {
    binders.iter().rev().fold(body, |acc, b| lam(*b, acc))
}

/// Left-nested application `head a1 ... an`.
pub fn apps(head: Term, args: impl IntoIterator<Item = Term>) -> Term {
    args.into_iter().fold(head, app)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ty::{alpha_eq_ty, check_ty_wf, is_ground, ty_size, Type};

    #[test]
    fn encoded_types_are_well_formed_ground() {
        for t in [unit_ty(), bool_ty(), tensor_ty(bool_ty(), bool_ty())] {
            check_ty_wf(&t).unwrap();
            assert!(is_ground(&t), "{t} should be ground");
        }
        check_ty_wf(&nat_ty()).unwrap();
        assert!(!is_ground(&nat_ty()));
    }

    #[test]
    fn tensor_nests_left() {
        let parts = [unit_ty(), unit_ty(), unit_ty()];
        let t = tensor_tys(&parts);
        assert!(alpha_eq_ty(&t, &tensor_ty(tensor_ty(unit_ty(), unit_ty()), unit_ty())));
        match &*t {
            Type::Forall(_, _) => {}
            other => panic!("tensor should be a quantified type, got {other:?}"),
        }
    }

    #[test]
    fn gadget_shapes() {
        assert_eq!(id().size(), 2);
        assert_eq!(tt().size(), 8);
        assert_eq!(ff().size(), 8);
        assert!(tt().is_value() && ff().is_value());
        assert!(!crate::term::alpha_eq(&tt(), &ff()));
        assert_eq!(bool_eraser().size(), 14);
        assert!(bool_eraser().is_value());
        // pi1 applies the eraser under its binders, so it is not normal.
        assert!(bool_pi1().is_closed() && bool_pi1().is_pure() && !bool_pi1().is_value());
    }

    #[test]
    fn pair_is_the_standard_encoding() {
        let p = pair(tt(), ff());
        assert!(p.is_value());
        assert_eq!(p.size(), tt().size() + ff().size() + 4);
        // A pair of open components picks a fresh package variable.
        let q = pair(var(Symbol::intern("z")), id());
        assert_eq!(q.free_vars().len(), 1);
    }

    #[test]
    fn type_sizes_match_pinned_values() {
        assert_eq!(ty_size(&unit_ty()), 4);
        assert_eq!(ty_size(&bool_ty()), 13);
    }
}
