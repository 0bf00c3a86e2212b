//! Pretty-printers for types and terms.
//!
//! Types always display with the `1` and `(x)` shorthands when the
//! second-order encoding is recognized. Terms print raw by default; a
//! sugared mode folds identities, pairs and pair eliminations back into
//! `I`, `<M, N>` and `let ... be x, y in ...`.

use crate::symbol::Symbol;
use crate::term::{Term, TermNode};
use crate::ty::{free_ty_vars, Ty, Type};
use std::rc::Rc;

/// Recognize `forall a. a -o a`.
fn as_unit(t: &Ty) -> bool {
    if let Type::Forall(a, body) = &**t {
        if let Type::Arrow(l, r) = &**body {
            return matches!((&**l, &**r), (Type::Var(x), Type::Var(y)) if x == a && y == a);
        }
    }
    false
}

/// Recognize `forall c. (A -o B -o c) -o c` with `c` not free in `A`, `B`.
fn as_tensor(t: &Ty) -> Option<(Ty, Ty)> {
    let Type::Forall(c, body) = &**t else { return None };
    let Type::Arrow(l, r) = &**body else { return None };
    let Type::Var(rv) = &**r else { return None };
    if rv != c {
        return None;
    }
    let Type::Arrow(a, inner) = &**l else { return None };
    let Type::Arrow(b, res) = &**inner else { return None };
    let Type::Var(resv) = &**res else { return None };
    if resv != c {
        return None;
    }
    if free_ty_vars(a).contains(c) || free_ty_vars(b).contains(c) {
        return None;
    }
    Some((a.clone(), b.clone()))
}

// Precedence: 0 forall (extends right), 1 arrow (right-assoc), 2 tensor
// (left-assoc), 3 atom.
fn ty_fmt(t: &Ty, level: u8, sugar: bool, out: &mut String) {
    if sugar && as_unit(t) {
        out.push('1');
        return;
    }
    if sugar {
        if let Some((a, b)) = as_tensor(t) {
            let parens = level > 2;
            if parens {
                out.push('(');
            }
            ty_fmt(&a, 2, sugar, out);
            out.push_str(" (x) ");
            ty_fmt(&b, 3, sugar, out);
            if parens {
                out.push(')');
            }
            return;
        }
    }
    match &**t {
        Type::Var(v) => out.push_str(v.as_str()),
        Type::Arrow(a, b) => {
            let parens = level > 1;
            if parens {
                out.push('(');
            }
            ty_fmt(a, 2, sugar, out);
            out.push_str(" -o ");
            ty_fmt(b, 1, sugar, out);
            if parens {
                out.push(')');
            }
        }
        Type::Forall(v, body) => {
            let parens = level > 0;
            if parens {
                out.push('(');
            }
            out.push_str("forall ");
            out.push_str(v.as_str());
            out.push_str(". ");
            ty_fmt(body, 0, sugar, out);
            if parens {
                out.push(')');
            }
        }
        Type::Bang(a) => {
            out.push('#');
            ty_fmt(a, 3, sugar, out);
        }
    }
}

pub fn ty_to_string(t: &Ty) -> String {
    let mut s = String::new();
    ty_fmt(t, 0, true, &mut s);
    s
}

pub fn ty_to_string_raw(t: &Ty) -> String {
    let mut s = String::new();
    ty_fmt(t, 0, false, &mut s);
    s
}

pub fn ty_to_string_node(t: &Type) -> String {
    ty_to_string(&Rc::new(t.clone()))
}

fn as_identity(t: &Term) -> bool {
    if let TermNode::Lam(x, body) = t.node() {
        return matches!(body.node(), TermNode::Var(v) if v == x);
    }
    false
}

/// Recognize `\z. z M N` with `z` fresh for `M`, `N`.
fn as_pair(t: &Term) -> Option<(&Term, &Term)> {
    let TermNode::Lam(z, body) = t.node() else { return None };
    let TermNode::App(zm, n) = body.node() else { return None };
    let TermNode::App(zv, m) = zm.node() else { return None };
    if !matches!(zv.node(), TermNode::Var(v) if v == z) {
        return None;
    }
    if m.has_free(*z) || n.has_free(*z) {
        return None;
    }
    Some((m, n))
}

/// Recognize `M (\x. \y. N)` as `let M be x, y in N`, skipping scrutinees
/// that are themselves abstractions (those stay visible as beta redexes).
fn as_let_pair(t: &Term) -> Option<(&Term, Symbol, Symbol, &Term)> {
    let TermNode::App(f, arg) = t.node() else { return None };
    if matches!(f.node(), TermNode::Lam(_, _)) {
        return None;
    }
    let TermNode::Lam(x, inner) = arg.node() else { return None };
    let TermNode::Lam(y, body) = inner.node() else { return None };
    Some((f, *x, *y, body))
}

// Precedence: 0 open forms (lambda, discard, copy, let), 1 application,
// 2 atom.
fn term_fmt(t: &Term, level: u8, sugar: bool, out: &mut String) {
    if sugar {
        if as_identity(t) {
            out.push('I');
            return;
        }
        if let Some((m, n)) = as_pair(t) {
            out.push('<');
            term_fmt(m, 0, sugar, out);
            out.push_str(", ");
            term_fmt(n, 0, sugar, out);
            out.push('>');
            return;
        }
        if let Some((m, x, y, body)) = as_let_pair(t) {
            let parens = level > 0;
            if parens {
                out.push('(');
            }
            out.push_str("let ");
            term_fmt(m, 1, sugar, out);
            out.push_str(" be ");
            out.push_str(x.as_str());
            out.push_str(", ");
            out.push_str(y.as_str());
            out.push_str(" in ");
            term_fmt(body, 0, sugar, out);
            if parens {
                out.push(')');
            }
            return;
        }
    }
    match t.node() {
        TermNode::Var(v) => out.push_str(v.as_str()),
        TermNode::Lam(x, body) => {
            let parens = level > 0;
            if parens {
                out.push('(');
            }
            out.push('\\');
            out.push_str(x.as_str());
            out.push_str(". ");
            term_fmt(body, 0, sugar, out);
            if parens {
                out.push(')');
            }
        }
        TermNode::App(f, a) => {
            let parens = level > 1;
            if parens {
                out.push('(');
            }
            term_fmt(f, 1, sugar, out);
            out.push(' ');
            term_fmt(a, 2, sugar, out);
            if parens {
                out.push(')');
            }
        }
        TermNode::Discard { ann, scrutinee, body } => {
            let parens = level > 0;
            if parens {
                out.push('(');
            }
            out.push_str("discard[");
            out.push_str(&ty_to_string(ann));
            out.push_str("] ");
            term_fmt(scrutinee, 1, sugar, out);
            out.push_str(" in ");
            term_fmt(body, 0, sugar, out);
            if parens {
                out.push(')');
            }
        }
        TermNode::Copy { ann, witness, scrutinee, left, right, body } => {
            let parens = level > 0;
            if parens {
                out.push('(');
            }
            out.push_str("copy[");
            out.push_str(&ty_to_string(ann));
            out.push_str("; ");
            term_fmt(witness, 0, sugar, out);
            out.push_str("] ");
            term_fmt(scrutinee, 1, sugar, out);
            out.push_str(" as ");
            out.push_str(left.as_str());
            out.push_str(", ");
            out.push_str(right.as_str());
            out.push_str(" in ");
            term_fmt(body, 0, sugar, out);
            if parens {
                out.push(')');
            }
        }
    }
}

pub fn term_to_string(t: &Term) -> String {
    let mut s = String::new();
    term_fmt(t, 0, false, &mut s);
    s
}

pub fn term_to_string_sugared(t: &Term) -> String {
    let mut s = String::new();
    term_fmt(t, 0, true, &mut s);
    s
}
