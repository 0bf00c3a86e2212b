//! Cut classification and the lazy elimination strategy.
//!
//! A cut node is classified by the rules ending its two premises. Axiom cuts
//! have an axiom on either side. A right rule meeting its matching left rule
//! on the cut variable is principal: the implication and quantifier pairs
//! count as multiplicative, the promotion/dereliction, promotion/weakening
//! and promotion/contraction pairs as exponential. Every other combination
//! commutes: the cut can be pushed into one of its premises without changing
//! the derivation size.
//!
//! Elimination runs in rounds. Step one removes every commuting and axiom
//! cut, topmost first, which only rearranges the tree. Step two fires a
//! single multiplicative cut or, failing that, a single exponential cut that
//! is safe (closed left context) and lazy (left subject is a value); firing
//! an exponential cut whose left premise is open would duplicate or erase an
//! open term, so such cuts are never fired and are reported as deadlocks.
//! The rounds repeat until no cut can be fired; on inputs without deadlocks
//! the result is cut free and its subject is the reduct of the original one.

use std::collections::BTreeSet;

use crate::derivation::{
    check, deriv_subst_ty, mk_ax, mk_contr, mk_cut, mk_der, mk_forall_l, mk_forall_r, mk_impl_l,
    mk_impl_r, mk_prom, mk_weak, Context, Derivation, Rule, System,
};
use crate::error::{KernelError, Result};
use crate::print;
use crate::symbol::Symbol;
use crate::term::{alpha_eq, subst, TermNode};
use crate::ty::{alpha_eq_ty, free_ty_vars, subst_ty, tvar_s, Ty, Type};

// ---- node signatures ----
//
// Rewriting a proof tree needs the variable bookkeeping that a checked node
// stores only implicitly in its judgments. The helpers below recover it by
// diffing premise contexts against the conclusion.

fn try_join(a: &Context, b: &Context) -> Option<Context> {
    let mut out = a.0.clone();
    for (v, t) in &b.0 {
        if a.lookup(*v).is_some() {
            return None;
        }
        out.push((*v, t.clone()));
    }
    Some(Context(out))
}

/// The variable a cut consumes: the right-context entry typed by the left
/// conclusion whose removal and substitution reproduce the stored judgment.
pub(crate) fn cut_var(d: &Derivation) -> Symbol {
    let l = d.premises()[0].conclusion();
    let r = d.premises()[1].conclusion();
    let c = d.conclusion();
    for (v, t) in &r.ctx.0 {
        if !alpha_eq_ty(t, &l.ty) {
            continue;
        }
        let Some(ctx) = try_join(&l.ctx, &r.ctx.without(*v)) else { continue };
        if ctx.same(&c.ctx) && alpha_eq(&subst(&r.subject, *v, &l.subject), &c.subject) {
            return *v;
        }
    }
    panic!("cut node with no identifiable cut variable");
}

/// The abstraction variable of a right implication node.
pub(crate) fn impl_r_binder(d: &Derivation) -> Symbol {
    let prem = d.premises()[0].conclusion().ctx.dom();
    let concl = d.conclusion().ctx.dom();
    let mut diff = prem.difference(&concl);
    let x = diff.next().expect("right implication without a bound variable");
    *x
}

/// The pair (consumed premise variable, introduced arrow variable) of a left
/// implication node.
pub(crate) fn impl_l_vars(d: &Derivation) -> (Symbol, Symbol) {
    let arg = d.premises()[0].conclusion();
    let main = d.premises()[1].conclusion();
    let c = d.conclusion();
    for (x, xt) in &main.ctx.0 {
        let arrow_ty = crate::ty::arrow(arg.ty.clone(), xt.clone());
        let mut rest: BTreeSet<Symbol> = arg.ctx.dom();
        rest.extend(main.ctx.without(*x).dom());
        for (y, yt) in &c.ctx.0 {
            if rest.contains(y) || !alpha_eq_ty(yt, &arrow_ty) {
                continue;
            }
            let Some(base) = try_join(&arg.ctx, &main.ctx.without(*x)) else { continue };
            let expect =
                subst(&main.subject, *x, &crate::term::app(crate::term::var(*y), arg.subject.clone()));
            if base.with(*y, arrow_ty.clone()).same(&c.ctx) && alpha_eq(&expect, &c.subject) {
                return (*x, *y);
            }
        }
    }
    panic!("left implication node with no identifiable variables");
}

/// The instantiated variable of a left quantifier node, with its quantified
/// type as stored in the conclusion.
pub(crate) fn forall_l_var(d: &Derivation) -> (Symbol, Ty) {
    let Rule::ForallL(b) = d.rule() else { panic!("not a left quantifier node") };
    let prem = d.premises()[0].conclusion();
    let c = d.conclusion();
    // The changed entry if there is one, otherwise any entry whose quantified
    // type instantiates to its premise type (degenerate self-instantiation).
    for pass in 0..2 {
        for (v, t) in &c.ctx.0 {
            let pt = prem.ctx.lookup(*v).expect("context mismatch in left quantifier node");
            if pass == 0 && alpha_eq_ty(pt, t) {
                continue;
            }
            if let Type::Forall(alpha, body) = &**t {
                if alpha_eq_ty(pt, &subst_ty(body, *alpha, b)) {
                    return (*v, t.clone());
                }
            }
        }
    }
    panic!("left quantifier node with no identifiable variable");
}

/// The (premise variable, introduced variable) pair of a dereliction node.
pub(crate) fn der_vars(d: &Derivation) -> (Symbol, Symbol) {
    let prem = d.premises()[0].conclusion();
    let c = d.conclusion();
    let pd = prem.ctx.dom();
    let cd = c.ctx.dom();
    let from: Vec<Symbol> = pd.difference(&cd).copied().collect();
    let to: Vec<Symbol> = cd.difference(&pd).copied().collect();
    match (from.as_slice(), to.as_slice()) {
        ([x], [y]) => (*x, *y),
        ([], []) => {
            for (v, t) in &c.ctx.0 {
                let pt = prem.ctx.lookup(*v).unwrap();
                if alpha_eq_ty(t, &crate::ty::bang(pt.clone())) {
                    return (*v, *v);
                }
            }
            panic!("dereliction node with no identifiable variable");
        }
        _ => panic!("dereliction node with no identifiable variable"),
    }
}

/// The introduced variable and annotation of a weakening node, read off the
/// discard wrapper it builds.
pub(crate) fn weak_var(d: &Derivation) -> (Symbol, Ty) {
    let TermNode::Discard { ann, scrutinee, .. } = d.conclusion().subject.node() else {
        panic!("weakening node without a discard subject");
    };
    let TermNode::Var(x) = scrutinee.node() else {
        panic!("weakening node scrutinee is not a variable");
    };
    (*x, ann.clone())
}

/// The (introduced, left binder, right binder) triple of a contraction node,
/// read off the copy wrapper it builds.
pub(crate) fn contr_vars(d: &Derivation) -> (Symbol, Symbol, Symbol) {
    let TermNode::Copy { scrutinee, left, right, .. } = d.conclusion().subject.node() else {
        panic!("contraction node without a copy subject");
    };
    let TermNode::Var(x) = scrutinee.node() else {
        panic!("contraction node scrutinee is not a variable");
    };
    (*x, *left, *right)
}

// ---- renaming and spine rebuilding ----

pub(crate) fn ctx_names(d: &Derivation, out: &mut BTreeSet<Symbol>) {
    for (v, _) in &d.conclusion().ctx.0 {
        out.insert(*v);
    }
    for p in d.premises() {
        ctx_names(p, out);
    }
}

fn fresh_for(base: Symbol, d: &Derivation, extra: &BTreeSet<Symbol>) -> Symbol {
    let mut avoid = extra.clone();
    ctx_names(d, &mut avoid);
    Symbol::freshen(base, |s| !avoid.contains(&s))
}

/// Rename a free term variable throughout a derivation: context entries,
/// subjects and rule bookkeeping. Interior introductions of the new name are
/// renamed out of the way first.
pub(crate) fn rename_free_var(d: &Derivation, from: Symbol, to: Symbol) -> Derivation {
    if from == to || d.conclusion().ctx.lookup(from).is_none() {
        return d.clone();
    }
    // An introduction of `to` at this very node would collide with the
    // incoming name; move it aside before renaming.
    let introduced = match d.rule() {
        Rule::ImplL => Some(impl_l_vars(d).1),
        Rule::Der => Some(der_vars(d).1),
        Rule::Weak => Some(weak_var(d).0),
        Rule::Contr(_) => Some(contr_vars(d).0),
        _ => None,
    };
    if introduced == Some(to) && from != to {
        let mut extra = BTreeSet::new();
        extra.insert(from);
        extra.insert(to);
        let f = fresh_for(to, d, &extra);
        return rename_free_var(&rename_free_var(d, to, f), from, to);
    }
    let mut extra = BTreeSet::new();
    extra.insert(from);
    extra.insert(to);
    match d.rule().clone() {
        Rule::Ax => mk_ax(to, d.conclusion().ty.clone()),
        Rule::Cut => {
            let mut v = cut_var(d);
            let mut left = d.premises()[0].clone();
            let mut right = d.premises()[1].clone();
            if v == to {
                let f = fresh_for(v, &right, &extra);
                right = rename_free_var(&right, v, f);
                v = f;
            }
            if left.conclusion().ctx.lookup(from).is_some() {
                left = rename_free_var(&left, from, to);
            } else {
                right = rename_free_var(&right, from, to);
            }
            mk_cut(left, right, v)
        }
        Rule::ImplR => {
            let mut x = impl_r_binder(d);
            let mut prem = d.premises()[0].clone();
            if x == to {
                let f = fresh_for(x, &prem, &extra);
                prem = rename_free_var(&prem, x, f);
                x = f;
            }
            mk_impl_r(rename_free_var(&prem, from, to), x)
        }
        Rule::ImplL => {
            let (mut z, y) = impl_l_vars(d);
            let arg = d.premises()[0].clone();
            let mut main = d.premises()[1].clone();
            if z == to {
                let f = fresh_for(z, &main, &extra);
                main = rename_free_var(&main, z, f);
                z = f;
            }
            if from == y {
                mk_impl_l(arg, main, z, to)
            } else if arg.conclusion().ctx.lookup(from).is_some() {
                mk_impl_l(rename_free_var(&arg, from, to), main, z, y)
            } else {
                mk_impl_l(arg, rename_free_var(&main, from, to), z, y)
            }
        }
        Rule::ForallR(g) => {
            let Type::Forall(alpha, _) = &*d.conclusion().ty else {
                panic!("right quantifier node without a quantified conclusion");
            };
            mk_forall_r(rename_free_var(&d.premises()[0], from, to), *alpha, g)
        }
        Rule::ForallL(b) => {
            let (w, q) = forall_l_var(d);
            let prem = rename_free_var(&d.premises()[0], from, to);
            mk_forall_l(prem, if w == from { to } else { w }, q, b)
        }
        Rule::Prom => mk_prom(rename_free_var(&d.premises()[0], from, to)),
        Rule::Der => {
            let (mut x, y) = der_vars(d);
            let mut prem = d.premises()[0].clone();
            if x == to {
                let f = fresh_for(x, &prem, &extra);
                prem = rename_free_var(&prem, x, f);
                x = f;
            }
            if from == y {
                mk_der(prem, x, to)
            } else {
                mk_der(rename_free_var(&prem, from, to), x, y)
            }
        }
        Rule::Weak => {
            let (x, ann) = weak_var(d);
            if from == x {
                mk_weak(d.premises()[0].clone(), to, ann)
            } else {
                mk_weak(rename_free_var(&d.premises()[0], from, to), x, ann)
            }
        }
        Rule::Contr(_) => {
            let (x, mut y, mut z) = contr_vars(d);
            let mut main = d.premises()[0].clone();
            let wit = d.premises()[1].clone();
            if y == to {
                let f = fresh_for(y, &main, &extra);
                main = rename_free_var(&main, y, f);
                y = f;
            }
            if z == to {
                let f = fresh_for(z, &main, &extra);
                main = rename_free_var(&main, z, f);
                z = f;
            }
            if from == x {
                mk_contr(main, wit, to, y, z)
            } else {
                mk_contr(rename_free_var(&main, from, to), wit, x, y, z)
            }
        }
    }
}

/// Rename `var` inside `d` when it clashes with one of the forbidden names.
fn avoid_clash(
    d: &Derivation,
    var: Symbol,
    forbidden: &BTreeSet<Symbol>,
) -> (Derivation, Symbol) {
    if !forbidden.contains(&var) {
        return (d.clone(), var);
    }
    let fresh = fresh_for(var, d, forbidden);
    (rename_free_var(d, var, fresh), fresh)
}

/// Re-derive a node over replacement premises. The premises must keep the
/// context names and conclusion types of the originals; only subjects may
/// differ (which is what cut steps below an ancestor change).
fn rebuild(old: &Derivation, mut prems: Vec<Derivation>) -> Derivation {
    match old.rule().clone() {
        Rule::Ax => old.clone(),
        Rule::Cut => {
            let v = cut_var(old);
            let r = prems.pop().unwrap();
            let l = prems.pop().unwrap();
            mk_cut(l, r, v)
        }
        Rule::ImplR => mk_impl_r(prems.pop().unwrap(), impl_r_binder(old)),
        Rule::ImplL => {
            let (x, y) = impl_l_vars(old);
            let main = prems.pop().unwrap();
            let arg = prems.pop().unwrap();
            mk_impl_l(arg, main, x, y)
        }
        Rule::ForallR(g) => {
            let Type::Forall(alpha, _) = &*old.conclusion().ty else {
                panic!("right quantifier node without a quantified conclusion");
            };
            mk_forall_r(prems.pop().unwrap(), *alpha, g)
        }
        Rule::ForallL(b) => {
            let (w, q) = forall_l_var(old);
            mk_forall_l(prems.pop().unwrap(), w, q, b)
        }
        Rule::Prom => mk_prom(prems.pop().unwrap()),
        Rule::Der => {
            let (x, y) = der_vars(old);
            mk_der(prems.pop().unwrap(), x, y)
        }
        Rule::Weak => {
            let (x, ann) = weak_var(old);
            mk_weak(prems.pop().unwrap(), x, ann)
        }
        Rule::Contr(_) => {
            let (x, y, z) = contr_vars(old);
            let wit = prems.pop().unwrap();
            let main = prems.pop().unwrap();
            mk_contr(main, wit, x, y, z)
        }
    }
}

/// Replace the subtree at `path` and re-derive every ancestor, so that the
/// subjects rippling down from the rewritten node stay consistent.
fn replace_rebuilding(root: &Derivation, path: &[usize], new_sub: Derivation) -> Derivation {
    if path.is_empty() {
        return new_sub;
    }
    let mut prems: Vec<Derivation> = root.premises().to_vec();
    prems[path[0]] = replace_rebuilding(&prems[path[0]], &path[1..], new_sub);
    rebuild(root, prems)
}

// ---- classification ----

/// The two principal pairs that stay within the quantified linear fragment.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum MultKind {
    ImplPair,
    ForallPair,
}

/// The three principal pairs rooted at a promotion: against dereliction,
/// weakening and contraction.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ExpKind {
    PD,
    PW,
    PC,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CutShape {
    AxiomCut,
    Multiplicative(MultKind),
    Exponential(ExpKind),
    Commuting,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct CutClass {
    pub shape: CutShape,
    /// Exponential with a value on the left: firing it only copies or drops
    /// finished data.
    pub lazy: bool,
    /// Every cut is safe except an exponential one over a nonempty left
    /// context, which would copy or drop an open term.
    pub safe: bool,
}

impl CutClass {
    pub fn is_exponential(&self) -> bool {
        matches!(self.shape, CutShape::Exponential(_))
    }

    pub fn is_deadlock(&self) -> bool {
        !self.safe
    }
}

fn classify_node(sub: &Derivation) -> CutClass {
    let left = &sub.premises()[0];
    let right = &sub.premises()[1];
    let v = cut_var(sub);
    let shape = match (left.rule(), right.rule()) {
        (Rule::Ax, _) | (_, Rule::Ax) => CutShape::AxiomCut,
        (Rule::ImplR, Rule::ImplL) if impl_l_vars(right).1 == v => {
            CutShape::Multiplicative(MultKind::ImplPair)
        }
        (Rule::ForallR(_), Rule::ForallL(_)) if forall_l_var(right).0 == v => {
            CutShape::Multiplicative(MultKind::ForallPair)
        }
        (Rule::Prom, Rule::Der) if der_vars(right).1 == v => CutShape::Exponential(ExpKind::PD),
        (Rule::Prom, Rule::Weak) if weak_var(right).0 == v => CutShape::Exponential(ExpKind::PW),
        (Rule::Prom, Rule::Contr(_)) if contr_vars(right).0 == v => {
            CutShape::Exponential(ExpKind::PC)
        }
        _ => CutShape::Commuting,
    };
    let exponential = matches!(shape, CutShape::Exponential(_));
    CutClass {
        shape,
        lazy: exponential && left.conclusion().subject.is_value(),
        safe: !(exponential && !left.conclusion().ctx.is_empty()),
    }
}

pub fn classify_cut(d: &Derivation, path: &[usize]) -> Result<CutClass> {
    let sub = d.subderivation(path).ok_or(KernelError::NotACut { path: path.to_vec() })?;
    if !matches!(sub.rule(), Rule::Cut) {
        return Err(KernelError::NotACut { path: path.to_vec() });
    }
    Ok(classify_node(sub))
}

/// All cut nodes with their classes, in preorder.
pub fn find_cuts(d: &Derivation) -> Vec<(Vec<usize>, CutClass)> {
    fn go(d: &Derivation, path: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, CutClass)>) {
        if matches!(d.rule(), Rule::Cut) {
            out.push((path.clone(), classify_node(d)));
        }
        for (i, p) in d.premises().iter().enumerate() {
            path.push(i);
            go(p, path, out);
            path.pop();
        }
    }
    let mut out = Vec::new();
    go(d, &mut Vec::new(), &mut out);
    out
}

/// Topmost first, then leftmost: the pinned processing order.
pub(crate) fn pick_topmost(
    cuts: impl Iterator<Item = (Vec<usize>, CutClass)>,
) -> Option<(Vec<usize>, CutClass)> {
    cuts.max_by(|(a, _), (b, _)| a.len().cmp(&b.len()).then_with(|| b.cmp(a)))
}

/// The topmost safe exponential cut, the one whose left premise is farthest
/// from any other cut and therefore first to become a value.
pub fn find_safe_cut(d: &Derivation) -> Option<Vec<usize>> {
    pick_topmost(find_cuts(d).into_iter().filter(|(_, c)| c.is_exponential() && c.safe))
        .map(|(p, _)| p)
}

// ---- elimination ----

fn deadlock_message(left: &Derivation) -> String {
    format!(
        "cannot duplicate or erase the open term `{}` (left context: {})",
        print::term_to_string(&left.conclusion().subject),
        left.conclusion().ctx
    )
}

/// Fire the cut at `path` once and rebuild the surrounding tree. Exponential
/// cuts must be safe and lazy; anything else is reported as deadlocked.
pub fn eliminate(d: &Derivation, path: &[usize]) -> Result<Derivation> {
    let class = classify_cut(d, path)?;
    let sub = d.subderivation(path).unwrap();
    let left = sub.premises()[0].clone();
    let right = sub.premises()[1].clone();
    let v = cut_var(sub);
    let new_sub = match class.shape {
        CutShape::AxiomCut => {
            if matches!(right.rule(), Rule::Ax) {
                left
            } else {
                let x0 = left.conclusion().ctx.0[0].0;
                rename_free_var(&right, v, x0)
            }
        }
        CutShape::Multiplicative(MultKind::ImplPair) => {
            let xb = impl_r_binder(&left);
            let body = left.premises()[0].clone();
            let (z, _) = impl_l_vars(&right);
            let arg = right.premises()[0].clone();
            let main = right.premises()[1].clone();
            mk_cut(mk_cut(arg, body, xb), main, z)
        }
        CutShape::Multiplicative(MultKind::ForallPair) => {
            let Rule::ForallR(gamma) = left.rule().clone() else { unreachable!() };
            let Rule::ForallL(b) = right.rule().clone() else { unreachable!() };
            let body = left.premises()[0].clone();
            let used = right.premises()[0].clone();
            mk_cut(deriv_subst_ty(&body, gamma, &b), used, v)
        }
        CutShape::Exponential(kind) => {
            if !class.safe {
                return Err(KernelError::DeadlockedCut(deadlock_message(&left)));
            }
            if !class.lazy {
                return Err(KernelError::DeadlockedCut(format!(
                    "left subject `{}` is not a value",
                    print::term_to_string(&left.conclusion().subject)
                )));
            }
            match kind {
                ExpKind::PD => {
                    let val = left.premises()[0].clone();
                    let (from, _) = der_vars(&right);
                    mk_cut(val, right.premises()[0].clone(), from)
                }
                ExpKind::PW => right.premises()[0].clone(),
                ExpKind::PC => {
                    let (_, y, z) = contr_vars(&right);
                    let main = right.premises()[0].clone();
                    mk_cut(left.clone(), mk_cut(left, main, y), z)
                }
            }
        }
        CutShape::Commuting => match left.rule() {
            Rule::ImplL | Rule::ForallL(_) | Rule::Der | Rule::Weak | Rule::Contr(_) | Rule::Cut => {
                commute_left(&left, &right, v)
            }
            Rule::ImplR | Rule::ForallR(_) | Rule::Prom => commute_right(&left, &right, v),
            Rule::Ax => unreachable!("axiom pairs are classified as axiom cuts"),
        },
    };
    Ok(replace_rebuilding(d, path, new_sub))
}

/// Push the cut into the left premise, above the rule ending it.
fn commute_left(left: &Derivation, right: &Derivation, v: Symbol) -> Derivation {
    // Premise-only variables of the left rule may clash with the incoming
    // right context once the cut moves above it.
    let forbidden: BTreeSet<Symbol> =
        right.conclusion().ctx.dom().into_iter().filter(|s| *s != v).collect();
    match left.rule().clone() {
        Rule::ImplL => {
            let (z, y) = impl_l_vars(left);
            let arg = left.premises()[0].clone();
            let main = left.premises()[1].clone();
            let (main, z) = avoid_clash(&main, z, &forbidden);
            mk_impl_l(arg, mk_cut(main, right.clone(), v), z, y)
        }
        Rule::ForallL(b) => {
            let (w, q) = forall_l_var(left);
            mk_forall_l(mk_cut(left.premises()[0].clone(), right.clone(), v), w, q, b)
        }
        Rule::Der => {
            let (x, y) = der_vars(left);
            let prem = left.premises()[0].clone();
            let (prem, x) = avoid_clash(&prem, x, &forbidden);
            mk_der(mk_cut(prem, right.clone(), v), x, y)
        }
        Rule::Weak => {
            let (x, ann) = weak_var(left);
            mk_weak(mk_cut(left.premises()[0].clone(), right.clone(), v), x, ann)
        }
        Rule::Contr(_) => {
            let (x, y, z) = contr_vars(left);
            let main = left.premises()[0].clone();
            let wit = left.premises()[1].clone();
            let (main, y) = avoid_clash(&main, y, &forbidden);
            let (main, z) = avoid_clash(&main, z, &forbidden);
            mk_contr(mk_cut(main, right.clone(), v), wit, x, y, z)
        }
        Rule::Cut => {
            let u = cut_var(left);
            let a = left.premises()[0].clone();
            let b = left.premises()[1].clone();
            let (b, u) = avoid_clash(&b, u, &forbidden);
            mk_cut(a, mk_cut(b, right.clone(), v), u)
        }
        _ => unreachable!("only left rules and cuts commute on the left"),
    }
}

/// Push the cut into the premise of the right rule that holds the cut
/// variable.
fn commute_right(left: &Derivation, right: &Derivation, v: Symbol) -> Derivation {
    let forbidden: BTreeSet<Symbol> = left.conclusion().ctx.dom();
    match right.rule().clone() {
        Rule::ImplR => {
            let xb = impl_r_binder(right);
            let prem = right.premises()[0].clone();
            let (prem, xb) = avoid_clash(&prem, xb, &forbidden);
            mk_impl_r(mk_cut(left.clone(), prem, v), xb)
        }
        Rule::ForallR(gamma) => {
            let mut prem = right.premises()[0].clone();
            let mut gamma = gamma;
            let escapes = left.conclusion().ctx.types().any(|t| free_ty_vars(t).contains(&gamma));
            if escapes {
                let mut avoid = free_ty_vars(&left.conclusion().ty);
                for t in left.conclusion().ctx.types().chain(prem.conclusion().ctx.types()) {
                    avoid.extend(free_ty_vars(t));
                }
                avoid.extend(free_ty_vars(&prem.conclusion().ty));
                avoid.insert(gamma);
                let fresh = Symbol::freshen(gamma, |s| !avoid.contains(&s));
                prem = deriv_subst_ty(&prem, gamma, &tvar_s(fresh));
                gamma = fresh;
            }
            let Type::Forall(alpha, _) = &*right.conclusion().ty else {
                panic!("right quantifier node without a quantified conclusion");
            };
            mk_forall_r(mk_cut(left.clone(), prem, v), *alpha, gamma)
        }
        Rule::Prom => mk_prom(mk_cut(left.clone(), right.premises()[0].clone(), v)),
        Rule::ImplL => {
            let (z, y) = impl_l_vars(right);
            let arg = right.premises()[0].clone();
            let main = right.premises()[1].clone();
            if arg.conclusion().ctx.lookup(v).is_some() {
                mk_impl_l(mk_cut(left.clone(), arg, v), main, z, y)
            } else {
                let (main, z) = avoid_clash(&main, z, &forbidden);
                mk_impl_l(arg, mk_cut(left.clone(), main, v), z, y)
            }
        }
        Rule::ForallL(b) => {
            let (w, q) = forall_l_var(right);
            mk_forall_l(mk_cut(left.clone(), right.premises()[0].clone(), v), w, q, b)
        }
        Rule::Der => {
            let (x, y) = der_vars(right);
            let prem = right.premises()[0].clone();
            let (prem, x) = avoid_clash(&prem, x, &forbidden);
            mk_der(mk_cut(left.clone(), prem, v), x, y)
        }
        Rule::Weak => {
            let (x, ann) = weak_var(right);
            mk_weak(mk_cut(left.clone(), right.premises()[0].clone(), v), x, ann)
        }
        Rule::Contr(_) => {
            let (x, y, z) = contr_vars(right);
            let main = right.premises()[0].clone();
            let wit = right.premises()[1].clone();
            let (main, y) = avoid_clash(&main, y, &forbidden);
            let (main, z) = avoid_clash(&main, z, &forbidden);
            mk_contr(mk_cut(left.clone(), main, v), wit, x, y, z)
        }
        Rule::Cut => {
            let u = cut_var(right);
            let a = right.premises()[0].clone();
            let b = right.premises()[1].clone();
            if a.conclusion().ctx.lookup(v).is_some() {
                mk_cut(mk_cut(left.clone(), a, v), b, u)
            } else {
                let (b, u) = avoid_clash(&b, u, &forbidden);
                mk_cut(a, mk_cut(left.clone(), b, v), u)
            }
        }
        Rule::Ax => unreachable!("axiom pairs are classified as axiom cuts"),
    }
}

// ---- the lazy strategy ----

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PrincipalStep {
    Multiplicative,
    LazyExponential,
}

#[derive(Clone, Debug)]
pub struct Round {
    pub commuting_steps: u64,
    pub axiom_steps: u64,
    pub principal: Option<PrincipalStep>,
    pub size_after: u64,
}

#[derive(Clone, Debug)]
pub struct ElimTrace {
    pub initial_size: u64,
    pub rounds: Vec<Round>,
    /// Derivation size before the run and after every round.
    pub sizes: Vec<u64>,
    pub commuting_total: u64,
    pub axiom_total: u64,
    pub multiplicative_total: u64,
    pub exponential_total: u64,
    pub total_steps: u64,
    pub residual_deadlocks: u64,
    pub residual_deadlock_paths: Vec<Vec<usize>>,
    pub final_derivation: Derivation,
}

impl ElimTrace {
    pub fn is_cut_free(&self) -> bool {
        self.final_derivation.is_cut_free()
    }

    pub fn csv_header() -> &'static str {
        "initial_size,rounds,commuting,axiom,multiplicative,exponential,residual_deadlocks,final_size"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.initial_size,
            self.rounds.len(),
            self.commuting_total,
            self.axiom_total,
            self.multiplicative_total,
            self.exponential_total,
            self.residual_deadlocks,
            self.final_derivation.size()
        )
    }
}

/// Run the lazy strategy to exhaustion: each round clears every commuting
/// and axiom cut (topmost first), then fires one multiplicative cut or,
/// failing that, one safe lazy exponential cut. Stuck exponential cuts are
/// left in the result and reported; `fuel` bounds the total step count. The
/// result of every step is re-checked.
pub fn run_lazy(d: &Derivation, fuel: u64) -> Result<ElimTrace> {
    check(d, System::Lem)?;
    let mut cur = d.clone();
    let initial_size = cur.size();
    let mut rounds = Vec::new();
    let mut sizes = vec![initial_size];
    let (mut commuting_total, mut axiom_total) = (0u64, 0u64);
    let (mut multiplicative_total, mut exponential_total) = (0u64, 0u64);
    let mut steps = 0u64;

    loop {
        let mut commuting_steps = 0u64;
        let mut axiom_steps = 0u64;
        // Step one: clear the cuts that only rearrange the tree.
        loop {
            let target = pick_topmost(find_cuts(&cur).into_iter().filter(|(_, c)| {
                matches!(c.shape, CutShape::AxiomCut | CutShape::Commuting)
            }));
            let Some((path, class)) = target else { break };
            if steps >= fuel {
                return Err(KernelError::Resource(format!(
                    "cut elimination exceeded {fuel} steps"
                )));
            }
            steps += 1;
            let before = cur.size();
            cur = eliminate(&cur, &path)?;
            check(&cur, System::Lem)?;
            match class.shape {
                CutShape::AxiomCut => {
                    axiom_steps += 1;
                    debug_assert_eq!(cur.size(), before - 2);
                }
                CutShape::Commuting => {
                    commuting_steps += 1;
                    assert_eq!(cur.size(), before, "a commuting step changed the size");
                }
                _ => unreachable!(),
            }
        }
        // Step two: one principal step, multiplicative first.
        let cuts = find_cuts(&cur);
        let principal;
        if let Some((path, _)) = pick_topmost(
            cuts.iter()
                .filter(|(_, c)| matches!(c.shape, CutShape::Multiplicative(_)))
                .cloned(),
        ) {
            if steps >= fuel {
                return Err(KernelError::Resource(format!(
                    "cut elimination exceeded {fuel} steps"
                )));
            }
            steps += 1;
            let before = cur.size();
            cur = eliminate(&cur, &path)?;
            check(&cur, System::Lem)?;
            assert!(cur.size() < before, "a multiplicative step did not shrink the derivation");
            multiplicative_total += 1;
            principal = Some(PrincipalStep::Multiplicative);
        } else if let Some((path, class)) = pick_topmost(
            cuts.iter().filter(|(_, c)| c.is_exponential() && c.safe && c.lazy).cloned(),
        ) {
            if steps >= fuel {
                return Err(KernelError::Resource(format!(
                    "cut elimination exceeded {fuel} steps"
                )));
            }
            steps += 1;
            let before = cur.size();
            cur = eliminate(&cur, &path)?;
            check(&cur, System::Lem)?;
            // Dereliction and weakening pairs always shrink the tree; the
            // contraction pair shrinks it whenever the recorded witness is at
            // least as large as the duplicated value, which the corpus
            // generators arrange by picking size-maximal witnesses.
            if !matches!(class.shape, CutShape::Exponential(ExpKind::PC)) {
                assert!(cur.size() < before, "an exponential step did not shrink the derivation");
            }
            exponential_total += 1;
            principal = Some(PrincipalStep::LazyExponential);
        } else {
            principal = None;
        }
        commuting_total += commuting_steps;
        axiom_total += axiom_steps;
        sizes.push(cur.size());
        rounds.push(Round { commuting_steps, axiom_steps, principal, size_after: cur.size() });
        if principal.is_none() {
            break;
        }
    }

    let residual_deadlock_paths: Vec<Vec<usize>> = find_cuts(&cur)
        .into_iter()
        .inspect(|(_, c)| {
            debug_assert!(c.is_exponential(), "a non-exponential cut survived the strategy");
        })
        .filter(|(_, c)| c.is_deadlock())
        .map(|(p, _)| p)
        .collect();
    Ok(ElimTrace {
        initial_size,
        rounds,
        sizes,
        commuting_total,
        axiom_total,
        multiplicative_total,
        exponential_total,
        total_steps: steps,
        residual_deadlocks: residual_deadlock_paths.len() as u64,
        residual_deadlock_paths,
        final_derivation: cur,
    })
}
