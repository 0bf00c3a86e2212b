//! Subject-directed construction of derivations.
//!
//! `elaborate` turns a term plus a goal judgment into a checking derivation.
//! It is syntax-directed: the goal type drives the right rules (promotion,
//! then quantifier introduction), the term drives everything else. Linearity
//! makes context splitting deterministic, so the only genuine choice points
//! are quantifier instantiations whose type does not appear in the result
//! (supplied by hints) and the types of arguments in beta redexes (inferred
//! for variables, otherwise hinted).
//!
//! Every instantiation and redex type the run decides on, inferred or
//! hinted, is recorded; `subject_reduction_check` replays reduction steps
//! re-elaborating each reduct with those recordings as the hint pool.

use crate::derivation::{
    check, mk_ax, mk_contr, mk_cut, mk_der, mk_forall_l, mk_forall_r, mk_impl_l, mk_impl_r,
    mk_prom, mk_weak, Context, Derivation, Rule, System,
};
use crate::error::{KernelError, Result};
use crate::rewrite::{self, RedexKind};
use crate::symbol::Symbol;
use crate::term::{self, subst, Term, TermNode};
use crate::ty::{alpha_eq_ty, bang, free_ty_vars, is_linear_ty, subst_ty, tvar_s, Ty, Type};
use std::collections::BTreeSet;

/// Explicit choices elaboration cannot make on its own, consumed in order.
#[derive(Clone, Debug, Default)]
pub struct Hints {
    /// Quantifier instantiations that do not occur in the goal.
    pub insts: Vec<Ty>,
    /// Types of non-variable arguments under a non-variable head.
    pub cut_tys: Vec<Ty>,
}

impl Hints {
    pub fn insts(tys: Vec<Ty>) -> Hints {
        Hints { insts: tys, cut_tys: Vec::new() }
    }

    pub fn cuts(tys: Vec<Ty>) -> Hints {
        Hints { insts: Vec::new(), cut_tys: tys }
    }

    pub fn is_empty(&self) -> bool {
        self.insts.is_empty() && self.cut_tys.is_empty()
    }
}

#[derive(Debug)]
pub struct Elaborated {
    pub derivation: Derivation,
    /// Every instantiation and argument-type decision, in the order made;
    /// suitable as a hint pool for re-elaborating a reduct.
    pub used: Hints,
}

struct St {
    insts: std::collections::VecDeque<Ty>,
    cut_tys: std::collections::VecDeque<Ty>,
    used: Hints,
    fresh_seed: u64,
}

impl St {
    fn new(hints: &Hints) -> St {
        St {
            insts: hints.insts.iter().cloned().collect(),
            cut_tys: hints.cut_tys.iter().cloned().collect(),
            used: Hints::default(),
            fresh_seed: 0,
        }
    }

    fn take_inst(&mut self, what: &str) -> Result<Ty> {
        self.insts
            .pop_front()
            .ok_or_else(|| KernelError::NeedsHint(format!("instantiation for {what}")))
    }

    fn take_cut_ty(&mut self, what: &str) -> Result<Ty> {
        self.cut_tys
            .pop_front()
            .ok_or_else(|| KernelError::NeedsHint(format!("argument type for {what}")))
    }
}

pub fn elaborate(ctx: &Context, m: &Term, goal: &Ty, hints: &Hints) -> Result<Elaborated> {
    if !ctx.names_unique() {
        return Err(KernelError::Unprovable("context declares a variable twice".into()));
    }
    let fv: BTreeSet<Symbol> = m.free_vars().iter().copied().collect();
    if fv != ctx.dom() {
        return Err(KernelError::Unprovable(format!(
            "context domain {{{}}} does not match the subject's free variables {{{}}}",
            ctx.dom().iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", "),
            fv.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", "),
        )));
    }
    let mut st = St::new(hints);
    let d = elab(ctx, m, goal, &mut st)?;
    debug_assert!(check(&d, System::Lem).is_ok());
    Ok(Elaborated { derivation: d, used: st.used })
}

fn mismatch(m: &Term, goal: &Ty, why: &str) -> KernelError {
    KernelError::Unprovable(format!(
        "{} does not check at {}: {why}",
        crate::print::term_to_string_sugared(m),
        crate::print::ty_to_string(goal)
    ))
}

fn elab(ctx: &Context, m: &Term, goal: &Ty, st: &mut St) -> Result<Derivation> {
    // Goal-directed right rules first. A strictly exponential conclusion
    // forces promotion at the root (its context must already be strictly
    // exponential), and a quantified goal admits introduction eagerly.
    if let Type::Bang(inner) = &**goal {
        if !ctx.is_strictly_exponential() {
            return Err(mismatch(m, goal, "promotion needs a strictly exponential context"));
        }
        let prem = elab(ctx, m, inner, st)?;
        return Ok(mk_prom(prem));
    }
    if let Type::Forall(alpha, body) = &**goal {
        let mut avoid = free_ty_vars(goal).clone();
        for t in ctx.types() {
            avoid.extend(free_ty_vars(t).iter().copied());
        }
        let gamma = fresh_ty_var(&avoid, st);
        let opened = subst_ty(body, *alpha, &tvar_s(gamma));
        let prem = elab(ctx, m, &opened, st)?;
        return Ok(mk_forall_r(prem, *alpha, gamma));
    }

    match m.node() {
        TermNode::Lam(x, body) => {
            let Type::Arrow(dom, cod) = &**goal else {
                return Err(mismatch(m, goal, "an abstraction needs an arrow goal"));
            };
            let (x, body) = if ctx.lookup(*x).is_some() {
                let fresh = Symbol::freshen(*x, |s| ctx.lookup(s).is_none() && !m.has_free(s));
                (fresh, subst(body, *x, &term::var(fresh)))
            } else {
                (*x, body.clone())
            };
            let prem = elab(&ctx.with(x, dom.clone()), &body, cod, st)?;
            Ok(mk_impl_r(prem, x))
        }
        TermNode::Var(x) => {
            let t = ctx.lookup(*x).expect("context coverage checked").clone();
            elab_head(&Context::empty(), *x, &t, &[], goal, st)
        }
        TermNode::App(..) => {
            let (head, args) = spine(m);
            match head.node() {
                TermNode::Var(x) => {
                    let t = ctx.lookup(*x).expect("context coverage checked").clone();
                    elab_head(&ctx.without(*x), *x, &t, &args, goal, st)
                }
                _ => {
                    // Non-variable head: cut it against a fresh variable
                    // applied to the same arguments. The head's type is the
                    // chain of argument types into the goal.
                    let mut chain = goal.clone();
                    for a in args.iter().rev() {
                        let at = arg_ty(ctx, a, st)?;
                        chain = crate::ty::arrow(at, chain);
                    }
                    let head_ctx = restrict(ctx, &head);
                    let rest = subtract(ctx, &head_ctx);
                    let z = fresh_term_var("z", &rest, m, st);
                    let left = elab(&head_ctx, &head, &chain, st)?;
                    let right = elab_head(&rest, z, &chain, &args, goal, st)?;
                    Ok(mk_cut(left, right, z))
                }
            }
        }
        TermNode::Discard { ann, scrutinee, body } => {
            let sharp = bang(ann.clone());
            match scrutinee.node() {
                TermNode::Var(x) => {
                    let xt = ctx.lookup(*x).expect("context coverage checked");
                    if !alpha_eq_ty(xt, &sharp) {
                        return Err(mismatch(m, goal, "discard annotation disagrees with the context"));
                    }
                    let prem = elab(&ctx.without(*x), body, goal, st)?;
                    Ok(mk_weak(prem, *x, ann.clone()))
                }
                _ => {
                    let scr_ctx = restrict(ctx, scrutinee);
                    let rest = subtract(ctx, &scr_ctx);
                    let z = fresh_term_var("z", &rest, m, st);
                    let left = elab(&scr_ctx, scrutinee, &sharp, st)?;
                    let inner = elab(&rest, body, goal, st)?;
                    let right = mk_weak(inner, z, ann.clone());
                    Ok(mk_cut(left, right, z))
                }
            }
        }
        TermNode::Copy { ann, witness, scrutinee, left, right, body } => {
            let sharp = bang(ann.clone());
            let wit = elab(&Context::empty(), witness, ann, st)?;
            match scrutinee.node() {
                TermNode::Var(x) => {
                    let xt = ctx.lookup(*x).expect("context coverage checked");
                    if !alpha_eq_ty(xt, &sharp) {
                        return Err(mismatch(m, goal, "copy annotation disagrees with the context"));
                    }
                    let inner_ctx =
                        ctx.without(*x).with(*left, sharp.clone()).with(*right, sharp.clone());
                    let main = elab(&inner_ctx, body, goal, st)?;
                    Ok(mk_contr(main, wit, *x, *left, *right))
                }
                _ => {
                    let scr_ctx = restrict(ctx, scrutinee);
                    let rest = subtract(ctx, &scr_ctx);
                    let z = fresh_term_var("z", &rest, m, st);
                    let dleft = elab(&scr_ctx, scrutinee, &sharp, st)?;
                    let inner_ctx = rest.with(*left, sharp.clone()).with(*right, sharp.clone());
                    let main = elab(&inner_ctx, body, goal, st)?;
                    let right_d = mk_contr(main, wit, z, *left, *right);
                    Ok(mk_cut(dleft, right_d, z))
                }
            }
        }
    }
}

/// Derive `rest, x : t |- x args… : goal` by peeling `t`: dereliction under
/// a modality, left quantifier instantiation under a quantifier, the left
/// implication rule per argument, an axiom at the end.
fn elab_head(
    rest: &Context,
    x: Symbol,
    t: &Ty,
    args: &[Term],
    goal: &Ty,
    st: &mut St,
) -> Result<Derivation> {
    match &**t {
        _ if args.is_empty() && alpha_eq_ty(t, goal) && is_linear_ty(t) => {
            if !rest.is_empty() {
                return Err(KernelError::Unprovable(format!(
                    "leftover context at variable {x}"
                )));
            }
            Ok(mk_ax(x, t.clone()))
        }
        Type::Bang(inner) => {
            let x2 = Symbol::freshen(x, |s| {
                s != x && rest.lookup(s).is_none() && !args.iter().any(|a| a.has_free(s))
            });
            let prem = elab_head(rest, x2, inner, args, goal, st)?;
            Ok(mk_der(prem, x2, x))
        }
        Type::Forall(alpha, body) => {
            let b = match infer_inst(*alpha, body, args.len(), goal) {
                Inst::Determined(b) => b,
                Inst::Undetermined => st.take_inst(&format!(
                    "{} at head variable {x}",
                    crate::print::ty_to_string(t)
                ))?,
                Inst::Refuted => {
                    return Err(mismatch(
                        &term::var(x),
                        goal,
                        "no instantiation of the quantifier fits the goal",
                    ));
                }
            };
            st.used.insts.push(b.clone());
            let prem = elab_head(rest, x, &subst_ty(body, *alpha, &b), args, goal, st)?;
            Ok(mk_forall_l(prem, x, t.clone(), b))
        }
        Type::Arrow(dom, cod) if !args.is_empty() => {
            let arg = &args[0];
            let arg_ctx = restrict(rest, arg);
            let after = subtract(rest, &arg_ctx);
            let x2 = Symbol::freshen(x, |s| {
                s != x && after.lookup(s).is_none() && !args.iter().any(|a| a.has_free(s))
            });
            let left = elab(&arg_ctx, arg, dom, st)?;
            let right = elab_head(&after, x2, cod, &args[1..], goal, st)?;
            Ok(mk_impl_l(left, right, x2, x))
        }
        _ => Err(mismatch(
            &term::var(x),
            goal,
            &format!(
                "variable of type {} applied to {} argument(s) cannot reach the goal",
                crate::print::ty_to_string(t),
                args.len()
            ),
        )),
    }
}

enum Inst {
    Determined(Ty),
    Undetermined,
    Refuted,
}

/// Find the unique instantiation making the quantified type fit: peel as
/// many arrows as there are arguments and match the result against the
/// goal. One-metavariable matching is complete, so a structural mismatch
/// refutes every candidate; only a blocked peel or an absent variable
/// leaves the choice open.
fn infer_inst(alpha: Symbol, body: &Ty, nargs: usize, goal: &Ty) -> Inst {
    let mut result = body.clone();
    for _ in 0..nargs {
        match &*result {
            Type::Arrow(_, cod) => result = cod.clone(),
            // A nested quantifier before the arguments run out blocks the
            // structural match; the caller falls back to a hint.
            _ => return Inst::Undetermined,
        }
    }
    let mut sol = None;
    let mut env = Vec::new();
    if match_one(&result, alpha, goal, &mut env, &mut sol) {
        match sol {
            Some(b) => Inst::Determined(b),
            None => Inst::Undetermined,
        }
    } else {
        Inst::Refuted
    }
}

/// One-metavariable matching: find B with pattern[B/var] alpha-equal to
/// target. Binders are tracked pairwise; a solution may not mention
/// target-side bound variables.
fn match_one(
    pat: &Ty,
    var: Symbol,
    tgt: &Ty,
    env: &mut Vec<(Symbol, Symbol)>,
    sol: &mut Option<Ty>,
) -> bool {
    if let Type::Var(v) = &**pat {
        let shadowed = env.iter().any(|(p, _)| *p == *v);
        if *v == var && !shadowed {
            let frees = free_ty_vars(tgt);
            if env.iter().any(|(_, t)| frees.contains(t)) {
                return false;
            }
            return match sol {
                Some(s) => alpha_eq_ty(s, tgt),
                None => {
                    *sol = Some(tgt.clone());
                    true
                }
            };
        }
    }
    match (&**pat, &**tgt) {
        (Type::Var(a), Type::Var(b)) => {
            for (p, t) in env.iter().rev() {
                if *p == *a || *t == *b {
                    return *p == *a && *t == *b;
                }
            }
            a == b
        }
        (Type::Arrow(a1, b1), Type::Arrow(a2, b2)) => {
            match_one(a1, var, a2, env, sol) && match_one(b1, var, b2, env, sol)
        }
        (Type::Bang(a), Type::Bang(b)) => match_one(a, var, b, env, sol),
        (Type::Forall(a, b1), Type::Forall(c, b2)) => {
            env.push((*a, *c));
            let r = match_one(b1, var, b2, env, sol);
            env.pop();
            r
        }
        _ => false,
    }
}

/// The type of an argument in a cut chain: read off the context for a
/// variable, otherwise consume a hint.
fn arg_ty(ctx: &Context, arg: &Term, st: &mut St) -> Result<Ty> {
    let t = match arg.node() {
        TermNode::Var(v) => ctx.lookup(*v).expect("context coverage checked").clone(),
        _ => st.take_cut_ty(&crate::print::term_to_string_sugared(arg))?,
    };
    st.used.cut_tys.push(t.clone());
    Ok(t)
}

fn spine(m: &Term) -> (Term, Vec<Term>) {
    let mut args = Vec::new();
    let mut cur = m.clone();
    while let TermNode::App(f, a) = cur.node() {
        args.push(a.clone());
        cur = f.clone();
    }
    args.reverse();
    (cur, args)
}

fn restrict(ctx: &Context, m: &Term) -> Context {
    Context(ctx.0.iter().filter(|(x, _)| m.has_free(*x)).cloned().collect())
}

fn subtract(ctx: &Context, taken: &Context) -> Context {
    Context(ctx.0.iter().filter(|(x, _)| taken.lookup(*x).is_none()).cloned().collect())
}

fn fresh_ty_var(avoid: &BTreeSet<Symbol>, st: &mut St) -> Symbol {
    // Eigenvariables also avoid anything this elaboration minted before,
    // keeping nested introductions distinct.
    loop {
        let cand = Symbol::intern(&format!("g{}", st.fresh_seed));
        st.fresh_seed += 1;
        if !avoid.contains(&cand) {
            return cand;
        }
    }
}

fn fresh_term_var(base: &str, ctx: &Context, m: &Term, st: &mut St) -> Symbol {
    let _ = st;
    Symbol::freshen(Symbol::intern(base), |s| ctx.lookup(s).is_none() && !m.has_free(s))
}

// ---- subject reduction replay ----

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepOutcome {
    Preserved,
    /// The reduct seems fine but re-elaboration ran out of decisions to
    /// replay; distinct from a refutation.
    NeedsNewHints(String),
    Failed(String),
}

#[derive(Debug)]
pub struct StepReport {
    pub kind: RedexKind,
    pub term_after: Term,
    pub outcome: StepOutcome,
}

#[derive(Debug)]
pub struct SubjectReductionReport {
    pub steps: Vec<StepReport>,
    pub final_term: Term,
}

impl SubjectReductionReport {
    pub fn all_preserved(&self) -> bool {
        self.steps.iter().all(|s| s.outcome == StepOutcome::Preserved)
    }

    pub fn genuine_failures(&self) -> usize {
        self.steps.iter().filter(|s| matches!(s.outcome, StepOutcome::Failed(_))).count()
    }

    pub fn hint_gaps(&self) -> usize {
        self.steps.iter().filter(|s| matches!(s.outcome, StepOutcome::NeedsNewHints(_))).count()
    }
}

/// Harvest every decision recorded in a derivation as a replay hint pool:
/// left quantifier payloads in pre-order, plus each cut's left conclusion
/// type.
pub fn harvest_hints(d: &Derivation) -> Hints {
    let mut h = Hints::default();
    fn go(d: &Derivation, h: &mut Hints) {
        match d.rule() {
            Rule::ForallL(b) => h.insts.push(b.clone()),
            Rule::Cut => h.cut_tys.push(d.premises()[0].conclusion().ty.clone()),
            _ => {}
        }
        for p in d.premises() {
            go(p, h);
        }
    }
    go(d, &mut h);
    h
}

/// Step the subject of a checked derivation and re-elaborate each reduct
/// against the same judgment, reusing the decisions recorded so far.
pub fn subject_reduction_check(d: &Derivation, steps: u64) -> SubjectReductionReport {
    let j = d.conclusion().clone();
    let mut pool = harvest_hints(d);
    let mut current = j.subject.clone();
    let mut out = Vec::new();
    for _ in 0..steps {
        let Some((next, kind, _path)) = rewrite::step(&current) else {
            break;
        };
        let outcome = match elaborate(&j.ctx, &next, &j.ty, &pool) {
            Ok(el) => {
                pool = harvest_hints(&el.derivation);
                StepOutcome::Preserved
            }
            Err(KernelError::NeedsHint(msg)) => StepOutcome::NeedsNewHints(msg),
            Err(e) => StepOutcome::Failed(e.to_string()),
        };
        let stop = outcome != StepOutcome::Preserved;
        out.push(StepReport { kind, term_after: next.clone(), outcome });
        current = next;
        if stop {
            break;
        }
    }
    SubjectReductionReport { steps: out, final_term: current }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivation::{check, System};
    use crate::parse::{parse_term, parse_ty};
    use crate::sugar;
    use crate::term::alpha_eq;

    fn elab_closed(m: &str, goal: &str, hints: Hints) -> Result<Elaborated> {
        let m = parse_term(m).unwrap();
        let goal = parse_ty(goal).unwrap();
        elaborate(&Context::empty(), &m, &goal, &hints)
    }

    #[test]
    fn identity_at_unit() {
        let el = elab_closed("I", "1", Hints::default()).unwrap();
        let j = check(&el.derivation, System::Imll2).unwrap();
        assert!(alpha_eq(&j.subject, &sugar::id()));
        assert!(el.used.is_empty());
    }

    #[test]
    fn booleans_check_with_quantifier_introduction_last() {
        for b in ["\\x. \\y. <x, y>", "\\x. \\y. <y, x>"] {
            let el = elab_closed(b, "forall a. a -o a -o a (x) a", Hints::default()).unwrap();
            let j = check(&el.derivation, System::Imll2).unwrap();
            assert!(alpha_eq_ty(&j.ty, &sugar::bool_ty()));
            assert!(matches!(el.derivation.rule(), Rule::ForallR(_)));
        }
    }

    #[test]
    fn variable_at_modal_type_uses_promotion_then_dereliction() {
        let x = Symbol::intern("x");
        let sharp_unit = bang(sugar::unit_ty());
        let ctx = Context::single(x, sharp_unit.clone());
        let el = elaborate(&ctx, &term::var(x), &sharp_unit, &Hints::default()).unwrap();
        check(&el.derivation, System::Lem).unwrap();
        assert!(matches!(el.derivation.rule(), Rule::Prom));
        // Under the promotion the quantified unit opens before the
        // dereliction peels the context's modality.
        let ders = el.derivation.count_rule(&|r| matches!(r, Rule::Der));
        assert_eq!(ders, 1);
    }

    #[test]
    fn application_against_known_context() {
        let src = "f u";
        let m = parse_term(src).unwrap();
        let ctx = Context::empty()
            .with(Symbol::intern("f"), parse_ty("1 -o 1").unwrap())
            .with(Symbol::intern("u"), parse_ty("1").unwrap());
        let el = elaborate(&ctx, &m, &parse_ty("1").unwrap(), &Hints::default()).unwrap();
        let j = check(&el.derivation, System::Imll2).unwrap();
        assert!(alpha_eq(&j.subject, &m));
    }

    #[test]
    fn instantiation_is_inferred_from_the_goal() {
        // x : 1 used at b -o b forces the inner quantifier to b.
        let x = Symbol::intern("x");
        let ctx = Context::single(x, sugar::unit_ty());
        let goal = parse_ty("b -o b").unwrap();
        let el = elaborate(&ctx, &term::var(x), &goal, &Hints::default()).unwrap();
        check(&el.derivation, System::Imll2).unwrap();
        assert_eq!(el.used.insts.len(), 1);
        assert!(alpha_eq_ty(&el.used.insts[0], &parse_ty("b").unwrap()));
    }

    #[test]
    fn numerals_elaborate_at_their_type() {
        // 0 discards its function; 2 copies it.
        let zero = "\\f. discard[1] f in I";
        let el = elab_closed(zero, "#1 -o 1", Hints::default()).unwrap();
        check(&el.derivation, System::Lem).unwrap();

        // A modality over an arrow is ill-formed; the numeral type keeps
        // it on the unit.
        assert!(crate::parse::parse_ty("#(1 -o 1) -o 1 -o 1").is_err());

        let two = "\\f. copy[1; I] f as f1, f2 in f1 (f2 I)";
        let el = elab_closed(two, "#1 -o 1", Hints::default()).unwrap();
        let j = check(&el.derivation, System::Lem).unwrap();
        assert!(alpha_eq_ty(&j.ty, &sugar::nat_ty()));
        // Both uses of f instantiate their unit at the unit type.
        assert_eq!(el.used.insts.len(), 2);
    }

    #[test]
    fn beta_redex_needs_an_argument_type() {
        let err = elab_closed("(\\x. x) I", "1", Hints::default()).unwrap_err();
        assert!(matches!(err, KernelError::NeedsHint(_)), "{err}");

        let hints = Hints::cuts(vec![parse_ty("1").unwrap()]);
        let el = elab_closed("(\\x. x) I", "1", hints).unwrap();
        let j = check(&el.derivation, System::Imll2).unwrap();
        assert!(!el.derivation.is_cut_free());
        assert!(alpha_eq(&j.subject, &parse_term("(\\x. x) I").unwrap()));
    }

    #[test]
    fn discard_of_a_value_elaborates_through_a_cut() {
        let m = "discard[1] I in \\x. x";
        let el = elab_closed(m, "1", Hints::default()).unwrap();
        let j = check(&el.derivation, System::Lem).unwrap();
        assert!(alpha_eq(&j.subject, &parse_term(m).unwrap()));
        assert!(!el.derivation.is_cut_free());
    }

    #[test]
    fn type_errors_are_distinguished_from_hint_gaps() {
        // An abstraction against the unit is refuted outright.
        let err = elab_closed("\\x. \\y. <x, y>", "1", Hints::default()).unwrap_err();
        assert!(matches!(err, KernelError::Unprovable(_)), "{err}");
        // A unit variable cannot be used at a bare type variable either:
        // one-metavariable matching refutes it, not a missing hint.
        let x = Symbol::intern("x");
        let ctx = Context::single(x, sugar::unit_ty());
        let err = elaborate(&ctx, &term::var(x), &crate::ty::tvar("b"), &Hints::default())
            .unwrap_err();
        assert!(matches!(err, KernelError::Unprovable(_)), "{err}");

        // The identity really does inhabit 1 -o 1 -o 1: the inner unit
        // instantiates at the unit itself.
        let el = elab_closed("\\x. x", "1 -o 1 -o 1", Hints::default()).unwrap();
        check(&el.derivation, System::Imll2).unwrap();
    }

    #[test]
    fn subject_reduction_on_a_redex() {
        let hints = Hints::cuts(vec![parse_ty("1").unwrap()]);
        let el = elab_closed("(\\x. x) I", "1", hints).unwrap();
        let report = subject_reduction_check(&el.derivation, 10);
        assert!(report.all_preserved(), "{:?}", report.steps);
        assert!(alpha_eq(&report.final_term, &sugar::id()));
    }

    #[test]
    fn subject_reduction_on_discard() {
        let x = Symbol::intern("w");
        let ctx = Context::single(x, sugar::bool_ty());
        let m = parse_term("discard[1] I in w").unwrap();
        let el = elaborate(&ctx, &m, &sugar::bool_ty(), &Hints::default()).unwrap();
        let report = subject_reduction_check(&el.derivation, 5);
        assert!(report.all_preserved(), "{:?}", report.steps);
        assert!(alpha_eq(&report.final_term, &term::var(x)));
    }

    #[test]
    fn subject_reduction_through_a_copy_of_a_value() {
        let m = "copy[1; I] I as a, b in <a, b>";
        let goal = "forall c. (#1 -o #1 -o c) -o c";
        let el = elab_closed(m, goal, Hints::default()).unwrap();
        let report = subject_reduction_check(&el.derivation, 10);
        assert!(report.all_preserved(), "{:?}", report.steps);
        assert!(alpha_eq(
            &report.final_term,
            &parse_term("\\z. z I I").unwrap()
        ));
    }
}
