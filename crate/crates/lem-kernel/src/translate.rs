//! Erasure of the modality and synthesis of erasers.
//!
//! Types translate homomorphically with `#t` mapped to `t`. Terms stay
//! fixed except at the two modal constructs: a discard becomes an
//! application of a synthesized eraser and a copy becomes an application of
//! a synthesized duplicator followed by a pair split. Derivations translate
//! rule by rule, with the four modal rules compiled away: promotion
//! disappears, dereliction becomes a cut with an axiom, weakening and
//! contraction become cuts against the synthesized artifacts.
//!
//! Erasers exist for every positively quantified linear type. The builder
//! recurses on the type, producing a derivation whose subject is the
//! eraser; the companion inhabitant builder supplies canonical arguments
//! for discarded functions. Both are run through full cut elimination, so
//! the published terms are beta normal and their derivations cut free.

use crate::cutelim;
use crate::derivation::{
    check_dag, mk_ax, mk_cut, mk_forall_l, mk_forall_r, mk_impl_l, mk_impl_r, Context,
    Derivation, System,
};
use crate::dup;
use crate::error::{KernelError, Result};
use crate::rewrite;
use crate::sugar;
use crate::symbol::Symbol;
use crate::term::{self, alpha_eq, Term, TermNode};
use crate::ty::{free_ty_vars, is_modality_free, subst_ty, tvar_s, type_classify, Ty, Type, TypeClass};

/// Fuel for normalizing the small synthesized artifacts.
const SYNTH_FUEL: u64 = 1_000_000;

/// Fuel for the normalization oracle inside `simulate_check`.
const SIM_FUEL: u64 = 1_000_000;

/// Erase the modality: `#t` becomes `t`, everything else is structural.
pub fn type_translate(t: &Ty) -> Ty {
    match &**t {
        Type::Var(_) => t.clone(),
        Type::Arrow(dom, cod) => crate::ty::arrow(type_translate(dom), type_translate(cod)),
        Type::Forall(alpha, body) => crate::ty::forall(*alpha, type_translate(body)),
        Type::Bang(inner) => type_translate(inner),
    }
}

/// Erase the modality pointwise across a context.
pub fn ctx_translate(ctx: &Context) -> Context {
    Context(ctx.0.iter().map(|(x, t)| (*x, type_translate(t))).collect())
}

/// Substitute `filler` for every free type variable of `t`.
pub fn fill_with(t: &Ty, filler: &Ty) -> Ty {
    let mut out = t.clone();
    for v in free_ty_vars(t) {
        out = subst_ty(&out, v, filler);
    }
    out
}

fn fill_unit(t: &Ty) -> Ty {
    fill_with(t, &sugar::unit_ty())
}

// ---- derivation composition helpers ----
//
// The synthesizers assemble derivations the way the terms are assembled:
// an application is a cut against a one-step left implication, so subjects
// and conclusions track each other by construction.

/// From `G1 => F : A -o B` and `G2 => N : A` build `G1,G2 => F N : B`.
/// The contexts must be disjoint.
pub(crate) fn apply_deriv(df: Derivation, da: Derivation) -> Derivation {
    let cod = match &*df.conclusion().ty {
        Type::Arrow(_, cod) => cod.clone(),
        other => panic!("apply_deriv on a non-arrow head: {other:?}"),
    };
    let h = fresh_for(&df, &da, "h");
    let step = mk_impl_l(da, mk_ax(Symbol::intern("r"), cod), Symbol::intern("r"), h);
    mk_cut(df, step, h)
}

/// From `G1 => M : 1` and `G2 => N : T` build `G1,G2 => M N : T`, using the
/// instantiation of `1` at `T`. The contexts must be disjoint.
pub(crate) fn apply_unit_deriv(d_one: Derivation, d_arg: Derivation) -> Derivation {
    let t = d_arg.conclusion().ty.clone();
    let h = fresh_for(&d_one, &d_arg, "h");
    let step = mk_impl_l(d_arg, mk_ax(Symbol::intern("r"), t.clone()), Symbol::intern("r"), h);
    let inst = mk_forall_l(step, h, sugar::unit_ty(), t);
    mk_cut(d_one, inst, h)
}

fn fresh_for(a: &Derivation, b: &Derivation, base: &str) -> Symbol {
    let ca = a.conclusion().ctx.clone();
    let cb = b.conclusion().ctx.clone();
    Symbol::freshen(Symbol::intern(base), move |s| {
        ca.lookup(s).is_none() && cb.lookup(s).is_none()
    })
}

/// `=> \x.x : 1`, the canonical value of the unit type.
pub(crate) fn unit_value_derivation() -> Derivation {
    let x = Symbol::intern("x");
    let g = Symbol::intern("g1");
    mk_forall_r(mk_impl_r(mk_ax(x, tvar_s(g)), x), Symbol::intern("a"), g)
}

/// Run full cut elimination; unlike the lazy strategy this reduces under
/// abstractions, so the result is cut free with a beta-normal subject.
/// Fires the topmost cut each step: a cut only fires once its premises are
/// cut free, which rules out the reassociation loop between a cut-ended
/// left premise and a cut-ended right premise.
pub(crate) fn to_cut_free(mut d: Derivation, fuel: u64) -> Result<Derivation> {
    for _ in 0..fuel {
        let Some((path, _)) = cutelim::pick_topmost(cutelim::find_cuts(&d).into_iter()) else {
            return Ok(d);
        };
        d = cutelim::eliminate(&d, &path)?;
    }
    Err(KernelError::Resource(
        "cut elimination fuel exhausted while normalizing a synthesized artifact".into(),
    ))
}

// ---- erasers and inhabitants ----

/// Derivation of the eraser at `a`: `=> E : a[1] -o 1` where `a[1]` fills
/// every free type variable with the unit type. Defined for positively
/// quantified (`Pi1`) modality-free types.
pub fn eraser_derivation(a: &Ty) -> Result<Derivation> {
    eraser_admissible(a)?;
    to_cut_free(eraser_raw(a)?, SYNTH_FUEL)
}

/// The eraser at `a` as a plain term, beta normal.
pub fn eraser_synthesize(a: &Ty) -> Result<Term> {
    Ok(eraser_derivation(a)?.conclusion().subject.clone())
}

/// Derivation of the canonical inhabitant at `b`: `=> H : b[1]`. Defined
/// for negatively quantified (`Sigma1`) modality-free types; these are
/// exactly the domains erasers consume.
pub fn inhabitant_derivation(b: &Ty) -> Result<Derivation> {
    if !is_modality_free(b) {
        return Err(KernelError::Unprovable(format!(
            "no canonical inhabitant at {}: the type mentions the modality",
            crate::print::ty_to_string(b)
        )));
    }
    to_cut_free(inhabitant_raw(b)?, SYNTH_FUEL)
}

/// The canonical inhabitant at `b` as a plain term, beta normal.
pub fn inhabitant_synthesize(b: &Ty) -> Result<Term> {
    Ok(inhabitant_derivation(b)?.conclusion().subject.clone())
}

fn eraser_admissible(a: &Ty) -> Result<()> {
    if !is_modality_free(a) {
        return Err(KernelError::Unprovable(format!(
            "no eraser at {}: the type mentions the modality",
            crate::print::ty_to_string(a)
        )));
    }
    match type_classify(a) {
        TypeClass::Pi1 | TypeClass::Both => Ok(()),
        _ => Err(KernelError::Unprovable(format!(
            "no eraser at {}: quantifiers occur in negative position",
            crate::print::ty_to_string(a)
        ))),
    }
}

fn eraser_raw(a: &Ty) -> Result<Derivation> {
    Ok(match &**a {
        Type::Var(_) => {
            let w = Symbol::intern("w");
            mk_impl_r(mk_ax(w, sugar::unit_ty()), w)
        }
        Type::Forall(_, body) => {
            // The eraser of the body, with its argument requantified.
            let inner = eraser_raw(body)?;
            let w = cutelim::impl_r_binder(&inner);
            let prem = inner.premises()[0].clone();
            mk_impl_r(mk_forall_l(prem, w, fill_unit(a), sugar::unit_ty()), w)
        }
        Type::Arrow(dom, cod) => {
            // \w. E_cod (w H_dom)
            let d_e = eraser_raw(cod)?;
            let d_h = inhabitant_raw(dom)?;
            let w = Symbol::intern("w");
            let call = mk_impl_l(d_h, mk_ax(Symbol::intern("r"), fill_unit(cod)), Symbol::intern("r"), w);
            mk_impl_r(apply_deriv(d_e, call), w)
        }
        Type::Bang(_) => {
            return Err(KernelError::Unprovable(format!(
                "no eraser at {}: the type mentions the modality",
                crate::print::ty_to_string(a)
            )))
        }
    })
}

fn inhabitant_raw(b: &Ty) -> Result<Derivation> {
    Ok(match &**b {
        Type::Var(_) => unit_value_derivation(),
        Type::Arrow(dom, cod) => {
            // \u. (E_dom u) H_cod
            let d_e = eraser_raw(dom)?;
            let d_h = inhabitant_raw(cod)?;
            let u = Symbol::intern("u");
            let erased = apply_deriv(d_e, mk_ax(u, fill_unit(dom)));
            mk_impl_r(apply_unit_deriv(erased, d_h), u)
        }
        _ => {
            return Err(KernelError::Unprovable(format!(
                "no canonical inhabitant at {}: quantifiers occur in positive position",
                crate::print::ty_to_string(b)
            )))
        }
    })
}

// ---- term translation ----

/// Translate `t` under its typing derivation. The derivation is fully
/// rechecked first; the translation itself is syntax directed, consulting
/// the stored annotations on discard and copy nodes.
pub fn term_translate(t: &Term, typing: &Derivation) -> Result<Term> {
    validate_typing(t, typing)?;
    bullet(t)
}

fn validate_typing(t: &Term, typing: &Derivation) -> Result<()> {
    check_dag(typing, System::Lem)?;
    if !alpha_eq(&typing.conclusion().subject, t) {
        return Err(KernelError::Unprovable(
            "the typing derivation does not conclude with the given term".into(),
        ));
    }
    Ok(())
}

pub(crate) fn bullet(t: &Term) -> Result<Term> {
    if t.is_pure() {
        return Ok(t.clone());
    }
    match t.node() {
        TermNode::Var(_) => Ok(t.clone()),
        TermNode::Lam(x, body) => Ok(term::lam(*x, bullet(body)?)),
        TermNode::App(f, a) => Ok(term::app(bullet(f)?, bullet(a)?)),
        TermNode::Discard { ann, scrutinee, body } => {
            let sigma = type_translate(ann);
            let e = eraser_synthesize(&sigma).map_err(|err| at_copy(err, ann))?;
            Ok(sugar::let_unit(term::app(e, bullet(scrutinee)?), bullet(body)?))
        }
        TermNode::Copy { ann, witness, scrutinee, left, right, body } => {
            let sigma = type_translate(ann);
            let wit = bullet(witness)?;
            let bundle = dup::duplicator(&sigma, &wit).map_err(|err| at_copy(err, ann))?;
            let applied = term::app(bundle.assembled.clone(), bullet(scrutinee)?);
            Ok(sugar::let_pair(applied, *left, *right, bullet(body)?))
        }
    }
}

fn at_copy(e: KernelError, ann: &Ty) -> KernelError {
    let at = format!("needed at annotation {}", crate::print::ty_to_string(ann));
    match e {
        KernelError::Resource(m) => KernelError::Resource(format!("{m} ({at})")),
        KernelError::Unprovable(m) => KernelError::Unprovable(format!("{m} ({at})")),
        other => other,
    }
}

// ---- derivation translation ----

/// Translate a derivation of the modal system into the modality-free one,
/// rule by rule. The result derives the translated subject at the
/// translated type over the translated context.
pub fn derivation_translate(d: &Derivation) -> Result<Derivation> {
    check_dag(d, System::Lem)?;
    go(d)
}

fn go(d: &Derivation) -> Result<Derivation> {
    use crate::derivation::Rule;
    let concl = d.conclusion();
    Ok(match d.rule() {
        Rule::Ax => {
            let x = concl.ctx.0[0].0;
            mk_ax(x, type_translate(&concl.ty))
        }
        Rule::Cut => {
            let x = cutelim::cut_var(d);
            mk_cut(go(&d.premises()[0])?, go(&d.premises()[1])?, x)
        }
        Rule::ImplR => mk_impl_r(go(&d.premises()[0])?, cutelim::impl_r_binder(d)),
        Rule::ImplL => {
            let (x, y) = cutelim::impl_l_vars(d);
            mk_impl_l(go(&d.premises()[0])?, go(&d.premises()[1])?, x, y)
        }
        Rule::ForallR(g) => {
            let Type::Forall(alpha, _) = &*concl.ty else {
                unreachable!("checked derivation");
            };
            mk_forall_r(go(&d.premises()[0])?, *alpha, *g)
        }
        Rule::ForallL(b) => {
            let (x, quantified) = cutelim::forall_l_var(d);
            mk_forall_l(go(&d.premises()[0])?, x, type_translate(&quantified), type_translate(b))
        }
        Rule::Prom => go(&d.premises()[0])?,
        Rule::Der => {
            // x : s in the premise becomes a cut with an axiom at s.
            let (x, y) = cutelim::der_vars(d);
            let prem = &d.premises()[0];
            let sigma = prem.conclusion().ctx.lookup(x).expect("checked derivation").clone();
            mk_cut(mk_ax(y, type_translate(&sigma)), go(prem)?, x)
        }
        Rule::Weak => {
            // Erase the discarded variable, then consume the unit.
            let (x, ann) = cutelim::weak_var(d);
            let sigma = type_translate(&ann);
            let erased = apply_deriv(eraser_derivation(&sigma).map_err(|e| at_copy(e, &ann))?, mk_ax(x, sigma));
            let main = go(&d.premises()[0])?;
            let u = fresh_for(&main, "u");
            mk_cut(erased, apply_unit_deriv(mk_ax(u, sugar::unit_ty()), main), u)
        }
        Rule::Contr(wit) => {
            // Duplicate the copied variable, then split the pair.
            let (x, l, r) = cutelim::contr_vars(d);
            let ann = match concl.ctx.lookup(x).map(|t| &**t) {
                Some(Type::Bang(inner)) => inner.clone(),
                _ => unreachable!("checked derivation"),
            };
            let sigma = type_translate(&ann);
            let wit = bullet(wit)?;
            let bundle = dup::duplicator(&sigma, &wit).map_err(|e| at_copy(e, &ann))?;
            let applied = apply_deriv(bundle.derivation.clone(), mk_ax(x, sigma.clone()));
            let main = go(&d.premises()[0])?;
            let tau = main.conclusion().ty.clone();
            let lamlam = mk_impl_r(mk_impl_r(main, r), l);
            let v = fresh_for(&lamlam, "v");
            let spine = mk_impl_l(lamlam, mk_ax(Symbol::intern("r"), tau.clone()), Symbol::intern("r"), v);
            let inst = mk_forall_l(spine, v, sugar::tensor_ty(sigma.clone(), sigma), tau);
            mk_cut(applied, inst, v)
        }
    })
}

// ---- simulation and reporting ----

/// One source step together with the normal forms of the two translations.
#[derive(Debug)]
pub struct SimulationPair {
    pub before: Term,
    pub after: Term,
    pub translated_before: Term,
    pub translated_after: Term,
    /// The translations share a beta-eta normal form.
    pub joined: bool,
    /// Normalization ran out of fuel; `joined` is then inconclusive.
    pub fuel_exhausted: bool,
}

#[derive(Debug)]
pub struct SimulationReport {
    pub pairs: Vec<SimulationPair>,
    pub all_joined: bool,
}

/// Follow up to `steps` reductions from `t` and verify that each step is
/// simulated by the translation: the translations of the two sides must
/// share a beta-eta normal form.
pub fn simulate_check(t: &Term, typing: &Derivation, steps: u64) -> Result<SimulationReport> {
    validate_typing(t, typing)?;
    let mut pairs = Vec::new();
    let mut cur = t.clone();
    for _ in 0..steps {
        let Some((next, _, _)) = rewrite::step(&cur) else { break };
        let tb = bullet(&cur)?;
        let ta = bullet(&next)?;
        let (joined, fuel_exhausted) =
            match (rewrite::beta_eta_nf(&tb, SIM_FUEL), rewrite::beta_eta_nf(&ta, SIM_FUEL)) {
                (Ok(n1), Ok(n2)) => (alpha_eq(&n1, &n2), false),
                _ => (false, true),
            };
        pairs.push(SimulationPair {
            before: cur.clone(),
            after: next.clone(),
            translated_before: tb,
            translated_after: ta,
            joined,
            fuel_exhausted,
        });
        cur = next;
    }
    let all_joined = pairs.iter().all(|p| p.joined);
    Ok(SimulationReport { pairs, all_joined })
}

/// Sizes of the source term and of its translation.
pub fn compression_report(t: &Term, typing: &Derivation) -> Result<(u64, u64)> {
    validate_typing(t, typing)?;
    let translated = bullet(t)?;
    Ok((t.size(), translated.size()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivation::check;
    use crate::elaborate::{elaborate, Hints};
    use crate::etalong::stripped_size;
    use crate::sugar::{bool_ty, id, nat_ty, pair, tensor_ty, tensor_tys, tt, unit_ty};
    use crate::term::{app, lam, var, var_named};
    use crate::ty::{alpha_eq_ty, arrow, bang, tvar};

    fn s(name: &str) -> Symbol {
        Symbol::intern(name)
    }

    fn nf(t: &Term) -> Term {
        rewrite::beta_eta_nf(t, 1_000_000).unwrap()
    }

    #[test]
    fn types_translate_homomorphically() {
        assert!(alpha_eq_ty(&type_translate(&bang(unit_ty())), &unit_ty()));
        let nat = nat_ty();
        let expected = crate::ty::forall(
            s("a"),
            arrow(arrow(tvar("a"), tvar("a")), arrow(tvar("a"), tvar("a"))),
        );
        assert!(alpha_eq_ty(&type_translate(&nat), &expected));
        // Idempotent: a modality-free type is untouched.
        let once = type_translate(&nat);
        assert!(alpha_eq_ty(&type_translate(&once), &once));
    }

    #[test]
    fn eraser_at_unit_applies_to_the_identity() {
        let e = eraser_synthesize(&unit_ty()).unwrap();
        let expected = lam(s("f"), app(var(s("f")), id()));
        assert!(alpha_eq(&e, &expected));
        assert!(alpha_eq(&nf(&app(e, id())), &id()));
    }

    #[test]
    fn eraser_at_bool_consumes_both_booleans() {
        let e = eraser_synthesize(&bool_ty()).unwrap();
        assert!(alpha_eq(&nf(&app(e.clone(), sugar::tt())), &id()));
        assert!(alpha_eq(&nf(&app(e.clone(), sugar::ff())), &id()));
        // The hand-written gadget agrees on both inputs.
        let gadget = sugar::bool_eraser();
        assert!(alpha_eq(&nf(&app(gadget.clone(), sugar::tt())), &id()));
        assert!(alpha_eq(&nf(&app(gadget, sugar::ff())), &id()));
    }

    #[test]
    fn erasers_check_at_their_declared_types() {
        for a in [
            unit_ty(),
            bool_ty(),
            tensor_ty(unit_ty(), unit_ty()),
            tensor_ty(bool_ty(), bool_ty()),
            tvar("b"),
            arrow(tvar("b"), tvar("b")),
        ] {
            let d = eraser_derivation(&a).unwrap();
            let j = check(&d, System::Imll2).unwrap();
            assert!(j.ctx.is_empty());
            let expected = arrow(fill_unit(&a), unit_ty());
            assert!(alpha_eq_ty(&j.ty, &expected), "eraser type at {a:?}");
            assert!(d.is_cut_free());
            assert!(j.subject.is_beta_normal());
        }
    }

    #[test]
    fn eraser_size_grows_linearly_in_the_type() {
        // Exact first differences over a family of tensor stacks: the
        // eraser of one more component costs a fixed amount.
        let sizes: Vec<i64> = (1..=5)
            .map(|k| {
                let a = tensor_tys(&vec![bool_ty(); k.max(2)]);
                let a = if k == 1 { bool_ty() } else { a };
                eraser_synthesize(&a).unwrap().size() as i64
            })
            .collect();
        let diffs: Vec<i64> = sizes.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(diffs.windows(2).skip(1).all(|w| w[0] == w[1]), "second difference nonzero: {sizes:?}");
        // And the eraser stays within a small multiple of the type size.
        for k in 1..=5usize {
            let a = if k == 1 { bool_ty() } else { tensor_tys(&vec![bool_ty(); k]) };
            let e = eraser_synthesize(&a).unwrap();
            assert!(e.size() <= 3 * stripped_size(&a), "eraser too large at {k} components");
        }
    }

    #[test]
    fn inhabitants_fill_function_domains() {
        let h = inhabitant_synthesize(&arrow(tvar("a"), tvar("a"))).unwrap();
        let expected = lam(s("x"), app(var(s("x")), id()));
        assert!(alpha_eq(&h, &expected));
        let d = inhabitant_derivation(&arrow(tvar("a"), tvar("a"))).unwrap();
        let j = check(&d, System::Imll2).unwrap();
        assert!(alpha_eq_ty(&j.ty, &arrow(unit_ty(), unit_ty())));
    }

    #[test]
    fn synthesis_rejects_the_wrong_polarities() {
        assert!(matches!(eraser_synthesize(&bang(unit_ty())), Err(KernelError::Unprovable(_))));
        assert!(matches!(eraser_synthesize(&nat_ty()), Err(KernelError::Unprovable(_))));
        assert!(matches!(
            eraser_synthesize(&arrow(unit_ty(), tvar("b"))),
            Err(KernelError::Unprovable(_))
        ));
        // Inhabitants live at quantifier-negative types only.
        assert!(matches!(inhabitant_synthesize(&unit_ty()), Err(KernelError::Unprovable(_))));
    }

    #[test]
    fn pure_terms_translate_to_themselves() {
        let t = id();
        let typing = elaborate(&Context::empty(), &t, &unit_ty(), &Hints::default())
            .unwrap()
            .derivation;
        let out = term_translate(&t, &typing).unwrap();
        assert!(alpha_eq(&out, &t));
    }

    #[test]
    fn discard_translates_to_an_eraser_application() {
        let w = s("w");
        let t = lam(w, term::discard(unit_ty(), var(w), id()));
        let goal = arrow(bang(unit_ty()), unit_ty());
        let typing = elaborate(&Context::empty(), &t, &goal, &Hints::default()).unwrap().derivation;
        let out = term_translate(&t, &typing).unwrap();
        let e = eraser_synthesize(&unit_ty()).unwrap();
        let expected = lam(w, sugar::let_unit(app(e, var(w)), id()));
        assert!(alpha_eq(&out, &expected));

        let td = derivation_translate(&typing).unwrap();
        let j = check(&td, System::Imll2).unwrap();
        assert!(alpha_eq(&j.subject, &out));
        assert!(alpha_eq_ty(&j.ty, &arrow(unit_ty(), unit_ty())));
        assert!(alpha_eq(&nf(&app(out, id())), &id()));
    }

    #[test]
    fn copy_translates_to_a_duplicator_application() {
        let (w, p, q) = (s("w"), s("p"), s("q"));
        let t = lam(w, term::copy(unit_ty(), id(), var(w), p, q, pair(var(p), var(q))));
        let goal = arrow(bang(unit_ty()), tensor_ty(unit_ty(), unit_ty()));
        let typing = elaborate(&Context::empty(), &t, &goal, &Hints::default()).unwrap().derivation;

        let out = term_translate(&t, &typing).unwrap();
        let bundle = dup::duplicator(&unit_ty(), &id()).unwrap();
        let expected = lam(w, sugar::let_pair(app(bundle.assembled.clone(), var(w)), p, q, pair(var(p), var(q))));
        assert!(alpha_eq(&out, &expected));

        let td = derivation_translate(&typing).unwrap();
        let j = check_dag(&td, System::Imll2).unwrap();
        assert!(alpha_eq(&j.subject, &out));

        // Behavior: feeding the identity yields two units.
        let result = nf(&app(out, id()));
        assert!(alpha_eq(&result, &nf(&pair(id(), id()))));
    }

    #[test]
    fn promotion_and_dereliction_translate_away() {
        let typing = elaborate(&Context::empty(), &id(), &bang(unit_ty()), &Hints::default())
            .unwrap()
            .derivation;
        let td = derivation_translate(&typing).unwrap();
        let j = check(&td, System::Imll2).unwrap();
        assert!(alpha_eq_ty(&j.ty, &unit_ty()));
        assert!(alpha_eq(&j.subject, &id()));
    }

    #[test]
    fn copy_reductions_are_simulated() {
        let (w, p, q) = (s("w"), s("p"), s("q"));
        let t = lam(w, term::copy(unit_ty(), id(), var(w), p, q, pair(var(p), var(q))));
        let applied = app(t, id());
        let goal = tensor_ty(unit_ty(), unit_ty());
        let typing = elaborate(
            &Context::empty(),
            &applied,
            &goal,
            &Hints::cuts(vec![bang(unit_ty())]),
        )
        .unwrap()
        .derivation;

        let report = simulate_check(&applied, &typing, 8).unwrap();
        assert_eq!(report.pairs.len(), 2);
        assert!(report.all_joined);
        assert!(report.pairs.iter().all(|p| !p.fuel_exhausted));
    }

    #[test]
    fn translation_commutes_with_substitution() {
        let x = s("x");
        let m = term::discard(unit_ty(), var(x), id());
        let n = id();
        let lhs = bullet(&term::subst(&m, x, &n)).unwrap();
        let rhs = term::subst(&bullet(&m).unwrap(), x, &bullet(&n).unwrap());
        assert!(alpha_eq(&lhs, &rhs));
    }

    #[test]
    fn compression_report_measures_both_sides() {
        let (w, p, q) = (s("w"), s("p"), s("q"));
        let t = lam(w, term::copy(unit_ty(), id(), var(w), p, q, pair(var(p), var(q))));
        let goal = arrow(bang(unit_ty()), tensor_ty(unit_ty(), unit_ty()));
        let typing = elaborate(&Context::empty(), &t, &goal, &Hints::default()).unwrap().derivation;
        let (before, after) = compression_report(&t, &typing).unwrap();
        assert_eq!(before, t.size());
        assert!(after > before, "the duplicator must enlarge the term");
    }

    #[test]
    fn variables_used_inside_erasers_do_not_leak() {
        // The eraser of a function type closes over nothing.
        let e = eraser_synthesize(&arrow(tvar("b"), tvar("b"))).unwrap();
        assert!(e.is_closed());
        assert!(alpha_eq(&nf(&app(e, id())), &id()));
        let _ = var_named("unused");
        let _ = tt();
    }
}
