//! Eta-long normal forms and bounded value enumeration.
//!
//! A cut-free derivation is eta-expanded by replacing every axiom leaf with
//! the full unfolding of its variable at its type: at an atom the variable
//! stands alone, a quantified type unfolds at its body, and an arrow type
//! wraps one abstraction whose argument is recursively unfolded before being
//! fed to the head. The expanded subject eta-reduces back to the original.
//!
//! Quantifier-free type skeletons (every bound variable replaced by a fresh
//! atom) bound the size of these forms: a term proved without instantiating
//! quantifiers is never larger than the skeleton of its judgment. That bound
//! makes the closed normal inhabitants of a ground type finitely enumerable
//! by goal-directed proof search, which is what powers duplicator synthesis
//! and witness selection elsewhere in the crate.

use std::collections::BTreeSet;

use crate::cutelim::{impl_l_vars, impl_r_binder};
use crate::derivation::{check, Derivation, Rule, System};
use crate::error::{KernelError, Result};
use crate::rewrite;
use crate::symbol::Symbol;
use crate::term::{app, lam, subst, var, Term};
use crate::ty::{subst_ty, ty_size, tvar_s, type_classify, Ty, Type, TypeClass};

/// Every name appearing in a type, bound or free.
fn atom_names(t: &Ty, out: &mut BTreeSet<Symbol>) {
    match &**t {
        Type::Var(a) => {
            out.insert(*a);
        }
        Type::Arrow(a, b) => {
            atom_names(a, out);
            atom_names(b, out);
        }
        Type::Forall(a, b) => {
            out.insert(*a);
            atom_names(b, out);
        }
        Type::Bang(a) => atom_names(a, out),
    }
}

fn fresh_atom(stem: &str, counter: &mut u64, avoid: &BTreeSet<Symbol>) -> Symbol {
    loop {
        *counter += 1;
        let s = Symbol::intern(&format!("{stem}{counter}"));
        if !avoid.contains(&s) {
            return s;
        }
    }
}

/// The quantifier-free skeleton of a type: strip every quantifier and stand
/// in a fresh atom for its variable. Undefined on modal types.
pub fn strip_foralls(t: &Ty) -> Ty {
    let mut avoid = BTreeSet::new();
    atom_names(t, &mut avoid);
    let mut counter = 0u64;
    fn go(t: &Ty, counter: &mut u64, avoid: &BTreeSet<Symbol>) -> Ty {
        match &**t {
            Type::Var(_) => t.clone(),
            Type::Arrow(a, b) => {
                crate::ty::arrow(go(a, counter, avoid), go(b, counter, avoid))
            }
            Type::Forall(a, b) => {
                let g = fresh_atom("g", counter, avoid);
                go(&subst_ty(b, *a, &tvar_s(g)), counter, avoid)
            }
            Type::Bang(_) => panic!("modal types have no quantifier-free skeleton"),
        }
    }
    go(t, &mut counter, &avoid)
}

/// Size of the quantifier-free skeleton; the size budget for normal
/// inhabitants proved without left quantifier rules.
pub fn stripped_size(t: &Ty) -> u64 {
    ty_size(&strip_foralls(t))
}

struct Binders {
    counter: u64,
}

impl Binders {
    fn next(&mut self) -> Symbol {
        self.counter += 1;
        Symbol::intern(&format!("e{}", self.counter))
    }
}

fn expand_neutral(head: Term, a: &Ty, binders: &mut Binders) -> Term {
    match &**a {
        Type::Var(_) => head,
        Type::Forall(_, b) => expand_neutral(head, b, binders),
        Type::Arrow(b, c) => {
            let y = binders.next();
            let arg = expand_neutral(var(y), b, binders);
            lam(y, expand_neutral(app(head, arg), c, binders))
        }
        Type::Bang(_) => panic!("modal types have no eta-long forms"),
    }
}

/// The full unfolding of a variable at its type.
pub fn eta_long_var(x: Symbol, a: &Ty) -> Term {
    expand_neutral(var(x), a, &mut Binders { counter: 0 })
}

/// Eta-expand the subject of a cut-free derivation by unfolding every axiom
/// leaf at its type. The result eta-reduces back to the original subject.
pub fn eta_long(d: &Derivation) -> Result<Term> {
    check(d, System::Imll2)?;
    if !d.is_cut_free() {
        return Err(KernelError::InvalidDerivation {
            path: Vec::new(),
            message: "eta-expansion requires a cut-free derivation".into(),
        });
    }
    fn go(d: &Derivation, binders: &mut Binders) -> Term {
        match d.rule() {
            Rule::Ax => {
                let (x, a) = &d.conclusion().ctx.0[0];
                expand_neutral(var(*x), a, binders)
            }
            Rule::ImplR => lam(impl_r_binder(d), go(&d.premises()[0], binders)),
            Rule::ImplL => {
                let (x, y) = impl_l_vars(d);
                let arg = go(&d.premises()[0], binders);
                let main = go(&d.premises()[1], binders);
                subst(&main, x, &app(var(y), arg))
            }
            Rule::ForallR(_) | Rule::ForallL(_) => go(&d.premises()[0], binders),
            _ => unreachable!("checked cut-free derivations have no other rules"),
        }
    }
    Ok(go(d, &mut Binders { counter: 0 }))
}

const DEFAULT_SEARCH_CEILING: u64 = 1_000_000;

type Mask = u128;

struct Search {
    /// Hypotheses in scope; indices are stable, availability is the mask.
    ctx: Vec<(Symbol, Ty)>,
    nodes: u64,
    ceiling: u64,
    var_counter: u64,
    atom_counter: u64,
    atoms_in_use: BTreeSet<Symbol>,
}

impl Search {
    fn spend(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.ceiling {
            return Err(KernelError::Resource(format!(
                "value enumeration exceeded {} search nodes",
                self.ceiling
            )));
        }
        Ok(())
    }

    /// All eta-long normal proofs of `goal` from a subset of the available
    /// hypotheses, each with the exact set it consumed.
    fn prove(&mut self, avail: Mask, goal: &Ty) -> Result<Vec<(Term, Mask)>> {
        self.spend()?;
        match &**goal {
            Type::Forall(a, b) => {
                let g = fresh_atom("g", &mut self.atom_counter, &self.atoms_in_use);
                self.atoms_in_use.insert(g);
                let body = subst_ty(b, *a, &tvar_s(g));
                self.prove(avail, &body)
            }
            Type::Arrow(b, c) => {
                self.var_counter += 1;
                let x = Symbol::intern(&format!("x{}", self.var_counter));
                self.ctx.push((x, b.clone()));
                let idx = self.ctx.len() - 1;
                if idx >= 128 {
                    return Err(KernelError::Resource(
                        "value enumeration exceeded 128 hypotheses".into(),
                    ));
                }
                let inner = self.prove(avail | (1u128 << idx), c)?;
                self.ctx.pop();
                Ok(inner
                    .into_iter()
                    .filter(|(_, m)| m & (1u128 << idx) != 0)
                    .map(|(t, m)| (lam(x, t), m & !(1u128 << idx)))
                    .collect())
            }
            Type::Var(atom) => {
                let mut sols = Vec::new();
                for i in 0..self.ctx.len() {
                    if avail & (1u128 << i) == 0 {
                        continue;
                    }
                    // Split the hypothesis into its argument spine and tail
                    // atom; hypotheses of ground problems are quantifier
                    // free along the spine.
                    let (x, t) = self.ctx[i].clone();
                    let mut spine = Vec::new();
                    let mut tail = t;
                    loop {
                        match &*tail.clone() {
                            Type::Arrow(a, b) => {
                                spine.push(a.clone());
                                tail = b.clone();
                            }
                            _ => break,
                        }
                    }
                    let Type::Var(tail_atom) = &*tail else { continue };
                    if tail_atom != atom {
                        continue;
                    }
                    // Thread the remaining hypotheses through the arguments
                    // left to right, keeping every way to split them.
                    let mut partial: Vec<(Term, Mask)> = vec![(var(x), 0)];
                    for arg_ty in &spine {
                        let mut next = Vec::new();
                        for (head, used) in &partial {
                            for (arg, m) in self.prove((avail & !(1u128 << i)) & !used, arg_ty)? {
                                next.push((app(head.clone(), arg), used | m));
                            }
                        }
                        partial = next;
                        if partial.is_empty() {
                            break;
                        }
                    }
                    for (t, m) in partial {
                        sols.push((t, m | (1u128 << i)));
                    }
                }
                Ok(sols)
            }
            Type::Bang(_) => panic!("modal types are not enumerated"),
        }
    }
}

/// Enumerate every closed normal inhabitant of a ground type, in eta-long
/// form or eta-reduced, by exhaustive goal-directed proof search without
/// quantifier instantiation. Deterministic order; resource limited.
pub fn enumerate_values_with(a: &Ty, as_eta_long: bool, ceiling: u64) -> Result<Vec<Term>> {
    assert!(
        matches!(type_classify(a), TypeClass::Pi1 | TypeClass::Both) && crate::ty::free_ty_vars(a).is_empty(),
        "value enumeration requires a ground type"
    );
    let mut atoms_in_use = BTreeSet::new();
    atom_names(a, &mut atoms_in_use);
    let mut search = Search {
        ctx: Vec::new(),
        nodes: 0,
        ceiling,
        var_counter: 0,
        atom_counter: 0,
        atoms_in_use,
    };
    let raw = search.prove(0, a)?;
    let mut out: Vec<Term> = Vec::new();
    for (t, m) in raw {
        debug_assert_eq!(m, 0, "a closed inhabitant consumed phantom hypotheses");
        let t = if as_eta_long {
            t
        } else {
            rewrite::beta_eta_nf(&t, 1_000_000)?
        };
        if !out.iter().any(|u| crate::term::alpha_eq(u, &t)) {
            out.push(t);
        }
    }
    Ok(out)
}

pub fn enumerate_values(a: &Ty, as_eta_long: bool) -> Result<Vec<Term>> {
    enumerate_values_with(a, as_eta_long, DEFAULT_SEARCH_CEILING)
}

/// The inhabitant of largest size, the canonical copy witness for a type.
pub fn largest_value(a: &Ty) -> Result<Option<Term>> {
    let mut best: Option<Term> = None;
    for v in enumerate_values(a, false)? {
        if best.as_ref().map_or(true, |b| v.size() > b.size()) {
            best = Some(v);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivation::{mk_ax, mk_cut, mk_impl_l, mk_impl_r, Context};
    use crate::elaborate::{elaborate, Hints};
    use crate::sugar::{bool_ty, ff, tensor_ty, tt, unit_ty};
    use crate::term::alpha_eq;
    use crate::ty::{arrow, tvar};

    fn s(n: &str) -> Symbol {
        Symbol::intern(n)
    }

    #[test]
    fn skeleton_sizes() {
        assert_eq!(stripped_size(&tvar("a")), 1);
        assert_eq!(stripped_size(&unit_ty()), 3);
        assert_eq!(stripped_size(&bool_ty()), 11);
        let skel = strip_foralls(&unit_ty());
        let Type::Arrow(l, r) = &*skel else { panic!("expected an arrow skeleton") };
        assert_eq!(&**l, &**r, "both sides are the same fresh atom");
    }

    #[test]
    fn variable_at_atom_is_unchanged() {
        let d = mk_ax(s("x"), tvar("a"));
        assert!(alpha_eq(&eta_long(&d).unwrap(), &var(s("x"))));
    }

    #[test]
    fn variable_at_arrow_expands_once() {
        let d = mk_ax(s("x"), arrow(tvar("a"), tvar("b")));
        let want = lam(s("y"), app(var(s("x")), var(s("y"))));
        assert!(alpha_eq(&eta_long(&d).unwrap(), &want));
        assert!(alpha_eq(&eta_long_var(s("x"), &arrow(tvar("a"), tvar("b"))), &want));
    }

    #[test]
    fn variable_at_unit_expands_under_the_quantifier() {
        let want = lam(s("y"), app(var(s("x")), var(s("y"))));
        assert!(alpha_eq(&eta_long_var(s("x"), &unit_ty()), &want));
    }

    #[test]
    fn expansion_reduces_back_and_true_is_a_fixed_point() {
        let e = elaborate(&Context::empty(), &tt(), &bool_ty(), &Hints::default()).unwrap();
        let long = eta_long(&e.derivation).unwrap();
        assert!(alpha_eq(&long, &tt()), "the canonical truth value is already eta-long");

        let d = mk_impl_r(mk_ax(s("x"), unit_ty()), s("x"));
        let long = eta_long(&d).unwrap();
        assert!(alpha_eq(&long, &lam(s("x"), lam(s("y"), app(var(s("x")), var(s("y")))))));
        let back = rewrite::beta_eta_nf(&long, 1_000).unwrap();
        assert!(alpha_eq(&back, &crate::sugar::id()));
    }

    #[test]
    fn expansion_rejects_cuts() {
        let b = tvar("b");
        let left = mk_impl_r(mk_ax(s("x"), b.clone()), s("x"));
        let right = mk_impl_l(mk_ax(s("u"), b.clone()), mk_ax(s("w"), b.clone()), s("w"), s("f"));
        let d = mk_cut(left, right, s("f"));
        assert!(matches!(
            eta_long(&d),
            Err(KernelError::InvalidDerivation { .. })
        ));
    }

    #[test]
    fn unit_has_exactly_the_identity() {
        let vs = enumerate_values(&unit_ty(), false).unwrap();
        assert_eq!(vs.len(), 1);
        assert!(alpha_eq(&vs[0], &crate::sugar::id()));
        let long = enumerate_values(&unit_ty(), true).unwrap();
        assert_eq!(long.len(), 1);
        assert!(alpha_eq(&long[0], &crate::sugar::id()), "identity is its own expansion at 1");
    }

    #[test]
    fn booleans_are_exactly_true_and_false() {
        let vs = enumerate_values(&bool_ty(), true).unwrap();
        assert_eq!(vs.len(), 2);
        assert!(vs.iter().any(|v| alpha_eq(v, &tt())));
        assert!(vs.iter().any(|v| alpha_eq(v, &ff())));
        // Reduced mode gives the same two terms: they are eta-long already.
        let red = enumerate_values(&bool_ty(), false).unwrap();
        assert_eq!(red.len(), 2);
    }

    #[test]
    fn boolean_pairs_are_exactly_four() {
        let bb = tensor_ty(bool_ty(), bool_ty());
        let vs = enumerate_values(&bb, false).unwrap();
        assert_eq!(vs.len(), 4);
        for a in [tt(), ff()] {
            for b in [tt(), ff()] {
                let want = rewrite::beta_eta_nf(&crate::sugar::pair(a.clone(), b.clone()), 1_000)
                    .unwrap();
                assert!(vs.iter().any(|v| alpha_eq(v, &want)), "missing a boolean pair");
            }
        }
    }

    #[test]
    fn size_chain_holds_for_enumerated_booleans() {
        // |M| <= |M eta-long| <= skeleton(goal) <= 2 |M eta-long| on closed
        // quantifier-instantiation-free inhabitants.
        let bound = stripped_size(&bool_ty());
        for v in enumerate_values(&bool_ty(), true).unwrap() {
            let e = elaborate(&Context::empty(), &v, &bool_ty(), &Hints::default()).unwrap();
            let long = eta_long(&e.derivation).unwrap();
            assert!(v.size() <= long.size());
            assert!(long.size() <= bound);
            assert!(bound <= 2 * long.size());
        }
    }

    #[test]
    fn largest_value_prefers_the_bigger_inhabitant() {
        let best = largest_value(&unit_ty()).unwrap().unwrap();
        assert!(alpha_eq(&best, &crate::sugar::id()));
        assert!(largest_value(&bool_ty()).unwrap().is_some());
    }

    #[test]
    fn search_ceiling_is_enforced() {
        let err = enumerate_values_with(&bool_ty(), true, 3).unwrap_err();
        assert!(err.is_resource());
    }
}
