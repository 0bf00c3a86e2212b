//! Sequent-style derivations and their checker.
//!
//! A derivation is a tree of rule instances, each node carrying its stored
//! conclusion `(context, subject, type)`. The checker revalidates every
//! node bottom-up: it recomputes the conclusion a rule instance licenses
//! from its premises and compares against the stored one modulo alpha
//! equivalence, verifying all side conditions (linearity splits, the
//! eigenvariable condition, strictly exponential contexts under promotion,
//! witness shape under contraction, modality well-formedness everywhere).
//!
//! Two systems share the syntax: the modality-free fragment (`System::Imll2`)
//! rejects the four modal rules and any `#` in types.

use crate::error::{KernelError, Result};
use crate::symbol::Symbol;
use crate::term::{self, alpha_eq, subst, subst_ty_in_term, Term};
use crate::ty::{
    alpha_eq_ty, bang, check_ty_wf, free_ty_vars, is_linear_ty, is_modality_free,
    is_strictly_exponential, subst_ty, tvar_s, ty_size, Ty, Type,
};
use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::rc::Rc;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum System {
    Imll2,
    Lem,
}

#[derive(Clone, Debug)]
pub enum Rule {
    Ax,
    Cut,
    ImplR,
    ImplL,
    /// Carries the fresh eigenvariable used in the premise.
    ForallR(Symbol),
    /// Carries the instantiating type.
    ForallL(Ty),
    Prom,
    Der,
    Weak,
    /// Carries the witness value; the second premise derives it.
    Contr(Term),
}

impl Rule {
    pub fn name(&self) -> &'static str {
        match self {
            Rule::Ax => "ax",
            Rule::Cut => "cut",
            Rule::ImplR => "implR",
            Rule::ImplL => "implL",
            Rule::ForallR(_) => "forallR",
            Rule::ForallL(_) => "forallL",
            Rule::Prom => "p",
            Rule::Der => "d",
            Rule::Weak => "w",
            Rule::Contr(_) => "c",
        }
    }

    pub fn is_modal(&self) -> bool {
        matches!(self, Rule::Prom | Rule::Der | Rule::Weak | Rule::Contr(_))
    }

    /// Right rules introduce on the conclusion type, left rules on a
    /// context type.
    pub fn is_right(&self) -> bool {
        matches!(self, Rule::ImplR | Rule::ForallR(_) | Rule::Prom)
    }
}

/// An ordered association of variables to types with unique names.
/// Comparison is by name set with alpha-equivalent types: exchange is
/// implicit.
#[derive(Clone, Debug, Default)]
pub struct Context(pub Vec<(Symbol, Ty)>);

impl Context {
    pub fn empty() -> Self {
        Context(Vec::new())
    }

    pub fn single(x: Symbol, t: Ty) -> Self {
        Context(vec![(x, t)])
    }

    pub fn lookup(&self, v: Symbol) -> Option<&Ty> {
        self.0.iter().find(|(x, _)| *x == v).map(|(_, t)| t)
    }

    pub fn dom(&self) -> BTreeSet<Symbol> {
        self.0.iter().map(|(x, _)| *x).collect()
    }

    pub fn names_unique(&self) -> bool {
        self.dom().len() == self.0.len()
    }

    pub fn without(&self, v: Symbol) -> Context {
        Context(self.0.iter().filter(|(x, _)| *x != v).cloned().collect())
    }

    pub fn with(&self, x: Symbol, t: Ty) -> Context {
        let mut out = self.0.clone();
        out.push((x, t));
        Context(out)
    }

    /// Disjoint union; panics on a name clash (callers split linearly).
    pub fn join(&self, other: &Context) -> Context {
        let mut out = self.0.clone();
        for (x, t) in &other.0 {
            assert!(
                self.lookup(*x).is_none(),
                "context join: duplicate variable {x}"
            );
            out.push((*x, t.clone()));
        }
        Context(out)
    }

    pub fn same(&self, other: &Context) -> bool {
        if self.0.len() != other.0.len() {
            return false;
        }
        self.0.iter().all(|(x, t)| match other.lookup(*x) {
            Some(u) => alpha_eq_ty(t, u),
            None => false,
        })
    }

    pub fn is_strictly_exponential(&self) -> bool {
        self.0.iter().all(|(_, t)| is_strictly_exponential(t))
    }

    pub fn types(&self) -> impl Iterator<Item = &Ty> {
        self.0.iter().map(|(_, t)| t)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (x, t)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}: {}", crate::print::ty_to_string(t))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Judgment {
    pub ctx: Context,
    pub subject: Term,
    pub ty: Ty,
}

impl Judgment {
    pub fn same(&self, other: &Judgment) -> bool {
        self.ctx.same(&other.ctx)
            && alpha_eq(&self.subject, &other.subject)
            && alpha_eq_ty(&self.ty, &other.ty)
    }
}

impl fmt::Display for Judgment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} => {} : {}",
            self.ctx,
            crate::print::term_to_string(&self.subject),
            crate::print::ty_to_string(&self.ty)
        )
    }
}

struct Node {
    rule: Rule,
    premises: Vec<Derivation>,
    conclusion: Judgment,
    size: u64,
}

#[derive(Clone)]
pub struct Derivation(Rc<Node>);

impl Derivation {
    /// Assemble a node without validation; `check` vouches for it later.
    pub fn from_parts(rule: Rule, premises: Vec<Derivation>, conclusion: Judgment) -> Derivation {
        let size = match rule {
            Rule::Ax => 1,
            Rule::Contr(_) => premises.iter().map(|p| p.size()).sum::<u64>() + 3,
            _ => premises.iter().map(|p| p.size()).sum::<u64>() + 1,
        };
        Derivation(Rc::new(Node { rule, premises, conclusion, size }))
    }

    pub fn rule(&self) -> &Rule {
        &self.0.rule
    }

    pub fn premises(&self) -> &[Derivation] {
        &self.0.premises
    }

    pub fn conclusion(&self) -> &Judgment {
        &self.0.conclusion
    }

    /// Axioms weigh 1; every other rule adds 1, except contraction which
    /// adds 3.
    pub fn size(&self) -> u64 {
        self.0.size
    }

    /// Root rule at height 0; a premise's rules sit one higher.
    pub fn height(&self) -> u64 {
        self.0.premises.iter().map(|p| p.height() + 1).max().unwrap_or(0)
    }

    pub fn ptr_eq(&self, other: &Derivation) -> bool {
        Rc::ptr_eq(&self.0, &other.0)
    }

    pub fn is_cut_free(&self) -> bool {
        !matches!(self.0.rule, Rule::Cut)
            && self.0.premises.iter().all(|p| p.is_cut_free())
    }

    pub fn count_rule(&self, pred: &dyn Fn(&Rule) -> bool) -> u64 {
        let here = if pred(&self.0.rule) { 1 } else { 0 };
        here + self.0.premises.iter().map(|p| p.count_rule(pred)).sum::<u64>()
    }

    pub fn subderivation(&self, path: &[usize]) -> Option<&Derivation> {
        let mut cur = self;
        for &i in path {
            cur = cur.0.premises.get(i)?;
        }
        Some(cur)
    }

    /// Rebuild with the subderivation at `path` replaced.
    pub fn replace_at(&self, path: &[usize], new: Derivation) -> Derivation {
        let Some((&head, rest)) = path.split_first() else {
            return new;
        };
        let mut premises = self.0.premises.clone();
        premises[head] = premises[head].replace_at(rest, new);
        Derivation::from_parts(self.0.rule.clone(), premises, self.0.conclusion.clone())
    }
}

impl fmt::Debug for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}] {}", self.0.rule.name(), self.size(), self.0.conclusion)
    }
}

fn fail(path: &[usize], message: impl Into<String>) -> KernelError {
    KernelError::InvalidDerivation { path: path.to_vec(), message: message.into() }
}

/// Validate every node; returns the root conclusion.
pub fn check(d: &Derivation, system: System) -> Result<Judgment> {
    let mut path = Vec::new();
    check_at(d, system, &mut path)?;
    Ok(d.conclusion().clone())
}

fn check_at(d: &Derivation, system: System, path: &mut Vec<usize>) -> Result<()> {
    for (i, p) in d.premises().iter().enumerate() {
        path.push(i);
        check_at(p, system, path)?;
        path.pop();
    }
    check_node(d, system, path)
}

/// `check` for derivations with shared subtrees. Synthesized selection
/// tables reuse identical branches through `Rc`, so the plain tree walk
/// would revisit a node once per route to it; here each distinct node is
/// validated once. Sound because every node stores its full conclusion.
pub fn check_dag(d: &Derivation, system: System) -> Result<Judgment> {
    let mut seen: HashSet<*const Node> = HashSet::new();
    let mut path = Vec::new();
    check_dag_at(d, system, &mut path, &mut seen)?;
    Ok(d.conclusion().clone())
}

fn check_dag_at(
    d: &Derivation,
    system: System,
    path: &mut Vec<usize>,
    seen: &mut HashSet<*const Node>,
) -> Result<()> {
    if !seen.insert(Rc::as_ptr(&d.0)) {
        return Ok(());
    }
    for (i, p) in d.premises().iter().enumerate() {
        path.push(i);
        check_dag_at(p, system, path, seen)?;
        path.pop();
    }
    check_node(d, system, path)
}

fn expect_premises(d: &Derivation, n: usize, path: &[usize]) -> Result<()> {
    // The witness premise of contraction is counted explicitly by callers.
    if d.premises().len() != n {
        return Err(fail(
            path,
            format!("rule {} expects {} premise(s), found {}", d.rule().name(), n, d.premises().len()),
        ));
    }
    Ok(())
}

fn check_node(d: &Derivation, system: System, path: &[usize]) -> Result<()> {
    let concl = d.conclusion();

    if !concl.ctx.names_unique() {
        return Err(fail(path, "context declares a variable twice"));
    }
    for (x, t) in &concl.ctx.0 {
        check_ty_wf(t).map_err(|e| fail(path, format!("context type of {x}: {e}")))?;
        if system == System::Imll2 && !is_modality_free(t) {
            return Err(fail(path, format!("modal type on {x} outside the modal system")));
        }
    }
    check_ty_wf(&concl.ty).map_err(|e| fail(path, format!("conclusion type: {e}")))?;
    if system == System::Imll2 {
        if !is_modality_free(&concl.ty) {
            return Err(fail(path, "modal conclusion type outside the modal system"));
        }
        if !concl.subject.is_pure() {
            return Err(fail(path, "discard/copy in subject outside the modal system"));
        }
        if d.rule().is_modal() {
            return Err(fail(path, format!("rule {} outside the modal system", d.rule().name())));
        }
    }

    // The domain of the context is exactly the free variables of the
    // subject; all rules preserve this.
    let fv: BTreeSet<Symbol> = concl.subject.free_vars().iter().copied().collect();
    if fv != concl.ctx.dom() {
        return Err(fail(
            path,
            format!(
                "context domain does not match the subject's free variables: {} vs {}",
                concl.ctx,
                crate::print::term_to_string(&concl.subject)
            ),
        ));
    }

    match d.rule() {
        Rule::Ax => {
            expect_premises(d, 0, path)?;
            if concl.ctx.len() != 1 {
                return Err(fail(path, "axiom context must be a single variable"));
            }
            let (x, t) = &concl.ctx.0[0];
            if !matches!(concl.subject.node(), term::TermNode::Var(v) if v == x) {
                return Err(fail(path, "axiom subject must be its context variable"));
            }
            if !alpha_eq_ty(t, &concl.ty) {
                return Err(fail(path, "axiom type mismatch between context and conclusion"));
            }
            if !is_linear_ty(t) {
                return Err(fail(path, "axiom cannot introduce a strictly exponential type"));
            }
        }
        Rule::Cut => {
            expect_premises(d, 2, path)?;
            let left = d.premises()[0].conclusion();
            let right = d.premises()[1].conclusion();
            let mut ok = false;
            for (x, t) in &right.ctx.0 {
                if !alpha_eq_ty(t, &left.ty) {
                    continue;
                }
                let expected_ctx = match try_join(&left.ctx, &right.ctx.without(*x)) {
                    Some(c) => c,
                    None => continue,
                };
                let expected_subject = subst(&right.subject, *x, &left.subject);
                if concl.ctx.same(&expected_ctx)
                    && alpha_eq(&concl.subject, &expected_subject)
                    && alpha_eq_ty(&concl.ty, &right.ty)
                {
                    ok = true;
                    break;
                }
            }
            if !ok {
                return Err(fail(path, "cut conclusion does not follow from its premises"));
            }
        }
        Rule::ImplR => {
            expect_premises(d, 1, path)?;
            let prem = d.premises()[0].conclusion();
            let mut ok = false;
            for (x, t) in &prem.ctx.0 {
                if !concl.ctx.same(&prem.ctx.without(*x)) {
                    continue;
                }
                let expected_subject = term::lam(*x, prem.subject.clone());
                let expected_ty = crate::ty::arrow(t.clone(), prem.ty.clone());
                if alpha_eq(&concl.subject, &expected_subject)
                    && alpha_eq_ty(&concl.ty, &expected_ty)
                {
                    ok = true;
                    break;
                }
            }
            if !ok {
                return Err(fail(path, "abstraction conclusion does not follow from its premise"));
            }
        }
        Rule::ImplL => {
            expect_premises(d, 2, path)?;
            let left = d.premises()[0].conclusion();
            let right = d.premises()[1].conclusion();
            if let Some(clash) = left.ctx.dom().intersection(&right.ctx.dom()).next() {
                return Err(fail(path, format!("premise contexts share {clash}")));
            }
            let mut ok = false;
            for (x, b) in &right.ctx.0 {
                let arrow_ty = crate::ty::arrow(left.ty.clone(), b.clone());
                // The fresh implication variable is the one in the
                // conclusion that neither premise context mentions.
                for (y, yt) in &concl.ctx.0 {
                    if left.ctx.lookup(*y).is_some() || right.ctx.lookup(*y).is_some() {
                        continue;
                    }
                    if !alpha_eq_ty(yt, &arrow_ty) {
                        continue;
                    }
                    let base = match try_join(&left.ctx, &right.ctx.without(*x)) {
                        Some(c) => c,
                        None => continue,
                    };
                    let expected_ctx = base.with(*y, arrow_ty.clone());
                    let expected_subject = subst(
                        &right.subject,
                        *x,
                        &term::app(term::var(*y), left.subject.clone()),
                    );
                    if concl.ctx.same(&expected_ctx)
                        && alpha_eq(&concl.subject, &expected_subject)
                        && alpha_eq_ty(&concl.ty, &right.ty)
                    {
                        ok = true;
                        break;
                    }
                }
                if ok {
                    break;
                }
            }
            if !ok {
                return Err(fail(path, "left implication conclusion does not follow"));
            }
        }
        Rule::ForallR(gamma) => {
            expect_premises(d, 1, path)?;
            let prem = d.premises()[0].conclusion();
            let Type::Forall(alpha, body) = &*concl.ty else {
                return Err(fail(path, "conclusion of the right quantifier rule must be quantified"));
            };
            for t in concl.ctx.types() {
                if free_ty_vars(t).contains(gamma) {
                    return Err(fail(
                        path,
                        format!("eigenvariable {gamma} occurs free in the context"),
                    ));
                }
            }
            if free_ty_vars(&concl.ty).contains(gamma) {
                return Err(fail(
                    path,
                    format!("eigenvariable {gamma} occurs free in the conclusion type"),
                ));
            }
            let expected_prem_ty = subst_ty(body, *alpha, &tvar_s(*gamma));
            if !alpha_eq_ty(&prem.ty, &expected_prem_ty) {
                return Err(fail(path, "premise type is not the expected instance"));
            }
            if !concl.ctx.same(&prem.ctx) || !alpha_eq(&concl.subject, &prem.subject) {
                return Err(fail(path, "right quantifier rule must not change context or subject"));
            }
        }
        Rule::ForallL(b) => {
            expect_premises(d, 1, path)?;
            let prem = d.premises()[0].conclusion();
            if !alpha_eq(&concl.subject, &prem.subject) {
                return Err(fail(path, "left quantifier rule must not change the subject"));
            }
            if !alpha_eq_ty(&concl.ty, &prem.ty) {
                return Err(fail(path, "left quantifier rule must not change the conclusion type"));
            }
            let mut ok = false;
            for (x, xt) in &concl.ctx.0 {
                let Type::Forall(alpha, body) = &**xt else { continue };
                let Some(prem_t) = prem.ctx.lookup(*x) else { continue };
                if !concl.ctx.without(*x).same(&prem.ctx.without(*x)) {
                    continue;
                }
                let expected = subst_ty(body, *alpha, b);
                if alpha_eq_ty(prem_t, &expected) {
                    ok = true;
                    break;
                }
            }
            if !ok {
                return Err(fail(path, "no context variable matches the quantifier instantiation"));
            }
        }
        Rule::Prom => {
            expect_premises(d, 1, path)?;
            let prem = d.premises()[0].conclusion();
            if !prem.ctx.is_strictly_exponential() {
                return Err(fail(path, "promotion requires a strictly exponential context"));
            }
            if !concl.ctx.same(&prem.ctx) || !alpha_eq(&concl.subject, &prem.subject) {
                return Err(fail(path, "promotion must not change context or subject"));
            }
            if !alpha_eq_ty(&concl.ty, &bang(prem.ty.clone())) {
                return Err(fail(path, "promotion conclusion must wrap the premise type"));
            }
        }
        Rule::Der => {
            expect_premises(d, 1, path)?;
            let prem = d.premises()[0].conclusion();
            let mut ok = false;
            for (x, sigma) in &prem.ctx.0 {
                for (y, yt) in &concl.ctx.0 {
                    if !alpha_eq_ty(yt, &bang(sigma.clone())) {
                        continue;
                    }
                    if !concl.ctx.without(*y).same(&prem.ctx.without(*x)) {
                        continue;
                    }
                    let expected = subst(&prem.subject, *x, &term::var(*y));
                    if alpha_eq(&concl.subject, &expected) && alpha_eq_ty(&concl.ty, &prem.ty) {
                        ok = true;
                        break;
                    }
                }
                if ok {
                    break;
                }
            }
            if !ok {
                return Err(fail(path, "dereliction conclusion does not follow"));
            }
        }
        Rule::Weak => {
            expect_premises(d, 1, path)?;
            let prem = d.premises()[0].conclusion();
            let term::TermNode::Discard { ann, scrutinee, body } = concl.subject.node() else {
                return Err(fail(path, "weakening subject must be a discard"));
            };
            let term::TermNode::Var(x) = scrutinee.node() else {
                return Err(fail(path, "weakening must discard a variable"));
            };
            let Some(xt) = concl.ctx.lookup(*x) else {
                return Err(fail(path, "discarded variable missing from the context"));
            };
            if !alpha_eq_ty(xt, &bang(ann.clone())) {
                return Err(fail(path, "discard annotation must match the variable's type"));
            }
            if !concl.ctx.without(*x).same(&prem.ctx) {
                return Err(fail(path, "weakening changes more than one context entry"));
            }
            if !alpha_eq(body, &prem.subject) || !alpha_eq_ty(&concl.ty, &prem.ty) {
                return Err(fail(path, "weakening must keep the premise subject and type"));
            }
        }
        Rule::Contr(v) => {
            if d.premises().len() != 2 {
                return Err(fail(path, "contraction expects a main and a witness premise"));
            }
            let main = d.premises()[0].conclusion();
            let wit = d.premises()[1].conclusion();
            if !v.is_value() {
                return Err(fail(path, "contraction witness is not a value"));
            }
            let term::TermNode::Copy { ann, witness, scrutinee, left, right, body } =
                concl.subject.node()
            else {
                return Err(fail(path, "contraction subject must be a copy"));
            };
            if !alpha_eq(witness, v) {
                return Err(fail(path, "stored witness differs from the rule payload"));
            }
            if !wit.ctx.is_empty() || !alpha_eq(&wit.subject, v) || !alpha_eq_ty(&wit.ty, ann) {
                return Err(fail(path, "witness premise must derive the witness at the annotation"));
            }
            let term::TermNode::Var(x) = scrutinee.node() else {
                return Err(fail(path, "contraction must copy a variable"));
            };
            let Some(xt) = concl.ctx.lookup(*x) else {
                return Err(fail(path, "copied variable missing from the context"));
            };
            let sharp = bang(ann.clone());
            if !alpha_eq_ty(xt, &sharp) {
                return Err(fail(path, "copy annotation must match the variable's type"));
            }
            let (Some(lt), Some(rt)) = (main.ctx.lookup(*left), main.ctx.lookup(*right)) else {
                return Err(fail(path, "copy binders missing from the main premise context"));
            };
            if !alpha_eq_ty(lt, &sharp) || !alpha_eq_ty(rt, &sharp) {
                return Err(fail(path, "copy binders must carry the scrutinee's type"));
            }
            if !concl.ctx.without(*x).same(&main.ctx.without(*left).without(*right)) {
                return Err(fail(path, "contraction changes more than the copied entry"));
            }
            if !alpha_eq(body, &main.subject) || !alpha_eq_ty(&concl.ty, &main.ty) {
                return Err(fail(path, "contraction must keep the premise subject and type"));
            }
        }
    }

    // A strictly exponential conclusion forces a strictly exponential
    // context; scanning it here catches checker regressions early.
    if is_strictly_exponential(&concl.ty) && !concl.ctx.is_strictly_exponential() {
        return Err(fail(path, "exponential conclusion over a non-exponential context"));
    }

    Ok(())
}

fn try_join(a: &Context, b: &Context) -> Option<Context> {
    let mut out = a.0.clone();
    for (x, t) in &b.0 {
        if a.lookup(*x).is_some() {
            return None;
        }
        out.push((*x, t.clone()));
    }
    Some(Context(out))
}

// ---- smart constructors ----
//
// These compute the conclusion from the premises and panic on misuse; they
// are the builders used by elaboration, cut elimination and the synthesized
// megaterms, all of which construct by invariant.

pub fn mk_ax(x: Symbol, a: Ty) -> Derivation {
    assert!(is_linear_ty(&a), "axiom on a strictly exponential type");
    Derivation::from_parts(
        Rule::Ax,
        vec![],
        Judgment { ctx: Context::single(x, a.clone()), subject: term::var(x), ty: a },
    )
}

pub fn mk_cut(left: Derivation, right: Derivation, x: Symbol) -> Derivation {
    let l = left.conclusion().clone();
    let r = right.conclusion().clone();
    let xt = r.ctx.lookup(x).expect("cut variable not in right context");
    assert!(alpha_eq_ty(xt, &l.ty), "cut type mismatch on {x}");
    let ctx = l.ctx.join(&r.ctx.without(x));
    let subject = subst(&r.subject, x, &l.subject);
    let ty = r.ty.clone();
    Derivation::from_parts(Rule::Cut, vec![left, right], Judgment { ctx, subject, ty })
}

pub fn mk_impl_r(prem: Derivation, x: Symbol) -> Derivation {
    let p = prem.conclusion().clone();
    let xt = p.ctx.lookup(x).expect("abstraction variable not in context").clone();
    let ctx = p.ctx.without(x);
    let subject = term::lam(x, p.subject.clone());
    let ty = crate::ty::arrow(xt, p.ty.clone());
    Derivation::from_parts(Rule::ImplR, vec![prem], Judgment { ctx, subject, ty })
}

pub fn mk_impl_l(left: Derivation, right: Derivation, x: Symbol, y: Symbol) -> Derivation {
    let l = left.conclusion().clone();
    let r = right.conclusion().clone();
    let b = r.ctx.lookup(x).expect("implication variable not in right context").clone();
    let arrow_ty = crate::ty::arrow(l.ty.clone(), b);
    let ctx = l.ctx.join(&r.ctx.without(x)).with(y, arrow_ty);
    let subject = subst(&r.subject, x, &term::app(term::var(y), l.subject.clone()));
    let ty = r.ty.clone();
    Derivation::from_parts(Rule::ImplL, vec![left, right], Judgment { ctx, subject, ty })
}

pub fn mk_forall_r(prem: Derivation, alpha: Symbol, gamma: Symbol) -> Derivation {
    let p = prem.conclusion().clone();
    // Reconstruct the quantified type by abstracting the eigenvariable.
    let body = subst_ty(&p.ty, gamma, &tvar_s(alpha));
    let ty = crate::ty::forall(alpha, body);
    for t in p.ctx.types() {
        assert!(
            !free_ty_vars(t).contains(&gamma),
            "eigenvariable {gamma} escapes into the context"
        );
    }
    Derivation::from_parts(
        Rule::ForallR(gamma),
        vec![prem],
        Judgment { ctx: p.ctx, subject: p.subject, ty },
    )
}

pub fn mk_forall_l(prem: Derivation, x: Symbol, quantified: Ty, b: Ty) -> Derivation {
    let p = prem.conclusion().clone();
    let Type::Forall(alpha, body) = &*quantified else {
        panic!("left quantifier rule requires a quantified type");
    };
    let expected = subst_ty(body, *alpha, &b);
    let got = p.ctx.lookup(x).expect("instantiated variable not in context");
    assert!(
        alpha_eq_ty(got, &expected),
        "instantiation mismatch on {x}: {} vs {}",
        crate::print::ty_to_string(got),
        crate::print::ty_to_string(&expected)
    );
    let ctx = Context(
        p.ctx
            .0
            .iter()
            .map(|(v, t)| if *v == x { (*v, quantified.clone()) } else { (*v, t.clone()) })
            .collect(),
    );
    Derivation::from_parts(
        Rule::ForallL(b),
        vec![prem],
        Judgment { ctx, subject: p.subject, ty: p.ty },
    )
}

pub fn mk_prom(prem: Derivation) -> Derivation {
    let p = prem.conclusion().clone();
    assert!(
        p.ctx.is_strictly_exponential(),
        "promotion requires a strictly exponential context"
    );
    let ty = bang(p.ty.clone());
    check_ty_wf(&ty).expect("promotion would build an ill-formed modal type");
    Derivation::from_parts(Rule::Prom, vec![prem], Judgment { ctx: p.ctx, subject: p.subject, ty })
}

pub fn mk_der(prem: Derivation, x: Symbol, y: Symbol) -> Derivation {
    let p = prem.conclusion().clone();
    let sigma = p.ctx.lookup(x).expect("dereliction variable not in context").clone();
    let sharp = bang(sigma);
    check_ty_wf(&sharp).expect("dereliction would build an ill-formed modal type");
    let ctx = p.ctx.without(x).with(y, sharp);
    let subject = subst(&p.subject, x, &term::var(y));
    Derivation::from_parts(Rule::Der, vec![prem], Judgment { ctx, subject, ty: p.ty })
}

pub fn mk_weak(prem: Derivation, x: Symbol, sigma: Ty) -> Derivation {
    let p = prem.conclusion().clone();
    let sharp = bang(sigma.clone());
    check_ty_wf(&sharp).expect("weakening would build an ill-formed modal type");
    assert!(p.ctx.lookup(x).is_none(), "weakening variable {x} already in context");
    let ctx = p.ctx.with(x, sharp);
    let subject = term::discard(sigma, term::var(x), p.subject.clone());
    Derivation::from_parts(Rule::Weak, vec![prem], Judgment { ctx, subject, ty: p.ty })
}

pub fn mk_contr(
    main: Derivation,
    witness: Derivation,
    x: Symbol,
    y: Symbol,
    z: Symbol,
) -> Derivation {
    let m = main.conclusion().clone();
    let w = witness.conclusion().clone();
    assert!(w.ctx.is_empty(), "witness premise must be closed");
    let v = w.subject.clone();
    assert!(v.is_value(), "contraction witness is not a value");
    let sigma = w.ty.clone();
    let sharp = bang(sigma.clone());
    for b in [y, z] {
        let t = m.ctx.lookup(b).expect("copy binder not in main context");
        assert!(alpha_eq_ty(t, &sharp), "copy binder {b} has the wrong type");
    }
    let ctx = m.ctx.without(y).without(z).with(x, sharp);
    let subject = term::copy(sigma, v.clone(), term::var(x), y, z, m.subject.clone());
    Derivation::from_parts(
        Rule::Contr(v),
        vec![main, witness],
        Judgment { ctx, subject, ty: m.ty },
    )
}

/// Substitute a type for a free type variable throughout a derivation:
/// context types, conclusion types, instantiation payloads, and the type
/// annotations inside subjects. Eigenvariables that would capture are
/// renamed first.
pub fn deriv_subst_ty(d: &Derivation, a: Symbol, b: &Ty) -> Derivation {
    let mut fresh_budget = free_ty_vars(b).clone();
    fresh_budget.insert(a);
    deriv_subst_ty_inner(d, a, b, &fresh_budget)
}

fn deriv_subst_ty_inner(
    d: &Derivation,
    a: Symbol,
    b: &Ty,
    avoid: &BTreeSet<Symbol>,
) -> Derivation {
    let mut d = d.clone();
    if let Rule::ForallR(gamma) = d.rule() {
        let gamma = *gamma;
        if gamma == a || avoid.contains(&gamma) {
            // Rename the eigenvariable out of the way within this subtree.
            let fresh = Symbol::freshen(gamma, |s| !avoid.contains(&s) && s != a && s != gamma);
            let renamed = deriv_subst_ty_inner(&d.premises()[0], gamma, &tvar_s(fresh), avoid);
            d = Derivation::from_parts(
                Rule::ForallR(fresh),
                vec![renamed],
                d.conclusion().clone(),
            );
        }
    }
    let rule = match d.rule() {
        Rule::ForallL(t) => Rule::ForallL(subst_ty(t, a, b)),
        Rule::Contr(v) => Rule::Contr(subst_ty_in_term(v, a, b)),
        r => r.clone(),
    };
    let premises = d
        .premises()
        .iter()
        .map(|p| deriv_subst_ty_inner(p, a, b, avoid))
        .collect();
    let c = d.conclusion();
    let conclusion = Judgment {
        ctx: Context(c.ctx.0.iter().map(|(x, t)| (*x, subst_ty(t, a, b))).collect()),
        subject: subst_ty_in_term(&c.subject, a, b),
        ty: subst_ty(&c.ty, a, b),
    };
    Derivation::from_parts(rule, premises, conclusion)
}

/// Number of quantifier and modality occurrences across a judgment's types;
/// the size law for cut-free lazy derivations counts these.
pub fn judgment_connective_count(j: &Judgment) -> u64 {
    fn count(t: &Ty) -> u64 {
        match &**t {
            Type::Var(_) => 0,
            Type::Arrow(l, r) => count(l) + count(r),
            Type::Forall(_, inner) => 1 + count(inner),
            Type::Bang(inner) => 1 + count(inner),
        }
    }
    j.ctx.types().map(count).sum::<u64>() + count(&j.ty)
}

/// Sum of context type sizes plus the conclusion type size.
pub fn judgment_type_weight(j: &Judgment) -> u64 {
    j.ctx.types().map(ty_size).sum::<u64>() + ty_size(&j.ty)
}

// ---- proof-script format ----
//
// One node per line, pre-order, two spaces of indentation per premise
// depth: `rule(payload) |- ctx => term : type`.

pub fn print_script(d: &Derivation) -> String {
    let mut out = String::new();
    fn go(d: &Derivation, depth: usize, out: &mut String) {
        for _ in 0..depth {
            out.push_str("  ");
        }
        let payload = match d.rule() {
            Rule::ForallR(g) => format!("({g})"),
            Rule::ForallL(t) => format!("({})", crate::print::ty_to_string(t)),
            Rule::Contr(v) => format!("({})", crate::print::term_to_string(v)),
            _ => String::new(),
        };
        out.push_str(&format!("{}{} |- {}\n", d.rule().name(), payload, d.conclusion()));
        for p in d.premises() {
            go(p, depth + 1, out);
        }
    }
    go(d, 0, &mut out);
    out
}

pub fn parse_script(src: &str) -> Result<Derivation> {
    struct Line {
        depth: usize,
        rule: String,
        payload: Option<String>,
        ctx: String,
        term: String,
        ty: String,
        lineno: usize,
    }
    let mut lines = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        if raw.trim().is_empty() || raw.trim_start().starts_with("--") {
            continue;
        }
        let stripped = raw.trim_start_matches(' ');
        let indent = raw.len() - stripped.len();
        if indent % 2 != 0 {
            return Err(KernelError::Syntax {
                span: crate::error::SourceSpan::point(i as u32 + 1, 1),
                message: "indentation must be a multiple of two spaces".into(),
            });
        }
        let bad = |message: String| KernelError::Syntax {
            span: crate::error::SourceSpan::point(i as u32 + 1, 1),
            message,
        };
        let (head, rest) = stripped
            .split_once(" |- ")
            .ok_or_else(|| bad("missing ' |- '".into()))?;
        let (ctx, rest) = rest.split_once(" => ").ok_or_else(|| bad("missing ' => '".into()))?;
        let (term_txt, ty_txt) =
            rest.split_once(" : ").ok_or_else(|| bad("missing ' : '".into()))?;
        let (rule, payload) = match head.find('(') {
            Some(open) => {
                if !head.ends_with(')') {
                    return Err(bad("unclosed rule payload".into()));
                }
                (head[..open].to_string(), Some(head[open + 1..head.len() - 1].to_string()))
            }
            None => (head.to_string(), None),
        };
        lines.push(Line {
            depth: indent / 2,
            rule,
            payload,
            ctx: ctx.to_string(),
            term: term_txt.to_string(),
            ty: ty_txt.to_string(),
            lineno: i + 1,
        });
    }
    if lines.is_empty() {
        return Err(KernelError::Syntax {
            span: crate::error::SourceSpan::point(1, 1),
            message: "empty proof script".into(),
        });
    }

    fn build(lines: &[Line], pos: &mut usize, depth: usize) -> Result<Derivation> {
        let line = &lines[*pos];
        let bad = |message: String| KernelError::Syntax {
            span: crate::error::SourceSpan::point(line.lineno as u32, 1),
            message,
        };
        if line.depth != depth {
            return Err(bad(format!("expected depth {depth}, found {}", line.depth)));
        }
        *pos += 1;

        let mut ctx = Context::empty();
        let ctx_txt = line.ctx.trim();
        if !ctx_txt.is_empty() {
            for item in ctx_txt.split(',') {
                let (name, t) = item
                    .split_once(':')
                    .ok_or_else(|| bad(format!("bad context entry {item:?}")))?;
                let name = name.trim();
                if name.is_empty() || !name.chars().next().unwrap().is_ascii_lowercase() {
                    return Err(bad(format!("bad context variable {name:?}")));
                }
                ctx = ctx.with(Symbol::intern(name), crate::parse::parse_ty(t.trim())?);
            }
        }
        let subject = crate::parse::parse_term(line.term.trim())?;
        let ty = crate::parse::parse_ty(line.ty.trim())?;

        let rule = match (line.rule.as_str(), &line.payload) {
            ("ax", None) => Rule::Ax,
            ("cut", None) => Rule::Cut,
            ("implR", None) => Rule::ImplR,
            ("implL", None) => Rule::ImplL,
            ("forallR", Some(p)) => {
                let name = p.trim();
                if name.is_empty() {
                    return Err(bad("forallR needs an eigenvariable".into()));
                }
                Rule::ForallR(Symbol::intern(name))
            }
            ("forallL", Some(p)) => Rule::ForallL(crate::parse::parse_ty(p)?),
            ("p", None) => Rule::Prom,
            ("d", None) => Rule::Der,
            ("w", None) => Rule::Weak,
            ("c", Some(p)) => Rule::Contr(crate::parse::parse_term(p)?),
            (name, payload) => {
                return Err(bad(format!(
                    "unknown rule {name:?} (payload {:?})",
                    payload.as_deref().unwrap_or("")
                )));
            }
        };

        let mut premises = Vec::new();
        while *pos < lines.len() && lines[*pos].depth > depth {
            premises.push(build(lines, pos, depth + 1)?);
        }
        Ok(Derivation::from_parts(rule, premises, Judgment { ctx, subject, ty }))
    }

    let mut pos = 0;
    let d = build(&lines, &mut pos, 0)?;
    if pos != lines.len() {
        return Err(KernelError::Syntax {
            span: crate::error::SourceSpan::point(lines[pos].lineno as u32, 1),
            message: "multiple roots in proof script".into(),
        });
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sugar;
    use crate::ty::{arrow, forall, tvar};

    fn s(n: &str) -> Symbol {
        Symbol::intern(n)
    }

    /// `|- I : 1` built ForallR over ImplR over Ax.
    pub(crate) fn identity_at_unit() -> Derivation {
        let ax = mk_ax(s("x"), tvar("g"));
        let abs = mk_impl_r(ax, s("x"));
        mk_forall_r(abs, s("a"), s("g"))
    }

    #[test]
    fn axiom_checks_and_sizes() {
        let d = mk_ax(s("x"), tvar("a"));
        let j = check(&d, System::Imll2).unwrap();
        assert_eq!(j.ctx.len(), 1);
        assert_eq!(d.size(), 1);
        assert_eq!(d.height(), 0);
    }

    #[test]
    fn identity_derivation_checks_in_both_systems() {
        let d = identity_at_unit();
        let j = check(&d, System::Imll2).unwrap();
        assert!(alpha_eq_ty(&j.ty, &sugar::unit_ty()));
        check(&d, System::Lem).unwrap();
        assert_eq!(d.size(), 3);
        assert_eq!(d.height(), 2);
    }

    #[test]
    fn cut_composes_and_substitutes() {
        // cut (|- I : 1) against (x:1 |- x : 1) gives |- I : 1.
        let left = identity_at_unit();
        let right = mk_ax(s("x"), sugar::unit_ty());
        let d = mk_cut(left, right, s("x"));
        let j = check(&d, System::Imll2).unwrap();
        assert!(j.ctx.is_empty());
        assert!(alpha_eq(&j.subject, &sugar::id()));
        assert!(!d.is_cut_free());
    }

    #[test]
    fn impl_l_builds_the_application_subject() {
        // From |- I : 1 and x:g |- x : g conclude y: 1 -o g |- y I : g.
        let left = identity_at_unit();
        let right = mk_ax(s("x"), tvar("g"));
        let d = mk_impl_l(left, right, s("x"), s("y"));
        let j = check(&d, System::Imll2).unwrap();
        assert_eq!(j.ctx.len(), 1);
        let expected = term::app(term::var(s("y")), sugar::id());
        assert!(alpha_eq(&j.subject, &expected));
    }

    #[test]
    fn eigenvariable_escape_is_rejected() {
        // forallR with an eigenvariable still free in the context.
        let ax = mk_ax(s("x"), arrow(tvar("g"), tvar("g")));
        let bad = Derivation::from_parts(
            Rule::ForallR(s("g")),
            vec![ax.clone()],
            Judgment {
                ctx: Context::single(s("x"), arrow(tvar("g"), tvar("g"))),
                subject: term::var(s("x")),
                ty: forall(s("a"), tvar("a")),
            },
        );
        let err = check(&bad, System::Imll2).unwrap_err();
        assert!(err.to_string().contains("eigenvariable"), "{err}");
    }

    #[test]
    fn promotion_demands_exponential_context() {
        let prem = mk_ax(s("x"), sugar::unit_ty());
        // x:1 is not strictly exponential, so p must fail.
        let bad = Derivation::from_parts(
            Rule::Prom,
            vec![prem],
            Judgment {
                ctx: Context::single(s("x"), sugar::unit_ty()),
                subject: term::var(s("x")),
                ty: bang(sugar::unit_ty()),
            },
        );
        let err = check(&bad, System::Lem).unwrap_err();
        assert!(err.to_string().contains("exponential"), "{err}");
    }

    #[test]
    fn modal_rules_need_the_modal_system() {
        let unit_id = identity_at_unit();
        let d = mk_weak(unit_id, s("u"), sugar::unit_ty());
        check(&d, System::Lem).unwrap();
        let err = check(&d, System::Imll2).unwrap_err();
        assert!(err.to_string().contains("modal"), "{err}");
    }

    #[test]
    fn weakening_and_dereliction_round() {
        // x:1 |- x:1, derelict to y:#1 |- y:1, weaken another variable.
        let ax = mk_ax(s("x"), sugar::unit_ty());
        let der = mk_der(ax, s("x"), s("y"));
        check(&der, System::Lem).unwrap();
        let weak = mk_weak(der, s("u"), sugar::bool_ty());
        let j = check(&weak, System::Lem).unwrap();
        assert_eq!(j.ctx.len(), 2);
        assert!(matches!(j.subject.node(), term::TermNode::Discard { .. }));
    }

    #[test]
    fn contraction_checks_with_its_witness() {
        // y:#1, z:#1 |- \k. k y z : (#1 -o #1 -o g) -o g, contract y,z to x.
        let ky = mk_ax(s("q"), tvar("g"));
        // q:g |- q:g; build k (y) (z) by two implL steps.
        let step1 = mk_impl_l(
            mk_der(mk_ax(s("z0"), sugar::unit_ty()), s("z0"), s("z")),
            ky,
            s("q"),
            s("k1"),
        );
        // k1: #1 -o g, z:#1 |- k1 z : g
        let step2 = mk_impl_l(
            mk_der(mk_ax(s("y0"), sugar::unit_ty()), s("y0"), s("y")),
            step1,
            s("k1"),
            s("k"),
        );
        // k: #1 -o #1 -o g, y:#1, z:#1 |- k y z : g
        let abs = mk_impl_r(step2, s("k"));
        let witness = identity_at_unit();
        let d = mk_contr(abs, witness, s("x"), s("y"), s("z"));
        let j = check(&d, System::Lem).unwrap();
        assert_eq!(j.ctx.len(), 1);
        assert!(matches!(j.subject.node(), term::TermNode::Copy { .. }));
        // Contraction adds 3 on top of its two premises.
        let premise_sum: u64 = d.premises().iter().map(|p| p.size()).sum();
        assert_eq!(d.size(), premise_sum + 3);
    }

    #[test]
    fn subject_context_mismatch_is_caught() {
        let bad = Derivation::from_parts(
            Rule::Ax,
            vec![],
            Judgment {
                ctx: Context::single(s("x"), tvar("a")),
                subject: term::var(s("y")),
                ty: tvar("a"),
            },
        );
        let err = check(&bad, System::Imll2).unwrap_err();
        assert!(err.to_string().contains("free variables") || err.to_string().contains("subject"));
    }

    #[test]
    fn type_substitution_through_derivations() {
        let ax = mk_ax(s("x"), arrow(tvar("b"), tvar("b")));
        let d = mk_impl_r(ax, s("x"));
        let subbed = deriv_subst_ty(&d, s("b"), &sugar::unit_ty());
        let j = check(&subbed, System::Imll2).unwrap();
        let expected = arrow(
            arrow(sugar::unit_ty(), sugar::unit_ty()),
            arrow(sugar::unit_ty(), sugar::unit_ty()),
        );
        assert!(alpha_eq_ty(&j.ty, &expected));
    }

    #[test]
    fn script_round_trip() {
        let d = {
            let unit_id = identity_at_unit();
            let weak = mk_weak(unit_id, s("u"), sugar::unit_ty());
            mk_impl_r(weak, s("u"))
        };
        check(&d, System::Lem).unwrap();
        let txt = print_script(&d);
        let back = parse_script(&txt).unwrap();
        let j = check(&back, System::Lem).unwrap();
        assert!(j.same(d.conclusion()));
        assert_eq!(d.size(), back.size());
    }

    #[test]
    fn script_with_contraction_round_trips() {
        let ky = mk_ax(s("q"), tvar("g"));
        let step1 = mk_impl_l(
            mk_der(mk_ax(s("z0"), sugar::unit_ty()), s("z0"), s("z")),
            ky,
            s("q"),
            s("k1"),
        );
        let step2 = mk_impl_l(
            mk_der(mk_ax(s("y0"), sugar::unit_ty()), s("y0"), s("y")),
            step1,
            s("k1"),
            s("k"),
        );
        let abs = mk_impl_r(step2, s("k"));
        let d = mk_contr(abs, identity_at_unit(), s("x"), s("y"), s("z"));
        let txt = print_script(&d);
        let back = parse_script(&txt).unwrap();
        check(&back, System::Lem).unwrap();
        assert!(back.conclusion().same(d.conclusion()));
    }
}
