//! Duplicator synthesis for ground types.
//!
//! A duplicator at a ground type `a` is a closed linear term
//! `D : a -o a (x) a` with `D V` reducing to `<V, V>` for every closed
//! value `V`. Two registry entries cover the unit and boolean types with
//! small hand-built terms; every other ground type goes through the
//! general pipeline `D = dec . enc . sub`: values are reshaped into the
//! quantifier-stripped skeleton (`sub`), serialized into a tuple of `s`
//! booleans against a fixed syntactic coding (`enc`, via table-driven
//! `abs`/`app` combinators on codes), and the codes are mapped to pairs of
//! values by one big selection table (`dec`). The tables enumerate all
//! 2^s bit tuples, so the pipeline is guarded by a hard cap on `s`.
//!
//! Every synthesized term is delivered inside a derivation built
//! compositionally alongside it; identical branches share one node, so
//! results must be revalidated with `check_dag` rather than `check`.

use crate::derivation::{mk_ax, mk_forall_l, mk_impl_l, mk_impl_r, Context, Derivation};
use crate::elaborate::{elaborate, Hints};
use crate::error::{KernelError, Result};
use crate::etalong;
use crate::sugar;
use crate::symbol::Symbol;
use crate::term::{self, Term, TermNode};
use crate::translate::{apply_deriv, apply_unit_deriv, eraser_derivation, fill_with, to_cut_free};
use crate::ty::{
    alpha_eq_ty, is_ground, is_modality_free, strip_minus, type_classify, Ty, Type, TypeClass,
};
use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

/// Default cap on the code width `s`; tables hold 2^s entries.
pub const DEFAULT_S_MAX: u64 = 14;

/// Hard ceiling regardless of configuration: past this the table does not
/// fit in memory.
const ABSOLUTE_S_MAX: u64 = 24;

const SYNTH_FUEL: u64 = 1_000_000;

// ---- the encoding scheme ----

/// One token of the serialized syntax; abstractions and variables carry
/// the index of the budgeted name `x{i}` they use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Token {
    Lam(u32),
    App,
    Var(u32),
}

/// Fixed-width serialization: terms over the variable budget `x1..xv`
/// become streams of at most `max_tokens` tokens, each written in
/// `bits_per_token` bits, zero-padded to `s = bits_per_token * max_tokens`
/// bits. Token number 0 is padding; numbers past the alphabet are invalid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodingScheme {
    pub var_budget: u32,
    pub bits_per_token: u32,
    pub max_tokens: u32,
    pub s: u64,
}

impl EncodingScheme {
    pub fn alphabet_size(&self) -> u32 {
        2 * self.var_budget + 1
    }

    fn token_number(&self, tok: Token) -> u64 {
        match tok {
            Token::Lam(i) => u64::from(i),
            Token::App => u64::from(self.var_budget) + 1,
            Token::Var(i) => u64::from(self.var_budget + 1 + i),
        }
    }

    fn number_token(&self, n: u64) -> Token {
        debug_assert!(n >= 1 && n <= u64::from(self.alphabet_size()));
        let b = u64::from(self.var_budget);
        if n <= b {
            Token::Lam(n as u32)
        } else if n == b + 1 {
            Token::App
        } else {
            Token::Var((n - b - 1) as u32)
        }
    }
}

/// The scheme induced by a type: the variable budget and the token
/// allowance both equal the size of the quantifier-stripped type, which
/// bounds the size of every eta-long normal value of the type.
pub fn make_scheme(a: &Ty) -> Result<EncodingScheme> {
    if !is_modality_free(a) {
        return Err(KernelError::Unprovable(format!(
            "no encoding scheme at {}: the type mentions the modality",
            crate::print::ty_to_string(a)
        )));
    }
    let budget = u32::try_from(etalong::stripped_size(a))
        .map_err(|_| KernelError::Resource("type too large to encode".into()))?;
    let alphabet = 2 * budget + 1;
    let bits_per_token = 32 - alphabet.leading_zeros();
    let s = u64::from(bits_per_token) * u64::from(budget);
    Ok(EncodingScheme { var_budget: budget, bits_per_token, max_tokens: budget, s })
}

fn budget_name(i: u32) -> Symbol {
    Symbol::intern(&format!("x{i}"))
}

fn var_index(x: Symbol, budget: u32) -> Option<u32> {
    let rest = x.as_str().strip_prefix('x')?;
    if rest.is_empty() || rest.starts_with('0') {
        return None;
    }
    let i: u32 = rest.parse().ok()?;
    (1..=budget).contains(&i).then_some(i)
}

fn code_tokens(t: &Term, budget: u32, out: &mut Vec<Token>) -> Result<()> {
    match t.node() {
        TermNode::Var(x) => {
            let i = var_index(*x, budget).ok_or_else(|| out_of_budget(*x, budget))?;
            out.push(Token::Var(i));
        }
        TermNode::Lam(x, body) => {
            let i = var_index(*x, budget).ok_or_else(|| out_of_budget(*x, budget))?;
            out.push(Token::Lam(i));
            code_tokens(body, budget, out)?;
        }
        TermNode::App(f, a) => {
            out.push(Token::App);
            code_tokens(f, budget, out)?;
            code_tokens(a, budget, out)?;
        }
        _ => {
            return Err(KernelError::Unprovable(
                "only pure terms can be serialized".into(),
            ))
        }
    }
    Ok(())
}

fn out_of_budget(x: Symbol, budget: u32) -> KernelError {
    KernelError::Resource(format!(
        "term exceeds the encoding budget: variable {x} is outside x1..x{budget}"
    ))
}

/// Serialize a pure term into exactly `s` bits.
pub fn code(t: &Term, scheme: &EncodingScheme) -> Result<Vec<bool>> {
    let mut toks = Vec::new();
    code_tokens(t, scheme.var_budget, &mut toks)?;
    if toks.len() > scheme.max_tokens as usize {
        return Err(KernelError::Resource(format!(
            "term exceeds the encoding budget: {} tokens over {}",
            toks.len(),
            scheme.max_tokens
        )));
    }
    let mut bits = Vec::with_capacity(scheme.s as usize);
    for tok in toks {
        let n = scheme.token_number(tok);
        for k in (0..scheme.bits_per_token).rev() {
            bits.push((n >> k) & 1 == 1);
        }
    }
    bits.resize(scheme.s as usize, false);
    Ok(bits)
}

/// Parse `s` bits back into a term: a valid token stream is a complete
/// prefix parse followed by padding only. Rejects numbers past the
/// alphabet, unused binders, repeated variables and leftover tokens.
pub fn decode(bits: &[bool], scheme: &EncodingScheme) -> Option<Term> {
    if bits.len() as u64 != scheme.s {
        return None;
    }
    let mut slots: Vec<Option<Token>> = Vec::with_capacity(scheme.max_tokens as usize);
    for chunk in bits.chunks(scheme.bits_per_token as usize) {
        let mut n: u64 = 0;
        for &b in chunk {
            n = (n << 1) | u64::from(b);
        }
        if n == 0 {
            slots.push(None);
        } else if n <= u64::from(scheme.alphabet_size()) {
            slots.push(Some(scheme.number_token(n)));
        } else {
            return None;
        }
    }
    let (t, end) = parse_tokens(&slots, 0)?;
    if slots[end..].iter().any(|s| s.is_some()) {
        return None;
    }
    Some(t)
}

fn parse_tokens(slots: &[Option<Token>], pos: usize) -> Option<(Term, usize)> {
    match (*slots.get(pos)?)? {
        Token::Var(i) => Some((term::var(budget_name(i)), pos + 1)),
        Token::Lam(i) => {
            let (body, end) = parse_tokens(slots, pos + 1)?;
            let x = budget_name(i);
            if !body.has_free(x) {
                return None;
            }
            Some((term::lam(x, body), end))
        }
        Token::App => {
            let (f, mid) = parse_tokens(slots, pos + 1)?;
            let (a, end) = parse_tokens(slots, mid)?;
            if f.free_vars().iter().any(|v| a.has_free(*v)) {
                return None;
            }
            Some((term::app(f, a), end))
        }
    }
}

/// The tuple of booleans carrying a bit string; true is tt.
pub fn code_term(bits: &[bool]) -> Term {
    assert!(!bits.is_empty(), "empty code");
    let parts: Vec<Term> =
        bits.iter().map(|b| if *b { sugar::tt() } else { sugar::ff() }).collect();
    if parts.len() == 1 {
        parts.into_iter().next().unwrap()
    } else {
        sugar::tuple(&parts)
    }
}

/// The type of `m`-bit tuples: a left-nested tensor of booleans.
pub fn bit_tuple_ty(m: u64) -> Ty {
    assert!(m >= 1, "empty bit tuple type");
    sugar::tensor_tys(&vec![sugar::bool_ty(); m as usize])
}

/// `B^{m1} -o ... -o B^{mk} -o a`.
fn table_ty(widths: &[u64], a: &Ty) -> Ty {
    widths.iter().rev().fold(a.clone(), |acc, &m| crate::ty::arrow(bit_tuple_ty(m), acc))
}

fn elab_closed(t: &Term, at: &Ty) -> Result<Derivation> {
    Ok(elaborate(&Context::empty(), t, at, &Hints::default())?.derivation)
}

// ---- generalized selection ----

/// Shared pieces of one table construction: the ground result type, its
/// eraser, and caches for the saturating all-true tuples and bit tuples.
struct SelBuilder {
    result: Ty,
    eraser: Derivation,
    all_true: HashMap<u64, Derivation>,
    tuples: HashMap<Vec<bool>, Derivation>,
    discarders: HashMap<Vec<u64>, Derivation>,
}

impl SelBuilder {
    fn new(result: &Ty) -> Result<SelBuilder> {
        let eraser = eraser_derivation(result).map_err(|e| match e {
            KernelError::Unprovable(m) => {
                KernelError::Unprovable(format!("selection result must be erasable: {m}"))
            }
            other => other,
        })?;
        Ok(SelBuilder {
            result: result.clone(),
            eraser,
            all_true: HashMap::new(),
            tuples: HashMap::new(),
            discarders: HashMap::new(),
        })
    }

    fn tuple_deriv(&mut self, bits: &[bool]) -> Result<Derivation> {
        if let Some(d) = self.tuples.get(bits) {
            return Ok(d.clone());
        }
        let d = elab_closed(&code_term(bits), &bit_tuple_ty(bits.len() as u64))?;
        self.tuples.insert(bits.to_vec(), d.clone());
        Ok(d)
    }

    fn all_true_deriv(&mut self, width: u64) -> Result<Derivation> {
        if let Some(d) = self.all_true.get(&width) {
            return Ok(d.clone());
        }
        let d = self.tuple_deriv(&vec![true; width as usize])?;
        self.all_true.insert(width, d.clone());
        Ok(d)
    }

    /// `\u.\w. (E (w sat1 ... satk)) u : B' -o B' -o B'`: keep the first
    /// table, saturate the second down to the ground result and erase it.
    /// Cut-eliminated so the selection subjects stay beta normal; cached
    /// per width vector since every level of one table shares it.
    fn discarder(&mut self, widths: &[u64]) -> Result<Derivation> {
        if let Some(d) = self.discarders.get(widths) {
            return Ok(d.clone());
        }
        let u = Symbol::intern("du");
        let w = Symbol::intern("dw");
        let bty = table_ty(widths, &self.result);
        let mut saturated = mk_ax(w, bty.clone());
        for &m in widths {
            saturated = apply_deriv(saturated, self.all_true_deriv(m)?);
        }
        let erased = apply_deriv(self.eraser.clone(), saturated);
        let body = apply_unit_deriv(erased, mk_ax(u, bty));
        let d = to_cut_free(mk_impl_r(mk_impl_r(body, w), u), SYNTH_FUEL)?;
        self.discarders.insert(widths.to_vec(), d.clone());
        Ok(d)
    }

    /// One-bit selection `x M_tt M_ff K` at branch type `table_ty(widths)`.
    /// Branch derivations must be closed.
    fn select_bit(
        &mut self,
        x: Symbol,
        d_tt: Derivation,
        d_ff: Derivation,
        widths: &[u64],
    ) -> Result<Derivation> {
        let bty = table_ty(widths, &self.result);
        let d_k = self.discarder(widths)?;
        let (kr, kq, kp) = (Symbol::intern("kr"), Symbol::intern("kq"), Symbol::intern("kp"));
        let spine = mk_impl_l(d_k, mk_ax(kr, bty.clone()), kr, kq);
        let spine = mk_forall_l(spine, kq, sugar::tensor_ty(bty.clone(), bty.clone()), bty.clone());
        let spine = mk_impl_l(d_ff, spine, kq, kp);
        let spine = mk_impl_l(d_tt, spine, kp, x);
        Ok(mk_forall_l(spine, x, sugar::bool_ty(), bty))
    }

    /// Selection over `n`-bit keys: `x : B^n => ... : table_ty(widths)`.
    /// The map must be total. Splits on the last bit; coinciding halves
    /// share one subtree, so mostly-constant tables stay small.
    fn select(
        &mut self,
        x: Symbol,
        branches: &BTreeMap<Vec<bool>, Derivation>,
        n: u64,
        widths: &[u64],
    ) -> Result<Derivation> {
        if n == 1 {
            let d_tt = branches.get([true].as_slice()).expect("total table").clone();
            let d_ff = branches.get([false].as_slice()).expect("total table").clone();
            return self.select_bit(x, d_tt, d_ff, widths);
        }
        let mut p = BTreeMap::new();
        let mut q = BTreeMap::new();
        for (key, d) in branches {
            let (rest, last) = key.split_at(key.len() - 1);
            if last[0] {
                p.insert(rest.to_vec(), d.clone());
            } else {
                q.insert(rest.to_vec(), d.clone());
            }
        }
        let shared = p
            .iter()
            .zip(q.iter())
            .all(|((k1, d1), (k2, d2))| k1 == k2 && d1.ptr_eq(d2));
        let y = Symbol::intern("sy");
        let d_p = mk_impl_r(self.select(y, &p, n - 1, widths)?, y);
        let d_q = if shared { d_p.clone() } else { mk_impl_r(self.select(y, &q, n - 1, widths)?, y) };
        let inner_widths: Vec<u64> = std::iter::once(n - 1).chain(widths.iter().copied()).collect();
        let (sp, sq) = (Symbol::intern("sp"), Symbol::intern("sq"));
        let two_way = self.select_bit(sq, d_p, d_q, &inner_widths)?;
        let applied = apply_deriv(two_way, mk_ax(sp, bit_tuple_ty(n - 1)));
        let lamlam = mk_impl_r(mk_impl_r(applied, sq), sp);
        let er = Symbol::intern("er");
        let bty = table_ty(widths, &self.result);
        let spine = mk_impl_l(lamlam, mk_ax(er, bty.clone()), er, x);
        Ok(mk_forall_l(spine, x, bit_tuple_ty(n), bty))
    }
}

fn validate_branch_keys<V>(branches: &BTreeMap<Vec<bool>, V>) -> Result<u64> {
    let Some(first) = branches.keys().next() else {
        return Err(KernelError::Unprovable("selection over an empty branch table".into()));
    };
    let n = first.len();
    if n == 0 || n > 32 {
        return Err(KernelError::Unprovable(format!("bad selection key width {n}")));
    }
    if branches.keys().any(|k| k.len() != n) {
        return Err(KernelError::Unprovable("selection keys have mixed widths".into()));
    }
    if branches.len() != 1usize << n {
        return Err(KernelError::Unprovable(format!(
            "selection table must cover all {} keys of width {n}, found {}",
            1u64 << n,
            branches.len()
        )));
    }
    Ok(n as u64)
}

/// Derivation of the selection table `\z. <dispatch on an n-bit tuple>`.
/// Branch terms must be closed and share the type
/// `B^{w1} -o ... -o B^{wk} -o result` with `result` erasable.
pub fn selection_derivation(
    branches: &BTreeMap<Vec<bool>, Term>,
    widths: &[u64],
    result: &Ty,
) -> Result<Derivation> {
    let n = validate_branch_keys(branches)?;
    let bty = table_ty(widths, result);
    let mut by_print: HashMap<String, Derivation> = HashMap::new();
    let mut derivs = BTreeMap::new();
    for (key, t) in branches {
        let rendered = crate::print::term_to_string(t);
        let d = match by_print.get(&rendered) {
            Some(d) => d.clone(),
            None => {
                let d = elab_closed(t, &bty)?;
                by_print.insert(rendered, d.clone());
                d
            }
        };
        derivs.insert(key.clone(), d);
    }
    let mut b = SelBuilder::new(result)?;
    let z = Symbol::intern("z");
    let body = b.select(z, &derivs, n, widths)?;
    Ok(mk_impl_r(body, z))
}

/// The selection table as a plain term.
pub fn selection_synthesize(
    branches: &BTreeMap<Vec<bool>, Term>,
    widths: &[u64],
    result: &Ty,
) -> Result<Term> {
    Ok(selection_derivation(branches, widths, result)?.conclusion().subject.clone())
}

/// First projection on pairs of tables, `(B' (x) B') -o B'` for
/// `B' = table_ty(widths, result)`: saturates the discarded component with
/// all-true tuples and erases the ground result.
pub fn projection_derivation(result: &Ty, widths: &[u64]) -> Result<Derivation> {
    let mut b = SelBuilder::new(result)?;
    let d_k = b.discarder(widths)?;
    let bty = table_ty(widths, result);
    let (z, r) = (Symbol::intern("z"), Symbol::intern("r"));
    let spine = mk_impl_l(d_k, mk_ax(r, bty.clone()), r, z);
    let inst = mk_forall_l(spine, z, sugar::tensor_ty(bty.clone(), bty.clone()), bty);
    Ok(mk_impl_r(inst, z))
}

pub fn projection_synthesize(result: &Ty, widths: &[u64]) -> Result<Term> {
    Ok(projection_derivation(result, widths)?.conclusion().subject.clone())
}

// ---- sub: reshaping between a type and its quantifier-stripped skeleton ----

/// The reshaping pair at `a` over the `s`-bit tuple type, as plain terms:
/// `sub : a[T] -o a-[T]` and its converse, where `a-` strips quantifiers
/// and `[T]` fills every free type variable. Built by one total structural
/// recursion; each component types under its own polarity (see the
/// derivation builders).
pub fn sub_synthesize(a: &Ty, s: u64) -> Result<(Term, Term)> {
    if !is_modality_free(a) {
        return Err(KernelError::Unprovable(format!(
            "no reshaping at {}: the type mentions the modality",
            crate::print::ty_to_string(a)
        )));
    }
    if s == 0 {
        return Err(KernelError::Unprovable("reshaping needs a positive code width".into()));
    }
    Ok(sub_terms(a))
}

fn sub_terms(a: &Ty) -> (Term, Term) {
    match &**a {
        Type::Var(_) => {
            let x = Symbol::intern("sx");
            (term::lam(x, term::var(x)), term::lam(x, term::var(x)))
        }
        Type::Forall(_, body) => sub_terms(body),
        Type::Arrow(dom, cod) => {
            let (sub_d, bar_d) = sub_terms(dom);
            let (sub_c, bar_c) = sub_terms(cod);
            let (x, y) = (Symbol::intern("sx"), Symbol::intern("sy"));
            let fwd = term::lam(
                x,
                term::lam(y, term::app(sub_c, term::app(term::var(x), term::app(bar_d, term::var(y))))),
            );
            let bwd = term::lam(
                x,
                term::lam(y, term::app(bar_c, term::app(term::var(x), term::app(sub_d, term::var(y))))),
            );
            (fwd, bwd)
        }
        Type::Bang(_) => unreachable!("modality checked by callers"),
    }
}

/// Derivation of `sub : a[T] -o a-[T]`; needs `a` positively quantified.
pub fn sub_derivation(a: &Ty, s: u64) -> Result<Derivation> {
    require_polarity(a, true)?;
    sub_go(a, &bit_tuple_ty(s), true)
}

/// Derivation of the converse `a-[T] -o a[T]`; needs `a` negatively
/// quantified (no positive quantifiers, hence no quantifier to reintroduce).
pub fn sub_bar_derivation(a: &Ty, s: u64) -> Result<Derivation> {
    require_polarity(a, false)?;
    sub_go(a, &bit_tuple_ty(s), false)
}

fn require_polarity(a: &Ty, positive: bool) -> Result<()> {
    if !is_modality_free(a) {
        return Err(KernelError::Unprovable(format!(
            "no reshaping at {}: the type mentions the modality",
            crate::print::ty_to_string(a)
        )));
    }
    let ok = match type_classify(a) {
        TypeClass::Both => true,
        TypeClass::Pi1 => positive,
        TypeClass::Sigma1 => !positive,
        TypeClass::Neither => false,
    };
    if ok {
        Ok(())
    } else {
        Err(KernelError::Unprovable(format!(
            "no reshaping at {}: quantifiers occur with the wrong polarity",
            crate::print::ty_to_string(a)
        )))
    }
}

fn sub_go(a: &Ty, filler: &Ty, forward: bool) -> Result<Derivation> {
    Ok(match &**a {
        Type::Var(_) => {
            let x = Symbol::intern("sx");
            mk_impl_r(mk_ax(x, filler.clone()), x)
        }
        Type::Forall(_, body) => {
            if !forward {
                return Err(KernelError::Unprovable(
                    "cannot reintroduce a quantifier while reshaping backwards".into(),
                ));
            }
            // Requantify the root abstraction's argument.
            let inner = sub_go(body, filler, true)?;
            let x = crate::cutelim::impl_r_binder(&inner);
            let prem = inner.premises()[0].clone();
            mk_impl_r(mk_forall_l(prem, x, fill_with(a, filler), filler.clone()), x)
        }
        Type::Arrow(dom, cod) => {
            // \x.\y. this_cod (x (other_dom y))
            let d_other = sub_go(dom, filler, !forward)?;
            let d_this = sub_go(cod, filler, forward)?;
            let (x, y) = (Symbol::intern("sx"), Symbol::intern("sy"));
            let y_ty = if forward { fill_with(&strip_minus(dom), filler) } else { fill_with(dom, filler) };
            let mid_ty = if forward { fill_with(cod, filler) } else { fill_with(&strip_minus(cod), filler) };
            let turned = apply_deriv(d_other, mk_ax(y, y_ty));
            let call = mk_impl_l(turned, mk_ax(Symbol::intern("r"), mid_ty), Symbol::intern("r"), x);
            let body = apply_deriv(d_this, call);
            mk_impl_r(mk_impl_r(body, y), x)
        }
        Type::Bang(_) => unreachable!("modality checked by require_polarity"),
    })
}

// ---- enc: serializing skeleton values into codes ----

struct EncCx<'a> {
    scheme: &'a EncodingScheme,
    s_max: u64,
    filler: Ty,
    tables: Option<(Derivation, Derivation)>,
    next_index: u32,
    sel: SelBuilder,
}

impl<'a> EncCx<'a> {
    fn new(scheme: &'a EncodingScheme, s_max: u64) -> Result<EncCx<'a>> {
        let filler = bit_tuple_ty(scheme.s);
        let sel = SelBuilder::new(&filler)?;
        Ok(EncCx { scheme, s_max, filler, tables: None, next_index: 1, sel })
    }

    fn alloc_index(&mut self) -> Result<u32> {
        let i = self.next_index;
        if i > self.scheme.var_budget {
            return Err(KernelError::Resource(format!(
                "ran out of budgeted variables at x{i}"
            )));
        }
        self.next_index += 1;
        Ok(i)
    }

    fn tables(&mut self) -> Result<(Derivation, Derivation)> {
        if let Some(t) = &self.tables {
            return Ok(t.clone());
        }
        let t = abs_app_build(self.scheme, self.s_max, &mut self.sel)?;
        self.tables = Some(t.clone());
        Ok(t)
    }

    fn fill(&self, t: &Ty) -> Ty {
        fill_with(t, &self.filler)
    }
}

fn identity_deriv(at: Ty) -> Derivation {
    let z = Symbol::intern("ez");
    mk_impl_r(mk_ax(z, at), z)
}

fn enc_go(cx: &mut EncCx, t: &Ty) -> Result<Derivation> {
    Ok(match &**t {
        Type::Var(_) => identity_deriv(cx.filler.clone()),
        Type::Arrow(dom, cod) => {
            // \z. abs <xi> (enc_cod (z (enc_bar_dom <xi>)))
            let i = cx.alloc_index()?;
            let bits = code(&term::var(budget_name(i)), cx.scheme)?;
            let d_code = cx.sel.tuple_deriv(&bits)?;
            let d_bar = enc_bar_go(cx, dom)?;
            let d_enc = enc_go(cx, cod)?;
            let (d_abs, _) = cx.tables()?;
            let z = Symbol::intern("ez");
            let fed = apply_deriv(d_bar, d_code.clone());
            let call = mk_impl_l(fed, mk_ax(Symbol::intern("r"), cx.fill(cod)), Symbol::intern("r"), z);
            let enced = apply_deriv(d_enc, call);
            mk_impl_r(apply_deriv(apply_deriv(d_abs, d_code), enced), z)
        }
        _ => unreachable!("enc runs on quantifier-stripped types"),
    })
}

fn enc_bar_go(cx: &mut EncCx, t: &Ty) -> Result<Derivation> {
    Ok(match &**t {
        Type::Var(_) => identity_deriv(cx.filler.clone()),
        Type::Arrow(dom, cod) => {
            // \z.\x. enc_bar_cod (app z (enc_dom x))
            let d_enc = enc_go(cx, dom)?;
            let d_bar = enc_bar_go(cx, cod)?;
            let (_, d_app) = cx.tables()?;
            let (z, x) = (Symbol::intern("ez"), Symbol::intern("ex"));
            let coded = apply_deriv(d_enc, mk_ax(x, cx.fill(dom)));
            let combined = apply_deriv(apply_deriv(d_app, mk_ax(z, cx.filler.clone())), coded);
            mk_impl_r(mk_impl_r(apply_deriv(d_bar, combined), x), z)
        }
        _ => unreachable!("enc runs on quantifier-stripped types"),
    })
}

/// Derivations of the serializers at `a` under `scheme`:
/// `enc : a-[B^s] -o B^s` and `enc_bar : B^s -o a-[B^s]`. Both recurse
/// over the quantifier-stripped type, so they are total on modality-free
/// types; the embedded `abs`/`app` tables are subject to the `s` cap.
pub fn enc_derivations(
    a: &Ty,
    scheme: &EncodingScheme,
    s_max: u64,
) -> Result<(Derivation, Derivation)> {
    if !is_modality_free(a) {
        return Err(KernelError::Unprovable(format!(
            "no serializer at {}: the type mentions the modality",
            crate::print::ty_to_string(a)
        )));
    }
    let stripped = strip_minus(a);
    let mut cx = EncCx::new(scheme, s_max)?;
    let enc = enc_go(&mut cx, &stripped)?;
    let bar = enc_bar_go(&mut cx, &stripped)?;
    Ok((enc, bar))
}

/// The serializer pair as plain terms, under the default `s` cap.
pub fn enc_synthesize(a: &Ty, scheme: &EncodingScheme) -> Result<(Term, Term)> {
    let (d1, d2) = enc_derivations(a, scheme, DEFAULT_S_MAX)?;
    Ok((d1.conclusion().subject.clone(), d2.conclusion().subject.clone()))
}

// ---- abs and app: syntax constructors on codes ----

fn guard_s(scheme: &EncodingScheme, s_max: u64) -> Result<()> {
    if scheme.s > s_max.min(ABSOLUTE_S_MAX) {
        return Err(KernelError::Resource(format!(
            "materialization too large: the encoding needs s = {} bits, over the cap {}",
            scheme.s,
            s_max.min(ABSOLUTE_S_MAX)
        )));
    }
    Ok(())
}

fn key_of(i: usize, s: u64) -> Vec<bool> {
    (0..s).map(|j| (i >> j) & 1 == 1).collect()
}

fn abs_app_build(
    scheme: &EncodingScheme,
    s_max: u64,
    sel: &mut SelBuilder,
) -> Result<(Derivation, Derivation)> {
    guard_s(scheme, s_max)?;
    let s = scheme.s;
    let n = 1usize << s;
    let bts = bit_tuple_ty(s);

    let decodes: Vec<Option<Term>> = (0..n).map(|i| decode(&key_of(i, s), scheme)).collect();
    let default_leaf = sel.tuple_deriv(&vec![true; s as usize])?;

    // One shared all-default column.
    let default_map: BTreeMap<Vec<bool>, Derivation> =
        (0..n).map(|i| (key_of(i, s), default_leaf.clone())).collect();
    let y = Symbol::intern("cy");
    let default_col = mk_impl_r(sel.select(y, &default_map, s, &[])?, y);

    let column = |leaves: Vec<Option<Vec<bool>>>, sel: &mut SelBuilder| -> Result<Derivation> {
        if leaves.iter().all(|l| l.is_none()) {
            return Ok(default_col.clone());
        }
        let mut map = BTreeMap::new();
        for (j, leaf) in leaves.into_iter().enumerate() {
            let d = match leaf {
                Some(bits) => sel.tuple_deriv(&bits)?,
                None => default_leaf.clone(),
            };
            map.insert(key_of(j, s), d);
        }
        Ok(mk_impl_r(sel.select(y, &map, s, &[])?, y))
    };

    // abs: a column per variable code; entry (i, j) holds the code of
    // \xi.Mj when Mj decodes, uses xi, and the abstraction fits the budget.
    let mut abs_cols = BTreeMap::new();
    for i in 0..n {
        let col = match decodes[i].as_ref().map(|t| t.node()) {
            Some(TermNode::Var(x)) => {
                let x = *x;
                let leaves: Vec<Option<Vec<bool>>> = (0..n)
                    .map(|j| {
                        let m = decodes[j].as_ref()?;
                        if !m.has_free(x) {
                            return None;
                        }
                        code(&term::lam(x, m.clone()), scheme).ok()
                    })
                    .collect();
                column(leaves, sel)?
            }
            _ => default_col.clone(),
        };
        abs_cols.insert(key_of(i, s), col);
    }

    // app: entry (i, j) holds the code of Mi Nj when both decode, their
    // variables are disjoint, and the application fits the budget.
    let mut app_cols = BTreeMap::new();
    for i in 0..n {
        let col = match &decodes[i] {
            Some(m) => {
                let leaves: Vec<Option<Vec<bool>>> = (0..n)
                    .map(|j| {
                        let nn = decodes[j].as_ref()?;
                        if m.free_vars().iter().any(|v| nn.has_free(*v)) {
                            return None;
                        }
                        code(&term::app(m.clone(), nn.clone()), scheme).ok()
                    })
                    .collect();
                column(leaves, sel)?
            }
            None => default_col.clone(),
        };
        app_cols.insert(key_of(i, s), col);
    }

    let build_table = |cols: BTreeMap<Vec<bool>, Derivation>, sel: &mut SelBuilder| -> Result<Derivation> {
        let (x, y2) = (Symbol::intern("tx"), Symbol::intern("ty"));
        let outer = sel.select(x, &cols, s, &[s])?;
        let applied = apply_deriv(outer, mk_ax(y2, bts.clone()));
        Ok(mk_impl_r(mk_impl_r(applied, y2), x))
    };

    let abs = build_table(abs_cols, sel)?;
    let app = build_table(app_cols, sel)?;
    Ok((abs, app))
}

/// Derivations of the code-level constructors
/// `abs, app : B^s -o B^s -o B^s`: `abs <xi> <M>` yields `<\xi.M>` and
/// `app <M> <N>` yields `<M N>`; any invalid input maps to the all-true
/// tuple.
pub fn abs_app_derivations(scheme: &EncodingScheme, s_max: u64) -> Result<(Derivation, Derivation)> {
    let mut sel = SelBuilder::new(&bit_tuple_ty(scheme.s))?;
    abs_app_build(scheme, s_max, &mut sel)
}

/// The constructor pair as plain terms, under the default `s` cap.
pub fn abs_app_synthesize(scheme: &EncodingScheme) -> Result<(Term, Term)> {
    let (d1, d2) = abs_app_derivations(scheme, DEFAULT_S_MAX)?;
    Ok((d1.conclusion().subject.clone(), d2.conclusion().subject.clone()))
}

// ---- dec: decoding into pairs of values ----

/// Derivation of `dec : B^s -o a (x) a`: codes of values map to the pair
/// of that value, everything else to the default pair. The table covers
/// all 2^s keys.
pub fn dec_derivation(
    a: &Ty,
    default: &Term,
    scheme: &EncodingScheme,
    s_max: u64,
) -> Result<Derivation> {
    if !is_ground(a) {
        return Err(KernelError::Unprovable(format!(
            "cannot decode at {}: not a ground type",
            crate::print::ty_to_string(a)
        )));
    }
    guard_s(scheme, s_max)?;
    let s = scheme.s;
    let pair_ty = sugar::tensor_ty(a.clone(), a.clone());
    let default_pair = elab_closed(&sugar::pair(default.clone(), default.clone()), &pair_ty)?;
    let mut map: BTreeMap<Vec<bool>, Derivation> =
        (0..1usize << s).map(|i| (key_of(i, s), default_pair.clone())).collect();
    for v in etalong::enumerate_values(a, true)? {
        let bits = code(&v, scheme)?;
        let leaf = elab_closed(&sugar::pair(v.clone(), v), &pair_ty)?;
        map.insert(bits, leaf);
    }
    let mut sel = SelBuilder::new(&pair_ty)?;
    let z = Symbol::intern("z");
    Ok(mk_impl_r(sel.select(z, &map, s, &[])?, z))
}

/// The decoder as a plain term, under the default `s` cap.
pub fn dec_synthesize(a: &Ty, default: &Term, scheme: &EncodingScheme) -> Result<Term> {
    Ok(dec_derivation(a, default, scheme, DEFAULT_S_MAX)?.conclusion().subject.clone())
}

// ---- the duplicator bundle ----

/// A duplicator with its ingredients. `assembled : a -o a (x) a` maps each
/// closed value `V` to `<V, V>`. Registry entries (`specialized`) are
/// direct constructions and leave the pipeline fields empty; pipeline
/// bundles satisfy `assembled = \w. dec (enc (sub w))`.
#[derive(Debug, Clone)]
pub struct DuplicatorBundle {
    pub ground_type: Ty,
    pub default_value: Term,
    pub sub: Option<Term>,
    pub enc: Option<Term>,
    pub dec: Option<Term>,
    pub assembled: Term,
    pub derivation: Derivation,
    pub scheme: EncodingScheme,
    pub specialized: bool,
}

thread_local! {
    static BUNDLES: RefCell<HashMap<(String, String, u64), DuplicatorBundle>> =
        RefCell::new(HashMap::new());
}

/// Canonical text for a type: binders numbered in traversal order, so
/// alpha-variants share a cache slot.
fn ty_cache_key(t: &Ty) -> String {
    fn go(t: &Ty, env: &mut Vec<(Symbol, usize)>, next: &mut usize, out: &mut String) {
        match &**t {
            Type::Var(v) => {
                match env.iter().rev().find(|(s, _)| s == v) {
                    Some((_, i)) => out.push_str(&format!("b{i}")),
                    None => {
                        out.push('f');
                        out.push_str(v.as_str());
                    }
                }
            }
            Type::Arrow(a, b) => {
                out.push('(');
                go(a, env, next, out);
                out.push_str(")>");
                go(b, env, next, out);
            }
            Type::Forall(x, b) => {
                let i = *next;
                *next += 1;
                out.push_str("@.");
                env.push((*x, i));
                go(b, env, next, out);
                env.pop();
            }
            Type::Bang(inner) => {
                out.push('#');
                go(inner, env, next, out);
            }
        }
    }
    let mut out = String::new();
    go(t, &mut Vec::new(), &mut 0, &mut out);
    out
}

/// Synthesize the duplicator at `a` with the given fallback value, under
/// the default `s` cap.
pub fn duplicator(a: &Ty, default: &Term) -> Result<DuplicatorBundle> {
    duplicator_with(a, default, DEFAULT_S_MAX)
}

/// As `duplicator`, with an explicit cap on the code width `s`.
pub fn duplicator_with(a: &Ty, default: &Term, s_max: u64) -> Result<DuplicatorBundle> {
    if !is_ground(a) {
        return Err(KernelError::Unprovable(format!(
            "cannot duplicate at {}: not a ground type",
            crate::print::ty_to_string(a)
        )));
    }
    if !(default.is_value() && default.is_closed() && default.is_pure()) {
        return Err(KernelError::Unprovable(
            "the duplicator default must be a closed pure value".into(),
        ));
    }
    let key = (ty_cache_key(a), crate::print::term_to_string(default), s_max);
    if let Some(b) = BUNDLES.with(|c| c.borrow().get(&key).cloned()) {
        return Ok(b);
    }
    let scheme = make_scheme(a)?;
    let bundle = if alpha_eq_ty(a, &sugar::unit_ty()) {
        unit_registry(a, default, scheme)?
    } else if alpha_eq_ty(a, &sugar::bool_ty()) {
        bool_registry(a, default, scheme)?
    } else {
        duplicator_pipeline_with(a, default, s_max)?
    };
    BUNDLES.with(|c| c.borrow_mut().insert(key, bundle.clone()));
    Ok(bundle)
}

fn registry_bundle(
    a: &Ty,
    default: &Term,
    scheme: EncodingScheme,
    derivation: Derivation,
) -> DuplicatorBundle {
    DuplicatorBundle {
        ground_type: a.clone(),
        default_value: default.clone(),
        sub: None,
        enc: None,
        dec: None,
        assembled: derivation.conclusion().subject.clone(),
        derivation,
        scheme,
        specialized: true,
    }
}

/// `\z. <z, I>`, sound because the identity is the only value of the unit
/// type.
fn unit_registry(a: &Ty, default: &Term, scheme: EncodingScheme) -> Result<DuplicatorBundle> {
    let unit = sugar::unit_ty();
    let t = term::lam(
        Symbol::intern("z"),
        sugar::pair(term::var(Symbol::intern("z")), sugar::id()),
    );
    let d = elab_closed(&t, &crate::ty::arrow(unit.clone(), sugar::tensor_ty(unit.clone(), unit)))?;
    Ok(registry_bundle(a, default, scheme, d))
}

/// `\z. pi1 (z <tt,tt> <ff,ff>)`: the boolean pairs its branches in
/// selection order and the projection keeps the winner.
fn bool_registry(a: &Ty, default: &Term, scheme: EncodingScheme) -> Result<DuplicatorBundle> {
    let bb = sugar::tensor_ty(sugar::bool_ty(), sugar::bool_ty());
    let d_pi = projection_derivation(&bb, &[])?;
    let d_tt = elab_closed(&sugar::pair(sugar::tt(), sugar::tt()), &bb)?;
    let d_ff = elab_closed(&sugar::pair(sugar::ff(), sugar::ff()), &bb)?;
    let (z, q, r) = (Symbol::intern("z"), Symbol::intern("q"), Symbol::intern("r"));
    let quad = sugar::tensor_ty(bb.clone(), bb.clone());
    let spine = mk_impl_l(d_ff, mk_ax(r, quad), r, q);
    let spine = mk_impl_l(d_tt, spine, q, z);
    let spine = mk_forall_l(spine, z, sugar::bool_ty(), bb);
    let d = mk_impl_r(apply_deriv(d_pi, spine), z);
    Ok(registry_bundle(a, default, scheme, d))
}

/// Force the general pipeline even where a registry entry exists; the
/// registry path in `duplicator` is otherwise preferred.
pub fn duplicator_pipeline(a: &Ty, default: &Term) -> Result<DuplicatorBundle> {
    duplicator_pipeline_with(a, default, DEFAULT_S_MAX)
}

fn duplicator_pipeline_with(a: &Ty, default: &Term, s_max: u64) -> Result<DuplicatorBundle> {
    if !is_ground(a) {
        return Err(KernelError::Unprovable(format!(
            "cannot duplicate at {}: not a ground type",
            crate::print::ty_to_string(a)
        )));
    }
    let scheme = make_scheme(a)?;
    guard_s(&scheme, s_max)?;
    if etalong::enumerate_values(a, true)?.is_empty() {
        return Err(KernelError::Unprovable(format!(
            "cannot duplicate at {}: the type has no closed values",
            crate::print::ty_to_string(a)
        )));
    }
    let d_sub = sub_derivation(a, scheme.s)?;
    let (d_enc, _) = enc_derivations(a, &scheme, s_max)?;
    let d_dec = dec_derivation(a, default, &scheme, s_max)?;
    let w = Symbol::intern("w");
    let reshaped = apply_deriv(d_sub.clone(), mk_ax(w, a.clone()));
    let coded = apply_deriv(d_enc.clone(), reshaped);
    let d = mk_impl_r(apply_deriv(d_dec.clone(), coded), w);
    let assembled = d.conclusion().subject.clone();
    Ok(DuplicatorBundle {
        ground_type: a.clone(),
        default_value: default.clone(),
        sub: Some(d_sub.conclusion().subject.clone()),
        enc: Some(d_enc.conclusion().subject.clone()),
        dec: Some(d_dec.conclusion().subject.clone()),
        assembled,
        derivation: d,
        scheme,
        specialized: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivation::{check_dag, System};
    use crate::rewrite;
    use crate::sugar::{bool_ty, ff, id, pair, tensor_ty, tt, unit_ty};
    use crate::term::{alpha_eq, app, lam, var};

    fn s(name: &str) -> Symbol {
        Symbol::intern(name)
    }

    fn nf(t: &Term) -> Term {
        rewrite::beta_eta_nf(t, 20_000_000).unwrap()
    }

    fn bnf(t: &Term) -> Term {
        rewrite::normalize(t, 20_000_000).unwrap()
    }

    #[test]
    fn the_unit_scheme_has_the_expected_shape() {
        let scheme = make_scheme(&unit_ty()).unwrap();
        assert_eq!(scheme.var_budget, 3);
        assert_eq!(scheme.bits_per_token, 3);
        assert_eq!(scheme.max_tokens, 3);
        assert_eq!(scheme.s, 9);
        assert_eq!(scheme.alphabet_size(), 7);
    }

    #[test]
    fn codes_round_trip_on_boolean_values() {
        let scheme = make_scheme(&bool_ty()).unwrap();
        assert_eq!(scheme.s, 55);
        let values = etalong::enumerate_values(&bool_ty(), true).unwrap();
        assert_eq!(values.len(), 2);
        let mut codes = Vec::new();
        for v in &values {
            let bits = code(v, &scheme).unwrap();
            assert_eq!(bits.len() as u64, scheme.s);
            let back = decode(&bits, &scheme).unwrap();
            assert!(alpha_eq(&back, v), "round trip failed");
            codes.push(bits);
        }
        assert_ne!(codes[0], codes[1], "distinct values share a code");
    }

    #[test]
    fn decode_rejects_non_codes() {
        let scheme = make_scheme(&unit_ty()).unwrap();
        // All ones parses as a variable followed by stray tokens.
        assert!(decode(&vec![true; 9], &scheme).is_none());
        // Unused binder: Lam(1) over Var(2).
        let bad = code(&lam(s("x1"), var(s("x1"))), &scheme).unwrap();
        let mut tweaked = bad.clone();
        // Flip the variable index bits from x1 (101) to x2 (110).
        tweaked[3] = true;
        tweaked[4] = true;
        tweaked[5] = false;
        assert!(decode(&tweaked, &scheme).is_none());
        // Wrong width.
        assert!(decode(&[true, false], &scheme).is_none());
    }

    #[test]
    fn coding_requires_budgeted_names() {
        let scheme = make_scheme(&unit_ty()).unwrap();
        let err = code(&id(), &scheme).unwrap_err();
        assert!(err.is_resource(), "expected a budget error, got {err:?}");
        let ok = code(&lam(s("x1"), var(s("x1"))), &scheme).unwrap();
        let back = decode(&ok, &scheme).unwrap();
        assert!(alpha_eq(&back, &lam(s("x1"), var(s("x1")))));
    }

    #[test]
    fn one_bit_selection_picks_the_matching_branch() {
        let mut branches = BTreeMap::new();
        branches.insert(vec![true], tt());
        branches.insert(vec![false], ff());
        let sel = selection_synthesize(&branches, &[], &bool_ty()).unwrap();
        assert!(sel.is_closed());
        assert!(alpha_eq(&nf(&app(sel.clone(), tt())), &nf(&tt())));
        assert!(alpha_eq(&nf(&app(sel, ff())), &nf(&ff())));
    }

    #[test]
    fn two_bit_selection_covers_all_four_keys() {
        // Exclusive-nor of the two bits.
        let mut branches = BTreeMap::new();
        branches.insert(vec![true, true], tt());
        branches.insert(vec![true, false], ff());
        branches.insert(vec![false, true], ff());
        branches.insert(vec![false, false], tt());
        let d = selection_derivation(&branches, &[], &bool_ty()).unwrap();
        let j = check_dag(&d, System::Imll2).unwrap();
        assert!(alpha_eq_ty(&j.ty, &crate::ty::arrow(bit_tuple_ty(2), bool_ty())));
        let sel = j.subject;
        for (bits, expect) in [
            (vec![true, true], tt()),
            (vec![true, false], ff()),
            (vec![false, true], ff()),
            (vec![false, false], tt()),
        ] {
            let got = nf(&app(sel.clone(), code_term(&bits)));
            assert!(alpha_eq(&got, &nf(&expect)), "selection at {bits:?}");
        }
    }

    #[test]
    fn selection_requires_a_total_table() {
        let mut branches = BTreeMap::new();
        branches.insert(vec![true, true], tt());
        branches.insert(vec![false, false], tt());
        assert!(matches!(
            selection_synthesize(&branches, &[], &bool_ty()),
            Err(KernelError::Unprovable(_))
        ));
    }

    #[test]
    fn projection_keeps_the_first_component() {
        let d = projection_derivation(&bool_ty(), &[]).unwrap();
        let j = check_dag(&d, System::Imll2).unwrap();
        let bb = sugar::tensor_ty(bool_ty(), bool_ty());
        assert!(alpha_eq_ty(&j.ty, &crate::ty::arrow(bb, bool_ty())));
        let pi = j.subject;
        assert!(alpha_eq(&nf(&app(pi.clone(), pair(tt(), ff()))), &nf(&tt())));
        assert!(alpha_eq(&nf(&app(pi, pair(ff(), tt()))), &nf(&ff())));
    }

    #[test]
    fn reshaping_the_unit_value_yields_the_identity() {
        let (sub, _) = sub_synthesize(&unit_ty(), 9).unwrap();
        assert!(alpha_eq(&nf(&app(sub, id())), &id()));
        let d = sub_derivation(&unit_ty(), 9).unwrap();
        let j = check_dag(&d, System::Imll2).unwrap();
        let t9 = bit_tuple_ty(9);
        let expected = crate::ty::arrow(unit_ty(), crate::ty::arrow(t9.clone(), t9));
        assert!(alpha_eq_ty(&j.ty, &expected));
        // The derivation's subject is the syntactic recursion.
        let (sub_term, _) = sub_synthesize(&unit_ty(), 9).unwrap();
        assert!(alpha_eq(&j.subject, &sub_term));
    }

    #[test]
    fn reshaping_checks_both_directions_at_the_boolean_type() {
        let d_fwd = sub_derivation(&bool_ty(), 4).unwrap();
        check_dag(&d_fwd, System::Imll2).unwrap();
        // The boolean type has positive quantifiers, so only forward works.
        assert!(matches!(sub_bar_derivation(&bool_ty(), 4), Err(KernelError::Unprovable(_))));
        // A quantifier-free type reshapes both ways.
        let flat = crate::ty::arrow(crate::ty::tvar("g"), crate::ty::tvar("g"));
        check_dag(&sub_derivation(&flat, 4).unwrap(), System::Imll2).unwrap();
        check_dag(&sub_bar_derivation(&flat, 4).unwrap(), System::Imll2).unwrap();
    }

    #[test]
    fn abs_composes_variable_codes_into_an_abstraction() {
        let scheme = make_scheme(&unit_ty()).unwrap();
        let (abs, _) = abs_app_synthesize(&scheme).unwrap();
        let cx = code_term(&code(&var(s("x1")), &scheme).unwrap());
        let expected = code_term(&code(&lam(s("x1"), var(s("x1"))), &scheme).unwrap());
        let got = bnf(&app(app(abs, cx.clone()), cx));
        assert!(alpha_eq(&got, &bnf(&expected)), "abs code mismatch");
    }

    #[test]
    fn abs_defaults_on_a_non_code_argument() {
        let scheme = make_scheme(&unit_ty()).unwrap();
        let (abs, _) = abs_app_synthesize(&scheme).unwrap();
        let cx = code_term(&code(&var(s("x1")), &scheme).unwrap());
        let junk = code_term(&vec![true; 9]);
        let got = bnf(&app(app(abs, cx), junk));
        assert!(alpha_eq(&got, &bnf(&code_term(&vec![true; 9]))));
    }

    // The application table erases a discarded column by dispatching it in
    // full, so its runtime contract is exercised on the smallest scheme
    // with a composable pair of codes: one variable, four tokens, s = 8.
    fn tiny_app_scheme() -> EncodingScheme {
        EncodingScheme { var_budget: 1, bits_per_token: 2, max_tokens: 4, s: 8 }
    }

    #[test]
    fn app_composes_codes_into_an_application() {
        let scheme = tiny_app_scheme();
        let (_, app_t) = abs_app_synthesize(&scheme).unwrap();
        let c1 = code_term(&code(&var(s("x1")), &scheme).unwrap());
        let c2 = code_term(&code(&lam(s("x1"), var(s("x1"))), &scheme).unwrap());
        let expected =
            code_term(&code(&app(var(s("x1")), lam(s("x1"), var(s("x1")))), &scheme).unwrap());
        let got = rewrite::normalize(&app(app(app_t, c1), c2), 100_000_000).unwrap();
        assert!(alpha_eq(&got, &bnf(&expected)));
    }

    #[test]
    fn app_rejects_non_linear_compositions() {
        let scheme = tiny_app_scheme();
        let (_, app_t) = abs_app_synthesize(&scheme).unwrap();
        let c1 = code_term(&code(&var(s("x1")), &scheme).unwrap());
        // x1 x1 would repeat a variable: the table must default.
        let got = rewrite::normalize(&app(app(app_t, c1.clone()), c1), 100_000_000).unwrap();
        assert!(alpha_eq(&got, &bnf(&code_term(&vec![true; 8]))));
    }

    #[test]
    fn enc_serializes_the_reshaped_unit_value() {
        let scheme = make_scheme(&unit_ty()).unwrap();
        let (d_enc, _) = enc_derivations(&unit_ty(), &scheme, DEFAULT_S_MAX).unwrap();
        check_dag(&d_enc, System::Imll2).unwrap();
        let enc = d_enc.conclusion().subject.clone();
        let (sub, _) = sub_synthesize(&unit_ty(), scheme.s).unwrap();
        let expected = code_term(&code(&lam(s("x1"), var(s("x1"))), &scheme).unwrap());
        let got = bnf(&app(enc, app(sub, id())));
        assert!(alpha_eq(&got, &bnf(&expected)), "enc(sub(I)) is not the identity code");
    }

    #[test]
    fn dec_recovers_value_pairs_and_defaults_otherwise() {
        let scheme = make_scheme(&unit_ty()).unwrap();
        let d = dec_derivation(&unit_ty(), &id(), &scheme, DEFAULT_S_MAX).unwrap();
        check_dag(&d, System::Imll2).unwrap();
        let dec = d.conclusion().subject.clone();
        let eta_id = lam(s("x1"), var(s("x1")));
        let bits = code(&eta_id, &scheme).unwrap();
        let got = nf(&app(dec.clone(), code_term(&bits)));
        assert!(alpha_eq(&got, &nf(&pair(id(), id()))));
        let junk = nf(&app(dec, code_term(&vec![true; 9])));
        assert!(alpha_eq(&junk, &nf(&pair(id(), id()))), "non-codes must map to the default pair");
    }

    #[test]
    fn the_unit_registry_duplicates_the_identity() {
        let b = duplicator(&unit_ty(), &id()).unwrap();
        assert!(b.specialized);
        assert!(b.sub.is_none());
        let j = check_dag(&b.derivation, System::Imll2).unwrap();
        let expected_ty = crate::ty::arrow(unit_ty(), tensor_ty(unit_ty(), unit_ty()));
        assert!(alpha_eq_ty(&j.ty, &expected_ty));
        assert!(alpha_eq(&b.assembled, &lam(s("z"), pair(var(s("z")), id()))));
        assert!(alpha_eq(&nf(&app(b.assembled.clone(), id())), &nf(&pair(id(), id()))));
    }

    #[test]
    fn the_boolean_registry_duplicates_both_booleans() {
        let b = duplicator(&bool_ty(), &tt()).unwrap();
        assert!(b.specialized);
        let j = check_dag(&b.derivation, System::Imll2).unwrap();
        let expected_ty = crate::ty::arrow(bool_ty(), tensor_ty(bool_ty(), bool_ty()));
        assert!(alpha_eq_ty(&j.ty, &expected_ty));
        assert!(alpha_eq(&nf(&app(b.assembled.clone(), tt())), &nf(&pair(tt(), tt()))));
        assert!(alpha_eq(&nf(&app(b.assembled.clone(), ff())), &nf(&pair(ff(), ff()))));
    }

    #[test]
    fn the_general_pipeline_duplicates_the_unit_value() {
        let b = duplicator_pipeline(&unit_ty(), &id()).unwrap();
        assert!(!b.specialized);
        assert_eq!(b.scheme.s, 9);
        assert!(b.sub.is_some() && b.enc.is_some() && b.dec.is_some());
        let j = check_dag(&b.derivation, System::Imll2).unwrap();
        let expected_ty = crate::ty::arrow(unit_ty(), tensor_ty(unit_ty(), unit_ty()));
        assert!(alpha_eq_ty(&j.ty, &expected_ty));
        let got = nf(&app(b.assembled.clone(), id()));
        assert!(alpha_eq(&got, &nf(&pair(id(), id()))), "pipeline duplication failed");
    }

    #[test]
    #[ignore = "temporary cost probe"]
    fn probe_costs() {
        let scheme = make_scheme(&unit_ty()).unwrap();
        let (abs_t, _) = abs_app_synthesize(&scheme).unwrap();
        let c1 = code_term(&code(&var(s("x1")), &scheme).unwrap());
        let t0 = std::time::Instant::now();
        let r = rewrite::normalize_full(&app(abs_t, c1), 500_000_000, false).unwrap();
        println!("abs: steps={} time={:?}", r.steps, t0.elapsed());

        let (d_enc, _) = enc_derivations(&unit_ty(), &scheme, DEFAULT_S_MAX).unwrap();
        let enc = d_enc.conclusion().subject.clone();
        let (sub, _) = sub_synthesize(&unit_ty(), scheme.s).unwrap();
        let t0 = std::time::Instant::now();
        let r = rewrite::normalize_full(&app(enc, app(sub, id())), 500_000_000, false).unwrap();
        println!("enc: steps={} time={:?}", r.steps, t0.elapsed());

        let b = duplicator_pipeline(&unit_ty(), &id()).unwrap();
        let t0 = std::time::Instant::now();
        let r =
            rewrite::normalize_full(&app(b.assembled.clone(), id()), 500_000_000, false).unwrap();
        println!("pipeline: steps={} time={:?}", r.steps, t0.elapsed());
    }

    #[test]
    fn oversized_types_are_rejected_with_the_code_width() {
        // B (x) B strips to a type of size 27, so 27 tokens of 6 bits each.
        let bb = tensor_ty(bool_ty(), bool_ty());
        let err = duplicator(&bb, &pair(tt(), tt())).unwrap_err();
        let KernelError::Resource(msg) = err else {
            panic!("expected a resource error");
        };
        assert!(msg.contains("s = 162"), "message must name the code width: {msg}");
        // The quantified iterator type strips to 7 tokens of 4 bits each.
        let church = crate::ty::forall(
            s("a"),
            crate::ty::arrow(
                crate::ty::arrow(crate::ty::tvar("a"), crate::ty::tvar("a")),
                crate::ty::arrow(crate::ty::tvar("a"), crate::ty::tvar("a")),
            ),
        );
        let err = duplicator(&church, &lam(s("f"), var(s("f")))).unwrap_err();
        let KernelError::Resource(msg) = err else {
            panic!("expected a resource error");
        };
        assert!(msg.contains("s = 28"), "message must name the code width: {msg}");
        // The modal numeral type is not ground at all: its values copy.
        let err = duplicator(&sugar::nat_ty(), &id()).unwrap_err();
        assert!(matches!(err, KernelError::Unprovable(_)), "got {err:?}");
    }

    #[test]
    fn duplicators_demand_ground_types_and_value_defaults() {
        assert!(matches!(
            duplicator(&crate::ty::tvar("a"), &id()),
            Err(KernelError::Unprovable(_))
        ));
        let open_term = var(s("y"));
        assert!(matches!(
            duplicator(&unit_ty(), &open_term),
            Err(KernelError::Unprovable(_))
        ));
    }

    #[test]
    fn uninhabited_ground_types_are_rejected() {
        // forall a. forall b. a -o b is ground but has no closed values.
        let empty = crate::ty::forall(
            s("a"),
            crate::ty::forall(s("b"), crate::ty::arrow(crate::ty::tvar("a"), crate::ty::tvar("b"))),
        );
        assert!(is_ground(&empty));
        let err = duplicator(&empty, &id()).unwrap_err();
        assert!(matches!(err, KernelError::Unprovable(_)), "got {err:?}");
    }

    #[test]
    fn bundles_are_cached_per_type_and_default() {
        let b1 = duplicator(&unit_ty(), &id()).unwrap();
        let b2 = duplicator(&unit_ty(), &id()).unwrap();
        assert!(b1.assembled.ptr_eq(&b2.assembled));
        // An alpha-variant of the type hits the same slot.
        let variant = crate::ty::forall(s("q"), crate::ty::arrow(crate::ty::tvar("q"), crate::ty::tvar("q")));
        let b3 = duplicator(&variant, &id()).unwrap();
        assert!(b1.assembled.ptr_eq(&b3.assembled));
    }
}
