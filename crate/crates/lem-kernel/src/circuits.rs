//! Boolean circuits over the basis {not, and^n, or^n} and their compilation
//! to terms.
//!
//! A circuit is a finite acyclic netlist of inputs, gates, fan-outs and
//! outputs. Fan-outs are the only nodes allowed to duplicate or discard a
//! wire; gates and outputs consume each incoming edge exactly once, so a
//! valid netlist is linear by construction. The text format is line
//! oriented:
//!
//! ```text
//! input x1
//! gate g1 = and(x1, x2)
//! fan f1 = split(g1, 2)
//! output y1 = f1.0
//! ```
//!
//! Compilation is level by level. Every wire is typed `#B`; a gate output is
//! promoted to `#B` (its free wires are all `#B`, so the context is strictly
//! exponential) and consumers derelict back to `B`. Level `-1` is the tuple
//! of output wires, and level `l` abstracts the wires of level `l`, opens
//! the fan-outs of those wires with `out^k`, and applies the result to the
//! gate expressions of the level. The compiled term therefore has type
//! `(#B (x) ... (x) #B) -o (B (x) ... (x) B)` and its derivation is built
//! alongside the term.
//!
//! Within a level, wires whose conclusion feeds a fan-out come first
//! (ordered by the fan-out's declaration), then the remaining wires in
//! declaration order; this is the pinned let-nesting order. `xor` is a
//! derived gate: its encoding selects `not` or the identity out of a pair
//! by an erasing projection, it is not a new table row.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::derivation::{
    check_dag, mk_ax, mk_contr, mk_cut, mk_der, mk_forall_l, mk_forall_r, mk_impl_l, mk_impl_r,
    mk_prom, mk_weak, Context, Derivation, System,
};
use crate::dup::projection_derivation;
use crate::elaborate::{elaborate, Hints};
use crate::error::{KernelError, Result, SourceSpan};
use crate::rewrite;
use crate::sugar;
use crate::symbol::Symbol;
use crate::term::{self, alpha_eq, Term};
use crate::translate::{apply_deriv, apply_unit_deriv, unit_value_derivation};
use crate::ty::{arrow, bang, free_ty_vars, subst_ty, tvar_s, Ty, Type};

/// Gate operator; the arity of `and`/`or` is part of the operator.
/// `And(0)`/`Or(0)` are the constants true/false, `xor` is derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Not,
    And(usize),
    Or(usize),
    Xor,
}

impl Gate {
    pub fn arity(&self) -> usize {
        match self {
            Gate::Not => 1,
            Gate::Xor => 2,
            Gate::And(n) | Gate::Or(n) => *n,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Gate::Not => "not",
            Gate::And(_) => "and",
            Gate::Or(_) => "or",
            Gate::Xor => "xor",
        }
    }
}

/// A reference to a node conclusion; `port` picks a fan-out conclusion and
/// is 0 for single-conclusion nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub node: Symbol,
    pub port: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Input { label: Symbol },
    Internal { label: Symbol, op: Gate, premises: Vec<Edge> },
    FanOut { label: Symbol, premise: Edge, conclusions: usize },
    Output { label: Symbol, premise: Edge },
}

impl Node {
    pub fn label(&self) -> Symbol {
        match self {
            Node::Input { label }
            | Node::Internal { label, .. }
            | Node::FanOut { label, .. }
            | Node::Output { label, .. } => *label,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Circuit {
    pub nodes: Vec<Node>,
}

impl Circuit {
    /// Node count, outputs included; the size measure of the bound
    /// `|compile(c)| <= K * |c|`.
    pub fn size(&self) -> u64 {
        self.nodes.len() as u64
    }

    pub fn inputs(&self) -> Vec<Symbol> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Input { label } => Some(*label),
                _ => None,
            })
            .collect()
    }

    pub fn outputs(&self) -> Vec<Symbol> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Output { label, .. } => Some(*label),
                _ => None,
            })
            .collect()
    }
}

/// Level of every logical (input or gate) node.
pub type LevelMap = BTreeMap<Symbol, u64>;

// ---- concrete syntax ----

fn syntax(line: u32, message: impl Into<String>) -> KernelError {
    KernelError::Syntax { span: SourceSpan::point(line, 1), message: message.into() }
}

fn parse_ident(tok: &str, line: u32) -> Result<Symbol> {
    let mut chars = tok.chars();
    let head_ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_');
    if !head_ok || !chars.all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(syntax(line, format!("expected an identifier, got {tok:?}")));
    }
    Ok(Symbol::intern(tok))
}

fn parse_edge(tok: &str, line: u32) -> Result<Edge> {
    match tok.split_once('.') {
        Some((name, port)) => {
            let node = parse_ident(name, line)?;
            let port = port
                .parse::<usize>()
                .map_err(|_| syntax(line, format!("bad conclusion index in {tok:?}")))?;
            Ok(Edge { node, port })
        }
        None => Ok(Edge { node: parse_ident(tok, line)?, port: 0 }),
    }
}

/// Split `name = rhs`, both trimmed.
fn parse_binding(rest: &str, line: u32) -> Result<(&str, &str)> {
    rest.split_once('=')
        .map(|(l, r)| (l.trim(), r.trim()))
        .ok_or_else(|| syntax(line, "expected `name = ...`"))
}

/// Split `head(a, b, c)` into the head and the argument list.
fn parse_call<'a>(rhs: &'a str, line: u32) -> Result<(&'a str, Vec<&'a str>)> {
    let (head, rest) = rhs
        .split_once('(')
        .ok_or_else(|| syntax(line, format!("expected a call, got {rhs:?}")))?;
    let inner = rest
        .strip_suffix(')')
        .ok_or_else(|| syntax(line, "missing closing parenthesis"))?;
    let args = if inner.trim().is_empty() {
        Vec::new()
    } else {
        inner.split(',').map(str::trim).collect()
    };
    Ok((head.trim(), args))
}

pub fn parse_circuit(src: &str) -> Result<Circuit> {
    let mut nodes = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let line = (i + 1) as u32;
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let (kw, rest) = text
            .split_once(char::is_whitespace)
            .ok_or_else(|| syntax(line, format!("incomplete directive {text:?}")))?;
        let rest = rest.trim();
        match kw {
            "input" => nodes.push(Node::Input { label: parse_ident(rest, line)? }),
            "output" => {
                let (name, rhs) = parse_binding(rest, line)?;
                nodes.push(Node::Output {
                    label: parse_ident(name, line)?,
                    premise: parse_edge(rhs, line)?,
                });
            }
            "gate" => {
                let (name, rhs) = parse_binding(rest, line)?;
                let (opname, args) = parse_call(rhs, line)?;
                let premises =
                    args.iter().map(|a| parse_edge(a, line)).collect::<Result<Vec<_>>>()?;
                let op = match opname {
                    "not" => Gate::Not,
                    "and" => Gate::And(premises.len()),
                    "or" => Gate::Or(premises.len()),
                    "xor" => Gate::Xor,
                    other => return Err(syntax(line, format!("unknown operator {other:?}"))),
                };
                nodes.push(Node::Internal { label: parse_ident(name, line)?, op, premises });
            }
            "fan" => {
                let (name, rhs) = parse_binding(rest, line)?;
                let (head, args) = parse_call(rhs, line)?;
                if head != "split" || args.len() != 2 {
                    return Err(syntax(line, "expected `split(edge, ways)`"));
                }
                let premise = parse_edge(args[0], line)?;
                let conclusions = args[1]
                    .parse::<usize>()
                    .map_err(|_| syntax(line, format!("bad fan width {:?}", args[1])))?;
                nodes.push(Node::FanOut { label: parse_ident(name, line)?, premise, conclusions });
            }
            other => return Err(syntax(line, format!("unknown directive {other:?}"))),
        }
    }
    Ok(Circuit { nodes })
}

pub fn print_circuit(c: &Circuit) -> String {
    let fans: HashSet<Symbol> = c
        .nodes
        .iter()
        .filter_map(|n| match n {
            Node::FanOut { label, .. } => Some(*label),
            _ => None,
        })
        .collect();
    let edge = |e: &Edge| {
        if fans.contains(&e.node) {
            format!("{}.{}", e.node, e.port)
        } else {
            e.node.to_string()
        }
    };
    let mut out = String::new();
    for n in &c.nodes {
        match n {
            Node::Input { label } => out.push_str(&format!("input {label}\n")),
            Node::Internal { label, op, premises } => {
                let args = premises.iter().map(&edge).collect::<Vec<_>>().join(", ");
                out.push_str(&format!("gate {label} = {}({args})\n", op.name()));
            }
            Node::FanOut { label, premise, conclusions } => {
                out.push_str(&format!("fan {label} = split({}, {conclusions})\n", edge(premise)));
            }
            Node::Output { label, premise } => {
                out.push_str(&format!("output {label} = {}\n", edge(premise)));
            }
        }
    }
    out
}

// ---- validation ----

fn invalid(message: impl Into<String>) -> KernelError {
    KernelError::InvalidCircuit(message.into())
}

fn edge_text(e: &Edge) -> String {
    if e.port == 0 {
        e.node.to_string()
    } else {
        format!("{}.{}", e.node, e.port)
    }
}

fn index_of(c: &Circuit) -> HashMap<Symbol, &Node> {
    c.nodes.iter().map(|n| (n.label(), n)).collect()
}

/// The producer of `e`, with the port bound checked.
fn resolve<'a>(index: &HashMap<Symbol, &'a Node>, e: &Edge) -> Result<&'a Node> {
    let n = index
        .get(&e.node)
        .ok_or_else(|| invalid(format!("dangling edge {}: no such node", edge_text(e))))?;
    match n {
        Node::Output { .. } => {
            Err(invalid(format!("dangling edge {}: outputs have no conclusions", edge_text(e))))
        }
        Node::FanOut { conclusions, .. } if e.port >= *conclusions => Err(invalid(format!(
            "dangling edge {}: the fan-out has {conclusions} conclusions",
            edge_text(e)
        ))),
        Node::Input { .. } | Node::Internal { .. } if e.port != 0 => {
            Err(invalid(format!("dangling edge {}: the node has one conclusion", edge_text(e))))
        }
        _ => Ok(n),
    }
}

fn consumed_edges(n: &Node) -> Vec<Edge> {
    match n {
        Node::Input { .. } => Vec::new(),
        Node::Internal { premises, .. } => premises.clone(),
        Node::FanOut { premise, .. } | Node::Output { premise, .. } => vec![*premise],
    }
}

pub fn validate(c: &Circuit) -> Result<()> {
    let mut seen = HashSet::new();
    for n in &c.nodes {
        if !seen.insert(n.label()) {
            return Err(invalid(format!("duplicate node {}", n.label())));
        }
    }
    let index = index_of(c);

    // Arity and edge resolution.
    for n in &c.nodes {
        if let Node::Internal { label, op, premises } = n {
            if premises.len() != op.arity() {
                return Err(invalid(format!(
                    "arity mismatch on {label}: {} takes {} premises, got {}",
                    op.name(),
                    op.arity(),
                    premises.len()
                )));
            }
        }
        for e in consumed_edges(n) {
            resolve(&index, &e)?;
        }
    }

    // Each produced edge is consumed exactly once: the netlist is linear.
    let mut counts: HashMap<Edge, usize> = HashMap::new();
    for n in &c.nodes {
        match n {
            Node::Input { label } | Node::Internal { label, .. } => {
                counts.insert(Edge { node: *label, port: 0 }, 0);
            }
            Node::FanOut { label, conclusions, .. } => {
                for port in 0..*conclusions {
                    counts.insert(Edge { node: *label, port }, 0);
                }
            }
            Node::Output { .. } => {}
        }
    }
    for n in &c.nodes {
        for e in consumed_edges(n) {
            *counts.get_mut(&e).expect("resolved edge") += 1;
        }
    }
    let mut faults: Vec<String> = counts
        .iter()
        .filter(|(_, &k)| k != 1)
        .map(|(e, &k)| {
            if k == 0 {
                format!("edge {} is never consumed", edge_text(e))
            } else {
                format!("edge {} is consumed {k} times", edge_text(e))
            }
        })
        .collect();
    if !faults.is_empty() {
        faults.sort();
        return Err(invalid(faults.join("; ")));
    }

    // Acyclicity, with a witness path on failure.
    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        White,
        Gray,
        Black,
    }
    fn visit(
        label: Symbol,
        index: &HashMap<Symbol, &Node>,
        color: &mut HashMap<Symbol, Color>,
        stack: &mut Vec<Symbol>,
    ) -> Result<()> {
        match color.get(&label).copied().unwrap_or(Color::White) {
            Color::Black => return Ok(()),
            Color::Gray => {
                let from = stack.iter().position(|s| *s == label).unwrap_or(0);
                let mut path: Vec<String> =
                    stack[from..].iter().map(|s| s.to_string()).collect();
                path.push(label.to_string());
                return Err(invalid(format!("cycle: {}", path.join(" -> "))));
            }
            Color::White => {}
        }
        color.insert(label, Color::Gray);
        stack.push(label);
        for e in consumed_edges(index[&label]) {
            visit(e.node, index, color, stack)?;
        }
        stack.pop();
        color.insert(label, Color::Black);
        Ok(())
    }
    let mut color = HashMap::new();
    for n in &c.nodes {
        visit(n.label(), &index, &mut color, &mut Vec::new())?;
    }
    Ok(())
}

// ---- levels ----

fn consumer_of(c: &Circuit) -> HashMap<Edge, Symbol> {
    let mut out = HashMap::new();
    for n in &c.nodes {
        for e in consumed_edges(n) {
            out.insert(e, n.label());
        }
    }
    out
}

struct Leveller<'a> {
    index: HashMap<Symbol, &'a Node>,
    consumer: HashMap<Edge, Symbol>,
    memo: LevelMap,
}

impl Leveller<'_> {
    /// Max over the consumers of `e`, looking through fan-outs: an output
    /// contributes 0 and a gate contributes its level + 1.
    fn edge_need(&mut self, e: Edge) -> u64 {
        let Some(consumer) = self.consumer.get(&e).copied() else {
            return 0;
        };
        enum Via {
            Out,
            Gate(Symbol),
            Fan(Symbol, usize),
        }
        let via = match self.index[&consumer] {
            Node::Output { .. } => Via::Out,
            Node::Internal { label, .. } => Via::Gate(*label),
            Node::FanOut { label, conclusions, .. } => Via::Fan(*label, *conclusions),
            Node::Input { .. } => unreachable!("inputs consume nothing"),
        };
        match via {
            Via::Out => 0,
            Via::Gate(g) => self.logical(g) + 1,
            Via::Fan(f, ways) => {
                (0..ways).map(|port| self.edge_need(Edge { node: f, port })).max().unwrap_or(0)
            }
        }
    }

    fn logical(&mut self, label: Symbol) -> u64 {
        if let Some(l) = self.memo.get(&label) {
            return *l;
        }
        let l = self.edge_need(Edge { node: label, port: 0 });
        self.memo.insert(label, l);
        l
    }
}

/// Level of every input and gate; validates first.
pub fn levels(c: &Circuit) -> Result<LevelMap> {
    validate(c)?;
    let mut lv = Leveller { index: index_of(c), consumer: consumer_of(c), memo: LevelMap::new() };
    for n in &c.nodes {
        if matches!(n, Node::Input { .. } | Node::Internal { .. }) {
            lv.logical(n.label());
        }
    }
    Ok(lv.memo)
}

/// The circuit's level: the greatest level of its logical nodes.
pub fn circuit_level(c: &Circuit) -> Result<u64> {
    Ok(levels(c)?.values().max().copied().unwrap_or(0))
}

/// Rewire every fan-out whose premise is another fan-out's conclusion
/// through a fresh unary `and` buffer, so that every fan-out premise is a
/// logical edge.
pub fn normalize_fanouts(c: &Circuit) -> Circuit {
    let fans: HashSet<Symbol> = c
        .nodes
        .iter()
        .filter_map(|n| match n {
            Node::FanOut { label, .. } => Some(*label),
            _ => None,
        })
        .collect();
    let mut labels: HashSet<Symbol> = c.nodes.iter().map(|n| n.label()).collect();
    let mut nodes = Vec::with_capacity(c.nodes.len());
    for n in &c.nodes {
        match n {
            Node::FanOut { label, premise, conclusions } if fans.contains(&premise.node) => {
                let buf = Symbol::freshen(Symbol::intern(&format!("{label}_b")), |s| {
                    !labels.contains(&s)
                });
                labels.insert(buf);
                nodes.push(Node::Internal { label: buf, op: Gate::And(1), premises: vec![*premise] });
                nodes.push(Node::FanOut {
                    label: *label,
                    premise: Edge { node: buf, port: 0 },
                    conclusions: *conclusions,
                });
            }
            other => nodes.push(other.clone()),
        }
    }
    Circuit { nodes }
}

// ---- the gate and fan-out encodings ----

fn b() -> Ty {
    sugar::bool_ty()
}

fn sym(s: &str) -> Symbol {
    Symbol::intern(s)
}

fn elab_closed(t: &Term, at: &Ty) -> Derivation {
    elaborate(&Context::empty(), t, at, &Hints::default())
        .expect("a pinned closed encoding failed to elaborate")
        .derivation
}

/// `{x:#B} => x : B`.
fn der_var(x: Symbol) -> Derivation {
    let inner = Symbol::freshen(x, |s| s != x);
    mk_der(mk_ax(inner, b()), x, inner)
}

/// `{x:#B} => x : #B`: dereliction followed by promotion, the modal axiom.
fn sharp_ax(x: Symbol) -> Derivation {
    mk_prom(der_var(x))
}

/// From `G1 => M : A` and `G2 => N : C` build `G1,G2 => <M,N> : A (x) C`.
fn pair_deriv(dl: Derivation, dr: Derivation) -> Derivation {
    let (lj, rj) = (dl.conclusion().clone(), dr.conclusion().clone());
    let mut used = free_ty_vars(&lj.ty);
    used.extend(free_ty_vars(&rj.ty));
    for t in lj.ctx.types().chain(rj.ctx.types()) {
        used.extend(free_ty_vars(t));
    }
    let g = Symbol::freshen(sym("g"), |s| !used.contains(&s));
    let fresh = |base: &str| {
        Symbol::freshen(sym(base), |s| lj.ctx.lookup(s).is_none() && rj.ctx.lookup(s).is_none())
    };
    let (p, p2, r) = (fresh("p"), fresh("p2"), sym("r"));
    let spine = mk_impl_l(dr, mk_ax(r, tvar_s(g)), r, p2);
    let spine = mk_impl_l(dl, spine, p2, p);
    mk_forall_r(mk_impl_r(spine, p), sym("g"), g)
}

/// Apply a derived `forall`-typed head to one argument at the given
/// instantiation: from `=> S : forall a. F` with `F[a:=payload] = A -o C`
/// and `=> N : A`, build the judgment for `S N : C`.
fn apply_inst(df: Derivation, payload: &Ty, da: Derivation) -> Derivation {
    let fty = df.conclusion().ty.clone();
    let Type::Forall(alpha, fbody) = &*fty else {
        panic!("apply_inst on an unquantified head");
    };
    let inst = subst_ty(fbody, *alpha, payload);
    let Type::Arrow(_, cod) = &*inst else {
        panic!("instantiation is not an arrow");
    };
    let (fj, aj) = (df.conclusion().ctx.clone(), da.conclusion().ctx.clone());
    let h = Symbol::freshen(sym("h"), |s| fj.lookup(s).is_none() && aj.lookup(s).is_none());
    let r = sym("r");
    let step = mk_impl_l(da, mk_ax(r, cod.clone()), r, h);
    mk_cut(df, mk_forall_l(step, h, fty.clone(), payload.clone()), h)
}

/// `let S be x,y in M` in its explicit form `S (\x.\y. M)`.
fn elim_pair(scrut: Derivation, x: Symbol, y: Symbol, body: Derivation) -> Derivation {
    let res = body.conclusion().ty.clone();
    let cont = mk_impl_r(mk_impl_r(body, y), x);
    apply_inst(scrut, &res, cont)
}

/// Left-nested components of a tensor type.
fn tensor_parts(t: &Ty) -> (Ty, Ty) {
    let Type::Forall(_, body) = &**t else { panic!("not a tensor: no quantifier") };
    let Type::Arrow(k, _) = &**body else { panic!("not a tensor: no continuation") };
    let Type::Arrow(a, rest) = &**k else { panic!("not a tensor: missing component") };
    let Type::Arrow(c, _) = &**rest else { panic!("not a tensor: missing component") };
    (a.clone(), c.clone())
}

/// `let S be v1,...,vk in M` over a left-nested tensor, as nested binary
/// eliminations; a single binder is a plain redex `(\v. M) S`.
fn elim_tuple(scrut: Derivation, vars: &[Symbol], body: Derivation) -> Derivation {
    match vars {
        [] => panic!("tuple elimination needs at least one binder"),
        [v] => apply_deriv(mk_impl_r(body, *v), scrut),
        [v0, v1] => elim_pair(scrut, *v0, *v1, body),
        [rest @ .., last] => {
            let (left_ty, _) = tensor_parts(&scrut.conclusion().ty);
            let bj = body.conclusion().ctx.clone();
            let q = Symbol::freshen(sym("q"), |s| {
                bj.lookup(s).is_none() && !vars.contains(&s)
            });
            let inner = elim_tuple(mk_ax(q, left_ty), rest, body);
            elim_pair(scrut, q, *last, inner)
        }
    }
}

fn tt_deriv() -> Derivation {
    elab_closed(&sugar::tt(), &b())
}

fn ff_deriv() -> Derivation {
    elab_closed(&sugar::ff(), &b())
}

/// `not = \b.\x.\y. b y x : B -o B`.
fn not_derivation() -> Derivation {
    let (bv, x, y, r, gn) = (sym("b"), sym("x"), sym("y"), sym("r"), sym("gn"));
    let g = tvar_s(gn);
    let spine = mk_impl_l(mk_ax(x, g.clone()), mk_ax(r, sugar::tensor_ty(g.clone(), g.clone())), r, sym("f1"));
    let spine = mk_impl_l(mk_ax(y, g.clone()), spine, sym("f1"), bv);
    let inst = mk_forall_l(spine, bv, b(), g);
    let lam = mk_impl_r(mk_impl_r(inst, y), x);
    mk_impl_r(mk_forall_r(lam, sym("a"), gn), bv)
}

/// The pinned boolean eraser `\z. let z I I be x,y in let y be I in x`,
/// derived at `B -o 1`.
fn bool_eraser_derivation() -> Derivation {
    let one = sugar::unit_ty();
    let (z, x, y, r) = (sym("z"), sym("x"), sym("y"), sym("r"));
    // z I I : 1 (x) 1 with z : B instantiated at 1.
    let spine = mk_impl_l(
        unit_value_derivation(),
        mk_ax(r, sugar::tensor_ty(one.clone(), one.clone())),
        r,
        sym("h1"),
    );
    let spine = mk_impl_l(unit_value_derivation(), spine, sym("h1"), z);
    let scrut = mk_forall_l(spine, z, b(), one.clone());
    // \x.\y. y x : 1 -o 1 -o 1, instantiating y : 1 at 1.
    let c = mk_impl_l(mk_ax(x, one.clone()), mk_ax(sym("r2"), one.clone()), sym("r2"), y);
    let c = mk_forall_l(c, y, one.clone(), one.clone());
    let cont = mk_impl_r(mk_impl_r(c, y), x);
    mk_impl_r(apply_inst(scrut, &one, cont), z)
}

/// The pinned first projection `\z. z (\x.\y. (E_B y) x) : B (x) B -o B`.
fn bool_pi1_derivation() -> Derivation {
    let (z, x, y, r) = (sym("z"), sym("x"), sym("y"), sym("r"));
    let erased = apply_deriv(bool_eraser_derivation(), mk_ax(y, b()));
    let body = apply_unit_deriv(erased, mk_ax(x, b()));
    let cont = mk_impl_r(mk_impl_r(body, y), x);
    let spine = mk_impl_l(cont, mk_ax(r, b()), r, z);
    mk_impl_r(mk_forall_l(spine, z, sugar::tensor_ty(b(), b()), b()), z)
}

/// `and2 = \x1.\x2. pi1 (x1 x2 ff)` / `or2 = \x1.\x2. pi1 (x1 tt x2)`.
fn binary_gate_derivation(is_and: bool) -> Derivation {
    let (x1, x2, r, k) = (sym("x1"), sym("x2"), sym("r"), sym("k"));
    let bb = sugar::tensor_ty(b(), b());
    let spine = if is_and {
        let s = mk_impl_l(ff_deriv(), mk_ax(r, bb), r, k);
        mk_impl_l(mk_ax(x2, b()), s, k, x1)
    } else {
        let s = mk_impl_l(mk_ax(x2, b()), mk_ax(r, bb), r, k);
        mk_impl_l(tt_deriv(), s, k, x1)
    };
    let inst = mk_forall_l(spine, x1, b(), b());
    let body = apply_deriv(bool_pi1_derivation(), inst);
    mk_impl_r(mk_impl_r(body, x2), x1)
}

/// `op^{n+2} = \x1...x_{n+2}. op2 (op^{n+1} x1 ... x_{n+1}) x_{n+2}`.
fn nary_gate_derivation(is_and: bool, n: usize) -> Derivation {
    let vars: Vec<Symbol> = (1..=n).map(|i| sym(&format!("x{i}"))).collect();
    let prev = gate_derivation(&if is_and { Gate::And(n - 1) } else { Gate::Or(n - 1) });
    let mut spine = prev;
    for v in &vars[..n - 1] {
        spine = apply_deriv(spine, mk_ax(*v, b()));
    }
    let body = apply_deriv(apply_deriv(binary_gate_derivation(is_and), spine), mk_ax(vars[n - 1], b()));
    vars.iter().rev().fold(body, |d, v| mk_impl_r(d, *v))
}

/// `xor = \x1.\x2. (pi1 (x1 not I)) x2`: the first projection at `B -o B`
/// keeps the branch picked by `x1` and erases the other by saturation.
fn xor_derivation() -> Derivation {
    let (x1, x2, r, k, q) = (sym("x1"), sym("x2"), sym("r"), sym("k"), sym("q"));
    let bf = arrow(b(), b());
    let proj = projection_derivation(&b(), &[1])
        .expect("the boolean projection always synthesizes");
    let idb = mk_impl_r(mk_ax(q, b()), q);
    let spine = mk_impl_l(idb, mk_ax(r, sugar::tensor_ty(bf.clone(), bf.clone())), r, k);
    let spine = mk_impl_l(not_derivation(), spine, k, x1);
    let inst = mk_forall_l(spine, x1, b(), bf);
    let body = apply_deriv(apply_deriv(proj, inst), mk_ax(x2, b()));
    mk_impl_r(mk_impl_r(body, x2), x1)
}

/// Closed derivation of the gate's encoding at `B -o ... -o B`.
pub fn gate_derivation(op: &Gate) -> Derivation {
    match op {
        Gate::Not => not_derivation(),
        Gate::And(0) => tt_deriv(),
        Gate::Or(0) => ff_deriv(),
        Gate::And(1) | Gate::Or(1) => {
            let x = sym("x");
            mk_impl_r(mk_ax(x, b()), x)
        }
        Gate::And(2) => binary_gate_derivation(true),
        Gate::Or(2) => binary_gate_derivation(false),
        Gate::And(n) => nary_gate_derivation(true, *n),
        Gate::Or(n) => nary_gate_derivation(false, *n),
        Gate::Xor => xor_derivation(),
    }
}

/// The gate's encoding term.
pub fn gate_term(op: &Gate) -> Term {
    gate_derivation(op).conclusion().subject.clone()
}

/// Closed derivation of `out^k : #B -o #B (x) ... (x) #B` (`1` for k = 0,
/// `B` for k = 1): discard, dereliction, or a chain of contractions with
/// the closed witness `tt`.
pub fn fanout_derivation(k: usize) -> Derivation {
    let (x, x1, x2) = (sym("x"), sym("x1"), sym("x2"));
    match k {
        0 => mk_impl_r(mk_weak(unit_value_derivation(), x, b()), x),
        1 => mk_impl_r(der_var(x), x),
        2 => {
            let pair = pair_deriv(sharp_ax(x1), sharp_ax(x2));
            mk_impl_r(mk_contr(pair, tt_deriv(), x, x1, x2), x)
        }
        _ => {
            let left = apply_deriv(fanout_derivation(k - 1), sharp_ax(x1));
            let pair = pair_deriv(left, sharp_ax(x2));
            mk_impl_r(mk_contr(pair, tt_deriv(), x, x1, x2), x)
        }
    }
}

/// The fan-out encoding term.
pub fn fanout_term(k: usize) -> Term {
    fanout_derivation(k).conclusion().subject.clone()
}

// ---- compilation ----

#[derive(Debug, Clone)]
pub struct CompiledCircuit {
    pub term: Term,
    pub derivation: Derivation,
    pub level: u64,
    pub inputs: usize,
    pub outputs: usize,
}

/// Variable standing for an edge: the node label, or `f.i` for a fan-out
/// conclusion (parsed labels cannot contain dots, so these never collide).
fn edge_var(index: &HashMap<Symbol, &Node>, e: &Edge) -> Symbol {
    match index[&e.node] {
        Node::FanOut { .. } => Symbol::intern(&format!("{}.{}", e.node, e.port)),
        _ => e.node,
    }
}

pub fn compile(c: &Circuit) -> Result<CompiledCircuit> {
    validate(c)?;
    let c = normalize_fanouts(c);
    let lv = levels(&c)?;
    let index = index_of(&c);
    let consumer = consumer_of(&c);

    let inputs = c.inputs();
    let output_premises: Vec<Edge> = c
        .nodes
        .iter()
        .filter_map(|n| match n {
            Node::Output { premise, .. } => Some(*premise),
            _ => None,
        })
        .collect();
    if inputs.is_empty() || output_premises.is_empty() {
        return Err(invalid("compilation needs at least one input and one output"));
    }

    // Wires of each level: fanned wires first in fan-out declaration order,
    // then the rest in node declaration order.
    let decl_idx: HashMap<Symbol, usize> =
        c.nodes.iter().enumerate().map(|(i, n)| (n.label(), i)).collect();
    let fan_of = |label: Symbol| -> Option<&Node> {
        consumer
            .get(&Edge { node: label, port: 0 })
            .and_then(|f| index.get(f))
            .filter(|n| matches!(n, Node::FanOut { .. }))
            .copied()
    };
    let top = lv.values().max().copied().unwrap_or(0);
    let mut groups: Vec<Vec<Symbol>> = vec![Vec::new(); (top + 1) as usize];
    for n in &c.nodes {
        if matches!(n, Node::Input { .. } | Node::Internal { .. }) {
            groups[lv[&n.label()] as usize].push(n.label());
        }
    }
    for g in &mut groups {
        g.sort_by_key(|m| match fan_of(*m) {
            Some(f) => (0, decl_idx[&f.label()]),
            None => (1, decl_idx[m]),
        });
    }

    // Level -1: the tuple of output wires, derelicted to B.
    let mut d = output_premises
        .iter()
        .map(|e| der_var(edge_var(&index, e)))
        .reduce(pair_deriv)
        .expect("at least one output");

    for members in &groups {
        // Fan-out lets, innermost first so they nest in member order.
        for m in members.iter().rev() {
            let Some(Node::FanOut { label, conclusions, .. }) = fan_of(*m) else {
                continue;
            };
            let scrut = apply_deriv(fanout_derivation(*conclusions), sharp_ax(*m));
            d = match conclusions {
                0 => apply_unit_deriv(scrut, d),
                _ => {
                    let vars: Vec<Symbol> = (0..*conclusions)
                        .map(|port| edge_var(&index, &Edge { node: *label, port }))
                        .collect();
                    elim_tuple(scrut, &vars, d)
                }
            };
        }
        for m in members.iter().rev() {
            d = mk_impl_r(d, *m);
        }
        for m in members {
            let arg = match index[m] {
                Node::Input { .. } => sharp_ax(*m),
                Node::Internal { op, premises, .. } => {
                    let mut g = gate_derivation(op);
                    for e in premises {
                        g = apply_deriv(g, der_var(edge_var(&index, e)));
                    }
                    mk_prom(g)
                }
                _ => unreachable!("levels hold logical nodes"),
            };
            d = apply_deriv(d, arg);
        }
    }

    // The outer abstraction over the input tuple.
    let xt = Symbol::freshen(sym("x"), |s| !index.contains_key(&s));
    let scrut = if inputs.len() == 1 {
        sharp_ax(xt)
    } else {
        mk_ax(xt, sugar::tensor_tys(&vec![bang(b()); inputs.len()]))
    };
    d = mk_impl_r(elim_tuple(scrut, &inputs, d), xt);

    debug_assert!(check_dag(&d, System::Lem).is_ok());
    Ok(CompiledCircuit {
        term: d.conclusion().subject.clone(),
        derivation: d,
        level: top,
        inputs: inputs.len(),
        outputs: output_premises.len(),
    })
}

// ---- evaluation and the simulation check ----

fn op_eval(op: &Gate, args: &[bool]) -> bool {
    match op {
        Gate::Not => !args[0],
        Gate::And(_) => args.iter().all(|b| *b),
        Gate::Or(_) => args.iter().any(|b| *b),
        Gate::Xor => args[0] != args[1],
    }
}

/// Direct semantic oracle: topological evaluation of the netlist.
pub fn eval_boolean(c: &Circuit, inputs: &[bool]) -> Result<Vec<bool>> {
    validate(c)?;
    let ins = c.inputs();
    if ins.len() != inputs.len() {
        return Err(invalid(format!(
            "expected {} input bits, got {}",
            ins.len(),
            inputs.len()
        )));
    }
    let given: HashMap<Symbol, bool> = ins.iter().copied().zip(inputs.iter().copied()).collect();
    let index = index_of(c);
    fn value(
        e: &Edge,
        index: &HashMap<Symbol, &Node>,
        given: &HashMap<Symbol, bool>,
        memo: &mut HashMap<Edge, bool>,
    ) -> bool {
        if let Some(v) = memo.get(e) {
            return *v;
        }
        let v = match index[&e.node] {
            Node::Input { label } => given[label],
            Node::Internal { op, premises, .. } => {
                let args: Vec<bool> =
                    premises.iter().map(|p| value(p, index, given, memo)).collect();
                op_eval(op, &args)
            }
            Node::FanOut { premise, .. } => value(premise, index, given, memo),
            Node::Output { .. } => unreachable!("outputs produce no edges"),
        };
        memo.insert(*e, v);
        v
    }
    let mut memo = HashMap::new();
    Ok(c.nodes
        .iter()
        .filter_map(|n| match n {
            Node::Output { premise, .. } => Some(value(premise, &index, &given, &mut memo)),
            _ => None,
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct SimReport {
    pub expected: Vec<bool>,
    pub reduced: Option<Term>,
    pub steps: u64,
    pub fuel_exhausted: bool,
    pub agrees: bool,
}

fn bool_term(v: bool) -> Term {
    if v {
        sugar::tt()
    } else {
        sugar::ff()
    }
}

fn bool_tuple(bits: &[bool]) -> Term {
    match bits {
        [one] => bool_term(*one),
        many => sugar::tuple(&many.iter().map(|v| bool_term(*v)).collect::<Vec<_>>()),
    }
}

/// Reduce the compiled term on an input tuple and compare with the oracle.
/// Fuel exhaustion is reported in the flag, not as an error.
pub fn simulate_check(c: &Circuit, inputs: &[bool], fuel: u64) -> Result<SimReport> {
    let expected = eval_boolean(c, inputs)?;
    let compiled = compile(c)?;
    let applied = term::app(compiled.term.clone(), bool_tuple(inputs));
    match rewrite::normalize_full(&applied, fuel, false) {
        Ok(n) => {
            let want = rewrite::beta_eta_nf(&bool_tuple(&expected), fuel)?;
            let got = rewrite::beta_eta_nf(&n.term, fuel)?;
            let agrees = alpha_eq(&got, &want);
            Ok(SimReport {
                expected,
                reduced: Some(n.term),
                steps: n.steps,
                fuel_exhausted: false,
                agrees,
            })
        }
        Err(KernelError::Resource(_)) => Ok(SimReport {
            expected,
            reduced: None,
            steps: fuel,
            fuel_exhausted: true,
            agrees: false,
        }),
        Err(e) => Err(e),
    }
}
