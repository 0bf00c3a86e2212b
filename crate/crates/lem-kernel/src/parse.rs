//! Concrete syntax for types and terms.
//!
//! Types: variables `a..z` followed by letters or digits, `A -o B`
//! (right-associative), `forall a. A`, `#A` for the modality, `A (x) B` and
//! `1` for the tensor and unit encodings, parentheses. Terms: `\x. M`,
//! application by juxtaposition, `discard[T] M in N`, `copy[T; V] M as x, y
//! in N`, plus the sugar `I`, `<M, N>`, `let M be x, y in N` and `let M be
//! I in N`.
//!
//! Parsing is two-staged for terms: a raw tree with spans first, then a
//! linearity- and well-formedness-checked reconstruction, so violations are
//! reported with the offending variable and position instead of a panic.

use crate::error::{KernelError, Result, SourceSpan};
use crate::symbol::Symbol;
use crate::sugar;
use crate::term::{self, Term};
use crate::ty::{self, Ty};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Tok {
    Backslash,
    Dot,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Semicolon,
    Comma,
    Langle,
    Rangle,
    Hash,
    Lollipop,
    TensorOp,
    One,
    KwForall,
    KwDiscard,
    KwCopy,
    KwLet,
    KwBe,
    KwAs,
    KwIn,
    KwIdentity,
    Ident(Symbol),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Backslash => "'\\'".into(),
            Tok::Dot => "'.'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::Semicolon => "';'".into(),
            Tok::Comma => "','".into(),
            Tok::Langle => "'<'".into(),
            Tok::Rangle => "'>'".into(),
            Tok::Hash => "'#'".into(),
            Tok::Lollipop => "'-o'".into(),
            Tok::TensorOp => "'(x)'".into(),
            Tok::One => "'1'".into(),
            Tok::KwForall => "'forall'".into(),
            Tok::KwDiscard => "'discard'".into(),
            Tok::KwCopy => "'copy'".into(),
            Tok::KwLet => "'let'".into(),
            Tok::KwBe => "'be'".into(),
            Tok::KwAs => "'as'".into(),
            Tok::KwIn => "'in'".into(),
            Tok::KwIdentity => "'I'".into(),
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Eof => "end of input".into(),
        }
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src: src.as_bytes(), pos: 0, line: 1, col: 1 }
    }

    fn bump(&mut self) -> u8 {
        let c = self.src[self.pos];
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        c
    }

    fn peek(&self, k: usize) -> Option<u8> {
        self.src.get(self.pos + k).copied()
    }

    fn here(&self) -> (u32, u32) {
        (self.line, self.col)
    }

    fn tokens(mut self) -> Result<Vec<(Tok, SourceSpan)>> {
        let mut out = Vec::new();
        loop {
            while matches!(self.peek(0), Some(b' ' | b'\t' | b'\r' | b'\n')) {
                self.bump();
            }
            let start = self.here();
            let Some(c) = self.peek(0) else {
                out.push((Tok::Eof, SourceSpan::point(start.0, start.1)));
                return Ok(out);
            };
            let tok = match c {
                b'\\' => {
                    self.bump();
                    Tok::Backslash
                }
                b'.' => {
                    self.bump();
                    Tok::Dot
                }
                b'(' => {
                    if self.peek(1) == Some(b'x') && self.peek(2) == Some(b')') {
                        self.bump();
                        self.bump();
                        self.bump();
                        Tok::TensorOp
                    } else {
                        self.bump();
                        Tok::LParen
                    }
                }
                b')' => {
                    self.bump();
                    Tok::RParen
                }
                b'[' => {
                    self.bump();
                    Tok::LBracket
                }
                b']' => {
                    self.bump();
                    Tok::RBracket
                }
                b';' => {
                    self.bump();
                    Tok::Semicolon
                }
                b',' => {
                    self.bump();
                    Tok::Comma
                }
                b'<' => {
                    self.bump();
                    Tok::Langle
                }
                b'>' => {
                    self.bump();
                    Tok::Rangle
                }
                b'#' => {
                    self.bump();
                    Tok::Hash
                }
                b'-' => {
                    self.bump();
                    if self.peek(0) == Some(b'o') {
                        self.bump();
                        Tok::Lollipop
                    } else {
                        return Err(KernelError::Syntax {
                            span: SourceSpan::point(start.0, start.1),
                            message: "expected '-o'".into(),
                        });
                    }
                }
                b'1' => {
                    self.bump();
                    Tok::One
                }
                b'I' => {
                    self.bump();
                    Tok::KwIdentity
                }
                b'a'..=b'z' => {
                    let mut name = String::new();
                    while matches!(self.peek(0), Some(b'a'..=b'z' | b'0'..=b'9' | b'_')) {
                        name.push(self.bump() as char);
                    }
                    match name.as_str() {
                        "forall" => Tok::KwForall,
                        "discard" => Tok::KwDiscard,
                        "copy" => Tok::KwCopy,
                        "let" => Tok::KwLet,
                        "be" => Tok::KwBe,
                        "as" => Tok::KwAs,
                        "in" => Tok::KwIn,
                        _ => Tok::Ident(Symbol::intern(&name)),
                    }
                }
                other => {
                    return Err(KernelError::Syntax {
                        span: SourceSpan::point(start.0, start.1),
                        message: format!("unexpected character {:?}", other as char),
                    });
                }
            };
            let end = self.here();
            out.push((tok, SourceSpan { start, end }));
        }
    }
}

struct Parser {
    toks: Vec<(Tok, SourceSpan)>,
    pos: usize,
}

#[derive(Debug)]
enum RawNode {
    Var(Symbol),
    Lam(Symbol, Box<RawTerm>),
    App(Box<RawTerm>, Box<RawTerm>),
    Discard(Ty, Box<RawTerm>, Box<RawTerm>),
    Copy(Ty, Box<RawTerm>, Box<RawTerm>, Symbol, Symbol, Box<RawTerm>),
    /// `<M, N>`; expanded at build time so the package binder is fresh.
    Pair(Box<RawTerm>, Box<RawTerm>),
}

#[derive(Debug)]
struct RawTerm {
    node: RawNode,
    span: SourceSpan,
}

impl Parser {
    fn peek(&self) -> Tok {
        self.toks[self.pos].0
    }

    fn peek_span(&self) -> SourceSpan {
        self.toks[self.pos].1
    }

    fn next(&mut self) -> (Tok, SourceSpan) {
        let t = self.toks[self.pos];
        if !matches!(t.0, Tok::Eof) {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<SourceSpan> {
        let (got, span) = self.next();
        if got == want {
            Ok(span)
        } else {
            Err(KernelError::Syntax {
                span,
                message: format!("expected {}, found {}", want.describe(), got.describe()),
            })
        }
    }

    fn expect_ident(&mut self) -> Result<(Symbol, SourceSpan)> {
        let (got, span) = self.next();
        match got {
            Tok::Ident(s) => Ok((s, span)),
            other => Err(KernelError::Syntax {
                span,
                message: format!("expected a variable, found {}", other.describe()),
            }),
        }
    }

    // ---- types ----

    fn ty(&mut self) -> Result<Ty> {
        if self.peek() == Tok::KwForall {
            let start = self.next().1;
            let (v, _) = self.expect_ident()?;
            self.expect(Tok::Dot)?;
            let body = self.ty()?;
            if matches!(&*body, ty::Type::Bang(_)) {
                return Err(KernelError::IllFormedModality {
                    span: Some(start),
                    message: "a quantifier cannot bind over a modal type".into(),
                });
            }
            return Ok(ty::forall(v, body));
        }
        self.ty_arrow()
    }

    fn ty_arrow(&mut self) -> Result<Ty> {
        let lhs = self.ty_tensor()?;
        if self.peek() == Tok::Lollipop {
            let span = self.next().1;
            let rhs = self.ty()?;
            if matches!(&*rhs, ty::Type::Bang(_)) {
                return Err(KernelError::IllFormedModality {
                    span: Some(span),
                    message: "an arrow cannot return a modal type".into(),
                });
            }
            return Ok(ty::arrow(lhs, rhs));
        }
        Ok(lhs)
    }

    fn ty_tensor(&mut self) -> Result<Ty> {
        let mut acc = self.ty_atom()?;
        while self.peek() == Tok::TensorOp {
            self.next();
            let rhs = self.ty_atom()?;
            acc = sugar::tensor_ty(acc, rhs);
        }
        Ok(acc)
    }

    fn ty_atom(&mut self) -> Result<Ty> {
        let (tok, span) = self.next();
        match tok {
            Tok::One => Ok(sugar::unit_ty()),
            Tok::Ident(v) => Ok(ty::tvar_s(v)),
            // A parenthesized type variable named x lexes as the tensor
            // operator; put it back together here.
            Tok::TensorOp => Ok(ty::tvar("x")),
            Tok::Hash => {
                let inner = self.ty_atom()?;
                if !ty::is_closed_ty(&inner) {
                    let frees: Vec<String> =
                        ty::free_ty_vars(&inner).iter().map(|s| s.to_string()).collect();
                    return Err(KernelError::IllFormedModality {
                        span: Some(span),
                        message: format!("modality on open type (free: {})", frees.join(", ")),
                    });
                }
                if ty::has_forall_at(&inner, false) {
                    return Err(KernelError::IllFormedModality {
                        span: Some(span),
                        message: "modality on a type with a negative quantifier".into(),
                    });
                }
                Ok(ty::bang(inner))
            }
            Tok::LParen => {
                let t = self.ty()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            other => Err(KernelError::Syntax {
                span,
                message: format!("expected a type, found {}", other.describe()),
            }),
        }
    }

    // ---- terms ----

    fn raw_term(&mut self) -> Result<RawTerm> {
        let start = self.peek_span();
        match self.peek() {
            Tok::Backslash => {
                self.next();
                let (v, _) = self.expect_ident()?;
                self.expect(Tok::Dot)?;
                let body = self.raw_term()?;
                let span = start.merge(body.span);
                Ok(RawTerm { node: RawNode::Lam(v, Box::new(body)), span })
            }
            Tok::KwDiscard => {
                self.next();
                self.expect(Tok::LBracket)?;
                let ann = self.ty()?;
                self.expect(Tok::RBracket)?;
                let scrut = self.raw_app()?;
                self.expect(Tok::KwIn)?;
                let body = self.raw_term()?;
                let span = start.merge(body.span);
                Ok(RawTerm {
                    node: RawNode::Discard(ann, Box::new(scrut), Box::new(body)),
                    span,
                })
            }
            Tok::KwCopy => {
                self.next();
                self.expect(Tok::LBracket)?;
                let ann = self.ty()?;
                self.expect(Tok::Semicolon)?;
                let witness = self.raw_term()?;
                self.expect(Tok::RBracket)?;
                let scrut = self.raw_app()?;
                self.expect(Tok::KwAs)?;
                let (l, _) = self.expect_ident()?;
                self.expect(Tok::Comma)?;
                let (r, _) = self.expect_ident()?;
                self.expect(Tok::KwIn)?;
                let body = self.raw_term()?;
                let span = start.merge(body.span);
                Ok(RawTerm {
                    node: RawNode::Copy(
                        ann,
                        Box::new(witness),
                        Box::new(scrut),
                        l,
                        r,
                        Box::new(body),
                    ),
                    span,
                })
            }
            Tok::KwLet => {
                self.next();
                let scrut = self.raw_app()?;
                self.expect(Tok::KwBe)?;
                if self.peek() == Tok::KwIdentity {
                    self.next();
                    self.expect(Tok::KwIn)?;
                    let body = self.raw_term()?;
                    let span = start.merge(body.span);
                    // let M be I in N  =  M N
                    Ok(RawTerm {
                        node: RawNode::App(Box::new(scrut), Box::new(body)),
                        span,
                    })
                } else {
                    let (x, _) = self.expect_ident()?;
                    self.expect(Tok::Comma)?;
                    let (y, _) = self.expect_ident()?;
                    self.expect(Tok::KwIn)?;
                    let body = self.raw_term()?;
                    let span = start.merge(body.span);
                    // let M be x,y in N  =  M (\x. \y. N)
                    let inner_span = body.span;
                    let lam_y = RawTerm {
                        node: RawNode::Lam(y, Box::new(body)),
                        span: inner_span,
                    };
                    let lam_x = RawTerm { node: RawNode::Lam(x, Box::new(lam_y)), span: inner_span };
                    Ok(RawTerm {
                        node: RawNode::App(Box::new(scrut), Box::new(lam_x)),
                        span,
                    })
                }
            }
            _ => self.raw_app(),
        }
    }

    fn starts_atom(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Ident(_) | Tok::KwIdentity | Tok::LParen | Tok::Langle | Tok::TensorOp
        )
    }

    fn raw_app(&mut self) -> Result<RawTerm> {
        let mut acc = self.raw_atom()?;
        while self.starts_atom() {
            let arg = self.raw_atom()?;
            let span = acc.span.merge(arg.span);
            acc = RawTerm { node: RawNode::App(Box::new(acc), Box::new(arg)), span };
        }
        Ok(acc)
    }

    fn raw_atom(&mut self) -> Result<RawTerm> {
        let (tok, span) = self.next();
        match tok {
            Tok::Ident(v) => Ok(RawTerm { node: RawNode::Var(v), span }),
            // I = \x. x
            Tok::KwIdentity => {
                let x = Symbol::intern("x");
                Ok(RawTerm {
                    node: RawNode::Lam(
                        x,
                        Box::new(RawTerm { node: RawNode::Var(x), span }),
                    ),
                    span,
                })
            }
            // A parenthesized term variable named x lexes as the tensor
            // operator; recover it.
            Tok::TensorOp => Ok(RawTerm { node: RawNode::Var(Symbol::intern("x")), span }),
            Tok::LParen => {
                let t = self.raw_term()?;
                let end = self.expect(Tok::RParen)?;
                Ok(RawTerm { node: t.node, span: span.merge(end) })
            }
            Tok::Langle => {
                let m = self.raw_term()?;
                self.expect(Tok::Comma)?;
                let n = self.raw_term()?;
                let end = self.expect(Tok::Rangle)?;
                let span = span.merge(end);
                Ok(RawTerm { node: RawNode::Pair(Box::new(m), Box::new(n)), span })
            }
            other => Err(KernelError::Syntax {
                span,
                message: format!("expected a term, found {}", other.describe()),
            }),
        }
    }
}

/// Validated reconstruction: checks linearity and witness shape, then calls
/// the panicking constructors only on verified input.
fn build(raw: &RawTerm) -> Result<Term> {
    match &raw.node {
        RawNode::Var(v) => Ok(term::var(*v)),
        RawNode::Lam(x, body) => {
            let body_t = build(body)?;
            if !body_t.has_free(*x) {
                return Err(KernelError::NonLinear {
                    span: Some(raw.span),
                    message: format!("binder {x} is never used"),
                });
            }
            Ok(term::lam(*x, body_t))
        }
        RawNode::App(f, a) => {
            let ft = build(f)?;
            let at = build(a)?;
            check_disjoint(&ft, &at, raw.span)?;
            Ok(term::app(ft, at))
        }
        RawNode::Discard(ann, scrut, body) => {
            let st = build(scrut)?;
            let bt = build(body)?;
            check_disjoint(&st, &bt, raw.span)?;
            Ok(term::discard(ann.clone(), st, bt))
        }
        RawNode::Copy(ann, witness, scrut, l, r, body) => {
            let wt = build(witness)?;
            if !wt.is_value() {
                return Err(KernelError::NonLinear {
                    span: Some(raw.span),
                    message: "copy witness must be a closed, pure, normal term".into(),
                });
            }
            let st = build(scrut)?;
            let bt = build(body)?;
            if *l == *r {
                return Err(KernelError::NonLinear {
                    span: Some(raw.span),
                    message: format!("copy binds {l} twice"),
                });
            }
            for b in [l, r] {
                if !bt.has_free(*b) {
                    return Err(KernelError::NonLinear {
                        span: Some(raw.span),
                        message: format!("copy binder {b} is never used"),
                    });
                }
            }
            let mut body_free: Vec<Symbol> =
                bt.free_vars().iter().copied().filter(|v| v != l && v != r).collect();
            body_free.retain(|v| st.has_free(*v));
            if let Some(dup) = body_free.first() {
                return Err(KernelError::NonLinear {
                    span: Some(raw.span),
                    message: format!("variable {dup} is used twice"),
                });
            }
            Ok(term::copy(ann.clone(), wt, st, *l, *r, bt))
        }
        RawNode::Pair(m, n) => {
            let mt = build(m)?;
            let nt = build(n)?;
            check_disjoint(&mt, &nt, raw.span)?;
            Ok(sugar::pair(mt, nt))
        }
    }
}

fn check_disjoint(a: &Term, b: &Term, span: SourceSpan) -> Result<()> {
    for v in a.free_vars() {
        if b.has_free(*v) {
            return Err(KernelError::NonLinear {
                span: Some(span),
                message: format!("variable {v} is used twice"),
            });
        }
    }
    Ok(())
}

fn parser_for(src: &str) -> Result<Parser> {
    Ok(Parser { toks: Lexer::new(src).tokens()?, pos: 0 })
}

pub fn parse_ty(src: &str) -> Result<Ty> {
    let mut p = parser_for(src)?;
    let t = p.ty()?;
    p.expect(Tok::Eof)?;
    ty::check_ty_wf(&t)?;
    Ok(t)
}

pub fn parse_term(src: &str) -> Result<Term> {
    let mut p = parser_for(src)?;
    let raw = p.raw_term()?;
    p.expect(Tok::Eof)?;
    build(&raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::alpha_eq;
    use crate::ty::alpha_eq_ty;

    #[test]
    fn parses_the_numeral_type() {
        let n = parse_ty("#(forall a. a -o a) -o forall a. (a -o a)").unwrap();
        assert!(alpha_eq_ty(&n, &sugar::nat_ty()));
        let n2 = parse_ty("#1 -o 1").unwrap();
        assert!(alpha_eq_ty(&n2, &sugar::nat_ty()));
    }

    #[test]
    fn rejects_modality_on_open_type() {
        let err = parse_ty("#a").unwrap_err();
        assert!(matches!(err, KernelError::IllFormedModality { .. }), "{err}");
        let err = parse_ty("#(1 -o 1)").unwrap_err();
        assert!(err.to_string().contains("negative"), "{err}");
    }

    #[test]
    fn parses_boolean_type_with_tensor_sugar() {
        let b = parse_ty("forall a. a -o a -o a (x) a").unwrap();
        assert!(alpha_eq_ty(&b, &sugar::bool_ty()));
        let nested = parse_ty("a (x) b (x) d").unwrap();
        let explicit = parse_ty("(a (x) b) (x) d").unwrap();
        assert!(alpha_eq_ty(&nested, &explicit));
    }

    #[test]
    fn parenthesized_x_still_works() {
        let t = parse_ty("(x)").unwrap();
        assert!(alpha_eq_ty(&t, &ty::tvar("x")));
        let m = parse_term("\\y. y (x)").unwrap();
        assert_eq!(m.free_vars().len(), 1);
    }

    #[test]
    fn parses_numeral_zero() {
        let z = parse_term("\\f.\\x. discard[1] f in x").unwrap();
        let f = Symbol::intern("f");
        let x = Symbol::intern("x");
        let expected = term::lam(
            f,
            term::lam(x, term::discard(sugar::unit_ty(), term::var(f), term::var(x))),
        );
        assert!(alpha_eq(&z, &expected));
    }

    #[test]
    fn pair_sugar_gives_tt() {
        let t = parse_term("\\x.\\y.<x,y>").unwrap();
        assert!(alpha_eq(&t, &sugar::tt()));
    }

    #[test]
    fn let_sugar_forms() {
        let t = parse_term("let p be a, b in b a").unwrap();
        let expected = sugar::let_pair(
            term::var_named("p"),
            Symbol::intern("a"),
            Symbol::intern("b"),
            term::app(term::var_named("b"), term::var_named("a")),
        );
        assert!(alpha_eq(&t, &expected));
        let u = parse_term("let u be I in v").unwrap();
        assert!(alpha_eq(&u, &term::app(term::var_named("u"), term::var_named("v"))));
    }

    #[test]
    fn copy_surface_syntax() {
        let c = parse_term("copy[1; I] x as x1, x2 in <x1, x2>").unwrap();
        assert!(!c.is_pure());
        assert_eq!(c.free_vars().len(), 1);
    }

    #[test]
    fn linearity_errors_name_the_variable() {
        let err = parse_term("\\x. x x").unwrap_err();
        assert!(err.to_string().contains('x'), "{err}");
        let err = parse_term("\\x. \\y. x").unwrap_err();
        assert!(err.to_string().contains('y'), "{err}");
        let err = parse_term("copy[1; \\x. x x] y as a, b in a b").unwrap_err();
        assert!(err.to_string().contains('x'), "{err}");
    }

    #[test]
    fn witness_must_be_a_value() {
        let err = parse_term("copy[1; \\x. y x] z as a, b in a b").unwrap_err();
        assert!(err.to_string().contains("witness"), "{err}");
    }

    #[test]
    fn print_parse_roundtrip_spot_checks() {
        for src in [
            "\\f. \\x. f x",
            "\\f. \\x. discard[1] f in x",
            "copy[1; I] x as a, b in a b",
            "\\z. z I I (\\x. \\y. y x)",
        ] {
            let t = parse_term(src).unwrap();
            let printed = crate::print::term_to_string(&t);
            let back = parse_term(&printed).unwrap();
            assert!(alpha_eq(&t, &back), "{src} -> {printed}");
        }
        for src in ["1", "#1 -o 1", "forall a. a -o a -o a (x) a", "(a -o b) -o d", "##1"] {
            let t = parse_ty(src).unwrap();
            let printed = crate::print::ty_to_string(&t);
            let back = parse_ty(&printed).unwrap();
            assert!(alpha_eq_ty(&t, &back), "{src} -> {printed}");
        }
    }
}
