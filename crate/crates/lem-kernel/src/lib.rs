//! Proof kernel, interpreter and compilers for a second-order intuitionistic
//! multiplicative linear calculus extended with a modality `#` that licenses
//! erasure (`discard`) and duplication (`copy`) of closed values.
//!
//! The crate is organized around four layers:
//!
//! * syntax: interned names ([`symbol`]), types ([`ty`]), terms ([`term`]),
//!   derived constructors for the standard second-order encodings ([`sugar`]),
//!   and concrete syntax ([`parse`], [`print`]);
//! * semantics: the rewriting engine with traces ([`rewrite`]) and the
//!   sequent-style derivation checker, elaborator and cut-elimination
//!   procedure ([`derivation`], [`elaborate`], [`cutelim`]);
//! * compilation: eta-long forms and value enumeration ([`etalong`]), the
//!   erasure translation into the pure fragment ([`translate`]), synthesized
//!   duplicators ([`dup`]), and the boolean-circuit compiler ([`circuits`]);
//! * applications: arithmetic on copy-chain numerals ([`numerals`]),
//!   hereditarily finite permutations ([`hfp`]), and seeded generators used
//!   by the test corpus ([`gen`]).

pub mod circuits;
pub mod cutelim;
pub mod derivation;
pub mod dup;
pub mod elaborate;
pub mod error;
pub mod etalong;
pub mod gen;
pub mod hfp;
pub mod numerals;
pub mod parse;
pub mod print;
pub mod rewrite;
pub mod sugar;
pub mod symbol;
pub mod term;
pub mod translate;
pub mod ty;

pub use error::KernelError;
pub use symbol::Symbol;
pub use term::Term;
pub use ty::Ty;
