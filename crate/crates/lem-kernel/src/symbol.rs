//! Interned identifiers for term and type variables.

use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::fmt;
use std::sync::RwLock;

/// An interned name. Copyable, comparable in O(1), resolvable to its text.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(u32);

struct Interner {
    map: HashMap<&'static str, u32>,
    names: Vec<&'static str>,
}

static INTERNER: Lazy<RwLock<Interner>> = Lazy::new(|| {
    RwLock::new(Interner { map: HashMap::new(), names: Vec::new() })
});

impl Symbol {
    pub fn intern(name: &str) -> Symbol {
        {
            let int = INTERNER.read().unwrap();
            if let Some(&id) = int.map.get(name) {
                return Symbol(id);
            }
        }
        let mut int = INTERNER.write().unwrap();
        if let Some(&id) = int.map.get(name) {
            return Symbol(id);
        }
        // Names are few and live for the whole process; leaking keeps
        // resolution allocation-free.
        let leaked: &'static str = Box::leak(name.to_owned().into_boxed_str());
        let id = int.names.len() as u32;
        int.names.push(leaked);
        int.map.insert(leaked, id);
        Symbol(id)
    }

    pub fn as_str(self) -> &'static str {
        INTERNER.read().unwrap().names[self.0 as usize]
    }

    /// Deterministic freshening: strip any numeric suffix from the base name
    /// and append the smallest counter that makes the result pass `is_free`.
    /// Produced names stay inside the surface grammar (letters then digits).
    pub fn freshen(base: Symbol, mut is_free: impl FnMut(Symbol) -> bool) -> Symbol {
        if is_free(base) {
            return base;
        }
        let text = base.as_str();
        let stem = text.trim_end_matches(|c: char| c.is_ascii_digit());
        let stem = if stem.is_empty() { "x" } else { stem };
        for n in 2u64.. {
            let cand = Symbol::intern(&format!("{stem}{n}"));
            if is_free(cand) {
                return cand;
            }
        }
        unreachable!("freshening exhausted u64 counters")
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interning_is_stable() {
        let a = Symbol::intern("x");
        let b = Symbol::intern("x");
        assert_eq!(a, b);
        assert_eq!(a.as_str(), "x");
        assert_ne!(a, Symbol::intern("y"));
    }

    #[test]
    fn freshening_appends_counters() {
        let x = Symbol::intern("x");
        let taken = [Symbol::intern("x"), Symbol::intern("x2")];
        let fresh = Symbol::freshen(x, |s| !taken.contains(&s));
        assert_eq!(fresh.as_str(), "x3");
    }

    #[test]
    fn freshening_strips_existing_suffix() {
        let f1 = Symbol::intern("f1");
        let fresh = Symbol::freshen(f1, |s| s != f1);
        assert_eq!(fresh.as_str(), "f2");
    }
}
