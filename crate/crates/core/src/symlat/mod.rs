//! Two-point security lattice and the symbolic predicates built over it.
//!
//! Levels are encoded as booleans (`⊤` is true), so `l ⊑ ⊥` is `¬l`, `l ⊑ l'`
//! is `l ⇒ l'` and `⊔` is `∨`. Everything symbolic lives in a [`bdd::Store`];
//! [`expr::Expr`] is the store-independent form used inside summaries.

pub mod bdd;
pub mod expr;
pub mod update;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub use bdd::{Bdd, Store, VarId};
pub use expr::Expr;
pub use update::{merge_updates, SymUpdate};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    Bot,
    Top,
}

impl Level {
    pub fn join(self, other: Level) -> Level {
        self.max(other)
    }

    pub fn meet(self, other: Level) -> Level {
        self.min(other)
    }

    pub fn leq(self, other: Level) -> bool {
        self <= other
    }

    pub fn from_bool(b: bool) -> Level {
        if b {
            Level::Top
        } else {
            Level::Bot
        }
    }

    pub fn is_top(self) -> bool {
        self == Level::Top
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Bot => "⊥",
            Level::Top => "⊤",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    Bool,
    Level,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    State,
    Input,
    Snapshot,
    Source,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymVar {
    pub name: String,
    pub sort: Sort,
    pub role: Role,
}

impl SymVar {
    /// Sort and role follow from the naming convention.
    pub fn classify(name: &str) -> SymVar {
        let (base, snap) = match name.strip_suffix(SNAP) {
            Some(b) => (b, true),
            None => (name, false),
        };
        let sort = if base.starts_with("share_") || base.starts_with("falias_") || is_input(base)
        {
            Sort::Bool
        } else {
            Sort::Level
        };
        let role = if snap {
            Role::Snapshot
        } else if is_input(base) {
            Role::Input
        } else if is_source(base) {
            Role::Source
        } else {
            Role::State
        };
        SymVar {
            name: name.to_string(),
            sort,
            role,
        }
    }
}

pub const PC: &str = "pc";
pub const RET: &str = "ret";
pub const SNAP: &str = "^";

pub fn level(x: &str) -> String {
    format!("level_{x}")
}

pub fn objlevel(r: &str) -> String {
    format!("objlevel_{r}")
}

pub fn cond(i: usize) -> String {
    format!("cond_{i}")
}

pub fn input(i: usize) -> String {
    format!("ω_{i}")
}

pub fn snap(name: &str) -> String {
    format!("{name}{SNAP}")
}

pub fn source(k: usize) -> String {
    format!("p{k}")
}

pub fn is_input(name: &str) -> bool {
    name.starts_with("ω_")
}

pub fn is_source(name: &str) -> bool {
    name.len() > 1 && name.starts_with('p') && name[1..].bytes().all(|b| b.is_ascii_digit())
}

/// Global variable order: lexicographic by name, inputs last.
pub fn order_key(name: &str) -> (bool, &str) {
    (is_input(name), name)
}

pub fn sorted_order<'a, I: IntoIterator<Item = &'a String>>(names: I) -> Vec<String> {
    let mut v: Vec<String> = names.into_iter().cloned().collect();
    v.sort_by(|a, b| order_key(a).cmp(&order_key(b)));
    v.dedup();
    v
}

/// A simultaneous assignment inside one store; absent variables keep their value.
pub type Assign = BTreeMap<VarId, Bdd>;

/// `⊔̇` on in-store assignments.
pub fn merge_assign(s: &mut Store, a: &Assign, b: &Assign) -> Assign {
    let mut out = a.clone();
    for (k, v) in b {
        let joined = match out.get(k) {
            Some(old) => s.or(*old, *v),
            None => *v,
        };
        out.insert(*k, joined);
    }
    out
}

/// Simultaneous substitution.
pub fn substitute(s: &mut Store, p: Bdd, bindings: &BTreeMap<VarId, Bdd>) -> Bdd {
    s.compose(p, bindings)
}

pub fn quantify_exists(s: &mut Store, p: Bdd, vars: &BTreeSet<VarId>) -> Bdd {
    s.exists(p, vars)
}

/// Constant equalities `x = c` implied by `init`.
pub fn fixed_constants(s: &mut Store, init: Bdd) -> BTreeMap<VarId, bool> {
    let mut out = BTreeMap::new();
    if init.is_false() {
        return out;
    }
    for v in s.support(init) {
        let x = s.var_of(v);
        let nx = s.not(x);
        if s.and(init, x).is_false() {
            out.insert(v, false);
        } else if s.and(init, nx).is_false() {
            out.insert(v, true);
        }
    }
    out
}

/// Replace every variable that `init` pins to a constant by that constant.
pub fn cofactor(s: &mut Store, p: Bdd, init: Bdd) -> Bdd {
    let fixed = fixed_constants(s, init);
    s.restrict_vals(p, &fixed)
}

pub fn entails(s: &mut Store, p: Bdd, q: Bdd) -> bool {
    s.entails(p, q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn join_table() {
        use Level::*;
        assert_eq!(Bot.join(Bot), Bot);
        assert_eq!(Bot.join(Top), Top);
        assert_eq!(Top.join(Top), Top);
        assert!(Bot.leq(Top) && !Top.leq(Bot));
    }

    #[test]
    fn classify_names() {
        assert_eq!(SymVar::classify("share_a_b").sort, Sort::Bool);
        assert_eq!(SymVar::classify("objlevel_r^").role, Role::Snapshot);
        assert_eq!(SymVar::classify("ω_3").role, Role::Input);
        assert_eq!(SymVar::classify("p0").role, Role::Source);
        assert_eq!(SymVar::classify("pc").role, Role::State);
        assert_eq!(SymVar::classify("pc").sort, Sort::Level);
    }

    #[test]
    fn order_puts_inputs_last() {
        let names: Vec<String> = ["ω_1", "pc", "level_x", "cond_2"].iter().map(|s| s.to_string()).collect();
        assert_eq!(sorted_order(&names), vec!["cond_2", "level_x", "pc", "ω_1"]);
    }

    #[test]
    fn substitute_pc_with_join() {
        let mut s = Store::with_order(["level_r", "pc"]);
        let pc = s.var("pc");
        let r = s.var("level_r");
        let p = s.not(pc);
        let pr = s.or(pc, r);
        let m: BTreeMap<_, _> = [(s.lookup("pc").unwrap(), pr)].into();
        let got = substitute(&mut s, p, &m);
        let expect = s.not(pr);
        assert_eq!(got, expect);
    }

    #[test]
    fn substitute_to_tautology() {
        let mut s = Store::with_order(["a", "b"]);
        let a = s.var("a");
        let b = s.var("b");
        let p = s.or(a, b);
        let nb = s.not(b);
        let m: BTreeMap<_, _> = [(s.lookup("a").unwrap(), nb)].into();
        assert!(substitute(&mut s, p, &m).is_true());
        assert_eq!(substitute(&mut s, p, &BTreeMap::new()), p);
    }

    #[test]
    fn exists_over_input_is_disjunction() {
        let mut s = Store::with_order(["p", "q", "ω_0"]);
        let w = s.var("ω_0");
        let p = s.var("p");
        let q = s.var("q");
        let f = s.ite(w, p, q);
        let vs: BTreeSet<_> = [s.lookup("ω_0").unwrap()].into();
        let expect = s.or(p, q);
        assert_eq!(quantify_exists(&mut s, f, &vs), expect);
        let x = s.var("ω_0");
        let nx = s.not(x);
        let taut = s.or(x, nx);
        assert!(quantify_exists(&mut s, taut, &vs).is_true());
    }

    #[test]
    fn cofactor_against_fixed_low() {
        let mut s = Store::with_order(["level_x", "level_y"]);
        let x = s.var("level_x");
        let y = s.var("level_y");
        let p = s.implies(x, y);
        let init = s.not(x);
        assert!(cofactor(&mut s, p, init).is_true());
        assert_eq!(cofactor(&mut s, p, Bdd::TRUE), p);
    }

    #[test]
    fn cofactor_ignores_non_constant_equalities() {
        let mut s = Store::with_order(["a", "a^", "b"]);
        let a = s.var("a");
        let a2 = s.var("a^");
        let b = s.var("b");
        let eq = s.iff(a, a2);
        let nb = s.not(b);
        let init = s.and(eq, nb);
        let p = s.or(a2, b);
        assert_eq!(cofactor(&mut s, p, init), a2);
    }

    #[test]
    fn entails_examples() {
        let mut s = Store::with_order(["a", "b"]);
        let a = s.var("a");
        let b = s.var("b");
        let ab = s.and(a, b);
        let aob = s.or(a, b);
        assert!(entails(&mut s, Bdd::FALSE, a));
        assert!(entails(&mut s, a, a));
        assert!(entails(&mut s, ab, aob));
        assert!(!entails(&mut s, aob, ab));
    }
}
