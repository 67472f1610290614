//! Variable-to-expression maps and the merge `⊔̇`.

use std::collections::BTreeMap;

use super::expr::Expr;
use super::{Role, Sort, SymVar};
use crate::error::{Error, Result};

/// Keys absent from the map are unchanged by the update.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SymUpdate {
    pub map: BTreeMap<SymVar, Expr>,
}

impl SymUpdate {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn assign(&mut self, var: SymVar, e: Expr) -> Result<()> {
        if var.role == Role::Snapshot {
            return Err(Error::semantic(format!("snapshot variable {} assigned", var.name)));
        }
        self.map.insert(var, e);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Expr> {
        self.map.iter().find(|(k, _)| k.name == name).map(|(_, v)| v)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Union of both maps; shared keys are joined (`∨` on booleans, `⊔` on
/// levels, which is the same connective under the encoding).
pub fn merge_updates(t1: &SymUpdate, t2: &SymUpdate) -> Result<SymUpdate> {
    let mut out = t1.clone();
    for (k, v) in &t2.map {
        if let Some((k1, _)) = t1.map.iter().find(|(k1, _)| k1.name == k.name) {
            if k1.sort != k.sort {
                return Err(Error::SortMismatch(k.name.clone()));
            }
        }
        match out.map.get_mut(k) {
            Some(old) => {
                let prev = std::mem::replace(old, Expr::Const(false));
                *old = Expr::Or(vec![prev, v.clone()]);
            }
            None => {
                out.map.insert(k.clone(), v.clone());
            }
        }
    }
    Ok(out)
}

pub fn sort_of(name: &str) -> Sort {
    SymVar::classify(name).sort
}

#[cfg(test)]
mod tests {
    use super::*;

    fn upd(pairs: &[(&str, &str)]) -> SymUpdate {
        let mut u = SymUpdate::new();
        for (k, v) in pairs {
            u.assign(SymVar::classify(k), Expr::parse(v).unwrap()).unwrap();
        }
        u
    }

    #[test]
    fn merge_joins_shared_keys() {
        let t1 = upd(&[("share_a_a", "tt"), ("share_b_b", "ff")]);
        let t2 = upd(&[("share_b_b", "tt")]);
        let m = merge_updates(&t1, &t2).unwrap();
        assert!(m.get("share_a_a").unwrap().is_const(true));
        assert_eq!(m.get("share_b_b").unwrap(), &Expr::parse("ff ∨ tt").unwrap());
    }

    #[test]
    fn empty_is_identity() {
        let t = upd(&[("level_x", "pc")]);
        assert_eq!(merge_updates(&t, &SymUpdate::new()).unwrap(), t);
        assert_eq!(merge_updates(&SymUpdate::new(), &t).unwrap(), t);
    }

    #[test]
    fn level_merge_is_join() {
        let t1 = upd(&[("level_x", "⊥")]);
        let t2 = upd(&[("level_x", "pc")]);
        let m = merge_updates(&t1, &t2).unwrap();
        let e = m.get("level_x").unwrap();
        for pc in [false, true] {
            assert_eq!(e.eval(&|_| pc), pc);
        }
    }

    #[test]
    fn snapshot_keys_rejected() {
        let mut u = SymUpdate::new();
        assert!(u.assign(SymVar::classify("objlevel_r^"), Expr::Const(false)).is_err());
    }

    #[test]
    fn sort_mismatch_detected() {
        let mut t1 = SymUpdate::new();
        t1.map.insert(
            SymVar { name: "x".into(), sort: Sort::Bool, role: Role::State },
            Expr::Const(true),
        );
        let mut t2 = SymUpdate::new();
        t2.map.insert(
            SymVar { name: "x".into(), sort: Sort::Level, role: Role::State },
            Expr::Const(true),
        );
        assert!(matches!(merge_updates(&t1, &t2), Err(Error::SortMismatch(_))));
    }
}
