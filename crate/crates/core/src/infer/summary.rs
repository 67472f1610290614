use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heap::HeapModel;
use crate::ir::{Method, MethodSig, Param, Ty};
use crate::symlat::{self, Expr, PC, RET};

/// A method contract: `guard` over the support, and one right-hand side over
/// the support for every footprint variable.
///
/// Variables are named after the method's formals (`level_i0`,
/// `objlevel_this`, `falias_this_r1`); footprint variables use the same names
/// as their support counterparts but denote post-call values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Summary {
    pub sig: MethodSig,
    pub args: Vec<Param>,
    pub ret: Ty,
    pub model: HeapModel,
    pub guard: Expr,
    pub effect: BTreeMap<String, Expr>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Inferred,
    Stub,
    Pessimistic,
    Bottom,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Provenance::Inferred => "inferred",
            Provenance::Stub => "stub",
            Provenance::Pessimistic => "pessimistic",
            Provenance::Bottom => "bottom",
        })
    }
}

impl Summary {
    /// A summary with guard `tt` and identity effect.
    pub fn trivial(sig: MethodSig, args: Vec<Param>, ret: Ty, model: HeapModel) -> Summary {
        let mut s = Summary {
            sig,
            args,
            ret,
            model,
            guard: Expr::Const(true),
            effect: BTreeMap::new(),
        };
        s.complete();
        s
    }

    pub fn for_method(m: &Method, model: HeapModel) -> Summary {
        Summary::trivial(m.sig.clone(), m.args(), m.ret.clone(), model)
    }

    pub fn arg_refs(&self) -> Vec<String> {
        let mut v: Vec<String> = self.args.iter().filter(|a| a.ty.is_ref()).map(|a| a.name.clone()).collect();
        v.sort();
        v
    }

    /// Argument references plus `ret` for reference-returning methods.
    pub fn heap_refs(&self) -> Vec<String> {
        let mut v = self.arg_refs();
        if self.ret.is_ref() {
            v.push(RET.to_string());
        }
        v.sort();
        v
    }

    /// `Supp_m` without source symbols, in name order.
    pub fn support(&self) -> Vec<String> {
        let mut v: Vec<String> = vec![PC.to_string()];
        v.extend(self.args.iter().map(|a| symlat::level(&a.name)));
        let refs = self.arg_refs();
        v.extend(refs.iter().map(|r| symlat::objlevel(r)));
        v.extend(self.model.rel_names(&refs));
        v.sort();
        v
    }

    pub fn in_support(&self, name: &str) -> bool {
        symlat::is_source(name) || self.support().iter().any(|s| s == name)
    }

    /// `Foot_m` in triangularization order: `level_ret`, then object levels,
    /// then relation bits.
    pub fn footprint(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.ret != Ty::Void {
            v.push(symlat::level(RET));
        }
        let refs = self.heap_refs();
        let mut objs: Vec<String> = refs.iter().map(|r| symlat::objlevel(r)).collect();
        objs.sort();
        v.extend(objs);
        v.extend(self.model.rel_names(&refs));
        v
    }

    /// Value a footprint variable takes when the method leaves it alone:
    /// its entry value, or `⊥`/`ff` for `ret`'s variables.
    pub fn identity(&self, var: &str) -> Expr {
        if self.in_support(var) {
            Expr::var(var)
        } else {
            Expr::Const(false)
        }
    }

    /// Fill absent footprint variables with their identity.
    pub fn complete(&mut self) {
        for v in self.footprint() {
            if !self.effect.contains_key(&v) {
                let id = self.identity(&v);
                self.effect.insert(v, id);
            }
        }
    }

    pub fn is_identity(&self, var: &str) -> bool {
        match self.effect.get(var) {
            Some(e) => e.equivalent(&self.identity(var)),
            None => true,
        }
    }

    /// Every footprint variable has one assignment and everything mentions
    /// only support variables.
    pub fn check_hygiene(&self) -> Result<()> {
        let foot: BTreeSet<String> = self.footprint().into_iter().collect();
        for v in self.guard.vars() {
            if !self.in_support(&v) {
                return Err(Error::semantic(format!("{}: guard mentions non-support variable {v}", self.sig)));
            }
        }
        for (k, e) in &self.effect {
            if !foot.contains(k) {
                return Err(Error::semantic(format!("{}: effect assigns non-footprint variable {k}", self.sig)));
            }
            for v in e.vars() {
                if !self.in_support(&v) {
                    return Err(Error::semantic(format!("{}: effect of {k} mentions non-support variable {v}", self.sig)));
                }
            }
        }
        for f in &foot {
            if !self.effect.contains_key(f) {
                return Err(Error::semantic(format!("{}: footprint variable {f} unassigned", self.sig)));
            }
        }
        Ok(())
    }

    /// Canonical equality of guards and of every right-hand side.
    pub fn same_as(&self, other: &Summary) -> bool {
        self.guard.equivalent(&other.guard)
            && self.effect.len() == other.effect.len()
            && self
                .effect
                .iter()
                .all(|(k, e)| other.effect.get(k).is_some_and(|o| e.equivalent(o)))
    }

    /// Rename formals, rewriting every variable name that mentions them.
    pub fn rename_formals(&self, map: &BTreeMap<String, String>) -> Summary {
        let old_refs = self.heap_refs();
        let names = |name: &str| rename_var(name, map, &old_refs, self.model);
        let mut vmap = BTreeMap::new();
        let mut all: BTreeSet<String> = self.guard.vars();
        for (k, e) in &self.effect {
            all.insert(k.clone());
            all.extend(e.vars());
        }
        for v in &all {
            vmap.insert(v.clone(), names(v));
        }
        Summary {
            sig: self.sig.clone(),
            args: self
                .args
                .iter()
                .map(|a| Param {
                    name: map.get(&a.name).cloned().unwrap_or_else(|| a.name.clone()),
                    ty: a.ty.clone(),
                })
                .collect(),
            ret: self.ret.clone(),
            model: self.model,
            guard: self.guard.rename(&vmap),
            effect: self.effect.iter().map(|(k, e)| (vmap[k].clone(), e.rename(&vmap))).collect(),
        }
    }

    /// Formals renamed to their positions `#0`, `#1`, ... so summaries of
    /// different targets of one call site share variable names.
    pub fn positional(&self) -> Summary {
        let map = self
            .args
            .iter()
            .enumerate()
            .map(|(i, a)| (a.name.clone(), positional_name(i)))
            .collect();
        self.rename_formals(&map)
    }
}

pub fn positional_name(i: usize) -> String {
    format!("#{i}")
}

/// Rewrite one summary variable name under a formal renaming.
pub fn rename_var(name: &str, map: &BTreeMap<String, String>, refs: &[String], model: HeapModel) -> String {
    let get = |x: &str| map.get(x).cloned().unwrap_or_else(|| x.to_string());
    if let Some(x) = name.strip_prefix("level_") {
        return symlat::level(&get(x));
    }
    if let Some(x) = name.strip_prefix("objlevel_") {
        return symlat::objlevel(&get(x));
    }
    if let Some((a, b)) = model.split_rel(name, refs) {
        return model.rel_name(&get(a), &get(b));
    }
    name.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig() -> Summary {
        Summary::trivial(
            MethodSig::new("C", "m", &["A", "int"]),
            vec![
                Param { name: "this".into(), ty: Ty::Ref("C".into()) },
                Param { name: "r1".into(), ty: Ty::Ref("A".into()) },
                Param { name: "i0".into(), ty: Ty::Prim("int".into()) },
            ],
            Ty::Ref("A".into()),
            HeapModel::LPrec,
        )
    }

    #[test]
    fn support_and_footprint() {
        let s = sig();
        assert_eq!(
            s.support(),
            vec![
                "level_i0",
                "level_r1",
                "level_this",
                "objlevel_r1",
                "objlevel_this",
                "pc",
                "share_r1_r1",
                "share_r1_this",
                "share_this_this"
            ]
        );
        let f = s.footprint();
        assert_eq!(f[0], "level_ret");
        assert_eq!(&f[1..4], &["objlevel_r1", "objlevel_ret", "objlevel_this"]);
        assert_eq!(f.len(), 4 + 6);
        s.check_hygiene().unwrap();
        assert!(s.effect["objlevel_ret"].is_const(false));
        assert_eq!(s.effect["share_r1_this"], Expr::var("share_r1_this"));
    }

    #[test]
    fn positional_rename_keeps_relations_canonical() {
        let mut s = sig();
        s.guard = Expr::parse("¬share_r1_this ∧ ¬level_i0").unwrap();
        let p = s.positional();
        assert_eq!(p.guard, Expr::parse("¬share_#0_#1 ∧ ¬level_#2").unwrap());
        assert!(p.effect.contains_key("share_#1_ret"));
        p.check_hygiene().unwrap();
    }

    #[test]
    fn hygiene_rejects_foreign_variables() {
        let mut s = sig();
        s.guard = Expr::var("level_x");
        assert!(s.check_hygiene().is_err());
        let mut s = sig();
        s.effect.insert("level_i0".into(), Expr::Const(true));
        assert!(s.check_hygiene().is_err());
        let mut s = sig();
        s.effect.insert("objlevel_r1".into(), Expr::var("p0"));
        assert!(s.check_hygiene().is_ok());
    }
}
