//! Symbolic heap variables and their transfer functions.
//!
//! Each reference `r` has an object level `objlevel_r` (the level of
//! everything reachable from `r`) and every pair of references has a relation
//! bit. Under [`HeapModel::LPrec`] the bit `share_a_b` (unordered) means the
//! two may reach a common object; under [`HeapModel::HPrec`] `falias_a_b`
//! (ordered) means `a` may reach the object of `b` through zero or more
//! fields. In both models the reflexive bit means "may be non-null".

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::ir::Method;
use crate::symlat::{self, Assign, Bdd, Store, RET};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HeapModel {
    LPrec,
    HPrec,
}

impl fmt::Display for HeapModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HeapModel::LPrec => "lprec",
            HeapModel::HPrec => "hprec",
        })
    }
}

impl FromStr for HeapModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "lprec" => Ok(HeapModel::LPrec),
            "hprec" => Ok(HeapModel::HPrec),
            _ => Err(Error::semantic(format!("unknown heap model {s}"))),
        }
    }
}

impl HeapModel {
    pub fn rel_name(self, a: &str, b: &str) -> String {
        match self {
            HeapModel::LPrec => {
                let (x, y) = if a <= b { (a, b) } else { (b, a) };
                format!("share_{x}_{y}")
            }
            HeapModel::HPrec => format!("falias_{a}_{b}"),
        }
    }

    /// Relation variable names over `refs`, in name order.
    pub fn rel_names(self, refs: &[String]) -> Vec<String> {
        let mut out = Vec::new();
        for (i, a) in refs.iter().enumerate() {
            for (j, b) in refs.iter().enumerate() {
                let keep = match self {
                    HeapModel::LPrec => i <= j,
                    HeapModel::HPrec => true,
                };
                if keep {
                    out.push(self.rel_name(a, b));
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// Split a relation variable name into its two references, given the
    /// references that may occur.
    pub fn split_rel<'a>(self, name: &str, refs: &'a [String]) -> Option<(&'a str, &'a str)> {
        let prefix = match self {
            HeapModel::LPrec => "share_",
            HeapModel::HPrec => "falias_",
        };
        let rest = name.strip_prefix(prefix)?;
        for a in refs {
            if let Some(tail) = rest.strip_prefix(a.as_str()).and_then(|t| t.strip_prefix('_')) {
                if let Some(b) = refs.iter().find(|b| b.as_str() == tail) {
                    return Some((a, b));
                }
            }
        }
        None
    }
}

/// The heap variables of one method: every reference variable, plus `ret`
/// when the method returns a reference.
#[derive(Clone, Debug)]
pub struct HeapVars {
    pub model: HeapModel,
    pub refs: Vec<String>,
}

impl HeapVars {
    pub fn new(model: HeapModel, mut refs: Vec<String>) -> Self {
        refs.sort();
        refs.dedup();
        HeapVars { model, refs }
    }

    pub fn objlevel(&self, s: &mut Store, r: &str) -> Bdd {
        s.var(&symlat::objlevel(r))
    }

    pub fn rel(&self, s: &mut Store, a: &str, b: &str) -> Bdd {
        s.var(&self.model.rel_name(a, b))
    }

    pub fn nonnull(&self, s: &mut Store, r: &str) -> Bdd {
        self.rel(s, r, r)
    }

    /// Whether the portions reachable from `a` and `b` may overlap.
    pub fn may_intersect(&self, s: &mut Store, a: &str, b: &str) -> Bdd {
        match self.model {
            HeapModel::LPrec => self.rel(s, a, b),
            HeapModel::HPrec => {
                let x = self.nonnull(s, a);
                let y = self.nonnull(s, b);
                s.and(x, y)
            }
        }
    }

    /// Whether a mutation of `r`'s object is visible from `t`.
    pub fn reaches(&self, s: &mut Store, t: &str, r: &str) -> Bdd {
        self.rel(s, t, r)
    }

    pub fn var_names(&self) -> Vec<String> {
        let mut v: Vec<String> = self.refs.iter().map(|r| symlat::objlevel(r)).collect();
        v.extend(self.model.rel_names(&self.refs));
        v
    }

    fn put(&self, s: &mut Store, out: &mut Assign, name: &str, val: Bdd) {
        let id = s.var_id(name);
        out.insert(id, val);
    }

    fn put_rel(&self, s: &mut Store, out: &mut Assign, a: &str, b: &str, val: Bdd) {
        let n = self.model.rel_name(a, b);
        self.put(s, out, &n, val);
    }
}

/// Heap variables of `m` and the entry constraint: local references are
/// null, `ret` is unrelated, snapshots equal their live counterparts.
pub fn init_heap(s: &mut Store, m: &Method, model: HeapModel) -> (HeapVars, Bdd) {
    let mut refs = m.refs();
    if m.ret.is_ref() {
        refs.push(RET.to_string());
    }
    let hv = HeapVars::new(model, refs);
    let args = m.arg_refs();
    let mut x0 = Bdd::TRUE;
    for r in &hv.refs {
        if args.contains(r) {
            continue;
        }
        let o = hv.objlevel(s, r);
        let no = s.not(o);
        x0 = s.and(x0, no);
        for t in &hv.refs {
            for (a, b) in [(r, t), (t, r)] {
                let v = hv.rel(s, a, b);
                let nv = s.not(v);
                x0 = s.and(x0, nv);
            }
        }
    }
    // `ret` has no entry value: its snapshot must stay free.
    for name in arg_heap_names(&hv, &args) {
        let live = s.var(&name);
        let snap = s.var(&symlat::snap(&name));
        let eq = s.iff(live, snap);
        x0 = s.and(x0, eq);
    }
    (hv, x0)
}

/// Heap variables over argument references only.
pub fn arg_heap_names(hv: &HeapVars, arg_refs: &[String]) -> Vec<String> {
    scoped_names(hv.model, arg_refs.to_vec())
}

/// Heap footprint over argument references and `ret`: object levels first,
/// then relation bits, each in name order.
pub fn footprint_heap_names(hv: &HeapVars, arg_refs: &[String]) -> Vec<String> {
    let mut scope: Vec<String> = arg_refs.to_vec();
    if hv.refs.iter().any(|r| r == RET) {
        scope.push(RET.to_string());
    }
    scoped_names(hv.model, scope)
}

fn scoped_names(model: HeapModel, mut scope: Vec<String>) -> Vec<String> {
    scope.sort();
    let mut objs: Vec<String> = scope.iter().map(|r| symlat::objlevel(r)).collect();
    objs.sort();
    objs.extend(model.rel_names(&scope));
    objs
}

/// The heap-relevant statement forms.
#[derive(Clone, Debug)]
pub enum HeapStmt<'a> {
    Copy { dst: &'a str, src: &'a str },
    Null { dst: &'a str },
    New { dst: &'a str },
    LoadRef { dst: &'a str, base: &'a str },
    StoreRef { base: &'a str, src: &'a str },
    StorePrim { base: &'a str },
}

/// Heap update of one statement. `cap` is the level joined into anything the
/// statement may write: the context for loads and allocation, and for stores
/// the join of the stored value, the target reference and the context.
pub fn upd_heap(s: &mut Store, hv: &HeapVars, stmt: &HeapStmt, cap: Bdd) -> Assign {
    let mut out = Assign::new();
    let refs = hv.refs.clone();
    match *stmt {
        HeapStmt::Copy { dst, src } => {
            if dst == src {
                return out;
            }
            let o = hv.objlevel(s, src);
            hv.put(s, &mut out, &symlat::objlevel(dst), o);
            copy_row(s, hv, &mut out, dst, src);
        }
        HeapStmt::Null { dst } => {
            hv.put(s, &mut out, &symlat::objlevel(dst), Bdd::FALSE);
            for t in &refs {
                hv.put_rel(s, &mut out, dst, t, Bdd::FALSE);
                hv.put_rel(s, &mut out, t, dst, Bdd::FALSE);
            }
        }
        HeapStmt::New { dst } => {
            hv.put(s, &mut out, &symlat::objlevel(dst), cap);
            for t in &refs {
                let v = Bdd::constant(t == dst);
                hv.put_rel(s, &mut out, dst, t, v);
                hv.put_rel(s, &mut out, t, dst, v);
            }
        }
        HeapStmt::LoadRef { dst, base } => {
            let o = hv.objlevel(s, base);
            let o = s.or(o, cap);
            hv.put(s, &mut out, &symlat::objlevel(dst), o);
            let base_nn = hv.nonnull(s, base);
            for t in &refs {
                if t == dst {
                    continue;
                }
                let tb = if t == base { base_nn } else { hv.rel(s, base, t) };
                match hv.model {
                    HeapModel::LPrec => hv.put_rel(s, &mut out, dst, t, tb),
                    HeapModel::HPrec => {
                        hv.put_rel(s, &mut out, dst, t, tb);
                        // t may reach the loaded object through shared structure
                        let tn = if t == base { base_nn } else { hv.nonnull(s, t) };
                        let v = s.and(tn, base_nn);
                        hv.put_rel(s, &mut out, t, dst, v);
                    }
                }
            }
            hv.put_rel(s, &mut out, dst, dst, base_nn);
        }
        HeapStmt::StorePrim { base } => {
            for t in &refs {
                let r = hv.reaches(s, t, base);
                let inc = s.and(r, cap);
                let o = hv.objlevel(s, t);
                let v = s.or(o, inc);
                hv.put(s, &mut out, &symlat::objlevel(t), v);
            }
        }
        HeapStmt::StoreRef { base, src } => {
            for t in &refs {
                let r = hv.reaches(s, t, base);
                let inc = s.and(r, cap);
                let o = hv.objlevel(s, t);
                let v = s.or(o, inc);
                hv.put(s, &mut out, &symlat::objlevel(t), v);
            }
            for (i, u) in refs.iter().enumerate() {
                for (j, v) in refs.iter().enumerate() {
                    if hv.model == HeapModel::LPrec && j < i {
                        continue;
                    }
                    let old = hv.rel(s, u, v);
                    let new = match hv.model {
                        HeapModel::LPrec => {
                            let ur = hv.rel(s, u, base);
                            let vs = hv.rel(s, v, src);
                            let vr = hv.rel(s, v, base);
                            let us = hv.rel(s, u, src);
                            let a = s.and(ur, vs);
                            let b = s.and(vr, us);
                            let ab = s.or(a, b);
                            s.or(old, ab)
                        }
                        HeapModel::HPrec => {
                            let ur = hv.rel(s, u, base);
                            let sv = hv.rel(s, src, v);
                            let a = s.and(ur, sv);
                            s.or(old, a)
                        }
                    };
                    if new != old {
                        hv.put_rel(s, &mut out, u, v, new);
                    }
                }
            }
        }
    }
    out
}

/// `dst` becomes an exact alias of `src`: same object level, same relations.
fn copy_row(s: &mut Store, hv: &HeapVars, out: &mut Assign, dst: &str, src: &str) {
    let refs = hv.refs.clone();
    for t in &refs {
        if t == dst {
            continue;
        }
        let v = if t == src { hv.nonnull(s, src) } else { hv.rel(s, src, t) };
        hv.put_rel(s, out, dst, t, v);
        if hv.model == HeapModel::HPrec {
            let w = if t == src { hv.nonnull(s, src) } else { hv.rel(s, t, src) };
            hv.put_rel(s, out, t, dst, w);
        }
    }
    let nn = hv.nonnull(s, src);
    hv.put_rel(s, out, dst, dst, nn);
}

/// The returned reference `ret` as an exact alias of `r`.
pub fn extend_with_return(s: &mut Store, hv: &HeapVars, r: &str) -> Assign {
    let mut out = Assign::new();
    let o = hv.objlevel(s, r);
    hv.put(s, &mut out, &symlat::objlevel(RET), o);
    copy_row(s, hv, &mut out, RET, r);
    out
}

/// `h ⊑_H h^r` restricted to `restrict`: object levels and relation bits may
/// only be below their snapshots.
pub fn heap_order_pred(s: &mut Store, hv: &HeapVars, restrict: &[String]) -> Bdd {
    let mut names: Vec<String> = restrict.iter().map(|r| symlat::objlevel(r)).collect();
    names.extend(hv.model.rel_names(restrict));
    let mut acc = Bdd::TRUE;
    for n in names {
        let live = s.var(&n);
        let snap = s.var(&symlat::snap(&n));
        let imp = s.implies(live, snap);
        acc = s.and(acc, imp);
    }
    acc
}
