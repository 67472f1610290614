//! Applying a callee summary at a call site.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::heap::{HeapModel, HeapVars};
use crate::infer::Summary;
use crate::ir::Operand;
use crate::symlat::{self, Assign, Bdd, Store, PC, RET};

fn join(s: &mut Store, out: &mut Assign, name: &str, v: Bdd) {
    let id = s.var_id(name);
    let nv = match out.get(&id) {
        Some(old) => s.or(*old, v),
        None => v,
    };
    out.insert(id, nv);
}

/// Transition update and call-site invariant for a positional summary.
///
/// Formals are replaced by actuals (constants and `null` by `⊥`/`ff`) and
/// `pc` by the call site's effective context. Footprint results land on the
/// actual references; caller references that may intersect an argument
/// portion are upgraded pessimistically.
pub fn apply_call(
    s: &mut Store,
    hv: &HeapVars,
    dst: Option<&str>,
    actuals: &[Operand],
    sum: &Summary,
    pc_e: Bdd,
) -> Result<(Assign, Bdd)> {
    if sum.args.len() != actuals.len() {
        return Err(Error::semantic(format!(
            "call to {}: {} actuals for {} formals",
            sum.sig,
            actuals.len(),
            sum.args.len()
        )));
    }
    let model = hv.model;
    let formal_refs = sum.heap_refs();
    // formal name -> actual variable, for variables only
    let act: BTreeMap<String, String> = sum
        .args
        .iter()
        .zip(actuals)
        .filter_map(|(f, a)| a.var().map(|v| (f.name.clone(), v.to_string())))
        .collect();
    let ref_act: BTreeMap<String, String> = sum
        .args
        .iter()
        .filter(|f| f.ty.is_ref())
        .filter_map(|f| act.get(&f.name).map(|a| (f.name.clone(), a.clone())))
        .collect();

    let mut bad_var = None;
    let mut resolve = |s: &mut Store, name: &str| -> Bdd {
        if name == PC {
            return pc_e;
        }
        if symlat::is_source(name) {
            return s.var(name);
        }
        if let Some(x) = name.strip_prefix("level_") {
            return match act.get(x) {
                Some(a) => s.var(&symlat::level(a)),
                None if sum.args.iter().any(|f| f.name == x) => Bdd::FALSE,
                None => {
                    bad_var = Some(name.to_string());
                    Bdd::FALSE
                }
            };
        }
        if let Some(x) = name.strip_prefix("objlevel_") {
            return match ref_act.get(x) {
                Some(a) => s.var(&symlat::objlevel(a)),
                None => Bdd::FALSE,
            };
        }
        if let Some((a, b)) = model.split_rel(name, &formal_refs) {
            return match (ref_act.get(a), ref_act.get(b)) {
                (Some(x), Some(y)) => s.var(&model.rel_name(x, y)),
                _ => Bdd::FALSE,
            };
        }
        bad_var = Some(name.to_string());
        Bdd::FALSE
    };

    let inv = sum.guard.to_bdd_with(s, &mut resolve);
    let mut eff: BTreeMap<String, Bdd> = BTreeMap::new();
    for f in sum.footprint() {
        let e = sum.effect.get(&f).cloned().unwrap_or_else(|| sum.identity(&f));
        let b = e.to_bdd_with(s, &mut resolve);
        eff.insert(f, b);
    }
    if let Some(v) = bad_var {
        return Err(Error::semantic(format!("call to {}: summary mentions unknown variable {v}", sum.sig)));
    }
    let get = |eff: &BTreeMap<String, Bdd>, n: &str| eff.get(n).copied().unwrap_or(Bdd::FALSE);

    let mut out = Assign::new();

    // rows of the actual references
    for (f, a) in &ref_act {
        let v = get(&eff, &symlat::objlevel(f));
        join(s, &mut out, &symlat::objlevel(a), v);
    }
    for (f, a) in &ref_act {
        for (g, b) in &ref_act {
            let rel = model.rel_name(f, g);
            let v = get(&eff, &rel);
            join(s, &mut out, &model.rel_name(a, b), v);
        }
    }
    let actual_refs: Vec<String> = {
        let mut v: Vec<String> = ref_act.values().cloned().collect();
        v.sort();
        v.dedup();
        v
    };
    if model == HeapModel::HPrec {
        // reaching any object implies being non-null
        for a in &actual_refs {
            let self_id = s.var_id(&model.rel_name(a, a));
            let mut acc = out[&self_id];
            for b in &actual_refs {
                let id = s.var_id(&model.rel_name(a, b));
                acc = s.or(acc, out[&id]);
            }
            out.insert(self_id, acc);
        }
    }

    // caller references outside the actuals
    let touch = |s: &mut Store, t: &str| -> Bdd {
        let parts: Vec<Bdd> = actual_refs.iter().map(|a| hv.may_intersect(s, t, a)).collect();
        s.or_all(parts)
    };
    let others: Vec<String> = hv
        .refs
        .iter()
        .filter(|t| !actual_refs.contains(t) && Some(t.as_str()) != dst)
        .cloned()
        .collect();
    if !actual_refs.is_empty() {
        let arg_objs: Vec<Bdd> = ref_act.keys().map(|f| get(&eff, &symlat::objlevel(f))).collect();
        let any_obj = s.or_all(arg_objs);
        for t in &others {
            let a = touch(s, t);
            let inc = s.and(a, any_obj);
            let o = s.var(&symlat::objlevel(t));
            let v = s.or(o, inc);
            let id = s.var_id(&symlat::objlevel(t));
            out.insert(id, v);
        }
        let scope: Vec<String> = hv.refs.iter().filter(|t| Some(t.as_str()) != dst).cloned().collect();
        for t in &scope {
            for u in &scope {
                if !others.contains(t) && !others.contains(u) {
                    continue;
                }
                let name = model.rel_name(t, u);
                let id = s.var_id(&name);
                if out.contains_key(&id) {
                    continue;
                }
                let at = touch(s, t);
                let au = touch(s, u);
                let both = s.and(at, au);
                let old = s.var(&name);
                let v = s.or(old, both);
                out.insert(id, v);
            }
        }
    }

    // the assigned variable
    if let Some(d) = dst {
        let l = get(&eff, &symlat::level(RET));
        let v = s.or(l, pc_e);
        out.insert(s.var_id(&symlat::level(d)), v);
        if sum.ret.is_ref() {
            let mut row = Assign::new();
            let o = get(&eff, &symlat::objlevel(RET));
            row.insert(s.var_id(&symlat::objlevel(d)), o);
            let nn = get(&eff, &model.rel_name(RET, RET));
            for t in &hv.refs {
                if t == d {
                    continue;
                }
                let formals: Vec<&String> = ref_act.iter().filter(|(_, a)| *a == t).map(|(f, _)| f).collect();
                let (fwd, bwd) = if formals.is_empty() {
                    let a = touch(s, t);
                    let v = s.and(a, nn);
                    (v, v)
                } else {
                    let mut fwd = Bdd::FALSE;
                    let mut bwd = Bdd::FALSE;
                    for f in formals {
                        let x = get(&eff, &model.rel_name(RET, f));
                        let y = get(&eff, &model.rel_name(f, RET));
                        fwd = s.or(fwd, x);
                        bwd = s.or(bwd, y);
                    }
                    (fwd, bwd)
                };
                row.insert(s.var_id(&model.rel_name(d, t)), fwd);
                if model == HeapModel::HPrec {
                    row.insert(s.var_id(&model.rel_name(t, d)), bwd);
                }
            }
            row.insert(s.var_id(&model.rel_name(d, d)), nn);
            out.extend(row);
        }
    }
    Ok((out, inv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{MethodSig, Param, Ty};
    use crate::symlat::Expr;

    fn callee(model: HeapModel, ret: Ty) -> Summary {
        Summary::trivial(
            MethodSig::new("A", "m", &["A"]),
            vec![
                Param { name: "#0".into(), ty: Ty::Ref("A".into()) },
                Param { name: "#1".into(), ty: Ty::Ref("A".into()) },
            ],
            ret,
            model,
        )
    }

    #[test]
    fn identity_stub_changes_nothing_observable() {
        let hv = HeapVars::new(HeapModel::LPrec, vec!["a".into(), "b".into()]);
        let mut s = Store::new();
        let sum = callee(HeapModel::LPrec, Ty::Void);
        let pc = s.var("pc");
        let acts = [Operand::Var("a".into()), Operand::Var("b".into())];
        let (u, inv) = apply_call(&mut s, &hv, None, &acts, &sum, pc).unwrap();
        assert!(inv.is_true());
        for (k, v) in &u {
            let x = s.var_of(*k);
            assert_eq!(*v, x, "{}", s.name(*k));
        }
    }

    #[test]
    fn guard_is_instantiated_with_actuals() {
        let hv = HeapVars::new(HeapModel::LPrec, vec!["a".into()]);
        let mut s = Store::new();
        let mut sum = callee(HeapModel::LPrec, Ty::Void);
        sum.guard = Expr::parse("¬(pc ∨ level_#0 ∨ objlevel_#1)").unwrap();
        let pc = s.var("pc");
        let acts = [Operand::Var("a".into()), Operand::Null];
        let (_, inv) = apply_call(&mut s, &hv, None, &acts, &sum, pc).unwrap();
        let la = s.var("level_a");
        let bad = s.or(pc, la);
        assert_eq!(inv, s.not(bad));
    }

    #[test]
    fn hprec_reach_implies_non_null() {
        let hv = HeapVars::new(HeapModel::HPrec, vec!["a".into(), "b".into()]);
        let mut s = Store::new();
        let sum = callee(HeapModel::HPrec, Ty::Void);
        let acts = [Operand::Var("a".into()), Operand::Var("b".into())];
        let (u, _) = apply_call(&mut s, &hv, None, &acts, &sum, Bdd::FALSE).unwrap();
        let id = s.lookup("falias_a_a").unwrap();
        let aa = s.var("falias_a_a");
        let ab = s.var("falias_a_b");
        assert_eq!(u[&id], s.or(aa, ab));
    }

    #[test]
    fn unrelated_local_is_upgraded_only_when_touching() {
        let hv = HeapVars::new(HeapModel::LPrec, vec!["a".into(), "b".into(), "t".into()]);
        let mut s = Store::new();
        let mut sum = callee(HeapModel::LPrec, Ty::Void);
        sum.effect.insert("objlevel_#0".into(), Expr::var("pc"));
        let pc = s.var("pc");
        let acts = [Operand::Var("a".into()), Operand::Var("b".into())];
        let (u, _) = apply_call(&mut s, &hv, None, &acts, &sum, pc).unwrap();
        let id = s.lookup("objlevel_t").unwrap();
        // t shares with nothing: stays at its value
        assert!(!s.eval(u[&id], |v| s.name(v) == "pc"));
        assert!(s.eval(u[&id], |v| matches!(s.name(v), "pc" | "share_a_t")));
    }

    #[test]
    fn arity_mismatch_is_an_error() {
        let hv = HeapVars::new(HeapModel::LPrec, vec![]);
        let mut s = Store::new();
        let sum = callee(HeapModel::LPrec, Ty::Void);
        assert!(apply_call(&mut s, &hv, None, &[], &sum, Bdd::FALSE).is_err());
    }

    #[test]
    fn returned_reference_row() {
        let hv = HeapVars::new(HeapModel::LPrec, vec!["a".into(), "d".into()]);
        let mut s = Store::new();
        let mut sum = callee(HeapModel::LPrec, Ty::Ref("A".into()));
        sum.effect.insert("share_#0_ret".into(), Expr::var("share_#0_#0"));
        sum.effect.insert("share_ret_ret".into(), Expr::Const(true));
        let acts = [Operand::Var("a".into()), Operand::Int(0)];
        let (u, _) = apply_call(&mut s, &hv, Some("d"), &acts, &sum, Bdd::FALSE).unwrap();
        let id = s.lookup("share_a_d").unwrap();
        let aa = s.var("share_a_a");
        assert_eq!(u[&id], aa);
        let dd = s.lookup("share_d_d").unwrap();
        assert!(u[&dd].is_true());
    }
}
