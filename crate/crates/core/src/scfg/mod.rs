//! Symbolic control-flow graphs: one location per statement plus the exit,
//! guarded transitions over level and heap variables, and the invariants
//! whose violation makes a state bad.
//!
//! Implicit flows use static regions. Each branch `b` latches the level of
//! its condition in `cond_b`, and every statement control-dependent on `b`
//! runs under the effective context `pc ⊔ cond_b ⊔ ...`.

pub mod call;
pub mod cdr;
pub mod dump;

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::heap::{self, HeapModel, HeapStmt, HeapVars};
use crate::infer::Summary;
use crate::ir::{normalize_method, Method, Operand, PExpr, Recv, StmtKind};
use crate::symlat::{self, merge_assign, Assign, Bdd, Store, VarId, PC, RET};

#[derive(Clone, Debug)]
pub struct Transition {
    pub guard: Bdd,
    pub update: Assign,
    pub target: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct BuildOptions {
    /// Region contexts and branch upgrades. Off only to show what they buy.
    pub implicit_flows: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { implicit_flows: true }
    }
}

/// Positional, already combined summary for each call site, by statement
/// index of the normalized body.
pub type CallEnv = BTreeMap<usize, Summary>;

#[derive(Clone, Debug)]
pub struct Scfg {
    pub method: Method,
    pub store: Store,
    pub hv: HeapVars,
    /// Outgoing transitions per location; the last location is the exit.
    pub transitions: Vec<Vec<Transition>>,
    pub invariants: BTreeMap<usize, Bdd>,
    pub x0: Bdd,
    pub inputs: BTreeSet<VarId>,
    /// Footprint variable names of the summary and their snapshot variables.
    pub footprint: Vec<(String, VarId)>,
    pub support: Vec<String>,
}

impl Scfg {
    pub fn exit(&self) -> usize {
        self.transitions.len() - 1
    }

    /// Guards at each location are pairwise disjoint and cover everything.
    pub fn check_deterministic(&mut self) -> bool {
        for ts in &self.transitions {
            let mut cover = Bdd::FALSE;
            for t in ts {
                if !self.store.and(cover, t.guard).is_false() {
                    return false;
                }
                cover = self.store.or(cover, t.guard);
            }
            if !cover.is_true() {
                return false;
            }
        }
        true
    }

    /// State variables: everything in the store except inputs and snapshots.
    pub fn state_vars(&self) -> Vec<VarId> {
        (0..self.store.num_vars() as u32)
            .map(VarId)
            .filter(|v| {
                let n = self.store.name(*v);
                !symlat::is_input(n) && !n.ends_with(symlat::SNAP) && !symlat::is_source(n)
            })
            .collect()
    }
}

pub fn expr_level(s: &mut Store, e: &PExpr) -> Bdd {
    let vs: Vec<Bdd> = e.vars().iter().map(|v| s.var(&symlat::level(v))).collect();
    s.or_all(vs)
}

/// Caller-side operands of a call: receiver first for virtual calls.
pub fn call_actuals(recv: &Recv, args: &[Operand]) -> Vec<Operand> {
    let mut v = Vec::new();
    if let Recv::Virtual(r) = recv {
        v.push(Operand::Var(r.clone()));
    }
    v.extend(args.iter().cloned());
    v
}

fn skip(m: &Method, reason: impl Into<String>) -> Error {
    Error::Skip {
        method: m.sig.to_string(),
        reason: reason.into(),
    }
}

pub fn build_scfg(m: &Method, env: &CallEnv, model: HeapModel, opts: BuildOptions) -> Result<Scfg> {
    let m = normalize_method(m);
    if m.body.is_none() {
        return Err(skip(&m, "no body"));
    }
    let regions = cdr::branch_regions(&m).map_err(|e| skip(&m, e.to_string()))?;
    let body = m.body().to_vec();
    let n = body.len();
    let shape = Summary::for_method(&m, model);

    let mut names: BTreeSet<String> = BTreeSet::new();
    names.insert(PC.to_string());
    for v in m.all_vars() {
        names.insert(symlat::level(&v.name));
    }
    let mut refs = m.refs();
    if m.ret.is_ref() {
        refs.push(RET.to_string());
    }
    let probe = HeapVars::new(model, refs);
    names.extend(probe.var_names());
    for (b, _) in &regions {
        names.insert(symlat::cond(*b));
        names.insert(symlat::input(*b));
    }
    for f in shape.footprint() {
        names.insert(f.clone());
        names.insert(symlat::snap(&f));
    }
    for sum in env.values() {
        names.extend(sum.guard.vars().into_iter().filter(|v| symlat::is_source(v)));
        for e in sum.effect.values() {
            names.extend(e.vars().into_iter().filter(|v| symlat::is_source(v)));
        }
    }
    let mut s = Store::with_order(symlat::sorted_order(&names));

    let (hv, heap_x0) = heap::init_heap(&mut s, &m, model);

    // effective context per location
    let mut ctx = vec![s.var(PC); n + 1];
    if opts.implicit_flows {
        for (b, region) in &regions {
            let c = s.var(&symlat::cond(*b));
            for &l in region {
                ctx[l] = s.or(ctx[l], c);
            }
        }
    }

    let labels = m.label_index();
    let mut transitions: Vec<Vec<Transition>> = Vec::with_capacity(n + 1);
    let mut invariants = BTreeMap::new();
    let mut inputs = BTreeSet::new();
    let step = |update: Assign, target: usize| {
        vec![Transition {
            guard: Bdd::TRUE,
            update,
            target,
        }]
    };

    for (i, st) in body.iter().enumerate() {
        let pe = ctx[i];
        let ts = match &st.kind {
            StmtKind::Assign { dst, e } => {
                let l = expr_level(&mut s, e);
                let v = s.or(l, pe);
                step(assign(&mut s, &symlat::level(dst), v), i + 1)
            }
            StmtKind::LoadPrim { dst, base, .. } => {
                let v = load_level(&mut s, base, pe);
                step(assign(&mut s, &symlat::level(dst), v), i + 1)
            }
            StmtKind::LoadRef { dst, base, .. } => {
                let v = load_level(&mut s, base, pe);
                let mut u = heap::upd_heap(&mut s, &hv, &HeapStmt::LoadRef { dst, base }, pe);
                let id = s.var_id(&symlat::level(dst));
                u.insert(id, v);
                step(u, i + 1)
            }
            StmtKind::StorePrim { base, e, .. } => {
                let l = expr_level(&mut s, e);
                let r = s.var(&symlat::level(base));
                let cap = s.or_all([l, r, pe]);
                step(heap::upd_heap(&mut s, &hv, &HeapStmt::StorePrim { base }, cap), i + 1)
            }
            StmtKind::StoreRef { base, src, .. } => {
                let sl = s.var(&symlat::level(src));
                let so = s.var(&symlat::objlevel(src));
                let r = s.var(&symlat::level(base));
                let cap = s.or_all([sl, so, r, pe]);
                step(heap::upd_heap(&mut s, &hv, &HeapStmt::StoreRef { base, src }, cap), i + 1)
            }
            StmtKind::Copy { dst, src } => {
                let l = s.var(&symlat::level(src));
                let v = s.or(l, pe);
                let mut u = heap::upd_heap(&mut s, &hv, &HeapStmt::Copy { dst, src }, pe);
                let id = s.var_id(&symlat::level(dst));
                u.insert(id, v);
                step(u, i + 1)
            }
            StmtKind::New { dst, .. } => {
                let mut u = heap::upd_heap(&mut s, &hv, &HeapStmt::New { dst }, pe);
                let id = s.var_id(&symlat::level(dst));
                u.insert(id, pe);
                step(u, i + 1)
            }
            StmtKind::Null { dst } => {
                let mut u = heap::upd_heap(&mut s, &hv, &HeapStmt::Null { dst }, pe);
                let id = s.var_id(&symlat::level(dst));
                u.insert(id, pe);
                step(u, i + 1)
            }
            StmtKind::Goto { target } => step(Assign::new(), labels[target]),
            StmtKind::If { cond, target } => {
                let t = labels[target];
                let el = expr_level(&mut s, cond);
                let w = s.var(&symlat::input(i));
                inputs.insert(s.var_id(&symlat::input(i)));
                let npe = s.not(pe);
                let hi = if opts.implicit_flows { s.and(el, npe) } else { Bdd::FALSE };
                let lo = s.not(hi);
                let mut latch = Assign::new();
                latch.insert(s.var_id(&symlat::cond(i)), el);
                let hi_upd = if opts.implicit_flows {
                    let region = &regions.iter().find(|r| r.0 == i).unwrap().1;
                    let c = s.or(el, pe);
                    let b = brch(&mut s, &hv, &body, region, c);
                    merge_assign(&mut s, &latch, &b)
                } else {
                    latch.clone()
                };
                let nw = s.not(w);
                let mut ts = Vec::new();
                for (g1, upd) in [(lo, &latch), (hi, &hi_upd)] {
                    for (g2, tgt) in [(w, t), (nw, i + 1)] {
                        let g = s.and(g1, g2);
                        if !g.is_false() {
                            ts.push(Transition {
                                guard: g,
                                update: upd.clone(),
                                target: tgt,
                            });
                        }
                    }
                }
                ts
            }
            StmtKind::Call { dst, recv, args, .. } => {
                let sum = env
                    .get(&i)
                    .ok_or_else(|| Error::semantic(format!("{}: missing summary for call site {i}", m.sig)))?;
                let actuals = call_actuals(recv, args);
                let (u, inv) = call::apply_call(&mut s, &hv, dst.as_deref(), &actuals, sum, pe)?;
                invariants.insert(i, inv);
                step(u, i + 1)
            }
            StmtKind::Output { args } => {
                let mut parts = vec![pe];
                for y in args {
                    parts.push(s.var(&symlat::level(y)));
                    if m.is_ref_var(y) {
                        parts.push(s.var(&symlat::objlevel(y)));
                    }
                }
                let bad = s.or_all(parts);
                invariants.insert(i, s.not(bad));
                step(Assign::new(), i + 1)
            }
            StmtKind::Return { value } => {
                let mut u = Assign::new();
                if let Some(x) = value {
                    if m.is_ref_var(x) {
                        u = heap::extend_with_return(&mut s, &hv, x);
                    }
                    let l = s.var(&symlat::level(x));
                    let v = s.or(l, pe);
                    u.insert(s.var_id(&symlat::level(RET)), v);
                }
                step(u, n)
            }
        };
        transitions.push(ts);
    }
    transitions.push(step(Assign::new(), n));
    invariants.insert(n, exit_invariant(&mut s, &hv, &m));

    // X0: locals, ret and latched conditions low; heap part from init_heap
    let mut x0 = heap_x0;
    let args: BTreeSet<String> = m.args().into_iter().map(|p| p.name).collect();
    let mut lows: Vec<String> = m
        .all_vars()
        .into_iter()
        .filter(|v| !args.contains(&v.name))
        .map(|v| symlat::level(&v.name))
        .collect();
    if m.ret != crate::ir::Ty::Void {
        lows.push(symlat::level(RET));
    }
    lows.extend(regions.iter().map(|(b, _)| symlat::cond(*b)));
    for l in lows {
        let v = s.nvar(&l);
        x0 = s.and(x0, v);
    }

    let footprint = shape
        .footprint()
        .into_iter()
        .map(|f| {
            let id = s.var_id(&symlat::snap(&f));
            (f, id)
        })
        .collect();
    Ok(Scfg {
        method: m,
        store: s,
        hv,
        transitions,
        invariants,
        x0,
        inputs,
        footprint,
        support: shape.support(),
    })
}

fn assign(s: &mut Store, name: &str, v: Bdd) -> Assign {
    let mut u = Assign::new();
    u.insert(s.var_id(name), v);
    u
}

fn load_level(s: &mut Store, base: &str, pe: Bdd) -> Bdd {
    let l = s.var(&symlat::level(base));
    let o = s.var(&symlat::objlevel(base));
    s.or_all([l, o, pe])
}

/// Weak upgrade by `c` of everything the region may write.
fn brch(s: &mut Store, hv: &HeapVars, body: &[crate::ir::Statement], region: &BTreeSet<usize>, c: Bdd) -> Assign {
    let mut out = Assign::new();
    for &j in region {
        let k = &body[j].kind;
        if let Some(x) = k.def() {
            let name = symlat::level(x);
            let old = s.var(&name);
            let v = s.or(old, c);
            let u = assign(s, &name, v);
            out = merge_assign(s, &out, &u);
        }
        let u = match k {
            StmtKind::StorePrim { base, .. } => heap::upd_heap(s, hv, &HeapStmt::StorePrim { base }, c),
            StmtKind::StoreRef { base, src, .. } => heap::upd_heap(s, hv, &HeapStmt::StoreRef { base, src }, c),
            StmtKind::Call { recv, args, .. } => {
                let mut u = Assign::new();
                for a in call_actuals(recv, args) {
                    if let Some(a) = a.var().filter(|a| hv.refs.iter().any(|r| r == a)) {
                        let w = heap::upd_heap(s, hv, &HeapStmt::StorePrim { base: a }, c);
                        u = merge_assign(s, &u, &w);
                    }
                }
                u
            }
            _ => Assign::new(),
        };
        out = merge_assign(s, &out, &u);
    }
    out
}

/// Exit invariant: the return level and the heap over argument references and
/// `ret` stay below their snapshots.
pub fn exit_invariant(s: &mut Store, hv: &HeapVars, m: &Method) -> Bdd {
    let mut acc = Bdd::TRUE;
    if m.ret != crate::ir::Ty::Void {
        let r = s.var(&symlat::level(RET));
        let r2 = s.var(&symlat::snap(&symlat::level(RET)));
        acc = s.implies(r, r2);
    }
    let mut scope = m.arg_refs();
    if m.ret.is_ref() {
        scope.push(RET.to_string());
    }
    let h = heap::heap_order_pred(s, hv, &scope);
    s.and(acc, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_program;

    fn build(src: &str, model: HeapModel) -> Scfg {
        let p = parse_program(src).unwrap();
        let m = p.methods().find(|m| m.body.is_some()).unwrap();
        build_scfg(m, &CallEnv::new(), model, BuildOptions::default()).unwrap()
    }

    #[test]
    fn single_return_has_trivial_exit() {
        let mut g = build("class C { static void m() { return; } }", HeapModel::LPrec);
        assert_eq!(g.transitions.len(), 2);
        assert!(g.invariants[&1].is_true());
        assert!(g.check_deterministic());
    }

    #[test]
    fn sink_invariant_for_reference_output() {
        let mut g = build("class A { } class C { static void m(A s) { output(s); return; } }", HeapModel::LPrec);
        let pc = g.store.var("pc");
        let l = g.store.var("level_s");
        let o = g.store.var("objlevel_s");
        let bad = g.store.or_all([pc, l, o]);
        let expect = g.store.not(bad);
        assert_eq!(g.invariants[&0], expect);
    }

    #[test]
    fn branch_has_four_disjoint_transitions() {
        let mut g = build(
            "class C { static int m(int h) { int l; if (h > 0) goto L; l = 1; L: return l; } }",
            HeapModel::HPrec,
        );
        assert_eq!(g.transitions[0].len(), 4);
        assert!(g.check_deterministic());
        assert_eq!(g.inputs.len(), 1);
        // the high transitions weakly upgrade the assigned variable
        let hi = g.transitions[0].iter().find(|t| t.update.len() > 1).unwrap();
        let id = g.store.lookup("level_l").unwrap();
        let l = g.store.var("level_l");
        let h = g.store.var("level_h");
        let pc = g.store.var("pc");
        let expect = g.store.or_all([l, h, pc]);
        assert_eq!(hi.update[&id], expect);
    }

    #[test]
    fn region_statements_read_the_latched_condition() {
        let mut g = build(
            "class C { static int m(int h) { int l; if (h > 0) goto L; l = 1; L: return l; } }",
            HeapModel::LPrec,
        );
        let id = g.store.lookup("level_l").unwrap();
        let pc = g.store.var("pc");
        let c = g.store.var("cond_0");
        let expect = g.store.or(pc, c);
        assert_eq!(g.transitions[1][0].update[&id], expect);
    }

    #[test]
    fn x0_fixes_locals_but_not_arguments() {
        let mut g = build(
            "class A { } class C { static int m(int x, A r) { int y; A t; y = x; return y; } }",
            HeapModel::LPrec,
        );
        let fixed = symlat::fixed_constants(&mut g.store, g.x0);
        let names: BTreeSet<&str> = fixed.keys().map(|v| g.store.name(*v)).collect();
        for n in ["level_y", "level_t", "level_ret", "objlevel_t", "share_r_t", "share_t_t"] {
            assert!(names.contains(n), "{n}");
        }
        for n in ["level_x", "level_r", "objlevel_r", "share_r_r", "pc", "level_ret^"] {
            assert!(!names.contains(n), "{n}");
        }
    }
}
