//! Summary inference for one method: backward co-reachability of bad
//! states, cofactoring against the initial states, and triangularization
//! into a guard and one minimal assignment per footprint variable.

pub mod summary;

use std::collections::{BTreeMap, BTreeSet};

pub use summary::{positional_name, Provenance, Summary};

use crate::error::{Error, Result};
use crate::heap::HeapModel;
use crate::ir::Method;
use crate::scfg::{build_scfg, BuildOptions, CallEnv, Scfg};
use crate::symlat::{self, Bdd, Expr, Store, VarId};

#[derive(Clone, Copy, Debug)]
pub struct InferConfig {
    pub model: HeapModel,
    pub build: BuildOptions,
    /// Ceiling on decision-diagram nodes per method.
    pub max_nodes: usize,
}

impl InferConfig {
    pub fn new(model: HeapModel) -> Self {
        InferConfig {
            model,
            build: BuildOptions::default(),
            max_nodes: 2_000_000,
        }
    }
}

fn pre(g: &mut Scfg, b: &[Bdd], loc: usize) -> Bdd {
    let mut acc = Bdd::FALSE;
    for t in g.transitions[loc].clone() {
        let target = b[t.target];
        if target.is_false() {
            continue;
        }
        let moved = g.store.compose(target, &t.update);
        let step = g.store.and(t.guard, moved);
        acc = g.store.or(acc, step);
    }
    g.store.exists(acc, &g.inputs)
}

/// Least fixed point of `B = B0 ∪ pre(B)`, by a worklist over locations.
pub fn coreach(g: &mut Scfg, b0: &[Bdd], max_nodes: usize) -> Result<Vec<Bdd>> {
    let n = g.transitions.len();
    let mut preds: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (l, ts) in g.transitions.iter().enumerate() {
        for t in ts {
            preds[t.target].insert(l);
        }
    }
    let mut b = b0.to_vec();
    let mut queued = vec![true; n];
    let mut work: Vec<usize> = (0..n).rev().collect();
    while let Some(l) = work.pop() {
        queued[l] = false;
        let p = pre(g, &b, l);
        let nb = g.store.or(b[l], p);
        if g.store.node_count() > max_nodes {
            return Err(Error::Skip {
                method: g.method.sig.to_string(),
                reason: format!("node ceiling {max_nodes} exceeded"),
            });
        }
        if nb != b[l] {
            b[l] = nb;
            for &q in &preds[l] {
                if !queued[q] {
                    queued[q] = true;
                    work.push(q);
                }
            }
        }
    }
    for l in 0..n {
        let p = pre(g, &b, l);
        let again = g.store.or(b0[l], p);
        assert_eq!(again, b[l], "co-reachability not at a fixed point at L{l}");
    }
    Ok(b)
}

/// The least value of `v` allowed by `g`: `v` is high exactly where `g`
/// forbids the low choice and allows the high one.
pub fn minimize(s: &mut Store, g: Bdd, v: VarId) -> Bdd {
    let g0 = s.restrict_var(g, v, false);
    let g1 = s.restrict_var(g, v, true);
    let n0 = s.not(g0);
    s.and(n0, g1)
}

/// Split `g` into assignments for `foot` (in order) and a residual guard
/// over the remaining variables. Effects are simplified under the guard.
pub fn triangularize(s: &mut Store, g: Bdd, foot: &[VarId]) -> (Vec<Bdd>, Bdd) {
    let mut g = g;
    let mut es = Vec::with_capacity(foot.len());
    for &v in foot {
        let e = minimize(s, g, v);
        es.push(e);
        let m: BTreeMap<VarId, Bdd> = [(v, e)].into();
        g = s.compose(g, &m);
    }
    // back-substitute later choices into earlier ones
    let mut done: BTreeMap<VarId, Bdd> = BTreeMap::new();
    for i in (0..foot.len()).rev() {
        es[i] = s.compose(es[i], &done);
        done.insert(foot[i], es[i]);
    }
    if g.is_false() {
        return (vec![Bdd::FALSE; foot.len()], g);
    }
    for e in es.iter_mut() {
        *e = s.simplify(*e, g);
    }
    (es, g)
}

/// `¬B∞(ℓ0)` cofactored against `X0`: the relation between entry state and
/// snapshots under which no bad state is reachable.
pub fn secure_relation(g: &mut Scfg, max_nodes: usize) -> Result<Bdd> {
    let n = g.transitions.len();
    let b0: Vec<Bdd> = (0..n)
        .map(|l| match g.invariants.get(&l) {
            Some(inv) => g.store.not(*inv),
            None => Bdd::FALSE,
        })
        .collect();
    let b = coreach(g, &b0, max_nodes)?;
    let good = g.store.not(b[0]);
    Ok(symlat::cofactor(&mut g.store, good, g.x0))
}

/// Summary from a built SCFG.
pub fn summarize(g: &mut Scfg, max_nodes: usize) -> Result<Summary> {
    let rel = secure_relation(g, max_nodes)?;
    let foot: Vec<VarId> = g.footprint.iter().map(|f| f.1).collect();
    let (es, guard) = triangularize(&mut g.store, rel, &foot);
    let mut sum = Summary::for_method(&g.method, g.hv.model);
    sum.guard = Expr::from_bdd(&mut g.store, guard);
    for ((name, _), e) in g.footprint.clone().into_iter().zip(es) {
        sum.effect.insert(name, Expr::from_bdd(&mut g.store, e));
    }
    sum.check_hygiene()?;
    Ok(sum)
}

pub fn infer_summary(m: &Method, env: &CallEnv, cfg: &InferConfig) -> Result<Summary> {
    let mut g = build_scfg(m, env, cfg.model, cfg.build)?;
    summarize(&mut g, cfg.max_nodes)
}
