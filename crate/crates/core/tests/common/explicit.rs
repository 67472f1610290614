//! Brute-force guard computation by explicit enumeration of SCFG states.
//!
//! For every valuation of the support the initial state is built by hand
//! (support values as given, every other state variable low/unrelated),
//! then all reachable states are explored one step at a time with every
//! choice of the per-location input bits. The guard holds for a valuation
//! when no non-exit invariant is violated and some choice of snapshot
//! values satisfies the exit invariant in every reachable exit state.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use flowsum::scfg::Scfg;
use flowsum::symlat::{self, Expr, VarId};

pub struct Outcome {
    pub checked: usize,
    pub mismatch: Option<String>,
}

/// Every support valuation, or a sample of `cap` of them when there are
/// more.
fn valuations(n: usize, cap: usize) -> Vec<u64> {
    let total = 1u64 << n;
    if total as usize <= cap {
        (0..total).collect()
    } else {
        // deterministic spread over the whole cube
        let step = total / cap as u64;
        (0..cap as u64).map(|i| i * step + (i % step.max(1))).collect()
    }
}

/// Support valuation and whether the guard must hold there.
pub type GuardTable = Vec<(BTreeMap<String, bool>, bool)>;

pub fn guard_table(g: &Scfg, cap: usize) -> Result<GuardTable, String> {
    let s = &g.store;
    let state: Vec<VarId> = g.state_vars();
    let index: BTreeMap<VarId, usize> = state.iter().enumerate().map(|(i, v)| (*v, i)).collect();

    // the support plus any stream levels
    let mut fixed_names: Vec<String> = g.support.clone();
    for i in 0..s.num_vars() as u32 {
        let n = s.name(VarId(i));
        if symlat::is_source(n) && !fixed_names.iter().any(|f| f == n) {
            fixed_names.push(n.to_string());
        }
    }
    let snaps: Vec<VarId> = (0..s.num_vars() as u32).map(VarId).filter(|v| s.name(*v).ends_with(symlat::SNAP)).collect();
    let exit = g.exit();

    let mut out = Vec::new();
    for bits in valuations(fixed_names.len(), cap) {
        let sigma: BTreeMap<String, bool> = fixed_names.iter().enumerate().map(|(i, n)| (n.clone(), bits >> i & 1 == 1)).collect();
        let mut init = vec![false; state.len()];
        for (n, b) in &sigma {
            if let Some(v) = s.lookup(n) {
                if let Some(&i) = index.get(&v) {
                    init[i] = *b;
                }
            }
        }
        let lookup = |st: &[bool], omega: &BTreeMap<VarId, bool>, snap: &BTreeMap<VarId, bool>, v: VarId| -> bool {
            if let Some(&i) = index.get(&v) {
                return st[i];
            }
            if let Some(b) = omega.get(&v).or_else(|| snap.get(&v)) {
                return *b;
            }
            sigma.get(s.name(v)).copied().unwrap_or(false)
        };

        let mut seen: HashSet<(usize, Vec<bool>)> = HashSet::new();
        let mut work = vec![(0usize, init)];
        let mut exits: Vec<Vec<bool>> = Vec::new();
        let mut bad = false;
        let none = BTreeMap::new();
        while let Some((loc, st)) = work.pop() {
            if !seen.insert((loc, st.clone())) {
                continue;
            }
            if seen.len() > 200_000 {
                return Err("state space too large".into());
            }
            if loc == exit {
                exits.push(st);
                continue;
            }
            if let Some(inv) = g.invariants.get(&loc) {
                if !s.eval(*inv, |v| lookup(&st, &none, &none, v)) {
                    bad = true;
                    break;
                }
            }
            let ts = &g.transitions[loc];
            let mut ins: BTreeSet<VarId> = BTreeSet::new();
            for t in ts {
                ins.extend(s.support(t.guard).into_iter().filter(|v| g.inputs.contains(v)));
                for e in t.update.values() {
                    ins.extend(s.support(*e).into_iter().filter(|v| g.inputs.contains(v)));
                }
            }
            let ins: Vec<VarId> = ins.into_iter().collect();
            for w in 0u64..1 << ins.len() {
                let omega: BTreeMap<VarId, bool> = ins.iter().enumerate().map(|(i, v)| (*v, w >> i & 1 == 1)).collect();
                for t in ts {
                    if !s.eval(t.guard, |v| lookup(&st, &omega, &none, v)) {
                        continue;
                    }
                    let mut next = st.clone();
                    for (v, e) in &t.update {
                        let Some(&i) = index.get(v) else {
                            return Err(format!("update of non-state variable {}", s.name(*v)));
                        };
                        next[i] = s.eval(*e, |x| lookup(&st, &omega, &none, x));
                    }
                    work.push((t.target, next));
                }
            }
        }
        let ok = !bad && {
            let inv = g.invariants.get(&exit).copied().unwrap_or(flowsum::symlat::Bdd::TRUE);
            let used: Vec<VarId> = snaps.iter().copied().filter(|v| s.support(inv).contains(v)).collect();
            let holds = |snap: &BTreeMap<VarId, bool>| exits.iter().all(|st| s.eval(inv, |v| lookup(st, &none, snap, v)));
            let top: BTreeMap<VarId, bool> = used.iter().map(|v| (*v, true)).collect();
            holds(&top)
                || (used.len() <= 16
                    && (0u64..1 << used.len()).any(|w| {
                        let m = used.iter().enumerate().map(|(i, v)| (*v, w >> i & 1 == 1)).collect();
                        holds(&m)
                    }))
        };
        out.push((sigma, ok));
    }
    Ok(out)
}

/// A state variable outside the support that the initial-state predicate
/// does not fix to the value the enumeration starts from.
pub fn init_disagreement(g: &Scfg) -> Option<String> {
    let mut s = g.store.clone();
    let fixed = symlat::fixed_constants(&mut s, g.x0);
    for v in g.state_vars() {
        let n = s.name(v).to_string();
        if g.support.contains(&n) {
            continue;
        }
        if fixed.get(&v) != Some(&false) {
            return Some(format!("{n} is {:?} at entry", fixed.get(&v)));
        }
    }
    None
}

/// Compare `guard` against the brute-force table of `g`.
pub fn compare(g: &Scfg, guard: &Expr, cap: usize) -> Outcome {
    let table = match guard_table(g, cap) {
        Ok(t) => t,
        Err(e) => {
            return Outcome {
                checked: 0,
                mismatch: Some(e),
            }
        }
    };
    for (sigma, expect) in &table {
        let got = guard.eval(&|n| sigma.get(n).copied().unwrap_or(false));
        if got != *expect {
            let on: Vec<&String> = sigma.iter().filter(|(_, b)| **b).map(|(n, _)| n).collect();
            return Outcome {
                checked: table.len(),
                mismatch: Some(format!("at {on:?}: inferred {got}, enumerated {expect}")),
            };
        }
    }
    Outcome {
        checked: table.len(),
        mismatch: None,
    }
}
