//! Paired-execution noninterference testing of a summary guard.
//!
//! A trial draws a concrete entry state, then a level assignment that
//! satisfies the guard and agrees with the sharing facts of that state, then
//! one or more second states that agree with the first on everything the
//! assignment calls low. Both are run and their public outputs compared,
//! allowing one trace to be a prefix of the other only when the shorter run
//! stopped abnormally.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::interp::{run_concrete, ConcreteState, End, Env, Heap, NativeKind, Natives, ObjId, RunLimits, Trace, Val};
use crate::heap::HeapModel;
use crate::infer::Summary;
use crate::ir::{Method, MethodSig, Program};
use crate::symlat::{self, Store, PC};

/// Truth value per lattice variable; `true` is high.
pub type LevelAssignment = BTreeMap<String, bool>;

#[derive(Clone, Copy, Debug)]
pub struct NiConfig {
    pub trials: usize,
    /// Second states per trial when exhaustive pairing is too large.
    pub pairs: usize,
    pub limits: RunLimits,
    pub seed: u64,
    pub max_objects: usize,
    /// Primitive values are drawn from `0..domain`.
    pub domain: i64,
}

impl Default for NiConfig {
    fn default() -> Self {
        NiConfig {
            trials: 200,
            pairs: 8,
            limits: RunLimits::default(),
            seed: 0,
            max_objects: 4,
            domain: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub method: String,
    pub levels: LevelAssignment,
    pub first: ConcreteState,
    pub second: Option<ConcreteState>,
    pub env_first: Env,
    pub env_second: Env,
    pub trace_first: Trace,
    pub trace_second: Trace,
}

impl Witness {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("witness serializes")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Every pair agreed; `runs` pairs were compared.
    Pass { runs: usize },
    /// The guard admits no level assignment.
    Vacuous,
    Fail(Box<Witness>),
}

impl Verdict {
    pub fn passed(&self) -> bool {
        !matches!(self, Verdict::Fail(_))
    }
}

/// Sharing facts of a concrete state, named like the relation variables.
pub fn heap_facts(model: HeapModel, refs: &[String], st: &ConcreteState) -> BTreeMap<String, bool> {
    let root = |r: &String| st.args.get(r).and_then(|v| match v {
        Val::Ref(o) => *o,
        Val::Int(_) => None,
    });
    let mut out = BTreeMap::new();
    for a in refs {
        let ra = st.heap.reach(root(a));
        for b in refs {
            let fact = match model {
                HeapModel::LPrec => !ra.is_disjoint(&st.heap.reach(root(b))),
                HeapModel::HPrec => root(b).is_some_and(|o| ra.contains(&o)),
            };
            out.insert(model.rel_name(a, b), fact);
        }
    }
    out
}

fn root_of(st: &ConcreteState, r: &str) -> Option<ObjId> {
    match st.args.get(r) {
        Some(Val::Ref(o)) => *o,
        _ => None,
    }
}

fn high(sigma: &LevelAssignment, v: &str) -> bool {
    sigma.get(v).copied().unwrap_or(false)
}

/// Parallel walk of two object graphs under a growing bijection. Contents
/// are compared only when `deep`, and once per object.
struct Matcher<'a> {
    h1: &'a Heap,
    h2: &'a Heap,
    map: BTreeMap<ObjId, ObjId>,
    inv: BTreeMap<ObjId, ObjId>,
    explored: BTreeSet<ObjId>,
}

impl Matcher<'_> {
    fn pair(&mut self, a: ObjId, b: ObjId, deep: bool) -> bool {
        if self.map.get(&a).is_some_and(|x| *x != b) || self.inv.get(&b).is_some_and(|y| *y != a) {
            return false;
        }
        self.map.insert(a, b);
        self.inv.insert(b, a);
        if !deep || !self.explored.insert(a) {
            return true;
        }
        let (o1, o2) = (&self.h1.objs[a], &self.h2.objs[b]);
        if o1.class != o2.class || o1.prims != o2.prims || o1.refs.len() != o2.refs.len() {
            return false;
        }
        let fields: Vec<(Option<ObjId>, Option<ObjId>)> = o1.refs.values().copied().zip(o2.refs.values().copied()).collect();
        fields.into_iter().all(|f| match f {
            (None, None) => true,
            (Some(x), Some(y)) => self.pair(x, y, true),
            _ => false,
        })
    }
}

/// Whether two entry states agree on what `sigma` calls low: low primitive
/// arguments are equal, low pointers have the same identity, and the
/// portions reachable from roots with a low object level are isomorphic.
pub fn low_equivalent(m: &Method, s1: &ConcreteState, s2: &ConcreteState, sigma: &LevelAssignment) -> bool {
    let mut mt = Matcher {
        h1: &s1.heap,
        h2: &s2.heap,
        map: BTreeMap::new(),
        inv: BTreeMap::new(),
        explored: BTreeSet::new(),
    };
    let args = m.args();
    for a in &args {
        if !a.ty.is_ref() && !high(sigma, &symlat::level(&a.name)) && s1.args.get(&a.name) != s2.args.get(&a.name) {
            return false;
        }
    }
    // pointer identities first, then contents
    for deep in [false, true] {
        for a in args.iter().filter(|a| a.ty.is_ref()) {
            let lo_ptr = !high(sigma, &symlat::level(&a.name));
            let lo_obj = !high(sigma, &symlat::objlevel(&a.name));
            let (r1, r2) = (root_of(s1, &a.name), root_of(s2, &a.name));
            if !deep && lo_ptr {
                match (r1, r2) {
                    (None, None) => {}
                    (Some(x), Some(y)) => {
                        if !mt.pair(x, y, false) {
                            return false;
                        }
                    }
                    _ => return false,
                }
            }
            if deep && lo_obj {
                if let (Some(x), Some(y)) = (r1, r2) {
                    if lo_ptr {
                        if !mt.pair(x, y, true) {
                            return false;
                        }
                    } else if s1.heap.serialize(r1) != s2.heap.serialize(r2) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

struct Gen<'a> {
    p: &'a Program,
    rng: ChaCha8Rng,
    cfg: NiConfig,
}

impl Gen<'_> {
    fn prim(&mut self) -> i64 {
        self.rng.gen_range(0..self.cfg.domain)
    }

    fn compatible(&self, heap: &Heap, ty: &str) -> Vec<ObjId> {
        (0..heap.objs.len())
            .filter(|&o| self.p.hierarchy.subtype(&heap.objs[o].class, ty).unwrap_or(false))
            .collect()
    }

    /// Null, an existing object or (room permitting) a new one.
    fn pick_ref(&mut self, heap: &mut Heap, ty: &str, allow_new: bool) -> Option<ObjId> {
        let existing = self.compatible(heap, ty);
        let classes = self.p.concrete_subclasses(ty);
        let can_new = allow_new && heap.objs.len() < self.cfg.max_objects && !classes.is_empty();
        match self.rng.gen_range(0..3) {
            0 => None,
            1 if !existing.is_empty() => existing.choose(&mut self.rng).copied(),
            _ if can_new => {
                let c = classes.choose(&mut self.rng).unwrap().clone();
                Some(heap.alloc(self.p, &c))
            }
            _ => existing.choose(&mut self.rng).copied(),
        }
    }

    fn field_ty(&self, class: &str, f: &str) -> String {
        self.p
            .field_ty(class, f)
            .map(|t| t.name().to_string())
            .unwrap_or_else(|| "Object".into())
    }

    fn fill(&mut self, heap: &mut Heap, o: ObjId, allow_new: bool) {
        let prims: Vec<String> = heap.objs[o].prims.keys().cloned().collect();
        for f in prims {
            let v = self.prim();
            heap.objs[o].prims.insert(f, v);
        }
        let refs: Vec<String> = heap.objs[o].refs.keys().cloned().collect();
        for f in refs {
            let ty = self.field_ty(&heap.objs[o].class.clone(), &f);
            let v = self.pick_ref(heap, &ty, allow_new);
            heap.objs[o].refs.insert(f, v);
        }
    }

    fn state(&mut self, m: &Method) -> ConcreteState {
        let mut heap = Heap::default();
        let mut args = BTreeMap::new();
        for a in m.args() {
            let v = if a.ty.is_ref() {
                Val::Ref(self.pick_ref(&mut heap, a.ty.name(), true))
            } else {
                Val::Int(self.prim())
            };
            args.insert(a.name, v);
        }
        let mut i = 0;
        while i < heap.objs.len() {
            self.fill(&mut heap, i, true);
            i += 1;
        }
        ConcreteState { heap, args }
    }

    /// A second state: everything not pinned low by `sigma` redrawn.
    fn vary(&mut self, m: &Method, s1: &ConcreteState, sigma: &LevelAssignment, prims: &BTreeMap<String, i64>) -> ConcreteState {
        let mut s2 = s1.clone();
        let mut fixed: BTreeSet<ObjId> = BTreeSet::new();
        for a in m.args().iter().filter(|a| a.ty.is_ref()) {
            if !high(sigma, &symlat::objlevel(&a.name)) {
                fixed.extend(s1.heap.reach(root_of(s1, &a.name)));
            }
        }
        for o in 0..s2.heap.objs.len() {
            if !fixed.contains(&o) {
                self.fill(&mut s2.heap, o, false);
            }
        }
        for a in m.args() {
            if !high(sigma, &symlat::level(&a.name)) {
                continue;
            }
            let v = if a.ty.is_ref() {
                let mut cands = self.compatible(&s2.heap, a.ty.name());
                if !high(sigma, &symlat::objlevel(&a.name)) {
                    cands.retain(|o| fixed.contains(o));
                }
                if self.rng.gen_bool(0.25) {
                    Val::Ref(None)
                } else {
                    Val::Ref(cands.choose(&mut self.rng).copied())
                }
            } else {
                Val::Int(prims.get(&a.name).copied().unwrap_or_else(|| self.prim()))
            };
            s2.args.insert(a.name, v);
        }
        s2
    }

    fn stream(&mut self) -> Vec<i64> {
        (0..8).map(|_| self.prim()).collect()
    }
}

/// Prefix rule: equal outputs, or the shorter run stopped abnormally.
pub fn traces_agree(t1: &Trace, t2: &Trace) -> bool {
    let n = t1.outputs.len().min(t2.outputs.len());
    if t1.outputs[..n] != t2.outputs[..n] {
        return false;
    }
    match t1.outputs.len().cmp(&t2.outputs.len()) {
        std::cmp::Ordering::Equal => true,
        std::cmp::Ordering::Less => t1.end != End::Normal,
        std::cmp::Ordering::Greater => t2.end != End::Normal,
    }
}

/// All vectors over `names` with values in `0..domain`.
fn enumerate(names: &[String], domain: i64) -> Vec<BTreeMap<String, i64>> {
    let mut out = vec![BTreeMap::new()];
    for n in names {
        let mut next = Vec::new();
        for m in &out {
            for v in 0..domain {
                let mut m = m.clone();
                m.insert(n.clone(), v);
                next.push(m);
            }
        }
        out = next;
    }
    out
}

/// Tests the guard of `sum` for `sig` against concrete runs of its body.
pub fn check_noninterference(p: &Program, natives: &Natives, sig: &MethodSig, sum: &Summary, cfg: NiConfig) -> Verdict {
    let Some(m) = p.method(sig) else { return Verdict::Vacuous };
    let model = sum.model;
    let refs = m.arg_refs();
    let mut names: BTreeSet<String> = sum.guard.vars();
    names.insert(PC.to_string());
    for a in m.args() {
        names.insert(symlat::level(&a.name));
    }
    for r in &refs {
        names.insert(symlat::objlevel(r));
    }
    names.extend(model.rel_names(&refs));
    for k in natives.values() {
        if let NativeKind::Source(s) = k {
            names.insert(s.clone());
        }
    }
    let mut store = Store::with_order(symlat::sorted_order(&names.iter().cloned().collect::<Vec<_>>()));
    let guard = sum.guard.to_bdd(&mut store);
    if guard.is_false() {
        return Verdict::Vacuous;
    }
    let mut g = Gen {
        p,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        cfg,
    };
    let sources: Vec<String> = names.iter().filter(|n| symlat::is_source(n)).cloned().collect();
    let mut runs = 0;
    for _ in 0..cfg.trials {
        let s1 = g.state(m);
        let facts = heap_facts(model, &refs, &s1);
        let mut f = guard;
        for (n, &b) in &facts {
            if b {
                let v = store.var(n);
                f = store.and(f, v);
            }
        }
        let Some(path) = store.pick_sat(f, || g.rng.gen_bool(0.5)) else { continue };
        let mut sigma: LevelAssignment = BTreeMap::new();
        for n in &names {
            let id = store.var_id(n);
            let v = match path.get(&id) {
                Some(v) => *v,
                None => g.rng.gen_bool(0.5),
            };
            sigma.insert(n.clone(), v);
        }
        let high_prims: Vec<String> = m
            .args()
            .iter()
            .filter(|a| !a.ty.is_ref() && high(&sigma, &symlat::level(&a.name)))
            .map(|a| a.name.clone())
            .collect();
        let combos = (cfg.domain as u128).checked_pow(high_prims.len() as u32).unwrap_or(u128::MAX);
        let pairings: Vec<BTreeMap<String, i64>> = if combos <= 64 {
            enumerate(&high_prims, cfg.domain)
        } else {
            vec![BTreeMap::new(); cfg.pairs]
        };
        let mut streams1 = BTreeMap::new();
        for s in &sources {
            streams1.insert(s.clone(), g.stream());
        }
        let mut env = Env::new(streams1.clone());
        let t1 = run_concrete(p, natives, sig, &s1, &mut env, cfg.limits);
        let fail = |s2: Option<ConcreteState>, e2: Env, t2: Trace| {
            Verdict::Fail(Box::new(Witness {
                method: sig.to_string(),
                levels: sigma.clone(),
                first: s1.clone(),
                second: s2,
                env_first: Env::new(streams1.clone()),
                env_second: e2,
                trace_first: t1.clone(),
                trace_second: t2,
            }))
        };
        if high(&sigma, PC) {
            // a high context may skip the call altogether
            runs += 1;
            let none = Trace {
                outputs: Vec::new(),
                end: End::Normal,
            };
            if !traces_agree(&t1, &none) {
                return fail(None, Env::default(), none);
            }
            continue;
        }
        for prims in pairings {
            let mut found = None;
            for _ in 0..20 {
                let s2 = g.vary(m, &s1, &sigma, &prims);
                let f2 = heap_facts(model, &refs, &s2);
                let consistent = f2.iter().all(|(n, b)| !b || high(&sigma, n));
                if consistent && low_equivalent(m, &s1, &s2, &sigma) {
                    found = Some(s2);
                    break;
                }
            }
            let Some(s2) = found else { continue };
            let mut streams2 = streams1.clone();
            for s in &sources {
                if high(&sigma, s) {
                    streams2.insert(s.clone(), g.stream());
                }
            }
            let mut env2 = Env::new(streams2.clone());
            let t2 = run_concrete(p, natives, sig, &s2, &mut env2, cfg.limits);
            runs += 1;
            if !traces_agree(&t1, &t2) {
                return fail(Some(s2), Env::new(streams2), t2);
            }
        }
    }
    Verdict::Pass { runs }
}
