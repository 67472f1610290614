//! Whole-program solving: call graph, per-call-site summary combination and
//! chaotic iteration over strongly connected components.

pub mod stubs;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use log::{debug, info};

pub use stubs::{bottom_summary, pessimistic_summary, sink_summary, source_summary};

use crate::error::{Error, Result};
use crate::heap::HeapModel;
use crate::infer::{infer_summary, positional_name, InferConfig, Provenance, Summary};
use crate::ir::{normalize_method, Method, MethodSig, Operand, Param, Program, Recv, StmtKind, Ty};
use crate::scfg::{call_actuals, CallEnv};
use crate::symlat::{self, Expr, PC};

/// Targets of one call site.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CallSite {
    pub index: usize,
    pub targets: Vec<MethodSig>,
}

#[derive(Clone, Debug, Default)]
pub struct CallGraph {
    pub sites: BTreeMap<MethodSig, Vec<CallSite>>,
}

impl CallGraph {
    /// Call sites of every method in `methods`, which must be normalized.
    pub fn build(p: &Program, methods: &BTreeMap<MethodSig, Method>, stubs: &BTreeMap<MethodSig, Summary>) -> CallGraph {
        let mut sites = BTreeMap::new();
        for (sig, m) in methods {
            let mut v = Vec::new();
            for (i, st) in m.body().iter().enumerate() {
                if matches!(st.kind, StmtKind::Call { .. }) {
                    v.push(CallSite {
                        index: i,
                        targets: resolve_targets(p, m, &st.kind, stubs),
                    });
                }
            }
            sites.insert(sig.clone(), v);
        }
        CallGraph { sites }
    }

    pub fn deps(&self, m: &MethodSig) -> BTreeSet<MethodSig> {
        self.sites
            .get(m)
            .into_iter()
            .flatten()
            .flat_map(|s| s.targets.iter().cloned())
            .collect()
    }
}

/// A declared (possibly bodiless) instance method visible in `ty`.
fn find_declared(p: &Program, ty: &str, name: &str, arity: usize) -> Option<MethodSig> {
    let mut todo = vec![ty.to_string()];
    let mut seen = BTreeSet::new();
    while let Some(c) = todo.pop() {
        if !seen.insert(c.clone()) {
            continue;
        }
        let Some(decl) = p.class(&c) else { continue };
        if let Some(m) = decl
            .methods
            .iter()
            .find(|m| !m.is_static && m.sig.name == name && m.params.len() == arity)
        {
            return Some(m.sig.clone());
        }
        todo.extend(decl.extends.iter().cloned());
        todo.extend(decl.implements.iter().cloned());
    }
    None
}

fn find_stub(stubs: &BTreeMap<MethodSig, Summary>, class: &str, name: &str, arity: usize) -> Option<MethodSig> {
    stubs
        .keys()
        .find(|s| s.recv_type == class && s.name == name && s.arg_types.len() == arity)
        .cloned()
}

/// Possible targets of a call: for virtual calls the implementation each
/// concrete subtype of the receiver's static type dispatches to.
pub fn resolve_targets(p: &Program, m: &Method, call: &StmtKind, stubs: &BTreeMap<MethodSig, Summary>) -> Vec<MethodSig> {
    let StmtKind::Call { recv, name, args, .. } = call else {
        return Vec::new();
    };
    let arity = args.len();
    match recv {
        Recv::Static(class) => p
            .static_method(class, name, arity)
            .map(|m| m.sig.clone())
            .or_else(|| find_stub(stubs, class, name, arity))
            .into_iter()
            .collect(),
        Recv::Virtual(r) => {
            let Some(ty) = m.var_ty(r) else { return Vec::new() };
            let ty = ty.name().to_string();
            let mut out: BTreeSet<MethodSig> = BTreeSet::new();
            for c in p.concrete_subclasses(&ty) {
                if let Some(t) = p.dispatch(&c, name, arity) {
                    out.insert(t.sig.clone());
                }
            }
            if out.is_empty() {
                if let Some(s) = find_declared(p, &ty, name, arity).or_else(|| find_stub(stubs, &ty, name, arity)) {
                    out.insert(s);
                }
            }
            out.into_iter().collect()
        }
    }
}

/// Join of positional target summaries: guards conjoined, effects merged
/// with `⊔̇`. With several targets the dispatch decision itself depends on
/// the receiver, so `pc` is raised to `pc ⊔ level_#0`.
pub fn combine_summaries(targets: &[Summary]) -> Result<Summary> {
    let first = targets
        .first()
        .ok_or_else(|| Error::semantic("no summaries to combine"))?;
    let foot = first.footprint();
    let mut out = first.clone();
    for t in &targets[1..] {
        if t.footprint() != foot || t.support() != first.support() {
            return Err(Error::semantic(format!("support mismatch combining {} and {}", first.sig, t.sig)));
        }
        out.guard = Expr::and(vec![out.guard.clone(), t.guard.clone()]);
        for f in &foot {
            let a = out.effect.get(f).cloned().unwrap_or_else(|| out.identity(f));
            let b = t.effect.get(f).cloned().unwrap_or_else(|| t.identity(f));
            out.effect.insert(f.clone(), Expr::or(vec![a, b]));
        }
    }
    if targets.len() > 1 {
        let recv = Expr::var(symlat::level(&positional_name(0)));
        let m: BTreeMap<String, Expr> = [(PC.to_string(), Expr::or(vec![Expr::var(PC), recv]))].into();
        out.guard = out.guard.substitute(&m);
        for e in out.effect.values_mut() {
            *e = e.substitute(&m);
        }
    }
    out.guard = out.guard.normalized();
    for e in out.effect.values_mut() {
        *e = e.normalized();
    }
    Ok(out)
}

/// Pessimistic summary shaped after the call itself, for calls with no
/// resolvable target.
fn unresolved_summary(m: &Method, call: &StmtKind, model: HeapModel) -> Summary {
    let StmtKind::Call { dst, recv, name, args } = call else { unreachable!() };
    let actuals = call_actuals(recv, args);
    let mut params = Vec::new();
    for (i, a) in actuals.iter().enumerate() {
        let ty = match a {
            Operand::Var(v) => m.var_ty(v).unwrap_or(Ty::Void),
            Operand::Int(_) => Ty::Prim("int".into()),
            Operand::Bool(_) => Ty::Prim("boolean".into()),
            Operand::Null => Ty::Ref("Object".into()),
        };
        params.push(Param { name: positional_name(i), ty });
    }
    let ret = dst.as_ref().and_then(|d| m.var_ty(d)).unwrap_or(Ty::Void);
    let class = match recv {
        Recv::Static(c) => c.clone(),
        Recv::Virtual(r) => m.var_ty(r).map(|t| t.name().to_string()).unwrap_or_default(),
    };
    let arg_types = params.iter().skip(usize::from(matches!(recv, Recv::Virtual(_)))).map(|p| p.ty.name()).collect::<Vec<_>>();
    let sig = MethodSig::new(&class, name, &arg_types);
    pessimistic_summary(sig, params, ret, model)
}

/// Call environment of a normalized method against a solved table.
pub fn call_env(p: &Program, m: &Method, stubs: &BTreeMap<MethodSig, Summary>, table: &SummaryTable, model: HeapModel) -> Result<CallEnv> {
    let mut env = CallEnv::new();
    for (i, st) in m.body().iter().enumerate() {
        if !matches!(st.kind, StmtKind::Call { .. }) {
            continue;
        }
        let targets = resolve_targets(p, m, &st.kind, stubs);
        let sum = if targets.is_empty() {
            unresolved_summary(m, &st.kind, model)
        } else {
            let mut parts = Vec::new();
            for t in &targets {
                let s = match table.get(t) {
                    Some(s) => s.clone(),
                    None => {
                        let tm = p.method(t).ok_or_else(|| Error::semantic(format!("unknown method {t}")))?;
                        pessimistic_summary(t.clone(), tm.args(), tm.ret.clone(), model)
                    }
                };
                parts.push(s.positional());
            }
            combine_summaries(&parts)?
        };
        env.insert(i, sum);
    }
    Ok(env)
}

#[derive(Clone, Copy, Debug)]
pub struct SolveConfig {
    pub infer: InferConfig,
    /// Re-inferences allowed per method inside a recursive component.
    pub max_iters: usize,
}

#[derive(Clone, Debug)]
pub struct Entry {
    pub summary: Summary,
    pub provenance: Provenance,
    /// Why a method was skipped, if it was.
    pub note: Option<String>,
}

#[derive(Clone, Debug, Default)]
pub struct SummaryTable {
    pub entries: BTreeMap<MethodSig, Entry>,
    /// Every summary computed for a method, in order.
    pub history: BTreeMap<MethodSig, Vec<Summary>>,
    /// Methods analysed from their bodies, in solving order.
    pub order: Vec<MethodSig>,
}

impl SummaryTable {
    pub fn get(&self, sig: &MethodSig) -> Option<&Summary> {
        self.entries.get(sig).map(|e| &e.summary)
    }
}

/// Tarjan's algorithm; components come out callees first.
fn sccs(nodes: &[MethodSig], edges: &BTreeMap<MethodSig, BTreeSet<MethodSig>>) -> Vec<Vec<MethodSig>> {
    struct St<'a> {
        edges: &'a BTreeMap<MethodSig, BTreeSet<MethodSig>>,
        index: BTreeMap<MethodSig, usize>,
        low: BTreeMap<MethodSig, usize>,
        on: BTreeSet<MethodSig>,
        stack: Vec<MethodSig>,
        out: Vec<Vec<MethodSig>>,
    }
    fn visit(st: &mut St, v: &MethodSig) {
        let i = st.index.len();
        st.index.insert(v.clone(), i);
        st.low.insert(v.clone(), i);
        st.stack.push(v.clone());
        st.on.insert(v.clone());
        let succs: Vec<MethodSig> = st.edges.get(v).into_iter().flatten().cloned().collect();
        for w in &succs {
            if !st.index.contains_key(w) {
                visit(st, w);
                let lw = st.low[w];
                let lv = st.low.get_mut(v).unwrap();
                *lv = (*lv).min(lw);
            } else if st.on.contains(w) {
                let iw = st.index[w];
                let lv = st.low.get_mut(v).unwrap();
                *lv = (*lv).min(iw);
            }
        }
        if st.low[v] == st.index[v] {
            let mut comp = Vec::new();
            loop {
                let w = st.stack.pop().unwrap();
                st.on.remove(&w);
                let done = &w == v;
                comp.push(w);
                if done {
                    break;
                }
            }
            comp.sort();
            st.out.push(comp);
        }
    }
    let mut st = St {
        edges,
        index: BTreeMap::new(),
        low: BTreeMap::new(),
        on: BTreeSet::new(),
        stack: Vec::new(),
        out: Vec::new(),
    };
    for n in nodes {
        if !st.index.contains_key(n) {
            visit(&mut st, n);
        }
    }
    st.out
}

struct Solver<'a> {
    p: &'a Program,
    cfg: SolveConfig,
    methods: BTreeMap<MethodSig, Method>,
    graph: CallGraph,
    table: SummaryTable,
}

impl Solver<'_> {
    fn method_shape(&self, sig: &MethodSig) -> Option<(Vec<Param>, Ty)> {
        self.p.method(sig).map(|m| (m.args(), m.ret.clone()))
    }

    /// Current summary of a target, synthesizing a pessimistic one for
    /// bodiless methods without a stub.
    fn target_summary(&mut self, sig: &MethodSig) -> Result<Summary> {
        if let Some(e) = self.table.entries.get(sig) {
            return Ok(e.summary.clone());
        }
        let (args, ret) = self
            .method_shape(sig)
            .ok_or_else(|| Error::semantic(format!("unknown method {sig}")))?;
        let s = pessimistic_summary(sig.clone(), args, ret, self.cfg.infer.model);
        self.table.entries.insert(
            sig.clone(),
            Entry {
                summary: s.clone(),
                provenance: Provenance::Pessimistic,
                note: Some("no body and no stub".into()),
            },
        );
        Ok(s)
    }

    fn env_for(&mut self, sig: &MethodSig) -> Result<CallEnv> {
        let m = self.methods[sig].clone();
        let sites = self.graph.sites.get(sig).cloned().unwrap_or_default();
        let mut env = CallEnv::new();
        for site in sites {
            let call = &m.body()[site.index].kind;
            let sum = if site.targets.is_empty() {
                debug!("{sig}: unresolved call at {}", site.index);
                unresolved_summary(&m, call, self.cfg.infer.model)
            } else {
                let mut parts = Vec::new();
                for t in &site.targets {
                    parts.push(self.target_summary(t)?.positional());
                }
                combine_summaries(&parts)?
            };
            env.insert(site.index, sum);
        }
        Ok(env)
    }

    /// Infer one method against the current table. Skips become
    /// pessimistic summaries.
    fn infer_one(&mut self, sig: &MethodSig) -> Result<(Summary, Provenance, Option<String>)> {
        let env = self.env_for(sig)?;
        let m = &self.methods[sig];
        match infer_summary(m, &env, &self.cfg.infer) {
            Ok(s) => Ok((s, Provenance::Inferred, None)),
            Err(Error::Skip { reason, .. }) => {
                info!("{sig}: skipped ({reason}), using pessimistic summary");
                let s = pessimistic_summary(sig.clone(), m.args(), m.ret.clone(), self.cfg.infer.model);
                Ok((s, Provenance::Pessimistic, Some(reason)))
            }
            Err(e) => Err(e),
        }
    }

    fn record(&mut self, sig: &MethodSig, s: Summary, provenance: Provenance, note: Option<String>) {
        self.table.history.entry(sig.clone()).or_default().push(s.clone());
        self.table.entries.insert(
            sig.clone(),
            Entry {
                summary: s,
                provenance,
                note,
            },
        );
    }

    fn solve_component(&mut self, comp: &[MethodSig]) -> Result<()> {
        let recursive = comp.len() > 1 || self.graph.deps(&comp[0]).contains(&comp[0]);
        if !recursive {
            let (s, prov, note) = self.infer_one(&comp[0])?;
            self.record(&comp[0], s, prov, note);
            self.table.order.push(comp[0].clone());
            return Ok(());
        }
        let members: BTreeSet<MethodSig> = comp.iter().cloned().collect();
        for sig in comp {
            let m = &self.methods[sig];
            let b = bottom_summary(sig.clone(), m.args(), m.ret.clone(), self.cfg.infer.model);
            self.record(sig, b, Provenance::Bottom, None);
        }
        // callers inside the component
        let mut users: BTreeMap<MethodSig, Vec<MethodSig>> = BTreeMap::new();
        for sig in comp {
            for d in self.graph.deps(sig) {
                if members.contains(&d) {
                    users.entry(d).or_default().push(sig.clone());
                }
            }
        }
        let mut work: VecDeque<MethodSig> = comp.iter().cloned().collect();
        let mut queued: BTreeSet<MethodSig> = members.clone();
        let mut iters: BTreeMap<MethodSig, usize> = BTreeMap::new();
        let mut sticky: BTreeSet<MethodSig> = BTreeSet::new();
        while let Some(sig) = work.pop_front() {
            queued.remove(&sig);
            if sticky.contains(&sig) {
                continue;
            }
            let n = iters.entry(sig.clone()).or_default();
            *n += 1;
            if *n > self.cfg.max_iters {
                return Err(Error::NonTermination {
                    iters: self.cfg.max_iters,
                    scc: comp.iter().map(|s| s.to_string()).collect(),
                });
            }
            let iter = *n;
            let (s, prov, note) = self.infer_one(&sig)?;
            let old = self.table.entries[&sig].summary.clone();
            if s.same_as(&old) {
                self.table.entries.get_mut(&sig).unwrap().provenance = prov;
                continue;
            }
            if prov == Provenance::Pessimistic {
                sticky.insert(sig.clone());
            } else if !s.guard.entails(&old.guard) {
                return Err(Error::Monotonicity {
                    method: sig.to_string(),
                    iter,
                });
            }
            debug!("{sig}: changed at iteration {iter}");
            self.record(&sig, s, prov, note);
            for u in users.get(&sig).cloned().unwrap_or_default() {
                if queued.insert(u.clone()) {
                    work.push_back(u);
                }
            }
        }
        self.table.order.extend(comp.iter().cloned());
        Ok(())
    }
}

/// Summaries for every method of `p`. Stubs take precedence over bodies.
pub fn solve_program(p: &Program, stubs: &BTreeMap<MethodSig, Summary>, cfg: SolveConfig) -> Result<SummaryTable> {
    let mut methods = BTreeMap::new();
    for m in p.methods() {
        if m.body.is_some() && !stubs.contains_key(&m.sig) {
            methods.insert(m.sig.clone(), normalize_method(m));
        }
    }
    let graph = CallGraph::build(p, &methods, stubs);
    let mut table = SummaryTable::default();
    for (sig, s) in stubs {
        table.entries.insert(
            sig.clone(),
            Entry {
                summary: s.clone(),
                provenance: Provenance::Stub,
                note: None,
            },
        );
    }
    let nodes: Vec<MethodSig> = methods.keys().cloned().collect();
    let edges: BTreeMap<MethodSig, BTreeSet<MethodSig>> = nodes
        .iter()
        .map(|n| (n.clone(), graph.deps(n).into_iter().filter(|d| methods.contains_key(d)).collect()))
        .collect();
    let comps = sccs(&nodes, &edges);
    let mut solver = Solver {
        p,
        cfg,
        methods,
        graph,
        table,
    };
    for comp in comps {
        solver.solve_component(&comp)?;
    }
    Ok(solver.table)
}
