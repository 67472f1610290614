//! Concrete small-step interpreter. Used as ground truth by the paired
//! execution tester.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::ir::{Method, MethodSig, Operand, Program, Recv, StmtKind, THIS};

pub type ObjId = usize;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Val {
    Int(i64),
    Ref(Option<ObjId>),
}

impl Val {
    fn int(&self) -> i64 {
        match self {
            Val::Int(n) => *n,
            Val::Ref(_) => 0,
        }
    }

    fn obj(&self) -> Option<ObjId> {
        match self {
            Val::Ref(r) => *r,
            Val::Int(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Obj {
    pub class: String,
    pub prims: BTreeMap<String, i64>,
    pub refs: BTreeMap<String, Option<ObjId>>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Heap {
    pub objs: Vec<Obj>,
}

impl Heap {
    /// A fresh object with every declared field at its default.
    pub fn alloc(&mut self, p: &Program, class: &str) -> ObjId {
        let mut o = Obj {
            class: class.to_string(),
            prims: BTreeMap::new(),
            refs: BTreeMap::new(),
        };
        for f in p.all_fields(class) {
            if f.ty.is_ref() {
                o.refs.insert(f.name, None);
            } else {
                o.prims.insert(f.name, 0);
            }
        }
        self.objs.push(o);
        self.objs.len() - 1
    }

    /// Objects reachable from `root`, the root included.
    pub fn reach(&self, root: Option<ObjId>) -> BTreeSet<ObjId> {
        let mut seen = BTreeSet::new();
        let mut todo: Vec<ObjId> = root.into_iter().collect();
        while let Some(o) = todo.pop() {
            if seen.insert(o) {
                todo.extend(self.objs[o].refs.values().flatten().copied());
            }
        }
        seen
    }

    /// The object graph below `root` with identities replaced by discovery
    /// order, so that isomorphic graphs print the same.
    pub fn serialize(&self, root: Option<ObjId>) -> String {
        let Some(root) = root else { return "null".into() };
        let mut label: BTreeMap<ObjId, usize> = BTreeMap::new();
        let mut order = Vec::new();
        let mut q = VecDeque::from([root]);
        label.insert(root, 0);
        while let Some(o) = q.pop_front() {
            order.push(o);
            for r in self.objs[o].refs.values().flatten() {
                if !label.contains_key(r) {
                    label.insert(*r, label.len());
                    q.push_back(*r);
                }
            }
        }
        let mut out = String::new();
        for o in order {
            let obj = &self.objs[o];
            write!(out, "#{}:{}{{", label[&o], obj.class).unwrap();
            for (f, v) in &obj.prims {
                write!(out, "{f}={v};").unwrap();
            }
            for (f, r) in &obj.refs {
                match r {
                    Some(r) => write!(out, "{f}=#{};", label[r]).unwrap(),
                    None => write!(out, "{f}=null;").unwrap(),
                }
            }
            out.push('}');
        }
        out
    }
}

/// What an observer sees of one output argument.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutVal {
    Int(i64),
    Null,
    Obj(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum End {
    Normal,
    /// Ran out of steps.
    Fuel,
    /// Null dereference, failed dispatch or falling off a body.
    Fault,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub outputs: Vec<Vec<OutVal>>,
    pub end: End,
}

/// Concrete behaviour of a method without a body.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NativeKind {
    /// Writes every argument to the public channel.
    Sink,
    /// Reads from the named environment source.
    Source(String),
    /// Returns a default value and touches nothing.
    Pure,
}

pub type Natives = BTreeMap<MethodSig, NativeKind>;

/// Per-source input streams; reads past the end yield 0.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Env {
    pub streams: BTreeMap<String, Vec<i64>>,
    #[serde(skip)]
    pos: BTreeMap<String, usize>,
}

impl Env {
    pub fn new(streams: BTreeMap<String, Vec<i64>>) -> Self {
        Env {
            streams,
            pos: BTreeMap::new(),
        }
    }

    fn next(&mut self, src: &str) -> i64 {
        let i = self.pos.entry(src.to_string()).or_insert(0);
        let v = self.streams.get(src).and_then(|s| s.get(*i)).copied().unwrap_or(0);
        *i += 1;
        v
    }
}

/// Heap plus the entry method's arguments.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConcreteState {
    pub heap: Heap,
    pub args: BTreeMap<String, Val>,
}

#[derive(Clone, Copy, Debug)]
pub struct RunLimits {
    pub fuel: usize,
    pub max_depth: usize,
}

impl Default for RunLimits {
    fn default() -> Self {
        RunLimits {
            fuel: 10_000,
            max_depth: 200,
        }
    }
}

struct Frame<'p> {
    m: &'p Method,
    labels: HashMap<String, usize>,
    at: usize,
    vars: BTreeMap<String, Val>,
    /// Where the caller wants the return value.
    dst: Option<String>,
}

impl<'p> Frame<'p> {
    fn new(m: &'p Method, args: Vec<Val>, dst: Option<String>) -> Self {
        let mut vars = BTreeMap::new();
        for (prm, v) in m.args().into_iter().zip(args) {
            vars.insert(prm.name, v);
        }
        for l in &m.locals {
            let v = if l.ty.is_ref() { Val::Ref(None) } else { Val::Int(0) };
            vars.insert(l.name.clone(), v);
        }
        Frame {
            labels: m.label_index(),
            m,
            at: 0,
            vars,
            dst,
        }
    }

    fn get(&self, v: &str) -> Val {
        self.vars.get(v).cloned().unwrap_or(Val::Int(0))
    }

    fn int(&self, v: &str) -> i64 {
        self.get(v).int()
    }

    fn obj(&self, v: &str) -> Option<ObjId> {
        self.get(v).obj()
    }

    fn operand(&self, o: &Operand) -> Val {
        match o {
            Operand::Var(v) => self.get(v),
            Operand::Int(n) => Val::Int(*n),
            Operand::Bool(b) => Val::Int(*b as i64),
            Operand::Null => Val::Ref(None),
        }
    }
}

fn default_of(m: &Method) -> Option<Val> {
    if m.ret.is_ref() {
        Some(Val::Ref(None))
    } else if m.ret.is_prim() {
        Some(Val::Int(0))
    } else {
        None
    }
}

fn observe(heap: &Heap, v: &Val) -> OutVal {
    match v {
        Val::Int(n) => OutVal::Int(*n),
        Val::Ref(None) => OutVal::Null,
        Val::Ref(r) => OutVal::Obj(heap.serialize(*r)),
    }
}

/// Runs a method without a body on concrete arguments.
fn run_native(
    m: &Method,
    kind: &NativeKind,
    args: &[Val],
    heap: &mut Heap,
    env: &mut Env,
    out: &mut Vec<Vec<OutVal>>,
) -> Option<Val> {
    match kind {
        NativeKind::Pure => default_of(m),
        NativeKind::Sink => {
            out.push(args.iter().map(|v| observe(heap, v)).collect());
            default_of(m)
        }
        NativeKind::Source(src) => {
            let mut filled = false;
            for (prm, v) in m.args().iter().zip(args) {
                if prm.name == THIS || !prm.ty.is_ref() {
                    continue;
                }
                if let Some(o) = v.obj() {
                    let fields: Vec<String> = heap.objs[o].prims.keys().cloned().collect();
                    for f in fields {
                        let x = env.next(src);
                        heap.objs[o].prims.insert(f, x);
                    }
                }
                filled = true;
            }
            if m.ret.is_prim() && !filled {
                Some(Val::Int(env.next(src)))
            } else {
                default_of(m)
            }
        }
    }
}

/// Executes `entry` from `init`. Bodies are always run when present; methods
/// without one behave as `natives` says, and as sinks if unlisted.
pub fn run_concrete(
    p: &Program,
    natives: &Natives,
    entry: &MethodSig,
    init: &ConcreteState,
    env: &mut Env,
    limits: RunLimits,
) -> Trace {
    execute(p, natives, entry, init, env, limits).trace
}

/// A finished run with the heap it left behind.
#[derive(Clone, Debug)]
pub struct Run {
    pub trace: Trace,
    pub heap: Heap,
    /// The entry method's return value, after a normal end.
    pub ret: Option<Val>,
}

fn fin(heap: Heap, outputs: Vec<Vec<OutVal>>, ret: Option<Val>, end: End) -> Run {
    Run {
        trace: Trace { outputs, end },
        heap,
        ret,
    }
}

/// Like [`run_concrete`], keeping the final heap and return value.
pub fn execute(
    p: &Program,
    natives: &Natives,
    entry: &MethodSig,
    init: &ConcreteState,
    env: &mut Env,
    limits: RunLimits,
) -> Run {
    let mut heap = init.heap.clone();
    let mut outputs = Vec::new();
    let Some(m) = p.method(entry) else {
        return fin(heap, outputs, None, End::Fault);
    };
    let args: Vec<Val> = m
        .args()
        .iter()
        .map(|a| {
            init.args
                .get(&a.name)
                .cloned()
                .unwrap_or(if a.ty.is_ref() { Val::Ref(None) } else { Val::Int(0) })
        })
        .collect();
    if m.body.is_none() {
        let kind = natives.get(entry).cloned().unwrap_or(NativeKind::Sink);
        let v = run_native(m, &kind, &args, &mut heap, env, &mut outputs);
        return fin(heap, outputs, v, End::Normal);
    }
    let mut stack = vec![Frame::new(m, args, None)];
    let mut fuel = limits.fuel;
    loop {
        if fuel == 0 {
            return fin(heap, outputs, None, End::Fuel);
        }
        fuel -= 1;
        let f = stack.last_mut().unwrap();
        let Some(st) = f.m.body().get(f.at) else {
            return fin(heap, outputs, None, End::Fault);
        };
        let mut next = f.at + 1;
        match &st.kind {
            StmtKind::Assign { dst, e } => {
                let v = e.eval(&|x| f.int(x));
                f.vars.insert(dst.clone(), Val::Int(v));
            }
            StmtKind::LoadPrim { dst, base, field } => {
                let Some(o) = f.obj(base) else { return fin(heap, outputs, None, End::Fault) };
                let v = heap.objs[o].prims.get(field).copied().unwrap_or(0);
                f.vars.insert(dst.clone(), Val::Int(v));
            }
            StmtKind::LoadRef { dst, base, field } => {
                let Some(o) = f.obj(base) else { return fin(heap, outputs, None, End::Fault) };
                let v = heap.objs[o].refs.get(field).copied().flatten();
                f.vars.insert(dst.clone(), Val::Ref(v));
            }
            StmtKind::StorePrim { base, field, e } => {
                let Some(o) = f.obj(base) else { return fin(heap, outputs, None, End::Fault) };
                let v = e.eval(&|x| f.int(x));
                heap.objs[o].prims.insert(field.clone(), v);
            }
            StmtKind::StoreRef { base, field, src } => {
                let Some(o) = f.obj(base) else { return fin(heap, outputs, None, End::Fault) };
                let v = f.obj(src);
                heap.objs[o].refs.insert(field.clone(), v);
            }
            StmtKind::Copy { dst, src } => {
                let v = f.get(src);
                f.vars.insert(dst.clone(), v);
            }
            StmtKind::New { dst, class } => {
                let o = heap.alloc(p, class);
                f.vars.insert(dst.clone(), Val::Ref(Some(o)));
            }
            StmtKind::Null { dst } => {
                f.vars.insert(dst.clone(), Val::Ref(None));
            }
            StmtKind::Goto { target } => next = f.labels[target],
            StmtKind::If { cond, target } => {
                if cond.eval(&|x| f.int(x)) != 0 {
                    next = f.labels[target];
                }
            }
            StmtKind::Output { args } => {
                let vals = args.iter().map(|a| observe(&heap, &f.get(a))).collect();
                outputs.push(vals);
            }
            StmtKind::Return { value } => {
                let v = value.as_ref().map(|x| f.get(x));
                let fr = stack.pop().unwrap();
                let Some(caller) = stack.last_mut() else {
                    return fin(heap, outputs, v, End::Normal);
                };
                if let (Some(d), Some(v)) = (fr.dst, v) {
                    caller.vars.insert(d, v);
                }
                continue;
            }
            StmtKind::Call { dst, recv, name, args } => {
                let mut actuals: Vec<Val> = Vec::new();
                let callee = match recv {
                    Recv::Static(class) => p.static_method(class, name, args.len()),
                    Recv::Virtual(r) => {
                        let Some(o) = f.obj(r) else { return fin(heap, outputs, None, End::Fault) };
                        actuals.push(Val::Ref(Some(o)));
                        p.dispatch(&heap.objs[o].class, name, args.len())
                    }
                };
                let Some(callee) = callee else { return fin(heap, outputs, None, End::Fault) };
                actuals.extend(args.iter().map(|a| f.operand(a)));
                f.at = next;
                if callee.body.is_some() {
                    if stack.len() >= limits.max_depth {
                        return fin(heap, outputs, None, End::Fuel);
                    }
                    stack.push(Frame::new(callee, actuals, dst.clone()));
                } else {
                    let kind = natives.get(&callee.sig).cloned().unwrap_or(NativeKind::Sink);
                    let v = run_native(callee, &kind, &actuals, &mut heap, env, &mut outputs);
                    if let (Some(d), Some(v)) = (dst, v) {
                        stack.last_mut().unwrap().vars.insert(d.clone(), v);
                    }
                }
                continue;
            }
        }
        f.at = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_program;

    fn run(src: &str, sig: MethodSig, args: &[(&str, Val)], heap: Heap) -> Trace {
        let p = parse_program(src).unwrap();
        let init = ConcreteState {
            heap,
            args: args.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        };
        run_concrete(&p, &Natives::new(), &sig, &init, &mut Env::default(), RunLimits::default())
    }

    #[test]
    fn arithmetic_and_branches() {
        let src = "class C { static void m(int x) { int y; y = x * 2; if (y > 4) goto L; output(y); return; L: output(x); return; } }";
        let sig = MethodSig::new("C", "m", &["int"]);
        let t = run(src, sig.clone(), &[("x", Val::Int(1))], Heap::default());
        assert_eq!(t.outputs, vec![vec![OutVal::Int(2)]]);
        assert_eq!(t.end, End::Normal);
        let t = run(src, sig, &[("x", Val::Int(3))], Heap::default());
        assert_eq!(t.outputs, vec![vec![OutVal::Int(3)]]);
    }

    #[test]
    fn heap_and_calls() {
        let src = "class A { int v; A n; int get() { int x; x = this.v; return x; } }
                   class C { static void m(A a) { A b; int k; b = new A; b.v = 7; a.n = b; k = a.get(); output(k, a); return; } }";
        let p = parse_program(src).unwrap();
        let mut h = Heap::default();
        let a = h.alloc(&p, "A");
        h.objs[a].prims.insert("v".into(), 5);
        let t = run(src, MethodSig::new("C", "m", &["A"]), &[("a", Val::Ref(Some(a)))], h);
        assert_eq!(t.end, End::Normal);
        assert_eq!(t.outputs[0][0], OutVal::Int(5));
        assert_eq!(t.outputs[0][1], OutVal::Obj("#0:A{v=5;n=#1;}#1:A{v=7;n=null;}".into()));
    }

    #[test]
    fn null_dereference_faults_and_loops_run_out_of_fuel() {
        let src = "class A { int v; } class C { static void m(A a) { int x; x = a.v; return; } static void l() { L: goto L; } }";
        let t = run(src, MethodSig::new("C", "m", &["A"]), &[("a", Val::Ref(None))], Heap::default());
        assert_eq!(t.end, End::Fault);
        let t = run(src, MethodSig::new("C", "l", &[]), &[], Heap::default());
        assert_eq!(t.end, End::Fuel);
    }

    #[test]
    fn isomorphic_graphs_serialize_alike() {
        let src = "class A { A n; }";
        let p = parse_program(src).unwrap();
        let mut h1 = Heap::default();
        let x = h1.alloc(&p, "A");
        let y = h1.alloc(&p, "A");
        h1.objs[x].refs.insert("n".into(), Some(y));
        let mut h2 = Heap::default();
        let y2 = h2.alloc(&p, "A");
        let x2 = h2.alloc(&p, "A");
        h2.objs[x2].refs.insert("n".into(), Some(y2));
        assert_eq!(h1.serialize(Some(x)), h2.serialize(Some(x2)));
        h2.objs[y2].refs.insert("n".into(), Some(y2));
        assert_ne!(h1.serialize(Some(x)), h2.serialize(Some(x2)));
    }

    #[test]
    fn natives_follow_their_kind() {
        let src = "class S { static native int rd(); static native void wr(int x); }
                   class C { static void m() { int x; x = S.rd(); S.wr(x); return; } }";
        let p = parse_program(src).unwrap();
        let mut nat = Natives::new();
        nat.insert(MethodSig::new("S", "rd", &[]), NativeKind::Source("p0".into()));
        let mut env = Env::new([("p0".to_string(), vec![9])].into());
        let init = ConcreteState { heap: Heap::default(), args: BTreeMap::new() };
        let t = run_concrete(&p, &nat, &MethodSig::new("C", "m", &[]), &init, &mut env, RunLimits::default());
        assert_eq!(t.outputs, vec![vec![OutVal::Int(9)]]);
    }
}
