//! Random program generator for the property suites. Programs are produced
//! as source text from a small structured AST so that loops stay reducible.

use std::collections::BTreeSet;
use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Shared declarations. `B.get` writes to the public channel, so virtual
/// calls on `A` may reach a sink depending on the receiver's class.
pub const PRELUDE: &str = "class A {
    int v;
    A n;
    int get() { int r; r = this.v; return r; }
    void set(int x) { this.v = x; return; }
}
class B extends A {
    int get() { int r; r = this.v; output(r); return r; }
}
class S {
    static native void sink(int x);
    static native int src();
}
";

pub const STUBS: &str = "static void S:sink(int x) { sink; }
static int S:src() { source p0; }
";

#[derive(Clone, Debug)]
pub struct Callee {
    pub class: String,
    pub name: String,
    pub params: Vec<&'static str>,
    pub ret: &'static str,
}

impl Callee {
    pub fn user(class: &str, name: &str, params: Vec<&'static str>, ret: &'static str) -> Self {
        Callee {
            class: class.into(),
            name: name.into(),
            params,
            ret,
        }
    }

    pub fn id(&self) -> String {
        format!("{}.{}", self.class, self.name)
    }
}

/// What the generator may emit.
#[derive(Clone, Debug)]
pub struct Shape {
    pub stmts: usize,
    pub prims: usize,
    pub refs: usize,
    pub loops: bool,
    pub heap: bool,
    /// `output(..)` and `S.sink(..)`.
    pub sinks: bool,
    pub sources: bool,
    /// Virtual `get`/`set` on `A` references.
    pub virtuals: bool,
}

impl Shape {
    pub fn small() -> Self {
        Shape {
            stmts: 8,
            prims: 3,
            refs: 2,
            loops: false,
            heap: true,
            sinks: true,
            sources: true,
            virtuals: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MethodDecl {
    pub name: String,
    pub params: Vec<(&'static str, String)>,
    pub ret: &'static str,
}

impl MethodDecl {
    pub fn callee(&self, class: &str) -> Callee {
        Callee::user(class, &self.name, self.params.iter().map(|p| p.0).collect(), self.ret)
    }
}

/// Facts the generator knows about a method it produced.
#[derive(Clone, Debug, Default)]
pub struct Facts {
    pub calls: BTreeSet<String>,
    pub direct_sink: bool,
}

enum Node {
    Line(String),
    If(String, Vec<Node>, Vec<Node>),
    While(String, Vec<Node>),
}

struct Body<'a> {
    rng: &'a mut ChaCha8Rng,
    shape: &'a Shape,
    prims: Vec<String>,
    refs: Vec<String>,
    callees: &'a [Callee],
    facts: Facts,
    budget: usize,
}

const OPS: [&str; 6] = ["<", "<=", ">", ">=", "==", "!="];

fn negate(op: &str) -> &'static str {
    match op {
        "<" => ">=",
        "<=" => ">",
        ">" => "<=",
        ">=" => "<",
        "==" => "!=",
        _ => "==",
    }
}

impl Body<'_> {
    fn prim(&mut self) -> String {
        self.prims.choose(self.rng).unwrap().clone()
    }

    fn rf(&mut self) -> Option<String> {
        self.refs.choose(self.rng).cloned()
    }

    fn atom(&mut self) -> String {
        if self.rng.gen_bool(0.7) {
            self.prim()
        } else {
            self.rng.gen_range(0..4).to_string()
        }
    }

    fn expr(&mut self) -> String {
        match self.rng.gen_range(0..4) {
            0 => self.atom(),
            1 => format!("{} + {}", self.atom(), self.atom()),
            2 => format!("{} * {}", self.atom(), self.atom()),
            _ => format!("{} {} {}", self.atom(), OPS.choose(self.rng).unwrap(), self.atom()),
        }
    }

    /// A comparison and its negation.
    fn cond(&mut self) -> (String, String) {
        let a = self.prim();
        let op = *OPS.choose(self.rng).unwrap();
        let b = self.rng.gen_range(0..4);
        (format!("{a} {op} {b}"), format!("{a} {} {b}", negate(op)))
    }

    fn actual(&mut self, ty: &str) -> String {
        if ty == "int" {
            if self.rng.gen_bool(0.8) {
                self.prim()
            } else {
                self.rng.gen_range(0..4).to_string()
            }
        } else {
            match self.rf() {
                Some(r) if self.rng.gen_bool(0.9) => r,
                _ => "null".into(),
            }
        }
    }

    fn call(&mut self) -> Option<String> {
        let c = self.callees.choose(self.rng)?.clone();
        if c.params.iter().any(|t| *t != "int") && self.refs.is_empty() {
            return None;
        }
        let args: Vec<String> = c.params.iter().map(|t| self.actual(t)).collect();
        let head = format!("{}.{}({})", c.class, c.name, args.join(", "));
        self.facts.calls.insert(c.id());
        Some(match c.ret {
            "int" => format!("{} = {head};", self.prim()),
            "A" if !self.refs.is_empty() => format!("{} = {head};", self.rf().unwrap()),
            _ => format!("{head};"),
        })
    }

    fn simple(&mut self) -> String {
        loop {
            let has_ref = !self.refs.is_empty();
            let k = self.rng.gen_range(0..14);
            let line = match k {
                0..=2 => Some(format!("{} = {};", self.prim(), self.expr())),
                3 if has_ref && self.shape.heap => Some(format!("{} = {}.v;", self.prim(), self.rf().unwrap())),
                4 if has_ref && self.shape.heap => Some(format!("{}.v = {};", self.rf().unwrap(), self.expr())),
                5 if has_ref && self.shape.heap => Some(format!("{} = {}.n;", self.rf().unwrap(), self.rf().unwrap())),
                6 if has_ref && self.shape.heap => Some(format!("{}.n = {};", self.rf().unwrap(), self.rf().unwrap())),
                7 if has_ref => match self.rng.gen_range(0..3) {
                    0 => Some(format!("{} = {};", self.rf().unwrap(), self.rf().unwrap())),
                    1 => Some(format!("{} = new A;", self.rf().unwrap())),
                    _ => Some(format!("{} = null;", self.rf().unwrap())),
                },
                8 if has_ref && self.shape.heap => Some(format!("{} = new {};", self.rf().unwrap(), ["A", "B"].choose(self.rng).unwrap())),
                9 if self.shape.sinks => {
                    self.facts.direct_sink = true;
                    if has_ref && self.rng.gen_bool(0.3) {
                        Some(format!("output({});", self.rf().unwrap()))
                    } else {
                        Some(format!("output({});", self.prim()))
                    }
                }
                10 if self.shape.sinks => {
                    self.facts.direct_sink = true;
                    Some(format!("S.sink({});", self.atom()))
                }
                11 if self.shape.sources => Some(format!("{} = S.src();", self.prim())),
                12 if self.shape.virtuals && has_ref => {
                    let r = self.rf().unwrap();
                    self.facts.direct_sink = true;
                    if self.rng.gen_bool(0.5) {
                        Some(format!("{} = {r}.get();", self.prim()))
                    } else {
                        Some(format!("{r}.set({});", self.atom()))
                    }
                }
                13 => self.call(),
                _ => None,
            };
            if let Some(l) = line {
                return l;
            }
        }
    }

    fn block(&mut self, depth: usize) -> Vec<Node> {
        let mut out = Vec::new();
        while self.budget > 0 {
            let roll = self.rng.gen_range(0..10);
            if depth < 2 && roll < 2 && self.budget >= 3 {
                let (c, _) = self.cond();
                self.budget -= 1;
                let then = self.sub_block(depth);
                let els = if self.rng.gen_bool(0.4) { self.sub_block(depth) } else { Vec::new() };
                out.push(Node::If(c, then, els));
            } else if depth < 2 && roll == 2 && self.shape.loops && self.budget >= 3 {
                let (c, _) = self.cond();
                self.budget -= 2;
                let body = self.sub_block(depth);
                out.push(Node::While(c, body));
            } else {
                self.budget -= 1;
                let l = self.simple();
                out.push(Node::Line(l));
            }
            if depth > 0 && self.rng.gen_bool(0.4) {
                break;
            }
        }
        out
    }

    fn sub_block(&mut self, depth: usize) -> Vec<Node> {
        let b = self.block(depth + 1);
        if b.is_empty() {
            let a = self.atom();
            vec![Node::Line(format!("{} = {a};", self.prims[0]))]
        } else {
            b
        }
    }
}

struct Emit {
    lines: Vec<String>,
    pending: Option<String>,
    next: usize,
}

impl Emit {
    fn label_here(&mut self) -> String {
        if let Some(l) = &self.pending {
            return l.clone();
        }
        let l = format!("L{}", self.next);
        self.next += 1;
        self.pending = Some(l.clone());
        l
    }

    fn fresh(&mut self) -> String {
        let l = format!("L{}", self.next);
        self.next += 1;
        l
    }

    fn push(&mut self, s: String) {
        match self.pending.take() {
            Some(l) => self.lines.push(format!("    {l}: {s}")),
            None => self.lines.push(format!("        {s}")),
        }
    }

    fn place(&mut self, label: &str) {
        // the label goes on the next statement; an earlier pending one
        // is aliased with a no-op jump target
        if let Some(p) = self.pending.take() {
            self.lines.push(format!("    {p}: goto {label};"));
        }
        self.pending = Some(label.to_string());
    }

    fn nodes(&mut self, ns: &[Node]) {
        for n in ns {
            match n {
                Node::Line(l) => self.push(l.clone()),
                Node::If(c, then, els) => {
                    let t = self.fresh();
                    let end = self.fresh();
                    self.push(format!("if ({c}) goto {t};"));
                    self.nodes(els);
                    self.push(format!("goto {end};"));
                    self.place(&t);
                    self.nodes(then);
                    self.place(&end);
                }
                Node::While(c, body) => {
                    let top = self.label_here();
                    let inside = self.fresh();
                    let end = self.fresh();
                    self.push(format!("if ({c}) goto {inside};"));
                    self.push(format!("goto {end};"));
                    self.place(&inside);
                    self.nodes(body);
                    self.push(format!("goto {top};"));
                    self.place(&end);
                }
            }
        }
    }
}

/// Source text of one method with a random body.
pub fn method(rng: &mut ChaCha8Rng, decl: &MethodDecl, is_static: bool, shape: &Shape, callees: &[Callee]) -> (String, Facts) {
    let mut prims: Vec<String> = decl.params.iter().filter(|p| p.0 == "int").map(|p| p.1.clone()).collect();
    let mut refs: Vec<String> = decl.params.iter().filter(|p| p.0 != "int").map(|p| p.1.clone()).collect();
    let mut locals = Vec::new();
    let want_prims = rng.gen_range(1..=shape.prims.max(1)).max(prims.len());
    while prims.len() < want_prims || prims.is_empty() {
        let n = format!("y{}", prims.len());
        locals.push(format!("int {n};"));
        prims.push(n);
    }
    let want_refs = if shape.refs == 0 { 0 } else { rng.gen_range(0..=shape.refs) };
    while refs.len() < want_refs {
        let n = format!("b{}", refs.len());
        locals.push(format!("A {n};"));
        refs.push(n);
    }
    if decl.ret == "A" && refs.is_empty() {
        locals.push("A b0;".into());
        refs.push("b0".into());
    }
    // reference locals mostly start on a fresh object so that bodies do
    // not stop at the first dereference
    let mut inits = Vec::new();
    for r in refs.iter().filter(|r| r.starts_with('b')) {
        if rng.gen_bool(0.8) {
            inits.push(Node::Line(format!("{r} = new {};", ["A", "B"].choose(rng).unwrap())));
        }
    }
    let budget = shape.stmts.saturating_sub(1 + inits.len()).max(1);
    let mut body = Body {
        rng,
        shape,
        prims: prims.clone(),
        refs: refs.clone(),
        callees,
        facts: Facts::default(),
        budget,
    };
    let mut nodes = inits;
    nodes.extend(body.block(0));
    let facts = body.facts;
    let mut em = Emit {
        lines: Vec::new(),
        pending: None,
        next: 0,
    };
    em.nodes(&nodes);
    let ret = match decl.ret {
        "int" => format!("return {};", prims.choose(rng).unwrap()),
        "A" => format!("return {};", refs.choose(rng).unwrap()),
        _ => "return;".to_string(),
    };
    em.push(ret);
    let params: Vec<String> = decl.params.iter().map(|(t, n)| format!("{t} {n}")).collect();
    let mut out = String::new();
    writeln!(
        out,
        "    {}{} {}({}) {{",
        if is_static { "static " } else { "" },
        decl.ret,
        decl.name,
        params.join(", ")
    )
    .unwrap();
    for l in locals {
        writeln!(out, "        {l}").unwrap();
    }
    for l in em.lines {
        writeln!(out, "{l}").unwrap();
    }
    out.push_str("    }\n");
    (out, facts)
}

/// Random parameter list and return type within `shape`'s limits.
pub fn decl(rng: &mut ChaCha8Rng, name: &str, shape: &Shape) -> MethodDecl {
    let mut params = Vec::new();
    let np = rng.gen_range(0..=shape.prims.min(2));
    for i in 0..np {
        params.push(("int", format!("x{i}")));
    }
    let nr = if shape.refs == 0 { 0 } else { rng.gen_range(0..=shape.refs.min(2)) };
    for i in 0..nr {
        params.push(("A", format!("a{i}")));
    }
    params.shuffle(rng);
    let ret = *["void", "int", "A"].choose(rng).unwrap();
    let ret = if ret == "A" && shape.refs == 0 { "int" } else { ret };
    MethodDecl {
        name: name.into(),
        params,
        ret,
    }
}

/// One class `C` of static methods with the given bodies.
pub fn program(methods: &[String]) -> String {
    let mut out = String::from(PRELUDE);
    out.push_str("class C {\n");
    for m in methods {
        out.push_str(m);
    }
    out.push_str("}\n");
    out
}

/// A single loop-free method `m` in class `C` of at most `shape.stmts`
/// statements once branches are lowered to jumps.
pub fn loop_free(rng: &mut ChaCha8Rng) -> String {
    let shape = Shape::small();
    loop {
        let d = decl(rng, "m", &shape);
        let (m, _) = method(rng, &d, true, &shape, &[]);
        let stmts = m.lines().filter(|l| l.trim_end().ends_with(';')).count() - locals(&m);
        if stmts <= shape.stmts {
            return program(&[m]);
        }
    }
}

fn locals(m: &str) -> usize {
    m.lines()
        .filter(|l| {
            let t = l.trim_start();
            (t.starts_with("int ") || t.starts_with("A ")) && !t.contains('=')
        })
        .count()
}

/// Several mutually calling methods `m0..m{n-1}`, with branches, loops,
/// heap mutation, virtual calls and (when `recursive`) call cycles.
pub fn calling_program(rng: &mut ChaCha8Rng, n: usize, recursive: bool, loops: bool) -> (String, Vec<MethodDecl>) {
    let shape = Shape {
        stmts: 10,
        prims: 3,
        refs: 2,
        loops,
        heap: true,
        sinks: true,
        sources: true,
        virtuals: true,
    };
    let decls: Vec<MethodDecl> = (0..n).map(|i| decl(rng, &format!("m{i}"), &shape)).collect();
    let mut bodies = Vec::new();
    for (i, d) in decls.iter().enumerate() {
        let callees: Vec<Callee> = decls
            .iter()
            .enumerate()
            .filter(|(j, _)| if recursive { true } else { *j > i })
            .map(|(_, c)| c.callee("C"))
            .collect();
        let (b, _) = method(rng, d, true, &shape, &callees);
        bodies.push(b);
    }
    (program(&bodies), decls)
}

/// A strongly connected component `r0 -> r1 -> ... -> r0` of size `k`,
/// plus random extra edges inside it.
pub fn recursive_scc(rng: &mut ChaCha8Rng, k: usize) -> (String, Vec<MethodDecl>) {
    let shape = Shape {
        stmts: 8,
        prims: 2,
        refs: 2,
        loops: false,
        heap: true,
        sinks: true,
        sources: false,
        virtuals: false,
    };
    let decls: Vec<MethodDecl> = (0..k).map(|i| decl(rng, &format!("r{i}"), &shape)).collect();
    let mut bodies = Vec::new();
    for (i, d) in decls.iter().enumerate() {
        let next = decls[(i + 1) % k].callee("C");
        let all: Vec<Callee> = decls.iter().map(|c| c.callee("C")).collect();
        let (b, _) = method(rng, d, true, &shape, &all);
        // force the cycle edge in front of the first statement
        let args: Vec<String> = next
            .params
            .iter()
            .map(|t| {
                let pool: Vec<&String> = d.params.iter().filter(|p| (p.0 == "int") == (*t == "int")).map(|p| &p.1).collect();
                match pool.choose(rng) {
                    Some(v) => v.to_string(),
                    None if *t == "int" => "0".into(),
                    None => "null".into(),
                }
            })
            .collect();
        let call = format!("        C.{}({});", next.name, args.join(", "));
        let mut lines: Vec<String> = b.lines().map(String::from).collect();
        let first = 1 + lines[1..]
            .iter()
            .position(|l| {
                let t = l.trim_start();
                !(t.starts_with("int ") || t.starts_with("A "))
            })
            .unwrap();
        lines.insert(first, call);
        let b = lines.join("\n") + "\n";
        bodies.push(b);
    }
    (program(&bodies), decls)
}

/// Layered static call corpus: layer `i` calls into layer `i + 1`. Returns
/// the text and, per method, the generator's facts.
pub fn layered_corpus(rng: &mut ChaCha8Rng, layers: usize, width: usize, shape: &Shape, sink_rate: f64) -> (String, Vec<(String, Facts)>) {
    let mut decls: Vec<Vec<MethodDecl>> = Vec::new();
    for l in 0..layers {
        decls.push((0..width).map(|i| decl(rng, &format!("f{l}x{i}"), shape)).collect());
    }
    let mut bodies = Vec::new();
    let mut facts = Vec::new();
    for l in 0..layers {
        for d in &decls[l] {
            let callees: Vec<Callee> = if l + 1 < layers {
                let mut c: Vec<Callee> = decls[l + 1].iter().map(|x| x.callee("C")).collect();
                c.shuffle(rng);
                c.truncate(3);
                c
            } else {
                Vec::new()
            };
            let mut sh = shape.clone();
            sh.sinks = rng.gen_bool(sink_rate);
            let (b, f) = method(rng, d, true, &sh, &callees);
            facts.push((d.name.clone(), f));
            bodies.push(b);
        }
    }
    (program(&bodies), facts)
}
