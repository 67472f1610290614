//! The analysed language: classes, methods and labelled three-address bodies.

pub mod hierarchy;
pub mod normalize;
pub mod parse;
pub mod print;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use hierarchy::TypeHierarchy;
pub use normalize::normalize_method;
pub use parse::parse_program;

pub const PRIM_TYPES: &[&str] = &["int", "long", "short", "byte", "char", "boolean"];

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Ty {
    Prim(String),
    Ref(String),
    Void,
}

impl Ty {
    pub fn named(name: &str) -> Ty {
        if name == "void" {
            Ty::Void
        } else if PRIM_TYPES.contains(&name) {
            Ty::Prim(name.to_string())
        } else {
            Ty::Ref(name.to_string())
        }
    }

    pub fn is_ref(&self) -> bool {
        matches!(self, Ty::Ref(_))
    }

    pub fn is_prim(&self) -> bool {
        matches!(self, Ty::Prim(_))
    }

    pub fn name(&self) -> &str {
        match self {
            Ty::Prim(n) | Ty::Ref(n) => n,
            Ty::Void => "void",
        }
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MethodSig {
    pub recv_type: String,
    pub name: String,
    pub arg_types: Vec<String>,
}

impl MethodSig {
    pub fn new(recv: &str, name: &str, args: &[&str]) -> Self {
        MethodSig {
            recv_type: recv.to_string(),
            name: name.to_string(),
            arg_types: args.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// File-name friendly rendering.
    pub fn file_stem(&self) -> String {
        let args: Vec<String> = self.arg_types.iter().map(|a| a.replace("[]", "Arr")).collect();
        format!("{}.{}({})", self.recv_type, self.name, args.join(","))
    }
}

impl fmt::Display for MethodSig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}({})", self.recv_type, self.name, self.arg_types.join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    pub fn apply(self, a: i64, b: i64) -> i64 {
        match self {
            BinOp::Add => a.wrapping_add(b),
            BinOp::Sub => a.wrapping_sub(b),
            BinOp::Mul => a.wrapping_mul(b),
            BinOp::Lt => (a < b) as i64,
            BinOp::Le => (a <= b) as i64,
            BinOp::Gt => (a > b) as i64,
            BinOp::Ge => (a >= b) as i64,
            BinOp::Eq => (a == b) as i64,
            BinOp::Ne => (a != b) as i64,
            BinOp::And => (a != 0 && b != 0) as i64,
            BinOp::Or => (a != 0 || b != 0) as i64,
        }
    }
}

/// Primitive expression over primitive variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PExpr {
    Int(i64),
    Bool(bool),
    Var(String),
    Unary(UnOp, Box<PExpr>),
    Binary(BinOp, Box<PExpr>, Box<PExpr>),
}

impl PExpr {
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut BTreeSet<String>) {
        match self {
            PExpr::Int(_) | PExpr::Bool(_) => {}
            PExpr::Var(v) => {
                out.insert(v.clone());
            }
            PExpr::Unary(_, a) => a.collect(out),
            PExpr::Binary(_, a, b) => {
                a.collect(out);
                b.collect(out);
            }
        }
    }

    pub fn eval(&self, env: &dyn Fn(&str) -> i64) -> i64 {
        match self {
            PExpr::Int(n) => *n,
            PExpr::Bool(b) => *b as i64,
            PExpr::Var(v) => env(v),
            PExpr::Unary(UnOp::Neg, a) => a.eval(env).wrapping_neg(),
            PExpr::Unary(UnOp::Not, a) => (a.eval(env) == 0) as i64,
            PExpr::Binary(op, a, b) => op.apply(a.eval(env), b.eval(env)),
        }
    }

    pub fn rename(&mut self, from: &str, to: &str) {
        match self {
            PExpr::Var(v) if v == from => *v = to.to_string(),
            PExpr::Unary(_, a) => a.rename(from, to),
            PExpr::Binary(_, a, b) => {
                a.rename(from, to);
                b.rename(from, to);
            }
            _ => {}
        }
    }
}

/// Call argument.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Operand {
    Var(String),
    Int(i64),
    Bool(bool),
    Null,
}

impl Operand {
    pub fn var(&self) -> Option<&str> {
        match self {
            Operand::Var(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Recv {
    Virtual(String),
    Static(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StmtKind {
    /// `v = e`
    Assign { dst: String, e: PExpr },
    /// `v = r.f` with `f` primitive
    LoadPrim { dst: String, base: String, field: String },
    /// `r = s.f` with `f` a reference
    LoadRef { dst: String, base: String, field: String },
    /// `r.f = e`
    StorePrim { base: String, field: String, e: PExpr },
    /// `r.f = s`
    StoreRef { base: String, field: String, src: String },
    /// `r = s`
    Copy { dst: String, src: String },
    New { dst: String, class: String },
    Null { dst: String },
    Goto { target: String },
    If { cond: PExpr, target: String },
    Call { dst: Option<String>, recv: Recv, name: String, args: Vec<Operand> },
    Output { args: Vec<String> },
    Return { value: Option<String> },
}

impl StmtKind {
    /// Variable assigned by the statement, if any.
    pub fn def(&self) -> Option<&str> {
        match self {
            StmtKind::Assign { dst, .. }
            | StmtKind::LoadPrim { dst, .. }
            | StmtKind::LoadRef { dst, .. }
            | StmtKind::Copy { dst, .. }
            | StmtKind::New { dst, .. }
            | StmtKind::Null { dst } => Some(dst),
            StmtKind::Call { dst, .. } => dst.as_deref(),
            _ => None,
        }
    }

    pub fn rename_var(&mut self, from: &str, to: &str) {
        let r = |s: &mut String| {
            if s == from {
                *s = to.to_string();
            }
        };
        match self {
            StmtKind::Assign { dst, e } => {
                r(dst);
                e.rename(from, to);
            }
            StmtKind::LoadPrim { dst, base, .. } | StmtKind::LoadRef { dst, base, .. } => {
                r(dst);
                r(base);
            }
            StmtKind::StorePrim { base, e, .. } => {
                r(base);
                e.rename(from, to);
            }
            StmtKind::StoreRef { base, src, .. } => {
                r(base);
                r(src);
            }
            StmtKind::Copy { dst, src } => {
                r(dst);
                r(src);
            }
            StmtKind::New { dst, .. } | StmtKind::Null { dst } => r(dst),
            StmtKind::Goto { .. } => {}
            StmtKind::If { cond, .. } => cond.rename(from, to),
            StmtKind::Call { dst, recv, args, .. } => {
                if let Some(d) = dst {
                    r(d);
                }
                if let Recv::Virtual(v) = recv {
                    r(v);
                }
                for a in args {
                    if let Operand::Var(v) = a {
                        r(v);
                    }
                }
            }
            StmtKind::Output { args } => args.iter_mut().for_each(r),
            StmtKind::Return { value } => {
                if let Some(v) = value {
                    r(v);
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Statement {
    pub label: Option<String>,
    pub kind: StmtKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub ty: Ty,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Method {
    pub sig: MethodSig,
    pub is_static: bool,
    pub params: Vec<Param>,
    pub ret: Ty,
    pub locals: Vec<Param>,
    /// `None` for native (bodiless) methods.
    pub body: Option<Vec<Statement>>,
}

pub const THIS: &str = "this";

impl Method {
    /// `Args_m`: `this` first for instance methods, then the parameters.
    pub fn args(&self) -> Vec<Param> {
        let mut v = Vec::new();
        if !self.is_static {
            v.push(Param {
                name: THIS.to_string(),
                ty: Ty::Ref(self.sig.recv_type.clone()),
            });
        }
        v.extend(self.params.iter().cloned());
        v
    }

    pub fn var_ty(&self, name: &str) -> Option<Ty> {
        if name == THIS && !self.is_static {
            return Some(Ty::Ref(self.sig.recv_type.clone()));
        }
        self.params
            .iter()
            .chain(self.locals.iter())
            .find(|p| p.name == name)
            .map(|p| p.ty.clone())
    }

    pub fn is_ref_var(&self, name: &str) -> bool {
        self.var_ty(name).is_some_and(|t| t.is_ref())
    }

    pub fn all_vars(&self) -> Vec<Param> {
        let mut v = self.args();
        v.extend(self.locals.iter().cloned());
        v
    }

    pub fn refs(&self) -> Vec<String> {
        self.all_vars().into_iter().filter(|p| p.ty.is_ref()).map(|p| p.name).collect()
    }

    pub fn prims(&self) -> Vec<String> {
        self.all_vars().into_iter().filter(|p| p.ty.is_prim()).map(|p| p.name).collect()
    }

    pub fn arg_refs(&self) -> Vec<String> {
        self.args().into_iter().filter(|p| p.ty.is_ref()).map(|p| p.name).collect()
    }

    pub fn body(&self) -> &[Statement] {
        self.body.as_deref().unwrap_or(&[])
    }

    pub fn label_index(&self) -> HashMap<String, usize> {
        self.body()
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.label.clone().map(|l| (l, i)))
            .collect()
    }

    /// Control-flow successors; `body.len()` stands for the exit.
    pub fn succs(&self, i: usize, labels: &HashMap<String, usize>) -> Vec<usize> {
        let body = self.body();
        match &body[i].kind {
            StmtKind::Goto { target } => vec![labels[target]],
            StmtKind::If { target, .. } => {
                let t = labels[target];
                let f = i + 1;
                if t == f {
                    vec![t]
                } else {
                    vec![t, f]
                }
            }
            StmtKind::Return { .. } => vec![body.len()],
            _ => vec![i + 1],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDecl {
    pub name: String,
    pub is_interface: bool,
    pub extends: Option<String>,
    pub implements: Vec<String>,
    pub fields: Vec<Param>,
    pub methods: Vec<Method>,
}

#[derive(Clone, Debug, Default)]
pub struct Program {
    pub classes: Vec<ClassDecl>,
    pub hierarchy: TypeHierarchy,
    index: BTreeMap<MethodSig, (usize, usize)>,
}

impl Program {
    pub fn new(classes: Vec<ClassDecl>, hierarchy: TypeHierarchy) -> Self {
        let mut p = Program {
            classes,
            hierarchy,
            index: BTreeMap::new(),
        };
        p.reindex();
        p
    }

    pub fn reindex(&mut self) {
        self.index.clear();
        for (ci, c) in self.classes.iter().enumerate() {
            for (mi, m) in c.methods.iter().enumerate() {
                self.index.insert(m.sig.clone(), (ci, mi));
            }
        }
    }

    pub fn method(&self, sig: &MethodSig) -> Option<&Method> {
        self.index.get(sig).map(|&(c, m)| &self.classes[c].methods[m])
    }

    pub fn method_mut(&mut self, sig: &MethodSig) -> Option<&mut Method> {
        let (c, m) = *self.index.get(sig)?;
        Some(&mut self.classes[c].methods[m])
    }

    pub fn methods(&self) -> impl Iterator<Item = &Method> {
        self.classes.iter().flat_map(|c| c.methods.iter())
    }

    pub fn class(&self, name: &str) -> Option<&ClassDecl> {
        self.classes.iter().find(|c| c.name == name)
    }

    /// Field type, searching superclasses. Arrays have a primitive `length`.
    pub fn field_ty(&self, class: &str, field: &str) -> Option<Ty> {
        if class.ends_with("[]") {
            return (field == "length").then(|| Ty::Prim("int".into()));
        }
        let mut cur = Some(class.to_string());
        while let Some(c) = cur {
            let decl = self.class(&c)?;
            if let Some(f) = decl.fields.iter().find(|f| f.name == field) {
                return Some(f.ty.clone());
            }
            cur = decl.extends.clone();
        }
        None
    }

    /// All fields of a class including inherited ones, sorted by name.
    pub fn all_fields(&self, class: &str) -> Vec<Param> {
        if class.ends_with("[]") {
            return vec![Param {
                name: "length".into(),
                ty: Ty::Prim("int".into()),
            }];
        }
        let mut out: BTreeMap<String, Ty> = BTreeMap::new();
        let mut cur = Some(class.to_string());
        while let Some(c) = cur {
            let Some(decl) = self.class(&c) else { break };
            for f in &decl.fields {
                out.entry(f.name.clone()).or_insert_with(|| f.ty.clone());
            }
            cur = decl.extends.clone();
        }
        out.into_iter().map(|(name, ty)| Param { name, ty }).collect()
    }

    /// Concrete (instantiable) classes that are subtypes of `ty`.
    pub fn concrete_subclasses(&self, ty: &str) -> Vec<String> {
        if ty.ends_with("[]") {
            return vec![ty.to_string()];
        }
        self.classes
            .iter()
            .filter(|c| !c.is_interface && self.hierarchy.subtype(&c.name, ty).unwrap_or(false))
            .map(|c| c.name.clone())
            .collect()
    }

    /// Static method `name/arity` declared in `class` or a superclass.
    pub fn static_method(&self, class: &str, name: &str, arity: usize) -> Option<&Method> {
        let mut cur = Some(class.to_string());
        while let Some(c) = cur {
            let decl = self.class(&c)?;
            if let Some(m) = decl
                .methods
                .iter()
                .find(|m| m.is_static && m.sig.name == name && m.params.len() == arity)
            {
                return Some(m);
            }
            cur = decl.extends.clone();
        }
        None
    }

    /// Most specific implementation of `name/arity` for a runtime class.
    pub fn dispatch(&self, class: &str, name: &str, arity: usize) -> Option<&Method> {
        let mut cur = Some(class.to_string());
        while let Some(c) = cur {
            let decl = self.class(&c)?;
            if let Some(m) = decl
                .methods
                .iter()
                .find(|m| !m.is_static && m.sig.name == name && m.params.len() == arity)
            {
                return Some(m);
            }
            cur = decl.extends.clone();
        }
        None
    }
}
