//! Reader for `.sir` program text.
//!
//! ```text
//! class RandomAccessFile {
//!     native void writeBytes(byte[] b, int off, int len);
//!     void write(byte[] r1, int i0, int i1) {
//!         this.writeBytes(r1, i0, i1);
//!         return;
//!     }
//! }
//! ```
//!
//! Locals are declared at the top of a body. Statements end with `;` and may
//! carry a label `L3:`. Variable names may not contain `_` (it separates the
//! parts of relation variable names) and `ret` is reserved.

use std::collections::{BTreeSet, HashMap, HashSet};

use super::hierarchy::{TypeHierarchy, TypeInfo, TypeKind};
use super::{
    BinOp, ClassDecl, Method, MethodSig, Operand, PExpr, Param, Program, Recv, Statement, StmtKind,
    Ty, UnOp, THIS,
};
use crate::error::{Error, Pos, Result};

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str),
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

const SYMS: &[&str] = &[
    "<=", ">=", "==", "!=", "&&", "||", "{", "}", "(", ")", ";", ",", ".", "=", ":", "[", "]", "+",
    "-", "*", "<", ">", "!",
];

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = match line.find("//") {
            Some(i) => &line[..i],
            None => line,
        };
        let chars: Vec<(usize, char)> = line.char_indices().collect();
        let mut i = 0;
        while i < chars.len() {
            let (bi, c) = chars[i];
            let pos = Pos {
                line: ln + 1,
                col: i + 1,
            };
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c.is_ascii_digit() {
                let mut j = i;
                while j < chars.len() && chars[j].1.is_ascii_digit() {
                    j += 1;
                }
                let end = chars.get(j).map_or(line.len(), |x| x.0);
                let n = line[bi..end]
                    .parse::<i64>()
                    .map_err(|_| Error::syntax(pos, "integer literal out of range"))?;
                out.push(Token { tok: Tok::Int(n), pos });
                i = j;
                continue;
            }
            if c.is_alphabetic() || c == '_' || c == '$' {
                let mut j = i;
                while j < chars.len() && (chars[j].1.is_alphanumeric() || matches!(chars[j].1, '_' | '$' | '\'')) {
                    j += 1;
                }
                let end = chars.get(j).map_or(line.len(), |x| x.0);
                out.push(Token {
                    tok: Tok::Ident(line[bi..end].to_string()),
                    pos,
                });
                i = j;
                continue;
            }
            let rest = &line[bi..];
            match SYMS.iter().find(|s| rest.starts_with(**s)) {
                Some(s) => {
                    out.push(Token { tok: Tok::Sym(s), pos });
                    i += s.chars().count();
                }
                None => return Err(Error::syntax(pos, format!("unexpected character '{c}'"))),
            }
        }
    }
    Ok(out)
}

const KEYWORDS: &[&str] = &[
    "class", "interface", "extends", "implements", "static", "native", "goto", "if", "return",
    "output", "new", "null", "true", "false", "void",
];

pub(crate) struct Cursor<'a> {
    pub toks: &'a [Token],
    pub i: usize,
    pub end_pos: Pos,
}

impl<'a> Cursor<'a> {
    pub fn new(toks: &'a [Token]) -> Self {
        let end_pos = toks.last().map(|t| t.pos).unwrap_or(Pos { line: 1, col: 1 });
        Cursor { toks, i: 0, end_pos }
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|t| &t.tok)
    }

    pub fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.i + k).map(|t| &t.tok)
    }

    pub fn pos(&self) -> Pos {
        self.toks.get(self.i).map(|t| t.pos).unwrap_or(self.end_pos)
    }

    pub fn at_end(&self) -> bool {
        self.i >= self.toks.len()
    }

    pub fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(x)) if *x == s)
    }

    pub fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(x)) if x == w)
    }

    pub fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    pub fn eat_word(&mut self, w: &str) -> bool {
        if self.is_word(w) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    pub fn expect_sym(&mut self, s: &str) -> Result<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(Error::syntax(self.pos(), format!("expected '{s}'")))
        }
    }

    pub fn expect_word(&mut self, w: &str) -> Result<()> {
        if self.eat_word(w) {
            Ok(())
        } else {
            Err(Error::syntax(self.pos(), format!("expected '{w}'")))
        }
    }

    pub fn ident(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(w)) if !KEYWORDS.contains(&w.as_str()) || w == "void" => {
                let w = w.clone();
                self.i += 1;
                Ok(w)
            }
            other => Err(Error::syntax(self.pos(), format!("expected identifier, found {other:?}"))),
        }
    }

    /// `T` or `T[]`
    pub fn type_name(&mut self) -> Result<String> {
        let mut t = self.ident()?;
        if self.is_sym("[") && matches!(self.peek_at(1), Some(Tok::Sym("]"))) {
            self.i += 2;
            t.push_str("[]");
        }
        Ok(t)
    }
}

struct RawMethod {
    pos: Pos,
    is_static: bool,
    is_native: bool,
    ret: String,
    name: String,
    params: Vec<(String, String, Pos)>,
    body: Option<(usize, usize)>,
}

struct RawClass {
    pos: Pos,
    name: String,
    is_interface: bool,
    extends: Option<String>,
    implements: Vec<String>,
    fields: Vec<(String, String, Pos)>,
    methods: Vec<RawMethod>,
}

pub fn parse_program(text: &str) -> Result<Program> {
    let toks = tokenize(text)?;
    let mut cur = Cursor::new(&toks);
    let mut raw = Vec::new();
    while !cur.at_end() {
        raw.push(parse_class(&mut cur)?);
    }

    let mut h = TypeHierarchy::new();
    for c in &raw {
        let info = TypeInfo {
            kind: if c.is_interface {
                TypeKind::Interface
            } else {
                TypeKind::Class
            },
            extends: c.extends.clone(),
            implements: c.implements.clone(),
        };
        h.add(&c.name, info).map_err(|e| Error::syntax(c.pos, e.to_string()))?;
    }
    h.validate()?;

    let check_ty = |t: &str, pos: Pos, allow_void: bool| -> Result<Ty> {
        if t == "void" {
            return if allow_void {
                Ok(Ty::Void)
            } else {
                Err(Error::syntax(pos, "void is not a value type"))
            };
        }
        if !h.contains(t) {
            return Err(Error::syntax(pos, format!("unknown type {t}")));
        }
        Ok(Ty::named(t))
    };

    let mut classes = Vec::new();
    for c in &raw {
        let mut fields = Vec::new();
        let mut seen = HashSet::new();
        for (t, n, pos) in &c.fields {
            if !seen.insert(n.clone()) {
                return Err(Error::syntax(*pos, format!("duplicate field {n}")));
            }
            fields.push(Param {
                name: n.clone(),
                ty: check_ty(t, *pos, false)?,
            });
        }
        let mut methods = Vec::new();
        let mut arities = HashSet::new();
        for m in &c.methods {
            if !arities.insert((m.name.clone(), m.params.len(), m.is_static)) {
                return Err(Error::syntax(m.pos, format!("overloaded method {}.{} with equal arity", c.name, m.name)));
            }
            let mut params = Vec::new();
            for (t, n, pos) in &m.params {
                check_var_name(n, *pos)?;
                params.push(Param {
                    name: n.clone(),
                    ty: check_ty(t, *pos, false)?,
                });
            }
            let sig = MethodSig {
                recv_type: c.name.clone(),
                name: m.name.clone(),
                arg_types: m.params.iter().map(|p| p.0.clone()).collect(),
            };
            methods.push(Method {
                sig,
                is_static: m.is_static,
                params,
                ret: check_ty(&m.ret, m.pos, true)?,
                locals: vec![],
                body: None,
            });
        }
        classes.push(ClassDecl {
            name: c.name.clone(),
            is_interface: c.is_interface,
            extends: c.extends.clone(),
            implements: c.implements.clone(),
            fields,
            methods,
        });
    }
    let mut prog = Program::new(classes, h);

    // bodies, now that every class, field and signature is known
    for (ci, c) in raw.iter().enumerate() {
        for (mi, m) in c.methods.iter().enumerate() {
            if m.is_native && m.body.is_some() {
                return Err(Error::syntax(m.pos, "native method with a body"));
            }
            if let Some((a, b)) = m.body {
                let sub = &toks[a..b];
                let mut method = prog.classes[ci].methods[mi].clone();
                parse_body(&prog, &mut method, sub, m.pos)?;
                prog.classes[ci].methods[mi] = method;
            }
        }
    }
    prog.reindex();
    Ok(prog)
}

fn check_var_name(n: &str, pos: Pos) -> Result<()> {
    if n.contains('_') {
        return Err(Error::syntax(pos, format!("variable name {n} may not contain '_'")));
    }
    if n == crate::symlat::RET || n == THIS {
        return Err(Error::syntax(pos, format!("{n} is reserved")));
    }
    Ok(())
}

fn parse_class(cur: &mut Cursor) -> Result<RawClass> {
    let pos = cur.pos();
    let is_interface = if cur.eat_word("class") {
        false
    } else if cur.eat_word("interface") {
        true
    } else {
        return Err(Error::syntax(pos, "expected 'class' or 'interface'"));
    };
    let name = cur.ident()?;
    let mut extends = None;
    let mut implements = Vec::new();
    if cur.eat_word("extends") {
        if is_interface {
            implements.push(cur.ident()?);
            while cur.eat_sym(",") {
                implements.push(cur.ident()?);
            }
        } else {
            extends = Some(cur.ident()?);
        }
    }
    if !is_interface && cur.eat_word("implements") {
        implements.push(cur.ident()?);
        while cur.eat_sym(",") {
            implements.push(cur.ident()?);
        }
    }
    cur.expect_sym("{")?;
    let mut fields = Vec::new();
    let mut methods = Vec::new();
    while !cur.eat_sym("}") {
        if cur.at_end() {
            return Err(Error::syntax(cur.pos(), format!("unterminated class {name}")));
        }
        let mpos = cur.pos();
        let mut is_static = false;
        let mut is_native = false;
        loop {
            if cur.eat_word("static") {
                is_static = true;
            } else if cur.eat_word("native") {
                is_native = true;
            } else {
                break;
            }
        }
        let ty = cur.type_name()?;
        let mname = cur.ident()?;
        if cur.eat_sym(";") {
            if is_static || is_native {
                return Err(Error::syntax(mpos, "modifiers on a field"));
            }
            fields.push((ty, mname, mpos));
            continue;
        }
        cur.expect_sym("(")?;
        let mut params = Vec::new();
        if !cur.eat_sym(")") {
            loop {
                let ppos = cur.pos();
                let t = cur.type_name()?;
                let n = cur.ident()?;
                params.push((t, n, ppos));
                if cur.eat_sym(")") {
                    break;
                }
                cur.expect_sym(",")?;
            }
        }
        let body = if cur.eat_sym(";") {
            None
        } else {
            cur.expect_sym("{")?;
            let start = cur.i;
            let mut depth = 1;
            while depth > 0 {
                match cur.peek() {
                    None => return Err(Error::syntax(cur.pos(), format!("unterminated body of {mname}"))),
                    Some(Tok::Sym("{")) => depth += 1,
                    Some(Tok::Sym("}")) => depth -= 1,
                    _ => {}
                }
                cur.i += 1;
            }
            Some((start, cur.i - 1))
        };
        if is_interface && body.is_some() {
            return Err(Error::syntax(mpos, "interface methods have no body"));
        }
        methods.push(RawMethod {
            pos: mpos,
            is_static,
            is_native,
            ret: ty,
            name: mname,
            params,
            body,
        });
    }
    Ok(RawClass {
        pos,
        name,
        is_interface,
        extends,
        implements,
        fields,
        methods,
    })
}

struct BodyCx<'a> {
    prog: &'a Program,
    method: &'a Method,
}

impl BodyCx<'_> {
    fn ty(&self, v: &str, pos: Pos) -> Result<Ty> {
        self.method
            .var_ty(v)
            .ok_or_else(|| Error::syntax(pos, format!("unknown variable {v}")))
    }

    fn prim(&self, v: &str, pos: Pos) -> Result<()> {
        match self.ty(v, pos)? {
            Ty::Prim(_) => Ok(()),
            _ => Err(Error::syntax(pos, format!("{v} is not primitive"))),
        }
    }

    fn reference(&self, v: &str, pos: Pos) -> Result<String> {
        match self.ty(v, pos)? {
            Ty::Ref(c) => Ok(c),
            _ => Err(Error::syntax(pos, format!("{v} is not a reference"))),
        }
    }

    fn field(&self, base: &str, field: &str, pos: Pos) -> Result<Ty> {
        let class = self.reference(base, pos)?;
        self.prog
            .field_ty(&class, field)
            .ok_or_else(|| Error::syntax(pos, format!("unknown field {class}.{field}")))
    }
}

fn parse_body(prog: &Program, method: &mut Method, toks: &[Token], mpos: Pos) -> Result<()> {
    let mut cur = Cursor::new(toks);
    if toks.is_empty() {
        cur.end_pos = mpos;
    }
    let mut locals = Vec::new();
    // local declarations: `T x;` or `T[] x;`
    loop {
        let is_decl = match (cur.peek(), cur.peek_at(1), cur.peek_at(2)) {
            (Some(Tok::Ident(t)), Some(Tok::Ident(_)), Some(Tok::Sym(";"))) => !KEYWORDS.contains(&t.as_str()),
            (Some(Tok::Ident(t)), Some(Tok::Sym("[")), Some(Tok::Sym("]"))) => !KEYWORDS.contains(&t.as_str()),
            _ => false,
        };
        if !is_decl {
            break;
        }
        let pos = cur.pos();
        let t = cur.type_name()?;
        let n = cur.ident()?;
        cur.expect_sym(";")?;
        check_var_name(&n, pos)?;
        if !prog.hierarchy.contains(&t) {
            return Err(Error::syntax(pos, format!("unknown type {t}")));
        }
        if method.var_ty(&n).is_some() || locals.iter().any(|p: &Param| p.name == n) {
            return Err(Error::syntax(pos, format!("duplicate variable {n}")));
        }
        locals.push(Param { name: n, ty: Ty::named(&t) });
    }
    method.locals = locals;

    let mut body = Vec::new();
    let mut positions = Vec::new();
    {
        let cx = BodyCx { prog, method };
        while !cur.at_end() {
            let pos = cur.pos();
            let label = if matches!(cur.peek_at(1), Some(Tok::Sym(":"))) {
                let l = cur.ident()?;
                cur.i += 1;
                Some(l)
            } else {
                None
            };
            let kind = parse_stmt(&cx, &mut cur)?;
            cur.expect_sym(";")?;
            body.push(Statement { label, kind });
            positions.push(pos);
        }
    }
    if body.is_empty() {
        return Err(Error::syntax(mpos, format!("empty body in {}", method.sig)));
    }

    let mut labels: HashMap<&str, usize> = HashMap::new();
    for (i, s) in body.iter().enumerate() {
        if let Some(l) = &s.label {
            if labels.insert(l, i).is_some() {
                return Err(Error::syntax(positions[i], format!("duplicate label {l}")));
            }
        }
    }
    for (i, s) in body.iter().enumerate() {
        match &s.kind {
            StmtKind::Goto { target } | StmtKind::If { target, .. } => {
                if !labels.contains_key(target.as_str()) {
                    return Err(Error::syntax(positions[i], format!("unresolved label {target}")));
                }
            }
            StmtKind::Return { value } => {
                let ok = match (&method.ret, value) {
                    (Ty::Void, None) => true,
                    (Ty::Prim(_), Some(v)) => method.var_ty(v).is_some_and(|t| t.is_prim()),
                    (Ty::Ref(_), Some(v)) => method.var_ty(v).is_some_and(|t| t.is_ref()),
                    _ => false,
                };
                if !ok {
                    return Err(Error::syntax(positions[i], "return does not match the declared type"));
                }
            }
            _ => {}
        }
    }
    let last = body.last().unwrap();
    if !matches!(last.kind, StmtKind::Return { .. } | StmtKind::Goto { .. }) {
        return Err(Error::syntax(*positions.last().unwrap(), "body does not end in a return"));
    }
    method.body = Some(body);
    Ok(())
}

fn parse_stmt(cx: &BodyCx, cur: &mut Cursor) -> Result<StmtKind> {
    let pos = cur.pos();
    if cur.eat_word("goto") {
        return Ok(StmtKind::Goto { target: cur.ident()? });
    }
    if cur.eat_word("if") {
        cur.expect_sym("(")?;
        let cond = parse_pexpr(cx, cur)?;
        cur.expect_sym(")")?;
        cur.expect_word("goto")?;
        return Ok(StmtKind::If {
            cond,
            target: cur.ident()?,
        });
    }
    if cur.eat_word("output") {
        cur.expect_sym("(")?;
        let mut args = Vec::new();
        if !cur.eat_sym(")") {
            loop {
                let p = cur.pos();
                let v = cur.ident()?;
                cx.ty(&v, p)?;
                args.push(v);
                if cur.eat_sym(")") {
                    break;
                }
                cur.expect_sym(",")?;
            }
        }
        return Ok(StmtKind::Output { args });
    }
    if cur.eat_word("return") {
        if cur.is_sym(";") {
            return Ok(StmtKind::Return { value: None });
        }
        let p = cur.pos();
        let v = cur.ident()?;
        cx.ty(&v, p)?;
        return Ok(StmtKind::Return { value: Some(v) });
    }
    let first = cur.ident()?;
    if cur.is_sym(".") {
        // r.f = ..., r.m(...), C.m(...)
        cur.i += 1;
        let member = cur.ident()?;
        if cur.is_sym("(") {
            return parse_call(cx, cur, None, first, member, pos);
        }
        cur.expect_sym("=")?;
        let fty = cx.field(&first, &member, pos)?;
        if fty.is_ref() {
            let p = cur.pos();
            let src = cur.ident()?;
            cx.reference(&src, p)?;
            return Ok(StmtKind::StoreRef {
                base: first,
                field: member,
                src,
            });
        }
        let e = parse_pexpr(cx, cur)?;
        return Ok(StmtKind::StorePrim {
            base: first,
            field: member,
            e,
        });
    }
    cur.expect_sym("=")?;
    let dst = first;
    let dty = cx.ty(&dst, pos)?;
    if dst == THIS {
        return Err(Error::syntax(pos, "this cannot be assigned"));
    }
    if cur.eat_word("new") {
        let p = cur.pos();
        let class = cur.type_name()?;
        if cur.eat_sym("(") {
            cur.expect_sym(")")?;
        }
        match cx.prog.hierarchy.kind(&class) {
            Some(TypeKind::Class) | Some(TypeKind::Array) => {}
            _ => return Err(Error::syntax(p, format!("cannot instantiate {class}"))),
        }
        if !dty.is_ref() {
            return Err(Error::syntax(pos, format!("{dst} is not a reference")));
        }
        return Ok(StmtKind::New { dst, class });
    }
    if cur.eat_word("null") {
        if !dty.is_ref() {
            return Err(Error::syntax(pos, format!("{dst} is not a reference")));
        }
        return Ok(StmtKind::Null { dst });
    }
    if let (Some(Tok::Ident(a)), Some(Tok::Sym("."))) = (cur.peek(), cur.peek_at(1)) {
        let a = a.clone();
        let p = cur.pos();
        cur.i += 2;
        let member = cur.ident()?;
        if cur.is_sym("(") {
            return parse_call(cx, cur, Some(dst), a, member, p);
        }
        let fty = cx.field(&a, &member, p)?;
        return match (fty.is_ref(), dty.is_ref()) {
            (true, true) => Ok(StmtKind::LoadRef {
                dst,
                base: a,
                field: member,
            }),
            (false, false) => Ok(StmtKind::LoadPrim {
                dst,
                base: a,
                field: member,
            }),
            _ => Err(Error::syntax(p, format!("type mismatch loading {a}.{member} into {dst}"))),
        };
    }
    if dty.is_ref() {
        let p = cur.pos();
        let src = cur.ident()?;
        cx.reference(&src, p)?;
        return Ok(StmtKind::Copy { dst, src });
    }
    let e = parse_pexpr(cx, cur)?;
    Ok(StmtKind::Assign { dst, e })
}

fn parse_call(
    cx: &BodyCx,
    cur: &mut Cursor,
    dst: Option<String>,
    target: String,
    name: String,
    pos: Pos,
) -> Result<StmtKind> {
    cur.expect_sym("(")?;
    let mut args = Vec::new();
    if !cur.eat_sym(")") {
        loop {
            let p = cur.pos();
            let a = match cur.peek().cloned() {
                Some(Tok::Int(n)) => {
                    cur.i += 1;
                    Operand::Int(n)
                }
                Some(Tok::Sym("-")) if matches!(cur.peek_at(1), Some(Tok::Int(_))) => {
                    cur.i += 1;
                    let Some(Tok::Int(n)) = cur.peek().cloned() else { unreachable!() };
                    cur.i += 1;
                    Operand::Int(-n)
                }
                Some(Tok::Ident(w)) if w == "true" || w == "false" => {
                    cur.i += 1;
                    Operand::Bool(w == "true")
                }
                Some(Tok::Ident(w)) if w == "null" => {
                    cur.i += 1;
                    Operand::Null
                }
                _ => {
                    let v = cur.ident()?;
                    cx.ty(&v, p)?;
                    Operand::Var(v)
                }
            };
            args.push(a);
            if cur.eat_sym(")") {
                break;
            }
            cur.expect_sym(",")?;
        }
    }
    let recv = if cx.method.var_ty(&target).is_some() {
        cx.reference(&target, pos)?;
        Recv::Virtual(target)
    } else if cx.prog.hierarchy.kind(&target) == Some(TypeKind::Class) {
        Recv::Static(target)
    } else {
        return Err(Error::syntax(pos, format!("unknown receiver {target}")));
    };
    if let Some(d) = &dst {
        cx.ty(d, pos)?;
    }
    Ok(StmtKind::Call { dst, recv, name, args })
}

fn parse_pexpr(cx: &BodyCx, cur: &mut Cursor) -> Result<PExpr> {
    let mut lhs = p_and(cx, cur)?;
    while cur.eat_sym("||") {
        let rhs = p_and(cx, cur)?;
        lhs = PExpr::Binary(BinOp::Or, Box::new(lhs), Box::new(rhs));
    }
    Ok(lhs)
}

fn p_and(cx: &BodyCx, cur: &mut Cursor) -> Result<PExpr> {
    let mut lhs = p_cmp(cx, cur)?;
    while cur.eat_sym("&&") {
        let rhs = p_cmp(cx, cur)?;
        lhs = PExpr::Binary(BinOp::And, Box::new(lhs), Box::new(rhs));
    }
    Ok(lhs)
}

fn p_cmp(cx: &BodyCx, cur: &mut Cursor) -> Result<PExpr> {
    let lhs = p_add(cx, cur)?;
    let op = match cur.peek() {
        Some(Tok::Sym("<")) => BinOp::Lt,
        Some(Tok::Sym("<=")) => BinOp::Le,
        Some(Tok::Sym(">")) => BinOp::Gt,
        Some(Tok::Sym(">=")) => BinOp::Ge,
        Some(Tok::Sym("==")) => BinOp::Eq,
        Some(Tok::Sym("!=")) => BinOp::Ne,
        _ => return Ok(lhs),
    };
    cur.i += 1;
    let rhs = p_add(cx, cur)?;
    Ok(PExpr::Binary(op, Box::new(lhs), Box::new(rhs)))
}

fn p_add(cx: &BodyCx, cur: &mut Cursor) -> Result<PExpr> {
    let mut lhs = p_mul(cx, cur)?;
    loop {
        let op = if cur.is_sym("+") {
            BinOp::Add
        } else if cur.is_sym("-") {
            BinOp::Sub
        } else {
            return Ok(lhs);
        };
        cur.i += 1;
        let rhs = p_mul(cx, cur)?;
        lhs = PExpr::Binary(op, Box::new(lhs), Box::new(rhs));
    }
}

fn p_mul(cx: &BodyCx, cur: &mut Cursor) -> Result<PExpr> {
    let mut lhs = p_unary(cx, cur)?;
    while cur.eat_sym("*") {
        let rhs = p_unary(cx, cur)?;
        lhs = PExpr::Binary(BinOp::Mul, Box::new(lhs), Box::new(rhs));
    }
    Ok(lhs)
}

fn p_unary(cx: &BodyCx, cur: &mut Cursor) -> Result<PExpr> {
    if cur.is_sym("-") {
        if let Some(Tok::Int(n)) = cur.peek_at(1).cloned() {
            cur.i += 2;
            return Ok(PExpr::Int(-n));
        }
        cur.i += 1;
        return Ok(PExpr::Unary(UnOp::Neg, Box::new(p_unary(cx, cur)?)));
    }
    if cur.eat_sym("!") {
        return Ok(PExpr::Unary(UnOp::Not, Box::new(p_unary(cx, cur)?)));
    }
    let pos = cur.pos();
    match cur.peek().cloned() {
        Some(Tok::Int(n)) => {
            cur.i += 1;
            Ok(PExpr::Int(n))
        }
        Some(Tok::Sym("(")) => {
            cur.i += 1;
            let e = parse_pexpr(cx, cur)?;
            cur.expect_sym(")")?;
            Ok(e)
        }
        Some(Tok::Ident(w)) if w == "true" || w == "false" => {
            cur.i += 1;
            Ok(PExpr::Bool(w == "true"))
        }
        Some(Tok::Ident(_)) => {
            let v = cur.ident()?;
            cx.prim(&v, pos)?;
            Ok(PExpr::Var(v))
        }
        other => Err(Error::syntax(pos, format!("expected expression, found {other:?}"))),
    }
}

/// Every variable a body mentions, for diagnostics and tests.
pub fn used_vars(m: &Method) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for s in m.body() {
        let mut names = Vec::new();
        collect_names(&s.kind, &mut names);
        out.extend(names);
    }
    out
}

fn collect_names(k: &StmtKind, out: &mut Vec<String>) {
    match k {
        StmtKind::Assign { dst, e } => {
            out.push(dst.clone());
            out.extend(e.vars());
        }
        StmtKind::LoadPrim { dst, base, .. } | StmtKind::LoadRef { dst, base, .. } => {
            out.push(dst.clone());
            out.push(base.clone());
        }
        StmtKind::StorePrim { base, e, .. } => {
            out.push(base.clone());
            out.extend(e.vars());
        }
        StmtKind::StoreRef { base, src, .. } => {
            out.push(base.clone());
            out.push(src.clone());
        }
        StmtKind::Copy { dst, src } => {
            out.push(dst.clone());
            out.push(src.clone());
        }
        StmtKind::New { dst, .. } | StmtKind::Null { dst } => out.push(dst.clone()),
        StmtKind::Goto { .. } => {}
        StmtKind::If { cond, .. } => out.extend(cond.vars()),
        StmtKind::Call { dst, recv, args, .. } => {
            out.extend(dst.iter().cloned());
            if let Recv::Virtual(v) = recv {
                out.push(v.clone());
            }
            out.extend(args.iter().filter_map(|a| a.var().map(str::to_string)));
        }
        StmtKind::Output { args } => out.extend(args.iter().cloned()),
        StmtKind::Return { value } => out.extend(value.iter().cloned()),
    }
}
