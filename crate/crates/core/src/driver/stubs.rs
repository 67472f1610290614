//! `.secstubs` files: hand-written contracts for methods that are not
//! analysed.
//!
//! ```text
//! // comment
//! void RandomAccessFile:writeBytes(byte[] b, int off, int len) { sink; }
//! int FileInputStream:readByte() { source p0; }
//! static int Lib:id(int x) { guard := tt; level_ret := pc ⊔ level_x; }
//! ```
//!
//! Footprint variables left unassigned keep their identity.

use crate::error::{Error, Pos, Result};
use crate::heap::HeapModel;
use crate::infer::Summary;
use crate::interproc::{pessimistic_summary, sink_summary, source_summary};
use crate::ir::{MethodSig, Param, Ty, THIS};
use crate::symlat::{self, Expr};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StubKind {
    Summary,
    Sink,
    Source(String),
    Pessimistic,
}

#[derive(Clone, Debug)]
pub struct StubEntry {
    pub sig: MethodSig,
    pub kind: StubKind,
    pub summary: Summary,
}

struct Scanner {
    chars: Vec<char>,
    i: usize,
    line: usize,
    col: usize,
}

impl Scanner {
    fn new(text: &str) -> Self {
        Scanner {
            chars: text.chars().collect(),
            i: 0,
            line: 1,
            col: 1,
        }
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.i).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.i += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('/') if self.chars.get(self.i + 1) == Some(&'/') => {
                    while !matches!(self.peek(), None | Some('\n')) {
                        self.bump();
                    }
                }
                _ => return,
            }
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.peek().is_none()
    }

    fn expect(&mut self, c: char) -> Result<()> {
        self.skip_ws();
        let pos = self.pos();
        match self.bump() {
            Some(x) if x == c => Ok(()),
            Some(x) => Err(Error::syntax(pos, format!("expected '{c}', found '{x}'"))),
            None => Err(Error::syntax(pos, format!("expected '{c}', found end of input"))),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    /// Identifier, possibly dotted, with an optional `[]` suffix.
    fn ident(&mut self) -> Result<(String, Pos)> {
        self.skip_ws();
        let pos = self.pos();
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || c == '_' || c == '.' || c == '$' {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        if s.is_empty() {
            return Err(Error::syntax(pos, "expected an identifier"));
        }
        if self.peek() == Some('[') && self.chars.get(self.i + 1) == Some(&']') {
            self.bump();
            self.bump();
            s.push_str("[]");
        }
        Ok((s, pos))
    }

    /// Raw text up to the next `;`, not consuming it.
    fn until_semi(&mut self) -> Result<(String, Pos)> {
        self.skip_ws();
        let pos = self.pos();
        let mut s = String::new();
        loop {
            match self.peek() {
                Some(';') => return Ok((s, pos)),
                Some('}') | None => return Err(Error::syntax(self.pos(), "expected ';'")),
                Some(c) => {
                    s.push(c);
                    self.bump();
                }
            }
        }
    }
}

fn ty_of(name: &str) -> Ty {
    if name == "void" {
        Ty::Void
    } else {
        Ty::named(name)
    }
}

fn parse_entry(sc: &mut Scanner, model: HeapModel) -> Result<StubEntry> {
    let (mut first, _) = sc.ident()?;
    let is_static = first == "static";
    if is_static {
        first = sc.ident()?.0;
    }
    let ret = ty_of(&first);
    let (class, cpos) = sc.ident()?;
    sc.expect(':')?;
    let (name, _) = sc.ident()?;
    if class.is_empty() {
        return Err(Error::syntax(cpos, "missing class name"));
    }
    sc.expect('(')?;
    let mut params = Vec::new();
    if !sc.eat(')') {
        loop {
            let (t, tpos) = sc.ident()?;
            if t == "void" {
                return Err(Error::syntax(tpos, "void parameter"));
            }
            let (n, npos) = sc.ident()?;
            if n == THIS || params.iter().any(|p: &Param| p.name == n) {
                return Err(Error::syntax(npos, format!("bad parameter name {n}")));
            }
            params.push(Param { name: n, ty: ty_of(&t) });
            if sc.eat(')') {
                break;
            }
            sc.expect(',')?;
        }
    }
    let arg_types: Vec<&str> = params.iter().map(|p| p.ty.name()).collect();
    let sig = MethodSig::new(&class, &name, &arg_types);
    let mut args = Vec::new();
    if !is_static {
        args.push(Param {
            name: THIS.to_string(),
            ty: Ty::Ref(class.clone()),
        });
    }
    args.extend(params);

    sc.expect('{')?;
    let mut kind = None;
    let mut guard = None;
    let mut effects: Vec<(String, Expr, Pos)> = Vec::new();
    while !sc.eat('}') {
        let (word, wpos) = sc.ident()?;
        let marker = match word.as_str() {
            "sink" => Some(StubKind::Sink),
            "pessimistic" => Some(StubKind::Pessimistic),
            "source" => {
                let (p, ppos) = sc.ident()?;
                if !symlat::is_source(&p) {
                    return Err(Error::syntax(ppos, format!("source symbol must look like p0, got {p}")));
                }
                Some(StubKind::Source(p))
            }
            _ => None,
        };
        if let Some(k) = marker {
            if kind.is_some() || guard.is_some() || !effects.is_empty() {
                return Err(Error::syntax(wpos, "a marker must be the only statement of a stub"));
            }
            kind = Some(k);
        } else {
            if kind.is_some() {
                return Err(Error::syntax(wpos, "a marker must be the only statement of a stub"));
            }
            sc.skip_ws();
            sc.expect(':')?;
            sc.expect('=')?;
            let (text, tpos) = sc.until_semi()?;
            let e = Expr::parse_at(&text, tpos)?;
            if word == "guard" {
                if guard.is_some() {
                    return Err(Error::syntax(wpos, "guard given twice"));
                }
                guard = Some(e);
            } else {
                if effects.iter().any(|(v, _, _)| *v == word) {
                    return Err(Error::syntax(wpos, format!("{word} assigned twice")));
                }
                effects.push((word, e, wpos));
            }
        }
        sc.expect(';')?;
    }
    let (kind, summary) = match kind {
        Some(StubKind::Sink) => (StubKind::Sink, sink_summary(sig.clone(), args, ret, model)),
        Some(StubKind::Pessimistic) => (StubKind::Pessimistic, pessimistic_summary(sig.clone(), args, ret, model)),
        Some(StubKind::Source(p)) => {
            let s = source_summary(sig.clone(), args, ret, model, &p);
            (StubKind::Source(p), s)
        }
        _ => {
            let mut s = Summary::trivial(sig.clone(), args, ret, model);
            let foot = s.footprint();
            for (v, e, pos) in effects {
                if !foot.contains(&v) {
                    return Err(Error::syntax(pos, format!("{v} is not a footprint variable of {sig}")));
                }
                s.effect.insert(v, e);
            }
            s.guard = guard.unwrap_or(Expr::Const(true));
            s.check_hygiene()?;
            (StubKind::Summary, s)
        }
    };
    Ok(StubEntry { sig, kind, summary })
}

pub fn parse_stubs(text: &str, model: HeapModel) -> Result<Vec<StubEntry>> {
    let mut sc = Scanner::new(text);
    let mut out: Vec<StubEntry> = Vec::new();
    while !sc.at_end() {
        let pos = sc.pos();
        let e = parse_entry(&mut sc, model)?;
        if out.iter().any(|o| o.sig == e.sig) {
            return Err(Error::syntax(pos, format!("duplicate stub for {}", e.sig)));
        }
        out.push(e);
    }
    Ok(out)
}
