//! Store-independent expressions and their concrete syntax.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::bdd::{Bdd, Store};
use super::{sorted_order, Sort, SymVar};
use crate::error::{Error, Pos, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Const(bool),
    Var(String),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Implies(Box<Expr>, Box<Expr>),
    Iff(Box<Expr>, Box<Expr>),
    Ite(Box<Expr>, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn not(e: Expr) -> Expr {
        Expr::Not(Box::new(e))
    }

    pub fn or(es: Vec<Expr>) -> Expr {
        match es.len() {
            0 => Expr::Const(false),
            1 => es.into_iter().next().unwrap(),
            _ => Expr::Or(es),
        }
    }

    pub fn and(es: Vec<Expr>) -> Expr {
        match es.len() {
            0 => Expr::Const(true),
            1 => es.into_iter().next().unwrap(),
            _ => Expr::And(es),
        }
    }

    pub fn is_const(&self, b: bool) -> bool {
        *self == Expr::Const(b)
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Not(a) => a.collect_vars(out),
            Expr::And(es) | Expr::Or(es) => es.iter().for_each(|e| e.collect_vars(out)),
            Expr::Implies(a, b) | Expr::Iff(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Expr::Ite(a, b, c) => {
                a.collect_vars(out);
                b.collect_vars(out);
                c.collect_vars(out);
            }
        }
    }

    /// Structural simultaneous substitution.
    pub fn substitute(&self, m: &BTreeMap<String, Expr>) -> Expr {
        self.map_vars(&mut |v| m.get(v).cloned().unwrap_or_else(|| Expr::var(v)))
    }

    pub fn rename(&self, m: &BTreeMap<String, String>) -> Expr {
        self.map_vars(&mut |v| Expr::var(m.get(v).map(String::as_str).unwrap_or(v)))
    }

    fn map_vars(&self, f: &mut dyn FnMut(&str) -> Expr) -> Expr {
        match self {
            Expr::Const(b) => Expr::Const(*b),
            Expr::Var(v) => f(v),
            Expr::Not(a) => Expr::not(a.map_vars(f)),
            Expr::And(es) => Expr::And(es.iter().map(|e| e.map_vars(f)).collect()),
            Expr::Or(es) => Expr::Or(es.iter().map(|e| e.map_vars(f)).collect()),
            Expr::Implies(a, b) => Expr::Implies(Box::new(a.map_vars(f)), Box::new(b.map_vars(f))),
            Expr::Iff(a, b) => Expr::Iff(Box::new(a.map_vars(f)), Box::new(b.map_vars(f))),
            Expr::Ite(a, b, c) => Expr::Ite(
                Box::new(a.map_vars(f)),
                Box::new(b.map_vars(f)),
                Box::new(c.map_vars(f)),
            ),
        }
    }

    pub fn eval(&self, val: &dyn Fn(&str) -> bool) -> bool {
        match self {
            Expr::Const(b) => *b,
            Expr::Var(v) => val(v),
            Expr::Not(a) => !a.eval(val),
            Expr::And(es) => es.iter().all(|e| e.eval(val)),
            Expr::Or(es) => es.iter().any(|e| e.eval(val)),
            Expr::Implies(a, b) => !a.eval(val) || b.eval(val),
            Expr::Iff(a, b) => a.eval(val) == b.eval(val),
            Expr::Ite(a, b, c) => {
                if a.eval(val) {
                    b.eval(val)
                } else {
                    c.eval(val)
                }
            }
        }
    }

    pub fn to_bdd(&self, s: &mut Store) -> Bdd {
        self.to_bdd_with(s, &mut |s, v| s.var(v))
    }

    /// Build in `s`, resolving each variable through `resolve`.
    pub fn to_bdd_with(&self, s: &mut Store, resolve: &mut dyn FnMut(&mut Store, &str) -> Bdd) -> Bdd {
        match self {
            Expr::Const(b) => Bdd::constant(*b),
            Expr::Var(v) => resolve(s, v),
            Expr::Not(a) => {
                let a = a.to_bdd_with(s, resolve);
                s.not(a)
            }
            Expr::And(es) => {
                let mut acc = Bdd::TRUE;
                for e in es {
                    let b = e.to_bdd_with(s, resolve);
                    acc = s.and(acc, b);
                }
                acc
            }
            Expr::Or(es) => {
                let mut acc = Bdd::FALSE;
                for e in es {
                    let b = e.to_bdd_with(s, resolve);
                    acc = s.or(acc, b);
                }
                acc
            }
            Expr::Implies(a, b) => {
                let a = a.to_bdd_with(s, resolve);
                let b = b.to_bdd_with(s, resolve);
                s.implies(a, b)
            }
            Expr::Iff(a, b) => {
                let a = a.to_bdd_with(s, resolve);
                let b = b.to_bdd_with(s, resolve);
                s.iff(a, b)
            }
            Expr::Ite(a, b, c) => {
                let a = a.to_bdd_with(s, resolve);
                let b = b.to_bdd_with(s, resolve);
                let c = c.to_bdd_with(s, resolve);
                s.ite(a, b, c)
            }
        }
    }

    /// Sum-of-products form of `f`. Literals follow the store's variable order.
    pub fn from_bdd(s: &mut Store, f: Bdd) -> Expr {
        if f.is_const() {
            return Expr::Const(f.is_true());
        }
        let cubes = s.isop(f);
        let mut terms: Vec<Expr> = cubes
            .into_iter()
            .map(|cube| {
                Expr::and(
                    cube.into_iter()
                        .map(|(v, pos)| {
                            let x = Expr::var(s.name(v));
                            if pos {
                                x
                            } else {
                                Expr::not(x)
                            }
                        })
                        .collect(),
                )
            })
            .collect();
        terms.sort_by(term_order);
        Expr::or(terms)
    }

    /// Canonical sum-of-products form, independent of any caller's store.
    pub fn normalized(&self) -> Expr {
        let vars = self.vars();
        let mut s = Store::with_order(sorted_order(&vars));
        let b = self.to_bdd(&mut s);
        Expr::from_bdd(&mut s, b)
    }

    pub fn equivalent(&self, other: &Expr) -> bool {
        let mut vars = self.vars();
        vars.extend(other.vars());
        let mut s = Store::with_order(sorted_order(&vars));
        self.to_bdd(&mut s) == other.to_bdd(&mut s)
    }

    pub fn entails(&self, other: &Expr) -> bool {
        let mut vars = self.vars();
        vars.extend(other.vars());
        let mut s = Store::with_order(sorted_order(&vars));
        let a = self.to_bdd(&mut s);
        let b = other.to_bdd(&mut s);
        s.entails(a, b)
    }

    pub fn parse(text: &str) -> Result<Expr> {
        Expr::parse_at(text, Pos { line: 1, col: 1 })
    }

    pub fn parse_at(text: &str, pos: Pos) -> Result<Expr> {
        let toks = lex(text, pos)?;
        let mut p = Parser { toks: &toks, i: 0 };
        let e = p.pred()?;
        if p.i != toks.len() {
            return Err(Error::syntax(toks[p.i].pos, format!("unexpected {:?}", toks[p.i].tok)));
        }
        Ok(e)
    }

    /// Render as a right-hand side of the given sort.
    pub fn render(&self, sort: Sort) -> String {
        let mut out = String::new();
        write_expr(&mut out, self, sort, false);
        out
    }

    /// Render a predicate as a conjunction of clauses, each written with
    /// lattice connectives: `(a ⊔ b = ⊥)`, `(a ⊑ b ⊔ c)`.
    pub fn render_pred(&self) -> String {
        let vars = self.vars();
        let mut s = Store::with_order(sorted_order(&vars));
        let g = self.to_bdd(&mut s);
        if g.is_const() {
            return if g.is_true() { "tt" } else { "ff" }.to_string();
        }
        let ng = s.not(g);
        let mut lows = Vec::new();
        let mut clauses = Vec::new();
        for cube in s.isop(ng) {
            let pos: Vec<String> = cube.iter().filter(|l| l.1).map(|l| s.name(l.0).to_string()).collect();
            let neg: Vec<String> = cube.iter().filter(|l| !l.1).map(|l| s.name(l.0).to_string()).collect();
            if neg.is_empty() && pos.len() == 1 {
                lows.push(pos[0].clone());
                continue;
            }
            let lhs = if pos.is_empty() { "⊤".to_string() } else { pos.join(" ⊓ ") };
            let rhs = if neg.is_empty() { "⊥".to_string() } else { neg.join(" ⊔ ") };
            if neg.is_empty() {
                clauses.push(format!("({lhs} = ⊥)"));
            } else {
                clauses.push(format!("({lhs} ⊑ {rhs})"));
            }
        }
        let mut parts = Vec::new();
        if !lows.is_empty() {
            parts.push(format!("({} = ⊥)", lows.join(" ⊔ ")));
        }
        parts.extend(clauses);
        parts.join(" ∧ ")
    }
}

fn term_order(a: &Expr, b: &Expr) -> std::cmp::Ordering {
    fn key(e: &Expr) -> (usize, Vec<(String, bool)>) {
        let lits = match e {
            Expr::And(es) => es.iter().map(lit).collect(),
            _ => vec![lit(e)],
        };
        (lits.len(), lits)
    }
    fn lit(e: &Expr) -> (String, bool) {
        match e {
            Expr::Var(v) => (v.clone(), true),
            Expr::Not(x) => match &**x {
                Expr::Var(v) => (v.clone(), false),
                _ => (String::new(), false),
            },
            _ => (String::new(), true),
        }
    }
    let (la, ka) = key(a);
    let (lb, kb) = key(b);
    // single literals in name order first, longer cubes after
    (la > 1, ka).cmp(&(lb > 1, kb))
}

fn write_expr(out: &mut String, e: &Expr, sort: Sort, nested: bool) {
    let lvl = sort == Sort::Level;
    match e {
        Expr::Const(b) => out.push_str(match (lvl, b) {
            (true, true) => "⊤",
            (true, false) => "⊥",
            (false, true) => "tt",
            (false, false) => "ff",
        }),
        Expr::Var(v) => out.push_str(v),
        Expr::Not(a) => {
            out.push('¬');
            write_expr(out, a, sort, true);
        }
        Expr::And(es) | Expr::Or(es) => {
            let sep = match (e, lvl) {
                (Expr::And(_), true) => " ⊓ ",
                (Expr::And(_), false) => " ∧ ",
                (_, true) => " ⊔ ",
                (_, false) => " ∨ ",
            };
            if nested {
                out.push('(');
            }
            for (i, x) in es.iter().enumerate() {
                if i > 0 {
                    out.push_str(sep);
                }
                write_expr(out, x, sort, true);
            }
            if nested {
                out.push(')');
            }
        }
        Expr::Implies(a, b) | Expr::Iff(a, b) => {
            let op = if matches!(e, Expr::Implies(..)) { " ⊑ " } else { " = " };
            out.push('(');
            write_expr(out, a, sort, true);
            out.push_str(op);
            write_expr(out, b, sort, true);
            out.push(')');
        }
        Expr::Ite(a, b, c) => {
            out.push_str("(if ");
            write_expr(out, a, Sort::Bool, false);
            out.push_str(" then ");
            write_expr(out, b, sort, false);
            out.push_str(" else ");
            write_expr(out, c, sort, false);
            out.push(')');
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sort = match self.vars().iter().next() {
            Some(v) => SymVar::classify(v).sort,
            None => Sort::Bool,
        };
        f.write_str(&self.render(sort))
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Or,
    And,
    Not,
    Eq,
    Leq,
    Geq,
    Imp,
    LParen,
    RParen,
    True,
    False,
    If,
    Then,
    Else,
}

struct Spanned {
    tok: Tok,
    pos: Pos,
}

fn lex(text: &str, start: Pos) -> Result<Vec<Spanned>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut pos = start;
    let advance = |pos: &mut Pos, c: char| {
        if c == '\n' {
            pos.line += 1;
            pos.col = 1;
        } else {
            pos.col += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let here = pos;
        if c.is_whitespace() {
            advance(&mut pos, c);
            i += 1;
            continue;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let (tok, len) = match two.as_str() {
            "||" => (Tok::Or, 2),
            "&&" => (Tok::And, 2),
            "=>" => (Tok::Imp, 2),
            "<=" => (Tok::Leq, 2),
            ">=" => (Tok::Geq, 2),
            "==" => (Tok::Eq, 2),
            _ => match c {
                '⊔' | '∨' | '|' => (Tok::Or, 1),
                '⊓' | '∧' | '&' => (Tok::And, 1),
                '¬' | '!' => (Tok::Not, 1),
                '=' => (Tok::Eq, 1),
                '⊑' => (Tok::Leq, 1),
                '⊒' => (Tok::Geq, 1),
                '⇒' => (Tok::Imp, 1),
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                '⊥' => (Tok::False, 1),
                '⊤' => (Tok::True, 1),
                c if is_ident_start(c) => {
                    let mut j = i;
                    while j < chars.len() && is_ident_char(chars[j]) {
                        j += 1;
                    }
                    let word: String = chars[i..j].iter().collect();
                    let tok = match word.as_str() {
                        "tt" | "true" | "top" => Tok::True,
                        "ff" | "false" | "bot" => Tok::False,
                        "if" => Tok::If,
                        "then" => Tok::Then,
                        "else" => Tok::Else,
                        _ => Tok::Ident(word),
                    };
                    (tok, j - i)
                }
                _ => return Err(Error::syntax(here, format!("unexpected character '{c}'"))),
            },
        };
        for k in 0..len {
            advance(&mut pos, chars[i + k]);
        }
        i += len;
        out.push(Spanned { tok, pos: here });
    }
    Ok(out)
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '#' || c == '$'
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '#' | '$' | '^' | '\'')
}

struct Parser<'a> {
    toks: &'a [Spanned],
    i: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|t| &t.tok)
    }

    fn pos(&self) -> Pos {
        self.toks
            .get(self.i)
            .or(self.toks.last())
            .map(|t| t.pos)
            .unwrap_or_default()
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(Error::syntax(self.pos(), format!("expected {t:?}")))
        }
    }

    fn is_or(&self) -> bool {
        matches!(self.peek(), Some(Tok::Or)) || matches!(self.peek(), Some(Tok::Ident(w)) if w == "V")
    }

    fn pred(&mut self) -> Result<Expr> {
        let lhs = self.cmp()?;
        if self.eat(&Tok::Imp) {
            let rhs = self.pred()?;
            return Ok(Expr::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    // `a ⊔ b = ⊥` groups as `(a ⊔ b) = ⊥`; comparisons inside a conjunction
    // need parentheses.
    fn cmp(&mut self) -> Result<Expr> {
        let lhs = self.por()?;
        let op = self.peek().cloned();
        match op {
            Some(Tok::Eq) | Some(Tok::Leq) | Some(Tok::Geq) => {
                self.i += 1;
                let rhs = self.por()?;
                Ok(match op.unwrap() {
                    Tok::Eq => Expr::Iff(Box::new(lhs), Box::new(rhs)),
                    Tok::Leq => Expr::Implies(Box::new(lhs), Box::new(rhs)),
                    _ => Expr::Implies(Box::new(rhs), Box::new(lhs)),
                })
            }
            _ => Ok(lhs),
        }
    }

    fn por(&mut self) -> Result<Expr> {
        let mut es = vec![self.pand()?];
        while self.is_or() {
            self.i += 1;
            es.push(self.pand()?);
        }
        Ok(Expr::or(es))
    }

    fn pand(&mut self) -> Result<Expr> {
        let mut es = vec![self.pnot()?];
        while self.eat(&Tok::And) {
            es.push(self.pnot()?);
        }
        Ok(Expr::and(es))
    }

    fn pnot(&mut self) -> Result<Expr> {
        if self.eat(&Tok::Not) {
            return Ok(Expr::not(self.pnot()?));
        }
        self.latom()
    }

    fn latom(&mut self) -> Result<Expr> {
        let pos = self.pos();
        match self.peek().cloned() {
            Some(Tok::True) => {
                self.i += 1;
                Ok(Expr::Const(true))
            }
            Some(Tok::False) => {
                self.i += 1;
                Ok(Expr::Const(false))
            }
            Some(Tok::Ident(w)) => {
                self.i += 1;
                Ok(Expr::Var(w))
            }
            Some(Tok::LParen) => {
                self.i += 1;
                let e = self.pred()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::If) => {
                self.i += 1;
                let c = self.pred()?;
                self.expect(Tok::Then)?;
                let t = self.pred()?;
                self.expect(Tok::Else)?;
                let e = self.pred()?;
                Ok(Expr::Ite(Box::new(c), Box::new(t), Box::new(e)))
            }
            other => Err(Error::syntax(pos, format!("unexpected {other:?}"))),
        }
    }
}
