//! Canonical text form of programs. `parse_program(print_program(p))`
//! reproduces `p`.

use std::fmt::Write;

use super::{ClassDecl, Method, Operand, PExpr, Program, Recv, StmtKind, Ty, UnOp};

pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for (i, c) in p.classes.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        print_class(&mut out, c);
    }
    out
}

fn print_class(out: &mut String, c: &ClassDecl) {
    if c.is_interface {
        write!(out, "interface {}", c.name).unwrap();
        if !c.implements.is_empty() {
            write!(out, " extends {}", c.implements.join(", ")).unwrap();
        }
    } else {
        write!(out, "class {}", c.name).unwrap();
        if let Some(e) = &c.extends {
            write!(out, " extends {e}").unwrap();
        }
        if !c.implements.is_empty() {
            write!(out, " implements {}", c.implements.join(", ")).unwrap();
        }
    }
    out.push_str(" {\n");
    for f in &c.fields {
        writeln!(out, "    {} {};", f.ty, f.name).unwrap();
    }
    for m in &c.methods {
        print_method(out, m, !c.is_interface);
    }
    out.push_str("}\n");
}

/// Bodiless class members are printed `native`; interface members are not.
pub fn print_method(out: &mut String, m: &Method, in_class: bool) {
    out.push_str("    ");
    if m.is_static {
        out.push_str("static ");
    }
    if m.body.is_none() && in_class {
        out.push_str("native ");
    }
    let params: Vec<String> = m.params.iter().map(|p| format!("{} {}", p.ty, p.name)).collect();
    let head = format!("{} {}({})", ty_name(&m.ret), m.sig.name, params.join(", "));
    match &m.body {
        None => {
            writeln!(out, "{head};").unwrap();
        }
        Some(body) => {
            writeln!(out, "{head} {{").unwrap();
            for l in &m.locals {
                writeln!(out, "        {} {};", l.ty, l.name).unwrap();
            }
            for s in body {
                out.push_str("        ");
                if let Some(l) = &s.label {
                    write!(out, "{l}: ").unwrap();
                }
                out.push_str(&stmt_text(&s.kind));
                out.push_str(";\n");
            }
            out.push_str("    }\n");
        }
    }
}

fn ty_name(t: &Ty) -> &str {
    t.name()
}

pub fn stmt_text(k: &StmtKind) -> String {
    match k {
        StmtKind::Assign { dst, e } => format!("{dst} = {}", expr_text(e, false)),
        StmtKind::LoadPrim { dst, base, field } | StmtKind::LoadRef { dst, base, field } => {
            format!("{dst} = {base}.{field}")
        }
        StmtKind::StorePrim { base, field, e } => format!("{base}.{field} = {}", expr_text(e, false)),
        StmtKind::StoreRef { base, field, src } => format!("{base}.{field} = {src}"),
        StmtKind::Copy { dst, src } => format!("{dst} = {src}"),
        StmtKind::New { dst, class } => format!("{dst} = new {class}"),
        StmtKind::Null { dst } => format!("{dst} = null"),
        StmtKind::Goto { target } => format!("goto {target}"),
        StmtKind::If { cond, target } => format!("if ({}) goto {target}", expr_text(cond, false)),
        StmtKind::Call { dst, recv, name, args } => {
            let r = match recv {
                Recv::Virtual(v) | Recv::Static(v) => v,
            };
            let a: Vec<String> = args.iter().map(operand_text).collect();
            let call = format!("{r}.{name}({})", a.join(", "));
            match dst {
                Some(d) => format!("{d} = {call}"),
                None => call,
            }
        }
        StmtKind::Output { args } => format!("output({})", args.join(", ")),
        StmtKind::Return { value: Some(v) } => format!("return {v}"),
        StmtKind::Return { value: None } => "return".to_string(),
    }
}

fn operand_text(o: &Operand) -> String {
    match o {
        Operand::Var(v) => v.clone(),
        Operand::Int(n) => n.to_string(),
        Operand::Bool(b) => b.to_string(),
        Operand::Null => "null".to_string(),
    }
}

/// Nested binary expressions are parenthesized so precedence never matters.
pub fn expr_text(e: &PExpr, nested: bool) -> String {
    match e {
        PExpr::Int(n) => n.to_string(),
        PExpr::Bool(b) => b.to_string(),
        PExpr::Var(v) => v.clone(),
        PExpr::Unary(UnOp::Neg, a) => format!("-{}", expr_text(a, true)),
        PExpr::Unary(UnOp::Not, a) => format!("!{}", expr_text(a, true)),
        PExpr::Binary(op, a, b) => {
            let s = format!("{} {} {}", expr_text(a, true), op.symbol(), expr_text(b, true));
            if nested {
                format!("({s})")
            } else {
                s
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_program;
    use super::*;

    const SRC: &str = "class A {
    int v;
    A next;
}

interface I {
    void m(int x);
}

class C extends A implements I {
    void m(int x) {
        int y;
        A a;
        y = (x + 1) * -2;
        L0: if ((y < 3) && !(x == 0)) goto L0;
        a = this.next;
        a.v = y;
        this.m(-1);
        y = C.s(y, null, true);
        output(y, a);
        return;
    }
    static int s(int p, A q, boolean b) {
        return p;
    }
    native void n();
}
";

    #[test]
    fn round_trip_is_identity_on_canonical_text() {
        let p = parse_program(SRC).unwrap();
        let text = print_program(&p);
        assert_eq!(text, SRC);
        let q = parse_program(&text).unwrap();
        assert_eq!(print_program(&q), text);
    }
}
