//! Graphviz rendering of an SCFG for debugging and golden files.

use std::fmt::Write;

use super::Scfg;
use crate::ir::print::stmt_text;
use crate::symlat::{Bdd, Expr, Sort, Store};

fn text(s: &mut Store, b: Bdd) -> String {
    Expr::from_bdd(s, b).render(Sort::Bool)
}

fn esc(t: &str) -> String {
    t.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn dump_scfg(g: &mut Scfg) -> String {
    let mut out = String::new();
    writeln!(out, "digraph \"{}\" {{", esc(&g.method.sig.to_string())).unwrap();
    writeln!(out, "  node [shape=box];").unwrap();
    let x0 = text(&mut g.store, g.x0);
    writeln!(out, "  init [shape=plaintext, label=\"X0: {}\"];", esc(&x0)).unwrap();
    writeln!(out, "  init -> l0;").unwrap();
    let exit = g.exit();
    for loc in 0..=exit {
        let stmt = if loc == exit {
            "exit".to_string()
        } else {
            stmt_text(&g.method.body()[loc].kind)
        };
        let mut label = format!("L{loc}: {stmt}");
        if let Some(inv) = g.invariants.get(&loc).copied() {
            write!(label, "\\ninv: {}", esc(&text(&mut g.store, inv))).unwrap();
        }
        writeln!(out, "  l{loc} [label=\"{}\"];", label.replace('"', "\\\"")).unwrap();
    }
    for loc in 0..=exit {
        let ts = g.transitions[loc].clone();
        for t in ts {
            let mut label = text(&mut g.store, t.guard);
            for (k, v) in &t.update {
                let name = g.store.name(*k).to_string();
                let rhs = text(&mut g.store, *v);
                write!(label, "\\n{name} := {rhs}").unwrap();
            }
            writeln!(out, "  l{loc} -> l{} [label=\"{}\"];", t.target, label.replace('"', "\\\"")).unwrap();
        }
    }
    out.push_str("}\n");
    out
}
