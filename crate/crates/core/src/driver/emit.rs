//! Text form of summaries. The output parses back as a `.secstubs` entry.

use std::fmt::Write;

use crate::infer::Summary;
use crate::ir::THIS;
use crate::symlat::Sort;

fn header(s: &Summary) -> String {
    let is_static = s.args.first().is_none_or(|a| a.name != THIS);
    let params: Vec<String> = s
        .args
        .iter()
        .filter(|a| a.name != THIS)
        .map(|a| format!("{} {}", a.ty.name(), a.name))
        .collect();
    format!(
        "{}{} {}:{}({})",
        if is_static { "static " } else { "" },
        s.ret.name(),
        s.sig.recv_type,
        s.sig.name,
        params.join(", ")
    )
}

/// Identity assignments are left out unless `verbose`.
pub fn emit_summary(s: &Summary, verbose: bool) -> String {
    let mut out = String::new();
    writeln!(out, "{} {{", header(s)).unwrap();
    writeln!(out, "  // --- Guard ---").unwrap();
    writeln!(out, "  guard := {};", s.guard.render_pred()).unwrap();
    let mut levels = Vec::new();
    let mut rels = Vec::new();
    for v in s.footprint() {
        let e = s.effect.get(&v).cloned().unwrap_or_else(|| s.identity(&v));
        if !verbose && e.equivalent(&s.identity(&v)) {
            continue;
        }
        let e = e.normalized();
        if v.starts_with("level_") || v.starts_with("objlevel_") {
            levels.push(format!("  {v} := {};", e.render(Sort::Level)));
        } else {
            rels.push(format!("  {v} := {};", e.render(Sort::Bool)));
        }
    }
    writeln!(out, "  // --- Updates to security levels ---").unwrap();
    for l in levels {
        writeln!(out, "{l}").unwrap();
    }
    writeln!(out, "  // --- Updates to aliasing specification ---").unwrap();
    for l in rels {
        writeln!(out, "{l}").unwrap();
    }
    out.push_str("}\n");
    out
}

/// Whether two summaries agree up to canonical equivalence.
pub fn same_text_meaning(a: &Summary, b: &Summary) -> bool {
    a.sig == b.sig && a.same_as(b)
}

#[cfg(test)]
mod tests {
    use super::super::stubs::parse_stubs;
    use super::*;
    use crate::heap::HeapModel;
    use crate::interproc::bottom_summary;
    use crate::ir::{MethodSig, Ty};

    #[test]
    fn bottom_summary_has_empty_sections() {
        let s = bottom_summary(MethodSig::new("T", "m", &[]), vec![], Ty::Void, HeapModel::LPrec);
        let text = emit_summary(&s, false);
        assert_eq!(
            text,
            "static void T:m() {\n  // --- Guard ---\n  guard := tt;\n  // --- Updates to security levels ---\n  // --- Updates to aliasing specification ---\n}\n"
        );
    }

    #[test]
    fn round_trip_through_stub_syntax() {
        let src = "void RandomAccessFile:write(byte[] r1, int i0, int i1) {
  // --- Guard ---
  guard := (level_i0 ⊔ level_i1 ⊔ level_r1 ⊔ level_this ⊔ objlevel_r1 ⊔ objlevel_this ⊔ pc = ⊥);
  // --- Updates to security levels ---
  objlevel_r1 := ⊥;
  objlevel_this := ⊥;
  // --- Updates to aliasing specification ---
  falias_this_this := falias_this_r1 ∨ falias_this_this;
}
";
        let model = HeapModel::HPrec;
        let es = parse_stubs(src, model).unwrap();
        let text = emit_summary(&es[0].summary, false);
        assert_eq!(text, src);
        let again = parse_stubs(&text, model).unwrap();
        assert!(same_text_meaning(&again[0].summary, &es[0].summary));
        let verbose = emit_summary(&es[0].summary, true);
        assert!(verbose.contains("falias_this_r1 := falias_this_r1;"));
        assert!(parse_stubs(&verbose, model).unwrap()[0].summary.same_as(&es[0].summary));
    }
}
