use std::collections::HashMap;

use super::{Method, Param, Statement, StmtKind};

/// Give every assigned reference parameter a fresh local copy made at entry,
/// and relabel statements `L0, L1, ...`.
pub fn normalize_method(m: &Method) -> Method {
    let mut out = m.clone();
    let Some(body) = &m.body else { return out };
    let mut body = body.clone();
    let mut prefix = Vec::new();
    for p in &m.params {
        if !p.ty.is_ref() || !body.iter().any(|s| s.kind.def() == Some(p.name.as_str())) {
            continue;
        }
        let mut fresh = format!("{}$", p.name);
        while out.var_ty(&fresh).is_some() {
            fresh.push('$');
        }
        for s in body.iter_mut() {
            s.kind.rename_var(&p.name, &fresh);
        }
        out.locals.push(Param {
            name: fresh.clone(),
            ty: p.ty.clone(),
        });
        prefix.push(Statement {
            label: None,
            kind: StmtKind::Copy {
                dst: fresh,
                src: p.name.clone(),
            },
        });
    }
    prefix.extend(body);
    out.body = Some(relabel(prefix));
    out
}

fn relabel(mut body: Vec<Statement>) -> Vec<Statement> {
    let old: HashMap<String, usize> = body
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.label.clone().map(|l| (l, i)))
        .collect();
    for (i, s) in body.iter_mut().enumerate() {
        s.label = Some(format!("L{i}"));
        match &mut s.kind {
            StmtKind::Goto { target } | StmtKind::If { target, .. } => {
                *target = format!("L{}", old[target.as_str()]);
            }
            _ => {}
        }
    }
    body
}

#[cfg(test)]
mod tests {
    use super::super::{parse_program, MethodSig};
    use super::*;

    fn method(src: &str, sig: MethodSig) -> Method {
        parse_program(src).unwrap().method(&sig).unwrap().clone()
    }

    const SRC: &str = "class A { A next; }
class C {
    A m(A r1, A s) {
        L: r1 = s;
        if (1 > 0) goto L;
        r1 = r1.next;
        return r1;
    }
    void n(A r1) { output(r1); return; }
}";

    #[test]
    fn assigned_reference_parameter_gets_a_copy() {
        let m = method(SRC, MethodSig::new("C", "m", &["A", "A"]));
        let n = normalize_method(&m);
        let body = n.body();
        assert_eq!(
            body[0].kind,
            StmtKind::Copy {
                dst: "r1$".into(),
                src: "r1".into()
            }
        );
        assert!(body[1..].iter().all(|s| s.kind.def() != Some("r1")));
        assert_eq!(body[2].kind, StmtKind::If { cond: match &body[2].kind { StmtKind::If { cond, .. } => cond.clone(), _ => unreachable!() }, target: "L1".into() });
        assert!(n.locals.iter().any(|l| l.name == "r1$"));
    }

    #[test]
    fn untouched_parameters_only_relabel() {
        let m = method(SRC, MethodSig::new("C", "n", &["A"]));
        let n = normalize_method(&m);
        assert_eq!(n.body().len(), m.body().len());
        assert_eq!(n.locals, m.locals);
        for (a, b) in n.body().iter().zip(m.body()) {
            assert_eq!(a.kind, b.kind);
        }
    }

    #[test]
    fn idempotent() {
        for sig in [MethodSig::new("C", "m", &["A", "A"]), MethodSig::new("C", "n", &["A"])] {
            let once = normalize_method(&method(SRC, sig));
            assert_eq!(normalize_method(&once), once);
        }
    }
}
