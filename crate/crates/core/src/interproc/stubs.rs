//! Default summaries for methods that are not analysed.

use crate::heap::HeapModel;
use crate::infer::Summary;
use crate::ir::{MethodSig, Param, Ty, THIS};
use crate::symlat::{self, Expr, PC, RET};

/// Guard `tt`, low return value unrelated to anything, no mutation. The
/// starting point of iteration inside recursive components.
pub fn bottom_summary(sig: MethodSig, args: Vec<Param>, ret: Ty, model: HeapModel) -> Summary {
    Summary::trivial(sig, args, ret, model)
}

/// Callable only in a low context with low arguments and low argument
/// objects. A returned reference may alias any argument.
pub fn pessimistic_summary(sig: MethodSig, args: Vec<Param>, ret: Ty, model: HeapModel) -> Summary {
    let mut s = Summary::trivial(sig, args, ret, model);
    let mut highs = vec![Expr::var(PC)];
    for a in &s.args {
        highs.push(Expr::var(symlat::level(&a.name)));
    }
    for r in s.arg_refs() {
        highs.push(Expr::var(symlat::objlevel(&r)));
    }
    s.guard = Expr::not(Expr::or(highs));
    if s.ret.is_ref() {
        for r in s.arg_refs() {
            let nn = Expr::var(model.rel_name(&r, &r));
            s.effect.insert(model.rel_name(RET, &r), nn.clone());
            s.effect.insert(model.rel_name(&r, RET), nn);
        }
        s.effect.insert(model.rel_name(RET, RET), Expr::Const(true));
    }
    s
}

/// A sink: the pessimistic shape.
pub fn sink_summary(sig: MethodSig, args: Vec<Param>, ret: Ty, model: HeapModel) -> Summary {
    pessimistic_summary(sig, args, ret, model)
}

/// A source of unknown level `source`. The symbol flows into the objects of
/// the reference formals other than `this` (and weakly into whatever may
/// reach them); the return level depends on every argument and, when there
/// is no such formal, on the symbol itself.
pub fn source_summary(sig: MethodSig, args: Vec<Param>, ret: Ty, model: HeapModel, source: &str) -> Summary {
    let mut s = Summary::trivial(sig, args, ret, model);
    let refs = s.arg_refs();
    let targets: Vec<String> = refs.iter().filter(|r| *r != THIS).cloned().collect();
    let inflow = Expr::or(vec![Expr::var(source), Expr::var(PC)]);
    for t in &refs {
        let own = Expr::var(symlat::objlevel(t));
        let mut reach: Vec<Expr> = targets
            .iter()
            .filter(|f| *f != t)
            .map(|f| Expr::var(model.rel_name(t, f)))
            .collect();
        if targets.contains(t) {
            reach.clear();
            reach.push(Expr::Const(true));
        }
        if reach.is_empty() {
            continue;
        }
        let v = Expr::or(vec![own, Expr::and(vec![Expr::or(reach), inflow.clone()])]);
        s.effect.insert(symlat::objlevel(t), v.normalized());
    }
    if s.ret != Ty::Void {
        let mut parts = vec![Expr::var(PC)];
        for a in &s.args {
            parts.push(Expr::var(symlat::level(&a.name)));
        }
        for r in &refs {
            parts.push(Expr::var(symlat::objlevel(r)));
        }
        if targets.is_empty() {
            parts.push(Expr::var(source));
        }
        s.effect.insert(symlat::level(RET), Expr::or(parts));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(name: &str, ty: &str) -> Param {
        Param {
            name: name.into(),
            ty: Ty::named(ty),
        }
    }

    #[test]
    fn pessimistic_no_arg_static_void() {
        let s = pessimistic_summary(MethodSig::new("T", "m", &[]), vec![], Ty::Void, HeapModel::LPrec);
        assert!(s.guard.equivalent(&Expr::parse("¬pc").unwrap()));
        assert!(s.effect.is_empty());
    }

    #[test]
    fn bottom_returns_low_and_unrelated() {
        let s = bottom_summary(
            MethodSig::new("T", "m", &["A"]),
            vec![p("this", "T"), p("a", "A")],
            Ty::named("A"),
            HeapModel::HPrec,
        );
        assert!(s.guard.is_const(true));
        assert!(s.effect["level_ret"].is_const(false));
        assert!(s.effect["falias_ret_a"].is_const(false));
        assert!(s.effect["falias_ret_ret"].is_const(false));
        assert!(s.is_identity("falias_a_this"));
    }

    #[test]
    fn read_source_shape() {
        let s = source_summary(
            MethodSig::new("FileInputStream", "read", &["byte[]"]),
            vec![p("this", "FileInputStream"), p("r1", "byte[]")],
            Ty::named("int"),
            HeapModel::HPrec,
            "p0",
        );
        s.check_hygiene().unwrap();
        let ret = Expr::parse("pc ⊔ level_r1 ⊔ level_this ⊔ objlevel_r1 ⊔ objlevel_this").unwrap();
        assert!(s.effect["level_ret"].equivalent(&ret));
        let o = Expr::parse("p0 ⊔ pc ⊔ objlevel_r1").unwrap();
        assert!(s.effect["objlevel_r1"].equivalent(&o));
        let t = Expr::parse("objlevel_this ⊔ (falias_this_r1 ∧ (p0 ⊔ pc))").unwrap();
        assert!(s.effect["objlevel_this"].equivalent(&t));
    }
}
