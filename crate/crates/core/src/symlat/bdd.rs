//! Reduced ordered decision diagrams.
//!
//! Every predicate and level expression of one analysis context lives in a
//! single [`Store`]. Variables are ordered by registration; callers register
//! the variables they know up front in the global order (lexicographic, inputs
//! last) and anything discovered later is appended below them. Equal functions
//! always get the same [`Bdd`] handle, so semantic equality is `==`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

/// Handle to a node of a [`Store`]. Only meaningful for the store that made it.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bdd(u32);

impl Bdd {
    pub const FALSE: Bdd = Bdd(0);
    pub const TRUE: Bdd = Bdd(1);

    pub fn constant(b: bool) -> Bdd {
        if b {
            Bdd::TRUE
        } else {
            Bdd::FALSE
        }
    }

    pub fn is_const(self) -> bool {
        self.0 < 2
    }

    pub fn is_true(self) -> bool {
        self == Bdd::TRUE
    }

    pub fn is_false(self) -> bool {
        self == Bdd::FALSE
    }
}

/// Index of a variable in a [`Store`]; doubles as its position in the order.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

/// A conjunction of literals.
pub type Cube = Vec<(VarId, bool)>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Node {
    var: u32,
    lo: Bdd,
    hi: Bdd,
}

const TERMINAL_VAR: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Op {
    And,
    Or,
    Xor,
}

#[derive(Clone, Debug)]
pub struct Store {
    nodes: Vec<Node>,
    unique: HashMap<Node, Bdd>,
    names: Vec<String>,
    by_name: HashMap<String, VarId>,
    apply_cache: HashMap<(Op, Bdd, Bdd), Bdd>,
    not_cache: HashMap<Bdd, Bdd>,
    ite_cache: HashMap<(Bdd, Bdd, Bdd), Bdd>,
}

impl Default for Store {
    fn default() -> Self {
        Self::new()
    }
}

impl Store {
    pub fn new() -> Self {
        let term = Node {
            var: TERMINAL_VAR,
            lo: Bdd::FALSE,
            hi: Bdd::FALSE,
        };
        Store {
            nodes: vec![term, term],
            unique: HashMap::new(),
            names: Vec::new(),
            by_name: HashMap::new(),
            apply_cache: HashMap::new(),
            not_cache: HashMap::new(),
            ite_cache: HashMap::new(),
        }
    }

    /// A store whose first variables are `names`, in the given order.
    pub fn with_order<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut s = Store::new();
        for n in names {
            s.var_id(n.as_ref());
        }
        s
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    /// Drop memo tables; node handles stay valid.
    pub fn clear_caches(&mut self) {
        self.apply_cache.clear();
        self.not_cache.clear();
        self.ite_cache.clear();
    }

    pub fn var_id(&mut self, name: &str) -> VarId {
        if let Some(v) = self.by_name.get(name) {
            return *v;
        }
        let id = VarId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.by_name.insert(name.to_string(), id);
        id
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn name(&self, v: VarId) -> &str {
        &self.names[v.0 as usize]
    }

    /// The projection function of the named variable.
    pub fn var(&mut self, name: &str) -> Bdd {
        let v = self.var_id(name);
        self.var_of(v)
    }

    pub fn var_of(&mut self, v: VarId) -> Bdd {
        self.mk(v.0, Bdd::FALSE, Bdd::TRUE)
    }

    pub fn nvar(&mut self, name: &str) -> Bdd {
        let v = self.var_id(name);
        self.mk(v.0, Bdd::TRUE, Bdd::FALSE)
    }

    fn mk(&mut self, var: u32, lo: Bdd, hi: Bdd) -> Bdd {
        if lo == hi {
            return lo;
        }
        let n = Node { var, lo, hi };
        if let Some(b) = self.unique.get(&n) {
            return *b;
        }
        let b = Bdd(self.nodes.len() as u32);
        self.nodes.push(n);
        self.unique.insert(n, b);
        b
    }

    fn node(&self, b: Bdd) -> Node {
        self.nodes[b.0 as usize]
    }

    fn top(&self, b: Bdd) -> u32 {
        self.nodes[b.0 as usize].var
    }

    /// Top variable of a non-constant function.
    pub fn top_var(&self, b: Bdd) -> Option<VarId> {
        if b.is_const() {
            None
        } else {
            Some(VarId(self.top(b)))
        }
    }

    fn cofactors(&self, b: Bdd, var: u32) -> (Bdd, Bdd) {
        let n = self.node(b);
        if n.var == var {
            (n.lo, n.hi)
        } else {
            (b, b)
        }
    }

    pub fn not(&mut self, a: Bdd) -> Bdd {
        if a.is_const() {
            return Bdd::constant(a.is_false());
        }
        if let Some(r) = self.not_cache.get(&a) {
            return *r;
        }
        let n = self.node(a);
        let lo = self.not(n.lo);
        let hi = self.not(n.hi);
        let r = self.mk(n.var, lo, hi);
        self.not_cache.insert(a, r);
        r
    }

    fn apply(&mut self, op: Op, a: Bdd, b: Bdd) -> Bdd {
        match op {
            Op::And => {
                if a.is_false() || b.is_false() {
                    return Bdd::FALSE;
                }
                if a.is_true() {
                    return b;
                }
                if b.is_true() || a == b {
                    return a;
                }
            }
            Op::Or => {
                if a.is_true() || b.is_true() {
                    return Bdd::TRUE;
                }
                if a.is_false() {
                    return b;
                }
                if b.is_false() || a == b {
                    return a;
                }
            }
            Op::Xor => {
                if a == b {
                    return Bdd::FALSE;
                }
                if a.is_false() {
                    return b;
                }
                if b.is_false() {
                    return a;
                }
                if a.is_true() {
                    return self.not(b);
                }
                if b.is_true() {
                    return self.not(a);
                }
            }
        }
        let key = if a <= b { (op, a, b) } else { (op, b, a) };
        if let Some(r) = self.apply_cache.get(&key) {
            return *r;
        }
        let var = self.top(a).min(self.top(b));
        let (a0, a1) = self.cofactors(a, var);
        let (b0, b1) = self.cofactors(b, var);
        let lo = self.apply(op, a0, b0);
        let hi = self.apply(op, a1, b1);
        let r = self.mk(var, lo, hi);
        self.apply_cache.insert(key, r);
        r
    }

    pub fn and(&mut self, a: Bdd, b: Bdd) -> Bdd {
        self.apply(Op::And, a, b)
    }

    pub fn or(&mut self, a: Bdd, b: Bdd) -> Bdd {
        self.apply(Op::Or, a, b)
    }

    pub fn xor(&mut self, a: Bdd, b: Bdd) -> Bdd {
        self.apply(Op::Xor, a, b)
    }

    pub fn implies(&mut self, a: Bdd, b: Bdd) -> Bdd {
        let na = self.not(a);
        self.or(na, b)
    }

    pub fn iff(&mut self, a: Bdd, b: Bdd) -> Bdd {
        let x = self.xor(a, b);
        self.not(x)
    }

    pub fn and_all<I: IntoIterator<Item = Bdd>>(&mut self, it: I) -> Bdd {
        let mut acc = Bdd::TRUE;
        for b in it {
            acc = self.and(acc, b);
            if acc.is_false() {
                break;
            }
        }
        acc
    }

    pub fn or_all<I: IntoIterator<Item = Bdd>>(&mut self, it: I) -> Bdd {
        let mut acc = Bdd::FALSE;
        for b in it {
            acc = self.or(acc, b);
            if acc.is_true() {
                break;
            }
        }
        acc
    }

    pub fn ite(&mut self, i: Bdd, t: Bdd, e: Bdd) -> Bdd {
        if i.is_true() {
            return t;
        }
        if i.is_false() {
            return e;
        }
        if t == e {
            return t;
        }
        if t.is_true() && e.is_false() {
            return i;
        }
        if t.is_false() && e.is_true() {
            return self.not(i);
        }
        if let Some(r) = self.ite_cache.get(&(i, t, e)) {
            return *r;
        }
        let var = self.top(i).min(self.top(t)).min(self.top(e));
        let (i0, i1) = self.cofactors(i, var);
        let (t0, t1) = self.cofactors(t, var);
        let (e0, e1) = self.cofactors(e, var);
        let lo = self.ite(i0, t0, e0);
        let hi = self.ite(i1, t1, e1);
        let r = self.mk(var, lo, hi);
        self.ite_cache.insert((i, t, e), r);
        r
    }

    /// `p ⇒ q` is valid.
    pub fn entails(&mut self, p: Bdd, q: Bdd) -> bool {
        let nq = self.not(q);
        self.and(p, nq).is_false()
    }

    /// Shannon cofactor with `v` fixed to `val`.
    pub fn restrict_var(&mut self, f: Bdd, v: VarId, val: bool) -> Bdd {
        let mut m = BTreeMap::new();
        m.insert(v, val);
        self.restrict_vals(f, &m)
    }

    /// Cofactor against several constant assignments at once.
    pub fn restrict_vals(&mut self, f: Bdd, vals: &BTreeMap<VarId, bool>) -> Bdd {
        let mut memo = HashMap::new();
        self.restrict_rec(f, vals, &mut memo)
    }

    fn restrict_rec(
        &mut self,
        f: Bdd,
        vals: &BTreeMap<VarId, bool>,
        memo: &mut HashMap<Bdd, Bdd>,
    ) -> Bdd {
        if f.is_const() {
            return f;
        }
        if let Some(r) = memo.get(&f) {
            return *r;
        }
        let n = self.node(f);
        let r = match vals.get(&VarId(n.var)) {
            Some(true) => self.restrict_rec(n.hi, vals, memo),
            Some(false) => self.restrict_rec(n.lo, vals, memo),
            None => {
                let lo = self.restrict_rec(n.lo, vals, memo);
                let hi = self.restrict_rec(n.hi, vals, memo);
                self.mk(n.var, lo, hi)
            }
        };
        memo.insert(f, r);
        r
    }

    /// `∃ vars. f`
    pub fn exists(&mut self, f: Bdd, vars: &BTreeSet<VarId>) -> Bdd {
        if vars.is_empty() {
            return f;
        }
        let mut memo = HashMap::new();
        self.exists_rec(f, vars, &mut memo)
    }

    fn exists_rec(
        &mut self,
        f: Bdd,
        vars: &BTreeSet<VarId>,
        memo: &mut HashMap<Bdd, Bdd>,
    ) -> Bdd {
        if f.is_const() {
            return f;
        }
        if let Some(r) = memo.get(&f) {
            return *r;
        }
        let n = self.node(f);
        let lo = self.exists_rec(n.lo, vars, memo);
        let r = if vars.contains(&VarId(n.var)) {
            if lo.is_true() {
                Bdd::TRUE
            } else {
                let hi = self.exists_rec(n.hi, vars, memo);
                self.or(lo, hi)
            }
        } else {
            let hi = self.exists_rec(n.hi, vars, memo);
            self.mk(n.var, lo, hi)
        };
        memo.insert(f, r);
        r
    }

    /// `∀ vars. f`
    pub fn forall(&mut self, f: Bdd, vars: &BTreeSet<VarId>) -> Bdd {
        let nf = self.not(f);
        let e = self.exists(nf, vars);
        self.not(e)
    }

    /// Simultaneous substitution of functions for variables.
    pub fn compose(&mut self, f: Bdd, map: &BTreeMap<VarId, Bdd>) -> Bdd {
        if map.is_empty() {
            return f;
        }
        let mut memo = HashMap::new();
        self.compose_rec(f, map, &mut memo)
    }

    fn compose_rec(
        &mut self,
        f: Bdd,
        map: &BTreeMap<VarId, Bdd>,
        memo: &mut HashMap<Bdd, Bdd>,
    ) -> Bdd {
        if f.is_const() {
            return f;
        }
        if let Some(r) = memo.get(&f) {
            return *r;
        }
        let n = self.node(f);
        let lo = self.compose_rec(n.lo, map, memo);
        let hi = self.compose_rec(n.hi, map, memo);
        let sel = match map.get(&VarId(n.var)) {
            Some(g) => *g,
            None => self.mk(n.var, Bdd::FALSE, Bdd::TRUE),
        };
        let r = self.ite(sel, hi, lo);
        memo.insert(f, r);
        r
    }

    /// Coudert–Madre restrict: a function agreeing with `f` wherever `care`
    /// holds, usually smaller. Never mentions variables outside `f`.
    pub fn simplify(&mut self, f: Bdd, care: Bdd) -> Bdd {
        if care.is_false() {
            return Bdd::FALSE;
        }
        let mut memo = HashMap::new();
        self.simplify_rec(f, care, &mut memo)
    }

    fn simplify_rec(&mut self, f: Bdd, c: Bdd, memo: &mut HashMap<(Bdd, Bdd), Bdd>) -> Bdd {
        if c.is_true() || f.is_const() {
            return f;
        }
        if c == f {
            return Bdd::TRUE;
        }
        let nf = self.not(f);
        if c == nf {
            return Bdd::FALSE;
        }
        if let Some(r) = memo.get(&(f, c)) {
            return *r;
        }
        let fv = self.top(f);
        let cv = self.top(c);
        let r = if cv < fv {
            let cn = self.node(c);
            let merged = self.or(cn.lo, cn.hi);
            self.simplify_rec(f, merged, memo)
        } else {
            let (f0, f1) = self.cofactors(f, fv);
            let (c0, c1) = self.cofactors(c, fv);
            if c0.is_false() {
                self.simplify_rec(f1, c1, memo)
            } else if c1.is_false() {
                self.simplify_rec(f0, c0, memo)
            } else {
                let lo = self.simplify_rec(f0, c0, memo);
                let hi = self.simplify_rec(f1, c1, memo);
                self.mk(fv, lo, hi)
            }
        };
        memo.insert((f, c), r);
        r
    }

    pub fn support(&self, f: Bdd) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        let mut seen = BTreeSet::new();
        let mut stack = vec![f];
        while let Some(b) = stack.pop() {
            if b.is_const() || !seen.insert(b) {
                continue;
            }
            let n = self.node(b);
            out.insert(VarId(n.var));
            stack.push(n.lo);
            stack.push(n.hi);
        }
        out
    }

    pub fn support_names(&self, f: Bdd) -> BTreeSet<String> {
        self.support(f)
            .into_iter()
            .map(|v| self.name(v).to_string())
            .collect()
    }

    /// Evaluate under a total valuation given as a lookup.
    pub fn eval(&self, f: Bdd, val: impl Fn(VarId) -> bool) -> bool {
        let mut b = f;
        while !b.is_const() {
            let n = self.node(b);
            b = if val(VarId(n.var)) { n.hi } else { n.lo };
        }
        b.is_true()
    }

    /// Number of nodes reachable from `f`.
    pub fn size(&self, f: Bdd) -> usize {
        let mut seen = BTreeSet::new();
        let mut stack = vec![f];
        while let Some(b) = stack.pop() {
            if b.is_const() || !seen.insert(b) {
                continue;
            }
            let n = self.node(b);
            stack.push(n.lo);
            stack.push(n.hi);
        }
        seen.len()
    }

    /// One satisfying partial assignment, choosing branches with `pick`
    /// wherever both lead somewhere satisfiable.
    pub fn pick_sat(&self, f: Bdd, mut pick: impl FnMut() -> bool) -> Option<BTreeMap<VarId, bool>> {
        if f.is_false() {
            return None;
        }
        let mut out = BTreeMap::new();
        let mut b = f;
        while !b.is_const() {
            let n = self.node(b);
            let go_hi = if n.lo.is_false() {
                true
            } else if n.hi.is_false() {
                false
            } else {
                pick()
            };
            out.insert(VarId(n.var), go_hi);
            b = if go_hi { n.hi } else { n.lo };
        }
        Some(out)
    }

    /// Irredundant sum-of-products cover (Minato–Morreale).
    pub fn isop(&mut self, f: Bdd) -> Vec<Cube> {
        let mut memo = HashMap::new();
        let (cubes, _) = self.isop_rec(f, f, &mut memo);
        cubes
    }

    fn isop_rec(
        &mut self,
        l: Bdd,
        u: Bdd,
        memo: &mut HashMap<(Bdd, Bdd), (Vec<Cube>, Bdd)>,
    ) -> (Vec<Cube>, Bdd) {
        if l.is_false() {
            return (Vec::new(), Bdd::FALSE);
        }
        if u.is_true() {
            return (vec![Vec::new()], Bdd::TRUE);
        }
        if let Some(r) = memo.get(&(l, u)) {
            return r.clone();
        }
        let var = self.top(l).min(self.top(u));
        let (l0, l1) = self.cofactors(l, var);
        let (u0, u1) = self.cofactors(u, var);
        let nu1 = self.not(u1);
        let nu0 = self.not(u0);
        let la = self.and(l0, nu1);
        let (c0, r0) = self.isop_rec(la, u0, memo);
        let lb = self.and(l1, nu0);
        let (c1, r1) = self.isop_rec(lb, u1, memo);
        let nr0 = self.not(r0);
        let nr1 = self.not(r1);
        let a = self.and(l0, nr0);
        let b = self.and(l1, nr1);
        let lstar = self.or(a, b);
        let ustar = self.and(u0, u1);
        let (cs, rs) = self.isop_rec(lstar, ustar, memo);
        let x = self.mk(var, Bdd::FALSE, Bdd::TRUE);
        let nx = self.mk(var, Bdd::TRUE, Bdd::FALSE);
        let p0 = self.and(nx, r0);
        let p1 = self.and(x, r1);
        let p = self.or(p0, p1);
        let r = self.or(p, rs);
        let mut cubes = Vec::with_capacity(c0.len() + c1.len() + cs.len());
        for mut c in c0 {
            c.insert(0, (VarId(var), false));
            cubes.push(c);
        }
        for mut c in c1 {
            c.insert(0, (VarId(var), true));
            cubes.push(c);
        }
        cubes.extend(cs);
        memo.insert((l, u), (cubes.clone(), r));
        (cubes, r)
    }

    /// Rebuild `f` of another store inside this one, matching variables by name.
    pub fn import(&mut self, other: &Store, f: Bdd) -> Bdd {
        let mut memo = HashMap::new();
        self.import_rec(other, f, &mut memo)
    }

    fn import_rec(&mut self, other: &Store, f: Bdd, memo: &mut HashMap<Bdd, Bdd>) -> Bdd {
        if f.is_const() {
            return f;
        }
        if let Some(r) = memo.get(&f) {
            return *r;
        }
        let n = other.node(f);
        let lo = self.import_rec(other, n.lo, memo);
        let hi = self.import_rec(other, n.hi, memo);
        let v = self.var(other.name(VarId(n.var)));
        let r = self.ite(v, hi, lo);
        memo.insert(f, r);
        r
    }
}
