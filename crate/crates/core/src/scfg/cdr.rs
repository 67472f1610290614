//! Postdominators and control-dependence regions of a method body.
//!
//! Nodes are statement indices; `body.len()` is the exit.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::ir::{Method, StmtKind};

pub struct Cfg {
    pub n: usize,
    pub succs: Vec<Vec<usize>>,
    pub preds: Vec<Vec<usize>>,
}

impl Cfg {
    pub fn of(m: &Method) -> Cfg {
        let labels: HashMap<String, usize> = m.label_index();
        let n = m.body().len();
        let mut succs = vec![Vec::new(); n + 1];
        for (i, s) in succs.iter_mut().enumerate().take(n) {
            *s = m.succs(i, &labels);
        }
        let mut preds = vec![Vec::new(); n + 1];
        for (i, ss) in succs.iter().enumerate() {
            for &j in ss {
                preds[j].push(i);
            }
        }
        Cfg { n, succs, preds }
    }

    pub fn exit(&self) -> usize {
        self.n
    }

    fn reachable_from_entry(&self) -> Vec<bool> {
        let mut seen = vec![false; self.n + 1];
        let mut stack = vec![0];
        while let Some(u) = stack.pop() {
            if std::mem::replace(&mut seen[u], true) {
                continue;
            }
            stack.extend(self.succs[u].iter().copied());
        }
        seen
    }

    /// Dominator sets over nodes reachable from the entry.
    fn dominators(&self, live: &[bool]) -> Vec<BTreeSet<usize>> {
        let all: BTreeSet<usize> = (0..=self.n).filter(|&i| live[i]).collect();
        let mut dom: Vec<BTreeSet<usize>> = (0..=self.n).map(|_| all.clone()).collect();
        dom[0] = [0].into();
        let mut changed = true;
        while changed {
            changed = false;
            for u in 1..=self.n {
                if !live[u] {
                    continue;
                }
                let mut acc: Option<BTreeSet<usize>> = None;
                for &p in self.preds[u].iter().filter(|&&p| live[p]) {
                    acc = Some(match acc {
                        None => dom[p].clone(),
                        Some(a) => a.intersection(&dom[p]).copied().collect(),
                    });
                }
                let mut d = acc.unwrap_or_default();
                d.insert(u);
                if d != dom[u] {
                    dom[u] = d;
                    changed = true;
                }
            }
        }
        dom
    }

    /// Reject control flow with a loop entered other than through its header.
    pub fn check_reducible(&self) -> Result<()> {
        let live = self.reachable_from_entry();
        let dom = self.dominators(&live);
        let mut state = vec![0u8; self.n + 1];
        let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
        state[0] = 1;
        while let Some(&mut (u, ref mut k)) = stack.last_mut() {
            if *k < self.succs[u].len() {
                let v = self.succs[u][*k];
                *k += 1;
                match state[v] {
                    0 => {
                        state[v] = 1;
                        stack.push((v, 0));
                    }
                    1 if !dom[u].contains(&v) => {
                        return Err(Error::semantic(format!("irreducible control flow: edge {u} -> {v}")));
                    }
                    _ => {}
                }
            } else {
                state[u] = 2;
                stack.pop();
            }
        }
        Ok(())
    }

    /// Postdominator sets; nodes that cannot reach the exit keep the full set.
    pub fn postdominators(&self) -> Vec<BTreeSet<usize>> {
        let all: BTreeSet<usize> = (0..=self.n).collect();
        let mut pdom: Vec<BTreeSet<usize>> = (0..=self.n).map(|_| all.clone()).collect();
        pdom[self.n] = [self.n].into();
        let mut changed = true;
        while changed {
            changed = false;
            for u in (0..self.n).rev() {
                let mut acc: Option<BTreeSet<usize>> = None;
                for &s in &self.succs[u] {
                    acc = Some(match acc {
                        None => pdom[s].clone(),
                        Some(a) => a.intersection(&pdom[s]).copied().collect(),
                    });
                }
                let mut d = acc.unwrap_or_default();
                d.insert(u);
                if d != pdom[u] {
                    pdom[u] = d;
                    changed = true;
                }
            }
        }
        pdom
    }

    pub fn ipdom(&self, pdom: &[BTreeSet<usize>], b: usize) -> Option<usize> {
        let strict: BTreeSet<usize> = pdom[b].iter().copied().filter(|&x| x != b).collect();
        strict.iter().copied().find(|&d| {
            let mut pd = pdom[d].clone();
            pd.remove(&d);
            pd.len() + 1 == strict.len() && pd.is_subset(&strict)
        })
    }

    /// Statements control-dependent on branch `b`: reachable from its
    /// successors without passing its immediate postdominator.
    pub fn region(&self, pdom: &[BTreeSet<usize>], b: usize) -> BTreeSet<usize> {
        let stop = self.ipdom(pdom, b);
        let mut out = BTreeSet::new();
        let mut stack: Vec<usize> = self.succs[b].clone();
        while let Some(u) = stack.pop() {
            if Some(u) == stop || u == self.n || !out.insert(u) {
                continue;
            }
            stack.extend(self.succs[u].iter().copied());
        }
        out
    }
}

/// Control-dependence regions of every branch of `m`, keyed by branch index.
pub fn branch_regions(m: &Method) -> Result<Vec<(usize, BTreeSet<usize>)>> {
    let cfg = Cfg::of(m);
    cfg.check_reducible()?;
    let pdom = cfg.postdominators();
    Ok(m
        .body()
        .iter()
        .enumerate()
        .filter(|(_, s)| matches!(s.kind, StmtKind::If { .. }))
        .map(|(i, _)| (i, cfg.region(&pdom, i)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_program;

    fn method(body: &str) -> Method {
        let src = format!("class C {{ int m(int h, int l) {{ {body} }} }}");
        parse_program(&src).unwrap().methods().next().unwrap().clone()
    }

    #[test]
    fn diamond_region_stops_at_join() {
        let m = method("if (h > 0) goto A; l = 1; goto B; A: l = 2; B: return l;");
        let r = branch_regions(&m).unwrap();
        assert_eq!(r, vec![(0, [1, 2, 3].into())]);
    }

    #[test]
    fn arms_without_assignments_are_still_regions() {
        let m = method("if (h > 0) goto A; A: return l;");
        let r = branch_regions(&m).unwrap();
        assert!(r[0].1.is_empty());
    }

    #[test]
    fn nested_regions_are_contained() {
        let m = method("if (h > 0) goto E; if (l > 0) goto D; l = 1; D: l = 2; E: return l;");
        let r = branch_regions(&m).unwrap();
        let outer = &r[0].1;
        let inner = &r[1].1;
        assert!(inner.is_subset(outer));
        assert!(inner.contains(&2) && !inner.contains(&3));
    }

    #[test]
    fn loop_region_contains_header() {
        let m = method("L: l = l + 1; if (l < h) goto L; return l;");
        let r = branch_regions(&m).unwrap();
        assert_eq!(r[0].1, [0, 1].into());
    }

    #[test]
    fn irreducible_loop_rejected() {
        let m = method("if (h > 0) goto B; A: l = 1; B: l = 2; if (l > 0) goto A; return l;");
        assert!(branch_regions(&m).is_err());
    }
}
