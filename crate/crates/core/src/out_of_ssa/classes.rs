use alloc::vec::Vec;

use crate::analysis::InterferenceGraph;
use crate::ir::{Function, Var};

/// Union-find partition of variables. Every variable starts in its own
/// class.
#[derive(Clone, Debug, Default)]
pub struct CongruenceClasses {
    parent: Vec<u32>,
    members: Vec<Vec<Var>>,
    /// Whether the classes were built ignoring overlaps between definitions
    /// under disjoint guards; checks on them must do the same.
    pub refine_disjoint: bool,
}

impl CongruenceClasses {
    pub fn new(n: usize) -> CongruenceClasses {
        let mut c = CongruenceClasses::default();
        c.ensure(Var(n.saturating_sub(1) as u32));
        c
    }

    fn ensure(&mut self, v: Var) {
        while self.parent.len() <= v.0 as usize {
            let i = self.parent.len() as u32;
            self.parent.push(i);
            self.members.push(alloc::vec![Var(i)]);
        }
    }

    pub fn find(&self, v: Var) -> Var {
        let mut i = v.0;
        while let Some(&p) = self.parent.get(i as usize) {
            if p == i {
                break;
            }
            i = p;
        }
        Var(i)
    }

    pub fn same(&self, a: Var, b: Var) -> bool {
        self.find(a) == self.find(b)
    }

    pub fn union(&mut self, a: Var, b: Var) {
        self.ensure(a);
        self.ensure(b);
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let (big, small) = if self.members[ra.0 as usize].len() >= self.members[rb.0 as usize].len() { (ra, rb) } else { (rb, ra) };
        self.parent[small.0 as usize] = big.0;
        let moved = core::mem::take(&mut self.members[small.0 as usize]);
        self.members[big.0 as usize].extend(moved);
    }

    /// Members of the class of `v`, in insertion order.
    pub fn members(&self, v: Var) -> Vec<Var> {
        let r = self.find(v);
        match self.members.get(r.0 as usize) {
            Some(m) => m.clone(),
            None => alloc::vec![v],
        }
    }

    /// Whether some member of `a`'s class interferes with some member of
    /// `b`'s class.
    pub fn interfere(&self, ig: &InterferenceGraph, a: Var, b: Var) -> bool {
        let mb = self.members(b);
        self.members(a).iter().any(|x| mb.iter().any(|y| ig.interferes(*x, *y)))
    }

    /// Like [`interfere`](Self::interfere), ignoring member pairs for which
    /// `excused` holds.
    pub fn interfere_except(&self, ig: &InterferenceGraph, a: Var, b: Var, excused: impl Fn(Var, Var) -> bool) -> bool {
        let mb = self.members(b);
        self.members(a).iter().any(|x| mb.iter().any(|y| ig.interferes(*x, *y) && !excused(*x, *y)))
    }

    /// Classes with more than one member, each sorted by name, ordered by
    /// their first name.
    pub fn nontrivial(&self, f: &Function) -> Vec<Vec<Var>> {
        let mut out: Vec<Vec<Var>> = Vec::new();
        for (i, m) in self.members.iter().enumerate() {
            if self.parent[i] as usize == i && m.len() > 1 {
                let mut m = m.clone();
                m.sort_by(|a, b| f.var_name(*a).cmp(f.var_name(*b)));
                out.push(m);
            }
        }
        out.sort_by(|a, b| f.var_name(a[0]).cmp(f.var_name(b[0])));
        out
    }
}
