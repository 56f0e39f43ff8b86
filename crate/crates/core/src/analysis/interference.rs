use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use super::{DefMap, LivenessInfo, VarSet};
use crate::ir::{Function, OpInst, Var};
use crate::predicates::GuardEnv;

/// Symmetric, irreflexive interference relation.
#[derive(Clone, Debug)]
pub struct InterferenceGraph {
    adj: Vec<VarSet>,
    pub refined: bool,
}

impl InterferenceGraph {
    pub fn new(n: usize) -> InterferenceGraph {
        InterferenceGraph { adj: alloc::vec![VarSet::default(); n], refined: false }
    }

    fn ensure(&mut self, v: Var) {
        if v.0 as usize >= self.adj.len() {
            self.adj.resize(v.0 as usize + 1, VarSet::default());
        }
    }

    pub fn add_edge(&mut self, a: Var, b: Var) {
        if a == b {
            return;
        }
        self.ensure(a);
        self.ensure(b);
        self.adj[a.0 as usize].insert(b);
        self.adj[b.0 as usize].insert(a);
    }

    pub fn remove_edge(&mut self, a: Var, b: Var) {
        if let Some(s) = self.adj.get_mut(a.0 as usize) {
            s.remove(b);
        }
        if let Some(s) = self.adj.get_mut(b.0 as usize) {
            s.remove(a);
        }
    }

    pub fn interferes(&self, a: Var, b: Var) -> bool {
        self.adj.get(a.0 as usize).is_some_and(|s| s.contains(b))
    }

    pub fn neighbors(&self, v: Var) -> Vec<Var> {
        self.adj.get(v.0 as usize).map_or(Vec::new(), |s| s.iter().collect())
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(VarSet::len).sum::<usize>() / 2
    }

    /// One line per edge, `%a -- %b` with the names ordered, sorted.
    pub fn dump(&self, f: &Function) -> String {
        let mut lines: Vec<(String, String)> = Vec::new();
        for (i, s) in self.adj.iter().enumerate() {
            let a = Var(i as u32);
            for b in s.iter() {
                let (x, y) = (f.var_name(a), f.var_name(b));
                if x < y {
                    lines.push((String::from(x), String::from(y)));
                }
            }
        }
        lines.sort();
        let mut out = String::new();
        for (x, y) in lines {
            let _ = writeln!(out, "%{x} -- %{y}");
        }
        out
    }
}

/// Every definition interferes with what is live right after it, except
/// that an unguarded copy does not interfere with its source: in SSA both
/// hold the same value wherever both are live. With `refine_disjoint`, two variables whose definitions are both guarded by
/// provably disjoint predicates never interfere.
pub fn interference_graph(f: &Function, live: &LivenessInfo, env: &GuardEnv, refine_disjoint: bool) -> InterferenceGraph {
    let defs = DefMap::build(f);
    let mut g = InterferenceGraph::new(f.var_count());
    g.refined = refine_disjoint;
    let guard_of = |v: Var| defs.single(v).and_then(|d| d.guard(f));
    let mut edges: Vec<(Var, Var)> = Vec::new();
    for b in f.block_ids() {
        live.walk_defs(f, b, |ds, p, after| {
            let src = match p.idx {
                0 => None,
                i => f.block(b).insts[i - 1].as_op().filter(|o| o.guard.is_none()).and_then(OpInst::copy_source),
            };
            for (i, &d) in ds.iter().enumerate() {
                for v in after.iter().filter(|v| Some(*v) != src) {
                    edges.push((d, v));
                }
                // Simultaneous definitions at a block head.
                for &e in &ds[i + 1..] {
                    edges.push((d, e));
                }
            }
        });
    }
    for (a, b) in edges {
        if a == b || g.interferes(a, b) {
            continue;
        }
        if refine_disjoint {
            if let (Some(ga), Some(gb)) = (guard_of(a), guard_of(b)) {
                if env.disjoint(&env.guard(ga), &env.guard(gb)) {
                    continue;
                }
            }
        }
        g.add_edge(a, b);
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::liveness;
    use crate::ir::parse_function;

    #[test]
    fn disjoint_refinement() {
        let f = parse_function(
            "func @f(%u, %v) {\nb0:\n  %p = cmp_lt %u, %v\n  %p ? %x = add %u, 1\n  !%p ? %y = add %v, 1\n  %s = add %x, %y\n  ret %s\n}",
        )
        .unwrap();
        let live = liveness(&f);
        let env = GuardEnv::build(&f);
        let (x, y) = (f.lookup("x").unwrap(), f.lookup("y").unwrap());
        assert!(!interference_graph(&f, &live, &env, true).interferes(x, y));
        assert!(interference_graph(&f, &live, &env, false).interferes(x, y));
    }
}
