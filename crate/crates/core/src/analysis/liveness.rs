use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use super::{DefMap, DomTree, Pos, VarSet};
use crate::ir::{BlockId, Function, Inst, Var};

/// Live sets per block, computed with the psi rule: argument `i` of a psi is
/// used where argument `i + 1` is defined, the last argument at the psi.
/// Psi predicates and psi guards do not count as uses since they vanish
/// when psis are removed.
#[derive(Clone, Debug)]
pub struct LivenessInfo {
    pub live_in: Vec<VarSet>,
    pub live_out: Vec<VarSet>,
    /// Psi-argument uses attached to program points.
    pub psi_uses: BTreeMap<Pos, Vec<Var>>,
}

/// Where each psi argument is considered used: `(psi result, arg index,
/// point)`. Falls back to the psi itself when the next argument's
/// definition does not sit strictly between the argument's definition and
/// the psi (non-normalized psis).
pub fn psi_arg_use_points(f: &Function) -> Vec<(Var, usize, Pos)> {
    let defs = DefMap::build(f);
    let dom = DomTree::build(f);
    let mut out = Vec::new();
    for b in f.block_ids() {
        for (k, inst) in f.block(b).insts.iter().enumerate() {
            let Inst::Psi(psi) = inst else { continue };
            let at = Pos::inst(b, k);
            let n = psi.args.len();
            for i in 0..n {
                let mut point = at;
                if i + 1 < n {
                    let a = psi.args[i].value;
                    let next = psi.args[i + 1].value;
                    if let (Some(da), Some(cand)) = (defs.pos(a), defs.resolved_pos(f, next)) {
                        if a != next && dom.strictly_dominates_pos(da, cand) && dom.strictly_dominates_pos(cand, at) {
                            point = cand;
                        }
                    }
                }
                out.push((psi.dst, i, point));
            }
        }
    }
    out
}

fn op_uses(inst: &Inst) -> Vec<Var> {
    match inst {
        Inst::Op(_) => inst.uses(),
        Inst::Psi(_) => Vec::new(),
    }
}

impl LivenessInfo {
    fn uses_at(&self, p: Pos) -> &[Var] {
        self.psi_uses.get(&p).map_or(&[], |v| v.as_slice())
    }

    /// Runs the block transfer backwards from live-out, reporting each
    /// definition with the set live right after it. Phi results and
    /// parameters are reported together, with the set live after the block
    /// head.
    pub fn walk_defs(&self, f: &Function, b: BlockId, mut on_def: impl FnMut(&[Var], Pos, &VarSet)) -> VarSet {
        let block = f.block(b);
        let mut live = self.live_out[b.index()].clone();
        if let Some(u) = block.term.uses() {
            live.insert(u);
        }
        for (i, inst) in block.insts.iter().enumerate().rev() {
            let p = Pos::inst(b, i);
            if let Some(d) = inst.dst() {
                on_def(&[d], p, &live);
                live.remove(d);
            }
            for u in op_uses(inst) {
                live.insert(u);
            }
            for u in self.uses_at(p) {
                live.insert(*u);
            }
        }
        let mut heads: Vec<Var> = block.phis.iter().map(|p| p.dst).collect();
        if b == f.entry() {
            heads.extend(f.params.iter().copied());
        }
        if !heads.is_empty() {
            on_def(&heads, Pos::head(b), &live);
        }
        for h in &heads {
            live.remove(*h);
        }
        for u in self.uses_at(Pos::head(b)) {
            live.insert(*u);
        }
        live
    }

    /// Variables live immediately before the instruction at `p`; for a
    /// head position, the block's live-in set.
    pub fn live_before(&self, f: &Function, p: Pos) -> VarSet {
        if p.idx == 0 {
            return self.walk_defs(f, p.block, |_, _, _| {});
        }
        let block = f.block(p.block);
        let mut live = self.live_out[p.block.index()].clone();
        if let Some(u) = block.term.uses() {
            live.insert(u);
        }
        for (i, inst) in block.insts.iter().enumerate().rev() {
            let at = Pos::inst(p.block, i);
            if at < p {
                break;
            }
            if let Some(d) = inst.dst() {
                live.remove(d);
            }
            for u in op_uses(inst) {
                live.insert(u);
            }
            for u in self.uses_at(at) {
                live.insert(*u);
            }
        }
        live
    }

    pub fn is_live_in(&self, b: BlockId, v: Var) -> bool {
        self.live_in[b.index()].contains(v)
    }

    pub fn is_live_out(&self, b: BlockId, v: Var) -> bool {
        self.live_out[b.index()].contains(v)
    }

    /// Sorted, deterministic listing of live-in and live-out sets.
    pub fn dump(&self, f: &Function) -> String {
        let mut out = String::new();
        let names = |s: &VarSet| {
            let mut v: Vec<&str> = s.iter().map(|x| f.var_name(x)).collect();
            v.sort_unstable();
            let mut t = String::new();
            for (i, n) in v.iter().enumerate() {
                if i > 0 {
                    t.push(' ');
                }
                t.push('%');
                t.push_str(n);
            }
            t
        };
        for b in f.block_ids() {
            let _ =
                writeln!(out, "{}: in [{}] out [{}]", f.block(b).name, names(&self.live_in[b.index()]), names(&self.live_out[b.index()]));
        }
        out
    }
}

/// Backward liveness to a fixpoint over the whole function.
pub fn liveness(f: &Function) -> LivenessInfo {
    let n = f.blocks.len();
    let mut psi_uses: BTreeMap<Pos, Vec<Var>> = BTreeMap::new();
    for (psi, i, point) in psi_arg_use_points(f) {
        let arg = f.psi(psi).unwrap().args[i].value;
        psi_uses.entry(point).or_default().push(arg);
    }
    let mut info = LivenessInfo {
        live_in: vec![VarSet::with_capacity(f.var_count()); n],
        live_out: vec![VarSet::with_capacity(f.var_count()); n],
        psi_uses,
    };
    // Phi arguments are live out of their predecessor.
    let mut phi_out: Vec<VarSet> = vec![VarSet::default(); n];
    for b in f.block_ids() {
        for phi in &f.block(b).phis {
            for (p, v) in &phi.args {
                if p.index() < n {
                    phi_out[p.index()].insert(*v);
                }
            }
        }
    }
    let dom = DomTree::build(f);
    let mut order: Vec<BlockId> = dom.rpo().iter().rev().copied().collect();
    order.extend(f.block_ids().filter(|b| !dom.is_reachable(*b)));
    let mut changed = true;
    while changed {
        changed = false;
        for &b in &order {
            let mut out = phi_out[b.index()].clone();
            for s in f.successors(b) {
                out.union_with(&info.live_in[s.index()]);
            }
            if out != info.live_out[b.index()] {
                info.live_out[b.index()] = out;
                changed = true;
            }
            let inn = info.walk_defs(f, b, |_, _, _| {});
            if inn != info.live_in[b.index()] {
                info.live_in[b.index()] = inn;
                changed = true;
            }
        }
    }
    info
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_function;

    fn live_fig() -> Function {
        parse_function(
            "func @f(%p:guard, %q:guard, %r:guard, %u) {
b0:
  %p ? %a = add %u, 1
  %q ? %b = add %u, 2
  %r ? %c = add %u, 3
  %x = psi(%p ? %a, %q ? %b, %r ? %c)
  %d = add %b, 1
  ret %x
}",
        )
        .unwrap()
    }

    #[test]
    fn arg_use_points() {
        let f = live_fig();
        let points = psi_arg_use_points(&f);
        let b0 = BlockId(0);
        assert_eq!(points[0].2, Pos::inst(b0, 1));
        assert_eq!(points[1].2, Pos::inst(b0, 2));
        assert_eq!(points[2].2, Pos::inst(b0, 3));
    }

    #[test]
    fn a_dies_at_def_of_b() {
        let f = live_fig();
        let live = liveness(&f);
        let a = f.lookup("a").unwrap();
        let b = f.lookup("b").unwrap();
        let b0 = BlockId(0);
        assert!(live.live_before(&f, Pos::inst(b0, 1)).contains(a));
        assert!(!live.live_before(&f, Pos::inst(b0, 2)).contains(a));
        assert!(live.live_before(&f, Pos::inst(b0, 4)).contains(b));
    }

    #[test]
    fn single_arg_used_at_psi() {
        let f = parse_function("func @f(%u) {\nb0:\n  %a = add %u, 1\n  %x = psi(1 ? %a)\n  ret %x\n}").unwrap();
        let points = psi_arg_use_points(&f);
        assert_eq!(points, vec![(f.lookup("x").unwrap(), 0, Pos::inst(BlockId(0), 1))]);
    }
}
