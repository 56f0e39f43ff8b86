use alloc::vec::Vec;

use super::classes::CongruenceClasses;
use crate::analysis::{interference_graph, liveness, DefMap};
use crate::ir::{BlockId, Function, Guard, Inst, OpInst, Var};
use crate::predicates::GuardEnv;

enum PhiCopy {
    /// `dst = mov tmp` at the head of `block`; the phi at `phi` defines `tmp`.
    Result { block: BlockId, phi: usize, dst: Var, tmp: Var },
    /// `tmp = mov src` at the end of `pred`; feeds argument `arg` of the phi.
    Arg { block: BlockId, phi: usize, arg: usize, pred: BlockId, src: Var, tmp: Var },
}

fn remove_copy(f: &mut Function, block: BlockId, dst: Var) {
    let insts = &mut f.block_mut(block).insts;
    let k = insts.iter().position(|i| i.dst() == Some(dst)).expect("phi copy vanished");
    insts.remove(k);
}

/// Extends the classes with phi resources. Every phi first gets its result
/// and arguments isolated by copies, which makes the phi trivially
/// conventional; then each copy whose two sides' classes do not interfere
/// (psi liveness rule, current program) is coalesced and removed again.
/// With `naive`, no copy is coalesced. Returns the number of copies kept.
pub fn phi_congruence(f: &mut Function, env: &GuardEnv, cc: &mut CongruenceClasses, naive: bool) -> usize {
    let mut copies: Vec<PhiCopy> = Vec::new();
    let defs = DefMap::build(f);
    let guard_of: Vec<Option<Guard>> = f.vars().map(|v| defs.single(v).and_then(|d| d.guard(f))).collect();
    let blocks: Vec<BlockId> = f.block_ids().collect();
    for &b in &blocks {
        for k in 0..f.block(b).phis.len() {
            let phi = f.block(b).phis[k].clone();
            let tmp = f.fresh_like(phi.dst);
            f.block_mut(b).phis[k].dst = tmp;
            f.block_mut(b).insts.insert(k, Inst::Op(OpInst::mov(None, phi.dst, tmp)));
            cc.union(tmp, tmp);
            copies.push(PhiCopy::Result { block: b, phi: k, dst: phi.dst, tmp });
            for (a, &(pred, src)) in phi.args.iter().enumerate() {
                let t = f.fresh_like(src);
                let guard = guard_of[src.0 as usize];
                f.block_mut(pred).insts.push(Inst::Op(OpInst::mov(guard, t, src)));
                f.block_mut(b).phis[k].args[a].1 = t;
                cc.union(tmp, t);
                copies.push(PhiCopy::Arg { block: b, phi: k, arg: a, pred, src, tmp: t });
            }
        }
    }
    let total = copies.len();
    if naive {
        return total;
    }
    let live = liveness(f);
    let ig = interference_graph(f, &live, env, cc.refine_disjoint);
    let mut kept = total;
    for c in copies {
        let (d, s) = match c {
            PhiCopy::Result { dst, tmp, .. } => (dst, tmp),
            PhiCopy::Arg { src, tmp, .. } => (tmp, src),
        };
        if !cc.same(d, s) && cc.interfere(&ig, d, s) {
            continue;
        }
        cc.union(d, s);
        kept -= 1;
        match c {
            PhiCopy::Result { block, phi, dst, .. } => {
                remove_copy(f, block, dst);
                f.block_mut(block).phis[phi].dst = dst;
            }
            PhiCopy::Arg { block, phi, arg, pred, src, tmp } => {
                remove_copy(f, pred, tmp);
                f.block_mut(block).phis[phi].args[arg].1 = src;
            }
        }
    }
    kept
}
