use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::analysis::DefMap;
use crate::ir::{Function, Inst, Var};
use crate::predicates::GuardEnv;

fn resolve(map: &BTreeMap<Var, Var>, mut v: Var) -> Var {
    while let Some(&n) = map.get(&v) {
        v = n;
    }
    v
}

fn use_counts(f: &Function) -> Vec<usize> {
    let mut n = vec![0; f.var_count()];
    for block in &f.blocks {
        for phi in &block.phis {
            for (_, v) in &phi.args {
                n[v.0 as usize] += 1;
            }
        }
        for inst in &block.insts {
            for u in inst.uses() {
                n[u.0 as usize] += 1;
            }
        }
        if let Some(u) = block.term.uses() {
            n[u.0 as usize] += 1;
        }
    }
    n
}

/// Copy folding on SSA form. Unguarded `x = mov y` is removed and `x`
/// replaced by `y` everywhere. A guarded copy `p? c = a` is folded into a
/// psi argument `q? c` when `q` is proven inside `p` and inside the guard
/// of `a`'s definition. Copies left without uses are deleted. Returns the
/// number of copies removed.
pub fn copy_fold(f: &mut Function, env: &GuardEnv) -> usize {
    let before = f.copy_count();

    let mut map = BTreeMap::new();
    for block in &f.blocks {
        for inst in &block.insts {
            if let Inst::Op(op) = inst {
                if let (None, Some(d), Some(s)) = (op.guard, op.dst, op.copy_source()) {
                    if d != s && !f.params.contains(&d) {
                        map.insert(d, s);
                    }
                }
            }
        }
    }
    if !map.is_empty() {
        for block in f.blocks.iter_mut() {
            block.insts.retain(|i| !matches!(i, Inst::Op(op) if op.guard.is_none() && op.dst.is_some_and(|d| map.contains_key(&d))));
        }
        f.map_all_uses(|v| resolve(&map, v));
    }

    let defs = DefMap::build(f);
    let psis = f.psi_results();
    for x in psis {
        let mut args = f.psi(x).unwrap().args.clone();
        for arg in args.iter_mut() {
            let q = env.pred(arg.pred);
            while let Some(site) = defs.single(arg.value) {
                let Some(Inst::Op(op)) = site.inst(f) else { break };
                let (Some(p), Some(a)) = (op.guard, op.copy_source()) else { break };
                let a_guard = crate::analysis::def_domain(f, &defs, env, a);
                if !env.subset(&q, &env.guard(p).and(a_guard)) {
                    break;
                }
                arg.value = a;
            }
        }
        f.psi_mut(x).unwrap().args = args;
    }

    loop {
        let uses = use_counts(f);
        let mut removed = false;
        for block in f.blocks.iter_mut() {
            block.insts.retain(|i| {
                let dead = matches!(i, Inst::Op(op) if op.copy_source().is_some() && op.dst.is_some_and(|d| uses[d.0 as usize] == 0));
                removed |= dead;
                !dead
            });
        }
        if !removed {
            break;
        }
    }
    before - f.copy_count()
}
