use alloc::string::String;
use alloc::vec::Vec;

use super::classes::CongruenceClasses;
use super::OutOfSsaError;
use crate::analysis::{interference_graph, liveness};
use crate::ir::{Function, Inst, Var};
use crate::predicates::GuardEnv;

/// Pairs `(argument, result)` of every psi. Once the arguments no longer
/// interfere with each other, an argument still live after the psi is only
/// meaningful where the psi selected it, so sharing a register with the
/// result is harmless.
fn excused_pairs(f: &Function) -> Vec<(Var, Var)> {
    let mut out = Vec::new();
    for b in f.block_ids() {
        for inst in &f.block(b).insts {
            if let Inst::Psi(psi) = inst {
                out.extend(psi.args.iter().map(|a| (a.value, psi.dst)));
            }
        }
    }
    out
}

/// Checks that no two members of a class interfere, then renames every
/// class to one representative and deletes phis and psis. The
/// representative is the class's parameter if it has one, otherwise its
/// smallest name. Copies that became self-copies are kept so that copy
/// counts stay comparable.
pub fn rename_and_strip(f: &Function, cc: &CongruenceClasses, env: &GuardEnv, ignore_result: bool) -> Result<Function, OutOfSsaError> {
    let live = liveness(f);
    let ig = interference_graph(f, &live, env, cc.refine_disjoint);
    let excused = if ignore_result { excused_pairs(f) } else { Vec::new() };
    for class in cc.nontrivial(f) {
        for (i, &a) in class.iter().enumerate() {
            for &b in &class[i + 1..] {
                if ig.interferes(a, b) && !excused.contains(&(a, b)) && !excused.contains(&(b, a)) {
                    return Err(OutOfSsaError::ClassInterferenceDetected {
                        a: String::from(f.var_name(a)),
                        b: String::from(f.var_name(b)),
                    });
                }
            }
        }
    }
    let mut rep: Vec<Var> = f.vars().collect();
    for class in cc.nontrivial(f) {
        let r = class.iter().copied().find(|v| f.params.contains(v)).unwrap_or(class[0]);
        for v in class {
            rep[v.0 as usize] = r;
        }
    }
    for b in f.block_ids() {
        let block = f.block(b);
        let ok = block.phis.iter().all(|p| p.args.iter().all(|(_, v)| rep[v.0 as usize] == rep[p.dst.0 as usize]))
            && block.insts.iter().all(|i| match i {
                Inst::Psi(p) => p.args.iter().all(|a| rep[a.value.0 as usize] == rep[p.dst.0 as usize]),
                Inst::Op(_) => true,
            });
        if !ok {
            return Err(OutOfSsaError::NotConventional { block: block.name.clone() });
        }
    }
    let mut g = f.clone();
    let map = |v: Var| rep.get(v.0 as usize).copied().unwrap_or(v);
    for b in g.block_ids().collect::<Vec<_>>() {
        let block = g.block_mut(b);
        block.phis.clear();
        block.insts.retain(|i| !matches!(i, Inst::Psi(_)));
        for inst in &mut block.insts {
            inst.map_uses(map);
            inst.map_def(map);
        }
        block.term.map_uses(map);
    }
    Ok(g)
}
