use alloc::vec::Vec;

use crate::analysis::{DefMap, DomTree, Pos};
use crate::ir::{Function, Guard, Inst, OpInst, Opcode, Operand, Pred, Var, VarKind};
use crate::predicates::GuardEnv;
use crate::ssa::pred_matches_def;

/// Psi results in dominator-tree preorder, block order inside a block.
pub(crate) fn psis_in_order(f: &Function, dom: &DomTree) -> Vec<Var> {
    let mut out = Vec::new();
    for &b in dom.preorder() {
        for inst in &f.block(b).insts {
            if let Inst::Psi(psi) = inst {
                out.push(psi.dst);
            }
        }
    }
    out
}

/// Of positions that all lie on one dominator chain, the lowest.
pub(crate) fn lowest(dom: &DomTree, points: &[Pos]) -> Pos {
    points.iter().copied().reduce(|a, b| if dom.dominates_pos(a, b) { b } else { a }).unwrap()
}

/// Inserts `inst` right after the program point `at`.
pub(crate) fn insert_after(f: &mut Function, at: Pos, inst: Inst) {
    f.block_mut(at.block).insts.insert(at.idx, inst);
}

fn guard_pos(defs: &DefMap, g: Option<Guard>) -> Option<Pos> {
    g.and_then(|g| defs.pos(g.var))
}

/// Materializes `a && b` right below both guard definitions.
fn conjoin(f: &mut Function, dom: &DomTree, a: Guard, b: Guard) -> Guard {
    let defs = DefMap::build(f);
    let points: Vec<Pos> = [defs.pos(a.var), defs.pos(b.var)].into_iter().flatten().collect();
    let mut at = lowest(dom, &points);
    let plain = |f: &mut Function, g: Guard, at: &mut Pos| {
        if !g.negated {
            return g.var;
        }
        let t = f.fresh_var("c", VarKind::Guard);
        insert_after(f, *at, Inst::Op(OpInst::new(t, Opcode::Not, alloc::vec![Operand::Var(g.var)])));
        at.idx += 1;
        t
    };
    let x = plain(f, a, &mut at);
    let y = plain(f, b, &mut at);
    let t = f.fresh_var("c", VarKind::Guard);
    insert_after(f, at, Inst::Op(OpInst::new(t, Opcode::And, alloc::vec![Operand::Var(x), Operand::Var(y)])));
    Guard::pos(t)
}

/// Guard for a repair copy standing for argument predicate `pred` of a psi
/// guarded by `outer`: their conjunction, materialized when neither
/// contains the other. May add guard registers, in which case `env` is
/// rebuilt.
pub(crate) fn repair_guard(f: &mut Function, dom: &DomTree, env: &mut GuardEnv, outer: Option<Guard>, pred: Pred) -> Option<Guard> {
    let (Some(g), Some(pg)) = (outer, pred.guard()) else { return pred.guard().or(outer) };
    let (p, ge) = (env.guard(pg), env.guard(g));
    if env.subset(&p, &ge) {
        return Some(pg);
    }
    if env.subset(&ge, &p) {
        return Some(g);
    }
    let c = conjoin(f, dom, pg, g);
    *env = GuardEnv::build(f);
    Some(c)
}

/// Where a copy of `v` under `guard` may go: below the definition of `v`,
/// below the guard's definition and below `extra`.
pub(crate) fn copy_point(defs: &DefMap, dom: &DomTree, v: Var, guard: Option<Guard>, extra: Option<Pos>) -> Pos {
    let points: Vec<Pos> = [defs.pos(v), guard_pos(defs, guard), extra].into_iter().flatten().collect();
    lowest(dom, &points)
}

/// Puts every psi in normalized form: each argument's predicate equals the
/// guard of its definition, and each argument's definition strictly
/// dominates the (psi-resolved) definition of the next one. Mismatches are
/// repaired with predicated copies; with `reorder_disjoint`, an
/// out-of-order pair under disjoint predicates is swapped instead. Returns
/// the number of copies inserted.
pub fn psi_normalize(f: &mut Function, dom: &DomTree, env: &GuardEnv, reorder_disjoint: bool) -> usize {
    let mut env = env.clone();
    let mut copies = 0;
    for x in psis_in_order(f, dom) {
        let outer = f.psi(x).unwrap().guard;
        let mut i = 0;
        while i < f.psi(x).unwrap().args.len() {
            let defs = DefMap::build(f);
            let arg = f.psi(x).unwrap().args[i];
            if !pred_matches_def(f, &defs, &env, outer, arg.pred, arg.value) {
                let guard = repair_guard(f, dom, &mut env, outer, arg.pred);
                let defs = DefMap::build(f);
                let at = copy_point(&defs, dom, arg.value, guard, None);
                let e = f.fresh_like(arg.value);
                insert_after(f, at, Inst::Op(OpInst::mov(guard, e, arg.value)));
                f.psi_mut(x).unwrap().args[i].value = e;
                copies += 1;
                continue;
            }
            let Some(next) = f.psi(x).unwrap().args.get(i + 1).copied() else { break };
            let here = defs.pos(arg.value);
            let there = defs.resolved_pos(f, next.value);
            let ordered = matches!((here, there), (Some(a), Some(b)) if dom.strictly_dominates_pos(a, b));
            if ordered {
                i += 1;
                continue;
            }
            if reorder_disjoint && env.disjoint(&env.pred(arg.pred), &env.pred(next.pred)) {
                let prev_ok = i == 0 || {
                    let prev = f.psi(x).unwrap().args[i - 1].value;
                    matches!((defs.pos(prev), there), (Some(a), Some(b)) if dom.strictly_dominates_pos(a, b))
                };
                let swapped_ok = matches!((defs.pos(next.value), defs.resolved_pos(f, arg.value)), (Some(a), Some(b)) if dom.strictly_dominates_pos(a, b));
                if prev_ok && swapped_ok {
                    f.psi_mut(x).unwrap().args.swap(i, i + 1);
                    continue;
                }
            }
            let guard = repair_guard(f, dom, &mut env, outer, next.pred);
            let defs = DefMap::build(f);
            let here = defs.pos(f.psi(x).unwrap().args[i].value);
            let at = copy_point(&defs, dom, next.value, guard, here);
            let e = f.fresh_like(next.value);
            insert_after(f, at, Inst::Op(OpInst::mov(guard, e, next.value)));
            f.psi_mut(x).unwrap().args[i + 1].value = e;
            copies += 1;
            i += 1;
        }
    }
    copies
}
