use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::classes::CongruenceClasses;
use super::normalize::{copy_point, insert_after, psis_in_order, repair_guard};
use crate::analysis::{interference_graph, liveness, DefMap, DomTree, InterferenceGraph, Pos};
use crate::ir::{Function, Inst, OpInst, Var};
use crate::predicates::GuardEnv;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CongruenceOptions {
    /// Between two interfering arguments, copy only the left one.
    pub repair_left_only: bool,
    /// Skip interferences between an argument and the psi result.
    pub ignore_result_interference: bool,
    /// Ignore overlaps between definitions under disjoint guards.
    pub disjoint_interference: bool,
}

/// Whether resources `i` and `j` of a psi conflict. With `ignore_result`,
/// overlaps between an argument and the result themselves do not count,
/// but other members of their classes still do.
fn conflict(ig: &InterferenceGraph, cc: &CongruenceClasses, res: &[Var], i: usize, j: usize, ignore_result: bool) -> bool {
    let n = res.len() - 1;
    if cc.same(res[i], res[j]) {
        return false;
    }
    if ignore_result && j == n {
        let direct = |a: Var, b: Var| (b == res[n] && res[..n].contains(&a)) || (a == res[n] && res[..n].contains(&b));
        return cc.interfere_except(ig, res[i], res[j], direct);
    }
    cc.interfere(ig, res[i], res[j])
}

/// Resources of a psi (arguments, then the result) that need a copy. With
/// `left_only`, a right argument is still copied when another psi also
/// reads it, since that psi would otherwise inherit the conflict.
fn marks(ig: &InterferenceGraph, cc: &CongruenceClasses, res: &[Var], left_only: bool, ignore_result: bool, shared: &[Var]) -> Vec<bool> {
    let n = res.len() - 1;
    let mut mark = vec![false; n + 1];
    for i in 0..=n {
        for j in i + 1..=n {
            if !conflict(ig, cc, res, i, j, ignore_result) {
                continue;
            }
            if j == n {
                mark[j] = true;
                if !ignore_result {
                    mark[i] = true;
                }
            } else {
                mark[i] = true;
                if !left_only || shared.contains(&res[j]) {
                    mark[j] = true;
                }
            }
        }
    }
    mark
}

/// Latest point where a copy of argument `i` can go: right before the
/// resolved definition of the next argument, or right before the psi for
/// the last one. `None` when that point is a block head or the copy's guard
/// is not available there.
fn late_point(f: &Function, dom: &DomTree, defs: &DefMap, x: Var, i: usize, guard: Option<crate::ir::Guard>) -> Option<Pos> {
    let psi = f.psi(x).unwrap();
    let next = match psi.args.get(i + 1) {
        Some(a) => defs.resolved_pos(f, a.value)?,
        None => {
            let (b, k) = f.find_psi(x)?;
            Pos::inst(b, k)
        }
    };
    let at = Pos { block: next.block, idx: next.idx.checked_sub(1)? };
    let own = defs.pos(psi.args[i].value)?;
    let guard_ok = guard.is_none_or(|g| defs.pos(g.var).is_some_and(|p| dom.dominates_pos(p, at)));
    (next.idx > 0 && guard_ok && dom.dominates_pos(own, at)).then_some(at)
}

/// Inserts the copies selected by `mark` for the psi defining `x`, right
/// below the copied definitions or, with `late`, as close to their use as
/// possible. Returns the resources after repair and the `(original, copy)`
/// pairs.
fn repair(f: &mut Function, dom: &DomTree, env: &mut GuardEnv, x: Var, mark: &[bool], late: bool) -> (Vec<Var>, Vec<(Var, Var)>) {
    let psi = f.psi(x).unwrap().clone();
    let n = psi.args.len();
    let mut res: Vec<Var> = psi.args.iter().map(|a| a.value).collect();
    res.push(x);
    let mut fresh = Vec::new();
    for i in (0..n).filter(|i| mark[*i]) {
        let arg = psi.args[i];
        let guard = repair_guard(f, dom, env, psi.guard, arg.pred);
        let defs = DefMap::build(f);
        let late_at = if late { late_point(f, dom, &defs, x, i, guard) } else { None };
        let at = late_at.unwrap_or_else(|| copy_point(&defs, dom, arg.value, guard, None));
        let e = f.fresh_like(arg.value);
        insert_after(f, at, Inst::Op(OpInst::mov(guard, e, arg.value)));
        f.psi_mut(x).unwrap().args[i].value = e;
        fresh.push((arg.value, e));
        res[i] = e;
    }
    if mark[n] {
        let g = f.fresh_like(x);
        let (b, k) = f.find_psi(x).unwrap();
        if let Inst::Psi(p) = &mut f.block_mut(b).insts[k] {
            p.dst = g;
        }
        insert_after(f, Pos::inst(b, k), Inst::Op(OpInst::mov(psi.guard, x, g)));
        fresh.push((x, g));
        res[n] = g;
    }
    (res, fresh)
}

fn exact_graph(f: &Function, env: &GuardEnv, refine: bool, extra: &[(Var, Var)]) -> InterferenceGraph {
    let mut ig = interference_graph(f, &liveness(f), env, refine);
    for &(a, b) in extra {
        ig.add_edge(a, b);
    }
    ig
}

/// Grows one congruence class per psi, repairing interfering resources with
/// predicated copies placed right below the copied definition. Each new
/// variable is also made to interfere with the one it copies, so that later
/// psis and phis keep the two apart. After a repair the interference graph
/// is recomputed; if the class would still hold interfering members (two
/// psis sharing a right argument, or a left argument live around a loop),
/// the psi is repaired again with both sides of every conflict copied, then
/// with every resource copied, then with argument copies moved down to
/// their use.
/// Returns the number of copies inserted.
pub fn psi_congruence(f: &mut Function, dom: &DomTree, env: &mut GuardEnv, cc: &mut CongruenceClasses, opts: CongruenceOptions) -> usize {
    let refine = opts.disjoint_interference;
    let mut extra: Vec<(Var, Var)> = Vec::new();
    let mut ig = exact_graph(f, env, refine, &extra);
    let mut copies = 0;
    let mut readers: BTreeMap<Var, usize> = BTreeMap::new();
    for x in f.psi_results() {
        for a in &f.psi(x).unwrap().args {
            *readers.entry(a.value).or_default() += 1;
        }
    }
    let shared: Vec<Var> = readers.into_iter().filter(|(_, k)| *k > 1).map(|(v, _)| v).collect();
    for x in psis_in_order(f, dom) {
        let mut res: Vec<Var> = f.psi(x).unwrap().args.iter().map(|a| a.value).collect();
        res.push(x);
        let n = res.len() - 1;
        let first = marks(&ig, cc, &res, opts.repair_left_only, opts.ignore_result_interference, &shared);
        if first.iter().any(|m| *m) {
            let both = marks(&ig, cc, &res, false, opts.ignore_result_interference, &shared);
            let all = vec![true; n + 1];
            let (f0, env0) = (f.clone(), env.clone());
            let attempts = [(&first, false), (&both, false), (&all, false), (&all, true)];
            for (k, &(mark, late)) in attempts.iter().enumerate() {
                if k > 0 {
                    *f = f0.clone();
                    *env = env0.clone();
                }
                let (r, fresh) = repair(f, dom, env, x, mark, late);
                let mut trial_extra = extra.clone();
                trial_extra.extend(fresh.iter().copied());
                let trial = exact_graph(f, env, refine, &trial_extra);
                let ignore = opts.ignore_result_interference;
                let clash = (0..=n).any(|i| (i + 1..=n).any(|j| conflict(&trial, cc, &r, i, j, ignore)));
                if !clash || k + 1 == attempts.len() {
                    res = r;
                    extra = trial_extra;
                    ig = trial;
                    copies += fresh.len();
                    break;
                }
            }
        }
        for r in &res[1..] {
            cc.union(res[0], *r);
        }
    }
    copies
}
