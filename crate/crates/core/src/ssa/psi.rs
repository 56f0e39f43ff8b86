use alloc::vec::Vec;

use super::SsaError;
use crate::analysis::{def_domain, DefKind, DefMap, DomTree};
use crate::ir::{Function, Guard, Inst, Pred, PsiArg, PsiInst, Var};
use crate::machine::MachineModel;
use crate::predicates::{domain_union, GuardEnv, PredExpr};

fn args_of(f: &Function, target: Var) -> Result<Vec<PsiArg>, SsaError> {
    f.psi(target).map(|p| p.args.clone()).ok_or(SsaError::NoSuchPsi)
}

/// Replaces argument `idx` of the psi defining `target`, itself defined by a
/// psi, with that psi's arguments. The inner predicates are kept, so every
/// one of them must lie inside the outer argument's predicate.
pub fn psi_inline(f: &mut Function, target: Var, idx: usize, env: &GuardEnv) -> Result<(), SsaError> {
    let args = args_of(f, target)?;
    let outer = *args.get(idx).ok_or(SsaError::BadArgIndex)?;
    let inner = f.psi(outer.value).ok_or(SsaError::NotPsiDefined)?.clone();
    let outer_pred = env.pred(outer.pred);
    if inner.guard.is_some() && !env.subset(&outer_pred, &env.opt_guard(inner.guard)) {
        return Err(SsaError::InlineUnsafe);
    }
    if outer.pred != Pred::True && !inner.args.iter().all(|a| env.subset(&env.pred(a.pred), &outer_pred)) {
        return Err(SsaError::InlineUnsafe);
    }
    let psi = f.psi_mut(target).unwrap();
    psi.args.splice(idx..=idx, inner.args);
    Ok(())
}

/// Inlines psi-defined arguments everywhere until nothing changes. Returns
/// the number of arguments inlined.
pub fn inline_all(f: &mut Function, env: &GuardEnv) -> usize {
    let mut count = 0;
    for x in f.psi_results() {
        let mut i = 0;
        while i < f.psi(x).unwrap().args.len() {
            let v = f.psi(x).unwrap().args[i].value;
            if v != x && f.psi(v).is_some() && psi_inline(f, x, i, env).is_ok() {
                count += 1;
            } else {
                i += 1;
            }
        }
    }
    count
}

/// Drops arguments whose predicate is covered by the union of the
/// predicates to their right. Returns the number of arguments removed.
pub fn psi_reduce(f: &mut Function, target: Var, env: &GuardEnv) -> Result<usize, SsaError> {
    let mut args = args_of(f, target)?;
    let mut removed = 0;
    let mut i = 0;
    while i + 1 < args.len() {
        let rest: Vec<PredExpr> = args[i + 1..].iter().map(|a| env.pred(a.pred)).collect();
        if env.subset(&env.pred(args[i].pred), &domain_union(&rest)) {
            args.remove(i);
            removed += 1;
        } else {
            i += 1;
        }
    }
    f.psi_mut(target).unwrap().args = args;
    Ok(removed)
}

pub fn reduce_all(f: &mut Function, env: &GuardEnv) -> usize {
    f.psi_results().into_iter().map(|x| psi_reduce(f, x, env).unwrap_or(0)).sum()
}

/// Creates, right after the psi defining `target`, the projection of that
/// psi on `onto`: a new psi guarded by `onto` that keeps only the arguments
/// not proven disjoint from it. Returns the new result variable.
pub fn psi_project(f: &mut Function, target: Var, onto: Pred, env: &GuardEnv) -> Result<Var, SsaError> {
    let (b, i) = f.find_psi(target).ok_or(SsaError::NoSuchPsi)?;
    let on = env.pred(onto);
    let args: Vec<PsiArg> = f.psi(target).unwrap().args.iter().copied().filter(|a| !env.disjoint(&env.pred(a.pred), &on)).collect();
    if args.is_empty() {
        return Err(SsaError::EmptyProjection);
    }
    let dst = f.fresh_like(target);
    let psi = PsiInst { guard: onto.guard(), dst, args };
    f.block_mut(b).insts.insert(i + 1, Inst::Psi(psi));
    Ok(dst)
}

/// A value that is defined whenever control reaches a point it dominates.
fn always_defined(f: &Function, defs: &DefMap, env: &GuardEnv, v: Var) -> bool {
    env.subset(&PredExpr::True, &def_domain(f, defs, env, v))
}

/// Widens the predicate of argument `idx` to `new_pred`. Condition 2: the
/// new predicate lies inside the union of the predicates from `idx` to the
/// end. Condition 1: it lies inside the guard of the argument's definition;
/// if not, the definition is speculated (its guard dropped) when the
/// machine allows it and all its operands are unconditionally defined.
pub fn psi_promote(
    f: &mut Function,
    target: Var,
    idx: usize,
    new_pred: Pred,
    env: &GuardEnv,
    machine: &MachineModel,
) -> Result<(), SsaError> {
    let args = args_of(f, target)?;
    if idx >= args.len() {
        return Err(SsaError::BadArgIndex);
    }
    let np = env.pred(new_pred);
    let tail: Vec<PredExpr> = args[idx..].iter().map(|a| env.pred(a.pred)).collect();
    if !env.subset(&np, &domain_union(&tail)) {
        return Err(SsaError::ConditionViolated(2));
    }
    let v = args[idx].value;
    let defs = DefMap::build(f);
    if !env.subset(&np, &def_domain(f, &defs, env, v)) {
        let site = defs.single(v).ok_or(SsaError::ConditionViolated(1))?;
        let DefKind::Inst(i) = site.kind else { return Err(SsaError::ConditionViolated(1)) };
        let Inst::Op(op) = &f.block(site.block).insts[i] else { return Err(SsaError::ConditionViolated(1)) };
        let ok = machine.speculatable(op.opcode) && op.operands.iter().filter_map(|o| o.var()).all(|u| always_defined(f, &defs, env, u));
        if !ok {
            return Err(SsaError::ConditionViolated(1));
        }
        f.block_mut(site.block).insts[i].set_guard(None);
    }
    f.psi_mut(target).unwrap().args[idx].pred = new_pred;
    Ok(())
}

/// Promotes the first argument of every psi to TRUE where both conditions
/// can be met. Returns the number of promotions.
pub fn auto_promote(f: &mut Function, env: &GuardEnv, machine: &MachineModel) -> usize {
    let mut n = 0;
    for x in f.psi_results() {
        if f.psi(x).unwrap().args[0].pred != Pred::True && psi_promote(f, x, 0, Pred::True, env, machine).is_ok() {
            n += 1;
        }
    }
    n
}

/// Whether argument predicate `pred`, narrowed by the psi's own guard,
/// equals the domain of the definition of `v`.
pub fn pred_matches_def(f: &Function, defs: &DefMap, env: &GuardEnv, psi_guard: Option<Guard>, pred: Pred, v: Var) -> bool {
    env.equivalent(&env.pred(pred).and(env.opt_guard(psi_guard)), &def_domain(f, defs, env, v))
}

/// Whether each argument's predicate equals the guard of its definition and
/// each definition strictly dominates the (psi-resolved) definition of the
/// next argument.
pub fn is_normalized(f: &Function, target: Var, dom: &DomTree, env: &GuardEnv) -> bool {
    let Some(psi) = f.psi(target) else { return false };
    let defs = DefMap::build(f);
    for (i, arg) in psi.args.iter().enumerate() {
        if !pred_matches_def(f, &defs, env, psi.guard, arg.pred, arg.value) {
            return false;
        }
        if let Some(next) = psi.args.get(i + 1) {
            match (defs.pos(arg.value), defs.resolved_pos(f, next.value)) {
                (Some(a), Some(b)) if dom.strictly_dominates_pos(a, b) => {}
                _ => return false,
            }
        }
    }
    true
}
