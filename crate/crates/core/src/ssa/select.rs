use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::{is_normalized, SsaError};
use crate::analysis::{DefMap, DomTree};
use crate::ir::{Function, Inst, OpInst, Opcode, Operand, Pred, Var, VarKind};
use crate::predicates::GuardEnv;

/// Rewrites every psi into explicit selects: each argument after the first
/// is merged with its left neighbour where it is defined,
/// `p? b = op` becoming `p? b' = op; b = select p, b', a`, and the psi
/// becomes a copy of its last argument. Psis must be normalized, each
/// argument after the first must be defined by an ordinary operation used
/// by no other psi, and the first argument must be defined unconditionally.
pub fn select_form(f: &Function) -> Result<Function, SsaError> {
    let dom = DomTree::build(f);
    let env = GuardEnv::build(f);
    let defs = DefMap::build(f);
    let mut left: BTreeMap<Var, (Pred, Var)> = BTreeMap::new();
    for x in f.psi_results() {
        if !is_normalized(f, x, &dom, &env) {
            return Err(SsaError::NoSelectForm);
        }
        let psi = f.psi(x).unwrap();
        let first = defs.single(psi.args[0].value).ok_or(SsaError::NoSelectForm)?;
        if first.guard(f).is_some() || psi.args[0].pred != Pred::True {
            return Err(SsaError::NoSelectForm);
        }
        for w in psi.args.windows(2) {
            let v = w[1].value;
            let op = defs.single(v).and_then(|d| d.inst(f)).and_then(Inst::as_op).is_some();
            if !op || left.insert(v, (w[1].pred, w[0].value)).is_some() {
                return Err(SsaError::NoSelectForm);
            }
        }
    }
    let mut g = f.clone();
    let blocks: Vec<_> = g.block_ids().collect();
    for b in blocks {
        let insts = core::mem::take(&mut g.block_mut(b).insts);
        let mut out = Vec::with_capacity(insts.len());
        for mut inst in insts {
            if let Inst::Psi(psi) = &inst {
                out.push(Inst::Op(OpInst::mov(psi.guard, psi.dst, psi.args.last().unwrap().value)));
                continue;
            }
            let Some((v, (pred, prev))) = inst.dst().and_then(|d| left.get(&d).map(|l| (d, *l))) else {
                out.push(inst);
                continue;
            };
            let t = g.fresh_like(v);
            inst.map_def(|_| t);
            out.push(inst);
            let (cond, then_v, else_v) = match pred {
                Pred::True => {
                    let one = g.fresh_var("one", VarKind::Guard);
                    out.push(Inst::Op(OpInst::new(one, Opcode::Const, vec![Operand::Imm(1)])));
                    (one, t, prev)
                }
                Pred::Guard(c) if c.negated => (c.var, prev, t),
                Pred::Guard(c) => (c.var, t, prev),
            };
            let ops = vec![Operand::Var(cond), Operand::Var(then_v), Operand::Var(else_v)];
            out.push(Inst::Op(OpInst::new(v, Opcode::Select, ops)));
        }
        g.block_mut(b).insts = out;
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::differential_check;
    use crate::ir::parse_function;

    #[test]
    fn three_argument_chain() {
        let f = parse_function(
            "func @f(%u, %p:guard, %q:guard) {\nb0:\n  %a = add %u, 1\n  %p ? %b = add %u, 2\n  %q ? %c = add %u, 3\n  %x = psi(1 ? %a, %p ? %b, %q ? %c)\n  ret %x\n}",
        )
        .unwrap();
        let g = select_form(&f).unwrap();
        assert!(!g.has_psi());
        assert_eq!(g.blocks[0].insts.iter().filter(|i| i.as_op().is_some_and(|o| o.opcode == Opcode::Select)).count(), 2);
        assert!(differential_check(&f, &g, 64, 1).is_clean());
    }

    #[test]
    fn refuses_guarded_first() {
        let f = parse_function(
            "func @f(%u, %p:guard) {\nb0:\n  %p ? %a = add %u, 1\n  !%p ? %b = add %u, 2\n  %x = psi(%p ? %a, !%p ? %b)\n  ret %x\n}",
        )
        .unwrap();
        assert_eq!(select_form(&f).unwrap_err(), SsaError::NoSelectForm);
    }
}
