//! If-conversion of diamonds and triangles into predicated straight-line
//! code with psi operations.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::analysis::{DefMap, DomTree, VarSet};
use crate::ir::{BlockId, Function, Guard, Inst, OpInst, Opcode, Operand, Pred, PsiArg, PsiInst, Terminator, Var};
use crate::machine::MachineModel;
use crate::predicates::GuardEnv;
use crate::ssa::psi_inline;

/// A single-entry, single-exit branch region. Each arm is empty (triangle)
/// or a single block that falls through to `merge`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    pub head: BlockId,
    pub then_arm: Vec<BlockId>,
    pub else_arm: Vec<BlockId>,
    pub merge: BlockId,
    pub cond: Var,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IfConvertError {
    /// The region shape is wrong or some arm instruction can be neither
    /// predicated nor speculated.
    NotConvertible,
}

impl fmt::Display for IfConvertError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("region is not convertible")
    }
}

impl core::error::Error for IfConvertError {}

/// How each arm instruction is treated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Treatment {
    Predicate,
    Speculate,
}

/// Decides, for every instruction of an arm, whether it gets the arm
/// predicate or runs speculatively. Speculation is only allowed for
/// side-effect-free operations whose operands are defined regardless of the
/// branch; guard computations are speculated whenever possible so that
/// guards already present in the arm stay readable on both paths.
fn plan_arm(f: &Function, b: BlockId, machine: &MachineModel) -> Option<Vec<Treatment>> {
    let mut conditional = VarSet::default();
    let mut out = Vec::new();
    for inst in &f.block(b).insts {
        let guard_ready = inst.guard().is_none_or(|g| !conditional.contains(g.var));
        if !guard_ready {
            return None;
        }
        let t = match inst {
            Inst::Psi(_) => Treatment::Predicate,
            Inst::Op(op) => {
                let ready = op.operands.iter().filter_map(|o| o.var()).all(|v| !conditional.contains(v));
                let spec = ready && machine.speculatable(op.opcode);
                let defines_guard = op.dst.is_some_and(|d| f.is_guard(d));
                if spec && (defines_guard || !machine.predicable(op.opcode)) {
                    Treatment::Speculate
                } else if defines_guard {
                    // A conditionally defined guard cannot be combined with
                    // other guards without reading it where it is undefined.
                    return None;
                } else if machine.predicable(op.opcode) {
                    Treatment::Predicate
                } else {
                    return None;
                }
            }
        };
        if let Some(d) = inst.dst() {
            if t == Treatment::Predicate || inst.guard().is_some() {
                conditional.insert(d);
            }
        }
        out.push(t);
    }
    Some(out)
}

fn arm_of(f: &Function, preds: &[Vec<BlockId>], head: BlockId, b: BlockId) -> Option<BlockId> {
    let block = f.block(b);
    match block.term {
        Terminator::Goto(m) if preds[b.index()] == [head] && block.phis.is_empty() && m != b && m != head => Some(m),
        _ => None,
    }
}

fn region_at(f: &Function, preds: &[Vec<BlockId>], head: BlockId) -> Option<Region> {
    let Terminator::Br { cond, then_dest, else_dest } = f.block(head).term else { return None };
    if then_dest == else_dest {
        return None;
    }
    let entry = f.entry();
    let (t, e) = (arm_of(f, preds, head, then_dest), arm_of(f, preds, head, else_dest));
    let region = match (t, e) {
        (Some(m1), Some(m2)) if m1 == m2 => Region { head, then_arm: vec![then_dest], else_arm: vec![else_dest], merge: m1, cond },
        (Some(m), _) if m == else_dest => Region { head, then_arm: vec![then_dest], else_arm: vec![], merge: m, cond },
        (_, Some(m)) if m == then_dest => Region { head, then_arm: vec![], else_arm: vec![else_dest], merge: m, cond },
        _ => return None,
    };
    let mut expected: Vec<BlockId> = region.then_arm.iter().chain(&region.else_arm).copied().collect();
    if expected.len() == 1 {
        expected.push(head);
    }
    expected.sort();
    let mut actual = preds[region.merge.index()].clone();
    actual.sort();
    if actual != expected || region.merge == entry || region.merge == head {
        return None;
    }
    Some(region)
}

/// Convertible diamonds and triangles. Only regions whose arms are single
/// blocks qualify, so every region listed is innermost; enclosing regions
/// become visible once their inner ones are converted.
pub fn find_regions(f: &Function, dom: &DomTree, machine: &MachineModel) -> Vec<Region> {
    let preds = f.predecessors();
    dom.preorder()
        .iter()
        .rev()
        .filter_map(|&h| region_at(f, &preds, h))
        .filter(|r| r.then_arm.iter().chain(&r.else_arm).all(|&b| plan_arm(f, b, machine).is_some()))
        .collect()
}

/// Emits `a & b` as a new guard register, materializing negations with
/// `not`.
fn conjoin(f: &mut Function, out: &mut Vec<Inst>, cache: &mut BTreeMap<(Guard, Guard), Guard>, a: Guard, b: Guard) -> Guard {
    if a == b {
        return a;
    }
    if let Some(g) = cache.get(&(a, b)) {
        return *g;
    }
    let plain = |f: &mut Function, out: &mut Vec<Inst>, g: Guard| {
        if !g.negated {
            return g.var;
        }
        let n = f.fresh_like(g.var);
        out.push(Inst::Op(OpInst::new(n, Opcode::Not, vec![Operand::Var(g.var)])));
        n
    };
    let (x, y) = (plain(f, out, a), plain(f, out, b));
    let r = f.fresh_like(a.var);
    out.push(Inst::Op(OpInst::new(r, Opcode::And, vec![Operand::Var(x), Operand::Var(y)])));
    cache.insert((a, b), Guard::pos(r));
    Guard::pos(r)
}

/// Linearizes `region` into its head block: arm instructions are guarded
/// by the branch condition or speculated, and each phi of the merge block
/// becomes a psi whose arguments follow definition order. Chained psis
/// created this way are then inlined where that is sound.
pub fn if_convert(f: &mut Function, region: &Region, machine: &MachineModel) -> Result<(), IfConvertError> {
    let preds = f.predecessors();
    if region_at(f, &preds, region.head).as_ref() != Some(region) {
        return Err(IfConvertError::NotConvertible);
    }
    let dom = DomTree::build(f);
    let defs = DefMap::build(f);
    let then_g = Guard::pos(region.cond);
    let else_g = Guard::neg(region.cond);

    let mut arms: Vec<(BlockId, Guard, Vec<Treatment>)> = Vec::new();
    for (arm, g) in [(&region.then_arm, then_g), (&region.else_arm, else_g)] {
        for &b in arm {
            let plan = plan_arm(f, b, machine).ok_or(IfConvertError::NotConvertible)?;
            arms.push((b, g, plan));
        }
    }

    let mut body = core::mem::take(&mut f.block_mut(region.head).insts);
    // Arm blocks get ranks 1 and 2; everything defined before the region
    // ranks 0 and is ordered by dominance.
    let mut rank: BTreeMap<Var, (u8, u32, usize)> = BTreeMap::new();
    let mut cache = BTreeMap::new();
    for (k, (b, g, plan)) in arms.iter().enumerate() {
        let insts = core::mem::take(&mut f.block_mut(*b).insts);
        for (inst, t) in insts.into_iter().zip(plan) {
            let mut inst = inst;
            if *t == Treatment::Predicate {
                let guard = match inst.guard() {
                    None => *g,
                    Some(old) => conjoin(f, &mut body, &mut cache, *g, old),
                };
                inst.set_guard(Some(guard));
            }
            if let Some(d) = inst.dst() {
                rank.insert(d, (k as u8 + 1, 0, body.len()));
            }
            body.push(inst);
        }
    }

    let edge_pred = |from: BlockId| -> Guard {
        if region.then_arm.contains(&from) {
            then_g
        } else if region.else_arm.contains(&from) {
            else_g
        } else if region.then_arm.is_empty() {
            then_g
        } else {
            else_g
        }
    };
    let phis = core::mem::take(&mut f.block_mut(region.merge).phis);
    let mut created = Vec::new();
    for phi in phis {
        let mut args: Vec<((u8, u32, usize), PsiArg)> = phi
            .args
            .iter()
            .map(|&(from, v)| {
                let key = rank.get(&v).copied().unwrap_or_else(|| match defs.single(v) {
                    Some(d) => (0, dom.preorder_index(d.block), d.pos().idx),
                    None => (0, 0, 0),
                });
                (key, PsiArg { pred: Pred::Guard(edge_pred(from)), value: v })
            })
            .collect();
        args.sort_by_key(|(k, _)| *k);
        if args[0].0 .0 == 0 {
            // The predicates of a two-way branch cover everything, so the
            // leftmost argument, defined before the region, can stand
            // under TRUE.
            args[0].1.pred = Pred::True;
        }
        body.push(Inst::Psi(PsiInst { guard: None, dst: phi.dst, args: args.into_iter().map(|(_, a)| a).collect() }));
        created.push(phi.dst);
    }

    let merge_insts = core::mem::take(&mut f.block_mut(region.merge).insts);
    body.extend(merge_insts);
    let term = f.block(region.merge).term.clone();
    for s in term.successors() {
        for phi in f.block_mut(s).phis.iter_mut() {
            for (from, _) in phi.args.iter_mut() {
                if *from == region.merge {
                    *from = region.head;
                }
            }
        }
    }
    let head = f.block_mut(region.head);
    head.insts = body;
    head.term = term;
    let mut dead: Vec<BlockId> = region.then_arm.iter().chain(&region.else_arm).copied().collect();
    dead.push(region.merge);
    let head_name = f.block(region.head).name.clone();
    f.remove_blocks(&dead);
    let head = f.block_by_name(&head_name).expect("head block survives");

    let env = GuardEnv::build(f);
    for x in created {
        let mut i = 0;
        while i < f.psi(x).map_or(0, |p| p.args.len()) {
            let v = f.psi(x).unwrap().args[i].value;
            if v != x && f.psi(v).is_some_and(|_| defined_in(f, head, v)) && psi_inline(f, x, i, &env).is_ok() {
                continue;
            }
            i += 1;
        }
    }
    Ok(())
}

fn defined_in(f: &Function, b: BlockId, v: Var) -> bool {
    f.block(b).insts.iter().any(|i| i.dst() == Some(v))
}

/// Converts regions until none is left. Returns how many were converted.
pub fn if_convert_all(f: &mut Function, machine: &MachineModel) -> usize {
    let mut n = 0;
    loop {
        let dom = DomTree::build(f);
        let Some(r) = find_regions(f, &dom, machine).into_iter().next() else { return n };
        if if_convert(f, &r, machine).is_err() {
            return n;
        }
        n += 1;
    }
}
