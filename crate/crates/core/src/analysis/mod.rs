//! Dominators, definition sites, liveness under the psi rule, and
//! interference.

use alloc::vec;
use alloc::vec::Vec;

mod bitset;
mod dom;
mod interference;
mod liveness;

pub use bitset::VarSet;
pub use dom::DomTree;
pub use interference::{interference_graph, InterferenceGraph};
pub use liveness::{liveness, psi_arg_use_points, LivenessInfo};

use crate::ir::{BlockId, Function, Guard, Inst, Var};
use crate::predicates::{domain_union, GuardEnv, PredExpr};

/// A program point. Parameters and phis sit at index 0 of their block, the
/// i-th body instruction at `i + 1`, the terminator after the last one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub block: BlockId,
    pub idx: usize,
}

impl Pos {
    pub fn inst(block: BlockId, i: usize) -> Pos {
        Pos { block, idx: i + 1 }
    }

    pub fn head(block: BlockId) -> Pos {
        Pos { block, idx: 0 }
    }

    pub fn term(f: &Function, block: BlockId) -> Pos {
        Pos { block, idx: f.block(block).insts.len() + 1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DefKind {
    Param,
    Phi(usize),
    Inst(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DefSite {
    pub block: BlockId,
    pub kind: DefKind,
}

impl DefSite {
    pub fn pos(&self) -> Pos {
        match self.kind {
            DefKind::Param | DefKind::Phi(_) => Pos::head(self.block),
            DefKind::Inst(i) => Pos::inst(self.block, i),
        }
    }

    pub fn inst<'a>(&self, f: &'a Function) -> Option<&'a Inst> {
        match self.kind {
            DefKind::Inst(i) => Some(&f.block(self.block).insts[i]),
            _ => None,
        }
    }

    /// Guard on the defining instruction (psi guards included).
    pub fn guard(&self, f: &Function) -> Option<Guard> {
        self.inst(f).and_then(|i| i.guard())
    }

    pub fn is_psi(&self, f: &Function) -> bool {
        matches!(self.inst(f), Some(Inst::Psi(_)))
    }
}

/// Every definition site of every variable.
#[derive(Clone, Debug)]
pub struct DefMap {
    defs: Vec<Vec<DefSite>>,
}

impl DefMap {
    pub fn build(f: &Function) -> DefMap {
        let mut defs = vec![Vec::new(); f.var_count()];
        for &p in &f.params {
            defs[p.0 as usize].push(DefSite { block: f.entry(), kind: DefKind::Param });
        }
        for b in f.block_ids() {
            let block = f.block(b);
            for (i, phi) in block.phis.iter().enumerate() {
                defs[phi.dst.0 as usize].push(DefSite { block: b, kind: DefKind::Phi(i) });
            }
            for (i, inst) in block.insts.iter().enumerate() {
                if let Some(d) = inst.dst() {
                    defs[d.0 as usize].push(DefSite { block: b, kind: DefKind::Inst(i) });
                }
            }
        }
        DefMap { defs }
    }

    pub fn all(&self, v: Var) -> &[DefSite] {
        self.defs.get(v.0 as usize).map_or(&[], |d| d.as_slice())
    }

    /// The unique definition of `v`, if it has exactly one.
    pub fn single(&self, v: Var) -> Option<DefSite> {
        match self.all(v) {
            [d] => Some(*d),
            _ => None,
        }
    }

    pub fn pos(&self, v: Var) -> Option<Pos> {
        self.single(v).map(|d| d.pos())
    }

    /// Definition point used for psi ordering: psi-defined variables are
    /// resolved through their first argument down to a non-psi definition.
    pub fn resolved_pos(&self, f: &Function, v: Var) -> Option<Pos> {
        let mut cur = v;
        for _ in 0..=f.var_count() {
            let d = self.single(cur)?;
            match d.inst(f) {
                Some(Inst::Psi(psi)) => cur = psi.args[0].value,
                _ => return Some(d.pos()),
            }
        }
        None
    }
}

/// Predicate under which `v` holds a value: the guard of its definition,
/// narrowed for a psi to the union of its argument predicates (elsewhere
/// the psi traps). Parameters and phis count as TRUE.
pub fn def_domain(f: &Function, defs: &DefMap, env: &GuardEnv, v: Var) -> PredExpr {
    let Some(d) = defs.single(v) else { return PredExpr::True };
    let g = env.opt_guard(d.guard(f));
    match d.inst(f) {
        Some(Inst::Psi(psi)) => {
            let preds: Vec<PredExpr> = psi.args.iter().map(|a| env.pred(a.pred)).collect();
            g.and(domain_union(&preds))
        }
        _ => g,
    }
}
