use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::SsaForm;
use crate::analysis::{DomTree, VarSet};
use crate::ir::{
    validate_function, BlockId, Diagnostic, Function, Inst, OpInst, Opcode, Operand, PhiInst, Pred, PsiArg, PsiInst, Severity,
    ValidationMode, Var,
};

/// Removes blocks not reachable from the entry; returns their names.
pub fn remove_unreachable(f: &mut Function) -> Vec<alloc::string::String> {
    let dom = DomTree::build(f);
    let dead: Vec<BlockId> = f.block_ids().filter(|b| !dom.is_reachable(*b)).collect();
    let names = dead.iter().map(|b| f.block(*b).name.clone()).collect();
    f.remove_blocks(&dead);
    names
}

/// Liveness of the non-SSA program: a guarded definition both reads and
/// writes its destination, since the old value survives a false guard.
fn classic_live_in(f: &Function) -> Vec<VarSet> {
    let n = f.blocks.len();
    let mut gen = vec![VarSet::default(); n];
    let mut kill = vec![VarSet::default(); n];
    for b in f.block_ids() {
        let block = f.block(b);
        let (g, k) = (&mut gen[b.index()], &mut kill[b.index()]);
        for phi in &block.phis {
            k.insert(phi.dst);
        }
        for inst in &block.insts {
            for u in inst.uses() {
                if !k.contains(u) {
                    g.insert(u);
                }
            }
            if let Some(d) = inst.dst() {
                if inst.guard().is_some() {
                    if !k.contains(d) {
                        g.insert(d);
                    }
                } else {
                    k.insert(d);
                }
            }
        }
        if let Some(u) = block.term.uses() {
            if !k.contains(u) {
                g.insert(u);
            }
        }
    }
    let mut live_in = vec![VarSet::default(); n];
    let mut changed = true;
    while changed {
        changed = false;
        for b in (0..n).rev().map(|i| BlockId(i as u32)) {
            let mut out = VarSet::default();
            for s in f.successors(b) {
                out.union_with(&live_in[s.index()]);
            }
            let mut inn = gen[b.index()].clone();
            for v in out.iter() {
                if !kill[b.index()].contains(v) {
                    inn.insert(v);
                }
            }
            if inn != live_in[b.index()] {
                live_in[b.index()] = inn;
                changed = true;
            }
        }
    }
    live_in
}

struct Renamer<'a> {
    f: &'a mut Function,
    dom: &'a DomTree,
    stacks: Vec<Vec<Var>>,
    /// Original variable of each placed phi, per block.
    phi_origin: Vec<Vec<Var>>,
    /// Whether an original variable already used its own name for a def.
    named: Vec<bool>,
    undef: BTreeMap<Var, Var>,
    original_count: usize,
}

impl Renamer<'_> {
    fn new_name(&mut self, v: Var) -> Var {
        if !self.named[v.0 as usize] {
            self.named[v.0 as usize] = true;
            v
        } else {
            self.f.fresh_like(v)
        }
    }

    fn current(&mut self, v: Var) -> Var {
        if v.0 as usize >= self.original_count {
            return v;
        }
        if let Some(&top) = self.stacks[v.0 as usize].last() {
            return top;
        }
        if let Some(&u) = self.undef.get(&v) {
            return u;
        }
        let u = self.f.fresh_like(v);
        self.undef.insert(v, u);
        u
    }

    fn rename_block(&mut self, b: BlockId) {
        let mut pushed: Vec<Var> = Vec::new();
        let origins = self.phi_origin[b.index()].clone();
        for (i, orig) in origins.iter().enumerate() {
            let n = self.new_name(*orig);
            self.f.block_mut(b).phis[i].dst = n;
            self.stacks[orig.0 as usize].push(n);
            pushed.push(*orig);
        }
        let insts = core::mem::take(&mut self.f.block_mut(b).insts);
        let mut out = Vec::with_capacity(insts.len());
        for mut inst in insts {
            inst.map_uses(|u| self.current(u));
            let Some(d) = inst.dst() else {
                out.push(inst);
                continue;
            };
            match inst.guard() {
                Some(g) => {
                    // p? x = op  becomes  p? x1 = op; x2 = psi(1 ? x0, p ? x1)
                    let before = self.current(d);
                    let def = self.new_name(d);
                    inst.map_def(|_| def);
                    out.push(inst);
                    let merged = self.f.fresh_like(d);
                    out.push(Inst::Psi(PsiInst {
                        guard: None,
                        dst: merged,
                        args: vec![PsiArg { pred: Pred::True, value: before }, PsiArg { pred: Pred::Guard(g), value: def }],
                    }));
                    self.stacks[d.0 as usize].push(merged);
                    pushed.push(d);
                }
                None => {
                    let n = self.new_name(d);
                    inst.map_def(|_| n);
                    out.push(inst);
                    self.stacks[d.0 as usize].push(n);
                    pushed.push(d);
                }
            }
        }
        self.f.block_mut(b).insts = out;
        let mut term = self.f.block(b).term.clone();
        term.map_uses(|u| self.current(u));
        self.f.block_mut(b).term = term;
        for s in self.f.successors(b) {
            let origins = self.phi_origin[s.index()].clone();
            for (i, orig) in origins.iter().enumerate() {
                let cur = self.current(*orig);
                self.f.block_mut(s).phis[i].args.push((b, cur));
            }
        }
        let children = self.dom.children(b).to_vec();
        for c in children {
            self.rename_block(c);
        }
        for v in pushed {
            self.stacks[v.0 as usize].pop();
        }
    }
}

/// Builds pruned SSA form: phis at iterated dominance frontiers where the
/// variable is live, every definition renamed, and each guarded definition
/// `p? x = e` merged with the previous value through
/// `x' = psi(1 ? x, p ? x'')`. A function that already validates as SSA is
/// returned unchanged. Reads with no reaching definition get a `const 0`
/// definition at the top of the entry block.
pub fn construct_ssa(f: &Function) -> SsaForm {
    let mut f = f.clone();
    let mut diagnostics = Vec::new();
    for name in remove_unreachable(&mut f) {
        diagnostics.push(Diagnostic {
            severity: Severity::Warning,
            function: f.name.clone(),
            message: format!("removed unreachable block {name}"),
        });
    }
    let already = validate_function(&f, ValidationMode::Ssa).iter().all(|d| d.severity != Severity::Error);
    if already {
        let psi_present = f.has_psi();
        return SsaForm { function: f, is_ssa: true, psi_present, diagnostics };
    }

    if f.has_phi() {
        diagnostics.push(Diagnostic {
            severity: Severity::Error,
            function: f.name.clone(),
            message: "cannot build SSA form: function has phis but is not in SSA form".into(),
        });
        return SsaForm { function: f, is_ssa: false, psi_present: false, diagnostics };
    }

    let dom = DomTree::build(&f);
    let df = dom.frontiers(&f);
    let live_in = classic_live_in(&f);
    let original_count = f.var_count();
    let mut def_blocks: Vec<Vec<BlockId>> = vec![Vec::new(); original_count];
    for b in f.block_ids() {
        let block = f.block(b);
        for d in block.phis.iter().map(|p| p.dst).chain(block.insts.iter().filter_map(|i| i.dst())) {
            if !def_blocks[d.0 as usize].contains(&b) {
                def_blocks[d.0 as usize].push(b);
            }
        }
    }
    for &p in &f.params {
        if !def_blocks[p.0 as usize].contains(&f.entry()) {
            def_blocks[p.0 as usize].push(f.entry());
        }
    }
    let mut phi_origin: Vec<Vec<Var>> = vec![Vec::new(); f.blocks.len()];
    for v in 0..original_count {
        let v = Var(v as u32);
        let mut work = def_blocks[v.0 as usize].clone();
        let mut has_phi: Vec<bool> = vec![false; f.blocks.len()];
        let mut queued: Vec<bool> = vec![false; f.blocks.len()];
        for b in &work {
            queued[b.index()] = true;
        }
        while let Some(b) = work.pop() {
            for &y in &df[b.index()] {
                if has_phi[y.index()] || !live_in[y.index()].contains(v) {
                    continue;
                }
                has_phi[y.index()] = true;
                phi_origin[y.index()].push(v);
                if !queued[y.index()] {
                    queued[y.index()] = true;
                    work.push(y);
                }
            }
        }
    }
    for (block, origins) in f.blocks.iter_mut().zip(&phi_origin) {
        block.phis = origins.iter().map(|v| PhiInst { dst: *v, args: Vec::new() }).collect();
    }
    let mut named = vec![false; original_count];
    for &p in &f.params {
        named[p.0 as usize] = true;
    }
    let mut stacks = vec![Vec::new(); original_count];
    for &p in &f.params {
        stacks[p.0 as usize].push(p);
    }
    let mut r = Renamer { f: &mut f, dom: &dom, stacks, phi_origin, named, undef: BTreeMap::new(), original_count };
    r.rename_block(dom.preorder()[0]);
    let undef = core::mem::take(&mut r.undef);
    let entry = f.entry();
    let inits: Vec<Inst> = undef
        .values()
        .map(|u| Inst::Op(OpInst { guard: None, dst: Some(*u), opcode: Opcode::Const, operands: vec![Operand::Imm(0)] }))
        .collect();
    f.block_mut(entry).insts.splice(0..0, inits);
    let psi_present = f.has_psi();
    SsaForm { function: f, is_ssa: true, psi_present, diagnostics }
}
