use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::{Function, Inst, Module, Opcode, Operand, Pred, Terminator, Var, VarKind};
use crate::analysis::{DefKind, DefMap, DomTree, Pos};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValidationMode {
    NonSsa,
    Ssa,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub function: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{level}: @{}: {}", self.function, self.message)
    }
}

pub fn validate(m: &Module, mode: ValidationMode) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for (i, f) in m.functions.iter().enumerate() {
        if m.functions[..i].iter().any(|g| g.name == f.name) {
            out.push(Diagnostic { severity: Severity::Error, function: f.name.clone(), message: String::from("duplicate function name") });
        }
        out.extend(validate_function(f, mode));
    }
    out
}

struct Checker<'a> {
    f: &'a Function,
    out: Vec<Diagnostic>,
}

impl Checker<'_> {
    fn error(&mut self, message: String) {
        self.out.push(Diagnostic { severity: Severity::Error, function: self.f.name.clone(), message });
    }

    fn warn(&mut self, message: String) {
        self.out.push(Diagnostic { severity: Severity::Warning, function: self.f.name.clone(), message });
    }

    fn name(&self, v: Var) -> &str {
        self.f.var_name(v)
    }

    fn guard_use(&mut self, v: Var, what: &str, block: &str) {
        if self.f.var_kind(v) != VarKind::Guard {
            let msg = format!("value register %{} used as {what} in block {block}", self.name(v));
            self.error(msg);
        }
    }
}

/// Structural checks, plus single assignment and dominance of uses in
/// [`ValidationMode::Ssa`]. Unreachable blocks only produce a warning.
pub fn validate_function(f: &Function, mode: ValidationMode) -> Vec<Diagnostic> {
    let mut c = Checker { f, out: Vec::new() };
    if f.blocks.is_empty() {
        c.error(String::from("function has no blocks"));
        return c.out;
    }
    let nblocks = f.blocks.len();
    let preds = f.predecessors();
    for (i, b) in f.blocks.iter().enumerate() {
        if f.blocks[..i].iter().any(|o| o.name == b.name) {
            c.error(format!("duplicate block name {}", b.name));
        }
    }
    for b in f.block_ids() {
        let block = f.block(b);
        let mut targets = Vec::new();
        match block.term {
            Terminator::Br { then_dest, else_dest, .. } => targets.extend([then_dest, else_dest]),
            Terminator::Goto(t) => targets.push(t),
            Terminator::Ret(_) => {}
        }
        for t in targets {
            if t.index() >= nblocks {
                c.error(format!("block {} branches to a missing block", block.name));
            } else if t == f.entry() {
                c.error(format!("block {} branches to the entry block", block.name));
            }
        }
        if let Terminator::Br { cond, .. } = block.term {
            c.guard_use(cond, "branch condition", &block.name);
        }
        for phi in &block.phis {
            let mut seen = Vec::new();
            for (p, _) in &phi.args {
                if seen.contains(p) {
                    c.error(format!("phi %{} lists predecessor {} twice", c.name(phi.dst), f.block(*p).name));
                }
                seen.push(*p);
                if p.index() >= nblocks || !preds[b.index()].contains(p) {
                    c.error(format!(
                        "phi %{} names {} which is not a predecessor",
                        c.name(phi.dst),
                        f.blocks.get(p.index()).map_or("?", |x| x.name.as_str())
                    ));
                }
            }
            if phi.args.len() != preds[b.index()].len() {
                c.error(format!(
                    "phi %{} has {} arguments but block {} has {} predecessors",
                    c.name(phi.dst),
                    phi.args.len(),
                    block.name,
                    preds[b.index()].len()
                ));
            }
        }
        for inst in &block.insts {
            if let Some(g) = inst.guard() {
                c.guard_use(g.var, "instruction guard", &block.name);
            }
            match inst {
                Inst::Psi(psi) => {
                    if psi.args.is_empty() {
                        c.error(format!("psi %{} has no arguments", c.name(psi.dst)));
                    }
                    for arg in &psi.args {
                        if let Pred::Guard(g) = arg.pred {
                            c.guard_use(g.var, "psi predicate", &block.name);
                        }
                        if f.var_kind(arg.value) != f.var_kind(psi.dst) {
                            c.error(format!("psi %{} mixes guard and value arguments", c.name(psi.dst)));
                        }
                    }
                }
                Inst::Op(op) => {
                    if op.operands.len() != op.opcode.arity() {
                        c.error(format!("{} with {} operands in block {}", op.opcode, op.operands.len(), block.name));
                        continue;
                    }
                    if (op.opcode == Opcode::Store) != op.dst.is_none() {
                        c.error(format!("{} in block {} has a malformed destination", op.opcode, block.name));
                    }
                    if op.opcode == Opcode::Select {
                        match op.operands[0] {
                            Operand::Var(v) => c.guard_use(v, "select condition", &block.name),
                            Operand::Imm(_) => c.error(format!("select condition in block {} is a literal", block.name)),
                        }
                    }
                    if let Some(d) = op.dst {
                        let kind = f.var_kind(d);
                        let guard_only = op.opcode.is_cmp();
                        let value_only = matches!(op.opcode, Opcode::Add | Opcode::Sub | Opcode::Mul | Opcode::Neg | Opcode::Select);
                        if guard_only && kind != VarKind::Guard {
                            c.error(format!("comparison result %{} must be a guard", c.name(d)));
                        }
                        if value_only && kind == VarKind::Guard {
                            c.error(format!("guard %{} defined by {}", c.name(d), op.opcode));
                        }
                    }
                }
            }
        }
    }
    if c.out.iter().any(|d| d.severity == Severity::Error) {
        return c.out;
    }

    let dom = DomTree::build(f);
    for b in f.block_ids() {
        if !dom.is_reachable(b) {
            c.warn(format!("block {} is unreachable", f.block(b).name));
        }
    }
    let defs = DefMap::build(f);
    for v in f.vars() {
        if defs.all(v).is_empty() && uses_anywhere(f, v) {
            c.error(format!("%{} is used but never defined", c.name(v)));
        }
    }
    if mode == ValidationMode::NonSsa {
        return c.out;
    }

    for v in f.vars() {
        if defs.all(v).len() > 1 {
            c.error(format!("multiple definitions of %{}", c.name(v)));
        }
    }
    if c.out.iter().any(|d| d.severity == Severity::Error) {
        return c.out;
    }
    let dominated = |v: Var, at: Pos| -> bool {
        match defs.single(v) {
            None => true,
            Some(d) => match d.kind {
                DefKind::Param => true,
                // Phi results are available from the block head on.
                DefKind::Phi(_) => dom.dominates(d.block, at.block),
                DefKind::Inst(_) => dom.strictly_dominates_pos(d.pos(), at),
            },
        }
    };
    for b in f.block_ids() {
        if !dom.is_reachable(b) {
            continue;
        }
        let block = f.block(b);
        for phi in &block.phis {
            for (p, v) in &phi.args {
                if dom.is_reachable(*p) && !dominated(*v, Pos::term(f, *p)) {
                    c.error(format!(
                        "phi %{} argument %{} is not available at the end of {}",
                        c.name(phi.dst),
                        c.name(*v),
                        f.block(*p).name
                    ));
                }
            }
        }
        for (i, inst) in block.insts.iter().enumerate() {
            let at = Pos::inst(b, i);
            for u in inst.uses() {
                if !dominated(u, at) {
                    let what = match inst.dst() {
                        Some(d) => format!("definition of %{}", c.name(d)),
                        None => format!("instruction {} of {}", i, block.name),
                    };
                    c.error(format!("use of %{} in {what} is not dominated by its definition", c.name(u)));
                }
            }
        }
        if let Some(u) = block.term.uses() {
            if !dominated(u, Pos::term(f, b)) {
                c.error(format!("use of %{} in the terminator of {} is not dominated by its definition", c.name(u), block.name));
            }
        }
    }
    c.out
}

fn uses_anywhere(f: &Function, v: Var) -> bool {
    f.blocks.iter().any(|b| {
        b.phis.iter().any(|p| p.args.iter().any(|(_, a)| *a == v))
            || b.insts.iter().any(|i| i.uses().contains(&v))
            || b.term.uses() == Some(v)
    })
}
