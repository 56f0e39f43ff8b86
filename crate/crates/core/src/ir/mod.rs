//! The predicated IR: functions made of blocks holding guarded instructions
//! over virtual registers, plus the phi and psi pseudo-operations.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

mod equiv;
mod parse;
mod print;
mod validate;

pub use equiv::{alpha_equivalent, structurally_equal};
pub use parse::{parse_function, parse_module, ParseError};
pub use print::{print_function, print_module};
pub use validate::{validate, validate_function, Diagnostic, Severity, ValidationMode};

/// A virtual register, indexing the owning function's variable table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub u32);

/// Index of a block inside its function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockId(pub u32);

impl BlockId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarKind {
    Value,
    Guard,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarData {
    pub name: String,
    pub kind: VarKind,
}

/// A guard register reference with polarity: `%p` or `!%p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Guard {
    pub var: Var,
    pub negated: bool,
}

impl Guard {
    pub fn pos(var: Var) -> Self {
        Guard { var, negated: false }
    }

    pub fn neg(var: Var) -> Self {
        Guard { var, negated: true }
    }

    pub fn inverted(self) -> Self {
        Guard { var: self.var, negated: !self.negated }
    }
}

/// Predicate attached to a psi argument: the constant TRUE or a guard.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pred {
    True,
    Guard(Guard),
}

impl Pred {
    pub fn guard(self) -> Option<Guard> {
        match self {
            Pred::True => None,
            Pred::Guard(g) => Some(g),
        }
    }

    pub fn var(self) -> Option<Var> {
        self.guard().map(|g| g.var)
    }
}

impl From<Option<Guard>> for Pred {
    fn from(g: Option<Guard>) -> Self {
        match g {
            None => Pred::True,
            Some(g) => Pred::Guard(g),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Opcode {
    Const,
    Mov,
    Add,
    Sub,
    Mul,
    Neg,
    CmpEq,
    CmpLt,
    CmpLe,
    And,
    Or,
    Not,
    Select,
    Load,
    Store,
}

impl Opcode {
    pub const ALL: [Opcode; 15] = [
        Opcode::Const,
        Opcode::Mov,
        Opcode::Add,
        Opcode::Sub,
        Opcode::Mul,
        Opcode::Neg,
        Opcode::CmpEq,
        Opcode::CmpLt,
        Opcode::CmpLe,
        Opcode::And,
        Opcode::Or,
        Opcode::Not,
        Opcode::Select,
        Opcode::Load,
        Opcode::Store,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Opcode::Const => "const",
            Opcode::Mov => "mov",
            Opcode::Add => "add",
            Opcode::Sub => "sub",
            Opcode::Mul => "mul",
            Opcode::Neg => "neg",
            Opcode::CmpEq => "cmp_eq",
            Opcode::CmpLt => "cmp_lt",
            Opcode::CmpLe => "cmp_le",
            Opcode::And => "and",
            Opcode::Or => "or",
            Opcode::Not => "not",
            Opcode::Select => "select",
            Opcode::Load => "load",
            Opcode::Store => "store",
        }
    }

    pub fn from_name(name: &str) -> Option<Opcode> {
        Opcode::ALL.iter().copied().find(|op| op.name() == name)
    }

    /// Number of operands the opcode takes.
    pub fn arity(self) -> usize {
        match self {
            Opcode::Const | Opcode::Mov | Opcode::Neg | Opcode::Not | Opcode::Load => 1,
            Opcode::Select => 3,
            _ => 2,
        }
    }

    pub fn is_cmp(self) -> bool {
        matches!(self, Opcode::CmpEq | Opcode::CmpLt | Opcode::CmpLe)
    }

    pub fn has_side_effects(self) -> bool {
        matches!(self, Opcode::Store)
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Operand {
    Var(Var),
    Imm(i64),
}

impl Operand {
    pub fn var(self) -> Option<Var> {
        match self {
            Operand::Var(v) => Some(v),
            Operand::Imm(_) => None,
        }
    }
}

/// An ordinary (possibly guarded) operation. `dst` is `None` only for stores.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpInst {
    pub guard: Option<Guard>,
    pub dst: Option<Var>,
    pub opcode: Opcode,
    pub operands: Vec<Operand>,
}

impl OpInst {
    pub fn new(dst: Var, opcode: Opcode, operands: Vec<Operand>) -> Self {
        OpInst { guard: None, dst: Some(dst), opcode, operands }
    }

    pub fn mov(guard: Option<Guard>, dst: Var, src: Var) -> Self {
        OpInst { guard, dst: Some(dst), opcode: Opcode::Mov, operands: alloc::vec![Operand::Var(src)] }
    }

    /// `x = mov y` with a register source.
    pub fn copy_source(&self) -> Option<Var> {
        if self.opcode == Opcode::Mov {
            self.operands[0].var()
        } else {
            None
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PsiArg {
    pub pred: Pred,
    pub value: Var,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PsiInst {
    pub guard: Option<Guard>,
    pub dst: Var,
    pub args: Vec<PsiArg>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Inst {
    Op(OpInst),
    Psi(PsiInst),
}

impl Inst {
    pub fn dst(&self) -> Option<Var> {
        match self {
            Inst::Op(op) => op.dst,
            Inst::Psi(psi) => Some(psi.dst),
        }
    }

    pub fn guard(&self) -> Option<Guard> {
        match self {
            Inst::Op(op) => op.guard,
            Inst::Psi(psi) => psi.guard,
        }
    }

    pub fn set_guard(&mut self, guard: Option<Guard>) {
        match self {
            Inst::Op(op) => op.guard = guard,
            Inst::Psi(psi) => psi.guard = guard,
        }
    }

    pub fn as_psi(&self) -> Option<&PsiInst> {
        match self {
            Inst::Psi(psi) => Some(psi),
            Inst::Op(_) => None,
        }
    }

    pub fn as_op(&self) -> Option<&OpInst> {
        match self {
            Inst::Op(op) => Some(op),
            Inst::Psi(_) => None,
        }
    }

    /// Every register read by the instruction, guard included.
    pub fn uses(&self) -> Vec<Var> {
        let mut out = Vec::new();
        if let Some(g) = self.guard() {
            out.push(g.var);
        }
        match self {
            Inst::Op(op) => out.extend(op.operands.iter().filter_map(|o| o.var())),
            Inst::Psi(psi) => {
                for arg in &psi.args {
                    if let Some(v) = arg.pred.var() {
                        out.push(v);
                    }
                    out.push(arg.value);
                }
            }
        }
        out
    }

    /// Rewrite every register read (not the definition).
    pub fn map_uses(&mut self, mut f: impl FnMut(Var) -> Var) {
        match self {
            Inst::Op(op) => {
                if let Some(g) = op.guard.as_mut() {
                    g.var = f(g.var);
                }
                for o in op.operands.iter_mut() {
                    if let Operand::Var(v) = o {
                        *v = f(*v);
                    }
                }
            }
            Inst::Psi(psi) => {
                if let Some(g) = psi.guard.as_mut() {
                    g.var = f(g.var);
                }
                for arg in psi.args.iter_mut() {
                    if let Pred::Guard(g) = &mut arg.pred {
                        g.var = f(g.var);
                    }
                    arg.value = f(arg.value);
                }
            }
        }
    }

    pub fn map_def(&mut self, f: impl FnOnce(Var) -> Var) {
        match self {
            Inst::Op(op) => {
                if let Some(d) = op.dst.as_mut() {
                    *d = f(*d);
                }
            }
            Inst::Psi(psi) => psi.dst = f(psi.dst),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhiInst {
    pub dst: Var,
    pub args: Vec<(BlockId, Var)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Terminator {
    Br { cond: Var, then_dest: BlockId, else_dest: BlockId },
    Goto(BlockId),
    Ret(Option<Var>),
}

impl Terminator {
    pub fn successors(&self) -> Vec<BlockId> {
        match *self {
            Terminator::Br { then_dest, else_dest, .. } => {
                if then_dest == else_dest {
                    alloc::vec![then_dest]
                } else {
                    alloc::vec![then_dest, else_dest]
                }
            }
            Terminator::Goto(b) => alloc::vec![b],
            Terminator::Ret(_) => Vec::new(),
        }
    }

    pub fn uses(&self) -> Option<Var> {
        match *self {
            Terminator::Br { cond, .. } => Some(cond),
            Terminator::Ret(v) => v,
            Terminator::Goto(_) => None,
        }
    }

    pub fn map_uses(&mut self, mut f: impl FnMut(Var) -> Var) {
        match self {
            Terminator::Br { cond, .. } => *cond = f(*cond),
            Terminator::Ret(Some(v)) => *v = f(*v),
            _ => {}
        }
    }

    pub fn map_targets(&mut self, mut f: impl FnMut(BlockId) -> BlockId) {
        match self {
            Terminator::Br { then_dest, else_dest, .. } => {
                *then_dest = f(*then_dest);
                *else_dest = f(*else_dest);
            }
            Terminator::Goto(b) => *b = f(*b),
            Terminator::Ret(_) => {}
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub name: String,
    pub phis: Vec<PhiInst>,
    pub insts: Vec<Inst>,
    pub term: Terminator,
}

impl Block {
    pub fn new(name: impl Into<String>, term: Terminator) -> Self {
        Block { name: name.into(), phis: Vec::new(), insts: Vec::new(), term }
    }
}

/// A function: parameters, blocks (the first one is the entry) and the
/// variable table naming every register.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Function {
    pub name: String,
    pub params: Vec<Var>,
    pub blocks: Vec<Block>,
    vars: Vec<VarData>,
    by_name: BTreeMap<String, Var>,
}

impl Function {
    pub fn new(name: impl Into<String>) -> Self {
        Function { name: name.into(), params: Vec::new(), blocks: Vec::new(), vars: Vec::new(), by_name: BTreeMap::new() }
    }

    pub fn entry(&self) -> BlockId {
        BlockId(0)
    }

    pub fn block(&self, b: BlockId) -> &Block {
        &self.blocks[b.index()]
    }

    pub fn block_mut(&mut self, b: BlockId) -> &mut Block {
        &mut self.blocks[b.index()]
    }

    pub fn block_ids(&self) -> impl Iterator<Item = BlockId> + '_ {
        (0..self.blocks.len() as u32).map(BlockId)
    }

    pub fn block_by_name(&self, name: &str) -> Option<BlockId> {
        self.blocks.iter().position(|b| b.name == name).map(|i| BlockId(i as u32))
    }

    pub fn add_block(&mut self, block: Block) -> BlockId {
        self.blocks.push(block);
        BlockId(self.blocks.len() as u32 - 1)
    }

    pub fn var_count(&self) -> usize {
        self.vars.len()
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        (0..self.vars.len() as u32).map(Var)
    }

    pub fn var_name(&self, v: Var) -> &str {
        &self.vars[v.0 as usize].name
    }

    pub fn var_kind(&self, v: Var) -> VarKind {
        self.vars[v.0 as usize].kind
    }

    pub fn set_var_kind(&mut self, v: Var, kind: VarKind) {
        self.vars[v.0 as usize].kind = kind;
    }

    pub fn is_guard(&self, v: Var) -> bool {
        self.var_kind(v) == VarKind::Guard
    }

    pub fn lookup(&self, name: &str) -> Option<Var> {
        self.by_name.get(name).copied()
    }

    /// Returns the variable called `name`, creating it with `kind` if absent.
    pub fn intern(&mut self, name: &str, kind: VarKind) -> Var {
        if let Some(v) = self.lookup(name) {
            return v;
        }
        let v = Var(self.vars.len() as u32);
        self.vars.push(VarData { name: String::from(name), kind });
        self.by_name.insert(String::from(name), v);
        v
    }

    /// Creates a new variable named after `base` (`base.N` with the
    /// smallest unused N).
    pub fn fresh_var(&mut self, base: &str, kind: VarKind) -> Var {
        let stem = match base.rfind('.') {
            Some(i) if base[i + 1..].bytes().all(|c| c.is_ascii_digit()) && i + 1 < base.len() => &base[..i],
            _ => base,
        };
        let mut n = 1usize;
        loop {
            let name = format!("{stem}.{n}");
            if self.lookup(&name).is_none() {
                return self.intern(&name, kind);
            }
            n += 1;
        }
    }

    /// Fresh variable with the same kind as `like`, named after it.
    pub fn fresh_like(&mut self, like: Var) -> Var {
        let name = String::from(self.var_name(like));
        let kind = self.var_kind(like);
        self.fresh_var(&name, kind)
    }

    /// Renames a variable. Fails if the new name is taken by another variable.
    pub fn rename_var(&mut self, v: Var, name: &str) -> bool {
        match self.lookup(name) {
            Some(existing) if existing != v => false,
            Some(_) => true,
            None => {
                let old = core::mem::replace(&mut self.vars[v.0 as usize].name, String::from(name));
                self.by_name.remove(&old);
                self.by_name.insert(String::from(name), v);
                true
            }
        }
    }

    /// CFG predecessors for every block, in block order and without
    /// duplicates.
    pub fn predecessors(&self) -> Vec<Vec<BlockId>> {
        let mut preds = alloc::vec![Vec::new(); self.blocks.len()];
        for b in self.block_ids() {
            for s in self.block(b).term.successors() {
                let list: &mut Vec<BlockId> = &mut preds[s.index()];
                if !list.contains(&b) {
                    list.push(b);
                }
            }
        }
        preds
    }

    pub fn successors(&self, b: BlockId) -> Vec<BlockId> {
        self.block(b).term.successors()
    }

    /// Removes the given blocks, remapping every block reference. Phi
    /// arguments flowing from removed blocks are dropped.
    pub fn remove_blocks(&mut self, dead: &[BlockId]) {
        if dead.is_empty() {
            return;
        }
        assert!(!dead.contains(&self.entry()), "cannot remove the entry block");
        let mut remap: Vec<Option<BlockId>> = Vec::with_capacity(self.blocks.len());
        let mut next = 0u32;
        for b in self.block_ids() {
            if dead.contains(&b) {
                remap.push(None);
            } else {
                remap.push(Some(BlockId(next)));
                next += 1;
            }
        }
        let old = core::mem::take(&mut self.blocks);
        for (i, mut block) in old.into_iter().enumerate() {
            if remap[i].is_none() {
                continue;
            }
            block.term.map_targets(|t| remap[t.index()].expect("edge into a removed block"));
            for phi in block.phis.iter_mut() {
                phi.args.retain(|(p, _)| remap[p.index()].is_some());
                for (p, _) in phi.args.iter_mut() {
                    *p = remap[p.index()].unwrap();
                }
            }
            self.blocks.push(block);
        }
    }

    /// Applies `f` to every register read in the function (phi arguments,
    /// instruction operands, guards, psi arguments and terminators).
    pub fn map_all_uses(&mut self, mut f: impl FnMut(Var) -> Var) {
        for block in self.blocks.iter_mut() {
            for phi in block.phis.iter_mut() {
                for (_, v) in phi.args.iter_mut() {
                    *v = f(*v);
                }
            }
            for inst in block.insts.iter_mut() {
                inst.map_uses(&mut f);
            }
            block.term.map_uses(&mut f);
        }
    }

    /// Number of register-to-register `mov` instructions.
    pub fn copy_count(&self) -> usize {
        self.blocks.iter().flat_map(|b| b.insts.iter()).filter(|i| matches!(i, Inst::Op(op) if op.copy_source().is_some())).count()
    }

    pub fn has_psi(&self) -> bool {
        self.blocks.iter().any(|b| b.insts.iter().any(|i| matches!(i, Inst::Psi(_))))
    }

    pub fn has_phi(&self) -> bool {
        self.blocks.iter().any(|b| !b.phis.is_empty())
    }

    /// Location of the psi defining `dst`.
    pub fn find_psi(&self, dst: Var) -> Option<(BlockId, usize)> {
        for b in self.block_ids() {
            for (i, inst) in self.block(b).insts.iter().enumerate() {
                if let Inst::Psi(psi) = inst {
                    if psi.dst == dst {
                        return Some((b, i));
                    }
                }
            }
        }
        None
    }

    pub fn psi(&self, dst: Var) -> Option<&PsiInst> {
        let (b, i) = self.find_psi(dst)?;
        self.block(b).insts[i].as_psi()
    }

    pub fn psi_mut(&mut self, dst: Var) -> Option<&mut PsiInst> {
        let (b, i) = self.find_psi(dst)?;
        match &mut self.block_mut(b).insts[i] {
            Inst::Psi(psi) => Some(psi),
            Inst::Op(_) => None,
        }
    }

    /// Result variables of every psi, in block order.
    pub fn psi_results(&self) -> Vec<Var> {
        self.blocks.iter().flat_map(|b| b.insts.iter()).filter_map(|i| i.as_psi().map(|p| p.dst)).collect()
    }
}

/// An ordered collection of functions with unique names.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Module {
    pub functions: Vec<Function>,
}

impl Module {
    pub fn function(&self, name: &str) -> Option<&Function> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn function_mut(&mut self, name: &str) -> Option<&mut Function> {
        self.functions.iter_mut().find(|f| f.name == name)
    }
}
