//! Reference semantics for every program form, SSA or not.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::ir::{Function, Guard, Inst, Opcode, Operand, Pred, Terminator, Var, VarKind};

mod diff;
mod gen;

pub use diff::{differential_check, input_vectors, DiffReport, InputVector, Mismatch, MEMORY_CELLS};
pub use gen::{gen_random_program, gen_random_source, Profile};

pub const DEFAULT_BUDGET: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Value {
    Int(i64),
    Bool(bool),
}

impl Value {
    pub fn as_int(self) -> i64 {
        match self {
            Value::Int(n) => n,
            Value::Bool(b) => b as i64,
        }
    }

    pub fn as_bool(self) -> bool {
        match self {
            Value::Int(n) => n != 0,
            Value::Bool(b) => b,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Trap {
    UndefinedRead,
    PsiNoneTrue,
    StepBudgetExhausted,
    OutOfBoundsMemory,
}

impl fmt::Display for Trap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Trap::UndefinedRead => "undefined read",
            Trap::PsiNoneTrue => "psi with no true predicate",
            Trap::StepBudgetExhausted => "step budget exhausted",
            Trap::OutOfBoundsMemory => "out-of-bounds memory access",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Return(Option<i64>),
    Trap(Trap),
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Return(Some(v)) => write!(f, "ret {v}"),
            Outcome::Return(None) => f.write_str("ret"),
            Outcome::Trap(t) => write!(f, "trap: {t}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecResult {
    pub outcome: Outcome,
    /// Memory contents when execution stopped.
    pub memory: Vec<i64>,
    pub steps: u64,
}

impl ExecResult {
    pub fn value(&self) -> Option<i64> {
        match self.outcome {
            Outcome::Return(v) => v,
            Outcome::Trap(_) => None,
        }
    }

    pub fn trap(&self) -> Option<Trap> {
        match self.outcome {
            Outcome::Trap(t) => Some(t),
            Outcome::Return(_) => None,
        }
    }
}

struct Machine<'a> {
    f: &'a Function,
    env: Vec<Option<Value>>,
    memory: Vec<i64>,
    steps: u64,
    budget: u64,
}

impl Machine<'_> {
    fn read(&self, v: Var) -> Result<Value, Trap> {
        self.env[v.0 as usize].ok_or(Trap::UndefinedRead)
    }

    fn operand(&self, o: Operand) -> Result<Value, Trap> {
        match o {
            Operand::Imm(n) => Ok(Value::Int(n)),
            Operand::Var(v) => self.read(v),
        }
    }

    fn guard(&self, g: Guard) -> Result<bool, Trap> {
        Ok(self.read(g.var)?.as_bool() != g.negated)
    }

    fn tick(&mut self) -> Result<(), Trap> {
        if self.steps >= self.budget {
            return Err(Trap::StepBudgetExhausted);
        }
        self.steps += 1;
        Ok(())
    }

    fn address(&self, o: Operand) -> Result<usize, Trap> {
        let a = self.operand(o)?.as_int();
        if a < 0 || a as usize >= self.memory.len() {
            return Err(Trap::OutOfBoundsMemory);
        }
        Ok(a as usize)
    }

    fn exec(&mut self, inst: &Inst) -> Result<(), Trap> {
        self.tick()?;
        if let Some(g) = inst.guard() {
            if !self.guard(g)? {
                return Ok(());
            }
        }
        match inst {
            Inst::Psi(psi) => {
                for arg in psi.args.iter().rev() {
                    let holds = match arg.pred {
                        Pred::True => true,
                        Pred::Guard(g) => self.guard(g)?,
                    };
                    if holds {
                        let v = self.read(arg.value)?;
                        self.env[psi.dst.0 as usize] = Some(v);
                        return Ok(());
                    }
                }
                Err(Trap::PsiNoneTrue)
            }
            Inst::Op(op) => {
                if op.opcode == Opcode::Store {
                    let a = self.address(op.operands[0])?;
                    let v = self.operand(op.operands[1])?.as_int();
                    self.memory[a] = v;
                    return Ok(());
                }
                let dst = op.dst.expect("non-store without destination");
                let logical = self.f.var_kind(dst) == VarKind::Guard;
                let x = |m: &Self, i: usize| m.operand(op.operands[i]);
                let v = match op.opcode {
                    Opcode::Const => {
                        let n = x(self, 0)?.as_int();
                        if logical {
                            Value::Bool(n != 0)
                        } else {
                            Value::Int(n)
                        }
                    }
                    Opcode::Mov => x(self, 0)?,
                    Opcode::Add => Value::Int(x(self, 0)?.as_int().wrapping_add(x(self, 1)?.as_int())),
                    Opcode::Sub => Value::Int(x(self, 0)?.as_int().wrapping_sub(x(self, 1)?.as_int())),
                    Opcode::Mul => Value::Int(x(self, 0)?.as_int().wrapping_mul(x(self, 1)?.as_int())),
                    Opcode::Neg => Value::Int(x(self, 0)?.as_int().wrapping_neg()),
                    Opcode::CmpEq => Value::Bool(x(self, 0)?.as_int() == x(self, 1)?.as_int()),
                    Opcode::CmpLt => Value::Bool(x(self, 0)?.as_int() < x(self, 1)?.as_int()),
                    Opcode::CmpLe => Value::Bool(x(self, 0)?.as_int() <= x(self, 1)?.as_int()),
                    Opcode::And if logical => Value::Bool(x(self, 0)?.as_bool() && x(self, 1)?.as_bool()),
                    Opcode::Or if logical => Value::Bool(x(self, 0)?.as_bool() || x(self, 1)?.as_bool()),
                    Opcode::Not if logical => Value::Bool(!x(self, 0)?.as_bool()),
                    Opcode::And => Value::Int(x(self, 0)?.as_int() & x(self, 1)?.as_int()),
                    Opcode::Or => Value::Int(x(self, 0)?.as_int() | x(self, 1)?.as_int()),
                    Opcode::Not => Value::Int(!x(self, 0)?.as_int()),
                    Opcode::Select => {
                        if x(self, 0)?.as_bool() {
                            x(self, 1)?
                        } else {
                            x(self, 2)?
                        }
                    }
                    Opcode::Load => {
                        let a = self.address(op.operands[0])?;
                        Value::Int(self.memory[a])
                    }
                    Opcode::Store => unreachable!(),
                };
                self.env[dst.0 as usize] = Some(v);
                Ok(())
            }
        }
    }

    fn run(&mut self, args: &[i64]) -> Result<Option<i64>, Trap> {
        let f = self.f;
        for (p, a) in f.params.iter().zip(args) {
            let v = if f.is_guard(*p) { Value::Bool(*a != 0) } else { Value::Int(*a) };
            self.env[p.0 as usize] = Some(v);
        }
        let mut cur = f.entry();
        let mut prev = None;
        loop {
            let block = f.block(cur);
            if let Some(from) = prev {
                // Phis read their arguments in parallel; undefined values
                // propagate and only trap when used.
                let incoming: Vec<Option<Value>> = block
                    .phis
                    .iter()
                    .map(|phi| phi.args.iter().find(|(b, _)| *b == from).and_then(|(_, v)| self.env[v.0 as usize]))
                    .collect();
                for (phi, v) in block.phis.iter().zip(incoming) {
                    self.tick()?;
                    self.env[phi.dst.0 as usize] = v;
                }
            }
            for inst in &block.insts {
                self.exec(inst)?;
            }
            self.tick()?;
            match block.term {
                Terminator::Ret(None) => return Ok(None),
                Terminator::Ret(Some(v)) => return Ok(Some(self.read(v)?.as_int())),
                Terminator::Goto(t) => {
                    prev = Some(cur);
                    cur = t;
                }
                Terminator::Br { cond, then_dest, else_dest } => {
                    let c = self.read(cond)?.as_bool();
                    prev = Some(cur);
                    cur = if c { then_dest } else { else_dest };
                }
            }
        }
    }
}

/// Runs `f` on the given arguments (guard parameters read them as
/// booleans) and memory image.
pub fn eval(f: &Function, args: &[i64], mem: &[i64], budget: u64) -> ExecResult {
    assert_eq!(args.len(), f.params.len(), "argument count mismatch for @{}", f.name);
    let mut m = Machine { f, env: vec![None; f.var_count()], memory: mem.to_vec(), steps: 0, budget };
    let outcome = match m.run(args) {
        Ok(v) => Outcome::Return(v),
        Err(t) => Outcome::Trap(t),
    };
    ExecResult { outcome, memory: m.memory, steps: m.steps }
}
