//! What the target can predicate and what it may execute speculatively.

use core::fmt;

use crate::ir::Opcode;

/// Opcode capabilities of the target. Bits are indexed by
/// `Opcode as u32`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MachineModel {
    predicable: u32,
    speculatable: u32,
    pub has_select: bool,
}

fn mask(ops: &[Opcode]) -> u32 {
    ops.iter().fold(0, |m, op| m | 1 << (*op as u32))
}

const PURE: [Opcode; 13] = [
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
];

impl MachineModel {
    /// Every operation accepts a guard; loads and stores are never
    /// speculated.
    pub fn full() -> MachineModel {
        MachineModel { predicable: mask(&Opcode::ALL), speculatable: mask(&PURE), has_select: true }
    }

    /// Only moves, loads and stores accept a guard; everything else has to
    /// be speculated.
    pub fn partial() -> MachineModel {
        MachineModel { predicable: mask(&[Opcode::Mov, Opcode::Load, Opcode::Store]), speculatable: mask(&PURE), has_select: true }
    }

    pub fn new(predicable: &[Opcode], speculatable: &[Opcode], has_select: bool) -> MachineModel {
        let spec = mask(speculatable) & !mask(&[Opcode::Store]);
        MachineModel { predicable: mask(predicable), speculatable: spec, has_select }
    }

    pub fn predicable(&self, op: Opcode) -> bool {
        self.predicable & (1 << op as u32) != 0
    }

    pub fn speculatable(&self, op: Opcode) -> bool {
        self.speculatable & (1 << op as u32) != 0
    }

    pub fn with_predicable(mut self, ops: &[Opcode]) -> MachineModel {
        self.predicable = mask(ops);
        self
    }

    /// Stores are dropped from the set: they can never be speculated.
    pub fn with_speculatable(mut self, ops: &[Opcode]) -> MachineModel {
        self.speculatable = mask(ops) & !mask(&[Opcode::Store]);
        self
    }
}

impl Default for MachineModel {
    fn default() -> Self {
        MachineModel::full()
    }
}

impl fmt::Display for MachineModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, m: u32| -> fmt::Result {
            let mut first = true;
            for op in Opcode::ALL {
                if m & (1 << op as u32) != 0 {
                    if !first {
                        f.write_str(",")?;
                    }
                    first = false;
                    f.write_str(op.name())?;
                }
            }
            Ok(())
        };
        f.write_str("predicable=")?;
        list(f, self.predicable)?;
        f.write_str(" speculatable=")?;
        list(f, self.speculatable)
    }
}
