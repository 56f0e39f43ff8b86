use alloc::string::String;
use core::fmt::Write;

use super::{Function, Guard, Inst, Module, Operand, Pred, Terminator};

struct Printer<'a> {
    f: &'a Function,
    out: String,
}

impl Printer<'_> {
    fn reg(&mut self, v: super::Var) {
        self.out.push('%');
        self.out.push_str(self.f.var_name(v));
    }

    fn guard(&mut self, g: Guard) {
        if g.negated {
            self.out.push('!');
        }
        self.reg(g.var);
    }

    fn pred(&mut self, p: Pred) {
        match p {
            Pred::True => self.out.push('1'),
            Pred::Guard(g) => self.guard(g),
        }
    }

    fn operand(&mut self, o: Operand) {
        match o {
            Operand::Var(v) => self.reg(v),
            Operand::Imm(n) => {
                let _ = write!(self.out, "{n}");
            }
        }
    }

    fn inst(&mut self, inst: &Inst) {
        self.out.push_str("  ");
        if let Some(g) = inst.guard() {
            self.guard(g);
            self.out.push_str(" ? ");
        }
        match inst {
            Inst::Op(op) => {
                match op.dst {
                    Some(d) => {
                        self.reg(d);
                        self.out.push_str(" = ");
                        self.out.push_str(op.opcode.name());
                    }
                    None => self.out.push_str(op.opcode.name()),
                }
                for (i, o) in op.operands.iter().enumerate() {
                    self.out.push_str(if i == 0 { " " } else { ", " });
                    self.operand(*o);
                }
            }
            Inst::Psi(psi) => {
                self.reg(psi.dst);
                self.out.push_str(" = psi(");
                for (i, arg) in psi.args.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(", ");
                    }
                    self.pred(arg.pred);
                    self.out.push_str(" ? ");
                    self.reg(arg.value);
                }
                self.out.push(')');
            }
        }
        self.out.push('\n');
    }

    fn function(&mut self) {
        let f = self.f;
        let _ = write!(self.out, "func @{}(", f.name);
        for (i, p) in f.params.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            self.reg(*p);
            if f.is_guard(*p) {
                self.out.push_str(":guard");
            }
        }
        self.out.push_str(") {\n");
        for block in &f.blocks {
            let _ = writeln!(self.out, "{}:", block.name);
            for phi in &block.phis {
                self.out.push_str("  ");
                self.reg(phi.dst);
                self.out.push_str(" = phi(");
                for (i, (b, v)) in phi.args.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(", ");
                    }
                    let _ = write!(self.out, "{}: ", f.block(*b).name);
                    self.reg(*v);
                }
                self.out.push_str(")\n");
            }
            for inst in &block.insts {
                self.inst(inst);
            }
            match block.term {
                Terminator::Br { cond, then_dest, else_dest } => {
                    self.out.push_str("  br ");
                    self.reg(cond);
                    let _ = writeln!(self.out, ", {}, {}", f.block(then_dest).name, f.block(else_dest).name);
                }
                Terminator::Goto(b) => {
                    let _ = writeln!(self.out, "  goto {}", f.block(b).name);
                }
                Terminator::Ret(None) => self.out.push_str("  ret\n"),
                Terminator::Ret(Some(v)) => {
                    self.out.push_str("  ret ");
                    self.reg(v);
                    self.out.push('\n');
                }
            }
        }
        self.out.push_str("}\n");
    }
}

pub fn print_function(f: &Function) -> String {
    let mut p = Printer { f, out: String::new() };
    p.function();
    p.out
}

/// Prints every function, separated by blank lines.
pub fn print_module(m: &Module) -> String {
    let mut out = String::new();
    for (i, f) in m.functions.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&print_function(f));
    }
    out
}

impl core::fmt::Display for Function {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(&print_function(self))
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_module;
    use super::*;

    #[test]
    fn empty_function() {
        let m = parse_module("func @f(){ b0: ret }").unwrap();
        assert_eq!(print_module(&m), "func @f() {\nb0:\n  ret\n}\n");
    }

    #[test]
    fn psi_syntax() {
        let text =
            "func @f(%p:guard, %u) {\nb0:\n  %p ? %a = add %u, 1\n  !%p ? %b = sub %u, 1\n  %x = psi(%p ? %a, !%p ? %b)\n  ret %x\n}\n";
        let m = parse_module(text).unwrap();
        let printed = print_module(&m);
        assert!(printed.contains("psi(%p ? %a, !%p ? %b)"));
        assert_eq!(printed, text);
    }
}
