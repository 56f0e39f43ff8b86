use alloc::collections::BTreeMap;

use super::{Block, Function, Inst, Operand, Pred, Terminator, Var};

struct Matcher<'a> {
    a: &'a Function,
    b: &'a Function,
    alpha: bool,
    fwd: BTreeMap<Var, Var>,
    back: BTreeMap<Var, Var>,
}

impl Matcher<'_> {
    fn var(&mut self, x: Var, y: Var) -> bool {
        if self.a.var_kind(x) != self.b.var_kind(y) {
            return false;
        }
        if !self.alpha {
            return self.a.var_name(x) == self.b.var_name(y);
        }
        match (self.fwd.get(&x), self.back.get(&y)) {
            (Some(&m), Some(&n)) => m == y && n == x,
            (None, None) => {
                self.fwd.insert(x, y);
                self.back.insert(y, x);
                true
            }
            _ => false,
        }
    }

    fn pred(&mut self, x: Pred, y: Pred) -> bool {
        match (x, y) {
            (Pred::True, Pred::True) => true,
            (Pred::Guard(g), Pred::Guard(h)) => g.negated == h.negated && self.var(g.var, h.var),
            _ => false,
        }
    }

    fn guard(&mut self, x: Option<super::Guard>, y: Option<super::Guard>) -> bool {
        self.pred(x.into(), y.into())
    }

    fn operand(&mut self, x: Operand, y: Operand) -> bool {
        match (x, y) {
            (Operand::Imm(m), Operand::Imm(n)) => m == n,
            (Operand::Var(v), Operand::Var(w)) => self.var(v, w),
            _ => false,
        }
    }

    fn inst(&mut self, x: &Inst, y: &Inst) -> bool {
        if !self.guard(x.guard(), y.guard()) {
            return false;
        }
        match (x, y) {
            (Inst::Op(p), Inst::Op(q)) => {
                p.opcode == q.opcode
                    && p.operands.len() == q.operands.len()
                    && match (p.dst, q.dst) {
                        (None, None) => true,
                        (Some(d), Some(e)) => self.var(d, e),
                        _ => false,
                    }
                    && p.operands.iter().zip(&q.operands).all(|(m, n)| self.operand(*m, *n))
            }
            (Inst::Psi(p), Inst::Psi(q)) => {
                p.args.len() == q.args.len()
                    && self.var(p.dst, q.dst)
                    && p.args.iter().zip(&q.args).all(|(m, n)| self.pred(m.pred, n.pred) && self.var(m.value, n.value))
            }
            _ => false,
        }
    }

    fn block(&mut self, x: &Block, y: &Block) -> bool {
        if !self.alpha && x.name != y.name {
            return false;
        }
        if x.phis.len() != y.phis.len() || x.insts.len() != y.insts.len() {
            return false;
        }
        for (p, q) in x.phis.iter().zip(&y.phis) {
            if p.args.len() != q.args.len() || !self.var(p.dst, q.dst) {
                return false;
            }
            for ((bp, vp), (bq, vq)) in p.args.iter().zip(&q.args) {
                if bp != bq || !self.var(*vp, *vq) {
                    return false;
                }
            }
        }
        for (p, q) in x.insts.iter().zip(&y.insts) {
            if !self.inst(p, q) {
                return false;
            }
        }
        match (&x.term, &y.term) {
            (Terminator::Br { cond: c, then_dest: t, else_dest: e }, Terminator::Br { cond: d, then_dest: u, else_dest: f }) => {
                t == u && e == f && self.var(*c, *d)
            }
            (Terminator::Goto(s), Terminator::Goto(t)) => s == t,
            (Terminator::Ret(None), Terminator::Ret(None)) => true,
            (Terminator::Ret(Some(v)), Terminator::Ret(Some(w))) => self.var(*v, *w),
            _ => false,
        }
    }

    fn function(&mut self) -> bool {
        let (a, b) = (self.a, self.b);
        if a.name != b.name || a.params.len() != b.params.len() || a.blocks.len() != b.blocks.len() {
            return false;
        }
        if !a.params.iter().zip(&b.params).all(|(x, y)| self.var(*x, *y)) {
            return false;
        }
        a.blocks.iter().zip(&b.blocks).all(|(x, y)| self.block(x, y))
    }
}

/// Equality up to a consistent one-to-one renaming of registers and of
/// block labels (blocks are matched by position).
pub fn alpha_equivalent(a: &Function, b: &Function) -> bool {
    Matcher { a, b, alpha: true, fwd: BTreeMap::new(), back: BTreeMap::new() }.function()
}

/// Equality of names, kinds and structure, independent of variable-table
/// layout.
pub fn structurally_equal(a: &Function, b: &Function) -> bool {
    Matcher { a, b, alpha: false, fwd: BTreeMap::new(), back: BTreeMap::new() }.function()
}
