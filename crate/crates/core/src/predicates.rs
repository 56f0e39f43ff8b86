//! Predicate domains. Each guard register is mapped to a boolean formula
//! over opaque condition symbols; subset and disjointness are decided by
//! enumerating the truth table of the symbols the two formulas mention.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::analysis::DefMap;
use crate::ir::{Function, Guard, Inst, Opcode, Operand, Pred, Var};

/// Maximum number of condition symbols a function may need before the
/// environment degrades to conservative answers.
pub const SYMBOL_BUDGET: u32 = 16;

const OPAQUE_BASE: u32 = 1 << 24;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PredExpr {
    True,
    False,
    Sym(u32),
    Not(Box<PredExpr>),
    And(Box<PredExpr>, Box<PredExpr>),
    Or(Box<PredExpr>, Box<PredExpr>),
}

impl PredExpr {
    pub fn sym(id: u32) -> PredExpr {
        PredExpr::Sym(id)
    }

    // The constructors fold constants and double negation only, so formulas
    // stay close to the program text.
    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> PredExpr {
        match self {
            PredExpr::True => PredExpr::False,
            PredExpr::False => PredExpr::True,
            PredExpr::Not(inner) => *inner,
            e => PredExpr::Not(Box::new(e)),
        }
    }

    pub fn and(self, other: PredExpr) -> PredExpr {
        match (self, other) {
            (PredExpr::False, _) | (_, PredExpr::False) => PredExpr::False,
            (PredExpr::True, e) | (e, PredExpr::True) => e,
            (a, b) if a == b => a,
            (a, b) => PredExpr::And(Box::new(a), Box::new(b)),
        }
    }

    pub fn or(self, other: PredExpr) -> PredExpr {
        match (self, other) {
            (PredExpr::True, _) | (_, PredExpr::True) => PredExpr::True,
            (PredExpr::False, e) | (e, PredExpr::False) => e,
            (a, b) if a == b => a,
            (a, b) => PredExpr::Or(Box::new(a), Box::new(b)),
        }
    }

    /// Evaluates under an assignment given as a lookup function.
    pub fn eval(&self, assign: &impl Fn(u32) -> bool) -> bool {
        match self {
            PredExpr::True => true,
            PredExpr::False => false,
            PredExpr::Sym(s) => assign(*s),
            PredExpr::Not(e) => !e.eval(assign),
            PredExpr::And(a, b) => a.eval(assign) && b.eval(assign),
            PredExpr::Or(a, b) => a.eval(assign) || b.eval(assign),
        }
    }

    /// Symbols mentioned by the formula, sorted and deduplicated.
    pub fn support(&self) -> Vec<u32> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect(&self, out: &mut Vec<u32>) {
        match self {
            PredExpr::True | PredExpr::False => {}
            PredExpr::Sym(s) => out.push(*s),
            PredExpr::Not(e) => e.collect(out),
            PredExpr::And(a, b) | PredExpr::Or(a, b) => {
                a.collect(out);
                b.collect(out);
            }
        }
    }

    fn disjuncts(&self) -> Vec<&PredExpr> {
        match self {
            PredExpr::Or(a, b) => {
                let mut v = a.disjuncts();
                v.extend(b.disjuncts());
                v
            }
            e => vec![e],
        }
    }

    fn conjuncts(&self) -> Vec<&PredExpr> {
        match self {
            PredExpr::And(a, b) => {
                let mut v = a.conjuncts();
                v.extend(b.conjuncts());
                v
            }
            e => vec![e],
        }
    }
}

impl fmt::Display for PredExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredExpr::True => f.write_str("1"),
            PredExpr::False => f.write_str("0"),
            PredExpr::Sym(s) => write!(f, "S{s}"),
            PredExpr::Not(e) => write!(f, "!{e}"),
            PredExpr::And(a, b) => write!(f, "({a} & {b})"),
            PredExpr::Or(a, b) => write!(f, "({a} | {b})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PredError {
    SymbolBudgetExceeded { needed: u32 },
}

impl fmt::Display for PredError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredError::SymbolBudgetExceeded { needed } => {
                write!(f, "predicate analysis needs {needed} condition symbols, budget is {SYMBOL_BUDGET}")
            }
        }
    }
}

impl core::error::Error for PredError {}

/// Formula of every register that can act as a guard.
#[derive(Clone, Debug)]
pub struct GuardEnv {
    formulas: Vec<Option<PredExpr>>,
    symbol_count: u32,
    conservative: bool,
}

/// Maps each guard register to a formula. Comparisons, parameters and
/// guards merged by phi/psi/load get fresh symbols; `and`, `or`, `not`,
/// `mov` and `const` are interpreted.
pub fn build_guard_env(f: &Function) -> Result<GuardEnv, PredError> {
    let env = GuardEnv::build(f);
    if env.conservative {
        Err(PredError::SymbolBudgetExceeded { needed: env.symbol_count })
    } else {
        Ok(env)
    }
}

impl GuardEnv {
    /// Like [`build_guard_env`], but never fails: past the symbol budget the
    /// environment is flagged conservative and only formulas whose joint
    /// support fits the budget are decided by enumeration; everything else
    /// falls back to syntactic reasoning.
    pub fn build(f: &Function) -> GuardEnv {
        let defs = DefMap::build(f);
        let mut b = Builder { f, defs: &defs, memo: vec![State::Todo; f.var_count()], next: 0 };
        for v in f.vars() {
            if f.is_guard(v) {
                b.formula(v);
            }
        }
        let formulas = b
            .memo
            .into_iter()
            .map(|s| match s {
                State::Done(e) => Some(e),
                _ => None,
            })
            .collect();
        GuardEnv { formulas, symbol_count: b.next, conservative: b.next > SYMBOL_BUDGET }
    }

    pub fn symbol_count(&self) -> u32 {
        self.symbol_count
    }

    pub fn is_conservative(&self) -> bool {
        self.conservative
    }

    /// Formula of a register. Registers the environment knows nothing about
    /// (value registers, or ones created after it was built) get a private
    /// opaque symbol, which only weakens what can be proven.
    pub fn var(&self, v: Var) -> PredExpr {
        match self.formulas.get(v.0 as usize) {
            Some(Some(e)) => e.clone(),
            _ => PredExpr::Sym(OPAQUE_BASE + v.0),
        }
    }

    pub fn guard(&self, g: Guard) -> PredExpr {
        let e = self.var(g.var);
        if g.negated {
            e.not()
        } else {
            e
        }
    }

    pub fn opt_guard(&self, g: Option<Guard>) -> PredExpr {
        g.map_or(PredExpr::True, |g| self.guard(g))
    }

    pub fn pred(&self, p: Pred) -> PredExpr {
        match p {
            Pred::True => PredExpr::True,
            Pred::Guard(g) => self.guard(g),
        }
    }

    pub fn subset(&self, a: &PredExpr, b: &PredExpr) -> bool {
        domain_subset(a, b, self)
    }

    pub fn disjoint(&self, a: &PredExpr, b: &PredExpr) -> bool {
        domain_disjoint(a, b, self)
    }

    pub fn equivalent(&self, a: &PredExpr, b: &PredExpr) -> bool {
        a == b || (domain_subset(a, b, self) && domain_subset(b, a, self))
    }
}

#[derive(Clone)]
enum State {
    Todo,
    Busy,
    Done(PredExpr),
}

struct Builder<'a> {
    f: &'a Function,
    defs: &'a DefMap,
    memo: Vec<State>,
    next: u32,
}

impl Builder<'_> {
    fn fresh(&mut self) -> PredExpr {
        self.next += 1;
        PredExpr::Sym(self.next - 1)
    }

    fn operand(&mut self, o: Operand) -> PredExpr {
        match o {
            Operand::Imm(0) => PredExpr::False,
            Operand::Imm(_) => PredExpr::True,
            Operand::Var(v) => self.formula(v),
        }
    }

    fn formula(&mut self, v: Var) -> PredExpr {
        match &self.memo[v.0 as usize] {
            State::Done(e) => return e.clone(),
            State::Busy => {
                // self-referential definition
                return self.fresh();
            }
            State::Todo => {}
        }
        self.memo[v.0 as usize] = State::Busy;
        let e = match self.defs.single(v).and_then(|d| d.inst(self.f)) {
            Some(Inst::Op(op)) => match op.opcode {
                Opcode::Const => match op.operands[0] {
                    Operand::Imm(0) => PredExpr::False,
                    _ => PredExpr::True,
                },
                Opcode::Mov => self.operand(op.operands[0]),
                Opcode::Not => self.operand(op.operands[0]).not(),
                Opcode::And => {
                    let a = self.operand(op.operands[0]);
                    let b = self.operand(op.operands[1]);
                    a.and(b)
                }
                Opcode::Or => {
                    let a = self.operand(op.operands[0]);
                    let b = self.operand(op.operands[1]);
                    a.or(b)
                }
                _ => self.fresh(),
            },
            _ => self.fresh(),
        };
        self.memo[v.0 as usize] = State::Done(e.clone());
        e
    }
}

/// Truth-table decision over the joint support, or `None` when the support
/// exceeds the budget.
fn all_assignments(a: &PredExpr, b: &PredExpr, test: impl Fn(bool, bool) -> bool) -> Option<bool> {
    let mut support = a.support();
    support.extend(b.support());
    support.sort_unstable();
    support.dedup();
    if support.len() > SYMBOL_BUDGET as usize {
        return None;
    }
    let k = support.len();
    for bits in 0u32..(1u32 << k) {
        let lookup = |s: u32| {
            let i = support.binary_search(&s).unwrap();
            bits & (1 << i) != 0
        };
        if !test(a.eval(&lookup), b.eval(&lookup)) {
            return Some(false);
        }
    }
    Some(true)
}

fn syntactic_subset(a: &PredExpr, b: &PredExpr) -> bool {
    if *a == PredExpr::False || *b == PredExpr::True || a == b {
        return true;
    }
    let ds = b.disjuncts();
    if ds.iter().any(|d| **d == PredExpr::True || *d == a) {
        return true;
    }
    a.conjuncts().iter().any(|c| *c == b || ds.contains(c))
}

fn syntactic_disjoint(a: &PredExpr, b: &PredExpr) -> bool {
    if *a == PredExpr::False || *b == PredExpr::False {
        return true;
    }
    let ca = a.conjuncts();
    let cb = b.conjuncts();
    ca.iter().any(|x| cb.iter().any(|y| (*x).clone().not() == **y))
}

/// True iff every assignment satisfying `a` satisfies `b`. `false` means
/// "not proven".
pub fn domain_subset(a: &PredExpr, b: &PredExpr, env: &GuardEnv) -> bool {
    let _ = env;
    if syntactic_subset(a, b) {
        return true;
    }
    all_assignments(a, b, |x, y| !x || y).unwrap_or(false)
}

/// True iff no assignment satisfies both. `false` means "not proven".
pub fn domain_disjoint(a: &PredExpr, b: &PredExpr, env: &GuardEnv) -> bool {
    let _ = env;
    if syntactic_disjoint(a, b) {
        return true;
    }
    all_assignments(a, b, |x, y| !(x && y)).unwrap_or(false)
}

/// Disjunction of all formulas; `False` for an empty list.
pub fn domain_union(preds: &[PredExpr]) -> PredExpr {
    preds.iter().cloned().fold(PredExpr::False, PredExpr::or)
}
