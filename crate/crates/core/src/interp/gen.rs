//! Seeded generator of structured, always-initialized, terminating
//! programs in non-SSA form.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ir::{parse_function, Function};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    Tiny,
    Small,
}

impl Profile {
    fn pool(self) -> usize {
        match self {
            Profile::Tiny => 3,
            Profile::Small => 5,
        }
    }

    fn params(self) -> usize {
        match self {
            Profile::Tiny => 2,
            Profile::Small => 3,
        }
    }

    fn max_depth(self) -> usize {
        match self {
            Profile::Tiny => 2,
            Profile::Small => 3,
        }
    }

    fn statements(self) -> usize {
        match self {
            Profile::Tiny => 8,
            Profile::Small => 22,
        }
    }
}

struct Gen {
    rng: ChaCha8Rng,
    profile: Profile,
    guard_param: bool,
    done: Vec<(String, Vec<String>, String)>,
    label: String,
    lines: Vec<String>,
    labels: usize,
    temps: usize,
    budget: usize,
    loop_depth: usize,
}

impl Gen {
    fn new_label(&mut self) -> String {
        self.labels += 1;
        format!("b{}", self.labels)
    }

    fn temp(&mut self, prefix: &str) -> String {
        self.temps += 1;
        format!("{prefix}{}", self.temps)
    }

    fn close(&mut self, term: String, next: String) {
        let label = core::mem::replace(&mut self.label, next);
        let lines = core::mem::take(&mut self.lines);
        self.done.push((label, lines, term));
    }

    fn emit(&mut self, line: String) {
        self.lines.push(line);
    }

    fn var(&mut self) -> String {
        let i = self.rng.gen_range(0..self.profile.pool());
        format!("%v{i}")
    }

    fn operand(&mut self) -> String {
        if self.rng.gen_bool(0.3) {
            format!("{}", self.rng.gen_range(-5..=5))
        } else {
            self.var()
        }
    }

    /// Emits the computation of a fresh guard and returns how to reference
    /// it, possibly negated.
    fn cond(&mut self) -> String {
        if self.guard_param && self.rng.gen_bool(0.15) {
            return String::from(if self.rng.gen_bool(0.5) { "%g" } else { "!%g" });
        }
        let c = self.temp("%c");
        let op = ["cmp_eq", "cmp_lt", "cmp_le"][self.rng.gen_range(0..3)];
        let (a, b) = (self.var(), self.operand());
        self.emit(format!("{c} = {op} {a}, {b}"));
        let name = match self.rng.gen_range(0..8) {
            0 => {
                let d = self.temp("%c");
                self.emit(format!("{d} = not {c}"));
                d
            }
            1 | 2 => {
                let e = self.temp("%c");
                let (a, b) = (self.var(), self.operand());
                self.emit(format!("{e} = cmp_lt {a}, {b}"));
                let d = self.temp("%c");
                let op = if self.rng.gen_bool(0.5) { "and" } else { "or" };
                self.emit(format!("{d} = {op} {c}, {e}"));
                d
            }
            _ => c,
        };
        if self.rng.gen_bool(0.3) {
            format!("!{name}")
        } else {
            name
        }
    }

    fn compute(&mut self) -> String {
        let dst = self.var();
        match self.rng.gen_range(0..7) {
            0 => {
                let a = self.var();
                format!("{dst} = neg {a}")
            }
            1 => {
                let a = self.var();
                format!("{dst} = and {a}, 7")
            }
            2 => {
                let a = self.var();
                format!("{dst} = mov {a}")
            }
            3 => {
                let n = self.rng.gen_range(-9..=9);
                format!("{dst} = const {n}")
            }
            k => {
                let op = ["add", "sub", "mul"][k - 4];
                let (a, b) = (self.var(), self.operand());
                format!("{dst} = {op} {a}, {b}")
            }
        }
    }

    fn statement(&mut self, depth: usize) {
        self.budget = self.budget.saturating_sub(1);
        let nested = depth < self.profile.max_depth() && self.budget > 2;
        match self.rng.gen_range(0..100) {
            0..=24 => {
                let s = self.compute();
                self.emit(s);
            }
            25..=44 => {
                let g = self.cond();
                let s = self.compute();
                self.emit(format!("{g} ? {s}"));
            }
            45..=54 => {
                let m = self.temp("%m");
                let a = self.var();
                self.emit(format!("{m} = and {a}, 15"));
                let guard = if self.rng.gen_bool(0.3) { format!("{} ? ", self.cond()) } else { String::new() };
                if self.rng.gen_bool(0.5) {
                    let d = self.var();
                    self.emit(format!("{guard}{d} = load {m}"));
                } else {
                    let v = self.operand();
                    self.emit(format!("{guard}store {m}, {v}"));
                }
            }
            55..=61 => {
                let c = self.cond();
                let c = match c.strip_prefix('!') {
                    Some(plain) => {
                        let d = self.temp("%c");
                        self.emit(format!("{d} = not {plain}"));
                        d
                    }
                    None => c,
                };
                let (d, a, b) = (self.var(), self.var(), self.operand());
                self.emit(format!("{d} = select {c}, {a}, {b}"));
            }
            62..=89 if nested => self.branch(depth),
            90..=99 if nested && self.loop_depth == 0 => self.counted_loop(depth),
            _ => {
                let s = self.compute();
                self.emit(s);
            }
        }
    }

    fn sequence(&mut self, depth: usize) {
        let n = self.rng.gen_range(1..=4);
        for _ in 0..n {
            if self.budget == 0 {
                break;
            }
            self.statement(depth);
        }
    }

    fn branch_cond(&mut self) -> String {
        let c = self.cond();
        match c.strip_prefix('!') {
            Some(plain) => {
                let d = self.temp("%c");
                self.emit(format!("{d} = not {plain}"));
                d
            }
            None => c,
        }
    }

    fn branch(&mut self, depth: usize) {
        let c = self.branch_cond();
        let then_l = self.new_label();
        let merge_l;
        if self.rng.gen_bool(0.35) {
            // triangle
            merge_l = self.new_label();
            let (t, m) = if self.rng.gen_bool(0.5) { (&then_l, &merge_l) } else { (&merge_l, &then_l) };
            let term = format!("br {c}, {t}, {m}");
            self.close(term, then_l.clone());
            self.sequence(depth + 1);
            self.close(format!("goto {merge_l}"), merge_l.clone());
        } else {
            let else_l = self.new_label();
            merge_l = self.new_label();
            self.close(format!("br {c}, {then_l}, {else_l}"), then_l);
            self.sequence(depth + 1);
            self.close(format!("goto {merge_l}"), else_l);
            self.sequence(depth + 1);
            self.close(format!("goto {merge_l}"), merge_l);
        }
    }

    fn counted_loop(&mut self, depth: usize) {
        let k = self.temp("%k");
        let t = self.temp("%t");
        let limit = self.rng.gen_range(1..=3);
        self.emit(format!("{k} = const 0"));
        let header = self.new_label();
        let body = self.new_label();
        let exit = self.new_label();
        self.close(format!("goto {header}"), header.clone());
        self.emit(format!("{t} = cmp_lt {k}, {limit}"));
        self.close(format!("br {t}, {body}, {exit}"), body);
        self.loop_depth += 1;
        self.sequence(depth + 1);
        self.loop_depth -= 1;
        self.emit(format!("{k} = add {k}, 1"));
        self.close(format!("goto {header}"), exit);
    }
}

/// Program text for `seed`; identical on every call.
pub fn gen_random_source(seed: u64, profile: Profile) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x005e_ed0f_9517);
    let guard_param = profile == Profile::Small && rng.gen_bool(0.5);
    let mut g = Gen {
        rng,
        profile,
        guard_param,
        done: Vec::new(),
        label: String::from("b0"),
        lines: Vec::new(),
        labels: 0,
        temps: 0,
        budget: profile.statements(),
        loop_depth: 0,
    };
    for i in 0..profile.pool() {
        let line = if i < profile.params() {
            format!("%v{i} = mov %a{i}")
        } else {
            let a = g.rng.gen_range(0..profile.params());
            let n = g.rng.gen_range(-4..=4);
            format!("%v{i} = add %a{a}, {n}")
        };
        g.emit(line);
    }
    while g.budget > 0 {
        g.statement(0);
    }
    let mut acc = String::from("%v0");
    for i in 1..profile.pool() {
        let r = g.temp("%r");
        g.emit(format!("{r} = add {acc}, %v{i}"));
        acc = r;
    }
    g.close(format!("ret {acc}"), String::new());

    let mut out = format!("func @gen{seed}(");
    for i in 0..profile.params() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "%a{i}");
    }
    if guard_param {
        out.push_str(", %g:guard");
    }
    out.push_str(") {\n");
    for (label, lines, term) in &g.done {
        let _ = writeln!(out, "{label}:");
        for l in lines {
            let _ = writeln!(out, "  {l}");
        }
        let _ = writeln!(out, "  {term}");
    }
    out.push_str("}\n");
    out
}

/// Parsed form of [`gen_random_source`].
pub fn gen_random_program(seed: u64, profile: Profile) -> Function {
    parse_function(&gen_random_source(seed, profile)).expect("generator produced unparsable text")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::{differential_check, eval, input_vectors, DEFAULT_BUDGET};
    use crate::ir::{validate_function, Severity, ValidationMode};

    #[test]
    fn deterministic() {
        assert_eq!(gen_random_source(0, Profile::Tiny), gen_random_source(0, Profile::Tiny));
        assert_ne!(gen_random_source(0, Profile::Small), gen_random_source(1, Profile::Small));
    }

    #[test]
    fn valid_and_defined() {
        let mut traps = 0;
        let mut runs = 0;
        for seed in 0..200 {
            for profile in [Profile::Tiny, Profile::Small] {
                let f = gen_random_program(seed, profile);
                let diags = validate_function(&f, ValidationMode::NonSsa);
                assert!(diags.iter().all(|d| d.severity != Severity::Error), "seed {seed}: {diags:?}");
                for v in input_vectors(&f, 4, seed) {
                    runs += 1;
                    if eval(&f, &v.args, &v.memory, DEFAULT_BUDGET).trap().is_some() {
                        traps += 1;
                    }
                }
                assert!(differential_check(&f, &f, 2, seed).is_clean());
            }
        }
        assert_eq!(traps, 0, "{traps} of {runs} runs trapped");
    }
}
