use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{eval, ExecResult, Outcome, Trap, DEFAULT_BUDGET};
use crate::ir::Function;

pub const MEMORY_CELLS: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputVector {
    pub args: Vec<i64>,
    pub memory: Vec<i64>,
}

#[derive(Clone, Debug)]
pub struct Mismatch {
    pub input: InputVector,
    pub left: ExecResult,
    pub right: ExecResult,
}

#[derive(Clone, Debug, Default)]
pub struct DiffReport {
    pub trials: usize,
    /// Trials skipped because the reference program was undefined there.
    pub excluded: usize,
    pub mismatches: Vec<Mismatch>,
}

impl DiffReport {
    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Deterministic input vectors for `f`: small integers, so comparisons and
/// loop bounds go both ways, and booleans for guard parameters.
pub fn input_vectors(f: &Function, trials: usize, seed: u64) -> Vec<InputVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|_| InputVector {
            args: f.params.iter().map(|p| if f.is_guard(*p) { rng.gen_range(0..=1) } else { rng.gen_range(-8..=8) }).collect(),
            memory: (0..MEMORY_CELLS).map(|_| rng.gen_range(-8..=8)).collect(),
        })
        .collect()
}

fn agree(a: &ExecResult, b: &ExecResult) -> bool {
    match (a.outcome, b.outcome) {
        (Outcome::Return(x), Outcome::Return(y)) => x == y && a.memory == b.memory,
        (Outcome::Trap(s), Outcome::Trap(t)) => s == t,
        _ => false,
    }
}

/// Runs both functions on `trials` vectors derived from `seed` and
/// compares return value, memory and trap kind. Trials where `f1` reads an
/// undefined value or hits a psi with no true predicate are excluded.
pub fn differential_check(f1: &Function, f2: &Function, trials: usize, seed: u64) -> DiffReport {
    let mut report = DiffReport { trials, ..DiffReport::default() };
    for input in input_vectors(f1, trials, seed) {
        let left = eval(f1, &input.args, &input.memory, DEFAULT_BUDGET);
        if matches!(left.trap(), Some(Trap::UndefinedRead | Trap::PsiNoneTrue)) {
            report.excluded += 1;
            continue;
        }
        let right = eval(f2, &input.args, &input.memory, DEFAULT_BUDGET);
        if !agree(&left, &right) {
            report.mismatches.push(Mismatch { input, left, right });
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_function;

    #[test]
    fn reflexive() {
        let f = parse_function("func @f(%u, %v) {\nb0:\n  %p = cmp_lt %u, %v\n  %x = select %p, %u, %v\n  ret %x\n}").unwrap();
        assert!(differential_check(&f, &f, 32, 3).is_clean());
    }

    #[test]
    fn swapped_psi_detected() {
        let good = parse_function(
            "func @f(%u, %v) {\nb0:\n  %p = cmp_lt %u, %v\n  %a = add %u, 1\n  %p ? %b = add %v, 2\n  %x = psi(1 ? %a, %p ? %b)\n  ret %x\n}",
        )
        .unwrap();
        let bad = parse_function(
            "func @f(%u, %v) {\nb0:\n  %p = cmp_lt %u, %v\n  %a = add %u, 1\n  %p ? %b = add %v, 2\n  %x = psi(%p ? %b, 1 ? %a)\n  ret %x\n}",
        )
        .unwrap();
        let r = differential_check(&good, &bad, 32, 1);
        assert!(!r.is_clean());
        let m = &r.mismatches[0];
        assert_ne!(m.left.value(), m.right.value());
    }
}
