//! Translation out of psi-SSA: psi normalization, psi congruence, phi
//! congruence, then renaming each congruence class to one register.

use alloc::string::String;
use core::fmt;

use crate::analysis::DomTree;
use crate::ir::{validate_function, Function, Severity, ValidationMode};
use crate::predicates::GuardEnv;

mod classes;
mod congruence;
mod normalize;
mod phi;
mod rename;

pub use classes::CongruenceClasses;
pub use congruence::{psi_congruence, CongruenceOptions};
pub use normalize::psi_normalize;
pub use phi::phi_congruence;
pub use rename::rename_and_strip;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OutOfSsaOptions {
    /// Swap out-of-order psi arguments with disjoint predicates instead of
    /// copying one of them.
    pub reorder_disjoint: bool,
    /// Ignore overlaps between definitions under disjoint guards.
    pub disjoint_interference: bool,
    pub left_only: bool,
    pub ignore_result: bool,
    /// Keep every phi copy.
    pub phi_naive: bool,
    /// The improvements are greedy and can lose on some functions. With
    /// `fallback`, the translation is also run with each subset of the
    /// enabled improvements and the result with fewest copies is kept, so
    /// that enabling an improvement never costs copies.
    pub fallback: bool,
}

impl Default for OutOfSsaOptions {
    fn default() -> Self {
        OutOfSsaOptions {
            reorder_disjoint: true,
            disjoint_interference: true,
            left_only: true,
            ignore_result: true,
            phi_naive: false,
            fallback: true,
        }
    }
}

impl OutOfSsaOptions {
    fn improvements(self) -> [bool; 4] {
        [self.reorder_disjoint, self.disjoint_interference, self.left_only, self.ignore_result]
    }

    fn with_improvements(self, on: [bool; 4]) -> Self {
        let [reorder_disjoint, disjoint_interference, left_only, ignore_result] = on;
        OutOfSsaOptions { reorder_disjoint, disjoint_interference, left_only, ignore_result, ..self }
    }

    /// The options themselves, then every option set with some of the
    /// enabled improvements turned off.
    pub fn fallbacks(self) -> impl Iterator<Item = OutOfSsaOptions> {
        let on = self.improvements();
        let enabled: alloc::vec::Vec<usize> = (0..4).filter(|i| on[*i]).collect();
        let n = enabled.len();
        (0..1u32 << n).rev().map(move |mask| {
            let mut sub = [false; 4];
            for (k, &i) in enabled.iter().enumerate() {
                sub[i] = mask >> k & 1 == 1;
            }
            self.with_improvements(sub)
        })
    }

    /// Every improvement off.
    pub fn baseline() -> Self {
        OutOfSsaOptions {
            reorder_disjoint: false,
            disjoint_interference: false,
            left_only: false,
            ignore_result: false,
            phi_naive: false,
            fallback: true,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PassStats {
    pub copies_before: usize,
    pub copies_normalize: usize,
    pub copies_psi_congruence: usize,
    pub copies_phi_congruence: usize,
    pub total_copies: usize,
}

impl PassStats {
    pub fn inserted(&self) -> usize {
        self.copies_normalize + self.copies_psi_congruence + self.copies_phi_congruence
    }
}

impl core::ops::Add for PassStats {
    type Output = PassStats;

    fn add(self, o: PassStats) -> PassStats {
        PassStats {
            copies_before: self.copies_before + o.copies_before,
            copies_normalize: self.copies_normalize + o.copies_normalize,
            copies_psi_congruence: self.copies_psi_congruence + o.copies_psi_congruence,
            copies_phi_congruence: self.copies_phi_congruence + o.copies_phi_congruence,
            total_copies: self.total_copies + o.total_copies,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OutOfSsaError {
    NotSsa(String),
    /// Two members of one class interfere.
    ClassInterferenceDetected {
        a: String,
        b: String,
    },
    /// A phi or psi whose resources ended in different classes.
    NotConventional {
        block: String,
    },
}

impl fmt::Display for OutOfSsaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutOfSsaError::NotSsa(m) => write!(f, "input is not in SSA form: {m}"),
            OutOfSsaError::ClassInterferenceDetected { a, b } => {
                write!(f, "%{a} and %{b} share a congruence class but interfere")
            }
            OutOfSsaError::NotConventional { block } => write!(f, "block {block} has a phi or psi spanning several classes"),
        }
    }
}

impl core::error::Error for OutOfSsaError {}

/// Psi-CSSA form of `f` together with its classes, before renaming.
pub fn to_cssa(f: &Function, opts: OutOfSsaOptions) -> Result<(Function, CongruenceClasses, PassStats), OutOfSsaError> {
    if let Some(d) = validate_function(f, ValidationMode::Ssa).into_iter().find(|d| d.severity == Severity::Error) {
        return Err(OutOfSsaError::NotSsa(d.message));
    }
    if !opts.fallback {
        return Ok(cssa_once(f, opts));
    }
    let mut best: Option<(Function, CongruenceClasses, PassStats)> = None;
    for o in opts.fallbacks() {
        let r = cssa_once(f, o);
        if best.as_ref().is_none_or(|b| r.2.total_copies < b.2.total_copies) {
            best = Some(r);
        }
    }
    Ok(best.unwrap())
}

fn cssa_once(f: &Function, opts: OutOfSsaOptions) -> (Function, CongruenceClasses, PassStats) {
    let mut g = f.clone();
    let mut stats = PassStats { copies_before: g.copy_count(), ..PassStats::default() };
    let dom = DomTree::build(&g);
    let env = GuardEnv::build(&g);
    stats.copies_normalize = psi_normalize(&mut g, &dom, &env, opts.reorder_disjoint);

    let mut env = GuardEnv::build(&g);
    let mut cc = CongruenceClasses::new(g.var_count());
    cc.refine_disjoint = opts.disjoint_interference;
    let copts = CongruenceOptions {
        repair_left_only: opts.left_only,
        ignore_result_interference: opts.ignore_result,
        disjoint_interference: opts.disjoint_interference,
    };
    stats.copies_psi_congruence = psi_congruence(&mut g, &dom, &mut env, &mut cc, copts);

    let env = GuardEnv::build(&g);
    stats.copies_phi_congruence = phi_congruence(&mut g, &env, &mut cc, opts.phi_naive);
    stats.total_copies = g.copy_count();
    (g, cc, stats)
}

/// Translates a psi-SSA function to predicated non-SSA code.
pub fn run_out_of_ssa(f: &Function, opts: OutOfSsaOptions) -> Result<(Function, PassStats), OutOfSsaError> {
    let (g, cc, stats) = to_cssa(f, opts)?;
    let env = GuardEnv::build(&g);
    let out = rename_and_strip(&g, &cc, &env, opts.ignore_result)?;
    Ok((out, stats))
}

#[cfg(test)]
mod tests;
