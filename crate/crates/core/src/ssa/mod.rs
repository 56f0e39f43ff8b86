//! SSA construction and the psi-level transformations.

use alloc::vec::Vec;
use core::fmt;

use crate::ir::{Diagnostic, Function};

mod construct;
mod fold;
mod psi;
mod select;

pub use construct::{construct_ssa, remove_unreachable};
pub use fold::copy_fold;
pub use psi::{auto_promote, inline_all, is_normalized, pred_matches_def, psi_inline, psi_project, psi_promote, psi_reduce, reduce_all};
pub use select::select_form;

#[derive(Clone, Debug)]
pub struct SsaForm {
    pub function: Function,
    pub is_ssa: bool,
    pub psi_present: bool,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SsaError {
    /// No psi defines the requested variable.
    NoSuchPsi,
    BadArgIndex,
    NotPsiDefined,
    /// Inlining would let an inner argument win outside the outer
    /// argument's predicate.
    InlineUnsafe,
    EmptyProjection,
    /// Promotion refused; carries the failed condition (1 or 2).
    ConditionViolated(u8),
    /// The psis are not in a shape the select rewrite handles.
    NoSelectForm,
}

impl fmt::Display for SsaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SsaError::NoSuchPsi => f.write_str("no psi defines that variable"),
            SsaError::BadArgIndex => f.write_str("psi argument index out of range"),
            SsaError::NotPsiDefined => f.write_str("argument is not defined by a psi"),
            SsaError::InlineUnsafe => f.write_str("inner predicates are not contained in the outer predicate"),
            SsaError::EmptyProjection => f.write_str("projection removes every argument"),
            SsaError::ConditionViolated(n) => write!(f, "promotion condition {n} violated"),
            SsaError::NoSelectForm => f.write_str("psis cannot be rewritten into selects"),
        }
    }
}

impl core::error::Error for SsaError {}
