//! Core of the psikit middle-end: a predicated IR with phi and psi
//! operations, predicate-domain reasoning, SSA construction, psi
//! transformations, if-conversion, translation out of psi-SSA and a
//! reference interpreter.
//!
//! The crate only needs `alloc`; file handling and the command line live in
//! the `psikit` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analysis;
pub mod ifconvert;
pub mod interp;
pub mod ir;
pub mod machine;
pub mod out_of_ssa;
pub mod pipeline;
pub mod predicates;
pub mod ssa;

pub use ir::{BlockId, Function, Module, Var};
pub use machine::MachineModel;
