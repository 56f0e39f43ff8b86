//! Named pass pipelines. The pipeline string (`ssa,ifconvert,out-of-ssa`)
//! is parsed against [`PASSES`] and checked before anything runs.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::ifconvert::if_convert_all;
use crate::ir::{validate_function, Diagnostic, Function, Severity, ValidationMode};
use crate::machine::MachineModel;
use crate::out_of_ssa::{run_out_of_ssa, OutOfSsaError, OutOfSsaOptions, PassStats};
use crate::predicates::GuardEnv;
use crate::ssa::{auto_promote, construct_ssa, copy_fold, inline_all, reduce_all};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pass {
    Ssa,
    Fold,
    IfConvert,
    PsiInline,
    PsiReduce,
    PsiPromote,
    OutOfSsa,
}

pub struct PassInfo {
    pub pass: Pass,
    pub name: &'static str,
    /// The input must be in SSA form, produced by an earlier `ssa`.
    pub needs_ssa: bool,
    pub summary: &'static str,
}

pub const PASSES: &[PassInfo] = &[
    PassInfo { pass: Pass::Ssa, name: "ssa", needs_ssa: false, summary: "build pruned SSA form with psis for guarded defs" },
    PassInfo { pass: Pass::Fold, name: "fold", needs_ssa: true, summary: "copy folding" },
    PassInfo { pass: Pass::IfConvert, name: "ifconvert", needs_ssa: true, summary: "if-convert diamonds and triangles" },
    PassInfo { pass: Pass::PsiInline, name: "psi-inline", needs_ssa: true, summary: "flatten psi arguments defined by psis" },
    PassInfo { pass: Pass::PsiReduce, name: "psi-reduce", needs_ssa: true, summary: "drop dead psi arguments" },
    PassInfo { pass: Pass::PsiPromote, name: "psi-promote", needs_ssa: true, summary: "widen psi predicates of speculated args" },
    PassInfo { pass: Pass::OutOfSsa, name: "out-of-ssa", needs_ssa: true, summary: "translate out of psi-SSA" },
];

impl Pass {
    pub fn info(self) -> &'static PassInfo {
        PASSES.iter().find(|p| p.pass == self).unwrap()
    }

    pub fn name(self) -> &'static str {
        self.info().name
    }

    pub fn from_name(name: &str) -> Option<Pass> {
        PASSES.iter().find(|p| p.name == name).map(|p| p.pass)
    }
}

impl fmt::Display for Pass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PipelineError {
    UnknownPass(String),
    Empty,
    NeedsSsa(Pass),
    /// A pass ran but the function it was given cannot be handled.
    Failed {
        function: String,
        pass: Pass,
        message: String,
    },
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PipelineError::UnknownPass(p) => {
                write!(f, "unknown pass `{p}` (known:")?;
                for info in PASSES {
                    write!(f, " {}", info.name)?;
                }
                f.write_str(")")
            }
            PipelineError::Empty => f.write_str("empty pipeline"),
            PipelineError::NeedsSsa(p) => write!(f, "{p} requires ssa earlier in the pipeline"),
            PipelineError::Failed { function, pass, message } => write!(f, "@{function}: {pass}: {message}"),
        }
    }
}

impl core::error::Error for PipelineError {}

/// Parses `ssa,fold,...` and checks pass ordering.
pub fn parse_pipeline(text: &str) -> Result<Vec<Pass>, PipelineError> {
    let passes = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| Pass::from_name(s).ok_or_else(|| PipelineError::UnknownPass(s.into())))
        .collect::<Result<Vec<_>, _>>()?;
    check_pipeline(&passes)?;
    Ok(passes)
}

pub fn check_pipeline(passes: &[Pass]) -> Result<(), PipelineError> {
    if passes.is_empty() {
        return Err(PipelineError::Empty);
    }
    let mut ssa = false;
    for &p in passes {
        if p.info().needs_ssa && !ssa {
            return Err(PipelineError::NeedsSsa(p));
        }
        match p {
            Pass::Ssa => ssa = true,
            Pass::OutOfSsa => ssa = false,
            _ => {}
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PipelineConfig {
    pub passes: Vec<Pass>,
    pub machine: MachineModel,
    pub out_of_ssa: OutOfSsaOptions,
    pub stats: bool,
    pub verify: bool,
    /// Passes after which the caller wants to see the IR.
    pub dump_after: Vec<Pass>,
}

impl PipelineConfig {
    pub fn new(passes: Vec<Pass>) -> PipelineConfig {
        PipelineConfig {
            passes,
            machine: MachineModel::full(),
            out_of_ssa: OutOfSsaOptions::default(),
            stats: false,
            verify: false,
            dump_after: Vec::new(),
        }
    }

    pub fn parse(text: &str) -> Result<PipelineConfig, PipelineError> {
        parse_pipeline(text).map(PipelineConfig::new)
    }
}

#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub function: Function,
    /// Filled in when the pipeline contains out-of-ssa.
    pub stats: Option<PassStats>,
    pub diagnostics: Vec<Diagnostic>,
    /// What each pass changed, in pipeline order: phis/psis built, copies
    /// folded, regions converted, arguments inlined or removed, predicates
    /// promoted, copies left.
    pub changes: Vec<(Pass, usize)>,
    pub dumps: Vec<(Pass, Function)>,
}

impl PipelineRun {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(|d| d.severity == Severity::Error)
    }
}

fn failed(f: &Function, pass: Pass, message: String) -> PipelineError {
    PipelineError::Failed { function: f.name.clone(), pass, message }
}

/// Runs the configured passes on one function. The config is rechecked, so
/// a hand-built pass list cannot skip ssa.
pub fn run_pipeline(f: &Function, cfg: &PipelineConfig) -> Result<PipelineRun, PipelineError> {
    check_pipeline(&cfg.passes)?;
    let mut run = PipelineRun { function: f.clone(), stats: None, diagnostics: Vec::new(), changes: Vec::new(), dumps: Vec::new() };
    let mut ssa = false;
    for &pass in &cfg.passes {
        let cur = &mut run.function;
        let changed = match pass {
            Pass::Ssa => {
                let form = construct_ssa(cur);
                run.diagnostics.extend(form.diagnostics);
                if !form.is_ssa {
                    return Err(failed(cur, pass, "could not build SSA form".into()));
                }
                ssa = true;
                *cur = form.function;
                cur.blocks.iter().map(|b| b.phis.len() + b.insts.iter().filter(|i| i.as_psi().is_some()).count()).sum()
            }
            Pass::Fold => copy_fold(cur, &GuardEnv::build(cur)),
            Pass::IfConvert => if_convert_all(cur, &cfg.machine),
            Pass::PsiInline => inline_all(cur, &GuardEnv::build(cur)),
            Pass::PsiReduce => reduce_all(cur, &GuardEnv::build(cur)),
            Pass::PsiPromote => auto_promote(cur, &GuardEnv::build(cur), &cfg.machine),
            Pass::OutOfSsa => {
                let (out, stats) = run_out_of_ssa(cur, cfg.out_of_ssa).map_err(|e: OutOfSsaError| failed(cur, pass, format!("{e}")))?;
                *cur = out;
                ssa = false;
                run.stats = Some(run.stats.unwrap_or_default() + stats);
                stats.total_copies
            }
        };
        run.changes.push((pass, changed));
        if cfg.dump_after.contains(&pass) {
            run.dumps.push((pass, run.function.clone()));
        }
    }
    let mode = if ssa { ValidationMode::Ssa } else { ValidationMode::NonSsa };
    run.diagnostics.extend(validate_function(&run.function, mode));
    Ok(run)
}

/// One column of the copy statistics table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StatsVariant {
    pub name: &'static str,
    pub passes: &'static [Pass],
}

use Pass::*;

/// Pipelines compared by the statistics table: no if-conversion,
/// if-conversion, if-conversion with folding just before leaving SSA, each
/// without and with predicate promotion.
pub const STATS_VARIANTS: &[StatsVariant] = &[
    StatsVariant { name: "no-ifconv", passes: &[Ssa, OutOfSsa] },
    StatsVariant { name: "ifconv", passes: &[Ssa, IfConvert, OutOfSsa] },
    StatsVariant { name: "ifconv+folding", passes: &[Ssa, IfConvert, Fold, OutOfSsa] },
    StatsVariant { name: "no-ifconv+promote", passes: &[Ssa, PsiPromote, OutOfSsa] },
    StatsVariant { name: "ifconv+promote", passes: &[Ssa, IfConvert, PsiPromote, OutOfSsa] },
    StatsVariant { name: "ifconv+folding+promote", passes: &[Ssa, IfConvert, PsiPromote, Fold, OutOfSsa] },
];

/// Runs every statistics variant on `f` with the machine and out-of-SSA
/// options of `cfg`; the pass list of `cfg` is ignored.
pub fn variant_stats(f: &Function, cfg: &PipelineConfig) -> Result<Vec<PassStats>, PipelineError> {
    STATS_VARIANTS
        .iter()
        .map(|v| {
            let c = PipelineConfig { passes: v.passes.to_vec(), dump_after: Vec::new(), ..cfg.clone() };
            run_pipeline(f, &c).map(|r| r.stats.unwrap_or_default())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::differential_check;
    use crate::ir::parse_function;

    #[test]
    fn parse_and_check() {
        assert_eq!(parse_pipeline("ssa, fold ,out-of-ssa").unwrap(), [Ssa, Fold, OutOfSsa]);
        assert_eq!(parse_pipeline("out-of-ssa"), Err(PipelineError::NeedsSsa(OutOfSsa)));
        assert_eq!(parse_pipeline("ssa,out-of-ssa,fold"), Err(PipelineError::NeedsSsa(Fold)));
        assert_eq!(parse_pipeline(""), Err(PipelineError::Empty));
        assert!(matches!(parse_pipeline("ssa,bogus"), Err(PipelineError::UnknownPass(p)) if p == "bogus"));
        for info in PASSES {
            assert_eq!(Pass::from_name(info.name), Some(info.pass));
        }
    }

    #[test]
    fn diamond_end_to_end() {
        let f = parse_function(
            "func @f(%p:guard, %u) {\nb0:\n  br %p, b1, b2\nb1:\n  %x = add %u, 1\n  goto b3\nb2:\n  %x = sub %u, 1\n  goto b3\nb3:\n  ret %x\n}",
        )
        .unwrap();
        let mut cfg = PipelineConfig::parse("ssa,ifconvert,out-of-ssa").unwrap();
        cfg.dump_after = vec![IfConvert];
        let run = run_pipeline(&f, &cfg).unwrap();
        assert!(!run.has_errors(), "{:?}", run.diagnostics);
        assert_eq!(run.dumps.len(), 1);
        assert!(run.dumps[0].1.has_psi());
        assert!(!run.function.has_psi());
        assert!(differential_check(&f, &run.function, 32, 0).is_clean());
        let stats = variant_stats(&f, &cfg).unwrap();
        assert_eq!(stats.len(), STATS_VARIANTS.len());
        for s in stats {
            assert_eq!(s.copies_before + s.inserted(), s.total_copies);
        }
    }
}
