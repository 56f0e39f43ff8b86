mod stats;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::thread;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use psikit_core::analysis::{interference_graph, liveness};
use psikit_core::interp::{differential_check, eval, gen_random_program, DiffReport, Profile, DEFAULT_BUDGET, MEMORY_CELLS};
use psikit_core::ir::{parse_module, print_function, validate, Diagnostic, Function, Opcode, Severity, ValidationMode};
use psikit_core::out_of_ssa::{OutOfSsaOptions, PassStats};
use psikit_core::pipeline::{parse_pipeline, run_pipeline, variant_stats, Pass, PipelineConfig, STATS_VARIANTS};
use psikit_core::predicates::GuardEnv;
use psikit_core::MachineModel;

#[derive(Parser)]
#[command(name = "psikit", version, about = "Psi-SSA middle-end driver")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a pass pipeline over `.pir` files.
    Run(RunArgs),
    /// Run a pass pipeline over generated programs and compare them with
    /// the originals in the interpreter.
    Fuzz(FuzzArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MachineKind {
    Full,
    Partial,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StatsFormat {
    Text,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProfileArg {
    Tiny,
    Small,
    Both,
}

#[derive(Args)]
struct PipelineArgs {
    /// Comma-separated pass names.
    #[arg(long)]
    passes: Option<String>,
    #[arg(long, value_enum, default_value = "full")]
    machine: MachineKind,
    /// Opcodes that accept a guard; replaces the machine's set.
    #[arg(long, value_delimiter = ',')]
    predicable: Option<Vec<String>>,
    /// Opcodes that may run speculatively; replaces the machine's set.
    #[arg(long, value_delimiter = ',')]
    speculatable: Option<Vec<String>>,
    #[arg(long)]
    no_reorder_disjoint: bool,
    #[arg(long)]
    no_disjoint_interference: bool,
    #[arg(long)]
    no_left_only: bool,
    #[arg(long)]
    no_ignore_result: bool,
    /// Keep one copy per phi argument and result.
    #[arg(long)]
    phi_naive: bool,
    /// Apply the enabled improvements as is, even where turning some of
    /// them off would need fewer copies.
    #[arg(long)]
    no_fallback: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Only process this function.
    #[arg(long)]
    func: Option<String>,
    /// Evaluate the final function on these arguments.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    args: Option<Vec<i64>>,
    /// Compare the final functions with the inputs in the interpreter.
    #[arg(long)]
    verify: bool,
    #[arg(long, default_value_t = 32)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    stats: bool,
    #[arg(long, value_enum, default_value = "text")]
    stats_format: StatsFormat,
    #[arg(long, value_delimiter = ',')]
    dump_after: Vec<String>,
    /// Print live-in/live-out sets of the psi-SSA form entering out-of-ssa.
    #[arg(long)]
    dump_liveness: bool,
    #[arg(long)]
    dump_interference: bool,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args)]
struct FuzzArgs {
    /// Number of seeds, starting at --seed.
    #[arg(long, default_value_t = 100)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Input vectors per program.
    #[arg(long, default_value_t = 32)]
    vectors: usize,
    #[arg(long, value_enum, default_value = "both")]
    profile: ProfileArg,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

fn opcodes(names: &[String]) -> Result<Vec<Opcode>> {
    names.iter().filter(|n| !n.is_empty()).map(|n| Opcode::from_name(n).ok_or_else(|| anyhow!("unknown opcode `{n}`"))).collect()
}

impl PipelineArgs {
    fn config(&self, default_passes: &str) -> Result<PipelineConfig> {
        let passes = parse_pipeline(self.passes.as_deref().unwrap_or(default_passes))?;
        let mut machine = match self.machine {
            MachineKind::Full => MachineModel::full(),
            MachineKind::Partial => MachineModel::partial(),
        };
        if let Some(p) = &self.predicable {
            machine = machine.with_predicable(&opcodes(p)?);
        }
        if let Some(s) = &self.speculatable {
            machine = machine.with_speculatable(&opcodes(s)?);
        }
        let out_of_ssa = OutOfSsaOptions {
            reorder_disjoint: !self.no_reorder_disjoint,
            disjoint_interference: !self.no_disjoint_interference,
            left_only: !self.no_left_only,
            ignore_result: !self.no_ignore_result,
            phi_naive: self.phi_naive,
            fallback: !self.no_fallback,
        };
        Ok(PipelineConfig { machine, out_of_ssa, ..PipelineConfig::new(passes) })
    }
}

/// Output of one file or fuzz chunk, printed in input order.
#[derive(Default)]
struct Report {
    out: String,
    err: String,
    /// 1 for diagnostics and failed passes, 2 for mismatches.
    code: u8,
}

impl Report {
    fn fail(&mut self, code: u8) {
        self.code = self.code.max(code);
    }

    fn diagnostics(&mut self, diags: &[Diagnostic]) {
        for d in diags {
            let _ = writeln!(self.err, "{d}");
            if d.severity == Severity::Error {
                self.fail(1);
            }
        }
    }

    fn mismatches(&mut self, what: &str, r: &DiffReport) {
        if let Some(m) = r.mismatches.first() {
            let _ = writeln!(self.out, "mismatch {what}: args {:?}: expected {} got {}", m.input.args, m.left.outcome, m.right.outcome);
            self.fail(2);
        }
    }
}

fn run_file(path: &PathBuf, a: &RunArgs, cfg: &PipelineConfig) -> Report {
    let mut rep = Report::default();
    if let Err(e) = run_file_inner(path, a, cfg, &mut rep) {
        let _ = writeln!(rep.err, "error: {}: {e:#}", path.display());
        rep.fail(1);
    }
    rep
}

fn run_file_inner(path: &PathBuf, a: &RunArgs, cfg: &PipelineConfig, rep: &mut Report) -> Result<()> {
    let text = std::fs::read_to_string(path).with_context(|| "cannot read file")?;
    let module = parse_module(&text)?;
    let diags = validate(&module, ValidationMode::NonSsa);
    rep.diagnostics(&diags);
    if rep.code != 0 {
        return Ok(());
    }
    let funcs: Vec<&Function> = match &a.func {
        Some(name) => {
            let name = name.trim_start_matches('@');
            vec![module.function(name).ok_or_else(|| anyhow!("no function @{name}"))?]
        }
        None => module.functions.iter().collect(),
    };
    let ssa_prefix: Vec<Pass> = cfg.passes.iter().copied().take_while(|p| *p != Pass::OutOfSsa).collect();
    let mut total = vec![PassStats::default(); STATS_VARIANTS.len()];
    let mut finals = Vec::new();
    for f in &funcs {
        let run = run_pipeline(f, cfg)?;
        rep.diagnostics(&run.diagnostics);
        for (pass, g) in &run.dumps {
            let _ = writeln!(rep.out, "; @{} after {pass}\n{}", f.name, print_function(g));
        }
        if a.dump_liveness || a.dump_interference {
            let g = if ssa_prefix.is_empty() {
                (*f).clone()
            } else {
                run_pipeline(f, &PipelineConfig { passes: ssa_prefix.clone(), dump_after: Vec::new(), ..cfg.clone() })?.function
            };
            let live = liveness(&g);
            if a.dump_liveness {
                let _ = write!(rep.out, "; @{} liveness\n{}", f.name, live.dump(&g));
            }
            if a.dump_interference {
                let ig = interference_graph(&g, &live, &GuardEnv::build(&g), cfg.out_of_ssa.disjoint_interference);
                let _ = write!(rep.out, "; @{} interference\n{}", f.name, ig.dump(&g));
            }
        }
        if a.stats {
            for (t, s) in total.iter_mut().zip(variant_stats(f, cfg)?) {
                *t = *t + s;
            }
        }
        finals.push((*f, run.function));
    }
    for (_, g) in &finals {
        let _ = writeln!(rep.out, "{}", print_function(g));
    }
    if a.verify {
        for (f, g) in &finals {
            let r = differential_check(f, g, a.trials, a.seed);
            let _ =
                writeln!(rep.out, "verify @{}: {} trials, {} excluded, {} mismatches", f.name, r.trials, r.excluded, r.mismatches.len());
            rep.mismatches(&format!("@{}", f.name), &r);
        }
    }
    if let Some(args) = &a.args {
        let [(_, g)] = finals.as_slice() else {
            bail!("--args needs --func when the file has several functions");
        };
        if args.len() != g.params.len() {
            bail!("@{} takes {} arguments, got {}", g.name, g.params.len(), args.len());
        }
        let mem = vec![0; MEMORY_CELLS];
        let r = eval(g, args, &mem, DEFAULT_BUDGET);
        let list: Vec<String> = args.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(rep.out, "@{}({}) = {}", g.name, list.join(", "), r.outcome);
    }
    if a.stats {
        let name = path.display().to_string();
        match a.stats_format {
            StatsFormat::Text => rep.out.push_str(&stats::text_table(&name, &total)),
            StatsFormat::Csv => rep.out.push_str(&stats::csv_rows(&name, &total)),
        }
    }
    Ok(())
}

fn cmd_run(a: &RunArgs) -> Result<u8> {
    let mut cfg = a.pipeline.config("ssa,ifconvert,out-of-ssa")?;
    for name in &a.dump_after {
        let p = Pass::from_name(name).ok_or_else(|| anyhow!("unknown pass `{name}` in --dump-after"))?;
        if !cfg.passes.contains(&p) {
            bail!("--dump-after={name}: pass not in the pipeline");
        }
        cfg.dump_after.push(p);
    }
    cfg.stats = a.stats;
    cfg.verify = a.verify;
    let reports: Vec<Report> = thread::scope(|s| {
        let handles: Vec<_> = a.files.iter().map(|p| s.spawn(|| run_file(p, a, &cfg))).collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let (mut stdout, mut stderr) = (std::io::stdout().lock(), std::io::stderr().lock());
    if a.stats && a.stats_format == StatsFormat::Csv {
        let _ = stdout.write_all(stats::csv_header().as_bytes());
    }
    let mut code = 0;
    for (path, r) in a.files.iter().zip(&reports) {
        if a.files.len() > 1 && !r.out.is_empty() {
            let _ = writeln!(stdout, "== {}", path.display());
        }
        let _ = stdout.write_all(r.out.as_bytes());
        let _ = stderr.write_all(r.err.as_bytes());
        code = code.max(r.code);
    }
    Ok(code)
}

#[derive(Default)]
struct FuzzTally {
    programs: usize,
    vectors: usize,
    excluded: usize,
    mismatches: usize,
    failures: usize,
}

fn fuzz_one(seed: u64, profile: Profile, vectors: usize, cfg: &PipelineConfig, rep: &mut Report, t: &mut FuzzTally) {
    let f = gen_random_program(seed, profile);
    let what = format!("seed {seed} {}", if profile == Profile::Tiny { "tiny" } else { "small" });
    t.programs += 1;
    let run = match run_pipeline(&f, cfg) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(rep.out, "failed {what}: {e}");
            t.failures += 1;
            rep.fail(1);
            return;
        }
    };
    if run.has_errors() {
        let _ = writeln!(rep.out, "failed {what}: invalid output");
        rep.diagnostics(&run.diagnostics);
        t.failures += 1;
        return;
    }
    let r = differential_check(&f, &run.function, vectors, seed);
    t.vectors += r.trials;
    t.excluded += r.excluded;
    t.mismatches += r.mismatches.len();
    rep.mismatches(&what, &r);
}

fn cmd_fuzz(a: &FuzzArgs) -> Result<u8> {
    let cfg = a.pipeline.config("ssa,fold,ifconvert,psi-promote,out-of-ssa")?;
    let profiles: &[Profile] = match a.profile {
        ProfileArg::Tiny => &[Profile::Tiny],
        ProfileArg::Small => &[Profile::Small],
        ProfileArg::Both => &[Profile::Tiny, Profile::Small],
    };
    let jobs: Vec<(u64, Profile)> = (a.seed..a.seed + a.trials).flat_map(|s| profiles.iter().map(move |p| (s, *p))).collect();
    let workers = thread::available_parallelism().map_or(1, |n| n.get());
    let chunk = jobs.len().div_ceil(workers).max(1);
    let results: Vec<(Report, FuzzTally)> = thread::scope(|s| {
        let handles: Vec<_> = jobs
            .chunks(chunk)
            .map(|part| {
                let cfg = &cfg;
                s.spawn(move || {
                    let (mut rep, mut t) = (Report::default(), FuzzTally::default());
                    for &(seed, profile) in part {
                        fuzz_one(seed, profile, a.vectors, cfg, &mut rep, &mut t);
                    }
                    (rep, t)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut total = FuzzTally::default();
    let mut code = 0;
    let (mut stdout, mut stderr) = (std::io::stdout().lock(), std::io::stderr().lock());
    for (r, t) in &results {
        let _ = stdout.write_all(r.out.as_bytes());
        let _ = stderr.write_all(r.err.as_bytes());
        code = code.max(r.code);
        total.programs += t.programs;
        total.vectors += t.vectors;
        total.excluded += t.excluded;
        total.mismatches += t.mismatches;
        total.failures += t.failures;
    }
    let passes: Vec<&str> = cfg.passes.iter().map(|p| p.name()).collect();
    let _ = writeln!(
        stdout,
        "fuzz {}: {} programs, {} vectors, {} excluded, {} mismatches, {} failures",
        passes.join(","),
        total.programs,
        total.vectors,
        total.excluded,
        total.mismatches,
        total.failures
    );
    Ok(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let r = match &cli.cmd {
        Cmd::Run(a) => cmd_run(a),
        Cmd::Fuzz(a) => cmd_fuzz(a),
    };
    match r {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
