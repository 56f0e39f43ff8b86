#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::PathBuf;
use std::thread;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use psikit_core::analysis::{liveness, DomTree, Pos};
use psikit_core::interp::{differential_check, gen_random_program, Profile};
use psikit_core::ir::{alpha_equivalent, parse_function, validate_function, Function, ValidationMode};
use psikit_core::out_of_ssa::{psi_normalize, rename_and_strip, run_out_of_ssa, to_cssa, OutOfSsaOptions, PassStats};
use psikit_core::pipeline::{parse_pipeline, run_pipeline, PipelineConfig};
use psikit_core::predicates::{GuardEnv, PredExpr};
use psikit_core::ssa::select_form;
use psikit_core::MachineModel;

pub type Check = Result<String, String>;

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

pub fn load(name: &str) -> Function {
    let text = std::fs::read_to_string(golden_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    parse_function(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[derive(Clone, Copy, Debug)]
pub enum Stage {
    Passes(&'static str, bool),
    Normalize,
    Cssa(OutOfSsaOptions),
    SelectForm,
}

pub struct Golden {
    pub input: &'static str,
    pub expected: &'static str,
    pub stage: Stage,
}

const FULL: bool = false;
const PARTIAL: bool = true;

pub fn goldens() -> Vec<Golden> {
    let g = |input, expected, stage| Golden { input, expected, stage };
    vec![
        g("psi_ssa.pir", "psi_ssa.expected.pir", Stage::Passes("ssa,ifconvert", FULL)),
        g("non_disjoint.pir", "non_disjoint.expected.pir", Stage::Passes("ssa,ifconvert,psi-inline", FULL)),
        g("partial.pir", "partial.expected.pir", Stage::Passes("ssa,ifconvert", PARTIAL)),
        g("cssa_order.pir", "cssa_order.cssa.pir", Stage::Cssa(OutOfSsaOptions::default())),
        g("cssa_order.pir", "cssa_order.nonssa.pir", Stage::Passes("ssa,out-of-ssa", FULL)),
        g("cssa_shared.pir", "cssa_shared.cssa.pir", Stage::Cssa(OutOfSsaOptions::default())),
        g("cssa_shared.pir", "cssa_shared.nonssa.pir", Stage::Passes("ssa,out-of-ssa", FULL)),
        g("copy_fold.pir", "copy_fold.expected.pir", Stage::Passes("ssa,fold", FULL)),
        g("normalize.pir", "normalize.expected.pir", Stage::Normalize),
        g("select.pir", "select.expected.pir", Stage::SelectForm),
        g("live_interference.pir", "live_interference.expected.pir", Stage::Cssa(OutOfSsaOptions::baseline())),
        g("interferences.pir", "interferences.expected.pir", Stage::Normalize),
    ]
}

pub fn apply(stage: Stage, f: &Function) -> Result<Function, String> {
    match stage {
        Stage::Passes(passes, partial) => {
            let mut cfg = PipelineConfig::new(parse_pipeline(passes).map_err(|e| e.to_string())?);
            if partial {
                cfg.machine = MachineModel::partial();
            }
            run_pipeline(f, &cfg).map(|r| r.function).map_err(|e| e.to_string())
        }
        Stage::Normalize => {
            let mut g = f.clone();
            let dom = DomTree::build(&g);
            let env = GuardEnv::build(&g);
            psi_normalize(&mut g, &dom, &env, false);
            Ok(g)
        }
        Stage::Cssa(opts) => to_cssa(f, opts).map(|(g, _, _)| g).map_err(|e| e.to_string()),
        Stage::SelectForm => select_form(f).map_err(|e| e.to_string()),
    }
}

/// Expected output reproduced up to renaming, and the transformed function
/// still computes what the input computes.
pub fn check_golden(g: &Golden) -> Result<(), String> {
    let input = load(g.input);
    let expected = load(g.expected);
    let actual = apply(g.stage, &input)?;
    if !alpha_equivalent(&actual, &expected) {
        return Err(format!("{} -> {}: got\n{actual}", g.input, g.expected));
    }
    let r = differential_check(&input, &actual, 64, 11);
    if !r.is_clean() {
        return Err(format!("{}: {:?}", g.input, r.mismatches[0]));
    }
    Ok(())
}

pub fn criterion_goldens() -> Check {
    let start = Instant::now();
    let cases = goldens();
    let failures: Vec<String> = cases.iter().filter_map(|g| check_golden(g).err()).collect();
    let elapsed = start.elapsed();
    if !failures.is_empty() {
        return Err(failures.join("\n"));
    }
    if elapsed > Duration::from_secs(1) {
        return Err(format!("{} goldens took {elapsed:?}", cases.len()));
    }
    Ok(format!("{} golden examples alpha-equivalent in {:.3}s", cases.len(), elapsed.as_secs_f64()))
}

pub fn pipeline_stats(f: &Function, passes: &str) -> Result<(Function, PassStats), String> {
    let cfg = PipelineConfig::new(parse_pipeline(passes).map_err(|e| e.to_string())?);
    let run = run_pipeline(f, &cfg).map_err(|e| e.to_string())?;
    Ok((run.function, run.stats.unwrap_or_default()))
}

/// Loop where a non-normalized psi feeds the phi it reads from.
pub fn criterion_loop_witness() -> Check {
    let f = load("interferences.pir");
    let (plain_f, plain) = pipeline_stats(&f, "ssa,out-of-ssa")?;
    let (promo_f, promo) = pipeline_stats(&f, "ssa,psi-promote,out-of-ssa")?;
    for g in [&plain_f, &promo_f] {
        let r = differential_check(&f, g, 16, 2);
        if !r.is_clean() {
            return Err(format!("mismatch {:?}\n{g}", r.mismatches[0]));
        }
    }
    let counts = |s: &PassStats| (s.copies_normalize, s.copies_psi_congruence, s.copies_phi_congruence);
    if counts(&plain) != (1, 0, 1) {
        return Err(format!("without promotion: {plain:?}"));
    }
    if counts(&promo) != (0, 0, 0) {
        return Err(format!("with promotion: {promo:?}"));
    }
    Ok(format!("without promotion {} copies (normalize 1, phi 1); with psi-promote {} copies", plain.inserted(), promo.inserted()))
}

#[derive(Default, Debug)]
pub struct FuzzOutcome {
    pub programs: usize,
    pub vectors: usize,
    pub excluded: usize,
    pub mismatches: Vec<String>,
}

/// Runs `passes` over generated programs for `seeds` and both profiles,
/// comparing each result with its source on `vectors` inputs.
pub fn fuzz(seeds: std::ops::Range<u64>, passes: &str, machine: MachineModel, vectors: usize) -> FuzzOutcome {
    let mut cfg = PipelineConfig::new(parse_pipeline(passes).unwrap());
    cfg.machine = machine;
    let jobs: Vec<(u64, Profile)> = seeds.flat_map(|s| [(s, Profile::Tiny), (s, Profile::Small)]).collect();
    let workers = thread::available_parallelism().map_or(1, |n| n.get());
    let chunk = jobs.len().div_ceil(workers).max(1);
    let parts: Vec<FuzzOutcome> = thread::scope(|s| {
        let handles: Vec<_> = jobs
            .chunks(chunk)
            .map(|part| {
                let cfg = &cfg;
                s.spawn(move || {
                    let mut out = FuzzOutcome::default();
                    for &(seed, profile) in part {
                        let f = gen_random_program(seed, profile);
                        out.programs += 1;
                        match run_pipeline(&f, cfg) {
                            Ok(run) if !run.has_errors() => {
                                let r = differential_check(&f, &run.function, vectors, seed);
                                out.vectors += r.trials;
                                out.excluded += r.excluded;
                                if let Some(m) = r.mismatches.first() {
                                    out.mismatches.push(format!(
                                        "seed {seed} {profile:?}: args {:?}: {} vs {}",
                                        m.input.args, m.left.outcome, m.right.outcome
                                    ));
                                }
                            }
                            Ok(run) => out.mismatches.push(format!("seed {seed} {profile:?}: {:?}", run.diagnostics)),
                            Err(e) => out.mismatches.push(format!("seed {seed} {profile:?}: {e}")),
                        }
                    }
                    out
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut total = FuzzOutcome::default();
    for p in parts {
        total.programs += p.programs;
        total.vectors += p.vectors;
        total.excluded += p.excluded;
        total.mismatches.extend(p.mismatches);
    }
    total
}

pub const FUZZ_PIPELINE: &str = "ssa,fold,ifconvert,psi-promote,out-of-ssa";

pub fn criterion_fuzz() -> Check {
    let start = Instant::now();
    let out = fuzz(0..1000, FUZZ_PIPELINE, MachineModel::full(), 32);
    let elapsed = start.elapsed();
    if !out.mismatches.is_empty() {
        return Err(format!("{} mismatches, first: {}", out.mismatches.len(), out.mismatches[0]));
    }
    if elapsed > Duration::from_secs(120) {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!(
        "{} programs, {} vectors ({} excluded), 0 mismatches in {:.1}s",
        out.programs,
        out.vectors,
        out.excluded,
        elapsed.as_secs_f64()
    ))
}

// ---- improvements

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flag {
    ReorderDisjoint,
    DisjointInterference,
    LeftOnly,
    IgnoreResult,
}

pub const FLAGS: [Flag; 4] = [Flag::ReorderDisjoint, Flag::DisjointInterference, Flag::LeftOnly, Flag::IgnoreResult];

pub fn with_flag(mut o: OutOfSsaOptions, flag: Flag, on: bool) -> OutOfSsaOptions {
    match flag {
        Flag::ReorderDisjoint => o.reorder_disjoint = on,
        Flag::DisjointInterference => o.disjoint_interference = on,
        Flag::LeftOnly => o.left_only = on,
        Flag::IgnoreResult => o.ignore_result = on,
    }
    o
}

pub const REORDER_WITNESS: &str = "func @reorder(%u, %p:guard) {
b0:
  !%p ? %b = add %u, 1
  %p ? %a = add %u, 2
  %x = psi(%p ? %a, !%p ? %b)
  ret %x
}";

pub const DISJOINT_WITNESS: &str = "func @disjoint(%u, %p:guard) {
b0:
  %p ? %a = add %u, 1
  !%p ? %b = add %u, 2
  %x = psi(%p ? %a, !%p ? %b)
  %p ? store 0, %a
  ret %x
}";

pub fn witnesses() -> Vec<(Flag, Function)> {
    let live = load("live_interference.pir");
    vec![
        (Flag::ReorderDisjoint, parse_function(REORDER_WITNESS).unwrap()),
        (Flag::DisjointInterference, parse_function(DISJOINT_WITNESS).unwrap()),
        (Flag::LeftOnly, live.clone()),
        (Flag::IgnoreResult, live),
    ]
}

/// Inserted copies with the flag off and on, every other improvement on
/// and no fallback, so the improvement alone is measured.
pub fn witness_counts(flag: Flag, f: &Function) -> Result<(usize, usize), String> {
    let mut counts = [0; 2];
    for (i, on) in [false, true].into_iter().enumerate() {
        let raw = OutOfSsaOptions { fallback: false, ..OutOfSsaOptions::default() };
        let opts = with_flag(raw, flag, on);
        let (g, stats) = run_out_of_ssa(f, opts).map_err(|e| e.to_string())?;
        let r = differential_check(f, &g, 64, 5);
        if !r.is_clean() {
            return Err(format!("{flag:?} on={on}: {:?}", r.mismatches[0]));
        }
        counts[i] = stats.inserted();
    }
    Ok((counts[0], counts[1]))
}

/// Psi-SSA functions the corpus-wide properties are checked on: golden
/// inputs after `ssa`, and generated programs after several pipelines on
/// both machines.
pub fn corpus(seeds: u64) -> Vec<(String, Function, Function)> {
    let mut out = Vec::new();
    let mut names: Vec<&str> = goldens().iter().map(|g| g.input).collect();
    names.dedup();
    for name in names {
        let f = load(name);
        let g = apply(Stage::Passes("ssa", FULL), &f).unwrap();
        out.push((name.to_string(), f, g));
    }
    let pipelines = ["ssa,ifconvert", "ssa,fold,ifconvert", "ssa,ifconvert,psi-promote", "ssa,fold,ifconvert,psi-promote,fold"];
    for seed in 0..seeds {
        for profile in [Profile::Tiny, Profile::Small] {
            let f = gen_random_program(seed, profile);
            let p = pipelines[seed as usize % pipelines.len()];
            let partial = seed % 2 == 1;
            let g = apply(Stage::Passes(p, partial), &f).unwrap();
            out.push((format!("seed {seed} {profile:?} {p} partial={partial}"), f, g));
        }
    }
    out
}

pub fn criterion_improvements() -> Check {
    let mut report = String::new();
    for (flag, f) in witnesses() {
        let (off, on) = witness_counts(flag, &f)?;
        if on >= off {
            return Err(format!("{flag:?}: {off} copies off, {on} on"));
        }
        let _ = write!(report, "{flag:?} {off}->{on}; ");
    }
    let corpus = corpus(300);
    let (checked, raw_losses) = monotonicity(&corpus)?;
    let _ = write!(report, "monotone on {} corpus functions ({checked} comparisons, {raw_losses} lost without fallback)", corpus.len());
    Ok(report)
}

/// Toggles each improvement from the baseline and from the default options
/// on every corpus function; with fallback (the default) the copy count
/// must never grow. Returns the comparisons made and how many of them the
/// improvement loses when applied without fallback.
pub fn monotonicity(corpus: &[(String, Function, Function)]) -> Result<(usize, usize), String> {
    let per_function: Vec<Result<(usize, usize), String>> = thread::scope(|s| {
        let workers = thread::available_parallelism().map_or(1, |n| n.get());
        let chunk = corpus.len().div_ceil(workers).max(1);
        let handles: Vec<_> = corpus
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    let (mut checked, mut losses) = (0, 0);
                    for (name, _, g) in part {
                        for base in [OutOfSsaOptions::baseline(), OutOfSsaOptions::default()] {
                            for flag in FLAGS {
                                let total = |o: OutOfSsaOptions, on| {
                                    run_out_of_ssa(g, with_flag(o, flag, on))
                                        .map(|(_, s)| s.total_copies)
                                        .map_err(|e| format!("{name}: {e}"))
                                };
                                let (off, on) = (total(base, false)?, total(base, true)?);
                                if on > off {
                                    return Err(format!("{name}: {flag:?} raises copies {off} -> {on}"));
                                }
                                let raw = OutOfSsaOptions { fallback: false, ..base };
                                if total(raw, true)? > total(raw, false)? {
                                    losses += 1;
                                }
                                checked += 1;
                            }
                        }
                    }
                    Ok((checked, losses))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut sum = (0, 0);
    for r in per_function {
        let (c, l) = r?;
        sum = (sum.0 + c, sum.1 + l);
    }
    Ok(sum)
}

// ---- oracles

/// Independent formula representation for the truth-table oracle.
#[derive(Clone, Debug)]
pub enum Formula {
    Var(u32),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn random(rng: &mut ChaCha8Rng, symbols: u32, depth: u32) -> Formula {
        if depth == 0 || rng.gen_bool(0.3) {
            return Formula::Var(rng.gen_range(0..symbols));
        }
        let a = Box::new(Formula::random(rng, symbols, depth - 1));
        match rng.gen_range(0..3) {
            0 => Formula::Not(a),
            1 => Formula::And(a, Box::new(Formula::random(rng, symbols, depth - 1))),
            _ => Formula::Or(a, Box::new(Formula::random(rng, symbols, depth - 1))),
        }
    }

    pub fn holds(&self, bits: u32) -> bool {
        match self {
            Formula::Var(i) => bits >> i & 1 == 1,
            Formula::Not(a) => !a.holds(bits),
            Formula::And(a, b) => a.holds(bits) && b.holds(bits),
            Formula::Or(a, b) => a.holds(bits) || b.holds(bits),
        }
    }

    pub fn to_pred(&self) -> PredExpr {
        match self {
            Formula::Var(i) => PredExpr::sym(*i),
            Formula::Not(a) => a.to_pred().not(),
            Formula::And(a, b) => a.to_pred().and(b.to_pred()),
            Formula::Or(a, b) => a.to_pred().or(b.to_pred()),
        }
    }
}

/// Subset and disjointness decisions on random formula pairs over 1 to 8
/// symbols, against exhaustive evaluation.
pub fn formula_oracle(pairs: usize, seed: u64) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let env = GuardEnv::build(&parse_function("func @e() {\nb0:\n  ret\n}").unwrap());
    for _ in 0..pairs {
        let n = rng.gen_range(1..=8);
        let a = Formula::random(&mut rng, n, 4);
        let b = if rng.gen_bool(0.2) {
            Formula::And(Box::new(a.clone()), Box::new(Formula::random(&mut rng, n, 2)))
        } else {
            Formula::random(&mut rng, n, 4)
        };
        let rows = 0..1u32 << n;
        let subset = rows.clone().all(|r| !a.holds(r) || b.holds(r));
        let disjoint = rows.clone().all(|r| !(a.holds(r) && b.holds(r)));
        let (pa, pb) = (a.to_pred(), b.to_pred());
        if env.subset(&pa, &pb) != subset || env.disjoint(&pa, &pb) != disjoint {
            return Err(format!("{pa} vs {pb}: oracle subset={subset} disjoint={disjoint}"));
        }
    }
    Ok(pairs)
}

/// Guard registers built from eight guard parameters by random
/// `and`/`or`/`not`; every derived guard is stored to memory so the
/// interpreter reports its value. Returns (source, number of derived guards).
pub fn guard_program(rng: &mut ChaCha8Rng) -> (String, usize) {
    let mut text = String::from("func @g(%s0:guard, %s1:guard, %s2:guard, %s3:guard, %s4:guard, %s5:guard, %s6:guard, %s7:guard) {\nb0:\n");
    let mut names: Vec<String> = (0..8).map(|i| format!("%s{i}")).collect();
    let derived = rng.gen_range(4..=12);
    for i in 0..derived {
        let pick = |rng: &mut ChaCha8Rng| names[rng.gen_range(0..names.len())].clone();
        let line = match rng.gen_range(0..3) {
            0 => format!("  %g{i} = not {}", pick(rng)),
            1 => format!("  %g{i} = and {}, {}", pick(rng), pick(rng)),
            _ => format!("  %g{i} = or {}, {}", pick(rng), pick(rng)),
        };
        text.push_str(&line);
        text.push('\n');
        names.push(format!("%g{i}"));
    }
    for i in 0..derived {
        let _ = writeln!(text, "  store {i}, %g{i}");
    }
    text.push_str("  ret\n}\n");
    (text, derived)
}

/// Predicate decisions on guard registers against the interpreter run on
/// all 256 assignments of the parameters.
pub fn register_oracle(functions: usize, seed: u64) -> Result<usize, String> {
    use psikit_core::interp::{eval, DEFAULT_BUDGET, MEMORY_CELLS};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = 0;
    for _ in 0..functions {
        let (text, derived) = guard_program(&mut rng);
        let f = parse_function(&text).map_err(|e| e.to_string())?;
        let env = GuardEnv::build(&f);
        let table: Vec<Vec<bool>> = (0..256u32)
            .map(|bits| {
                let args: Vec<i64> = (0..8).map(|i| (bits >> i & 1) as i64).collect();
                let r = eval(&f, &args, &[0; MEMORY_CELLS], DEFAULT_BUDGET);
                r.memory[..derived].iter().map(|v| *v != 0).collect()
            })
            .collect();
        for i in 0..derived {
            for j in 0..derived {
                let subset = table.iter().all(|row| !row[i] || row[j]);
                let disjoint = table.iter().all(|row| !(row[i] && row[j]));
                let vi = env.var(f.lookup(&format!("g{i}")).unwrap());
                let vj = env.var(f.lookup(&format!("g{j}")).unwrap());
                if env.subset(&vi, &vj) != subset || env.disjoint(&vi, &vj) != disjoint {
                    return Err(format!("g{i} vs g{j} in\n{text}"));
                }
                pairs += 1;
            }
        }
    }
    Ok(pairs)
}

/// Random psi-SSA function whose psis the select rewrite accepts: a
/// diamond, each block holding chains of guarded definitions merged by a
/// psi, with some arguments read again after their psi.
pub fn random_psi_function(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = format!("func @r{seed}(%u0, %u1, %g0:guard, %g1:guard, %g2:guard) {{\n");
    let mut n = 0;
    let mut fresh = |p: &str| {
        n += 1;
        format!("%{p}{n}")
    };
    let mut entry_vals = vec!["%u0".to_string(), "%u1".to_string()];
    let guards = ["%g0", "!%g0", "%g1", "!%g1", "%g2", "!%g2"];
    let diamond = rng.gen_bool(0.6);
    let labels: &[&str] = if diamond { &["b0", "b1", "b2", "b3"] } else { &["b0"] };
    let mut arm_results: Vec<String> = Vec::new();
    for (bi, label) in labels.iter().enumerate() {
        let _ = writeln!(text, "{label}:");
        let mut vals = entry_vals.clone();
        if bi == 3 {
            let m = fresh("m");
            let _ = writeln!(text, "  {m} = phi(b1: {}, b2: {})", arm_results[0], arm_results[1]);
            vals.push(m);
        }
        let mut local_guards: Vec<String> = guards.iter().map(|s| s.to_string()).collect();
        for _ in 0..rng.gen_range(1..=3) {
            if rng.gen_bool(0.4) {
                let c = fresh("c");
                let (x, y) = (&vals[rng.gen_range(0..vals.len())], &vals[rng.gen_range(0..vals.len())]);
                let _ = writeln!(text, "  {c} = cmp_lt {x}, {y}");
                local_guards.push(c.clone());
                local_guards.push(format!("!{c}"));
            }
            let first = if rng.gen_bool(0.3) && vals.len() > 2 {
                vals[rng.gen_range(2..vals.len())].clone()
            } else {
                let a = fresh("a");
                let x = &vals[rng.gen_range(0..vals.len())];
                let _ = writeln!(text, "  {a} = add {x}, {}", rng.gen_range(-3..=3));
                vals.push(a.clone());
                a
            };
            let mut args = vec![format!("1 ? {first}")];
            let mut guarded = Vec::new();
            for _ in 0..rng.gen_range(1..=3) {
                if rng.gen_bool(0.3) {
                    let t = fresh("t");
                    let x = &vals[rng.gen_range(0..vals.len())];
                    let _ = writeln!(text, "  {t} = mul {x}, 3");
                    vals.push(t);
                }
                let v = fresh("v");
                let x = &vals[rng.gen_range(0..vals.len())];
                if rng.gen_bool(0.15) {
                    let _ = writeln!(text, "  {v} = sub {x}, 1");
                    args.push(format!("1 ? {v}"));
                } else {
                    let g = local_guards[rng.gen_range(0..local_guards.len())].clone();
                    let _ = writeln!(text, "  {g} ? {v} = sub {x}, 1");
                    args.push(format!("{g} ? {v}"));
                    guarded.push((g, v));
                }
            }
            let x = fresh("x");
            let _ = writeln!(text, "  {x} = psi({})", args.join(", "));
            vals.push(x);
            if let Some((g, v)) = guarded.first() {
                if rng.gen_bool(0.5) {
                    let w = fresh("w");
                    let _ = writeln!(text, "  {g} ? {w} = add {v}, 1");
                    let _ = writeln!(text, "  {g} ? store 1, {w}");
                }
            }
        }
        let last = vals.last().unwrap().clone();
        match (diamond, bi) {
            (true, 0) => {
                let _ = writeln!(text, "  br %g0, b1, b2");
                entry_vals = vals;
            }
            (true, 1 | 2) => {
                let _ = writeln!(text, "  goto b3");
                arm_results.push(last);
            }
            _ => {
                let _ = writeln!(text, "  ret {last}");
            }
        }
    }
    text.push_str("}\n");
    text
}

/// Live sets of the original variables before every original instruction
/// and at block boundaries: psi rule on `f` versus plain liveness of its
/// select form.
pub fn compare_select_liveness(f: &Function) -> Result<(), String> {
    let g = select_form(f).map_err(|e| format!("{e}\n{f}"))?;
    let (lf, lg) = (liveness(f), liveness(&g));
    let orig = |set: Vec<psikit_core::Var>| -> Vec<psikit_core::Var> {
        let mut v: Vec<_> = set.into_iter().filter(|x| (x.0 as usize) < f.var_count()).collect();
        v.sort();
        v
    };
    for b in f.block_ids() {
        let bi = b.index();
        if orig(lf.live_in[bi].iter().collect()) != orig(lg.live_in[bi].iter().collect())
            || orig(lf.live_out[bi].iter().collect()) != orig(lg.live_out[bi].iter().collect())
        {
            return Err(format!("block {} boundary sets differ\n{f}\n{g}", f.block(b).name));
        }
        // Instruction i of f starts at index j of g; rewritten arguments
        // take one or two extra instructions.
        let mut j = 0;
        for i in 0..f.block(b).insts.len() {
            let a = orig(lf.live_before(f, Pos::inst(b, i)).iter().collect());
            let c = orig(lg.live_before(&g, Pos::inst(b, j)).iter().collect());
            if a != c {
                return Err(format!("before {}[{i}] psi rule {a:?} select form {c:?}\n{f}\n{g}", f.block(b).name));
            }
            j += 1;
            while j < g.block(b).insts.len() && inserted_by_rewrite(&g, b, j, f.var_count()) {
                j += 1;
            }
        }
    }
    let r = differential_check(f, &g, 32, 3);
    if !r.is_clean() {
        return Err(format!("select form disagrees: {:?}\n{f}\n{g}", r.mismatches[0]));
    }
    Ok(())
}

/// The select merging a rewritten argument, or the constant guard it reads.
fn inserted_by_rewrite(g: &Function, b: psikit_core::BlockId, j: usize, original: usize) -> bool {
    use psikit_core::ir::Opcode;
    g.block(b).insts[j]
        .as_op()
        .is_some_and(|o| o.opcode == Opcode::Select || (o.opcode == Opcode::Const && o.dst.is_some_and(|d| d.0 as usize >= original)))
}

/// Psi arguments, other than the last, that are dead right before their
/// psi: where the psi rule differs from treating the psi as a plain use.
pub fn early_deaths(f: &Function) -> usize {
    let live = liveness(f);
    let mut n = 0;
    for x in f.psi_results() {
        let (b, k) = f.find_psi(x).unwrap();
        let before = live.live_before(f, Pos::inst(b, k));
        let args = &f.psi(x).unwrap().args;
        n += args[..args.len() - 1].iter().filter(|a| !before.contains(a.value)).count();
    }
    n
}

/// Returns the psis seen and how many arguments die before their psi.
pub fn liveness_oracle(functions: u64) -> Result<(u64, usize), String> {
    let mut psis = 0;
    let mut early = 0;
    for seed in 0..functions {
        let text = random_psi_function(seed);
        let f = parse_function(&text).map_err(|e| format!("{e}\n{text}"))?;
        let diags = validate_function(&f, ValidationMode::Ssa);
        if !diags.is_empty() {
            return Err(format!("{diags:?}\n{text}"));
        }
        psis += f.psi_results().len() as u64;
        early += early_deaths(&f);
        compare_select_liveness(&f)?;
    }
    Ok((psis, early))
}

pub fn criterion_oracles() -> Check {
    let pairs = formula_oracle(2000, 1)?;
    let reg_pairs = register_oracle(40, 2)?;
    let (psis, early) = liveness_oracle(200)?;
    if early == 0 {
        return Err("no psi argument dies before its psi; the liveness comparison is vacuous".into());
    }
    Ok(format!(
        "{pairs} formula pairs and {reg_pairs} guard-register pairs match truth tables; psi-rule liveness equals select-form liveness on 200 functions ({psis} psis, {early} arguments dead before their psi)"
    ))
}

// ---- normalization and CSSA

/// Normalization is a fixpoint after one run; the renamed program
/// validates as non-SSA and matches both the psi-SSA input and the source.
pub fn check_cssa(name: &str, src: &Function, g: &Function) -> Result<(), String> {
    let mut h = g.clone();
    let dom = DomTree::build(&h);
    let env = GuardEnv::build(&h);
    psi_normalize(&mut h, &dom, &env, false);
    let dom = DomTree::build(&h);
    let env = GuardEnv::build(&h);
    let again = psi_normalize(&mut h, &dom, &env, false);
    if again != 0 {
        return Err(format!("{name}: second normalization inserted {again} copies\n{g}"));
    }
    let opts = OutOfSsaOptions::default();
    let (cssa, cc, _) = to_cssa(g, opts).map_err(|e| format!("{name}: {e}"))?;
    let env = GuardEnv::build(&cssa);
    let out = rename_and_strip(&cssa, &cc, &env, opts.ignore_result).map_err(|e| format!("{name}: {e}"))?;
    let diags = validate_function(&out, ValidationMode::NonSsa);
    if !diags.is_empty() {
        return Err(format!("{name}: {diags:?}\n{out}"));
    }
    for (what, reference) in [("psi-SSA input", g), ("source", src)] {
        let r = differential_check(reference, &out, 32, 9);
        if !r.is_clean() {
            return Err(format!("{name}: differs from {what}: {:?}\n{g}\n{out}", r.mismatches[0]));
        }
    }
    Ok(())
}

pub fn criterion_cssa() -> Check {
    let corpus = corpus(300);
    for (name, src, g) in &corpus {
        check_cssa(name, src, g)?;
    }
    Ok(format!("normalize fixpoint, valid non-SSA output and 0 mismatches on {} corpus functions", corpus.len()))
}
