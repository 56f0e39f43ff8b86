use super::*;
use crate::interp::{differential_check, gen_random_program, Profile};
use crate::ir::parse_function;
use crate::ssa::{auto_promote, construct_ssa, copy_fold, is_normalized};
use crate::MachineModel;

const NORMALIZE: &str = "func @norm(%u, %p:guard, %q:guard, %r:guard, %s:guard) {
b0:
  %pq = or %p, %q
  %rs = or %r, %s
  %d = add %u, 1
  %p ? %a = add %u, 2
  %r ? %c = add %u, 3
  %b = add %u, 4
  %x = psi(%p ? %a, %q ? %b)
  %y = psi(%r ? %c, %s ? %d)
  %z = psi(%pq ? %x, %rs ? %y)
  ret %z
}";

const LIVE: &str = "func @live(%u, %p:guard, %q:guard, %r:guard, %s:guard) {
b0:
  %p ? %a = add %u, 1
  %q ? %b = add %u, 2
  %r ? %c = add %u, 3
  %x = psi(%p ? %a, %q ? %b, %r ? %c)
  %s ? %d = add %b, 1
  %s ? store 0, %d
  ret %x
}";

const CSSA2: &str = "func @cssa2(%u, %p:guard, %q:guard) {
b0:
  %a = add %u, 1
  %p ? %b = add %u, 2
  %q ? %c = add %u, 3
  %x = psi(1 ? %a, %p ? %b)
  %y = psi(1 ? %a, %q ? %c)
  %o = add %x, %y
  ret %o
}";

fn check(src: &str, opts: OutOfSsaOptions) -> PassStats {
    let f = parse_function(src).unwrap();
    let (g, stats) = run_out_of_ssa(&f, opts).unwrap();
    let r = differential_check(&f, &g, 64, 7);
    assert!(r.is_clean(), "{:?}\n{g}", r.mismatches[0]);
    assert_eq!(stats.total_copies, stats.copies_before + stats.inserted());
    stats
}

#[test]
fn normalize_figure() {
    let mut f = parse_function(NORMALIZE).unwrap();
    let dom = DomTree::build(&f);
    let env = GuardEnv::build(&f);
    assert_eq!(psi_normalize(&mut f, &dom, &env, false), 3);
    let env = GuardEnv::build(&f);
    for x in f.psi_results() {
        assert!(is_normalized(&f, x, &dom, &env), "{f}");
    }
    assert_eq!(psi_normalize(&mut f, &dom, &env, false), 0);
    check(NORMALIZE, OutOfSsaOptions::baseline());
}

#[test]
fn live_interference_figure() {
    assert_eq!(check(LIVE, OutOfSsaOptions::baseline()).copies_psi_congruence, 3);
    let left = OutOfSsaOptions { left_only: true, ..OutOfSsaOptions::baseline() };
    assert_eq!(check(LIVE, left).copies_psi_congruence, 2);
    let result = OutOfSsaOptions { ignore_result: true, ..OutOfSsaOptions::baseline() };
    assert_eq!(check(LIVE, result).copies_psi_congruence, 2);
    assert_eq!(check(LIVE, OutOfSsaOptions::default()).copies_psi_congruence, 1);
}

#[test]
fn shared_argument() {
    let s = check(CSSA2, OutOfSsaOptions::default());
    assert_eq!(s.inserted(), 1);
    assert_eq!(check(CSSA2, OutOfSsaOptions::baseline()).inserted(), 2);
}

#[test]
fn out_of_order_arguments() {
    let src = "func @f(%u, %p:guard) {\nb0:\n  %p ? %b = add %u, 1\n  %a = add %u, 2\n  %x = psi(1 ? %a, %p ? %b)\n  ret %x\n}";
    let s = check(src, OutOfSsaOptions::default());
    assert_eq!((s.copies_normalize, s.inserted()), (1, 1));
}

#[test]
fn disjoint_reorder() {
    let src = "func @f(%u, %p:guard) {\nb0:\n  !%p ? %b = add %u, 1\n  %p ? %a = add %u, 2\n  %x = psi(%p ? %a, !%p ? %b)\n  ret %x\n}";
    let on = OutOfSsaOptions { reorder_disjoint: true, ..OutOfSsaOptions::baseline() };
    assert_eq!(check(src, OutOfSsaOptions::baseline()).inserted(), 1);
    assert_eq!(check(src, on).inserted(), 0);
}

#[test]
fn lost_copy_loop() {
    let src = "func @f(%n) {
b0:
  %i0 = const 0
  goto b1
b1:
  %i = phi(b0: %i0, b1: %i1)
  %i1 = add %i, 1
  %t = cmp_lt %i1, %n
  br %t, b1, b2
b2:
  ret %i
}";
    let s = check(src, OutOfSsaOptions::default());
    assert_eq!(s.copies_phi_congruence, 1);
    let naive = OutOfSsaOptions { phi_naive: true, ..OutOfSsaOptions::default() };
    assert_eq!(check(src, naive).copies_phi_congruence, 3);
}

#[test]
fn rejects_non_ssa() {
    let f = parse_function("func @f() {\nb0:\n  %x = const 1\n  %x = const 2\n  ret %x\n}").unwrap();
    assert!(matches!(run_out_of_ssa(&f, OutOfSsaOptions::default()), Err(OutOfSsaError::NotSsa(_))));
}

#[test]
fn random_pipelines() {
    let machines = [MachineModel::full(), MachineModel::partial()];
    let variants =
        [OutOfSsaOptions::default(), OutOfSsaOptions::baseline(), OutOfSsaOptions { phi_naive: true, ..OutOfSsaOptions::default() }];
    let seeds: u64 = option_env!("FUZZ_SEEDS").map_or(120, |s| s.parse().unwrap());
    for seed in 0..seeds {
        for profile in [Profile::Tiny, Profile::Small] {
            let f = gen_random_program(seed, profile);
            let mut g = construct_ssa(&f).function;
            let env = GuardEnv::build(&g);
            copy_fold(&mut g, &env);
            let m = &machines[seed as usize % 2];
            crate::ifconvert::if_convert_all(&mut g, m);
            if seed % 3 == 0 {
                let env = GuardEnv::build(&g);
                auto_promote(&mut g, &env, m);
            }
            for opts in variants {
                let (h, stats) = match run_out_of_ssa(&g, opts) {
                    Ok(r) => r,
                    Err(e) => panic!("seed {seed} {profile:?} {opts:?}: {e}\n{g}"),
                };
                assert_eq!(stats.total_copies, stats.copies_before + stats.inserted());
                let r = differential_check(&f, &h, 24, seed);
                assert!(r.is_clean(), "seed {seed} {profile:?} {opts:?}: {:?}\n{g}\n{h}", r.mismatches[0]);
            }
        }
    }
}
