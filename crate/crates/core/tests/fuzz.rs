mod common;

use common::fuzz;
use psikit_core::interp::{differential_check, gen_random_program, Profile};
use psikit_core::out_of_ssa::OutOfSsaOptions;
use psikit_core::pipeline::{parse_pipeline, run_pipeline, PipelineConfig};
use psikit_core::MachineModel;

fn assert_clean(passes: &str, machine: MachineModel, seeds: u64) {
    let out = fuzz(0..seeds, passes, machine, 16);
    assert_eq!(out.programs as u64, 2 * seeds);
    assert!(out.mismatches.is_empty(), "{passes}: {}", out.mismatches.join("\n"));
}

#[test]
fn default_pipeline_full_machine() {
    assert_clean(common::FUZZ_PIPELINE, MachineModel::full(), 300);
}

#[test]
fn default_pipeline_partial_machine() {
    assert_clean(common::FUZZ_PIPELINE, MachineModel::partial(), 300);
}

#[test]
fn every_pass() {
    for passes in [
        "ssa,out-of-ssa",
        "ssa,fold,out-of-ssa",
        "ssa,ifconvert,psi-inline,psi-reduce,out-of-ssa",
        "ssa,ifconvert,psi-promote,psi-inline,fold,out-of-ssa",
        "ssa,ifconvert,out-of-ssa,ssa,ifconvert,out-of-ssa",
    ] {
        assert_clean(passes, MachineModel::partial(), 80);
    }
}

#[test]
fn every_option_set() {
    let base = OutOfSsaOptions::baseline();
    let sets = [
        base,
        OutOfSsaOptions { phi_naive: true, ..base },
        OutOfSsaOptions { fallback: false, ..OutOfSsaOptions::default() },
        OutOfSsaOptions { reorder_disjoint: true, ..base },
        OutOfSsaOptions { disjoint_interference: true, ..base },
        OutOfSsaOptions { left_only: true, ..base },
        OutOfSsaOptions { ignore_result: true, ..base },
    ];
    for opts in sets {
        let mut cfg = PipelineConfig::new(parse_pipeline(common::FUZZ_PIPELINE).unwrap());
        cfg.out_of_ssa = opts;
        for seed in 0..60 {
            for profile in [Profile::Tiny, Profile::Small] {
                let f = gen_random_program(seed, profile);
                let run = run_pipeline(&f, &cfg).unwrap();
                assert!(!run.has_errors(), "{opts:?} seed {seed}: {:?}", run.diagnostics);
                let r = differential_check(&f, &run.function, 16, seed);
                assert!(r.is_clean(), "{opts:?} seed {seed} {profile:?}: {:?}", r.mismatches[0]);
            }
        }
    }
}
