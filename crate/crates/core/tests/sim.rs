use kernel_trellis::kernel::{make_arikan_kernel, random_kernel};
use kernel_trellis::plan::compile_plan;
use kernel_trellis::polar::CodeSpec;
use kernel_trellis::sim::{genie_frozen_set, run_fer, run_sweep, ChannelParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn f2_code(m: u32, k: usize) -> (CodeSpec, kernel_trellis::KernelPlan) {
    let kernel = make_arikan_kernel(1).unwrap();
    let plan = compile_plan(&kernel).unwrap();
    let frozen = genie_frozen_set(&kernel, &plan, m, k, 2.0, 2000, 1).unwrap();
    (CodeSpec::new(kernel, m, frozen).unwrap(), plan)
}

#[test]
fn channel_parameter_checks() {
    assert!(ChannelParams::new(1.0, 0.0).is_err());
    assert!(ChannelParams::new(1.0, 1.5).is_err());
    assert!(ChannelParams::new(f64::NAN, 0.5).is_err());
    let p = ChannelParams::new(0.0, 0.5).unwrap();
    assert!((p.sigma2() - 1.0).abs() < 1e-12);
}

#[test]
fn high_snr_has_no_errors() {
    let (spec, plan) = f2_code(4, 8);
    let p = run_fer(&spec, &plan, &ChannelParams::new(30.0, spec.rate()).unwrap(), 500, 1, 3).unwrap();
    assert_eq!((p.trials, p.errors), (500, 0));
    assert!(run_fer(&spec, &plan, &ChannelParams::new(1.0, 0.5).unwrap(), 0, 1, 3).is_err());
}

#[test]
fn sweeps_are_reproducible() {
    let (spec, plan) = f2_code(3, 4);
    let a = run_sweep(&spec, &plan, &[0.0, 2.0], 300, 2, 9).unwrap();
    let b = run_sweep(&spec, &plan, &[0.0, 2.0], 300, 2, 9).unwrap();
    assert_eq!(a.to_tsv(), b.to_tsv());
    let c = run_sweep(&spec, &plan, &[0.0, 2.0], 300, 2, 10).unwrap();
    assert_ne!(a.points, c.points);
    let tsv = a.to_tsv();
    assert!(tsv.starts_with("# code (8,4) "), "{tsv}");
    assert_eq!(tsv.lines().count(), 4);
}

#[test]
fn fer_falls_with_snr() {
    let (spec, plan) = f2_code(4, 8);
    let r = run_sweep(&spec, &plan, &[1.0, 4.0], 10_000, 1, 5).unwrap();
    assert!(r.points[1].fer() < r.points[0].fer(), "{}", r.to_tsv());
}

#[test]
fn sc_operation_counts_equal_plan_cost() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let kernel = random_kernel(4, &mut rng);
    let plan = compile_plan(&kernel).unwrap();
    let spec = CodeSpec::new(kernel, 2, [0, 1, 2, 4, 5, 8]).unwrap();
    let p = run_fer(&spec, &plan, &ChannelParams::new(2.0, spec.rate()).unwrap(), 50, 1, 2).unwrap();
    let per_kernel = plan.cost().total();
    // n/l kernel instances per level, m levels
    assert_eq!(p.avg_adds(), (8 * per_kernel.adds) as f64);
    assert_eq!(p.avg_comps(), (8 * per_kernel.comps) as f64);
}

#[test]
fn genie_set_prefers_reliable_positions() {
    let kernel = make_arikan_kernel(1).unwrap();
    let plan = compile_plan(&kernel).unwrap();
    let frozen = genie_frozen_set(&kernel, &plan, 3, 4, 1.0, 4000, 2).unwrap();
    assert_eq!(frozen.len(), 4);
    // the first synthesized channel is the worst, the last the best
    assert!(frozen.contains(&0));
    assert!(!frozen.contains(&7));
    assert!(genie_frozen_set(&kernel, &plan, 3, 9, 1.0, 10, 2).is_err());
}
