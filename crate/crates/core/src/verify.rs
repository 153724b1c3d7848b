//! Oracle-equivalence suite: plan-based phase LLRs against the exhaustive
//! oracle, plus runtime operation counts against the compiled cost summary.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::kernel::{random_kernel, Kernel};
use crate::oracles::brute_force_llr;
use crate::plan::compile_plan;
use crate::processor::ProcessorState;
use crate::sim::trial_seed;

/// Kernels up to this size are checked over every decision prefix.
pub const EXHAUSTIVE_PREFIX_MAX_L: usize = 6;
/// Random decision sequences per LLR vector for larger kernels.
pub const RANDOM_PREFIXES: usize = 200;

/// Tolerance `1e-9 · max(1, |oracle|)`.
pub fn within_tolerance(got: f64, want: f64) -> bool {
    (got - want).abs() <= 1e-9 * want.abs().max(1.0)
}

/// One failed comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct Mismatch {
    pub trial: u64,
    pub phase: usize,
    pub prefix: Vec<bool>,
    pub got: f64,
    pub want: f64,
}

/// Outcome of a verification run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifyReport {
    pub trials: u64,
    pub kernels: u64,
    pub llr_checks: u64,
    pub max_rel_error: f64,
    pub mismatches: Vec<Mismatch>,
    /// Kernel passes whose runtime counters differed from the cost summary.
    pub count_mismatches: u64,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty() && self.count_mismatches == 0
    }

    /// Deterministic text summary, at most ten mismatches listed.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "trials\t{}", self.trials);
        let _ = writeln!(out, "kernels\t{}", self.kernels);
        let _ = writeln!(out, "llr_checks\t{}", self.llr_checks);
        let _ = writeln!(out, "max_rel_error\t{:.3e}", self.max_rel_error);
        let _ = writeln!(out, "llr_mismatches\t{}", self.mismatches.len());
        let _ = writeln!(out, "count_mismatches\t{}", self.count_mismatches);
        for m in self.mismatches.iter().take(10) {
            let prefix: String = m.prefix.iter().map(|&b| if b { '1' } else { '0' }).collect();
            let _ = writeln!(
                out,
                "mismatch\ttrial {}\tphase {}\tprefix {}\tgot {:e}\twant {:e}",
                m.trial, m.phase, prefix, m.got, m.want
            );
        }
        out.push_str(if self.passed() { "PASS\n" } else { "FAIL\n" });
        out
    }

    /// Accumulates another report into this one.
    pub fn merge(&mut self, other: VerifyReport) {
        self.trials += other.trials;
        self.kernels += other.kernels;
        self.llr_checks += other.llr_checks;
        self.max_rel_error = self.max_rel_error.max(other.max_rel_error);
        self.mismatches.extend(other.mismatches);
        self.count_mismatches += other.count_mismatches;
    }
}

fn decision_sequences(l: usize, rng: &mut impl Rng) -> Vec<Vec<bool>> {
    if l <= EXHAUSTIVE_PREFIX_MAX_L {
        (0..1u64 << l)
            .map(|s| (0..l).map(|j| (s >> j) & 1 == 1).collect())
            .collect()
    } else {
        (0..RANDOM_PREFIXES)
            .map(|_| (0..l).map(|_| rng.random()).collect())
            .collect()
    }
}

/// Checks one kernel on `trials` LLR vectors drawn uniformly from `[-4, 4)`.
/// Trial `t` uses the stream `trial_seed(seed, first_trial + t)`.
pub fn verify_kernel(kernel: &Kernel, trials: u64, seed: u64, first_trial: u64) -> Result<VerifyReport> {
    let plan = compile_plan(kernel)?;
    let l = kernel.size();
    let total = plan.cost().total();
    let mut report = VerifyReport {
        kernels: 1,
        ..Default::default()
    };
    for t in first_trial..first_trial + trials {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, t));
        let llrs: Vec<f64> = (0..l).map(|_| rng.random_range(-4.0..4.0)).collect();
        for u in decision_sequences(l, &mut rng) {
            let mut p = ProcessorState::<f64>::new(&plan);
            p.load_llrs(&llrs)?;
            for i in 0..l {
                let got = p.phase_llr(i)?;
                let want = brute_force_llr(kernel, i, &u[..i], &llrs)?;
                report.llr_checks += 1;
                let err = (got - want).abs() / want.abs().max(1.0);
                report.max_rel_error = report.max_rel_error.max(err);
                if !within_tolerance(got, want) {
                    report.mismatches.push(Mismatch {
                        trial: t,
                        phase: i,
                        prefix: u[..i].to_vec(),
                        got,
                        want,
                    });
                }
                p.apply_decision(i, u[i])?;
            }
            let c = p.counter();
            if (c.adds, c.comps) != (total.adds, total.comps) {
                report.count_mismatches += 1;
            }
        }
        report.trials += 1;
    }
    Ok(report)
}

/// `trials` random non-singular kernels of size `l`, one LLR vector each.
/// Kernel `t` is drawn from the stream of trial `t`.
pub fn verify_random(l: usize, trials: u64, seed: u64) -> Result<VerifyReport> {
    let mut report = VerifyReport::default();
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed ^ 0x6b65_726e_656c, t));
        let kernel = random_kernel(l, &mut rng);
        report.merge(verify_kernel(&kernel, 1, seed, t)?);
    }
    Ok(report)
}
