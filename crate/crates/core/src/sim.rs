//! BPSK over AWGN Monte-Carlo harness.
//!
//! Every trial draws its information word and noise from its own ChaCha8
//! stream seeded by `trial_seed(seed, trial)`, so results do not depend on
//! thread scheduling, and the same seed gives paired noise across SNR points
//! and list sizes. Gaussian samples use the ziggurat sampler of `rand_distr`.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gf2::BitVector;
use crate::kernel::Kernel;
use crate::plan::KernelPlan;
use crate::polar::{sc_decode, scl_decode, CodeSpec, DecoderWorkspace};

/// Channel operating point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelParams {
    pub ebn0_db: f64,
    pub rate: f64,
}

impl ChannelParams {
    pub fn new(ebn0_db: f64, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate <= 1.0) || !ebn0_db.is_finite() {
            return Err(Error::Invalid(format!("bad channel parameters: Eb/N0 {ebn0_db} dB, rate {rate}")));
        }
        Ok(Self { ebn0_db, rate })
    }

    /// `σ² = 1 / (2 R 10^{Eb/N0 / 10})`.
    pub fn sigma2(&self) -> f64 {
        1.0 / (2.0 * self.rate * 10f64.powf(self.ebn0_db / 10.0))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `trial` under the run seed `seed`.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ trial)
}

/// LLRs `2 r / σ²` of `r = s + σ n` with BPSK `s = +1` for bit 0, `-1` for bit 1.
pub fn bpsk_llrs(codeword: &BitVector, sigma2: f64, noise: &[f64]) -> Vec<f64> {
    let sigma = sigma2.sqrt();
    (0..codeword.len())
        .map(|j| {
            let s = if codeword.get(j) { -1.0 } else { 1.0 };
            2.0 * (s + sigma * noise[j]) / sigma2
        })
        .collect()
}

fn normals(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Channel LLRs of a codeword under a seeded noise draw.
pub fn awgn_llrs(codeword: &BitVector, params: &ChannelParams, rng_seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let noise = normals(&mut rng, codeword.len());
    bpsk_llrs(codeword, params.sigma2(), &noise)
}

/// Result of one SNR point.
#[derive(Clone, Debug, PartialEq)]
pub struct FerPoint {
    pub ebn0_db: f64,
    pub trials: u64,
    pub errors: u64,
    pub total_adds: u64,
    pub total_comps: u64,
}

impl FerPoint {
    pub fn fer(&self) -> f64 {
        self.errors as f64 / self.trials as f64
    }

    pub fn avg_adds(&self) -> f64 {
        self.total_adds as f64 / self.trials as f64
    }

    pub fn avg_comps(&self) -> f64 {
        self.total_comps as f64 / self.trials as f64
    }
}

/// Frame error rates over a range of SNR points.
#[derive(Clone, Debug, PartialEq)]
pub struct FerReport {
    pub code: String,
    pub seed: u64,
    pub list: usize,
    pub points: Vec<FerPoint>,
}

impl FerReport {
    /// Tab-separated table with a commented header.
    pub fn to_tsv(&self) -> String {
        let mut out = format!("# code {} list {} seed {}\n", self.code, self.list, self.seed);
        out.push_str("ebn0_db\ttrials\terrors\tfer\tavg_adds\tavg_comps\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{:.3}\t{}\t{}\t{:.6e}\t{:.3}\t{:.3}",
                p.ebn0_db,
                p.trials,
                p.errors,
                p.fer(),
                p.avg_adds(),
                p.avg_comps()
            );
        }
        out
    }
}

/// Short identity string of a code.
pub fn code_name(spec: &CodeSpec) -> String {
    format!("({},{}) {}^{}", spec.n(), spec.k(), spec.kernel().name(), spec.m())
}

/// Transmits random information words and counts frame errors.
pub fn run_fer(
    spec: &CodeSpec,
    plan: &KernelPlan,
    params: &ChannelParams,
    trials: u64,
    list: usize,
    seed: u64,
) -> Result<FerPoint> {
    if trials == 0 {
        return Err(Error::Invalid("at least one trial is required".into()));
    }
    let sigma2 = params.sigma2();
    let k = spec.k();
    let (errors, adds, comps) = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<(u64, u64, u64)> {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, t));
            let info: Vec<bool> = (0..k).map(|_| rng.random()).collect();
            let c = spec.encode(&spec.embed(&info)?)?;
            let llrs = bpsk_llrs(&c, sigma2, &normals(&mut rng, spec.n()));
            let d = if list == 1 {
                sc_decode(spec, plan, &llrs)?
            } else {
                scl_decode(spec, plan, &llrs, list)?.best
            };
            Ok(((d.c_hat != c) as u64, d.ops.adds, d.ops.comps))
        })
        .try_reduce(|| (0, 0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1, a.2 + b.2)))?;
    Ok(FerPoint {
        ebn0_db: params.ebn0_db,
        trials,
        errors,
        total_adds: adds,
        total_comps: comps,
    })
}

/// Runs every SNR point with the same seed, so noise is paired across points.
pub fn run_sweep(
    spec: &CodeSpec,
    plan: &KernelPlan,
    snrs: &[f64],
    trials: u64,
    list: usize,
    seed: u64,
) -> Result<FerReport> {
    let points = snrs
        .iter()
        .map(|&s| run_fer(spec, plan, &ChannelParams::new(s, spec.rate())?, trials, list, seed))
        .collect::<Result<_>>()?;
    Ok(FerReport {
        code: code_name(spec),
        seed,
        list,
        points,
    })
}

/// Heuristic frozen set: positions ordered by genie-aided SC error counts on
/// the all-zero codeword (every decision is forced to the true value), the
/// `n - k` least reliable ones frozen. Ties freeze the lower index.
pub fn genie_frozen_set(
    kernel: &Kernel,
    plan: &KernelPlan,
    m: u32,
    k: usize,
    ebn0_db: f64,
    trials: u64,
    seed: u64,
) -> Result<Vec<usize>> {
    let open = CodeSpec::new(kernel.clone(), m, [])?;
    let n = open.n();
    if k > n {
        return Err(Error::Invalid(format!("k = {k} exceeds n = {n}")));
    }
    let params = ChannelParams::new(ebn0_db, k.max(1) as f64 / n as f64)?;
    let zero = BitVector::zeros(n);
    let counts = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<Vec<u64>> {
            let llrs = awgn_llrs(&zero, &params, trial_seed(seed, t));
            let mut ws = DecoderWorkspace::new(plan, m);
            ws.load(&llrs)?;
            let mut errs = vec![0u64; n];
            for (i, e) in errs.iter_mut().enumerate() {
                if ws.phase_llr(i)? < 0.0 {
                    *e = 1;
                }
                ws.apply_decision(i, false)?;
            }
            Ok(errs)
        })
        .try_reduce(
            || vec![0u64; n],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(counts[i]), i));
    let mut frozen = order[..n - k].to_vec();
    frozen.sort_unstable();
    Ok(frozen)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_llr_and_sigma() {
        let c: BitVector = "01".parse().unwrap();
        assert_eq!(bpsk_llrs(&c, 1.0, &[0.0, 0.0]), vec![2.0, -2.0]);
        let p = ChannelParams::new(0.0, 0.5).unwrap();
        assert!((p.sigma2() - 1.0).abs() < 1e-12);
        assert!(ChannelParams::new(1.0, 0.0).is_err());
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let c = BitVector::zeros(16);
        let p = ChannelParams::new(2.0, 0.5).unwrap();
        assert_eq!(awgn_llrs(&c, &p, 5), awgn_llrs(&c, &p, 5));
        assert_ne!(awgn_llrs(&c, &p, 5), awgn_llrs(&c, &p, 6));
        assert_ne!(trial_seed(1, 0), trial_seed(1, 1));
    }

    #[test]
    fn llr_mean_matches_theory() {
        let p = ChannelParams::new(1.0, 0.5).unwrap();
        let c = BitVector::zeros(1000);
        let mut sum = 0.0;
        for t in 0..100 {
            sum += awgn_llrs(&c, &p, t).iter().sum::<f64>();
        }
        let mean = sum / 1e5;
        let want = 2.0 / p.sigma2();
        assert!((mean - want).abs() < 0.05 * want, "mean {mean}, want {want}");
    }
}
