//! Reference implementations used to check the plan-based processor:
//! exhaustive correlation LLRs, Viterbi over the minimal trellis of the
//! extended kernel code, and exhaustive ML decoding of short polar codes.
//! Only the GF(2) layer is shared with the main processing path.

use crate::error::{Error, Result};
use crate::gf2::{minimum_span_form, BitMatrix, BitVector};
use crate::kernel::Kernel;
use crate::plan::OpCount;
use crate::polar::CodeSpec;

/// Largest kernel the exhaustive LLR oracle accepts.
pub const BRUTE_FORCE_MAX_L: usize = 20;
/// Largest number of information bits the exhaustive ML oracle accepts.
pub const EXHAUSTIVE_MAX_K: usize = 20;

fn correlation(word: u64, llrs: &[f64]) -> f64 {
    llrs.iter()
        .enumerate()
        .map(|(j, &s)| if (word >> j) & 1 == 1 { -s } else { s })
        .sum()
}

fn check_inputs(k: &Kernel, i: usize, prefix: &[bool], llrs: &[f64]) -> Result<()> {
    let l = k.size();
    if i >= l {
        return Err(Error::OutOfRange { index: i, limit: l });
    }
    if prefix.len() != i {
        return Err(Error::DimensionMismatch(format!("prefix has {} bits, phase is {i}", prefix.len())));
    }
    if llrs.len() != l {
        return Err(Error::DimensionMismatch(format!("expected {l} LLRs, got {}", llrs.len())));
    }
    Ok(())
}

/// `½ [max Q(u⁰ K) − max Q(u¹ K)]` where `uᵇ` runs over all inputs with the given
/// prefix, `u_i = b` and any suffix.
pub fn brute_force_llr(k: &Kernel, i: usize, prefix: &[bool], llrs: &[f64]) -> Result<f64> {
    let l = k.size();
    if l > BRUTE_FORCE_MAX_L {
        return Err(Error::TooLarge(format!("kernel size {l} exceeds {BRUTE_FORCE_MAX_L}")));
    }
    check_inputs(k, i, prefix, llrs)?;
    let rows: Vec<u64> = (0..l).map(|r| k.row(r).to_u64()).collect();
    let base = prefix
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .fold(0u64, |acc, (j, _)| acc ^ rows[j]);
    let free = l - i - 1;
    let best = |start: u64| {
        // Gray-code order: consecutive suffixes differ in one row
        let mut word = start;
        let mut m = correlation(word, llrs);
        for step in 1..1u64 << free {
            word ^= rows[i + 1 + step.trailing_zeros() as usize];
            m = m.max(correlation(word, llrs));
        }
        m
    };
    Ok((best(base) - best(base ^ rows[i])) / 2.0)
}

/// Minimal (span-form) trellis of the extended code of a kernel phase. The
/// last column is the extension symbol; it carries `u_i` and is erased on
/// reception.
#[derive(Clone, Debug)]
pub struct Trellis {
    /// Span-form generator, `(l - i) x (l + 1)`.
    pub generator: BitMatrix,
    pub starts: Vec<usize>,
    pub ends: Vec<usize>,
    /// `state_rows[t]`: rows active across the boundary before symbol `t`, `t = 0..=l+1`.
    pub state_rows: Vec<Vec<usize>>,
}

impl Trellis {
    pub fn new(k: &Kernel, i: usize) -> Result<Self> {
        let l = k.size();
        if i >= l {
            return Err(Error::OutOfRange { index: i, limit: l });
        }
        let rows = (i..l)
            .map(|r| {
                let mut row = k.row(r).concat(&BitVector::zeros(1));
                if r == i {
                    row.set(l, true);
                }
                row
            })
            .collect();
        let msf = minimum_span_form(&BitMatrix::from_rows(l + 1, rows)?)?;
        let state_rows = (0..=l + 1)
            .map(|t| {
                (0..msf.starts.len())
                    .filter(|&r| msf.starts[r] < t && t <= msf.ends[r])
                    .collect()
            })
            .collect();
        Ok(Self {
            generator: msf.matrix,
            starts: msf.starts,
            ends: msf.ends,
            state_rows,
        })
    }

    /// Number of symbols including the extension symbol.
    pub fn depth(&self) -> usize {
        self.generator.n_cols()
    }

    /// `log2` of the number of states at every boundary.
    pub fn state_dims(&self) -> Vec<usize> {
        self.state_rows.iter().map(Vec::len).collect()
    }

    /// Viterbi pass with sign-adjusted symbol metrics. Returns the best
    /// correlation for each value of the extension symbol.
    fn run(&self, metrics: &[f64], ops: &mut OpCount) -> [f64; 2] {
        let n = self.depth();
        let mut cur = vec![0.0f64];
        let mut finals = [f64::NEG_INFINITY; 2];
        let mut seen = [false; 2];
        for t in 0..n {
            let from = &self.state_rows[t];
            let to = &self.state_rows[t + 1];
            let fresh: Vec<usize> = (0..self.starts.len()).filter(|&r| self.starts[r] == t).collect();
            let last = t + 1 == n;
            let metric = metrics.get(t).copied().unwrap_or(0.0);
            let mut next = vec![f64::NEG_INFINITY; 1 << to.len()];
            let mut filled = vec![false; next.len()];
            for (s, &m) in cur.iter().enumerate() {
                for f in 0..1usize << fresh.len() {
                    let bit_of = |r: usize| -> bool {
                        if let Some(p) = from.iter().position(|&q| q == r) {
                            (s >> p) & 1 == 1
                        } else {
                            let p = fresh.iter().position(|&q| q == r).expect("active row");
                            (f >> p) & 1 == 1
                        }
                    };
                    let symbol = from
                        .iter()
                        .chain(fresh.iter())
                        .filter(|&&r| self.ends[r] >= t && self.generator.get(r, t))
                        .fold(false, |acc, &r| acc ^ bit_of(r));
                    let value = if last {
                        m
                    } else {
                        ops.adds += 1;
                        if symbol {
                            m - metric
                        } else {
                            m + metric
                        }
                    };
                    if last {
                        let b = symbol as usize;
                        if seen[b] {
                            ops.comps += 1;
                            if value > finals[b] {
                                finals[b] = value;
                            }
                        } else {
                            finals[b] = value;
                            seen[b] = true;
                        }
                        continue;
                    }
                    let ns = to
                        .iter()
                        .enumerate()
                        .filter(|&(_, &r)| bit_of(r))
                        .fold(0usize, |acc, (p, _)| acc | 1 << p);
                    if filled[ns] {
                        ops.comps += 1;
                        if value > next[ns] {
                            next[ns] = value;
                        }
                    } else {
                        next[ns] = value;
                        filled[ns] = true;
                    }
                }
            }
            if !last {
                cur = next;
            }
        }
        finals
    }
}

/// Result of a Viterbi phase evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ViterbiResult {
    pub llr: f64,
    pub counted_ops: OpCount,
}

/// LLR of kernel input `i` by Viterbi decoding of the extended code with the
/// extension symbol erased; prior decisions enter as sign flips.
pub fn viterbi_llr(k: &Kernel, i: usize, prefix: &[bool], llrs: &[f64]) -> Result<ViterbiResult> {
    if k.size() > 32 {
        return Err(Error::TooLarge(format!("kernel size {} exceeds 32", k.size())));
    }
    check_inputs(k, i, prefix, llrs)?;
    let trellis = Trellis::new(k, i)?;
    viterbi_with(&trellis, k, prefix, llrs)
}

/// Viterbi evaluation over a prebuilt trellis.
pub fn viterbi_with(trellis: &Trellis, k: &Kernel, prefix: &[bool], llrs: &[f64]) -> Result<ViterbiResult> {
    let l = k.size();
    let mut known = BitVector::zeros(l);
    for (j, _) in prefix.iter().enumerate().filter(|(_, &b)| b) {
        known ^= k.row(j);
    }
    let metrics: Vec<f64> = (0..l).map(|t| if known.get(t) { -llrs[t] } else { llrs[t] }).collect();
    let mut ops = OpCount::ZERO;
    let [m0, m1] = trellis.run(&metrics, &mut ops);
    Ok(ViterbiResult {
        llr: (m0 - m1) / 2.0,
        counted_ops: ops,
    })
}

/// Operation count of a full Viterbi kernel pass: all phases, final
/// subtraction excluded.
pub fn viterbi_kernel_ops(k: &Kernel) -> Result<OpCount> {
    let l = k.size();
    let zeros = vec![0.0; l];
    let mut total = OpCount::ZERO;
    for i in 0..l {
        let t = Trellis::new(k, i)?;
        total += viterbi_with(&t, k, &vec![false; i], &zeros)?.counted_ops;
    }
    Ok(total)
}

/// Maximum-correlation codeword of a polar code by enumerating all `2^k`
/// information words; ties go to the lexicographically smallest codeword.
pub fn exhaustive_ml(spec: &CodeSpec, llrs: &[f64]) -> Result<BitVector> {
    let n = spec.n();
    if llrs.len() != n {
        return Err(Error::DimensionMismatch(format!("expected {n} LLRs, got {}", llrs.len())));
    }
    let info = spec.info_positions();
    if info.len() > EXHAUSTIVE_MAX_K {
        return Err(Error::TooLarge(format!("{} information bits exceed {EXHAUSTIVE_MAX_K}", info.len())));
    }
    // codeword of each unit input, by direct Kronecker-power multiplication
    let g = spec.generator_matrix();
    let units: Vec<&BitVector> = info.iter().map(|&p| g.row(p)).collect();
    let mut best: Option<(f64, BitVector)> = None;
    for sel in 0..1u64 << info.len() {
        let mut c = BitVector::zeros(n);
        for (b, row) in units.iter().enumerate() {
            if (sel >> b) & 1 == 1 {
                c ^= row;
            }
        }
        let q: f64 = (0..n).map(|j| if c.get(j) { -llrs[j] } else { llrs[j] }).sum();
        let better = match &best {
            None => true,
            Some((bq, bc)) => q > *bq || (q == *bq && c.to_bools() < bc.to_bools()),
        };
        if better {
            best = Some((q, c));
        }
    }
    Ok(best.expect("at least the zero codeword").1)
}
