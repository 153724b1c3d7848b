//! Polar codes `c = u K^{⊗m}`: encoding, SC and SCL decoding on top of the
//! kernel processor.
//!
//! Input index `i = t l + s` is kernel input `s` of the innermost kernel
//! group `t`. The LLRs of that group come from the `l` subcodes of length
//! `n / l`, subcode `j` owning the received symbols `j, j + l, j + 2l, ...`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::gf2::{BitMatrix, BitVector};
use crate::kernel::{make_arikan_kernel, Kernel};
use crate::plan::KernelPlan;
use crate::processor::{OpCounter, ProcessorState};
use crate::Scalar;

/// A polar code: kernel, number of layers and frozen set.
#[derive(Clone, Debug, PartialEq)]
pub struct CodeSpec {
    kernel: Kernel,
    m: u32,
    frozen: Vec<bool>,
}

impl CodeSpec {
    pub fn new(kernel: Kernel, m: u32, frozen: impl IntoIterator<Item = usize>) -> Result<Self> {
        if m == 0 {
            return Err(Error::Invalid("m must be at least 1".into()));
        }
        let n = kernel
            .size()
            .checked_pow(m)
            .filter(|&n| n <= 1 << 26)
            .ok_or_else(|| Error::TooLarge(format!("{}^{m} symbols", kernel.size())))?;
        let mut mask = vec![false; n];
        for f in frozen {
            if f >= n {
                return Err(Error::OutOfRange { index: f, limit: n });
            }
            mask[f] = true;
        }
        Ok(Self {
            kernel,
            m,
            frozen: mask,
        })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn l(&self) -> usize {
        self.kernel.size()
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn n(&self) -> usize {
        self.frozen.len()
    }

    pub fn k(&self) -> usize {
        self.frozen.iter().filter(|&&f| !f).count()
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n() as f64
    }

    pub fn is_frozen(&self, i: usize) -> bool {
        self.frozen[i]
    }

    pub fn frozen_positions(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.frozen[i]).collect()
    }

    pub fn info_positions(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| !self.frozen[i]).collect()
    }

    /// `K^{⊗m}` built by repeated Kronecker products.
    pub fn generator_matrix(&self) -> BitMatrix {
        let mut g = self.kernel.matrix().clone();
        for _ in 1..self.m {
            g = g.kron(self.kernel.matrix());
        }
        g
    }

    /// `c = u K^{⊗m}`, layer by layer.
    pub fn encode(&self, u: &BitVector) -> Result<BitVector> {
        if u.len() != self.n() {
            return Err(Error::DimensionMismatch(format!("expected {} bits, got {}", self.n(), u.len())));
        }
        if let Some(f) = (0..self.n()).find(|&i| self.frozen[i] && u.get(i)) {
            return Err(Error::FrozenViolation(f));
        }
        Ok(transform(&self.kernel, &u.to_bools()).iter().copied().collect::<BitVector>())
    }

    /// Places information bits into the non-frozen positions.
    pub fn embed(&self, info: &[bool]) -> Result<BitVector> {
        let pos = self.info_positions();
        if info.len() != pos.len() {
            return Err(Error::DimensionMismatch(format!("expected {} information bits, got {}", pos.len(), info.len())));
        }
        let mut u = BitVector::zeros(self.n());
        for (&p, &b) in pos.iter().zip(info) {
            u.set(p, b);
        }
        Ok(u)
    }
}

/// `u K^{⊗m}` for `u` of length `l^m`, by the stride-`l` recursion.
fn transform(k: &Kernel, u: &[bool]) -> Vec<bool> {
    let l = k.size();
    let n = u.len();
    if n == 1 {
        return u.to_vec();
    }
    let groups = n / l;
    let mut sub = vec![vec![false; groups]; l];
    for t in 0..groups {
        let x = k.encode(&BitVector::from_bits(&u[t * l..(t + 1) * l]));
        for (j, s) in sub.iter_mut().enumerate() {
            s[t] = x.get(j);
        }
    }
    let mut c = vec![false; n];
    for (j, s) in sub.iter().enumerate() {
        for (t, b) in transform(k, s).into_iter().enumerate() {
            c[j + l * t] = b;
        }
    }
    c
}

/// Kernel processors of every recursion level for one decoding path.
#[derive(Clone, Debug)]
pub struct DecoderWorkspace<'p, T: Scalar> {
    l: usize,
    m: u32,
    /// `procs[r - 1][q]`: kernel instance `q` of the level with subcode length `l^r`.
    procs: Vec<Vec<ProcessorState<'p, T>>>,
    /// Received-symbol index of every length-1 subcode.
    leaf_pos: Vec<usize>,
    channel: Vec<T>,
}

impl<'p, T: Scalar> DecoderWorkspace<'p, T> {
    pub fn new(plan: &'p KernelPlan, m: u32) -> Self {
        let l = plan.size();
        let n = l.pow(m);
        let procs = (1..=m)
            .map(|r| (0..n / l.pow(r)).map(|_| ProcessorState::new(plan)).collect())
            .collect();
        // subcode q at the bottom level: digits of q, most significant first,
        // choose the stride offsets j of each level
        let leaf_pos = (0..n)
            .map(|q| {
                let mut pos = 0;
                let mut stride = 1;
                let mut rest = q;
                let mut digits = Vec::with_capacity(m as usize);
                for _ in 0..m {
                    digits.push(rest % l);
                    rest /= l;
                }
                for &j in digits.iter().rev() {
                    pos += j * stride;
                    stride *= l;
                }
                pos
            })
            .collect();
        Self {
            l,
            m,
            procs,
            leaf_pos,
            channel: vec![T::zero(); n],
        }
    }

    pub fn load(&mut self, llrs: &[T]) -> Result<()> {
        if llrs.len() != self.channel.len() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} LLRs, got {}",
                self.channel.len(),
                llrs.len()
            )));
        }
        if let Some(p) = llrs.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(p));
        }
        self.channel.copy_from_slice(llrs);
        Ok(())
    }

    /// LLR of input `i` of subcode `q` at level `r`.
    fn llr(&mut self, r: u32, q: usize, i: usize) -> Result<T> {
        if r == 0 {
            return Ok(self.channel[self.leaf_pos[q]]);
        }
        let l = self.l;
        let (t, s) = (i / l, i % l);
        if s == 0 {
            let mut inputs = Vec::with_capacity(l);
            for j in 0..l {
                inputs.push(self.llr(r - 1, q * l + j, t)?);
            }
            self.procs[r as usize - 1][q].load_llrs(&inputs)?;
        }
        self.procs[r as usize - 1][q].phase_llr(s)
    }

    fn decide(&mut self, r: u32, q: usize, i: usize, bit: bool) -> Result<()> {
        if r == 0 {
            return Ok(());
        }
        let l = self.l;
        let (t, s) = (i / l, i % l);
        let p = &mut self.procs[r as usize - 1][q];
        p.apply_decision(s, bit)?;
        if s == l - 1 {
            let u = BitVector::from_bits(p.decisions());
            let x = p.plan().kernel().encode(&u);
            for j in 0..l {
                self.decide(r - 1, q * l + j, t, x.get(j))?;
            }
        }
        Ok(())
    }

    pub fn phase_llr(&mut self, i: usize) -> Result<T> {
        self.llr(self.m, 0, i)
    }

    pub fn apply_decision(&mut self, i: usize, bit: bool) -> Result<()> {
        self.decide(self.m, 0, i, bit)
    }

    /// Operations performed by all kernel instances so far.
    pub fn ops(&self) -> OpCounter {
        let mut c = OpCounter::default();
        for p in self.procs.iter().flatten() {
            c.adds += p.counter().adds;
            c.comps += p.counter().comps;
        }
        c
    }
}

/// Output of a decoder run.
#[derive(Clone, Debug, PartialEq)]
pub struct Decoded {
    pub u_hat: BitVector,
    pub c_hat: BitVector,
    pub ops: OpCounter,
}

fn check_plan(spec: &CodeSpec, plan: &KernelPlan) -> Result<()> {
    if plan.kernel().matrix() != spec.kernel().matrix() {
        return Err(Error::Invalid("plan was compiled for a different kernel".into()));
    }
    Ok(())
}

/// Successive cancellation decoding. Ties (`LLR == 0`) decide 0.
pub fn sc_decode<T: Scalar>(spec: &CodeSpec, plan: &KernelPlan, llrs: &[T]) -> Result<Decoded> {
    check_plan(spec, plan)?;
    let mut ws = DecoderWorkspace::new(plan, spec.m());
    ws.load(llrs)?;
    let mut u = BitVector::zeros(spec.n());
    for i in 0..spec.n() {
        let llr = ws.phase_llr(i)?;
        let bit = !spec.is_frozen(i) && llr < T::zero();
        u.set(i, bit);
        ws.apply_decision(i, bit)?;
    }
    Ok(Decoded {
        c_hat: spec.encode(&u)?,
        u_hat: u,
        ops: ws.ops(),
    })
}

/// One surviving path of a list decoder.
#[derive(Clone, Debug)]
pub struct ListPath {
    pub u_hat: BitVector,
    pub metric: f64,
}

/// Result of list decoding: the best path first.
#[derive(Clone, Debug)]
pub struct ListDecoded {
    pub best: Decoded,
    pub paths: Vec<ListPath>,
}

/// Successive cancellation list decoding with the min-sum path metric.
/// A path that contradicts the sign of its LLR pays `|LLR|`; ties keep the
/// path with `u_i = 0` first. `L = 1` reproduces [`sc_decode`].
pub fn scl_decode<T: Scalar>(spec: &CodeSpec, plan: &KernelPlan, llrs: &[T], list: usize) -> Result<ListDecoded> {
    check_plan(spec, plan)?;
    if list == 0 {
        return Err(Error::Invalid("list size must be at least 1".into()));
    }
    let n = spec.n();
    let mut root = DecoderWorkspace::new(plan, spec.m());
    root.load(llrs)?;
    struct Path<'p, T: Scalar> {
        ws: DecoderWorkspace<'p, T>,
        u: Vec<bool>,
        metric: f64,
    }
    let mut paths = vec![Path {
        ws: root,
        u: Vec::with_capacity(n),
        metric: 0.0,
    }];
    for i in 0..n {
        let mut cands: Vec<(usize, bool, f64)> = Vec::with_capacity(2 * paths.len());
        for (k, p) in paths.iter_mut().enumerate() {
            let llr = p.ws.phase_llr(i)?.to_f64().expect("finite");
            let pay = |bit: bool| if (llr < 0.0) != bit { llr.abs() } else { 0.0 };
            cands.push((k, false, p.metric + pay(false)));
            if !spec.is_frozen(i) {
                cands.push((k, true, p.metric + pay(true)));
            }
        }
        cands.sort_by(|a, b| a.2.total_cmp(&b.2));
        cands.truncate(list);
        let mut uses = vec![0usize; paths.len()];
        for c in &cands {
            uses[c.0] += 1;
        }
        let mut old: Vec<Option<Path<T>>> = paths.into_iter().map(Some).collect();
        let mut next = Vec::with_capacity(cands.len());
        for (k, bit, metric) in cands {
            uses[k] -= 1;
            let mut p = if uses[k] == 0 {
                old[k].take().expect("path still available")
            } else {
                let src = old[k].as_ref().expect("path still available");
                Path {
                    ws: src.ws.clone(),
                    u: src.u.clone(),
                    metric: src.metric,
                }
            };
            p.ws.apply_decision(i, bit)?;
            p.u.push(bit);
            p.metric = metric;
            next.push(p);
        }
        paths = next;
    }
    let listed: Vec<ListPath> = paths
        .iter()
        .map(|p| ListPath {
            u_hat: BitVector::from_bits(&p.u),
            metric: p.metric,
        })
        .collect();
    let best = &paths[0];
    let u_hat = BitVector::from_bits(&best.u);
    Ok(ListDecoded {
        best: Decoded {
            c_hat: spec.encode(&u_hat)?,
            u_hat,
            ops: best.ws.ops(),
        },
        paths: listed,
    })
}

/// Frozen-set file: one index per line, strictly ascending; `#` starts a comment.
pub fn parse_frozen(text: &str) -> Result<Vec<usize>> {
    let mut out: Vec<usize> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v: usize = line.parse().map_err(|e| Error::Parse {
            line: k + 1,
            msg: format!("bad index {line:?}: {e}"),
        })?;
        if out.last().is_some_and(|&p| p >= v) {
            return Err(Error::Parse {
                line: k + 1,
                msg: format!("indices must be strictly ascending, {v} follows {}", out[out.len() - 1]),
            });
        }
        out.push(v);
    }
    Ok(out)
}

pub fn format_frozen(positions: &[usize]) -> String {
    positions.iter().map(|p| format!("{p}\n")).collect()
}

/// Whitespace-separated reals.
pub fn parse_llrs(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|e| Error::Parse {
                line: k + 1,
                msg: format!("bad number {tok:?}: {e}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: k + 1,
                    msg: format!("non-finite value {tok:?}"),
                });
            }
            out.push(v);
        }
    }
    Ok(out)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    kernel: Option<String>,
    arikan: Option<u32>,
    m: u32,
    frozen: Option<String>,
    frozen_indices: Option<Vec<usize>>,
}

/// Loads a code description (TOML). Paths are relative to the spec file.
///
/// ```toml
/// kernel = "k4.kernel"      # or: arikan = 2
/// m = 2
/// frozen = "code.frozen"    # or: frozen_indices = [0, 1, 2, 4]
/// ```
pub fn load_spec(path: impl AsRef<Path>) -> Result<CodeSpec> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    parse_spec(&text, &dir)
}

pub fn parse_spec(text: &str, dir: &Path) -> Result<CodeSpec> {
    let file: SpecFile = toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start].matches('\n').count() + 1)
            .unwrap_or(0);
        Error::Parse {
            line,
            msg: e.message().to_string(),
        }
    })?;
    let kernel = match (file.kernel, file.arikan) {
        (Some(p), None) => Kernel::load(dir.join(p))?,
        (None, Some(mu)) => make_arikan_kernel(mu)?,
        _ => return Err(Error::Invalid("spec needs exactly one of 'kernel' and 'arikan'".into())),
    };
    let frozen = match (file.frozen, file.frozen_indices) {
        (Some(p), None) => parse_frozen(&fs::read_to_string(dir.join(p))?)?,
        (None, Some(v)) => v,
        (None, None) => Vec::new(),
        _ => return Err(Error::Invalid("spec needs at most one of 'frozen' and 'frozen_indices'".into())),
    };
    CodeSpec::new(kernel, file.m, frozen)
}
