//! Runtime evaluation of a compiled plan: one kernel instance, one phase at a time.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::plan::{Exec, KernelPlan, PhaseStep};
use crate::Scalar;

/// Real additions (subtractions included) and comparisons performed so far.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCounter {
    pub adds: u64,
    pub comps: u64,
}

#[derive(Clone, Debug)]
enum View {
    Slice { start: usize, len: usize },
    Indexed(Vec<usize>),
    /// Single-coset section read as zero.
    Zero,
}

/// Mutable state of one kernel instance while its inputs are decided in order.
#[derive(Clone, Debug)]
pub struct ProcessorState<'p, T: Scalar> {
    plan: &'p KernelPlan,
    llrs: Vec<T>,
    decisions: Vec<bool>,
    phase: usize,
    loaded: bool,
    /// LLR of the current phase once evaluated.
    current: Option<T>,
    buffers: Vec<Vec<T>>,
    views: Vec<View>,
    counter: OpCounter,
    shifts: Vec<T>,
    trace: Option<String>,
}

/// `sgn(a) sgn(b) min(|a|, |b|)` with one comparison.
pub fn special1<T: Scalar>(a: T, b: T) -> T {
    let m = if a.abs() < b.abs() { a.abs() } else { b.abs() };
    if (a < T::zero()) != (b < T::zero()) {
        -m
    } else {
        m
    }
}

/// `(-1)^{h_l} a + (-1)^{h_r} b` with one addition.
pub fn special2<T: Scalar>(a: T, b: T, h_left: bool, h_right: bool) -> T {
    let a = if h_left { -a } else { a };
    let b = if h_right { -b } else { b };
    a + b
}

/// Forest layer of a type-3 special for the maps `w0 -> (1, 0)`, `w1 -> (0, 1)`:
/// `(a + b, b - a, a - b, -(a + b))`, two additions.
pub fn special3<T: Scalar>(a: T, b: T) -> [T; 4] {
    let s1 = a + b;
    let s2 = b - a;
    [s1, s2, -s2, -s1]
}

impl<'p, T: Scalar> ProcessorState<'p, T> {
    pub fn new(plan: &'p KernelPlan) -> Self {
        let n = plan.nodes().len();
        Self {
            plan,
            llrs: vec![T::zero(); plan.size()],
            decisions: Vec::with_capacity(plan.size()),
            phase: 0,
            loaded: false,
            current: None,
            buffers: plan.nodes().iter().map(|nd| vec![T::zero(); nd.buffer_len]).collect(),
            views: vec![View::Slice { start: 0, len: 0 }; n],
            counter: OpCounter::default(),
            shifts: vec![T::zero(); n],
            trace: None,
        }
    }

    pub fn plan(&self) -> &'p KernelPlan {
        self.plan
    }

    /// Resets the state for a new kernel input vector.
    pub fn load_llrs(&mut self, llrs: &[T]) -> Result<()> {
        if llrs.len() != self.plan.size() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} LLRs, got {}",
                self.plan.size(),
                llrs.len()
            )));
        }
        if let Some(pos) = llrs.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        self.llrs.copy_from_slice(llrs);
        self.decisions.clear();
        self.phase = 0;
        self.current = None;
        self.loaded = true;
        for b in &mut self.buffers {
            b.iter_mut().for_each(|v| *v = T::zero());
        }
        for v in &mut self.views {
            *v = View::Slice { start: 0, len: 0 };
        }
        Ok(())
    }

    pub fn current_phase(&self) -> usize {
        self.phase
    }

    pub fn decisions(&self) -> &[bool] {
        &self.decisions
    }

    pub fn counter(&self) -> OpCounter {
        self.counter
    }

    pub fn reset_counter(&mut self) {
        self.counter = OpCounter::default();
    }

    /// Adds `value` to every table entry of section `node` as its parent reads
    /// it. Sections flagged antisymmetric or constant at a phase ignore the
    /// shift there, since their parents rely on the exact values.
    pub fn set_shift(&mut self, node: usize, value: T) {
        self.shifts[node] = value;
    }

    pub fn enable_trace(&mut self) {
        self.trace = Some(String::new());
    }

    /// Per-section values recorded since tracing was enabled.
    pub fn take_trace(&mut self) -> String {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    fn step(&self, node: usize, i: usize) -> &'p PhaseStep {
        self.plan.nodes()[node]
            .step(i)
            .expect("plan evaluates this section at this phase")
    }

    fn shift_applies(&self, node: usize) -> bool {
        let step = self.step(node, self.phase);
        step.antisym_mask.is_none() && !step.pair_antisymmetric && !matches!(step.exec, Exec::Constant)
    }

    fn read(&self, node: usize, idx: usize) -> T {
        let buf = &self.buffers[node];
        let v = match &self.views[node] {
            View::Slice { start, .. } => buf[start + idx],
            View::Indexed(pos) => buf[pos[idx]],
            View::Zero => T::zero(),
        };
        if self.shifts[node] != T::zero() && self.shift_applies(node) {
            v + self.shifts[node]
        } else {
            v
        }
    }

    /// Current table of section `node` as its parent sees it.
    pub fn cbt(&self, node: usize) -> Vec<T> {
        let len = match &self.views[node] {
            View::Slice { len, .. } => *len,
            View::Indexed(pos) => pos.len(),
            View::Zero => 1,
        };
        (0..len).map(|k| self.read(node, k)).collect()
    }

    fn offset(&self, step: &PhaseStep) -> usize {
        step.offsets
            .iter()
            .filter(|(j, _)| self.decisions[*j])
            .fold(0, |acc, &(_, h)| acc ^ h as usize)
    }

    fn decided(&self, rows: &[(usize, u64)]) -> u64 {
        rows.iter()
            .filter(|(j, _)| self.decisions[*j])
            .fold(0, |acc, &(_, w)| acc ^ w)
    }

    /// `(T[0] - T[1]) / 2` of a two-entry child, or `T[0]` when stored antisymmetric.
    fn half_difference(&mut self, node: usize) -> T {
        let step = self.step(node, self.phase);
        if step.pair_antisymmetric {
            self.read(node, 0)
        } else {
            self.counter.adds += 1;
            (self.read(node, 0) - self.read(node, 1)) * half()
        }
    }

    fn evaluate_node(&mut self, k: usize) {
        let i = self.phase;
        let plan = self.plan;
        let node = &plan.nodes()[k];
        let step = self.step(k, i);
        match &step.exec {
            Exec::Reuse => {}
            Exec::Constant => self.views[k] = View::Zero,
            Exec::Leaf {
                len,
                cosets,
                shortened,
                flips,
            } => {
                let flip = self.decided(flips);
                let s = &self.llrs[node.x..node.y];
                let buf = &mut self.buffers[k];
                for (v, &c) in cosets.iter().enumerate() {
                    let mut best = T::zero();
                    for (n, &w) in shortened.iter().enumerate() {
                        let word = c ^ w ^ flip;
                        let term = |j: usize| if (word >> j) & 1 == 1 { -s[j] } else { s[j] };
                        let mut q = term(0);
                        for j in 1..*len {
                            q = q + term(j);
                        }
                        self.counter.adds += *len as u64 - 1;
                        if n == 0 {
                            best = q;
                        } else {
                            self.counter.comps += 1;
                            if q > best {
                                best = q;
                            }
                        }
                    }
                    buf[v] = best;
                }
                self.views[k] = View::Slice {
                    start: 0,
                    len: cosets.len(),
                };
            }
            Exec::Special1 | Exec::Special2 => {
                let (lc, rc) = node.children.expect("split section");
                let hl = self.offset(self.step(lc, i)) & 1 == 1;
                let hr = self.offset(self.step(rc, i)) & 1 == 1;
                let a = self.half_difference(lc);
                let b = self.half_difference(rc);
                let a = if hl { -a } else { a };
                let b = if hr { -b } else { b };
                let buf = &mut self.buffers[k];
                match &step.exec {
                    Exec::Special1 => {
                        self.counter.comps += 1;
                        let m = special1(a, b);
                        buf[0] = m;
                        buf[1] = -m;
                        self.views[k] = View::Slice { start: 0, len: 2 };
                    }
                    Exec::Special2 => {
                        self.counter.adds += 1;
                        let t = special2(a, b, false, false);
                        buf[0] = t;
                        buf[1] = -t;
                        self.views[k] = View::Slice { start: 0, len: 2 };
                    }
                    _ => unreachable!(),
                }
            }
            Exec::Generic {
                k_prime,
                k_dprime,
                fold,
                a_idx,
                b_idx,
            } => {
                let (lc, rc) = node.children.expect("split section");
                let hl = self.offset(self.step(lc, i));
                let hr = self.offset(self.step(rc, i));
                let total = 1usize << (k_prime + k_dprime);
                let copy = matches!(self.views[lc], View::Zero) || matches!(self.views[rc], View::Zero);
                let mut buf = std::mem::take(&mut self.buffers[k]);
                for p in 0..total {
                    if *fold && p & 1 == 1 {
                        buf[p] = -buf[p - 1];
                        continue;
                    }
                    buf[p] = self.read(lc, a_idx[p] as usize ^ hl) + self.read(rc, b_idx[p] as usize ^ hr);
                    if !copy {
                        self.counter.adds += 1;
                    }
                }
                let mut prev = 0;
                let mut size = total;
                for t in 1..=*k_dprime {
                    let cur = prev + size;
                    size >>= 1;
                    for q in 0..size {
                        let lo = buf[prev + 2 * q];
                        buf[cur + q] = if *fold && t == 1 {
                            lo.abs()
                        } else {
                            self.counter.comps += 1;
                            let hi = buf[prev + 2 * q + 1];
                            if hi > lo {
                                hi
                            } else {
                                lo
                            }
                        };
                    }
                    prev = cur;
                }
                self.buffers[k] = buf;
                self.views[k] = View::Slice {
                    start: prev,
                    len: 1 << k_prime,
                };
            }
            Exec::Select {
                layer,
                start,
                v_rows,
                omega,
            } => {
                let base = self.decided(omega);
                let pos = (0..1u64 << step.k_prime)
                    .map(|v| {
                        let idx = v_rows
                            .iter()
                            .enumerate()
                            .filter(|(b, _)| (v >> b) & 1 == 1)
                            .fold(base, |acc, (_, &r)| acc ^ r);
                        start + (idx >> layer) as usize
                    })
                    .collect();
                self.views[k] = View::Indexed(pos);
            }
        }
        if self.trace.is_some() {
            let values = self.cbt(k);
            let line = format!("phase {i} [{},{}) {}: {:?}\n", node.x, node.y, step.action, values);
            if let Some(t) = self.trace.as_mut() {
                t.push_str(&line);
            }
        }
    }

    fn evaluate_phase(&mut self) -> T {
        if let Some(v) = self.current {
            return v;
        }
        for k in (0..self.plan.nodes().len()).rev() {
            if self.plan.nodes()[k].step(self.phase).is_some() {
                self.evaluate_node(k);
            }
        }
        let root = self.step(0, self.phase);
        let llr = if root.pair_antisymmetric {
            self.read(0, 0)
        } else {
            self.counter.adds += 1;
            (self.read(0, 0) - self.read(0, 1)) * half()
        };
        if let Some(t) = self.trace.as_mut() {
            let _ = writeln!(t, "phase {} llr {:?}", self.phase, llr);
        }
        self.current = Some(llr);
        llr
    }

    /// LLR of kernel input `i` given the decisions on all earlier inputs.
    pub fn phase_llr(&mut self, i: usize) -> Result<T> {
        self.check_phase(i)?;
        Ok(self.evaluate_phase())
    }

    /// Records `u_i` and advances to the next phase. Evaluates phase `i` first
    /// if it was skipped, since later phases may reuse its tables.
    pub fn apply_decision(&mut self, i: usize, bit: bool) -> Result<()> {
        self.check_phase(i)?;
        self.evaluate_phase();
        self.decisions.push(bit);
        self.phase += 1;
        self.current = None;
        Ok(())
    }

    fn check_phase(&self, i: usize) -> Result<()> {
        if !self.loaded {
            return Err(Error::Invalid("no LLRs loaded".into()));
        }
        if i != self.phase || i >= self.plan.size() {
            return Err(Error::PhaseMismatch {
                expected: self.phase,
                got: i,
            });
        }
        Ok(())
    }

    /// Sections evaluated at the current phase whose tables violate their
    /// antisymmetry flags. Call after `phase_llr`.
    pub fn antisymmetry_violations(&self) -> Vec<usize> {
        let i = self.phase;
        let mut bad = Vec::new();
        for (k, node) in self.plan.nodes().iter().enumerate() {
            let Some(step) = node.step(i) else { continue };
            let t = self.cbt(k);
            let ok_mask = step
                .antisym_mask
                .is_none_or(|mu| (0..t.len()).all(|v| t[v ^ mu as usize] == -t[v]));
            let ok_pair = !step.pair_antisymmetric || (t.len() == 2 && t[1] == -t[0]);
            if !(ok_mask && ok_pair) {
                bad.push(k);
            }
        }
        bad
    }
}

fn half<T: Scalar>() -> T {
    T::from(0.5).expect("representable")
}
