//! Attaches numeric data (coset rows, index maps, offsets) to the steps chosen
//! by the structural simulation.

use crate::codes::{coset_rows, complement, msf_rows, padded_halves, IndexBasis, SectionDecomposition};
use crate::error::{Error, Result};
use crate::gf2::{BitVector, EchelonBasis};
use crate::kernel::Kernel;

use super::cost::{CostSummary, OpCount};
use super::structure::{Evaluation, Flags, NodeSim, Step, Structure};
use super::{Exec, KernelPlan, PhaseStep, SectionNode, SectionTree, MAX_BUFFER};

struct Flat {
    x: usize,
    z: Option<usize>,
    y: usize,
    children: Option<(usize, usize)>,
}

fn flatten(t: &SectionTree, out: &mut Vec<Flat>) -> usize {
    let at = out.len();
    match *t {
        SectionTree::Leaf { x, y } => out.push(Flat {
            x,
            z: None,
            y,
            children: None,
        }),
        SectionTree::Split {
            x,
            z,
            y,
            ref left,
            ref right,
        } => {
            out.push(Flat {
                x,
                z: Some(z),
                y,
                children: None,
            });
            let a = flatten(left, out);
            let b = flatten(right, out);
            out[at].children = Some((a, b));
        }
    }
    at
}

/// Forest built at an anchor phase, kept for subforest selection.
struct Anchor {
    phase: usize,
    halves: usize,
    k_dprime: usize,
    k_prime: usize,
    g_dprime: Vec<BitVector>,
    basis: EchelonBasis,
    residual: Vec<usize>,
}

impl Anchor {
    /// Packed anchor selector `w | v << k''` of a word of the anchor's punctured code.
    fn selector(&self, word: &BitVector) -> u64 {
        let combo = self
            .basis
            .solve(word)
            .expect("word lies in the anchor punctured code");
        let mut out = 0u64;
        for b in self.halves..combo.len() {
            if combo.get(b) {
                out |= 1 << (b - self.halves);
            }
        }
        out
    }

    fn layer_start(&self, t: usize) -> usize {
        layer_start(self.k_prime, self.k_dprime, t)
    }
}

/// Offset of layer `t` in a forest with `k'` coset bits and `k''` maximized bits.
pub(crate) fn layer_start(k_prime: usize, k_dprime: usize, t: usize) -> usize {
    (0..t).map(|u| 1usize << (k_prime + k_dprime - u)).sum()
}

fn word_mask(v: u64, rows: &[BitVector]) -> u64 {
    rows.iter()
        .enumerate()
        .filter(|(b, _)| (v >> b) & 1 == 1)
        .fold(0, |acc, (_, r)| acc ^ r.to_u64())
}

fn span_masks(rows: &[BitVector]) -> Vec<u64> {
    (0..1u64 << rows.len()).map(|v| word_mask(v, rows)).collect()
}

pub(crate) fn build(kernel: &Kernel, st: &Structure, tree: SectionTree) -> Result<KernelPlan> {
    let l = kernel.size();
    let mut flat = Vec::new();
    flatten(&tree, &mut flat);
    let n = flat.len();

    // top-down: which phases each section is evaluated at
    let all = if l == 64 { u64::MAX } else { (1u64 << l) - 1 };
    let mut sims: Vec<Option<NodeSim>> = vec![None; n];
    let mut needed = vec![0u64; n];
    needed[0] = all;
    for k in 0..n {
        let f = &flat[k];
        let sim = match f.z {
            None => st.simulate_leaf(f.x, f.y, needed[k]),
            Some(z) => st.simulate_split(f.x, z, f.y, needed[k]),
        };
        if let Some((a, b)) = f.children {
            needed[a] = sim.child_mask;
            needed[b] = sim.child_mask;
        }
        sims[k] = Some(sim);
    }
    let sims: Vec<NodeSim> = sims.into_iter().map(|s| s.expect("every node simulated")).collect();

    // bottom-up: flags and costs
    let mut flags = vec![Flags::default(); n];
    let mut evals: Vec<Option<Evaluation>> = (0..n).map(|_| None).collect();
    for k in (0..n).rev() {
        let f = &flat[k];
        let (fl, fr) = match f.children {
            Some((a, b)) => (flags[a], flags[b]),
            None => (Flags::default(), Flags::default()),
        };
        let ev = st.evaluate(f.x, f.z, f.y, &sims[k], fl, fr);
        flags[k] = ev.flags;
        evals[k] = Some(ev);
    }
    let evals: Vec<Evaluation> = evals.into_iter().map(|e| e.expect("every node evaluated")).collect();

    let mut sections = vec![OpCount::ZERO; l];
    for ev in &evals {
        for &(i, _, c) in &ev.phases {
            sections[i] += c;
        }
    }
    let delta = (0..l).map(|i| (flags[0].pair >> i) & 1 ^ 1).collect();
    let cost = CostSummary { sections, delta };

    let mut nodes: Vec<SectionNode> = flat
        .iter()
        .map(|f| SectionNode {
            x: f.x,
            y: f.y,
            z: f.z,
            children: f.children,
            steps: vec![None; l],
            buffer_len: 0,
        })
        .collect();
    let mut anchors: Vec<Option<Anchor>> = (0..n).map(|_| None).collect();

    for i in 0..l {
        // post-order: tables and index views
        for k in (0..n).rev() {
            let Some(step) = sims[k].steps[i] else { continue };
            let ev = evals[k]
                .phases
                .iter()
                .find(|p| p.0 == i)
                .expect("evaluated phase");
            let built = numeric_step(st, &flat[k], &nodes, &mut anchors[k], i, step, ev.1, ev.2, flags[k])?;
            nodes[k].buffer_len = nodes[k].buffer_len.max(buffer_need(&built));
            nodes[k].steps[i] = Some(built);
        }
        // pre-order: prior-decision offsets
        let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); n];
        incoming[0] = (0..i).collect();
        for k in 0..n {
            if nodes[k].steps[i].is_none() {
                continue;
            }
            let f = &flat[k];
            let len = f.y - f.x;
            let step = nodes[k].steps[i].as_ref().expect("checked");
            let ib = IndexBasis::new(len, &step.s_rows, &step.coset_rows);
            let mut offsets = Vec::new();
            let mut residual = Vec::new();
            for &j in &incoming[k] {
                let word = kernel.row(j).slice(f.x, f.y);
                match ib.index_of(&word) {
                    Some(h) => {
                        debug_assert!(k != 0, "prior rows never lie in the full punctured code");
                        if h != 0 {
                            offsets.push((j, h));
                        }
                    }
                    None => residual.push(j),
                }
            }
            if let (Exec::Reuse, Some(from)) = (&step.exec, step.source_phase) {
                let prev = nodes[k].steps[from].as_ref().expect("reused step exists");
                if prev.residual != residual {
                    return Err(Error::Invalid(format!(
                        "internal: residual rows of [{},{}) changed between phases {from} and {i}",
                        f.x, f.y
                    )));
                }
            }
            let step = nodes[k].steps[i].as_mut().expect("checked");
            match &mut step.exec {
                Exec::Leaf { flips, .. } => {
                    *flips = residual
                        .iter()
                        .map(|&j| (j, kernel.row(j).slice(f.x, f.y).to_u64()))
                        .collect();
                }
                Exec::Select { omega, .. } => {
                    let anchor = anchors[k].as_ref().expect("selection follows a generic build");
                    *omega = residual
                        .iter()
                        .filter(|j| !anchor.residual.contains(j))
                        .map(|&j| (j, anchor.selector(&kernel.row(j).slice(f.x, f.y))))
                        .filter(|&(_, w)| w != 0)
                        .collect();
                }
                Exec::Generic { .. } => {
                    if let Some(anchor) = anchors[k].as_mut() {
                        if anchor.phase == i {
                            anchor.residual = residual.clone();
                        }
                    }
                }
                _ => {}
            }
            step.offsets = offsets;
            if let Some((a, b)) = f.children {
                if sims[k].child_mask >> i & 1 == 1 {
                    incoming[a] = residual.clone();
                    incoming[b] = residual.clone();
                }
            }
            step.residual = residual;
        }
    }

    Ok(KernelPlan {
        kernel: kernel.clone(),
        tree,
        nodes,
        cost,
    })
}

fn buffer_need(step: &PhaseStep) -> usize {
    match &step.exec {
        Exec::Leaf { cosets, .. } => cosets.len(),
        Exec::Special1 | Exec::Special2 => 2,
        Exec::Generic { k_prime, k_dprime, .. } => {
            layer_start(*k_prime, *k_dprime, *k_dprime) + (1 << k_prime)
        }
        Exec::Reuse | Exec::Select { .. } | Exec::Constant => 0,
    }
}

fn child_view(nodes: &[SectionNode], c: usize, i: usize) -> (&PhaseStep, IndexBasis) {
    let step = nodes[c].steps[i].as_ref().expect("children evaluated at build phases");
    let len = nodes[c].y - nodes[c].x;
    (step, IndexBasis::new(len, &step.s_rows, &step.coset_rows))
}

fn antisym_mask(len: usize, s: &[BitVector], g: &[BitVector], on: bool) -> Option<u64> {
    if !on {
        return None;
    }
    let mask = IndexBasis::new(len, s, g)
        .index_of(&BitVector::ones(len))
        .expect("all-ones word lies in the punctured code");
    debug_assert!(mask != 0);
    Some(mask)
}

#[allow(clippy::too_many_arguments)]
fn numeric_step(
    st: &Structure,
    f: &Flat,
    nodes: &[SectionNode],
    anchor: &mut Option<Anchor>,
    i: usize,
    step: Step,
    action: super::SectionAction,
    cost: OpCount,
    flags: Flags,
) -> Result<PhaseStep> {
    let (x, y) = (f.x, f.y);
    let len = y - x;
    let t = &st.table;
    let p = t.p(i, x, y);
    let s = t.s(i, x, y).to_vec();
    let bit = 1u64 << i;
    let ones_flag = flags.ones & bit != 0;
    let pair = flags.pair & bit != 0;
    let info = st.info(i, x, y);
    let kp = info.k_prime();

    let mut out = PhaseStep {
        action,
        cost,
        k_prime: kp,
        k_dprime: 0,
        antisym_mask: None,
        pair_antisymmetric: pair,
        coset_rows: Vec::new(),
        s_rows: s.clone(),
        decomposition: None,
        offsets: Vec::new(),
        residual: Vec::new(),
        source_phase: None,
        exec: Exec::Reuse,
    };
    if kp + f.z.map_or(0, |z| st.k_dprime(i, x, z, y)) > 24 {
        return Err(Error::TooLarge(format!("section [{x},{y}) at phase {i} needs more than 2^24 entries")));
    }

    match step {
        Step::Reuse { from } => {
            let prev = nodes_step(nodes, f, from);
            out.coset_rows = prev.coset_rows.clone();
            out.s_rows = prev.s_rows.clone();
            out.k_dprime = prev.k_dprime;
            out.antisym_mask = prev.antisym_mask;
            out.decomposition = prev.decomposition.clone();
            out.source_phase = Some(from);
            return Ok(out);
        }
        Step::Constant => {
            out.exec = Exec::Constant;
            out.antisym_mask = ones_flag.then_some(0);
            return Ok(out);
        }
        Step::Leaf => {
            let g = coset_rows(len, p, &s);
            out.exec = Exec::Leaf {
                len,
                cosets: span_masks(&g),
                shortened: span_masks(&s),
                flips: Vec::new(),
            };
            out.antisym_mask = antisym_mask(len, &s, &g, ones_flag);
            out.coset_rows = g;
            return Ok(out);
        }
        _ => {}
    }

    let z = f.z.expect("combination steps have a split");
    let (lc, rc) = f.children.expect("split sections have children");

    if let Step::Select { anchor: a } = step {
        let an = anchor.as_ref().filter(|an| an.phase == a).expect("anchor forest present");
        let kd = st.k_dprime(i, x, z, y);
        let g_dprime = an.g_dprime[..kd].to_vec();
        let g = coset_rows(len, p, &s);
        let v_rows = g.iter().map(|r| an.selector(r)).collect();
        let (ls, lib) = child_view(nodes, lc, a);
        let (rs, rib) = child_view(nodes, rc, a);
        out.decomposition = Some(SectionDecomposition::assemble(
            i,
            (x, z, y),
            ls.s_rows.clone(),
            rs.s_rows.clone(),
            g_dprime,
            g.clone(),
            &lib,
            &rib,
            false,
        ));
        out.k_dprime = kd;
        out.coset_rows = g;
        out.source_phase = Some(a);
        out.exec = Exec::Select {
            layer: kd,
            start: an.layer_start(kd),
            v_rows,
            omega: Vec::new(),
        };
        return Ok(out);
    }

    let (ls, lib) = child_view(nodes, lc, i);
    let (rs, rib) = child_view(nodes, rc, i);
    let halves = padded_halves(&ls.s_rows, &rs.s_rows, x, z, y);
    let g = coset_rows(len, p, &s);

    match step {
        Step::Special { kind } => {
            let g_dprime = complement(len, &halves, &msf_rows(len, &s));
            let d = SectionDecomposition::assemble(
                i,
                (x, z, y),
                ls.s_rows.clone(),
                rs.s_rows.clone(),
                g_dprime,
                g.clone(),
                &lib,
                &rib,
                false,
            );
            out.exec = if kind == 1 { Exec::Special1 } else { Exec::Special2 };
            out.k_dprime = d.k_dprime;
            out.decomposition = Some(d);
            out.antisym_mask = antisym_mask(len, &s, &g, ones_flag);
            out.coset_rows = g;
        }
        Step::Generic { run_end, .. } => {
            let fold = matches!(action, super::SectionAction::CombineGeneric { abs_fold: true });
            // nested G'' chain: the rows for a later phase head the rows for an earlier one
            let mut rows: Vec<BitVector> = Vec::new();
            for u in (i..=run_end).rev() {
                let su = t.s(u, x, y);
                if fold && rows.is_empty() && st.k_dprime(u, x, z, y) > 0 {
                    rows.push(BitVector::ones(len));
                }
                let base: Vec<BitVector> = halves.iter().chain(rows.iter()).cloned().collect();
                rows.extend(complement(len, &base, &msf_rows(len, su)));
                debug_assert_eq!(rows.len(), st.k_dprime(u, x, z, y));
            }
            let kd = rows.len();
            let d = SectionDecomposition::assemble(
                i,
                (x, z, y),
                ls.s_rows.clone(),
                rs.s_rows.clone(),
                rows.clone(),
                g.clone(),
                &lib,
                &rib,
                fold,
            );
            let total = 1usize << (kp + kd);
            let mut a_idx = Vec::with_capacity(total);
            let mut b_idx = Vec::with_capacity(total);
            for packed in 0..total as u64 {
                let (a, b) = d.child_indices(packed);
                a_idx.push(a as u32);
                b_idx.push(b as u32);
            }
            if layer_start(kp, kd, kd) + (1 << kp) > MAX_BUFFER {
                return Err(Error::TooLarge(format!("forest of [{x},{y}) at phase {i}")));
            }
            let full = d.full_basis();
            *anchor = Some(Anchor {
                phase: i,
                halves: halves.len(),
                k_dprime: kd,
                k_prime: kp,
                g_dprime: rows,
                basis: EchelonBasis::from_rows(len, &full),
                residual: Vec::new(),
            });
            out.exec = Exec::Generic {
                k_prime: kp,
                k_dprime: kd,
                fold,
                a_idx,
                b_idx,
            };
            out.k_dprime = kd;
            out.decomposition = Some(d);
            out.antisym_mask = antisym_mask(len, &s, &g, ones_flag);
            out.coset_rows = g;
        }
        _ => unreachable!("handled above"),
    }
    if !matches!(step, Step::Generic { .. }) {
        *anchor = None;
    }
    Ok(out)
}

fn nodes_step<'a>(nodes: &'a [SectionNode], f: &Flat, phase: usize) -> &'a PhaseStep {
    nodes
        .iter()
        .find(|n| n.x == f.x && n.y == f.y)
        .and_then(|n| n.steps[phase].as_ref())
        .expect("reused step exists")
}
