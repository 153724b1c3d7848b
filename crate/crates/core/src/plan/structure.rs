//! Phase-by-phase structural simulation of a section: which action each phase
//! needs, independent of the numeric values, plus the per-phase cost and
//! antisymmetry flags that follow from the children's flags.

use std::cell::RefCell;
use std::collections::HashMap;

use crate::codes::{coset_rows, CodeTable};
use crate::gf2::{BitVector, EchelonBasis};
use crate::kernel::Kernel;

use super::cost::{section_cost, OpCount, SectionDims};
use super::SectionAction;

/// Dimension facts of one section at one phase.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct SecInfo {
    pub p_dim: u8,
    pub s_dim: u8,
    pub ones_in_p: bool,
    pub ones_in_s: bool,
}

impl SecInfo {
    pub fn k_prime(&self) -> usize {
        (self.p_dim - self.s_dim) as usize
    }
}

/// Action of a section at one phase, before any numeric data is attached.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Step {
    Leaf,
    /// Single-coset section, table fixed at zero.
    Constant,
    /// Table unchanged since the last non-reuse step at phase `from`.
    Reuse { from: usize },
    /// Read from the forest built at phase `anchor`.
    Select { anchor: usize },
    Special { kind: u8 },
    /// Full forest build, valid for subforest selection up to `run_end`.
    /// `fold_ok` holds when the all-ones word can head every `G''` in the run.
    Generic { fold_ok: bool, run_end: usize },
}

#[derive(Clone, Debug)]
pub(crate) struct NodeSim {
    pub steps: Vec<Option<Step>>,
    /// Phases at which the children must be evaluated.
    pub child_mask: u64,
}

/// Per-phase antisymmetry flags of a section table, as bit masks over phases.
///
/// `ones`: `T[v ^ μ] = -T[v]` where `μ` is the (nonzero) coset index of the
/// all-ones word. `pair`: a two-entry table with `T[1] = -T[0]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub(crate) struct Flags {
    pub ones: u64,
    pub pair: u64,
}

impl Flags {
    pub fn covers(&self, other: &Flags) -> bool {
        self.ones & other.ones == other.ones && self.pair & other.pair == other.pair
    }
}

pub(crate) struct Evaluation {
    pub flags: Flags,
    /// `(phase, action, cost)` for every evaluated phase.
    pub phases: Vec<(usize, SectionAction, OpCount)>,
    pub total: u64,
}

/// `(phase, x, z, y)` of a split section.
type Split = (usize, usize, usize, usize);

pub(crate) struct Structure {
    l: usize,
    pub table: CodeTable,
    info: Vec<SecInfo>,
    kinds: RefCell<HashMap<Split, Option<u8>>>,
}

impl Structure {
    pub fn new(kernel: &Kernel) -> Self {
        let l = kernel.size();
        let table = CodeTable::new(kernel);
        let mut info = vec![SecInfo::default(); l * (l + 1) * (l + 1)];
        for i in 0..l {
            for x in 0..l {
                for y in x + 1..=l {
                    let ones = BitVector::ones(y - x);
                    let p = table.p(i, x, y);
                    let s = table.s(i, x, y);
                    info[Self::slot(l, i, x, y)] = SecInfo {
                        p_dim: p.len() as u8,
                        s_dim: s.len() as u8,
                        ones_in_p: EchelonBasis::from_rows(y - x, p).contains(&ones),
                        ones_in_s: EchelonBasis::from_rows(y - x, s).contains(&ones),
                    };
                }
            }
        }
        Self {
            l,
            table,
            info,
            kinds: RefCell::new(HashMap::new()),
        }
    }

    fn slot(l: usize, i: usize, x: usize, y: usize) -> usize {
        (i * (l + 1) + x) * (l + 1) + y
    }

    pub fn size(&self) -> usize {
        self.l
    }

    pub fn info(&self, i: usize, x: usize, y: usize) -> SecInfo {
        self.info[Self::slot(self.l, i, x, y)]
    }

    /// Section codes are nested across phases, so equality reduces to equal dimensions.
    pub fn same_codes(&self, a: usize, b: usize, x: usize, y: usize) -> bool {
        let (p, q) = (self.info(a, x, y), self.info(b, x, y));
        p.p_dim == q.p_dim && p.s_dim == q.s_dim
    }

    pub fn same_shortened(&self, a: usize, b: usize, x: usize, y: usize) -> bool {
        self.info(a, x, y).s_dim == self.info(b, x, y).s_dim
    }

    pub fn k_dprime(&self, i: usize, x: usize, z: usize, y: usize) -> usize {
        (self.info(i, x, y).s_dim - self.info(i, x, z).s_dim - self.info(i, z, y).s_dim) as usize
    }

    /// Special trellis kind of a build at phase `i`, if any template matches.
    /// The two-coset-bit template of kind 3 has `k' = 0` and is subsumed by
    /// [`Step::Constant`].
    pub fn special_kind(&self, i: usize, x: usize, z: usize, y: usize) -> Option<u8> {
        let kp = self.info(i, x, y).k_prime();
        let kd = self.k_dprime(i, x, z, y);
        if self.info(i, x, z).k_prime() != 1 || self.info(i, z, y).k_prime() != 1 {
            return None;
        }
        match (kp, kd) {
            (1, 1) => Some(1),
            (1, 0) => *self
                .kinds
                .borrow_mut()
                .entry((i, x, z, y))
                .or_insert_with(|| self.match_template(i, x, z, y)),
            _ => None,
        }
    }

    /// Kind 2 needs the coset row to leave both shortened halves.
    fn match_template(&self, i: usize, x: usize, z: usize, y: usize) -> Option<u8> {
        let t = &self.table;
        let w = y - x;
        let sl = EchelonBasis::from_rows(z - x, t.s(i, x, z));
        let sr = EchelonBasis::from_rows(y - z, t.s(i, z, y));
        let g = coset_rows(w, t.p(i, x, y), t.s(i, x, y));
        (!sl.contains(&g[0].slice(0, z - x)) && !sr.contains(&g[0].slice(z - x, w))).then_some(2)
    }

    /// Steps of a leaf section at the phases in `needed`.
    pub fn simulate_leaf(&self, x: usize, y: usize, needed: u64) -> NodeSim {
        let mut steps = vec![None; self.l];
        let mut view: Option<usize> = None;
        for i in phases(needed) {
            steps[i] = Some(match view {
                _ if self.info(i, x, y).k_prime() == 0 => {
                    view = Some(i);
                    Step::Constant
                }
                Some(b) if self.same_codes(b, i, x, y) => Step::Reuse { from: b },
                _ => {
                    view = Some(i);
                    Step::Leaf
                }
            });
        }
        NodeSim {
            steps,
            child_mask: 0,
        }
    }

    /// Steps of a section split at `z`, evaluated at the phases in `needed`.
    pub fn simulate_split(&self, x: usize, z: usize, y: usize, needed: u64) -> NodeSim {
        let mut steps = vec![None; self.l];
        let mut child_mask = 0u64;
        let mut view: Option<usize> = None;
        let mut anchor: Option<(usize, usize)> = None;
        for i in phases(needed) {
            let step = match (view, anchor) {
                _ if self.info(i, x, y).k_prime() == 0 => Step::Constant,
                (Some(b), _) if self.same_codes(b, i, x, y) => Step::Reuse { from: b },
                (_, Some((a, e))) if i <= e => Step::Select { anchor: a },
                _ => {
                    child_mask |= 1 << i;
                    match self.special_kind(i, x, z, y) {
                        Some(kind) => {
                            anchor = None;
                            Step::Special { kind }
                        }
                        None => {
                            let run_end = self.run_end(i, x, z, y);
                            let fold_ok = (i..=run_end).all(|t| {
                                self.k_dprime(t, x, z, y) == 0 || self.info(t, x, y).ones_in_s
                            }) && self.info(i, x, y).ones_in_s;
                            anchor = Some((i, run_end));
                            Step::Generic { fold_ok, run_end }
                        }
                    }
                }
            };
            if !matches!(step, Step::Reuse { .. }) {
                view = Some(i);
            }
            steps[i] = Some(step);
        }
        NodeSim { steps, child_mask }
    }

    /// Last phase `e >= a` such that both children keep their shortened codes on `[a, e]`.
    pub fn run_end(&self, a: usize, x: usize, z: usize, y: usize) -> usize {
        let mut e = a;
        while e + 1 < self.l
            && self.same_shortened(a, e + 1, x, z)
            && self.same_shortened(a, e + 1, z, y)
        {
            e += 1;
        }
        e
    }

    /// Costs and flags of a section given its steps and its children's flags.
    pub fn evaluate(
        &self,
        x: usize,
        z: Option<usize>,
        y: usize,
        sim: &NodeSim,
        left: Flags,
        right: Flags,
    ) -> Evaluation {
        let mut flags = Flags::default();
        let mut out = Vec::new();
        let mut total = 0;
        for (i, step) in sim.steps.iter().enumerate() {
            let Some(step) = step else { continue };
            let info = self.info(i, x, y);
            let bit = 1u64 << i;
            let dims = SectionDims {
                len: y - x,
                k_prime: info.k_prime(),
                k_dprime: z.map_or(0, |z| self.k_dprime(i, x, z, y)),
                s_dim: info.s_dim as usize,
            };
            let (action, ones, pair, children) = match *step {
                Step::Leaf => {
                    let anti = info.s_dim == 0 && info.ones_in_p;
                    (SectionAction::Leaf, anti, anti && info.k_prime() == 1, (true, true))
                }
                Step::Reuse { from } => {
                    let f = 1u64 << from;
                    (SectionAction::ReuseCbt, flags.ones & f != 0, flags.pair & f != 0, (true, true))
                }
                Step::Select { .. } => (SectionAction::SubforestSelect, false, false, (true, true)),
                Step::Constant => (SectionAction::Constant, info.ones_in_p, false, (true, true)),
                Step::Special { kind } => {
                    let children = (left.pair & bit != 0, right.pair & bit != 0);
                    let anti = kind != 3 && info.ones_in_p && !info.ones_in_s;
                    (SectionAction::Special { kind }, anti, kind != 3, children)
                }
                Step::Generic { fold_ok, .. } => {
                    let both = left.ones & right.ones & bit != 0;
                    let anti = dims.k_dprime == 0 && info.ones_in_p && both;
                    // with a zero child and k'' = 0 the table is a bijective
                    // relabeling of the other child's table
                    let zr = z.expect("generic steps have a split");
                    let relabel_pair = dims.k_dprime == 0
                        && ((self.info(i, x, zr).k_prime() == 0 && right.pair & bit != 0)
                            || (self.info(i, zr, y).k_prime() == 0 && left.pair & bit != 0));
                    (
                        SectionAction::CombineGeneric {
                            abs_fold: fold_ok && both && dims.k_dprime > 0,
                        },
                        anti,
                        (anti || relabel_pair) && info.k_prime() == 1,
                        (true, true),
                    )
                }
            };
            if ones {
                flags.ones |= bit;
            }
            if pair {
                flags.pair |= bit;
            }
            let mut cost = section_cost(&action, dims, children);
            if let (Step::Generic { .. }, Some(z)) = (step, z) {
                // a zero child table makes every entry a copy
                if self.info(i, x, z).k_prime() == 0 || self.info(i, z, y).k_prime() == 0 {
                    cost.adds = 0;
                }
            }
            total += cost.total();
            out.push((i, action, cost));
        }
        Evaluation {
            flags,
            phases: out,
            total,
        }
    }
}

/// Phases set in a mask, ascending.
pub(crate) fn phases(mask: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |i| (mask >> i) & 1 == 1)
}
