//! Compilation of a kernel into a per-phase processing plan over a single
//! sectionalization tree.

mod compile;
pub mod cost;
mod dp;
pub mod export;
mod structure;

use std::fmt;

use rand::Rng;
use serde::Serialize;

use crate::codes::SectionDecomposition;
use crate::error::{Error, Result};
use crate::gf2::BitVector;
use crate::kernel::Kernel;

pub use cost::{section_cost, CostSummary, OpCount, SectionDims};

/// Largest forest buffer a single section may need, in entries.
pub const MAX_BUFFER: usize = 1 << 24;

/// Action taken by a section at one phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SectionAction {
    /// Direct enumeration of every coset word.
    Leaf,
    /// Successive maximization storing every intermediate layer.
    CombineGeneric { abs_fold: bool },
    /// Closed-form table for two-entry children.
    Special { kind: u8 },
    /// Table unchanged since the last evaluation.
    ReuseCbt,
    /// Index arithmetic into a forest built at an earlier phase.
    SubforestSelect,
    /// Single-coset section: its one entry is a common shift of every table
    /// above it, so it is taken as zero and its subtree is skipped.
    Constant,
}

impl fmt::Display for SectionAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SectionAction::Leaf => write!(f, "leaf"),
            SectionAction::CombineGeneric { abs_fold: false } => write!(f, "generic"),
            SectionAction::CombineGeneric { abs_fold: true } => write!(f, "generic+fold"),
            SectionAction::Special { kind } => write!(f, "special{kind}"),
            SectionAction::ReuseCbt => write!(f, "reuse"),
            SectionAction::SubforestSelect => write!(f, "select"),
            SectionAction::Constant => write!(f, "constant"),
        }
    }
}

/// A sectionalization: a binary split tree over `[0, l)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SectionTree {
    Leaf {
        x: usize,
        y: usize,
    },
    Split {
        x: usize,
        z: usize,
        y: usize,
        left: Box<SectionTree>,
        right: Box<SectionTree>,
    },
}

impl SectionTree {
    pub fn bounds(&self) -> (usize, usize) {
        match *self {
            SectionTree::Leaf { x, y } | SectionTree::Split { x, y, .. } => (x, y),
        }
    }

    /// Checks that the tree covers `[0, l)` with leaves of length at most 2.
    pub fn validate(&self, l: usize) -> Result<()> {
        fn walk(t: &SectionTree) -> Result<()> {
            match t {
                SectionTree::Leaf { x, y } => {
                    if y <= x || y - x > 2 {
                        return Err(Error::Invalid(format!("leaf [{x},{y}) must have length 1 or 2")));
                    }
                    Ok(())
                }
                SectionTree::Split { x, z, y, left, right } => {
                    if left.bounds() != (*x, *z) || right.bounds() != (*z, *y) || !(x < z && z < y) {
                        return Err(Error::Invalid(format!("bad split [{x},{z},{y})")));
                    }
                    walk(left)?;
                    walk(right)
                }
            }
        }
        if self.bounds() != (0, l) {
            return Err(Error::Invalid(format!("tree must cover [0,{l})")));
        }
        walk(self)
    }

    /// A uniformly random split at every section of length 3 or more;
    /// length-2 sections split or stay leaves with equal probability.
    pub fn random(l: usize, rng: &mut impl Rng) -> Self {
        fn build(x: usize, y: usize, rng: &mut impl Rng) -> SectionTree {
            if y - x == 1 || (y - x == 2 && rng.random::<bool>()) {
                return SectionTree::Leaf { x, y };
            }
            let z = rng.random_range(x + 1..y);
            SectionTree::Split {
                x,
                z,
                y,
                left: Box::new(build(x, z, rng)),
                right: Box::new(build(z, y, rng)),
            }
        }
        build(0, l, rng)
    }
}

impl fmt::Display for SectionTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SectionTree::Leaf { x, y } => write!(f, "[{x},{y})"),
            SectionTree::Split { left, right, .. } => write!(f, "({left} {right})"),
        }
    }
}

/// Runtime instructions of a section at one phase.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Exec {
    Reuse,
    Constant,
    /// Coset words and shortened-code words as bit masks over the section;
    /// `flips` are rows whose prior decisions flip input signs here.
    Leaf {
        len: usize,
        cosets: Vec<u64>,
        shortened: Vec<u64>,
        flips: Vec<(usize, u64)>,
    },
    Special1,
    Special2,
    Generic {
        k_prime: usize,
        k_dprime: usize,
        fold: bool,
        a_idx: Vec<u32>,
        b_idx: Vec<u32>,
    },
    Select {
        layer: usize,
        start: usize,
        v_rows: Vec<u64>,
        omega: Vec<(usize, u64)>,
    },
}

/// Everything a section needs at one phase.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseStep {
    pub action: SectionAction,
    pub cost: OpCount,
    pub k_prime: usize,
    pub k_dprime: usize,
    /// `T[v ^ μ] = -T[v]` holds for `μ = antisym_mask`, the index of the all-ones word.
    pub antisym_mask: Option<u64>,
    /// Two-entry table stored with `T[1] = -T[0]`.
    pub pair_antisymmetric: bool,
    /// Coset representatives that define the table index (little-endian selector).
    pub coset_rows: Vec<BitVector>,
    /// Basis of the shortened code of the section.
    pub s_rows: Vec<BitVector>,
    pub decomposition: Option<SectionDecomposition>,
    /// `(j, h)`: kernel row `j` is absorbed here as the index shift `h` when `u_j = 1`.
    pub offsets: Vec<(usize, u64)>,
    /// Kernel rows passed through this section into its subsections.
    pub residual: Vec<usize>,
    /// Phase whose forest this step reads, for reuse and subforest selection.
    pub source_phase: Option<usize>,
    pub(crate) exec: Exec,
}

impl PhaseStep {
    /// Number of table entries.
    pub fn table_len(&self) -> usize {
        1 << self.k_prime
    }

    /// Packed index-shift vectors `(j, ω_j)` for subforest selection.
    pub fn omega_rows(&self) -> &[(usize, u64)] {
        match &self.exec {
            Exec::Select { omega, .. } => omega,
            _ => &[],
        }
    }

    /// Packed anchor selectors of the current coset rows (the reduction map).
    pub fn reduction_map(&self) -> &[u64] {
        match &self.exec {
            Exec::Select { v_rows, .. } => v_rows,
            _ => &[],
        }
    }
}

/// A section of the tree with its per-phase steps.
#[derive(Clone, Debug, PartialEq)]
pub struct SectionNode {
    pub x: usize,
    pub y: usize,
    pub z: Option<usize>,
    /// Arena indices of the left and right subsections.
    pub children: Option<(usize, usize)>,
    /// `None` at phases where the section is not evaluated.
    pub steps: Vec<Option<PhaseStep>>,
    /// Buffer entries needed by the largest build.
    pub buffer_len: usize,
}

impl SectionNode {
    pub fn step(&self, i: usize) -> Option<&PhaseStep> {
        self.steps.get(i).and_then(|s| s.as_ref())
    }
}

/// Compiled processing plan of one kernel.
#[derive(Clone, Debug)]
pub struct KernelPlan {
    kernel: Kernel,
    tree: SectionTree,
    /// Sections in pre-order; index 0 is `[0, l)`.
    nodes: Vec<SectionNode>,
    cost: CostSummary,
}

impl KernelPlan {
    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn size(&self) -> usize {
        self.kernel.size()
    }

    pub fn tree(&self) -> &SectionTree {
        &self.tree
    }

    pub fn nodes(&self) -> &[SectionNode] {
        &self.nodes
    }

    pub fn root(&self) -> &SectionNode {
        &self.nodes[0]
    }

    pub fn cost(&self) -> &CostSummary {
        &self.cost
    }

    /// Buffer size of every section, in arena order.
    pub fn buffer_layout(&self) -> Vec<usize> {
        self.nodes.iter().map(|n| n.buffer_len).collect()
    }

    /// Count of each action over all sections and phases.
    pub fn action_histogram(&self) -> Vec<(SectionAction, usize)> {
        let mut out: Vec<(SectionAction, usize)> = Vec::new();
        for step in self.nodes.iter().flat_map(|n| n.steps.iter().flatten()) {
            match out.iter_mut().find(|(a, _)| *a == step.action) {
                Some((_, c)) => *c += 1,
                None => out.push((step.action, 1)),
            }
        }
        out
    }
}

/// Compiles a kernel with the cost-optimal sectionalization.
pub fn compile_plan(kernel: &Kernel) -> Result<KernelPlan> {
    check_size(kernel)?;
    let st = structure::Structure::new(kernel);
    let (tree, _) = dp::Search::new(&st).best_tree();
    compile::build(kernel, &st, tree)
}

/// Compiles a kernel with a caller-chosen sectionalization.
pub fn compile_with_tree(kernel: &Kernel, tree: &SectionTree) -> Result<KernelPlan> {
    check_size(kernel)?;
    tree.validate(kernel.size())?;
    let st = structure::Structure::new(kernel);
    compile::build(kernel, &st, tree.clone())
}

fn check_size(kernel: &Kernel) -> Result<()> {
    if kernel.size() > 64 {
        return Err(Error::TooLarge(format!("kernel size {} exceeds 64", kernel.size())));
    }
    Ok(())
}

/// Per-phase and total operation counts as a text table.
pub fn report_complexity(plan: &KernelPlan) -> String {
    let mut out = format!(
        "kernel {} (l = {})\nsectionalization {}\n",
        plan.kernel().name(),
        plan.size(),
        plan.tree()
    );
    out.push_str(&plan.cost().to_string());
    out
}
