use std::fmt;
use std::ops::{Add, AddAssign};

use serde::Serialize;

use super::SectionAction;

/// Number of real additions (subtractions included) and comparisons.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct OpCount {
    pub adds: u64,
    pub comps: u64,
}

impl OpCount {
    pub const ZERO: OpCount = OpCount { adds: 0, comps: 0 };

    pub fn new(adds: u64, comps: u64) -> Self {
        Self { adds, comps }
    }

    pub fn total(&self) -> u64 {
        self.adds + self.comps
    }
}

impl Add for OpCount {
    type Output = OpCount;
    fn add(self, rhs: OpCount) -> OpCount {
        OpCount::new(self.adds + rhs.adds, self.comps + rhs.comps)
    }
}

impl AddAssign for OpCount {
    fn add_assign(&mut self, rhs: OpCount) {
        self.adds += rhs.adds;
        self.comps += rhs.comps;
    }
}

impl std::iter::Sum for OpCount {
    fn sum<I: Iterator<Item = OpCount>>(iter: I) -> Self {
        iter.fold(OpCount::ZERO, |a, b| a + b)
    }
}

/// Dimensions of a section at one phase, as far as cost accounting needs them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SectionDims {
    /// Section length `y - x`.
    pub len: usize,
    pub k_prime: usize,
    pub k_dprime: usize,
    /// Dimension of the shortened code (leaves enumerate it).
    pub s_dim: usize,
}

/// Cost of producing one section table.
///
/// Leaves enumerate every word of every coset (`len - 1` additions per word).
/// Reuse, subforest selection and single-coset sections are free. Specials cost one comparison (kind
/// 1), one addition (kind 2), or two additions (kind 3), plus one subtraction
/// for every child whose two-entry table is not known to be antisymmetric.
/// Everything else uses `2^{k'+k''-f}` additions and `2^{k'}(2^{k''-f}-1)`
/// comparisons.
pub fn section_cost(action: &SectionAction, dims: SectionDims, children_antisym: (bool, bool)) -> OpCount {
    let normalize = (!children_antisym.0) as u64 + (!children_antisym.1) as u64;
    match *action {
        SectionAction::ReuseCbt | SectionAction::SubforestSelect | SectionAction::Constant => OpCount::ZERO,
        SectionAction::Leaf => {
            let words = 1u64 << (dims.k_prime + dims.s_dim);
            OpCount::new(
                words * (dims.len as u64 - 1),
                (1u64 << dims.k_prime) * ((1u64 << dims.s_dim) - 1),
            )
        }
        SectionAction::Special { kind: 1 } => OpCount::new(normalize, 1),
        SectionAction::Special { kind: 2 } => OpCount::new(1 + normalize, 0),
        SectionAction::Special { kind: _ } => OpCount::new(2 + normalize, 0),
        SectionAction::CombineGeneric { abs_fold } => {
            let f = abs_fold as usize;
            OpCount::new(
                1u64 << (dims.k_prime + dims.k_dprime - f),
                (1u64 << dims.k_prime) * ((1u64 << (dims.k_dprime - f)) - 1),
            )
        }
    }
}

/// Per-phase and total cost of one kernel processing pass.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CostSummary {
    /// Table construction cost per phase, final subtraction excluded.
    pub sections: Vec<OpCount>,
    /// Final LLR cost per phase: one subtraction unless the root table is antisymmetric.
    pub delta: Vec<u64>,
}

impl CostSummary {
    pub fn phase(&self, i: usize) -> OpCount {
        self.sections[i] + OpCount::new(self.delta[i], 0)
    }

    pub fn per_phase(&self) -> Vec<OpCount> {
        (0..self.sections.len()).map(|i| self.phase(i)).collect()
    }

    pub fn total(&self) -> OpCount {
        self.per_phase().into_iter().sum()
    }
}

impl fmt::Display for CostSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "phase\tadds\tcomps\tdelta")?;
        for i in 0..self.sections.len() {
            let c = self.phase(i);
            writeln!(f, "{i}\t{}\t{}\t{}", c.adds, c.comps, self.delta[i])?;
        }
        let t = self.total();
        writeln!(f, "total\t{}\t{}\t{}", t.adds, t.comps, self.delta.iter().sum::<u64>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims(len: usize, kp: usize, kd: usize, s: usize) -> SectionDims {
        SectionDims {
            len,
            k_prime: kp,
            k_dprime: kd,
            s_dim: s,
        }
    }

    #[test]
    fn special_and_generic_costs() {
        let d = dims(2, 1, 1, 1);
        assert_eq!(
            section_cost(&SectionAction::Special { kind: 1 }, d, (true, true)),
            OpCount::new(0, 1)
        );
        assert_eq!(
            section_cost(&SectionAction::Special { kind: 2 }, d, (true, true)),
            OpCount::new(1, 0)
        );
        assert_eq!(
            section_cost(&SectionAction::Special { kind: 3 }, d, (true, true)),
            OpCount::new(2, 0)
        );
        assert_eq!(
            section_cost(&SectionAction::Special { kind: 1 }, d, (false, true)),
            OpCount::new(1, 1)
        );
        let g = dims(6, 2, 1, 3);
        assert_eq!(
            section_cost(&SectionAction::CombineGeneric { abs_fold: false }, g, (false, false)),
            OpCount::new(8, 4)
        );
        assert_eq!(
            section_cost(&SectionAction::CombineGeneric { abs_fold: true }, g, (true, true)),
            OpCount::new(4, 0)
        );
        assert_eq!(section_cost(&SectionAction::ReuseCbt, g, (false, false)), OpCount::ZERO);
        assert_eq!(
            section_cost(&SectionAction::SubforestSelect, g, (false, false)),
            OpCount::ZERO
        );
    }

    #[test]
    fn leaf_costs() {
        // single symbol, two cosets: values are +-S, free
        assert_eq!(section_cost(&SectionAction::Leaf, dims(1, 1, 0, 0), (true, true)), OpCount::ZERO);
        // two symbols, p = F_2^2, s = {00, 11}: 4 words, one add each, one compare per coset
        assert_eq!(
            section_cost(&SectionAction::Leaf, dims(2, 1, 0, 1), (true, true)),
            OpCount::new(4, 2)
        );
    }

    #[test]
    fn totals_are_column_sums() {
        let c = CostSummary {
            sections: vec![OpCount::new(0, 1), OpCount::new(1, 0), OpCount::new(3, 2)],
            delta: vec![0, 0, 1],
        };
        assert_eq!(c.total(), OpCount::new(5, 3));
        let text = c.to_string();
        assert!(text.contains("total\t5\t3\t1"));
    }
}
