//! Exact sectionalization search. The cost of a subtree depends on the phases
//! at which it is evaluated and on the antisymmetry flags its children
//! provide, so the memo is keyed by `(x, y, needed)` and keeps a Pareto set
//! over `(cost, flags)`.

use std::collections::HashMap;
use std::rc::Rc;

use super::structure::{Flags, Structure};
use super::SectionTree;

#[derive(Clone, Debug)]
enum Choice {
    Leaf,
    Split {
        z: usize,
        child_mask: u64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug)]
struct Entry {
    cost: u64,
    flags: Flags,
    choice: Choice,
}

pub(crate) struct Search<'a> {
    st: &'a Structure,
    memo: HashMap<(usize, usize, u64), Rc<Vec<Entry>>>,
}

fn insert_pareto(list: &mut Vec<Entry>, e: Entry) {
    if list
        .iter()
        .any(|o| o.cost <= e.cost && o.flags.covers(&e.flags))
    {
        return;
    }
    list.retain(|o| !(e.cost <= o.cost && e.flags.covers(&o.flags)));
    list.push(e);
}

impl<'a> Search<'a> {
    pub fn new(st: &'a Structure) -> Self {
        Self {
            st,
            memo: HashMap::new(),
        }
    }

    fn solve(&mut self, x: usize, y: usize, needed: u64) -> Rc<Vec<Entry>> {
        if let Some(v) = self.memo.get(&(x, y, needed)) {
            return v.clone();
        }
        let st = self.st;
        let mut list: Vec<Entry> = Vec::new();
        if y - x <= 2 {
            let sim = st.simulate_leaf(x, y, needed);
            let ev = st.evaluate(x, None, y, &sim, Flags::default(), Flags::default());
            insert_pareto(
                &mut list,
                Entry {
                    cost: ev.total,
                    flags: ev.flags,
                    choice: Choice::Leaf,
                },
            );
        }
        for z in x + 1..y {
            let sim = st.simulate_split(x, z, y, needed);
            let cm = sim.child_mask;
            let left = self.solve(x, z, cm);
            let right = self.solve(z, y, cm);
            for (li, le) in left.iter().enumerate() {
                for (ri, re) in right.iter().enumerate() {
                    let ev = st.evaluate(x, Some(z), y, &sim, le.flags, re.flags);
                    insert_pareto(
                        &mut list,
                        Entry {
                            cost: ev.total + le.cost + re.cost,
                            flags: ev.flags,
                            choice: Choice::Split {
                                z,
                                child_mask: cm,
                                left: li,
                                right: ri,
                            },
                        },
                    );
                }
            }
        }
        let list = Rc::new(list);
        self.memo.insert((x, y, needed), list.clone());
        list
    }

    fn tree(&mut self, x: usize, y: usize, needed: u64, index: usize) -> SectionTree {
        let list = self.solve(x, y, needed);
        match list[index].choice {
            Choice::Leaf => SectionTree::Leaf { x, y },
            Choice::Split {
                z,
                child_mask,
                left,
                right,
            } => SectionTree::Split {
                x,
                z,
                y,
                left: Box::new(self.tree(x, z, child_mask, left)),
                right: Box::new(self.tree(z, y, child_mask, right)),
            },
        }
    }

    /// Minimum-cost tree over `[0, l)`, counting the final subtraction of every
    /// phase whose root table is not antisymmetric. Returns the tree and its cost.
    pub fn best_tree(&mut self) -> (SectionTree, u64) {
        let l = self.st.size();
        let all = if l == 64 { u64::MAX } else { (1u64 << l) - 1 };
        let list = self.solve(0, l, all);
        let (index, cost) = list
            .iter()
            .enumerate()
            .map(|(k, e)| (k, e.cost + (l as u64 - e.flags.pair.count_ones() as u64)))
            .min_by_key(|&(k, c)| (c, k))
            .expect("the full section always has a candidate");
        (self.tree(0, l, all, index), cost)
    }
}
