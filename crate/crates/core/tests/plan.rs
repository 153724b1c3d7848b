use kernel_trellis::gf2::{BitMatrix, BitVector};
use kernel_trellis::kernel::{make_arikan_kernel, random_kernel};
use kernel_trellis::plan::export::export_json;
use kernel_trellis::plan::{compile_plan, compile_with_tree, report_complexity, SectionAction, SectionTree};
use kernel_trellis::{Kernel, Processor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn f2() -> Kernel {
    make_arikan_kernel(1).unwrap()
}

fn identity2() -> Kernel {
    Kernel::new(BitMatrix::identity(2), "id2").unwrap()
}

#[test]
fn f2_classification_and_cost() {
    let plan = compile_plan(&f2()).unwrap();
    let root = plan.root();
    assert_eq!((root.x, root.y, root.z), (0, 2, Some(1)));
    assert_eq!(root.step(0).unwrap().action, SectionAction::Special { kind: 1 });
    assert_eq!(root.step(1).unwrap().action, SectionAction::Special { kind: 2 });
    let c = plan.cost();
    assert_eq!((c.phase(0).adds, c.phase(0).comps), (0, 1));
    assert_eq!((c.phase(1).adds, c.phase(1).comps), (1, 0));
    assert_eq!(c.delta, vec![0, 0]);
}

#[test]
fn f2_offsets() {
    let plan = compile_plan(&f2()).unwrap();
    let root = plan.root().step(1).unwrap();
    // row 0 = (1,0) is outside span{(1,1)}, so it passes to the halves
    assert!(root.offsets.is_empty());
    assert_eq!(root.residual, vec![0]);
    let (l, r) = plan.root().children.unwrap();
    assert_eq!(plan.nodes()[l].step(1).unwrap().offsets, vec![(0, 1)]);
    assert!(plan.nodes()[r].step(1).unwrap().offsets.is_empty());
}

#[test]
fn f2_decision_moves_left_offset() {
    let plan = compile_plan(&f2()).unwrap();
    let mut p = Processor::new(&plan);
    p.load_llrs(&[2.0, -3.0]).unwrap();
    p.phase_llr(0).unwrap();
    p.apply_decision(0, true).unwrap();
    p.enable_trace();
    assert_eq!(p.phase_llr(1).unwrap(), -5.0);
    assert!(p.take_trace().contains("phase 1 llr -5.0"));
}

#[test]
fn identity_kernel_costs_nothing() {
    let plan = compile_plan(&identity2()).unwrap();
    for i in 0..2 {
        let c = plan.cost().phase(i);
        assert_eq!((c.adds, c.comps), (0, 0), "phase {i}");
    }
    let mut p = Processor::new(&plan);
    p.load_llrs(&[1.5, -0.5]).unwrap();
    assert_eq!(p.phase_llr(0).unwrap(), 1.5);
    p.apply_decision(0, false).unwrap();
    assert_eq!(p.phase_llr(1).unwrap(), -0.5);
}

#[test]
fn report_for_f2() {
    let text = report_complexity(&compile_plan(&f2()).unwrap());
    let rows: Vec<&str> = text.lines().collect();
    assert!(rows.contains(&"0\t0\t1\t0"), "{text}");
    assert!(rows.contains(&"1\t1\t0\t0"), "{text}");
    assert!(rows.contains(&"total\t1\t1\t0"), "{text}");
}

#[test]
fn arikan_kernels_use_only_kinds_1_and_2() {
    for mu in 1..=4 {
        let plan = compile_plan(&make_arikan_kernel(mu).unwrap()).unwrap();
        for (action, _) in plan.action_histogram() {
            assert!(
                matches!(
                    action,
                    SectionAction::Special { kind: 1 | 2 }
                        | SectionAction::Leaf
                        | SectionAction::ReuseCbt
                        | SectionAction::Constant
                ),
                "mu {mu}: {action}"
            );
        }
        // unrolled min-sum: (l/2) log2 l sign-min and as many signed adds
        let l = 1u64 << mu;
        let t = plan.cost().total();
        assert_eq!((t.adds, t.comps), (l / 2 * mu as u64, l / 2 * mu as u64), "mu {mu}");
    }
}

#[test]
fn totals_are_column_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for l in 2..=10 {
        let plan = compile_plan(&random_kernel(l, &mut rng)).unwrap();
        let c = plan.cost();
        let (adds, comps) = (0..l).fold((0, 0), |(a, b), i| (a + c.phase(i).adds, b + c.phase(i).comps));
        assert_eq!((adds, comps), (c.total().adds, c.total().comps));
    }
}

#[test]
fn dp_beats_random_trees() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for l in 2..=10 {
        for _ in 0..3 {
            let k = random_kernel(l, &mut rng);
            let best = compile_plan(&k).unwrap().cost().total().total();
            for _ in 0..20 {
                let tree = SectionTree::random(l, &mut rng);
                let other = compile_with_tree(&k, &tree).unwrap().cost().total().total();
                assert!(best <= other, "l {l}: {best} > {other} for {tree}");
            }
        }
    }
}

#[test]
fn rejects_invalid_trees() {
    let k = f2();
    let bad = SectionTree::Split {
        x: 0,
        z: 1,
        y: 3,
        left: Box::new(SectionTree::Leaf { x: 0, y: 1 }),
        right: Box::new(SectionTree::Leaf { x: 1, y: 3 }),
    };
    assert!(compile_with_tree(&k, &bad).is_err());
}

#[test]
fn export_is_stable_json() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let k = random_kernel(9, &mut rng);
    let a = export_json(&compile_plan(&k).unwrap());
    let b = export_json(&compile_plan(&k).unwrap());
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["l"], 9);
    let sections = v["sections"].as_array().unwrap();
    assert_eq!(sections[0]["x"], 0);
    assert_eq!(sections[0]["y"], 9);
    for s in sections {
        for p in s["phases"].as_array().unwrap() {
            for r in p["coset_rows"].as_array().unwrap().iter().chain(p["s_rows"].as_array().unwrap()) {
                let r = r.as_str().unwrap();
                assert!(r.chars().all(|c| c.is_ascii_hexdigit()), "{r}");
            }
        }
    }
}

/// `max` over a coset of `Q` with the residual prior rows folded in, found by enumeration.
fn coset_max(llrs: &[f64], rep: &BitVector, s_rows: &[BitVector], shift: &BitVector) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for sel in 0..1u64 << s_rows.len() {
        let mut w = rep ^ shift;
        for (b, r) in s_rows.iter().enumerate() {
            if (sel >> b) & 1 == 1 {
                w ^= r;
            }
        }
        let q: f64 = (0..w.len()).map(|j| if w.get(j) { -llrs[j] } else { llrs[j] }).sum();
        best = best.max(q);
    }
    best
}

/// Every section table, including reused and subforest-selected ones, equals
/// the coset maxima of its section code up to one additive constant.
#[test]
fn section_tables_match_coset_maxima() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    for l in 2..=10 {
        for trial in 0..10 {
            let k = random_kernel(l, &mut rng);
            let plan = if trial % 2 == 0 {
                compile_plan(&k).unwrap()
            } else {
                compile_with_tree(&k, &SectionTree::random(l, &mut rng)).unwrap()
            };
            let llrs: Vec<f64> = (0..l).map(|_| rng.random_range(-4.0..4.0)).collect();
            let u: Vec<bool> = (0..l).map(|_| rng.random()).collect();
            let mut p = Processor::new(&plan);
            p.load_llrs(&llrs).unwrap();
            for i in 0..l {
                p.phase_llr(i).unwrap();
                for (n, node) in plan.nodes().iter().enumerate() {
                    let Some(step) = node.step(i) else { continue };
                    if step.action == SectionAction::Constant {
                        assert_eq!(p.cbt(n), vec![0.0]);
                        continue;
                    }
                    let len = node.y - node.x;
                    let mut shift = BitVector::zeros(len);
                    for &j in &step.residual {
                        if u[j] {
                            shift ^= &k.row(j).slice(node.x, node.y);
                        }
                    }
                    let table = p.cbt(n);
                    assert_eq!(table.len(), step.table_len());
                    let want: Vec<f64> = (0..step.table_len() as u64)
                        .map(|v| {
                            let mut rep = BitVector::zeros(len);
                            for (b, r) in step.coset_rows.iter().enumerate() {
                                if (v >> b) & 1 == 1 {
                                    rep ^= r;
                                }
                            }
                            coset_max(&llrs[node.x..node.y], &rep, &step.s_rows, &shift)
                        })
                        .collect();
                    let c = table[0] - want[0];
                    for v in 0..table.len() {
                        assert!(
                            (table[v] - want[v] - c).abs() < 1e-9,
                            "l {l} phase {i} section [{},{}) {}: {table:?} vs {want:?}",
                            node.x,
                            node.y,
                            step.action
                        );
                    }
                    checked += 1;
                }
                p.apply_decision(i, u[i]).unwrap();
            }
        }
    }
    assert!(checked > 1000);
}

#[test]
fn reuse_and_select_occur() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut seen = (false, false, false);
    for _ in 0..20 {
        let plan = compile_plan(&random_kernel(10, &mut rng)).unwrap();
        for (a, _) in plan.action_histogram() {
            match a {
                SectionAction::ReuseCbt => seen.0 = true,
                SectionAction::SubforestSelect => seen.1 = true,
                SectionAction::CombineGeneric { abs_fold: true } => seen.2 = true,
                _ => {}
            }
        }
    }
    assert_eq!(seen, (true, true, true));
}
