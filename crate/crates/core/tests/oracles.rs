use kernel_trellis::codes::{extended_code, section_codes};
use kernel_trellis::gf2::BitVector;
use kernel_trellis::kernel::{make_arikan_kernel, random_kernel};
use kernel_trellis::oracles::{brute_force_llr, exhaustive_ml, viterbi_llr, Trellis};
use kernel_trellis::polar::CodeSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn f2_examples() {
    let k = make_arikan_kernel(1).unwrap();
    assert_eq!(brute_force_llr(&k, 0, &[], &[2.0, -3.0]).unwrap(), -2.0);
    assert_eq!(brute_force_llr(&k, 1, &[true], &[2.0, -3.0]).unwrap(), -5.0);
    assert_eq!(viterbi_llr(&k, 0, &[], &[2.0, -3.0]).unwrap().llr, -2.0);
}

#[test]
fn zero_llrs_give_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for l in 2..=8 {
        let k = random_kernel(l, &mut rng);
        for i in 0..l {
            let prefix: Vec<bool> = (0..i).map(|_| rng.random()).collect();
            assert_eq!(brute_force_llr(&k, i, &prefix, &vec![0.0; l]).unwrap(), 0.0);
        }
    }
}

#[test]
fn oracle_input_checks() {
    let k = make_arikan_kernel(1).unwrap();
    assert!(brute_force_llr(&k, 2, &[true, false], &[1.0, 1.0]).is_err());
    assert!(brute_force_llr(&k, 1, &[], &[1.0, 1.0]).is_err());
    assert!(brute_force_llr(&k, 0, &[], &[1.0]).is_err());
}

#[test]
fn viterbi_agrees_with_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for case in 0..1000 {
        let l = 2 + case % 9;
        let k = random_kernel(l, &mut rng);
        let i = rng.random_range(0..l);
        let prefix: Vec<bool> = (0..i).map(|_| rng.random()).collect();
        let llrs: Vec<f64> = (0..l).map(|_| rng.random_range(-4.0..4.0)).collect();
        let a = brute_force_llr(&k, i, &prefix, &llrs).unwrap();
        let b = viterbi_llr(&k, i, &prefix, &llrs).unwrap().llr;
        worst = worst.max((a - b).abs());
    }
    assert!(worst <= 1e-9, "max difference {worst}");
}

/// The span-form trellis has `2^{dim p_{0,t} - dim s_{0,t}}` states at depth `t`.
#[test]
fn trellis_state_profile_matches_section_codes() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for l in 2..=10 {
        let k = random_kernel(l, &mut rng);
        for i in 0..l {
            let t = Trellis::new(&k, i).unwrap();
            let dims = t.state_dims();
            assert_eq!(dims.len(), l + 2);
            assert_eq!((dims[0], dims[l + 1]), (0, 0));
            let c = extended_code(&k, i).unwrap();
            for (d, &dim) in dims.iter().enumerate().take(l + 1).skip(1) {
                let sc = section_codes(&c, 0, d).unwrap();
                assert_eq!(dim, sc.p_gen.rank() - sc.s_gen.rank(), "l {l} phase {i} depth {d}");
            }
            // two cosets at the extension symbol, one per value of u_i
            assert_eq!(dims[l], 1);
        }
    }
}

fn correlation(c: &BitVector, llrs: &[f64]) -> f64 {
    (0..c.len()).map(|j| if c.get(j) { -llrs[j] } else { llrs[j] }).sum()
}

#[test]
fn exhaustive_ml_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let k = make_arikan_kernel(1).unwrap();
    let all = CodeSpec::new(k.clone(), 2, 0..4).unwrap();
    let llrs: Vec<f64> = (0..4).map(|_| rng.random_range(-4.0..4.0)).collect();
    assert!(exhaustive_ml(&all, &llrs).unwrap().is_zero());

    let spec = CodeSpec::new(k, 2, [0]).unwrap();
    let g = spec.generator_matrix();
    for _ in 0..50 {
        let llrs: Vec<f64> = (0..4).map(|_| rng.random_range(-4.0..4.0)).collect();
        let got = exhaustive_ml(&spec, &llrs).unwrap();
        // independent enumeration over all inputs with u_0 = 0
        let best = (0..16u64)
            .filter(|u| u & 1 == 0)
            .map(|u| g.left_mul(&BitVector::from_u64(u, 4)))
            .max_by(|a, b| correlation(a, &llrs).total_cmp(&correlation(b, &llrs)))
            .unwrap();
        assert_eq!(got, best);
    }

    let c = spec.encode(&spec.embed(&[true, false, true]).unwrap()).unwrap();
    let noiseless: Vec<f64> = (0..4).map(|j| if c.get(j) { -1.0 } else { 1.0 }).collect();
    assert_eq!(exhaustive_ml(&spec, &noiseless).unwrap(), c);
}
