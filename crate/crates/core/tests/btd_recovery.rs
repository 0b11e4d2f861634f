mod common;

use common::*;
use hsi_tensor::btd::{btd_general, btd_ll1, BtdOptions};
use hsi_tensor::cpd::{cpd_als, CpdOptions};
use hsi_tensor::lmlra::{hooi, LmlraOptions};
use hsi_tensor::{DenseTensor, Matrix};

/// Sum of `(A_s B_s^T) ∘ c_s` terms with random rank-`l` matrices.
fn ll1_instance(seed: u64, dim: usize, ls: &[usize]) -> (DenseTensor, Vec<Matrix>) {
    let mut g = rng(seed);
    let dims = [dim, dim, dim];
    let mut t = DenseTensor::zeros(&dims);
    let mut cs = Vec::new();
    for &l in ls {
        let ab = gaussian(&mut g, dim, l) * gaussian(&mut g, dim, l).transpose();
        let c = unit_columns(gaussian(&mut g, dim, 1));
        let term = DenseTensor::from_fn(&dims, |ix| ab[(ix[0], ix[1])] * c[(ix[2], 0)]);
        t.add_assign(&term).unwrap();
        cs.push(c);
    }
    (t, cs)
}

#[test]
fn ll1_recovery_rate() {
    let seeds = 20;
    let mut recovered = 0;
    for seed in 0..seeds {
        let (t, cs) = ll1_instance(1000 + seed, 12, &[2, 2]);
        let (model, trace) = btd_ll1(&t, &BtdOptions::ll1(&[2, 2]).with_seed(seed)).unwrap();
        assert_eq!(trace.monotonicity_violations(1e-12), 0);
        if trace.final_relative_error().unwrap() >= 1e-6 {
            continue;
        }
        let scores: Vec<Vec<f64>> = cs
            .iter()
            .map(|c| {
                model
                    .terms
                    .iter()
                    .map(|term| {
                        let e = &term.factors[2];
                        (c.column(0).dot(&e.column(0)) / e.column(0).norm()).abs()
                    })
                    .collect()
            })
            .collect();
        assert!(greedy_min_match(&scores) > 0.99);
        recovered += 1;
    }
    assert!(recovered * 10 >= 8 * seeds, "recovered {recovered}/{seeds}");
}

#[test]
fn unit_blocks_reduce_to_cpd() {
    for seed in 0..5u64 {
        let truth = random_kruskal(&mut rng(seed), &[7, 6, 5], 3);
        let t = truth.full().unwrap();
        let (_, cpd_trace) = cpd_als(&t, &CpdOptions { num_starts: 3, ..CpdOptions::new(3).with_seed(seed) }).unwrap();
        let (_, ll1) = btd_ll1(&t, &BtdOptions::ll1(&[1, 1, 1]).with_seed(seed)).unwrap();
        let (_, gen) = btd_general(&t, &BtdOptions::general(vec![[1, 1, 1]; 3]).with_seed(seed)).unwrap();
        let reference = cpd_trace.final_relative_error().unwrap();
        for trace in [ll1, gen] {
            assert_eq!(trace.monotonicity_violations(1e-12), 0);
            assert!((trace.final_relative_error().unwrap() - reference).abs() < 1e-6);
        }
    }
}

#[test]
fn single_block_reduces_to_hooi() {
    for seed in 0..5u64 {
        let truth = random_tucker(&mut rng(50 + seed), &[7, 6, 5], &[3, 2, 2]);
        let t = truth.full().unwrap();
        let (_, h) = hooi(&t, &LmlraOptions::new(vec![3, 2, 2])).unwrap();
        let (model, b) = btd_general(&t, &BtdOptions::general(vec![[3, 2, 2]]).with_seed(seed)).unwrap();
        assert!((h.final_relative_error().unwrap() - b.final_relative_error().unwrap()).abs() < 1e-6);
        assert!(model.full().unwrap().relative_error(&t).unwrap() < 1e-6);
    }
}

#[test]
fn general_blocks_fit_exact_input() {
    let dims = [8, 8, 8];
    let mut fitted = 0;
    for inst in 0..6u64 {
        let mut g = rng(77 + inst);
        let mut t = DenseTensor::zeros(&dims);
        for _ in 0..2 {
            let term = random_tucker(&mut g, &dims, &[2, 2, 2]).full().unwrap();
            t.add_assign(&term).unwrap();
        }
        let (model, trace) = btd_general(&t, &BtdOptions::general(vec![[2, 2, 2]; 2]).with_seed(inst)).unwrap();
        assert_eq!(trace.monotonicity_violations(1e-12), 0);
        assert_eq!(model.parameter_count(), 2 * (8 + 3 * 16));
        if trace.final_relative_error().unwrap() < 1e-6 {
            fitted += 1;
        }
    }
    // single starts swamp roughly one time in five
    assert!(fitted >= 5, "fitted {fitted}/6");
}

#[test]
fn restarts_are_deterministic() {
    let (t, _) = ll1_instance(5, 8, &[2, 1]);
    let opts = BtdOptions::ll1(&[2, 1]).with_seed(9);
    assert_eq!(btd_ll1(&t, &opts).unwrap(), btd_ll1(&t, &opts).unwrap());
}
