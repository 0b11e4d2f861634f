//! Test-side generators and oracles, independent of the solver code paths.
#![allow(dead_code)]

use hsi_tensor::{DenseTensor, KruskalTensor, Matrix, TuckerTensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn unit_columns(mut m: Matrix) -> Matrix {
    for mut c in m.column_iter_mut() {
        let n = c.norm();
        c /= n;
    }
    m
}

pub fn orthonormal(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    gaussian(rng, rows, cols).qr().q()
}

pub fn random_tensor(rng: &mut impl Rng, dims: &[usize]) -> DenseTensor {
    DenseTensor::from_fn(dims, |_| rng.sample(StandardNormal))
}

/// Random Kruskal model with unit-norm Gaussian factor columns and weights in [1, 2].
pub fn random_kruskal(rng: &mut impl Rng, dims: &[usize], rank: usize) -> KruskalTensor {
    let factors = dims
        .iter()
        .map(|&d| unit_columns(gaussian(rng, d, rank)))
        .collect();
    let weights = (0..rank).map(|_| rng.random_range(1.0..2.0)).collect();
    KruskalTensor::new(weights, factors).unwrap()
}

pub fn random_tucker(rng: &mut impl Rng, dims: &[usize], ranks: &[usize]) -> TuckerTensor {
    let core = random_tensor(rng, ranks);
    let factors = dims
        .iter()
        .zip(ranks)
        .map(|(&d, &r)| orthonormal(rng, d, r))
        .collect();
    TuckerTensor::new(core, factors).unwrap()
}

/// Sum of weighted outer products, entry by entry.
pub fn kruskal_by_outer_sum(m: &KruskalTensor) -> DenseTensor {
    let dims: Vec<usize> = m.factors.iter().map(|f| f.nrows()).collect();
    DenseTensor::from_fn(&dims, |ix| {
        (0..m.weights.len())
            .map(|r| {
                m.weights[r]
                    * ix.iter()
                        .enumerate()
                        .map(|(n, &i)| m.factors[n][(i, r)])
                        .product::<f64>()
            })
            .sum()
    })
}

/// Mode-n product computed fiber by fiber.
pub fn mode_product_by_fibers(t: &DenseTensor, b: &Matrix, mode: usize) -> DenseTensor {
    let mut dims = t.dims().to_vec();
    dims[mode] = b.nrows();
    DenseTensor::from_fn(&dims, |ix| {
        let mut src = ix.to_vec();
        (0..t.dims()[mode])
            .map(|i| {
                src[mode] = i;
                b[(ix[mode], i)] * t.get(&src).unwrap()
            })
            .sum()
    })
}

/// Greedy one-to-one matching of components by the product of absolute
/// column cosines across modes; returns the smallest matched congruence.
pub fn factor_congruence(truth: &[Matrix], estimate: &[Matrix]) -> f64 {
    let r = truth[0].ncols();
    let cos = |a: &Matrix, b: &Matrix, i: usize, j: usize| {
        let (x, y) = (a.column(i), b.column(j));
        (x.dot(&y) / (x.norm() * y.norm())).abs()
    };
    let mut scores = vec![vec![0.0; estimate[0].ncols()]; r];
    for i in 0..r {
        for j in 0..estimate[0].ncols() {
            scores[i][j] = truth
                .iter()
                .zip(estimate)
                .map(|(a, b)| cos(a, b, i, j))
                .product();
        }
    }
    greedy_min_match(&scores)
}

pub fn greedy_min_match(scores: &[Vec<f64>]) -> f64 {
    let mut used_rows = vec![false; scores.len()];
    let mut used_cols = vec![false; scores[0].len()];
    let mut worst = f64::INFINITY;
    for _ in 0..scores.len() {
        let mut best = (0, 0, -1.0);
        for (i, row) in scores.iter().enumerate() {
            for (j, &s) in row.iter().enumerate() {
                if !used_rows[i] && !used_cols[j] && s > best.2 {
                    best = (i, j, s);
                }
            }
        }
        used_rows[best.0] = true;
        used_cols[best.1] = true;
        worst = worst.min(best.2);
    }
    worst
}

/// Singular values straight from an SVD, sorted descending. Accurate for
/// tails far below the largest value, unlike the Gram route.
pub fn singular_values_by_svd(m: &Matrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Singular values of a matrix via the eigenvalues of its Gram matrix.
pub fn singular_values_by_gram(m: &Matrix) -> Vec<f64> {
    let gram = m * m.transpose();
    let mut ev: Vec<f64> = gram
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|&x| x.max(0.0).sqrt())
        .collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}
