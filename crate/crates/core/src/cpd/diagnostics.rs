//! Kruskal-rank uniqueness check and the core consistency diagnostic.

use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, pinv};
use crate::model::KruskalTensor;
use crate::products::diag_tensor;
use crate::tensor::{DenseTensor, Matrix};

/// Largest k such that every subset of k columns is linearly independent.
///
/// Enumerates column subsets, so it is meant for small matrices.
pub fn k_rank(m: &Matrix) -> usize {
    let max_k = m.nrows().min(m.ncols());
    for k in 1..=max_k {
        let mut subset: Vec<usize> = (0..k).collect();
        loop {
            if numerical_rank(&m.select_columns(&subset)) < k {
                return k - 1;
            }
            if !next_combination(&mut subset, m.ncols()) {
                break;
            }
        }
    }
    max_k
}

/// Advances `c` to the next k-combination of `0..n` in lexicographic order.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniquenessCheck {
    pub k_ranks: Vec<usize>,
    /// `sum(k_ranks) - (2R + 2)`.
    pub margin: i64,
    /// True when the sufficient condition holds, i.e. the CPD is unique up
    /// to scaling and permutation of components.
    pub unique: bool,
}

/// Kruskal's sufficient condition `k_A + k_B + k_C >= 2R + 2` for a
/// third-order CPD.
pub fn kruskal_uniqueness(factors: &[Matrix], rank: usize) -> Result<UniquenessCheck> {
    if factors.len() != 3 {
        return Err(Error::UnsupportedOrder {
            order: factors.len(),
            context: "the Kruskal uniqueness bound is stated for third-order tensors",
        });
    }
    if let Some((n, f)) = factors.iter().enumerate().find(|(_, f)| f.ncols() != rank) {
        return Err(Error::Config(format!(
            "factor {n} has {} columns, expected {rank}",
            f.ncols()
        )));
    }
    let k_ranks: Vec<usize> = factors.iter().map(k_rank).collect();
    let margin = k_ranks.iter().sum::<usize>() as i64 - (2 * rank as i64 + 2);
    Ok(UniquenessCheck {
        k_ranks,
        margin,
        unique: margin >= 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corcondia {
    /// `100 * (1 - ||G - diag(λ)||² / ||diag(λ)||²)`; 100 is a perfectly
    /// superdiagonal core.
    pub score: f64,
    /// Set when some factor was rank deficient and the core came from a
    /// truncated pseudo-inverse.
    pub regularized: bool,
}

/// Core consistency: fits an unconstrained core to `t` given the model's
/// factors (mode-wise pseudo-inverses) and measures its distance from the
/// superdiagonal core holding the model's weights.
pub fn corcondia(t: &DenseTensor, model: &KruskalTensor) -> Result<Corcondia> {
    model.validate()?;
    if model.dims() != t.dims() {
        return Err(Error::Dimension(format!(
            "model spans {:?}, tensor is {:?}",
            model.dims(),
            t.dims()
        )));
    }
    let rank = model.rank();
    if rank == 1 {
        // a 1x..x1 core has no off-diagonal entries
        return Ok(Corcondia {
            score: 100.0,
            regularized: false,
        });
    }
    let mut regularized = false;
    let mut core = t.clone();
    for (n, f) in model.factors.iter().enumerate() {
        regularized |= numerical_rank(f) < rank;
        core = core.mode_product(&pinv(f), n)?;
    }
    let target = diag_tensor(&model.weights, t.order())?;
    let denom = target.frobenius_norm().powi(2);
    if denom == 0.0 {
        return Err(Error::UndefinedReference);
    }
    let num = core.distance(&target)?.powi(2);
    Ok(Corcondia {
        score: 100.0 * (1.0 - num / denom),
        regularized,
    })
}
