//! Matrix and tensor products used by the decomposers.

use crate::error::{Error, Result};
use crate::tensor::{DenseTensor, Matrix};

/// Column-wise Kronecker product: column r of the result is `a[:, r] ⊗ b[:, r]`,
/// so the row index is `i * b.nrows() + j` (the `b` index runs fastest).
pub fn khatri_rao(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.ncols() != b.ncols() {
        return Err(Error::Dimension(format!(
            "khatri-rao needs equal column counts, got {} and {}",
            a.ncols(),
            b.ncols()
        )));
    }
    let (i_rows, j_rows) = (a.nrows(), b.nrows());
    let mut out = Matrix::zeros(i_rows * j_rows, a.ncols());
    for r in 0..a.ncols() {
        for i in 0..i_rows {
            let ai = a[(i, r)];
            for j in 0..j_rows {
                out[(i * j_rows + j, r)] = ai * b[(j, r)];
            }
        }
    }
    Ok(out)
}

/// `mats[0] ⊙ mats[1] ⊙ ...` evaluated left to right.
pub fn khatri_rao_chain(mats: &[&Matrix]) -> Result<Matrix> {
    let (first, rest) = mats
        .split_first()
        .ok_or_else(|| Error::Dimension("empty khatri-rao chain".into()))?;
    rest.iter()
        .try_fold((*first).clone(), |acc, m| khatri_rao(&acc, m))
}

/// Khatri-Rao product of every factor except `skip`, ordered so that it
/// matches the column ordering of the mode-`skip` unfolding:
/// `F_{N-1} ⊙ ... ⊙ F_{skip+1} ⊙ F_{skip-1} ⊙ ... ⊙ F_0`.
pub fn khatri_rao_except(factors: &[Matrix], skip: usize) -> Result<Matrix> {
    let chain: Vec<&Matrix> = factors
        .iter()
        .enumerate()
        .rev()
        .filter(|&(k, _)| k != skip)
        .map(|(_, m)| m)
        .collect();
    if chain.is_empty() {
        let r = factors.first().map_or(1, |f| f.ncols());
        return Ok(Matrix::from_element(1, r, 1.0));
    }
    khatri_rao_chain(&chain)
}

/// Standard Kronecker product with blocks `a[(i, j)] * b`.
pub fn kronecker(a: &Matrix, b: &Matrix) -> Matrix {
    let (p, q) = b.shape();
    let mut out = Matrix::zeros(a.nrows() * p, a.ncols() * q);
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let aij = a[(i, j)];
            for l in 0..q {
                for k in 0..p {
                    out[(i * p + k, j * q + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// `weight * v_0 ∘ v_1 ∘ ... ∘ v_{N-1}`.
pub fn outer_rank1(vectors: &[&[f64]], weight: f64) -> Result<DenseTensor> {
    if vectors.is_empty() {
        return Err(Error::Dimension("outer product of zero vectors".into()));
    }
    let dims: Vec<usize> = vectors.iter().map(|v| v.len()).collect();
    if dims.contains(&0) {
        return Err(Error::Dimension("outer product with an empty vector".into()));
    }
    Ok(DenseTensor::from_fn(&dims, |ix| {
        ix.iter()
            .zip(vectors)
            .fold(weight, |acc, (&i, v)| acc * v[i])
    }))
}

/// Order-`order` tensor with `weights` on the superdiagonal and zeros elsewhere.
pub fn diag_tensor(weights: &[f64], order: usize) -> Result<DenseTensor> {
    if weights.is_empty() || order == 0 {
        return Err(Error::Dimension(
            "diagonal tensor needs at least one weight and one mode".into(),
        ));
    }
    let r = weights.len();
    let mut t = DenseTensor::zeros(&vec![r; order]);
    for (i, &w) in weights.iter().enumerate() {
        t.set(&vec![i; order], w)?;
    }
    Ok(t)
}
