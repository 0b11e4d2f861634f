use rand::Rng;
use rand_distr::StandardNormal;

use crate::tensor::{DenseTensor, Matrix};

pub(crate) fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    // Fill column by column so the draw order matches storage order.
    let mut m = Matrix::zeros(rows, cols);
    m.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
    m
}

/// Gaussian matrix with unit-norm columns.
pub(crate) fn normalized_gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    let mut m = gaussian_matrix(rng, rows, cols);
    for mut c in m.column_iter_mut() {
        let n = c.norm();
        if n > 0.0 {
            c /= n;
        }
    }
    m
}

pub(crate) fn gaussian_tensor<R: Rng>(rng: &mut R, dims: &[usize]) -> DenseTensor {
    let mut t = DenseTensor::zeros(dims);
    t.data_mut()
        .iter_mut()
        .for_each(|x| *x = rng.sample(StandardNormal));
    t
}

/// Independent seed for restart `index` derived from a base seed.
pub(crate) fn derive_seed(base: u64, index: usize) -> u64 {
    // splitmix64 step
    let mut z = base.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
