//! Small dense linear-algebra helpers shared by the solvers.

use crate::tensor::Matrix;

/// Relative Tikhonov weight applied to ill-conditioned normal equations.
pub(crate) const RIDGE: f64 = 1e-12;

/// Reciprocal condition estimate below which a Cholesky factor is treated
/// as ill-conditioned.
const MIN_RCOND: f64 = 1e-14;

/// Solves `x * gram = rhs` for symmetric positive semidefinite `gram`.
///
/// The returned flag is set when the system had to be regularized (ridge
/// of `RIDGE * trace`) or solved through a pseudo-inverse.
pub(crate) fn solve_gram(rhs: &Matrix, gram: &Matrix) -> (Matrix, bool) {
    if let Some(chol) = gram.clone().cholesky() {
        let diag = chol.l_dirty().diagonal();
        let (lo, hi) = diag
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &d| (lo.min(d.abs()), hi.max(d.abs())));
        if hi > 0.0 && (lo / hi).powi(2) > MIN_RCOND {
            return (chol.solve(&rhs.transpose()).transpose(), false);
        }
    }
    let n = gram.nrows();
    let ridge = RIDGE * gram.trace().max(f64::MIN_POSITIVE);
    let regularized = gram + Matrix::identity(n, n) * ridge;
    if let Some(chol) = regularized.cholesky() {
        return (chol.solve(&rhs.transpose()).transpose(), true);
    }
    (rhs * pinv(gram), true)
}

/// Moore-Penrose pseudo-inverse with the usual `max(m, n) * eps * σ_max` cutoff.
pub(crate) fn pinv(m: &Matrix) -> Matrix {
    let (rows, cols) = m.shape();
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = rows.max(cols) as f64 * f64::EPSILON * smax;
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let mut out = Matrix::zeros(cols, rows);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > tol {
            out += vt.row(i).transpose() * u.column(i).transpose() / s;
        }
    }
    out
}

/// Singular values in descending order.
pub(crate) fn singular_values(m: &Matrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Numerical rank with the same cutoff as [`pinv`].
pub(crate) fn numerical_rank(m: &Matrix) -> usize {
    if m.is_empty() {
        return 0;
    }
    let s = singular_values(m);
    let smax = s.first().copied().unwrap_or(0.0);
    let tol = m.nrows().max(m.ncols()) as f64 * f64::EPSILON * smax;
    s.iter().filter(|&&x| x > tol).count()
}

/// Leading `k` left singular vectors of `m` with each column's
/// largest-magnitude entry made positive. When `k` exceeds the number of
/// singular vectors available, the basis is completed with an orthonormal
/// complement.
pub(crate) fn leading_left_singular_vectors(m: &Matrix, k: usize) -> Matrix {
    let rows = m.nrows();
    assert!(k <= rows, "cannot take {k} singular vectors of a {rows}-row matrix");
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("u requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    order.truncate(k);
    let mut basis = u.select_columns(&order);
    if basis.ncols() < k {
        basis = complete_basis(&basis, k);
    }
    fix_signs_by_max(&mut basis);
    basis
}

/// Extends orthonormal columns `q` to `k` orthonormal columns by
/// Gram-Schmidt over the canonical basis vectors.
fn complete_basis(q: &Matrix, k: usize) -> Matrix {
    let rows = q.nrows();
    let mut cols: Vec<nalgebra::DVector<f64>> = q.column_iter().map(|c| c.into_owned()).collect();
    let mut e = 0;
    while cols.len() < k && e < rows {
        let mut v = nalgebra::DVector::zeros(rows);
        v[e] = 1.0;
        for _ in 0..2 {
            for c in &cols {
                let proj = c.dot(&v);
                v -= c * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            cols.push(v / norm);
        }
        e += 1;
    }
    Matrix::from_columns(&cols)
}

pub(crate) fn fix_signs_by_max(m: &mut Matrix) {
    for mut col in m.column_iter_mut() {
        let pivot = col
            .iter()
            .copied()
            .fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
}

/// Thin QR: `m = q * r` with `q` having orthonormal columns.
pub(crate) fn thin_qr(m: &Matrix) -> (Matrix, Matrix) {
    let qr = m.clone().qr();
    (qr.q(), qr.r())
}

/// Hadamard product of the Gram matrices `F_k^T F_k` for every `k != skip`.
pub(crate) fn gram_hadamard(factors: &[Matrix], skip: usize) -> Matrix {
    let r = factors[0].ncols();
    let mut v = Matrix::from_element(r, r, 1.0);
    for (k, f) in factors.iter().enumerate() {
        if k != skip {
            v.component_mul_assign(&(f.transpose() * f));
        }
    }
    v
}

pub(crate) fn all_finite(m: &Matrix) -> bool {
    m.iter().all(|x| x.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_gram_exact_and_singular() {
        let gram = Matrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let rhs = Matrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let (x, reg) = solve_gram(&rhs, &gram);
        assert!(!reg);
        assert!((x * &gram - &rhs).norm() < 1e-14);

        let singular = Matrix::from_element(2, 2, 1.0);
        let (x, reg) = solve_gram(&rhs, &singular);
        assert!(reg);
        assert!(all_finite(&x));
    }

    #[test]
    fn pinv_of_rank_deficient_matrix() {
        let m = Matrix::from_row_slice(3, 2, &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let p = pinv(&m);
        assert!((&m * &p * &m - &m).norm() < 1e-14);
        assert_eq!(numerical_rank(&m), 1);
    }

    #[test]
    fn singular_vectors_complete_the_basis() {
        let m = Matrix::from_row_slice(3, 1, &[0.0, -2.0, 0.0]);
        let u = leading_left_singular_vectors(&m, 3);
        assert!((u.transpose() * &u - Matrix::identity(3, 3)).norm() < 1e-12);
        assert!((u[(1, 0)] - 1.0).abs() < 1e-15);
    }
}
