//! Dense N-way tensors.
//!
//! Storage is first-index-fastest: entry `(i_0, .., i_{N-1})` lives at
//! `i_0 + I_0 * (i_1 + I_1 * (i_2 + ...))`. Mode-n unfoldings use the
//! Kolda-Bader column ordering, in which the remaining indices are
//! linearized in the same first-fastest order with mode n removed.
//!
//! All modes and indices in this API are 0-based.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Column-major dense matrix used for unfoldings and factor matrices.
pub type Matrix = DMatrix<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() {
        return Err(Error::Dimension("a tensor needs at least one mode".into()));
    }
    if dims.iter().any(|&d| d == 0) {
        return Err(Error::Dimension(format!(
            "all extents must be >= 1, got {dims:?}"
        )));
    }
    Ok(())
}

impl DenseTensor {
    /// Wraps `data` (first index fastest) with the given extents.
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        check_dims(&dims)?;
        let len: usize = dims.iter().product();
        if len != data.len() {
            return Err(Error::Dimension(format!(
                "dims {dims:?} need {len} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    /// # Panics
    /// If `dims` is empty or contains a zero extent.
    pub fn zeros(dims: &[usize]) -> Self {
        check_dims(dims).expect("invalid tensor extents");
        Self {
            dims: dims.to_vec(),
            data: vec![0.0; dims.iter().product()],
        }
    }

    /// Builds a tensor by evaluating `f` at every multi-index.
    ///
    /// # Panics
    /// If `dims` is empty or contains a zero extent.
    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = Self::zeros(dims);
        let mut idx = vec![0usize; dims.len()];
        for value in t.data.iter_mut() {
            *value = f(&idx);
            for (i, &d) in idx.iter_mut().zip(dims) {
                *i += 1;
                if *i < d {
                    break;
                }
                *i = 0;
            }
        }
        t
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.order() {
            return Err(Error::InvalidMode {
                mode,
                order: self.order(),
            });
        }
        Ok(())
    }

    /// Linear offset of a multi-index, or `None` if any index is out of range.
    pub fn offset(&self, index: &[usize]) -> Option<usize> {
        if index.len() != self.order() {
            return None;
        }
        let mut offset = 0;
        let mut stride = 1;
        for (&i, &d) in index.iter().zip(&self.dims) {
            if i >= d {
                return None;
            }
            offset += i * stride;
            stride *= d;
        }
        Some(offset)
    }

    pub fn get(&self, index: &[usize]) -> Option<f64> {
        self.offset(index).map(|o| self.data[o])
    }

    pub fn set(&mut self, index: &[usize], value: f64) -> Result<()> {
        let o = self
            .offset(index)
            .ok_or_else(|| Error::IndexOutOfRange(format!("{index:?} for dims {:?}", self.dims)))?;
        self.data[o] = value;
        Ok(())
    }

    /// Splits the extents around `mode` into (product before, extent, product after).
    fn split(&self, mode: usize) -> (usize, usize, usize) {
        let left = self.dims[..mode].iter().product();
        let right = self.dims[mode + 1..].iter().product();
        (left, self.dims[mode], right)
    }

    /// Mode-n matricization: an `I_n x prod_{k != n} I_k` matrix.
    pub fn unfold(&self, mode: usize) -> Result<Matrix> {
        self.check_mode(mode)?;
        let (left, extent, right) = self.split(mode);
        let mut m = Matrix::zeros(extent, left * right);
        for b in 0..right {
            for i in 0..extent {
                let src = left * (i + extent * b);
                for a in 0..left {
                    m[(i, a + left * b)] = self.data[src + a];
                }
            }
        }
        Ok(m)
    }

    /// Inverse of [`DenseTensor::unfold`].
    pub fn fold(m: &Matrix, mode: usize, dims: &[usize]) -> Result<Self> {
        check_dims(dims)?;
        let mut t = Self::zeros(dims);
        t.check_mode(mode)?;
        let (left, extent, right) = t.split(mode);
        if m.nrows() != extent || m.ncols() != left * right {
            return Err(Error::Dimension(format!(
                "cannot fold a {}x{} matrix along mode {mode} into {dims:?}",
                m.nrows(),
                m.ncols()
            )));
        }
        for b in 0..right {
            for i in 0..extent {
                let dst = left * (i + extent * b);
                for a in 0..left {
                    t.data[dst + a] = m[(i, a + left * b)];
                }
            }
        }
        Ok(t)
    }

    /// Mode-n product `t x_n b`: every mode-n fiber is multiplied by `b` (J x I_n).
    pub fn mode_product(&self, b: &Matrix, mode: usize) -> Result<Self> {
        self.check_mode(mode)?;
        if b.ncols() != self.dims[mode] {
            return Err(Error::Dimension(format!(
                "mode-{mode} product needs {} columns, matrix is {}x{}",
                self.dims[mode],
                b.nrows(),
                b.ncols()
            )));
        }
        let mut dims = self.dims.clone();
        dims[mode] = b.nrows();
        Self::fold(&(b * self.unfold(mode)?), mode, &dims)
    }

    /// Applies `mats[k]` along mode `k` for every `k` where it is `Some`.
    pub fn multi_mode_product(&self, mats: &[Option<&Matrix>]) -> Result<Self> {
        if mats.len() != self.order() {
            return Err(Error::Dimension(format!(
                "expected {} mode matrices, got {}",
                self.order(),
                mats.len()
            )));
        }
        let mut out = self.clone();
        for (mode, m) in mats.iter().enumerate() {
            if let Some(m) = m {
                out = out.mode_product(m, mode)?;
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `||self - other||_F` for equally shaped tensors.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        if self.dims != other.dims {
            return Err(Error::Dimension(format!(
                "dims {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }

    /// `||self - approx||_F / ||self||_F`.
    pub fn relative_error(&self, approx: &Self) -> Result<f64> {
        let norm = self.frobenius_norm();
        let dist = self.distance(approx)?;
        if norm == 0.0 {
            return Err(Error::UndefinedReference);
        }
        Ok(dist / norm)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|x| *x *= factor);
    }

    /// Adds `other` entrywise.
    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::Dimension(format!(
                "dims {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        self.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(a, b)| *a += b);
        Ok(())
    }

    /// Fiber along `mode`; `fixed` lists the indices of the other modes in order.
    pub fn fiber(&self, mode: usize, fixed: &[usize]) -> Result<Vec<f64>> {
        self.check_mode(mode)?;
        let mut index = self.expand_fixed(&[mode], fixed)?;
        (0..self.dims[mode])
            .map(|i| {
                index[mode] = i;
                Ok(self.data[self.offset(&index).expect("index checked")])
            })
            .collect()
    }

    /// Slice with `row_mode` and `col_mode` free; `fixed` lists the remaining indices in order.
    pub fn slice(&self, row_mode: usize, col_mode: usize, fixed: &[usize]) -> Result<Matrix> {
        self.check_mode(row_mode)?;
        self.check_mode(col_mode)?;
        if row_mode == col_mode {
            return Err(Error::Dimension("slice needs two distinct free modes".into()));
        }
        let mut index = self.expand_fixed(&[row_mode, col_mode], fixed)?;
        let mut m = Matrix::zeros(self.dims[row_mode], self.dims[col_mode]);
        for j in 0..self.dims[col_mode] {
            for i in 0..self.dims[row_mode] {
                index[row_mode] = i;
                index[col_mode] = j;
                m[(i, j)] = self.data[self.offset(&index).expect("index checked")];
            }
        }
        Ok(m)
    }

    fn expand_fixed(&self, free: &[usize], fixed: &[usize]) -> Result<Vec<usize>> {
        if fixed.len() + free.len() != self.order() {
            return Err(Error::IndexOutOfRange(format!(
                "expected {} fixed indices, got {}",
                self.order() - free.len(),
                fixed.len()
            )));
        }
        let mut index = vec![0; self.order()];
        let mut it = fixed.iter();
        for (mode, slot) in index.iter_mut().enumerate() {
            if free.contains(&mode) {
                continue;
            }
            let &i = it.next().expect("length checked");
            if i >= self.dims[mode] {
                return Err(Error::IndexOutOfRange(format!(
                    "index {i} on mode {mode} with extent {}",
                    self.dims[mode]
                )));
            }
            *slot = i;
        }
        Ok(index)
    }
}
