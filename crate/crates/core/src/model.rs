//! Decomposition results: Kruskal (CPD), Tucker (LMLRA) and block-term (BTD) models.

use crate::error::{Error, Result};
use crate::products::khatri_rao_except;
use crate::tensor::{DenseTensor, Matrix};

/// Weights plus one factor matrix per mode; column r of every factor is one
/// rank-one component. Decomposers return factors with unit-norm columns.
#[derive(Debug, Clone, PartialEq)]
pub struct KruskalTensor {
    pub weights: Vec<f64>,
    pub factors: Vec<Matrix>,
}

impl KruskalTensor {
    pub fn new(weights: Vec<f64>, factors: Vec<Matrix>) -> Result<Self> {
        let model = Self { weights, factors };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.weights.len();
        if r == 0 {
            return Err(Error::Model("kruskal model needs at least one component".into()));
        }
        if self.factors.is_empty() {
            return Err(Error::Model("kruskal model needs at least one factor".into()));
        }
        for (n, f) in self.factors.iter().enumerate() {
            if f.ncols() != r || f.nrows() == 0 {
                return Err(Error::Model(format!(
                    "factor {n} is {}x{}, expected {r} columns",
                    f.nrows(),
                    f.ncols()
                )));
            }
        }
        Ok(())
    }

    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.nrows()).collect()
    }

    /// Dense tensor via the matricized form `F_0 diag(λ) (F_{N-1} ⊙ ... ⊙ F_1)^T`.
    pub fn full(&self) -> Result<DenseTensor> {
        self.validate()?;
        let mut lead = self.factors[0].clone();
        for (r, &w) in self.weights.iter().enumerate() {
            lead.column_mut(r).scale_mut(w);
        }
        let kr = khatri_rao_except(&self.factors, 0)?;
        DenseTensor::fold(&(lead * kr.transpose()), 0, &self.dims())
    }

    /// Moves column norms into the weights. Zero columns are left as they are.
    pub fn normalize(&mut self) {
        for f in &mut self.factors {
            for (r, mut col) in f.column_iter_mut().enumerate() {
                let norm = col.norm();
                if norm > 0.0 {
                    col /= norm;
                    self.weights[r] *= norm;
                } else {
                    self.weights[r] = 0.0;
                }
            }
        }
    }

    /// Canonical ordering: components sorted by descending |λ| (stable), and
    /// the first nonzero entry of every column made positive with the sign
    /// pushed into the weight.
    pub fn arrange(&mut self) {
        for f in &mut self.factors {
            for (r, mut col) in f.column_iter_mut().enumerate() {
                if let Some(&first) = col.iter().find(|x| **x != 0.0) {
                    if first < 0.0 {
                        col.neg_mut();
                        self.weights[r] = -self.weights[r];
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..self.rank()).collect();
        order.sort_by(|&a, &b| self.weights[b].abs().total_cmp(&self.weights[a].abs()));
        self.weights = order.iter().map(|&r| self.weights[r]).collect();
        for f in &mut self.factors {
            *f = f.select_columns(&order);
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.rank() * (1 + self.factors.iter().map(|f| f.nrows()).sum::<usize>())
    }
}

/// Core tensor with one factor matrix per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct TuckerTensor {
    pub core: DenseTensor,
    pub factors: Vec<Matrix>,
}

impl TuckerTensor {
    pub fn new(core: DenseTensor, factors: Vec<Matrix>) -> Result<Self> {
        let model = Self { core, factors };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.factors.len() != self.core.order() {
            return Err(Error::Model(format!(
                "core has order {} but {} factors were given",
                self.core.order(),
                self.factors.len()
            )));
        }
        for (n, (f, &rn)) in self.factors.iter().zip(self.core.dims()).enumerate() {
            if f.ncols() != rn {
                return Err(Error::Model(format!(
                    "factor {n} has {} columns, core extent is {rn}",
                    f.ncols()
                )));
            }
            if rn > f.nrows() {
                return Err(Error::Model(format!(
                    "mode {n} rank {rn} exceeds extent {}",
                    f.nrows()
                )));
            }
        }
        Ok(())
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.nrows()).collect()
    }

    pub fn ranks(&self) -> &[usize] {
        self.core.dims()
    }

    pub fn full(&self) -> Result<DenseTensor> {
        self.validate()?;
        let mats: Vec<Option<&Matrix>> = self.factors.iter().map(Some).collect();
        self.core.multi_mode_product(&mats)
    }

    pub fn parameter_count(&self) -> usize {
        self.core.len() + self.factors.iter().map(|f| f.len()).sum::<usize>()
    }
}

/// One term `G x_1 A x_2 B x_3 C` of a block-term model.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTerm {
    pub core: DenseTensor,
    pub factors: Vec<Matrix>,
}

impl BlockTerm {
    pub fn block_ranks(&self) -> &[usize] {
        self.core.dims()
    }

    fn as_tucker(&self) -> TuckerTensor {
        TuckerTensor {
            core: self.core.clone(),
            factors: self.factors.clone(),
        }
    }

    pub fn full(&self) -> Result<DenseTensor> {
        self.as_tucker().full()
    }
}

/// Sum of block terms. In rank-(L,L,1) form each core is `L x L x 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTermTensor {
    pub terms: Vec<BlockTerm>,
    /// Set when the cores are fixed structural identities (rank-(L,L,1) form)
    /// and therefore carry no free parameters.
    pub ll1: bool,
}

impl BlockTermTensor {
    pub fn validate(&self) -> Result<()> {
        let first = self
            .terms
            .first()
            .ok_or_else(|| Error::Model("block-term model needs at least one term".into()))?;
        let dims: Vec<usize> = first.factors.iter().map(|f| f.nrows()).collect();
        if dims.len() != 3 {
            return Err(Error::UnsupportedOrder {
                order: dims.len(),
                context: "block-term models are third-order",
            });
        }
        for (s, term) in self.terms.iter().enumerate() {
            term.as_tucker().validate()?;
            let term_dims: Vec<usize> = term.factors.iter().map(|f| f.nrows()).collect();
            if term_dims != dims {
                return Err(Error::Model(format!(
                    "term {s} spans {term_dims:?}, expected {dims:?}"
                )));
            }
            if self.ll1 {
                let r = term.block_ranks();
                if r[2] != 1 || r[0] != r[1] {
                    return Err(Error::Model(format!(
                        "term {s} has block ranks {r:?}, not (L,L,1)"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dims(&self) -> Vec<usize> {
        self.terms
            .first()
            .map(|t| t.factors.iter().map(|f| f.nrows()).collect())
            .unwrap_or_default()
    }

    pub fn full(&self) -> Result<DenseTensor> {
        self.validate()?;
        let mut out = DenseTensor::zeros(&self.dims());
        for term in &self.terms {
            out.add_assign(&term.full()?)?;
        }
        Ok(out)
    }

    pub fn parameter_count(&self) -> usize {
        self.terms
            .iter()
            .map(|t| {
                let factors: usize = t.factors.iter().map(|f| f.len()).sum();
                if self.ll1 {
                    factors
                } else {
                    factors + t.core.len()
                }
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Kruskal(KruskalTensor),
    Tucker(TuckerTensor),
    BlockTerm(BlockTermTensor),
}

impl Model {
    pub fn parameter_count(&self) -> usize {
        match self {
            Model::Kruskal(m) => m.parameter_count(),
            Model::Tucker(m) => m.parameter_count(),
            Model::BlockTerm(m) => m.parameter_count(),
        }
    }
}

/// Dense reconstruction of any supported model.
pub fn reconstruct(model: &Model) -> Result<DenseTensor> {
    match model {
        Model::Kruskal(m) => m.full(),
        Model::Tucker(m) => m.full(),
        Model::BlockTerm(m) => m.full(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::products::{diag_tensor, outer_rank1};

    fn col(v: &[f64]) -> Matrix {
        Matrix::from_column_slice(v.len(), 1, v)
    }

    #[test]
    fn kruskal_rank_one_matches_outer_product() {
        let e = [1.0, 0.0];
        let m = KruskalTensor::new(vec![2.0], vec![col(&e), col(&e), col(&e)]).unwrap();
        assert_eq!(m.full().unwrap(), outer_rank1(&[&e, &e, &e], 2.0).unwrap());
    }

    #[test]
    fn kruskal_identity_factors_give_diag_tensor() {
        let eye = Matrix::identity(2, 2);
        let m = KruskalTensor::new(vec![1.0, 2.0], vec![eye.clone(), eye.clone(), eye]).unwrap();
        assert_eq!(m.full().unwrap(), diag_tensor(&[1.0, 2.0], 3).unwrap());
    }

    #[test]
    fn tucker_identity_factors_give_core() {
        let core = DenseTensor::from_fn(&[2, 3, 2], |ix| (ix[0] + 2 * ix[1] + 7 * ix[2]) as f64);
        let factors = core.dims().iter().map(|&d| Matrix::identity(d, d)).collect();
        let m = TuckerTensor::new(core.clone(), factors).unwrap();
        assert_eq!(m.full().unwrap(), core);
    }

    #[test]
    fn single_block_with_scalar_core_is_rank_one() {
        let (a, b, c) = ([1.0, -2.0, 0.5], [0.3, 4.0], [2.0, 1.0, -1.0, 0.25]);
        let term = BlockTerm {
            core: DenseTensor::new(vec![1, 1, 1], vec![1.5]).unwrap(),
            factors: vec![col(&a), col(&b), col(&c)],
        };
        let btd = BlockTermTensor {
            terms: vec![term],
            ll1: false,
        };
        let kr = KruskalTensor::new(vec![1.5], vec![col(&a), col(&b), col(&c)]).unwrap();
        let diff = btd.full().unwrap().distance(&kr.full().unwrap()).unwrap();
        assert!(diff < 1e-14);
    }

    #[test]
    fn invalid_models_are_rejected() {
        assert!(KruskalTensor::new(vec![1.0, 2.0], vec![Matrix::zeros(3, 1)]).is_err());
        let core = DenseTensor::zeros(&[2, 2]);
        assert!(TuckerTensor::new(core.clone(), vec![Matrix::zeros(3, 2)]).is_err());
        assert!(TuckerTensor::new(core, vec![Matrix::zeros(1, 2), Matrix::zeros(3, 2)]).is_err());
        let empty = BlockTermTensor {
            terms: vec![],
            ll1: false,
        };
        assert!(reconstruct(&Model::BlockTerm(empty)).is_err());
    }

    #[test]
    fn arrange_sorts_and_fixes_signs() {
        let a = Matrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
        let eye = Matrix::identity(2, 2);
        let mut m = KruskalTensor::new(vec![1.0, 3.0], vec![a, eye.clone(), eye]).unwrap();
        let before = m.full().unwrap();
        m.arrange();
        assert_eq!(m.weights, vec![3.0, -1.0]);
        assert!(m.factors[0][(0, 1)] > 0.0);
        assert!(before.distance(&m.full().unwrap()).unwrap() < 1e-15);
    }
}
