//! Low multilinear rank approximation: truncated HOSVD and HOOI refinement.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{leading_left_singular_vectors, singular_values, thin_qr};
use crate::model::{Model, TuckerTensor};
use crate::random::gaussian_matrix;
use crate::tensor::{DenseTensor, Matrix};
use crate::trace::{check_step, DecompositionTrace, Step, StopReason};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LmlraInit {
    #[default]
    Hosvd,
    /// Random orthonormal factors drawn from the seed.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmlraOptions {
    pub ranks: Vec<usize>,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub init: LmlraInit,
}

impl LmlraOptions {
    pub fn new(ranks: Vec<usize>) -> Self {
        Self {
            ranks,
            max_iterations: 100,
            tolerance: 1e-8,
            seed: 0,
            init: LmlraInit::Hosvd,
        }
    }

    fn validate(&self, t: &DenseTensor) -> Result<()> {
        check_ranks(t, &self.ranks)?;
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be >= 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config("tolerance must be > 0".into()));
        }
        Ok(())
    }
}

fn check_ranks(t: &DenseTensor, ranks: &[usize]) -> Result<()> {
    if ranks.len() != t.order() {
        return Err(Error::Config(format!(
            "{} multilinear ranks given for an order-{} tensor",
            ranks.len(),
            t.order()
        )));
    }
    for (n, (&r, &d)) in ranks.iter().zip(t.dims()).enumerate() {
        if r == 0 || r > d {
            return Err(Error::Config(format!(
                "mode {n} rank {r} outside 1..={d}"
            )));
        }
    }
    Ok(())
}

/// `t x_0 F_0^T x_1 F_1^T ...`, skipping mode `skip` when given.
fn project(t: &DenseTensor, factors: &[Matrix], skip: Option<usize>) -> Result<DenseTensor> {
    let transposed: Vec<Matrix> = factors.iter().map(|f| f.transpose()).collect();
    let mats: Vec<Option<&Matrix>> = transposed
        .iter()
        .enumerate()
        .map(|(k, m)| (Some(k) != skip).then_some(m))
        .collect();
    t.multi_mode_product(&mats)
}

/// Truncated higher-order SVD: factor n holds the leading `ranks[n]` left
/// singular vectors of the mode-n unfolding; the core is the projection of
/// `t` onto those bases.
pub fn hosvd(t: &DenseTensor, ranks: &[usize]) -> Result<TuckerTensor> {
    check_ranks(t, ranks)?;
    let factors = (0..t.order())
        .map(|n| Ok(leading_left_singular_vectors(&t.unfold(n)?, ranks[n])))
        .collect::<Result<Vec<_>>>()?;
    let core = project(t, &factors, None)?;
    TuckerTensor::new(core, factors)
}

/// Higher-order orthogonal iteration. Each sweep replaces factor n with the
/// leading left singular vectors of `unfold(t x_{k != n} F_k^T, n)`.
pub fn hooi(t: &DenseTensor, opts: &LmlraOptions) -> Result<(TuckerTensor, DecompositionTrace)> {
    opts.validate(t)?;
    if !t.is_finite() {
        return Err(Error::NumericalFailure {
            stage: "lmlra",
            iteration: 0,
            last_valid: None,
        });
    }
    let norm = t.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::UndefinedReference);
    }

    let mut model = match opts.init {
        LmlraInit::Hosvd => hosvd(t, &opts.ranks)?,
        LmlraInit::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let factors: Vec<Matrix> = t
                .dims()
                .iter()
                .zip(&opts.ranks)
                .map(|(&d, &r)| thin_qr(&gaussian_matrix(&mut rng, d, r)).0)
                .collect();
            let core = project(t, &factors, None)?;
            TuckerTensor::new(core, factors)?
        }
    };
    let mut trace = DecompositionTrace::new(norm);
    let mut previous = t.distance(&model.full()?)?;
    trace.push_stage("initialization", previous / norm);

    let mut reason = StopReason::MaxIterations;
    for iteration in 1..=opts.max_iterations {
        let mut factors = model.factors.clone();
        for n in 0..t.order() {
            let partial = project(t, &factors, Some(n))?;
            factors[n] = leading_left_singular_vectors(&partial.unfold(n)?, opts.ranks[n]);
        }
        let core = project(t, &factors, None)?;
        let candidate = TuckerTensor::new(core, factors)?;
        let full = candidate.full()?;
        if !full.is_finite() {
            return Err(Error::NumericalFailure {
                stage: "lmlra",
                iteration,
                last_valid: Some(Box::new(Model::Tucker(model))),
            });
        }
        let residual = t.distance(&full)?;
        match check_step(previous, residual, norm, opts.tolerance) {
            Step::Reject => {
                reason = StopReason::Stall;
                break;
            }
            step => {
                model = candidate;
                trace.push_residual(residual);
                previous = residual;
                if let Step::Stop(r) = step {
                    reason = r;
                    break;
                }
            }
        }
    }
    trace.finish(reason);
    trace.push_stage("refinement", previous / norm);
    Ok((model, trace))
}

/// `F_n · unfold(core, n) · (F_{N-1} ⊗ ... ⊗ F_{n+1} ⊗ F_{n-1} ⊗ ... ⊗ F_0)^T`
/// for a third-order model, i.e. `A E_(1) (C ⊗ B)^T`, `B E_(2) (C ⊗ A)^T`
/// and `C E_(3) (B ⊗ A)^T`.
pub fn matricized_tucker(model: &TuckerTensor, mode: usize) -> Result<Matrix> {
    model.validate()?;
    let order = model.core.order();
    if order != 3 {
        return Err(Error::UnsupportedOrder {
            order,
            context: "matricized Tucker form is third-order",
        });
    }
    if mode >= order {
        return Err(Error::InvalidMode { mode, order });
    }
    let others: Vec<&Matrix> = (0..order).rev().filter(|&k| k != mode).map(|k| &model.factors[k]).collect();
    let kron = crate::products::kronecker(others[0], others[1]);
    Ok(&model.factors[mode] * model.core.unfold(mode)? * kron.transpose())
}

/// Smallest per-mode ranks capturing `fraction` of each unfolding's squared
/// singular-value energy.
pub fn energy_ranks(t: &DenseTensor, fraction: f64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!("energy fraction {fraction} outside (0, 1]")));
    }
    (0..t.order())
        .map(|n| {
            let s = singular_values(&t.unfold(n)?);
            let total: f64 = s.iter().map(|x| x * x).sum();
            if total == 0.0 {
                return Ok(1);
            }
            let mut acc = 0.0;
            for (i, x) in s.iter().enumerate() {
                acc += x * x;
                if acc >= fraction * total {
                    return Ok(i + 1);
                }
            }
            Ok(s.len().max(1))
        })
        .collect()
}
