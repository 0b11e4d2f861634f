//! Block term decomposition by alternating least squares.
//!
//! General form: `T ≈ Σ_s G_s x_1 A_s x_2 B_s x_3 C_s` with `G_s` of size
//! `L_s x M_s x N_s`. The rank-(L,L,1) form `Σ_s (A_s B_s^T) ∘ c_s` is the
//! special case with `N_s = 1`, `M_s = L_s` and each core fixed to the
//! `L_s x L_s x 1` identity.
//!
//! Each sweep solves jointly for the stacked factor block `[F_n^1 .. F_n^S]`
//! of every mode, then (general form only) for all cores at once. Every
//! update is an exact least-squares minimizer, so the residual never grows.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{all_finite, solve_gram, thin_qr};
use crate::model::{BlockTerm, BlockTermTensor, Model};
use crate::products::kronecker;
use crate::random::{derive_seed, gaussian_matrix, gaussian_tensor};
use crate::tensor::{DenseTensor, Matrix};
use crate::trace::{check_step, DecompositionTrace, Step, StopReason};

/// Cosine above which two `c_s` vectors are reported as degenerate.
const COLLINEAR_COSINE: f64 = 1.0 - 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct BtdOptions {
    /// `(L_s, M_s, N_s)` for every block.
    pub blocks: Vec<[usize; 3]>,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub num_restarts: usize,
}

impl BtdOptions {
    pub fn general(blocks: Vec<[usize; 3]>) -> Self {
        Self {
            blocks,
            max_iterations: 1000,
            tolerance: 1e-8,
            seed: 0,
            num_restarts: 3,
        }
    }

    /// Rank-(L_s, L_s, 1) blocks.
    pub fn ll1(ls: &[usize]) -> Self {
        Self::general(ls.iter().map(|&l| [l, l, 1]).collect())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self, t: &DenseTensor, ll1: bool) -> Result<()> {
        if t.order() != 3 {
            return Err(Error::UnsupportedOrder {
                order: t.order(),
                context: "block term decomposition is third-order",
            });
        }
        if self.blocks.is_empty() {
            return Err(Error::Config("at least one block is required".into()));
        }
        if self.max_iterations == 0 || self.num_restarts == 0 {
            return Err(Error::Config(
                "max_iterations and num_restarts must be >= 1".into(),
            ));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config("tolerance must be > 0".into()));
        }
        let dims = t.dims();
        for (s, b) in self.blocks.iter().enumerate() {
            if ll1 && (b[2] != 1 || b[0] != b[1]) {
                return Err(Error::Config(format!(
                    "block {s} has ranks {b:?}, expected (L,L,1)"
                )));
            }
            for n in 0..3 {
                if b[n] == 0 || b[n] > dims[n] {
                    return Err(Error::Config(format!(
                        "block {s} mode-{n} rank {} outside 1..={}",
                        b[n], dims[n]
                    )));
                }
            }
        }
        for n in 0..3 {
            let stacked: usize = self.blocks.iter().map(|b| b[n]).sum();
            let others: usize = (0..3).filter(|&k| k != n).map(|k| dims[k]).product();
            if stacked > others {
                return Err(Error::Config(format!(
                    "mode-{n} block ranks sum to {stacked}, more than the {others} equations per row"
                )));
            }
        }
        if !ll1 {
            let core_params: usize = self.blocks.iter().map(|b| b.iter().product::<usize>()).sum();
            if core_params > t.len() {
                return Err(Error::Config(format!(
                    "{core_params} core entries exceed the {} tensor entries",
                    t.len()
                )));
            }
        }
        if !t.is_finite() {
            return Err(Error::NumericalFailure {
                stage: "input",
                iteration: 0,
                last_valid: None,
            });
        }
        if t.frobenius_norm() == 0.0 {
            return Err(Error::UndefinedReference);
        }
        Ok(())
    }
}

/// Rank-(L,L,1) block term decomposition.
pub fn btd_ll1(t: &DenseTensor, opts: &BtdOptions) -> Result<(BlockTermTensor, DecompositionTrace)> {
    opts.validate(t, true)?;
    fit_best(t, opts, true)
}

/// General rank-(L_s, M_s, N_s) block term decomposition.
pub fn btd_general(
    t: &DenseTensor,
    opts: &BtdOptions,
) -> Result<(BlockTermTensor, DecompositionTrace)> {
    opts.validate(t, false)?;
    fit_best(t, opts, false)
}

fn ll1_core(l: usize) -> DenseTensor {
    let mut g = DenseTensor::zeros(&[l, l, 1]);
    for i in 0..l {
        g.set(&[i, i, 0], 1.0).expect("in range");
    }
    g
}

fn random_model(dims: &[usize], blocks: &[[usize; 3]], ll1: bool, seed: u64) -> BlockTermTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms = blocks
        .iter()
        .map(|b| {
            let factors = (0..3).map(|n| gaussian_matrix(&mut rng, dims[n], b[n])).collect();
            let core = if ll1 {
                ll1_core(b[0])
            } else {
                gaussian_tensor(&mut rng, b)
            };
            BlockTerm { core, factors }
        })
        .collect();
    let mut model = BlockTermTensor { terms, ll1 };
    canonicalize(&mut model);
    model
}

/// Rewrites the model without changing its value: general blocks get
/// orthonormal factors with the triangular parts pushed into the core;
/// (L,L,1) blocks get unit-norm `c_s` and orthonormal `A_s`, with `B_s`
/// absorbing the rest.
fn canonicalize(model: &mut BlockTermTensor) {
    for term in &mut model.terms {
        if model.ll1 {
            let c_norm = term.factors[2].norm();
            if c_norm > 0.0 {
                term.factors[2] /= c_norm;
                term.factors[1] *= c_norm;
            }
            let (q, r) = thin_qr(&term.factors[0]);
            term.factors[1] = &term.factors[1] * r.transpose();
            term.factors[0] = q;
        } else {
            for n in 0..3 {
                let (q, r) = thin_qr(&term.factors[n]);
                term.core = term.core.mode_product(&r, n).expect("shapes agree");
                term.factors[n] = q;
            }
        }
    }
}

/// Rows of block `s` in the stacked mode-`n` design matrix:
/// `unfold(G_s x_{k != n} F_k^s, n)`.
fn design_rows(term: &BlockTerm, n: usize) -> Result<Matrix> {
    let mats: Vec<Option<&Matrix>> = (0..3)
        .map(|k| (k != n).then_some(&term.factors[k]))
        .collect();
    term.core.multi_mode_product(&mats)?.unfold(n)
}

fn update_mode(t_unfolded: &Matrix, model: &mut BlockTermTensor, n: usize) -> Result<bool> {
    let blocks: Vec<Matrix> = model
        .terms
        .iter()
        .map(|term| design_rows(term, n))
        .collect::<Result<_>>()?;
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut w = Matrix::zeros(rows, t_unfolded.ncols());
    let mut offset = 0;
    for b in &blocks {
        w.rows_mut(offset, b.nrows()).copy_from(b);
        offset += b.nrows();
    }
    let (stacked, regularized) = solve_gram(&(t_unfolded * w.transpose()), &(&w * w.transpose()));
    let mut offset = 0;
    for term in &mut model.terms {
        let width = term.factors[n].ncols();
        term.factors[n] = stacked.columns(offset, width).into_owned();
        offset += width;
    }
    Ok(regularized)
}

/// Joint least-squares update of every core given the factors, through the
/// normal equations `(MᵀM) g = Mᵀ vec(T)` with `M = [C_s ⊗ B_s ⊗ A_s]_s`.
fn update_cores(t: &DenseTensor, model: &mut BlockTermTensor) -> Result<bool> {
    let sizes: Vec<usize> = model.terms.iter().map(|term| term.core.len()).collect();
    let total: usize = sizes.iter().sum();
    let mut gram = Matrix::zeros(total, total);
    let mut rhs = Matrix::zeros(1, total);
    let mut row = 0;
    for (s, ts) in model.terms.iter().enumerate() {
        let projected = {
            let transposed: Vec<Matrix> = ts.factors.iter().map(|f| f.transpose()).collect();
            let mats: Vec<Option<&Matrix>> = transposed.iter().map(Some).collect();
            t.multi_mode_product(&mats)?
        };
        for (i, &v) in projected.data().iter().enumerate() {
            rhs[(0, row + i)] = v;
        }
        let mut col = 0;
        for (s2, tq) in model.terms.iter().enumerate() {
            if s2 >= s {
                let cross = |n: usize| ts.factors[n].transpose() * &tq.factors[n];
                let block = kronecker(&kronecker(&cross(2), &cross(1)), &cross(0));
                gram.view_mut((row, col), (sizes[s], sizes[s2])).copy_from(&block);
                gram.view_mut((col, row), (sizes[s2], sizes[s]))
                    .copy_from(&block.transpose());
            }
            col += sizes[s2];
        }
        row += sizes[s];
    }
    let (g, regularized) = solve_gram(&rhs, &gram);
    let mut offset = 0;
    for term in &mut model.terms {
        let len = term.core.len();
        term.core
            .data_mut()
            .copy_from_slice(&g.as_slice()[offset..offset + len]);
        offset += len;
    }
    Ok(regularized)
}

struct Run {
    model: BlockTermTensor,
    init_residual: f64,
    residuals: Vec<f64>,
    reason: StopReason,
    regularized: bool,
}

fn fit_once(t: &DenseTensor, opts: &BtdOptions, ll1: bool, seed: u64) -> Result<Run> {
    let norm = t.frobenius_norm();
    let unfoldings = (0..3).map(|n| t.unfold(n)).collect::<Result<Vec<_>>>()?;
    let mut model = random_model(t.dims(), &opts.blocks, ll1, seed);
    let init_residual = t.distance(&model.full()?)?;
    let mut previous = init_residual;
    let mut residuals = Vec::new();
    let mut reason = StopReason::MaxIterations;
    let mut regularized = false;

    for iteration in 1..=opts.max_iterations {
        let mut candidate = model.clone();
        for (n, unfolded) in unfoldings.iter().enumerate() {
            regularized |= update_mode(unfolded, &mut candidate, n)?;
        }
        if !ll1 {
            regularized |= update_cores(t, &mut candidate)?;
        }
        canonicalize(&mut candidate);
        let finite = candidate
            .terms
            .iter()
            .all(|term| term.core.is_finite() && term.factors.iter().all(all_finite));
        if !finite {
            return Err(Error::NumericalFailure {
                stage: if ll1 { "btd_ll1" } else { "btd" },
                iteration,
                last_valid: Some(Box::new(Model::BlockTerm(model))),
            });
        }
        let residual = t.distance(&candidate.full()?)?;
        match check_step(previous, residual, norm, opts.tolerance) {
            Step::Reject => {
                reason = StopReason::Stall;
                break;
            }
            step => {
                model = candidate;
                residuals.push(residual);
                previous = residual;
                if let Step::Stop(r) = step {
                    reason = r;
                    break;
                }
            }
        }
    }
    Ok(Run {
        model,
        init_residual,
        residuals,
        reason,
        regularized,
    })
}

fn fit_best(
    t: &DenseTensor,
    opts: &BtdOptions,
    ll1: bool,
) -> Result<(BlockTermTensor, DecompositionTrace)> {
    let mut best: Option<Run> = None;
    for restart in 0..opts.num_restarts {
        let seed = if restart == 0 {
            opts.seed
        } else {
            derive_seed(opts.seed, restart)
        };
        let run = fit_once(t, opts, ll1, seed)?;
        let last = |r: &Run| r.residuals.last().copied().unwrap_or(r.init_residual);
        if best.as_ref().is_none_or(|b| last(&run) < last(b)) {
            best = Some(run);
        }
    }
    let run = best.expect("num_restarts >= 1");

    let norm = t.frobenius_norm();
    let mut trace = DecompositionTrace::new(norm);
    trace.push_stage("random_init", run.init_residual / norm);
    run.residuals.iter().for_each(|&r| trace.push_residual(r));
    trace.finish(run.reason);
    trace.push_stage(
        "als",
        run.residuals.last().copied().unwrap_or(run.init_residual) / norm,
    );
    if run.regularized {
        trace
            .warnings
            .push("ill-conditioned normal equations were regularized".into());
    }
    if ll1 {
        for (s, a) in run.model.terms.iter().enumerate() {
            for (q, b) in run.model.terms.iter().enumerate().skip(s + 1) {
                let cos = a.factors[2].dot(&b.factors[2]).abs();
                if cos > COLLINEAR_COSINE {
                    trace.warnings.push(format!(
                        "blocks {s} and {q} have collinear third-mode vectors (|cos| = {cos})"
                    ));
                }
            }
        }
    }
    Ok((run.model, trace))
}
