//! Canonical polyadic decomposition by alternating least squares, with an
//! optional compress / initialize / refine pipeline.

mod diagnostics;

pub use diagnostics::{corcondia, k_rank, kruskal_uniqueness, Corcondia, UniquenessCheck};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{all_finite, gram_hadamard, solve_gram};
use crate::lmlra::hosvd;
use crate::model::{KruskalTensor, Model};
use crate::products::khatri_rao_except;
use crate::random::{derive_seed, normalized_gaussian_matrix};
use crate::tensor::{DenseTensor, Matrix};
use crate::trace::{check_step, DecompositionTrace, Step, StopReason};

/// Extra components kept per mode by the default compression size.
pub const COMPRESSION_MARGIN: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct CpdOptions {
    pub rank: usize,
    pub max_iterations: usize,
    /// Stop when `|res_k - res_{k-1}| / ||T||` falls below this.
    pub tolerance: f64,
    pub seed: u64,
    /// Independent random starts; the best final residual wins.
    pub num_starts: usize,
    pub use_compression: bool,
    /// Per-mode core extents for the compression step; defaults to
    /// `min(I_n, rank + COMPRESSION_MARGIN)`.
    pub compression_ranks: Option<Vec<usize>>,
    /// Run ALS on the full tensor after expanding a compressed solution.
    pub refine: bool,
}

impl CpdOptions {
    pub fn new(rank: usize) -> Self {
        Self {
            rank,
            max_iterations: 500,
            tolerance: 1e-8,
            seed: 0,
            num_starts: 1,
            use_compression: false,
            compression_ranks: None,
            refine: true,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self, t: &DenseTensor) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::Config("rank must be >= 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be >= 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config("tolerance must be > 0".into()));
        }
        if self.num_starts == 0 {
            return Err(Error::Config("num_starts must be >= 1".into()));
        }
        check_well_posed(t.dims(), self.rank)?;
        check_input(t)
    }
}

fn check_well_posed(dims: &[usize], rank: usize) -> Result<()> {
    if dims.len() < 2 {
        return Err(Error::UnsupportedOrder {
            order: dims.len(),
            context: "CPD needs at least two modes",
        });
    }
    for n in 0..dims.len() {
        let others: usize = dims
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != n)
            .map(|(_, &d)| d)
            .product();
        if rank > others {
            return Err(Error::Config(format!(
                "rank {rank} exceeds {others}, the column count of the mode-{n} unfolding"
            )));
        }
    }
    Ok(())
}

fn check_input(t: &DenseTensor) -> Result<()> {
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

/// Entry point honouring `opts.use_compression`.
pub fn cpd(t: &DenseTensor, opts: &CpdOptions) -> Result<(KruskalTensor, DecompositionTrace)> {
    if opts.use_compression {
        cpd_compressed(t, opts)
    } else {
        cpd_als(t, opts)
    }
}

fn random_model(dims: &[usize], rank: usize, seed: u64) -> KruskalTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let factors = dims
        .iter()
        .map(|&d| normalized_gaussian_matrix(&mut rng, d, rank))
        .collect();
    KruskalTensor {
        weights: vec![1.0; rank],
        factors,
    }
}

struct AlsRun {
    model: KruskalTensor,
    residuals: Vec<f64>,
    reason: StopReason,
    regularized: bool,
}

/// Plain ALS sweeps from `model`. Each mode update is the exact
/// least-squares solution `X_(n) KR (Hadamard of Grams)^-1`, after which
/// the new columns are normalized into the weights.
fn als_loop(
    t: &DenseTensor,
    mut model: KruskalTensor,
    max_iterations: usize,
    tolerance: f64,
    stage: &'static str,
) -> Result<AlsRun> {
    let norm = t.frobenius_norm();
    let unfoldings = (0..t.order())
        .map(|n| t.unfold(n))
        .collect::<Result<Vec<Matrix>>>()?;
    let mut previous = t.distance(&model.full()?)?;
    let mut residuals = Vec::new();
    let mut reason = StopReason::MaxIterations;
    let mut regularized = false;

    for iteration in 1..=max_iterations {
        let mut factors = model.factors.clone();
        let mut weights = model.weights.clone();
        for n in 0..t.order() {
            let mttkrp = &unfoldings[n] * khatri_rao_except(&factors, n)?;
            let (mut update, reg) = solve_gram(&mttkrp, &gram_hadamard(&factors, n));
            regularized |= reg;
            for (r, mut col) in update.column_iter_mut().enumerate() {
                let c = col.norm();
                weights[r] = c;
                if c > 0.0 {
                    col /= c;
                }
            }
            factors[n] = update;
        }
        let candidate = KruskalTensor { weights, factors };
        if !candidate.weights.iter().all(|w| w.is_finite())
            || !candidate.factors.iter().all(all_finite)
        {
            return Err(Error::NumericalFailure {
                stage,
                iteration,
                last_valid: Some(Box::new(Model::Kruskal(model))),
            });
        }
        let residual = t.distance(&candidate.full()?)?;
        match check_step(previous, residual, norm, tolerance) {
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
    Ok(AlsRun {
        model,
        residuals,
        reason,
        regularized,
    })
}

/// Best of `opts.num_starts` ALS runs from seeded Gaussian initializations.
fn best_start(t: &DenseTensor, opts: &CpdOptions, stage: &'static str) -> Result<(AlsRun, f64)> {
    let mut best: Option<(AlsRun, f64)> = None;
    for start in 0..opts.num_starts {
        let seed = if start == 0 {
            opts.seed
        } else {
            derive_seed(opts.seed, start)
        };
        let init = random_model(t.dims(), opts.rank, seed);
        let init_residual = t.distance(&init.full()?)?;
        let run = als_loop(t, init, opts.max_iterations, opts.tolerance, stage)?;
        let last = run.residuals.last().copied().unwrap_or(init_residual);
        let better = match &best {
            None => true,
            Some((b, _)) => last < b.residuals.last().copied().unwrap_or(f64::INFINITY),
        };
        if better {
            best = Some((run, init_residual));
        }
    }
    Ok(best.expect("num_starts >= 1"))
}

fn note_regularization(trace: &mut DecompositionTrace, regularized: bool) {
    if regularized {
        trace
            .warnings
            .push("ill-conditioned normal equations were regularized".into());
    }
}

/// CPD by alternating least squares on the full tensor.
///
/// Stage errors: `random_init` (the initial guess) and `als`.
pub fn cpd_als(t: &DenseTensor, opts: &CpdOptions) -> Result<(KruskalTensor, DecompositionTrace)> {
    opts.validate(t)?;
    let norm = t.frobenius_norm();
    let (run, init_residual) = best_start(t, opts, "cpd_als")?;
    let mut trace = DecompositionTrace::new(norm);
    trace.push_stage("random_init", init_residual / norm);
    run.residuals.iter().for_each(|&r| trace.push_residual(r));
    trace.finish(run.reason);
    trace.push_stage(
        "als",
        run.residuals.last().copied().unwrap_or(init_residual) / norm,
    );
    note_regularization(&mut trace, run.regularized);
    let mut model = run.model;
    model.arrange();
    Ok((model, trace))
}

/// CPD through compression: HOSVD to a small core, random initialization
/// and ALS on the core, expansion through the compression bases, then ALS
/// refinement on the full tensor.
///
/// Stage errors: `compression`, `random_init`, `core_als`, `refinement`, all
/// measured against the full tensor. Residuals of core sweeps are reported
/// as full-tensor residuals, which is exact because the compression bases
/// are orthonormal.
pub fn cpd_compressed(
    t: &DenseTensor,
    opts: &CpdOptions,
) -> Result<(KruskalTensor, DecompositionTrace)> {
    opts.validate(t)?;
    let ranks: Vec<usize> = match &opts.compression_ranks {
        Some(r) => r.clone(),
        None => t
            .dims()
            .iter()
            .map(|&d| d.min(opts.rank + COMPRESSION_MARGIN))
            .collect(),
    };
    if ranks.len() != t.order() {
        return Err(Error::Config(format!(
            "{} compression ranks for an order-{} tensor",
            ranks.len(),
            t.order()
        )));
    }
    for (n, (&c, &d)) in ranks.iter().zip(t.dims()).enumerate() {
        if c > d || c < opts.rank.min(d) {
            return Err(Error::Config(format!(
                "mode {n} compression rank {c} outside {}..={d}",
                opts.rank.min(d)
            )));
        }
    }
    check_well_posed(&ranks, opts.rank)?;

    let norm = t.frobenius_norm();
    let mut trace = DecompositionTrace::new(norm);

    let tucker = hosvd(t, &ranks)?;
    let compression_residual = t.distance(&tucker.full()?)?;
    trace.push_stage("compression", compression_residual / norm);
    let lift = |core_residual: f64| compression_residual.hypot(core_residual);

    let core = &tucker.core;
    let (run, core_init_residual) = best_start(core, opts, "cpd_core_als")?;
    trace.push_stage("random_init", lift(core_init_residual) / norm);
    run.residuals.iter().for_each(|&r| trace.push_residual(lift(r)));
    let core_final = lift(run.residuals.last().copied().unwrap_or(core_init_residual));
    trace.push_stage("core_als", core_final / norm);

    let expanded = KruskalTensor {
        weights: run.model.weights.clone(),
        factors: tucker
            .factors
            .iter()
            .zip(&run.model.factors)
            .map(|(u, f)| u * f)
            .collect(),
    };
    let mut regularized = run.regularized;
    let mut reason = run.reason;
    let mut model = expanded;
    let mut final_residual = core_final;
    if opts.refine {
        let refine = als_loop(t, model, opts.max_iterations, opts.tolerance, "cpd_refinement")?;
        refine.residuals.iter().for_each(|&r| trace.push_residual(r));
        if let Some(&r) = refine.residuals.last() {
            final_residual = r;
        }
        regularized |= refine.regularized;
        reason = refine.reason;
        model = refine.model;
    }
    trace.push_stage("refinement", final_residual / norm);
    trace.finish(reason);
    note_regularization(&mut trace, regularized);
    model.normalize();
    model.arrange();
    Ok((model, trace))
}
