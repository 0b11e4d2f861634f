//! Runs one decomposition method with harness-level settings.

use std::path::Path;
use std::time::Instant;

use hsi_tensor::btd::{btd_general, btd_ll1, BtdOptions};
use hsi_tensor::cpd::{cpd, CpdOptions};
use hsi_tensor::hsi::csv::{format_tensor, format_trace, write_matrix};
use hsi_tensor::lmlra::{hooi, LmlraOptions};
use hsi_tensor::{DecompositionTrace, DenseTensor, Error, Matrix, Model};

use crate::config::{Blocks, Method};
use crate::error::{write_file, BenchError};
use crate::report::MethodRecord;

/// Rank-(L,L,1) block size used when `--blocks` is not given.
pub const DEFAULT_LL1_SIZE: usize = 2;
/// Core extent of general blocks when `--blocks` is not given.
pub const DEFAULT_BLOCK_SIZE: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    /// CPD rank, and the number of terms for BTD methods. LMLRA needs it
    /// only when `mlranks` is absent.
    pub rank: Option<usize>,
    pub mlranks: Option<Vec<usize>>,
    pub blocks: Option<Blocks>,
    pub tolerance: Option<f64>,
    pub max_iterations: Option<usize>,
    pub seed: u64,
    pub restarts: Option<usize>,
    /// Pick LMLRA/BTD sizes whose parameter count is nearest the CPD model's.
    pub match_budget: bool,
}

impl SolverSettings {
    pub fn new(rank: usize) -> Self {
        Self {
            rank: Some(rank),
            mlranks: None,
            blocks: None,
            tolerance: None,
            max_iterations: None,
            seed: 0,
            restarts: None,
            match_budget: false,
        }
    }

    fn rank_for(&self, method: Method) -> Result<usize, BenchError> {
        self.rank
            .ok_or_else(|| BenchError::Usage(format!("--rank is required for {}", method.name())))
    }
}

fn cpd_parameters(dims: &[usize], rank: usize) -> usize {
    rank * (1 + dims.iter().sum::<usize>())
}

/// Value in `1..=max` minimizing `|count(v) - target|`; ties go to the smaller value.
fn nearest(max: usize, target: usize, count: impl Fn(usize) -> usize) -> usize {
    (1..=max.max(1))
        .min_by_key(|&v| count(v).abs_diff(target))
        .expect("nonempty range")
}

fn lmlra_ranks(dims: &[usize], s: &SolverSettings) -> Result<Vec<usize>, BenchError> {
    if let Some(r) = &s.mlranks {
        return Ok(r.clone());
    }
    let rank = s.rank_for(Method::Lmlra)?;
    let clip = |r: usize| dims.iter().map(|&d| r.min(d)).collect::<Vec<_>>();
    if !s.match_budget {
        return Ok(clip(rank));
    }
    let count = |r: usize| {
        let ranks = clip(r);
        ranks.iter().product::<usize>() + ranks.iter().zip(dims).map(|(r, d)| r * d).sum::<usize>()
    };
    let max = dims.iter().copied().max().unwrap_or(1);
    Ok(clip(nearest(max, cpd_parameters(dims, rank), count)))
}

fn ll1_sizes(dims: &[usize], s: &SolverSettings) -> Result<Vec<usize>, BenchError> {
    if let Some(b) = &s.blocks {
        return b.ll1_sizes();
    }
    let rank = s.rank_for(Method::BtdLl1)?;
    let cap = dims[0].min(dims[1]);
    let l = if s.match_budget {
        let count = |l: usize| rank * (l * (dims[0] + dims[1]) + dims[2]);
        nearest(cap, cpd_parameters(dims, rank), count)
    } else {
        DEFAULT_LL1_SIZE.min(cap)
    };
    Ok(vec![l; rank])
}

fn block_shapes(dims: &[usize], s: &SolverSettings) -> Result<Vec<[usize; 3]>, BenchError> {
    if let Some(b) = &s.blocks {
        return Ok(b.shapes());
    }
    let rank = s.rank_for(Method::Btd)?;
    let cap = dims.iter().copied().min().unwrap_or(1);
    let l = if s.match_budget {
        let count = |l: usize| rank * (l * l * l + l * dims.iter().sum::<usize>());
        nearest(cap, cpd_parameters(dims, rank), count)
    } else {
        DEFAULT_BLOCK_SIZE.min(cap)
    };
    Ok(vec![[l; 3]; rank])
}

pub fn run_method(
    t: &DenseTensor,
    method: Method,
    s: &SolverSettings,
) -> Result<(Model, DecompositionTrace), BenchError> {
    let dims = t.dims();
    if dims.len() != 3 && matches!(method, Method::BtdLl1 | Method::Btd) {
        return Err(Error::UnsupportedOrder {
            order: dims.len(),
            context: "block-term decompositions are third-order",
        }
        .into());
    }
    match method {
        Method::Cpd | Method::CpdCompressed => {
            let mut o = CpdOptions::new(s.rank_for(method)?).with_seed(s.seed);
            o.use_compression = method == Method::CpdCompressed;
            o.tolerance = s.tolerance.unwrap_or(o.tolerance);
            o.max_iterations = s.max_iterations.unwrap_or(o.max_iterations);
            o.num_starts = s.restarts.unwrap_or(o.num_starts);
            let (m, trace) = cpd(t, &o)?;
            Ok((Model::Kruskal(m), trace))
        }
        Method::Lmlra => {
            let mut o = LmlraOptions::new(lmlra_ranks(dims, s)?);
            o.seed = s.seed;
            o.tolerance = s.tolerance.unwrap_or(o.tolerance);
            o.max_iterations = s.max_iterations.unwrap_or(o.max_iterations);
            let (m, trace) = hooi(t, &o)?;
            Ok((Model::Tucker(m), trace))
        }
        Method::BtdLl1 | Method::Btd => {
            let mut o = if method == Method::BtdLl1 {
                BtdOptions::ll1(&ll1_sizes(dims, s)?)
            } else {
                BtdOptions::general(block_shapes(dims, s)?)
            };
            o.seed = s.seed;
            o.tolerance = s.tolerance.unwrap_or(o.tolerance);
            o.max_iterations = s.max_iterations.unwrap_or(o.max_iterations);
            o.num_restarts = s.restarts.unwrap_or(o.num_restarts);
            let (m, trace) = if method == Method::BtdLl1 {
                btd_ll1(t, &o)?
            } else {
                btd_general(t, &o)?
            };
            Ok((Model::BlockTerm(m), trace))
        }
    }
}

/// Outcome of one method inside a decompose or compare run.
#[derive(Debug, Clone)]
pub struct MethodRun {
    pub method: Method,
    pub record: MethodRecord,
    pub trace: Option<DecompositionTrace>,
    pub model: Option<Model>,
}

/// Runs `method`, folding numerical failures into the record. Any other
/// error (bad configuration) is returned.
pub fn run_recorded(
    t: &DenseTensor,
    method: Method,
    s: &SolverSettings,
    timed: bool,
) -> Result<MethodRun, BenchError> {
    let start = Instant::now();
    match run_method(t, method, s) {
        Ok((model, trace)) => {
            let record = MethodRecord {
                method: method.name().to_owned(),
                iterations: trace.iterations,
                relative_error: trace.final_relative_error(),
                stage_errors: trace.stage_errors.clone(),
                wall_time_s: timed.then(|| start.elapsed().as_secs_f64()),
                converged: trace.converged,
                stop_reason: Some(trace.stop_reason),
                parameter_count: Some(model.parameter_count()),
                warnings: trace.warnings.clone(),
                error: None,
            };
            Ok(MethodRun {
                method,
                record,
                trace: Some(trace),
                model: Some(model),
            })
        }
        Err(BenchError::Core(e @ Error::NumericalFailure { .. })) => {
            let mut record = MethodRecord::failed(method.name(), e.to_string());
            let Error::NumericalFailure { iteration, last_valid, .. } = e else {
                unreachable!()
            };
            record.iterations = iteration;
            record.parameter_count = last_valid.as_ref().map(|m| m.parameter_count());
            record.wall_time_s = timed.then(|| start.elapsed().as_secs_f64());
            Ok(MethodRun {
                method,
                record,
                trace: None,
                model: last_valid.map(|m| *m),
            })
        }
        Err(e) => Err(e),
    }
}

fn stacked(blocks: impl Iterator<Item = Matrix>) -> Matrix {
    let blocks: Vec<Matrix> = blocks.collect();
    let rows = blocks.first().map_or(0, Matrix::nrows);
    let cols = blocks.iter().map(Matrix::ncols).sum();
    let mut out = Matrix::zeros(rows, cols);
    let mut at = 0;
    for b in &blocks {
        out.columns_mut(at, b.ncols()).copy_from(b);
        at += b.ncols();
    }
    out
}

/// Writes `trace_<m>.csv` and the model: `<m>_factor<n>.csv` (1-based
/// mode), `<m>_weights.csv` for CPD, `<m>_core.csv` for LMLRA and
/// `<m>_core<s>.csv` (1-based block) for BTD. BTD factor files hold the
/// blocks' columns side by side in block order.
pub fn write_outputs(run: &MethodRun, dir: &Path) -> Result<(), BenchError> {
    let name = run.method.name();
    if let Some(trace) = &run.trace {
        write_file(&dir.join(format!("trace_{name}.csv")), format_trace(&trace.residuals))?;
    }
    let Some(model) = &run.model else {
        return Ok(());
    };
    let factor_path = |n: usize| dir.join(format!("{name}_factor{}.csv", n + 1));
    match model {
        Model::Kruskal(k) => {
            for (n, f) in k.factors.iter().enumerate() {
                write_matrix(f, &factor_path(n))?;
            }
            let w = Matrix::from_column_slice(k.weights.len(), 1, &k.weights);
            write_matrix(&w, &dir.join(format!("{name}_weights.csv")))?;
        }
        Model::Tucker(tk) => {
            for (n, f) in tk.factors.iter().enumerate() {
                write_matrix(f, &factor_path(n))?;
            }
            write_file(&dir.join(format!("{name}_core.csv")), format_tensor(&tk.core))?;
        }
        Model::BlockTerm(b) => {
            for n in 0..3 {
                let f = stacked(b.terms.iter().map(|t| t.factors[n].clone()));
                write_matrix(&f, &factor_path(n))?;
            }
            for (s, term) in b.terms.iter().enumerate() {
                write_file(&dir.join(format!("{name}_core{}.csv", s + 1)), format_tensor(&term.core))?;
            }
        }
    }
    Ok(())
}
