//! `tdbench` command line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use hsi_tensor::cpd::{corcondia, cpd_als, CpdOptions};
use hsi_tensor::hsi::csv::{read_tensor, write_matrix, write_tensor};
use hsi_tensor::hsi::{load_cube, save_cube_with_header, synth_cube, CubeHeader, ElementType, SyntheticCubeSpec};
use hsi_tensor::DenseTensor;

use crate::config::{parse_blocks, parse_methods, parse_mlranks, parse_rank_range, parse_synth, FileConfig, Method};
use crate::error::{write_file, BenchError};
use crate::report::{ComparisonReport, RankEstimate, RankScore};
use crate::runner::{run_recorded, write_outputs, MethodRun, SolverSettings};

const DEFAULT_OUT: &str = "tdbench-out";
const DEFAULT_COMPARE: &str = "cpd,btd-ll1,lmlra";
const DEFAULT_RANK_RANGE: &str = "1..5";
const DEFAULT_THRESHOLD: f64 = 90.0;

#[derive(Debug, Parser)]
#[command(name = "tdbench", version, about = "Compare CPD, LMLRA and BTD on hyperspectral cubes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic cube and its ground truth.
    Synth {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run one method and write its model, trace and summary.
    Decompose {
        #[arg(long, value_enum)]
        method: Option<Method>,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run several methods on the same input and rank them.
    Compare {
        /// Comma-separated methods [default: cpd,btd-ll1,lmlra]
        #[arg(long)]
        methods: Option<String>,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// CORCONDIA score for each CPD rank in a range.
    RankEstimate {
        /// `1..5`, `1-5` or `1,2,3` [default: 1..5]
        #[arg(long)]
        ranks: Option<String>,
        /// Minimum score for a rank to be suggested [default: 90]
        #[arg(long)]
        threshold: Option<f64>,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// JSON cube header; the payload defaults to the same path with `.bin`.
    #[arg(long)]
    cube: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Tensor in CSV form (`dims:` line plus 1-based entries).
    #[arg(long)]
    tensor: Option<PathBuf>,
    /// Synthetic cube, e.g. `P=4,noise=0.02,dims=32x32x64,seed=1`.
    #[arg(long)]
    synth: Option<String>,
    /// Output directory [default: tdbench-out]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Omit wall-clock times so reports are byte-identical across runs.
    #[arg(long)]
    deterministic: bool,
    /// JSON file with the same keys as the long flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// CPD rank and number of block terms [default: P for synthetic input]
    #[arg(long)]
    rank: Option<usize>,
    /// LMLRA ranks `R1,R2,R3`.
    #[arg(long)]
    mlranks: Option<String>,
    /// `L1,L2,...` or `(L,M,N);(L,M,N);...`
    #[arg(long)]
    blocks: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    restarts: Option<usize>,
    /// Size LMLRA and BTD models to the CPD parameter count.
    #[arg(long)]
    match_budget: bool,
}

enum Source {
    Cube { header: PathBuf, data: PathBuf },
    Tensor(PathBuf),
    Synth(SyntheticCubeSpec),
}

struct Input {
    tensor: DenseTensor,
    endmembers: Option<usize>,
}

impl Source {
    fn resolve(common: &CommonArgs, file: &FileConfig) -> Result<Self, BenchError> {
        let cube = common.cube.clone().or_else(|| file.cube.clone());
        let tensor = common.tensor.clone().or_else(|| file.tensor.clone());
        let synth = common.synth.clone().or_else(|| file.synth.clone());
        let given = [cube.is_some(), tensor.is_some(), synth.is_some()];
        match given.iter().filter(|&&g| g).count() {
            1 => {}
            0 => return Err(BenchError::Usage("one of --cube, --tensor or --synth is required".into())),
            _ => return Err(BenchError::Usage("--cube, --tensor and --synth are mutually exclusive".into())),
        }
        if let Some(header) = cube {
            let data = common
                .data
                .clone()
                .or_else(|| file.data.clone())
                .unwrap_or_else(|| header.with_extension("bin"));
            return Ok(Source::Cube { header, data });
        }
        if let Some(path) = tensor {
            return Ok(Source::Tensor(path));
        }
        Ok(Source::Synth(parse_synth(&synth.expect("checked above"))?))
    }

    fn load(&self) -> Result<Input, BenchError> {
        Ok(match self {
            Source::Cube { header, data } => Input {
                tensor: load_cube(header, data)?,
                endmembers: None,
            },
            Source::Tensor(path) => Input {
                tensor: read_tensor(path)?,
                endmembers: None,
            },
            Source::Synth(spec) => Input {
                tensor: synth_cube(spec)?.cube,
                endmembers: Some(spec.num_endmembers),
            },
        })
    }
}

struct Run {
    file: FileConfig,
    out: PathBuf,
    deterministic: bool,
}

impl Run {
    fn new(common: &CommonArgs) -> Result<Self, BenchError> {
        let file = match &common.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let out = common
            .out
            .clone()
            .or_else(|| file.out.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        std::fs::create_dir_all(&out).map_err(|source| BenchError::Io {
            path: out.clone(),
            source,
        })?;
        let deterministic = common.deterministic || file.deterministic.unwrap_or(false);
        Ok(Self {
            file,
            out,
            deterministic,
        })
    }

    fn solver(&self, args: &SolverArgs, input: &Input) -> Result<SolverSettings, BenchError> {
        let f = &self.file;
        Ok(SolverSettings {
            rank: args.rank.or(f.rank).or(input.endmembers),
            mlranks: args.mlranks.as_deref().or(f.mlranks.as_deref()).map(parse_mlranks).transpose()?,
            blocks: args.blocks.as_deref().or(f.blocks.as_deref()).map(parse_blocks).transpose()?,
            tolerance: args.tol.or(f.tol),
            max_iterations: args.max_iters.or(f.max_iters),
            seed: args.seed.or(f.seed).unwrap_or(0),
            restarts: args.restarts.or(f.restarts),
            match_budget: args.match_budget || f.match_budget.unwrap_or(false),
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

/// Runs the methods (concurrently when there are several) and writes
/// every artifact. Returns the report so callers can decide the exit code.
fn run_methods(
    run: &Run,
    input: &Input,
    methods: &[Method],
    settings: &SolverSettings,
) -> Result<ComparisonReport, BenchError> {
    let timed = !run.deterministic;
    let results: Vec<Result<MethodRun, BenchError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = methods
            .iter()
            .map(|&m| scope.spawn(move || run_recorded(&input.tensor, m, settings, timed)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("method thread panicked"))
            .collect()
    });
    let runs = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut traces = BTreeMap::new();
    for r in &runs {
        write_outputs(r, &run.out)?;
        if let Some(trace) = &r.trace {
            traces.insert(r.method.name().to_owned(), trace.residuals.clone());
        }
    }
    let report = ComparisonReport::new(
        input.tensor.dims().to_vec(),
        settings.seed,
        runs.into_iter().map(|r| r.record).collect(),
        traces,
    );
    write_file(&run.path("report.json"), report.to_json())?;
    let table = report.table();
    write_file(&run.path("table.txt"), &table)?;
    print!("{table}");
    match &report.best_method {
        Some(best) => println!("best: {best}"),
        None => return Err(BenchError::AllFailed),
    }
    Ok(report)
}

fn cmd_synth(common: &CommonArgs) -> Result<(), BenchError> {
    let run = Run::new(common)?;
    let spec = match common.synth.as_deref().or(run.file.synth.as_deref()) {
        Some(s) => parse_synth(s)?,
        None => SyntheticCubeSpec::default(),
    };
    let s = synth_cube(&spec)?;
    let mut header = CubeHeader::new(spec.height, spec.width, spec.bands, ElementType::Float64);
    if spec.bands > 1 {
        header.wavelengths = Some(s.wavelengths_um.clone());
    }
    save_cube_with_header(&s.cube, &header, &run.path("cube.json"), &run.path("cube.bin"))?;
    write_matrix(&s.endmembers, &run.path("endmembers.csv"))?;
    write_tensor(&s.abundances, &run.path("abundances.csv"))?;
    println!(
        "wrote {}x{}x{} cube with {} endmembers to {}",
        spec.height,
        spec.width,
        spec.bands,
        spec.num_endmembers,
        run.out.display()
    );
    Ok(())
}

fn cmd_decompose(method: Option<Method>, solver: &SolverArgs, common: &CommonArgs) -> Result<(), BenchError> {
    let run = Run::new(common)?;
    let method = method
        .or(run.file.method)
        .ok_or_else(|| BenchError::Usage("--method is required".into()))?;
    let input = Source::resolve(common, &run.file)?.load()?;
    let settings = run.solver(solver, &input)?;
    run_methods(&run, &input, &[method], &settings).map(|_| ())
}

fn cmd_compare(methods: Option<&str>, solver: &SolverArgs, common: &CommonArgs) -> Result<(), BenchError> {
    let run = Run::new(common)?;
    let methods = parse_methods(methods.or(run.file.methods.as_deref()).unwrap_or(DEFAULT_COMPARE))?;
    if methods.len() < 2 {
        return Err(BenchError::Usage("compare needs at least two methods".into()));
    }
    let input = Source::resolve(common, &run.file)?.load()?;
    let settings = run.solver(solver, &input)?;
    run_methods(&run, &input, &methods, &settings).map(|_| ())
}

fn cmd_rank_estimate(
    ranks: Option<&str>,
    threshold: Option<f64>,
    solver: &SolverArgs,
    common: &CommonArgs,
) -> Result<(), BenchError> {
    let run = Run::new(common)?;
    let ranks = parse_rank_range(ranks.or(run.file.ranks.as_deref()).unwrap_or(DEFAULT_RANK_RANGE))?;
    let threshold = threshold.or(run.file.threshold).unwrap_or(DEFAULT_THRESHOLD);
    let input = Source::resolve(common, &run.file)?.load()?;
    let f = &run.file;
    let mut entries = Vec::with_capacity(ranks.len());
    for &rank in &ranks {
        let mut o = CpdOptions::new(rank).with_seed(solver.seed.or(f.seed).unwrap_or(0));
        o.tolerance = solver.tol.or(f.tol).unwrap_or(o.tolerance);
        o.max_iterations = solver.max_iters.or(f.max_iters).unwrap_or(o.max_iterations);
        o.num_starts = solver.restarts.or(f.restarts).unwrap_or(o.num_starts);
        let (model, trace) = cpd_als(&input.tensor, &o)?;
        let c = corcondia(&input.tensor, &model)?;
        entries.push(RankScore {
            rank,
            score: c.score,
            regularized: c.regularized,
            relative_error: trace.final_relative_error().unwrap_or(f64::NAN),
            iterations: trace.iterations,
        });
    }
    let estimate = RankEstimate::new(threshold, entries);
    let mut json = serde_json::to_string_pretty(&estimate).expect("estimate serializes");
    json.push('\n');
    write_file(&run.path("rank_estimate.json"), json)?;
    for e in &estimate.entries {
        println!("R={:<3} corcondia={:>10.3} relative_error={:.3e}", e.rank, e.score, e.relative_error);
    }
    match estimate.suggested_rank {
        Some(r) => println!("suggested rank: {r}"),
        None => println!("no rank reaches the threshold {threshold}"),
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), BenchError> {
    match &cli.command {
        Command::Synth { common } => cmd_synth(common),
        Command::Decompose { method, solver, common } => cmd_decompose(*method, solver, common),
        Command::Compare { methods, solver, common } => cmd_compare(methods.as_deref(), solver, common),
        Command::RankEstimate {
            ranks,
            threshold,
            solver,
            common,
        } => cmd_rank_estimate(ranks.as_deref(), *threshold, solver, common),
    }
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("tdbench: {e}");
            e.exit_code()
        }
    }
}
