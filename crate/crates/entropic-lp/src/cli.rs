use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use entropic_lp_core::ba::{ba_solve, detect_reducible};
use entropic_lp_core::generators::{extended_instance, ghn_instance, random_instance, RandomSpec};
use entropic_lp_core::lagrange::full_solve;
use entropic_lp_core::{BisectionConfig, Dims, Error, ProblemInstance};

use crate::io::{emit, instance_json, read_instance, read_reduced, CrossCheck, ReportFile};
use crate::reproduce::{random_corpus, run_criterion, suite};
use crate::trace::{sibling, write_inner_csv, write_outer_csv, write_paper_txt};
use crate::AppError;

#[derive(Parser, Debug)]
#[command(name = "entropic-lp", version)]
#[command(about = "Linear optimization over products of simplices under an averaged KL constraint")]
pub struct Cli {
    /// Worker threads for per-state updates
    #[arg(long, global = true, env = "ENTROPIC_LP_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve an instance file or a generated instance
    Solve {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Write an instance file
    Generate {
        /// The 2×2×2 coordination game
        #[arg(long, conflicts_with_all = ["extended", "random"])]
        ghn: bool,
        /// The d×d×d game with diagonal zeros (needs --d)
        #[arg(long, requires = "d", conflicts_with = "random")]
        extended: bool,
        /// Seeded random costs (needs --dims)
        #[arg(long, requires = "dims")]
        random: bool,
        #[arg(long)]
        d: Option<usize>,
        /// Shape as A,B,S
        #[arg(long)]
        dims: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Redraw random costs until the minimum is not attainable
        #[arg(long)]
        not_attainable: bool,
        /// Output path (stdout when absent)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the reproduction suite
    Reproduce {
        #[arg(long, value_enum, default_value_t = Suite::Acceptance)]
        suite: Suite,
        /// Wall-clock budget for the random corpora
        #[arg(long, default_value_t = 600.0)]
        budget_seconds: f64,
    },
    /// Solve an action-independent instance with the Blahut–Arimoto iteration
    Ba {
        /// Instance file; with --tile, a reduced file {"num_a", "p", "cost"[s][b]}
        #[arg(long)]
        instance: PathBuf,
        /// Read a reduced instance instead of a full one
        #[arg(long)]
        tile: bool,
        /// Also run the full solver and report the value gap
        #[arg(long)]
        cross_check: bool,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args, Debug)]
pub struct Source {
    #[arg(long, conflicts_with = "generate", required_unless_present = "generate")]
    pub instance: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub generate: Option<Generator>,
    #[arg(long)]
    pub d: Option<usize>,
    /// Shape as A,B,S
    #[arg(long)]
    pub dims: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Generator {
    Ghn,
    Extended,
    Random,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Ghn,
    Extended,
    Random,
    Acceptance,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Toggle {
    On,
    Off,
}

#[derive(Args, Debug)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1e-10)]
    pub eps_b: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub eps_f: f64,
    #[arg(long, default_value_t = 1e-20)]
    pub zero_band: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_inner: usize,
    #[arg(long, default_value_t = 200)]
    pub max_outer: usize,
    #[arg(long, value_enum, default_value_t = Toggle::On)]
    pub warm_start: Toggle,
    /// Record every n-th inner iterate in the traces
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
}

impl SolverArgs {
    fn config(&self, traced: bool) -> BisectionConfig {
        BisectionConfig {
            eps_b: self.eps_b,
            eps_f: self.eps_f,
            zero_band: self.zero_band,
            max_outer: self.max_outer,
            max_inner: self.max_inner,
            warm_start: self.warm_start == Toggle::On,
            stride: self.stride,
            record_inner: traced,
            keep_iterates: traced,
        }
    }
}

#[derive(Args, Debug)]
pub struct OutputArgs {
    /// Outer trace CSV; the inner trace goes next to it as <stem>.inner.csv
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Report JSON path (stdout when absent)
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Zero every elapsed-time field so reruns are byte-identical
    #[arg(long)]
    pub no_timing: bool,
    /// Also write two-column .txt files next to the trace
    #[arg(long, requires = "trace")]
    pub paper_txt: bool,
}

fn parse_dims(text: &str) -> Result<Dims, AppError> {
    let parts: Vec<usize> = text
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| AppError::Usage(format!("--dims {text}: {e}")))?;
    match parts[..] {
        [a, b, s] => Ok(Dims::new(a, b, s)),
        _ => Err(AppError::Usage(format!("--dims expects A,B,S, got {text}"))),
    }
}

fn generated(kind: Generator, d: Option<usize>, dims: Option<&str>, seed: u64, hard: bool) -> Result<ProblemInstance, AppError> {
    match kind {
        Generator::Ghn => Ok(ghn_instance()),
        Generator::Extended => match d {
            Some(d) if d >= 2 => Ok(extended_instance(d)),
            _ => Err(AppError::Usage("--extended needs --d N with N >= 2".into())),
        },
        Generator::Random => {
            let dims = parse_dims(dims.ok_or_else(|| AppError::Usage("--random needs --dims A,B,S".into()))?)?;
            let spec = RandomSpec {
                require_not_attainable: hard,
                ..RandomSpec::new(dims, seed)
            };
            Ok(random_instance(&spec)?)
        }
    }
}

fn load(source: &Source) -> Result<ProblemInstance, AppError> {
    match (&source.instance, source.generate) {
        (Some(path), _) => read_instance(path),
        (None, Some(kind)) => generated(kind, source.d, source.dims.as_deref(), source.seed, false),
        (None, None) => Err(AppError::Usage("need --instance or --generate".into())),
    }
}

fn write_traces(output: &OutputArgs, report: &entropic_lp_core::SolveReport) -> Result<(), AppError> {
    let Some(path) = &output.trace else {
        return Ok(());
    };
    let timing = !output.no_timing;
    write_outer_csv(path, &report.traces, timing)?;
    write_inner_csv(&sibling(path, "inner.csv"), &report.inner_traces, timing)?;
    if output.paper_txt {
        write_paper_txt(path, &report.traces)?;
    }
    Ok(())
}

fn cmd_solve(source: &Source, solver: &SolverArgs, output: &OutputArgs) -> Result<(), AppError> {
    let inst = load(source)?;
    let report = full_solve(inst, &solver.config(output.trace.is_some()))?;
    write_traces(output, &report)?;
    emit(output.report.as_deref(), &ReportFile::new(&report, !output.no_timing).to_json())
}

fn cmd_ba(path: &Path, tile: bool, cross_check: bool, solver: &SolverArgs, output: &OutputArgs) -> Result<(), AppError> {
    let red = if tile {
        read_reduced(path)?
    } else {
        detect_reducible(&read_instance(path)?).ok_or(Error::NotReducible)?
    };
    let cfg = solver.config(false);
    let ba = ba_solve(&red, &cfg)?;
    write_traces(output, &ba.report)?;
    let mut file = ReportFile::new(&ba.report, !output.no_timing);
    if cross_check {
        let full = full_solve(red.tile(), &cfg)?;
        file.cross_check = Some(CrossCheck {
            full_value: full.value,
            gap: (full.value - ba.report.value).abs(),
        });
    }
    emit(output.report.as_deref(), &file.to_json())
}

fn cmd_reproduce(which: Suite, budget_s: f64) -> Result<(), AppError> {
    if which == Suite::Random {
        let shapes = [Dims::new(5, 10, 10), Dims::new(10, 20, 20)];
        let rows = random_corpus(&shapes, budget_s);
        for row in &rows {
            println!("{row}");
        }
        let failed = rows.iter().filter(|r| r.failures > 0).count();
        return match failed {
            0 => Ok(()),
            _ => Err(AppError::Criteria { failed, total: rows.len() }),
        };
    }
    let name = match which {
        Suite::Ghn => "ghn",
        Suite::Extended => "extended",
        _ => "acceptance",
    };
    let ids = suite(name).expect("known suite");
    let mut failed = 0;
    for id in &ids {
        let check = run_criterion(*id);
        println!("{check}");
        failed += usize::from(!check.passed);
    }
    match failed {
        0 => Ok(()),
        _ => Err(AppError::Criteria { failed, total: ids.len() }),
    }
}

pub fn run(cli: Cli) -> Result<(), AppError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| AppError::Usage(format!("--threads {n}: {e}")))?;
    }
    match &cli.command {
        Command::Solve { source, solver, output } => cmd_solve(source, solver, output),
        Command::Generate {
            ghn,
            extended,
            random,
            d,
            dims,
            seed,
            not_attainable,
            out,
        } => {
            let kind = match (ghn, extended, random) {
                (true, _, _) => Generator::Ghn,
                (_, true, _) => Generator::Extended,
                (_, _, true) => Generator::Random,
                _ => return Err(AppError::Usage("choose one of --ghn, --extended, --random".into())),
            };
            let inst = generated(kind, *d, dims.as_deref(), *seed, *not_attainable)?;
            emit(out.as_deref(), &instance_json(&inst))
        }
        Command::Reproduce { suite, budget_seconds } => cmd_reproduce(*suite, *budget_seconds),
        Command::Ba {
            instance,
            tile,
            cross_check,
            solver,
            output,
        } => cmd_ba(instance, *tile, *cross_check, solver, output),
    }
}
