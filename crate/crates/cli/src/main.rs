use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use dfas_core::config::{EstimatorConfig, Method, OptimizerConfig, SamplerConfig, DEFAULT_THETA};
use dfas_core::harness::aggregate::{aggregate_quantiles, checkpoints_for, write_series_csv, DEFAULT_CHECKPOINTS};
use dfas_core::harness::grid::GridSpec;
use dfas_core::harness::records::{read_records, RecordFormat, RunManifest};
use dfas_core::harness::{emit_records, run_and_emit, run_file_name, run_finals, run_grid, select_best_config};
use dfas_core::problems::reference::cache_path;
use dfas_core::problems::registry::{build_problem, default_reference_dir, reference_key};
use dfas_core::problems::ProblemSpec;
use dfas_core::{Error, Result};

/// `println!` that tolerates a closed stdout (e.g. piped into `head`).
macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

#[derive(Parser)]
#[command(name = "dfas", version, about = "Derivative-free optimization with adaptive sampling")]
struct Cli {
    /// Directory holding cached reference optima.
    #[arg(long, global = true)]
    reference_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Fd,
    Gs,
    Ss,
    Rc,
    Rs,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Fd => Method::Fd,
            MethodArg::Gs => Method::Gs,
            MethodArg::Ss => Method::Ss,
            MethodArg::Rc => Method::Rc,
            MethodArg::Rs => Method::Rs,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for RecordFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => RecordFormat::Csv,
            FormatArg::Json => RecordFormat::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write its records.
    Run {
        /// e.g. quadratic:10:0.1, chebyquad:abs:1e-3, logistic:PATH, mushroom
        #[arg(long)]
        problem: String,
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Number of directions N (ignored for fd).
        #[arg(long, default_value_t = 1)]
        num_dirs: usize,
        #[arg(long)]
        nu: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = DEFAULT_THETA)]
        theta: f64,
        #[arg(long, default_value_t = 2)]
        initial_batch: usize,
        /// Budget in stochastic function evaluations.
        #[arg(long)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "results/runs")]
        out: PathBuf,
        #[arg(long)]
        resample_each_iteration: bool,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
    },
    /// Tune over a grid, pick the worst-case best configuration per method,
    /// then run it on the final seeds and aggregate.
    Grid {
        /// JSON grid specification.
        #[arg(long)]
        grid_file: PathBuf,
        #[arg(long)]
        problem: String,
        #[arg(long, default_value = "results/grid")]
        out: PathBuf,
    },
    /// Quantile bands over a set of run files (CSV or JSON).
    Aggregate {
        /// Glob matching run files.
        #[arg(long)]
        runs: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CHECKPOINTS)]
        checkpoints: usize,
    },
    /// Recompute and cache reference optima.
    Reference {
        /// Problems to solve; defaults to the four least-squares problems and mushroom.
        #[arg(long)]
        problem: Vec<String>,
    },
}

fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    fs::write(path, text + "\n").map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn execute(cli: Cli) -> Result<()> {
    let reference_dir = cli.reference_dir.unwrap_or_else(default_reference_dir);
    match cli.command {
        Command::Run {
            problem,
            method,
            num_dirs,
            nu,
            alpha,
            theta,
            initial_batch,
            budget,
            seed,
            out,
            resample_each_iteration,
            format,
        } => {
            let spec: ProblemSpec = problem.parse()?;
            let instance = build_problem(&spec, &reference_dir)?;
            let mut cfg = OptimizerConfig::new(
                EstimatorConfig {
                    method: method.into(),
                    num_directions: num_dirs,
                    radius: nu,
                },
                SamplerConfig {
                    theta,
                    ..SamplerConfig::new(initial_batch)
                },
                alpha,
                budget,
                seed,
            );
            cfg.resample_each_iteration = resample_each_iteration;
            let (history, path) = run_and_emit(&instance, &spec.to_string(), &cfg, &out, format.into())?;
            let last = history.records.last();
            out!(
                "{} iterations, {} evaluations, initial gap {:.6e}, final gap {:.6e}, status {:?}",
                history.records.len(),
                last.map_or(0, |r| r.cum_evals),
                history.initial_gap,
                history.final_gap(),
                history.status
            );
            out!("wrote {}", path.display());
        }
        Command::Grid { grid_file, problem, out } => {
            let text = fs::read_to_string(&grid_file).map_err(|e| Error::Io {
                path: grid_file.clone(),
                source: e,
            })?;
            let grid: GridSpec = serde_json::from_str(&text).map_err(|e| Error::Json {
                path: grid_file.clone(),
                source: e,
            })?;
            let spec: ProblemSpec = problem.parse()?;
            let label = spec.to_string();
            let instance = build_problem(&spec, &reference_dir)?;
            create_dir(&out)?;
            let rows = run_grid(&instance, &grid)?;
            write_json(&rows, &out.join("tuning.json"))?;
            let best = select_best_config(&rows)?;
            write_json(&best, &out.join("best.json"))?;
            for (config, runs) in run_finals(&instance, &grid, &best)? {
                let method = config.method.as_str();
                let run_dir = out.join(method);
                let mut records = Vec::new();
                for (h, seed) in runs.iter().zip(grid.final_seed_list()) {
                    let cfg = grid.optimizer_config(&config, seed);
                    let path = run_dir.join(run_file_name(&label, &cfg, RecordFormat::Json));
                    emit_records(&RunManifest::new(&label, &cfg), &h.records, RecordFormat::Json, &path)?;
                    records.push(h.records.clone());
                }
                let series = aggregate_quantiles(&records, &checkpoints_for(&records, DEFAULT_CHECKPOINTS))?;
                write_series_csv(&series, &out.join(format!("aggregate_{method}.csv")))?;
                out!(
                    "{}: N={} nu={:e} alpha={:e}, final median gap {:.6e}",
                    config.method,
                    config.num_directions,
                    config.radius,
                    config.step_size,
                    series.gap.median.last().copied().unwrap_or(f64::NAN)
                );
            }
        }
        Command::Aggregate { runs, out, checkpoints } => {
            let paths: Vec<PathBuf> = glob::glob(&runs)
                .map_err(|e| Error::InvalidConfig(format!("bad glob '{runs}': {e}")))?
                .filter_map(|p| p.ok())
                .collect();
            let records = paths.iter().map(|p| read_records(p)).collect::<Result<Vec<_>>>()?;
            let series = aggregate_quantiles(&records, &checkpoints_for(&records, checkpoints))?;
            write_series_csv(&series, &out)?;
            out!("aggregated {} runs into {}", records.len(), out.display());
        }
        Command::Reference { problem } => {
            let problems = if problem.is_empty() {
                ["chebyquad", "osborne", "bdqrtic", "cube", "mushroom"].map(String::from).to_vec()
            } else {
                problem
            };
            for p in problems {
                let spec: ProblemSpec = p.parse()?;
                if let ProblemSpec::Quadratic { .. } = spec {
                    out!("{p}: F* = 0 (closed form)");
                    continue;
                }
                if let Some(key) = reference_key(&spec)? {
                    let path = cache_path(&reference_dir, &key);
                    if path.exists() {
                        fs::remove_file(&path).map_err(|e| Error::Io {
                            path: path.clone(),
                            source: e,
                        })?;
                    }
                    let instance = build_problem(&spec, &reference_dir)?;
                    out!(
                        "{p}: F* = {:.16e} ({})",
                        instance.problem.optimal_value().unwrap_or(f64::NAN),
                        path.display()
                    );
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.code());
            ExitCode::FAILURE
        }
    }
}
