//! Experiment orchestration: single runs, tuning grids, final runs and
//! aggregation.

pub mod aggregate;
pub mod grid;
pub mod records;

use std::path::{Path, PathBuf};

pub use aggregate::{aggregate_quantiles, log_checkpoints, AggregateSeries};
pub use grid::{resolve_grid, run_grid, select_best_config, DirectionCount, GridConfig, GridSpec, TuningRow};
pub use records::{emit_records, RecordFormat, RunManifest};

use crate::config::{validate_config, OptimizerConfig};
use crate::error::Result;
use crate::exec::Execution;
use crate::optimizer::{run, RunHistory};
use crate::oracle::StochasticProblem;
use crate::problems::ProblemInstance;
use crate::vector::DecisionVector;

/// Validates `cfg` against the problem and runs it.
pub fn run_single(problem: &dyn StochasticProblem, x0: &DecisionVector, cfg: &OptimizerConfig) -> Result<RunHistory> {
    let cfg = validate_config(cfg, problem.dimension())?;
    run(&cfg, problem, x0)
}

/// File name for one run's records.
pub fn run_file_name(problem: &str, cfg: &OptimizerConfig, format: RecordFormat) -> String {
    let safe: String = problem
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect();
    format!(
        "{safe}_{}_N{}_nu{:e}_alpha{:e}_seed{}.{}",
        cfg.estimator.method.as_str(),
        cfg.estimator.num_directions,
        cfg.estimator.radius,
        cfg.step_size,
        cfg.seed,
        format.extension()
    )
}

/// Runs `cfg` and writes its records under `out_dir`, returning the path.
pub fn run_and_emit(
    instance: &ProblemInstance,
    label: &str,
    cfg: &OptimizerConfig,
    out_dir: &Path,
    format: RecordFormat,
) -> Result<(RunHistory, PathBuf)> {
    let cfg = validate_config(cfg, instance.problem.dimension())?;
    let history = run(&cfg, instance.problem.as_ref(), &instance.start)?;
    let path = out_dir.join(run_file_name(label, &cfg, format));
    emit_records(&RunManifest::new(label, &cfg), &history.records, format, &path)?;
    Ok((history, path))
}

/// Final runs of each selected configuration over the grid's final seeds.
pub fn run_finals(instance: &ProblemInstance, grid: &GridSpec, best: &[GridConfig]) -> Result<Vec<(GridConfig, Vec<RunHistory>)>> {
    let seeds = grid.final_seed_list();
    best.iter()
        .map(|c| {
            let runs = Execution::default()
                .map(&seeds, |&s| run_single(instance.problem.as_ref(), &instance.start, &grid.optimizer_config(c, s)))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            Ok((*c, runs))
        })
        .collect()
}
