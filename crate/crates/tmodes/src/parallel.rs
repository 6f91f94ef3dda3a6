//! Worker-pool fan-out over the fixed trajectory chunks.
//!
//! Chunks are evaluated in any order but merged strictly in index order, so
//! the output does not depend on the number of workers.

use rayon::prelude::*;
use rayon::ThreadPool;
use tmodes_core::ensemble::{
    chunks, density_chunk, density_series, merge_in_order, occupation_chunk, occupation_series,
    DensitySeries, SimParams, TimeSeries,
};
use tmodes_core::renewal::residual_check_fn;
use tmodes_core::{Error, RelaxationParams};

use crate::error::AppResult;

fn pool(workers: usize) -> AppResult<ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| crate::AppError::config("workers", e.to_string()))
}

fn check(params: &SimParams) -> AppResult<()> {
    params.validate()?;
    if params.ensemble_size < 2 {
        return Err(Error::EnsembleTooSmall {
            size: params.ensemble_size,
        }
        .into());
    }
    Ok(())
}

/// Ensemble mean of `n_a` on `workers` threads.
pub fn occupation(params: &SimParams, workers: usize) -> AppResult<TimeSeries> {
    check(params)?;
    let ranges: Vec<_> = chunks(params.ensemble_size).collect();
    let parts: Vec<_> = pool(workers)?.install(|| {
        ranges
            .into_par_iter()
            .map(|r| occupation_chunk(params, r))
            .collect()
    });
    let acc = merge_in_order(params.t_grid.len(), 1, parts);
    Ok(occupation_series(params, &acc)?)
}

/// Ensemble mean of the density matrix on `workers` threads.
pub fn density(params: &SimParams, workers: usize) -> AppResult<DensitySeries> {
    check(params)?;
    let ranges: Vec<_> = chunks(params.ensemble_size).collect();
    let parts = pool(workers)?.install(|| {
        ranges
            .into_par_iter()
            .map(|r| density_chunk(params, r))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let acc = merge_in_order(params.t_grid.len(), 4, parts);
    Ok(density_series(params, &acc)?)
}

/// Largest residual of the occupation renewal equation over `times`, one
/// grid point per task.
pub fn residual(
    candidate: impl Fn(f64) -> f64 + Sync,
    times: &[f64],
    params: &RelaxationParams,
    workers: usize,
) -> AppResult<f64> {
    Ok(pool(workers)?.install(|| {
        times
            .par_iter()
            .map(|&t| residual_check_fn(&candidate, &[t], params))
            .reduce(|| 0.0, f64::max)
    }))
}
