//! Multi-threaded filtering on top of [`ObnlmPlan`].

use rayon::prelude::*;
use usspeckle_core::{filter_obnlm_reference, rescale_unit, ObnlmParams, ObnlmPlan, Volume3D};

use crate::error::CliError;

/// Optimized filter on `threads` worker threads.
///
/// Tiles are restored independently and written back in tile order, and
/// each tile's arithmetic is fixed by the plan, so the output is bitwise
/// identical for every thread count.
pub fn filter_obnlm(v: &Volume3D, p: &ObnlmParams, threads: usize) -> Result<Volume3D, CliError> {
    if threads == 0 {
        return Err(CliError::Usage("threads must be at least 1".into()));
    }
    let plan = ObnlmPlan::new(v, p)?;
    let restored: Vec<Vec<f64>> = if threads == 1 {
        plan.tiles().iter().map(|t| plan.restore(t)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?;
        pool.install(|| plan.tiles().par_iter().map(|t| plan.restore(t)).collect())
    };
    let mut out = vec![0.0; v.len()];
    for (tile, values) in plan.tiles().iter().zip(&restored) {
        plan.scatter(tile, values, &mut out);
    }
    Ok(plan.into_volume(out)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Implementation {
    Reference,
    Optimized,
}

/// Filters `v` with the chosen implementation. With `rescale`, intensities
/// are mapped onto `[0, 1]` first and mapped back afterwards.
pub fn despeckle(
    v: &Volume3D,
    p: &ObnlmParams,
    imp: Implementation,
    threads: usize,
    rescale: bool,
) -> Result<Volume3D, CliError> {
    let run = |x: &Volume3D| match imp {
        Implementation::Reference => Ok(filter_obnlm_reference(x, p)?),
        Implementation::Optimized => filter_obnlm(x, p, threads),
    };
    if rescale {
        let (unit, map) = rescale_unit(v)?;
        Ok(map.invert(&run(&unit)?)?)
    } else {
        run(v)
    }
}
