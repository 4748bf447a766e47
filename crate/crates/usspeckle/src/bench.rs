//! Wall-clock comparison of the reference and optimized filters.

use std::time::Instant;

use serde::Serialize;
use usspeckle_core::{filter_obnlm_reference, rescale_unit, ObnlmParams, Volume3D};

use crate::error::CliError;
use crate::parallel::filter_obnlm;
use crate::report::{ParamsReport, SCHEMA_VERSION};

/// Published CPU runtime of the unoptimized filter on clinical volumes of
/// the same size; informational only.
pub const CONTEXT: &str = "published OBNLM CPU runtime: 81.1 s/volume at 128x128x32";

#[derive(Debug, Clone, Serialize)]
pub struct Machine {
    pub os: &'static str,
    pub arch: &'static str,
    pub logical_cpus: usize,
    pub cpu_model: Option<String>,
}

impl Machine {
    pub fn detect() -> Self {
        let cpu_model = std::fs::read_to_string("/proc/cpuinfo").ok().and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split_once(':'))
                .map(|(_, m)| m.trim().to_string())
        });
        Self {
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
            logical_cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
            cpu_model,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReferenceEntry {
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizedEntry {
    pub threads: usize,
    pub median_wall_seconds: f64,
    pub runs: Vec<f64>,
    /// Reference time over this entry's median.
    pub speedup: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub dims: [usize; 3],
    pub params: ParamsReport,
    pub repeat: usize,
    pub reference: ReferenceEntry,
    pub optimized: Vec<OptimizedEntry>,
    pub machine: Machine,
    pub context: &'static str,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn timed<T>(f: impl FnOnce() -> Result<T, CliError>) -> Result<f64, CliError> {
    let start = Instant::now();
    f()?;
    Ok(start.elapsed().as_secs_f64())
}

/// Runs the reference filter once and the optimized filter `repeat` times
/// for each thread count. Only filtering is timed.
pub fn run_bench(
    v: &Volume3D,
    p: &ObnlmParams,
    repeat: usize,
    threads: &[usize],
    rescale: bool,
) -> Result<BenchReport, CliError> {
    if repeat == 0 {
        return Err(CliError::Usage("repeat must be at least 1".into()));
    }
    if threads.is_empty() || threads.contains(&0) {
        return Err(CliError::Usage("thread counts must be at least 1".into()));
    }
    p.validate()?;
    let input = if rescale {
        rescale_unit(v)?.0
    } else {
        v.clone()
    };

    let reference = timed(|| Ok(filter_obnlm_reference(&input, p)?))?;
    let mut optimized = Vec::with_capacity(threads.len());
    for &t in threads {
        let runs = (0..repeat)
            .map(|_| timed(|| filter_obnlm(&input, p, t)))
            .collect::<Result<Vec<_>, _>>()?;
        let m = median(&runs);
        optimized.push(OptimizedEntry {
            threads: t,
            median_wall_seconds: m,
            runs,
            speedup: reference / m,
        });
    }
    Ok(BenchReport {
        schema_version: SCHEMA_VERSION,
        dims: v.dims(),
        params: ParamsReport::from(p),
        repeat,
        reference: ReferenceEntry {
            wall_seconds: reference,
        },
        optimized,
        machine: Machine::detect(),
        context: CONTEXT,
    })
}
