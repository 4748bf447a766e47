//! Command-line front end: `synth`, `despeckle`, `eval` and `bench`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use usspeckle_core::{
    apply_speckle, generate_phantom, mse, rescale_unit, smpi, Axis, FilterMode, ObnlmParams,
    PhantomKind, PhantomSpec, SpeckleParams, Volume3D,
};

use crate::bench::run_bench;
use crate::config::Config;
use crate::error::CliError;
use crate::io::{list_volumes, load_volume, save_volume, IoError};
use crate::parallel::{despeckle, Implementation};
use crate::report::{emit, ParamsReport, SmpiFields, Summary, SCHEMA_VERSION};

#[derive(Debug, Parser)]
#[command(
    name = "usspeckle",
    version,
    about = "3D ultrasound speckle simulation, reduction and evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a clean phantom and its speckled counterpart.
    Synth(SynthArgs),
    /// Filter a volume, or every volume in a directory.
    Despeckle(DespeckleArgs),
    /// Score filtered volumes against originals.
    Eval(EvalArgs),
    /// Time the reference and optimized filters.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Constant,
    TwoRegion,
    Sphere,
    Gradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    X,
    Y,
    Z,
}

impl From<AxisArg> for Axis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::X => Axis::X,
            AxisArg::Y => Axis::Y,
            AxisArg::Z => Axis::Z,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Slice2d,
    Full3d,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricArg {
    Smpi,
    Mse,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "constant")]
    pub kind: KindArg,
    #[arg(long, num_args = 3, value_names = ["NX", "NY", "NZ"], default_values_t = [64usize, 64, 16])]
    pub dims: Vec<usize>,
    #[arg(long, num_args = 3, value_names = ["SX", "SY", "SZ"], default_values_t = [1.0f64, 1.0, 1.0])]
    pub spacing: Vec<f64>,
    /// Constant phantom level.
    #[arg(long, default_value_t = 0.5)]
    pub level: f64,
    /// Two-region split axis, or gradient axis.
    #[arg(long, value_enum, default_value = "x")]
    pub axis: AxisArg,
    /// First index of the high region; defaults to the middle of the axis.
    #[arg(long)]
    pub split: Option<usize>,
    #[arg(long, default_value_t = 0.25)]
    pub low: f64,
    #[arg(long, default_value_t = 0.75)]
    pub high: f64,
    /// Sphere centre in voxels; defaults to the volume centre.
    #[arg(long, num_args = 3, value_names = ["CX", "CY", "CZ"])]
    pub center: Option<Vec<f64>>,
    /// Sphere radius in voxels; defaults to a quarter of the smallest axis.
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long, default_value_t = 0.25)]
    pub background: f64,
    #[arg(long, default_value_t = 0.75)]
    pub inclusion: f64,
    #[arg(long, default_value_t = 0.0)]
    pub start: f64,
    #[arg(long, default_value_t = 1.0)]
    pub end: f64,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Skip the speckled volume.
    #[arg(long)]
    pub clean_only: bool,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct FilterArgs {
    #[arg(long)]
    pub block_radius: Option<usize>,
    /// Search half-width, in block steps.
    #[arg(long)]
    pub search_radius: Option<usize>,
    #[arg(long)]
    pub block_step: Option<usize>,
    /// Smoothing strength for [0, 1]-scaled input.
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Map intensities onto [0, 1] before filtering and back afterwards.
    #[arg(long)]
    pub rescale: bool,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DespeckleArgs {
    /// Volume header (.mhd) or a directory of them.
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub filter: FilterArgs,
    #[arg(long = "impl", value_enum)]
    pub implementation: Option<Implementation>,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_enum)]
    pub metric: MetricArg,
    /// Original volume, or a directory of originals.
    pub original: PathBuf,
    /// Filtered volume, or a directory holding files of the same names.
    pub filtered: PathBuf,
    /// Also write the report lines to this file.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub filter: FilterArgs,
    #[arg(long)]
    pub repeat: Option<usize>,
    /// Comma-separated thread counts for the optimized filter.
    #[arg(long, value_delimiter = ',')]
    pub threads: Option<Vec<usize>>,
    /// Also write the report to this file.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(a) => cmd_synth(&a),
        Command::Despeckle(a) => cmd_despeckle(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Bench(a) => cmd_bench(&a),
    }
}

fn load_config(path: Option<&Path>) -> Result<Config, CliError> {
    path.map_or_else(|| Ok(Config::default()), Config::load)
}

fn require_input(path: &Path) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "input path {} does not exist",
            path.display()
        )))
    }
}

fn io_err(path: &Path, source: std::io::Error) -> CliError {
    IoError::Io {
        path: path.to_path_buf(),
        source,
    }
    .into()
}

fn parse_mode(s: &str) -> Result<ModeArg, CliError> {
    ModeArg::from_str(s, true).map_err(|_| CliError::Usage(format!("unknown mode `{s}`")))
}

fn parse_impl(s: &str) -> Result<Implementation, CliError> {
    Implementation::from_str(s, true)
        .map_err(|_| CliError::Usage(format!("unknown implementation `{s}`")))
}

impl FilterArgs {
    /// Flags over config entries over defaults; validated.
    pub fn resolve(&self, cfg: &Config) -> Result<(ObnlmParams, bool), CliError> {
        let d = ObnlmParams::default();
        let mode = match self.mode {
            Some(m) => m,
            None => match cfg.get::<String>("mode")? {
                Some(s) => parse_mode(&s)?,
                None => ModeArg::Slice2d,
            },
        };
        let p = ObnlmParams {
            block_radius: cfg.pick(self.block_radius, "block_radius", d.block_radius)?,
            search_radius: cfg.pick(self.search_radius, "search_radius", d.search_radius)?,
            block_step: cfg.pick(self.block_step, "block_step", d.block_step)?,
            h: cfg.pick(self.h, "h", d.h)?,
            gamma: cfg.pick(self.gamma, "gamma", d.gamma)?,
            eps: cfg.pick(self.eps, "eps", d.eps)?,
            mode: match mode {
                ModeArg::Slice2d => FilterMode::Slice2d,
                ModeArg::Full3d => FilterMode::Full3d,
            },
        };
        p.validate()?;
        let rescale = self.rescale || cfg.get::<bool>("rescale")?.unwrap_or(false);
        Ok((p, rescale))
    }
}

fn triple<T: Copy>(v: &[T]) -> [T; 3] {
    [v[0], v[1], v[2]]
}

fn phantom_spec(a: &SynthArgs) -> PhantomSpec {
    let dims = triple(&a.dims);
    let kind = match a.kind {
        KindArg::Constant => PhantomKind::Constant { level: a.level },
        KindArg::TwoRegion => {
            let axis = Axis::from(a.axis);
            PhantomKind::TwoRegion {
                axis,
                split: a.split.unwrap_or(dims[axis.index()] / 2),
                low: a.low,
                high: a.high,
            }
        }
        KindArg::Sphere => PhantomKind::SphericalInclusion {
            center: a
                .center
                .as_deref()
                .map_or_else(|| dims.map(|n| (n.saturating_sub(1)) as f64 / 2.0), triple),
            radius: a
                .radius
                .unwrap_or_else(|| *dims.iter().min().unwrap_or(&0) as f64 / 4.0),
            background: a.background,
            inclusion: a.inclusion,
        },
        KindArg::Gradient => PhantomKind::AxialGradient {
            axis: Axis::from(a.axis),
            start: a.start,
            end: a.end,
        },
    };
    PhantomSpec { kind, dims }
}

fn axis_name(a: Axis) -> &'static str {
    match a {
        Axis::X => "x",
        Axis::Y => "y",
        Axis::Z => "z",
    }
}

fn phantom_json(spec: &PhantomSpec) -> serde_json::Value {
    let kind = match spec.kind {
        PhantomKind::Constant { level } => json!({ "kind": "constant", "level": level }),
        PhantomKind::TwoRegion {
            axis,
            split,
            low,
            high,
        } => json!({
            "kind": "two_region", "axis": axis_name(axis), "split": split, "low": low, "high": high,
        }),
        PhantomKind::SphericalInclusion {
            center,
            radius,
            background,
            inclusion,
        } => json!({
            "kind": "sphere", "center": center, "radius": radius,
            "background": background, "inclusion": inclusion,
        }),
        PhantomKind::AxialGradient { axis, start, end } => json!({
            "kind": "gradient", "axis": axis_name(axis), "start": start, "end": end,
        }),
    };
    let mut v = kind;
    v["dims"] = json!(spec.dims);
    v
}

fn cmd_synth(a: &SynthArgs) -> Result<(), CliError> {
    let cfg = load_config(a.config.as_deref())?;
    let d = SpeckleParams::default();
    let speckle = SpeckleParams {
        gamma: cfg.pick(a.gamma, "gamma", d.gamma)?,
        sigma: cfg.pick(a.sigma, "sigma", d.sigma)?,
        seed: cfg.pick(a.seed, "seed", d.seed)?,
    };
    let spec = phantom_spec(a);
    spec.validate()?;
    speckle.validate()?;

    // everything is computed before the first file is created
    let clean = generate_phantom(&spec)?.with_spacing(triple(&a.spacing))?;
    let speckled = if a.clean_only {
        None
    } else {
        Some(apply_speckle(&clean, &speckle)?)
    };

    let out = &a.output;
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    save_volume(&clean, out.join("clean.mhd"))?;
    let mut files = vec!["clean.mhd"];
    if let Some(s) = &speckled {
        save_volume(s, out.join("speckled.mhd"))?;
        files.push("speckled.mhd");
    }
    let params = json!({
        "schema_version": SCHEMA_VERSION,
        "phantom": phantom_json(&spec),
        "spacing": clean.spacing(),
        "speckle": if a.clean_only { serde_json::Value::Null } else { json!({
            "gamma": speckle.gamma,
            "sigma": speckle.sigma,
            "seed": speckle.seed,
            "rng": "philox4x64-10, counter = voxel index, key = seed; Box-Muller",
        })},
        "files": files,
    });
    let path = out.join("params.json");
    fs::write(&path, serde_json::to_string_pretty(&params)? + "\n")
        .map_err(|e| io_err(&path, e))?;
    emit(&params)?;
    Ok(())
}

#[derive(Serialize)]
struct DespeckleRecord<'a> {
    schema_version: u32,
    input: &'a Path,
    output: &'a Path,
    dims: [usize; 3],
    #[serde(rename = "impl")]
    implementation: Implementation,
    threads: usize,
    rescale: bool,
    wall_seconds: f64,
    params: ParamsReport,
}

/// Input/output pairs; a directory input maps onto a directory output.
fn volume_jobs(input: &Path, output: &Path) -> Result<Vec<(PathBuf, PathBuf)>, CliError> {
    if !input.is_dir() {
        return Ok(vec![(input.to_path_buf(), output.to_path_buf())]);
    }
    let inputs = list_volumes(input)?;
    if inputs.is_empty() {
        return Err(CliError::Usage(format!(
            "no .mhd volumes in {}",
            input.display()
        )));
    }
    Ok(inputs
        .into_iter()
        .map(|p| {
            let name = p.file_name().map(PathBuf::from).unwrap_or_default();
            (p, output.join(name))
        })
        .collect())
}

fn cmd_despeckle(a: &DespeckleArgs) -> Result<(), CliError> {
    let cfg = load_config(a.filter.config.as_deref())?;
    let (params, rescale) = a.filter.resolve(&cfg)?;
    let threads = cfg.pick(a.threads, "threads", 1)?;
    if threads == 0 {
        return Err(CliError::Usage("threads must be at least 1".into()));
    }
    let implementation = match a.implementation {
        Some(i) => i,
        None => match cfg.get::<String>("impl")? {
            Some(s) => parse_impl(&s)?,
            None => Implementation::Optimized,
        },
    };
    require_input(&a.input)?;
    let jobs = volume_jobs(&a.input, &a.output)?;
    if a.input.is_dir() {
        fs::create_dir_all(&a.output).map_err(|e| io_err(&a.output, e))?;
    }
    for (src, dst) in &jobs {
        let v = load_volume(src)?;
        let start = Instant::now();
        let out = despeckle(&v, &params, implementation, threads, rescale)?;
        let wall_seconds = start.elapsed().as_secs_f64();
        save_volume(&out, dst)?;
        emit(&DespeckleRecord {
            schema_version: SCHEMA_VERSION,
            input: src,
            output: dst,
            dims: v.dims(),
            implementation,
            threads,
            rescale,
            wall_seconds,
            params: ParamsReport::from(&params),
        })?;
    }
    Ok(())
}

#[derive(Serialize)]
struct EvalRecord<'a> {
    schema_version: u32,
    metric: MetricArg,
    original: &'a Path,
    filtered: &'a Path,
    #[serde(skip_serializing_if = "Option::is_none")]
    mse: Option<f64>,
    #[serde(flatten)]
    smpi: Option<SmpiFields>,
    /// Scale on which SMPI statistics are reported.
    #[serde(skip_serializing_if = "Option::is_none")]
    intensity_scale: Option<&'static str>,
}

#[derive(Serialize)]
struct EvalSummary {
    schema_version: u32,
    metric: MetricArg,
    summary: bool,
    count: usize,
    mean: f64,
    std: f64,
}

/// Scores one pair. SMPI is computed after mapping both volumes with the
/// original's `[0, 1]` rescale, so it does not depend on intensity units.
fn score(
    metric: MetricArg,
    o: &Volume3D,
    f: &Volume3D,
) -> Result<(f64, Option<f64>, Option<SmpiFields>), CliError> {
    match metric {
        MetricArg::Mse => {
            let m = mse(o, f)?;
            Ok((m, Some(m), None))
        }
        MetricArg::Smpi => {
            // dimension check first so a mismatch is reported as such
            smpi(o, f)?;
            let (o_unit, map) =
                rescale_unit(o).map_err(|_| usspeckle_core::Error::DegenerateOriginal)?;
            let r = smpi(&o_unit, &map.apply(f)?)?;
            Ok((r.smpi, None, Some(r.into())))
        }
    }
}

fn eval_pairs(a: &EvalArgs) -> Result<Vec<(PathBuf, PathBuf)>, CliError> {
    require_input(&a.original)?;
    require_input(&a.filtered)?;
    match (a.original.is_dir(), a.filtered.is_dir()) {
        (false, false) => Ok(vec![(a.original.clone(), a.filtered.clone())]),
        (true, true) => {
            let originals = list_volumes(&a.original)?;
            if originals.is_empty() {
                return Err(CliError::Usage(format!(
                    "no .mhd volumes in {}",
                    a.original.display()
                )));
            }
            Ok(originals
                .into_iter()
                .map(|o| {
                    let f = a.filtered.join(o.file_name().unwrap_or_default());
                    (o, f)
                })
                .collect())
        }
        _ => Err(CliError::Usage(
            "original and filtered must both be files or both directories".into(),
        )),
    }
}

fn cmd_eval(a: &EvalArgs) -> Result<(), CliError> {
    let pairs = eval_pairs(a)?;
    let batch = a.original.is_dir();
    let mut lines = Vec::new();
    let mut values = Vec::new();
    for (o, f) in &pairs {
        let (ov, fv) = (load_volume(o)?, load_volume(f)?);
        let (value, mse, smpi) = score(a.metric, &ov, &fv)?;
        values.push(value);
        let rec = EvalRecord {
            schema_version: SCHEMA_VERSION,
            metric: a.metric,
            original: o,
            filtered: f,
            mse,
            intensity_scale: smpi.as_ref().map(|_| "original_unit"),
            smpi,
        };
        lines.push(serde_json::to_string(&rec)?);
    }
    if batch {
        if let Some(s) = Summary::of(&values) {
            lines.push(serde_json::to_string(&EvalSummary {
                schema_version: SCHEMA_VERSION,
                metric: a.metric,
                summary: true,
                count: s.count,
                mean: s.mean,
                std: s.std,
            })?);
        }
    }
    let text = lines.join("\n") + "\n";
    print!("{text}");
    if let Some(path) = &a.output {
        fs::write(path, &text).map_err(|e| io_err(path, e))?;
    }
    Ok(())
}

fn cmd_bench(a: &BenchArgs) -> Result<(), CliError> {
    let cfg = load_config(a.filter.config.as_deref())?;
    let (params, rescale) = a.filter.resolve(&cfg)?;
    let repeat = cfg.pick(a.repeat, "repeat", 3)?;
    let threads = match &a.threads {
        Some(t) => t.clone(),
        None => match cfg.get::<String>("threads")? {
            Some(s) => s
                .split(',')
                .map(|t| t.trim().parse())
                .collect::<Result<_, _>>()
                .map_err(|_| CliError::Usage(format!("config: invalid thread list `{s}`")))?,
            None => vec![1, 4],
        },
    };
    require_input(&a.input)?;
    let v = load_volume(&a.input)?;
    let report = run_bench(&v, &params, repeat, &threads, rescale)?;
    emit(&report)?;
    if let Some(path) = &a.output {
        let text = serde_json::to_string_pretty(&report)? + "\n";
        fs::write(path, text).map_err(|e| io_err(path, e))?;
    }
    Ok(())
}
