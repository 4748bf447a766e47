//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p usspeckle --test acceptance`. The process exits
//! nonzero if any criterion fails, except for a thread-scaling shortfall on
//! a machine with fewer logical CPUs than the check uses; that is still
//! printed as FAIL, with the reason.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use usspeckle::bench::median;
use usspeckle::{filter_obnlm, load_volume, save_volume, IoError};
use usspeckle_core::rng::philox4x64;
use usspeckle_core::{
    apply_speckle, filter_obnlm_reference, generate_phantom, mse, rescale_unit, smpi, volume_stats,
    warp_trilinear, Axis, DisplacementField, FilterMode, ObnlmParams, PhantomKind, PhantomSpec,
    SpeckleParams, Volume3D,
};

const ORACLE_TOL: f64 = 1e-5;
const ORACLE_FIXTURES: u64 = 20;
const CONSTANT_TOL: f64 = 1e-12;
const STD_RATIO_MAX: f64 = 0.5;
const MEAN_SHIFT_FRAC: f64 = 0.05;
const SMPI_MAX: f64 = 1.0;
const REGION_MEAN_FRAC: f64 = 0.05;
const EDGE_SHIFT_MAX: usize = 1;
const MOMENT_N: usize = 100_000;
const MOMENT_STD_FRAC: f64 = 0.05;
const METRIC_TOL: f64 = 1e-12;
const WARP_INT_MSE: f64 = 1e-10;
const WARP_HALF_TOL: f64 = 1e-6;
const SPEEDUP_MIN: f64 = 8.0;
const SCALING_MIN: f64 = 1.5;
const SCALING_THREADS: usize = 4;

struct Outcome {
    pass: bool,
    detail: String,
    /// Failure caused by the machine, not the code.
    hardware_limited: bool,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self {
            pass,
            detail,
            hardware_limited: false,
        }
    }
}

type Check = Result<Outcome, Box<dyn std::error::Error>>;
type Criterion = (&'static str, fn() -> Check);

fn uniform(seed: u64, i: u64) -> f64 {
    (philox4x64([i, 0, 0, 0], [seed, 0x5eed])[0] >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn random_volume(dims: [usize; 3], seed: u64) -> Volume3D {
    let mut i = 0;
    Volume3D::from_fn(dims, |_, _, _| {
        i += 1;
        uniform(seed, i)
    })
    .unwrap()
}

fn speckled(kind: PhantomKind, dims: [usize; 3], seed: u64) -> (Volume3D, Volume3D) {
    let clean = generate_phantom(&PhantomSpec { kind, dims }).unwrap();
    let noisy = apply_speckle(
        &clean,
        &SpeckleParams {
            gamma: 0.5,
            sigma: 0.2,
            seed,
        },
    )
    .unwrap();
    (clean, noisy)
}

fn rescaled_filter(v: &Volume3D, p: &ObnlmParams) -> Volume3D {
    let (unit, map) = rescale_unit(v).unwrap();
    map.invert(&filter_obnlm(&unit, p, 2).unwrap()).unwrap()
}

fn max_abs_diff(a: &Volume3D, b: &Volume3D) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn bitwise_eq(a: &Volume3D, b: &Volume3D) -> bool {
    a.data()
        .iter()
        .zip(b.data())
        .all(|(x, y)| x.to_bits() == y.to_bits())
}

fn with_mode(mode: FilterMode) -> ObnlmParams {
    ObnlmParams {
        mode,
        ..ObnlmParams::default()
    }
}

const MODES: [FilterMode; 2] = [FilterMode::Slice2d, FilterMode::Full3d];

fn oracle_equivalence() -> Check {
    let mut worst: f64 = 0.0;
    for seed in 0..ORACLE_FIXTURES {
        let v = random_volume([32, 32, 8], seed);
        for mode in MODES {
            let p = with_mode(mode);
            let d = max_abs_diff(&filter_obnlm(&v, &p, 2)?, &filter_obnlm_reference(&v, &p)?);
            worst = worst.max(d);
        }
    }
    Ok(Outcome::new(
        worst <= ORACLE_TOL,
        format!("max |optimized - reference| = {worst:.2e} over {ORACLE_FIXTURES} volumes x 2 modes (tol {ORACLE_TOL:e})"),
    ))
}

fn constant_preservation() -> Check {
    let mut worst: f64 = 0.0;
    for c in [0.0, 0.37, 1.0] {
        let v = Volume3D::filled([32, 32, 8], c)?;
        for mode in MODES {
            let p = with_mode(mode);
            for out in [filter_obnlm(&v, &p, 2)?, filter_obnlm_reference(&v, &p)?] {
                worst = worst.max(out.data().iter().map(|x| (x - c).abs()).fold(0.0, f64::max));
            }
        }
    }
    Ok(Outcome::new(
        worst <= CONSTANT_TOL,
        format!("max deviation {worst:.2e} (tol {CONSTANT_TOL:e}), both implementations and modes"),
    ))
}

fn speckle_suppression() -> Check {
    let (_, noisy) = speckled(PhantomKind::Constant { level: 0.5 }, [64, 64, 16], 1);
    let start = Instant::now();
    let out = rescaled_filter(&noisy, &ObnlmParams::default());
    let secs = start.elapsed().as_secs_f64();
    let (o, r) = (volume_stats(&noisy)?, volume_stats(&out)?);
    let ratio = r.std() / o.std();
    let shift = (r.mean - o.mean).abs();
    let s = smpi(&noisy, &out)?.smpi;
    let pass = ratio < STD_RATIO_MAX && shift < MEAN_SHIFT_FRAC * o.mean && s < SMPI_MAX;
    Ok(Outcome::new(
        pass,
        format!(
            "sigma_r/sigma_o = {ratio:.3} (< {STD_RATIO_MAX}), |mu_r - mu_o| = {shift:.4} (< {:.4}), SMPI = {s:.3} (< {SMPI_MAX}), {secs:.2} s",
            MEAN_SHIFT_FRAC * o.mean
        ),
    ))
}

/// Index `x` of the largest jump between consecutive x-planes of the
/// plane-mean profile.
fn max_gradient_plane(v: &Volume3D) -> usize {
    let [nx, ny, nz] = v.dims();
    let profile: Vec<f64> = (0..nx)
        .map(|i| {
            let mut s = 0.0;
            for k in 0..nz {
                for j in 0..ny {
                    s += v.get(i, j, k);
                }
            }
            s / (ny * nz) as f64
        })
        .collect();
    (0..nx - 1)
        .max_by(|&a, &b| {
            let ga = (profile[a + 1] - profile[a]).abs();
            let gb = (profile[b + 1] - profile[b]).abs();
            ga.total_cmp(&gb)
        })
        .unwrap_or(0)
}

fn edge_preservation() -> Check {
    let (low, high) = (0.25, 0.75);
    let kind = PhantomKind::TwoRegion {
        axis: Axis::X,
        split: 32,
        low,
        high,
    };
    let (clean, noisy) = speckled(kind, [64, 64, 16], 2);
    let edge = max_gradient_plane(&clean);
    let mut pass = true;
    let mut parts = Vec::new();
    for mode in MODES {
        let out = rescaled_filter(&noisy, &with_mode(mode));
        let (mut sl, mut sh, mut nl, mut nh) = (0.0, 0.0, 0usize, 0usize);
        for (idx, &x) in out.data().iter().enumerate() {
            if clean.data()[idx] == low {
                sl += x;
                nl += 1;
            } else {
                sh += x;
                nh += 1;
            }
        }
        let el = (sl / nl as f64 - low).abs() / low;
        let eh = (sh / nh as f64 - high).abs() / high;
        let plane = max_gradient_plane(&out);
        let ok = el <= REGION_MEAN_FRAC
            && eh <= REGION_MEAN_FRAC
            && plane.abs_diff(edge) <= EDGE_SHIFT_MAX;
        pass &= ok;
        parts.push(format!(
            "{mode:?}: region errors {:.1}%/{:.1}%, edge plane {plane} vs {edge}",
            100.0 * el,
            100.0 * eh
        ));
    }
    Ok(Outcome::new(pass, parts.join("; ")))
}

fn speckle_moments() -> Check {
    let dims = [50, 50, 40];
    assert_eq!(dims.iter().product::<usize>(), MOMENT_N);
    let n = MOMENT_N as f64;
    let (v, gamma, sigma) = (0.5f64, 0.5, 0.2);
    let clean = Volume3D::filled(dims, v)?;
    let s = volume_stats(&apply_speckle(
        &clean,
        &SpeckleParams {
            gamma,
            sigma,
            seed: 11,
        },
    )?)?;
    let expected_std = v.powf(gamma) * sigma;
    let mean_ok = (s.mean - v).abs() <= 3.0 * expected_std / n.sqrt();
    let std_ok = (s.std() - expected_std).abs() <= MOMENT_STD_FRAC * expected_std;

    // independent noise per level, so only the level can differ
    let stds: Vec<f64> = [(0.2, 12), (0.8, 13)]
        .iter()
        .map(|&(level, seed)| {
            let c = Volume3D::filled(dims, level).unwrap();
            let p = SpeckleParams {
                gamma: 0.0,
                sigma,
                seed,
            };
            volume_stats(&apply_speckle(&c, &p).unwrap()).unwrap().std()
        })
        .collect();
    let flat_ok = (stds[0] - stds[1]).abs() <= MOMENT_STD_FRAC * stds[1]
        && stds
            .iter()
            .all(|s| (s - sigma).abs() <= MOMENT_STD_FRAC * sigma);
    Ok(Outcome::new(
        mean_ok && std_ok && flat_ok,
        format!(
            "mean {:.5} (|err| <= {:.5}), std {:.5} vs {expected_std:.5}, gamma=0 std {:.5}/{:.5}",
            s.mean,
            3.0 * expected_std / n.sqrt(),
            s.std(),
            stds[0],
            stds[1]
        ),
    ))
}

fn row(values: &[f64]) -> Volume3D {
    Volume3D::from_data([values.len(), 1, 1], values.to_vec()).unwrap()
}

fn metric_exactness() -> Check {
    let o = row(&[0.0, 2.0, 0.0, 2.0]);
    let identity = smpi(&o, &o)?.smpi;
    let flat = smpi(&o, &row(&[1.0; 4]))?.smpi;
    let half = smpi(&o, &row(&[0.5, 1.5, 0.5, 1.5]))?.smpi;
    let smpi_ok = (identity - 1.0).abs() <= METRIC_TOL
        && flat.abs() <= METRIC_TOL
        && (half - 0.5).abs() <= METRIC_TOL;
    let a = row(&[1.0, 2.0, 3.0, 4.0]);
    let m_same = mse(&a, &a)?;
    let m = mse(&a, &row(&[1.0, 2.0, 3.0, 6.0]))?;
    let m2 = mse(&row(&[0.0, 0.0]), &row(&[1.0, 3.0]))?;
    let mse_ok = m_same == 0.0 && m == 1.0 && m2 == 5.0;
    Ok(Outcome::new(
        smpi_ok && mse_ok,
        format!("SMPI {identity} / {flat} / {half}; MSE {m_same} / {m} / {m2}"),
    ))
}

fn warp_correctness() -> Check {
    let dims = [12, 10, 8];
    let v = Volume3D::from_fn(dims, |i, j, k| {
        ((i * 7 + j * 3 + k * 5) % 11) as f64 * 0.1 + 0.05 * i as f64
    })?;
    let zero_ok = bitwise_eq(&warp_trilinear(&v, &DisplacementField::zeros(dims)?)?, &v);

    // sampling moving at x + (2, -1, 1) reproduces a direct shift on the interior
    let shift = [2isize, -1, 1];
    let warped = warp_trilinear(
        &v,
        &DisplacementField::uniform(dims, shift.map(|s| s as f64))?,
    )?;
    let mut sq = 0.0;
    let mut count = 0usize;
    for k in 1..dims[2] - 1 {
        for j in 1..dims[1] - 1 {
            for i in 0..dims[0] - 2 {
                let src = [
                    i as isize + shift[0],
                    j as isize + shift[1],
                    k as isize + shift[2],
                ];
                let d =
                    warped.get(i, j, k) - v.get(src[0] as usize, src[1] as usize, src[2] as usize);
                sq += d * d;
                count += 1;
            }
        }
    }
    let int_mse = sq / count as f64;

    let ramp = Volume3D::from_fn(dims, |i, j, k| {
        0.3 * i as f64 - 0.2 * j as f64 + 0.1 * k as f64 + 1.0
    })?;
    let half = warp_trilinear(&ramp, &DisplacementField::uniform(dims, [0.5, -0.5, 0.5])?)?;
    let mut half_err: f64 = 0.0;
    for k in 0..dims[2] - 1 {
        for j in 1..dims[1] {
            for i in 0..dims[0] - 1 {
                let expect =
                    0.3 * (i as f64 + 0.5) - 0.2 * (j as f64 - 0.5) + 0.1 * (k as f64 + 0.5) + 1.0;
                half_err = half_err.max((half.get(i, j, k) - expect).abs());
            }
        }
    }
    Ok(Outcome::new(
        zero_ok && int_mse <= WARP_INT_MSE && half_err <= WARP_HALF_TOL,
        format!("zero field bitwise {zero_ok}, integer-shift MSE {int_mse:.2e}, half-voxel max error {half_err:.2e}"),
    ))
}

fn time_median(runs: usize, mut f: impl FnMut()) -> f64 {
    let times: Vec<f64> = (0..runs)
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed().as_secs_f64()
        })
        .collect();
    median(&times)
}

fn performance() -> Check {
    let v = random_volume([128, 128, 32], 99);
    let p = ObnlmParams {
        block_radius: 1,
        search_radius: 3,
        block_step: 1,
        ..ObnlmParams::default()
    };
    let reference = time_median(1, || {
        filter_obnlm_reference(&v, &p).unwrap();
    });
    let t1 = time_median(3, || {
        filter_obnlm(&v, &p, 1).unwrap();
    });
    let tn = time_median(3, || {
        filter_obnlm(&v, &p, SCALING_THREADS).unwrap();
    });
    let speedup = reference / t1;
    let scaling = t1 / tn;
    let cpus = std::thread::available_parallelism().map_or(1, |n| n.get());
    let speed_ok = speedup >= SPEEDUP_MIN;
    let scale_ok = scaling >= SCALING_MIN;
    let mut detail = format!(
        "reference {reference:.2} s, optimized {t1:.3} s (1 thread) / {tn:.3} s ({SCALING_THREADS} threads); \
         speedup {speedup:.1}x (>= {SPEEDUP_MIN}x), {SCALING_THREADS}-thread scaling {scaling:.2}x (>= {SCALING_MIN}x)"
    );
    let hardware_limited = speed_ok && !scale_ok && cpus < SCALING_THREADS;
    if hardware_limited {
        detail.push_str(&format!(
            "; scaling unattainable: {cpus} logical CPU(s) available"
        ));
    }
    Ok(Outcome {
        pass: speed_ok && scale_ok,
        detail,
        hardware_limited,
    })
}

fn run_synth(dir: &Path) -> Result<(), Box<dyn std::error::Error>> {
    let status = Command::new(env!("CARGO_BIN_EXE_usspeckle"))
        .args([
            "synth",
            "--kind",
            "two-region",
            "--dims",
            "32",
            "32",
            "8",
            "--seed",
            "7",
            "-o",
        ])
        .arg(dir)
        .output()?
        .status;
    if !status.success() {
        return Err(format!("synth exited with {status}").into());
    }
    Ok(())
}

fn determinism() -> Check {
    let (_, noisy) = speckled(PhantomKind::Constant { level: 0.5 }, [64, 48, 12], 4);
    let (unit, _) = rescale_unit(&noisy)?;
    let mut filter_ok = true;
    for mode in MODES {
        let p = with_mode(mode);
        let base = filter_obnlm(&unit, &p, 1)?;
        for t in [2, 8] {
            filter_ok &= bitwise_eq(&base, &filter_obnlm(&unit, &p, t)?);
        }
    }
    let tmp = tempfile::tempdir()?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_synth(&a)?;
    run_synth(&b)?;
    let mut synth_ok = true;
    for f in [
        "clean.raw",
        "speckled.raw",
        "clean.mhd",
        "speckled.mhd",
        "params.json",
    ] {
        synth_ok &= fs::read(a.join(f))? == fs::read(b.join(f))?;
    }
    Ok(Outcome::new(
        filter_ok && synth_ok,
        format!("filter bitwise equal for threads {{1, 2, 8}} in both modes: {filter_ok}; repeated synth identical: {synth_ok}"),
    ))
}

fn exit_code(args: &[&str], dir: &Path) -> Option<i32> {
    Command::new(env!("CARGO_BIN_EXE_usspeckle"))
        .args(args)
        .current_dir(dir)
        .output()
        .ok()?
        .status
        .code()
}

fn io_round_trip() -> Check {
    let tmp = tempfile::tempdir()?;
    let d = tmp.path();
    let mut exact = true;
    for (n, dims) in [[1, 1, 1], [7, 5, 3], [16, 9, 4]].into_iter().enumerate() {
        let mut i = 0u64;
        let v = Volume3D::from_fn(dims, |_, _, _| loop {
            i += 1;
            let x = f32::from_bits(philox4x64([i, 0, 0, 0], [n as u64, 1])[0] as u32);
            if x.is_finite() {
                return f64::from(x);
            }
        })?
        .with_spacing([0.5, 0.75, 1.25])?;
        let p = d.join(format!("v{n}.mhd"));
        save_volume(&v, &p)?;
        let back = load_volume(&p)?;
        exact &= back.dims() == v.dims() && back.spacing() == v.spacing() && bitwise_eq(&back, &v);
    }

    let header = |ty: &str, dims: &str, raw: &str| {
        format!("NDims = 3\nDimSize = {dims}\nElementType = {ty}\nElementDataFile = {raw}\n")
    };
    fs::write(d.join("p.raw"), [0u8; 16])?;
    let cases = [
        (
            "malformed.mhd",
            "NDims = 3\nDimSize = 2 2\nElementType = MET_FLOAT\nElementDataFile = p.raw\n"
                .to_string(),
            3,
        ),
        ("short.mhd", header("MET_FLOAT", "2 2 2", "p.raw"), 3),
        ("type.mhd", header("MET_SHORT", "2 2 1", "p.raw"), 3),
        ("noraw.mhd", header("MET_FLOAT", "2 2 1", "absent.raw"), 4),
    ];
    let mut kinds = Vec::new();
    let mut codes_ok = true;
    for (name, text, code) in &cases {
        fs::write(d.join(name), text)?;
        let kind = match load_volume(d.join(name)) {
            Err(IoError::MalformedHeader(_)) => "malformed header",
            Err(IoError::PayloadSizeMismatch { .. }) => "payload size mismatch",
            Err(IoError::UnsupportedElementType(_)) => "unsupported element type",
            Err(IoError::Io { .. }) => "io",
            _ => "unexpected",
        };
        kinds.push(kind);
        codes_ok &= exit_code(&["despeckle", name, "-o", "out.mhd"], d) == Some(*code);
    }
    let distinct = kinds
        == [
            "malformed header",
            "payload size mismatch",
            "unsupported element type",
            "io",
        ];
    codes_ok &= exit_code(&["despeckle", "missing.mhd", "-o", "out.mhd"], d) == Some(2);
    Ok(Outcome::new(
        exact && distinct && codes_ok,
        format!("bit-exact float round trip: {exact}; errors {kinds:?}; exit codes as specified: {codes_ok}"),
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("oracle equivalence", oracle_equivalence),
        ("constant preservation", constant_preservation),
        ("speckle suppression", speckle_suppression),
        ("edge preservation", edge_preservation),
        ("speckle model moments", speckle_moments),
        ("metric exactness", metric_exactness),
        ("warp correctness", warp_correctness),
        ("performance", performance),
        ("determinism", determinism),
        ("I/O round trip", io_round_trip),
    ];
    let mut failed = Vec::new();
    let mut hardware = Vec::new();
    for (n, (name, check)) in criteria.iter().enumerate() {
        let n = n + 1;
        let outcome = check().unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {n:>2} [{verdict}] {name}: {}", outcome.detail);
        if !outcome.pass {
            if outcome.hardware_limited {
                hardware.push(n);
            } else {
                failed.push(n);
            }
        }
    }
    let passed = criteria.len() - failed.len() - hardware.len();
    println!(
        "{passed}/{} criteria passed; failed: {failed:?}; failed for lack of hardware: {hardware:?}",
        criteria.len()
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
