//! Noise-free synthetic volumes with known structure.

use alloc::format;

use crate::error::{Error, Result};
use crate::volume::{check_dims, Axis, Volume3D};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhantomKind {
    Constant {
        level: f64,
    },
    /// Voxels with coordinate `< split` along `axis` get `low`, the rest `high`.
    TwoRegion {
        axis: Axis,
        split: usize,
        low: f64,
        high: f64,
    },
    /// Voxels strictly closer than `radius` to `center` (voxel units) get
    /// `inclusion`; a zero radius leaves only background.
    SphericalInclusion {
        center: [f64; 3],
        radius: f64,
        background: f64,
        inclusion: f64,
    },
    /// Linear ramp from `start` at index 0 to `end` at the last index.
    AxialGradient {
        axis: Axis,
        start: f64,
        end: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhantomSpec {
    pub kind: PhantomKind,
    pub dims: [usize; 3],
}

fn check_level(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidPhantom(format!(
            "{name} level {x} outside [0, 1]"
        )));
    }
    Ok(())
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        check_dims(self.dims)?;
        match self.kind {
            PhantomKind::Constant { level } => check_level("constant", level),
            PhantomKind::TwoRegion {
                axis,
                split,
                low,
                high,
            } => {
                check_level("low", low)?;
                check_level("high", high)?;
                let n = self.dims[axis.index()];
                if split > n {
                    return Err(Error::InvalidPhantom(format!(
                        "split {split} outside axis of length {n}"
                    )));
                }
                Ok(())
            }
            PhantomKind::SphericalInclusion {
                center,
                radius,
                background,
                inclusion,
            } => {
                check_level("background", background)?;
                check_level("inclusion", inclusion)?;
                if !(radius.is_finite() && radius >= 0.0) {
                    return Err(Error::InvalidPhantom(format!(
                        "radius {radius} must be >= 0"
                    )));
                }
                for a in 0..3 {
                    let hi = (self.dims[a] - 1) as f64;
                    if !(center[a] - radius >= 0.0 && center[a] + radius <= hi) {
                        return Err(Error::InvalidPhantom(format!(
                            "sphere at {center:?} with radius {radius} does not fit in {:?}",
                            self.dims
                        )));
                    }
                }
                Ok(())
            }
            PhantomKind::AxialGradient { start, end, .. } => {
                check_level("start", start)?;
                check_level("end", end)
            }
        }
    }
}

pub fn generate_phantom(spec: &PhantomSpec) -> Result<Volume3D> {
    spec.validate()?;
    match spec.kind {
        PhantomKind::Constant { level } => Volume3D::filled(spec.dims, level),
        PhantomKind::TwoRegion {
            axis,
            split,
            low,
            high,
        } => Volume3D::from_fn(spec.dims, |i, j, k| {
            if [i, j, k][axis.index()] < split {
                low
            } else {
                high
            }
        }),
        PhantomKind::SphericalInclusion {
            center,
            radius,
            background,
            inclusion,
        } => Volume3D::from_fn(spec.dims, |i, j, k| {
            let d2: f64 = [i, j, k]
                .iter()
                .zip(center)
                .map(|(&p, c)| (p as f64 - c) * (p as f64 - c))
                .sum();
            if d2 < radius * radius {
                inclusion
            } else {
                background
            }
        }),
        PhantomKind::AxialGradient { axis, start, end } => {
            let n = spec.dims[axis.index()];
            Volume3D::from_fn(spec.dims, |i, j, k| {
                if n == 1 {
                    return start;
                }
                let t = [i, j, k][axis.index()] as f64 / (n - 1) as f64;
                start + t * (end - start)
            })
        }
    }
}
