//! Intensity normalization, cropping and mirror padding.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::stats::volume_stats;
use crate::volume::Volume3D;

/// Mean-centers and std-normalizes `v` with its full-volume statistics, then
/// keeps the centered `crop_dims` sub-volume (offset `(n - c) / 2` per axis).
pub fn preprocess(v: &Volume3D, crop_dims: [usize; 3]) -> Result<Volume3D> {
    let offset = center_offset(v.dims(), crop_dims)?;
    let stats = volume_stats(v)?;
    let std = stats.std();
    if std <= 0.0 {
        return Err(Error::DegenerateVolume);
    }
    let cropped = crop(v, offset, crop_dims)?;
    cropped.map(|x| (x - stats.mean) / std)
}

fn center_offset(dims: [usize; 3], crop_dims: [usize; 3]) -> Result<[usize; 3]> {
    if crop_dims.contains(&0) {
        return Err(Error::InvalidDimensions(alloc::format!(
            "crop {crop_dims:?} must be positive on every axis"
        )));
    }
    if (0..3).any(|a| crop_dims[a] > dims[a]) {
        return Err(Error::CropTooLarge {
            crop: crop_dims,
            dims,
        });
    }
    Ok(core::array::from_fn(|a| (dims[a] - crop_dims[a]) / 2))
}

/// Extracts the box starting at `offset` with extent `dims`.
pub fn crop(v: &Volume3D, offset: [usize; 3], dims: [usize; 3]) -> Result<Volume3D> {
    let src = v.dims();
    if dims.contains(&0) {
        return Err(Error::InvalidDimensions(alloc::format!(
            "crop {dims:?} must be positive on every axis"
        )));
    }
    if (0..3).any(|a| offset[a] + dims[a] > src[a]) {
        return Err(Error::CropTooLarge {
            crop: dims,
            dims: src,
        });
    }
    let mut data = Vec::with_capacity(dims.iter().product());
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            let start = v.index(offset[0], offset[1] + j, offset[2] + k);
            data.extend_from_slice(&v.data()[start..start + dims[0]]);
        }
    }
    Ok(Volume3D::from_parts_unchecked(dims, v.spacing(), data))
}

/// Affine map between a volume's intensity range and `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitRescale {
    pub min: f64,
    pub max: f64,
}

impl UnitRescale {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && max > min) {
            return Err(Error::DegenerateVolume);
        }
        Ok(Self { min, max })
    }

    #[inline]
    pub fn forward(&self, x: f64) -> f64 {
        (x - self.min) / (self.max - self.min)
    }

    #[inline]
    pub fn inverse(&self, y: f64) -> f64 {
        self.min + y * (self.max - self.min)
    }

    pub fn apply(&self, v: &Volume3D) -> Result<Volume3D> {
        v.map(|x| self.forward(x))
    }

    pub fn invert(&self, v: &Volume3D) -> Result<Volume3D> {
        v.map(|y| self.inverse(y))
    }
}

/// Maps `v` onto `[0, 1]`; the returned map inverts the transform.
pub fn rescale_unit(v: &Volume3D) -> Result<(Volume3D, UnitRescale)> {
    let stats = volume_stats(v)?;
    let map = UnitRescale::new(stats.min, stats.max)?;
    Ok((map.apply(v)?, map))
}

/// Reflects `i` into `0..n` without repeating the edge sample; repeats the
/// reflection for offsets wider than the axis.
#[inline]
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// Mirror padding that accepts any width.
pub(crate) fn pad_reflect(v: &Volume3D, pad: [usize; 3]) -> Volume3D {
    let [nx, ny, nz] = v.dims();
    let out_dims = [nx + 2 * pad[0], ny + 2 * pad[1], nz + 2 * pad[2]];
    let xs: Vec<usize> = (0..out_dims[0])
        .map(|i| reflect(i as isize - pad[0] as isize, nx))
        .collect();
    let mut data = Vec::with_capacity(out_dims.iter().product());
    for k in 0..out_dims[2] {
        let sk = reflect(k as isize - pad[2] as isize, nz);
        for j in 0..out_dims[1] {
            let sj = reflect(j as isize - pad[1] as isize, ny);
            let row = v.index(0, sj, sk);
            data.extend(xs.iter().map(|&si| v.data()[row + si]));
        }
    }
    Volume3D::from_parts_unchecked(out_dims, v.spacing(), data)
}

/// Grows every axis by `2 * r`, mirroring across the border without repeating
/// the edge voxel (index -1 reads index 1). Requires `r < dims` per axis.
pub fn pad_mirror(v: &Volume3D, r: [usize; 3]) -> Result<Volume3D> {
    let dims = v.dims();
    if (0..3).any(|a| r[a] >= dims[a] && r[a] > 0) {
        return Err(Error::PadTooLarge { pad: r, dims });
    }
    Ok(pad_reflect(v, r))
}
