//! Despeckling quality and registration similarity.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::stats::volume_stats;
use crate::volume::{check_dims, Volume3D};

/// Speckle suppression and mean preservation index.
///
/// `var_o`/`var_r` are population variances; the index uses their square
/// roots. Lower is better: 1 for the identity filter, 0 for a filter that
/// flattens everything to the original mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmpiReport {
    pub mu_o: f64,
    pub mu_r: f64,
    pub var_o: f64,
    pub var_r: f64,
    pub q: f64,
    pub smpi: f64,
}

pub fn smpi(original: &Volume3D, filtered: &Volume3D) -> Result<SmpiReport> {
    original.ensure_same_dims(filtered)?;
    let o = volume_stats(original)?;
    let r = volume_stats(filtered)?;
    if o.variance <= 0.0 {
        return Err(Error::DegenerateOriginal);
    }
    let q = 1.0 + (r.mean - o.mean).abs();
    Ok(SmpiReport {
        mu_o: o.mean,
        mu_r: r.mean,
        var_o: o.variance,
        var_r: r.variance,
        q,
        smpi: q * libm::sqrt(r.variance) / libm::sqrt(o.variance),
    })
}

/// Mean squared voxel difference.
pub fn mse(a: &Volume3D, b: &Volume3D) -> Result<f64> {
    a.ensure_same_dims(b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.len() as f64)
}

/// Per-voxel displacement `(dx, dy, dz)` in voxel units, same memory order as
/// [`Volume3D`].
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    dims: [usize; 3],
    vectors: Vec<[f64; 3]>,
}

impl DisplacementField {
    pub fn new(dims: [usize; 3], vectors: Vec<[f64; 3]>) -> Result<Self> {
        let n = check_dims(dims)?;
        if vectors.len() != n {
            return Err(Error::DataLength {
                expected: n,
                actual: vectors.len(),
            });
        }
        if let Some(i) = vectors
            .iter()
            .position(|v| v.iter().any(|c| !c.is_finite()))
        {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { dims, vectors })
    }

    pub fn zeros(dims: [usize; 3]) -> Result<Self> {
        Self::uniform(dims, [0.0; 3])
    }

    pub fn uniform(dims: [usize; 3], d: [f64; 3]) -> Result<Self> {
        let n = check_dims(dims)?;
        Self::new(dims, alloc::vec![d; n])
    }

    /// Evaluates `f(i, j, k)` in memory order.
    pub fn from_fn(
        dims: [usize; 3],
        mut f: impl FnMut(usize, usize, usize) -> [f64; 3],
    ) -> Result<Self> {
        let n = check_dims(dims)?;
        let mut vectors = Vec::with_capacity(n);
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    vectors.push(f(i, j, k));
                }
            }
        }
        Self::new(dims, vectors)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn vectors(&self) -> &[[f64; 3]] {
        &self.vectors
    }
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + t * (b - a)
}

/// Samples `moving` at `x + field(x)` with trilinear interpolation. Sample
/// positions outside the grid are clamped to the nearest edge voxel.
pub fn warp_trilinear(moving: &Volume3D, field: &DisplacementField) -> Result<Volume3D> {
    let dims = moving.dims();
    if field.dims != dims {
        return Err(Error::DimensionMismatch {
            left: dims,
            right: field.dims,
        });
    }
    let mut data = Vec::with_capacity(moving.len());
    for (idx, d) in field.vectors.iter().enumerate() {
        let (i, j, k) = moving.coords(idx);
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        let mut t = [0.0; 3];
        for (a, p) in [i, j, k].into_iter().enumerate() {
            let max = (dims[a] - 1) as f64;
            let x = (p as f64 + d[a]).clamp(0.0, max);
            let f = libm::floor(x);
            lo[a] = f as usize;
            hi[a] = (lo[a] + 1).min(dims[a] - 1);
            t[a] = x - f;
        }
        let g = |x: usize, y: usize, z: usize| moving.get(x, y, z);
        let c00 = lerp(g(lo[0], lo[1], lo[2]), g(hi[0], lo[1], lo[2]), t[0]);
        let c10 = lerp(g(lo[0], hi[1], lo[2]), g(hi[0], hi[1], lo[2]), t[0]);
        let c01 = lerp(g(lo[0], lo[1], hi[2]), g(hi[0], lo[1], hi[2]), t[0]);
        let c11 = lerp(g(lo[0], hi[1], hi[2]), g(hi[0], hi[1], hi[2]), t[0]);
        let c0 = lerp(c00, c10, t[1]);
        let c1 = lerp(c01, c11, t[1]);
        data.push(lerp(c0, c1, t[2]));
    }
    Volume3D::new(dims, moving.spacing(), data)
}
