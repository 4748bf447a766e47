//! Tiled evaluation of the blockwise filter.
//!
//! The filter output can be rewritten offset by offset. For a displacement
//! `D` between a block and its candidate, let
//!
//! ```text
//! e_D(x) = (u(x) - u(x + D))^2 / max(u(x + D)^(2 gamma), eps)
//! ```
//!
//! The distance for centre `i` is the box sum of `e_D` over the block around
//! `i`, and with `a_D(i) = w_D(i) / W(i)` the output is
//!
//! ```text
//! out(x) = 1 / cover(x) * sum_D u(x + D) * sum_{centres i covering x} a_D(i)
//! ```
//!
//! which is a second box sum. Each output tile evaluates every centre that
//! can cover it (the tile plus a one-block halo): a first sweep over the
//! offsets stores the weights and their totals, a second sweep aggregates.
//! Box sums are separable with a fixed left-to-right summation order, so a
//! centre's weights come out bitwise identical whichever tile computes them,
//! and the result does not depend on how tiles are scheduled.

use alloc::vec;
use alloc::vec::Vec;

use super::{FilterMode, Geometry, ObnlmParams};
use crate::error::Result;
use crate::preprocess::pad_reflect;
use crate::volume::Volume3D;

const TILE_3D: [usize; 3] = [64, 16, 8];
const TILE_2D: [usize; 3] = [128, 16, 1];

/// Axis-aligned box of output voxels, in unpadded coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tile {
    pub origin: [usize; 3],
    pub size: [usize; 3],
}

impl Tile {
    pub fn len(&self) -> usize {
        self.size.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Precomputed state for one filter run: padded input, reciprocal
/// denominators and the tile decomposition.
///
/// [`ObnlmPlan::restore`] filters one tile; tiles are independent and can be
/// processed on any number of threads.
#[derive(Debug, Clone)]
pub struct ObnlmPlan {
    geom: Geometry,
    spacing: [f64; 3],
    pdims: [usize; 3],
    padded: Vec<f64>,
    recip: Vec<f64>,
    offsets: Vec<isize>,
    neg_inv_h2: f64,
    is_center: [Vec<bool>; 3],
    cover: [Vec<u32>; 3],
    tiles: Vec<Tile>,
}

impl ObnlmPlan {
    pub fn new(v: &Volume3D, p: &ObnlmParams) -> Result<Self> {
        let geom = Geometry::new(v, p)?;
        let padded_vol = pad_reflect(v, geom.pad);
        let pdims = padded_vol.dims();
        let padded = padded_vol.into_data();
        let two_gamma = 2.0 * p.gamma;
        let recip = padded
            .iter()
            .map(|&u| 1.0 / libm::pow(u, two_gamma).max(p.eps))
            .collect();
        let offsets = geom
            .offsets()
            .iter()
            .map(|o| o[0] + pdims[0] as isize * (o[1] + pdims[1] as isize * o[2]))
            .collect();

        let dims = geom.dims;
        let is_center = core::array::from_fn(|a| {
            let mut m = vec![false; dims[a]];
            geom.centers[a].iter().for_each(|&c| m[c] = true);
            m
        });
        let cover = core::array::from_fn(|a| {
            let r = geom.block[a];
            (0..dims[a])
                .map(|x| {
                    geom.centers[a]
                        .iter()
                        .filter(|&&c| c + r >= x && c <= x + r)
                        .count() as u32
                })
                .collect()
        });

        let tile = match p.mode {
            FilterMode::Slice2d => TILE_2D,
            FilterMode::Full3d => TILE_3D,
        };
        let mut tiles = Vec::new();
        for z in (0..dims[2]).step_by(tile[2]) {
            for y in (0..dims[1]).step_by(tile[1]) {
                for x in (0..dims[0]).step_by(tile[0]) {
                    let origin = [x, y, z];
                    let size = core::array::from_fn(|a| tile[a].min(dims[a] - origin[a]));
                    tiles.push(Tile { origin, size });
                }
            }
        }

        Ok(Self {
            spacing: v.spacing(),
            pdims,
            padded,
            recip,
            offsets,
            neg_inv_h2: -1.0 / (p.h * p.h),
            is_center,
            cover,
            tiles,
            geom,
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.geom.dims
    }

    pub fn tiles(&self) -> &[Tile] {
        &self.tiles
    }

    #[inline]
    fn pindex(&self, x: [usize; 3]) -> usize {
        x[0] + self.pdims[0] * (x[1] + self.pdims[1] * x[2])
    }

    /// Fills `e` with the per-voxel distance terms for offset `off` over the
    /// padded box at `origin` with extent `size`.
    fn distance_terms(&self, origin: [usize; 3], size: [usize; 3], off: isize, e: &mut Vec<f64>) {
        e.clear();
        for z in 0..size[2] {
            for y in 0..size[1] {
                let base = self.pindex([origin[0], origin[1] + y, origin[2] + z]);
                let shifted = (base as isize + off) as usize;
                let a = &self.padded[base..base + size[0]];
                let b = &self.padded[shifted..shifted + size[0]];
                let rd = &self.recip[shifted..shifted + size[0]];
                e.extend(
                    a.iter()
                        .zip(b)
                        .zip(rd)
                        .map(|((&a, &b), &r)| (a - b) * (a - b) * r),
                );
            }
        }
    }

    /// Filtered values for `tile`, in memory order over the tile.
    pub fn restore(&self, tile: &Tile) -> Vec<f64> {
        let dims = self.geom.dims;
        let r = self.geom.block;
        let pad = self.geom.pad;
        let o = tile.origin;
        let s = tile.size;

        // centres that can cover the tile, clipped to the volume
        let c0: [usize; 3] = core::array::from_fn(|a| o[a].saturating_sub(r[a]));
        let c1: [usize; 3] = core::array::from_fn(|a| (o[a] + s[a] + r[a]).min(dims[a]));
        let cs: [usize; 3] = core::array::from_fn(|a| c1[a] - c0[a]);
        let clen: usize = cs.iter().product();
        let e_origin = core::array::from_fn(|a| c0[a] + pad[a] - r[a]);
        let e_size = core::array::from_fn(|a| cs[a] + 2 * r[a]);
        // 1 at centres, 0 elsewhere
        let mask: Vec<f64> = (0..clen)
            .map(|q| {
                let (x, y, z) = (q % cs[0], (q / cs[0]) % cs[1], q / (cs[0] * cs[1]));
                let c = self.is_center[0][c0[0] + x]
                    && self.is_center[1][c0[1] + y]
                    && self.is_center[2][c0[2] + z];
                if c {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();

        let (mut buf, mut tmp) = (Vec::new(), Vec::new());
        let mut weights = Vec::with_capacity(clen * self.offsets.len());
        let mut totals = vec![0.0; clen];
        for &off in &self.offsets {
            self.distance_terms(e_origin, e_size, off, &mut buf);
            box_sum(&mut buf, &mut tmp, e_size, r);
            let start = weights.len();
            weights.extend(
                buf.iter()
                    .zip(&mask)
                    .map(|(&d, &m)| m * exp_nonpositive(d * self.neg_inv_h2)),
            );
            for (t, &w) in totals.iter_mut().zip(&weights[start..]) {
                *t += w;
            }
        }
        // non-centres keep a zero reciprocal, which masks them out below
        let inv_totals: Vec<f64> = totals
            .iter()
            .map(|&t| if t > 0.0 { 1.0 / t } else { 0.0 })
            .collect();

        // weight buffer over the tile plus an unclipped halo
        let hs: [usize; 3] = core::array::from_fn(|a| s[a] + 2 * r[a]);
        let shift: [usize; 3] = core::array::from_fn(|a| c0[a] + r[a] - o[a]);
        let hlen: usize = hs.iter().product();
        let mut num = vec![0.0; tile.len()];
        let mut halo = vec![0.0; hlen];
        for (t, &off) in self.offsets.iter().enumerate() {
            halo.clear();
            halo.resize(hlen, 0.0);
            let w = &weights[t * clen..(t + 1) * clen];
            for z in 0..cs[2] {
                for y in 0..cs[1] {
                    let src = cs[0] * (y + cs[1] * z);
                    let dst = shift[0] + hs[0] * (y + shift[1] + hs[1] * (z + shift[2]));
                    let row = &mut halo[dst..dst + cs[0]];
                    let (w, inv) = (&w[src..src + cs[0]], &inv_totals[src..src + cs[0]]);
                    for ((h, &w), &i) in row.iter_mut().zip(w).zip(inv) {
                        *h = w * i;
                    }
                }
            }
            box_sum(&mut halo, &mut tmp, hs, r);
            for z in 0..s[2] {
                for y in 0..s[1] {
                    let row = s[0] * (y + s[1] * z);
                    let p = self.pindex([o[0] + pad[0], o[1] + pad[1] + y, o[2] + pad[2] + z]);
                    let u = &self.padded[(p as isize + off) as usize..][..s[0]];
                    for ((n, &a), &u) in num[row..row + s[0]].iter_mut().zip(&halo[row..]).zip(u) {
                        *n += a * u;
                    }
                }
            }
        }

        for z in 0..s[2] {
            for y in 0..s[1] {
                let cyz = self.cover[1][o[1] + y] * self.cover[2][o[2] + z];
                let row = s[0] * (y + s[1] * z);
                for x in 0..s[0] {
                    num[row + x] /= f64::from(cyz * self.cover[0][o[0] + x]);
                }
            }
        }
        num
    }

    /// Copies tile-ordered `values` into the full-volume array `dest`.
    pub fn scatter(&self, tile: &Tile, values: &[f64], dest: &mut [f64]) {
        let dims = self.geom.dims;
        let [sx, sy, sz] = tile.size;
        let o = tile.origin;
        for z in 0..sz {
            for y in 0..sy {
                let d = o[0] + dims[0] * (o[1] + y + dims[1] * (o[2] + z));
                let src = sx * (y + sy * z);
                dest[d..d + sx].copy_from_slice(&values[src..src + sx]);
            }
        }
    }

    pub fn into_volume(&self, data: Vec<f64>) -> Result<Volume3D> {
        Volume3D::new(self.geom.dims, self.spacing, data)
    }
}

/// `exp(x)` for `x <= 0`, branch-free so the weight loop vectorizes.
///
/// Cody-Waite reduction to `r` in `[-ln2/2, ln2/2]` and a degree-11 Taylor
/// polynomial; relative error below 1e-14. Inputs under -708 are clamped,
/// which returns about 3e-308 instead of a smaller subnormal or zero.
#[inline(always)]
pub(crate) fn exp_nonpositive(x: f64) -> f64 {
    const LOG2E: f64 = core::f64::consts::LOG2_E;
    const LN2_HI: f64 = 6.931_471_803_691_238e-1;
    const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;
    // 1.5 * 2^52: adding it rounds to an integer held in the low mantissa bits
    const SHIFTER: f64 = 6_755_399_441_055_744.0;
    let x = x.max(-708.0);
    let t = x * LOG2E + SHIFTER;
    let k = t - SHIFTER;
    let r = (x - k * LN2_HI) - k * LN2_LO;
    let mut p = 1.0 / 39_916_800.0;
    p = p * r + 1.0 / 3_628_800.0;
    p = p * r + 1.0 / 362_880.0;
    p = p * r + 1.0 / 40_320.0;
    p = p * r + 1.0 / 5_040.0;
    p = p * r + 1.0 / 720.0;
    p = p * r + 1.0 / 120.0;
    p = p * r + 1.0 / 24.0;
    p = p * r + 1.0 / 6.0;
    p = p * r + 0.5;
    p = p * r + 1.0;
    p = p * r + 1.0;
    let scale = f64::from_bits((t.to_bits() << 52).wrapping_add(1023 << 52));
    p * scale
}

/// Separable valid-mode box sum with half-widths `r`; `buf` holds a box of
/// extent `dims` on entry and the shrunken result on exit.
fn box_sum(buf: &mut Vec<f64>, tmp: &mut Vec<f64>, dims: [usize; 3], r: [usize; 3]) {
    let mut d = dims;
    if r[0] > 0 {
        let w = 2 * r[0];
        let ox = d[0] - w;
        tmp.clear();
        for row in buf.chunks_exact(d[0]) {
            let start = tmp.len();
            tmp.extend_from_slice(&row[..ox]);
            let out = &mut tmp[start..];
            for k in 1..=w {
                out.iter_mut()
                    .zip(&row[k..k + ox])
                    .for_each(|(o, &v)| *o += v);
            }
        }
        d[0] = ox;
        core::mem::swap(buf, tmp);
    }
    for axis in [1, 2] {
        if r[axis] == 0 {
            continue;
        }
        let w = 2 * r[axis];
        // stride between consecutive samples along `axis`, and number of
        // independent lines stacked above it
        let (stride, outer) = if axis == 1 {
            (d[0], d[2])
        } else {
            (d[0] * d[1], 1)
        };
        let len = d[axis];
        let out_len = len - w;
        tmp.clear();
        tmp.resize(stride * out_len * outer, 0.0);
        for g in 0..outer {
            let src = &buf[g * stride * len..(g + 1) * stride * len];
            let dst = &mut tmp[g * stride * out_len..(g + 1) * stride * out_len];
            for q in 0..out_len {
                let out = &mut dst[q * stride..(q + 1) * stride];
                out.copy_from_slice(&src[q * stride..(q + 1) * stride]);
                for k in 1..=w {
                    let line = &src[(q + k) * stride..(q + k + 1) * stride];
                    out.iter_mut().zip(line).for_each(|(o, &v)| *o += v);
                }
            }
        }
        d[axis] = out_len;
        core::mem::swap(buf, tmp);
    }
}

/// Single-threaded driver over [`ObnlmPlan`].
pub fn filter_obnlm_tiled(v: &Volume3D, p: &ObnlmParams) -> Result<Volume3D> {
    let plan = ObnlmPlan::new(v, p)?;
    let mut out = vec![0.0; v.len()];
    for tile in plan.tiles() {
        let t = plan.restore(tile);
        plan.scatter(tile, &t, &mut out);
    }
    plan.into_volume(out)
}
