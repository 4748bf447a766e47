use alloc::vec;
use alloc::vec::Vec;

use super::{block_weight, pearson_distance, Geometry, ObnlmParams};
use crate::error::Result;
use crate::preprocess::pad_reflect;
use crate::volume::Volume3D;

/// Copies the block of half-widths `r` centred at padded coordinate `c`.
fn gather(padded: &Volume3D, c: [usize; 3], r: [usize; 3], out: &mut Vec<f64>) {
    out.clear();
    for z in c[2] - r[2]..=c[2] + r[2] {
        for y in c[1] - r[1]..=c[1] + r[1] {
            let row = padded.index(0, y, z);
            out.extend_from_slice(&padded.data()[row + c[0] - r[0]..=row + c[0] + r[0]]);
        }
    }
}

/// Literal evaluation of the blockwise filter, one centre at a time.
///
/// Slow by construction: every candidate block is copied out and its
/// distance recomputed from scratch, including the denominator powers.
pub fn filter_obnlm_reference(v: &Volume3D, p: &ObnlmParams) -> Result<Volume3D> {
    let g = Geometry::new(v, p)?;
    let padded = pad_reflect(v, g.pad);
    let offsets = g.offsets();
    let r = g.block;
    let dims = g.dims;

    let mut sum = vec![0.0; v.len()];
    let mut count = vec![0u32; v.len()];
    let mut block_i = Vec::new();
    let mut block_j = Vec::new();
    let block_len = (2 * r[0] + 1) * (2 * r[1] + 1) * (2 * r[2] + 1);
    let mut acc = vec![0.0; block_len];

    for &cz in &g.centers[2] {
        for &cy in &g.centers[1] {
            for &cx in &g.centers[0] {
                let ci = [cx + g.pad[0], cy + g.pad[1], cz + g.pad[2]];
                gather(&padded, ci, r, &mut block_i);
                acc.iter_mut().for_each(|a| *a = 0.0);
                let mut total = 0.0;
                for off in &offsets {
                    let cj: [usize; 3] =
                        core::array::from_fn(|a| (ci[a] as isize + off[a]) as usize);
                    gather(&padded, cj, r, &mut block_j);
                    let d = pearson_distance(&block_i, &block_j, p.gamma, p.eps)?;
                    let w = block_weight(d, p.h);
                    for (a, &u) in acc.iter_mut().zip(&block_j) {
                        *a += w * u;
                    }
                    total += w;
                }

                let mut q = 0;
                for oz in -(r[2] as isize)..=r[2] as isize {
                    for oy in -(r[1] as isize)..=r[1] as isize {
                        for ox in -(r[0] as isize)..=r[0] as isize {
                            let x = [cx as isize + ox, cy as isize + oy, cz as isize + oz];
                            let inside = (0..3).all(|a| x[a] >= 0 && (x[a] as usize) < dims[a]);
                            if inside {
                                let idx = v.index(x[0] as usize, x[1] as usize, x[2] as usize);
                                sum[idx] += acc[q] / total;
                                count[idx] += 1;
                            }
                            q += 1;
                        }
                    }
                }
            }
        }
    }

    let data = sum
        .iter()
        .zip(&count)
        .map(|(&s, &c)| s / f64::from(c))
        .collect();
    Volume3D::new(dims, v.spacing(), data)
}
