use crate::error::{Error, Result};
use crate::volume::Volume3D;

/// Descriptive statistics with population variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeStats {
    pub mean: f64,
    pub variance: f64,
    pub min: f64,
    pub max: f64,
}

impl VolumeStats {
    pub fn std(&self) -> f64 {
        libm::sqrt(self.variance)
    }
}

pub fn volume_stats(v: &Volume3D) -> Result<VolumeStats> {
    slice_stats(v.data())
}

/// Two-pass mean and population variance of a sample.
pub fn slice_stats(data: &[f64]) -> Result<VolumeStats> {
    if data.is_empty() {
        return Err(Error::EmptyVolume);
    }
    let n = data.len() as f64;
    let (mut min, mut max, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for &x in data {
        min = min.min(x);
        max = max.max(x);
        sum += x;
    }
    // rounding in the sum can push the mean an ulp outside the range
    let mean = (sum / n).clamp(min, max);
    let variance = data.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / n;
    Ok(VolumeStats {
        mean,
        variance,
        min,
        max,
    })
}
