//! Multiplicative speckle model `u = v + v^gamma * eta`, `eta ~ N(0, sigma^2)`.

use crate::error::{Error, Result};
use crate::rng::standard_normal;
use crate::volume::Volume3D;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeckleParams {
    /// Signal-dependence exponent, in `[0, 2]`.
    pub gamma: f64,
    /// Standard deviation of `eta`.
    pub sigma: f64,
    pub seed: u64,
}

impl Default for SpeckleParams {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            sigma: 0.2,
            seed: 0,
        }
    }
}

impl SpeckleParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=2.0).contains(&self.gamma) {
            return Err(Error::param("gamma", "must lie in [0, 2]"));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::param("sigma", "must be finite and nonnegative"));
        }
        Ok(())
    }
}

/// Corrupts a nonnegative volume. The output is not clamped. `0^0` is taken
/// as 1, so `gamma = 0` is plain additive Gaussian noise.
pub fn apply_speckle(v: &Volume3D, p: &SpeckleParams) -> Result<Volume3D> {
    p.validate()?;
    if v.data().iter().any(|&x| x < 0.0) {
        return Err(Error::NegativeSpeckleInput);
    }
    let data = v
        .data()
        .iter()
        .enumerate()
        .map(|(i, &x)| x + libm::pow(x, p.gamma) * p.sigma * standard_normal(p.seed, i as u64))
        .collect();
    Volume3D::new(v.dims(), v.spacing(), data)
}
