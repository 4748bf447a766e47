use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Grid axis. `X` is the fastest-varying axis in memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// Dense scalar volume stored with x fastest, then y, then z.
///
/// Construction validates that the dimensions are positive, the spacing is
/// strictly positive and every intensity is finite, so downstream code never
/// has to re-check those.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume3D {
    dims: [usize; 3],
    spacing: [f64; 3],
    data: Vec<f64>,
}

pub(crate) fn check_dims(dims: [usize; 3]) -> Result<usize> {
    if dims.contains(&0) {
        return Err(Error::InvalidDimensions(format!(
            "{dims:?} must be positive on every axis"
        )));
    }
    dims.iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .ok_or_else(|| Error::InvalidDimensions(format!("{dims:?} overflows the address space")))
}

impl Volume3D {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], data: Vec<f64>) -> Result<Self> {
        let expected = check_dims(dims)?;
        if spacing.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidSpacing);
        }
        if data.len() != expected {
            return Err(Error::DataLength {
                expected,
                actual: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            dims,
            spacing,
            data,
        })
    }

    /// Unit spacing.
    pub fn from_data(dims: [usize; 3], data: Vec<f64>) -> Result<Self> {
        Self::new(dims, [1.0; 3], data)
    }

    pub fn filled(dims: [usize; 3], value: f64) -> Result<Self> {
        let n = check_dims(dims)?;
        Self::from_data(dims, alloc::vec![value; n])
    }

    /// Builds a unit-spacing volume by evaluating `f(i, j, k)` in memory order.
    pub fn from_fn(
        dims: [usize; 3],
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let n = check_dims(dims)?;
        let mut data = Vec::with_capacity(n);
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    data.push(f(i, j, k));
                }
            }
        }
        Self::from_data(dims, data)
    }

    pub fn with_spacing(mut self, spacing: [f64; 3]) -> Result<Self> {
        if spacing.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidSpacing);
        }
        self.spacing = spacing;
        Ok(self)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.dims[0] && j < self.dims[1] && k < self.dims[2]);
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize, usize) {
        let [nx, ny, _] = self.dims;
        (index % nx, (index / nx) % ny, index / (nx * ny))
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.index(i, j, k)]
    }

    /// Applies `f` voxelwise, keeping dims and spacing.
    pub fn map(&self, f: impl FnMut(f64) -> f64) -> Result<Self> {
        Self::new(
            self.dims,
            self.spacing,
            self.data.iter().copied().map(f).collect(),
        )
    }

    /// Mirror image along `axis` (voxel `i` swaps with `n - 1 - i`).
    pub fn flipped(&self, axis: Axis) -> Self {
        let [nx, ny, nz] = self.dims;
        let mut data = Vec::with_capacity(self.data.len());
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    let (si, sj, sk) = match axis {
                        Axis::X => (nx - 1 - i, j, k),
                        Axis::Y => (i, ny - 1 - j, k),
                        Axis::Z => (i, j, nz - 1 - k),
                    };
                    data.push(self.get(si, sj, sk));
                }
            }
        }
        Self {
            dims: self.dims,
            spacing: self.spacing,
            data,
        }
    }

    pub(crate) fn from_parts_unchecked(
        dims: [usize; 3],
        spacing: [f64; 3],
        data: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(data.len(), dims.iter().product::<usize>());
        Self {
            dims,
            spacing,
            data,
        }
    }

    pub(crate) fn ensure_same_dims(&self, other: &Volume3D) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch {
                left: self.dims,
                right: other.dims,
            });
        }
        Ok(())
    }
}
