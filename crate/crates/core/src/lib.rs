//! Allocation-only kernels for 3D B-mode ultrasound speckle reduction.
//!
//! The crate holds everything that is pure computation:
//!
//! - [`Volume3D`] and its statistics, normalization and mirror padding,
//! - synthetic phantoms and the multiplicative speckle model ([`speckle`]),
//! - the Bayesian non-local means filter ([`obnlm`]) as a literal reference
//!   implementation and a tiled fast path,
//! - SMPI, MSE and trilinear warping ([`metrics`]).
//!
//! File formats, threading and the command line live in the `usspeckle`
//! companion crate. Transcendental functions come from `libm`, so results do
//! not depend on the platform's math library.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

mod error;
pub mod metrics;
pub mod obnlm;
pub mod phantom;
pub mod preprocess;
pub mod rng;
pub mod speckle;
mod stats;
mod volume;

pub use error::{Error, Result};
pub use metrics::{mse, smpi, warp_trilinear, DisplacementField, SmpiReport};
pub use obnlm::{
    block_weight, filter_obnlm_reference, filter_obnlm_tiled, pearson_distance, FilterMode,
    ObnlmParams, ObnlmPlan,
};
pub use phantom::{generate_phantom, PhantomKind, PhantomSpec};
pub use preprocess::{crop, pad_mirror, preprocess, rescale_unit, UnitRescale};
pub use speckle::{apply_speckle, SpeckleParams};
pub use stats::{slice_stats, volume_stats, VolumeStats};
pub use volume::{Axis, Volume3D};
