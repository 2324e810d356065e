//! Measuring cartographic figuration.
//!
//! Texel-level visual descriptors (color moments, LBP, HOG), the multimodal
//! kurtosis convergence coefficient κ with downsampling recalibration,
//! inter-class proximity analysis, segmentation evaluation and SVG/PNG
//! rendering of the results.

pub mod analysis;
mod assignment;
pub mod corpus;
pub mod error;
pub mod features;
pub mod io;
pub mod kappa;
mod neighborhood;
pub mod raster;
pub mod segeval;
pub mod stats;
pub mod synth;
pub mod viz;

pub use error::{Error, Result};
