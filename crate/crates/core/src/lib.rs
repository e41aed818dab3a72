//! Electromigration stress laboratory.
//!
//! A transient finite-volume solver for Korhonen's hydrostatic stress
//! equation on Manhattan interconnect trees, a seeded design generator, a
//! rasterised image-pair dataset pipeline and NRMSE evaluation utilities.

pub mod error;
pub mod gen;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod raster;
pub mod seed;
pub mod solver;

pub use error::{Error, Result};
