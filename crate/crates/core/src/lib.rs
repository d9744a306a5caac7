//! Fog synthesis on clear-weather stereo imagery.
//!
//! The pipeline turns a noisy disparity map into a complete depth map by
//! superpixel-wise plane fitting, converts depth to scene distance, and
//! composites homogeneous fog with a refined transmission map. Dataset and
//! evaluation tooling for the resulting images lives alongside.

#![allow(clippy::needless_range_loop)]

pub mod camera;
pub mod color;
pub mod dataset;
pub mod depth;
pub mod error;
pub mod eval;
pub mod fog;
pub mod guided_filter;
pub mod io;
pub mod labels;
mod linalg;
pub mod params;
pub mod raster;
pub mod seed;
pub mod superpixel;
pub mod synthetic;

pub use error::{Error, Result};
