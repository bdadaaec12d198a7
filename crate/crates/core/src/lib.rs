//! Median-of-means aggregation of distributed PCA estimates on `R^p × Gr(r,p)`.

pub mod aggregation;
pub mod calibration;
pub mod covariance;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod node_pca;
pub mod par;
pub mod rng;
pub mod robustness;

pub use error::{Error, Result};
