pub mod carleman;
pub mod config;
pub mod contour;
pub mod eigen;
pub mod equilibrium;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod homology;
pub mod linalg;
pub mod operators;
pub mod render;
pub mod topology;

pub use error::{Error, Result};
