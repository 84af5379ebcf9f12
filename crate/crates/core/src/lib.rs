//! Minimal cones, their link spectra, radial Jacobi fields, ε-bridges joining
//! cones, and a discrete solver perturbing the glued configuration towards
//! minimality.

pub mod bridges;
pub mod cones;
pub mod error;
pub mod fit;
pub mod geometry;
pub mod jacobi;
pub mod linalg;
pub mod perturbation;
pub mod quadrature;
pub mod spectrum;

pub use error::{Error, Result};
