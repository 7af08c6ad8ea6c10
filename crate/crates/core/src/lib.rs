//! Numerical certificates for regularity of finite collections of closed
//! sets in Euclidean space.
//!
//! The crate estimates Fréchet and limiting normal cones, checks
//! subtransversality, the strong conical hull intersection property (CHIP)
//! and property (G), computes primal and dual error-bound moduli for convex
//! and convex-composite inequality systems, and runs projection methods
//! whose convergence can be compared against those certificates.

pub mod cone;
pub mod error;
pub mod error_bounds;
pub mod geometry;
pub mod normals;
pub mod numeric;
pub mod par;
pub mod regularity;
pub mod sampling;
pub mod scenario;
pub mod solvers;

pub use error::{Error, Result};

/// A point (or direction) in ℝⁿ.
pub type Point = nalgebra::DVector<f64>;
