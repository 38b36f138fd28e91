//! Numerical tools for the hyperbolic half-plane `ℍ² = {(x, y) : y > 0}`
//! with metric `(dx² + dy²) / y²`: geometry and integration, the dyadic
//! rectangle covering, thick observation sets, the heat kernel, spherical
//! transforms and band-limited projectors, and the constants of the
//! observability inequality for the heat equation.

pub mod cli;
pub mod covering;
pub mod error;
pub mod geometry;
pub mod heatkernel;
pub mod observability;
pub mod quadrature;
pub mod regions;
pub mod spectral;

pub use error::{Error, Result};
pub use geometry::{GeodesicBall, HalfPlanePoint};
pub use quadrature::{Estimate, QuadratureSpec};
pub use regions::Region;
