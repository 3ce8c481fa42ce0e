//! Numerical dynamics of the rescaled mean curvature flow near closed self-shrinkers.
//!
//! Plane curves and rotationally symmetric surfaces are discretized on uniform periodic
//! grids with trigonometric differentiation. On top of that sit the linearized operator
//! and its spectrum, graph flows over static and moving bases, Lyapunov-Perron charts,
//! and the experiment drivers.

pub mod config;
pub mod error;
pub mod experiments;
pub mod flow;
pub mod fourier;
pub mod geometry;
pub mod manifolds;
pub mod report;
pub mod shrinkers;
pub mod spectral;

pub use error::{Error, Result};
pub use spectral::{SpectralDecomposition, SpectralSplitting};
pub use geometry::{GraphFunction, ShrinkerGeometry, SurfaceKind, Topology};

