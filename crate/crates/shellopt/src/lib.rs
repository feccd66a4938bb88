//! Adaptive isogeometric topology optimization of shell structures.
//!
//! The crate implements compliance minimization of Reissner-Mindlin shells
//! under a volume constraint. Geometry, displacement, and material density
//! are PHT-splines over hierarchical T-meshes; the density mesh is refined
//! locally at solid/void interfaces during the optimization.
//!
//! Module map:
//! - [`tmesh`]: hierarchical T-mesh with dyadic cross-insertion refinement
//! - [`bernstein`]: bicubic Bézier patch arithmetic
//! - [`phtspace`]: PHT-spline spaces, fields, refinement, inheritance
//! - [`shellgeom`]: mid-surface geometry, local frames, shell volume map
//! - [`shellfea`]: Reissner-Mindlin discretization, assembly, solve
//! - [`simpopt`]: sensitivities, adaptive Shepard filter, design variables
//! - [`mma`]: method of moving asymptotes update
//! - [`driver`]: the adaptive optimization loop
//! - [`cases`], [`config`], [`export`], [`batch`]: batch front end

pub mod batch;
pub mod bernstein;
pub mod blocksparse;
pub mod cases;
pub mod config;
pub mod driver;
pub mod error;
pub mod export;
pub mod mma;
pub mod phtspace;
pub mod quadrature;
pub mod shellfea;
pub mod shellgeom;
pub mod simpopt;
pub mod solver;
pub mod tmesh;

pub use error::{FeaError, GeomError, MeshError, SpaceError};
