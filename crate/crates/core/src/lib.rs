//! Numerical laboratory for pressure, entropy and specification diagnostics
//! on partially hyperbolic torus maps.
//!
//! The crate studies two concrete families — hyperbolic integer-matrix
//! automorphisms of the 3-torus and a smooth one-parameter deformation of
//! them — and provides estimators for topological pressure via separated
//! sets, unstable entropy via leaf volume growth, orbit-segment
//! decompositions, cone and domination diagnostics, and an orbit-gluing
//! construction with verified shadowing, all deterministic for a fixed seed
//! and worker count.

pub mod config;
pub mod dynamics;
pub mod gluing;
pub mod leafwise;
pub mod linalg;
pub mod pressure;
pub mod rational;
pub mod reduce;
pub mod report;
pub mod sampling;
pub mod verify;
pub mod thermo;
