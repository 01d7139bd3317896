//! Two-phase free-boundary flow of shear-dependent fluids on a flattened strip.
//!
//! The moving interface between two immiscible incompressible fluids is
//! represented as the graph of a height function and mapped onto a fixed
//! split strip. On that strip the crate provides:
//!
//! * spectral/finite-difference calculus on the split domain ([`grid`]),
//! * the flattening transform and its induced geometric operators
//!   ([`geometry`]),
//! * generalized Newtonian viscosity models and quasilinear stress operators
//!   ([`constitutive`]),
//! * assembly of the nonlinear right-hand sides of the flattened system
//!   ([`rhs`]),
//! * an implicit two-phase Stokes solver with capillary/gravity interface
//!   coupling, decoupled per horizontal wavenumber ([`stokes`]),
//! * a global-in-time Picard iteration driving the nonlinear solve
//!   ([`fixedpoint`]), and
//! * discrete surrogates of the anisotropic Sobolev-Slobodeckii norms used
//!   as diagnostics ([`norms`]).

pub mod constitutive;
pub mod error;
pub mod fixedpoint;
pub mod geometry;
pub mod grid;
pub mod interp;
pub mod linalg;
pub mod norms;
pub mod rhs;
pub mod stokes;
pub mod testing;

pub use error::{CoreError, Result};
pub use geometry::HeightField;
pub use grid::{Phase, Rank, StripGrid, TimeGrid, TwoPhaseField};
