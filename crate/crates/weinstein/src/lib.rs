//! Harmonic analysis for the Weinstein (Laplace-Bessel) operator on the
//! weighted upper half-space.
//!
//! The crate provides, at desk scale:
//! - the weighted measure, grids, integration and L^p norms ([`halfspace`]),
//! - the Weinstein kernel and transform, radial Fourier-Bessel fast path,
//!   closed-form transforms and a finite-difference operator ([`transform`]),
//! - the generalized translation, translated ball indicators and the
//!   generalized convolution ([`translation`]),
//! - the uncentered maximal operator with weak-type and L^p diagnostics and
//!   greedy Vitali selection ([`maximal`]),
//! - a deterministic test-function corpus and a verification harness that
//!   exercises every closed form and inequality the library implements
//!   ([`corpus`], [`verify`], [`report`]).

pub mod config;
pub mod corpus;
pub mod error;
pub mod halfspace;
pub mod maximal;
pub mod quad;
pub mod report;
pub mod special;
pub mod transform;
pub mod translation;
pub mod verify;

pub use error::{Error, Result};
pub use halfspace::{
    integrate, lp_norm, radial_integrate, radial_integrate_fn, BallSpec, GridFunction,
    HalfSpaceGrid, RadialProfile, WeinsteinParams,
};
