//! Numerical comparison geometry for weighted Riemannian manifolds.
//!
//! A manifold is described by a single coordinate chart: a box domain with
//! optional periodic identifications, a symmetric metric whose components are
//! closed-form expressions, and a positive density expression weighting the
//! Riemannian volume. On top of that substrate the crate computes
//!
//! * Bakry-Émery tensors `Ric - Hess(ln phi)` and their finite-dimension
//!   variants, with sampled lower-bound certification ([`bakry_emery`]),
//! * weighted codifferentials, Laplacians and Bochner-type identities on
//!   1-forms ([`bochner`]),
//! * warped products and warped-product Riemannian submersions, including the
//!   curvature transfer to the base and collapse asymptotics ([`bundles`]),
//! * geodesic tubes: Riccati/Jacobi shooting, transverse density profiles,
//!   log-concavity tests and subtube mass-comparison selection ([`tubes`]),
//! * weighted Bishop-Gromov ratio checks and Myers-type diameter bounds
//!   against model space forms ([`comparison`]).
//!
//! Everything is chart-local and sampled: certifications are statements about
//! the evaluated sample sets, not formal proofs. All derivatives come from
//! exact second-order forward jets ([`expr::Jet2`]), never from finite
//! differences of the metric.
//!
//! The crate is `no_std` (with `alloc`); IO, file formats and the command-line
//! front end live in the companion `bet-cli` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bakry_emery;
pub mod bochner;
pub mod bundles;
pub mod catalog;
pub mod comparison;
pub mod expr;
pub mod geometry;
pub mod linalg;
pub mod quad;
pub mod tubes;

pub use expr::{Expression, Jet2};
pub use geometry::{ManifoldSpec, OneFormField, SymBilinear};
