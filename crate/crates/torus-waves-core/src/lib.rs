//! Simulation kernel for random Laplace eigenfunctions on flat tori `T^d = R^d/Z^d`
//! (`d = 2, 3`) restricted to a reference curve.
//!
//! The crate provides, in dependency order:
//!
//! - [`lattice`]: frequency sets `E = {mu in Z^d : |mu|^2 = m}` and their
//!   arithmetic statistics (separation, arc concentration, angular Fourier
//!   coefficients, disk counts);
//! - [`geometry`]: analytic reference curves with arc-length reparametrization,
//!   curvature/torsion and regularity validation;
//! - [`wave`]: coefficient distributions, conjugate-symmetric sampling and
//!   evaluation of the random wave `F` and its derivative along a curve;
//! - [`zeros`]: certified counting of the nodal intersections `Z = #{t : F(gamma(t)) = 0}`;
//! - [`kacrice`]: Gaussian predictions for the moments of `Z` (first/second
//!   intensity, expected count, variance integral);
//! - [`diagnostics`]: equidistribution and additive-structure probes for the
//!   frequency set (interval covers, discrepancy, delocalization ratios,
//!   near-circle GAP enumeration, tangent-aligned bad sets).
//!
//! Everything here is deterministic given its inputs (sampling takes explicit
//! seeds) and free of I/O; the companion `torus-waves` crate carries the Monte
//! Carlo harness, file formats and the CLI. The crate is `no_std` (with
//! `alloc`); transcendental functions are routed through `libm` so results do
//! not depend on the host math library.

#![cfg_attr(not(test), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod diagnostics;
pub mod geometry;
pub mod kacrice;
pub mod lattice;
mod math;
mod quad;
pub mod wave;
pub mod zeros;

pub use lattice::{Dim, LatticeSet};
