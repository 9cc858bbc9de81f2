//! Reduced dynamics of the isosceles three-body problem with
//! Schwarzschild-type pair potentials -A/d - B/d^3.
//!
//! The crate covers the full pipeline from parameters to orbit fates:
//!
//! - [`model`]: parameters, derived constants (mu, alpha, beta, c0), the
//!   angular potentials V, W, U and the effective potential in cylindrical
//!   coordinates;
//! - [`charts`]: cylindrical, polar blow-up and double-collision-regularized
//!   charts with exact transformations and per-chart energy residuals;
//! - [`flow`]: vector fields for every chart and an event-aware adaptive
//!   integrator;
//! - [`equilibria`]: relative equilibria (circular solutions), their
//!   spectral stability, and the energy-momentum diagram;
//! - [`manifold`]: the triple-collision manifold, its six equilibria with
//!   eigenvalue data, invariant-manifold traces and the double-collision
//!   connection criterion;
//! - [`orbits`]: planar phase portraits, homographic admissibility, the
//!   collision sink criterion, fate classification and the unbounded
//!   winding of near-collision orbits;
//! - [`export`]: deterministic CSV/JSON/SVG writers;
//! - [`verify`]: the self-check battery run by `schwiso verify`.

pub mod charts;
pub mod equilibria;
pub mod error;
pub mod export;
pub mod flow;
pub mod manifold;
pub mod model;
pub mod numerics;
pub mod orbits;
pub mod verify;

pub use error::{Error, Result};
