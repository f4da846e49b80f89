//! Conductivity imaging on a disc from boundary voltage/current pairs.
//!
//! The library reconstructs a piecewise-constant conductivity coefficient
//! from one or more boundary measurements by minimizing an energy that
//! couples the Dirichlet and Neumann potentials of the underlying elliptic
//! problem with an edge-preserving penalty on the conductivity gradient.
//! The penalty is handled by an alternating half-quadratic scheme: a
//! bound-constrained quasi-Newton pass over the potentials and the
//! conductivity, followed by a closed-form update of a per-element edge
//! indicator.
//!
//! Entry points by layer:
//!
//! - [`mesh`] — disc triangulations, Triangle `.node`/`.ele` import, zone tags
//! - [`fem`] — P1 operators: gradients, weighted stiffness, boundary
//!   pairings, trace extension, direct Dirichlet/Neumann solves
//! - [`regularizer`] — the edge-preserving potential, its smoothing, the
//!   dual edge indicator and its conjugate
//! - [`functional`] — the coupled objective and its analytic gradient
//! - [`optimizer`] — projected limited-memory quasi-Newton with box bounds
//! - [`synthetic`] — closed-form benchmark problems, boundary data, noise
//! - [`recon`] — the outer alternating loop and table-style extraction
//! - [`cli`] — batch commands behind the `bvtomo` binary
//!
//! The `examples/` directory has one runnable program per capability; start
//! with `cargo run --release --example concentric_inversion`.

pub mod cli;
pub mod error;
pub mod fem;
pub mod functional;
pub mod io;
pub mod mesh;
pub mod optimizer;
pub mod recon;
pub mod regularizer;
pub mod sparse;
pub mod synthetic;

pub use error::{Error, Result};
