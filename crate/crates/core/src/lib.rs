//! Numerical laboratory for quadratic Majorana Hamiltonians on small-world
//! graphs, with a single quartic impurity term.
//!
//! The crate is organized bottom-up:
//!
//! * [`graph`] generates circulant base graphs and their seeded small-world
//!   rewirings.
//! * [`couplings`] draws Gaussian edge couplings and builds the antisymmetric
//!   single-particle matrix.
//! * [`fermion`] maps Majorana bilinears to Pauli strings, restricts to a
//!   parity sector, and assembles sparse many-body Hamiltonians.
//! * [`eigensolve`] extracts spectra, either densely or through Chebyshev
//!   polynomial filtering of an interior window.
//! * [`stats`] computes level-spacing ratio statistics and related
//!   diagnostics.
//! * [`dyson`] works on the single-particle side: Bogoliubov canonical form
//!   and the rotation of the quartic impurity into the eigenmode basis.
//! * [`pipeline`] ties everything into seeded, resumable experiment sweeps.
//!
//! All randomness flows through named counter-based generators seeded via
//! [`seeds::derive_seed`], so every artifact is reproducible from a single
//! base seed. Parallelism is compile-time optional (`parallel` feature) and
//! never affects numerical output: reductions are chunked deterministically.

pub mod couplings;
pub mod dyson;
pub mod eigensolve;
pub mod error;
pub mod fermion;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod par;
pub mod pipeline;
pub mod seeds;
pub mod stats;

pub use error::{Error, Result};
