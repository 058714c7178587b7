//! Classical simulation of multi-photon interference in lossy linear-optical
//! circuits.
//!
//! Deep, lossy circuits are sampled by replacing the lossy single photons
//! with thermal light ([`thermal`]); shallow circuits are simulated exactly
//! with matrix product states ([`mps`]). [`circuit`] decides which regime
//! applies and [`oracle`] provides brute-force references for both.

// `!(x < bound)` rejects NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod app;
pub mod circuit;
mod dd;
pub mod error;
pub mod mps;
pub mod numerics;
pub mod oracle;
pub mod rng;
pub mod thermal;
pub mod validate;

pub use error::{Error, Result};
pub use numerics::{ComplexMatrix, Distribution, FockSample};
pub use rng::RandomStream;
