//! Unsupervised detection of quantum many-body scars in the PXP chain.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numerical
//! pipeline:
//!
//! - [`hilbert`]: the blockade-constrained bitstring basis and Hamming metric.
//! - [`dynamics`]: PXP Hamiltonian, exact diagonalization, quench evolution and observables.
//! - [`sampling`]: projective shots and the readout-error channel.
//! - [`metric`]: probabilistic earth mover's distance and the Hilbert-Schmidt baseline.
//! - [`mds`]: classical initialization, SMACOF stress majorization and alignment.
//! - [`idest`]: discrete intrinsic-dimension estimation on the Hamming lattice.
//! - [`detect`]: the per-initial-state sweep and boxplot outlier flagging.
//!
//! File formats, configuration and the command-line tool live in the `scarid` crate.

#![no_std]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod detect;
pub mod dynamics;
mod error;
pub mod hilbert;
pub mod idest;
pub mod mds;
pub mod metric;
pub mod sampling;
pub mod stats;

pub use error::{Error, Result};
pub use hilbert::{BitString, Boundary, ConstrainedBasis};
