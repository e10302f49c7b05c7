//! Exact Schrödinger evolution on model manifolds in eigenfunction
//! coordinates, with numerical probes of maximal, Strichartz and local
//! smoothing estimates.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod evolve;
pub mod fields;
pub mod lp;
pub mod quad;
pub mod report;
pub mod spectra;
pub mod synth;

pub use error::{Error, Result};
pub mod hyperbolic;
pub mod maximal;
pub mod probe;
