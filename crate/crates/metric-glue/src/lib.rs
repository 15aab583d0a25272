//! Simulator and numerics toolkit for random gluing of weighted metric blocks.
//!
//! A structure is built by gluing a sequence of independent pointed measured
//! metric blocks: block n carries its metric scaled by `lambda_n` and its
//! probability measure weighted by `w_n`, and is attached at a point drawn
//! from the mass-normalized union of everything built so far. The crate
//! provides the growth simulator, exact distance/projection queries on the
//! glued tree of blocks, the marked-point and monotone couplings, the
//! Polya-urn view of subtree masses, the covering-exponent recursion
//! `f_i`/`s_i` with its closed-form limit and dimension formula, the
//! generation/leaf-measure construction, covering and fragment builders,
//! and box-count / local-dimension / Hausdorff-gap estimators.
//!
//! Monte Carlo replicas run on deterministic per-index randomness streams, so
//! every result is byte-identical across thread counts; the `parallel`
//! feature (default) fans replicas out with rayon and a sequential fallback
//! is used when the feature is disabled.

pub mod analytic;
pub mod blocks;
pub mod cli;
pub mod error;
pub mod estimators;
pub mod exec;
pub mod glue;
pub mod leafmeasure;
pub mod params;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
