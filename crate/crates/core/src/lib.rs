//! Numerical laboratory for ReLU-network classification theory.
//!
//! The crate is organized around the quantities a rate experiment needs:
//!
//! * [`distlab`] synthetic distributions on `[0,1]^d x {0,1}` with exact Bayes oracles
//!   and a controlled Tsybakov margin exponent.
//! * [`nnet`] networks, realization maps and complexity measures (connectivity,
//!   width, depth, weight magnitude) plus the constrained sieve classes.
//! * [`erm`] logistic / 0-1 empirical risk minimization over sieve classes.
//! * [`construct`] explicit interpolating networks and separation statistics.
//! * [`risk`] plug-in classification risk, excess risk and `L^p` risks.
//! * [`kdrate`] Haar dictionaries, constrained best M-term approximation and a
//!   bit-exact coefficient codec.
//! * [`bench`] size rules, condition calculators, rate experiments and persistence.
//!
//! The `nnclass` binary is a thin wrapper over [`cli`].

pub mod bench;
pub mod cli;
pub mod construct;
pub mod distlab;
pub mod erm;
pub mod error;
pub mod fit;
pub mod kdrate;
pub mod nnet;
pub mod quad;
pub mod risk;
pub mod rng;

pub use error::{Error, Result};
