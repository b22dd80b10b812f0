//! Gradient-flow convergence certificates for neural network maps.
//!
//! The crate evaluates Kurdyka-Łojasiewicz inequalities obtained from
//! Rayleigh-quotient bounds on the neural tangent kernel, simulates the
//! corresponding gradient flows and checks every bound against brute-force
//! oracles. It is `no_std` and only needs an allocator.
#![no_std]
// `num_traits::Float` supplies float methods without std; recent toolchains
// misreport that import as unused.
#![allow(unused_imports)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bounds;
pub mod domain;
pub mod error;
pub mod flow;
pub mod linalg;
pub mod loss;
pub mod model;
pub mod ntk;
pub mod rng;
pub mod specfun;

pub use error::{Error, Result};
