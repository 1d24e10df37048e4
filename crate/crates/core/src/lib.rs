//! Local-time continuity lab on finite recurrent continuous-time Markov
//! chains. Exact linear algebra gives the potential densities and intrinsic
//! metric; exact path simulation drives the Monte Carlo experiments.
//!
//! The crate is `no_std` (with `alloc`). Anything touching files or
//! threads lives in the `loctime` companion crate.

#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod clt;
pub mod entropy;
pub mod error;
pub mod excursion;
pub mod gaussian;
pub mod linalg;
pub mod model;
pub mod potential;
pub mod rng;
pub mod runner;
pub mod sim;
pub mod stats;
pub mod subordinator;

pub use error::{Error, Result};
pub use model::{Family, FamilyTag, MarkovModel};
pub use rng::{RngSeed, SimRng};
pub use runner::{ReplicaRunner, Sequential};
