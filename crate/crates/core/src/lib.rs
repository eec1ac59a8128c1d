//! Core numerics for an NV-center spin sensor reading out a radical-pair
//! reaction: spin algebra, Hamiltonians, Lindblad generators, exponential
//! propagators, closed-form signal and sensitivity models, decoupling
//! sequences and single-shot statistics.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature. Internal units are SI with energies as angular frequencies (rad/s).

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod analytics;
pub mod error;
pub mod geometry;
pub mod hamiltonian;
pub mod liouvillian;
pub mod linalg;
pub mod model;
pub mod montecarlo;
pub mod propagate;
pub mod pulses;
pub mod spin;
pub mod units;

pub use error::{Error, Result};
