//! Combinatorics, spectral analysis and random generation for Artin-Tits
//! monoids and related Garside-like monoids.

pub mod cli;
pub mod cwg;
pub mod error;
pub mod garside;
pub mod measures;
pub mod mobius;
pub mod presentation;
pub mod stats;
pub mod words;

pub use error::{Error, Result};
