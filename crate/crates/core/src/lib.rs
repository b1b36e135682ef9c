#![no_std]
//! Anisotropic-scale junction (ASJ) detection and matching.

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod error;
pub mod eval;
pub mod image;
pub mod junction;
pub mod math;
pub mod matching;
mod par;
pub mod scale;
pub mod stats;

pub use error::{Error, Result};
