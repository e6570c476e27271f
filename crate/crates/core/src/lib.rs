//! Reciprocal SU(2) polarization gadgets, a Sagnac quantum SWITCH simulator and the
//! commute/anti-commute channel-discrimination task with its causal witness.

pub mod discrimination;
pub mod error;
pub mod gadget;
pub mod optics;
pub mod report;
pub mod su2;
pub mod switch;
pub mod tomography;
pub mod witness;

pub use error::{Error, Result};
