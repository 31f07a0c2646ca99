//! Models for a twin-balloon flapping-wing blimp: wing thrust tables and
//! servo profiles, pitch trim, 4-DOF flight dynamics, stick mappings,
//! endurance and range, and thrust-stand log reduction.

// NaN must fail range checks, so `!(x > 0.0)` is deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod control;
pub mod dynamics;
pub mod energy;
pub mod error;
pub mod longitudinal;
pub mod roots;
pub mod standlab;
pub mod wing;

pub use error::{Error, Result};
