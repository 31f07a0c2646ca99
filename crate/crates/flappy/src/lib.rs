//! Command-line entry points and the live piloting service.

// NaN must fail range checks, so `!(x > 0.0)` is deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod protocol;
pub mod server;
pub mod session;
