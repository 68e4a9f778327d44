//! Command-line and session interface to the flower calculus.

pub mod commands;
pub mod protocol;
pub mod serve;
pub mod session;
