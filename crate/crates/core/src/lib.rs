//! The flower calculus: a deep-inference proof system for intuitionistic
//! first-order logic, with a proof checker, a prover, Kripke semantics and a
//! translation to and from ordinary formulas.

pub mod syntax;
pub mod context;
pub mod calculus;
pub mod random;
pub mod semantics;
pub mod bridge;
pub mod prover;
