//! Numerical toolkit for long-horizon optimal control problems whose state
//! splits into a steady x-block and a monotone y-block: turnpike-static KKT
//! solves, Riccati-based hyperbolic splitting, turnpike-initialized shooting,
//! direct transcription, and quantitative turnpike diagnostics.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analyzer;
pub mod calculus;
pub mod direct;
pub mod error;
pub mod hyperbolic;
pub mod linalg;
pub mod problem;
pub mod shooting;
pub mod statics;

pub use error::{Error, Result};
pub use problem::{make_problem, Params, ProblemDef, TerminalSpec};
pub use statics::SteadyState;
