//! Shared building blocks: vectors, oracles, feasible sets, LP, traces.

pub mod error;
pub mod linalg;
pub mod lp;
pub mod oracle;
pub mod rng;
pub mod run;
pub mod sets;
pub mod trace;
pub mod vector;
