//! Methods for nonsmooth, nonconvex and stochastic minimization.
//!
//! The crate is organised bottom-up: [`core`] holds vectors, oracle traits,
//! feasible sets and a dense LP solver; [`calculus`] and [`smoothing`] build
//! pseudogradient selections and finite-difference estimates; [`schedules`]
//! generates and checks step sequences; the three `solvers_*` modules hold the
//! deterministic, gradient-free and stochastic methods; [`problems`] is the
//! benchmark catalog and [`cli`] the experiment runner behind the binary.

pub mod calculus;
pub mod cli;
pub mod core;
pub mod problems;
pub mod schedules;
pub mod smoothing;
pub mod solvers_det;
pub mod solvers_fd;
pub mod solvers_sto;

pub use crate::core::error::{OptError, Result};
pub use crate::core::oracle::{FnOracle, FnStochastic, FunctionOracle, StochasticOracle};
pub use crate::core::sets::{FeasibleSet, StepLimit};
pub use crate::core::trace::{RunTrace, StopReason};
pub use crate::core::vector::Vector;
