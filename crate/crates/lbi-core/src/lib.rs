//! Trend-break (level-shift) detection built on linearized Bregman
//! iterations, together with a bit-true model of a parallel-BRAM hardware
//! datapath for the same algorithm.
//!
//! The crate is split along the processing chain:
//!
//! - [`signal`]: measurement series, synthetic testbench profiles, the
//!   implicit step-candidate dictionary, scaling, and error metrics.
//! - [`fixed`]: parameterized signed fixed-point scalars with saturating,
//!   exactly-rounded arithmetic (default 20-bit `s4.16`).
//! - [`solver`]: the iteration core, runnable over `f64` or fixed-point
//!   scalars, plus support extraction and least-squares debiasing.
//! - [`hwsim`]: cycle-accurate simulator of the banked-memory datapath
//!   (parallel adder tree, multiplexer tree, dual-port write schedule)
//!   whose outputs are bit-identical to the fixed-point solver.
//! - [`cycle`]: closed-form clock-cycle and processing-time estimates with
//!   device presets and parameter sweeps.
//!
//! `no_std` builds (with `alloc`) are supported by disabling the default
//! `std` feature; file and CLI concerns live in the companion `lbi-cli`
//! crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod cycle;
pub mod fixed;
pub mod hwsim;
pub mod signal;
pub mod solver;

mod flt;

pub use fixed::{FixedError, FixedFormat, FixedScalar, Overflow, Rounding};
pub use signal::{BreakProfile, EstimationError, Signal, SignalError};
pub use solver::{
    BreakReport, CoefficientState, DomainKind, DoubleDomain, FixedDomain, IterationBudget,
    LbiSolver, ScalarDomain, SolverConfig, SolverError,
};
