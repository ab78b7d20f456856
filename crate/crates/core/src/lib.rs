//! Nonparametric iterative machine teaching.
//!
//! A teacher that knows a target function `f*` picks examples for a learner
//! that runs functional gradient descent in a reproducing kernel Hilbert
//! space. The greedy teacher picks the point where the learner is most
//! wrong; the random teacher samples uniformly. This crate provides the
//! kernels, model representation, learner, teachers, the per-iteration
//! diagnostics that certify greedy teaching is at least as good as random
//! teaching, and the scenarios and I/O used by the `nimt` CLI.
//!
//! Grid scans run on rayon when the default `parallel` feature is on; every
//! entry point also accepts [`Execution::Sequential`], and both modes give
//! bit-identical results.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod function_space;
pub mod grid;
pub mod harness;
pub mod io;
pub mod kernel;
pub mod learner;
pub mod loss;
pub mod metrics;
pub mod session;
pub mod teacher;

pub use error::{NimtError, Result};
pub use exec::Execution;
pub use function_space::{
    empirical_l2, make_target, BaseFunction, Bump, GridFunction, RkhsFunction,
};
pub use grid::Grid;
pub use harness::{build_grid, make_scenario, Scenario, ScenarioName, ScenarioOverrides};
pub use kernel::{DomainBox, Kernel};
pub use learner::{Aggregation, Example, Learner, LearnerView, TeachingPack};
pub use loss::{safe_learning_rate, Loss};
pub use metrics::IterationRecord;
pub use session::{run_session, Assertions, SessionConfig, SessionLog};
pub use teacher::{AltTeaching, PackSize, TeacherKind, TeacherPolicy};
