//! Exact-arithmetic models and behavioral equivalence checking for
//! nondeterministic and probabilistic labeled transition systems.
//!
//! The crate represents finite acyclic models whose transitions lead to
//! probability distributions over states, composes them with tests,
//! enumerates scheduler-induced resolutions, and decides (or bounded-refutes)
//! a spectrum of trace, testing, and failure equivalences. All probabilities
//! are exact rationals; every verdict is reproducible bit for bit.

pub mod compose;
pub mod equiv;
pub mod fixtures;
pub mod model;
pub mod npt;
pub mod rational;
pub mod resolve;
pub mod textfmt;
pub mod traceset;

pub use compose::{interaction_system, parallel_compose, InteractionSystem};
pub use model::{Action, Distribution, ModelError, Nplts, ProcessClass, StateId, Transition};
pub use npt::{Npt, TestTree};
pub use rational::Rat;
pub use resolve::{
    enumerate_grid_randomized, enumerate_schedulers, EnumerationError, RandomizedScheduler,
    ResolutionView, Scheduler,
};
pub use textfmt::{parse, serialize, ModelDocument};
pub use traceset::{weighted_traces, wts_product, WeightedTraceSet};
