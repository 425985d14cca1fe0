//! Population protocols with succinct state spaces: constructions,
//! compilers, exact verification and randomized simulation.
//!
//! The crate is organized around five pieces:
//!
//! * [`multiset`] / [`protocol`] — multiset arithmetic, the protocol tuple
//!   `(Q, T, I, L, O)` and single-step firing semantics;
//! * [`constructions`] — builders for the threshold, majority and linear
//!   (in)equality protocol families, each with a certified size bound;
//! * [`compile`] — the k-way → 2-way lowering gadget and the commutative
//!   semigroup presentation compiler;
//! * [`analysis`] — exhaustive reachability, terminal-SCC output decisions,
//!   coverability and 1-awareness checks, all exact on fixed populations;
//! * [`sim`] — seeded random-scheduler simulation with stabilization
//!   detection for populations beyond exhaustive reach.
//!
//! Frontier expansion, per-input verification and simulation batches run
//! data-parallel under the default `parallel` feature (rayon) and fall back
//! to sequential loops without it; results are independent of thread count
//! either way.

use thiserror::Error;

pub mod analysis;
pub mod compile;
pub mod constructions;
mod dense;
pub mod interchange;
pub mod multiset;
mod par;
pub mod pred;
pub mod protocol;
pub mod sim;

pub use multiset::Multiset;
pub use protocol::{Protocol, ProtocolBuilder, StateId, Transition};

/// Errors of the core representation and firing semantics.
#[derive(Debug, Error, PartialEq)]
pub enum CoreError {
    #[error("unknown state `{0}`")]
    UnknownState(String),

    #[error("a protocol needs at least one state")]
    NoStates,

    #[error("state names must be non-empty")]
    EmptyStateName,

    #[error("transition pre/post lengths differ ({pre} vs {post})")]
    ArityMismatch { pre: usize, post: usize },

    #[error("transition arity {0} is below the minimum of 2")]
    ArityTooSmall(usize),

    #[error("transition references a state outside the protocol")]
    MalformedTransition,

    #[error("transition `{0}` is not enabled")]
    TransitionDisabled(String),

    #[error("input state `{0}` is not an initial state")]
    InputNotInitial(String),

    #[error("initial configuration is empty")]
    EmptyPopulation,

    #[error("agent count overflow")]
    CountOverflow,

    #[error("state `{0}` has no output value")]
    MissingOutput(String),
}
