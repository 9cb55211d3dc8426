//! Probabilistically-labeled Markov decision processes.
//!
//! A model couples a finite MDP with a label distribution per state: every
//! time the system sits in state `x` it observes one label set `l ⊆ AP`
//! drawn with probability `p_L(x, l)`. The crate also generates the grid
//! robot abstraction with the `FR`/`BK`/`TR`/`TL`/`ST` primitives and
//! evaluates run costs.

// `!(x > 0.0)` rejects NaN along with nonpositive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod grid;
pub mod io;
mod label;
mod mdp;
pub mod presets;
mod trace;

pub use label::LabelSet;
pub use mdp::{ActionId, Mdp, StateId, Transition, Violation, PROB_TOL};
pub use trace::{mean_total_cost, RunTrace, StepFlags, TraceError, TraceStep};
