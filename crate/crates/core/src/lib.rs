//! Structured output spaces, surrogate losses and pointwise Bayes-consistency
//! checks for BIO tagging and dependency arborescences.
//!
//! The crate is organized bottom-up:
//!
//! * [`structures`]: output spaces, part indexing, validity and enumeration.
//! * [`distributions`]: explicit distributions over an output space, with
//!   the three hand-built counterexample fixtures.
//! * [`inference`]: MAP and marginal inference, each with a brute-force
//!   oracle (Viterbi and forward-backward for BIO; Chu-Liu-Edmonds and the
//!   matrix-tree theorem for arborescences).
//! * [`losses`]: structured NLL, one-vs-all and the two token-separable
//!   losses, with gradients and pointwise risks.
//! * [`consistency`]: surrogate-risk minimizers, consistency verdicts,
//!   counterexample search and fixture reconstruction.

pub mod consistency;
pub mod distributions;
pub mod error;
pub mod inference;
pub mod io;
pub mod losses;
pub mod math;
pub mod rng;
pub mod structures;

pub use consistency::{consistency_verdict, ConsistencyVerdict, Status};
pub use distributions::{builtin_fixture, Distribution, Fixture, MarginalVector};
pub use error::{Error, Result};
pub use inference::{Algo, MarginalResult, ScoreVector};

pub use losses::LossKind;
pub use structures::{OutputSpace, OutputVector, PartId, SpaceKind, Tag};
