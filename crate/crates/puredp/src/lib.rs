//! Pure differentially private protocols built on secure intermediaries.
//!
//! This crate simulates protocols in which users apply a local randomizer to
//! their data and a trusted-but-minimal *intermediary* — a shuffler or a
//! modular aggregator — sits between the users and the analyzer. Everything
//! is measured in the log-likelihood-ratio (LLR) metric, the distance that
//! underlies pure differential privacy, so there is no additive `delta`
//! anywhere.
//!
//! The main pieces:
//!
//! * [`dist`] — exact finite-support integer distributions ([`dist::Pmf`]):
//!   construction, convolution, mixtures, moments, LLR/statistical distance,
//!   and seeded sampling. These are the currency of both the simulations and
//!   the verification suites.
//! * [`model`] — the execution model: message batches, the shuffler and
//!   aggregator functionalities, attacks by corrupted users, and transcripts.
//! * [`relagg`] — a relaxed modular aggregator built from a shuffler: each
//!   user encodes a residue as the number of ones in a binary vector, with a
//!   small mixture component that inflates the tails just enough to keep
//!   likelihood ratios finite.
//! * [`sum`] — a bounded-sum protocol with randomized rounding and divisible
//!   discrete-Laplace noise, accurate to `O(1/eps)`.
//! * [`utest`] — uniformity testing over `[d]` via noised chi-squared
//!   statistics, with domain compression to shrink the universe.
//! * [`verify`] — numeric verification of the pointwise inequalities the
//!   security arguments rest on, computed from exact convolutions.
//! * [`cli`] — the `puredp` command-line experiment runner.
//!
//! A narrative guide with runnable examples lives in `book/`; its code
//! snippets double as doc-tests (see the hidden `guide` module).

// Parameter validation writes `!(lo < x && x < hi)` so that NaN fails the
// check and lands in the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dist;
pub mod model;
pub mod relagg;
pub mod sum;
pub mod utest;
pub mod verify;

mod error;

pub use error::{Error, Result};

#[doc(hidden)]
pub mod guide;
