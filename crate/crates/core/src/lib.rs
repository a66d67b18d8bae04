//! Simulator and solver for carry-chain fault attacks on masked LWE-based
//! KEM decapsulation.
//!
//! The crate is organized around the stages of the attack:
//!
//! * [`params`] / [`ring`] — scheme parameters and unmasked ring/coding
//!   primitives (polynomial arithmetic, CBD sampling, compress/decompress,
//!   message encode/decode).
//! * [`masking`] — arithmetic and Boolean sharing at arbitrary order, the
//!   masked ripple-carry adder, A2B conversion and the masked decode
//!   pipelines.
//! * [`kem`] — key generation, encapsulation with full randomness records,
//!   the faulted masked decryption oracle and decryption-noise bookkeeping.
//! * [`fault`] — bit-fault specifications, probabilistic fault profiles,
//!   injection mechanics and the closed-form propagation predicates.
//! * [`campaign`] — ciphertext filtering, the repeated-injection protocol,
//!   inequality construction and sample rejection.
//! * [`solver`] — the PMF-based iterative inequality solver with a Gaussian
//!   surrogate for the leave-one-out sums.
//! * [`io`] — CSV/JSON serialization of inequalities, keys and reports.

pub mod campaign;
pub mod error;
pub mod fault;
pub mod io;
pub mod kem;
pub mod masking;
pub mod params;
pub mod ring;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
pub use params::{Scheme, SchemeParams};
pub use rng::DetRng;
