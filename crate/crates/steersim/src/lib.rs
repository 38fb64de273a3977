//! Event-ready quantum steering over lossy channels.
//!
//! `steersim` models a two-source entanglement-swapping experiment in a
//! truncated multimode Fock space and decides whether detection-loophole-free
//! steering succeeds. It has four layers:
//!
//! - [`fock`] — exact sparse Fock states, beam splitters, loss channels with
//!   explicit environment modes, and threshold (click/no-click) detection.
//! - [`spdc`] — multi-pair polarization-entangled downconversion sources with
//!   single-pair Werner noise and partial spectral distinguishability.
//! - [`circuit`] — the assembled experiment: two sources, a lossy channel, a
//!   Bell-state measurement that heralds successful swaps, and polarization
//!   analyzers; produces exact conditional probabilities and sampled trials.
//! - [`steering`] — measurement sets, the steering parameter, deterministic
//!   and loss-dependent local-hidden-state bounds, violation significance,
//!   and a space-time ordering checker.
//! - [`tomography`] — two-qubit maximum-likelihood state reconstruction with
//!   Monte-Carlo (Poissonian) uncertainty.
//!
//! The `examples/` directory carries one runnable program per capability;
//! start with `entanglement_swap` and `steering_bounds`. A thin `steersim`
//! binary exposes the same operations as batch subcommands (see [`cli`]).
//!
//! ```
//! use steersim::steering::{platonic_settings, deterministic_bound};
//!
//! let set = platonic_settings(6).unwrap();
//! let c6 = deterministic_bound(&set);
//! assert!((0.53..0.55).contains(&c6));
//! ```

pub mod circuit;
pub mod cli;
pub mod error;
pub mod fock;
pub mod spdc;
pub mod steering;
pub mod tomography;

pub use error::{Error, Result};
