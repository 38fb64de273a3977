//! Exact truncated-Fock-space representation of multimode photonic states and
//! the linear-optical / detection primitives acting on them.
//!
//! Conventions:
//! - Beam splitters use the symmetric convention, `i` on reflection.
//! - Loss is a beam splitter into fresh environment modes that stay in the
//!   state until probabilities are extracted.
//! - Truncation is on the total photon number across all modes; everything a
//!   transform would push above it is dropped and accounted in the state's
//!   tail weight, never silently.

mod detect;
mod layout;
mod state;

pub use detect::{click_distribution, ClickDistribution, DetectorGroup, ThresholdDetector};
pub use layout::{ArmId, ModeLabel, ModeLayout, Polarization, SpectralBin};
pub use state::{
    beamsplitter_unitary, OccupationState, PhotonicState, TwoModeUnitary, DEFAULT_TAIL_TOLERANCE,
};
