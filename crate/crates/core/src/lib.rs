//! Deterministic covariance-level simulator for sculpting spin-spin
//! correlations in a one-dimensional atomic lattice with sequences of
//! standing-wave QND measurement pulses.
//!
//! The state of the ensemble is carried entirely by the second moments of
//! the collective per-bin spin components (three real symmetric matrices,
//! one per component). Each probe pulse performs a rank-one measurement
//! update on the component it addresses, optionally followed by a
//! spontaneous-emission channel. On top of that primitive the crate
//! provides:
//!
//! - [`design`]: inversion of a desired correlation signature into
//!   per-wavevector squeezing fractions and coupling strengths,
//! - [`protocol`]: schedule construction and deterministic execution,
//! - [`spectrum`]: momentum-space views and the real-space correlation
//!   average,
//! - [`witness`]: the binned multimode entanglement witness,
//! - [`fit`]: decay-law extraction from correlation data,
//! - [`oracle`]: a brute-force full-projection reference used to validate
//!   the fast update on small lattices.
//!
//! The crate is `no_std` (`alloc` required); file IO, configuration and
//! the command line live in the companion CLI crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod design;
pub mod ensemble;
pub mod error;
pub mod fit;
pub mod oracle;
pub mod protocol;
pub mod pulse;
pub mod spectrum;
pub mod witness;

pub use design::{design_sequence, DesignResult, TargetKind, TargetSpec};
pub use ensemble::{Axis, CovarianceState, EnsembleConfig};
pub use error::Error;
pub use protocol::{build_plan, order_policy_deviation, run, OrderPolicy, PulsePlan, RunReport};
pub use pulse::{apply_decoherence, apply_pulse, standing_wave_weights, zero_means, Pulse, PulseDiagnostics};
pub use spectrum::{k_spectrum, real_correlation, KSpectrum, SpectrumComponent};
pub use witness::{witness_scan, witness_value, ScanGeometry, WitnessQuery};

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
