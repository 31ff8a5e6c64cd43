//! Secure key rates for measurement-device-independent QKD with
//! coherent-state-superposition, weak-coherent and single-photon sources.
//!
//! The pipeline runs bottom-up:
//!
//! - [`source`] builds photon-number distributions,
//! - [`optics`] propagates Fock inputs through the Bell-state analyzer and
//!   tabulates yields under a threshold-detector model,
//! - [`rate`] forms gains, error rates and the key rate,
//! - [`decoy`] bounds the single-photon yield and error rate from gains,
//! - [`finite`] widens observed gains for finite data before bounding,
//! - [`scenario`] drives distance sweeps, source comparisons and intensity
//!   searches, and writes CSV.

pub mod decoy;
pub mod error;
pub mod finite;
pub mod optics;
pub mod rate;
pub mod scenario;
pub mod source;

pub use error::{Error, Result};
pub use optics::{Basis, DetectorParams, OpticsCache, Polarization, YieldTable};
pub use source::{build_distribution, PhotonDistribution, SourceKind, SourceSpec};
