//! Collective spontaneous emission of low-density excitons in thin crystal
//! slabs of N lattice layers.
//!
//! The crate computes, for a slab described by two dimensionless numbers
//! (the lattice phase `delta0 = Omega a / c` and the coupling `g = eta / Omega`):
//!
//! - the exciton-exciton coupling matrix mediated by photon exchange,
//! - all complex emission eigenfrequencies (frequency shifts and decay
//!   rates), certified by an argument-principle root count,
//! - the emitted field envelope and normally ordered energy flux at a
//!   detector outside the slab, for arbitrary initial exciton moments,
//! - an independent time-domain simulation of the same dynamics against a
//!   discretized photon bath, used to validate the analytic results.
//!
//! Internal unit system: `Omega = 1`, `c = 1`, `hbar = 1`. Times are in
//! `1/Omega`, lengths in `c/Omega`. Fields are reported in units of
//! `E0 = sqrt(2 pi eta hbar Omega / (c A))` and fluxes in units of
//! `S0 = eta hbar Omega / A`, so the closed-form coefficients of the
//! two- and three-layer solutions read off as pure numbers.

pub mod coupling;
pub mod dynamics;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod spectrum;

use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum SlabError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unphysical state: {0}")]
    UnphysicalState(String),
    /// The coupling matrix has a pole at omega = 0.
    #[error("singular frequency: coupling matrix undefined at omega = 0")]
    SingularFrequency,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("certification failure: {0}")]
    Certification(String),
    #[error("degenerate transform: {0}")]
    DegenerateTransform(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("fit error: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, SlabError>;
