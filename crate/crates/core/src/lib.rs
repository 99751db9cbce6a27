//! fourmode: the symplectic group Sp(4,R) and four-mode squeezed states for
//! two linearly coupled scalar fields.
//!
//! The crate covers the full chain from time-dependent quadratic Hamiltonian
//! kernels to observable diagnostics:
//!
//! * [`symplectic`] - generators, commutators, closed-form exponentials,
//!   Bloch-Messiah composition/decomposition and the SU(2) mixing
//!   factorization;
//! * [`bogolyubov`] - the Bogolyubov-coefficient form of helicity transfer
//!   matrices;
//! * [`dynamics`] - Green-matrix integration of the canonical equations and
//!   parameter extraction along trajectories, with the cosmological two-field
//!   example;
//! * [`amplitudes`] - closed-form Fock amplitudes of the evolved vacuum (the
//!   four-mode squeezed state), the decoupled limit and the small-coupling
//!   expansion;
//! * [`oracle`] - brute-force truncated-Fock validation: gates, circuits,
//!   direct Schroedinger evolution and explicit partial traces;
//! * [`gaussian`] - covariance matrices, Wigner functions, reduced states and
//!   Gaussian purity;
//! * [`decoherence`] - exact and perturbative reduced density matrices,
//!   purity sums and decoherence sweeps.

pub mod amplitudes;
pub mod bogolyubov;
pub mod config;
pub mod decoherence;
pub mod dynamics;
pub mod error;
pub mod gaussian;
pub mod linalg;
pub mod oracle;
pub mod report;
pub mod symplectic;

pub use error::{Error, Result};
