//! Numerics for adiabatic amplification in non-Hermitian systems.
//!
//! The crate computes biorthogonal eigensystems of parameterized non-Hermitian
//! Hamiltonians, gauge-invariant geometric quantities built from them
//! (Petermann factor, amplification line integrals, discrete Berry phases and
//! curvatures), verifies symmetry relations between left and right eigenstates
//! together with their closed-form amplification factors, and cross-checks
//! everything against direct Runge-Kutta integration of the time-dependent
//! Schrödinger equation. Two concrete model families are included: a
//! non-Hermitian two-level system and a one-dimensional robotic-metamaterial
//! chain with a topological zero mode.

pub mod classes;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod models;
pub mod parameter;
pub mod spectral;

pub use error::{Error, Result};

/// Dense complex matrix, the carrier for Hamiltonians and symmetry matrices.
pub type CMatrix = ndarray::Array2<num_complex::Complex64>;
/// Dense complex vector, the carrier for state vectors and eigenvectors.
pub type CVector = ndarray::Array1<num_complex::Complex64>;
