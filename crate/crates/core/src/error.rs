//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite entries in {0}")]
    NonFinite(&'static str),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("defective matrix (exceptional point): {0}")]
    DefectiveMatrix(String),

    #[error("eigenvalue pairing ambiguous: {0}")]
    PairingAmbiguous(String),

    #[error("band continuity lost at step {step}: overlap {overlap:.3e} below threshold {threshold}")]
    BandSwap {
        step: usize,
        overlap: f64,
        threshold: f64,
    },

    #[error("left/right overlap vanishes: |<L|R>| = {0:.3e} relative to the vector norms")]
    ZeroOverlap(f64),

    #[error("band pairing failed inside a finite-difference stencil: {0}")]
    StencilBandSwap(String),

    #[error("discrete link phase {phase:.4} rad exceeds pi/2; discretization too coarse")]
    BranchJump { phase: f64 },

    #[error("line integral did not converge: last refinement changed the result by {last_change:.3e} (tol {tol:.1e}, cap {max_samples} samples)")]
    NoConvergence {
        tol: f64,
        max_samples: usize,
        last_change: f64,
    },

    #[error("family is not similarity-reducible: residual {residual:.3e} exceeds tol {tol:.1e}")]
    NotSimilarityReducible { residual: f64, tol: f64 },

    #[error("similarity transform ill-conditioned: cond = {0:.3e}")]
    IllConditioned(f64),

    #[error("no closed form for class B/B' with a rank-{0} projector (rank one only)")]
    UnsupportedBranch(usize),

    #[error("PT-broken regime: discriminant = {0:.6e} <= 0")]
    PTBroken(f64),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("rank deficient: {0}")]
    RankDeficient(String),

    #[error("intensity {0:.3e} exceeded the overflow guard")]
    Unstable(f64),

    #[error("time step too large: dt * max|H| = {0:.3} exceeds 0.1")]
    StepTooLarge(f64),

    #[error("evolution not adiabatic: only {0:.2}% of recorded steps satisfy the largest-Im condition")]
    NotAdiabatic(f64),

    #[error(transparent)]
    Backend(#[from] ndarray_linalg::error::LinalgError),
}

pub type Result<T> = std::result::Result<T, Error>;
