//! Quantum effects and the sequential product `A ∘ B = A^{1/2} B A^{1/2}`.
//!
//! The crate is organized around five layers:
//!
//! - [`matcore`] — dense complex-matrix kernel: Hermitian eigendecomposition
//!   (cyclic Jacobi), PSD square root, polar decomposition, operator norm,
//!   numerical rank, and seeded random generation of effects, states and
//!   unitaries.
//! - [`effects`] — effects, density operators, projections, the standard
//!   sequential product, Lüders conditioning and outcome probabilities.
//! - [`channels`] — quantum operations in Kraus form and discrete POVMs.
//! - [`axioms`] — numerical checkers for the five conditions characterizing
//!   the sequential product (duality, unit, weak associativity, continuity,
//!   purity) plus derived identities, and a fuzzer that hunts violation
//!   witnesses for non-standard candidate products.
//! - [`classify`] — superoperator (Choi) representation of `B ↦ A ∘ B`,
//!   classification of pure positive maps into conjugation /
//!   anti-conjugation / rank-one-output forms, and a step-by-step numerical
//!   re-execution of the uniqueness argument (polar decomposition,
//!   `U² = μI`, final product identity).
//!
//! All operations are pure functions on immutable values; random number
//! streams are explicit and owned by the caller, so everything is safe to
//! drive from concurrent workers.

pub mod axioms;
pub mod channels;
pub mod classify;
pub mod effects;
pub mod matcore;

pub use matcore::{CMatrix, RngSeed, SplitMix64, ToleranceConfig};

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: ‖M − M*‖ = {defect:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("matrix is not PSD: smallest eigenvalue {min_eigenvalue:.3e} below -{tol:.3e}")]
    NotPsd { min_eigenvalue: f64, tol: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off:.3e})")]
    NoConvergence { sweeps: usize, off: f64 },

    #[error("unsupported dimension {dim}: supported range is {min}..={max}")]
    UnsupportedDim { dim: usize, min: usize, max: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },

    #[error("tolerance {name} must be strictly positive, got {value}")]
    InvalidTolerance { name: &'static str, value: f64 },

    #[error("matrix entries must form a square array: row {row} has {len} entries, expected {dim}")]
    RaggedRows { row: usize, len: usize, dim: usize },

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },

    #[error(
        "matrix is not an effect: spectrum [{min_eig:.6e}, {max_eig:.6e}] outside the \
         [0, 1] tolerance window"
    )]
    NotAnEffect { min_eig: f64, max_eig: f64 },

    #[error("matrix is not a density operator: trace {trace:.6e}, smallest eigenvalue {min_eig:.3e}")]
    NotADensity { trace: f64, min_eig: f64 },

    #[error("matrix is not a projection: ‖P² − P‖ = {defect:.3e}")]
    NotAProjection { defect: f64 },

    #[error("matrix is not unitary: ‖U U* − I‖ = {defect:.3e}")]
    NotUnitary { defect: f64 },

    #[error("Kraus elements are not trace preserving: ‖Σ Aᵢ* Aᵢ − I‖ = {defect:.3e}")]
    NotTracePreserving { defect: f64 },

    #[error("effects do not resolve the identity: ‖Σ Eᵢ − I‖ = {defect:.3e}")]
    NotAResolution { defect: f64 },

    #[error("outcome index {index} out of range for {len} elements")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("candidate product is not affine in its second argument: probe residual {residual:.3e}")]
    NotAffine { residual: f64 },

    #[error("effect is not invertible: smallest eigenvalue {min_eigenvalue:.3e} ≤ {threshold:.3e}")]
    NotInvertible { min_eigenvalue: f64, threshold: f64 },

    #[error("superoperator does not match any pure positive map form (residual {residual:.3e})")]
    UnclassifiedMap { residual: f64 },

    #[error("{0}")]
    InvalidInput(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
