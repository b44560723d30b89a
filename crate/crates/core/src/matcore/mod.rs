//! Dense complex-matrix kernel.
//!
//! Everything downstream (effects, channels, axiom checkers, the Choi
//! classifier) is built from the primitives here: a square complex matrix
//! container, a cyclic-Jacobi Hermitian eigensolver and its derived matrix
//! functions, and deterministic seeded sampling.

mod cmatrix;
mod eig;
pub mod rng;

pub use cmatrix::CMatrix;
pub use eig::{hermitian_eig, numerical_rank, op_norm, polar_decompose, sqrt_psd};
pub use rng::{
    derive_seed, random_density, random_effect, random_rank1_projection, random_unitary,
    SplitMix64,
};

pub(crate) use eig::{eig_symmetrized, reassemble};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Seed for the deterministic generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl From<u64> for RngSeed {
    fn from(seed: u64) -> Self {
        Self(seed)
    }
}

/// Numerical tolerances used throughout the crate.
///
/// `hermit_tol` bounds the Hermiticity defect of inputs, `psd_tol` is the
/// eigenvalue floor below which a matrix stops being PSD (values in
/// `[-psd_tol, 0)` are clamped), `eq_tol` is the operator-norm equality
/// tolerance, and `rank_tol` the eigenvalue threshold for numerical rank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    pub hermit_tol: f64,
    pub psd_tol: f64,
    pub eq_tol: f64,
    pub rank_tol: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self { hermit_tol: 1e-10, psd_tol: 1e-9, eq_tol: 1e-8, rank_tol: 1e-7 }
    }
}

impl ToleranceConfig {
    /// All tolerances must be strictly positive.
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("hermit_tol", self.hermit_tol),
            ("psd_tol", self.psd_tol),
            ("eq_tol", self.eq_tol),
            ("rank_tol", self.rank_tol),
        ] {
            if value.is_nan() || value <= 0.0 || !value.is_finite() {
                return Err(Error::InvalidTolerance { name, value });
            }
        }
        Ok(())
    }

    /// The recommended ordering `psd_tol < eq_tol` is advisory: violating it
    /// produces a warning message, not an error.
    pub fn ordering_warning(&self) -> Option<String> {
        if self.psd_tol >= self.eq_tol {
            Some(format!(
                "psd_tol ({:.3e}) >= eq_tol ({:.3e}); the recommended ordering is psd_tol < eq_tol",
                self.psd_tol, self.eq_tol
            ))
        } else {
            None
        }
    }
}
