//! Quantum effects, density operators, projections, and the standard
//! sequential product `A ∘ B = A^{1/2} B A^{1/2}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::matcore::{hermitian_eig, op_norm, sqrt_psd, CMatrix, ToleranceConfig};
use crate::{Error, Result};

/// A quantum effect: Hermitian with spectrum in `[0, 1]` (within tolerance).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Effect {
    matrix: CMatrix,
}

impl Effect {
    /// Validates Hermiticity within `hermit_tol` and spectrum within
    /// `[-psd_tol, 1 + psd_tol]`.
    pub fn new(matrix: CMatrix, tol: &ToleranceConfig) -> Result<Self> {
        let (values, _) = hermitian_eig(&matrix, tol)?;
        let min_eig = values.first().copied().unwrap_or(0.0);
        let max_eig = values.last().copied().unwrap_or(0.0);
        if min_eig < -tol.psd_tol || max_eig > 1.0 + tol.psd_tol {
            return Err(Error::NotAnEffect { min_eig, max_eig });
        }
        Ok(Self { matrix })
    }

    /// Constructor for matrices already known valid (generator outputs,
    /// conjugations of effects). Debug builds still assert Hermiticity.
    pub(crate) fn from_matrix_unchecked(matrix: CMatrix) -> Self {
        debug_assert!(matrix.hermiticity_defect() <= 1e-8);
        Self { matrix }
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: CMatrix::identity(dim) }
    }

    pub fn zero(dim: usize) -> Self {
        Self { matrix: CMatrix::zeros(dim) }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Unique PSD square root of this effect.
    pub fn sqrt(&self, tol: &ToleranceConfig) -> Result<CMatrix> {
        sqrt_psd(&self.matrix, tol)
    }

    /// Eigenvalues, ascending, with out-of-window rounding clamped onto
    /// `[0, 1]` for reporting.
    pub fn clamped_spectrum(&self, tol: &ToleranceConfig) -> Result<Vec<f64>> {
        let (values, _) = hermitian_eig(&self.matrix, tol)?;
        Ok(values.into_iter().map(|l| l.clamp(0.0, 1.0)).collect())
    }
}

/// A quantum state. `sub_normalized` marks trace-class operators with trace
/// in `[0, 1]` (conditioning intermediates) as opposed to proper states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityOperator {
    matrix: CMatrix,
    sub_normalized: bool,
}

impl DensityOperator {
    /// Validates PSD within `psd_tol` and `|Tr − 1| ≤ 1e-10`.
    pub fn new(matrix: CMatrix, tol: &ToleranceConfig) -> Result<Self> {
        let (values, _) = hermitian_eig(&matrix, tol)?;
        let min_eig = values.first().copied().unwrap_or(0.0);
        let trace = matrix.trace().re;
        if min_eig < -tol.psd_tol || (trace - 1.0).abs() > 1e-10 {
            return Err(Error::NotADensity { trace, min_eig });
        }
        Ok(Self { matrix, sub_normalized: false })
    }

    /// Sub-normalized variant: PSD with trace in `[0, 1]` (within tolerance).
    pub fn new_sub_normalized(matrix: CMatrix, tol: &ToleranceConfig) -> Result<Self> {
        let (values, _) = hermitian_eig(&matrix, tol)?;
        let min_eig = values.first().copied().unwrap_or(0.0);
        let trace = matrix.trace().re;
        if min_eig < -tol.psd_tol || trace < -tol.psd_tol || trace > 1.0 + tol.psd_tol {
            return Err(Error::NotADensity { trace, min_eig });
        }
        Ok(Self { matrix, sub_normalized: true })
    }

    pub(crate) fn from_matrix_unchecked(matrix: CMatrix) -> Self {
        Self { matrix, sub_normalized: false }
    }

    /// Pure state `|ψ⟩⟨ψ|` from a (not necessarily normalized) vector.
    pub fn pure_state(v: &[Complex64]) -> Result<Self> {
        let norm_sqr: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if norm_sqr <= 0.0 {
            return Err(Error::InvalidInput("pure state vector must be nonzero".into()));
        }
        let normalized: Vec<Complex64> =
            v.iter().map(|z| z / Complex64::new(norm_sqr.sqrt(), 0.0)).collect();
        Ok(Self { matrix: CMatrix::from_outer(&normalized), sub_normalized: false })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { matrix: CMatrix::identity(dim).scale_re(1.0 / dim as f64), sub_normalized: false }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn is_sub_normalized(&self) -> bool {
        self.sub_normalized
    }

    /// A state is PSD with trace ≤ 1, hence its spectrum sits in `[0, 1]`
    /// and it can be read as an effect (the duality conditions do exactly
    /// that with the first product argument).
    pub fn as_effect(&self, tol: &ToleranceConfig) -> Result<Effect> {
        Effect::new(self.matrix.clone(), tol)
    }
}

/// An orthogonal projection: an effect with `‖P² − P‖ ≤ eq_tol`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Projection {
    effect: Effect,
}

impl Projection {
    pub fn new(matrix: CMatrix, tol: &ToleranceConfig) -> Result<Self> {
        let effect = Effect::new(matrix, tol)?;
        let defect = op_norm(&effect.matrix.matmul(&effect.matrix).sub(&effect.matrix));
        if defect > tol.eq_tol {
            return Err(Error::NotAProjection { defect });
        }
        Ok(Self { effect })
    }

    /// `|k⟩⟨k|` in the computational basis.
    pub fn basis_state(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::IndexOutOfRange { index: k, len: dim });
        }
        let mut diag = vec![0.0; dim];
        diag[k] = 1.0;
        Ok(Self { effect: Effect::from_matrix_unchecked(CMatrix::from_diag(&diag)) })
    }

    /// Rank-one projection onto the span of `v`.
    pub fn from_vector(v: &[Complex64]) -> Result<Self> {
        let norm_sqr: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if norm_sqr <= 0.0 {
            return Err(Error::InvalidInput("projection vector must be nonzero".into()));
        }
        let normalized: Vec<Complex64> =
            v.iter().map(|z| z / Complex64::new(norm_sqr.sqrt(), 0.0)).collect();
        Ok(Self { effect: Effect::from_matrix_unchecked(CMatrix::from_outer(&normalized)) })
    }

    pub fn effect(&self) -> &Effect {
        &self.effect
    }

    pub fn matrix(&self) -> &CMatrix {
        self.effect.matrix()
    }

    pub fn dim(&self) -> usize {
        self.effect.dim()
    }
}

/// Result of conditioning on an effect: either a proper post-measurement
/// state, or the marker that the outcome has probability (numerically) zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Conditioned {
    State(DensityOperator),
    ZeroOutcome,
}

impl Conditioned {
    pub fn state(&self) -> Option<&DensityOperator> {
        match self {
            Conditioned::State(rho) => Some(rho),
            Conditioned::ZeroOutcome => None,
        }
    }
}

fn check_same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimMismatch { left: a, right: b });
    }
    Ok(())
}

/// The standard sequential product `A ∘ B = A^{1/2} B A^{1/2}`.
///
/// The result is again an effect (`A ∘ B ≤ A ≤ I` and PSD up to rounding).
pub fn standard_seq_product(a: &Effect, b: &Effect, tol: &ToleranceConfig) -> Result<Effect> {
    check_same_dim(a.dim(), b.dim())?;
    let root = a.sqrt(tol)?;
    let out = root.matmul(b.matrix()).matmul(&root).hermitize();
    Ok(Effect::from_matrix_unchecked(out))
}

/// Conjugation form used by checkers on raw matrices: `√A · M · √A`.
pub(crate) fn conjugate_by_root(root: &CMatrix, m: &CMatrix) -> CMatrix {
    root.matmul(m).matmul(root).hermitize()
}

/// `Tr(ρ A)`, the probability of observing `A` in state `ρ`. Values within
/// `psd_tol` of the boundary are clamped onto `[0, 1]`.
pub fn probability(rho: &DensityOperator, a: &Effect, tol: &ToleranceConfig) -> Result<f64> {
    check_same_dim(rho.dim(), a.dim())?;
    let p = rho.matrix().matmul(a.matrix()).trace().re;
    if (-tol.psd_tol..0.0).contains(&p) {
        return Ok(0.0);
    }
    if p > 1.0 && p <= 1.0 + tol.psd_tol {
        return Ok(1.0);
    }
    Ok(p)
}

/// Lüders conditioning: `ρ|A = A^{1/2} ρ A^{1/2} / Tr(ρ A)` when the
/// outcome probability exceeds `psd_tol`, otherwise [`Conditioned::ZeroOutcome`].
pub fn luders_condition(
    rho: &DensityOperator,
    a: &Effect,
    tol: &ToleranceConfig,
) -> Result<Conditioned> {
    check_same_dim(rho.dim(), a.dim())?;
    let p = rho.matrix().matmul(a.matrix()).trace().re;
    if p <= tol.psd_tol {
        return Ok(Conditioned::ZeroOutcome);
    }
    let root = a.sqrt(tol)?;
    let updated = conjugate_by_root(&root, rho.matrix()).scale_re(1.0 / p);
    Ok(Conditioned::State(DensityOperator::from_matrix_unchecked(updated)))
}

/// `‖AB − BA‖ ≤ eq_tol` in operator norm.
pub fn commutes(a: &Effect, b: &Effect, tol: &ToleranceConfig) -> Result<bool> {
    check_same_dim(a.dim(), b.dim())?;
    let ab = a.matrix().matmul(b.matrix());
    let ba = b.matrix().matmul(a.matrix());
    Ok(op_norm(&ab.sub(&ba)) <= tol.eq_tol)
}
