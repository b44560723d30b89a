use std::fmt;
use std::sync::Arc;

use crate::effects::Effect;
use crate::matcore::{op_norm, sqrt_psd, CMatrix, ToleranceConfig};
use crate::{Error, Result};

type ProductFn = dyn Fn(&Effect, &Effect, &ToleranceConfig) -> Result<CMatrix> + Send + Sync;

/// An opaque binary operation on effects submitted for axiom checking.
///
/// The operation must be total on valid effect pairs of equal dimension;
/// whether its outputs are themselves effects is exactly what the closure
/// checker tests, so `apply` returns a raw matrix.
#[derive(Clone)]
pub struct CandidateProduct {
    name: String,
    op: Arc<ProductFn>,
}

impl fmt::Debug for CandidateProduct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CandidateProduct").field("name", &self.name).finish()
    }
}

impl CandidateProduct {
    pub fn custom(
        name: impl Into<String>,
        op: impl Fn(&Effect, &Effect, &ToleranceConfig) -> Result<CMatrix> + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), op: Arc::new(op) }
    }

    /// The standard sequential product `A^{1/2} B A^{1/2}`.
    pub fn standard() -> Self {
        Self::custom("standard", |a, b, tol| {
            let root = sqrt_psd(a.matrix(), tol)?;
            Ok(root.matmul(b.matrix()).matmul(&root).hermitize())
        })
    }

    /// `A^{1/2} Bᵀ A^{1/2}`: the finite-dimensional analog of the
    /// anti-conjugation form, obtained by twisting the second argument with
    /// a transpose.
    pub fn transpose_twisted() -> Self {
        Self::custom("transpose", |a, b, tol| {
            let root = sqrt_psd(a.matrix(), tol)?;
            Ok(root.matmul(&b.matrix().transpose()).matmul(&root).hermitize())
        })
    }

    /// `U A^{1/2} B A^{1/2} U*` for a fixed unitary `U`.
    pub fn unitary_twisted(u: CMatrix, tol: &ToleranceConfig) -> Result<Self> {
        let defect = op_norm(&u.matmul(&u.adjoint()).sub(&CMatrix::identity(u.dim())));
        if defect > tol.eq_tol {
            return Err(Error::NotUnitary { defect });
        }
        let name = format!("unitary({})", u.dim());
        Ok(Self::custom(name, move |a, b, tol| {
            if a.dim() != u.dim() {
                return Err(Error::DimMismatch { left: a.dim(), right: u.dim() });
            }
            let root = sqrt_psd(a.matrix(), tol)?;
            let core = root.matmul(b.matrix()).matmul(&root);
            Ok(u.matmul(&core).matmul(&u.adjoint()).hermitize())
        }))
    }

    /// The Jordan product `(AB + BA)/2`.
    pub fn jordan() -> Self {
        Self::custom("jordan", |a, b, _tol| {
            let ab = a.matrix().matmul(b.matrix());
            let ba = b.matrix().matmul(a.matrix());
            Ok(ab.add(&ba).scale_re(0.5))
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Evaluates the product on a pair of effects of equal dimension.
    pub fn apply(&self, a: &Effect, b: &Effect, tol: &ToleranceConfig) -> Result<CMatrix> {
        if a.dim() != b.dim() {
            return Err(Error::DimMismatch { left: a.dim(), right: b.dim() });
        }
        (self.op)(a, b, tol)
    }
}
