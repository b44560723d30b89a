//! Quantum operations in Kraus form and discrete POVMs, plus the instrument
//! bridging the two: a POVM `{E_i}` induces the operation with elements
//! `{E_i^{1/2}}`.

use serde::{Deserialize, Serialize};

use crate::effects::{Conditioned, DensityOperator, Effect};
use crate::matcore::rng::{ginibre_with, SplitMix64};
use crate::matcore::{eig_symmetrized, op_norm, reassemble, CMatrix, ToleranceConfig};
use crate::{Error, Result};

/// A trace-preserving quantum operation `ρ ↦ Σ Aᵢ ρ Aᵢ*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrausChannel {
    elements: Vec<CMatrix>,
    dim: usize,
}

impl KrausChannel {
    /// Validates completeness: `‖Σ Aᵢ* Aᵢ − I‖ ≤ eq_tol`.
    pub fn new(elements: Vec<CMatrix>, tol: &ToleranceConfig) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidInput("channel needs at least one element".into()));
        }
        let dim = elements[0].dim();
        for e in &elements {
            if e.dim() != dim {
                return Err(Error::DimMismatch { left: e.dim(), right: dim });
            }
        }
        let mut sum = CMatrix::zeros(dim);
        for e in &elements {
            sum = sum.add(&e.adjoint().matmul(e));
        }
        let defect = op_norm(&sum.sub(&CMatrix::identity(dim)));
        if defect > tol.eq_tol {
            return Err(Error::NotTracePreserving { defect });
        }
        Ok(Self { elements, dim })
    }

    pub fn identity(dim: usize) -> Self {
        Self { elements: vec![CMatrix::identity(dim)], dim }
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// A discrete positive operator-valued measure: effects resolving the
/// identity, `Σ Eᵢ = I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretePOVM {
    effects: Vec<Effect>,
    dim: usize,
}

impl DiscretePOVM {
    pub fn new(effects: Vec<Effect>, tol: &ToleranceConfig) -> Result<Self> {
        if effects.is_empty() {
            return Err(Error::InvalidInput("POVM needs at least one effect".into()));
        }
        let dim = effects[0].dim();
        for e in &effects {
            if e.dim() != dim {
                return Err(Error::DimMismatch { left: e.dim(), right: dim });
            }
        }
        let mut sum = CMatrix::zeros(dim);
        for e in &effects {
            sum = sum.add(e.matrix());
        }
        let defect = op_norm(&sum.sub(&CMatrix::identity(dim)));
        if defect > tol.eq_tol {
            return Err(Error::NotAResolution { defect });
        }
        Ok(Self { effects, dim })
    }

    pub fn effects(&self) -> &[Effect] {
        &self.effects
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// `𝔄(ρ) = Σ Aᵢ ρ Aᵢ*`.
pub fn apply_channel(ch: &KrausChannel, rho: &DensityOperator) -> Result<DensityOperator> {
    if ch.dim() != rho.dim() {
        return Err(Error::DimMismatch { left: ch.dim(), right: rho.dim() });
    }
    let mut out = CMatrix::zeros(ch.dim());
    for a in ch.elements() {
        out = out.add(&a.matmul(rho.matrix()).matmul(&a.adjoint()));
    }
    Ok(DensityOperator::from_matrix_unchecked(out.hermitize()))
}

/// Post-measurement state for outcome `i`: `Aᵢ ρ Aᵢ* / Tr(Aᵢ ρ Aᵢ*)`, or
/// [`Conditioned::ZeroOutcome`] when the outcome probability is ≤ `psd_tol`.
pub fn outcome_update(
    ch: &KrausChannel,
    i: usize,
    rho: &DensityOperator,
    tol: &ToleranceConfig,
) -> Result<Conditioned> {
    if ch.dim() != rho.dim() {
        return Err(Error::DimMismatch { left: ch.dim(), right: rho.dim() });
    }
    let a = ch
        .elements()
        .get(i)
        .ok_or(Error::IndexOutOfRange { index: i, len: ch.len() })?;
    let raw = a.matmul(rho.matrix()).matmul(&a.adjoint()).hermitize();
    let p = raw.trace().re;
    if p <= tol.psd_tol {
        return Ok(Conditioned::ZeroOutcome);
    }
    Ok(Conditioned::State(DensityOperator::from_matrix_unchecked(raw.scale_re(1.0 / p))))
}

/// The instrument of a POVM: the channel with elements `Eᵢ^{1/2}`.
pub fn instrument_from_povm(povm: &DiscretePOVM, tol: &ToleranceConfig) -> Result<KrausChannel> {
    let roots = povm
        .effects()
        .iter()
        .map(|e| e.sqrt(tol))
        .collect::<Result<Vec<_>>>()?;
    KrausChannel::new(roots, tol)
}

/// Residual of the conditional-probability identity
/// `Eᵢ^{1/2} ρ Eᵢ^{1/2} = Tr(ρ Eᵢ) · (ρ|Eᵢ)`.
///
/// When `Tr(ρ Eᵢ) ≤ psd_tol` the conditioned state is undefined and the
/// residual is the norm of the unnormalized left side against zero.
pub fn check_proba_identity(
    povm: &DiscretePOVM,
    i: usize,
    rho: &DensityOperator,
    tol: &ToleranceConfig,
) -> Result<f64> {
    if povm.dim() != rho.dim() {
        return Err(Error::DimMismatch { left: povm.dim(), right: rho.dim() });
    }
    let e = povm
        .effects()
        .get(i)
        .ok_or(Error::IndexOutOfRange { index: i, len: povm.len() })?;
    let root = e.sqrt(tol)?;
    let lhs = root.matmul(rho.matrix()).matmul(&root).hermitize();
    let p = rho.matrix().matmul(e.matrix()).trace().re;
    match crate::effects::luders_condition(rho, e, tol)? {
        Conditioned::State(cond) => Ok(op_norm(&lhs.sub(&cond.matrix().scale_re(p)))),
        Conditioned::ZeroOutcome => Ok(op_norm(&lhs)),
    }
}

/// Random POVM with `outcomes` effects: draw PSD blocks `G_j = g g*`, then
/// normalize with `S^{-1/2} G_j S^{-1/2}` for `S = Σ G_j`, which resolves
/// the identity exactly up to rounding. `S` is shifted by `psd_tol·I`
/// when near-singular.
pub fn random_povm(
    dim: usize,
    outcomes: usize,
    seed: u64,
    tol: &ToleranceConfig,
) -> Result<DiscretePOVM> {
    if outcomes == 0 {
        return Err(Error::InvalidInput("POVM needs at least one outcome".into()));
    }
    if !(crate::matcore::rng::MIN_DIM..=crate::matcore::rng::MAX_DIM).contains(&dim) {
        return Err(Error::UnsupportedDim {
            dim,
            min: crate::matcore::rng::MIN_DIM,
            max: crate::matcore::rng::MAX_DIM,
        });
    }
    let mut rng = SplitMix64::new(seed);
    let blocks: Vec<CMatrix> = (0..outcomes)
        .map(|_| {
            let g = ginibre_with(dim, &mut rng);
            g.matmul(&g.adjoint()).hermitize()
        })
        .collect();
    let mut s = CMatrix::zeros(dim);
    for b in &blocks {
        s = s.add(b);
    }
    let (mut values, mut vectors) = eig_symmetrized(&s)?;
    if values.first().copied().unwrap_or(0.0) < tol.psd_tol {
        // Near-singular normalizer: shift before inverting.
        s = s.add(&CMatrix::identity(dim).scale_re(tol.psd_tol));
        (values, vectors) = eig_symmetrized(&s)?;
    }
    let inv_roots: Vec<f64> = values
        .iter()
        .map(|&l| if l > tol.psd_tol { 1.0 / l.sqrt() } else { 0.0 })
        .collect();
    let s_inv_root = reassemble(&vectors, &inv_roots).hermitize();
    let effects = blocks
        .into_iter()
        .map(|g| {
            let e = s_inv_root.matmul(&g).matmul(&s_inv_root).hermitize();
            Effect::new(e, tol)
        })
        .collect::<Result<Vec<_>>>()?;
    DiscretePOVM::new(effects, tol)
}
