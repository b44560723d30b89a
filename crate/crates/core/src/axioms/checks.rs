//! Numerical checkers for the conditions a sequential product must satisfy,
//! and the fuzzer that runs the whole battery hunting for violation
//! witnesses.
//!
//! Every trial draws its inputs from a stream derived deterministically from
//! `(seed, condition, dim, trial index)`, so reports are independent of
//! evaluation order and reproduce bit-identically.

use super::candidate::CandidateProduct;
use super::report::{ConditionId, ConditionReport, FuzzReport, ViolationWitness, WitnessInputs};
use crate::effects::{DensityOperator, Effect};
use crate::matcore::rng::{
    density_with, effect_with, hermitian_with, rank1_projection_with, unitary_with, MAX_DIM,
    MIN_DIM,
};
use crate::matcore::{derive_seed, eig_symmetrized, op_norm, reassemble, CMatrix, SplitMix64,
    ToleranceConfig};
use crate::{Error, Result};

/// Probe constant for the continuity modulus `‖(A+H)∘B − A∘B‖ ≤ L·‖H‖^{1/2}`.
/// The square-root modulus is the right scale because `A ↦ A^{1/2}` is
/// Hölder-1/2 at spectral zeros.
pub const CONTINUITY_PROBE_CONSTANT: f64 = 100.0;

/// Perturbation sizes `‖H‖ = 10^{-k}` probed by the continuity checker.
pub const CONTINUITY_SCALES: std::ops::RangeInclusive<i32> = 2..=6;

/// Spectral margin used to keep perturbed effects inside the unit window.
const CONTINUITY_MARGIN: f64 = 0.02;

/// Stream tag for the deviation-from-standard sampling inside a fuzz run.
const DEVIATION_TAG: u64 = 99;

fn condition_tolerance(condition: ConditionId, tol: &ToleranceConfig) -> f64 {
    match condition {
        ConditionId::Closure => tol.psd_tol,
        ConditionId::Continuity => CONTINUITY_PROBE_CONSTANT,
        ConditionId::Purity => tol.rank_tol,
        _ => tol.eq_tol,
    }
}

enum TrialOutcome {
    Done { residual: f64, inputs: WitnessInputs, closure_violation: bool },
    Skipped { closure_violation: bool },
}

fn run_trials(
    condition: ConditionId,
    dim: usize,
    trials: usize,
    seed: u64,
    tol: &ToleranceConfig,
    mut trial: impl FnMut(&mut SplitMix64) -> Result<TrialOutcome>,
) -> Result<ConditionReport> {
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be at least 1".into()));
    }
    if !(MIN_DIM..=MAX_DIM).contains(&dim) {
        return Err(Error::UnsupportedDim { dim, min: MIN_DIM, max: MAX_DIM });
    }
    tol.validate()?;

    let tolerance = condition_tolerance(condition, tol);
    let mut max_residual = 0.0_f64;
    let mut argmax: Option<WitnessInputs> = None;
    let mut completed = 0usize;
    let mut skipped = 0usize;
    let mut closure_failures = 0usize;

    for t in 0..trials {
        let mut rng =
            SplitMix64::new(derive_seed(seed, &[condition.tag(), dim as u64, t as u64]));
        match trial(&mut rng)? {
            TrialOutcome::Done { residual, inputs, closure_violation } => {
                completed += 1;
                if closure_violation {
                    closure_failures += 1;
                }
                if argmax.is_none() || residual > max_residual {
                    max_residual = residual;
                    argmax = Some(inputs);
                }
            }
            TrialOutcome::Skipped { closure_violation } => {
                skipped += 1;
                if closure_violation {
                    closure_failures += 1;
                }
            }
        }
    }

    let witness = if max_residual > tolerance {
        argmax.map(|inputs| ViolationWitness { condition, residual: max_residual, inputs })
    } else {
        None
    };
    Ok(ConditionReport {
        condition,
        dim,
        passed: witness.is_none(),
        max_residual,
        tolerance,
        trials: completed,
        skipped,
        closure_failures,
        witness,
    })
}

fn gen_effect(dim: usize, rng: &mut SplitMix64) -> Effect {
    Effect::from_matrix_unchecked(effect_with(dim, rng))
}

fn gen_density(dim: usize, rng: &mut SplitMix64) -> DensityOperator {
    DensityOperator::from_matrix_unchecked(density_with(dim, rng))
}

/// Exactly commuting pair via functional calculus of one random Hermitian:
/// shared Haar eigenbasis, independent uniform spectra.
fn gen_commuting_pair(dim: usize, rng: &mut SplitMix64) -> (Effect, Effect) {
    let basis = unitary_with(dim, rng);
    let spec_a: Vec<f64> = (0..dim).map(|_| rng.next_f64()).collect();
    let spec_b: Vec<f64> = (0..dim).map(|_| rng.next_f64()).collect();
    let a = reassemble(&basis, &spec_a).hermitize();
    let b = reassemble(&basis, &spec_b).hermitize();
    (Effect::from_matrix_unchecked(a), Effect::from_matrix_unchecked(b))
}

/// Random Hermitian direction of unit operator norm.
fn gen_direction(dim: usize, rng: &mut SplitMix64) -> CMatrix {
    let h = hermitian_with(dim, rng);
    h.scale_re(1.0 / op_norm(&h))
}

/// Classifies an intermediate back into the effect window, distinguishing
/// closure violations from genuine numerical errors.
fn effect_gate(m: CMatrix, tol: &ToleranceConfig) -> Result<Option<Effect>> {
    match Effect::new(m, tol) {
        Ok(e) => Ok(Some(e)),
        Err(Error::NotAnEffect { .. }) | Err(Error::NotHermitian { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

// ---------------------------------------------------------------------------
// Per-condition residuals, shared between the search loops and witness replay.
// ---------------------------------------------------------------------------

pub(crate) fn closure_residual(
    prod: &CandidateProduct,
    a: &Effect,
    b: &Effect,
    tol: &ToleranceConfig,
) -> Result<f64> {
    let out = prod.apply(a, b, tol)?;
    let herm_defect = out.hermiticity_defect();
    let (values, _) = eig_symmetrized(&out)?;
    let min = values.first().copied().unwrap_or(0.0);
    let max = values.last().copied().unwrap_or(0.0);
    Ok(herm_defect.max((-min).max(0.0)).max((max - 1.0).max(0.0)))
}

pub(crate) fn duality_residual(
    prod: &CandidateProduct,
    a: &Effect,
    b: &Effect,
    rho: &Effect,
    tol: &ToleranceConfig,
) -> Result<f64> {
    let a_rho = prod.apply(a, rho, tol)?;
    let lhs = a_rho.matmul(b.matrix()).trace();
    let a_b = prod.apply(a, b, tol)?;
    let rhs = rho.matrix().matmul(&a_b).trace();
    Ok((lhs - rhs).norm())
}

pub(crate) fn unit_residual(
    prod: &CandidateProduct,
    a: &Effect,
    tol: &ToleranceConfig,
) -> Result<f64> {
    let identity = Effect::identity(a.dim());
    let right = op_norm(&prod.apply(a, &identity, tol)?.sub(a.matrix()));
    let left = op_norm(&prod.apply(&identity, a, tol)?.sub(a.matrix()));
    Ok(right.max(left))
}

/// `None` when an intermediate leaves the effect window (closure failure).
///
/// The residual combines `‖A∘(A∘B) − (A∘A)∘B‖` with the `A∘A = A²`
/// sub-check.
pub(crate) fn weak_assoc_residual(
    prod: &CandidateProduct,
    a: &Effect,
    b: &Effect,
    tol: &ToleranceConfig,
) -> Result<Option<f64>> {
    let m_aa = prod.apply(a, a, tol)?;
    let a_squared = a.matrix().matmul(a.matrix());
    let sub_check = op_norm(&m_aa.sub(&a_squared));
    let Some(e_aa) = effect_gate(m_aa, tol)? else {
        return Ok(None);
    };
    let m_ab = prod.apply(a, b, tol)?;
    let Some(e_ab) = effect_gate(m_ab, tol)? else {
        return Ok(None);
    };
    let lhs = prod.apply(a, &e_ab, tol)?;
    let rhs = prod.apply(&e_aa, b, tol)?;
    Ok(Some(op_norm(&lhs.sub(&rhs)).max(sub_check)))
}

/// Hölder-1/2 normalized continuity residual `‖(A+H)∘B − A∘B‖ / ‖H‖^{1/2}`.
pub(crate) fn continuity_residual(
    prod: &CandidateProduct,
    a: &Effect,
    b: &Effect,
    perturbation: &CMatrix,
    tol: &ToleranceConfig,
) -> Result<f64> {
    let perturbed = Effect::new(a.matrix().add(perturbation), tol)?;
    let base = prod.apply(a, b, tol)?;
    let moved = prod.apply(&perturbed, b, tol)?;
    let h_norm = op_norm(perturbation);
    if h_norm == 0.0 {
        return Ok(0.0);
    }
    Ok(op_norm(&moved.sub(&base)) / h_norm.sqrt())
}

/// Residual is the second-largest eigenvalue magnitude of `A ∘ p` — zero for
/// outputs of rank 0 or 1. The flag marks outputs outside the effect window;
/// they are still ranked (Hermitian rank counts eigenvalues of either sign)
/// and separately tallied as closure failures.
pub(crate) fn purity_residual(
    prod: &CandidateProduct,
    a: &Effect,
    p: &Effect,
    tol: &ToleranceConfig,
) -> Result<(f64, bool)> {
    let out = prod.apply(a, p, tol)?;
    let herm_defect = out.hermiticity_defect();
    let (values, _) = eig_symmetrized(&out)?;
    let min = values.first().copied().unwrap_or(0.0);
    let max = values.last().copied().unwrap_or(0.0);
    let closure_violation =
        herm_defect > tol.psd_tol || min < -tol.psd_tol || max > 1.0 + tol.psd_tol;
    let mut magnitudes: Vec<f64> = values.iter().map(|l| l.abs()).collect();
    magnitudes.sort_by(|x, y| y.partial_cmp(x).expect("finite eigenvalues"));
    Ok((magnitudes.get(1).copied().unwrap_or(0.0), closure_violation))
}

pub(crate) fn affinity_residual(
    prod: &CandidateProduct,
    a: &Effect,
    b: &Effect,
    c: &Effect,
    lambda: f64,
    tol: &ToleranceConfig,
) -> Result<f64> {
    let combo = Effect::from_matrix_unchecked(
        b.matrix().scale_re(lambda).add(&c.matrix().scale_re(1.0 - lambda)),
    );
    let lhs = prod.apply(a, &combo, tol)?;
    let rhs = prod
        .apply(a, b, tol)?
        .scale_re(lambda)
        .add(&prod.apply(a, c, tol)?.scale_re(1.0 - lambda));
    Ok(op_norm(&lhs.sub(&rhs)))
}

pub(crate) enum HalfDualityTrial {
    Done(f64),
    SkipUnitPrecondition,
    SkipZeroTrace,
    SkipClosure,
}

/// `|Tr((A∘ρ)B) − Tr(B∘(A∘ρ))|`, with `A∘ρ` fed back in as a sub-normalized
/// state. Guards: the unit condition must hold on the sampled inputs (the
/// identity is derived from it) and `Tr(A∘ρ)` must exceed `psd_tol`.
pub(crate) fn half_duality_residual(
    prod: &CandidateProduct,
    a: &Effect,
    b: &Effect,
    rho: &Effect,
    tol: &ToleranceConfig,
) -> Result<HalfDualityTrial> {
    let identity = Effect::identity(a.dim());
    for x in [a, b] {
        let unit_defect = op_norm(&prod.apply(x, &identity, tol)?.sub(x.matrix()));
        if unit_defect > tol.eq_tol {
            return Ok(HalfDualityTrial::SkipUnitPrecondition);
        }
    }
    let eta = prod.apply(a, rho, tol)?;
    if eta.trace().re <= tol.psd_tol {
        return Ok(HalfDualityTrial::SkipZeroTrace);
    }
    let Some(eta_effect) = effect_gate(eta.clone(), tol)? else {
        return Ok(HalfDualityTrial::SkipClosure);
    };
    let lhs = eta.matmul(b.matrix()).trace();
    let rhs = prod.apply(b, &eta_effect, tol)?.trace();
    Ok(HalfDualityTrial::Done((lhs - rhs).norm()))
}

/// `‖(A∘B)∘C − A∘(B∘C)‖` for exactly commuting `A, B`; `None` when an
/// intermediate leaves the effect window.
pub(crate) fn half_assoc_residual(
    prod: &CandidateProduct,
    a: &Effect,
    b: &Effect,
    c: &Effect,
    tol: &ToleranceConfig,
) -> Result<Option<f64>> {
    let Some(e_ab) = effect_gate(prod.apply(a, b, tol)?, tol)? else {
        return Ok(None);
    };
    let Some(e_bc) = effect_gate(prod.apply(b, c, tol)?, tol)? else {
        return Ok(None);
    };
    let lhs = prod.apply(&e_ab, c, tol)?;
    let rhs = prod.apply(a, &e_bc, tol)?;
    Ok(Some(op_norm(&lhs.sub(&rhs))))
}

pub(crate) fn commuting_product_residual(
    prod: &CandidateProduct,
    a: &Effect,
    b: &Effect,
    tol: &ToleranceConfig,
) -> Result<f64> {
    let out = prod.apply(a, b, tol)?;
    Ok(op_norm(&out.sub(&a.matrix().matmul(b.matrix()))))
}

// ---------------------------------------------------------------------------
// Checkers.
// ---------------------------------------------------------------------------

/// Outputs must stay in the effect window `[-psd_tol, 1 + psd_tol]`.
pub fn check_closure(
    prod: &CandidateProduct,
    dim: usize,
    trials: usize,
    seed: u64,
    tol: &ToleranceConfig,
) -> Result<ConditionReport> {
    run_trials(ConditionId::Closure, dim, trials, seed, tol, |rng| {
        let a = gen_effect(dim, rng);
        let b = gen_effect(dim, rng);
        let residual = closure_residual(prod, &a, &b, tol)?;
        let inputs = WitnessInputs {
            a: Some(a.into_matrix()),
            b: Some(b.into_matrix()),
            ..WitnessInputs::default()
        };
        Ok(TrialOutcome::Done { residual, inputs, closure_violation: residual > tol.psd_tol })
    })
}

/// Duality: `Tr((A∘ρ)B) = Tr(ρ(A∘B))`, with the state fed to the product as
/// an effect on the left side.
pub fn check_duality(
    prod: &CandidateProduct,
    dim: usize,
    trials: usize,
    seed: u64,
    tol: &ToleranceConfig,
) -> Result<ConditionReport> {
    run_trials(ConditionId::Duality, dim, trials, seed, tol, |rng| {
        let a = gen_effect(dim, rng);
        let b = gen_effect(dim, rng);
        let rho = gen_density(dim, rng);
        let rho_effect = Effect::from_matrix_unchecked(rho.matrix().clone());
        let residual = duality_residual(prod, &a, &b, &rho_effect, tol)?;
        let inputs = WitnessInputs {
            a: Some(a.into_matrix()),
            b: Some(b.into_matrix()),
            rho: Some(rho.matrix().clone()),
            ..WitnessInputs::default()
        };
        Ok(TrialOutcome::Done { residual, inputs, closure_violation: false })
    })
}

/// Unit: `A ∘ I = I ∘ A = A`.
pub fn check_unit(
    prod: &CandidateProduct,
    dim: usize,
    trials: usize,
    seed: u64,
    tol: &ToleranceConfig,
) -> Result<ConditionReport> {
    run_trials(ConditionId::Unit, dim, trials, seed, tol, |rng| {
        let a = gen_effect(dim, rng);
        let residual = unit_residual(prod, &a, tol)?;
        let inputs = WitnessInputs { a: Some(a.into_matrix()), ..WitnessInputs::default() };
        Ok(TrialOutcome::Done { residual, inputs, closure_violation: false })
    })
}

/// Weak associativity: `A∘(A∘B) = (A∘A)∘B`, with `A∘A = A²` as a sub-check.
/// Trials whose intermediates leave the effect window are skipped and
/// recorded as closure failures.
pub fn check_weak_assoc(
    prod: &CandidateProduct,
    dim: usize,
    trials: usize,
    seed: u64,
    tol: &ToleranceConfig,
) -> Result<ConditionReport> {
    run_trials(ConditionId::WeakAssoc, dim, trials, seed, tol, |rng| {
        let a = gen_effect(dim, rng);
        let b = gen_effect(dim, rng);
        match weak_assoc_residual(prod, &a, &b, tol)? {
            Some(residual) => {
                let inputs = WitnessInputs {
                    a: Some(a.into_matrix()),
                    b: Some(b.into_matrix()),
                    ..WitnessInputs::default()
                };
                Ok(TrialOutcome::Done { residual, inputs, closure_violation: false })
            }
            None => Ok(TrialOutcome::Skipped { closure_violation: true }),
        }
    })
}

/// Continuity probe: shrinking Hermitian perturbations `‖H‖ = 10^{-k}`,
/// `k = 2..6`, must obey `‖(A+H)∘B − A∘B‖ ≤ L·‖H‖^{1/2}` with `L = 100`.
///
/// This is a necessary-condition heuristic for the strong-operator
/// continuity condition, not an equivalence: at finite dimension norm and
/// strong topologies agree, and the Hölder-1/2 modulus is the exact modulus
/// of `A ↦ A^{1/2}` near singular effects.
pub fn check_continuity(
    prod: &CandidateProduct,
    dim: usize,
    trials: usize,
    seed: u64,
    tol: &ToleranceConfig,
) -> Result<ConditionReport> {
    run_trials(ConditionId::Continuity, dim, trials, seed, tol, |rng| {
        let raw = gen_effect(dim, rng);
        // Contract the spectrum into [margin, 1-margin] so A + H stays an
        // effect for every probed ‖H‖ ≤ 10⁻².
        let center = Effect::from_matrix_unchecked(
            raw.matrix()
                .scale_re(1.0 - 2.0 * CONTINUITY_MARGIN)
                .add(&CMatrix::identity(dim).scale_re(CONTINUITY_MARGIN)),
        );
        let b = gen_effect(dim, rng);
        let direction = gen_direction(dim, rng);
        let mut worst = 0.0_f64;
        let mut worst_h = direction.scale_re(10f64.powi(-*CONTINUITY_SCALES.start()));
        for k in CONTINUITY_SCALES {
            let h = direction.scale_re(10f64.powi(-k));
            let residual = continuity_residual(prod, &center, &b, &h, tol)?;
            if residual > worst {
                worst = residual;
                worst_h = h;
            }
        }
        let inputs = WitnessInputs {
            a: Some(center.into_matrix()),
            b: Some(b.into_matrix()),
            perturbation: Some(worst_h),
            ..WitnessInputs::default()
        };
        Ok(TrialOutcome::Done { residual: worst, inputs, closure_violation: false })
    })
}

/// Purity: `A ∘ p` must have rank 0 or 1 for rank-one projections `p`.
pub fn check_purity(
    prod: &CandidateProduct,
    dim: usize,
    trials: usize,
    seed: u64,
    tol: &ToleranceConfig,
) -> Result<ConditionReport> {
    run_trials(ConditionId::Purity, dim, trials, seed, tol, |rng| {
        let a = gen_effect(dim, rng);
        let p = Effect::from_matrix_unchecked(rank1_projection_with(dim, rng));
        let (residual, closure_violation) = purity_residual(prod, &a, &p, tol)?;
        let inputs = WitnessInputs {
            a: Some(a.into_matrix()),
            b: Some(p.into_matrix()),
            ..WitnessInputs::default()
        };
        Ok(TrialOutcome::Done { residual, inputs, closure_violation })
    })
}

/// Affinity of `B ↦ A ∘ B` on convex combinations (implied by duality).
pub fn check_lemma_affinity(
    prod: &CandidateProduct,
    dim: usize,
    trials: usize,
    seed: u64,
    tol: &ToleranceConfig,
) -> Result<ConditionReport> {
    run_trials(ConditionId::Affinity, dim, trials, seed, tol, |rng| {
        let a = gen_effect(dim, rng);
        let b = gen_effect(dim, rng);
        let c = gen_effect(dim, rng);
        let lambda = rng.next_f64();
        let residual = affinity_residual(prod, &a, &b, &c, lambda, tol)?;
        let inputs = WitnessInputs {
            a: Some(a.into_matrix()),
            b: Some(b.into_matrix()),
            c: Some(c.into_matrix()),
            lambda: Some(lambda),
            ..WitnessInputs::default()
        };
        Ok(TrialOutcome::Done { residual, inputs, closure_violation: false })
    })
}

/// Half-duality: `Tr((A∘ρ)B) = Tr(B∘(A∘ρ))`.
pub fn check_half_duality(
    prod: &CandidateProduct,
    dim: usize,
    trials: usize,
    seed: u64,
    tol: &ToleranceConfig,
) -> Result<ConditionReport> {
    run_trials(ConditionId::HalfDuality, dim, trials, seed, tol, |rng| {
        let a = gen_effect(dim, rng);
        let b = gen_effect(dim, rng);
        let rho = gen_density(dim, rng);
        let rho_effect = Effect::from_matrix_unchecked(rho.matrix().clone());
        match half_duality_residual(prod, &a, &b, &rho_effect, tol)? {
            HalfDualityTrial::Done(residual) => {
                let inputs = WitnessInputs {
                    a: Some(a.into_matrix()),
                    b: Some(b.into_matrix()),
                    rho: Some(rho.matrix().clone()),
                    ..WitnessInputs::default()
                };
                Ok(TrialOutcome::Done { residual, inputs, closure_violation: false })
            }
            HalfDualityTrial::SkipClosure => Ok(TrialOutcome::Skipped { closure_violation: true }),
            HalfDualityTrial::SkipUnitPrecondition | HalfDualityTrial::SkipZeroTrace => {
                Ok(TrialOutcome::Skipped { closure_violation: false })
            }
        }
    })
}

/// Associativity over commuting first factors: `(A∘B)∘C = A∘(B∘C)` when
/// `AB = BA`.
pub fn check_commuting_assoc(
    prod: &CandidateProduct,
    dim: usize,
    trials: usize,
    seed: u64,
    tol: &ToleranceConfig,
) -> Result<ConditionReport> {
    run_trials(ConditionId::HalfAssoc, dim, trials, seed, tol, |rng| {
        let (a, b) = gen_commuting_pair(dim, rng);
        let c = gen_effect(dim, rng);
        match half_assoc_residual(prod, &a, &b, &c, tol)? {
            Some(residual) => {
                let inputs = WitnessInputs {
                    a: Some(a.into_matrix()),
                    b: Some(b.into_matrix()),
                    c: Some(c.into_matrix()),
                    ..WitnessInputs::default()
                };
                Ok(TrialOutcome::Done { residual, inputs, closure_violation: false })
            }
            None => Ok(TrialOutcome::Skipped { closure_violation: true }),
        }
    })
}

/// `A ∘ B = AB` on exactly commuting pairs. Not part of the fuzz battery:
/// the conditions only require special cases of this identity, so it is
/// checked as a property of the standard product.
pub fn check_commuting_product(
    prod: &CandidateProduct,
    dim: usize,
    trials: usize,
    seed: u64,
    tol: &ToleranceConfig,
) -> Result<ConditionReport> {
    run_trials(ConditionId::CommutingProduct, dim, trials, seed, tol, |rng| {
        let (a, b) = gen_commuting_pair(dim, rng);
        let residual = commuting_product_residual(prod, &a, &b, tol)?;
        let inputs = WitnessInputs {
            a: Some(a.into_matrix()),
            b: Some(b.into_matrix()),
            ..WitnessInputs::default()
        };
        Ok(TrialOutcome::Done { residual, inputs, closure_violation: false })
    })
}

/// The fuzz battery, in fixed order: closure, the five characterizing
/// conditions, then the derived identities.
const BATTERY: [ConditionId; 9] = [
    ConditionId::Closure,
    ConditionId::Duality,
    ConditionId::Unit,
    ConditionId::WeakAssoc,
    ConditionId::Continuity,
    ConditionId::Purity,
    ConditionId::Affinity,
    ConditionId::HalfDuality,
    ConditionId::HalfAssoc,
];

/// Runs one checker by id.
pub fn check_condition(
    condition: ConditionId,
    prod: &CandidateProduct,
    dim: usize,
    trials: usize,
    seed: u64,
    tol: &ToleranceConfig,
) -> Result<ConditionReport> {
    match condition {
        ConditionId::Closure => check_closure(prod, dim, trials, seed, tol),
        ConditionId::Duality => check_duality(prod, dim, trials, seed, tol),
        ConditionId::Unit => check_unit(prod, dim, trials, seed, tol),
        ConditionId::WeakAssoc => check_weak_assoc(prod, dim, trials, seed, tol),
        ConditionId::Continuity => check_continuity(prod, dim, trials, seed, tol),
        ConditionId::Purity => check_purity(prod, dim, trials, seed, tol),
        ConditionId::Affinity => check_lemma_affinity(prod, dim, trials, seed, tol),
        ConditionId::HalfDuality => check_half_duality(prod, dim, trials, seed, tol),
        ConditionId::HalfAssoc => check_commuting_assoc(prod, dim, trials, seed, tol),
        ConditionId::CommutingProduct => check_commuting_product(prod, dim, trials, seed, tol),
    }
}

/// Runs the full battery across dimensions and measures the candidate's
/// deviation from the standard product on sampled pairs.
pub fn fuzz_candidate(
    prod: &CandidateProduct,
    dims: &[usize],
    trials_per_condition: usize,
    seed: u64,
    tol: &ToleranceConfig,
) -> Result<FuzzReport> {
    if dims.is_empty() {
        return Err(Error::InvalidInput("at least one dimension required".into()));
    }
    let mut reports = Vec::with_capacity(dims.len() * BATTERY.len());
    for &dim in dims {
        for condition in BATTERY {
            reports.push(check_condition(condition, prod, dim, trials_per_condition, seed, tol)?);
        }
    }

    let standard = CandidateProduct::standard();
    let mut max_deviation = 0.0_f64;
    for &dim in dims {
        for t in 0..trials_per_condition.min(64) {
            let mut rng =
                SplitMix64::new(derive_seed(seed, &[DEVIATION_TAG, dim as u64, t as u64]));
            let a = gen_effect(dim, &mut rng);
            let b = gen_effect(dim, &mut rng);
            let dev =
                op_norm(&prod.apply(&a, &b, tol)?.sub(&standard.apply(&a, &b, tol)?));
            max_deviation = max_deviation.max(dev);
        }
    }

    let five = [
        ConditionId::Duality,
        ConditionId::Unit,
        ConditionId::WeakAssoc,
        ConditionId::Continuity,
        ConditionId::Purity,
    ];
    let five_pass =
        reports.iter().filter(|r| five.contains(&r.condition)).all(|r| r.passed);
    let theorem_tension = five_pass && max_deviation > tol.eq_tol;
    let all_passed = reports.iter().all(|r| r.passed);

    Ok(FuzzReport {
        candidate: prod.name().to_string(),
        dims: dims.to_vec(),
        trials_per_condition,
        seed,
        reports,
        max_deviation_from_standard: max_deviation,
        theorem_tension,
        all_passed,
    })
}

/// Recomputes a witness's residual from its stored inputs.
///
/// The computation mirrors the checker that produced the witness, so the
/// result matches the stored residual bit-for-bit on the same platform.
pub fn replay_witness(
    prod: &CandidateProduct,
    witness: &ViolationWitness,
    tol: &ToleranceConfig,
) -> Result<f64> {
    fn need(m: &Option<CMatrix>, what: &str) -> Result<CMatrix> {
        m.clone().ok_or_else(|| Error::InvalidInput(format!("witness is missing input {what}")))
    }
    let inputs = &witness.inputs;
    let effect = |m: CMatrix| Effect::new(m, tol);
    match witness.condition {
        ConditionId::Closure => {
            let a = effect(need(&inputs.a, "a")?)?;
            let b = effect(need(&inputs.b, "b")?)?;
            closure_residual(prod, &a, &b, tol)
        }
        ConditionId::Duality => {
            let a = effect(need(&inputs.a, "a")?)?;
            let b = effect(need(&inputs.b, "b")?)?;
            let rho = effect(need(&inputs.rho, "rho")?)?;
            duality_residual(prod, &a, &b, &rho, tol)
        }
        ConditionId::Unit => {
            let a = effect(need(&inputs.a, "a")?)?;
            unit_residual(prod, &a, tol)
        }
        ConditionId::WeakAssoc => {
            let a = effect(need(&inputs.a, "a")?)?;
            let b = effect(need(&inputs.b, "b")?)?;
            weak_assoc_residual(prod, &a, &b, tol)?.ok_or_else(|| {
                Error::InvalidInput("witness intermediates leave the effect window".into())
            })
        }
        ConditionId::Continuity => {
            let a = effect(need(&inputs.a, "a")?)?;
            let b = effect(need(&inputs.b, "b")?)?;
            let h = need(&inputs.perturbation, "perturbation")?;
            continuity_residual(prod, &a, &b, &h, tol)
        }
        ConditionId::Purity => {
            let a = effect(need(&inputs.a, "a")?)?;
            let p = effect(need(&inputs.b, "b")?)?;
            Ok(purity_residual(prod, &a, &p, tol)?.0)
        }
        ConditionId::Affinity => {
            let a = effect(need(&inputs.a, "a")?)?;
            let b = effect(need(&inputs.b, "b")?)?;
            let c = effect(need(&inputs.c, "c")?)?;
            let lambda = inputs
                .lambda
                .ok_or_else(|| Error::InvalidInput("witness is missing input lambda".into()))?;
            affinity_residual(prod, &a, &b, &c, lambda, tol)
        }
        ConditionId::HalfDuality => {
            let a = effect(need(&inputs.a, "a")?)?;
            let b = effect(need(&inputs.b, "b")?)?;
            let rho = effect(need(&inputs.rho, "rho")?)?;
            match half_duality_residual(prod, &a, &b, &rho, tol)? {
                HalfDualityTrial::Done(residual) => Ok(residual),
                _ => Err(Error::InvalidInput("witness inputs hit a skip guard".into())),
            }
        }
        ConditionId::HalfAssoc => {
            let a = effect(need(&inputs.a, "a")?)?;
            let b = effect(need(&inputs.b, "b")?)?;
            let c = effect(need(&inputs.c, "c")?)?;
            half_assoc_residual(prod, &a, &b, &c, tol)?.ok_or_else(|| {
                Error::InvalidInput("witness intermediates leave the effect window".into())
            })
        }
        ConditionId::CommutingProduct => {
            let a = effect(need(&inputs.a, "a")?)?;
            let b = effect(need(&inputs.b, "b")?)?;
            commuting_product_residual(prod, &a, &b, tol)
        }
    }
}
