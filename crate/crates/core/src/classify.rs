//! Superoperator (Choi) representation of `Φ_A : B ↦ A ∘ B`, classification
//! of pure positive maps into the three structural forms — conjugation
//! `ρ ↦ C*ρC`, anti-conjugation `ρ ↦ C*ρᵀC`, rank-one output
//! `ρ ↦ Tr(ρB)·P_ψ` — and a step-by-step numerical re-execution of the
//! uniqueness argument for the sequential product.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::axioms::CandidateProduct;
use crate::effects::{DensityOperator, Effect};
use crate::matcore::rng::{density_with, effect_with};
use crate::matcore::{
    derive_seed, eig_symmetrized, hermitian_eig, op_norm, polar_decompose, sqrt_psd, CMatrix,
    SplitMix64, ToleranceConfig,
};
use crate::{Error, Result};

/// Internal stream tags for the deterministic probe sets.
const AFFINE_PROBE_TAG: u64 = 3001;
const TRACE_PROBE_TAG: u64 = 3002;

/// A linear map on matrices, stored through its Choi matrix
/// `J(Φ) = Σ_{jk} Φ(e_jk) ⊗ e_jk` with composite index `(a, c) ↦ a·dim + c`,
/// so that `J[(a,j), (b,k)] = Φ(e_jk)[a][b]`.
///
/// With this ordering a conjugation `ρ ↦ KρK*` has `J = v v*` for the
/// row-major vectorization `v = vec_row(K)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Superoperator {
    dim: usize,
    choi: CMatrix,
}

impl Superoperator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn choi(&self) -> &CMatrix {
        &self.choi
    }

    /// Builds from the map's images of all matrix units.
    pub fn from_matrix_map(dim: usize, map: impl Fn(&CMatrix) -> CMatrix) -> Self {
        let mut choi = CMatrix::zeros(dim * dim);
        for j in 0..dim {
            for k in 0..dim {
                let mut unit = CMatrix::zeros(dim);
                unit.set(j, k, Complex64::new(1.0, 0.0));
                let image = map(&unit);
                for a in 0..dim {
                    for b in 0..dim {
                        choi.set(a * dim + j, b * dim + k, image.get(a, b));
                    }
                }
            }
        }
        Self { dim, choi }
    }

    /// Image of the matrix unit `e_jk`.
    pub fn matrix_unit_image(&self, j: usize, k: usize) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim);
        for a in 0..self.dim {
            for b in 0..self.dim {
                out.set(a, b, self.choi.get(a * self.dim + j, b * self.dim + k));
            }
        }
        out
    }

    /// Applies the map by linearity over matrix units.
    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.dim() != self.dim {
            return Err(Error::DimMismatch { left: x.dim(), right: self.dim });
        }
        let mut out = CMatrix::zeros(self.dim);
        for a in 0..self.dim {
            for b in 0..self.dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..self.dim {
                    for k in 0..self.dim {
                        acc += x.get(j, k) * self.choi.get(a * self.dim + j, b * self.dim + k);
                    }
                }
                out.set(a, b, acc);
            }
        }
        Ok(out)
    }

    /// Choi matrix of `Φ ∘ T` (the map precomposed with transposition):
    /// an index shuffle `J'[(a,c),(b,d)] = J[(a,d),(b,c)]`.
    pub fn compose_transpose(&self) -> Self {
        let mut choi = CMatrix::zeros(self.dim * self.dim);
        for a in 0..self.dim {
            for c in 0..self.dim {
                for b in 0..self.dim {
                    for d in 0..self.dim {
                        choi.set(
                            a * self.dim + c,
                            b * self.dim + d,
                            self.choi.get(a * self.dim + d, b * self.dim + c),
                        );
                    }
                }
            }
        }
        Self { dim: self.dim, choi }
    }
}

/// Builds the superoperator of `B ↦ prod(A, B)` by evaluating the affine
/// extension on matrix units.
///
/// Off-diagonal units are reached through rank-one projection probes:
/// with `S_jk` the projector onto `(|j⟩+|k⟩)/√2` and `T_jk` the projector
/// onto `(|j⟩+i|k⟩)/√2`,
/// `e_jk = S_jk + i·T_jk − (1+i)/2·(e_jj + e_kk)`.
///
/// The extension is only well defined for products affine in their second
/// argument; a deterministic probe set guards this and returns
/// [`Error::NotAffine`] otherwise.
pub fn superoperator_from_product(
    prod: &CandidateProduct,
    a: &Effect,
    tol: &ToleranceConfig,
) -> Result<Superoperator> {
    let dim = a.dim();
    probe_affinity(prod, a, tol)?;

    // Diagonal images Φ(e_jj).
    let mut diag_images: Vec<CMatrix> = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut unit = CMatrix::zeros(dim);
        unit.set(j, j, Complex64::new(1.0, 0.0));
        diag_images.push(prod.apply(a, &Effect::from_matrix_unchecked(unit), tol)?);
    }

    let mut choi = CMatrix::zeros(dim * dim);
    let write_image = |j: usize, k: usize, image: &CMatrix, choi: &mut CMatrix| {
        for r in 0..dim {
            for c in 0..dim {
                choi.set(r * dim + j, c * dim + k, image.get(r, c));
            }
        }
    };
    for j in 0..dim {
        write_image(j, j, &diag_images[j].clone(), &mut choi);
    }

    let half = Complex64::new(0.5, 0.0);
    let i_half = Complex64::new(0.0, 0.5);
    for j in 0..dim {
        for k in j + 1..dim {
            let mut s = CMatrix::zeros(dim);
            s.set(j, j, half);
            s.set(k, k, half);
            s.set(j, k, half);
            s.set(k, j, half);
            let mut t = CMatrix::zeros(dim);
            t.set(j, j, half);
            t.set(k, k, half);
            t.set(j, k, -i_half);
            t.set(k, j, i_half);

            let img_s = prod.apply(a, &Effect::from_matrix_unchecked(s), tol)?;
            let img_t = prod.apply(a, &Effect::from_matrix_unchecked(t), tol)?;
            let diag_sum = diag_images[j].add(&diag_images[k]);

            // Φ(e_jk) = Φ(S) + i·Φ(T) − (1+i)/2·(Φ(e_jj) + Φ(e_kk)).
            let img_jk = img_s
                .add(&img_t.scale(Complex64::new(0.0, 1.0)))
                .sub(&diag_sum.scale(Complex64::new(0.5, 0.5)));
            // Φ(e_kj) = Φ(S) − i·Φ(T) − (1−i)/2·(Φ(e_jj) + Φ(e_kk)).
            let img_kj = img_s
                .sub(&img_t.scale(Complex64::new(0.0, 1.0)))
                .sub(&diag_sum.scale(Complex64::new(0.5, -0.5)));

            write_image(j, k, &img_jk, &mut choi);
            write_image(k, j, &img_kj, &mut choi);
        }
    }
    Ok(Superoperator { dim, choi })
}

fn probe_affinity(prod: &CandidateProduct, a: &Effect, tol: &ToleranceConfig) -> Result<()> {
    let dim = a.dim();
    let mut rng = SplitMix64::new(derive_seed(AFFINE_PROBE_TAG, &[dim as u64]));
    let b1 = Effect::from_matrix_unchecked(effect_with(dim, &mut rng));
    let b2 = Effect::from_matrix_unchecked(effect_with(dim, &mut rng));

    let img1 = prod.apply(a, &b1, tol)?;
    let img2 = prod.apply(a, &b2, tol)?;

    let lambda = 0.3;
    let combo = Effect::from_matrix_unchecked(
        b1.matrix().scale_re(lambda).add(&b2.matrix().scale_re(1.0 - lambda)),
    );
    let r_convex = op_norm(
        &prod
            .apply(a, &combo, tol)?
            .sub(&img1.scale_re(lambda).add(&img2.scale_re(1.0 - lambda))),
    );
    let scaled = Effect::from_matrix_unchecked(b1.matrix().scale_re(0.5));
    let r_homog = op_norm(&prod.apply(a, &scaled, tol)?.sub(&img1.scale_re(0.5)));
    let r_zero = op_norm(&prod.apply(a, &Effect::zero(dim), tol)?);

    let residual = r_convex.max(r_homog).max(r_zero);
    if residual > tol.eq_tol {
        return Err(Error::NotAffine { residual });
    }
    Ok(())
}

/// The structural forms of a pure positive map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DavisForm {
    /// `Φ(ρ) = C*ρC`.
    Conjugation,
    /// `Φ(ρ) = C*ρᵀC` (transpose realizes the conjugate-linear case).
    AntiConjugation,
    /// `Φ(ρ) = Tr(ρB)·P_ψ`.
    RankOneOutput,
    Unclassified,
}

/// Classification result, reconstruction-validated: whatever form is
/// returned, rebuilding the map from the returned parameters reproduces the
/// input superoperator on all matrix units within `eq_tol`, else the form
/// degrades to [`DavisForm::Unclassified`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DavisClassification {
    pub form: DavisForm,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub c: Option<CMatrix>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub b_op: Option<CMatrix>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub psi: Option<Vec<[f64; 2]>>,
    pub residual: f64,
}

impl DavisClassification {
    fn unclassified(residual: f64) -> Self {
        Self { form: DavisForm::Unclassified, c: None, b_op: None, psi: None, residual }
    }

    pub fn psi_vector(&self) -> Option<Vec<Complex64>> {
        self.psi
            .as_ref()
            .map(|v| v.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
    }
}

enum RankOneVerdict {
    RankOne { vector: Vec<Complex64> },
    Zero,
    NotRankOne,
    Borderline,
    NotPsd,
}

/// Rank-one test on a (supposedly PSD) Choi spectrum, with the borderline
/// guard: a second eigenvalue within a factor 10 of `rank_tol` forces the
/// no-guess verdict.
fn rank_one_verdict(choi: &CMatrix, tol: &ToleranceConfig) -> Result<RankOneVerdict> {
    let (values, vectors) = eig_symmetrized(choi)?;
    let n = values.len();
    let min = values[0];
    let max = values[n - 1];
    if min < -tol.psd_tol {
        return Ok(RankOneVerdict::NotPsd);
    }
    let second = values[..n - 1].iter().map(|l| l.abs()).fold(0.0, f64::max);
    if max <= tol.rank_tol / 10.0 {
        return Ok(RankOneVerdict::Zero);
    }
    if max <= tol.rank_tol * 10.0 {
        return Ok(RankOneVerdict::Borderline);
    }
    if second >= tol.rank_tol * 10.0 {
        return Ok(RankOneVerdict::NotRankOne);
    }
    if second > tol.rank_tol / 10.0 {
        return Ok(RankOneVerdict::Borderline);
    }
    let mut vector: Vec<Complex64> =
        (0..n).map(|r| vectors.get(r, n - 1) * max.sqrt()).collect();
    // Fix the free global phase: largest component real positive.
    let lead = vector
        .iter()
        .cloned()
        .max_by(|x, y| x.norm().partial_cmp(&y.norm()).expect("finite"))
        .unwrap_or_else(|| Complex64::new(1.0, 0.0));
    if lead.norm() > 0.0 {
        let phase = lead / lead.norm();
        for z in &mut vector {
            *z *= phase.conj();
        }
    }
    Ok(RankOneVerdict::RankOne { vector })
}

fn max_unit_image_distance(s: &Superoperator, rebuilt: impl Fn(usize, usize) -> CMatrix) -> f64 {
    let dim = s.dim();
    let mut worst = 0.0_f64;
    for j in 0..dim {
        for k in 0..dim {
            let d = s.matrix_unit_image(j, k).sub(&rebuilt(j, k)).fro_norm();
            worst = worst.max(d);
        }
    }
    worst
}

/// Decision procedure over the three forms:
/// (a) PSD rank-one Choi → conjugation, `C` recovered from the Choi vector;
/// (b) PSD rank-one Choi of `Φ∘T` → anti-conjugation;
/// (c) one-dimensional output range → rank-one output, recovering `B` from
///     the trace functional and `ψ` from the common output direction;
/// (d) otherwise unclassified. Borderline spectra short-circuit to
/// unclassified rather than guessing.
pub fn classify_pure_positive(s: &Superoperator, tol: &ToleranceConfig) -> DavisClassification {
    let dim = s.dim();
    let herm_defect = s.choi().hermiticity_defect();
    if herm_defect > tol.eq_tol * s.choi().fro_norm().max(1.0) {
        return DavisClassification::unclassified(herm_defect);
    }

    // (a) conjugation.
    match rank_one_verdict(s.choi(), tol) {
        Err(_) => return DavisClassification::unclassified(f64::INFINITY),
        Ok(RankOneVerdict::Borderline) => {
            return DavisClassification::unclassified(f64::INFINITY)
        }
        Ok(RankOneVerdict::Zero) => {
            let c = CMatrix::zeros(dim);
            let residual = max_unit_image_distance(s, |_, _| CMatrix::zeros(dim));
            if residual <= tol.eq_tol {
                return DavisClassification {
                    form: DavisForm::Conjugation,
                    c: Some(c),
                    b_op: None,
                    psi: None,
                    residual,
                };
            }
            return DavisClassification::unclassified(residual);
        }
        Ok(RankOneVerdict::RankOne { vector }) => {
            let k = CMatrix::from_vec_row(dim, &vector).expect("choi vector length dim²");
            let k_adj = k.adjoint();
            let residual = max_unit_image_distance(s, |j, kk| {
                let mut unit = CMatrix::zeros(dim);
                unit.set(j, kk, Complex64::new(1.0, 0.0));
                k.matmul(&unit).matmul(&k_adj)
            });
            if residual <= tol.eq_tol {
                return DavisClassification {
                    form: DavisForm::Conjugation,
                    c: Some(k_adj),
                    b_op: None,
                    psi: None,
                    residual,
                };
            }
            return DavisClassification::unclassified(residual);
        }
        Ok(RankOneVerdict::NotPsd) | Ok(RankOneVerdict::NotRankOne) => {}
    }

    // (b) anti-conjugation: Φ∘T must be a conjugation.
    match rank_one_verdict(s.compose_transpose().choi(), tol) {
        Err(_) => return DavisClassification::unclassified(f64::INFINITY),
        Ok(RankOneVerdict::Borderline) => {
            return DavisClassification::unclassified(f64::INFINITY)
        }
        Ok(RankOneVerdict::RankOne { vector }) => {
            let k = CMatrix::from_vec_row(dim, &vector).expect("choi vector length dim²");
            let k_adj = k.adjoint();
            let residual = max_unit_image_distance(s, |j, kk| {
                let mut unit = CMatrix::zeros(dim);
                unit.set(j, kk, Complex64::new(1.0, 0.0));
                k.matmul(&unit.transpose()).matmul(&k_adj)
            });
            if residual <= tol.eq_tol {
                return DavisClassification {
                    form: DavisForm::AntiConjugation,
                    c: Some(k_adj),
                    b_op: None,
                    psi: None,
                    residual,
                };
            }
            return DavisClassification::unclassified(residual);
        }
        Ok(_) => {}
    }

    // (c) rank-one output: all matrix-unit images proportional to one
    // rank-one projector.
    classify_rank_one_output(s, tol)
        .unwrap_or_else(|| DavisClassification::unclassified(f64::INFINITY))
}

fn classify_rank_one_output(
    s: &Superoperator,
    tol: &ToleranceConfig,
) -> Option<DavisClassification> {
    let dim = s.dim();
    let images: Vec<Vec<CMatrix>> = (0..dim)
        .map(|j| (0..dim).map(|k| s.matrix_unit_image(j, k)).collect())
        .collect();
    let (mut best_j, mut best_k, mut best_norm) = (0, 0, 0.0_f64);
    for j in 0..dim {
        for k in 0..dim {
            let n = images[j][k].fro_norm();
            if n > best_norm {
                best_norm = n;
                (best_j, best_k) = (j, k);
            }
        }
    }
    if best_norm <= tol.rank_tol {
        return None;
    }
    let direction = images[best_j][best_k].scale_re(1.0 / best_norm);

    // Every image must be a complex multiple of the direction.
    let scale = best_norm.max(1.0);
    for row in &images {
        for img in row {
            let coeff: Complex64 = frobenius_inner(&direction, img);
            if img.sub(&direction.scale(coeff)).fro_norm() > tol.eq_tol * scale {
                return None;
            }
        }
    }

    // Phase-align the direction into a Hermitian rank-one projector.
    let trace = direction.trace();
    if trace.norm() < 0.5 {
        return None;
    }
    let projector = direction.scale(trace.conj() / trace.norm()).hermitize();
    let (values, vectors) = eig_symmetrized(&projector).ok()?;
    let n = values.len();
    let second = values[..n - 1].iter().map(|l| l.abs()).fold(0.0, f64::max);
    if second > tol.rank_tol || values[n - 1] <= tol.rank_tol {
        return None;
    }
    let projector = projector.scale_re(1.0 / values[n - 1]);
    let mut psi: Vec<Complex64> = (0..n).map(|r| vectors.get(r, n - 1)).collect();
    let lead = psi
        .iter()
        .cloned()
        .max_by(|x, y| x.norm().partial_cmp(&y.norm()).expect("finite"))
        .unwrap_or_else(|| Complex64::new(1.0, 0.0));
    if lead.norm() > 0.0 {
        let phase = lead / lead.norm();
        for z in &mut psi {
            *z *= phase.conj();
        }
    }

    // Tr(e_jk B) = B[k][j]: read the trace functional off the coefficients.
    let mut b_op = CMatrix::zeros(dim);
    for j in 0..dim {
        for k in 0..dim {
            let coeff = frobenius_inner(&projector, &images[j][k]);
            b_op.set(k, j, coeff);
        }
    }

    let residual = max_unit_image_distance(s, |j, k| {
        projector.scale(b_op.get(k, j))
    });
    if residual > tol.eq_tol {
        return Some(DavisClassification::unclassified(residual));
    }
    Some(DavisClassification {
        form: DavisForm::RankOneOutput,
        c: None,
        b_op: Some(b_op),
        psi: Some(psi.iter().map(|z| [z.re, z.im]).collect()),
        residual,
    })
}

/// `⟨X, Y⟩ = Tr(X* Y)`.
fn frobenius_inner(x: &CMatrix, y: &CMatrix) -> Complex64 {
    let n = x.dim();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += x.get(i, j).conj() * y.get(i, j);
        }
    }
    acc
}

/// One verified step of the uniqueness argument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofStep {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Step-by-step numerical trace of the uniqueness argument for one
/// invertible effect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofTraceReport {
    pub candidate: String,
    pub form: DavisForm,
    pub steps: Vec<ProofStep>,
    /// Best-fit scalar `μ = Tr(U²)/dim` for the `U² = μI` step.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mu: Option<[f64; 2]>,
    pub final_residual: f64,
    pub passed: bool,
}

impl ProofTraceReport {
    pub fn first_failing_step(&self) -> Option<&ProofStep> {
        self.steps.iter().find(|s| !s.passed)
    }
}

/// Number of random second arguments probed by the Eq.-type steps.
const TRACE_PROBE_COUNT: usize = 100;

/// Re-executes the constructive uniqueness steps for `B ↦ prod(A, B)` at an
/// invertible effect `A`:
///
/// 1. unit and duality probes;
/// 2. Choi classification (must come out a conjugation `C*BC`);
/// 3. `C*C = A`;
/// 4. polar factors `C = U·A^{1/2}` with `P = A^{1/2}`;
/// 5. `A = A^{1/2} U*U A^{1/2}` and unitarity of `U`;
/// 6. the twirl identity `A^{1/2} U* B U A^{1/2} = U A^{1/2} B A^{1/2} U*`;
/// 7. `U² = μI` with `|μ| = 1`;
/// 8. the final identity `prod(A, B) = A^{1/2} B A^{1/2}`.
///
/// Fails with [`Error::NotInvertible`] when the smallest eigenvalue of `A`
/// is ≤ `10·psd_tol` and with [`Error::UnclassifiedMap`] when the Choi
/// matrix fits none of the structural forms. A non-conjugation form is not
/// an error: the report records it with the classification step failed.
pub fn trace_theorem_steps(
    prod: &CandidateProduct,
    a: &Effect,
    seed: u64,
    tol: &ToleranceConfig,
) -> Result<ProofTraceReport> {
    let dim = a.dim();
    let (values, _) = hermitian_eig(a.matrix(), tol)?;
    let min_eig = values.first().copied().unwrap_or(0.0);
    let threshold = 10.0 * tol.psd_tol;
    if min_eig <= threshold {
        return Err(Error::NotInvertible { min_eigenvalue: min_eig, threshold });
    }

    let mut steps: Vec<ProofStep> = Vec::new();
    let push = |steps: &mut Vec<ProofStep>, name: &str, residual: f64, tolerance: f64| {
        steps.push(ProofStep {
            name: name.to_string(),
            residual,
            tolerance,
            passed: residual <= tolerance,
        });
    };

    let unit = crate::axioms::unit_probe_residual(prod, a, tol)?;
    push(&mut steps, "unit_probe", unit, tol.eq_tol);

    let mut duality_worst = 0.0_f64;
    for t in 0..20u64 {
        let mut rng = SplitMix64::new(derive_seed(seed, &[TRACE_PROBE_TAG, 1, t]));
        let b = Effect::from_matrix_unchecked(effect_with(dim, &mut rng));
        let rho = DensityOperator::from_matrix_unchecked(density_with(dim, &mut rng));
        let rho_effect = Effect::from_matrix_unchecked(rho.matrix().clone());
        duality_worst = duality_worst
            .max(crate::axioms::duality_probe_residual(prod, a, &b, &rho_effect, tol)?);
    }
    push(&mut steps, "duality_probe", duality_worst, tol.eq_tol);

    let superop = superoperator_from_product(prod, a, tol)?;
    let classification = classify_pure_positive(&superop, tol);
    if classification.form == DavisForm::Unclassified {
        return Err(Error::UnclassifiedMap { residual: classification.residual });
    }
    let is_conjugation = classification.form == DavisForm::Conjugation;
    push(
        &mut steps,
        "classification_is_conjugation",
        if is_conjugation { 0.0 } else { 1.0 },
        0.5,
    );
    if !is_conjugation {
        return Ok(ProofTraceReport {
            candidate: prod.name().to_string(),
            form: classification.form,
            steps,
            mu: None,
            final_residual: f64::INFINITY,
            passed: false,
        });
    }

    let c = classification.c.clone().expect("conjugation carries C");
    let root_a = sqrt_psd(a.matrix(), tol)?;
    push(
        &mut steps,
        "c_star_c_equals_a",
        op_norm(&c.adjoint().matmul(&c).sub(a.matrix())),
        tol.eq_tol,
    );

    let (u, p) = polar_decompose(&c, tol)?;
    push(&mut steps, "polar_modulus_is_sqrt_a", op_norm(&p.sub(&root_a)), tol.eq_tol);
    push(
        &mut steps,
        "isometry_on_root",
        op_norm(&a.matrix().sub(&root_a.matmul(&u.adjoint()).matmul(&u).matmul(&root_a))),
        tol.eq_tol,
    );
    let unitarity = op_norm(&u.adjoint().matmul(&u).sub(&CMatrix::identity(dim)))
        .max(op_norm(&u.matmul(&u.adjoint()).sub(&CMatrix::identity(dim))));
    push(&mut steps, "u_unitary", unitarity, tol.eq_tol);

    let mut twirl_worst = 0.0_f64;
    let mut final_worst = 0.0_f64;
    for t in 0..TRACE_PROBE_COUNT as u64 {
        let mut rng = SplitMix64::new(derive_seed(seed, &[TRACE_PROBE_TAG, 2, t]));
        let b = Effect::from_matrix_unchecked(effect_with(dim, &mut rng));
        let lhs = root_a
            .matmul(&u.adjoint())
            .matmul(b.matrix())
            .matmul(&u)
            .matmul(&root_a);
        let rhs = u
            .matmul(&root_a)
            .matmul(b.matrix())
            .matmul(&root_a)
            .matmul(&u.adjoint());
        twirl_worst = twirl_worst.max(op_norm(&lhs.sub(&rhs)));

        let standard = root_a.matmul(b.matrix()).matmul(&root_a);
        final_worst = final_worst.max(op_norm(&prod.apply(a, &b, tol)?.sub(&standard)));
    }
    push(&mut steps, "twirl_identity", twirl_worst, tol.eq_tol);

    let u_squared = u.matmul(&u);
    let mu = u_squared.trace() / Complex64::new(dim as f64, 0.0);
    let mu_defect = op_norm(&u_squared.sub(&CMatrix::identity(dim).scale(mu)));
    push(&mut steps, "u_squared_is_scalar", mu_defect, tol.eq_tol);
    push(&mut steps, "mu_modulus_one", (mu.norm() - 1.0).abs(), tol.eq_tol);

    push(&mut steps, "final_product_identity", final_worst, tol.eq_tol);

    let passed = steps.iter().all(|s| s.passed);
    Ok(ProofTraceReport {
        candidate: prod.name().to_string(),
        form: classification.form,
        steps,
        mu: Some([mu.re, mu.im]),
        final_residual: final_worst,
        passed,
    })
}

/// The invertible regularization `A_i = (1 + 1/i)^{-1}(A + (1/i)·I)`.
///
/// `A_i` is an effect with smallest eigenvalue at least `1/(i+1)` and
/// `‖A_i − A‖ = ‖I − A‖/(i + 1) ≤ 2/i`.
pub fn regularize_invertible(a: &Effect, i: u64) -> Result<Effect> {
    if i == 0 {
        return Err(Error::InvalidInput("regularization index must be ≥ 1".into()));
    }
    let inv = 1.0 / i as f64;
    let factor = 1.0 / (1.0 + inv);
    let out = a
        .matrix()
        .add(&CMatrix::identity(a.dim()).scale_re(inv))
        .scale_re(factor);
    Ok(Effect::from_matrix_unchecked(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::rng::unitary_with;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn standard() -> CandidateProduct {
        CandidateProduct::standard()
    }

    #[test]
    fn identity_effect_gives_identity_map() {
        let t = tol();
        let s = superoperator_from_product(&standard(), &Effect::identity(2), &t).unwrap();
        // Φ_I = id: Choi is the rank-one (unnormalized) maximally entangled
        // matrix vec(I)vec(I)*.
        let vec_i = CMatrix::identity(2).vec_row();
        let expected = {
            let mut m = CMatrix::zeros(4);
            for r in 0..4 {
                for c in 0..4 {
                    m.set(r, c, vec_i[r] * vec_i[c].conj());
                }
            }
            m
        };
        assert!(s.choi().sub(&expected).fro_norm() <= 1e-10);
    }

    #[test]
    fn projection_effect_gives_rank_one_choi() {
        let t = tol();
        let a = Effect::new(CMatrix::from_diag(&[1.0, 0.0]), &t).unwrap();
        let s = superoperator_from_product(&standard(), &a, &t).unwrap();
        let vec_p = a.matrix().vec_row();
        let mut expected = CMatrix::zeros(4);
        for r in 0..4 {
            for c in 0..4 {
                expected.set(r, c, vec_p[r] * vec_p[c].conj());
            }
        }
        assert!(s.choi().sub(&expected).fro_norm() <= 1e-10);
    }

    #[test]
    fn zero_effect_gives_zero_superoperator() {
        let t = tol();
        let s = superoperator_from_product(&standard(), &Effect::zero(2), &t).unwrap();
        assert!(s.choi().fro_norm() <= 1e-12);
        let cls = classify_pure_positive(&s, &t);
        assert_eq!(cls.form, DavisForm::Conjugation);
        assert!(cls.c.unwrap().fro_norm() <= 1e-12);
    }

    #[test]
    fn superoperator_apply_matches_product() {
        let t = tol();
        let mut rng = SplitMix64::new(31u64);
        let a = Effect::from_matrix_unchecked(effect_with(3, &mut rng));
        let b = Effect::from_matrix_unchecked(effect_with(3, &mut rng));
        let s = superoperator_from_product(&standard(), &a, &t).unwrap();
        let via_map = s.apply(b.matrix()).unwrap();
        let direct = standard().apply(&a, &b, &t).unwrap();
        assert!(via_map.sub(&direct).fro_norm() <= 1e-9);
    }

    #[test]
    fn non_affine_candidate_is_rejected() {
        let t = tol();
        let squaring = CandidateProduct::custom("squaring", |a, b, tol| {
            let root = crate::matcore::sqrt_psd(a.matrix(), tol)?;
            let b2 = b.matrix().matmul(b.matrix());
            Ok(root.matmul(&b2).matmul(&root).hermitize())
        });
        let a = Effect::identity(2);
        assert!(matches!(
            superoperator_from_product(&squaring, &a, &t),
            Err(Error::NotAffine { .. })
        ));
    }

    #[test]
    fn standard_classifies_as_conjugation_with_correct_modulus() {
        let t = tol();
        for seed in 0..10u64 {
            let mut rng = SplitMix64::new(seed);
            let raw = effect_with(3, &mut rng);
            // Shift into invertibility.
            let a = Effect::from_matrix_unchecked(
                raw.scale_re(0.8).add(&CMatrix::identity(3).scale_re(0.1)),
            );
            let s = superoperator_from_product(&standard(), &a, &t).unwrap();
            let cls = classify_pure_positive(&s, &t);
            assert_eq!(cls.form, DavisForm::Conjugation);
            assert!(cls.residual <= t.eq_tol);
            let c = cls.c.unwrap();
            assert!(op_norm(&c.adjoint().matmul(&c).sub(a.matrix())) <= 1e-8);
        }
    }

    #[test]
    fn transpose_twist_classifies_as_anti_conjugation() {
        let t = tol();
        let mut rng = SplitMix64::new(5u64);
        let raw = effect_with(2, &mut rng);
        let a = Effect::from_matrix_unchecked(
            raw.scale_re(0.8).add(&CMatrix::identity(2).scale_re(0.1)),
        );
        let s =
            superoperator_from_product(&CandidateProduct::transpose_twisted(), &a, &t).unwrap();
        let cls = classify_pure_positive(&s, &t);
        assert_eq!(cls.form, DavisForm::AntiConjugation);
        assert!(cls.residual <= t.eq_tol);
        let c = cls.c.unwrap();
        assert!(op_norm(&c.adjoint().matmul(&c).sub(a.matrix())) <= 1e-8);
    }

    #[test]
    fn trace_functional_map_classifies_as_rank_one_output() {
        let t = tol();
        // ρ ↦ Tr(ρ)·|0⟩⟨0|: form (iii) with B = I, ψ = |0⟩.
        let s = Superoperator::from_matrix_map(2, |x| {
            CMatrix::from_diag(&[1.0, 0.0]).scale(x.trace())
        });
        let cls = classify_pure_positive(&s, &t);
        assert_eq!(cls.form, DavisForm::RankOneOutput);
        let b = cls.b_op.clone().unwrap();
        assert!(b.sub(&CMatrix::identity(2)).fro_norm() <= 1e-9);
        let psi = cls.psi_vector().unwrap();
        assert!((psi[0].norm() - 1.0).abs() <= 1e-9);
        assert!(psi[1].norm() <= 1e-9);
    }

    #[test]
    fn jordan_superoperator_is_unclassified() {
        let t = tol();
        let mut rng = SplitMix64::new(77u64);
        let a = Effect::from_matrix_unchecked(effect_with(3, &mut rng));
        let s = superoperator_from_product(&CandidateProduct::jordan(), &a, &t).unwrap();
        assert_eq!(classify_pure_positive(&s, &t).form, DavisForm::Unclassified);
    }

    #[test]
    fn trace_steps_pass_for_standard() {
        let t = tol();
        let a = Effect::new(CMatrix::from_diag(&[0.5, 0.9]), &t).unwrap();
        let report = trace_theorem_steps(&standard(), &a, 7, &t).unwrap();
        assert!(report.passed, "{report:?}");
        assert_eq!(report.form, DavisForm::Conjugation);
        let mu = report.mu.unwrap();
        assert!(((mu[0] * mu[0] + mu[1] * mu[1]).sqrt() - 1.0).abs() <= 1e-8);
        assert!(report.final_residual <= 1e-8);
    }

    #[test]
    fn trace_steps_trivial_on_identity() {
        let t = tol();
        let report = trace_theorem_steps(&standard(), &Effect::identity(2), 7, &t).unwrap();
        assert!(report.passed);
    }

    #[test]
    fn trace_rejects_singular_effect() {
        let t = tol();
        let a = Effect::new(CMatrix::from_diag(&[1.0, 0.0]), &t).unwrap();
        assert!(matches!(
            trace_theorem_steps(&standard(), &a, 7, &t),
            Err(Error::NotInvertible { .. })
        ));
    }

    #[test]
    fn trace_reports_unclassified_map() {
        // Jordan is affine, so the superoperator builds, but its Choi matrix
        // fits none of the pure-map forms.
        let t = tol();
        let a = Effect::new(CMatrix::from_diag(&[0.5, 0.9]), &t).unwrap();
        assert!(matches!(
            trace_theorem_steps(&CandidateProduct::jordan(), &a, 7, &t),
            Err(Error::UnclassifiedMap { .. })
        ));
    }

    #[test]
    fn trace_pinpoints_unitary_twist_failure() {
        let t = tol();
        let mut u0 = CMatrix::zeros(2);
        u0.set(0, 0, Complex64::new(1.0, 0.0));
        u0.set(1, 1, Complex64::new(0.0, 1.0));
        let prod = CandidateProduct::unitary_twisted(u0, &t).unwrap();
        let mut rng = SplitMix64::new(3u64);
        let raw = effect_with(2, &mut rng);
        let a = Effect::from_matrix_unchecked(
            raw.scale_re(0.8).add(&CMatrix::identity(2).scale_re(0.1)),
        );
        let report = trace_theorem_steps(&prod, &a, 7, &t).unwrap();
        assert!(!report.passed);
        // U₀² = diag(1, −1) is no scalar multiple of I; the report must
        // pinpoint a failing step, the earliest being the unit probe.
        let failing = report.first_failing_step().unwrap();
        assert_eq!(failing.name, "unit_probe");
        let mu_step = report.steps.iter().find(|s| s.name == "u_squared_is_scalar").unwrap();
        assert!(!mu_step.passed);
    }

    #[test]
    fn unitary_conjugate_of_standard_still_classifies() {
        // U A^{1/2} B A^{1/2} U* is a genuine conjugation map for each A.
        let t = tol();
        let u0 = unitary_with(2, &mut SplitMix64::new(9u64));
        let prod = CandidateProduct::unitary_twisted(u0, &t).unwrap();
        let a = Effect::new(CMatrix::from_diag(&[0.4, 0.7]), &t).unwrap();
        let s = superoperator_from_product(&prod, &a, &t).unwrap();
        assert_eq!(classify_pure_positive(&s, &t).form, DavisForm::Conjugation);
    }

    #[test]
    fn regularization_formula_cases() {
        let t = tol();
        // A = 0, i = 1 → I/2.
        let out = regularize_invertible(&Effect::zero(2), 1).unwrap();
        assert!(out.matrix().sub(&CMatrix::identity(2).scale_re(0.5)).fro_norm() <= 1e-12);
        // A = I is a fixed point.
        let out = regularize_invertible(&Effect::identity(3), 17).unwrap();
        assert!(out.matrix().sub(&CMatrix::identity(3)).fro_norm() <= 1e-12);
        // A = diag(1, 0), i = 4 → diag(1, 0.2).
        let a = Effect::new(CMatrix::from_diag(&[1.0, 0.0]), &t).unwrap();
        let out = regularize_invertible(&a, 4).unwrap();
        assert!(out.matrix().sub(&CMatrix::from_diag(&[1.0, 0.2])).fro_norm() <= 1e-12);
        assert!(regularize_invertible(&a, 0).is_err());
    }

    #[test]
    fn regularization_converges_in_norm() {
        let t = tol();
        let mut rng = SplitMix64::new(13u64);
        let a = Effect::from_matrix_unchecked(effect_with(4, &mut rng));
        for i in [1u64, 10, 1_000, 1_000_000] {
            let out = regularize_invertible(&a, i).unwrap();
            let dist = op_norm(&out.matrix().sub(a.matrix()));
            assert!(dist <= 2.0 / i as f64, "i={i}: {dist}");
            // Spectral floor (1/i)/(1 + 1/i) = 1/(i + 1).
            let (values, _) = hermitian_eig(out.matrix(), &t).unwrap();
            assert!(values[0] >= 1.0 / (i as f64 + 1.0) - t.psd_tol);
        }
        let out = regularize_invertible(&a, 1_000_000).unwrap();
        assert!(op_norm(&out.matrix().sub(a.matrix())) < 1e-5);
    }
}
