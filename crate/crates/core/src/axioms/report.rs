use serde::{Deserialize, Serialize};

use crate::matcore::CMatrix;

/// The checkable conditions: the five characterizing ones, closure, and the
/// derived identities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ConditionId {
    Closure,
    Duality,
    Unit,
    WeakAssoc,
    Continuity,
    Purity,
    Affinity,
    HalfDuality,
    HalfAssoc,
    CommutingProduct,
}

impl ConditionId {
    /// Stable tag mixed into per-trial RNG streams. Never renumber.
    pub(crate) fn tag(self) -> u64 {
        match self {
            ConditionId::Closure => 1,
            ConditionId::Duality => 2,
            ConditionId::Unit => 3,
            ConditionId::WeakAssoc => 4,
            ConditionId::Continuity => 5,
            ConditionId::Purity => 6,
            ConditionId::Affinity => 7,
            ConditionId::HalfDuality => 8,
            ConditionId::HalfAssoc => 9,
            ConditionId::CommutingProduct => 10,
        }
    }
}

/// Concrete inputs exhibiting a condition violation. Fields are populated
/// per condition: duality stores `(a, b, rho)`, continuity `(a, b,
/// perturbation)`, affinity `(a, b, c, lambda)`, and so on.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WitnessInputs {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub a: Option<CMatrix>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub b: Option<CMatrix>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub c: Option<CMatrix>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rho: Option<CMatrix>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub perturbation: Option<CMatrix>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda: Option<f64>,
}

/// A reproducible counterexample: replaying `inputs` through the matching
/// checker recomputes `residual` (see `replay_witness`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationWitness {
    pub condition: ConditionId,
    pub residual: f64,
    pub inputs: WitnessInputs,
}

/// Outcome of one condition checker at one dimension.
///
/// `trials` counts evaluated trials; `skipped` the ones that could not be
/// evaluated (invalid intermediates, zero-probability branches);
/// `closure_failures` how many trials produced an output outside the effect
/// window along the way. The witness holds the argmax-residual inputs, so
/// failures reproduce without re-running the search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: ConditionId,
    pub dim: usize,
    pub passed: bool,
    pub max_residual: f64,
    pub tolerance: f64,
    pub trials: usize,
    pub skipped: usize,
    pub closure_failures: usize,
    pub witness: Option<ViolationWitness>,
}

/// Full fuzz run over dims × conditions.
///
/// `theorem_tension` is raised when the candidate provably differs from the
/// standard product on sampled pairs yet all five characterizing conditions
/// pass — which signals a checker bug or insufficient sampling, never a
/// refutation of the uniqueness theorem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzReport {
    pub candidate: String,
    pub dims: Vec<usize>,
    pub trials_per_condition: usize,
    pub seed: u64,
    pub reports: Vec<ConditionReport>,
    pub max_deviation_from_standard: f64,
    pub theorem_tension: bool,
    pub all_passed: bool,
}

impl FuzzReport {
    /// Distinct conditions that failed, sorted.
    pub fn failed_conditions(&self) -> Vec<ConditionId> {
        let mut failed: Vec<ConditionId> =
            self.reports.iter().filter(|r| !r.passed).map(|r| r.condition).collect();
        failed.sort();
        failed.dedup();
        failed
    }

    pub fn witnesses(&self) -> impl Iterator<Item = &ViolationWitness> {
        self.reports.iter().filter_map(|r| r.witness.as_ref())
    }
}
