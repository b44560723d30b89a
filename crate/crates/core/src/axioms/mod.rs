//! The axiom engine: checkers for the five characterizing conditions of the
//! sequential product and the derived identities, plus a deterministic
//! fuzzer that produces violation witnesses for non-standard candidates.

mod candidate;
mod checks;
mod report;

pub use candidate::CandidateProduct;
pub use checks::{
    check_closure, check_commuting_assoc, check_commuting_product, check_condition,
    check_continuity, check_duality, check_half_duality, check_lemma_affinity, check_purity,
    check_unit, check_weak_assoc, fuzz_candidate, replay_witness, CONTINUITY_PROBE_CONSTANT,
    CONTINUITY_SCALES,
};
pub use report::{ConditionId, ConditionReport, FuzzReport, ViolationWitness, WitnessInputs};

pub(crate) use checks::{
    duality_residual as duality_probe_residual, unit_residual as unit_probe_residual,
};
