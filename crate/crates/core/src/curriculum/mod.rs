//! The four-phase masking curriculum, its learning-rate schedule, and the
//! perplexity-based check that the phases really get harder.

mod eval;
mod predictor;
mod schedule;

pub use eval::{
    difficulty_rank, evaluation_examples, example_seed, mlm_loss, perplexity_of, pseudo_perplexity,
    write_difficulty_tsv, DifficultyEntry, TIE_TOLERANCE,
};
pub use predictor::{BackoffBigramPredictor, MaskedPredictor, UniformPredictor};
pub use schedule::{
    default_phases, emit_schedule, lr_at, phase_boundaries, phase_config, schedule_rows,
    split_budget, CurriculumPhase, LrPlan, PhaseVersion, ScheduleRow, DEFAULT_BUDGET_RATIO,
};

/// The phase configs labelled by version, in curriculum order.
pub fn phase_configs() -> Vec<(String, crate::masking::MaskingConfig)> {
    PhaseVersion::ALL
        .iter()
        .map(|&v| (v.to_string(), phase_config(v)))
        .collect()
}
