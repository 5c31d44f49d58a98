//! Feedback channels: passive classical feedback over qc-channels, general sender
//! strategies with memory, coherent feedback through a Stinespring dilation, typical sets,
//! and the capacity functionals.

mod capacity;
mod coherent;
mod general;
mod strategy;
mod typical;

pub use capacity::{
    coherent_feedback_capacity, correlated_capacity, dephased_measurement, qc_feedback_capacity, CapacityValue,
    MIN_PURITY, TOL_CONSTANT,
};
pub use coherent::{
    coherent_feedback_output, epr_strategy, output_projector, output_projector_in_basis, CoherentFeedbackStrategy,
    OutputProjector, OutputProjectorSummary, COHERENT_DIM_CAP,
};
pub use general::{
    general_output_dist, reduce_general_strategy, GeneralFeedbackStrategy, ReducedStrategy, MIN_BRANCH_PROBABILITY,
};
pub use strategy::{
    feedback_output_dist, history_string, outcome_count, parse_history, FeedbackStrategy, MAX_LOG2_OUTCOMES, SYMBOLS,
};
pub use typical::{typical_log2_bound, typical_set, TypicalSet};
