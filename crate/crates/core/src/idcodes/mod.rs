//! Identification codes: evaluation, the greedy random-state code, classical hashing and
//! blowup, the entanglement-assisted hashing code, and decoder rounding.

mod code;
mod entangled;
mod greedy;
mod hashing;
mod rounding;

pub use code::{eval_id_errors, IdCode, IdEntry, IdErrorReport, TOL_EFFECT};
pub use entangled::{entangled_hashing_code, entangled_paper_delta, reduction_deviation, EntangledParams};
pub use greedy::{greedy_paper_constants, greedy_random_code, BuildStats, GreedyPaperConstants, GreedyParams, StopReason};
pub use hashing::{blowup_code, collisions, eval_classical_id, hashing_code, ClassicalIdCode, BLOWUP_DIM_CAP};
pub use rounding::{round_decoders, round_down};
