//! Identification codes over quantum channels.
//!
//! Constructions (greedy random-state codes, classical hashing, blowup, and the
//! entanglement-assisted hashing code), evaluation of their error probabilities,
//! feedback-channel simulation, capacity functionals, and Monte Carlo checks of the
//! concentration bounds the constructions rely on.

pub mod channels;
pub mod error;
pub mod feedback;
pub mod idcodes;
pub mod io;
pub mod linalg;
pub mod sampling;
pub mod verify;

pub use channels::{CqChannel, QcChannel, QuantumChannel, StinespringDilation};
pub use error::{Error, Result};
pub use feedback::{CoherentFeedbackStrategy, FeedbackStrategy, GeneralFeedbackStrategy};
pub use idcodes::{ClassicalIdCode, IdCode, IdErrorReport};
pub use linalg::{ComplexMatrix, DensityOperator, HermitianOperator, C64};
pub use sampling::Seed;
