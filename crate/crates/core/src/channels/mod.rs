//! Quantum, qc and cq channels: application, Choi and Stinespring forms, dephasing,
//! output-entropy maximization and the balancing step of the entanglement-assisted code.

mod balance;
mod entropy;
mod measure;
mod quantum;

pub use balance::{balance_operator, balance_operator_with, BalanceMethod, Balanced};
pub use entropy::{cq_ff_capacity, max_output_entropy, CqLowerBound, EntropyMax, OutputMap, MAX_ITERATIONS};
pub use measure::{CqChannel, QcChannel};
pub use quantum::{channel_from_choi, QuantumChannel, StinespringDilation, TOL_KRAUS};
