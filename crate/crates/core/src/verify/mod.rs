//! Monte Carlo and exhaustive checks of the concentration bounds behind the constructions:
//! rank tails of random projections, uniform deviation of random states, a qubit net, and the
//! gentle-measurement inequality.

mod gentle;
mod net;
mod tail;

pub use gentle::{gentle_measurement_check, GentleCheck};
pub use net::{bloch_state, pure_trace_distance, qubit_net, qubit_net_points, NetReport, NET_SAMPLES};
pub use tail::{
    ld_log2_bounds, ld_tail, non_increasing, uniform_deviation, uniform_log2_bound, TailEstimate, TailKind, SIGMAS,
};
