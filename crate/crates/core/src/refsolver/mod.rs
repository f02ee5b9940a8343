mod krylov;
mod observe;
mod operator;
mod state;

pub use krylov::{krylov_step, propagate, propagate_observed, PropagationStats, PropagatorConfig};
pub use observe::{compare_states, gauge_conjugate, initial_packet_state, observables, project_fiber, Comparison, Observables};
pub use operator::GridHamiltonian;
pub use state::{Frame, GridState, TensorGrid, DEFAULT_POINT_BUDGET};

#[cfg(test)]
mod tests;
