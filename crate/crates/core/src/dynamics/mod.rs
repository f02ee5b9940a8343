//! Classical flow of the effective Hamiltonian, its linearization, the action
//! phase, and coherent states assembled along the flow.

mod flow;
mod hamiltonian;
mod packet;

pub use flow::{
    action_phase, hessian_at, integrate, integrate_flow, integrate_linearized, ClassicalState, ExitReport, FlowOptions,
    TrajectoryBundle, VariationalFrame, FRAME_DEFECT_LIMIT,
};
pub use hamiltonian::{Hamiltonian, Jet, KineticPotential, SampledHamiltonian};
pub use packet::{assemble_packet, coherent_state, PacketParams, Width, PACKET_NORM_TOLERANCE};
