//! Superadiabatic projections and the effective Hamiltonian.
//!
//! The projection coefficients are loop integrals of the formal resolvent
//! series of `p - z`; the resolvent is represented on a contour chart so that
//! derivatives at fixed spectral parameter follow from the chain rule. The
//! purified projection is rotated onto the adiabatic one by the Kato-Nagy
//! intertwiner and compressed to the lowest levels to give `g`.

mod defect;
mod effective;
mod projection;
mod purify;

pub use defect::{defect_report, DefectReport, DefectRow};
pub use effective::{effective_hamiltonian, fiber_frame, frame_reconstruction, EffectiveSymbol, RECONSTRUCTION_TOLERANCE};
pub use projection::{
    eigen_projector, fiber_levels, fiber_matrices, projection_series, remainder_r, resolvent_q0, resolvent_series, Contour,
    ProjectionSeries, DEFAULT_QUADRATURE, MAX_CONDITION, QUADRATURE_TOLERANCE,
};
pub use purify::{idempotency_defect, intertwiner_defects, nagy_intertwiner, riesz_purify, PURIFY_LIMIT, RIESZ_NODES};

use crate::error::Result;
use crate::symbols::HSeries;

/// Everything the reduction produces for one symbol `p`.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub projection: ProjectionSeries,
    pub purified: HSeries,
    pub intertwiner: HSeries,
    pub effective: EffectiveSymbol,
}

/// Loops, projection series, purification, intertwiner and `g` in one call.
pub fn reduce(p: &HSeries, group: usize, quadrature: usize, gap_threshold: f64, order: usize) -> Result<Reduction> {
    let contour = Contour::from_symbol(p.coeff(0), group, quadrature, gap_threshold)?;
    let projection = projection_series(p, &contour, order)?;
    let purified = riesz_purify(&projection.pi)?;
    let pi0 = projection.pi.coeff(0).clone();
    let intertwiner = nagy_intertwiner(&purified, &pi0, order)?;
    let frame = fiber_frame(p.coeff(0), group)?;
    let effective = effective_hamiltonian(&intertwiner, p, &frame, &pi0, order)?;
    Ok(Reduction { projection, purified, intertwiner, effective })
}
