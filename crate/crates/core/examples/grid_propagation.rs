//! Krylov propagation of a coherent state on the tensor grid of a two-level
//! model, with the population that leaks out of the adiabatic level.

use magneto_bo::dynamics::{coherent_state, ClassicalState, PacketParams, Width};
use magneto_bo::models::{FiberBasis, FiberModel, MatrixKind, MatrixModel};
use magneto_bo::refsolver::{observables, propagate_observed, Frame, GridHamiltonian, PropagatorConfig, TensorGrid, DEFAULT_POINT_BUDGET};
use magneto_bo::symbols::Axis;
use std::f64::consts::PI;
use std::sync::Arc;

fn main() -> magneto_bo::Result<()> {
    let h = 0.1;
    let model = FiberModel::Matrix(MatrixModel::new(1, MatrixKind::TwoLevel { gap: 1.0, mixing: 0.4, level: 0.3, wavenumber: 0.5 })?);
    let axes = vec![Axis::periodic(-2.0 * PI, 2.0 * PI, 512)?];
    let grid = Arc::new(TensorGrid::for_model(&model, axes.clone(), DEFAULT_POINT_BUDGET)?);
    let basis = FiberBasis::compute(&model, &axes, 2)?.phase_align()?;
    let start = ClassicalState::new(vec![-1.0], vec![0.8])?;
    let psi = coherent_state(&grid, &basis, 0, &PacketParams::initial(start, h), &[0], Width::Squeezed)?;

    let op = GridHamiltonian::for_model(&model, h, &grid, Frame::Gauged)?;
    let mut cfg = PropagatorConfig::new(0.01, 1.0);
    cfg.sample_stride = 20;
    let (end, stats) = propagate_observed(&op, &psi, &cfg, |s| {
        let o = observables(s, Some(&basis), 1)?;
        let leak = 1.0 - o.population.unwrap_or(1.0);
        println!("t = {:.2}  <x> = {:+.5}  <xi> = {:+.5}  upper level {leak:.3e}", s.time, o.x_mean[0], o.xi_mean[0]);
        Ok(())
    })?;
    println!("final norm {:.15}", end.norm());
    println!("{stats:?}");
    Ok(())
}
