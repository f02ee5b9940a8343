//! Classical flow of the effective symbol of a two-level model, with the
//! linearized frame, the action phase and the trajectory written as CSV.

use magneto_bo::dynamics::{integrate, ClassicalState, FlowOptions, SampledHamiltonian};
use magneto_bo::io::trajectory_table;
use magneto_bo::models::{assemble_p_symbol, FiberModel, MatrixKind, MatrixModel};
use magneto_bo::superadiabatic::{reduce, DEFAULT_QUADRATURE};
use magneto_bo::symbols::PhaseGrid;
use std::f64::consts::PI;
use std::sync::Arc;

fn main() -> magneto_bo::Result<()> {
    let h = 0.1;
    let model = FiberModel::Matrix(MatrixModel::new(1, MatrixKind::TwoLevel { gap: 1.0, mixing: 0.4, level: 0.3, wavenumber: 0.5 })?);
    let grid = Arc::new(PhaseGrid::uniform(1, (-2.0 * PI, 2.0 * PI), 32, 3.0, 16)?);
    let p = assemble_p_symbol(&model, &grid, 2, 2)?.p;
    let red = reduce(&p, 1, DEFAULT_QUADRATURE, 1e-3, 2)?;
    let g = SampledHamiltonian::new(&red.effective.g, h, 2, 0)?;

    let start = ClassicalState::new(vec![-1.0], vec![0.8])?;
    let traj = integrate(&g, &start, FlowOptions::new(1e-3, 2.0), true)?;
    let end = traj.last();
    println!("end point x = {:.6}, xi = {:.6}", end.x[0], end.xi[0]);
    println!("energy drift {:.2e}, final action phase {:.6}", traj.energy_drift(), traj.delta.last().unwrap());
    let worst = traj.frames.as_ref().unwrap().iter().map(|f| f.symplectic_defects().0).fold(0.0, f64::max);
    println!("largest frame invariant defect {worst:.2e}");

    let path = std::env::temp_dir().join("coherent_flow.csv");
    trajectory_table("trajectory", &traj)?.write(&path)?;
    println!("trajectory written to {}", path.display());
    Ok(())
}
