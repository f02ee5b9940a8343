//! Superadiabatic projection of a two-level model with an x-dependent mixing
//! angle: defect table, measured slopes and the effective symbol.

use magneto_bo::models::{assemble_p_symbol, FiberModel, MatrixKind, MatrixModel};
use magneto_bo::superadiabatic::{defect_report, eigen_projector, intertwiner_defects, reduce, DEFAULT_QUADRATURE};
use magneto_bo::symbols::PhaseGrid;
use std::f64::consts::PI;
use std::sync::Arc;

fn main() -> magneto_bo::Result<()> {
    let model = FiberModel::Matrix(MatrixModel::new(
        1,
        MatrixKind::TwoLevel { gap: 1.0, mixing: 0.4, level: 0.3, wavenumber: 0.5 },
    )?);
    let grid = Arc::new(PhaseGrid::uniform(1, (-2.0 * PI, 2.0 * PI), 32, 3.0, 16)?);
    let order = 2;
    let p = assemble_p_symbol(&model, &grid, 2, order)?.p;

    let t = std::time::Instant::now();
    let red = reduce(&p, 1, DEFAULT_QUADRATURE, 1e-3, order)?;
    println!("reduction in {:.2?}", t.elapsed());
    println!("quadrature doubling change {:.2e}", red.projection.quadrature_change);

    let exact = eigen_projector(p.coeff(0), 1)?;
    println!("pi_0 vs eigenprojector {:.2e}", red.projection.pi.coeff(0).sub(&exact)?.max_abs());

    let report = defect_report(&red.projection.pi, &p, &[0.1, 0.05, 0.025])?;
    println!("{:>8} {:>12} {:>12}", "h", "idempotency", "commutator");
    for r in &report.rows {
        println!("{:>8} {:>12.3e} {:>12.3e}", r.h, r.idempotency, r.commutator);
    }
    if let (Some(a), Some(b)) = (report.idempotency_fit, report.commutator_fit) {
        println!("slopes {:.3} (res {:.2e}), {:.3} (res {:.2e})", a.slope, a.residual, b.slope, b.residual);
    }

    let (tw, un) = intertwiner_defects(&red.intertwiner, &red.purified, red.projection.pi.coeff(0), order)?;
    println!("intertwining defects {tw:?}, unitarity defects {un:?}");

    let g = &red.effective.g;
    for j in 0..=order {
        println!("g_{j}: sup {:.4e}", g.norm(j)?);
    }
    Ok(())
}
