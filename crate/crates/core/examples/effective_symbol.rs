//! Effective symbol of a neutral nucleus-electron pair in a constant field:
//! `g_0 = |xi|^2 + mu(x)` with no vector-potential shift.

use magneto_bo::models::{assemble_p_symbol, FiberModel, PairModel, Potential};
use magneto_bo::superadiabatic::{eigen_projector, reduce, DEFAULT_QUADRATURE};
use magneto_bo::symbols::{Axis, MatrixSymbol, PhaseGrid, Var};
use num_complex::Complex64 as C64;
use std::sync::Arc;

fn main() -> magneto_bo::Result<()> {
    let pair = PairModel {
        d: 2,
        h: 0.5,
        electron_charge: 1.0,
        nucleus_charge: -1.0,
        field: 1.0,
        binding: Potential::Harmonic { k: 4.0 },
        nucleus_potential: Potential::Zero,
        electron_potential: Potential::Zero,
        y_axes: vec![Axis::periodic(-5.0, 5.0, 32)?; 2],
        allow_non_neutral: false,
    };
    let model = FiberModel::Pair(pair);
    let grid = Arc::new(PhaseGrid::uniform(2, (-4.0, 4.0), 8, 2.0, 8)?);
    let order = 2;
    let t = std::time::Instant::now();
    let ps = assemble_p_symbol(&model, &grid, 4, order)?;
    println!("p assembled in {:.2?}; truncation leakage {:.3}", t.elapsed(), ps.truncation_leakage);
    for w in &ps.warnings {
        println!("warning: {w}");
    }
    let p = ps.p;
    let h0 = p.coeff(0).block(0);
    println!("p_0 at the first point: {:?}", (0..4).map(|i| h0[i * 4 + i].re).collect::<Vec<_>>());

    let t = std::time::Instant::now();
    let red = reduce(&p, 1, DEFAULT_QUADRATURE, 1e-3, order)?;
    println!("reduction in {:.2?}", t.elapsed());
    let exact = eigen_projector(p.coeff(0), 1)?;
    println!("pi_0 vs eigenprojector {:.2e}", red.projection.pi.coeff(0).sub(&exact)?.max_abs());

    let g = &red.effective.g;
    let kinetic = MatrixSymbol::scalar_fn(&grid, |_, xi| C64::new(xi.iter().map(|v| v * v).sum(), 0.0));
    let target = kinetic.add(&red.effective.mu)?;
    println!("|g_0 - |xi|^2 - mu| = {:.2e}", g.coeff(0).sub(&target)?.max_abs());
    println!("raw hermitian defect {:.2e}", red.effective.raw_hermitian_defect);
    for a in 0..2 {
        let slope = g.coeff(0).differentiate(Var::Xi(a), 1)?;
        let resid = MatrixSymbol::scalar_fn(&grid, |_, xi| C64::new(2.0 * xi[a], 0.0));
        println!("d g_0 / d xi_{a} - 2 xi_{a}: {:.2e}", slope.sub(&resid)?.max_abs());
    }
    for j in 0..=order {
        println!("g_{j}: sup {:.4e}", g.norm(j)?);
    }
    Ok(())
}
