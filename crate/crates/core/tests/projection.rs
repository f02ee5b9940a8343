use magneto_bo::models::{assemble_p_symbol, FiberModel, MatrixKind, MatrixModel};
use magneto_bo::superadiabatic::{
    defect_report, eigen_projector, projection_series, reduce, Contour, DEFAULT_QUADRATURE,
};
use magneto_bo::symbols::{moyal_product, HSeries, PhaseGrid};
use proptest::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

fn p_symbol(kind: MatrixKind, x_points: usize, xi_points: usize, order: usize) -> HSeries {
    let model = FiberModel::Matrix(MatrixModel::new(1, kind).unwrap());
    let grid = Arc::new(PhaseGrid::uniform(1, (-2.0 * PI, 2.0 * PI), x_points, 3.0, xi_points).unwrap());
    assemble_p_symbol(&model, &grid, model.fiber_len(), order).unwrap().p
}

fn two_level(mixing: f64) -> MatrixKind {
    MatrixKind::TwoLevel { gap: 1.0, mixing, level: 0.3, wavenumber: 0.5 }
}

#[test]
fn diagonal_fiber_loop_has_the_documented_radius() {
    let p = p_symbol(MatrixKind::ConstantFiber { energies: vec![0.0, 2.0], angle: 0.0, level: 0.0, wavenumber: 1.0 }, 8, 8, 0);
    let c = Contour::from_symbol(p.coeff(0), 1, DEFAULT_QUADRATURE, 1e-3).unwrap();
    assert!(c.gap.radius.iter().all(|r| (r - 0.5).abs() < 1e-12));
    assert!(c.gap.center.iter().all(|r| r.abs() < 1e-12));
    assert!((c.gap.min_gap - 2.0).abs() < 1e-12);
}

#[test]
fn constant_fiber_projection_has_no_corrections() {
    let p = p_symbol(MatrixKind::ConstantFiber { energies: vec![0.0, 2.0, 3.5], angle: 0.3, level: 0.2, wavenumber: 0.5 }, 16, 8, 2);
    let contour = Contour::from_symbol(p.coeff(0), 1, DEFAULT_QUADRATURE, 1e-3).unwrap();
    let ps = projection_series(&p, &contour, 2).unwrap();
    let exact = eigen_projector(p.coeff(0), 1).unwrap();
    assert!(ps.pi.coeff(0).sub(&exact).unwrap().max_abs() < 1e-12);
    assert!(ps.pi.coeff(1).max_abs() < 1e-10);
    assert!(ps.pi.coeff(2).max_abs() < 1e-10);
}

#[test]
fn leading_projection_matches_the_eigenprojector() {
    let p = p_symbol(two_level(0.4), 32, 16, 0);
    let contour = Contour::from_symbol(p.coeff(0), 1, DEFAULT_QUADRATURE, 1e-3).unwrap();
    let ps = projection_series(&p, &contour, 0).unwrap();
    let exact = eigen_projector(p.coeff(0), 1).unwrap();
    assert!(ps.pi.coeff(0).sub(&exact).unwrap().max_abs() <= 1e-9);
    assert!(ps.quadrature_change < 1e-10);
}

#[test]
fn first_correction_is_off_diagonal_in_the_adiabatic_frame() {
    let p = p_symbol(two_level(0.4), 32, 16, 1);
    let red = reduce(&p, 1, DEFAULT_QUADRATURE, 1e-3, 1).unwrap();
    let pi = &red.projection.pi;
    // pi_0 pi_1 pi_0 = 0 and (1 - pi_0) pi_1 (1 - pi_0) = 0
    let pi0 = HSeries::from_leading(pi.coeff(0).clone(), 0);
    let pi1 = HSeries::from_leading(pi.coeff(1).clone(), 0);
    let sandwich = moyal_product(&moyal_product(&pi0, &pi1, 0).unwrap(), &pi0, 0).unwrap();
    assert!(sandwich.coeff(0).max_abs() < 1e-10);
    assert!(pi.coeff(1).max_abs() > 1e-3);
}

#[test]
fn defects_shrink_at_third_order() {
    let p = p_symbol(two_level(0.4), 32, 16, 2);
    let red = reduce(&p, 1, DEFAULT_QUADRATURE, 1e-3, 2).unwrap();
    let rep = defect_report(&red.projection.pi, &p, &[0.1, 0.05, 0.025]).unwrap();
    let idem = rep.idempotency_fit.unwrap();
    let comm = rep.commutator_fit.unwrap();
    assert!(idem.slope >= 2.8 && idem.residual <= 0.1, "{idem:?}");
    assert!(comm.slope >= 2.8 && comm.residual <= 0.1, "{comm:?}");
    assert!(idem.monotone && comm.monotone);
}

#[test]
fn crossing_levels_are_refused() {
    let p = p_symbol(MatrixKind::Crossing { gap: 1.0, wavenumber: 0.5 }, 16, 8, 0);
    let e = Contour::from_symbol(p.coeff(0), 1, DEFAULT_QUADRATURE, 1e-3).unwrap_err();
    assert_eq!(e.exit_code(), 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn leading_projection_is_an_orthogonal_rank_one_projector(
        gap in 0.5..2.0f64,
        mixing in -0.6..0.6f64,
        level in -0.5..0.5f64,
    ) {
        let p = p_symbol(MatrixKind::TwoLevel { gap, mixing, level, wavenumber: 0.5 }, 16, 8, 0);
        let contour = Contour::from_symbol(p.coeff(0), 1, DEFAULT_QUADRATURE, 1e-3).unwrap();
        let pi0 = projection_series(&p, &contour, 0).unwrap().pi.coeff(0).clone();
        prop_assert!(pi0.hermitian_defect() < 1e-12);
        prop_assert!(pi0.matmul(&pi0).unwrap().sub(&pi0).unwrap().max_abs() < 1e-9);
        for b in 0..pi0.block_count() {
            let blk = pi0.block(b);
            prop_assert!((blk[0].re + blk[3].re - 1.0).abs() < 1e-9);
        }
        prop_assert!(pi0.sub(&eigen_projector(p.coeff(0), 1).unwrap()).unwrap().max_abs() < 1e-9);
    }
}
