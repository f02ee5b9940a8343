use super::*;
use crate::dynamics::ClassicalState;
use crate::models::{FiberBasis, FiberModel, MatrixKind, MatrixModel, PairModel, Potential};
use crate::symbols::Axis;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;

fn bare_plane(n: usize, half: f64) -> Arc<TensorGrid> {
    let ax = Axis::periodic(-half, half, n).unwrap();
    Arc::new(TensorGrid::new(vec![ax.clone(), ax], vec![], 1, DEFAULT_POINT_BUDGET).unwrap())
}

fn gaussian(grid: &Arc<TensorGrid>, h: f64, x0: [f64; 2], xi0: [f64; 2]) -> GridState {
    let mut s = GridState::zeros(grid, Frame::Gauged, h);
    for ix in 0..grid.x_point_count() {
        let x = grid.x_coords(ix);
        let dx = [x[0] - x0[0], x[1] - x0[1]];
        let q = dx[0] * dx[0] + dx[1] * dx[1];
        let p = xi0[0] * x[0] + xi0[1] * x[1];
        s.data[ix] = C64::from_polar((-q / (2.0 * h)).exp(), p / h);
    }
    s.normalize().unwrap();
    s
}

fn random_state(grid: &Arc<TensorGrid>, frame: Frame, h: f64, seed: u64) -> GridState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = GridState::zeros(grid, frame, h);
    s.data.iter_mut().for_each(|v| *v = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    s
}

fn neutral_pair(h: f64, b: f64, ny: usize) -> PairModel {
    let ax = Axis::periodic(-5.0, 5.0, ny).unwrap();
    PairModel {
        d: 2,
        h,
        electron_charge: 1.0,
        nucleus_charge: -1.0,
        field: b,
        binding: Potential::Harmonic { k: 4.0 },
        nucleus_potential: Potential::Zero,
        electron_potential: Potential::Zero,
        y_axes: vec![ax.clone(), ax],
        allow_non_neutral: false,
    }
}

fn pair_grid(model: &PairModel, nx: usize) -> Arc<TensorGrid> {
    let ax = Axis::periodic(-4.0, 4.0, nx).unwrap();
    Arc::new(TensorGrid::for_model(&FiberModel::Pair(model.clone()), vec![ax.clone(), ax], DEFAULT_POINT_BUDGET).unwrap())
}

fn variance(s: &GridState, a: usize) -> f64 {
    let o = observables(s, None, 0).unwrap();
    let g = &s.grid;
    let mut v = 0.0;
    for ix in 0..g.x_point_count() {
        v += s.data[ix].norm_sqr() * (g.x_coords(ix)[a] - o.x_mean[a]).powi(2);
    }
    v * g.weight()
}

#[test]
fn plane_wave_is_an_eigenvector() {
    let h = 0.3;
    let grid = bare_plane(16, PI);
    let op = GridHamiltonian::charged_particle(0.0, 0.0, h, &Potential::Zero, &grid).unwrap();
    let mut s = GridState::zeros(&grid, Frame::Gauged, h);
    for ix in 0..grid.x_point_count() {
        let x = grid.x_coords(ix);
        s.data[ix] = C64::from_polar(1.0, 3.0 * x[0] - 2.0 * x[1]);
    }
    let ps = op.apply_state(&s).unwrap();
    let want = h * h * 13.0;
    let err = ps.data.iter().zip(&s.data).map(|(a, b)| (a - b * want).norm()).fold(0.0, f64::max);
    assert!(err < 1e-12, "{err}");
}

#[test]
fn operators_are_hermitian() {
    let model = neutral_pair(0.5, 1.0, 8);
    let grid = pair_grid(&model, 8);
    let two = MatrixModel::new(1, MatrixKind::TwoLevel { gap: 1.0, mixing: 0.4, level: 0.3, wavenumber: 1.0 }).unwrap();
    let mgrid = Arc::new(
        TensorGrid::for_model(&FiberModel::Matrix(two.clone()), vec![Axis::periodic(-PI, PI, 32).unwrap()], DEFAULT_POINT_BUDGET).unwrap(),
    );
    let cases = [
        (GridHamiltonian::gauged_pair(&model, &grid).unwrap(), Frame::Gauged),
        (GridHamiltonian::ungauged_pair(&model, &grid).unwrap(), Frame::Ungauged),
        (GridHamiltonian::matrix(&two, 0.2, &mgrid).unwrap(), Frame::Gauged),
    ];
    for (op, frame) in cases {
        let g = op.grid().clone();
        let a = random_state(&g, frame, op.h(), 1);
        let b = random_state(&g, frame, op.h(), 2);
        let pb = op.apply_state(&b).unwrap();
        let pa = op.apply_state(&a).unwrap();
        let lhs = a.inner(&pb).unwrap();
        let rhs = pa.inner(&b).unwrap();
        assert!((lhs - rhs).norm() < 1e-10 * lhs.norm().max(1.0), "{}: {lhs} vs {rhs}", op.label());
    }
}

#[test]
fn free_gaussian_spreads() {
    let h = 0.2;
    let grid = bare_plane(64, 6.0);
    let op = GridHamiltonian::charged_particle(0.0, 0.0, h, &Potential::Zero, &grid).unwrap();
    let s0 = gaussian(&grid, h, [0.0, 0.0], [0.0, 0.0]);
    let (samples, stats) = propagate(&op, &s0, &PropagatorConfig::new(0.05, 1.0)).unwrap();
    for s in [&samples[0], &samples[10], &samples[20]] {
        let want = 0.5 * h * (1.0 + 4.0 * s.time * s.time);
        assert!((variance(s, 0) - want).abs() < 1e-8, "t = {}: {} vs {want}", s.time, variance(s, 0));
    }
    assert!(stats.cumulative_norm_drift < 1e-10);
}

#[test]
fn cyclotron_orbit_closes() {
    // (h D - qA)^2 has levels 4 q b h (n + 1/2); after 2 pi / (4 q b) the state changes sign
    let (h, q, b) = (0.1, 1.0, 1.0);
    let grid = bare_plane(128, 4.0);
    let op = GridHamiltonian::charged_particle(q, b, h, &Potential::Zero, &grid).unwrap();
    let s0 = gaussian(&grid, h, [0.0, 0.0], [1.0, 0.0]);
    let period = 2.0 * PI / (4.0 * q * b);
    let mut cfg = PropagatorConfig::new(period / 200.0, period);
    cfg.sample_stride = 50;
    let (samples, _) = propagate(&op, &s0, &cfg).unwrap();
    let quarter = observables(&samples[1], None, 0).unwrap();
    assert!(quarter.x_mean[0].hypot(quarter.x_mean[1]) > 0.3);
    let mut back = s0.clone();
    back.scale(C64::new(-1.0, 0.0));
    back.time = period;
    let c = compare_states(samples.last().unwrap(), &back).unwrap();
    assert!(c.distance < 1e-6, "{}", c.distance);
}

#[test]
fn norm_and_energy_are_conserved() {
    let two = MatrixModel::new(1, MatrixKind::TwoLevel { gap: 1.0, mixing: 0.4, level: 0.3, wavenumber: 1.0 }).unwrap();
    let model = FiberModel::Matrix(two.clone());
    let h = 0.1;
    let ax = Axis::periodic(-2.0 * PI, 2.0 * PI, 256).unwrap();
    let grid = Arc::new(TensorGrid::for_model(&model, vec![ax.clone()], DEFAULT_POINT_BUDGET).unwrap());
    let basis = FiberBasis::compute(&model, &[ax], 2).unwrap().phase_align().unwrap();
    let s0 = initial_packet_state(&grid, &basis, &ClassicalState::new(vec![-2.0], vec![1.0]).unwrap(), h).unwrap();
    let op = GridHamiltonian::matrix(&two, h, &grid).unwrap();
    let e0 = op.energy(&s0).unwrap();
    let (s1, stats) = propagate_observed(&op, &s0, &PropagatorConfig::new(0.01, 1.0), |_| Ok(())).unwrap();
    assert!(stats.cumulative_norm_drift < 1e-9);
    assert!((op.energy(&s1).unwrap() - e0).abs() < 1e-8 * e0.abs().max(1.0));
    let o = observables(&s1, Some(&basis), 1).unwrap();
    assert!(o.population.unwrap() > 0.99);
    assert!(o.x_mean[0] > -1.0);
}

#[test]
fn time_reversal_returns() {
    let h = 0.1;
    let grid = bare_plane(64, 4.0);
    let op = GridHamiltonian::charged_particle(0.0, 0.0, h, &Potential::Cosine { amplitude: 0.5, wavenumber: 1.0 }, &grid).unwrap();
    let s0 = gaussian(&grid, h, [-1.0, 0.5], [0.5, 0.0]);
    let (s1, _) = propagate_observed(&op, &s0, &PropagatorConfig::new(0.02, 0.5), |_| Ok(())).unwrap();
    let (mut s2, _) = propagate_observed(&op, &s1, &PropagatorConfig::new(0.02, -0.5), |_| Ok(())).unwrap();
    assert!(s2.time.abs() < 1e-12);
    s2.time = 0.0;
    assert!(compare_states(&s2, &s0).unwrap().distance < 1e-8);
}

#[test]
fn gauge_round_trip_is_exact() {
    let model = neutral_pair(0.5, 1.0, 8);
    let grid = pair_grid(&model, 8);
    let s = random_state(&grid, Frame::Gauged, 0.5, 3);
    let fm = FiberModel::Pair(model);
    let u = gauge_conjugate(&s, &fm, Frame::Ungauged).unwrap();
    assert_eq!(u.frame, Frame::Ungauged);
    let g = gauge_conjugate(&u, &fm, Frame::Gauged).unwrap();
    assert!(compare_states(&g, &s).unwrap().distance < 1e-14);
    assert!(gauge_conjugate(&s, &fm, Frame::Gauged).is_err());
}

/// Relative gap between `P~ u` and `V* P V u`.
fn conjugation_gap(b: f64, n: usize) -> f64 {
    let model = neutral_pair(0.5, b, n);
    let grid = pair_grid(&model, n);
    let fm = FiberModel::Pair(model.clone());
    let mut u = GridState::zeros(&grid, Frame::Ungauged, model.h);
    let fl = grid.fiber_len();
    for ix in 0..grid.x_point_count() {
        let x = grid.x_coords(ix);
        for iy in 0..grid.y_point_count() {
            let y = grid.y_coords(iy);
            let r = 2.0 * ((x[0] - 0.3).powi(2) + x[1] * x[1] + y[0] * y[0] + y[1] * y[1]);
            u.data[ix * fl + iy] = C64::from_polar((-r).exp(), x[0] * 0.8);
        }
    }
    u.normalize().unwrap();
    let pu = GridHamiltonian::ungauged_pair(&model, &grid).unwrap().apply_state(&u).unwrap();
    let g = gauge_conjugate(&u, &fm, Frame::Gauged).unwrap();
    let pg = GridHamiltonian::gauged_pair(&model, &grid).unwrap().apply_state(&g).unwrap();
    let back = gauge_conjugate(&pg, &fm, Frame::Ungauged).unwrap();
    compare_states(&back, &pu).unwrap().distance / pu.norm()
}

#[test]
fn gauged_operator_conjugates_the_ungauged_one() {
    assert!(conjugation_gap(0.0, 16) < 1e-13);
    let coarse = conjugation_gap(1.0, 16);
    let fine = conjugation_gap(1.0, 32);
    // the gauge factor adds oscillation, so agreement is spectral rather than exact
    assert!(fine < 3e-5 && fine < 1e-3 * coarse, "{coarse:e} -> {fine:e}");
}

#[test]
fn charged_pair_needs_the_ungauged_frame() {
    let mut model = neutral_pair(0.5, 1.0, 8);
    model.nucleus_charge = 1.0;
    model.allow_non_neutral = true;
    let grid = pair_grid(&model, 8);
    assert!(GridHamiltonian::gauged_pair(&model, &grid).is_err());
    assert!(GridHamiltonian::ungauged_pair(&model, &grid).is_ok());
}

#[test]
fn wrap_guard_refuses_edge_mass() {
    let h = 0.2;
    let grid = bare_plane(32, 3.0);
    let op = GridHamiltonian::charged_particle(0.0, 0.0, h, &Potential::Zero, &grid).unwrap();
    let s0 = gaussian(&grid, h, [2.9, 0.0], [0.0, 0.0]);
    let err = propagate_observed(&op, &s0, &PropagatorConfig::new(0.05, 0.1), |_| Ok(())).unwrap_err();
    assert!(err.to_string().contains("boundary"), "{err}");
}

#[test]
fn krylov_refuses_when_too_small() {
    let h = 0.05;
    let grid = bare_plane(32, 4.0);
    let op = GridHamiltonian::charged_particle(0.0, 0.0, h, &Potential::Zero, &grid).unwrap();
    let s0 = random_state(&grid, Frame::Gauged, h, 4);
    let mut cfg = PropagatorConfig::new(1.0, 1.0);
    cfg.krylov_dim = 4;
    cfg.wrap_limit = f64::INFINITY;
    assert!(propagate_observed(&op, &s0, &cfg, |_| Ok(())).is_err());
}

#[test]
fn population_of_fiber_packets() {
    let two = MatrixModel::new(1, MatrixKind::TwoLevel { gap: 1.0, mixing: 0.4, level: 0.3, wavenumber: 1.0 }).unwrap();
    let model = FiberModel::Matrix(two);
    let ax = Axis::periodic(-2.0 * PI, 2.0 * PI, 128).unwrap();
    let grid = Arc::new(TensorGrid::for_model(&model, vec![ax.clone()], DEFAULT_POINT_BUDGET).unwrap());
    let basis = FiberBasis::compute(&model, &[ax], 2).unwrap().phase_align().unwrap();
    let s = initial_packet_state(&grid, &basis, &ClassicalState::new(vec![0.5], vec![1.0]).unwrap(), 0.1).unwrap();
    assert!((observables(&s, Some(&basis), 1).unwrap().population.unwrap() - 1.0).abs() < 1e-10);
    let mut other = s.clone();
    for ix in 0..grid.x_point_count() {
        let u = basis.vector(ix, 1);
        let c = basis.inner(basis.vector(ix, 0), &s.data[2 * ix..2 * ix + 2]);
        other.data[2 * ix] = u[0] * c;
        other.data[2 * ix + 1] = u[1] * c;
    }
    assert!(observables(&other, Some(&basis), 1).unwrap().population.unwrap() < 1e-10);
}

#[test]
fn free_packet_centre_moves_at_twice_the_momentum() {
    let h = 0.1;
    let grid = bare_plane(64, 4.0);
    let op = GridHamiltonian::charged_particle(0.0, 0.0, h, &Potential::Zero, &grid).unwrap();
    let s0 = gaussian(&grid, h, [-1.0, 0.0], [0.6, -0.4]);
    let mut cfg = PropagatorConfig::new(0.02, 1.0);
    cfg.sample_stride = 10;
    let (samples, _) = propagate(&op, &s0, &cfg).unwrap();
    for s in &samples {
        let o = observables(s, None, 0).unwrap();
        assert!((o.x_mean[0] - (-1.0 + 1.2 * s.time)).abs() < 1e-5);
        assert!((o.x_mean[1] + 0.8 * s.time).abs() < 1e-5);
        assert!((o.xi_mean[0] - 0.6).abs() < 1e-8);
    }
}
