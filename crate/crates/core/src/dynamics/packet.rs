use super::flow::{ClassicalState, TrajectoryBundle, VariationalFrame};
use crate::error::{Error, Result};
use crate::linalg::ZERO;
use crate::models::FiberBasis;
use crate::refsolver::{Frame, GridState, TensorGrid};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;
use std::sync::Arc;

/// Largest deviation from unit norm accepted for an assembled packet.
pub const PACKET_NORM_TOLERANCE: f64 = 1e-6;

/// Gaussian width used by [`assemble_packet`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Width {
    /// Quadratic form `Z Y^{-1}` and prefactor `det(Y)^{-1/2}` from the linearized flow.
    Squeezed,
    /// The isotropic initial width kept for all times.
    Frozen,
}

/// Everything that fixes one coherent state on the nuclear grid.
#[derive(Clone, Debug)]
pub struct PacketParams {
    pub center: ClassicalState,
    /// Initial point, entering the global phase through `x_0 . xi_0`.
    pub origin: ClassicalState,
    pub delta: f64,
    pub frame: VariationalFrame,
    /// `sqrt(det Y)` on the branch continued from `t = 0`.
    pub det_root: C64,
    pub h: f64,
}

impl PacketParams {
    /// The `t = 0` packet at `(x_0, xi_0)`.
    pub fn initial(origin: ClassicalState, h: f64) -> PacketParams {
        let d = origin.d();
        PacketParams {
            center: origin.clone(),
            origin,
            delta: 0.0,
            frame: VariationalFrame::initial(d),
            det_root: C64::new(1.0, 0.0),
            h,
        }
    }
}

/// Displacement `x - c` reduced to the nearest periodic image.
fn displacement(grid: &TensorGrid, x: &[f64], c: &[f64]) -> Vec<f64> {
    grid.x_axes()
        .iter()
        .zip(x.iter().zip(c))
        .map(|(ax, (a, b))| {
            let l = ax.length();
            let mut v = a - b;
            v -= l * (v / l).round();
            v
        })
        .collect()
}

/// All multi-indices `k <= mu` componentwise, in row-major order.
fn index_box(mu: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &m in mu {
        out = out.into_iter().flat_map(|p| (0..=m).map(move |k| [p.clone(), vec![k]].concat())).collect();
    }
    out
}

fn flat_index(k: &[usize], mu: &[usize]) -> usize {
    k.iter().zip(mu).fold(0, |acc, (&ki, &mi)| acc * (mi + 1) + ki)
}

/// Nuclear amplitude at displacement `dx` from the centre:
/// `e^{i delta/h} e^{i (xi . dx + (x_t xi_t + x_0 xi_0)/2 ) / h}` times the
/// Gaussian with quadratic form `Gamma` and the ladder polynomial.
fn amplitude(p: &PacketParams, dx: &[f64], gamma: &[C64], y_inv: &[C64], y_mix: &[C64], mu: &[usize], norm: C64) -> C64 {
    let d = dx.len();
    let h = p.h;
    let mut quad = ZERO;
    for i in 0..d {
        for j in 0..d {
            quad += dx[i] * gamma[i * d + j] * dx[j];
        }
    }
    let lin: f64 = p.center.xi.iter().zip(dx).map(|(a, b)| a * b).sum();
    let ct: f64 = p.center.x.iter().zip(&p.center.xi).map(|(a, b)| a * b).sum();
    let c0: f64 = p.origin.x.iter().zip(&p.origin.xi).map(|(a, b)| a * b).sum();
    let phase = (p.delta + lin + 0.5 * (ct + c0)) / h;
    let gauss = (C64::new(0.0, 0.5 / h) * quad + C64::new(0.0, phase)).exp() * norm;
    if mu.iter().all(|&m| m == 0) {
        return gauss;
    }
    // Hagedorn recursion on the polynomial factors
    let u: Vec<C64> = (0..d).map(|i| (0..d).map(|j| y_inv[i * d + j] * dx[j]).sum::<C64>()).collect();
    let ks = index_box(mu);
    let mut poly = vec![ZERO; ks.len()];
    poly[0] = C64::new(1.0, 0.0);
    let s2h = (2.0 / h).sqrt();
    for k in ks.iter().skip(1) {
        let j = k.iter().position(|&v| v > 0).expect("nonzero index");
        let mut prev = k.clone();
        prev[j] -= 1;
        let mut v = u[j] * s2h * poly[flat_index(&prev, mu)];
        for l in 0..d {
            if prev[l] == 0 {
                continue;
            }
            let mut pp = prev.clone();
            pp[l] -= 1;
            v -= y_mix[j * d + l] * (prev[l] as f64).sqrt() * poly[flat_index(&pp, mu)];
        }
        poly[flat_index(k, mu)] = v / (k[j] as f64).sqrt();
    }
    gauss * poly[flat_index(mu, mu)]
}

/// Nuclear packet times fiber vector `u_level(x, .)` on the tensor grid (gauged frame).
pub fn coherent_state(
    grid: &Arc<TensorGrid>,
    basis: &FiberBasis,
    level: usize,
    params: &PacketParams,
    ladder: &[usize],
    width: Width,
) -> Result<GridState> {
    let d = grid.d();
    if basis.x_axes() != grid.x_axes() || basis.fiber_len() != grid.fiber_len() {
        return Err(Error::structural("fiber basis", "basis does not match the tensor grid"));
    }
    if level >= basis.count() {
        return Err(Error::structural("fiber basis", format!("level {level} of {}", basis.count())));
    }
    if ladder.len() != d || params.center.d() != d {
        return Err(Error::structural("packet", format!("ladder index and centre must have {d} components")));
    }
    let (gamma, y_inv, y_mix, det_root) = match width {
        Width::Squeezed => {
            let f = &params.frame;
            let y_inv = f.y_inverse()?;
            let mut gamma = vec![ZERO; d * d];
            let mut mix = vec![ZERO; d * d];
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        gamma[i * d + j] += f.z[i * d + k] * y_inv[k * d + j];
                        mix[i * d + j] += y_inv[i * d + k] * f.y[k * d + j].conj();
                    }
                }
            }
            (gamma, y_inv, mix, params.det_root)
        }
        Width::Frozen => {
            let init = VariationalFrame::initial(d);
            (init.z.clone(), init.y.clone(), init.y, C64::new(1.0, 0.0))
        }
    };
    let norm = C64::new((PI * params.h).powf(-(d as f64) / 4.0), 0.0) / det_root;
    let fl = grid.fiber_len();
    let mut out = GridState::zeros(grid, Frame::Gauged, params.h);
    out.time = params.frame.time;
    for ix in 0..grid.x_point_count() {
        let dx = displacement(grid, &grid.x_coords(ix), &params.center.x);
        let a = amplitude(params, &dx, &gamma, &y_inv, &y_mix, ladder, norm);
        let u = basis.vector(ix, level);
        for (o, v) in out.data[ix * fl..(ix + 1) * fl].iter_mut().zip(u) {
            *o = a * v;
        }
    }
    let n = out.norm();
    if (n - 1.0).abs() > PACKET_NORM_TOLERANCE {
        return Err(Error::precondition(format!(
            "packet at x = {:?} has grid norm {n:.9}; the nuclear grid does not resolve or contain it",
            params.center.x
        )));
    }
    Ok(out)
}

/// Coherent state predicted at sample `sample` of a trajectory carrying frames.
pub fn assemble_packet(
    traj: &TrajectoryBundle,
    sample: usize,
    grid: &Arc<TensorGrid>,
    basis: &FiberBasis,
    h: f64,
    ladder: &[usize],
    width: Width,
) -> Result<GridState> {
    let frames = traj
        .frames
        .as_ref()
        .ok_or_else(|| Error::structural("trajectory", "packet assembly needs the linearized flow"))?;
    if sample >= traj.len() {
        return Err(Error::structural("trajectory", format!("sample {sample} of {}", traj.len())));
    }
    let roots = traj.det_roots().expect("frames present");
    let params = PacketParams {
        center: traj.states[sample].clone(),
        origin: traj.states[0].clone(),
        delta: traj.delta[sample],
        frame: frames[sample].clone(),
        det_root: roots[sample],
        h,
    };
    coherent_state(grid, basis, 0, &params, ladder, width)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate, FlowOptions, KineticPotential};
    use crate::models::{FiberModel, MatrixKind, MatrixModel, Potential};
    use crate::refsolver::{compare_states, initial_packet_state, propagate, GridHamiltonian, PropagatorConfig, DEFAULT_POINT_BUDGET};
    use crate::symbols::Axis;

    /// Two constant levels on a 2D periodic nuclear grid.
    fn flat_setup(e0: f64) -> (MatrixModel, Arc<TensorGrid>, FiberBasis) {
        let m = MatrixModel::new(2, MatrixKind::ConstantFiber { energies: vec![e0, e0 + 3.0], angle: 0.4, level: 0.0, wavenumber: 1.0 }).unwrap();
        let ax = Axis::periodic(-6.0, 6.0, 64).unwrap();
        let fm = FiberModel::Matrix(m.clone());
        let grid = Arc::new(TensorGrid::for_model(&fm, vec![ax.clone(), ax.clone()], DEFAULT_POINT_BUDGET).unwrap());
        let basis = FiberBasis::compute(&fm, &[ax.clone(), ax], 2).unwrap();
        (m, grid, basis)
    }

    #[test]
    fn index_box_is_row_major() {
        let b = index_box(&[1, 2]);
        assert_eq!(b.len(), 6);
        for (i, k) in b.iter().enumerate() {
            assert_eq!(flat_index(k, &[1, 2]), i);
        }
    }

    #[test]
    fn initial_packet_matches_the_assembled_one() {
        let (_, grid, basis) = flat_setup(0.0);
        let h = 0.2;
        let start = ClassicalState::new(vec![-1.0, 0.5], vec![0.8, -0.3]).unwrap();
        let traj = integrate(&KineticPotential::free(2), &start, FlowOptions::new(0.01, 0.1), true).unwrap();
        let a = assemble_packet(&traj, 0, &grid, &basis, h, &[0, 0], Width::Squeezed).unwrap();
        let b = initial_packet_state(&grid, &basis, &start, h).unwrap();
        assert!(compare_states(&a, &b).unwrap().distance < 1e-12);
        let f = assemble_packet(&traj, 0, &grid, &basis, h, &[0, 0], Width::Frozen).unwrap();
        assert!(compare_states(&f, &b).unwrap().distance < 1e-12);
    }

    #[test]
    fn free_packet_follows_the_grid() {
        // quadratic symbol: the squeezed packet is exact, including the phase from the level energy
        let e0 = 0.7;
        let (m, grid, basis) = flat_setup(e0);
        let h = 0.2;
        let start = ClassicalState::new(vec![-1.0, 0.5], vec![0.8, -0.3]).unwrap();
        let g = KineticPotential::new(2, Potential::Constant(e0));
        let traj = integrate(&g, &start, FlowOptions::new(0.01, 1.0), true).unwrap();
        let op = GridHamiltonian::matrix(&m, h, &grid).unwrap();
        for ladder in [[0, 0], [1, 0], [1, 2]] {
            let s0 = assemble_packet(&traj, 0, &grid, &basis, h, &ladder, Width::Squeezed).unwrap();
            let mut cfg = PropagatorConfig::new(0.05, 1.0);
            cfg.sample_stride = 20;
            let (samples, _) = propagate(&op, &s0, &cfg).unwrap();
            let exact = samples.last().unwrap();
            let k = traj.sample_at(exact.time);
            let sq = assemble_packet(&traj, k, &grid, &basis, h, &ladder, Width::Squeezed).unwrap();
            let d = compare_states(&sq, exact).unwrap().distance;
            assert!(d < 1e-6, "{ladder:?}: {d:e}");
            if ladder == [0, 0] {
                let fr = assemble_packet(&traj, k, &grid, &basis, h, &ladder, Width::Frozen).unwrap();
                assert!(compare_states(&fr, exact).unwrap().distance > 0.1);
            }
        }
    }

    #[test]
    fn ladder_states_are_orthonormal() {
        let (_, grid, basis) = flat_setup(0.0);
        let h = 0.2;
        let start = ClassicalState::new(vec![0.0, 0.0], vec![0.5, 0.2]).unwrap();
        let traj = integrate(&KineticPotential::free(2), &start, FlowOptions::new(0.01, 0.8), true).unwrap();
        let k = traj.len() - 1;
        let ladders = [[0, 0], [1, 0], [0, 1], [2, 1], [0, 3]];
        let states: Vec<GridState> =
            ladders.iter().map(|l| assemble_packet(&traj, k, &grid, &basis, h, l, Width::Squeezed).unwrap()).collect();
        for (i, a) in states.iter().enumerate() {
            for (j, b) in states.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((a.inner(b).unwrap() - want).norm() < 1e-9, "{:?} {:?}", ladders[i], ladders[j]);
            }
        }
    }
}
