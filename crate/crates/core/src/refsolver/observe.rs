use super::state::{Frame, GridState, TensorGrid};
use crate::dynamics::{coherent_state, ClassicalState, PacketParams, Width};
use crate::error::{Error, Result};
use crate::models::{FiberBasis, FiberModel};
use crate::spectral;
use num_complex::Complex64 as C64;
use std::sync::Arc;

/// Expectation values of one state.
#[derive(Clone, Debug, PartialEq)]
pub struct Observables {
    pub time: f64,
    pub norm: f64,
    pub x_mean: Vec<f64>,
    /// `<h D_x>`.
    pub xi_mean: Vec<f64>,
    /// `|Pi_0 phi|^2` for gauged states.
    pub population: Option<f64>,
}

/// `sum_i u_i <u_i, phi(x, .)>` over the first `k` levels, at every nuclear point.
pub fn project_fiber(state: &GridState, basis: &FiberBasis, k: usize) -> Result<GridState> {
    check_basis(&state.grid, basis)?;
    let fl = state.grid.fiber_len();
    let mut out = state.clone();
    for ix in 0..state.grid.x_point_count() {
        let p = basis.project(ix, k, &state.data[ix * fl..(ix + 1) * fl]);
        out.data[ix * fl..(ix + 1) * fl].copy_from_slice(&p);
    }
    Ok(out)
}

fn check_basis(grid: &TensorGrid, basis: &FiberBasis) -> Result<()> {
    if basis.x_axes() != grid.x_axes() || basis.fiber_len() != grid.fiber_len() {
        return Err(Error::structural("fiber basis", "basis does not match the tensor grid"));
    }
    Ok(())
}

/// Norm, position and momentum means, and the population of the lowest `k`
/// fiber levels (gauged states only).
pub fn observables(state: &GridState, basis: Option<&FiberBasis>, k: usize) -> Result<Observables> {
    let grid = &state.grid;
    let d = grid.d();
    let fl = grid.fiber_len();
    let norm2: f64 = state.data.iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.weight();
    let mut x_mean = vec![0.0; d];
    for ix in 0..grid.x_point_count() {
        let m: f64 = state.data[ix * fl..(ix + 1) * fl].iter().map(|v| v.norm_sqr()).sum();
        for (a, c) in grid.x_coords(ix).into_iter().enumerate() {
            x_mean[a] += m * c;
        }
    }
    x_mean.iter_mut().for_each(|v| *v *= grid.weight() / norm2);
    let dims = grid.dims();
    let st = spectral::strides(&dims);
    let mut xi_mean = vec![0.0; d];
    for a in 0..d {
        let mut buf = state.data.clone();
        spectral::fft_axis(&mut buf, &dims, a, false);
        let k = grid.x_axes()[a].wavenumbers();
        let n = k.len();
        let (mut num, mut den) = (0.0, 0.0);
        for (p, v) in buf.iter().enumerate() {
            let j = (p / st[a]) % n;
            num += v.norm_sqr() * k[j];
            den += v.norm_sqr();
        }
        xi_mean[a] = state.h * num / den;
    }
    let population = match (basis, state.frame) {
        (Some(b), Frame::Gauged) => {
            let proj = project_fiber(state, b, k)?;
            Some(proj.norm().powi(2) / norm2)
        }
        _ => None,
    };
    Ok(Observables { time: state.time, norm: norm2.sqrt(), x_mean, xi_mean, population })
}

/// Multiply by the gauge factor `V = exp(-i e A(x) . y)` (to the gauged frame)
/// or by its conjugate (to the ungauged frame).
pub fn gauge_conjugate(state: &GridState, model: &FiberModel, target: Frame) -> Result<GridState> {
    if state.frame == target {
        return Err(Error::structural("frame", format!("state is already {target}")));
    }
    if matches!(model, FiberModel::Matrix(_)) {
        return Err(Error::structural("frame", "matrix models have no ungauged frame"));
    }
    let grid = &state.grid;
    let fl = grid.fiber_len();
    let ny = grid.y_point_count();
    let levels = grid.levels();
    let ys: Vec<Vec<f64>> = (0..ny).map(|iy| grid.y_coords(iy)).collect();
    let mut out = state.clone();
    for ix in 0..grid.x_point_count() {
        let x = grid.x_coords(ix);
        for (iy, y) in ys.iter().enumerate() {
            let g = model.gauge_phase(&x, y);
            let g = if target == Frame::Gauged { g } else { g.conj() };
            for l in 0..levels {
                out.data[ix * fl + iy * levels + l] *= g;
            }
        }
    }
    out.frame = target;
    Ok(out)
}

/// Distances between two states of the same frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Comparison {
    pub distance: f64,
    pub overlap: C64,
    /// `|| |a| - |b| ||`, blind to phases.
    pub modulus_distance: f64,
}

pub fn compare_states(a: &GridState, b: &GridState) -> Result<Comparison> {
    a.check_compatible(b)?;
    let w = a.grid.weight();
    let distance = (a.data.iter().zip(&b.data).map(|(u, v)| (u - v).norm_sqr()).sum::<f64>() * w).sqrt();
    let modulus_distance = (a.data.iter().zip(&b.data).map(|(u, v)| (u.norm() - v.norm()).powi(2)).sum::<f64>() * w).sqrt();
    Ok(Comparison { distance, overlap: a.inner(b)?, modulus_distance })
}

/// `(pi h)^{-d/4} e^{i x xi_0 / h - (x - x_0)^2 / 2h} u_1(x, y)` in the gauged frame, normalized.
pub fn initial_packet_state(grid: &Arc<TensorGrid>, basis: &FiberBasis, start: &ClassicalState, h: f64) -> Result<GridState> {
    let d = grid.d();
    let mut s = coherent_state(grid, basis, 0, &PacketParams::initial(start.clone(), h), &vec![0; d], Width::Squeezed)?;
    s.normalize()?;
    Ok(s)
}
