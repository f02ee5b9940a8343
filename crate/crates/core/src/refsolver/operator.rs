use super::state::{Frame, GridState, TensorGrid};
use crate::error::{Error, Result};
use crate::linalg::ZERO;
use crate::models::{FiberModel, MatrixModel, PairModel, Potential};
use crate::spectral;
use num_complex::Complex64 as C64;
use std::sync::Arc;

/// Real Fourier multiplier along one or two axes. The table has the full array
/// shape: wavenumber index on the transformed axes, real-space index elsewhere.
#[derive(Clone, Debug)]
struct Pass {
    axes: Vec<usize>,
    table: Vec<f64>,
}

#[derive(Clone, Debug)]
enum Local {
    None,
    Scalar(Vec<f64>),
    /// `levels x levels` block per nuclear point.
    Matrix { levels: usize, blocks: Vec<C64> },
}

/// Discretized Hamiltonian on a [`TensorGrid`]: a sum of Fourier-diagonal
/// passes plus a local (multiplicative) part.
#[derive(Clone, Debug)]
pub struct GridHamiltonian {
    grid: Arc<TensorGrid>,
    frame: Frame,
    h: f64,
    passes: Vec<Pass>,
    local: Local,
    label: String,
}

fn tabulate(dims: &[usize], f: impl Fn(&[usize]) -> f64) -> Vec<f64> {
    let n: usize = dims.iter().product();
    let mut idx = vec![0; dims.len()];
    (0..n)
        .map(|p| {
            spectral::unravel(p, dims, &mut idx);
            f(&idx)
        })
        .collect()
}

/// Node coordinate along array axis `a` of the tensor grid (x-axes, then y-axes).
fn axis_nodes(grid: &TensorGrid) -> Vec<Vec<f64>> {
    grid.x_axes().iter().chain(grid.y_axes().iter()).map(|a| a.nodes()).collect()
}

fn axis_wavenumbers(grid: &TensorGrid) -> Vec<Vec<f64>> {
    grid.x_axes().iter().chain(grid.y_axes().iter()).map(|a| a.wavenumbers()).collect()
}

/// `A_c(r) = b (-r_2, r_1)_c`; zero outside the plane.
fn vector_potential(b: f64, c: usize, r: [f64; 2]) -> f64 {
    match c {
        0 => -b * r[1],
        _ => b * r[0],
    }
}

impl GridHamiltonian {
    /// Gauged pair operator
    /// `h^2 D_x^2 - 4 h^2 e A(y) . D_x + (D_y - e A(y))^2 + kappa (D_y + e A(y))^2 + V`
    /// with `V = V_12(y) + V_1(x - h^2 y) + V_2(x + y - h^2 y)`.
    pub fn gauged_pair(model: &PairModel, grid: &Arc<TensorGrid>) -> Result<GridHamiltonian> {
        model.validate()?;
        if !model.is_neutral() {
            return Err(Error::precondition(
                "the gauged operator needs a neutral pair; use the ungauged frame for charged controls",
            ));
        }
        check_pair_grid(model, grid)?;
        let d = model.d;
        let dims = grid.dims();
        let nodes = axis_nodes(grid);
        let k = axis_wavenumbers(grid);
        let (h2, e, b, kappa) = (model.h * model.h, model.electron_charge, model.field, model.kappa());
        let mut passes = Vec::new();
        for c in 0..d {
            let yc = |idx: &[usize]| -> [f64; 2] {
                if d == 2 {
                    [nodes[2][idx[2]], nodes[3][idx[3]]]
                } else {
                    [nodes[1][idx[1]], 0.0]
                }
            };
            let a_of = |idx: &[usize]| if d == 2 { vector_potential(b, c, yc(idx)) } else { 0.0 };
            let table = tabulate(&dims, |idx| {
                let kv = k[c][idx[c]];
                h2 * kv * kv - 4.0 * h2 * e * a_of(idx) * kv
            });
            passes.push(Pass { axes: vec![c], table });
            let ya = d + c;
            let table = tabulate(&dims, |idx| {
                let kv = k[ya][idx[ya]];
                let a = a_of(idx);
                (kv - e * a).powi(2) + kappa * (kv + e * a).powi(2)
            });
            passes.push(Pass { axes: vec![ya], table });
        }
        let local = Local::Scalar(tabulate(&dims, |idx| {
            let x: Vec<f64> = (0..d).map(|a| nodes[a][idx[a]]).collect();
            let y: Vec<f64> = (0..d).map(|a| nodes[d + a][idx[d + a]]).collect();
            pair_potential(model, &x, &y)
        }));
        Ok(GridHamiltonian { grid: grid.clone(), frame: Frame::Gauged, h: model.h, passes, local, label: "pair P (gauged)".into() })
    }

    /// Ungauged centre-of-mass operator `(1/m) Pi_1^2 + Pi_2^2 + V` for arbitrary charges, with
    /// `Pi_1 = (m/M) D_x - D_y - q_1 A(x - y/M)` and `Pi_2 = (1/M) D_x + D_y - q_2 A(x + (m/M) y)`.
    pub fn ungauged_pair(model: &PairModel, grid: &Arc<TensorGrid>) -> Result<GridHamiltonian> {
        model.validate()?;
        check_pair_grid(model, grid)?;
        let d = model.d;
        let dims = grid.dims();
        let nodes = axis_nodes(grid);
        let k = axis_wavenumbers(grid);
        let big = model.total_mass();
        let m = model.nuclear_mass();
        let (q1, q2, b) = (model.nucleus_charge, model.electron_charge, model.field);
        let mut passes = Vec::new();
        for c in 0..d {
            let (xa, ya) = (c, d + c);
            let table = tabulate(&dims, |idx| {
                let (kx, ky) = (k[xa][idx[xa]], k[ya][idx[ya]]);
                let (a1, a2) = if d == 2 {
                    let x = [nodes[0][idx[0]], nodes[1][idx[1]]];
                    let y = [nodes[2][idx[2]], nodes[3][idx[3]]];
                    let r1 = [x[0] - y[0] / big, x[1] - y[1] / big];
                    let r2 = [x[0] + m / big * y[0], x[1] + m / big * y[1]];
                    (vector_potential(b, c, r1), vector_potential(b, c, r2))
                } else {
                    (0.0, 0.0)
                };
                let p1 = m / big * kx - ky - q1 * a1;
                let p2 = kx / big + ky - q2 * a2;
                p1 * p1 / m + p2 * p2
            });
            passes.push(Pass { axes: vec![xa, ya], table });
        }
        let local = Local::Scalar(tabulate(&dims, |idx| {
            let x: Vec<f64> = (0..d).map(|a| nodes[a][idx[a]]).collect();
            let y: Vec<f64> = (0..d).map(|a| nodes[d + a][idx[d + a]]).collect();
            pair_potential(model, &x, &y)
        }));
        let label = if model.is_neutral() { "pair P~ (ungauged)" } else { "charged pair P~ (ungauged)" };
        Ok(GridHamiltonian { grid: grid.clone(), frame: Frame::Ungauged, h: model.h, passes, local, label: label.into() })
    }

    /// `h^2 D_x^2 + V(x)` with a matrix-valued `V`.
    pub fn matrix(model: &MatrixModel, h: f64, grid: &Arc<TensorGrid>) -> Result<GridHamiltonian> {
        if grid.d() != model.d || !grid.y_axes().is_empty() || grid.levels() != model.size() {
            return Err(Error::structural("tensor grid", "grid does not match the matrix model"));
        }
        check_h(h)?;
        let d = model.d;
        let dims = grid.dims();
        let k = axis_wavenumbers(grid);
        let table = tabulate(&dims, |idx| (0..d).map(|a| (h * k[a][idx[a]]).powi(2)).sum());
        let n = model.size();
        let mut blocks = Vec::with_capacity(grid.x_point_count() * n * n);
        for ix in 0..grid.x_point_count() {
            blocks.extend(model.potential(&grid.x_coords(ix)));
        }
        Ok(GridHamiltonian {
            grid: grid.clone(),
            frame: Frame::Gauged,
            h,
            passes: vec![Pass { axes: (0..d).collect(), table }],
            local: Local::Matrix { levels: n, blocks },
            label: "matrix fiber".into(),
        })
    }

    /// Single particle `(h D_x - q A(x))^2 + V(x)` in the plane.
    pub fn charged_particle(charge: f64, field: f64, h: f64, potential: &Potential, grid: &Arc<TensorGrid>) -> Result<GridHamiltonian> {
        if grid.d() != 2 || !grid.y_axes().is_empty() || grid.levels() != 1 {
            return Err(Error::structural("tensor grid", "a charged particle lives on a bare 2D nuclear grid"));
        }
        check_h(h)?;
        let dims = grid.dims();
        let nodes = axis_nodes(grid);
        let k = axis_wavenumbers(grid);
        let passes = (0..2)
            .map(|c| Pass {
                axes: vec![c],
                table: tabulate(&dims, |idx| {
                    let r = [nodes[0][idx[0]], nodes[1][idx[1]]];
                    (h * k[c][idx[c]] - charge * vector_potential(field, c, r)).powi(2)
                }),
            })
            .collect();
        let local = if potential.is_zero() {
            Local::None
        } else {
            Local::Scalar(tabulate(&dims, |idx| potential.value(&[nodes[0][idx[0]], nodes[1][idx[1]]])))
        };
        Ok(GridHamiltonian { grid: grid.clone(), frame: Frame::Gauged, h, passes, local, label: "charged particle".into() })
    }

    /// Operator of a fiber model in the requested frame; matrix models only have the gauged one.
    pub fn for_model(model: &FiberModel, h: f64, grid: &Arc<TensorGrid>, frame: Frame) -> Result<GridHamiltonian> {
        match (model, frame) {
            (FiberModel::Matrix(m), Frame::Gauged) => GridHamiltonian::matrix(m, h, grid),
            (FiberModel::Matrix(_), Frame::Ungauged) => {
                Err(Error::structural("frame", "matrix models have no ungauged frame"))
            }
            (FiberModel::Pair(p), Frame::Gauged) => GridHamiltonian::gauged_pair(p, grid),
            (FiberModel::Pair(p), Frame::Ungauged) => GridHamiltonian::ungauged_pair(p, grid),
        }
    }

    pub fn grid(&self) -> &Arc<TensorGrid> {
        &self.grid
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Upper bound on the spectral radius: largest multiplier of every pass
    /// plus the largest local norm.
    pub fn spectral_bound(&self) -> f64 {
        let kin: f64 = self.passes.iter().map(|p| p.table.iter().fold(0.0, |m: f64, v| m.max(v.abs()))).sum();
        let loc = match &self.local {
            Local::None => 0.0,
            Local::Scalar(v) => v.iter().fold(0.0, |m: f64, x| m.max(x.abs())),
            Local::Matrix { levels, blocks } => blocks
                .chunks(levels * levels)
                .map(|b| b.chunks(*levels).map(|r| r.iter().map(|v| v.norm()).sum::<f64>()).fold(0.0, f64::max))
                .fold(0.0, f64::max),
        };
        kin + loc
    }

    /// `out = P psi`.
    pub fn apply(&self, psi: &[C64], out: &mut [C64]) {
        let dims = self.grid.dims();
        out.iter_mut().for_each(|v| *v = ZERO);
        let mut buf = vec![ZERO; psi.len()];
        for pass in &self.passes {
            buf.copy_from_slice(psi);
            if pass.axes.len() == 1 {
                let a = pass.axes[0];
                let stride = spectral::strides(&dims)[a];
                let t = &pass.table;
                spectral::fourier_multiply_axis(&mut buf, &dims, a, |s, j| C64::new(t[s + j * stride], 0.0));
            } else {
                for &a in &pass.axes {
                    spectral::fft_axis(&mut buf, &dims, a, false);
                }
                buf.iter_mut().zip(&pass.table).for_each(|(v, m)| *v *= *m);
                for &a in &pass.axes {
                    spectral::fft_axis(&mut buf, &dims, a, true);
                }
            }
            out.iter_mut().zip(&buf).for_each(|(o, v)| *o += v);
        }
        match &self.local {
            Local::None => {}
            Local::Scalar(v) => out.iter_mut().zip(psi).zip(v).for_each(|((o, p), w)| *o += p * *w),
            Local::Matrix { levels, blocks } => {
                let n = *levels;
                for ((o, p), b) in out.chunks_mut(n).zip(psi.chunks(n)).zip(blocks.chunks(n * n)) {
                    for i in 0..n {
                        let mut s = ZERO;
                        for j in 0..n {
                            s += b[i * n + j] * p[j];
                        }
                        o[i] += s;
                    }
                }
            }
        }
    }

    /// `P` applied to a state of the matching frame.
    pub fn apply_state(&self, state: &GridState) -> Result<GridState> {
        self.check_state(state)?;
        let mut out = state.clone();
        self.apply(&state.data, &mut out.data);
        Ok(out)
    }

    /// `<psi, P psi>`.
    pub fn energy(&self, state: &GridState) -> Result<f64> {
        let hp = self.apply_state(state)?;
        Ok(state.inner(&hp)?.re)
    }

    pub fn check_state(&self, state: &GridState) -> Result<()> {
        if !Arc::ptr_eq(&state.grid, &self.grid) && *state.grid != *self.grid {
            return Err(Error::structural("tensor grid", "state and operator grids differ"));
        }
        if state.frame != self.frame {
            return Err(Error::structural("frame", format!("{} state for the {} operator", state.frame, self.label)));
        }
        Ok(())
    }
}

fn check_h(h: f64) -> Result<()> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::config(format!("semiclassical parameter h = {h} outside (0, 1)")));
    }
    Ok(())
}

fn check_pair_grid(model: &PairModel, grid: &TensorGrid) -> Result<()> {
    if grid.d() != model.d || grid.y_axes() != model.y_axes.as_slice() || grid.levels() != 1 {
        return Err(Error::structural("tensor grid", "grid does not carry the pair's electronic axes"));
    }
    Ok(())
}

/// `V_12(y) + V_1(x_1) + V_2(x_2)` at nucleus `x_1 = x - y/M` and electron `x_2 = x + (m/M) y`.
fn pair_potential(model: &PairModel, x: &[f64], y: &[f64]) -> f64 {
    let big = model.total_mass();
    let m = model.nuclear_mass();
    let mut v = model.binding.value(y);
    if !model.nucleus_potential.is_zero() {
        let r1: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b / big).collect();
        v += model.nucleus_potential.value(&r1);
    }
    if !model.electron_potential.is_zero() {
        let r2: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + m / big * b).collect();
        v += model.electron_potential.value(&r2);
    }
    v
}
