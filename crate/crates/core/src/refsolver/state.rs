use crate::error::{Error, Result};
use crate::linalg::ZERO;
use crate::models::FiberModel;
use crate::spectral;
use crate::symbols::{Axis, AxisKind};
use num_complex::Complex64 as C64;
use std::fmt;
use std::sync::Arc;

/// Default upper bound on the number of complex samples in one state.
pub const DEFAULT_POINT_BUDGET: usize = 1 << 22;

/// Which Hamiltonian a state is written for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Frame {
    /// After the gauge transform, propagated by `P`.
    Gauged,
    /// Centre-of-mass coordinates before the gauge transform, propagated by `P~`.
    Ungauged,
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Frame::Gauged => "gauged",
            Frame::Ungauged => "ungauged",
        })
    }
}

/// Nuclear grid times fiber grid.
///
/// Samples are row-major over `(x_1..x_d, y_1..y_d, level)`. Pair models have
/// electronic y-axes and a single level; matrix models have no y-axes and one
/// level per fiber component.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorGrid {
    x: Vec<Axis>,
    y: Vec<Axis>,
    levels: usize,
}

impl TensorGrid {
    pub fn new(x: Vec<Axis>, y: Vec<Axis>, levels: usize, budget: usize) -> Result<TensorGrid> {
        if x.is_empty() || x.len() > 2 {
            return Err(Error::structural("tensor grid", format!("{} nuclear axes", x.len())));
        }
        if x.iter().chain(y.iter()).any(|a| a.kind != AxisKind::Periodic) {
            return Err(Error::structural("tensor grid", "every axis must be periodic"));
        }
        if levels == 0 {
            return Err(Error::structural("tensor grid", "no fiber levels"));
        }
        let g = TensorGrid { x, y, levels };
        if g.len() > budget {
            return Err(Error::config(format!("tensor grid has {} points, budget is {budget}", g.len())));
        }
        Ok(g)
    }

    /// Grid matching a model's fiber: the pair's electronic axes or the matrix size.
    pub fn for_model(model: &FiberModel, x: Vec<Axis>, budget: usize) -> Result<TensorGrid> {
        if x.len() != model.d() {
            return Err(Error::structural("tensor grid", format!("{} nuclear axes for d = {}", x.len(), model.d())));
        }
        match model {
            FiberModel::Matrix(m) => TensorGrid::new(x, Vec::new(), m.size(), budget),
            FiberModel::Pair(p) => TensorGrid::new(x, p.y_axes.clone(), 1, budget),
        }
    }

    pub fn d(&self) -> usize {
        self.x.len()
    }

    pub fn x_axes(&self) -> &[Axis] {
        &self.x
    }

    pub fn y_axes(&self) -> &[Axis] {
        &self.y
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Array shape including the trailing level axis.
    pub fn dims(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.x.iter().chain(self.y.iter()).map(|a| a.points).collect();
        d.push(self.levels);
        d
    }

    pub fn x_dims(&self) -> Vec<usize> {
        self.x.iter().map(|a| a.points).collect()
    }

    pub fn x_point_count(&self) -> usize {
        self.x.iter().map(|a| a.points).product()
    }

    /// Samples per nuclear point.
    pub fn fiber_len(&self) -> usize {
        self.y.iter().map(|a| a.points).product::<usize>() * self.levels
    }

    pub fn len(&self) -> usize {
        self.x_point_count() * self.fiber_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x_weight(&self) -> f64 {
        self.x.iter().map(|a| a.spacing()).product()
    }

    pub fn fiber_weight(&self) -> f64 {
        self.y.iter().map(|a| a.spacing()).product()
    }

    /// Quadrature weight of one sample.
    pub fn weight(&self) -> f64 {
        self.x_weight() * self.fiber_weight()
    }

    pub fn x_coords(&self, ix: usize) -> Vec<f64> {
        coords(&self.x, ix)
    }

    /// Coordinates of the electronic point with flat index `iy` (no level index).
    pub fn y_coords(&self, iy: usize) -> Vec<f64> {
        coords(&self.y, iy)
    }

    pub fn y_point_count(&self) -> usize {
        self.y.iter().map(|a| a.points).product()
    }
}

fn coords(axes: &[Axis], flat: usize) -> Vec<f64> {
    let dims: Vec<usize> = axes.iter().map(|a| a.points).collect();
    let mut idx = vec![0; dims.len()];
    spectral::unravel(flat, &dims, &mut idx);
    axes.iter().zip(&idx).map(|(a, &i)| a.min + i as f64 * a.spacing()).collect()
}

/// Wave function sampled on a [`TensorGrid`].
#[derive(Clone, Debug)]
pub struct GridState {
    pub grid: Arc<TensorGrid>,
    pub data: Vec<C64>,
    pub frame: Frame,
    pub time: f64,
    pub h: f64,
}

impl GridState {
    pub fn zeros(grid: &Arc<TensorGrid>, frame: Frame, h: f64) -> GridState {
        GridState { grid: grid.clone(), data: vec![ZERO; grid.len()], frame, time: 0.0, h }
    }

    pub fn inner(&self, other: &GridState) -> Result<C64> {
        self.check_compatible(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum::<C64>() * self.grid.weight())
    }

    pub fn norm(&self) -> f64 {
        (self.data.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.weight()).sqrt()
    }

    pub fn scale(&mut self, s: C64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn normalize(&mut self) -> Result<f64> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::precondition(format!("cannot normalize a state of norm {n}")));
        }
        self.scale(C64::new(1.0 / n, 0.0));
        Ok(n)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Same grid and same frame.
    pub fn check_compatible(&self, other: &GridState) -> Result<()> {
        if !Arc::ptr_eq(&self.grid, &other.grid) && *self.grid != *other.grid {
            return Err(Error::structural("tensor grid", "states live on different grids"));
        }
        if self.frame != other.frame {
            return Err(Error::structural("frame", format!("{} vs {}", self.frame, other.frame)));
        }
        Ok(())
    }

    /// Squared norm held within `width` samples of the edge of every periodic axis.
    pub fn boundary_mass(&self, width: usize) -> f64 {
        let dims = self.grid.dims();
        let axes: Vec<&Axis> = self.grid.x.iter().chain(self.grid.y.iter()).collect();
        let mut idx = vec![0; dims.len()];
        let mut mass = 0.0;
        for (p, v) in self.data.iter().enumerate() {
            spectral::unravel(p, &dims, &mut idx);
            let near = axes.iter().enumerate().any(|(a, ax)| idx[a] < width || idx[a] + width >= ax.points);
            if near {
                mass += v.norm_sqr();
            }
        }
        mass * self.grid.weight()
    }
}
