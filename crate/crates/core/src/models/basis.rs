use super::{FiberModel, PairModel};
use crate::error::{Error, Result};
use crate::linalg::ZERO;
use crate::spectral;
use crate::symbols::Axis;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

/// Per-x fiber eigendata on a periodic nuclear grid.
#[derive(Clone, Debug)]
pub struct FiberBasis {
    x_axes: Vec<Axis>,
    count: usize,
    fiber_len: usize,
    weight: f64,
    /// `[slice][level]`
    energies: Vec<f64>,
    /// `[slice][level][fiber]`
    vectors: Vec<C64>,
    uniform: bool,
    aligned: bool,
}

impl FiberBasis {
    /// Solve the fiber problem at every point of the nuclear grid (once if the
    /// model is x-independent).
    pub fn compute(model: &FiberModel, x_axes: &[Axis], count: usize) -> Result<FiberBasis> {
        let dims: Vec<usize> = x_axes.iter().map(|a| a.points).collect();
        let nodes: Vec<Vec<f64>> = x_axes.iter().map(|a| a.nodes()).collect();
        let uniform = model.is_uniform();
        let slices = if uniform { 1 } else { dims.iter().product() };
        let coords = |ix: usize| {
            let mut idx = vec![0usize; dims.len()];
            spectral::unravel(ix, &dims, &mut idx);
            (0..dims.len()).map(|a| nodes[a][idx[a]]).collect::<Vec<f64>>()
        };
        let solved: Vec<(Vec<f64>, Vec<Vec<C64>>)> =
            (0..slices).into_par_iter().map(|ix| model.fiber_eigen(&coords(ix), count)).collect::<Result<_>>()?;
        let fiber_len = model.fiber_len();
        let mut energies = Vec::with_capacity(slices * count);
        let mut vectors = Vec::with_capacity(slices * count * fiber_len);
        for (e, v) in solved {
            if e.len() < count {
                return Err(Error::structural("fiber", format!("model provides {} levels, {count} requested", e.len())));
            }
            energies.extend_from_slice(&e);
            for u in v {
                vectors.extend_from_slice(&u);
            }
        }
        Ok(FiberBasis {
            x_axes: x_axes.to_vec(),
            count,
            fiber_len,
            weight: model.fiber_weight(),
            energies,
            vectors,
            uniform,
            aligned: uniform,
        })
    }

    /// Uniform basis of the pair's motion-dressed fiber states at nuclear
    /// momentum `xi` (see [`PairModel::dressed_eigensolve`]).
    pub fn dressed(model: &PairModel, x_axes: &[Axis], xi: &[f64], count: usize) -> Result<FiberBasis> {
        if !model.is_uniform() {
            return Err(Error::config("dressed fiber states need x-independent external potentials"));
        }
        let (e, v) = model.dressed_eigensolve(&vec![0.0; model.d], xi, count)?;
        Ok(FiberBasis {
            x_axes: x_axes.to_vec(),
            count,
            fiber_len: model.y_point_count(),
            weight: model.y_weight(),
            energies: e[..count].to_vec(),
            vectors: v[..count].concat(),
            uniform: true,
            aligned: true,
        })
    }

    pub fn x_axes(&self) -> &[Axis] {
        &self.x_axes
    }

    pub fn x_dims(&self) -> Vec<usize> {
        self.x_axes.iter().map(|a| a.points).collect()
    }

    pub fn x_point_count(&self) -> usize {
        self.x_dims().iter().product()
    }

    pub fn x_coords(&self, ix: usize) -> Vec<f64> {
        let dims = self.x_dims();
        let mut idx = vec![0usize; dims.len()];
        spectral::unravel(ix, &dims, &mut idx);
        self.x_axes.iter().zip(&idx).map(|(a, &i)| a.min + i as f64 * a.spacing()).collect()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn fiber_len(&self) -> usize {
        self.fiber_len
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    pub fn is_aligned(&self) -> bool {
        self.aligned
    }

    fn slice(&self, ix: usize) -> usize {
        if self.uniform {
            0
        } else {
            ix
        }
    }

    pub fn energies(&self, ix: usize) -> &[f64] {
        let s = self.slice(ix);
        &self.energies[s * self.count..(s + 1) * self.count]
    }

    pub fn vector(&self, ix: usize, level: usize) -> &[C64] {
        let s = self.slice(ix);
        let off = (s * self.count + level) * self.fiber_len;
        &self.vectors[off..off + self.fiber_len]
    }

    fn vector_mut(&mut self, ix: usize, level: usize) -> &mut [C64] {
        let s = self.slice(ix);
        let off = (s * self.count + level) * self.fiber_len;
        &mut self.vectors[off..off + self.fiber_len]
    }

    /// Weighted fiber inner product `<a, b>`.
    pub fn inner(&self, a: &[C64], b: &[C64]) -> C64 {
        a.iter().zip(b).map(|(u, v)| u.conj() * v).sum::<C64>() * self.weight
    }

    /// Coefficients `<u_i(x), v>` for the first `k` levels.
    pub fn coefficients(&self, ix: usize, k: usize, v: &[C64]) -> Vec<C64> {
        (0..k).map(|i| self.inner(self.vector(ix, i), v)).collect()
    }

    /// `sum_i u_i <u_i, v>` over the first `k` levels.
    pub fn project(&self, ix: usize, k: usize, v: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; self.fiber_len];
        for (i, c) in self.coefficients(ix, k, v).into_iter().enumerate() {
            out.iter_mut().zip(self.vector(ix, i)).for_each(|(o, u)| *o += c * u);
        }
        out
    }

    /// Largest `|<u_i, u_j> - delta_ij|` over the grid.
    pub fn orthonormality_defect(&self) -> f64 {
        let slices = if self.uniform { 1 } else { self.x_point_count() };
        let mut worst: f64 = 0.0;
        for ix in 0..slices {
            for i in 0..self.count {
                for j in 0..self.count {
                    let want = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((self.inner(self.vector(ix, i), self.vector(ix, j)) - want).norm());
                }
            }
        }
        worst
    }

    /// Parallel-transport phase alignment: sweep along the first axis, then
    /// along the second from every point of the first sweep, rotating each
    /// vector so its overlap with the previous neighbour is real positive.
    pub fn phase_align(&self) -> Result<FiberBasis> {
        let mut out = self.clone();
        out.aligned = true;
        if self.uniform {
            return Ok(out);
        }
        let dims = self.x_dims();
        let st = spectral::strides(&dims);
        let mut path: Vec<(usize, usize)> = Vec::new();
        for i0 in 1..dims[0] {
            path.push(((i0 - 1) * st[0], i0 * st[0]));
        }
        if dims.len() == 2 {
            for i0 in 0..dims[0] {
                for i1 in 1..dims[1] {
                    path.push((i0 * st[0] + (i1 - 1), i0 * st[0] + i1));
                }
            }
        }
        for (prev, cur) in path {
            for l in 0..self.count {
                let o = out.inner(out.vector(prev, l), out.vector(cur, l));
                if o.norm() < 0.5 {
                    return Err(Error::precondition(format!(
                        "level {l}: overlap {:.3} between neighbours at x = {:?} and {:?}; grid too coarse or levels nearly degenerate",
                        o.norm(),
                        self.x_coords(prev),
                        self.x_coords(cur)
                    )));
                }
                let ph = o.conj() / o.norm();
                out.vector_mut(cur, l).iter_mut().for_each(|v| *v *= ph);
            }
        }
        Ok(out)
    }

    /// Largest difference quotient `||u_i(x + dx) - u_i(x)|| / dx` over grid neighbours.
    pub fn smoothness_constant(&self) -> f64 {
        if self.uniform {
            return 0.0;
        }
        let dims = self.x_dims();
        let st = spectral::strides(&dims);
        let mut idx = vec![0usize; dims.len()];
        let mut worst: f64 = 0.0;
        for ix in 0..self.x_point_count() {
            spectral::unravel(ix, &dims, &mut idx);
            for a in 0..dims.len() {
                if idx[a] + 1 == dims[a] {
                    continue;
                }
                let nb = ix + st[a];
                let dx = self.x_axes[a].spacing();
                for l in 0..self.count {
                    let diff: Vec<C64> = self.vector(nb, l).iter().zip(self.vector(ix, l)).map(|(u, v)| u - v).collect();
                    worst = worst.max(self.inner(&diff, &diff).re.sqrt() / dx);
                }
            }
        }
        worst
    }
}

/// Spectral gap between the lowest `group` levels and the rest, with the
/// suggested contour: centre at the middle of the group, radius half its width
/// plus a quarter of the gap.
#[derive(Clone, Debug)]
pub struct GapReport {
    pub group: usize,
    pub min_gap: f64,
    pub min_gap_at: Vec<f64>,
    pub center: Vec<f64>,
    pub radius: Vec<f64>,
    /// Smallest distance between the contour and any level.
    pub clearance: f64,
}

impl GapReport {
    /// `levels[ix]` are the ascending levels at the point `points[ix]`; at least
    /// `group + 1` of them are needed.
    pub fn from_levels(points: &[Vec<f64>], levels: &[Vec<f64>], group: usize, threshold: f64) -> Result<GapReport> {
        if group == 0 {
            return Err(Error::config("the selected level group must contain at least one level"));
        }
        let mut report = GapReport {
            group,
            min_gap: f64::INFINITY,
            min_gap_at: Vec::new(),
            center: Vec::with_capacity(levels.len()),
            radius: Vec::with_capacity(levels.len()),
            clearance: f64::INFINITY,
        };
        for (x, e) in points.iter().zip(levels) {
            if e.len() <= group {
                return Err(Error::structural("fiber", format!("{} levels known, gap needs {}", e.len(), group + 1)));
            }
            let gap = e[group] - e[group - 1];
            let half = 0.5 * (e[group - 1] - e[0]);
            let c = 0.5 * (e[group - 1] + e[0]);
            let r = half + 0.25 * gap;
            if gap < report.min_gap {
                report.min_gap = gap;
                report.min_gap_at = x.clone();
            }
            report.center.push(c);
            report.radius.push(r);
            report.clearance = report.clearance.min((r - half).min(e[group] - c - r));
        }
        if !(report.min_gap >= threshold) {
            return Err(Error::precondition(format!(
                "spectral gap {:.3e} below threshold {threshold:e} at x = {:?} (levels {} and {} cross or touch)",
                report.min_gap,
                report.min_gap_at,
                group,
                group + 1
            )));
        }
        Ok(report)
    }
}

/// Gap record of a computed basis; `basis.count()` must exceed `group`.
pub fn gap_report(basis: &FiberBasis, group: usize, threshold: f64) -> Result<GapReport> {
    let n = basis.x_point_count();
    let points: Vec<Vec<f64>> = (0..n).map(|ix| basis.x_coords(ix)).collect();
    let levels: Vec<Vec<f64>> = (0..n).map(|ix| basis.energies(ix).to_vec()).collect();
    GapReport::from_levels(&points, &levels, group, threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{MatrixKind, MatrixModel};
    use std::f64::consts::PI;

    fn two_level(mixing: f64) -> FiberModel {
        FiberModel::Matrix(MatrixModel::new(1, MatrixKind::TwoLevel { gap: 2.0, mixing, level: 0.0, wavenumber: 0.5 }).unwrap())
    }

    #[test]
    fn diagonal_gap_and_radius() {
        let axes = vec![Axis::periodic(-2.0 * PI, 2.0 * PI, 16).unwrap()];
        let b = FiberBasis::compute(&two_level(0.0), &axes, 2).unwrap();
        let g = gap_report(&b, 1, 1e-3).unwrap();
        assert!((g.min_gap - 2.0).abs() < 1e-14);
        assert!((g.radius[0] - 0.5).abs() < 1e-14);
        assert!(g.clearance >= 0.5 - 1e-14);
    }

    #[test]
    fn crossing_rejected_with_location() {
        let m = FiberModel::Matrix(MatrixModel::new(1, MatrixKind::Crossing { gap: 1.0, wavenumber: 0.5 }).unwrap());
        let axes = vec![Axis::periodic(-2.0 * PI, 2.0 * PI, 16).unwrap()];
        let b = FiberBasis::compute(&m, &axes, 2).unwrap();
        match gap_report(&b, 1, 1e-3) {
            Err(Error::Precondition(msg)) => assert!(msg.contains("x = [")),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn alignment_is_idempotent_and_smooth() {
        let axes = vec![Axis::periodic(-2.0 * PI, 2.0 * PI, 64).unwrap()];
        let b = FiberBasis::compute(&two_level(0.7), &axes, 2).unwrap();
        let a1 = b.phase_align().unwrap();
        let a2 = a1.phase_align().unwrap();
        for ix in 0..64 {
            for l in 0..2 {
                for (u, v) in a1.vector(ix, l).iter().zip(a2.vector(ix, l)) {
                    assert!((u - v).norm() < 1e-14);
                }
            }
        }
        assert!(a1.orthonormality_defect() < 1e-14);
        assert!(a1.smoothness_constant() < 1.0);
    }
}
