use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, inverse_with_condition, ZERO};
use crate::models::GapReport;
use crate::symbols::{moyal_product, ContourChart, HSeries, MatrixSymbol, PhaseGrid};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::sync::Arc;

/// Default number of trapezoidal nodes on each loop.
pub const DEFAULT_QUADRATURE: usize = 32;
/// Largest acceptable condition number of `p_0 - z` on the loop.
pub const MAX_CONDITION: f64 = 1e12;

/// Loops `gamma(x)` around the selected level group: `c(x) + rho(x) e^{i theta}`.
///
/// The chart samples `2M` angles so that the quadrature can be checked
/// against its `M`-node subsample.
#[derive(Clone, Debug)]
pub struct Contour {
    pub group: usize,
    pub quadrature: usize,
    pub gap: GapReport,
    chart: Arc<ContourChart>,
}

impl Contour {
    /// Build loops from the fiber part `H(x) = p_0(x, xi) - |xi|^2` of a symbol.
    pub fn from_symbol(p0: &MatrixSymbol, group: usize, quadrature: usize, threshold: f64) -> Result<Contour> {
        let levels = fiber_levels(p0)?;
        let grid = p0.grid();
        let points: Vec<Vec<f64>> = (0..grid.x_point_count()).map(|ix| grid.x_coords(ix)).collect();
        let gap = GapReport::from_levels(&points, &levels, group, threshold)?;
        Contour::from_gap(grid, gap, quadrature)
    }

    pub fn from_gap(grid: &PhaseGrid, gap: GapReport, quadrature: usize) -> Result<Contour> {
        let chart = ContourChart::new(grid, 2 * quadrature, gap.center.clone(), gap.radius.clone())?;
        Ok(Contour { group: gap.group, quadrature, gap, chart: Arc::new(chart) })
    }

    /// Same centres, radii multiplied by `factor`.
    pub fn scaled(&self, grid: &PhaseGrid, factor: f64) -> Result<Contour> {
        let mut gap = self.gap.clone();
        gap.radius.iter_mut().for_each(|r| *r *= factor);
        Contour::from_gap(grid, gap, self.quadrature)
    }

    pub fn chart(&self) -> &Arc<ContourChart> {
        &self.chart
    }

    pub fn clearance(&self) -> f64 {
        self.gap.clearance
    }
}

/// Ascending eigenvalues of `p_0 - |xi|^2` per x-point, after checking that
/// this matrix does not depend on xi.
pub fn fiber_levels(p0: &MatrixSymbol) -> Result<Vec<Vec<f64>>> {
    let (h, _) = fiber_matrices(p0)?;
    let n = p0.rows();
    Ok(h.chunks(n * n).map(|b| hermitian_eigen(b, n).0).collect())
}

/// `H(x) = p_0(x, xi) - |xi|^2 I` per x-point.
pub fn fiber_matrices(p0: &MatrixSymbol) -> Result<(Vec<C64>, usize)> {
    if p0.chart().is_some() || p0.rows() != p0.cols() {
        return Err(Error::structural("fiber", "p_0 must be a square chart-free symbol"));
    }
    let grid = p0.grid();
    let n = p0.rows();
    let nxi = grid.xi_point_count();
    let mut out = vec![ZERO; grid.x_point_count() * n * n];
    let scale = p0.max_abs().max(1.0);
    for ix in 0..grid.x_point_count() {
        for k in 0..nxi {
            let p = ix * nxi + k;
            let (_, xi) = grid.coords(p);
            let k2: f64 = xi.iter().map(|v| v * v).sum();
            let mut b = p0.block(p).to_vec();
            for i in 0..n {
                b[i * n + i] -= k2;
            }
            let dst = &mut out[ix * n * n..(ix + 1) * n * n];
            if k == 0 {
                dst.copy_from_slice(&b);
            } else if b.iter().zip(dst.iter()).any(|(u, v)| (u - v).norm() > 1e-9 * scale) {
                return Err(Error::precondition(format!(
                    "p_0 - |xi|^2 depends on xi at x = {:?}; the loop construction needs p_0 = |xi|^2 + H(x)",
                    grid.x_coords(ix)
                )));
            }
        }
    }
    Ok((out, nxi))
}

/// `z = |xi|^2 + w` at phase point `p` and node `j`.
fn spectral_parameter(grid: &PhaseGrid, chart: &ContourChart, p: usize, j: usize) -> C64 {
    let (_, xi) = grid.coords(p);
    let k2: f64 = xi.iter().map(|v| v * v).sum();
    chart.w(grid.x_index(p), j) + k2
}

/// Pointwise `(p_0 - z)^{-1}` on every loop node.
pub fn resolvent_q0(p0: &MatrixSymbol, contour: &Contour) -> Result<MatrixSymbol> {
    let chart = contour.chart();
    let grid = p0.grid().clone();
    let n = p0.rows();
    let m = chart.nodes();
    let bs = n * n;
    let mut out = MatrixSymbol::zeros(&grid, Some(chart), n, n);
    let bad = out
        .data_mut()
        .par_chunks_mut(m * bs)
        .enumerate()
        .map(|(p, chunk)| {
            let base = p0.block(p);
            for j in 0..m {
                let z = spectral_parameter(&grid, chart, p, j);
                let mut a = base.to_vec();
                for i in 0..n {
                    a[i * n + i] -= z;
                }
                match inverse_with_condition(&a, n) {
                    Some((inv, cond)) if cond <= MAX_CONDITION => {
                        chunk[j * bs..(j + 1) * bs].copy_from_slice(&inv);
                        let res = residual(&a, &inv, n);
                        if res > 1e-10 {
                            return Some((p, j, cond, res));
                        }
                    }
                    Some((_, cond)) => return Some((p, j, cond, f64::NAN)),
                    None => return Some((p, j, f64::INFINITY, f64::NAN)),
                }
            }
            None
        })
        .find_first(|r| r.is_some())
        .flatten();
    if let Some((p, j, cond, res)) = bad {
        let (x, xi) = grid.coords(p);
        return Err(Error::precondition(format!(
            "loop too close to the spectrum at x = {x:?}, xi = {xi:?}, node {j}: condition {cond:.3e}, residual {res:.3e}"
        )));
    }
    Ok(out)
}

fn residual(a: &[C64], inv: &[C64], n: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut s = ZERO;
            for k in 0..n {
                s += a[i * n + k] * inv[k * n + j];
            }
            if i == j {
                s -= 1.0;
            }
            worst = worst.max(s.norm());
        }
    }
    worst
}

/// `z * a` pointwise on a chart symbol.
fn times_z(a: &MatrixSymbol) -> MatrixSymbol {
    let chart = a.chart().expect("chart symbol").clone();
    let grid = a.grid().clone();
    let m = chart.nodes();
    let mut out = a.clone();
    let bs = a.rows() * a.cols();
    out.data_mut().par_chunks_mut(m * bs).enumerate().for_each(|(p, chunk)| {
        for j in 0..m {
            let z = spectral_parameter(&grid, &chart, p, j);
            chunk[j * bs..(j + 1) * bs].iter_mut().for_each(|v| *v *= z);
        }
    });
    out
}

/// `r = 1 - (p - z) # q_0` through `h^order`; the order-zero coefficient is
/// checked to vanish and then set to exact zero.
pub fn remainder_r(p: &HSeries, q0: &MatrixSymbol, order: usize) -> Result<HSeries> {
    let q = HSeries::from_leading(q0.clone(), order);
    let pq = moyal_product(&p.pad(order), &q, order)?;
    let mut coeffs = pq.into_coeffs();
    let lead = coeffs[0].sub(&times_z(q0))?;
    let n = q0.rows();
    let one = MatrixSymbol::identity(q0.grid(), n);
    let r0 = one.sub(&lead)?;
    let r0_size = r0.max_abs();
    if r0_size > 1e-10 {
        return Err(Error::precondition(format!("order-zero remainder {r0_size:.3e} above 1e-10")));
    }
    coeffs[0] = MatrixSymbol::zeros(q0.grid(), q0.chart(), n, n);
    for c in coeffs.iter_mut().skip(1) {
        *c = c.scale(C64::new(-1.0, 0.0));
    }
    HSeries::new(coeffs)
}

/// `q = q_0 + q_0 # sum_{j>=1} r^{#j}` through `h^order`.
pub fn resolvent_series(q0: &MatrixSymbol, r: &HSeries, order: usize) -> Result<HSeries> {
    let q0s = HSeries::from_leading(q0.clone(), order);
    let r = r.pad(order).truncate(order);
    let mut sum = r.clone();
    let mut power = r.clone();
    for _ in 2..=order {
        power = moyal_product(&power, &r, order)?;
        sum = sum.add(&power)?;
    }
    let tail = moyal_product(&q0s, &sum, order)?;
    q0s.add(&tail)
}

/// Superadiabatic projection coefficients with their construction record.
#[derive(Clone, Debug)]
pub struct ProjectionSeries {
    pub pi: HSeries,
    pub contour: Contour,
    /// Largest change of any coefficient between `M` and `2M` quadrature nodes.
    pub quadrature_change: f64,
    /// Hermitian defect before symmetrization.
    pub raw_hermitian_defect: f64,
}

/// Largest acceptable quadrature doubling change.
pub const QUADRATURE_TOLERANCE: f64 = 1e-8;

/// `pi_j = (i / 2 pi) \oint q_j dz` by the trapezoidal rule on the loops.
pub fn projection_series(p: &HSeries, contour: &Contour, order: usize) -> Result<ProjectionSeries> {
    let q0 = resolvent_q0(p.coeff(0), contour)?;
    let r = remainder_r(p, &q0, order)?;
    let q = if order == 0 { HSeries::from_leading(q0, 0) } else { resolvent_series(&q0, &r, order)? };
    let mut coeffs = Vec::with_capacity(order + 1);
    let mut change: f64 = 0.0;
    let mut herm: f64 = 0.0;
    for (j, qj) in q.coeffs().iter().enumerate() {
        let fine = qj.contour_integral(1)?;
        let coarse = qj.contour_integral(2)?;
        let diff = fine.sub(&coarse)?.max_abs();
        change = change.max(diff);
        if diff > QUADRATURE_TOLERANCE {
            return Err(Error::precondition(format!(
                "loop quadrature not converged for pi_{j}: doubling nodes changes it by {diff:.3e}; the gap is too small for {} nodes (clearance {:.3e})",
                contour.quadrature,
                contour.clearance()
            )));
        }
        herm = herm.max(fine.hermitian_defect());
        coeffs.push(fine.hermitian_part());
    }
    if herm > 1e-6 {
        return Err(Error::precondition(format!("projection coefficients far from hermitian ({herm:.3e})")));
    }
    Ok(ProjectionSeries { pi: HSeries::new(coeffs)?, contour: contour.clone(), quadrature_change: change, raw_hermitian_defect: herm })
}

/// Pointwise eigenprojector of `H(x)` onto its lowest `group` levels, as a symbol.
pub fn eigen_projector(p0: &MatrixSymbol, group: usize) -> Result<MatrixSymbol> {
    let (h, _) = fiber_matrices(p0)?;
    let n = p0.rows();
    let grid = p0.grid();
    let nxi = grid.xi_point_count();
    let per_x: Vec<Vec<C64>> = h
        .chunks(n * n)
        .map(|b| {
            let (_, v) = hermitian_eigen(b, n);
            let mut proj = vec![ZERO; n * n];
            for l in 0..group {
                for i in 0..n {
                    for j in 0..n {
                        proj[i * n + j] += v[(i, l)] * v[(j, l)].conj();
                    }
                }
            }
            proj
        })
        .collect();
    let mut out = MatrixSymbol::zeros(grid, None, n, n);
    for p in 0..grid.point_count() {
        out.block_mut(p).copy_from_slice(&per_x[p / nxi]);
    }
    Ok(out)
}
