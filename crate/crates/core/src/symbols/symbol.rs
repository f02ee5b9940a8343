use super::grid::{AxisKind, PhaseGrid};
use crate::error::{Error, Result};
use crate::linalg::{self, ONE, ZERO};
use crate::spectral;
use num_complex::Complex64 as C64;
use std::sync::Arc;

/// Highest derivative order [`MatrixSymbol::differentiate`] accepts.
pub const MAX_DERIVATIVE_ORDER: usize = 2 * MAX_TRUNCATION + 2;
/// Highest truncation order of any series product.
pub const MAX_TRUNCATION: usize = 6;

/// A phase-space variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    X(usize),
    Xi(usize),
}

/// Sampling of a spectral parameter `z` along the loops `z - |xi|^2 = c(x) + rho(x) e^{i theta}`.
///
/// Symbols carrying a chart are functions of `(x, xi, w)` with `w = z - |xi|^2`
/// sampled at `nodes` equally spaced angles. Derivatives are taken at fixed `z`
/// by the chain rule through `w`.
#[derive(Clone, Debug)]
pub struct ContourChart {
    nodes: usize,
    d: usize,
    center: Vec<f64>,
    radius: Vec<f64>,
    center_grad: Vec<f64>,
    radius_grad: Vec<f64>,
    phases: Vec<C64>,
    flat: bool,
}

impl ContourChart {
    /// `center` and `radius` are sampled on the x-points of `grid` (flat order).
    pub fn new(grid: &PhaseGrid, nodes: usize, center: Vec<f64>, radius: Vec<f64>) -> Result<ContourChart> {
        let nx = grid.x_point_count();
        if center.len() != nx || radius.len() != nx {
            return Err(Error::structural("contour", "center/radius must be sampled on the x-grid"));
        }
        if nodes < 8 || !nodes.is_power_of_two() {
            return Err(Error::structural("contour", format!("node count {nodes} must be a power of two >= 8")));
        }
        if radius.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::precondition("contour radius must be positive"));
        }
        let d = grid.d();
        let dims = grid.x_dims();
        let grad = |f: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; nx * d];
            for a in 0..d {
                let mut buf: Vec<C64> = f.iter().map(|v| C64::new(*v, 0.0)).collect();
                spectral::periodic_derivative(&mut buf, &dims, a, grid.x_axes()[a].length(), 1);
                for (i, v) in buf.iter().enumerate() {
                    out[i * d + a] = v.re;
                }
            }
            out
        };
        let constant = |f: &[f64]| f.iter().all(|v| *v == f[0]);
        let flat = constant(&center) && constant(&radius);
        let (center_grad, radius_grad) =
            if flat { (vec![0.0; nx * d], vec![0.0; nx * d]) } else { (grad(&center), grad(&radius)) };
        let phases = (0..nodes)
            .map(|j| C64::from_polar(1.0, PhaseGrid::theta(j, nodes)))
            .collect();
        Ok(ContourChart { nodes, d, center, radius, center_grad, radius_grad, phases, flat })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// Centre and radius do not depend on x.
    pub fn is_flat(&self) -> bool {
        self.flat
    }

    pub fn center(&self, ix: usize) -> f64 {
        self.center[ix]
    }

    pub fn radius(&self, ix: usize) -> f64 {
        self.radius[ix]
    }

    /// `e^{i theta_j}`.
    pub fn phase(&self, j: usize) -> C64 {
        self.phases[j]
    }

    /// `w = c(x) + rho(x) e^{i theta_j}` at x-point `ix`.
    pub fn w(&self, ix: usize, j: usize) -> C64 {
        self.center[ix] + self.phases[j] * self.radius[ix]
    }

    /// `dw/dx_a` at fixed angle.
    pub fn dw_dx(&self, ix: usize, j: usize, a: usize) -> C64 {
        self.center_grad[ix * self.d + a] + self.phases[j] * self.radius_grad[ix * self.d + a]
    }
}

/// Complex `rows x cols` matrix sampled at every phase-space point (and every
/// contour node when a chart is attached).
///
/// Layout is row-major over `(x_1..x_d, xi_1..xi_d, theta, row, col)` where the
/// theta axis has length 1 for chart-free symbols.
#[derive(Clone, Debug)]
pub struct MatrixSymbol {
    grid: Arc<PhaseGrid>,
    chart: Option<Arc<ContourChart>>,
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl MatrixSymbol {
    pub fn zeros(grid: &Arc<PhaseGrid>, chart: Option<&Arc<ContourChart>>, rows: usize, cols: usize) -> MatrixSymbol {
        let m = chart.map_or(1, |c| c.nodes());
        MatrixSymbol {
            grid: grid.clone(),
            chart: chart.cloned(),
            rows,
            cols,
            data: vec![ZERO; grid.point_count() * m * rows * cols],
        }
    }

    /// `c * I_n` at every point.
    pub fn scalar_identity(grid: &Arc<PhaseGrid>, n: usize, c: C64) -> MatrixSymbol {
        let mut s = MatrixSymbol::zeros(grid, None, n, n);
        for b in s.data.chunks_mut(n * n) {
            for i in 0..n {
                b[i * n + i] = c;
            }
        }
        s
    }

    pub fn identity(grid: &Arc<PhaseGrid>, n: usize) -> MatrixSymbol {
        MatrixSymbol::scalar_identity(grid, n, ONE)
    }

    /// Sample `f(x, xi, out)` which fills a row-major `rows x cols` block.
    pub fn from_fn<F>(grid: &Arc<PhaseGrid>, rows: usize, cols: usize, f: F) -> MatrixSymbol
    where
        F: Fn(&[f64], &[f64], &mut [C64]),
    {
        let mut s = MatrixSymbol::zeros(grid, None, rows, cols);
        let bs = rows * cols;
        for p in 0..grid.point_count() {
            let (x, xi) = grid.coords(p);
            f(&x, &xi, &mut s.data[p * bs..(p + 1) * bs]);
        }
        s
    }

    /// Sample a scalar function as a `1 x 1` symbol.
    pub fn scalar_fn<F>(grid: &Arc<PhaseGrid>, f: F) -> MatrixSymbol
    where
        F: Fn(&[f64], &[f64]) -> C64,
    {
        MatrixSymbol::from_fn(grid, 1, 1, |x, xi, out| out[0] = f(x, xi))
    }

    /// Build from raw data in the documented layout.
    pub fn from_data(
        grid: &Arc<PhaseGrid>,
        chart: Option<&Arc<ContourChart>>,
        rows: usize,
        cols: usize,
        data: Vec<C64>,
    ) -> Result<MatrixSymbol> {
        let m = chart.map_or(1, |c| c.nodes());
        if data.len() != grid.point_count() * m * rows * cols {
            return Err(Error::structural("data", "length does not match grid and block shape"));
        }
        Ok(MatrixSymbol { grid: grid.clone(), chart: chart.cloned(), rows, cols, data })
    }

    pub fn grid(&self) -> &Arc<PhaseGrid> {
        &self.grid
    }

    pub fn chart(&self) -> Option<&Arc<ContourChart>> {
        self.chart.as_ref()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    /// Number of contour nodes (1 without a chart).
    pub fn theta_len(&self) -> usize {
        self.chart.as_ref().map_or(1, |c| c.nodes())
    }

    /// Number of stored blocks.
    pub fn block_count(&self) -> usize {
        self.grid.point_count() * self.theta_len()
    }

    pub fn block(&self, b: usize) -> &[C64] {
        let bs = self.rows * self.cols;
        &self.data[b * bs..(b + 1) * bs]
    }

    pub fn block_mut(&mut self, b: usize) -> &mut [C64] {
        let bs = self.rows * self.cols;
        &mut self.data[b * bs..(b + 1) * bs]
    }

    /// Block at phase point `p` and contour node `j`.
    pub fn at(&self, p: usize, j: usize) -> &[C64] {
        self.block(p * self.theta_len() + j)
    }

    fn array_dims(&self) -> Vec<usize> {
        let mut dims = self.grid.dims();
        dims.push(self.theta_len());
        dims.push(self.rows * self.cols);
        dims
    }

    /// Check grid, chart and shape agreement for elementwise combination.
    pub fn check_same(&self, other: &MatrixSymbol) -> Result<()> {
        check_grids(self, other)?;
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::structural(
                "fiber",
                format!("{}x{} vs {}x{}", self.rows, self.cols, other.rows, other.cols),
            ));
        }
        Ok(())
    }

    /// Attach a chart to a chart-free symbol by repeating it on every node.
    pub fn broadcast_to(&self, chart: &Arc<ContourChart>) -> MatrixSymbol {
        if self.chart.is_some() {
            return self.clone();
        }
        let m = chart.nodes();
        let bs = self.rows * self.cols;
        let mut data = Vec::with_capacity(self.data.len() * m);
        for b in self.data.chunks(bs) {
            for _ in 0..m {
                data.extend_from_slice(b);
            }
        }
        MatrixSymbol { grid: self.grid.clone(), chart: Some(chart.clone()), rows: self.rows, cols: self.cols, data }
    }

    pub fn add(&self, other: &MatrixSymbol) -> Result<MatrixSymbol> {
        self.axpy(ONE, other)
    }

    pub fn sub(&self, other: &MatrixSymbol) -> Result<MatrixSymbol> {
        self.axpy(C64::new(-1.0, 0.0), other)
    }

    /// `self + s * other`, broadcasting over contour nodes.
    pub fn axpy(&self, s: C64, other: &MatrixSymbol) -> Result<MatrixSymbol> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::structural(
                "fiber",
                format!("{}x{} vs {}x{}", self.rows, self.cols, other.rows, other.cols),
            ));
        }
        check_grids(self, other)?;
        let (a, b) = match (&self.chart, &other.chart) {
            (None, Some(c)) => (self.broadcast_to(c), other.clone()),
            (Some(c), None) => (self.clone(), other.broadcast_to(c)),
            _ => (self.clone(), other.clone()),
        };
        let mut out = a;
        for (o, v) in out.data.iter_mut().zip(&b.data) {
            *o += s * *v;
        }
        Ok(out)
    }

    pub fn scale(&self, s: C64) -> MatrixSymbol {
        let mut out = self.clone();
        for v in out.data.iter_mut() {
            *v *= s;
        }
        out
    }

    /// Pointwise matrix product `self * other`.
    pub fn matmul(&self, other: &MatrixSymbol) -> Result<MatrixSymbol> {
        let mut out = zero_product(self, other)?;
        out.add_matmul(self, other, ONE)?;
        Ok(out)
    }

    /// `self += s * a * b` pointwise, broadcasting chart-free operands over contour nodes.
    pub fn add_matmul(&mut self, a: &MatrixSymbol, b: &MatrixSymbol, s: C64) -> Result<()> {
        check_grids(a, b)?;
        check_grids(self, a)?;
        if a.cols != b.rows || self.rows != a.rows || self.cols != b.cols {
            return Err(Error::structural(
                "fiber",
                format!("cannot multiply {}x{} by {}x{} into {}x{}", a.rows, a.cols, b.rows, b.cols, self.rows, self.cols),
            ));
        }
        let m = self.theta_len();
        if a.theta_len() > m || b.theta_len() > m {
            return Err(Error::structural("contour", "accumulator lacks the operands' contour chart"));
        }
        let (ma, mb) = (a.theta_len(), b.theta_len());
        let (r, k, c) = (a.rows, a.cols, b.cols);
        let (sa, sb, so) = (r * k, k * c, r * c);
        for p in 0..self.grid.point_count() {
            for j in 0..m {
                let ia = p * ma + if ma == 1 { 0 } else { j };
                let ib = p * mb + if mb == 1 { 0 } else { j };
                let io = p * m + j;
                linalg::gemm_acc(
                    &mut self.data[io * so..(io + 1) * so],
                    &a.data[ia * sa..(ia + 1) * sa],
                    &b.data[ib * sb..(ib + 1) * sb],
                    r,
                    k,
                    c,
                    s,
                );
            }
        }
        Ok(())
    }

    /// Pointwise conjugate transpose.
    pub fn adjoint(&self) -> MatrixSymbol {
        let mut data = Vec::with_capacity(self.data.len());
        for b in self.data.chunks(self.rows * self.cols) {
            data.extend(linalg::adjoint(b, self.rows, self.cols));
        }
        MatrixSymbol { grid: self.grid.clone(), chart: self.chart.clone(), rows: self.cols, cols: self.rows, data }
    }

    /// Largest pointwise spectral norm.
    pub fn sup_norm(&self) -> f64 {
        self.data
            .chunks(self.rows * self.cols)
            .map(|b| linalg::spectral_norm(b, self.rows, self.cols))
            .fold(0.0, f64::max)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest pointwise `|a - a^dagger|` entry.
    pub fn hermitian_defect(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        self.data
            .chunks(self.rows * self.cols)
            .map(|b| linalg::hermitian_defect(b, self.rows))
            .fold(0.0, f64::max)
    }

    /// `(a + a^dagger)/2`.
    pub fn hermitian_part(&self) -> MatrixSymbol {
        let adj = self.adjoint();
        let mut out = self.clone();
        for (o, v) in out.data.iter_mut().zip(&adj.data) {
            *o = (*o + *v) * 0.5;
        }
        out
    }

    /// True if every entry is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == ZERO)
    }

    /// True if every x-derivative vanishes exactly: the samples repeat along
    /// every x-axis and the chart (if any) is flat.
    pub fn is_x_constant(&self) -> bool {
        if self.chart.as_ref().is_some_and(|c| !c.is_flat()) {
            return false;
        }
        let dims = self.array_dims();
        (0..self.grid.d()).all(|a| constant_along(&self.data, &dims, a))
    }

    /// True if every entry is finite.
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Partial derivative at fixed contour angle (plain coordinate derivative).
    fn raw_derivative(&self, axis: usize, order: usize) -> MatrixSymbol {
        let mut out = self.clone();
        if order == 0 {
            return out;
        }
        let dims = self.array_dims();
        if constant_along(&self.data, &dims, axis) {
            out.data.iter_mut().for_each(|v| *v = ZERO);
            return out;
        }
        let ax = self.grid.axis(axis);
        match ax.kind {
            AxisKind::Periodic => spectral::periodic_derivative(&mut out.data, &dims, axis, ax.length(), order),
            AxisKind::Chebyshev => {
                let mat = self.grid.chebyshev_matrix(axis).expect("chebyshev axis has a matrix");
                for _ in 0..order {
                    spectral::apply_matrix_axis(&mut out.data, &dims, axis, mat);
                }
            }
        }
        out
    }

    /// `d/dw` on the contour: `(d/dtheta) / (i rho e^{i theta})`.
    fn w_derivative(&self) -> MatrixSymbol {
        let chart = self.chart.as_ref().expect("w-derivative needs a chart");
        let mut out = self.clone();
        let dims = self.array_dims();
        let ta = self.grid.dims().len();
        if constant_along(&self.data, &dims, ta) {
            out.data.iter_mut().for_each(|v| *v = ZERO);
            return out;
        }
        spectral::periodic_derivative(&mut out.data, &dims, ta, 2.0 * std::f64::consts::PI, 1);
        let m = chart.nodes();
        let bs = self.rows * self.cols;
        for p in 0..self.grid.point_count() {
            let ix = self.grid.x_index(p);
            let rho = chart.radius(ix);
            for j in 0..m {
                let f = (C64::new(0.0, 1.0) * chart.phase(j) * rho).inv();
                let b = (p * m + j) * bs;
                for v in out.data[b..b + bs].iter_mut() {
                    *v *= f;
                }
            }
        }
        out
    }

    fn derivative_once(&self, var: Var) -> MatrixSymbol {
        let d = self.grid.d();
        let axis = match var {
            Var::X(a) => a,
            Var::Xi(a) => d + a,
        };
        let mut out = self.raw_derivative(axis, 1);
        let skip = matches!(var, Var::X(_)) && self.chart.as_ref().is_some_and(|c| c.is_flat());
        if let (Some(chart), false) = (&self.chart, skip) {
            let dw = self.w_derivative();
            let m = chart.nodes();
            let bs = self.rows * self.cols;
            for p in 0..self.grid.point_count() {
                let ix = self.grid.x_index(p);
                let xi_p = match var {
                    Var::Xi(a) => self.grid.coords(p).1[a],
                    Var::X(_) => 0.0,
                };
                for j in 0..m {
                    let f = match var {
                        Var::Xi(_) => C64::new(-2.0 * xi_p, 0.0),
                        Var::X(a) => -chart.dw_dx(ix, j, a),
                    };
                    let b = (p * m + j) * bs;
                    for (o, v) in out.data[b..b + bs].iter_mut().zip(&dw.data[b..b + bs]) {
                        *o += f * *v;
                    }
                }
            }
        }
        out
    }

    /// Derivative of the given order with respect to a phase-space variable.
    ///
    /// Periodic axes use Fourier differentiation, Chebyshev axes the
    /// collocation matrix. With a contour chart attached the derivative is
    /// taken at fixed spectral parameter `z`.
    pub fn differentiate(&self, var: Var, order: usize) -> Result<MatrixSymbol> {
        if order > MAX_DERIVATIVE_ORDER {
            return Err(Error::structural(
                "derivative order",
                format!("{order} exceeds the supported maximum {MAX_DERIVATIVE_ORDER}"),
            ));
        }
        let d = self.grid.d();
        match var {
            Var::X(a) | Var::Xi(a) if a >= d => {
                return Err(Error::structural("axis", format!("{var:?} outside dimension {d}")))
            }
            _ => {}
        }
        let mut out = self.clone();
        if self.chart.is_none() {
            let axis = match var {
                Var::X(a) => a,
                Var::Xi(a) => d + a,
            };
            return Ok(out.raw_derivative(axis, order));
        }
        for _ in 0..order {
            out = out.derivative_once(var);
        }
        Ok(out)
    }

    /// Mixed derivative `d_x^alpha d_xi^beta`.
    pub fn multi_derivative(&self, alpha: &[usize], beta: &[usize]) -> Result<MatrixSymbol> {
        let mut out = self.clone();
        for (a, &k) in alpha.iter().enumerate() {
            if k > 0 {
                out = out.differentiate(Var::X(a), k)?;
            }
        }
        for (a, &k) in beta.iter().enumerate() {
            if k > 0 {
                out = out.differentiate(Var::Xi(a), k)?;
            }
        }
        Ok(out)
    }

    /// Trapezoidal loop integral `(i/2 pi) \oint f dz` over the chart's contour,
    /// using every `stride`-th node. Returns a chart-free symbol.
    pub fn contour_integral(&self, stride: usize) -> Result<MatrixSymbol> {
        let chart = self
            .chart
            .as_ref()
            .ok_or_else(|| Error::structural("contour", "symbol carries no contour chart"))?;
        let m = chart.nodes();
        if stride == 0 || m % stride != 0 {
            return Err(Error::structural("contour", format!("stride {stride} does not divide {m}")));
        }
        let used = m / stride;
        let bs = self.rows * self.cols;
        let mut out = MatrixSymbol::zeros(&self.grid, None, self.rows, self.cols);
        for p in 0..self.grid.point_count() {
            let rho = chart.radius(self.grid.x_index(p));
            // (i/2pi) * i rho e^{i theta} * (2pi/used)
            let base = -rho / used as f64;
            let o = &mut out.data[p * bs..(p + 1) * bs];
            for j in (0..m).step_by(stride) {
                let f = chart.phase(j) * base;
                let b = (p * m + j) * bs;
                for (ov, v) in o.iter_mut().zip(&self.data[b..b + bs]) {
                    *ov += f * *v;
                }
            }
        }
        Ok(out)
    }

    /// Evaluate a single entry at an arbitrary phase point by trigonometric
    /// interpolation in x and barycentric interpolation in xi (chart-free only).
    pub fn interpolate(&self, x: &[f64], xi: &[f64]) -> Result<Vec<C64>> {
        if self.chart.is_some() {
            return Err(Error::structural("contour", "interpolation needs a chart-free symbol"));
        }
        let d = self.grid.d();
        let mut weights: Vec<Vec<C64>> = Vec::with_capacity(2 * d);
        for a in 0..2 * d {
            let ax = self.grid.axis(a);
            let t = if a < d { x[a] } else { xi[a - d] };
            weights.push(match ax.kind {
                AxisKind::Periodic => trig_weights(ax.min, ax.length(), ax.points, t),
                AxisKind::Chebyshev => spectral::barycentric_coefficients(
                    self.grid.nodes(a),
                    self.grid.chebyshev_weights(a).expect("chebyshev weights"),
                    t,
                )
                .into_iter()
                .map(|c| C64::new(c, 0.0))
                .collect(),
            });
        }
        let dims = self.grid.dims();
        let bs = self.rows * self.cols;
        let mut out = vec![ZERO; bs];
        let mut idx = vec![0; dims.len()];
        for p in 0..self.grid.point_count() {
            spectral::unravel(p, &dims, &mut idx);
            let mut w = ONE;
            for (a, &i) in idx.iter().enumerate() {
                w *= weights[a][i];
            }
            if w == ZERO {
                continue;
            }
            for (o, v) in out.iter_mut().zip(self.block(p)) {
                *o += w * *v;
            }
        }
        Ok(out)
    }
}

/// Weights `c_j` with `f(t) = sum_j c_j f(x_j)` for the band-limited
/// (trigonometric) interpolant on `n` uniform samples of period `len`.
pub fn trig_weights(min: f64, len: f64, n: usize, t: f64) -> Vec<C64> {
    let k = spectral::wavenumbers(n, len);
    let dx = len / n as f64;
    (0..n)
        .map(|j| {
            let s = t - (min + j as f64 * dx);
            let mut acc = 0.0;
            for kv in &k {
                acc += (kv * s).cos();
            }
            C64::new(acc / n as f64, 0.0)
        })
        .collect()
}

/// Exact constancy of a row-major array along one axis.
fn constant_along(data: &[C64], dims: &[usize], axis: usize) -> bool {
    let n = dims[axis];
    if n == 1 {
        return true;
    }
    let stride: usize = dims[axis + 1..].iter().product();
    let block = n * stride;
    data.chunks(block).all(|b| {
        let first = &b[..stride];
        (1..n).all(|j| &b[j * stride..(j + 1) * stride] == first)
    })
}

fn check_grids(a: &MatrixSymbol, b: &MatrixSymbol) -> Result<()> {
    if !Arc::ptr_eq(&a.grid, &b.grid) && *a.grid != *b.grid {
        for ax in 0..a.grid.dims().len().min(b.grid.dims().len()) {
            if a.grid.axis(ax) != b.grid.axis(ax) {
                return Err(Error::structural(
                    format!("grid axis {ax}"),
                    format!("{:?} vs {:?}", a.grid.axis(ax), b.grid.axis(ax)),
                ));
            }
        }
        return Err(Error::structural("grid dimension", format!("{} vs {}", a.grid.d(), b.grid.d())));
    }
    if let (Some(ca), Some(cb)) = (&a.chart, &b.chart) {
        if !Arc::ptr_eq(ca, cb) {
            return Err(Error::structural("contour", "operands use different contour charts"));
        }
    }
    Ok(())
}

/// Zero accumulator for `a * b`, carrying whichever chart the operands have.
pub fn zero_product(a: &MatrixSymbol, b: &MatrixSymbol) -> Result<MatrixSymbol> {
    check_grids(a, b)?;
    let chart = a.chart.as_ref().or(b.chart.as_ref());
    Ok(MatrixSymbol::zeros(&a.grid, chart, a.rows, b.cols))
}
