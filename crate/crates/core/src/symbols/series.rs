use super::grid::PhaseGrid;
use super::symbol::{zero_product, ContourChart, MatrixSymbol, MAX_TRUNCATION};
use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use std::sync::Arc;

/// Truncated power series `sum_{j<=N} h^j a_j` of matrix symbols on a shared grid.
#[derive(Clone, Debug)]
pub struct HSeries {
    coeffs: Vec<MatrixSymbol>,
}

impl HSeries {
    pub fn new(coeffs: Vec<MatrixSymbol>) -> Result<HSeries> {
        let first = coeffs
            .first()
            .ok_or_else(|| Error::structural("series", "at least one coefficient is required"))?;
        for c in &coeffs[1..] {
            if c.rows() != first.rows() || c.cols() != first.cols() {
                return Err(Error::structural("fiber", "coefficients differ in block shape"));
            }
            if **c.grid() != **first.grid() {
                return Err(Error::structural("grid", "coefficients live on different grids"));
            }
        }
        Ok(HSeries { coeffs })
    }

    pub fn zero(grid: &Arc<PhaseGrid>, rows: usize, cols: usize, order: usize) -> HSeries {
        HSeries {
            coeffs: (0..=order).map(|_| MatrixSymbol::zeros(grid, None, rows, cols)).collect(),
        }
    }

    pub fn identity(grid: &Arc<PhaseGrid>, n: usize, order: usize) -> HSeries {
        HSeries::from_leading(MatrixSymbol::identity(grid, n), order)
    }

    /// `a` at order zero, zero coefficients up to `order`.
    pub fn from_leading(a: MatrixSymbol, order: usize) -> HSeries {
        let mut coeffs = vec![a.clone()];
        for _ in 0..order {
            coeffs.push(MatrixSymbol::zeros(a.grid(), a.chart(), a.rows(), a.cols()));
        }
        HSeries { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, j: usize) -> &MatrixSymbol {
        &self.coeffs[j]
    }

    pub fn coeffs(&self) -> &[MatrixSymbol] {
        &self.coeffs
    }

    pub fn coeff_mut(&mut self, j: usize) -> &mut MatrixSymbol {
        &mut self.coeffs[j]
    }

    pub fn into_coeffs(self) -> Vec<MatrixSymbol> {
        self.coeffs
    }

    pub fn grid(&self) -> &Arc<PhaseGrid> {
        self.coeffs[0].grid()
    }

    pub fn rows(&self) -> usize {
        self.coeffs[0].rows()
    }

    pub fn cols(&self) -> usize {
        self.coeffs[0].cols()
    }

    pub fn chart(&self) -> Option<&Arc<ContourChart>> {
        self.coeffs.iter().find_map(|c| c.chart())
    }

    pub fn truncate(&self, order: usize) -> HSeries {
        HSeries { coeffs: self.coeffs[..=order.min(self.order())].to_vec() }
    }

    /// Extend with zero coefficients up to `order`.
    pub fn pad(&self, order: usize) -> HSeries {
        let mut coeffs = self.coeffs.clone();
        let a = &self.coeffs[0];
        while coeffs.len() <= order {
            coeffs.push(MatrixSymbol::zeros(a.grid(), a.chart(), a.rows(), a.cols()));
        }
        HSeries { coeffs }
    }

    /// Coefficient-wise sum; the result has the smaller order.
    pub fn add(&self, other: &HSeries) -> Result<HSeries> {
        self.combine(other, C64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &HSeries) -> Result<HSeries> {
        self.combine(other, C64::new(-1.0, 0.0))
    }

    fn combine(&self, other: &HSeries, s: C64) -> Result<HSeries> {
        let n = self.order().min(other.order());
        let coeffs = (0..=n)
            .map(|j| self.coeffs[j].axpy(s, &other.coeffs[j]))
            .collect::<Result<Vec<_>>>()?;
        Ok(HSeries { coeffs })
    }

    pub fn scale(&self, c: C64) -> HSeries {
        HSeries { coeffs: self.coeffs.iter().map(|a| a.scale(c)).collect() }
    }

    /// Pointwise conjugate transpose of every coefficient.
    pub fn adjoint(&self) -> HSeries {
        HSeries { coeffs: self.coeffs.iter().map(|a| a.adjoint()).collect() }
    }

    /// `sum_j h^j a_j`.
    pub fn evaluate(&self, h: f64) -> MatrixSymbol {
        let mut out = self.coeffs[0].clone();
        let mut hj = 1.0;
        for c in &self.coeffs[1..] {
            hj *= h;
            out = out.axpy(C64::new(hj, 0.0), c).expect("coefficients share shape");
        }
        out
    }

    /// Sup over the grid of the spectral norm of coefficient `j`.
    pub fn norm(&self, j: usize) -> Result<f64> {
        if j > self.order() {
            return Err(Error::structural("order", format!("coefficient {j} beyond order {}", self.order())));
        }
        Ok(self.coeffs[j].sup_norm())
    }

    /// Largest hermitian defect over all coefficients.
    pub fn hermitian_defect(&self) -> f64 {
        self.coeffs.iter().map(|c| c.hermitian_defect()).fold(0.0, f64::max)
    }
}

/// Multi-indices `(alpha, beta)` in `N^d x N^d` with `|alpha| + |beta| = m`.
pub fn multi_indices(d: usize, m: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; 2 * d];
    fn rec(pos: usize, left: usize, cur: &mut Vec<usize>, d: usize, out: &mut Vec<(Vec<usize>, Vec<usize>)>) {
        if pos == cur.len() - 1 {
            cur[pos] = left;
            out.push((cur[..d].to_vec(), cur[d..].to_vec()));
            return;
        }
        for k in (0..=left).rev() {
            cur[pos] = k;
            rec(pos + 1, left - k, cur, d, out);
        }
    }
    rec(0, m, &mut cur, d, &mut out);
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Moyal product `a1 # a2` truncated at `h^order`, in the convention where
/// `a1 # a2` is the symbol of `Op(a2) Op(a1)`:
///
/// `sum h^{|a+b|} (-1)^{|a|} / ((2i)^{|a+b|} a! b!) (d_x^a d_xi^b a2)(d_xi^a d_x^b a1)`
///
/// so the order-zero coefficient is the pointwise matrix product `a2 * a1`.
pub fn moyal_product(a1: &HSeries, a2: &HSeries, order: usize) -> Result<HSeries> {
    if order > MAX_TRUNCATION {
        return Err(Error::structural("order", format!("truncation {order} above {MAX_TRUNCATION}")));
    }
    if a2.cols() != a1.rows() {
        return Err(Error::structural(
            "fiber",
            format!("cannot form {}x{} # {}x{}", a1.rows(), a1.cols(), a2.rows(), a2.cols()),
        ));
    }
    let template = zero_product(a2.coeff(0), a1.coeff(0))?;
    let chart = a1.chart().or(a2.chart()).cloned();
    if let (Some(c1), Some(c2)) = (a1.chart(), a2.chart()) {
        if !Arc::ptr_eq(c1, c2) {
            return Err(Error::structural("contour", "operands use different contour charts"));
        }
    }
    let grid = template.grid().clone();
    let d = grid.d();
    let mut out: Vec<MatrixSymbol> = (0..=order)
        .map(|_| MatrixSymbol::zeros(&grid, chart.as_ref(), a2.rows(), a1.cols()))
        .collect();
    let two_i = C64::new(0.0, 2.0);
    let xc1: Vec<bool> = a1.coeffs().iter().map(|c| c.is_x_constant()).collect();
    let xc2: Vec<bool> = a2.coeffs().iter().map(|c| c.is_x_constant()).collect();
    for m in 0..=order {
        for (alpha, beta) in multi_indices(d, m) {
            let na: usize = alpha.iter().sum();
            let fact: f64 = alpha.iter().chain(beta.iter()).map(|&k| factorial(k)).product();
            let sign = if na % 2 == 0 { 1.0 } else { -1.0 };
            let c = C64::new(sign / fact, 0.0) / two_i.powu(m as u32);
            let top = order - m;
            let (xa, xb) = (alpha.iter().any(|&k| k > 0), beta.iter().any(|&k| k > 0));
            // x-derivatives of x-constant coefficients vanish; skip them before differentiating
            let live2: Vec<bool> = (0..=top.min(a2.order())).map(|j| !(xa && xc2[j])).collect();
            let live1: Vec<bool> = (0..=top.min(a1.order())).map(|i| !(xb && xc1[i])).collect();
            if !live1.iter().any(|v| *v) || !live2.iter().any(|v| *v) {
                continue;
            }
            let d2: Vec<Option<MatrixSymbol>> = live2
                .iter()
                .enumerate()
                .map(|(j, &l)| if l { a2.coeff(j).multi_derivative(&alpha, &beta).map(Some) } else { Ok(None) })
                .collect::<Result<_>>()?;
            let d1: Vec<Option<MatrixSymbol>> = live1
                .iter()
                .enumerate()
                .map(|(i, &l)| if l { a1.coeff(i).multi_derivative(&beta, &alpha).map(Some) } else { Ok(None) })
                .collect::<Result<_>>()?;
            for (j, s2) in d2.iter().enumerate() {
                let Some(s2) = s2.as_ref().filter(|s| !s.is_zero()) else { continue };
                for (i, s1) in d1.iter().enumerate() {
                    let Some(s1) = s1.as_ref().filter(|s| !s.is_zero()) else { continue };
                    if i + j > top {
                        continue;
                    }
                    out[i + j + m].add_matmul(s2, s1, c)?;
                }
            }
        }
    }
    HSeries::new(out)
}

/// Symbol of the operator product `Op(a) Op(b)`, truncated at `h^order`.
pub fn compose(a: &HSeries, b: &HSeries, order: usize) -> Result<HSeries> {
    moyal_product(b, a, order)
}

/// `Op(a)^k` as a symbol (`k >= 1`).
pub fn compose_power(a: &HSeries, k: usize, order: usize) -> Result<HSeries> {
    let mut out = a.truncate(order);
    for _ in 1..k {
        out = compose(&out, a, order)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multi_index_counts() {
        assert_eq!(multi_indices(1, 0).len(), 1);
        assert_eq!(multi_indices(1, 2).len(), 3);
        assert_eq!(multi_indices(2, 2).len(), 10);
        assert!(multi_indices(2, 3).iter().all(|(a, b)| a.iter().sum::<usize>() + b.iter().sum::<usize>() == 3));
    }

    fn grid() -> Arc<PhaseGrid> {
        Arc::new(PhaseGrid::uniform(1, (-std::f64::consts::PI, std::f64::consts::PI), 16, 2.0, 8).unwrap())
    }

    #[test]
    fn canonical_commutator() {
        let g = grid();
        let x = HSeries::from_leading(MatrixSymbol::scalar_fn(&g, |x, _| C64::new(x[0].sin(), 0.0)), 2);
        let xi = HSeries::from_leading(MatrixSymbol::scalar_fn(&g, |_, xi| C64::new(xi[0], 0.0)), 2);
        let ab = moyal_product(&x, &xi, 2).unwrap();
        let ba = moyal_product(&xi, &x, 2).unwrap();
        let c = ab.sub(&ba).unwrap();
        assert!(c.coeff(0).max_abs() < 1e-13);
        // sin(x) # xi - xi # sin(x) = -i cos(x)
        for p in 0..g.point_count() {
            let (x, _) = g.coords(p);
            assert!((c.coeff(1).block(p)[0] - C64::new(0.0, -x[0].cos())).norm() < 1e-12);
        }
        assert!(c.coeff(2).max_abs() < 1e-12);
    }

    #[test]
    fn evaluate_sums_powers() {
        let g = grid();
        let one = MatrixSymbol::identity(&g, 1);
        let s = HSeries::new(vec![one.clone(), one.scale(C64::new(2.0, 0.0)), one.scale(C64::new(3.0, 0.0))]).unwrap();
        let v = s.evaluate(0.5);
        assert!((v.block(0)[0].re - (1.0 + 1.0 + 0.75)).abs() < 1e-15);
    }
}
