use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, ZERO};
use crate::models::Potential;
use crate::spectral;
use crate::symbols::{trig_weights, AxisKind, HSeries, MatrixSymbol, PhaseGrid, Var};
use num_complex::Complex64 as C64;
use std::sync::Arc;

/// Value, gradient and (optionally) Hessian of a scalar Hamiltonian at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub dx: Vec<f64>,
    pub dxi: Vec<f64>,
    /// Row-major `2d x 2d` over `(x, xi)`; empty unless requested.
    pub hessian: Vec<f64>,
}

/// Scalar classical Hamiltonian `g(x, xi)` driving the flow.
pub trait Hamiltonian: Sync {
    fn dim(&self) -> usize;

    fn jet(&self, x: &[f64], xi: &[f64], second: bool) -> Jet;

    /// True if `(x, xi)` lies in the region where `g` is known, with `margin`
    /// kept from the edges.
    fn contains(&self, _x: &[f64], _xi: &[f64], _margin: f64) -> bool {
        true
    }
}

/// `g = |xi|^2 + V(x)` in closed form.
#[derive(Clone, Debug, PartialEq)]
pub struct KineticPotential {
    pub d: usize,
    pub potential: Potential,
}

impl KineticPotential {
    pub fn new(d: usize, potential: Potential) -> KineticPotential {
        KineticPotential { d, potential }
    }

    pub fn free(d: usize) -> KineticPotential {
        KineticPotential { d, potential: Potential::Zero }
    }
}

impl Hamiltonian for KineticPotential {
    fn dim(&self) -> usize {
        self.d
    }

    fn jet(&self, x: &[f64], xi: &[f64], second: bool) -> Jet {
        let d = self.d;
        let value = xi.iter().map(|v| v * v).sum::<f64>() + self.potential.value(x);
        let dx = self.potential.gradient(x);
        let dxi = xi.iter().map(|v| 2.0 * v).collect();
        let mut hessian = Vec::new();
        if second {
            hessian = vec![0.0; 4 * d * d];
            let vh = self.potential.hessian(x);
            for i in 0..d {
                for j in 0..d {
                    hessian[i * 2 * d + j] = vh[i * d + j];
                }
                hessian[(d + i) * 2 * d + d + i] = 2.0;
            }
        }
        Jet { value, dx, dxi, hessian }
    }
}

/// Spectral interpolant of a sampled effective symbol `g(h) = sum_j h^j g_j`.
///
/// For `k > 1` the scalar Hamiltonian is one eigenvalue branch of `g(h)`
/// (counted from below); its derivatives follow from first and second order
/// perturbation theory.
#[derive(Clone, Debug)]
pub struct SampledHamiltonian {
    grid: Arc<PhaseGrid>,
    k: usize,
    branch: usize,
    /// `g`, then `d g / d v_a` for the 2d variables, then the upper triangle of second derivatives.
    tables: Vec<MatrixSymbol>,
}

fn var(d: usize, a: usize) -> Var {
    if a < d {
        Var::X(a)
    } else {
        Var::Xi(a - d)
    }
}

impl SampledHamiltonian {
    /// Evaluate the series at `h` through `h^order` and tabulate its derivatives.
    pub fn new(g: &HSeries, h: f64, order: usize, branch: usize) -> Result<SampledHamiltonian> {
        if g.chart().is_some() || g.rows() != g.cols() {
            return Err(Error::structural("effective symbol", "need a square chart-free symbol"));
        }
        let k = g.rows();
        if branch >= k {
            return Err(Error::structural("branch", format!("branch {branch} of a {k}x{k} symbol")));
        }
        let sym = g.truncate(order.min(g.order())).evaluate(h);
        SampledHamiltonian::from_symbol(sym, branch)
    }

    pub fn from_symbol(sym: MatrixSymbol, branch: usize) -> Result<SampledHamiltonian> {
        let grid = sym.grid().clone();
        let d = grid.d();
        let k = sym.rows();
        let mut tables = vec![sym.hermitian_part()];
        let base = tables[0].clone();
        for a in 0..2 * d {
            tables.push(base.differentiate(var(d, a), 1)?);
        }
        for a in 0..2 * d {
            for b in a..2 * d {
                tables.push(tables[1 + a].differentiate(var(d, b), 1)?);
            }
        }
        Ok(SampledHamiltonian { grid, k, branch, tables })
    }

    pub fn grid(&self) -> &Arc<PhaseGrid> {
        &self.grid
    }

    fn weights(&self, x: &[f64], xi: &[f64]) -> Vec<Vec<f64>> {
        let d = self.grid.d();
        (0..2 * d)
            .map(|a| {
                let ax = self.grid.axis(a);
                let t = if a < d { x[a] } else { xi[a - d] };
                match ax.kind {
                    AxisKind::Periodic => trig_weights(ax.min, ax.length(), ax.points, t).into_iter().map(|c| c.re).collect(),
                    AxisKind::Chebyshev => spectral::barycentric_coefficients(
                        self.grid.nodes(a),
                        self.grid.chebyshev_weights(a).expect("chebyshev weights"),
                        t,
                    ),
                }
            })
            .collect()
    }

    /// Interpolate the first `count` tables at one point.
    fn evaluate(&self, x: &[f64], xi: &[f64], count: usize) -> Vec<Vec<C64>> {
        let w = self.weights(x, xi);
        let dims = self.grid.dims();
        let bs = self.k * self.k;
        let mut out = vec![vec![ZERO; bs]; count];
        let mut idx = vec![0; dims.len()];
        for p in 0..self.grid.point_count() {
            spectral::unravel(p, &dims, &mut idx);
            let mut c = 1.0;
            for (a, &i) in idx.iter().enumerate() {
                c *= w[a][i];
            }
            if c == 0.0 {
                continue;
            }
            for (o, t) in out.iter_mut().zip(&self.tables) {
                for (ov, v) in o.iter_mut().zip(t.block(p)) {
                    *ov += *v * c;
                }
            }
        }
        out
    }
}

fn pair_index(d2: usize, a: usize, b: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    // rows a' < a contribute d2 - a' entries each
    a * d2 - a * (a + 1) / 2 + b
}

impl Hamiltonian for SampledHamiltonian {
    fn dim(&self) -> usize {
        self.grid.d()
    }

    fn jet(&self, x: &[f64], xi: &[f64], second: bool) -> Jet {
        let d = self.grid.d();
        let d2 = 2 * d;
        let count = if second { self.tables.len() } else { 1 + d2 };
        let vals = self.evaluate(x, xi, count);
        let mut hessian = Vec::new();
        let (value, grad) = if self.k == 1 {
            if second {
                hessian = vec![0.0; d2 * d2];
                for a in 0..d2 {
                    for b in 0..d2 {
                        hessian[a * d2 + b] = vals[1 + d2 + pair_index(d2, a, b)][0].re;
                    }
                }
            }
            (vals[0][0].re, (0..d2).map(|a| vals[1 + a][0].re).collect::<Vec<f64>>())
        } else {
            let k = self.k;
            let (e, v) = hermitian_eigen(&vals[0], k);
            let b = self.branch;
            let sandwich = |m: &[C64], i: usize, j: usize| -> C64 {
                let mut s = ZERO;
                for r in 0..k {
                    for c in 0..k {
                        s += v[(r, i)].conj() * m[r * k + c] * v[(c, j)];
                    }
                }
                s
            };
            let grad: Vec<f64> = (0..d2).map(|a| sandwich(&vals[1 + a], b, b).re).collect();
            if second {
                hessian = vec![0.0; d2 * d2];
                for a in 0..d2 {
                    for c in 0..d2 {
                        let mut s = sandwich(&vals[1 + d2 + pair_index(d2, a, c)], b, b).re;
                        for m in (0..k).filter(|&m| m != b) {
                            let gap = e[b] - e[m];
                            s += 2.0 * (sandwich(&vals[1 + a], b, m) * sandwich(&vals[1 + c], m, b)).re / gap;
                        }
                        hessian[a * d2 + c] = s;
                    }
                }
            }
            (e[b], grad)
        };
        if second {
            for a in 0..d2 {
                for b in a + 1..d2 {
                    let s = 0.5 * (hessian[a * d2 + b] + hessian[b * d2 + a]);
                    hessian[a * d2 + b] = s;
                    hessian[b * d2 + a] = s;
                }
            }
        }
        Jet { value, dx: grad[..d].to_vec(), dxi: grad[d..].to_vec(), hessian }
    }

    fn contains(&self, x: &[f64], xi: &[f64], margin: f64) -> bool {
        let d = self.grid.d();
        (0..d).all(|a| {
            let ax = self.grid.axis(a);
            x[a] >= ax.min + margin && x[a] <= ax.max - margin
        }) && (0..d).all(|a| {
            let ax = self.grid.axis(d + a);
            xi[a] >= ax.min + margin && xi[a] <= ax.max - margin
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_index_enumerates_upper_triangle() {
        let d2 = 4;
        let mut seen = Vec::new();
        for a in 0..d2 {
            for b in a..d2 {
                seen.push(pair_index(d2, a, b));
            }
        }
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
        assert_eq!(pair_index(d2, 3, 1), pair_index(d2, 1, 3));
    }

    #[test]
    fn sampled_harmonic_matches_closed_form() {
        let grid = Arc::new(PhaseGrid::uniform(1, (-4.0, 4.0), 32, 3.0, 16).unwrap());
        // periodic stand-in for x^2 with a matching closed form
        let sym = MatrixSymbol::scalar_fn(&grid, |x, xi| C64::new(xi[0] * xi[0] + (x[0] * 0.5 * std::f64::consts::PI / 2.0).cos(), 0.0));
        let s = SampledHamiltonian::from_symbol(sym, 0).unwrap();
        let exact = KineticPotential::new(1, Potential::Cosine { amplitude: 1.0, wavenumber: std::f64::consts::PI / 4.0 });
        for (x, xi) in [(0.3, 0.2), (-1.7, 1.1), (2.9, -2.4)] {
            let a = s.jet(&[x], &[xi], true);
            let b = exact.jet(&[x], &[xi], true);
            assert!((a.value - b.value).abs() < 1e-10);
            assert!((a.dx[0] - b.dx[0]).abs() < 1e-9);
            assert!((a.dxi[0] - b.dxi[0]).abs() < 1e-9);
            for (u, v) in a.hessian.iter().zip(&b.hessian) {
                assert!((u - v).abs() < 1e-7, "{u} vs {v}");
            }
        }
    }
}
