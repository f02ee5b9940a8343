use super::{FiberModel, PairModel};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_defect, ZERO};
use crate::symbols::{HSeries, MatrixSymbol, PhaseGrid};
use num_complex::Complex64 as C64;
use std::sync::Arc;

/// Largest order the pair assembly provides; higher orders come from the
/// `kappa` and Taylor expansions that are cut here.
pub const PAIR_MAX_ORDER: usize = 4;

/// Threshold on `||(1 - Pi_n) O u_j||` above which the fiber basis is flagged as too small.
pub const TRUNCATION_WARNING: f64 = 0.05;

/// The full symbol `p` in an `n`-dimensional fiber basis.
#[derive(Clone, Debug)]
pub struct PSymbol {
    pub p: HSeries,
    /// Constant electronic basis (pair model only), `L^2(dy)`-normalized.
    pub fiber_basis: Option<Vec<Vec<C64>>>,
    pub reference_x: Vec<f64>,
    /// Largest `||(1 - Pi_n) O u_j||` over the assembled operators.
    pub truncation_leakage: f64,
    /// Largest hermitian defect of a matrix element table before symmetrization.
    pub quadrature_asymmetry: f64,
    pub warnings: Vec<String>,
}

/// Assemble `p = sum_j h^j p_j` up to `order` on `grid`.
///
/// Matrix models give `p_0 = |xi|^2 + V(x)` and nothing else. The neutral pair
/// uses a constant basis of electronic eigenvectors at the box centre:
///
/// * `p_0 = |xi|^2 + <u_i, (L^2 + V_12 + V_1(x) + V_2(x + y)) u_j>`
/// * `p_1 = -4e sum_c xi_c <u_i, A_c(y) u_j>`
/// * `p_2 = <u_i, (D_y + eA)^2 u_j> - <u_i, y.grad V_1(x) u_j> - <u_i, y.grad V_2(x + y) u_j>`
/// * `p_4 = <u_i, (D_y + eA)^2 u_j> + second-order Taylor terms of V_1, V_2`
pub fn assemble_p_symbol(model: &FiberModel, grid: &Arc<PhaseGrid>, n: usize, order: usize) -> Result<PSymbol> {
    if grid.d() != model.d() {
        return Err(Error::structural("x", format!("grid dimension {} vs model dimension {}", grid.d(), model.d())));
    }
    match model {
        FiberModel::Matrix(m) => {
            if n != m.size() {
                return Err(Error::structural("fiber", format!("matrix model has size {}, basis size {n} requested", m.size())));
            }
            let p0 = MatrixSymbol::from_fn(grid, n, n, |x, xi, out| {
                out.copy_from_slice(&m.potential(x));
                let k2: f64 = xi.iter().map(|v| v * v).sum();
                for i in 0..n {
                    out[i * n + i] += k2;
                }
            });
            Ok(PSymbol {
                p: HSeries::from_leading(p0, order),
                fiber_basis: None,
                reference_x: Vec::new(),
                truncation_leakage: 0.0,
                quadrature_asymmetry: 0.0,
                warnings: Vec::new(),
            })
        }
        FiberModel::Pair(pm) => assemble_pair(pm, grid, n, order),
    }
}

struct Tables<'a> {
    model: &'a PairModel,
    u: Vec<Vec<C64>>,
    weight: f64,
    asym: f64,
    leak: f64,
}

impl Tables<'_> {
    fn inner(&self, a: &[C64], b: &[C64]) -> C64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>() * self.weight
    }

    /// Hermitian table `<u_i, O u_j>` from the images `O u_j`; tracks the
    /// leakage of the images out of the basis.
    fn table(&mut self, images: &[Vec<C64>]) -> Vec<C64> {
        let n = self.u.len();
        let mut t = vec![ZERO; n * n];
        for j in 0..n {
            let mut captured = 0.0;
            for i in 0..n {
                t[i * n + j] = self.inner(&self.u[i], &images[j]);
                captured += t[i * n + j].norm_sqr();
            }
            let total = self.inner(&images[j], &images[j]).re;
            self.leak = self.leak.max((total - captured).max(0.0).sqrt());
        }
        self.asym = self.asym.max(hermitian_defect(&t, n));
        for i in 0..n {
            for j in i..n {
                let v = 0.5 * (t[i * n + j] + t[j * n + i].conj());
                t[i * n + j] = v;
                t[j * n + i] = v.conj();
            }
        }
        t
    }

    fn multiply(&mut self, f: &[f64]) -> Vec<C64> {
        let images: Vec<Vec<C64>> = self.u.iter().map(|u| u.iter().zip(f).map(|(a, b)| a * b).collect()).collect();
        self.table(&images)
    }
}

fn assemble_pair(pm: &PairModel, grid: &Arc<PhaseGrid>, n: usize, order: usize) -> Result<PSymbol> {
    pm.validate()?;
    if !pm.is_neutral() {
        return Err(Error::precondition(
            "the symbol pipeline needs a neutral pair; charged pairs are only supported on the grid solver",
        ));
    }
    if order > PAIR_MAX_ORDER {
        return Err(Error::structural("order", format!("pair symbol assembled up to order {PAIR_MAX_ORDER}, {order} requested")));
    }
    let d = pm.d;
    let x_ref: Vec<f64> = grid.x_axes().iter().map(|a| 0.5 * (a.min + a.max)).collect();
    let (_, u) = pm.electronic_eigensolve(&x_ref, n)?;
    let ys = pm.y_points();
    let mut tb = Tables { model: pm, u, weight: pm.y_weight(), asym: 0.0, leak: 0.0 };

    let binding: Vec<f64> = ys.iter().map(|y| pm.binding.value(y)).collect();
    let kin: Vec<Vec<C64>> = tb
        .u
        .iter()
        .map(|v| {
            let mut w = tb.model.magnetic_kinetic(v, pm.electron_charge);
            w.iter_mut().zip(v).zip(&binding).for_each(|((o, a), b)| *o += a * *b);
            w
        })
        .collect();
    let leak_before = tb.leak;
    let k0 = tb.table(&kin);
    tb.leak = leak_before;

    let a_tabs: Vec<Vec<C64>> = (0..d)
        .map(|c| {
            let f: Vec<f64> = ys.iter().map(|y| pm.vector_potential(y)[c]).collect();
            tb.multiply(&f)
        })
        .collect();
    let q_images: Vec<Vec<C64>> = tb.u.iter().map(|v| tb.model.magnetic_kinetic(v, -pm.electron_charge)).collect();
    let q_tab = tb.table(&q_images);
    let y_tabs: Vec<Vec<C64>> = (0..d)
        .map(|c| {
            let f: Vec<f64> = ys.iter().map(|y| y[c]).collect();
            tb.multiply(&f)
        })
        .collect();
    let yy_tabs: Vec<Vec<C64>> = (0..d * d)
        .map(|cd| {
            let f: Vec<f64> = ys.iter().map(|y| y[cd / d] * y[cd % d]).collect();
            tb.multiply(&f)
        })
        .collect();
    let structural_leak = tb.leak;

    // x-dependent tables: index [ix] -> (order-0, order-2, order-4) parts
    let nx = grid.x_point_count();
    let nn = n * n;
    let mut x0 = vec![ZERO; nx * nn];
    let mut x2 = vec![ZERO; nx * nn];
    let mut x4 = vec![ZERO; nx * nn];
    let e2_const = pm.electron_potential.is_constant();
    let mut v2_leak: f64 = 0.0;
    for ix in 0..nx {
        let x = grid.x_coords(ix);
        let v1 = pm.nucleus_potential.value(&x);
        let g1 = pm.nucleus_potential.gradient(&x);
        let h1 = pm.nucleus_potential.hessian(&x);
        let b0 = &mut x0[ix * nn..(ix + 1) * nn];
        let b2 = &mut x2[ix * nn..(ix + 1) * nn];
        let b4 = &mut x4[ix * nn..(ix + 1) * nn];
        for k in 0..nn {
            b0[k] = k0[k];
            b2[k] = q_tab[k];
            b4[k] = q_tab[k];
            for c in 0..d {
                b2[k] -= y_tabs[c][k] * g1[c];
                for e in 0..d {
                    b4[k] += 0.5 * yy_tabs[c * d + e][k] * h1[c * d + e];
                }
            }
        }
        for i in 0..n {
            b0[i * n + i] += v1;
        }
        if e2_const {
            let c = pm.electron_potential.value(&x);
            for i in 0..n {
                b0[i * n + i] += c;
            }
        } else {
            let shifted: Vec<Vec<f64>> = ys.iter().map(|y| x.iter().zip(y).map(|(a, b)| a + b).collect()).collect();
            let v: Vec<f64> = shifted.iter().map(|r| pm.electron_potential.value(r)).collect();
            let grads: Vec<Vec<f64>> = shifted.iter().map(|r| pm.electron_potential.gradient(r)).collect();
            let hess: Vec<Vec<f64>> = shifted.iter().map(|r| pm.electron_potential.hessian(r)).collect();
            let ydg: Vec<f64> = ys.iter().zip(&grads).map(|(y, g)| y.iter().zip(g).map(|(a, b)| a * b).sum()).collect();
            let yhy: Vec<f64> = ys
                .iter()
                .zip(&hess)
                .map(|(y, hm)| {
                    let mut s = 0.0;
                    for c in 0..d {
                        for e in 0..d {
                            s += y[c] * hm[c * d + e] * y[e];
                        }
                    }
                    0.5 * s
                })
                .collect();
            let before = tb.leak;
            tb.leak = 0.0;
            let tv = tb.multiply(&v);
            v2_leak = v2_leak.max(tb.leak);
            tb.leak = before;
            let tg = tb.multiply(&ydg);
            let th = tb.multiply(&yhy);
            for k in 0..nn {
                b0[k] += tv[k];
                b2[k] -= tg[k];
                b4[k] += th[k];
            }
        }
    }
    let leak = structural_leak.max(tb.leak).max(v2_leak);

    let np = grid.point_count();
    let mut c0 = vec![ZERO; np * nn];
    let mut c1 = vec![ZERO; np * nn];
    let mut c2 = vec![ZERO; np * nn];
    let mut c4 = vec![ZERO; np * nn];
    let e = pm.electron_charge;
    for p in 0..np {
        let ix = grid.x_index(p);
        let (_, xi) = grid.coords(p);
        let k2: f64 = xi.iter().map(|v| v * v).sum();
        let r = p * nn..(p + 1) * nn;
        c0[r.clone()].copy_from_slice(&x0[ix * nn..(ix + 1) * nn]);
        for i in 0..n {
            c0[p * nn + i * n + i] += k2;
        }
        for k in 0..nn {
            let mut s = ZERO;
            for c in 0..d {
                s += a_tabs[c][k] * xi[c];
            }
            c1[p * nn + k] = s * (-4.0 * e);
        }
        c2[r.clone()].copy_from_slice(&x2[ix * nn..(ix + 1) * nn]);
        c4[r].copy_from_slice(&x4[ix * nn..(ix + 1) * nn]);
    }
    let mut coeffs = vec![
        MatrixSymbol::from_data(grid, None, n, n, c0)?,
        MatrixSymbol::from_data(grid, None, n, n, c1)?,
        MatrixSymbol::from_data(grid, None, n, n, c2)?,
        MatrixSymbol::zeros(grid, None, n, n),
        MatrixSymbol::from_data(grid, None, n, n, c4)?,
    ];
    coeffs.truncate(order + 1);
    let mut warnings = Vec::new();
    if leak > TRUNCATION_WARNING {
        warnings.push(format!(
            "fiber basis of size {n} is small: operator images leave its span by {leak:.3} (threshold {TRUNCATION_WARNING})"
        ));
    }
    Ok(PSymbol {
        p: HSeries::new(coeffs)?,
        fiber_basis: Some(tb.u),
        reference_x: x_ref,
        truncation_leakage: leak,
        quadrature_asymmetry: tb.asym,
        warnings,
    })
}
