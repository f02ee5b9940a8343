use super::projection::fiber_matrices;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, ZERO};
use crate::spectral;
use crate::symbols::{compose, HSeries, MatrixSymbol};
use num_complex::Complex64 as C64;

/// Effective Hamiltonian `g` on the `k`-dimensional reduced fiber.
#[derive(Clone, Debug)]
pub struct EffectiveSymbol {
    pub g: HSeries,
    /// `mu(x) = b H(x) b^dagger`, the reduced fiber Hamiltonian.
    pub mu: MatrixSymbol,
    /// Largest hermitian defect of any coefficient before symmetrization.
    pub raw_hermitian_defect: f64,
}

/// Smooth frame of the lowest `group` eigenvectors of `H(x) = p_0 - |xi|^2`,
/// returned as a `group x n` symbol whose rows are `u_i(x)^dagger`.
///
/// Phases follow a parallel-transport sweep along the x-axes; a frame that
/// does not close up around the periodic box is refused.
pub fn fiber_frame(p0: &MatrixSymbol, group: usize) -> Result<MatrixSymbol> {
    let (h, _) = fiber_matrices(p0)?;
    let n = p0.rows();
    let grid = p0.grid();
    let nx = grid.x_point_count();
    // vecs[ix][l][i]
    let mut vecs: Vec<Vec<Vec<C64>>> = h
        .chunks(n * n)
        .map(|b| {
            let (_, v) = hermitian_eigen(b, n);
            (0..group).map(|l| (0..n).map(|i| v[(i, l)]).collect()).collect()
        })
        .collect();
    let dims = grid.x_dims();
    let st = spectral::strides(&dims);
    let dot = |a: &[C64], b: &[C64]| a.iter().zip(b).map(|(u, v)| u.conj() * v).sum::<C64>();
    let mut path: Vec<(usize, usize)> = (1..dims[0]).map(|i| ((i - 1) * st[0], i * st[0])).collect();
    if dims.len() == 2 {
        for i0 in 0..dims[0] {
            for i1 in 1..dims[1] {
                path.push((i0 * st[0] + i1 - 1, i0 * st[0] + i1));
            }
        }
    }
    for (prev, cur) in path {
        for l in 0..group {
            let o = dot(&vecs[prev][l], &vecs[cur][l]);
            if o.norm() < 0.5 {
                return Err(Error::precondition(format!(
                    "fiber frame: overlap {:.3} between neighbours at x = {:?}; levels nearly degenerate or x-grid too coarse",
                    o.norm(),
                    grid.x_coords(cur)
                )));
            }
            let ph = o.conj() / o.norm();
            vecs[cur][l].iter_mut().for_each(|v| *v *= ph);
        }
    }
    // closure around each periodic direction
    let mut idx = vec![0usize; dims.len()];
    for ix in 0..nx {
        spectral::unravel(ix, &dims, &mut idx);
        for a in 0..dims.len() {
            if idx[a] + 1 != dims[a] {
                continue;
            }
            let wrap = ix - idx[a] * st[a];
            for l in 0..group {
                let o = dot(&vecs[ix][l], &vecs[wrap][l]);
                if (o.arg()).abs() > 0.25 || o.norm() < 0.5 {
                    return Err(Error::precondition(format!(
                        "fiber frame does not close around the periodic box at x = {:?} (overlap {o:.3}); the level carries a nontrivial phase winding",
                        grid.x_coords(ix)
                    )));
                }
            }
        }
    }
    let nxi = grid.xi_point_count();
    let mut out = MatrixSymbol::zeros(grid, None, group, n);
    for p in 0..grid.point_count() {
        let ix = p / nxi;
        let b = out.block_mut(p);
        for l in 0..group {
            for i in 0..n {
                b[l * n + i] = vecs[ix][l][i].conj();
            }
        }
    }
    Ok(out)
}

/// Largest `|b^dagger b - pi0|` entry and where it happens.
pub fn frame_reconstruction(frame: &MatrixSymbol, pi0: &MatrixSymbol) -> Result<(f64, usize)> {
    let proj = frame.adjoint().matmul(frame)?;
    let diff = proj.sub(pi0)?;
    let mut worst = (0.0, 0);
    for p in 0..diff.block_count() {
        let v = diff.block(p).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if v > worst.0 {
            worst = (v, p);
        }
    }
    Ok(worst)
}

/// Largest acceptable frame reconstruction error.
pub const RECONSTRUCTION_TOLERANCE: f64 = 1e-8;

/// `g = w # p # w^dagger` (operator order) with `w = b # u`, truncated at `h^order`.
pub fn effective_hamiltonian(
    u: &HSeries,
    p: &HSeries,
    frame: &MatrixSymbol,
    pi0: &MatrixSymbol,
    order: usize,
) -> Result<EffectiveSymbol> {
    let (err, at) = frame_reconstruction(frame, pi0)?;
    if err > RECONSTRUCTION_TOLERANCE {
        let (x, xi) = frame.grid().coords(at);
        return Err(Error::precondition(format!(
            "fiber frame does not span the range of pi_0 at x = {x:?}, xi = {xi:?}: error {err:.3e}"
        )));
    }
    let b = HSeries::from_leading(frame.clone(), order);
    let w = compose(&b, u, order)?;
    let g = compose(&compose(&w, &p.pad(order), order)?, &w.adjoint(), order)?;
    let raw = g.hermitian_defect();
    let g = HSeries::new(g.into_coeffs().into_iter().map(|c| c.hermitian_part()).collect())?;
    let (hx, _) = fiber_matrices(p.coeff(0))?;
    let n = p.rows();
    let k = frame.rows();
    let grid = frame.grid();
    let nxi = grid.xi_point_count();
    let mut mu = MatrixSymbol::zeros(grid, None, k, k);
    for pt in 0..grid.point_count() {
        let hb = &hx[(pt / nxi) * n * n..(pt / nxi + 1) * n * n];
        let fb = frame.block(pt);
        let out = mu.block_mut(pt);
        for i in 0..k {
            for j in 0..k {
                let mut s = ZERO;
                for a in 0..n {
                    for c in 0..n {
                        s += fb[i * n + a] * hb[a * n + c] * fb[j * n + c].conj();
                    }
                }
                out[i * k + j] = s;
            }
        }
    }
    Ok(EffectiveSymbol { g, mu, raw_hermitian_defect: raw })
}
