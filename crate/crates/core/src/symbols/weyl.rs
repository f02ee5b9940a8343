use super::grid::PhaseGrid;
use super::series::HSeries;
use crate::error::{Error, Result};
use crate::linalg::ZERO;
use crate::spectral;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Apply `Op_h^w(sum h^j a_j)` to a fiber-valued function on the x-grid.
///
/// `psi` is laid out as `[x-points][fiber]`. The symbol is expanded in Fourier
/// modes in x; a mode `e^{iqx} b(xi)` maps the plane wave `e^{ikx}` to
/// `b(h (k + q/2)) e^{i(k+q)x}`, which is the midpoint rule of the Weyl
/// quantization. Cost is quadratic in the number of x-points, so this is meant
/// for validation on small grids.
pub fn weyl_apply(a: &HSeries, h: f64, h_max: f64, psi: &[C64]) -> Result<Vec<C64>> {
    if !(h > 0.0 && h <= h_max) {
        return Err(Error::precondition(format!("h = {h} outside (0, {h_max}]")));
    }
    if a.chart().is_some() {
        return Err(Error::structural("contour", "weyl_apply needs a chart-free symbol"));
    }
    let sym = a.evaluate(h);
    let grid: &PhaseGrid = sym.grid();
    let d = grid.d();
    let (rows, cols) = (sym.rows(), sym.cols());
    let xdims = grid.x_dims();
    let nx: usize = xdims.iter().product();
    if psi.len() != nx * cols {
        return Err(Error::structural("x", format!("state has {} entries, expected {}", psi.len(), nx * cols)));
    }
    let nxi = grid.xi_point_count();

    // Fourier coefficients of the symbol in x for every xi-node and entry.
    let mut ahat = sym.data().to_vec();
    let mut sdims = xdims.clone();
    sdims.push(nxi * rows * cols);
    for ax in 0..d {
        spectral::fft_axis(&mut ahat, &sdims, ax, false);
    }
    let inv_nx = 1.0 / nx as f64;
    ahat.iter_mut().for_each(|v| *v *= inv_nx);

    let mut psihat = psi.to_vec();
    let mut pdims = xdims.clone();
    pdims.push(cols);
    for ax in 0..d {
        spectral::fft_axis(&mut psihat, &pdims, ax, false);
    }

    // Signed integer frequencies per axis.
    let freqs: Vec<Vec<i64>> = xdims
        .iter()
        .map(|&n| (0..n).map(|j| if j < n / 2 { j as i64 } else { j as i64 - n as i64 }).collect())
        .collect();
    let dk: Vec<f64> = grid.x_axes().iter().map(|ax| 2.0 * PI / ax.length()).collect();
    let xi_nodes: Vec<&[f64]> = (0..d).map(|a| grid.nodes(d + a)).collect();
    let xi_w: Vec<&[f64]> = (0..d)
        .map(|a| grid.chebyshev_weights(d + a).ok_or_else(|| Error::structural("xi", "weyl_apply needs Chebyshev xi-axes")))
        .collect::<Result<_>>()?;
    let xi_dims: Vec<usize> = (0..d).map(|a| grid.xi_axes()[a].points).collect();

    let mut out_hat = vec![ZERO; nx * rows];
    let mut kin = vec![0usize; d];
    let mut qid = vec![0usize; d];
    let mut xi_idx = vec![0usize; d];
    let bs = rows * cols;
    for ik in 0..nx {
        spectral::unravel(ik, &xdims, &mut kin);
        for iq in 0..nx {
            spectral::unravel(iq, &xdims, &mut qid);
            let mut iout = 0usize;
            let mut coefs: Vec<Vec<f64>> = Vec::with_capacity(d);
            for a in 0..d {
                let k = freqs[a][kin[a]];
                let q = freqs[a][qid[a]];
                let n = xdims[a] as i64;
                let ko = (k + q).rem_euclid(n) as usize;
                iout = iout * xdims[a] + ko;
                let xi = h * dk[a] * (k as f64 + 0.5 * q as f64);
                coefs.push(spectral::barycentric_coefficients(xi_nodes[a], xi_w[a], xi));
            }
            // b = sum over xi-nodes of interpolation weight * ahat[q, node]
            let mut b = vec![ZERO; bs];
            for ixi in 0..nxi {
                spectral::unravel(ixi, &xi_dims, &mut xi_idx);
                let w: f64 = (0..d).map(|a| coefs[a][xi_idx[a]]).product();
                if w == 0.0 {
                    continue;
                }
                let base = (iq * nxi + ixi) * bs;
                for (bv, av) in b.iter_mut().zip(&ahat[base..base + bs]) {
                    *bv += *av * w;
                }
            }
            for r in 0..rows {
                let mut acc = ZERO;
                for c in 0..cols {
                    acc += b[r * cols + c] * psihat[ik * cols + c];
                }
                out_hat[iout * rows + r] += acc;
            }
        }
    }
    let mut odims = xdims.clone();
    odims.push(rows);
    for ax in 0..d {
        spectral::fft_axis(&mut out_hat, &odims, ax, true);
    }
    Ok(out_hat)
}
