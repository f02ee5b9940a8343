use crate::error::{Error, Result};
use crate::linalg::{inverse_with_condition, ONE};
use crate::symbols::{compose, moyal_product, HSeries, MatrixSymbol};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Quadrature nodes on the circle `|z - 1| = 1/2` used by [`riesz_purify`].
pub const RIESZ_NODES: usize = 64;
/// Largest idempotency defect coefficient accepted before purification.
pub const PURIFY_LIMIT: f64 = 0.1;

/// Coefficient norms of `pi # pi - pi` through `h^order`.
pub fn idempotency_defect(pi: &HSeries, order: usize) -> Result<Vec<f64>> {
    let pp = moyal_product(pi, pi, order)?;
    let d = pp.sub(&pi.pad(order))?;
    (0..=order).map(|j| d.norm(j)).collect()
}

/// `pi - z` with scalar `z`.
fn shift(a: &HSeries, z: C64) -> Result<HSeries> {
    let mut out = a.clone();
    let n = a.rows();
    let zi = MatrixSymbol::scalar_identity(a.grid(), n, z);
    *out.coeff_mut(0) = a.coeff(0).sub(&zi)?;
    Ok(out)
}

/// Symbol-level resolvent `(pi - z)^{-1}` through `h^order` for scalar `z`.
fn series_resolvent(pi: &HSeries, z: C64, order: usize) -> Result<HSeries> {
    let a = shift(pi, z)?;
    let n = pi.rows();
    let mut r0 = a.coeff(0).clone();
    let bs = n * n;
    let failed = r0
        .data_mut()
        .par_chunks_mut(bs)
        .map(|b| match inverse_with_condition(b, n) {
            Some((inv, _)) => {
                b.copy_from_slice(&inv);
                false
            }
            None => true,
        })
        .reduce(|| false, |x, y| x || y);
    if failed {
        return Err(Error::precondition(format!("pi_0 - z singular at z = {z}")));
    }
    let r0s = HSeries::from_leading(r0, order);
    if order == 0 {
        return Ok(r0s);
    }
    let prod = moyal_product(&a, &r0s, order)?;
    let mut s_coeffs = prod.into_coeffs();
    s_coeffs[0] = MatrixSymbol::zeros(pi.grid(), None, n, n);
    for c in s_coeffs.iter_mut().skip(1) {
        *c = c.scale(C64::new(-1.0, 0.0));
    }
    let s = HSeries::new(s_coeffs)?;
    let mut sum = s.clone();
    let mut power = s.clone();
    for _ in 2..=order {
        power = moyal_product(&power, &s, order)?;
        sum = sum.add(&power)?;
    }
    r0s.add(&moyal_product(&r0s, &sum, order)?)
}

/// Riesz projection `(i/2pi) \oint_{|z-1|=1/2} (pi - z)^{-1} dz` order by order.
pub fn riesz_purify(pi: &HSeries) -> Result<HSeries> {
    let order = pi.order();
    let defect = idempotency_defect(pi, order)?;
    if let Some((j, v)) = defect.iter().enumerate().find(|(_, v)| **v > PURIFY_LIMIT) {
        return Err(Error::precondition(format!(
            "pi is too far from idempotent to purify: coefficient {j} of pi # pi - pi has norm {v:.3e} (limit {PURIFY_LIMIT}); defects {defect:?}"
        )));
    }
    let n = pi.rows();
    let terms: Vec<HSeries> = (0..RIESZ_NODES)
        .into_par_iter()
        .map(|j| {
            let e = C64::from_polar(1.0, 2.0 * PI * j as f64 / RIESZ_NODES as f64);
            let z = ONE + e * 0.5;
            // (i/2pi) dz = (i/2pi) (i e / 2) (2pi / M)
            let w = e * (-0.5 / RIESZ_NODES as f64);
            Ok(series_resolvent(pi, z, order)?.scale(w))
        })
        .collect::<Result<_>>()?;
    let mut out = HSeries::zero(pi.grid(), n, n, order);
    for t in &terms {
        out = out.add(t)?;
    }
    Ok(HSeries::new(out.into_coeffs().into_iter().map(|c| c.hermitian_part()).collect())?)
}

/// Kato-Nagy intertwiner `u = (pi0 pi + (1 - pi0)(1 - pi)) (1 - (pi0 - pi)^2)^{-1/2}`
/// with operator products realized by [`compose`] and the inverse square root
/// as the binomial series `sum_k C(2k, k) / 4^k D^k`.
pub fn nagy_intertwiner(pi: &HSeries, pi0: &MatrixSymbol, order: usize) -> Result<HSeries> {
    let n = pi.rows();
    let p0 = HSeries::from_leading(pi0.clone(), order);
    let pi = pi.pad(order).truncate(order);
    let one = HSeries::identity(pi.grid(), n, order);
    let diff = p0.sub(&pi)?;
    let dd = compose(&diff, &diff, order)?;
    let mut s = one.clone();
    let mut power = one.clone();
    let mut ck = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..=order {
        power = compose(&power, &dd, order)?;
        ck *= (2 * k - 1) as f64 / (2 * k) as f64;
        let size = (0..=order).map(|j| power.norm(j)).collect::<Result<Vec<_>>>()?.into_iter().sum::<f64>() * ck;
        if size == 0.0 {
            break;
        }
        if size > last {
            return Err(Error::precondition(format!("binomial terms grow at k = {k}: {size:.3e} > {last:.3e}")));
        }
        last = size;
        s = s.add(&power.scale(C64::new(ck, 0.0)))?;
    }
    let a = compose(&p0, &pi, order)?.add(&compose(&one.sub(&p0)?, &one.sub(&pi)?, order)?)?;
    compose(&a, &s, order)
}

/// Coefficient norms of `u # pi # u^dagger - pi0` and `u^dagger # u - 1`.
pub fn intertwiner_defects(u: &HSeries, pi: &HSeries, pi0: &MatrixSymbol, order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = pi.rows();
    let ud = u.adjoint();
    let conj = compose(&compose(u, &pi.pad(order), order)?, &ud, order)?;
    let tw = conj.sub(&HSeries::from_leading(pi0.clone(), order))?;
    let unit = compose(&ud, u, order)?.sub(&HSeries::identity(pi.grid(), n, order))?;
    let a = (0..=order).map(|j| tw.norm(j)).collect::<Result<_>>()?;
    let b = (0..=order).map(|j| unit.norm(j)).collect::<Result<_>>()?;
    Ok((a, b))
}
