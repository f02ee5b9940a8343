use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, ZERO};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct EigenOptions {
    pub count: usize,
    pub tol: f64,
    pub max_restarts: usize,
    /// Largest subspace before a restart; 0 picks a default from `count`.
    pub basis_limit: usize,
    pub seed: u64,
}

impl EigenOptions {
    pub fn lowest(count: usize) -> EigenOptions {
        EigenOptions { count, tol: 1e-9, max_restarts: 400, basis_limit: 0, seed: 17 }
    }
}

#[derive(Clone, Debug)]
pub struct EigenResult {
    pub values: Vec<f64>,
    /// Euclidean-normalized eigenvectors.
    pub vectors: Vec<Vec<C64>>,
    pub residuals: Vec<f64>,
    pub matvecs: usize,
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Orthogonalize `v` against `basis` twice and normalize. Returns false if
/// nothing is left.
fn orthonormalize(v: &mut [C64], basis: &[Vec<C64>]) -> bool {
    let before = norm(v);
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, v);
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
        }
    }
    let nv = norm(v);
    if nv <= 1e-10 * before.max(1e-300) {
        return false;
    }
    v.iter_mut().for_each(|a| *a /= nv);
    true
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()
}

/// Lowest eigenpairs of a hermitian operator given only through `apply`.
///
/// Block Krylov expansion with full reorthogonalization and thick restarts:
/// the subspace grows by applying the operator to the newest block, the
/// Rayleigh-Ritz problem is solved explicitly, and a restart keeps the wanted
/// Ritz vectors plus the residual block as continuation. The block size equals
/// the requested count, so degenerate clusters up to that size are resolved.
pub fn lowest_eigenpairs<A>(apply: A, n: usize, opts: &EigenOptions) -> Result<EigenResult>
where
    A: Fn(&[C64], &mut [C64]),
{
    let nev = opts.count;
    if nev == 0 || nev > n {
        return Err(Error::structural("fiber", format!("cannot compute {nev} eigenpairs of a size-{n} operator")));
    }
    let bs = nev;
    let limit = if opts.basis_limit > 0 { opts.basis_limit } else { (6 * nev + 40).max(3 * bs + 2 * nev) };
    let limit = limit.min(n);
    if limit == n || n <= 64 {
        return dense_eigenpairs(apply, n, nev);
    }
    let keep = (nev + bs).min(limit - bs);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(limit);
    let mut images: Vec<Vec<C64>> = Vec::with_capacity(limit);
    let mut block: Vec<Vec<C64>> = (0..bs).map(|_| random_vector(&mut rng, n)).collect();
    let mut matvecs = 0usize;
    let mut out = vec![ZERO; n];
    let mut last_res = vec![f64::INFINITY; nev];

    for _restart in 0..opts.max_restarts {
        while basis.len() < limit {
            let mut next = Vec::with_capacity(bs);
            for mut v in block.drain(..) {
                if basis.len() >= limit {
                    break;
                }
                if !orthonormalize(&mut v, &basis) {
                    v = random_vector(&mut rng, n);
                    if !orthonormalize(&mut v, &basis) {
                        continue;
                    }
                }
                apply(&v, &mut out);
                matvecs += 1;
                next.push(out.clone());
                basis.push(v);
                images.push(out.clone());
            }
            block = next;
            if block.is_empty() {
                break;
            }
        }
        let m = basis.len();
        let mut hmat = vec![ZERO; m * m];
        for i in 0..m {
            for j in i..m {
                let v = dot(&basis[i], &images[j]);
                hmat[i * m + j] = v;
                hmat[j * m + i] = v.conj();
            }
            hmat[i * m + i] = C64::new(hmat[i * m + i].re, 0.0);
        }
        let (theta, s) = hermitian_eigen(&hmat, m);
        let nk = keep.min(m);
        let ritz = combine(&basis, &s, nk);
        let aritz = combine(&images, &s, nk);
        let mut residual_vecs = Vec::with_capacity(nev);
        let mut converged = true;
        for i in 0..nev {
            let r: Vec<C64> = aritz[i].iter().zip(&ritz[i]).map(|(a, y)| a - y * theta[i]).collect();
            last_res[i] = norm(&r);
            if last_res[i] > opts.tol {
                converged = false;
            }
            residual_vecs.push(r);
        }
        if converged {
            return Ok(EigenResult {
                values: theta[..nev].to_vec(),
                vectors: ritz[..nev].to_vec(),
                residuals: last_res,
                matvecs,
            });
        }
        basis = ritz;
        images = aritz;
        block = residual_vecs.into_iter().take(bs).collect();
    }
    Err(Error::precondition(format!(
        "electronic eigensolver did not converge: residuals {:?} above {:e} after {matvecs} applications",
        last_res, opts.tol
    )))
}

fn combine(vs: &[Vec<C64>], s: &DMatrix<C64>, count: usize) -> Vec<Vec<C64>> {
    let n = vs[0].len();
    (0..count)
        .map(|c| {
            let mut y = vec![ZERO; n];
            for (i, v) in vs.iter().enumerate() {
                let w = s[(i, c)];
                y.iter_mut().zip(v).for_each(|(a, b)| *a += w * b);
            }
            y
        })
        .collect()
}

/// Dense reference: assemble the operator column by column and diagonalize.
pub fn dense_eigenpairs<A>(apply: A, n: usize, nev: usize) -> Result<EigenResult>
where
    A: Fn(&[C64], &mut [C64]),
{
    let mut mat = vec![ZERO; n * n];
    let mut e = vec![ZERO; n];
    let mut col = vec![ZERO; n];
    for j in 0..n {
        e[j] = C64::new(1.0, 0.0);
        apply(&e, &mut col);
        for i in 0..n {
            mat[i * n + j] = col[i];
        }
        e[j] = ZERO;
    }
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (mat[i * n + j] + mat[j * n + i].conj());
            mat[i * n + j] = v;
            mat[j * n + i] = v.conj();
        }
    }
    let (vals, vecs) = hermitian_eigen(&mat, n);
    let vectors: Vec<Vec<C64>> = (0..nev).map(|c| (0..n).map(|i| vecs[(i, c)]).collect()).collect();
    let residuals = vectors
        .iter()
        .zip(&vals)
        .map(|(v, &l)| {
            apply(v, &mut col);
            norm(&col.iter().zip(v).map(|(a, b)| a - b * l).collect::<Vec<_>>())
        })
        .collect();
    Ok(EigenResult { values: vals[..nev].to_vec(), vectors, residuals, matvecs: n })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> impl Fn(&[C64], &mut [C64]) {
        move |x: &[C64], y: &mut [C64]| {
            for i in 0..n {
                let l = x[(i + n - 1) % n];
                let r = x[(i + 1) % n];
                y[i] = 2.0 * x[i] - l - r + x[i] * (0.001 * i as f64);
            }
        }
    }

    #[test]
    fn iterative_matches_dense() {
        let n = 300;
        let it = lowest_eigenpairs(laplacian(n), n, &EigenOptions::lowest(4)).unwrap();
        let de = dense_eigenpairs(laplacian(n), n, 4).unwrap();
        for i in 0..4 {
            assert!((it.values[i] - de.values[i]).abs() < 1e-10, "{i}: {} vs {}", it.values[i], de.values[i]);
            assert!(it.residuals[i] <= 1e-9);
        }
    }

    #[test]
    fn vectors_orthonormal() {
        let n = 200;
        let it = lowest_eigenpairs(laplacian(n), n, &EigenOptions::lowest(3)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot(&it.vectors[i], &it.vectors[j]) - want).norm() < 1e-10);
            }
        }
    }
}
