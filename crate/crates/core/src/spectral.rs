//! Line transforms on flattened row-major arrays: batched FFTs along one axis,
//! dense operators along one axis, and Chebyshev-Gauss-Lobatto helpers.

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

type Plans = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plan_cache() -> &'static Mutex<HashMap<usize, Plans>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Plans>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Forward and inverse FFT plans of length `n`, shared process-wide.
pub fn fft_plans(n: usize) -> Plans {
    let mut cache = plan_cache().lock().expect("fft plan cache poisoned");
    cache
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

/// Angular wavenumbers in FFT order for `n` samples over a period `length`.
/// The Nyquist entry carries the negative frequency `-n/2`.
pub fn wavenumbers(n: usize, length: f64) -> Vec<f64> {
    let dk = 2.0 * PI / length;
    (0..n)
        .map(|j| {
            let m = if j < n / 2 { j as i64 } else { j as i64 - n as i64 };
            m as f64 * dk
        })
        .collect()
}

/// Row-major strides for `dims`.
pub fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for a in (0..dims.len().saturating_sub(1)).rev() {
        s[a] = s[a + 1] * dims[a + 1];
    }
    s
}

/// Decode a flat index into a multi-index.
pub fn unravel(mut flat: usize, dims: &[usize], out: &mut [usize]) {
    for a in (0..dims.len()).rev() {
        out[a] = flat % dims[a];
        flat /= dims[a];
    }
}

const LINE_BATCH: usize = 512;

/// Gather every line along `axis` in batches, hand each batch to `f` as a
/// contiguous `[lines][n]` buffer together with the flat index of each line's
/// first element, then scatter the result back.
pub fn map_line_batches<F>(data: &mut [C64], dims: &[usize], axis: usize, mut f: F)
where
    F: FnMut(&[usize], &mut [C64]),
{
    let n = dims[axis];
    let st = strides(dims);
    let stride = st[axis];
    let outer: usize = dims[..axis].iter().product();
    let block = n * stride;
    let mut starts = Vec::with_capacity(LINE_BATCH);
    let mut buf = vec![C64::new(0.0, 0.0); LINE_BATCH * n];
    for o in 0..outer {
        let base = o * block;
        let mut i0 = 0;
        while i0 < stride {
            let count = (stride - i0).min(LINE_BATCH);
            starts.clear();
            for l in 0..count {
                let s = base + i0 + l;
                starts.push(s);
                let line = &mut buf[l * n..(l + 1) * n];
                for (j, v) in line.iter_mut().enumerate() {
                    *v = data[s + j * stride];
                }
            }
            f(&starts, &mut buf[..count * n]);
            for l in 0..count {
                let s = starts[l];
                let line = &buf[l * n..(l + 1) * n];
                for (j, v) in line.iter().enumerate() {
                    data[s + j * stride] = *v;
                }
            }
            i0 += count;
        }
    }
}

/// In-place FFT along `axis`; the inverse is normalized by `1/n`.
pub fn fft_axis(data: &mut [C64], dims: &[usize], axis: usize, inverse: bool) {
    let n = dims[axis];
    let (fwd, inv) = fft_plans(n);
    let plan = if inverse { inv } else { fwd };
    let scale = 1.0 / n as f64;
    map_line_batches(data, dims, axis, |_, buf| {
        plan.process(buf);
        if inverse {
            for v in buf.iter_mut() {
                *v *= scale;
            }
        }
    });
}

/// Apply a per-line Fourier multiplier along `axis`: forward FFT, multiply the
/// entry with wavenumber index `j` of the line starting at flat index `s` by
/// `mult(s, j)`, inverse FFT.
pub fn fourier_multiply_axis<M>(data: &mut [C64], dims: &[usize], axis: usize, mult: M)
where
    M: Fn(usize, usize) -> C64,
{
    let n = dims[axis];
    let (fwd, inv) = fft_plans(n);
    let scale = 1.0 / n as f64;
    map_line_batches(data, dims, axis, |starts, buf| {
        fwd.process(buf);
        for (l, &s) in starts.iter().enumerate() {
            for j in 0..n {
                buf[l * n + j] *= mult(s, j) * scale;
            }
        }
        inv.process(buf);
    });
}

/// Spectral derivative of the given order along a periodic axis of period `length`.
pub fn periodic_derivative(data: &mut [C64], dims: &[usize], axis: usize, length: f64, order: usize) {
    if order == 0 {
        return;
    }
    let n = dims[axis];
    let k = wavenumbers(n, length);
    let factors: Vec<C64> = (0..n)
        .map(|j| {
            if order % 2 == 1 && n % 2 == 0 && j == n / 2 {
                C64::new(0.0, 0.0)
            } else {
                C64::new(0.0, k[j]).powu(order as u32)
            }
        })
        .collect();
    fourier_multiply_axis(data, dims, axis, |_, j| factors[j]);
}

/// Apply a dense real `n x n` operator (row-major) along `axis`.
pub fn apply_matrix_axis(data: &mut [C64], dims: &[usize], axis: usize, mat: &[f64]) {
    let n = dims[axis];
    let mut tmp = vec![C64::new(0.0, 0.0); n];
    map_line_batches(data, dims, axis, |starts, buf| {
        for l in 0..starts.len() {
            let line = &mut buf[l * n..(l + 1) * n];
            for (i, t) in tmp.iter_mut().enumerate() {
                let row = &mat[i * n..(i + 1) * n];
                let mut acc = C64::new(0.0, 0.0);
                for (a, v) in row.iter().zip(line.iter()) {
                    acc += *v * *a;
                }
                *t = acc;
            }
            line.copy_from_slice(&tmp);
        }
    });
}

/// Chebyshev-Gauss-Lobatto nodes on `[min, max]`, ascending.
pub fn chebyshev_nodes(min: f64, max: f64, n: usize) -> Vec<f64> {
    let mid = 0.5 * (min + max);
    let half = 0.5 * (max - min);
    (0..n)
        .map(|j| mid - half * (PI * j as f64 / (n - 1) as f64).cos())
        .collect()
}

/// Barycentric weights of the Chebyshev-Gauss-Lobatto nodes.
pub fn chebyshev_weights(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n - 1 {
                0.5 * s
            } else {
                s
            }
        })
        .collect()
}

/// First-derivative matrix on the given nodes with barycentric weights `w`
/// (row-major). Diagonal entries use the negative-sum trick.
pub fn differentiation_matrix(nodes: &[f64], w: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = (w[j] / w[i]) / (nodes[i] - nodes[j]);
                d[i * n + j] = v;
                diag -= v;
            }
        }
        d[i * n + i] = diag;
    }
    d
}

/// Barycentric interpolation coefficients for evaluating at `x`: returns
/// `c` with `f(x) = sum_j c_j f_j`.
pub fn barycentric_coefficients(nodes: &[f64], w: &[f64], x: f64) -> Vec<f64> {
    let n = nodes.len();
    let mut c = vec![0.0; n];
    for j in 0..n {
        if (x - nodes[j]).abs() < 1e-14 * (1.0 + x.abs()) {
            c[j] = 1.0;
            return c;
        }
    }
    let mut denom = 0.0;
    for j in 0..n {
        c[j] = w[j] / (x - nodes[j]);
        denom += c[j];
    }
    for v in c.iter_mut() {
        *v /= denom;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavenumbers_have_fft_order() {
        let k = wavenumbers(8, 2.0 * PI);
        assert_eq!(k, vec![0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0]);
    }

    #[test]
    fn periodic_derivative_of_sine() {
        let n = 32;
        let xs: Vec<f64> = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
        let mut data: Vec<C64> = xs.iter().map(|x| C64::new(x.sin(), 0.0)).collect();
        periodic_derivative(&mut data, &[n], 0, 2.0 * PI, 1);
        for (v, x) in data.iter().zip(&xs) {
            assert!((v.re - x.cos()).abs() < 1e-13 && v.im.abs() < 1e-13);
        }
    }

    #[test]
    fn derivative_along_middle_axis() {
        let dims = [3, 16, 2];
        let mut data = vec![C64::new(0.0, 0.0); 96];
        let st = strides(&dims);
        for a in 0..3 {
            for j in 0..16 {
                for c in 0..2 {
                    let x = 2.0 * PI * j as f64 / 16.0;
                    data[a * st[0] + j * st[1] + c] = C64::new((x * (c + 1) as f64).cos() * a as f64, 0.0);
                }
            }
        }
        periodic_derivative(&mut data, &dims, 1, 2.0 * PI, 2);
        for a in 0..3 {
            for j in 0..16 {
                for c in 0..2 {
                    let x = 2.0 * PI * j as f64 / 16.0;
                    let m = (c + 1) as f64;
                    let expect = -m * m * (x * m).cos() * a as f64;
                    assert!((data[a * st[0] + j * st[1] + c].re - expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn chebyshev_matrix_is_exact_on_cubics() {
        let nodes = chebyshev_nodes(-2.0, 3.0, 8);
        let w = chebyshev_weights(8);
        let d = differentiation_matrix(&nodes, &w);
        let mut f: Vec<C64> = nodes.iter().map(|x| C64::new(x * x * x - x, 0.0)).collect();
        apply_matrix_axis(&mut f, &[8], 0, &d);
        for (v, x) in f.iter().zip(&nodes) {
            assert!((v.re - (3.0 * x * x - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn barycentric_reproduces_polynomials() {
        let nodes = chebyshev_nodes(-1.0, 1.0, 8);
        let w = chebyshev_weights(8);
        let c = barycentric_coefficients(&nodes, &w, 0.3);
        let v: f64 = c.iter().zip(&nodes).map(|(c, x)| c * x.powi(5)).sum();
        assert!((v - 0.3f64.powi(5)).abs() < 1e-14);
    }
}
