use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, ZERO};
use num_complex::Complex64 as C64;

/// Fiber Hamiltonians given directly as small hermitian matrices `V(x)`.
#[derive(Clone, Debug, PartialEq)]
pub enum MatrixKind {
    /// `R(theta) diag(a, a + gap) R(theta)^T` with `theta = mixing sin(k x_1)`
    /// and `a = level cos(k x_1)`.
    TwoLevel { gap: f64, mixing: f64, level: f64, wavenumber: f64 },
    /// `U diag(E_i + level cos(k x_1)) U^dagger` with a constant unitary `U`
    /// mixing the first two components by `angle`.
    ConstantFiber { energies: Vec<f64>, angle: f64, level: f64, wavenumber: f64 },
    /// `diag(0, gap cos(k x_1))`: the two levels cross where `cos(k x_1) = 0`.
    Crossing { gap: f64, wavenumber: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixModel {
    pub d: usize,
    pub kind: MatrixKind,
}

impl MatrixModel {
    pub fn new(d: usize, kind: MatrixKind) -> Result<MatrixModel> {
        if d != 1 && d != 2 {
            return Err(Error::config(format!("nuclear dimension {d} not in {{1, 2}}")));
        }
        match &kind {
            MatrixKind::TwoLevel { gap, .. } if *gap <= 0.0 => {
                return Err(Error::config("two-level gap must be positive"));
            }
            MatrixKind::ConstantFiber { energies, .. } if energies.len() < 2 => {
                return Err(Error::config("constant-fiber model needs at least two levels"));
            }
            _ => {}
        }
        Ok(MatrixModel { d, kind })
    }

    pub fn size(&self) -> usize {
        match &self.kind {
            MatrixKind::TwoLevel { .. } | MatrixKind::Crossing { .. } => 2,
            MatrixKind::ConstantFiber { energies, .. } => energies.len(),
        }
    }

    /// Eigenvectors do not depend on x.
    pub fn is_uniform(&self) -> bool {
        match &self.kind {
            MatrixKind::TwoLevel { mixing, .. } => *mixing == 0.0,
            MatrixKind::ConstantFiber { .. } => true,
            MatrixKind::Crossing { .. } => false,
        }
    }

    /// Row-major `V(x)`.
    pub fn potential(&self, x: &[f64]) -> Vec<C64> {
        let (vals, vecs) = self.closed_form(x);
        let n = self.size();
        let mut out = vec![ZERO; n * n];
        for (l, e) in vals.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    out[i * n + j] += vecs[l][i] * vecs[l][j].conj() * *e;
                }
            }
        }
        out
    }

    /// Ascending eigenvalues and orthonormal eigenvectors of `V(x)`, from the
    /// closed form, with a smooth choice of sign.
    pub fn eigen(&self, x: &[f64]) -> (Vec<f64>, Vec<Vec<C64>>) {
        let (vals, vecs) = self.closed_form(x);
        let mut order: Vec<usize> = (0..vals.len()).collect();
        order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
        (order.iter().map(|&i| vals[i]).collect(), order.iter().map(|&i| vecs[i].clone()).collect())
    }

    /// Same as [`eigen`](Self::eigen) but through a numerical diagonalization.
    pub fn eigen_numeric(&self, x: &[f64]) -> (Vec<f64>, Vec<Vec<C64>>) {
        let n = self.size();
        let (vals, vecs) = hermitian_eigen(&self.potential(x), n);
        (vals, (0..n).map(|c| (0..n).map(|i| vecs[(i, c)]).collect()).collect())
    }

    fn closed_form(&self, x: &[f64]) -> (Vec<f64>, Vec<Vec<C64>>) {
        let re = |v: f64| C64::new(v, 0.0);
        match &self.kind {
            &MatrixKind::TwoLevel { gap, mixing, level, wavenumber } => {
                let th = mixing * (wavenumber * x[0]).sin();
                let a = level * (wavenumber * x[0]).cos();
                let (s, c) = th.sin_cos();
                (vec![a, a + gap], vec![vec![re(c), re(s)], vec![re(-s), re(c)]])
            }
            MatrixKind::ConstantFiber { energies, angle, level, wavenumber } => {
                let n = energies.len();
                let shift = level * (wavenumber * x[0]).cos();
                let (s, c) = angle.sin_cos();
                let vecs = (0..n)
                    .map(|l| {
                        let mut v = vec![ZERO; n];
                        match l {
                            0 => {
                                v[0] = re(c);
                                v[1] = re(s);
                            }
                            1 => {
                                v[0] = re(-s);
                                v[1] = re(c);
                            }
                            _ => v[l] = re(1.0),
                        }
                        v
                    })
                    .collect();
                (energies.iter().map(|e| e + shift).collect(), vecs)
            }
            &MatrixKind::Crossing { gap, wavenumber } => {
                let e2 = gap * (wavenumber * x[0]).cos();
                (vec![0.0, e2], vec![vec![re(1.0), ZERO], vec![ZERO, re(1.0)]])
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_matches_numeric() {
        let models = [
            MatrixKind::TwoLevel { gap: 1.0, mixing: 0.6, level: 0.3, wavenumber: 0.5 },
            MatrixKind::ConstantFiber { energies: vec![0.0, 1.0, 2.5], angle: 0.4, level: 0.2, wavenumber: 1.0 },
            MatrixKind::Crossing { gap: 1.0, wavenumber: 0.5 },
        ];
        for kind in models {
            let m = MatrixModel::new(1, kind).unwrap();
            for &x in &[-2.0, 0.1, 1.7] {
                let (a, _) = m.eigen(&[x]);
                let (b, _) = m.eigen_numeric(&[x]);
                for (u, v) in a.iter().zip(&b) {
                    assert!((u - v).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn eigenvectors_diagonalize() {
        let m = MatrixModel::new(1, MatrixKind::TwoLevel { gap: 1.0, mixing: 0.6, level: 0.3, wavenumber: 0.5 }).unwrap();
        let x = [0.7];
        let v = m.potential(&x);
        let (vals, vecs) = m.eigen(&x);
        for (e, u) in vals.iter().zip(&vecs) {
            for i in 0..2 {
                let vu: C64 = (0..2).map(|j| v[i * 2 + j] * u[j]).sum();
                assert!((vu - u[i] * *e).norm() < 1e-14);
            }
        }
    }
}
