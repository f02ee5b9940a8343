use super::eigs::{lowest_eigenpairs, EigenOptions};
use super::potential::Potential;
use crate::error::{Error, Result};
use crate::linalg::ZERO;
use crate::spectral;
use crate::symbols::{Axis, AxisKind};
use num_complex::Complex64 as C64;

/// One nucleus and one electron in a constant perpendicular field, written in
/// center-of-mass `x` and relative `y = r_electron - r_nucleus` coordinates.
///
/// Units: electron mass 1, total mass `M = 1/h^2`, nuclear mass `M - 1`.
/// Kinetic energies are `(D - qA)^2 / mass` and `A(v) = b (-v_2, v_1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairModel {
    pub d: usize,
    pub h: f64,
    pub electron_charge: f64,
    pub nucleus_charge: f64,
    pub field: f64,
    /// `V_12(y)`.
    pub binding: Potential,
    /// `V_1` acting on the nucleus.
    pub nucleus_potential: Potential,
    /// `V_2` acting on the electron.
    pub electron_potential: Potential,
    pub y_axes: Vec<Axis>,
    pub allow_non_neutral: bool,
}

impl PairModel {
    pub fn validate(&self) -> Result<()> {
        if self.d != 1 && self.d != 2 {
            return Err(Error::config(format!("nuclear dimension {} not in {{1, 2}}", self.d)));
        }
        if self.field < 0.0 {
            return Err(Error::config("field strength b must be non-negative"));
        }
        if self.field > 0.0 && self.d != 2 {
            return Err(Error::config("a constant field b > 0 needs d = 2"));
        }
        if !(self.h > 0.0 && self.h < 1.0) {
            return Err(Error::config(format!("h = {} must lie in (0, 1) so the nuclear mass is positive", self.h)));
        }
        if !self.is_neutral() && !self.allow_non_neutral {
            return Err(Error::config(format!(
                "charge imbalance: nucleus {} + electron {} != 0 (set allow_non_neutral for control runs)",
                self.nucleus_charge, self.electron_charge
            )));
        }
        for (name, v) in [("nucleus", &self.nucleus_potential), ("electron", &self.electron_potential)] {
            if !v.has_bounded_derivatives() {
                return Err(Error::config(format!("external {name} potential must have bounded derivatives")));
            }
        }
        if self.y_axes.len() != self.d || self.y_axes.iter().any(|a| a.kind != AxisKind::Periodic) {
            return Err(Error::config("electronic grid needs one periodic axis per nuclear dimension"));
        }
        Ok(())
    }

    pub fn is_neutral(&self) -> bool {
        (self.nucleus_charge + self.electron_charge).abs() <= 1e-14 * self.electron_charge.abs().max(1.0)
    }

    pub fn total_mass(&self) -> f64 {
        1.0 / (self.h * self.h)
    }

    pub fn nuclear_mass(&self) -> f64 {
        self.total_mass() - 1.0
    }

    /// `1 / m`, the coefficient of the relative-momentum correction.
    pub fn kappa(&self) -> f64 {
        let h2 = self.h * self.h;
        h2 / (1.0 - h2)
    }

    /// `A(r) = b (-r_2, r_1)`; zero in one dimension.
    pub fn vector_potential(&self, r: &[f64]) -> Vec<f64> {
        if self.d == 2 {
            vec![-self.field * r[1], self.field * r[0]]
        } else {
            vec![0.0; r.len()]
        }
    }

    /// True when the electronic problem does not depend on `x`.
    pub fn is_uniform(&self) -> bool {
        self.nucleus_potential.is_constant() && self.electron_potential.is_constant()
    }

    pub fn y_dims(&self) -> Vec<usize> {
        self.y_axes.iter().map(|a| a.points).collect()
    }

    pub fn y_point_count(&self) -> usize {
        self.y_dims().iter().product()
    }

    /// Cell volume of the electronic grid.
    pub fn y_weight(&self) -> f64 {
        self.y_axes.iter().map(|a| a.spacing()).product()
    }

    pub fn y_nodes(&self) -> Vec<Vec<f64>> {
        self.y_axes.iter().map(|a| a.nodes()).collect()
    }

    /// Coordinates of every electronic grid point, flattened.
    pub fn y_points(&self) -> Vec<Vec<f64>> {
        let nodes = self.y_nodes();
        let dims = self.y_dims();
        let mut idx = vec![0usize; self.d];
        (0..self.y_point_count())
            .map(|p| {
                spectral::unravel(p, &dims, &mut idx);
                (0..self.d).map(|a| nodes[a][idx[a]]).collect()
            })
            .collect()
    }

    /// `V_12(y) + V_1(x) + V_2(x + y)` on the electronic grid.
    pub fn electronic_potential(&self, x: &[f64]) -> Vec<f64> {
        let v1 = self.nucleus_potential.value(x);
        self.y_points()
            .iter()
            .map(|y| {
                let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
                self.binding.value(y) + v1 + self.electron_potential.value(&xy)
            })
            .collect()
    }

    /// `sum_c (D_{y_c} - q A_c(y))^2 psi` by per-line Fourier multipliers.
    pub fn magnetic_kinetic(&self, psi: &[C64], q: f64) -> Vec<C64> {
        let dims = self.y_dims();
        let nodes = self.y_nodes();
        let mut out = vec![ZERO; psi.len()];
        let mut buf = psi.to_vec();
        for c in 0..self.d {
            buf.copy_from_slice(psi);
            let k = self.y_axes[c].wavenumbers();
            let mult = |s: usize, j: usize| {
                let shift = -q * line_vector_potential(self.field, self.d, c, s, &dims, &nodes);
                C64::new((k[j] + shift).powi(2), 0.0)
            };
            spectral::fourier_multiply_axis(&mut buf, &dims, c, mult);
            out.iter_mut().zip(&buf).for_each(|(o, b)| *o += b);
        }
        out
    }

    /// `P_e(x) psi` given the potential from [`electronic_potential`](Self::electronic_potential).
    pub fn apply_electronic(&self, potential: &[f64], psi: &[C64]) -> Vec<C64> {
        let mut out = self.magnetic_kinetic(psi, self.electron_charge);
        out.iter_mut().zip(psi).zip(potential).for_each(|((o, p), v)| *o += p * *v);
        out
    }

    /// Lowest `count` eigenpairs of `P_e(x)`, vectors normalized in `L^2(dy)`.
    pub fn electronic_eigensolve(&self, x: &[f64], count: usize) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
        let pot = self.electronic_potential(x);
        self.eigensolve(|v| self.apply_electronic(&pot, v), count)
    }

    /// Lowest `count` eigenpairs of the gauged-frame fiber operator seen by a
    /// nuclear plane wave of momentum `xi`:
    /// `(D_y - eA)^2 + kappa (D_y + eA)^2 + V - 4 h e xi . A(y)`.
    ///
    /// Its ground state is the electronic state polarized by the motion.
    pub fn dressed_eigensolve(&self, x: &[f64], xi: &[f64], count: usize) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
        if xi.len() != self.d {
            return Err(Error::structural("xi", format!("{} components for d = {}", xi.len(), self.d)));
        }
        let e = self.electron_charge;
        let kappa = self.kappa();
        let pot: Vec<f64> = self
            .electronic_potential(x)
            .iter()
            .zip(self.y_points())
            .map(|(v, y)| {
                let a = self.vector_potential(&y);
                v - 4.0 * self.h * e * a.iter().zip(xi).map(|(a, k)| a * k).sum::<f64>()
            })
            .collect();
        let apply = |v: &[C64]| {
            let mut out = self.magnetic_kinetic(v, e);
            let back = self.magnetic_kinetic(v, -e);
            out.iter_mut().zip(&back).zip(v.iter().zip(&pot)).for_each(|((o, b), (p, w))| *o += kappa * b + p * *w);
            out
        };
        self.eigensolve(apply, count)
    }

    fn eigensolve<F: Fn(&[C64]) -> Vec<C64>>(&self, op: F, count: usize) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
        let n = self.y_point_count();
        let apply = |v: &[C64], out: &mut [C64]| out.copy_from_slice(&op(v));
        let mut opts = EigenOptions::lowest(count);
        opts.tol = 1e-9;
        let res = lowest_eigenpairs(apply, n, &opts)?;
        if let Some(r) = res.residuals.iter().find(|r| **r > 1e-8) {
            return Err(Error::precondition(format!("electronic eigen-residual {r:e} above 1e-8")));
        }
        let s = 1.0 / self.y_weight().sqrt();
        let vectors = res.vectors.into_iter().map(|v| v.into_iter().map(|c| c * s).collect()).collect();
        Ok((res.values, vectors))
    }

    /// Change of the lowest `count` levels when the electronic grid is refined twofold.
    pub fn resolution_shift(&self, x: &[f64], count: usize) -> Result<f64> {
        let (coarse, _) = self.electronic_eigensolve(x, count)?;
        let mut fine = self.clone();
        fine.y_axes = self
            .y_axes
            .iter()
            .map(|a| Axis::periodic(a.min, a.max, 2 * a.points))
            .collect::<Result<_>>()?;
        let (refined, _) = fine.electronic_eigensolve(x, count)?;
        Ok(coarse.iter().zip(&refined).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }
}

/// `A_c(y)` along a line in direction `c` starting at flat index `s`; the value
/// only depends on the transverse coordinate, so it is constant on the line.
pub(crate) fn line_vector_potential(b: f64, d: usize, c: usize, s: usize, dims: &[usize], nodes: &[Vec<f64>]) -> f64 {
    if d != 2 || b == 0.0 {
        return 0.0;
    }
    let mut idx = [0usize; 2];
    spectral::unravel(s, dims, &mut idx);
    match c {
        0 => -b * nodes[1][idx[1]],
        _ => b * nodes[0][idx[0]],
    }
}

/// Least-squares exponential decay rate of `|u|^2 ~ e^{-2 alpha |y|}` over the
/// points where `|y|` exceeds `r_min` and the density is above round-off.
pub fn decay_rate(points: &[Vec<f64>], u: &[C64], r_min: f64) -> Option<f64> {
    let peak = u.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    let (mut sx, mut sy, mut sxx, mut sxy, mut n) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (y, v) in points.iter().zip(u) {
        let r = y.iter().map(|a| a * a).sum::<f64>().sqrt();
        let dens = v.norm_sqr();
        if r < r_min || dens < 1e-24 * peak {
            continue;
        }
        let l = dens.ln();
        sx += r;
        sy += l;
        sxx += r * r;
        sxy += r * l;
        n += 1.0;
    }
    if n < 3.0 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    Some(-slope / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(b: f64, ny: usize) -> PairModel {
        PairModel {
            d: 2,
            h: 0.5,
            electron_charge: 1.0,
            nucleus_charge: -1.0,
            field: b,
            binding: Potential::Harmonic { k: 1.0 },
            nucleus_potential: Potential::Zero,
            electron_potential: Potential::Zero,
            y_axes: vec![Axis::periodic(-8.0, 8.0, ny).unwrap(), Axis::periodic(-8.0, 8.0, ny).unwrap()],
            allow_non_neutral: false,
        }
    }

    #[test]
    fn harmonic_electron_levels() {
        // D^2 + |y|^2/2 has levels sqrt(2) (n_1 + n_2 + 1)
        let m = pair(0.0, 32);
        m.validate().unwrap();
        let (e, _) = m.electronic_eigensolve(&[0.0, 0.0], 3).unwrap();
        let w = 2f64.sqrt();
        assert!((e[0] - w).abs() < 1e-6, "{}", e[0]);
        assert!((e[1] - 2.0 * w).abs() < 1e-6);
        assert!((e[2] - 2.0 * w).abs() < 1e-6);
    }

    #[test]
    fn charge_imbalance_rejected() {
        let mut m = pair(1.0, 16);
        m.nucleus_charge = 1.0;
        assert!(m.validate().is_err());
        m.allow_non_neutral = true;
        assert!(m.validate().is_ok());
    }

    #[test]
    fn field_needs_plane() {
        let mut m = pair(1.0, 16);
        m.d = 1;
        m.y_axes.truncate(1);
        assert!(matches!(m.validate(), Err(Error::Config(_))));
    }
}
