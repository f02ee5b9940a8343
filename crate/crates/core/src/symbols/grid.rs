use crate::error::{Error, Result};
use crate::spectral;
use std::f64::consts::PI;

/// How samples along an axis are placed and differentiated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AxisKind {
    /// Uniform samples on a period, Fourier differentiation.
    Periodic,
    /// Chebyshev-Gauss-Lobatto samples, exact for polynomials of degree below the point count.
    Chebyshev,
}

/// One sampled coordinate axis.
#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub kind: AxisKind,
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

fn check_points(points: usize, what: &str) -> Result<()> {
    if points < 8 || !points.is_power_of_two() {
        return Err(Error::structural(
            what,
            format!("point count {points} must be a power of two and at least 8"),
        ));
    }
    Ok(())
}

impl Axis {
    pub fn periodic(min: f64, max: f64, points: usize) -> Result<Axis> {
        check_points(points, "periodic axis")?;
        if !(max > min) {
            return Err(Error::structural("periodic axis", format!("empty range [{min}, {max})")));
        }
        Ok(Axis { kind: AxisKind::Periodic, min, max, points })
    }

    pub fn chebyshev(min: f64, max: f64, points: usize) -> Result<Axis> {
        check_points(points, "chebyshev axis")?;
        if !(max > min) {
            return Err(Error::structural("chebyshev axis", format!("empty range [{min}, {max}]")));
        }
        Ok(Axis { kind: AxisKind::Chebyshev, min, max, points })
    }

    /// Period for periodic axes, interval length otherwise.
    pub fn length(&self) -> f64 {
        self.max - self.min
    }

    /// Uniform spacing for periodic axes, smallest gap for Chebyshev axes.
    pub fn spacing(&self) -> f64 {
        match self.kind {
            AxisKind::Periodic => self.length() / self.points as f64,
            AxisKind::Chebyshev => {
                let n = self.nodes();
                n[1] - n[0]
            }
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        match self.kind {
            AxisKind::Periodic => {
                let dx = self.length() / self.points as f64;
                (0..self.points).map(|j| self.min + j as f64 * dx).collect()
            }
            AxisKind::Chebyshev => spectral::chebyshev_nodes(self.min, self.max, self.points),
        }
    }

    /// Wavenumbers of a periodic axis in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        spectral::wavenumbers(self.points, self.length())
    }
}

/// Phase-space sampling box `x in R^d`, `xi in R^d`.
///
/// Flattened point order is row-major over `(x_1..x_d, xi_1..xi_d)`.
#[derive(Clone, Debug)]
pub struct PhaseGrid {
    d: usize,
    x: Vec<Axis>,
    xi: Vec<Axis>,
    nodes: Vec<Vec<f64>>,
    cheb: Vec<Option<Vec<f64>>>,
    cheb_weights: Vec<Option<Vec<f64>>>,
}

impl PartialEq for PhaseGrid {
    fn eq(&self, other: &Self) -> bool {
        self.x == other.x && self.xi == other.xi
    }
}

impl PhaseGrid {
    pub fn new(x: Vec<Axis>, xi: Vec<Axis>) -> Result<PhaseGrid> {
        let d = x.len();
        if !(d == 1 || d == 2) || xi.len() != d {
            return Err(Error::structural(
                "dimension",
                format!("need d in {{1, 2}} x-axes and as many xi-axes, got {} and {}", x.len(), xi.len()),
            ));
        }
        if let Some(a) = x.iter().find(|a| a.kind != AxisKind::Periodic) {
            return Err(Error::structural("x", format!("x-axes must be periodic, got {:?}", a.kind)));
        }
        let mut nodes = Vec::new();
        let mut cheb = Vec::new();
        let mut cheb_weights = Vec::new();
        for a in x.iter().chain(xi.iter()) {
            let n = a.nodes();
            match a.kind {
                AxisKind::Chebyshev => {
                    let w = spectral::chebyshev_weights(a.points);
                    cheb.push(Some(spectral::differentiation_matrix(&n, &w)));
                    cheb_weights.push(Some(w));
                }
                AxisKind::Periodic => {
                    cheb.push(None);
                    cheb_weights.push(None);
                }
            }
            nodes.push(n);
        }
        Ok(PhaseGrid { d, x, xi, nodes, cheb, cheb_weights })
    }

    /// Convenience constructor: identical periodic x-axes and Chebyshev xi-axes.
    pub fn uniform(d: usize, x_range: (f64, f64), x_points: usize, xi_max: f64, xi_points: usize) -> Result<PhaseGrid> {
        let x = (0..d).map(|_| Axis::periodic(x_range.0, x_range.1, x_points)).collect::<Result<Vec<_>>>()?;
        let xi = (0..d).map(|_| Axis::chebyshev(-xi_max, xi_max, xi_points)).collect::<Result<Vec<_>>>()?;
        PhaseGrid::new(x, xi)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn x_axes(&self) -> &[Axis] {
        &self.x
    }

    pub fn xi_axes(&self) -> &[Axis] {
        &self.xi
    }

    /// Axis `a` in the flattened order (x-axes first).
    pub fn axis(&self, a: usize) -> &Axis {
        if a < self.d {
            &self.x[a]
        } else {
            &self.xi[a - self.d]
        }
    }

    pub fn nodes(&self, a: usize) -> &[f64] {
        &self.nodes[a]
    }

    pub fn chebyshev_matrix(&self, a: usize) -> Option<&[f64]> {
        self.cheb[a].as_deref()
    }

    pub fn chebyshev_weights(&self, a: usize) -> Option<&[f64]> {
        self.cheb_weights[a].as_deref()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.x.iter().chain(self.xi.iter()).map(|a| a.points).collect()
    }

    pub fn x_dims(&self) -> Vec<usize> {
        self.x.iter().map(|a| a.points).collect()
    }

    pub fn point_count(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn x_point_count(&self) -> usize {
        self.x_dims().iter().product()
    }

    pub fn xi_point_count(&self) -> usize {
        self.xi.iter().map(|a| a.points).product()
    }

    /// Coordinates `(x, xi)` of flat point `p`.
    pub fn coords(&self, p: usize) -> (Vec<f64>, Vec<f64>) {
        let dims = self.dims();
        let mut idx = vec![0; dims.len()];
        spectral::unravel(p, &dims, &mut idx);
        let x = (0..self.d).map(|a| self.nodes[a][idx[a]]).collect();
        let xi = (0..self.d).map(|a| self.nodes[self.d + a][idx[self.d + a]]).collect();
        (x, xi)
    }

    /// Index of the x-point containing flat point `p`.
    pub fn x_index(&self, p: usize) -> usize {
        p / self.xi_point_count()
    }

    /// Coordinates of x-point `ix` (flat over the x-axes).
    pub fn x_coords(&self, ix: usize) -> Vec<f64> {
        let dims = self.x_dims();
        let mut idx = vec![0; self.d];
        spectral::unravel(ix, &dims, &mut idx);
        (0..self.d).map(|a| self.nodes[a][idx[a]]).collect()
    }

    /// Check that a box centered at `center` with half-widths `half` fits inside the x-box.
    pub fn contains_x_box(&self, center: &[f64], half: &[f64]) -> bool {
        self.x
            .iter()
            .zip(center.iter().zip(half))
            .all(|(a, (c, h))| c - h >= a.min && c + h <= a.max)
    }

    /// Angle of contour node `j` out of `m`.
    pub fn theta(j: usize, m: usize) -> f64 {
        2.0 * PI * j as f64 / m as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_power_of_two() {
        assert!(Axis::periodic(0.0, 1.0, 12).is_err());
        assert!(Axis::periodic(0.0, 1.0, 4).is_err());
        assert!(Axis::chebyshev(-1.0, 1.0, 16).is_ok());
    }

    #[test]
    fn coordinates_follow_row_major_order() {
        let g = PhaseGrid::uniform(1, (0.0, 8.0), 8, 2.0, 8).unwrap();
        let (x, xi) = g.coords(8 + 7);
        assert_eq!(x, vec![1.0]);
        assert!((xi[0] - 2.0).abs() < 1e-15);
        assert_eq!(g.x_index(15), 1);
    }

    #[test]
    fn x_axes_must_be_periodic() {
        let x = vec![Axis::chebyshev(-1.0, 1.0, 8).unwrap()];
        let xi = vec![Axis::chebyshev(-1.0, 1.0, 8).unwrap()];
        assert!(PhaseGrid::new(x, xi).is_err());
    }
}
