//! Desk-scale physical models: matrix fibers for clean convergence studies and
//! the nucleus-electron pair in a constant field, together with the electronic
//! eigendata, the spectral gap record and the assembled full symbol `p`.

mod basis;
mod eigs;
mod matrix;
mod pair;
mod potential;
mod symbol;

pub use basis::{gap_report, FiberBasis, GapReport};
pub use eigs::{dense_eigenpairs, lowest_eigenpairs, EigenOptions, EigenResult};
pub use matrix::{MatrixKind, MatrixModel};
pub use pair::{decay_rate, PairModel};
pub use potential::Potential;
pub use symbol::{assemble_p_symbol, PSymbol};

use crate::error::Result;
use num_complex::Complex64 as C64;

#[derive(Clone, Debug, PartialEq)]
pub enum FiberModel {
    Matrix(MatrixModel),
    Pair(PairModel),
}

impl FiberModel {
    pub fn d(&self) -> usize {
        match self {
            FiberModel::Matrix(m) => m.d,
            FiberModel::Pair(p) => p.d,
        }
    }

    /// Length of one fiber vector: matrix size or electronic grid size.
    pub fn fiber_len(&self) -> usize {
        match self {
            FiberModel::Matrix(m) => m.size(),
            FiberModel::Pair(p) => p.y_point_count(),
        }
    }

    /// Quadrature weight of the fiber inner product.
    pub fn fiber_weight(&self) -> f64 {
        match self {
            FiberModel::Matrix(_) => 1.0,
            FiberModel::Pair(p) => p.y_weight(),
        }
    }

    pub fn is_uniform(&self) -> bool {
        match self {
            FiberModel::Matrix(m) => m.is_uniform(),
            FiberModel::Pair(p) => p.is_uniform(),
        }
    }

    /// Lowest `count` fiber eigenpairs at `x`.
    pub fn fiber_eigen(&self, x: &[f64], count: usize) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
        match self {
            FiberModel::Matrix(m) => {
                let (e, v) = m.eigen(x);
                Ok((e[..count.min(e.len())].to_vec(), v[..count.min(v.len())].to_vec()))
            }
            FiberModel::Pair(p) => p.electronic_eigensolve(x, count),
        }
    }

    /// Gauge factor `exp(-i e A(x) . y)`; identically one without a field.
    pub fn gauge_phase(&self, x: &[f64], y: &[f64]) -> C64 {
        match self {
            FiberModel::Matrix(_) => C64::new(1.0, 0.0),
            FiberModel::Pair(p) => {
                let a = p.vector_potential(x);
                let ay: f64 = a.iter().zip(y).map(|(u, v)| u * v).sum();
                C64::from_polar(1.0, -p.electron_charge * ay)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::Axis;

    #[test]
    fn gauge_phase_trivial_cases() {
        let p = PairModel {
            d: 2,
            h: 0.5,
            electron_charge: 1.0,
            nucleus_charge: -1.0,
            field: 1.0,
            binding: Potential::Harmonic { k: 1.0 },
            nucleus_potential: Potential::Zero,
            electron_potential: Potential::Zero,
            y_axes: vec![Axis::periodic(-4.0, 4.0, 16).unwrap(); 2],
            allow_non_neutral: false,
        };
        let m = FiberModel::Pair(p.clone());
        assert_eq!(m.gauge_phase(&[0.0, 0.0], &[1.0, 2.0]), C64::new(1.0, 0.0));
        let g = m.gauge_phase(&[0.3, -1.2], &[1.0, 2.0]);
        assert!((g.norm() - 1.0).abs() < 1e-15);
        assert!((g * g.conj() - 1.0).norm() < 1e-15);
        let mut flat = p;
        flat.field = 0.0;
        assert_eq!(FiberModel::Pair(flat).gauge_phase(&[0.3, -1.2], &[1.0, 2.0]), C64::new(1.0, 0.0));
    }
}
