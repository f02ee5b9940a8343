//! Truncated h-power series of matrix-valued phase-space symbols.
//!
//! Symbols are sampled on a [`PhaseGrid`]: periodic x-axes differentiated by
//! FFT and xi-axes that are either periodic or Chebyshev-Gauss-Lobatto (the
//! latter is exact for the polynomial-in-xi symbols produced by kinetic terms).
//!
//! ```
//! use magneto_bo::symbols::{moyal_product, HSeries, MatrixSymbol, PhaseGrid};
//! use num_complex::Complex64 as C64;
//! use std::sync::Arc;
//!
//! let grid = Arc::new(PhaseGrid::uniform(1, (-3.2, 3.2), 16, 2.0, 8).unwrap());
//! let x = HSeries::from_leading(MatrixSymbol::scalar_fn(&grid, |x, _| C64::new(x[0].sin(), 0.0)), 2);
//! let xi = HSeries::from_leading(MatrixSymbol::scalar_fn(&grid, |_, xi| C64::new(xi[0], 0.0)), 2);
//! let comm = moyal_product(&x, &xi, 2).unwrap().sub(&moyal_product(&xi, &x, 2).unwrap()).unwrap();
//! assert!(comm.coeff(0).max_abs() < 1e-12);
//! ```

mod grid;
mod series;
mod symbol;
mod weyl;

pub use grid::{Axis, AxisKind, PhaseGrid};
pub use series::{compose, compose_power, moyal_product, multi_indices, HSeries};
pub use symbol::{trig_weights, zero_product, ContourChart, MatrixSymbol, Var, MAX_DERIVATIVE_ORDER, MAX_TRUNCATION};
pub use weyl::weyl_apply;
