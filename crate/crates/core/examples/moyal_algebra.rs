//! Moyal products of matrix symbols: unit, canonical commutator, adjoint rule
//! and associativity through second order in h.

use magneto_bo::symbols::{compose, moyal_product, HSeries, MatrixSymbol, PhaseGrid};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;
use std::sync::Arc;

fn largest(s: &HSeries) -> f64 {
    (0..=s.order()).map(|j| s.coeff(j).max_abs()).fold(0.0, f64::max)
}

fn main() -> magneto_bo::Result<()> {
    let grid = Arc::new(PhaseGrid::uniform(1, (-PI, PI), 16, 2.0, 8)?);
    let sym = |f: fn(f64, f64) -> [f64; 4]| {
        let s = MatrixSymbol::from_fn(&grid, 2, 2, |x, xi, out| {
            for (o, v) in out.iter_mut().zip(f(x[0], xi[0])) {
                *o = C64::new(v, 0.0);
            }
        });
        HSeries::from_leading(s, 2)
    };
    let a = sym(|x, xi| [xi * xi + x.cos(), 0.3 * x.sin(), 0.3 * x.sin(), xi * xi + 1.0]);
    let b = sym(|x, xi| [xi, x.cos(), x.cos(), -xi]);
    let c = sym(|x, xi| [(2.0 * x).sin(), xi * x.cos(), 0.0, 1.0]);

    let ab = compose(&a, &b, 2)?;
    println!("Op(a)Op(b): sup of h^0, h^1, h^2 coefficients {:?}", (0..=2).map(|j| ab.coeff(j).max_abs()).collect::<Vec<_>>());

    let one = HSeries::identity(&grid, 2, 2);
    println!("unit defect            {:.2e}", largest(&moyal_product(&one, &a, 2)?.sub(&a)?));
    let adj = moyal_product(&a, &b, 2)?.adjoint().sub(&moyal_product(&b.adjoint(), &a.adjoint(), 2)?)?;
    println!("adjoint rule defect    {:.2e}", largest(&adj));
    let left = moyal_product(&moyal_product(&a, &b, 2)?, &c, 2)?;
    let right = moyal_product(&a, &moyal_product(&b, &c, 2)?, 2)?;
    println!("associativity defect   {:.2e}", largest(&left.sub(&right)?));

    let x = HSeries::from_leading(MatrixSymbol::scalar_fn(&grid, |x, _| C64::new(x[0].sin(), 0.0)), 2);
    let xi = HSeries::from_leading(MatrixSymbol::scalar_fn(&grid, |_, xi| C64::new(xi[0], 0.0)), 2);
    let comm = compose(&xi, &x, 2)?.sub(&compose(&x, &xi, 2)?)?;
    let (xs, _) = grid.coords(3);
    println!("[Op(xi), Op(sin x)] at x = {:.3}: h-coefficient {} (expect -i cos x = {:.6}i)", xs[0], comm.coeff(1).block(3)[0], -xs[0].cos());
    Ok(())
}
