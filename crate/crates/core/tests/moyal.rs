use magneto_bo::symbols::{compose, moyal_product, HSeries, MatrixSymbol, PhaseGrid};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

const ORDER: usize = 2;

fn grid() -> Arc<PhaseGrid> {
    Arc::new(PhaseGrid::uniform(1, (-PI, PI), 16, 2.0, 8).unwrap())
}

/// Entry `k` of a `2 x 2` symbol: a trigonometric polynomial of degree two in
/// `x` times a quadratic in `xi`, so triple products stay resolved.
#[derive(Clone, Debug)]
struct Entry {
    trig: [f64; 5],
    poly: [f64; 3],
    phase: f64,
}

impl Entry {
    fn eval(&self, x: f64, xi: f64) -> C64 {
        let t = self.trig;
        let f = t[0] + t[1] * x.cos() + t[2] * x.sin() + t[3] * (2.0 * x).cos() + t[4] * (2.0 * x).sin();
        let p = self.poly[0] + self.poly[1] * xi + self.poly[2] * xi * xi;
        C64::from_polar(f * p, self.phase)
    }
}

fn entry() -> impl Strategy<Value = Entry> {
    (prop::array::uniform5(-1.0..1.0f64), prop::array::uniform3(-1.0..1.0f64), -PI..PI).prop_map(|(trig, poly, phase)| Entry {
        trig,
        poly,
        phase,
    })
}

fn symbol() -> impl Strategy<Value = Vec<Entry>> {
    prop::collection::vec(entry(), 4)
}

fn series(g: &Arc<PhaseGrid>, e: &[Entry]) -> HSeries {
    let s = MatrixSymbol::from_fn(g, 2, 2, |x, xi, out| {
        for (o, en) in out.iter_mut().zip(e) {
            *o = en.eval(x[0], xi[0]);
        }
    });
    HSeries::from_leading(s, ORDER)
}

fn max_diff(a: &HSeries, b: &HSeries) -> f64 {
    let d = a.sub(b).unwrap();
    (0..=ORDER).map(|j| d.coeff(j).max_abs()).fold(0.0, f64::max)
}

fn scale(e: &[Entry]) -> f64 {
    e.iter().map(|v| v.trig.iter().map(|t| t.abs()).sum::<f64>() * v.poly.iter().map(|t| t.abs()).sum::<f64>()).sum::<f64>().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn identity_is_a_two_sided_unit(a in symbol()) {
        let g = grid();
        let sa = series(&g, &a);
        let one = HSeries::identity(&g, 2, ORDER);
        prop_assert!(max_diff(&moyal_product(&one, &sa, ORDER).unwrap(), &sa) < 1e-12);
        prop_assert!(max_diff(&moyal_product(&sa, &one, ORDER).unwrap(), &sa) < 1e-12);
    }

    #[test]
    fn adjoint_reverses_products(a in symbol(), b in symbol()) {
        let g = grid();
        let (sa, sb) = (series(&g, &a), series(&g, &b));
        let lhs = moyal_product(&sa, &sb, ORDER).unwrap().adjoint();
        let rhs = moyal_product(&sb.adjoint(), &sa.adjoint(), ORDER).unwrap();
        prop_assert!(max_diff(&lhs, &rhs) < 1e-10 * scale(&a) * scale(&b));
    }

    #[test]
    fn products_associate(a in symbol(), b in symbol(), c in symbol()) {
        let g = grid();
        let (sa, sb, sc) = (series(&g, &a), series(&g, &b), series(&g, &c));
        let left = moyal_product(&moyal_product(&sa, &sb, ORDER).unwrap(), &sc, ORDER).unwrap();
        let right = moyal_product(&sa, &moyal_product(&sb, &sc, ORDER).unwrap(), ORDER).unwrap();
        prop_assert!(max_diff(&left, &right) < 1e-8, "{}", max_diff(&left, &right));
    }

    #[test]
    fn products_are_bilinear(a in symbol(), b in symbol(), c in symbol(), s in -2.0..2.0f64) {
        let g = grid();
        let (sa, sb, sc) = (series(&g, &a), series(&g, &b), series(&g, &c));
        let k = C64::new(s, 0.5);
        let lhs = moyal_product(&sa.add(&sb.scale(k)).unwrap(), &sc, ORDER).unwrap();
        let rhs = moyal_product(&sa, &sc, ORDER).unwrap().add(&moyal_product(&sb, &sc, ORDER).unwrap().scale(k)).unwrap();
        prop_assert!(max_diff(&lhs, &rhs) < 1e-10 * scale(&a).max(scale(&b)) * scale(&c));
    }
}

#[test]
fn position_momentum_commutator_is_minus_i_h() {
    let g = grid();
    let x = HSeries::from_leading(MatrixSymbol::scalar_fn(&g, |x, _| C64::new(x[0].cos(), 0.0)), ORDER);
    let xi = HSeries::from_leading(MatrixSymbol::scalar_fn(&g, |_, xi| C64::new(xi[0], 0.0)), ORDER);
    // [Op(xi), Op(cos x)] = -i h d/dx cos x = i h sin x
    let c = compose(&xi, &x, ORDER).unwrap().sub(&compose(&x, &xi, ORDER).unwrap()).unwrap();
    assert!(c.coeff(0).max_abs() < 1e-13);
    assert!(c.coeff(2).max_abs() < 1e-12);
    for p in 0..g.point_count() {
        let (x, _) = g.coords(p);
        assert!((c.coeff(1).block(p)[0] - C64::new(0.0, x[0].sin())).norm() < 1e-12);
    }
}

#[test]
fn kinetic_square_has_an_h_squared_correction_only_when_curved() {
    let g = grid();
    let f = HSeries::from_leading(MatrixSymbol::scalar_fn(&g, |x, _| C64::new(x[0].sin(), 0.0)), ORDER);
    let xi2 = HSeries::from_leading(MatrixSymbol::scalar_fn(&g, |_, xi| C64::new(xi[0] * xi[0], 0.0)), ORDER);
    // f # xi^2 + xi^2 # f = 2 f xi^2 - (h^2 / 2) f''
    let sym = moyal_product(&f, &xi2, ORDER).unwrap().add(&moyal_product(&xi2, &f, ORDER).unwrap()).unwrap();
    assert!(sym.coeff(1).max_abs() < 1e-12);
    for p in 0..g.point_count() {
        let (x, xi) = g.coords(p);
        assert!((sym.coeff(0).block(p)[0].re - 2.0 * x[0].sin() * xi[0] * xi[0]).abs() < 1e-12);
        assert!((sym.coeff(2).block(p)[0].re - 0.5 * x[0].sin()).abs() < 1e-11);
    }
}

#[test]
fn two_dimensional_products_commute_across_axes() {
    let g = Arc::new(PhaseGrid::uniform(2, (-PI, PI), 8, 2.0, 8).unwrap());
    let a = HSeries::from_leading(MatrixSymbol::scalar_fn(&g, |x, _| C64::new(x[0].cos(), 0.0)), ORDER);
    let b = HSeries::from_leading(MatrixSymbol::scalar_fn(&g, |_, xi| C64::new(xi[1], 0.0)), ORDER);
    let c = moyal_product(&a, &b, ORDER).unwrap().sub(&moyal_product(&b, &a, ORDER).unwrap()).unwrap();
    assert!((0..=ORDER).all(|j| c.coeff(j).max_abs() < 1e-12));
}
