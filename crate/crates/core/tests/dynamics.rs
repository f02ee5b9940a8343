use magneto_bo::dynamics::{integrate, integrate_flow, ClassicalState, FlowOptions, KineticPotential};
use magneto_bo::models::Potential;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn point(x: &[f64], xi: &[f64]) -> ClassicalState {
    ClassicalState::new(x.to_vec(), xi.to_vec()).unwrap()
}

fn potential() -> impl Strategy<Value = Potential> {
    prop_oneof![
        (0.5..4.0f64).prop_map(|k| Potential::Harmonic { k }),
        (0.1..1.0f64, 0.5..2.0f64).prop_map(|(amplitude, wavenumber)| Potential::Cosine { amplitude, wavenumber }),
        (0.2..1.5f64, 0.5..2.0f64).prop_map(|(z, a)| Potential::SoftCoulomb { z, a }),
    ]
}

#[test]
fn harmonic_flow_reaches_the_momentum_axis_after_a_quarter_period() {
    let g = KineticPotential::new(1, Potential::Harmonic { k: 2.0 });
    let t = integrate_flow(&g, &point(&[1.0], &[0.0]), FlowOptions::new(1e-3, PI / 4.0)).unwrap();
    let s = t.last();
    assert!(s.x[0].abs() <= 1e-6 && (s.xi[0] + 1.0).abs() <= 1e-6, "{s:?}");
}

#[test]
fn free_flow_carries_no_action() {
    let t = integrate_flow(&KineticPotential::free(2), &point(&[0.3, -1.0], &[0.7, 0.2]), FlowOptions::new(1e-3, 3.0)).unwrap();
    assert!(t.delta.iter().all(|d| d.abs() <= 1e-10));
}

#[test]
fn constant_potential_action_is_linear_in_time() {
    let v0 = -1.3;
    let g = KineticPotential::new(2, Potential::Constant(v0));
    let t = integrate_flow(&g, &point(&[0.0, 0.0], &[0.5, -0.5]), FlowOptions::new(1e-3, 2.5)).unwrap();
    for (s, d) in t.times.iter().zip(&t.delta) {
        assert!((d + v0 * s).abs() <= 1e-8);
    }
}

#[test]
fn frame_invariant_holds_over_long_runs() {
    let g = KineticPotential::new(2, Potential::SoftCoulomb { z: 1.0, a: 1.0 });
    let t = integrate(&g, &point(&[1.0, 0.2], &[0.1, 0.6]), FlowOptions::new(1e-3, 10.0), true).unwrap();
    for f in t.frames.as_ref().unwrap() {
        let (a, b) = f.symplectic_defects();
        assert!(a <= 1e-8 && b <= 1e-8, "{a} {b}");
    }
}

#[test]
fn free_frame_widens_linearly() {
    let t = integrate(&KineticPotential::free(1), &point(&[0.0], &[1.0]), FlowOptions::new(1e-2, 2.0), true).unwrap();
    let f = t.frames.as_ref().unwrap().last().unwrap();
    assert!((f.y[0] - C64::new(1.0, 4.0)).norm() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn energy_is_conserved(v in potential(), x in -1.0..1.0f64, xi in -1.0..1.0f64) {
        let g = KineticPotential::new(1, v);
        let t = integrate_flow(&g, &point(&[x], &[xi]), FlowOptions::new(1e-3, 3.0)).unwrap();
        prop_assert!(t.energy_drift() < 1e-7, "{}", t.energy_drift());
    }

    #[test]
    fn flows_run_backwards_to_the_start(v in potential(), x in prop::array::uniform2(-1.0..1.0f64), xi in prop::array::uniform2(-1.0..1.0f64)) {
        let g = KineticPotential::new(2, v);
        let s0 = point(&x, &xi);
        let fwd = integrate_flow(&g, &s0, FlowOptions::new(1e-3, 1.5)).unwrap();
        let back = integrate_flow(&g, fwd.last(), FlowOptions::new(1e-3, -1.5)).unwrap();
        let e = back.last();
        for (a, b) in e.x.iter().chain(&e.xi).zip(s0.x.iter().chain(&s0.xi)) {
            prop_assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn linearized_frames_stay_symplectic(v in potential(), x in prop::array::uniform2(-1.0..1.0f64), xi in prop::array::uniform2(-1.0..1.0f64)) {
        let g = KineticPotential::new(2, v);
        let t = integrate(&g, &point(&x, &xi), FlowOptions::new(2e-3, 2.0), true).unwrap();
        for f in t.frames.as_ref().unwrap() {
            let (a, b) = f.symplectic_defects();
            prop_assert!(a < 1e-8 && b < 1e-8);
            prop_assert!(f.det_y().norm() > 0.0);
        }
    }
}
