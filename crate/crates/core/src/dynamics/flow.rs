use super::hamiltonian::{Hamiltonian, Jet};
use crate::error::{Error, Result};
use crate::linalg::{self, ZERO};
use num_complex::Complex64 as C64;

/// Largest symplectic frame defect tolerated before the run is refused.
pub const FRAME_DEFECT_LIMIT: f64 = 1e-6;

/// Phase-space point `(x, xi)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalState {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
}

impl ClassicalState {
    pub fn new(x: Vec<f64>, xi: Vec<f64>) -> Result<ClassicalState> {
        if x.len() != xi.len() || x.is_empty() {
            return Err(Error::structural("state", format!("x has {} components, xi {}", x.len(), xi.len())));
        }
        if x.iter().chain(xi.iter()).any(|v| !v.is_finite()) {
            return Err(Error::precondition("non-finite phase-space point"));
        }
        Ok(ClassicalState { x, xi })
    }

    pub fn d(&self) -> usize {
        self.x.len()
    }

    fn axpy(&self, s: f64, dx: &[f64], dxi: &[f64]) -> ClassicalState {
        ClassicalState {
            x: self.x.iter().zip(dx).map(|(a, b)| a + s * b).collect(),
            xi: self.xi.iter().zip(dxi).map(|(a, b)| a + s * b).collect(),
        }
    }
}

/// Linearized flow: the columns of `Y` and `Z` solve `(Y, Z)' = J M_t (Y, Z)`
/// from `Y = I`, `Z = iI`. Matrices are row-major `d x d`.
#[derive(Clone, Debug, PartialEq)]
pub struct VariationalFrame {
    pub d: usize,
    pub y: Vec<C64>,
    pub z: Vec<C64>,
    pub time: f64,
}

impl VariationalFrame {
    pub fn initial(d: usize) -> VariationalFrame {
        let mut y = vec![ZERO; d * d];
        let mut z = vec![ZERO; d * d];
        for i in 0..d {
            y[i * d + i] = C64::new(1.0, 0.0);
            z[i * d + i] = C64::new(0.0, 1.0);
        }
        VariationalFrame { d, y, z, time: 0.0 }
    }

    /// `(|Y^T Z - Z^T Y|, |Y^dagger Z - Z^dagger Y - 2i I|)`, largest entries.
    pub fn symplectic_defects(&self) -> (f64, f64) {
        let d = self.d;
        let mut a: f64 = 0.0;
        let mut b: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let mut s1 = ZERO;
                let mut s2 = ZERO;
                for k in 0..d {
                    let (yki, ykj, zki, zkj) = (self.y[k * d + i], self.y[k * d + j], self.z[k * d + i], self.z[k * d + j]);
                    s1 += yki * zkj - zki * ykj;
                    s2 += yki.conj() * zkj - zki.conj() * ykj;
                }
                if i == j {
                    s2 -= C64::new(0.0, 2.0);
                }
                a = a.max(s1.norm());
                b = b.max(s2.norm());
            }
        }
        (a, b)
    }

    /// Spectral condition number of `Y`.
    pub fn condition(&self) -> f64 {
        let m = linalg::to_dmatrix(&self.y, self.d, self.d);
        let sv = m.singular_values();
        let max = sv.iter().cloned().fold(0.0, f64::max);
        let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        max / min
    }

    pub fn det_y(&self) -> C64 {
        linalg::to_dmatrix(&self.y, self.d, self.d).determinant()
    }

    /// `Y^{-1}`, refused when `Y` is numerically singular.
    pub fn y_inverse(&self) -> Result<Vec<C64>> {
        match linalg::inverse_with_condition(&self.y, self.d) {
            Some((inv, cond)) if cond < 1e12 => Ok(inv),
            Some((_, cond)) => Err(Error::precondition(format!("frame matrix Y is singular (condition {cond:.3e})"))),
            None => Err(Error::precondition("frame matrix Y is singular")),
        }
    }

    fn axpy(&self, s: f64, dy: &[C64], dz: &[C64]) -> VariationalFrame {
        VariationalFrame {
            d: self.d,
            y: self.y.iter().zip(dy).map(|(a, b)| a + b * s).collect(),
            z: self.z.iter().zip(dz).map(|(a, b)| a + b * s).collect(),
            time: self.time,
        }
    }
}

/// Why a trajectory stopped early.
#[derive(Clone, Debug, PartialEq)]
pub struct ExitReport {
    pub time: f64,
    pub state: ClassicalState,
}

/// Fixed-step integration settings. A negative `t_final` integrates backwards.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowOptions {
    pub dt: f64,
    pub t_final: f64,
    /// Distance kept from the edges of the Hamiltonian's domain.
    pub margin: f64,
}

impl FlowOptions {
    pub fn new(dt: f64, t_final: f64) -> FlowOptions {
        FlowOptions { dt, t_final, margin: 0.0 }
    }

    /// Step count and signed step.
    fn steps(&self) -> Result<(usize, f64)> {
        if !(self.dt > 0.0) || !self.t_final.is_finite() {
            return Err(Error::config(format!("need dt > 0 and finite T, got dt = {}, T = {}", self.dt, self.t_final)));
        }
        let n = (self.t_final.abs() / self.dt).round().max(if self.t_final == 0.0 { 0.0 } else { 1.0 }) as usize;
        let h = if n == 0 { 0.0 } else { self.t_final / n as f64 };
        Ok((n, h))
    }
}

/// Samples of a classical run (every integrator step is stored).
#[derive(Clone, Debug)]
pub struct TrajectoryBundle {
    pub times: Vec<f64>,
    pub states: Vec<ClassicalState>,
    /// Present when the linearized flow was integrated alongside.
    pub frames: Option<Vec<VariationalFrame>>,
    /// `xdot . xi - g` at every sample.
    pub lagrangian: Vec<f64>,
    /// Action phase `delta_t` at every sample.
    pub delta: Vec<f64>,
    /// `g(x_t, xi_t)` at every sample.
    pub energy: Vec<f64>,
    pub exit: Option<ExitReport>,
}

impl TrajectoryBundle {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &ClassicalState {
        self.states.last().expect("trajectory has at least the initial sample")
    }

    /// Largest `|g_t - g_0|`.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energy[0];
        self.energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max)
    }

    /// Index of the sample closest to time `t`.
    pub fn sample_at(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, s) in self.times.iter().enumerate() {
            if (s - t).abs() < (self.times[best] - t).abs() {
                best = i;
            }
        }
        best
    }

    /// `sqrt(det Y_t)` continued along the samples from `+1` at `t = 0`.
    pub fn det_roots(&self) -> Option<Vec<C64>> {
        let frames = self.frames.as_ref()?;
        let mut out: Vec<C64> = Vec::with_capacity(frames.len());
        for f in frames {
            let r = f.det_y().sqrt();
            let r = match out.last() {
                Some(prev) if (r - prev).norm() > (r + prev).norm() => -r,
                _ => r,
            };
            out.push(r);
        }
        Some(out)
    }
}

fn lagrangian(j: &Jet, xi: &[f64]) -> f64 {
    j.dxi.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>() - j.value
}

/// `d/dt (Y, Z) = J M (Y, Z)` with `J = [[0, I], [-I, 0]]`.
fn frame_rhs(m: &[f64], f: &VariationalFrame) -> (Vec<C64>, Vec<C64>) {
    let d = f.d;
    let d2 = 2 * d;
    let mut dy = vec![ZERO; d * d];
    let mut dz = vec![ZERO; d * d];
    for i in 0..d {
        for c in 0..d {
            let mut sy = ZERO;
            let mut sz = ZERO;
            for k in 0..d {
                // rows d+i (xi) and i (x) of M
                let mxix = m[(d + i) * d2 + k];
                let mxixi = m[(d + i) * d2 + d + k];
                let mxx = m[i * d2 + k];
                let mxxi = m[i * d2 + d + k];
                sy += f.y[k * d + c] * mxix + f.z[k * d + c] * mxixi;
                sz -= f.y[k * d + c] * mxx + f.z[k * d + c] * mxxi;
            }
            dy[i * d + c] = sy;
            dz[i * d + c] = sz;
        }
    }
    (dy, dz)
}

/// Classical 4th-order Runge-Kutta integration of `xdot = dg/dxi`,
/// `xidot = -dg/dx`, optionally with the linearized flow.
pub fn integrate(g: &dyn Hamiltonian, start: &ClassicalState, opts: FlowOptions, with_frame: bool) -> Result<TrajectoryBundle> {
    let d = g.dim();
    if start.d() != d {
        return Err(Error::structural("state", format!("{}-dimensional state for a {d}-dimensional Hamiltonian", start.d())));
    }
    if !g.contains(&start.x, &start.xi, opts.margin) {
        return Err(Error::precondition(format!(
            "initial point x = {:?}, xi = {:?} lies outside the Hamiltonian's domain (margin {})",
            start.x, start.xi, opts.margin
        )));
    }
    let (n, dt) = opts.steps()?;
    let mut state = start.clone();
    let mut frame = VariationalFrame::initial(d);
    let j0 = g.jet(&state.x, &state.xi, false);
    let mut out = TrajectoryBundle {
        times: vec![0.0],
        states: vec![state.clone()],
        frames: with_frame.then(|| vec![frame.clone()]),
        lagrangian: vec![lagrangian(&j0, &state.xi)],
        delta: Vec::new(),
        energy: vec![j0.value],
        exit: None,
    };
    let rhs = |s: &ClassicalState, f: Option<&VariationalFrame>| {
        let j = g.jet(&s.x, &s.xi, f.is_some());
        let dx = j.dxi.clone();
        let dxi: Vec<f64> = j.dx.iter().map(|v| -v).collect();
        let df = f.map(|f| frame_rhs(&j.hessian, f));
        (dx, dxi, df)
    };
    for step in 1..=n {
        let fr = with_frame.then_some(&frame);
        let (k1x, k1p, f1) = rhs(&state, fr);
        let s2 = state.axpy(0.5 * dt, &k1x, &k1p);
        let fr2 = f1.as_ref().map(|(a, b)| frame.axpy(0.5 * dt, a, b));
        let (k2x, k2p, f2) = rhs(&s2, fr2.as_ref());
        let s3 = state.axpy(0.5 * dt, &k2x, &k2p);
        let fr3 = f2.as_ref().map(|(a, b)| frame.axpy(0.5 * dt, a, b));
        let (k3x, k3p, f3) = rhs(&s3, fr3.as_ref());
        let s4 = state.axpy(dt, &k3x, &k3p);
        let fr4 = f3.as_ref().map(|(a, b)| frame.axpy(dt, a, b));
        let (k4x, k4p, f4) = rhs(&s4, fr4.as_ref());
        let comb = |a: &[f64], b: &[f64], c: &[f64], e: &[f64]| -> Vec<f64> {
            (0..a.len()).map(|i| (a[i] + 2.0 * b[i] + 2.0 * c[i] + e[i]) / 6.0).collect()
        };
        state = state.axpy(dt, &comb(&k1x, &k2x, &k3x, &k4x), &comb(&k1p, &k2p, &k3p, &k4p));
        if let (Some(f1), Some(f2), Some(f3), Some(f4)) = (f1, f2, f3, f4) {
            let combc = |a: &[C64], b: &[C64], c: &[C64], e: &[C64]| -> Vec<C64> {
                (0..a.len()).map(|i| (a[i] + b[i] * 2.0 + c[i] * 2.0 + e[i]) / 6.0).collect()
            };
            frame = frame.axpy(dt, &combc(&f1.0, &f2.0, &f3.0, &f4.0), &combc(&f1.1, &f2.1, &f3.1, &f4.1));
        }
        let t = step as f64 * dt;
        if !g.contains(&state.x, &state.xi, opts.margin) {
            out.exit = Some(ExitReport { time: t, state: state.clone() });
            break;
        }
        frame.time = t;
        let j = g.jet(&state.x, &state.xi, false);
        out.times.push(t);
        out.states.push(state.clone());
        out.lagrangian.push(lagrangian(&j, &state.xi));
        out.energy.push(j.value);
        if let Some(fs) = out.frames.as_mut() {
            let (a, b) = frame.symplectic_defects();
            if a.max(b) > FRAME_DEFECT_LIMIT {
                return Err(Error::precondition(format!(
                    "linearized flow lost symplecticity at t = {t:.4}: defects {a:.3e}, {b:.3e}; reduce dt = {dt}"
                )));
            }
            fs.push(frame.clone());
        }
    }
    out.delta = action_phase(&out);
    Ok(out)
}

/// States, energies and action along the classical flow.
pub fn integrate_flow(g: &dyn Hamiltonian, start: &ClassicalState, opts: FlowOptions) -> Result<TrajectoryBundle> {
    integrate(g, start, opts, false)
}

/// Frames of the linearized flow along a trajectory produced with the same
/// Hamiltonian; the step is recovered from the sample times.
pub fn integrate_linearized(traj: &TrajectoryBundle, g: &dyn Hamiltonian) -> Result<Vec<VariationalFrame>> {
    if traj.len() < 2 {
        return Ok(vec![VariationalFrame::initial(g.dim())]);
    }
    let dt = (traj.times[1] - traj.times[0]).abs();
    let t_final = traj.times[traj.len() - 1];
    let rerun = integrate(g, &traj.states[0], FlowOptions { dt, t_final, margin: f64::NEG_INFINITY }, true)?;
    let drift = rerun
        .states
        .iter()
        .zip(&traj.states)
        .flat_map(|(a, b)| a.x.iter().zip(&b.x).chain(a.xi.iter().zip(&b.xi)).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max);
    if rerun.len() != traj.len() || drift > 1e-12 {
        return Err(Error::structural("trajectory", "trajectory was not produced by this Hamiltonian and step"));
    }
    Ok(rerun.frames.expect("frames requested"))
}

/// Symmetrized `2d x 2d` Hessian of `g` at `state`, ordered `(x, xi)`.
pub fn hessian_at(g: &dyn Hamiltonian, state: &ClassicalState) -> Vec<f64> {
    let d2 = 2 * g.dim();
    let mut m = g.jet(&state.x, &state.xi, true).hessian;
    for a in 0..d2 {
        for b in a + 1..d2 {
            let s = 0.5 * (m[a * d2 + b] + m[b * d2 + a]);
            m[a * d2 + b] = s;
            m[b * d2 + a] = s;
        }
    }
    m
}

/// `delta_t = int_0^t (xdot xi - g) ds + (x_0 xi_0 - x_t xi_t) / 2` by
/// composite Simpson on the stored samples (the last odd interval uses the
/// three-point end formula, as does the first when it stands alone).
pub fn action_phase(traj: &TrajectoryBundle) -> Vec<f64> {
    let n = traj.len();
    let f = &traj.lagrangian;
    let mut integral = vec![0.0; n];
    for k in 1..n {
        let h = traj.times[k] - traj.times[k - 1];
        integral[k] = if k % 2 == 0 {
            integral[k - 2] + (traj.times[k] - traj.times[k - 2]) / 6.0 * (f[k - 2] + 4.0 * f[k - 1] + f[k])
        } else if k >= 2 {
            integral[k - 1] + h / 12.0 * (-f[k - 2] + 8.0 * f[k - 1] + 5.0 * f[k])
        } else if n >= 3 {
            h / 12.0 * (5.0 * f[0] + 8.0 * f[1] - f[2])
        } else {
            0.5 * h * (f[0] + f[1])
        };
    }
    let s0 = &traj.states[0];
    let b0: f64 = s0.x.iter().zip(&s0.xi).map(|(a, b)| a * b).sum();
    (0..n)
        .map(|k| {
            let s = &traj.states[k];
            let bt: f64 = s.x.iter().zip(&s.xi).map(|(a, b)| a * b).sum();
            integral[k] + 0.5 * (b0 - bt)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::KineticPotential;
    use crate::models::Potential;
    use std::f64::consts::PI;

    fn harmonic() -> KineticPotential {
        // xi^2 + x^2
        KineticPotential::new(1, Potential::Harmonic { k: 2.0 })
    }

    fn point(x: f64, xi: f64) -> ClassicalState {
        ClassicalState::new(vec![x], vec![xi]).unwrap()
    }

    #[test]
    fn harmonic_quarter_period() {
        let t = integrate_flow(&harmonic(), &point(1.0, 0.0), FlowOptions::new(1e-3, PI / 4.0)).unwrap();
        let s = t.last();
        assert!(s.x[0].abs() < 1e-6 && (s.xi[0] + 1.0).abs() < 1e-6, "{s:?}");
    }

    #[test]
    fn free_motion_and_zero_action() {
        let t = integrate_flow(&KineticPotential::free(1), &point(0.0, 1.0), FlowOptions::new(1e-3, 1.0)).unwrap();
        let s = t.last();
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.xi[0] - 1.0).abs() < 1e-12);
        assert!(t.delta.iter().all(|d| d.abs() < 1e-10));
    }

    #[test]
    fn constant_potential_action() {
        let v0 = 0.7;
        let g = KineticPotential::new(1, Potential::Constant(v0));
        let t = integrate_flow(&g, &point(0.3, -0.4), FlowOptions::new(1e-3, 2.0)).unwrap();
        for (s, d) in t.times.iter().zip(&t.delta) {
            assert!((d + v0 * s).abs() < 1e-8);
        }
    }

    #[test]
    fn harmonic_action_vanishes() {
        let t = integrate_flow(&harmonic(), &point(1.0, 1.0), FlowOptions::new(1e-3, 3.0)).unwrap();
        assert!(t.delta.iter().all(|d| d.abs() < 1e-7));
    }

    #[test]
    fn cosine_energy_drift() {
        let g = KineticPotential::new(1, Potential::Cosine { amplitude: 1.0, wavenumber: 1.0 });
        let t = integrate_flow(&g, &point(0.2, 0.9), FlowOptions::new(1e-3, 10.0)).unwrap();
        assert!(t.energy_drift() < 1e-7, "{}", t.energy_drift());
    }

    #[test]
    fn free_frame_spreads() {
        let t = integrate(&KineticPotential::free(1), &point(0.0, 0.5), FlowOptions::new(1e-2, 1.5), true).unwrap();
        for (s, f) in t.times.iter().zip(t.frames.as_ref().unwrap()) {
            assert!((f.y[0] - C64::new(1.0, 2.0 * s)).norm() < 1e-12);
            assert!((f.z[0] - C64::new(0.0, 1.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn harmonic_monodromy_and_symplecticity() {
        let t = integrate(&harmonic(), &point(0.5, 0.0), FlowOptions::new(1e-3, PI), true).unwrap();
        let f = t.frames.as_ref().unwrap().last().unwrap();
        assert!((f.y[0] - 1.0).norm() < 1e-6 && (f.z[0] - C64::new(0.0, 1.0)).norm() < 1e-6);
        let long = integrate(&harmonic(), &point(0.5, 0.3), FlowOptions::new(1e-3, 10.0), true).unwrap();
        for f in long.frames.as_ref().unwrap() {
            let (a, b) = f.symplectic_defects();
            assert!(a < 1e-8 && b < 1e-8);
        }
    }

    #[test]
    fn reversibility() {
        let g = KineticPotential::new(2, Potential::SoftCoulomb { z: 1.0, a: 1.0 });
        let s0 = ClassicalState::new(vec![1.0, -0.5], vec![0.2, 0.6]).unwrap();
        let fwd = integrate_flow(&g, &s0, FlowOptions::new(1e-3, 2.0)).unwrap();
        let back = integrate_flow(&g, fwd.last(), FlowOptions::new(1e-3, -2.0)).unwrap();
        let e = back.last();
        for (a, b) in e.x.iter().chain(e.xi.iter()).zip(s0.x.iter().chain(s0.xi.iter())) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn hessian_examples() {
        let free = hessian_at(&KineticPotential::free(1), &point(0.3, 0.1));
        assert_eq!(free, vec![0.0, 0.0, 0.0, 2.0]);
        let h = hessian_at(&harmonic(), &point(0.3, 0.1));
        assert_eq!(h, vec![2.0, 0.0, 0.0, 2.0]);
    }

    #[test]
    fn linearized_rerun_matches() {
        let g = harmonic();
        let t = integrate_flow(&g, &point(1.0, 0.0), FlowOptions::new(1e-2, 1.0)).unwrap();
        let frames = integrate_linearized(&t, &g).unwrap();
        assert_eq!(frames.len(), t.len());
        let other = integrate_flow(&g, &point(0.9, 0.0), FlowOptions::new(1e-2, 1.0)).unwrap();
        let mut forged = other.clone();
        forged.states[0] = t.states[0].clone();
        assert!(integrate_linearized(&forged, &g).is_err());
    }

    #[test]
    fn action_refinement_is_stable() {
        let g = KineticPotential::new(1, Potential::Cosine { amplitude: 0.8, wavenumber: 1.3 });
        let a = integrate_flow(&g, &point(0.1, 0.7), FlowOptions::new(2e-3, 2.0)).unwrap();
        let b = integrate_flow(&g, &point(0.1, 0.7), FlowOptions::new(1e-3, 2.0)).unwrap();
        assert!((a.delta.last().unwrap() - b.delta.last().unwrap()).abs() < 1e-7);
    }
}
