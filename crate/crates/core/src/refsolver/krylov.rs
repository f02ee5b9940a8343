use super::operator::GridHamiltonian;
use super::state::GridState;
use crate::error::{Error, Result};
use crate::linalg::ZERO;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

/// Time stepping of `exp(-i dt P / h)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagatorConfig {
    pub dt: f64,
    /// Largest Krylov subspace per step.
    pub krylov_dim: usize,
    /// Signed final time.
    pub t_final: f64,
    /// Steps between observed samples.
    pub sample_stride: usize,
    /// Relative a-posteriori error allowed per step.
    pub tolerance: f64,
    /// Largest squared norm tolerated in the two-sample strip along every periodic edge.
    pub wrap_limit: f64,
    /// Full Gram-Schmidt against the whole basis; off keeps the bare three-term recurrence.
    pub reorthogonalize: bool,
}

impl PropagatorConfig {
    pub fn new(dt: f64, t_final: f64) -> PropagatorConfig {
        PropagatorConfig { dt, krylov_dim: 24, t_final, sample_stride: 1, tolerance: 1e-9, wrap_limit: 1e-6, reorthogonalize: true }
    }

    fn steps(&self) -> Result<(usize, f64)> {
        if !(self.dt > 0.0) || !self.t_final.is_finite() {
            return Err(Error::config(format!("need dt > 0 and finite T, got dt = {}, T = {}", self.dt, self.t_final)));
        }
        if self.krylov_dim < 2 || self.sample_stride == 0 {
            return Err(Error::config("Krylov dimension must be at least 2 and the sample stride positive"));
        }
        let n = (self.t_final.abs() / self.dt).round() as usize;
        if n == 0 {
            return Ok((0, 0.0));
        }
        Ok((n, self.t_final / n as f64))
    }
}

/// Bookkeeping of one propagation run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PropagationStats {
    pub steps: usize,
    pub matvecs: usize,
    /// Largest Krylov dimension actually used.
    pub max_dim: usize,
    pub max_error_estimate: f64,
    pub max_step_norm_drift: f64,
    pub cumulative_norm_drift: f64,
    pub max_wrap_mass: f64,
    /// `|dt| * bound(P) / h`; Lanczos convergence is judged by the error estimate instead.
    pub stiffness: f64,
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(u, v)| u.conj() * v).sum()
}

const CHUNK: usize = 2048;

/// One classical Gram-Schmidt pass of `w` against the orthonormal `basis`,
/// chunked so every sweep over `w` stays in cache.
fn reorthogonalize(basis: &[Vec<C64>], w: &mut [C64]) {
    let mut c = vec![ZERO; basis.len()];
    for (start, wc) in w.chunks(CHUNK).enumerate().map(|(i, wc)| (i * CHUNK, wc)) {
        for (ci, v) in c.iter_mut().zip(basis) {
            *ci += dot(&v[start..start + wc.len()], wc);
        }
    }
    for (start, wc) in w.chunks_mut(CHUNK).enumerate().map(|(i, wc)| (i * CHUNK, wc)) {
        for (ci, v) in c.iter().zip(basis) {
            wc.iter_mut().zip(&v[start..]).for_each(|(x, u)| *x -= u * ci);
        }
    }
}

/// `exp(-i tau T) e_1` for a real symmetric tridiagonal `T`.
fn tridiagonal_exp(alpha: &[f64], beta: &[f64], tau: f64) -> Vec<C64> {
    let n = alpha.len();
    let mut t = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        t[(i, i)] = alpha[i];
        if i + 1 < n {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = t.symmetric_eigen();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|l| {
                    let q = eig.eigenvectors[(i, l)] * eig.eigenvectors[(0, l)];
                    C64::from_polar(q, -tau * eig.eigenvalues[l])
                })
                .sum()
        })
        .collect()
}

/// One step `psi <- exp(-i tau P) psi` by Lanczos, optionally with full reorthogonalization.
/// Returns the subspace dimension used and the relative error estimate.
pub fn krylov_step(op: &GridHamiltonian, psi: &mut [C64], tau: f64, max_dim: usize, tol: f64, full: bool) -> Result<(usize, f64)> {
    let beta0 = dot(psi, psi).re.sqrt();
    if beta0 == 0.0 || tau == 0.0 {
        return Ok((0, 0.0));
    }
    let mut basis: Vec<Vec<C64>> = vec![psi.iter().map(|v| v / beta0).collect()];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![ZERO; psi.len()];
    let mut estimate = f64::INFINITY;
    let mut coeffs = Vec::new();
    for j in 0..max_dim {
        op.apply(&basis[j], &mut w);
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        w.iter_mut().zip(&basis[j]).for_each(|(x, v)| *x -= v * a);
        if j > 0 {
            let b = beta[j - 1];
            w.iter_mut().zip(&basis[j - 1]).for_each(|(x, v)| *x -= v * b);
        }
        if full {
            reorthogonalize(&basis, &mut w);
        }
        let b = dot(&w, &w).re.sqrt();
        coeffs = tridiagonal_exp(&alpha, &beta, tau);
        estimate = b * coeffs[j].norm();
        if estimate <= tol || b <= 1e-14 * a.abs().max(1.0) {
            break;
        }
        if j + 1 == max_dim {
            return Err(Error::precondition(format!(
                "Krylov step did not converge: error estimate {estimate:.3e} > {tol:.1e} with dimension {max_dim}; reduce dt or raise the Krylov dimension"
            )));
        }
        beta.push(b);
        basis.push(w.iter().map(|v| v / b).collect());
    }
    psi.iter_mut().for_each(|v| *v = ZERO);
    for (c, v) in coeffs.iter().zip(&basis) {
        let s = c * beta0;
        psi.iter_mut().zip(v).for_each(|(x, u)| *x += u * s);
    }
    Ok((coeffs.len(), estimate))
}

/// Propagate and hand every `sample_stride`-th state (and the initial and final
/// ones) to `observe`.
pub fn propagate_observed<F>(
    op: &GridHamiltonian,
    state: &GridState,
    cfg: &PropagatorConfig,
    mut observe: F,
) -> Result<(GridState, PropagationStats)>
where
    F: FnMut(&GridState) -> Result<()>,
{
    op.check_state(state)?;
    if (state.h - op.h()).abs() > 1e-14 {
        return Err(Error::structural("h", format!("state for h = {}, operator for h = {}", state.h, op.h())));
    }
    let (n, dt) = cfg.steps()?;
    let mut cur = state.clone();
    let norm0 = cur.norm();
    let mut stats = PropagationStats { stiffness: dt.abs() * op.spectral_bound() / op.h(), ..Default::default() };
    let wrap = |s: &GridState, stats: &mut PropagationStats| -> Result<()> {
        let m = s.boundary_mass(2);
        stats.max_wrap_mass = stats.max_wrap_mass.max(m);
        if m > cfg.wrap_limit {
            return Err(Error::precondition(format!(
                "state reaches the periodic boundary at t = {:.4}: edge mass {m:.3e} > {:.1e}; enlarge the box",
                s.time, cfg.wrap_limit
            )));
        }
        Ok(())
    };
    wrap(&cur, &mut stats)?;
    observe(&cur)?;
    let t0 = state.time;
    for step in 1..=n {
        let before = cur.norm();
        let (used, est) = krylov_step(op, &mut cur.data, dt / op.h(), cfg.krylov_dim, cfg.tolerance, cfg.reorthogonalize)?;
        stats.steps += 1;
        stats.matvecs += used;
        stats.max_dim = stats.max_dim.max(used);
        stats.max_error_estimate = stats.max_error_estimate.max(est);
        let after = cur.norm();
        let drift = (after - before).abs() / norm0;
        stats.max_step_norm_drift = stats.max_step_norm_drift.max(drift);
        if drift > 1e-9 {
            return Err(Error::precondition(format!("norm drift {drift:.3e} in step {step} exceeds 1e-9")));
        }
        cur.time = t0 + step as f64 * dt;
        if step % cfg.sample_stride == 0 || step == n {
            wrap(&cur, &mut stats)?;
            observe(&cur)?;
        }
    }
    stats.cumulative_norm_drift = (cur.norm() - norm0).abs() / norm0;
    Ok((cur, stats))
}

/// Propagate and keep the sampled states.
pub fn propagate(op: &GridHamiltonian, state: &GridState, cfg: &PropagatorConfig) -> Result<(Vec<GridState>, PropagationStats)> {
    let mut samples = Vec::new();
    let (_, stats) = propagate_observed(op, state, cfg, |s| {
        samples.push(s.clone());
        Ok(())
    })?;
    Ok((samples, stats))
}
