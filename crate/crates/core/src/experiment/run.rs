use super::config::{CompareMode, ExperimentConfig, ExperimentKind, FiberState, FrameConfig, InitialState};
use crate::dynamics::{
    assemble_packet, coherent_state, integrate, ClassicalState, FlowOptions, KineticPotential, PacketParams, SampledHamiltonian,
    TrajectoryBundle, Width,
};
use crate::error::{Error, Result};
use crate::fit::{power_law, FLOOR};
use crate::io::{trajectory_table, Cell, Table};
use crate::models::{assemble_p_symbol, gap_report, FiberBasis, FiberModel, PSymbol};
use crate::refsolver::{
    compare_states, gauge_conjugate, observables, propagate, propagate_observed, Frame, GridHamiltonian, GridState,
    PropagationStats, PropagatorConfig, TensorGrid,
};
use crate::superadiabatic::{defect_report, eigen_projector, reduce, Reduction};
use crate::symbols::MatrixSymbol;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::sync::Arc;

/// Numerical output of one pipeline, before assertions and export.
#[derive(Clone, Debug, Default)]
pub struct Results {
    pub tables: Vec<Table>,
    pub fields: Vec<(String, GridState)>,
    pub metrics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl Results {
    fn metric(&mut self, name: impl Into<String>, v: f64) {
        self.metrics.insert(name.into(), v);
    }
}

/// Run the pipeline named by `cfg.experiment`.
pub fn execute(cfg: &ExperimentConfig) -> Result<Results> {
    let mut out = Results::default();
    match cfg.experiment {
        ExperimentKind::Project => project(cfg, &mut out)?,
        ExperimentKind::Effective => effective(cfg, &mut out)?,
        ExperimentKind::PropagateCoherent => coherent(cfg, &mut out)?,
        ExperimentKind::PropagateGrid => grid_run(cfg, &mut out)?,
        ExperimentKind::Compare => match cfg.pipeline.compare {
            CompareMode::Packet => packet_scan(cfg, &cfg.h_values(), &mut out)?,
            CompareMode::Frames => frames(cfg, &mut out)?,
        },
        ExperimentKind::ScanH => scan_h(cfg, &mut out)?,
        ExperimentKind::StraightLine => straight_line(cfg, &mut out)?,
    }
    Ok(out)
}

/// Size of the symbol's fiber: the matrix size, or the configured basis for a pair.
fn fiber_size(cfg: &ExperimentConfig, model: &FiberModel) -> usize {
    match model {
        FiberModel::Matrix(m) => m.size(),
        FiberModel::Pair(_) => cfg.grid.fiber_count,
    }
}

/// Symbol `p` and its reduction at `pipeline.h`.
pub fn reduction(cfg: &ExperimentConfig) -> Result<(PSymbol, Reduction)> {
    let model = cfg.model.build(cfg.pipeline.h)?;
    let grid = cfg.grid.phase_grid(model.d())?;
    let p = assemble_p_symbol(&model, &grid, fiber_size(cfg, &model), cfg.pipeline.order)?;
    let pl = &cfg.pipeline;
    let red = reduce(&p.p, pl.group, pl.contour_nodes, pl.gap_threshold, pl.order)?;
    Ok((p, red))
}

/// Outcome of a power-law fit over the `h` list.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitStatus {
    Fit,
    /// Some value sits at the numerical floor.
    Floor,
    NonMonotone,
    TooFewPoints,
}

impl FitStatus {
    pub fn label(self) -> &'static str {
        match self {
            FitStatus::Fit => "fit",
            FitStatus::Floor => "floor",
            FitStatus::NonMonotone => "non-monotone",
            FitStatus::TooFewPoints => "too-few-points",
        }
    }
}

/// Fit `ys ~ C hs^s`, record a row in `fits` and, for a clean fit, the
/// metrics `<name>_slope` and `<name>_residual`.
fn fit_series(name: &str, hs: &[f64], ys: &[f64], fits: &mut Table, out: &mut Results) -> Result<()> {
    let (status, fit) = if hs.len() < 2 {
        (FitStatus::TooFewPoints, None)
    } else if ys.iter().any(|y| !(*y > FLOOR)) {
        (FitStatus::Floor, None)
    } else {
        let f = power_law(hs, ys);
        match f {
            Some(f) if f.monotone => (FitStatus::Fit, Some(f)),
            Some(f) => (FitStatus::NonMonotone, Some(f)),
            None => (FitStatus::Floor, None),
        }
    };
    let (slope, residual) = fit.map_or((f64::NAN, f64::NAN), |f| (f.slope, f.residual));
    fits.push(vec![name.into(), status.label().into(), slope.into(), residual.into()])?;
    if status == FitStatus::Fit {
        out.metric(format!("{name}_slope"), slope);
        out.metric(format!("{name}_residual"), residual);
    } else {
        out.notes.push(format!("{name}: slope not fitted ({})", status.label()));
    }
    Ok(())
}

fn fits_table() -> Table {
    Table::new("fits", &["quantity", "status", "slope", "residual"])
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

fn project(cfg: &ExperimentConfig, out: &mut Results) -> Result<()> {
    let (p, red) = reduction(cfg)?;
    let proj = &red.projection;
    out.metric("gap_min", proj.contour.gap.min_gap);
    out.metric("contour_clearance", proj.contour.clearance());
    out.metric("quadrature_change", proj.quadrature_change);
    out.metric("projection_hermitian_defect", proj.raw_hermitian_defect);
    out.metric("truncation_leakage", p.truncation_leakage);
    out.notes.extend(p.warnings.iter().cloned());
    let exact = eigen_projector(p.p.coeff(0), cfg.pipeline.group)?;
    out.metric("projector_error", proj.pi.coeff(0).sub(&exact)?.max_abs());
    let hs = cfg.h_values();
    let fits = defect_tables(&p, &red, &hs, out)?;
    if hs.len() >= 2 {
        out.tables.push(fits);
    }
    Ok(())
}

/// Defect table over `hs`; returns the fits of both series.
fn defect_tables(p: &PSymbol, red: &Reduction, hs: &[f64], out: &mut Results) -> Result<Table> {
    let rep = defect_report(&red.projection.pi, &p.p, hs)?;
    let mut t = Table::new("defects", &["h", "idempotency", "commutator"]);
    for r in &rep.rows {
        t.push(vec![r.h.into(), r.idempotency.into(), r.commutator.into()])?;
    }
    let idem: Vec<f64> = rep.rows.iter().map(|r| r.idempotency).collect();
    let comm: Vec<f64> = rep.rows.iter().map(|r| r.commutator).collect();
    out.metric("idempotency_max", max_of(&idem));
    out.metric("commutator_max", max_of(&comm));
    out.tables.push(t);
    let mut fits = fits_table();
    if hs.len() >= 2 {
        fit_series("idempotency", hs, &idem, &mut fits, out)?;
        fit_series("commutator", hs, &comm, &mut fits, out)?;
    }
    Ok(fits)
}

/// `|xi|^2` times the identity on the symbol grid.
fn kinetic(like: &MatrixSymbol) -> MatrixSymbol {
    let n = like.rows();
    MatrixSymbol::from_fn(like.grid(), n, n, |_, xi, o| {
        let k2: f64 = xi.iter().map(|v| v * v).sum();
        for i in 0..n {
            o[i * n + i] = C64::new(k2, 0.0);
        }
    })
}

/// Largest entry of the part of `a` odd under `xi -> -xi`. The momentum axes
/// are Chebyshev grids symmetric about zero.
fn xi_odd_part(a: &MatrixSymbol) -> f64 {
    let grid = a.grid();
    let dims = grid.dims();
    let d = grid.d();
    let mut worst = 0.0f64;
    let mut idx = vec![0usize; dims.len()];
    let strides = crate::spectral::strides(&dims);
    for pt in 0..grid.point_count() {
        crate::spectral::unravel(pt, &dims, &mut idx);
        let mirror: usize = (0..dims.len()).map(|ax| if ax < d { idx[ax] } else { dims[ax] - 1 - idx[ax] } * strides[ax]).sum();
        for (u, v) in a.at(pt, 0).iter().zip(a.at(mirror, 0)) {
            worst = worst.max(((u - v) * 0.5).norm());
        }
    }
    worst
}

fn effective(cfg: &ExperimentConfig, out: &mut Results) -> Result<()> {
    let (_, red) = reduction(cfg)?;
    let eff = &red.effective;
    let g0 = eff.g.coeff(0);
    let mu = &eff.mu;
    let structure = g0.sub(&kinetic(g0))?.sub(mu)?;
    out.metric("g0_structure", structure.max_abs());
    out.metric("g0_xi_odd", xi_odd_part(&g0.sub(&kinetic(g0))?));
    out.metric("hermitian_defect", eff.raw_hermitian_defect);
    let mut t = Table::new("effective", &["order", "sup_norm", "hermitian_defect", "xi_odd"]);
    for (j, c) in eff.g.coeffs().iter().enumerate() {
        let odd = if j == 0 { xi_odd_part(&c.sub(&kinetic(c))?) } else { xi_odd_part(c) };
        t.push(vec![(j as f64).into(), c.sup_norm().into(), c.hermitian_defect().into(), odd.into()])?;
        out.metric(format!("g{j}_sup"), c.sup_norm());
    }
    out.tables.push(t);
    Ok(())
}

/// Classical flow of `g` at `h` (branch 0) from the configured start, with the frame.
fn effective_flow(cfg: &ExperimentConfig, red: &Reduction, h: f64) -> Result<TrajectoryBundle> {
    let pl = &cfg.pipeline;
    let g = SampledHamiltonian::new(&red.effective.g, h, pl.flow_order, 0)?;
    let start = ClassicalState::new(cfg.x0(), cfg.xi0())?;
    let traj = integrate(&g, &start, FlowOptions::new(pl.dt, pl.t_final), true)?;
    if let Some(exit) = &traj.exit {
        return Err(Error::precondition(format!(
            "classical flow left the phase-space box at t = {:.4} (x = {:?}, xi = {:?}); enlarge the grid",
            exit.time, exit.state.x, exit.state.xi
        )));
    }
    Ok(traj)
}

fn coherent(cfg: &ExperimentConfig, out: &mut Results) -> Result<()> {
    let (_, red) = reduction(cfg)?;
    let traj = effective_flow(cfg, &red, cfg.pipeline.h)?;
    out.metric("energy_drift", traj.energy_drift());
    let frames = traj.frames.as_ref().expect("frames requested");
    let defect = frames.iter().map(|f| {
        let (a, b) = f.symplectic_defects();
        a.max(b)
    });
    out.metric("frame_defect", defect.fold(0.0, f64::max));
    out.metric("final_delta", *traj.delta.last().expect("non-empty"));
    for (a, v) in traj.last().x.iter().enumerate() {
        out.metric(format!("final_x{}", a + 1), *v);
    }
    for (a, v) in traj.last().xi.iter().enumerate() {
        out.metric(format!("final_xi{}", a + 1), *v);
    }
    out.tables.push(trajectory_table("trajectory", &traj)?);
    Ok(())
}

/// Model, tensor grid and fiber basis of a grid run at `h`.
struct GridSetup {
    model: FiberModel,
    grid: Arc<TensorGrid>,
    basis: FiberBasis,
}

fn grid_setup(cfg: &ExperimentConfig, h: f64) -> Result<GridSetup> {
    let model = cfg.model.build(h)?;
    let axes = cfg.grid.tensor_axes(model.d())?;
    let grid = Arc::new(TensorGrid::for_model(&model, axes.clone(), cfg.grid.point_budget)?);
    let basis = FiberBasis::compute(&model, &axes, cfg.pipeline.group + 1)?.phase_align()?;
    gap_report(&basis, cfg.pipeline.group, cfg.pipeline.gap_threshold)?;
    Ok(GridSetup { model, grid, basis })
}

/// The configured initial state in the gauged frame.
fn initial_state(cfg: &ExperimentConfig, s: &GridSetup, h: f64) -> Result<GridState> {
    let d = s.model.d();
    let start = ClassicalState::new(cfg.x0(), cfg.xi0())?;
    let dressed;
    let basis = match (&s.model, cfg.pipeline.fiber_state) {
        (FiberModel::Pair(p), FiberState::Dressed) => {
            dressed = FiberBasis::dressed(p, s.grid.x_axes(), &start.xi, 1)?;
            &dressed
        }
        _ => &s.basis,
    };
    let mut state = match cfg.pipeline.initial {
        InitialState::Packet => coherent_state(&s.grid, basis, 0, &PacketParams::initial(start, h), &cfg.ladder(), Width::Squeezed)?,
        InitialState::Focusing => {
            let lead = 0.5 * cfg.pipeline.t_final;
            let back = integrate(&KineticPotential::free(d), &start, FlowOptions::new(cfg.pipeline.dt, -lead), true)?;
            assemble_packet(&back, back.len() - 1, &s.grid, basis, h, &cfg.ladder(), Width::Squeezed)?
        }
    };
    state.normalize()?;
    Ok(state)
}

fn propagator(cfg: &ExperimentConfig) -> PropagatorConfig {
    let pl = &cfg.pipeline;
    let mut p = PropagatorConfig::new(pl.grid_dt, pl.t_final);
    p.krylov_dim = pl.krylov_dim;
    p.tolerance = pl.krylov_tolerance;
    p.sample_stride = pl.stride;
    p.reorthogonalize = pl.reorthogonalize;
    p.wrap_limit = pl.wrap_limit;
    p
}

fn to_frame(state: GridState, model: &FiberModel, frame: Frame) -> Result<GridState> {
    if state.frame == frame {
        Ok(state)
    } else {
        gauge_conjugate(&state, model, frame)
    }
}

fn stats_metrics(prefix: &str, st: &PropagationStats, out: &mut Results) {
    out.metric(format!("{prefix}norm_drift"), st.cumulative_norm_drift);
    out.metric(format!("{prefix}max_step_norm_drift"), st.max_step_norm_drift);
    out.metric(format!("{prefix}max_wrap_mass"), st.max_wrap_mass);
    out.metric(format!("{prefix}krylov_error"), st.max_error_estimate);
    out.metric(format!("{prefix}matvecs"), st.matvecs as f64);
    out.metric(format!("{prefix}stiffness"), st.stiffness);
}

fn observable_columns(d: usize) -> Vec<String> {
    let mut c = vec!["t".to_string(), "norm".to_string()];
    c.extend((1..=d).map(|a| format!("x{a}")));
    c.extend((1..=d).map(|a| format!("xi{a}")));
    c.push("population".to_string());
    c.push("energy".to_string());
    c
}

fn grid_run(cfg: &ExperimentConfig, out: &mut Results) -> Result<()> {
    let h = cfg.pipeline.h;
    let s = grid_setup(cfg, h)?;
    let frame: Frame = cfg.pipeline.frame.into();
    let op = GridHamiltonian::for_model(&s.model, h, &s.grid, frame)?;
    let phi0 = to_frame(initial_state(cfg, &s, h)?, &s.model, frame)?;
    let d = s.model.d();
    let mut table = Table::with_columns("observables", observable_columns(d));
    let mut pops = Vec::new();
    let (last, st) = propagate_observed(&op, &phi0, &propagator(cfg), |st| {
        let ob = observables(st, Some(&s.basis), cfg.pipeline.group)?;
        let pop = ob.population.unwrap_or(f64::NAN);
        pops.push(pop);
        let mut row: Vec<Cell> = vec![ob.time.into(), ob.norm.into()];
        row.extend(ob.x_mean.iter().map(|&v| Cell::from(v)));
        row.extend(ob.xi_mean.iter().map(|&v| Cell::from(v)));
        row.push(pop.into());
        row.push(op.energy(st)?.into());
        table.push(row)
    })?;
    stats_metrics("", &st, out);
    if frame == Frame::Gauged {
        let leak: Vec<f64> = pops.iter().map(|p| 1.0 - p).collect();
        out.metric("leakage_final", *leak.last().expect("initial sample recorded"));
        out.metric("leakage_max", max_of(&leak));
    }
    out.tables.push(table);
    if cfg.pipeline.write_fields {
        out.fields.push(("initial".into(), phi0));
        out.fields.push(("final".into(), last));
    }
    Ok(())
}

/// One `h` of a packet comparison.
#[derive(Clone, Copy, Debug)]
struct PacketRow {
    h: f64,
    leakage: f64,
    squeezed: f64,
    frozen: f64,
}

fn packet_row(cfg: &ExperimentConfig, red: &Reduction, h: f64) -> Result<PacketRow> {
    let s = grid_setup(cfg, h)?;
    let traj = effective_flow(cfg, red, h)?;
    let op = GridHamiltonian::for_model(&s.model, h, &s.grid, Frame::Gauged)?;
    let phi0 = coherent_state(&s.grid, &s.basis, 0, &PacketParams::initial(traj.states[0].clone(), h), &cfg.ladder(), Width::Squeezed)?;
    let mut pc = propagator(cfg);
    pc.sample_stride = usize::MAX;
    let (samples, _) = propagate(&op, &phi0, &pc)?;
    let last = samples.last().expect("final sample");
    let k = traj.sample_at(last.time);
    let sq = assemble_packet(&traj, k, &s.grid, &s.basis, h, &cfg.ladder(), Width::Squeezed)?;
    let fr = assemble_packet(&traj, k, &s.grid, &s.basis, h, &cfg.ladder(), Width::Frozen)?;
    let pop = observables(last, Some(&s.basis), cfg.pipeline.group)?.population.expect("gauged state");
    Ok(PacketRow {
        h,
        leakage: 1.0 - pop,
        squeezed: compare_states(last, &sq)?.distance,
        frozen: compare_states(last, &fr)?.distance,
    })
}

fn packet_rows(cfg: &ExperimentConfig, red: &Reduction, hs: &[f64]) -> Result<Vec<PacketRow>> {
    hs.par_iter().map(|&h| packet_row(cfg, red, h)).collect()
}

fn packet_metrics(rows: &[PacketRow], out: &mut Results) {
    let sq: Vec<f64> = rows.iter().map(|r| r.squeezed).collect();
    out.metric("squeezed_error_max", max_of(&sq));
    out.metric("frozen_error_min", rows.iter().map(|r| r.frozen).fold(f64::INFINITY, f64::min));
    out.metric("squeezed_advantage_min", rows.iter().map(|r| r.frozen - r.squeezed).fold(f64::INFINITY, f64::min));
    out.metric("leakage_max", max_of(&rows.iter().map(|r| r.leakage).collect::<Vec<_>>()));
}

fn packet_scan(cfg: &ExperimentConfig, hs: &[f64], out: &mut Results) -> Result<()> {
    let (_, red) = reduction(cfg)?;
    let rows = packet_rows(cfg, &red, hs)?;
    let mut t = Table::new("packet", &["h", "leakage", "squeezed_error", "frozen_error"]);
    for r in &rows {
        t.push(vec![r.h.into(), r.leakage.into(), r.squeezed.into(), r.frozen.into()])?;
    }
    out.tables.push(t);
    packet_metrics(&rows, out);
    if hs.len() >= 2 {
        let mut fits = fits_table();
        fit_series("leakage", hs, &rows.iter().map(|r| r.leakage).collect::<Vec<_>>(), &mut fits, out)?;
        fit_series("squeezed_error", hs, &rows.iter().map(|r| r.squeezed).collect::<Vec<_>>(), &mut fits, out)?;
        out.tables.push(fits);
    }
    Ok(())
}

fn scan_h(cfg: &ExperimentConfig, out: &mut Results) -> Result<()> {
    let hs = cfg.h_values();
    let (p, red) = reduction(cfg)?;
    out.metric("gap_min", red.projection.contour.gap.min_gap);
    let mut fits = defect_tables(&p, &red, &hs, out)?;
    if cfg.model.is_pair() {
        out.notes.push("leakage and packet errors are not scanned for pair models".into());
        out.tables.push(fits);
        return Ok(());
    }
    let rows = packet_rows(cfg, &red, &hs)?;
    let mut t = Table::new("scan", &["h", "leakage", "squeezed_error", "frozen_error"]);
    for r in &rows {
        t.push(vec![r.h.into(), r.leakage.into(), r.squeezed.into(), r.frozen.into()])?;
    }
    out.tables.push(t);
    packet_metrics(&rows, out);
    fit_series("leakage", &hs, &rows.iter().map(|r| r.leakage).collect::<Vec<_>>(), &mut fits, out)?;
    fit_series("squeezed_error", &hs, &rows.iter().map(|r| r.squeezed).collect::<Vec<_>>(), &mut fits, out)?;
    out.tables.push(fits);
    Ok(())
}

/// Propagate in the gauged frame, and separately in the ungauged frame from
/// the gauge-conjugated start, then compare at every recorded time.
fn frames(cfg: &ExperimentConfig, out: &mut Results) -> Result<()> {
    let h = cfg.pipeline.h;
    let s = grid_setup(cfg, h)?;
    let gauged = GridHamiltonian::for_model(&s.model, h, &s.grid, Frame::Gauged)?;
    let ungauged = GridHamiltonian::for_model(&s.model, h, &s.grid, Frame::Ungauged)?;
    let phi0 = initial_state(cfg, &s, h)?;
    let pc = propagator(cfg);
    let (samples, st_g) = propagate(&gauged, &phi0, &pc)?;
    stats_metrics("gauged_", &st_g, out);
    let u0 = gauge_conjugate(&phi0, &s.model, Frame::Ungauged)?;
    let mut t = Table::new("frames", &["t", "distance", "modulus_distance"]);
    let mut k = 0;
    let mut worst = 0.0f64;
    let mut last = 0.0;
    let (_, st_u) = propagate_observed(&ungauged, &u0, &pc, |u| {
        let g = gauge_conjugate(&samples[k], &s.model, Frame::Ungauged)?;
        k += 1;
        let c = compare_states(&g, u)?;
        worst = worst.max(c.distance);
        last = c.distance;
        t.push(vec![u.time.into(), c.distance.into(), c.modulus_distance.into()])
    })?;
    stats_metrics("ungauged_", &st_u, out);
    out.metric("frame_difference_final", last);
    out.metric("frame_difference_max", worst);
    out.tables.push(t);
    if cfg.pipeline.write_fields {
        out.fields.push(("gauged_final".into(), samples.last().expect("final sample").clone()));
    }
    Ok(())
}

/// Largest distance of the points from their principal axis, and the length of the polyline.
pub fn line_deviation(points: &[Vec<f64>]) -> (f64, f64) {
    let n = points.len() as f64;
    let d = points.first().map_or(0, |p| p.len());
    let mean: Vec<f64> = (0..d).map(|a| points.iter().map(|p| p[a]).sum::<f64>() / n).collect();
    let mut cov = nalgebra::DMatrix::<f64>::zeros(d, d);
    for p in points {
        for a in 0..d {
            for b in 0..d {
                cov[(a, b)] += (p[a] - mean[a]) * (p[b] - mean[b]);
            }
        }
    }
    let eig = cov.symmetric_eigen();
    let top = eig.eigenvalues.iter().enumerate().fold(0, |best, (i, v)| if *v > eig.eigenvalues[best] { i } else { best });
    let dir: Vec<f64> = (0..d).map(|a| eig.eigenvectors[(a, top)]).collect();
    let dev = points
        .iter()
        .map(|p| {
            let r: Vec<f64> = (0..d).map(|a| p[a] - mean[a]).collect();
            let along: f64 = r.iter().zip(&dir).map(|(u, v)| u * v).sum();
            r.iter().zip(&dir).map(|(u, v)| (u - along * v).powi(2)).sum::<f64>().sqrt()
        })
        .fold(0.0, f64::max);
    let length = points
        .windows(2)
        .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
        .sum();
    (dev, length)
}

fn straight_line(cfg: &ExperimentConfig, out: &mut Results) -> Result<()> {
    let h = cfg.pipeline.h;
    let s = grid_setup(cfg, h)?;
    let frame: Frame = cfg.pipeline.frame.into();
    if frame == Frame::Gauged && matches!(&s.model, FiberModel::Pair(m) if !m.is_neutral()) {
        return Err(Error::config("a charged pair has no gauged frame; set pipeline.frame = \"ungauged\""));
    }
    let op = GridHamiltonian::for_model(&s.model, h, &s.grid, frame)?;
    let phi0 = to_frame(initial_state(cfg, &s, h)?, &s.model, frame)?;
    let d = s.model.d();
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=d).map(|a| format!("x{a}")));
    let mut t = Table::with_columns("center", cols);
    let mut track = Vec::new();
    let (_, st) = propagate_observed(&op, &phi0, &propagator(cfg), |st| {
        let ob = observables(st, None, cfg.pipeline.group)?;
        let mut row: Vec<Cell> = vec![ob.time.into()];
        row.extend(ob.x_mean.iter().map(|&v| Cell::from(v)));
        track.push(ob.x_mean);
        t.push(row)
    })?;
    stats_metrics("", &st, out);
    let (dev, length) = line_deviation(&track);
    out.metric("line_deviation", dev);
    out.metric("path_length", length);
    out.metric("relative_deviation", if length > 0.0 { dev / length } else { f64::INFINITY });
    out.tables.push(t);
    if cfg.pipeline.frame == FrameConfig::Ungauged {
        out.notes.push("propagated in the ungauged frame".into());
    }
    Ok(())
}
