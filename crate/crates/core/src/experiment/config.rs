use crate::error::{Error, Result};
use crate::models::{FiberModel, MatrixKind, MatrixModel, PairModel, Potential};
use crate::refsolver::{Frame, DEFAULT_POINT_BUDGET};
use crate::superadiabatic::DEFAULT_QUADRATURE;
use crate::symbols::{Axis, PhaseGrid};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

/// Pipeline selected by a config.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Superadiabatic projection and its defects.
    Project,
    /// Effective symbol `g` and its structure checks.
    Effective,
    /// Classical flow of `g` with the variational frame.
    PropagateCoherent,
    /// Grid propagation of an initial packet.
    PropagateGrid,
    /// Grid state against the assembled packet, or gauged against ungauged propagation.
    Compare,
    /// Defects, leakage and packet errors over `h_list` with fitted slopes.
    ScanH,
    /// Centre-of-mass track of a pair and its deviation from a straight line.
    StraightLine,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Project => "project",
            ExperimentKind::Effective => "effective",
            ExperimentKind::PropagateCoherent => "propagate-coherent",
            ExperimentKind::PropagateGrid => "propagate-grid",
            ExperimentKind::Compare => "compare",
            ExperimentKind::ScanH => "scan-h",
            ExperimentKind::StraightLine => "straight-line",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialConfig {
    Zero,
    Constant { value: f64 },
    Harmonic { k: f64 },
    SoftCoulomb { z: f64, a: f64 },
    Cosine { amplitude: f64, wavenumber: f64 },
}

impl Default for PotentialConfig {
    fn default() -> Self {
        PotentialConfig::Zero
    }
}

impl PotentialConfig {
    pub fn build(&self) -> Potential {
        match *self {
            PotentialConfig::Zero => Potential::Zero,
            PotentialConfig::Constant { value } => Potential::Constant(value),
            PotentialConfig::Harmonic { k } => Potential::Harmonic { k },
            PotentialConfig::SoftCoulomb { z, a } => Potential::SoftCoulomb { z, a },
            PotentialConfig::Cosine { amplitude, wavenumber } => Potential::Cosine { amplitude, wavenumber },
        }
    }
}

fn one() -> usize {
    1
}
fn two() -> usize {
    2
}
fn unit() -> f64 {
    1.0
}
fn minus_one() -> f64 {
    -1.0
}
fn harmonic_binding() -> PotentialConfig {
    PotentialConfig::Harmonic { k: 4.0 }
}
fn y_half() -> f64 {
    5.0
}
fn y_points() -> usize {
    32
}

/// The `[model]` table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    TwoLevel {
        #[serde(default = "one")]
        d: usize,
        gap: f64,
        mixing: f64,
        #[serde(default)]
        level: f64,
        #[serde(default = "unit")]
        wavenumber: f64,
    },
    ConstantFiber {
        #[serde(default = "one")]
        d: usize,
        energies: Vec<f64>,
        #[serde(default)]
        angle: f64,
        #[serde(default)]
        level: f64,
        #[serde(default = "unit")]
        wavenumber: f64,
    },
    Crossing {
        #[serde(default = "one")]
        d: usize,
        gap: f64,
        #[serde(default = "unit")]
        wavenumber: f64,
    },
    Pair {
        #[serde(default = "two")]
        d: usize,
        #[serde(default = "minus_one")]
        electron_charge: f64,
        #[serde(default = "unit")]
        nucleus_charge: f64,
        #[serde(default)]
        field: f64,
        #[serde(default = "harmonic_binding")]
        binding: PotentialConfig,
        #[serde(default)]
        nucleus_potential: PotentialConfig,
        #[serde(default)]
        electron_potential: PotentialConfig,
        /// Electronic box `[-y_half, y_half]` per axis.
        #[serde(default = "y_half")]
        y_half: f64,
        #[serde(default = "y_points")]
        y_points: usize,
        #[serde(default)]
        allow_non_neutral: bool,
    },
}

impl ModelConfig {
    pub fn d(&self) -> usize {
        match *self {
            ModelConfig::TwoLevel { d, .. }
            | ModelConfig::ConstantFiber { d, .. }
            | ModelConfig::Crossing { d, .. }
            | ModelConfig::Pair { d, .. } => d,
        }
    }

    pub fn is_pair(&self) -> bool {
        matches!(self, ModelConfig::Pair { .. })
    }

    /// The fiber model at semiclassical parameter `h` (only the pair depends on it).
    pub fn build(&self, h: f64) -> Result<FiberModel> {
        let matrix = |d, kind| MatrixModel::new(d, kind).map(FiberModel::Matrix);
        match self {
            ModelConfig::TwoLevel { d, gap, mixing, level, wavenumber } => matrix(
                *d,
                MatrixKind::TwoLevel { gap: *gap, mixing: *mixing, level: *level, wavenumber: *wavenumber },
            ),
            ModelConfig::ConstantFiber { d, energies, angle, level, wavenumber } => matrix(
                *d,
                MatrixKind::ConstantFiber { energies: energies.clone(), angle: *angle, level: *level, wavenumber: *wavenumber },
            ),
            ModelConfig::Crossing { d, gap, wavenumber } => matrix(*d, MatrixKind::Crossing { gap: *gap, wavenumber: *wavenumber }),
            ModelConfig::Pair {
                d,
                electron_charge,
                nucleus_charge,
                field,
                binding,
                nucleus_potential,
                electron_potential,
                y_half,
                y_points,
                allow_non_neutral,
            } => {
                if !(*y_half > 0.0) {
                    return Err(Error::config("model.y_half must be positive"));
                }
                let ax = Axis::periodic(-y_half, *y_half, *y_points).map_err(|e| as_config("model", e))?;
                let m = PairModel {
                    d: *d,
                    h,
                    electron_charge: *electron_charge,
                    nucleus_charge: *nucleus_charge,
                    field: *field,
                    binding: binding.build(),
                    nucleus_potential: nucleus_potential.build(),
                    electron_potential: electron_potential.build(),
                    y_axes: vec![ax; *d],
                    allow_non_neutral: *allow_non_neutral,
                };
                m.validate()?;
                Ok(FiberModel::Pair(m))
            }
        }
    }
}

/// Shape problems found while building from a config are config errors.
fn as_config(section: &str, e: Error) -> Error {
    match e {
        Error::Structural { axis, detail } => Error::config(format!("[{section}] {axis}: {detail}")),
        other => other,
    }
}

fn x_half() -> f64 {
    2.0 * PI
}
fn x_points() -> usize {
    32
}
fn xi_max() -> f64 {
    3.0
}
fn xi_points() -> usize {
    16
}
fn fiber_count() -> usize {
    4
}
fn tensor_points() -> usize {
    256
}
fn budget() -> usize {
    DEFAULT_POINT_BUDGET
}

/// The `[grid]` table: the phase-space grid of the symbol calculus and the
/// nuclear axes of the reference solver. Both boxes are centred at the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "x_half")]
    pub x_half: f64,
    #[serde(default = "x_points")]
    pub x_points: usize,
    #[serde(default = "xi_max")]
    pub xi_max: f64,
    #[serde(default = "xi_points")]
    pub xi_points: usize,
    /// Electronic levels kept in the symbol of a pair model.
    #[serde(default = "fiber_count")]
    pub fiber_count: usize,
    #[serde(default = "x_half")]
    pub tensor_x_half: f64,
    #[serde(default = "tensor_points")]
    pub tensor_x_points: usize,
    #[serde(default = "budget")]
    pub point_budget: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        toml::from_str("").expect("every grid field has a default")
    }
}

impl GridConfig {
    pub fn phase_grid(&self, d: usize) -> Result<Arc<PhaseGrid>> {
        PhaseGrid::uniform(d, (-self.x_half, self.x_half), self.x_points, self.xi_max, self.xi_points)
            .map(Arc::new)
            .map_err(|e| as_config("grid", e))
    }

    pub fn tensor_axes(&self, d: usize) -> Result<Vec<Axis>> {
        let ax = Axis::periodic(-self.tensor_x_half, self.tensor_x_half, self.tensor_x_points).map_err(|e| as_config("grid", e))?;
        Ok(vec![ax; d])
    }
}

/// Initial grid state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    /// The isotropic packet at `(x0, xi0)`.
    Packet,
    /// The free packet continued backwards by `T/2`, narrowest at mid-run.
    Focusing,
}

/// Electronic factor of the initial grid state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FiberState {
    /// Lowest fiber eigenvector at rest.
    #[default]
    Bare,
    /// Pair only: ground state polarized by the packet momentum `xi0`.
    Dressed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompareMode {
    /// Grid evolution against the assembled squeezed and frozen packets.
    Packet,
    /// Propagate-then-gauge against gauge-then-propagate.
    Frames,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameConfig {
    Gauged,
    Ungauged,
}

impl From<FrameConfig> for Frame {
    fn from(f: FrameConfig) -> Frame {
        match f {
            FrameConfig::Gauged => Frame::Gauged,
            FrameConfig::Ungauged => Frame::Ungauged,
        }
    }
}

fn default_h() -> f64 {
    0.1
}
fn contour_nodes() -> usize {
    DEFAULT_QUADRATURE
}
fn gap_threshold() -> f64 {
    1e-3
}
fn flow_dt() -> f64 {
    1e-3
}
fn grid_dt() -> f64 {
    0.01
}
fn krylov_dim() -> usize {
    32
}
fn krylov_tolerance() -> f64 {
    1e-9
}
fn wrap_limit() -> f64 {
    1e-6
}
fn yes() -> bool {
    true
}
fn stride() -> usize {
    10
}
fn initial() -> InitialState {
    InitialState::Packet
}
fn compare() -> CompareMode {
    CompareMode::Packet
}
fn frame() -> FrameConfig {
    FrameConfig::Gauged
}

/// The `[pipeline]` table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_h")]
    pub h: f64,
    /// Values scanned by `scan-h`; ascending or descending, geometric.
    #[serde(default)]
    pub h_list: Vec<f64>,
    /// Truncation order `N` of the projection and of `g`.
    #[serde(default = "two")]
    pub order: usize,
    /// Number of levels in the isolated group.
    #[serde(default = "one")]
    pub group: usize,
    /// Contour nodes `M` per half loop.
    #[serde(default = "contour_nodes")]
    pub contour_nodes: usize,
    #[serde(default = "gap_threshold")]
    pub gap_threshold: f64,
    /// Order of `g` driving the classical flow.
    #[serde(default)]
    pub flow_order: usize,
    /// Classical integrator step.
    #[serde(default = "flow_dt")]
    pub dt: f64,
    /// Grid propagator step.
    #[serde(default = "grid_dt")]
    pub grid_dt: f64,
    #[serde(default = "unit")]
    pub t_final: f64,
    #[serde(default = "krylov_dim")]
    pub krylov_dim: usize,
    #[serde(default = "krylov_tolerance")]
    pub krylov_tolerance: f64,
    #[serde(default = "yes")]
    pub reorthogonalize: bool,
    /// Largest squared norm tolerated next to any periodic edge.
    #[serde(default = "wrap_limit")]
    pub wrap_limit: f64,
    /// Propagator steps between recorded samples.
    #[serde(default = "stride")]
    pub stride: usize,
    #[serde(default)]
    pub x0: Vec<f64>,
    #[serde(default)]
    pub xi0: Vec<f64>,
    #[serde(default)]
    pub ladder: Vec<usize>,
    #[serde(default = "frame")]
    pub frame: FrameConfig,
    #[serde(default = "initial")]
    pub initial: InitialState,
    #[serde(default)]
    pub fiber_state: FiberState,
    #[serde(default = "compare")]
    pub compare: CompareMode,
    /// Write the final grid states as binary fields.
    #[serde(default)]
    pub write_fields: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        toml::from_str("").expect("every pipeline field has a default")
    }
}

/// `metric` must lie in `[min, max]`; either bound may be left out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assertion {
    pub metric: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

/// A complete experiment description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Seed for randomized test states.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    pub model: ModelConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub pipeline: PipelineConfig,
    #[serde(default)]
    pub assertions: Vec<Assertion>,
}

impl ExperimentConfig {
    /// Parse and check a TOML document. Unknown keys are rejected.
    pub fn from_toml(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        ExperimentConfig::from_toml(&text)
    }

    /// The config with every default filled in.
    pub fn resolved(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }

    /// sha256 of the resolved config, hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.resolved().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// The `h` values of the run: `h_list` when given, otherwise `[h]`.
    pub fn h_values(&self) -> Vec<f64> {
        if self.pipeline.h_list.is_empty() {
            vec![self.pipeline.h]
        } else {
            self.pipeline.h_list.clone()
        }
    }

    /// Consistency checks that need no numerics.
    pub fn check(&self) -> Result<()> {
        let d = self.model.d();
        let p = &self.pipeline;
        for h in self.h_values() {
            if !(h > 0.0 && h < 1.0) {
                return Err(Error::config(format!("h = {h} must lie in (0, 1)")));
            }
        }
        if self.experiment == ExperimentKind::ScanH {
            check_geometric(&p.h_list)?;
        }
        if !p.x0.is_empty() && p.x0.len() != d || !p.xi0.is_empty() && p.xi0.len() != d || !p.ladder.is_empty() && p.ladder.len() != d {
            return Err(Error::config(format!("pipeline.x0, xi0 and ladder need {d} components")));
        }
        if !(p.dt > 0.0) || !(p.grid_dt > 0.0) || !p.t_final.is_finite() {
            return Err(Error::config("pipeline.dt and grid_dt must be positive and t_final finite"));
        }
        if p.stride == 0 || p.krylov_dim < 2 {
            return Err(Error::config("pipeline.stride must be positive and krylov_dim at least 2"));
        }
        if p.group == 0 || p.contour_nodes < 4 {
            return Err(Error::config("pipeline.group must be positive and contour_nodes at least 4"));
        }
        if p.flow_order > p.order {
            return Err(Error::config(format!("pipeline.flow_order {} exceeds order {}", p.flow_order, p.order)));
        }
        if self.experiment == ExperimentKind::StraightLine && !self.model.is_pair() {
            return Err(Error::config("straight-line runs need a pair model"));
        }
        if p.fiber_state == FiberState::Dressed && !self.model.is_pair() {
            return Err(Error::config("dressed fiber states need a pair model"));
        }
        if p.frame == FrameConfig::Ungauged && !self.model.is_pair() {
            return Err(Error::config("only pair models have an ungauged frame"));
        }
        for a in &self.assertions {
            if a.min.is_none() && a.max.is_none() {
                return Err(Error::config(format!("assertion on {} has neither min nor max", a.metric)));
            }
        }
        Ok(())
    }

    pub fn x0(&self) -> Vec<f64> {
        or_zeros(&self.pipeline.x0, self.model.d())
    }

    pub fn xi0(&self) -> Vec<f64> {
        or_zeros(&self.pipeline.xi0, self.model.d())
    }

    pub fn ladder(&self) -> Vec<usize> {
        if self.pipeline.ladder.is_empty() {
            vec![0; self.model.d()]
        } else {
            self.pipeline.ladder.clone()
        }
    }
}

fn or_zeros(v: &[f64], d: usize) -> Vec<f64> {
    if v.is_empty() {
        vec![0.0; d]
    } else {
        v.to_vec()
    }
}

/// At least three values with a common ratio (to 1%).
fn check_geometric(hs: &[f64]) -> Result<()> {
    if hs.len() < 3 {
        return Err(Error::config(format!("scan-h needs at least 3 values in pipeline.h_list, got {}", hs.len())));
    }
    let r = hs[1] / hs[0];
    if (r - 1.0).abs() < 1e-3 || hs.windows(2).any(|w| ((w[1] / w[0]) / r - 1.0).abs() > 0.01) {
        return Err(Error::config(format!("pipeline.h_list {hs:?} is not a geometric sequence")));
    }
    Ok(())
}
