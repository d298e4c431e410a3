//! Scenario files.
//!
//! A scenario is a TOML document with one section per concern. Physical
//! quantities are in units with the particle mass, `ħ` and the grid length
//! chosen freely but consistently; the example scenarios under `scenarios/`
//! annotate every field.

use std::path::{Path, PathBuf};

use corridor_core::medium::{CouplingSpectrum, MediumSpec, SpectralDensity};
use corridor_core::readout::LagTable;
use corridor_core::table::read_table;
use corridor_core::{
    build_grids, FormFactor, GridParams, HamiltonianSpec, Measurement, MonitoredSystem,
    ObservableSpec, QuantumState, ReadoutTrajectory, SpatialGrid, TimeGrid,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub grid: GridSection,
    pub physics: PhysicsSection,
    #[serde(default)]
    pub measurement: MeasurementSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub engine: EngineSection,
    pub run: RunSection,
    #[serde(default)]
    pub checks: ChecksSection,
    #[serde(default)]
    pub report: ReportSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub medium: Option<MediumSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Periodic box length `L`.
    pub extent: f64,
    /// Number of lattice sites `n_q`, a power of two.
    pub points: usize,
    /// Total duration `T`.
    pub duration: f64,
    /// Number of time steps `N`.
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default)]
    pub potential: PotentialChoice,
    /// Measurement strength κ. Exactly one of `kappa` and `resolution`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    /// Measurement error `Δa_T` over the whole run, `κ = 1/(T Δa_T²)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialChoice {
    #[default]
    Free,
    Harmonic { omega: f64 },
    /// One value per site, or `(q, V)` rows.
    Tabulated { file: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObservableChoice {
    #[default]
    Position,
    Tabulated { file: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FormFactorChoice {
    #[default]
    Delta,
    Gaussian { tau: f64 },
    /// `(lag, weight)` rows.
    Tabulated { file: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSection {
    #[serde(default)]
    pub observable: ObservableChoice,
    #[serde(default)]
    pub form_factor: FormFactorChoice,
    /// `const:<a>`, `file:<path>` or `monitored`.
    #[serde(default = "default_readout")]
    pub readout: String,
}

impl Default for MeasurementSection {
    fn default() -> Self {
        Self {
            observable: ObservableChoice::default(),
            form_factor: FormFactorChoice::default(),
            readout: default_readout(),
        }
    }
}

/// Gaussian wavepacket `ψ₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default)]
    pub center: f64,
    #[serde(default = "one")]
    pub width: f64,
    #[serde(default)]
    pub momentum: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            center: 0.0,
            width: 1.0,
            momentum: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineMode {
    #[default]
    Exact,
    ClosedForm,
    GaussHermite,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AverageEngine {
    Lindblad,
    ReadoutAverage,
    Superpropagate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineSection {
    #[serde(default)]
    pub mode: EngineMode,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    #[serde(default = "all_average_engines")]
    pub average: Vec<AverageEngine>,
}

impl Default for EngineSection {
    fn default() -> Self {
        Self {
            mode: EngineMode::default(),
            samples: default_samples(),
            nodes: default_nodes(),
            average: all_average_engines(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

/// Tolerances for the numerical checks recorded in the manifest. A check
/// without a tolerance is reported but cannot fail.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unitarity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agreement: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSection {
    /// Site pairs `(k, l)` whose coherence `|ρ(q_k, q_l)|` is tracked.
    #[serde(default)]
    pub pairs: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumSection {
    /// Interaction range `l`.
    pub range: f64,
    #[serde(default = "default_corpus")]
    pub paths: usize,
    #[serde(default = "three")]
    pub dimension: usize,
    /// Path coordinates are drawn uniformly from `[-amplitude, amplitude]`.
    #[serde(default = "one")]
    pub amplitude: f64,
    /// Displacement scale factors for the validity sweep.
    #[serde(default = "default_scales")]
    pub scales: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<BandSection>,
}

/// Gaussian band of oscillator frequencies, `γ_ω² = γ₀² ω exp[-(ω-ω₀)²/2σ²]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandSection {
    pub density: f64,
    #[serde(default = "one")]
    pub oscillator_mass: f64,
    #[serde(default = "one")]
    pub gamma0: f64,
    #[serde(default)]
    pub center: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub points: usize,
    /// When set, each run lasts `duration_scale / sqrt(κ)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_scale: Option<f64>,
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    /// Fraction of the run, counted from the end, averaged as steady state.
    #[serde(default = "default_tail")]
    pub tail: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Study {
    TimeStep,
    Resolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSection {
    pub study: Study,
    #[serde(default = "default_levels")]
    pub levels: usize,
}

fn one() -> f64 {
    1.0
}
fn three() -> usize {
    3
}
fn default_readout() -> String {
    "const:0.0".into()
}
fn default_samples() -> usize {
    10_000
}
fn default_nodes() -> usize {
    40
}
fn all_average_engines() -> Vec<AverageEngine> {
    vec![
        AverageEngine::Lindblad,
        AverageEngine::ReadoutAverage,
        AverageEngine::Superpropagate,
    ]
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}
fn default_corpus() -> usize {
    100
}
fn default_scales() -> Vec<f64> {
    (0..8).map(|k| 0.01 * 2f64.powi(k)).collect()
}
fn default_trajectories() -> usize {
    8
}
fn default_tail() -> f64 {
    0.25
}
fn default_levels() -> usize {
    4
}

/// Readout source for the selective engines.
#[derive(Debug, Clone, PartialEq)]
pub enum ReadoutSource {
    Constant(f64),
    File(PathBuf),
    Monitored,
}

impl ReadoutSource {
    pub fn parse(spec: &str) -> Result<Self, CliError> {
        let bad = || CliError::field("measurement.readout", format!("expected const:<a>, file:<path> or monitored, got `{spec}`"));
        match spec.split_once(':') {
            Some(("const", v)) => v.trim().parse().map(Self::Constant).map_err(|_| bad()),
            Some(("file", p)) if !p.is_empty() => Ok(Self::File(PathBuf::from(p))),
            None if spec == "monitored" => Ok(Self::Monitored),
            _ => Err(bad()),
        }
    }
}

/// A validated scenario with every core object built.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    /// Directory that relative file references resolve against.
    pub base: PathBuf,
    pub system: MonitoredSystem,
    pub form_factor: FormFactor,
    pub initial: QuantumState,
    pub readout: ReadoutSource,
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// κ from whichever of `kappa` and `resolution` is given.
    pub fn kappa(&self) -> Result<f64, CliError> {
        match (self.physics.kappa, self.physics.resolution) {
            (Some(k), None) if k.is_finite() && k >= 0.0 => Ok(k),
            (Some(k), None) => Err(CliError::field("physics.kappa", format!("must be finite and >= 0, got {k}"))),
            (None, Some(r)) => Measurement::from_error(r, self.grid.duration)
                .map(|m| m.kappa())
                .map_err(|e| CliError::field("physics.resolution", e)),
            _ => Err(CliError::field("physics", "give exactly one of `kappa` and `resolution`")),
        }
    }

    pub fn validate(self, base: &Path) -> Result<Scenario, CliError> {
        let g = &self.grid;
        let (grid, time) = build_grids(&GridParams {
            extent: g.extent,
            points: g.points,
            duration: g.duration,
            steps: g.steps,
        })
        .map_err(|e| CliError::field("grid", e))?;
        let kappa = self.kappa()?;
        let hamiltonian = self.hamiltonian(&grid, base)?;
        let observable = match &self.measurement.observable {
            ObservableChoice::Position => ObservableSpec::position(&grid),
            ObservableChoice::Tabulated { file } => ObservableSpec::from_values(
                site_values(&grid, &base.join(file), "measurement.observable")?,
            )
            .map_err(|e| CliError::field("measurement.observable", e))?,
        };
        let system = MonitoredSystem::new(grid, time, hamiltonian, observable, kappa)
            .map_err(|e| CliError::field("physics", e))?;
        let form_factor = build_form_factor(&self.measurement.form_factor, &time, base)?;
        let i = &self.initial;
        if !(i.width.is_finite() && i.width > 0.0) {
            return Err(CliError::field("initial.width", "must be finite and > 0"));
        }
        if !(i.center.is_finite() && i.momentum.is_finite()) {
            return Err(CliError::field("initial", "center and momentum must be finite"));
        }
        let initial = QuantumState::gaussian(&system.grid, i.center, i.width, i.momentum, self.physics.hbar);
        let readout = ReadoutSource::parse(&self.measurement.readout)?;
        self.validate_sections()?;
        Ok(Scenario {
            base: base.to_path_buf(),
            system,
            form_factor,
            initial,
            readout,
            config: self,
        })
    }

    fn hamiltonian(&self, grid: &SpatialGrid, base: &Path) -> Result<HamiltonianSpec, CliError> {
        let p = &self.physics;
        for (name, v) in [("physics.mass", p.mass), ("physics.hbar", p.hbar)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::field(name, format!("must be finite and > 0, got {v}")));
            }
        }
        let h = match &p.potential {
            PotentialChoice::Free => HamiltonianSpec::free(grid, p.mass),
            PotentialChoice::Harmonic { omega } => {
                if !omega.is_finite() {
                    return Err(CliError::field("physics.potential.omega", "must be finite"));
                }
                HamiltonianSpec::harmonic(grid, p.mass, *omega)
            }
            PotentialChoice::Tabulated { file } => HamiltonianSpec::free(grid, p.mass)
                .with_potential(site_values(grid, &base.join(file), "physics.potential")?),
        }
        .with_hbar(p.hbar);
        h.validate(grid).map_err(|e| CliError::field("physics.potential", e))?;
        Ok(h)
    }

    fn validate_sections(&self) -> Result<(), CliError> {
        let e = &self.engine;
        if e.mode == EngineMode::MonteCarlo && e.samples == 0 {
            return Err(CliError::field("engine.samples", "must be >= 1"));
        }
        if e.mode == EngineMode::GaussHermite && e.nodes == 0 {
            return Err(CliError::field("engine.nodes", "must be >= 1"));
        }
        for [k, l] in &self.report.pairs {
            if *k >= self.grid.points || *l >= self.grid.points {
                return Err(CliError::field("report.pairs", format!("site ({k}, {l}) outside the grid")));
            }
        }
        if let Some(m) = &self.medium {
            if !(m.range.is_finite() && m.range > 0.0) {
                return Err(CliError::field("medium.range", "must be finite and > 0"));
            }
            if m.dimension == 0 {
                return Err(CliError::field("medium.dimension", "must be >= 1"));
            }
            if !(m.amplitude.is_finite() && m.amplitude > 0.0) {
                return Err(CliError::field("medium.amplitude", "must be finite and > 0"));
            }
            if m.scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
                return Err(CliError::field("medium.scales", "must be finite and > 0"));
            }
            if let Some(b) = &m.band {
                b.spec(m.range).validate().map_err(|e| CliError::field("medium.band", e))?;
            }
        }
        if let Some(s) = &self.sweep {
            if !(s.kappa_min > 0.0 && s.kappa_max > s.kappa_min && s.kappa_max.is_finite()) {
                return Err(CliError::field("sweep", "need 0 < kappa_min < kappa_max"));
            }
            if s.points < 2 || s.trajectories == 0 {
                return Err(CliError::field("sweep", "need points >= 2 and trajectories >= 1"));
            }
            if !(s.tail > 0.0 && s.tail <= 1.0) {
                return Err(CliError::field("sweep.tail", "must lie in (0, 1]"));
            }
            if let Some(d) = s.duration_scale {
                if !(d.is_finite() && d > 0.0) {
                    return Err(CliError::field("sweep.duration_scale", "must be finite and > 0"));
                }
            }
        }
        if let Some(c) = &self.convergence {
            if c.levels < 2 {
                return Err(CliError::field("convergence.levels", "must be >= 2"));
            }
        }
        Ok(())
    }
}

impl BandSection {
    pub fn spec(&self, range: f64) -> MediumSpec {
        MediumSpec {
            density: self.density,
            range,
            oscillator_mass: self.oscillator_mass,
            hbar: 1.0,
            coupling: CouplingSpectrum::GaussianBand {
                gamma0: self.gamma0,
                center: self.center,
                width: self.width,
            },
        }
    }

    pub fn density(&self, range: f64, hbar: f64) -> SpectralDensity {
        SpectralDensity::Medium(MediumSpec {
            hbar,
            ..self.spec(range)
        })
    }
}

pub fn build_form_factor(choice: &FormFactorChoice, time: &TimeGrid, base: &Path) -> Result<FormFactor, CliError> {
    let field = "measurement.form_factor";
    match choice {
        FormFactorChoice::Delta => Ok(FormFactor::delta(time)),
        FormFactorChoice::Gaussian { tau } => FormFactor::gaussian(time, *tau).map_err(|e| CliError::field(field, e)),
        FormFactorChoice::Tabulated { file } => {
            let rows = read_table(base.join(file)).map_err(|e| CliError::field(field, e))?;
            let table = LagTable::from_rows(&rows).map_err(|e| CliError::field(field, e))?;
            FormFactor::tabulated(time, &table).map_err(|e| CliError::field(field, e))
        }
    }
}

/// One value per site from a table with one column, or the last column of
/// `(q, value)` rows.
fn site_values(grid: &SpatialGrid, path: &Path, field: &'static str) -> Result<Vec<f64>, CliError> {
    let rows = read_table(path).map_err(|e| CliError::field(field, e))?;
    if rows.len() != grid.points() {
        return Err(CliError::field(
            field,
            format!("{} has {} rows for a {}-point grid", path.display(), rows.len(), grid.points()),
        ));
    }
    rows.iter()
        .map(|r| r.last().copied().ok_or_else(|| CliError::field(field, "empty row")))
        .collect()
}

/// Readout values for the selective engines.
pub fn load_readout(source: &ReadoutSource, steps: usize, base: &Path) -> Result<Option<ReadoutTrajectory>, CliError> {
    let field = "measurement.readout";
    match source {
        ReadoutSource::Constant(a) => Ok(Some(ReadoutTrajectory::constant(steps, *a))),
        ReadoutSource::Monitored => Ok(None),
        ReadoutSource::File(p) => {
            let rows = read_table(base.join(p)).map_err(|e| CliError::field(field, e))?;
            if rows.len() != steps {
                return Err(CliError::field(field, format!("{} readout samples for {steps} steps", rows.len())));
            }
            let values = rows.iter().filter_map(|r| r.last().copied()).collect();
            ReadoutTrajectory::new(values).map(Some).map_err(|e| CliError::field(field, e))
        }
    }
}
