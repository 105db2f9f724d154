//! Experiment configuration: TOML text with one table per concern.
//!
//! Every key has a default, so an empty file describes the reference
//! scenario. Powers are given in dBm and SNRs in dB; [`ExperimentConfig::scenario`]
//! converts them to watts and linear ratios.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::channel::PhaseModel;
use crate::geometry::{BsArray, EveModel, Jammer, Point3, Scenario, SPEED_OF_LIGHT};
use crate::precoding::RoundingMethod;
use crate::simulation::Constellation;
use crate::units::{db_to_linear, dbm_to_watts};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Channel capacity of the optimized layout against the ULA baseline.
    #[default]
    Capacity,
    /// Transmit and receive beam patterns of one solved link.
    Pattern,
    /// Rounded transmit power of the secure precoder against ZF over a ULA.
    Power,
    /// Transmit gain of a planar virtual array over azimuth and polar angle.
    PlanarPattern,
    /// Worst-case output SJNR of robust and LCMV receive weights.
    RobustSjnr,
    /// Capacity and power of the ZF precoder over a uniform layout alone.
    BaselineZfUla,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Capacity => "capacity",
            ExperimentKind::Pattern => "pattern",
            ExperimentKind::Power => "power",
            ExperimentKind::PlanarPattern => "planar-pattern",
            ExperimentKind::RobustSjnr => "robust-sjnr",
            ExperimentKind::BaselineZfUla => "baseline-zf-ula",
        }
    }

    /// Sweep axes the driver understands; the first is the default.
    pub fn axes(&self) -> &'static [SweepAxis] {
        match self {
            ExperimentKind::Capacity => &[SweepAxis::SnrDb],
            ExperimentKind::Pattern | ExperimentKind::PlanarPattern => &[SweepAxis::AzimuthDeg],
            ExperimentKind::Power => &[SweepAxis::Nodes, SweepAxis::SnrDb],
            ExperimentKind::RobustSjnr => &[SweepAxis::SnrDb, SweepAxis::Uncertainty],
            ExperimentKind::BaselineZfUla => &[SweepAxis::SnrDb, SweepAxis::Nodes],
        }
    }

    /// Pattern experiments evaluate one deterministic link.
    pub fn single_shot(&self) -> bool {
        matches!(self, ExperimentKind::Pattern | ExperimentKind::PlanarPattern)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Received SNR `γ` in dB.
    SnrDb,
    /// Number of flight nodes `L`.
    Nodes,
    /// Relative steering uncertainty `ε/‖ã‖` of the receive beamformer.
    Uncertainty,
    /// Azimuth grid of a beam pattern in degrees.
    AzimuthDeg,
}

impl SweepAxis {
    /// CSV column name.
    pub fn column(&self) -> &'static str {
        match self {
            SweepAxis::SnrDb => "gamma_db",
            SweepAxis::Nodes => "nodes",
            SweepAxis::Uncertainty => "epsilon_rel",
            SweepAxis::AzimuthDeg => "azimuth_deg",
        }
    }

    fn default_values(&self) -> Vec<f64> {
        match self {
            SweepAxis::SnrDb => (0..=6).map(|i| 5.0 * i as f64).collect(),
            SweepAxis::Nodes => vec![8.0, 12.0, 16.0, 20.0, 24.0],
            SweepAxis::Uncertainty => vec![0.0, 0.05, 0.1, 0.2],
            SweepAxis::AzimuthDeg => (0..=1800).map(|i| 0.1 * i as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub carrier_frequency_hz: f64,
    pub wave_speed: f64,
    pub bs_position: [f64; 3],
    pub bs_elements: usize,
    /// Element spacing in metres; half a wavelength when absent.
    pub bs_spacing_m: Option<f64>,
    pub eves: Vec<[f64; 3]>,
    /// Eavesdropper channel uncertainty radius relative to `‖ĥ‖`.
    pub eve_uncertainty: f64,
    /// Jamming power of eavesdropper `q`; shorter than `eves` means the rest stay silent.
    pub jammer_power_dbm: Vec<f64>,
    pub noise_power_dbm: f64,
    pub eve_noise_power_dbm: f64,
    pub eve_tolerance_db: f64,
    /// Per-node power cap; `inf` disables it.
    pub max_power_dbm: f64,
    pub qos_snr_db: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            carrier_frequency_hz: 1e9,
            wave_speed: SPEED_OF_LIGHT,
            bs_position: [-22.0, 127.0, 75.0],
            bs_elements: 32,
            bs_spacing_m: None,
            eves: vec![[-95.0, 88.0, 75.0], [104.0, 78.0, 75.0]],
            eve_uncertainty: 0.0,
            jammer_power_dbm: vec![-40.0, -40.0],
            noise_power_dbm: -100.0,
            eve_noise_power_dbm: -100.0,
            eve_tolerance_db: 0.0,
            max_power_dbm: 0.0,
            qos_snr_db: 20.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    /// Multistart maximization of the Vandermonde gain for `K` streams.
    #[default]
    Optimized,
    /// All `L` nodes on the Gauss-Lobatto points of order `L`.
    Fekete,
    /// `L/K` nodes stacked on each of the `K` Gauss-Lobatto points.
    Grouped,
    /// Grouped layout with each group spread evenly over `group_width`.
    Spread,
    /// Uniform spacing over `[-1, 1]`.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanarConfig {
    pub nodes_x: usize,
    pub nodes_y: usize,
    pub streams_x: usize,
    pub streams_y: usize,
    pub aperture_x_m: f64,
    pub aperture_y_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LayoutConfig {
    pub nodes: usize,
    pub streams: usize,
    pub aperture_m: f64,
    pub placement: Placement,
    /// Normalized extent of each group for the `spread` placement.
    pub group_width: f64,
    pub rotation_deg: f64,
    /// Half-width of the uniform random rotation offset drawn per trial.
    pub rotation_jitter_deg: f64,
    /// Required by `planar-pattern`, ignored otherwise.
    pub planar: Option<PlanarConfig>,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig {
            nodes: 16,
            streams: 1,
            aperture_m: 4.0,
            placement: Placement::Optimized,
            group_width: 0.2,
            rotation_deg: 0.0,
            rotation_jitter_deg: 15.0,
            planar: None,
        }
    }
}

/// Sweep values, either listed or as an inclusive `start..=stop` range.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub axis: Option<SweepAxis>,
    pub values: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub candidates: usize,
    pub rounding: RoundingMethod,
    /// Try the other rounding methods when the configured one finds nothing.
    pub rounding_fallback: bool,
    pub tolerance: f64,
    pub feasibility_tolerance: f64,
    pub max_iterations: usize,
    pub eve_phase_model: PhaseModel,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let sdp = crate::sdp::SdpSettings::default();
        SolverConfig {
            candidates: 200,
            rounding: RoundingMethod::EigenSphere,
            rounding_fallback: true,
            tolerance: sdp.tolerance,
            feasibility_tolerance: sdp.feasibility_tolerance,
            max_iterations: sdp.max_iterations,
            eve_phase_model: PhaseModel::Geometric,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReceiverConfig {
    /// Steering uncertainty `ε/‖ã‖` when the sweep is not over it.
    pub steering_uncertainty: f64,
    /// Sample covariance from this many snapshots; 0 uses the exact covariance.
    pub snapshots: usize,
    pub diagonal_loading: f64,
    pub robust_tolerance: f64,
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        ReceiverConfig {
            steering_uncertainty: 0.1,
            snapshots: 0,
            diagonal_loading: crate::receiving::DEFAULT_LOADING,
            robust_tolerance: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PatternConfig {
    /// Polar angles of the planar gain grid.
    pub polar_start_deg: f64,
    pub polar_stop_deg: f64,
    pub polar_step_deg: f64,
}

impl Default for PatternConfig {
    fn default() -> Self {
        PatternConfig { polar_start_deg: 0.0, polar_stop_deg: 90.0, polar_step_deg: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub sub_symbols: usize,
    pub constellation: Constellation,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig { sub_symbols: 1024, constellation: Constellation::Qpsk }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub trials: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub scenario: ScenarioConfig,
    pub layout: LayoutConfig,
    pub sweep: SweepConfig,
    pub solver: SolverConfig,
    pub receiver: ReceiverConfig,
    pub pattern: PatternConfig,
    pub simulation: SimulationConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: ExperimentKind::default(),
            trials: 1,
            seed: 0,
            output_dir: PathBuf::from("out"),
            scenario: ScenarioConfig::default(),
            layout: LayoutConfig::default(),
            sweep: SweepConfig::default(),
            solver: SolverConfig::default(),
            receiver: ReceiverConfig::default(),
            pattern: PatternConfig::default(),
            simulation: SimulationConfig::default(),
        }
    }
}

/// Parses and validates a configuration, filling the sweep defaults of its kind.
pub fn load_config(text: &str) -> Result<ExperimentConfig> {
    let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
    cfg.resolve()?;
    Ok(cfg)
}

fn cfg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

impl ExperimentConfig {
    /// Fills the sweep from its range or the kind's default and checks every field.
    pub fn resolve(&mut self) -> Result<()> {
        let axes = self.kind.axes();
        let axis = match self.sweep.axis {
            Some(a) if axes.contains(&a) => a,
            Some(a) => {
                return cfg_err(format!("sweep axis {} is not available for {}", a.column(), self.kind.name()))
            }
            None => axes[0],
        };
        self.sweep.axis = Some(axis);
        let range = (self.sweep.start, self.sweep.stop, self.sweep.step);
        let values = match (&self.sweep.values, range) {
            (Some(_), (None, None, None)) => self.sweep.values.clone().unwrap(),
            (Some(_), _) => return cfg_err("sweep takes either values or start/stop/step, not both"),
            (None, (None, None, None)) => axis.default_values(),
            (None, (Some(a), Some(b), Some(s))) => {
                if !(s > 0.0 && a.is_finite() && b.is_finite() && b >= a) {
                    return cfg_err("sweep range needs finite start <= stop and a positive step");
                }
                let n = ((b - a) / s + 1e-9).floor() as usize;
                if n > 1_000_000 {
                    return cfg_err("sweep range has more than a million points");
                }
                (0..=n).map(|i| a + s * i as f64).collect()
            }
            (None, _) => return cfg_err("sweep range needs all of start, stop and step"),
        };
        self.sweep = SweepConfig { axis: Some(axis), values: Some(values), start: None, stop: None, step: None };
        self.validate()
    }

    pub fn axis(&self) -> SweepAxis {
        self.sweep.axis.unwrap_or(self.kind.axes()[0])
    }

    pub fn sweep_values(&self) -> &[f64] {
        self.sweep.values.as_deref().unwrap_or(&[])
    }

    pub fn validate(&self) -> Result<()> {
        let values = self.sweep_values();
        if values.is_empty() {
            return cfg_err("sweep has no values");
        }
        if values.iter().any(|v| !v.is_finite()) {
            return cfg_err("sweep values must be finite");
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return cfg_err("sweep values must be strictly increasing");
        }
        if self.axis() == SweepAxis::Nodes && values.iter().any(|v| *v < 1.0 || v.fract() != 0.0) {
            return cfg_err("node counts must be positive integers");
        }
        if self.axis() == SweepAxis::Uncertainty && values.iter().any(|v| *v < 0.0) {
            return cfg_err("uncertainty values must be non-negative");
        }
        if self.trials == 0 {
            return cfg_err("trials must be at least 1");
        }
        if self.kind.single_shot() && self.trials != 1 {
            return cfg_err(format!("{} experiments evaluate a single link; trials must be 1", self.kind.name()));
        }

        let s = &self.scenario;
        let finite = |name: &str, v: f64| if v.is_finite() { Ok(()) } else { cfg_err(format!("{name} must be finite")) };
        finite("scenario.noise_power_dbm", s.noise_power_dbm)?;
        finite("scenario.eve_noise_power_dbm", s.eve_noise_power_dbm)?;
        finite("scenario.eve_tolerance_db", s.eve_tolerance_db)?;
        finite("scenario.qos_snr_db", s.qos_snr_db)?;
        for p in &s.jammer_power_dbm {
            if p.is_nan() || *p == f64::INFINITY {
                return cfg_err("scenario.jammer_power_dbm entries must be below +inf");
            }
        }
        if s.max_power_dbm.is_nan() || s.max_power_dbm == f64::NEG_INFINITY {
            return cfg_err("scenario.max_power_dbm must be a number or inf");
        }
        if s.jammer_power_dbm.len() > s.eves.len() {
            return cfg_err("more jammer powers than eavesdroppers");
        }
        if s.bs_elements == 0 {
            return cfg_err("scenario.bs_elements must be positive");
        }
        if !(s.eve_uncertainty >= 0.0 && s.eve_uncertainty.is_finite()) {
            return cfg_err("scenario.eve_uncertainty must be non-negative");
        }
        if s.bs_spacing_m.is_some_and(|d| !(d > 0.0 && d.is_finite())) {
            return cfg_err("scenario.bs_spacing_m must be positive");
        }

        let l = &self.layout;
        if l.nodes == 0 || l.streams == 0 || l.streams > l.nodes {
            return cfg_err("layout needs 1 <= streams <= nodes");
        }
        if !(l.aperture_m > 0.0 && l.aperture_m.is_finite()) {
            return cfg_err("layout.aperture_m must be positive");
        }
        if !(l.group_width >= 0.0 && l.group_width <= 2.0) {
            return cfg_err("layout.group_width must lie in [0, 2]");
        }
        finite("layout.rotation_deg", l.rotation_deg)?;
        if !(l.rotation_jitter_deg >= 0.0 && l.rotation_jitter_deg <= 180.0) {
            return cfg_err("layout.rotation_jitter_deg must lie in [0, 180]");
        }
        if self.kind == ExperimentKind::PlanarPattern {
            let Some(p) = &l.planar else {
                return cfg_err("planar-pattern needs a [layout.planar] table");
            };
            if p.nodes_x == 0 || p.nodes_y == 0 || p.streams_x == 0 || p.streams_y == 0 {
                return cfg_err("planar layout counts must be positive");
            }
            if p.nodes_x % p.streams_x != 0 || p.nodes_y % p.streams_y != 0 {
                return cfg_err("planar streams must divide nodes on each axis");
            }
            if !(p.aperture_x_m > 0.0 && p.aperture_y_m > 0.0) {
                return cfg_err("planar apertures must be positive");
            }
        }

        let sv = &self.solver;
        if sv.candidates == 0 {
            return cfg_err("solver.candidates must be positive");
        }
        if !(sv.tolerance > 0.0 && sv.feasibility_tolerance > 0.0) || sv.max_iterations == 0 {
            return cfg_err("solver tolerances and iteration limit must be positive");
        }
        let r = &self.receiver;
        if !(r.steering_uncertainty >= 0.0 && r.steering_uncertainty.is_finite()) {
            return cfg_err("receiver.steering_uncertainty must be non-negative");
        }
        if !(r.diagonal_loading >= 0.0) || !(r.robust_tolerance > 0.0 && r.robust_tolerance < 1.0) {
            return cfg_err("receiver loading must be non-negative and robust_tolerance in (0, 1)");
        }
        let p = &self.pattern;
        if !(p.polar_step_deg > 0.0 && p.polar_start_deg <= p.polar_stop_deg) {
            return cfg_err("pattern polar grid needs start <= stop and a positive step");
        }
        if self.simulation.sub_symbols == 0 {
            return cfg_err("simulation.sub_symbols must be positive");
        }
        // Catches geometric problems such as a BS at the origin.
        self.scenario()?;
        Ok(())
    }

    /// The physical scenario in SI units; eavesdropper radii are applied per
    /// layout since they are relative to the channel estimate.
    pub fn scenario(&self) -> Result<Scenario> {
        let s = &self.scenario;
        let scn = Scenario {
            carrier_frequency: s.carrier_frequency_hz,
            wave_speed: s.wave_speed,
            bs_center: Point3::from(s.bs_position),
            bs_array: BsArray::Linear(s.bs_elements),
            bs_spacing: s.bs_spacing_m.unwrap_or(s.wave_speed / (2.0 * s.carrier_frequency_hz)),
            eves: s.eves.iter().map(|p| EveModel { position: Point3::from(*p), uncertainty_radius: 0.0 }).collect(),
            jammers: s
                .jammer_power_dbm
                .iter()
                .enumerate()
                .map(|(eve, p)| Jammer { eve, power: dbm_to_watts(*p) })
                .collect(),
            noise_power_bs: dbm_to_watts(s.noise_power_dbm),
            noise_power_eve: dbm_to_watts(s.eve_noise_power_dbm),
            eve_snr_tolerance: db_to_linear(s.eve_tolerance_db),
            max_node_power: dbm_to_watts(s.max_power_dbm),
            qos_snr: db_to_linear(s.qos_snr_db),
            rng_seed: self.seed,
        };
        scn.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(scn)
    }

    /// SHA-256 of the canonical JSON form, ignoring the output directory.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let json = serde_json::to_string(&canonical).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
