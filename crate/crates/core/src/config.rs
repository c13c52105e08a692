//! Experiment configuration files and the shipped presets.
//!
//! Frequencies in configuration files are cyclic (MHz) and are converted with
//! [`mhz`] on use; times are in μs. Sweep coefficients follow the same rule:
//! `Δ/2π = a(t−t0)³ + b(t−t0) + c` (cubic, `a` in MHz/μs³, `b` in MHz/μs) or
//! `Δ/2π = a·tan(b(t−t0)) + c` (tangent, `a` in MHz, `b` in rad/μs).

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::basis::{Configuration, CAP_CONSTRAINED, CAP_FULL, MAX_SITES};
use crate::detection::DetectionModel;
use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianMode;
use crate::model::{
    c6_from_pair, cubic_sweep, mhz, quench_schedule, tangent_sweep, AtomArray, PulseSchedule, SweepParams, OMEGA_MHZ,
    SPACING_Z2_UM, SPACING_Z4_UM, V_NN_TAIL_MHZ, V_NN_Z2_MHZ, Z2_SWEEP_US,
};
use crate::observables::Observable;
use crate::thermal::ThermalModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Rabi,
    Sweep,
    Quench,
    Thermal,
    Reconstruct,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Rabi => "rabi",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::Quench => "quench",
            ExperimentKind::Thermal => "thermal",
            ExperimentKind::Reconstruct => "reconstruct",
        }
    }
}

/// Propagation backend. `variational` integrates the two-angle equations of
/// motion and only serves quenches from the crystal or the ground state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[default]
    ExactFull,
    ExactConstrained,
    ConstrainedWithTail,
    Mps,
    Variational,
}

impl Backend {
    pub fn mode(self) -> Option<HamiltonianMode> {
        match self {
            Backend::ExactFull => Some(HamiltonianMode::Full),
            Backend::ExactConstrained => Some(HamiltonianMode::ConstrainedNn),
            Backend::ConstrainedWithTail => Some(HamiltonianMode::ConstrainedWithTail),
            Backend::Mps | Backend::Variational => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepShape {
    Cubic,
    Tangent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub kind: SweepShape,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub t0_us: f64,
    pub delta_min_mhz: f64,
    pub delta_max_mhz: f64,
    pub duration_us: f64,
}

impl SweepConfig {
    /// Expresses angular sweep parameters in configuration units.
    pub fn from_params(kind: SweepShape, p: &SweepParams, duration_us: f64) -> Self {
        let f = 1.0 / mhz(1.0);
        let b = match kind {
            SweepShape::Cubic => p.b * f,
            SweepShape::Tangent => p.b,
        };
        Self {
            kind,
            a: p.a * f,
            b,
            c: p.c * f,
            t0_us: p.t0,
            delta_min_mhz: p.delta_min * f,
            delta_max_mhz: p.delta_max * f,
            duration_us,
        }
    }

    pub fn params(&self) -> SweepParams {
        let b = match self.kind {
            SweepShape::Cubic => mhz(self.b),
            SweepShape::Tangent => self.b,
        };
        SweepParams {
            a: mhz(self.a),
            b,
            c: mhz(self.c),
            t0: self.t0_us,
            delta_min: mhz(self.delta_min_mhz),
            delta_max: mhz(self.delta_max_mhz),
        }
    }

    pub fn schedule(&self, omega: f64) -> Result<PulseSchedule> {
        match self.kind {
            SweepShape::Cubic => cubic_sweep(self.params(), self.duration_us, omega),
            SweepShape::Tangent => tangent_sweep(self.params(), self.duration_us, omega),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuenchConfig {
    pub hold_us: f64,
    #[serde(default)]
    pub delta_mhz: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n_atoms: usize,
    #[serde(default)]
    pub spacing_um: Option<f64>,
    #[serde(default)]
    pub positions_um: Option<Vec<f64>>,
    /// Interaction of the first pair (MHz) at its actual separation; calibrates `C6`.
    #[serde(default = "default_v_nn")]
    pub v_nn_mhz: f64,
    #[serde(default = "default_omega")]
    pub omega_mhz: f64,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub quench: Option<QuenchConfig>,
}

fn default_v_nn() -> f64 {
    V_NN_Z2_MHZ
}

fn default_omega() -> f64 {
    OMEGA_MHZ
}

impl ModelConfig {
    pub fn omega(&self) -> f64 {
        mhz(self.omega_mhz)
    }

    /// Array of `n_atoms` sites (the first `n` when `n` is smaller).
    pub fn array_of(&self, n: usize) -> Result<AtomArray> {
        match (&self.positions_um, self.spacing_um) {
            (Some(p), None) => {
                if p.len() < 2 {
                    let c6 = c6_from_pair(SPACING_Z2_UM, mhz(self.v_nn_mhz));
                    return AtomArray::new(p[..n].to_vec(), c6);
                }
                let c6 = c6_from_pair((p[1] - p[0]).abs(), mhz(self.v_nn_mhz));
                AtomArray::new(p[..n].to_vec(), c6)
            }
            (None, Some(a)) => AtomArray::uniform(n, a, mhz(self.v_nn_mhz)),
            _ => Err(Error::Config("model needs exactly one of spacing_um and positions_um".into())),
        }
    }

    pub fn array(&self) -> Result<AtomArray> {
        self.array_of(self.n_atoms)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumericsConfig {
    #[serde(default = "default_dt")]
    pub dt_us: f64,
    #[serde(default = "default_krylov")]
    pub krylov_dim: usize,
    #[serde(default = "default_d_max")]
    pub d_max: usize,
    #[serde(default = "default_trunc")]
    pub trunc_eps: f64,
    /// Number of sampling intervals along the run.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_dt() -> f64 {
    0.0005
}
fn default_krylov() -> usize {
    20
}
fn default_d_max() -> usize {
    64
}
fn default_trunc() -> f64 {
    1e-16
}
fn default_samples() -> usize {
    100
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            dt_us: default_dt(),
            krylov_dim: default_krylov(),
            d_max: default_d_max(),
            trunc_eps: default_trunc(),
            samples: default_samples(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionConfig {
    pub f_g: f64,
    pub f_r: f64,
}

impl DetectionConfig {
    pub fn model(&self) -> Result<DetectionModel> {
        DetectionModel::new(self.f_g, self.f_r)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    #[serde(default)]
    pub n_shots: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_resamples")]
    pub n_resamples: usize,
}

fn default_resamples() -> usize {
    200
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self { n_shots: 0, seed: None, n_resamples: default_resamples() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RabiConfig {
    /// Chain lengths to drive; each uses the first `n` sites of the model.
    pub atom_counts: Vec<usize>,
    pub duration_us: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalConfig {
    pub delta_mhz: f64,
    pub v1_mhz: f64,
    pub v2_mhz: f64,
    #[serde(default)]
    pub beta_times_delta: Option<f64>,
    /// Calibrate β so the detection-dressed mean wall count hits this value.
    #[serde(default)]
    pub target_dressed_dw: Option<f64>,
    #[serde(default = "default_xi_d")]
    pub xi_d_max: usize,
}

fn default_xi_d() -> usize {
    12
}

impl ThermalConfig {
    /// Model at a placeholder β when only a calibration target is given.
    pub fn model(&self, n_atoms: usize) -> Result<ThermalModel> {
        let delta = mhz(self.delta_mhz);
        let beta = self.beta_times_delta.map_or(1.0 / delta.abs().max(1e-12), |b| b / delta);
        ThermalModel::new(n_atoms, delta, mhz(self.v1_mhz), mhz(self.v2_mhz), beta)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructConfig {
    /// Observed shots; when absent, shots are drawn from the thermal block.
    #[serde(default)]
    pub shots_path: Option<String>,
    #[serde(default = "default_restarts")]
    pub n_restarts: usize,
    /// Monte Carlo samples per response column; exact enumeration when absent.
    #[serde(default)]
    pub monte_carlo_samples: Option<usize>,
}

fn default_restarts() -> usize {
    8
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<String>,
    /// Dump the final state vector as `state.bin` (exact backends).
    #[serde(default)]
    pub write_state: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub model: ModelConfig,
    #[serde(default)]
    pub backend: Backend,
    #[serde(default)]
    pub numerics: NumericsConfig,
    /// `ground`, `crystal`, or an explicit bit string.
    #[serde(default = "default_initial")]
    pub initial: String,
    /// Trajectory observables; a kind-specific default set when empty.
    #[serde(default)]
    pub observables: Vec<Observable>,
    #[serde(default)]
    pub detection: Option<DetectionConfig>,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub rabi: Option<RabiConfig>,
    #[serde(default)]
    pub thermal: Option<ThermalConfig>,
    #[serde(default)]
    pub reconstruct: Option<ReconstructConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_initial() -> String {
    "ground".into()
}

// Allowed keys per object path; `[]` marks array elements.
const SCHEMA: &[(&str, &[&str])] = &[
    (
        "",
        &[
            "kind", "model", "backend", "numerics", "initial", "observables", "detection", "sampling", "rabi", "thermal",
            "reconstruct", "output",
        ],
    ),
    ("model", &["n_atoms", "spacing_um", "positions_um", "v_nn_mhz", "omega_mhz", "sweep", "quench"]),
    ("model.sweep", &["kind", "a", "b", "c", "t0_us", "delta_min_mhz", "delta_max_mhz", "duration_us"]),
    ("model.quench", &["hold_us", "delta_mhz"]),
    ("numerics", &["dt_us", "krylov_dim", "d_max", "trunc_eps", "samples"]),
    ("observables[]", &["kind", "cut", "config"]),
    ("detection", &["f_g", "f_r"]),
    ("sampling", &["n_shots", "seed", "n_resamples"]),
    ("rabi", &["atom_counts", "duration_us"]),
    ("thermal", &["delta_mhz", "v1_mhz", "v2_mhz", "beta_times_delta", "target_dressed_dw", "xi_d_max"]),
    ("reconstruct", &["shots_path", "n_restarts", "monte_carlo_samples"]),
    ("output", &["dir", "write_state"]),
];

fn unknown_keys(v: &Value, path: &str, out: &mut Vec<String>) {
    match v {
        Value::Object(map) => {
            let Some((_, allowed)) = SCHEMA.iter().find(|(p, _)| *p == path) else {
                return;
            };
            for (k, child) in map {
                let full = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                if allowed.contains(&k.as_str()) {
                    unknown_keys(child, &full, out);
                } else {
                    out.push(full);
                }
            }
        }
        Value::Array(items) => {
            for item in items {
                unknown_keys(item, &format!("{path}[]"), out);
            }
        }
        _ => {}
    }
}

impl ExperimentConfig {
    /// Parses and validates JSON text. Every unrecognized key is reported.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("malformed JSON: {e}")))?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Self> {
        let mut bad = Vec::new();
        unknown_keys(&value, "", &mut bad);
        if !bad.is_empty() {
            return Err(Error::Config(format!("unknown keys: {}", bad.join(", "))));
        }
        let cfg: Self = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    pub fn seed(&self) -> Option<u64> {
        self.sampling.seed
    }

    pub fn initial_configuration(&self) -> Result<Configuration> {
        let n = self.model.n_atoms;
        match self.initial.as_str() {
            "ground" => Ok(Configuration::all_ground(n)),
            "crystal" => Ok(Configuration::crystal(n)),
            bits => {
                let c: Configuration = bits.parse()?;
                if c.len() != n {
                    return Err(Error::Shape(format!("initial state {bits} has {} sites, model has {n}", c.len())));
                }
                Ok(c)
            }
        }
    }

    /// Schedule of a sweep or quench run.
    pub fn schedule(&self) -> Result<PulseSchedule> {
        let omega = self.model.omega();
        match self.kind {
            ExperimentKind::Sweep => {
                let s = self.model.sweep.as_ref().ok_or_else(|| Error::Config("sweep runs need model.sweep".into()))?;
                s.schedule(omega)
            }
            ExperimentKind::Quench => {
                let q = self.model.quench.as_ref().ok_or_else(|| Error::Config("quench runs need model.quench".into()))?;
                match &self.model.sweep {
                    Some(s) => quench_schedule(&s.schedule(omega)?, mhz(q.delta_mhz), q.hold_us),
                    None => PulseSchedule::constant(omega, mhz(q.delta_mhz), q.hold_us),
                }
            }
            _ => Err(Error::Config(format!("{} runs have no pulse schedule", self.kind.name()))),
        }
    }

    /// Observables to record, with the kind's defaults when none are listed.
    pub fn trajectory_observables(&self) -> Vec<Observable> {
        if !self.observables.is_empty() {
            return self.observables.clone();
        }
        let n = self.model.n_atoms;
        let mut v = vec![Observable::Detuning, Observable::RydbergDensity, Observable::DomainWallDensity, Observable::DomainWallVariance];
        if n > 1 {
            v.push(Observable::Entropy { cut: n.div_ceil(2) });
        }
        if self.kind == ExperimentKind::Sweep && n <= 20 {
            v.push(Observable::SiteDensities);
            v.push(Observable::crystal_probability(n));
        }
        v
    }

    fn needs_seed(&self) -> bool {
        self.sampling.n_shots > 0 || self.kind == ExperimentKind::Reconstruct
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        let n = m.n_atoms;
        if n == 0 || n > MAX_SITES - 1 {
            return Err(Error::Config(format!("model.n_atoms must be in 1..{}, got {n}", MAX_SITES - 1)));
        }
        match (&m.positions_um, m.spacing_um) {
            (Some(p), None) if p.len() != n => {
                return Err(Error::Config(format!("model.positions_um has {} entries for {n} atoms", p.len())));
            }
            (Some(_), None) | (None, Some(_)) => {}
            _ => return Err(Error::Config("model needs exactly one of spacing_um and positions_um".into())),
        }
        if !(m.v_nn_mhz > 0.0) || !(m.omega_mhz >= 0.0) {
            return Err(Error::Config("model.v_nn_mhz must be positive and model.omega_mhz nonnegative".into()));
        }
        let num = &self.numerics;
        if !(num.dt_us > 0.0) || num.krylov_dim < 2 || num.d_max == 0 || !(num.trunc_eps >= 0.0) || num.samples == 0 {
            return Err(Error::Config("numerics need dt_us > 0, krylov_dim >= 2, d_max >= 1, trunc_eps >= 0, samples >= 1".into()));
        }
        if let Some(d) = &self.detection {
            d.model()?;
        }
        if self.needs_seed() && self.seed().is_none() {
            return Err(Error::Config("sampling.seed is required for runs with stochastic steps".into()));
        }
        self.initial_configuration()?;
        for o in &self.observables {
            o.validate(n)?;
        }
        match self.kind {
            ExperimentKind::Rabi => {
                let r = self.rabi.as_ref().ok_or_else(|| Error::Config("rabi runs need a rabi block".into()))?;
                if r.atom_counts.is_empty() || r.atom_counts.iter().any(|&k| k == 0 || k > n) {
                    return Err(Error::Config(format!("rabi.atom_counts must lie in 1..={n}")));
                }
                if !(r.duration_us > 0.0) {
                    return Err(Error::Config("rabi.duration_us must be positive".into()));
                }
                self.check_caps(*r.atom_counts.iter().max().unwrap())?;
            }
            ExperimentKind::Sweep | ExperimentKind::Quench => {
                self.schedule()?;
                if self.backend == Backend::Variational {
                    if self.kind != ExperimentKind::Quench || !matches!(self.initial.as_str(), "crystal" | "ground") {
                        return Err(Error::Config("the variational backend runs quenches from crystal or ground".into()));
                    }
                    if m.sweep.is_some() {
                        return Err(Error::Config("the variational backend starts from a product state, not a sweep".into()));
                    }
                }
                self.check_caps(n)?;
            }
            ExperimentKind::Thermal => {
                let t = self.thermal.as_ref().ok_or_else(|| Error::Config("thermal runs need a thermal block".into()))?;
                self.check_thermal(t)?;
            }
            ExperimentKind::Reconstruct => {
                let r = self.reconstruct.as_ref().ok_or_else(|| Error::Config("reconstruct runs need a reconstruct block".into()))?;
                if self.detection.is_none() {
                    return Err(Error::Config("reconstruct runs need a detection block".into()));
                }
                if r.n_restarts == 0 {
                    return Err(Error::Config("reconstruct.n_restarts must be positive".into()));
                }
                if r.shots_path.is_none() {
                    let t = self
                        .thermal
                        .as_ref()
                        .ok_or_else(|| Error::Config("reconstruct without shots_path draws from the thermal block".into()))?;
                    self.check_thermal(t)?;
                    if self.sampling.n_shots == 0 {
                        return Err(Error::Config("synthetic reconstruction needs sampling.n_shots > 0".into()));
                    }
                }
            }
        }
        Ok(())
    }

    fn check_thermal(&self, t: &ThermalConfig) -> Result<()> {
        match (t.beta_times_delta, t.target_dressed_dw) {
            (Some(_), None) => {}
            (None, Some(_)) if self.detection.is_some() => {}
            (None, Some(_)) => return Err(Error::Config("thermal.target_dressed_dw needs a detection block".into())),
            _ => return Err(Error::Config("thermal needs exactly one of beta_times_delta and target_dressed_dw".into())),
        }
        t.model(self.model.n_atoms)?;
        Ok(())
    }

    fn check_caps(&self, n: usize) -> Result<()> {
        let cap = match self.backend {
            Backend::ExactFull => CAP_FULL,
            Backend::ExactConstrained | Backend::ConstrainedWithTail => CAP_CONSTRAINED,
            Backend::Mps | Backend::Variational => MAX_SITES - 1,
        };
        if n > cap {
            return Err(Error::Resource { what: format!("{:?} backend sites", self.backend), requested: n, cap });
        }
        Ok(())
    }
}

/// Names of the shipped presets.
pub const PRESETS: &[&str] = &[
    "fig1d_rabi",
    "fig3_sweep7",
    "fig5_z2_51",
    "fig6_quench_9",
    "fig6_quench_25_nn",
    "fig6_quench_25_tail",
    "fig6_quench_51",
    "ed9_variational",
    "ed10_quench25",
    "thermal_51",
    "reconstruct_demo",
];

fn base(kind: ExperimentKind, n_atoms: usize) -> ExperimentConfig {
    ExperimentConfig {
        kind,
        model: ModelConfig {
            n_atoms,
            spacing_um: Some(SPACING_Z2_UM),
            positions_um: None,
            v_nn_mhz: V_NN_Z2_MHZ,
            omega_mhz: OMEGA_MHZ,
            sweep: None,
            quench: None,
        },
        backend: Backend::ExactFull,
        numerics: NumericsConfig::default(),
        initial: default_initial(),
        observables: Vec::new(),
        detection: None,
        sampling: SamplingConfig::default(),
        rabi: None,
        thermal: None,
        reconstruct: None,
        output: OutputConfig::default(),
    }
}

fn z2_cubic() -> SweepConfig {
    let p = SweepParams::cubic_through(mhz(-10.0), mhz(14.0), Z2_SWEEP_US, 0.5 * Z2_SWEEP_US, mhz(2.0), mhz(4.0))
        .expect("default sweep parameters are valid");
    SweepConfig::from_params(SweepShape::Cubic, &p, Z2_SWEEP_US)
}

fn z2_tangent() -> SweepConfig {
    let p = SweepParams::tangent_through(mhz(-10.0), mhz(14.0), Z2_SWEEP_US, 0.5 * Z2_SWEEP_US, mhz(2.0), 1.4)
        .expect("default sweep parameters are valid");
    SweepConfig::from_params(SweepShape::Tangent, &p, Z2_SWEEP_US)
}

fn reference_thermal() -> ThermalConfig {
    ThermalConfig {
        delta_mhz: 14.0,
        v1_mhz: V_NN_Z2_MHZ,
        v2_mhz: 0.38,
        beta_times_delta: Some(3.44),
        target_dressed_dw: None,
        xi_d_max: default_xi_d(),
    }
}

fn quench25(backend: Backend) -> ExperimentConfig {
    let mut c = base(ExperimentKind::Quench, 25);
    c.backend = backend;
    if backend == Backend::ConstrainedWithTail {
        c.model.v_nn_mhz = V_NN_TAIL_MHZ;
    }
    c.initial = "crystal".into();
    c.model.quench = Some(QuenchConfig { hold_us: 1.5, delta_mhz: 0.0 });
    // the hold is time independent, so one adaptive Krylov step per sample
    c.numerics.dt_us = 0.01;
    c.numerics.samples = 150;
    c.observables = vec![Observable::DomainWallDensity, Observable::Entropy { cut: 13 }];
    c
}

/// Shipped configuration by name.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let cfg = match name {
        "fig1d_rabi" => {
            let mut c = base(ExperimentKind::Rabi, 3);
            c.model.spacing_um = Some(SPACING_Z4_UM);
            // same C6 as the Z2 calibration, so V(2.87 μm) = 64 × 24 MHz
            c.model.v_nn_mhz = V_NN_Z2_MHZ * (SPACING_Z2_UM / SPACING_Z4_UM).powi(6);
            c.rabi = Some(RabiConfig { atom_counts: vec![1, 2, 3], duration_us: 10.0 });
            c.numerics.samples = 1000;
            c.numerics.dt_us = 0.001;
            c
        }
        "fig3_sweep7" => {
            let mut c = base(ExperimentKind::Sweep, 7);
            c.model.sweep = Some(z2_cubic());
            c.detection = Some(DetectionConfig { f_g: 0.98, f_r: 0.93 });
            c.sampling = SamplingConfig { n_shots: 1000, seed: Some(7), n_resamples: 200 };
            c
        }
        "fig5_z2_51" => {
            let mut c = base(ExperimentKind::Sweep, 51);
            c.backend = Backend::Mps;
            c.model.sweep = Some(z2_tangent());
            c.numerics.d_max = 256;
            c.numerics.dt_us = 0.004 / mhz(OMEGA_MHZ);
            c.numerics.samples = 80;
            c.detection = Some(DetectionConfig { f_g: 0.99, f_r: 0.93 });
            c.sampling = SamplingConfig { n_shots: 1000, seed: Some(51), n_resamples: 200 };
            c
        }
        "fig6_quench_9" => {
            let mut c = base(ExperimentKind::Quench, 9);
            c.model.sweep = Some(z2_cubic());
            c.model.quench = Some(QuenchConfig { hold_us: 1.0, delta_mhz: 0.0 });
            c.numerics.samples = 300;
            c
        }
        "fig6_quench_25_nn" => quench25(Backend::ExactConstrained),
        "fig6_quench_25_tail" => quench25(Backend::ConstrainedWithTail),
        "fig6_quench_51" => {
            let mut c = base(ExperimentKind::Quench, 51);
            c.backend = Backend::Mps;
            c.model.sweep = Some(z2_tangent());
            c.model.quench = Some(QuenchConfig { hold_us: 1.0, delta_mhz: 0.0 });
            c.numerics.d_max = 128;
            c.numerics.dt_us = 0.01 / mhz(OMEGA_MHZ);
            c.numerics.samples = 150;
            c
        }
        "ed9_variational" => {
            let mut c = base(ExperimentKind::Quench, 25);
            c.backend = Backend::Variational;
            c.initial = "crystal".into();
            c.model.quench = Some(QuenchConfig { hold_us: 2.0, delta_mhz: 0.0 });
            c.numerics.dt_us = 0.0002;
            c.numerics.samples = 400;
            c
        }
        "ed10_quench25" => {
            let mut c = quench25(Backend::ConstrainedWithTail);
            c.initial = "ground".into();
            c
        }
        "thermal_51" => {
            let mut c = base(ExperimentKind::Thermal, 51);
            c.thermal = Some(reference_thermal());
            c.detection = Some(DetectionConfig { f_g: 0.99, f_r: 0.93 });
            c
        }
        "reconstruct_demo" => {
            let mut c = base(ExperimentKind::Reconstruct, 13);
            c.thermal = Some(ThermalConfig { beta_times_delta: Some(1.5), ..reference_thermal() });
            c.detection = Some(DetectionConfig { f_g: 0.99, f_r: 0.93 });
            c.sampling = SamplingConfig { n_shots: 20_000, seed: Some(2018), n_resamples: 200 };
            c.reconstruct = Some(ReconstructConfig { shots_path: None, n_restarts: 8, monte_carlo_samples: None });
            c
        }
        other => return Err(Error::Config(format!("unknown preset {other:?}; known: {}", PRESETS.join(", ")))),
    };
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates_and_round_trips() {
        assert!(PRESETS.len() >= 9);
        for name in PRESETS {
            let c = preset(name).unwrap();
            let back = ExperimentConfig::from_json(&c.to_json()).unwrap();
            assert_eq!(back, c, "{name}");
        }
    }

    #[test]
    fn quench25_variants_differ_in_tail() {
        let nn = preset("fig6_quench_25_nn").unwrap();
        let tail = preset("fig6_quench_25_tail").unwrap();
        assert_eq!(nn.backend, Backend::ExactConstrained);
        assert_eq!(tail.backend, Backend::ConstrainedWithTail);
        assert_eq!(tail.model.v_nn_mhz, V_NN_TAIL_MHZ);
    }

    #[test]
    fn all_unknown_keys_are_listed() {
        let text = r#"{"kind": "sweep", "bogus": 1,
            "model": {"n_atoms": 3, "spacing_um": 5.74, "colour": "red",
                      "sweep": {"kind": "cubic", "a": 1, "b": 1, "c": 0, "t0_us": 1, "delta_min_mhz": -5,
                                "delta_max_mhz": 5, "duration_us": 2, "extra": 0}},
            "observables": [{"kind": "detuning", "oops": 2}]}"#;
        let err = ExperimentConfig::from_json(text).unwrap_err();
        let msg = err.to_string();
        for key in ["bogus", "model.colour", "model.sweep.extra", "observables[].oops"] {
            assert!(msg.contains(key), "{msg}");
        }
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn caps_and_seeds_enforced() {
        let mut c = preset("fig3_sweep7").unwrap();
        c.model.n_atoms = 21;
        assert_eq!(c.validate().unwrap_err().exit_code(), 3);
        let mut c = preset("fig3_sweep7").unwrap();
        c.sampling.seed = None;
        assert_eq!(c.validate().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn sweep_units_round_trip() {
        let s = z2_cubic();
        let back = SweepConfig::from_params(SweepShape::Cubic, &s.params(), s.duration_us);
        assert!((back.a - s.a).abs() < 1e-12 && (back.b - s.b).abs() < 1e-12);
        let sched = s.schedule(mhz(2.0)).unwrap();
        assert!((sched.delta(0.0) - mhz(-10.0)).abs() < 1e-9);
    }
}
