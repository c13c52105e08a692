//! Executes one configured experiment.
//!
//! All outputs are assembled in memory and written only after the whole run
//! has succeeded, so a failing run leaves no partial files behind. Every
//! output except the `wall_clock_s` field of `summary.json` is a pure
//! function of the configuration (including its seed).

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::RngCore;
use serde_json::{json, Value};

use crate::config::{Backend, ExperimentConfig, ExperimentKind};
use crate::detection::{
    apply_channel, bootstrap_sigma, build_response_matrix, reconstruct_parent, DetectionModel, ReconstructOptions,
    ResponseMethod, EXACT_RESPONSE_CAP,
};
use crate::error::{Error, Result};
use crate::exact::{initial_state, run_sweep, uniform_times, write_state_binary, PropagationOptions};
use crate::hamiltonian::{Hamiltonian, HamiltonianMode, HamiltonianSpec, StateVector};
use crate::model::PulseSchedule;
use crate::mps::{tebd_evolve, MpsState, TebdOptions};
use crate::observables::{
    count_domain_walls, domain_wall_stats, domain_walls_word, fit_correlation_length, sample_shots, state_histogram,
    wall_slots, DomainWallDistribution, Observable, ShotSet,
};
use crate::seeding::{SeedTree, BOOTSTRAP, CHANNEL, RESPONSE, RESTARTS, SAMPLING};
use crate::spectrum::dominant_angular_frequency;
use crate::thermal::{calibrate_beta, domain_wall_fcs, dressed_expectation, thermal_observables, DressedObservable, Ensemble, ThermalModel};
use crate::trajectory::Trajectory;
use crate::variational::{eom_trajectory, integrate_eom, oscillation_from_extrema, AnsatzAngles};

/// Version string recorded in every summary.
pub const VERSION: &str = concat!("rydsim-v", env!("CARGO_PKG_VERSION"));

/// Number of most frequent states listed in shot reports.
const TOP_STATES: usize = 5;

/// A named output file held in memory.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Everything a run produces.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub kind: ExperimentKind,
    pub files: Vec<OutputFile>,
    /// Contents of `<kind>.json`.
    pub report: Value,
    pub trajectory: Option<Trajectory>,
}

impl RunOutput {
    pub fn file(&self, name: &str) -> Option<&OutputFile> {
        self.files.iter().find(|f| f.name == name)
    }
}

fn json_bytes(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s.into_bytes()
}

fn shots_bytes(shots: &ShotSet) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    shots.write_to(&mut buf)?;
    Ok(buf)
}

fn seed_tree(cfg: &ExperimentConfig) -> Result<SeedTree> {
    cfg.seed()
        .map(SeedTree::new)
        .ok_or_else(|| Error::Config("sampling.seed is required for runs with stochastic steps".into()))
}

/// Runs `cfg` without touching the file system.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let (report, trajectory, mut extra) = match cfg.kind {
        ExperimentKind::Rabi => {
            let (t, r) = run_rabi(cfg)?;
            (r, Some(t), Vec::new())
        }
        ExperimentKind::Sweep | ExperimentKind::Quench => {
            let (t, r, files) = run_dynamics(cfg)?;
            (r, Some(t), files)
        }
        ExperimentKind::Thermal => {
            let (r, files) = run_thermal(cfg)?;
            (r, None, files)
        }
        ExperimentKind::Reconstruct => {
            let (r, files) = run_reconstruct(cfg)?;
            (r, None, files)
        }
    };
    let mut files = Vec::new();
    if let Some(t) = &trajectory {
        files.push(OutputFile { name: "trajectory.csv".into(), bytes: t.to_csv().into_bytes() });
    }
    files.append(&mut extra);
    files.push(OutputFile { name: format!("{}.json", cfg.kind.name()), bytes: json_bytes(&report) });
    Ok(RunOutput { kind: cfg.kind, files, report, trajectory })
}

/// Runs `cfg` and writes its outputs plus `summary.json` into `dir`.
pub fn execute(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let start = Instant::now();
    let mut out = run(cfg)?;
    let config_echo = serde_json::to_value(cfg).map_err(Error::from)?;
    let names: Vec<&str> = out.files.iter().map(|f| f.name.as_str()).chain(["summary.json"]).collect();
    let summary = json!({
        "kind": cfg.kind.name(),
        "version": VERSION,
        "seed": cfg.seed(),
        "outputs": names,
        "config": config_echo,
        "wall_clock_s": start.elapsed().as_secs_f64(),
    });
    out.files.push(OutputFile { name: "summary.json".into(), bytes: json_bytes(&summary) });
    fs::create_dir_all(dir)?;
    let mut written = Vec::with_capacity(out.files.len());
    for f in &out.files {
        let path = dir.join(&f.name);
        fs::write(&path, &f.bytes)?;
        written.push(path);
    }
    Ok(written)
}

fn run_rabi(cfg: &ExperimentConfig) -> Result<(Trajectory, Value)> {
    let r = cfg.rabi.as_ref().expect("validated");
    let omega = cfg.model.omega();
    let times = uniform_times(r.duration_us, cfg.numerics.samples);
    let step = times[1] - times[0];
    let schedule = PulseSchedule::constant(omega, 0.0, r.duration_us)?;
    let opts = PropagationOptions::new(cfg.numerics.dt_us).with_krylov_dim(cfg.numerics.krylov_dim);
    let mut columns = Vec::new();
    let mut report = Vec::new();
    for &n in &r.atom_counts {
        let h = Hamiltonian::new(HamiltonianSpec::new(cfg.model.array_of(n)?, HamiltonianMode::Full))?;
        let init = initial_state(&h, &crate::basis::Configuration::all_ground(n))?;
        let obs = [Observable::ground_probability(n)];
        let run = run_sweep(&h, init, &schedule, &obs, &times, opts)?;
        let p: Vec<f64> = run.trajectory.rows().iter().map(|row| row[0]).collect();
        let w = dominant_angular_frequency(&p, step)?;
        report.push(json!({
            "n_atoms": n,
            "frequency_rad_per_us": w,
            "ratio_to_omega": w / omega,
            "expected_ratio": (n as f64).sqrt(),
        }));
        columns.push(p);
    }
    let names = r.atom_counts.iter().map(|n| format!("p_ground_N{n}")).collect();
    let mut t = Trajectory::new(names);
    for (k, &time) in times.iter().enumerate() {
        t.push(time, columns.iter().map(|c| c[k]).collect());
    }
    Ok((t, json!({ "omega_rad_per_us": omega, "oscillations": report })))
}

fn oscillation_report(traj: &Trajectory, after: f64, omega: f64, unit_time: bool) -> Value {
    let Ok(dw) = traj.column("dw_density") else {
        return Value::Null;
    };
    let (t, v): (Vec<f64>, Vec<f64>) = traj.times().iter().zip(dw).filter(|(t, _)| **t >= after - 1e-12).map(|(t, v)| (*t, v)).unzip();
    match oscillation_from_extrema(&t, &v, 1e-3) {
        Ok(o) => {
            // in units of Ω when time is already τ = Ωt
            let freq = if unit_time { o.revival_frequency * omega } else { o.revival_frequency };
            json!({
                "revival_frequency_rad_per_us": freq,
                "omega_over_frequency": omega / freq,
                "signal_period": o.signal_period,
                "extrema": o.extrema,
            })
        }
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn shot_report(cfg: &ExperimentConfig, true_shots: ShotSet, tree: &SeedTree) -> Result<(Value, Vec<OutputFile>)> {
    let observed = match &cfg.detection {
        Some(d) => apply_channel(&true_shots, &d.model()?, &mut tree.stream(CHANNEL)),
        None => true_shots,
    };
    let stats = domain_wall_stats(&observed, cfg.sampling.n_resamples, &mut tree.stream(BOOTSTRAP))?;
    let top: Vec<Value> = state_histogram(&observed, TOP_STATES)?
        .into_iter()
        .map(|(c, k)| json!({ "state": c.to_string(), "count": k }))
        .collect();
    let report = json!({
        "n_shots": observed.len(),
        "detection_applied": cfg.detection.is_some(),
        "dw_mean": stats.mean,
        "dw_mean_ci68": [stats.mean_ci.0, stats.mean_ci.1],
        "dw_variance": stats.variance,
        "dw_variance_ci68": [stats.variance_ci.0, stats.variance_ci.1],
        "dw_distribution": stats.distribution.probabilities,
        "site_densities": observed.site_densities(),
        "top_states": top,
    });
    Ok((report, vec![OutputFile { name: "shots.txt".into(), bytes: shots_bytes(&observed)? }]))
}

fn run_dynamics(cfg: &ExperimentConfig) -> Result<(Trajectory, Value, Vec<OutputFile>)> {
    if cfg.backend == Backend::Variational {
        return run_variational(cfg);
    }
    let schedule = cfg.schedule()?;
    let n = cfg.model.n_atoms;
    let omega = cfg.model.omega();
    let obs = cfg.trajectory_observables();
    let times = uniform_times(schedule.duration(), cfg.numerics.samples);
    let config0 = cfg.initial_configuration()?;
    let quench_start = match (cfg.kind, &cfg.model.sweep) {
        (ExperimentKind::Quench, Some(s)) => s.duration_us,
        _ => 0.0,
    };
    let mut files = Vec::new();
    let (trajectory, mut report, shots) = if let Some(mode) = cfg.backend.mode() {
        let h = Hamiltonian::new(HamiltonianSpec::new(cfg.model.array()?, mode))?;
        let opts = PropagationOptions::new(cfg.numerics.dt_us).with_krylov_dim(cfg.numerics.krylov_dim);
        let run = run_sweep(&h, initial_state(&h, &config0)?, &schedule, &obs, &times, opts)?;
        let psi = &run.final_state;
        if cfg.output.write_state {
            let mut buf = Vec::new();
            write_state_binary(psi, &mut buf)?;
            files.push(OutputFile { name: "state.bin".into(), bytes: buf });
        }
        let report = final_state_report(psi, cfg.detection.as_ref().map(|d| d.model()).transpose()?.as_ref())?;
        let shots = if cfg.sampling.n_shots > 0 {
            Some(sample_shots(psi, cfg.sampling.n_shots, &mut seed_tree(cfg)?.stream(SAMPLING))?)
        } else {
            None
        };
        (run.trajectory, report, shots)
    } else {
        let array = cfg.model.array()?.truncated(2);
        let opts = TebdOptions {
            trunc_eps: cfg.numerics.trunc_eps,
            ..TebdOptions::new(cfg.numerics.dt_us, cfg.numerics.d_max)
        };
        let run = tebd_evolve(MpsState::from_product(&config0), &array, &schedule, &obs, &times, opts)?;
        let mut state = run.final_state;
        let (dw_mean, dw_var) = state.domain_wall_moments(None)?;
        let mut report = json!({
            "site_densities": state.site_densities()?,
            "dw_mean": dw_mean,
            "dw_variance": dw_var,
            "dw_density": dw_mean / wall_slots(n) as f64,
            "crystal_probability": state.amplitude(&crate::basis::Configuration::crystal(n))?.norm_sqr(),
            "bond_dim_max": state.max_bond_dim(),
            "max_step_discarded_weight": run.max_step_discarded,
            "interaction_range": 2,
        });
        if let Some(d) = &cfg.detection {
            let (m, v) = state.domain_wall_moments(Some(&d.model()?))?;
            report["dressed"] = json!({ "dw_mean": m, "dw_variance": v });
        }
        let shots = if cfg.sampling.n_shots > 0 {
            Some(sample_shots(&state, cfg.sampling.n_shots, &mut seed_tree(cfg)?.stream(SAMPLING))?)
        } else {
            None
        };
        (run.trajectory, report, shots)
    };
    report["n_atoms"] = json!(n);
    report["backend"] = serde_json::to_value(cfg.backend).map_err(Error::from)?;
    if cfg.kind == ExperimentKind::Quench {
        report["quench_start_us"] = json!(quench_start);
        report["oscillation"] = oscillation_report(&trajectory, quench_start, omega, false);
    }
    if let Some(shots) = shots {
        let (r, mut f) = shot_report(cfg, shots, &seed_tree(cfg)?)?;
        report["shots"] = r;
        files.append(&mut f);
    }
    Ok((trajectory, report, files))
}

fn final_state_report(psi: &StateVector, channel: Option<&DetectionModel>) -> Result<Value> {
    let n = psi.n_atoms();
    let dw = |w: u64| domain_walls_word(w, n) as f64;
    let mean = psi.expect_diagonal(dw);
    let var = psi.expect_diagonal(|w| dw(w).powi(2)) - mean * mean;
    let crystal = crate::basis::Configuration::crystal(n);
    let mut report = json!({
        "site_densities": psi.site_densities(),
        "dw_mean": mean,
        "dw_variance": var.max(0.0),
        "dw_density": mean / wall_slots(n) as f64,
        "crystal_probability": psi.probability_of(&crystal)?,
    });
    if let Some(ch) = channel {
        // probability that the crystal is read out correctly
        let p_detect: f64 = crystal.bits().map(|b| ch.likelihood(b, b)).product();
        report["dressed"] = json!({ "crystal_probability": psi.probability_of(&crystal)? * p_detect + leak_into(psi, &crystal, ch) });
    }
    Ok(report)
}

// Σ over other true configurations of P(true) · P(observed = target | true).
fn leak_into(psi: &StateVector, target: &crate::basis::Configuration, ch: &DetectionModel) -> f64 {
    let n = psi.n_atoms();
    psi.basis()
        .words()
        .iter()
        .zip(psi.amplitudes())
        .filter(|(w, _)| **w != target.word())
        .map(|(&w, a)| {
            let lam: f64 = (0..n).map(|i| ch.likelihood((w >> (n - 1 - i)) & 1 == 1, target.get(i))).product();
            a.norm_sqr() * lam
        })
        .sum()
}

fn run_variational(cfg: &ExperimentConfig) -> Result<(Trajectory, Value, Vec<OutputFile>)> {
    let omega = cfg.model.omega();
    let q = cfg.model.quench.as_ref().expect("validated");
    let start = if cfg.initial == "crystal" { AnsatzAngles::CRYSTAL } else { AnsatzAngles::GROUND };
    let dtau = omega * cfg.numerics.dt_us;
    let samples = integrate_eom(start, omega * q.hold_us, dtau)?;
    let stride = (samples.len() / cfg.numerics.samples).max(1);
    let thinned: Vec<_> = samples.iter().step_by(stride).copied().collect();
    let full = eom_trajectory(&samples)?;
    let report = json!({
        "n_atoms": "bulk",
        "backend": "variational",
        "omega_rad_per_us": omega,
        "oscillation": oscillation_report(&full, 0.0, omega, true),
    });
    Ok((eom_trajectory(&thinned)?, report, Vec::new()))
}

fn thermal_model(cfg: &ExperimentConfig) -> Result<(ThermalModel, Option<DetectionModel>, Value)> {
    let t = cfg.thermal.as_ref().expect("validated");
    let model = t.model(cfg.model.n_atoms)?;
    let channel = cfg.detection.as_ref().map(|d| d.model()).transpose()?;
    match (t.target_dressed_dw, &channel) {
        (Some(target), Some(ch)) => {
            let cal = calibrate_beta(&model, ch, target)?;
            let cal_json = json!({ "target_dressed_dw": target, "achieved": cal.achieved });
            Ok((model.with_beta(cal.beta), channel, cal_json))
        }
        _ => Ok((model, channel, Value::Null)),
    }
}

fn run_thermal(cfg: &ExperimentConfig) -> Result<(Value, Vec<OutputFile>)> {
    let t = cfg.thermal.as_ref().expect("validated");
    let (model, channel, calibration) = thermal_model(cfg)?;
    let obs = thermal_observables(&model, t.xi_d_max)?;
    let xi = match fit_correlation_length(&obs.g2, t.xi_d_max, 0.0) {
        Ok(f) => json!(f.xi),
        Err(_) => Value::Null,
    };
    let fcs = domain_wall_fcs(&model)?;
    let dressed = match &channel {
        Some(ch) => {
            let mean = dressed_expectation(&model, ch, DressedObservable::DomainWalls)?.scalar().unwrap_or(f64::NAN);
            let fcs = match dressed_expectation(&model, ch, DressedObservable::Fcs)? {
                crate::thermal::DressedValue::Distribution(d) => d.probabilities,
                _ => Vec::new(),
            };
            json!({ "f_g": ch.f_g, "f_r": ch.f_r, "mean_dw": mean, "fcs": fcs })
        }
        None => Value::Null,
    };
    let report = json!({
        "n_atoms": model.n_atoms,
        "beta": model.beta,
        "beta_times_delta": model.beta * model.delta,
        "s_per_atom": obs.entropy_per_atom,
        "mean_dw": obs.mean_dw,
        "density": obs.density,
        "xi_th": xi,
        "g2": obs.g2,
        "fcs": fcs.probabilities,
        "dressed": dressed,
        "calibration": calibration,
    });
    let mut files = Vec::new();
    if cfg.sampling.n_shots > 0 {
        let tree = seed_tree(cfg)?;
        let draws = Ensemble::new(&model)?.sample(cfg.sampling.n_shots, &mut tree.stream(SAMPLING))?;
        let shots = ShotSet::new(model.n_atoms, draws)?;
        let observed = match &channel {
            Some(ch) => apply_channel(&shots, ch, &mut tree.stream(CHANNEL)),
            None => shots,
        };
        files.push(OutputFile { name: "shots.txt".into(), bytes: shots_bytes(&observed)? });
    }
    Ok((report, files))
}

fn run_reconstruct(cfg: &ExperimentConfig) -> Result<(Value, Vec<OutputFile>)> {
    let r = cfg.reconstruct.as_ref().expect("validated");
    let channel = cfg.detection.as_ref().expect("validated").model()?;
    let tree = seed_tree(cfg)?;
    let mut files = Vec::new();
    let (shots, truth) = match &r.shots_path {
        Some(path) => {
            let file = fs::File::open(path)?;
            (ShotSet::read_from(BufReader::new(file))?, None)
        }
        None => {
            let (model, _, _) = thermal_model(cfg)?;
            let draws = Ensemble::new(&model)?.sample(cfg.sampling.n_shots, &mut tree.stream(SAMPLING))?;
            let true_shots = ShotSet::new(model.n_atoms, draws)?;
            let observed = apply_channel(&true_shots, &channel, &mut tree.stream(CHANNEL));
            files.push(OutputFile { name: "shots.txt".into(), bytes: shots_bytes(&observed)? });
            let sampled: Vec<usize> = true_shots.shots().iter().map(count_domain_walls).collect();
            let empirical = DomainWallDistribution::from_counts(model.n_atoms, &sampled)?;
            (observed, Some((domain_wall_fcs(&model)?, empirical)))
        }
    };
    let n = shots.n_atoms();
    if n != cfg.model.n_atoms {
        return Err(Error::Shape(format!("shots have {n} sites, model has {}", cfg.model.n_atoms)));
    }
    let method = match r.monte_carlo_samples {
        Some(samples) => ResponseMethod::MonteCarlo { samples, seed: tree.stream(RESPONSE).next_u64() },
        None if n > EXACT_RESPONSE_CAP => ResponseMethod::MonteCarlo { samples: 20_000, seed: tree.stream(RESPONSE).next_u64() },
        None => ResponseMethod::ExactEnumeration,
    };
    let response = build_response_matrix(n, &channel, method, None)?;
    let dist = DomainWallDistribution::from_counts(n, &shots.wall_counts())?;
    let observed = response.observed_vector(&dist)?;
    let sigma = bootstrap_sigma(&observed, shots.len(), cfg.sampling.n_resamples, &mut tree.stream(BOOTSTRAP))?;
    let opts = ReconstructOptions { n_restarts: r.n_restarts, ..ReconstructOptions::for_shots(shots.len()) };
    let rec = reconstruct_parent(&observed, &sigma, &response, opts, &mut tree.stream(RESTARTS))?;
    let mut report = json!({
        "n_atoms": n,
        "n_shots": shots.len(),
        "rows": response.rows,
        "columns": response.columns,
        "observed": observed,
        "sigma": sigma,
        "parent": rec.parent.probabilities,
        "cost": rec.cost,
        "restarts_agree": rec.restarts_agree,
    });
    if let Some((exact, empirical)) = truth {
        report["truth"] = json!({
            "exact_parent": exact.probabilities,
            "tv_to_exact": rec.parent.total_variation(&exact),
            "sampled_parent": empirical.probabilities,
            "tv_to_sampled": rec.parent.total_variation(&empirical),
        });
    }
    Ok((report, files))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::preset;

    #[test]
    fn small_sweep_is_reproducible() {
        let mut cfg = preset("fig3_sweep7").unwrap();
        cfg.model.n_atoms = 5;
        cfg.numerics.samples = 10;
        cfg.numerics.dt_us = 0.002;
        cfg.sampling.n_shots = 200;
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a.files, b.files);
        let names: Vec<_> = a.files.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, ["trajectory.csv", "shots.txt", "sweep.json"]);
        let shots = String::from_utf8(a.file("shots.txt").unwrap().bytes.clone()).unwrap();
        assert_eq!(shots.lines().count(), 200);
        assert!(shots.lines().all(|l| l.len() == 5));
    }

    #[test]
    fn invalid_run_writes_nothing() {
        let dir = std::env::temp_dir().join(format!("rydsim-invalid-{}", std::process::id()));
        let mut cfg = preset("fig3_sweep7").unwrap();
        cfg.model.n_atoms = 25;
        let err = execute(&cfg, &dir).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(!dir.exists());
    }

    #[test]
    fn variational_quench_reports_revival() {
        let cfg = preset("ed9_variational").unwrap();
        let out = run(&cfg).unwrap();
        let ratio = out.report["oscillation"]["omega_over_frequency"].as_f64().unwrap();
        assert!((ratio / 1.51 - 1.0).abs() < 0.02, "{ratio}");
    }
}
