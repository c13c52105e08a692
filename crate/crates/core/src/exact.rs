//! Time evolution of state vectors under piecewise-frozen Hamiltonians.
//!
//! Each step freezes `Ω(t)`, `Δ(t)` at the step midpoint and applies the
//! Krylov exponential. Steps never straddle a schedule breakpoint, so the
//! quench discontinuity is resolved exactly.

use std::io::Write;

use num_complex::Complex64;

use crate::basis::Configuration;
use crate::error::{Error, Result};
use crate::hamiltonian::{Hamiltonian, StateVector};
use crate::krylov::{expm_apply, KrylovOptions};
use crate::model::PulseSchedule;
use crate::observables::{columns_for, measure_state, Observable};
use crate::trajectory::Trajectory;

/// Norm drift below which a step is silently renormalized.
pub const NORM_DRIFT_LIMIT: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagationOptions {
    pub dt: f64,
    pub krylov: KrylovOptions,
}

impl PropagationOptions {
    pub fn new(dt: f64) -> Self {
        Self { dt, krylov: KrylovOptions::default() }
    }

    pub fn with_krylov_dim(mut self, m: usize) -> Self {
        self.krylov.dim = m;
        self
    }
}

/// Evolves `state` from `t0` to `t1` under `schedule`.
pub fn propagate(
    h: &Hamiltonian,
    state: &mut StateVector,
    schedule: &PulseSchedule,
    t0: f64,
    t1: f64,
    opts: PropagationOptions,
) -> Result<()> {
    if !(opts.dt > 0.0) {
        return Err(Error::Invalid(format!("time step must be positive, got {}", opts.dt)));
    }
    if !(t1 > t0) {
        return Err(Error::Invalid(format!("propagation window [{t0}, {t1}] is empty")));
    }
    if t0 < -1e-12 || t1 > schedule.duration() + 1e-9 {
        return Err(Error::Invalid(format!(
            "window [{t0}, {t1}] leaves the schedule domain [0, {}]",
            schedule.duration()
        )));
    }
    if state.basis().as_ref() != h.basis().as_ref() {
        return Err(Error::Shape("state basis differs from the Hamiltonian basis".into()));
    }
    for (mid, h_step) in step_plan(schedule, t0, t1, opts.dt)? {
        step(h, state, schedule.omega(mid), schedule.delta(mid), h_step, opts.krylov)?;
    }
    Ok(())
}

/// `(midpoint, length)` of each step covering `[t0, t1]`; no step straddles
/// a breakpoint and none is longer than `dt`.
pub fn step_plan(schedule: &PulseSchedule, t0: f64, t1: f64, dt: f64) -> Result<Vec<(f64, f64)>> {
    if !(dt > 0.0) {
        return Err(Error::Invalid(format!("time step must be positive, got {dt}")));
    }
    let mut cuts = vec![t0];
    cuts.extend(schedule.breakpoints().into_iter().filter(|&b| b > t0 + 1e-12 && b < t1 - 1e-12));
    cuts.push(t1);
    let mut plan = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let steps = ((b - a) / dt - 1e-9).ceil().max(1.0) as usize;
        let h_step = (b - a) / steps as f64;
        plan.extend((0..steps).map(|k| (a + (k as f64 + 0.5) * h_step, h_step)));
    }
    Ok(plan)
}

/// One frozen step `exp(−i H(Ω, Δ) dt)`.
pub fn step(h: &Hamiltonian, state: &mut StateVector, omega: f64, delta: f64, dt: f64, krylov: KrylovOptions) -> Result<()> {
    let psi = state.amplitudes_mut();
    expm_apply(|x, y| h.apply_into(omega, delta, x, y), psi, dt, krylov)?;
    renormalize(psi)
}

fn renormalize(psi: &mut [Complex64]) -> Result<()> {
    let norm = crate::hamiltonian::l2(psi);
    let drift = (norm - 1.0).abs();
    if !(drift < NORM_DRIFT_LIMIT) {
        return Err(Error::NormDrift { drift, allowed: NORM_DRIFT_LIMIT });
    }
    psi.iter_mut().for_each(|a| *a /= norm);
    Ok(())
}

/// Observables sampled along a run, with the state at the final time.
#[derive(Clone, Debug)]
pub struct ExactRun {
    pub trajectory: Trajectory,
    pub final_state: StateVector,
}

/// Records `observables` at each of `sample_times` (ascending, within the
/// schedule), starting from `initial`.
pub fn run_sweep(
    h: &Hamiltonian,
    initial: StateVector,
    schedule: &PulseSchedule,
    observables: &[Observable],
    sample_times: &[f64],
    opts: PropagationOptions,
) -> Result<ExactRun> {
    let n = h.spec().n_atoms();
    for o in observables {
        o.validate(n)?;
    }
    if sample_times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Invalid("sample times must be nondecreasing".into()));
    }
    let mut trajectory = Trajectory::new(columns_for(observables, n));
    let mut state = initial;
    let mut t = 0.0;
    for &ts in sample_times {
        if ts > t + 1e-12 {
            propagate(h, &mut state, schedule, t, ts, opts)?;
            t = ts;
        }
        trajectory.push(ts, measure_state(&state, observables, schedule.delta(ts))?);
    }
    Ok(ExactRun { trajectory, final_state: state })
}

/// `count + 1` evenly spaced times covering `[0, duration]`.
pub fn uniform_times(duration: f64, count: usize) -> Vec<f64> {
    let count = count.max(1);
    (0..=count).map(|k| duration * k as f64 / count as f64).collect()
}

/// Resonant (`Δ = 0`) evolution from a configuration or state.
pub fn run_quench(
    h: &Hamiltonian,
    initial: StateVector,
    omega: f64,
    duration: f64,
    sample_every: f64,
    observables: &[Observable],
    opts: PropagationOptions,
) -> Result<ExactRun> {
    let schedule = PulseSchedule::constant(omega, 0.0, duration)?;
    let count = (duration / sample_every).round().max(1.0) as usize;
    run_sweep(h, initial, &schedule, observables, &uniform_times(duration, count), opts)
}

/// Convenience for starting from a classical configuration.
pub fn initial_state(h: &Hamiltonian, config: &Configuration) -> Result<StateVector> {
    StateVector::from_configuration(h.basis().clone(), config)
}

/// Binary dump: little-endian `(u64 ordinal, f64 re, f64 im)` per nonzero amplitude.
pub fn write_state_binary(state: &StateVector, mut w: impl Write) -> Result<()> {
    for (k, a) in state.amplitudes().iter().enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        w.write_all(&(k as u64).to_le_bytes())?;
        w.write_all(&a.re.to_le_bytes())?;
        w.write_all(&a.im.to_le_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{dense_propagate, HamiltonianMode, HamiltonianSpec};
    use crate::model::{mhz, AtomArray, SPACING_Z4_UM, V_NN_Z2_MHZ};

    fn blockaded(n: usize, mode: HamiltonianMode) -> Hamiltonian {
        let v = mhz(V_NN_Z2_MHZ) * (5.74f64 / SPACING_Z4_UM).powi(6);
        Hamiltonian::new(HamiltonianSpec::new(AtomArray::uniform(n, SPACING_Z4_UM, v).unwrap(), mode)).unwrap()
    }

    #[test]
    fn single_atom_rabi_formula() {
        let h = blockaded(1, HamiltonianMode::Full);
        let om = mhz(2.0);
        let sched = PulseSchedule::constant(om, 0.0, 1.0).unwrap();
        let times = uniform_times(1.0, 20);
        let run = run_sweep(
            &h,
            initial_state(&h, &"0".parse().unwrap()).unwrap(),
            &sched,
            &[Observable::SiteDensities],
            &times,
            PropagationOptions::new(0.01),
        )
        .unwrap();
        for (t, row) in run.trajectory.times().iter().zip(run.trajectory.rows()) {
            assert!((row[0] - (om * t / 2.0).sin().powi(2)).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_drive_is_static() {
        let h = blockaded(4, HamiltonianMode::Full);
        let sched = PulseSchedule::constant(0.0, mhz(5.0), 0.5).unwrap();
        let init = initial_state(&h, &"1001".parse().unwrap()).unwrap();
        let run = run_sweep(&h, init, &sched, &[Observable::SiteDensities], &[0.0, 0.5], PropagationOptions::new(0.05)).unwrap();
        assert_eq!(run.trajectory.rows()[1], vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn krylov_matches_dense_oracle() {
        for mode in [HamiltonianMode::Full, HamiltonianMode::ConstrainedWithTail] {
            let h = blockaded(8, mode);
            let (om, de) = (mhz(2.0), mhz(1.0));
            let init = initial_state(&h, &"10101010".parse().unwrap()).unwrap();
            let dense = h.to_dense(om, de).unwrap();
            let exact = dense_propagate(&dense, init.amplitudes(), 0.3);
            let mut s = init.clone();
            let sched = PulseSchedule::constant(om, de, 0.3).unwrap();
            propagate(&h, &mut s, &sched, 0.0, 0.3, PropagationOptions::new(0.3)).unwrap();
            let ov: Complex64 = exact.iter().zip(s.amplitudes()).map(|(a, b)| a.conj() * b).sum();
            assert!(ov.norm() > 1.0 - 1e-9, "{mode:?} fidelity {}", ov.norm());
        }
    }

    #[test]
    fn energy_conserved_for_constant_drive() {
        let h = blockaded(6, HamiltonianMode::ConstrainedNn);
        let (om, de) = (mhz(2.0), mhz(0.7));
        let mut s = initial_state(&h, &"101010".parse().unwrap()).unwrap();
        let e0 = h.expectation(om, de, &s).unwrap();
        let sched = PulseSchedule::constant(om, de, 2.0).unwrap();
        propagate(&h, &mut s, &sched, 0.0, 2.0, PropagationOptions::new(0.02)).unwrap();
        let e1 = h.expectation(om, de, &s).unwrap();
        assert!((e1 - e0).abs() / h.norm_bound(om, de) < 1e-8);
        assert!((s.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_windows_rejected() {
        let h = blockaded(2, HamiltonianMode::Full);
        let mut s = initial_state(&h, &"00".parse().unwrap()).unwrap();
        let sched = PulseSchedule::constant(1.0, 0.0, 1.0).unwrap();
        assert!(propagate(&h, &mut s, &sched, 0.0, 1.0, PropagationOptions::new(0.0)).is_err());
        assert!(propagate(&h, &mut s, &sched, 0.5, 0.5, PropagationOptions::new(0.1)).is_err());
        assert!(propagate(&h, &mut s, &sched, 0.0, 2.0, PropagationOptions::new(0.1)).is_err());
    }

    #[test]
    fn binary_dump_layout() {
        let h = blockaded(2, HamiltonianMode::Full);
        let s = initial_state(&h, &"10".parse().unwrap()).unwrap();
        let mut buf = Vec::new();
        write_state_binary(&s, &mut buf).unwrap();
        assert_eq!(buf.len(), 24);
        assert_eq!(u64::from_le_bytes(buf[..8].try_into().unwrap()), 2);
        assert_eq!(f64::from_le_bytes(buf[8..16].try_into().unwrap()), 1.0);
    }
}
