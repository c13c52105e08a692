//! Rabi oscillations of 1, 2 and 3 mutually blockaded atoms.
//!
//! The ground-state population of a blockaded cluster oscillates at
//! `√N · Ω`; the frequency is read off the FFT peak.

use rydsim::basis::Configuration;
use rydsim::exact::{initial_state, run_sweep, uniform_times, PropagationOptions};
use rydsim::hamiltonian::{Hamiltonian, HamiltonianMode, HamiltonianSpec};
use rydsim::model::{mhz, AtomArray, PulseSchedule, SPACING_Z4_UM};
use rydsim::observables::Observable;
use rydsim::spectrum::dominant_angular_frequency;

fn main() -> rydsim::Result<()> {
    let omega = mhz(2.0);
    let duration = 10.0;
    let times = uniform_times(duration, 1000);
    let schedule = PulseSchedule::constant(omega, 0.0, duration)?;
    for n in 1..=3 {
        // 2π × 1536 MHz between neighbours at 2.87 μm
        let array = AtomArray::uniform(n, SPACING_Z4_UM, mhz(1536.0))?;
        let h = Hamiltonian::new(HamiltonianSpec::new(array, HamiltonianMode::Full))?;
        let psi0 = initial_state(&h, &Configuration::all_ground(n))?;
        let obs = [Observable::ground_probability(n)];
        let run = run_sweep(&h, psi0, &schedule, &obs, &times, PropagationOptions::new(0.001))?;
        let p: Vec<f64> = run.trajectory.rows().iter().map(|r| r[0]).collect();
        let w = dominant_angular_frequency(&p, times[1])?;
        println!("N = {n}: ω/Ω = {:.4} (√N = {:.4})", w / omega, (n as f64).sqrt());
    }
    Ok(())
}
