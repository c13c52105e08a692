//! Adiabatic preparation of the Z2 crystal in a 7-atom chain, with and
//! without detection errors.

use rydsim::basis::Configuration;
use rydsim::detection::{correct_ground_state_prob, DetectionModel};
use rydsim::exact::{initial_state, run_sweep, uniform_times, PropagationOptions};
use rydsim::hamiltonian::{Hamiltonian, HamiltonianMode, HamiltonianSpec};
use rydsim::model::{mhz, z2_sweep, AtomArray, SPACING_Z2_UM, V_NN_Z2_MHZ};
use rydsim::observables::Observable;

fn main() -> rydsim::Result<()> {
    let n = 7;
    let array = AtomArray::uniform(n, SPACING_Z2_UM, mhz(V_NN_Z2_MHZ))?;
    let h = Hamiltonian::new(HamiltonianSpec::new(array, HamiltonianMode::Full))?;
    let schedule = z2_sweep()?;
    let obs = [Observable::Detuning, Observable::DomainWallDensity, Observable::crystal_probability(n)];
    let times = uniform_times(schedule.duration(), 20);
    let run = run_sweep(&h, initial_state(&h, &Configuration::all_ground(n))?, &schedule, &obs, &times, PropagationOptions::new(0.001))?;
    println!("{:>6} {:>9} {:>10} {:>9}", "t_us", "Δ/Ω", "dw_density", "p_crystal");
    for (t, row) in run.trajectory.times().iter().zip(run.trajectory.rows()) {
        println!("{t:6.2} {:9.3} {:10.4} {:9.4}", row[0] / schedule.omega(*t).max(1e-12), row[1], row[2]);
    }
    let p = run.final_state.probability_of(&Configuration::crystal(n))?;
    let channel = DetectionModel::new(0.98, 0.93)?;
    // detection shrinks the observed crystal fraction by f_r^4 f_g^3
    let observed = p * channel.f_r.powi(4) * channel.f_g.powi(3);
    let corrected = correct_ground_state_prob(observed, n, &channel)?;
    println!("crystal probability {p:.3}, observed {observed:.3}, corrected back {:.3}", corrected.value);
    Ok(())
}
