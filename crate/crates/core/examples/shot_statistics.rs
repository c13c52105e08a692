//! Projective measurements of a swept state: wall statistics with
//! bootstrap intervals, the most common snapshots and g²(d).

use rydsim::basis::Configuration;
use rydsim::exact::{initial_state, run_sweep, PropagationOptions};
use rydsim::hamiltonian::{Hamiltonian, HamiltonianMode, HamiltonianSpec};
use rydsim::model::{mhz, z2_sweep, AtomArray, SPACING_Z2_UM, V_NN_Z2_MHZ};
use rydsim::observables::{domain_wall_stats, g2_matrix, g2_of_distance, sample_shots, state_histogram};
use rydsim::seeding::{SeedTree, BOOTSTRAP, SAMPLING};

fn main() -> rydsim::Result<()> {
    let n = 11;
    let array = AtomArray::uniform(n, SPACING_Z2_UM, mhz(V_NN_Z2_MHZ))?;
    let h = Hamiltonian::new(HamiltonianSpec::new(array, HamiltonianMode::ConstrainedWithTail))?;
    let schedule = z2_sweep()?;
    let psi0 = initial_state(&h, &Configuration::all_ground(n))?;
    let run = run_sweep(&h, psi0, &schedule, &[], &[schedule.duration()], PropagationOptions::new(0.002))?;

    let seeds = SeedTree::new(11);
    let shots = sample_shots(&run.final_state, 5000, &mut seeds.stream(SAMPLING))?;
    let stats = domain_wall_stats(&shots, 200, &mut seeds.stream(BOOTSTRAP))?;
    println!(
        "⟨D⟩ = {:.3} [{:.3}, {:.3}]  Var(D) = {:.3} [{:.3}, {:.3}]",
        stats.mean, stats.mean_ci.0, stats.mean_ci.1, stats.variance, stats.variance_ci.0, stats.variance_ci.1
    );
    for (c, k) in state_histogram(&shots, 5)? {
        println!("  {c}  ×{k}");
    }
    let g2 = g2_of_distance(&g2_matrix(&shots)?);
    for (d, g) in g2.iter().enumerate().take(6) {
        println!("  g²({d}) = {g:+.4}");
    }
    Ok(())
}
