//! Persistent oscillations after a resonant quench from the crystal,
//! contrasted with the quick relaxation of the all-ground start.

use rydsim::basis::Configuration;
use rydsim::exact::{initial_state, run_quench, PropagationOptions};
use rydsim::hamiltonian::{Hamiltonian, HamiltonianMode, HamiltonianSpec};
use rydsim::model::{mhz, AtomArray, SPACING_Z2_UM, V_NN_Z2_MHZ};
use rydsim::observables::Observable;
use rydsim::variational::oscillation_from_extrema;

fn main() -> rydsim::Result<()> {
    let n = 15;
    let omega = mhz(2.0);
    let array = AtomArray::uniform(n, SPACING_Z2_UM, mhz(V_NN_Z2_MHZ))?;
    let h = Hamiltonian::new(HamiltonianSpec::new(array, HamiltonianMode::ConstrainedNn))?;
    let obs = [Observable::DomainWallDensity, Observable::Entropy { cut: n / 2 }];
    for (label, start) in [("crystal", Configuration::crystal(n)), ("ground", Configuration::all_ground(n))] {
        let run = run_quench(&h, initial_state(&h, &start)?, omega, 2.0, 0.01, &obs, PropagationOptions::new(0.01))?;
        let dw = run.trajectory.column("dw_density")?;
        let s = run.trajectory.column(&format!("S_cut{}_nats", n / 2))?;
        let late = &dw[150..];
        let swing = late.iter().cloned().fold(f64::MIN, f64::max) - late.iter().cloned().fold(f64::MAX, f64::min);
        print!("{label:>8}: late swing {swing:.3}, S(2 μs) = {:.3}", s.last().unwrap());
        match oscillation_from_extrema(run.trajectory.times(), &dw, 1e-3) {
            Ok(o) => println!(", revival at Ω/{:.3}", omega / o.revival_frequency),
            Err(_) => println!(", no clean oscillation"),
        }
    }
    Ok(())
}
