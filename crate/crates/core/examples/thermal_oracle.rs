//! Classical thermal ensemble of a 51-atom chain via transfer matrices.

use rydsim::detection::DetectionModel;
use rydsim::model::mhz;
use rydsim::observables::fit_correlation_length;
use rydsim::thermal::{calibrate_beta, domain_wall_fcs, thermal_observables, ThermalModel};

fn main() -> rydsim::Result<()> {
    let delta = mhz(14.0);
    let model = ThermalModel::new(51, delta, mhz(24.0), mhz(0.38), 3.44 / delta)?;
    let obs = thermal_observables(&model, 12)?;
    let fit = fit_correlation_length(&obs.g2, 12, 0.0)?;
    println!("s/k_B = {:.4}  ⟨D⟩ = {:.3}  density = {:.4}  ξ = {:.3}", obs.entropy_per_atom, obs.mean_dw, obs.density, fit.xi);
    let fcs = domain_wall_fcs(&model)?;
    for (k, p) in fcs.probabilities.iter().enumerate().filter(|(_, p)| **p > 1e-3) {
        println!("  P(D = {k:2}) = {p:.4}");
    }
    let channel = DetectionModel::new(0.99, 0.93)?;
    let cal = calibrate_beta(&model, &channel, 9.01)?;
    println!("β·Δ reproducing a dressed ⟨D⟩ of 9.01: {:.3}", cal.beta * delta);
    Ok(())
}
