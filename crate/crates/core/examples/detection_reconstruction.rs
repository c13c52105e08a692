//! Closed-loop test of detection-error inversion: sample a thermal parent,
//! corrupt the shots, and recover the parent distribution.

use rydsim::detection::{apply_channel, bootstrap_sigma, build_response_matrix, reconstruct_parent, DetectionModel, ReconstructOptions, ResponseMethod};
use rydsim::model::mhz;
use rydsim::observables::{DomainWallDistribution, ShotSet};
use rydsim::seeding::{SeedTree, BOOTSTRAP, CHANNEL, RESTARTS, SAMPLING};
use rydsim::thermal::{domain_wall_fcs, Ensemble, ThermalModel};

fn main() -> rydsim::Result<()> {
    let n = 13;
    let n_shots = 20_000;
    let seeds = SeedTree::new(2018);
    let delta = mhz(14.0);
    let model = ThermalModel::new(n, delta, mhz(24.0), mhz(0.38), 1.5 / delta)?;
    let channel = DetectionModel::new(0.99, 0.93)?;

    let truth = ShotSet::new(n, Ensemble::new(&model)?.sample(n_shots, &mut seeds.stream(SAMPLING))?)?;
    let observed = apply_channel(&truth, &channel, &mut seeds.stream(CHANNEL));
    let response = build_response_matrix(n, &channel, ResponseMethod::ExactEnumeration, None)?;
    let w_obs = response.observed_vector(&DomainWallDistribution::from_counts(n, &observed.wall_counts())?)?;
    let sigma = bootstrap_sigma(&w_obs, n_shots, 200, &mut seeds.stream(BOOTSTRAP))?;
    let rec = reconstruct_parent(&w_obs, &sigma, &response, ReconstructOptions::for_shots(n_shots), &mut seeds.stream(RESTARTS))?;

    let exact = domain_wall_fcs(&model)?;
    println!("{:>3} {:>9} {:>9} {:>9}", "D", "observed", "parent", "exact");
    for &d in &response.columns {
        let obs = response.rows.iter().position(|&r| r == d).map_or(0.0, |i| w_obs[i]);
        println!("{d:3} {obs:9.4} {:9.4} {:9.4}", rec.parent.probabilities[d], exact.probabilities[d]);
    }
    println!("cost {:.2}, restarts agree: {}, TV to exact parent {:.4}", rec.cost, rec.restarts_agree, rec.parent.total_variation(&exact));
    Ok(())
}
