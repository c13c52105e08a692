//! Van der Waals couplings and blockade radius from one calibration point.

use rydsim::model::{blockade_radius, c6_from_pair, mhz, to_mhz, SPACING_Z2_UM, SPACING_Z3_UM, SPACING_Z4_UM, V_NN_Z2_MHZ};

fn main() -> rydsim::Result<()> {
    let c6 = c6_from_pair(SPACING_Z2_UM, mhz(V_NN_Z2_MHZ));
    for (label, a) in [("Z2", SPACING_Z2_UM), ("Z3", SPACING_Z3_UM), ("Z4", SPACING_Z4_UM)] {
        let v1 = c6 / a.powi(6);
        let v2 = v1 / 64.0;
        println!("{label}: a = {a:.2} μm  V1 = 2π×{:8.2} MHz  V2 = 2π×{:6.2} MHz", to_mhz(v1), to_mhz(v2));
    }
    for f in [1.0, 2.0, 4.0] {
        println!("Ω = 2π×{f} MHz: R_b = {:.2} μm", blockade_radius(c6, mhz(f))?);
    }
    Ok(())
}
