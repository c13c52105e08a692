//! Two closed-form pictures of the post-quench crystal dynamics: independent
//! resonant dimers, and a staggered bond-dimension-2 matrix product state
//! whose two angles obey coupled equations of motion.
//!
//! Time in the equations of motion is dimensionless, `τ = Ω t`.

use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

/// Populations of a resonantly driven blockaded pair started in |r g⟩.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimerState {
    pub t: f64,
    pub p_rg: f64,
    pub p_gg: f64,
    pub p_gr: f64,
}

pub fn dimer_populations(t: f64, omega: f64) -> Result<DimerState> {
    if !(omega > 0.0) {
        return Err(Error::Invalid(format!("dimer drive must be positive, got {omega}")));
    }
    let x = omega * t / std::f64::consts::SQRT_2;
    let (s, c) = x.sin_cos();
    Ok(DimerState { t, p_rg: 0.25 * (1.0 + c).powi(2), p_gg: 0.5 * s * s, p_gr: 0.25 * (1.0 - c).powi(2) })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzAngles {
    pub theta_a: f64,
    pub theta_b: f64,
}

impl AnsatzAngles {
    pub const CRYSTAL: Self = Self { theta_a: std::f64::consts::FRAC_PI_2, theta_b: 0.0 };
    pub const GROUND: Self = Self { theta_a: 0.0, theta_b: 0.0 };
}

// Below this |cos θ| a divergent rate is treated as a genuine singularity.
const SEC_GUARD: f64 = 1e-6;
const RATE_CEILING: f64 = 1e3;

/// `(dθa/dτ, dθb/dτ)`.
pub fn eom_rates(a: f64, b: f64) -> (f64, f64) {
    let (sa, ca) = a.sin_cos();
    let (sb, cb) = b.sin_cos();
    let da = -0.5 / cb * (sa * ca * ca * sb + cb * cb);
    let db = -0.5 / ca * (sb * cb * cb * sa + ca * ca);
    (da, db)
}

fn checked_rates(a: f64, b: f64, tau: f64) -> Result<(f64, f64)> {
    let (da, db) = eom_rates(a, b);
    let near = a.cos().abs() < SEC_GUARD || b.cos().abs() < SEC_GUARD;
    let bad = !da.is_finite() || !db.is_finite() || da.abs() > RATE_CEILING || db.abs() > RATE_CEILING;
    if bad && (near || !da.is_finite() || !db.is_finite()) {
        return Err(Error::Singularity { tau });
    }
    Ok((da, db))
}

/// Classic RK4 in `τ = Ω t` from `start` to `tau_end`. Returns the angle
/// samples at every step, including the start.
pub fn integrate_eom(start: AnsatzAngles, tau_end: f64, dtau: f64) -> Result<Vec<(f64, AnsatzAngles)>> {
    if !(dtau > 0.0) || !(tau_end >= 0.0) {
        return Err(Error::Invalid(format!("need dτ > 0 and τ_end >= 0 (got {dtau}, {tau_end})")));
    }
    let steps = (tau_end / dtau).round() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let (mut a, mut b) = (start.theta_a, start.theta_b);
    out.push((0.0, start));
    for k in 0..steps {
        let tau = k as f64 * dtau;
        let (k1a, k1b) = checked_rates(a, b, tau)?;
        let (k2a, k2b) = checked_rates(a + 0.5 * dtau * k1a, b + 0.5 * dtau * k1b, tau + 0.5 * dtau)?;
        let (k3a, k3b) = checked_rates(a + 0.5 * dtau * k2a, b + 0.5 * dtau * k2b, tau + 0.5 * dtau)?;
        let (k4a, k4b) = checked_rates(a + dtau * k3a, b + dtau * k3b, tau + dtau)?;
        a += dtau / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
        b += dtau / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
        out.push(((k + 1) as f64 * dtau, AnsatzAngles { theta_a: a, theta_b: b }));
    }
    Ok(out)
}

/// Bulk quantities of the infinite staggered ansatz.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzObservables {
    /// Rydberg density on `a` sites.
    pub density_a: f64,
    /// Rydberg density on `b` sites.
    pub density_b: f64,
    /// Probability that a bulk neighbour pair agrees, averaged over both bond types.
    pub dw_density: f64,
}

fn site_matrices(theta: f64) -> [Matrix2<Complex64>; 2] {
    let z = Complex64::new(0.0, 0.0);
    let (s, c) = theta.sin_cos();
    let g = Matrix2::new(Complex64::new(c, 0.0), z, Complex64::new(1.0, 0.0), z);
    let r = Matrix2::new(z, Complex64::new(0.0, s), z, z);
    [g, r]
}

// E = Σ_{s ∈ mask} A^s ⊗ conj(A^s); the imaginary parts cancel exactly
fn transfer(theta: f64, mask: [bool; 2]) -> Matrix4<f64> {
    let mats = site_matrices(theta);
    let mut e = Matrix4::zeros();
    for (m, keep) in mats.iter().zip(mask) {
        if !keep {
            continue;
        }
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        e[(2 * i + k, 2 * j + l)] += (m[(i, j)] * m[(k, l)].conj()).re;
                    }
                }
            }
        }
    }
    e
}

const ALL: [bool; 2] = [true, true];
const G: [bool; 2] = [true, false];
const R: [bool; 2] = [false, true];

fn leading_vectors(t: &Matrix4<f64>) -> Result<(f64, Vector4<f64>, Vector4<f64>)> {
    let mut ev: Vec<Complex64> = t.complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| y.norm().total_cmp(&x.norm()));
    let lead = ev[0];
    let gap = lead.norm() - ev[1].norm();
    if lead.norm() == 0.0 || gap.abs() < 1e-12 * lead.norm().max(1.0) || lead.im.abs() > 1e-12 * lead.norm() {
        return Err(Error::Degeneracy(gap));
    }
    let lambda = lead.re;
    let null = |m: Matrix4<f64>| -> Vector4<f64> {
        let svd = m.svd(false, true);
        let v_t = svd.v_t.expect("requested");
        let k = svd.singular_values.imin();
        v_t.row(k).transpose()
    };
    let right = null(t - Matrix4::identity() * lambda);
    let left = null(t.transpose() - Matrix4::identity() * lambda);
    Ok((lambda, left, right))
}

/// Densities and wall density of the infinite chain with angles alternating
/// `a, b, a, b, …`, from the leading eigenvectors of the two-site transfer
/// matrix.
pub fn ansatz_observables(angles: AnsatzAngles) -> Result<AnsatzObservables> {
    let (a, b) = (angles.theta_a, angles.theta_b);
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::Invalid("ansatz angles must be finite".into()));
    }
    let ea = transfer(a, ALL);
    let eb = transfer(b, ALL);
    let cell = ea * eb;
    let (lambda, l, r) = leading_vectors(&cell)?;
    let norm = (l.transpose() * cell * r)[(0, 0)];
    let expect = |m: Matrix4<f64>| (l.transpose() * m * r)[(0, 0)] / norm;
    let density_a = expect(transfer(a, R) * eb);
    let density_b = expect(ea * transfer(b, R));
    // bond a→b inside the cell, bond b→a across cells
    let same_ab = expect(transfer(a, G) * transfer(b, G)) + expect(transfer(a, R) * transfer(b, R));
    let same_ba = (expect_two_cells(&l, &r, &ea, &transfer(b, G), &transfer(a, G), &eb, lambda, norm)
        + expect_two_cells(&l, &r, &ea, &transfer(b, R), &transfer(a, R), &eb, lambda, norm))
        .max(0.0);
    Ok(AnsatzObservables { density_a, density_b, dw_density: 0.5 * (same_ab + same_ba) })
}

#[allow(clippy::too_many_arguments)]
fn expect_two_cells(
    l: &Vector4<f64>,
    r: &Vector4<f64>,
    ea: &Matrix4<f64>,
    eb_op: &Matrix4<f64>,
    ea_op: &Matrix4<f64>,
    eb: &Matrix4<f64>,
    lambda: f64,
    norm: f64,
) -> f64 {
    (l.transpose() * ea * eb_op * ea_op * eb * r)[(0, 0)] / (norm * lambda)
}

/// Angles with the derived wall density, as `tau, theta_a, theta_b, dw_density`.
pub fn eom_trajectory(samples: &[(f64, AnsatzAngles)]) -> Result<Trajectory> {
    let mut t = Trajectory::with_time_label("tau", vec!["theta_a".into(), "theta_b".into(), "dw_density".into()]);
    for (tau, ang) in samples {
        let obs = ansatz_observables(*ang)?;
        t.push(*tau, vec![ang.theta_a, ang.theta_b, obs.dw_density]);
    }
    Ok(t)
}

/// Oscillation estimate from the first three interior extrema of a series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationEstimate {
    /// Spacing between the first and third extremum (one signal period).
    pub signal_period: f64,
    /// Angular frequency `2π / (2 · signal_period)`: the wall density
    /// oscillates twice per crystal → anti-crystal → crystal revival.
    pub revival_frequency: f64,
    /// Refined positions of the three extrema.
    pub extrema: [f64; 3],
}

/// Locates extrema with three-point parabolic refinement. `min_prominence`
/// skips wiggles whose height relative to both neighbours' values is smaller.
pub fn oscillation_from_extrema(times: &[f64], values: &[f64], min_prominence: f64) -> Result<OscillationEstimate> {
    if times.len() != values.len() || times.len() < 5 {
        return Err(Error::Invalid("need at least five aligned samples".into()));
    }
    let mut found: Vec<(f64, f64, bool)> = Vec::new();
    for k in 1..values.len() - 1 {
        let (y0, y1, y2) = (values[k - 1], values[k], values[k + 1]);
        let is_max = y1 > y0 && y1 >= y2;
        let is_min = y1 < y0 && y1 <= y2;
        if !(is_max || is_min) {
            continue;
        }
        let h = times[k + 1] - times[k];
        let denom = y0 - 2.0 * y1 + y2;
        let shift = if denom.abs() > 0.0 { 0.5 * (y0 - y2) / denom } else { 0.0 };
        let t = times[k] + shift.clamp(-1.0, 1.0) * h;
        let y = y1 - 0.25 * (y0 - y2) * shift;
        if let Some(&(_, py, pmax)) = found.last() {
            if pmax == is_max {
                continue;
            }
            if (y - py).abs() < min_prominence {
                found.pop();
                continue;
            }
        }
        found.push((t, y, is_max));
        if found.len() == 3 {
            break;
        }
    }
    if found.len() < 3 {
        return Err(Error::Fit(format!("found {} extrema, need 3", found.len())));
    }
    let period = found[2].0 - found[0].0;
    Ok(OscillationEstimate {
        signal_period: period,
        revival_frequency: std::f64::consts::PI / period,
        extrema: [found[0].0, found[1].0, found[2].0],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

    #[test]
    fn dimer_limits() {
        let s = dimer_populations(0.0, 3.0).unwrap();
        assert_eq!((s.p_rg, s.p_gg, s.p_gr), (1.0, 0.0, 0.0));
        let om = 2.0 * PI * 2.0;
        let s = dimer_populations(SQRT_2 * PI / om, om).unwrap();
        assert!(s.p_rg.abs() < 1e-12 && s.p_gg.abs() < 1e-12 && (s.p_gr - 1.0).abs() < 1e-12);
        for k in 0..100 {
            let s = dimer_populations(0.037 * k as f64, om).unwrap();
            assert!((s.p_rg + s.p_gg + s.p_gr - 1.0).abs() < 1e-12);
        }
        assert!(dimer_populations(1.0, 0.0).is_err());
    }

    #[test]
    fn symmetric_start_stays_symmetric() {
        let traj = integrate_eom(AnsatzAngles { theta_a: 0.3, theta_b: 0.3 }, 2.0, 1e-3).unwrap();
        for (_, a) in traj {
            assert_eq!(a.theta_a, a.theta_b);
        }
    }

    #[test]
    fn rk4_converges_at_fourth_order() {
        let start = AnsatzAngles { theta_a: 1.2, theta_b: 0.2 };
        let end = |h: f64| integrate_eom(start, 1.0, h).unwrap().last().unwrap().1;
        let (x1, x2, x3) = (end(0.02), end(0.01), end(0.005));
        let ratio = (x1.theta_a - x2.theta_a) / (x2.theta_a - x3.theta_a);
        assert!((ratio - 16.0).abs() < 1.5, "ratio {ratio}");
    }

    #[test]
    fn ansatz_limits() {
        let c = ansatz_observables(AnsatzAngles::CRYSTAL).unwrap();
        assert!((c.density_a - 1.0).abs() < 1e-12 && c.density_b.abs() < 1e-12 && c.dw_density.abs() < 1e-12);
        let g = ansatz_observables(AnsatzAngles::GROUND).unwrap();
        assert!(g.density_a.abs() < 1e-12 && g.density_b.abs() < 1e-12 && (g.dw_density - 1.0).abs() < 1e-12);
    }

    #[test]
    fn relabelling_symmetry() {
        let x = ansatz_observables(AnsatzAngles { theta_a: 0.7, theta_b: 1.1 }).unwrap();
        let y = ansatz_observables(AnsatzAngles { theta_a: 1.1, theta_b: 0.7 }).unwrap();
        assert!((x.density_a - y.density_b).abs() < 1e-10);
        assert!((x.density_b - y.density_a).abs() < 1e-10);
        assert!((x.dw_density - y.dw_density).abs() < 1e-10);
    }

    #[test]
    fn bulk_matches_finite_chain() {
        let (a, b) = (0.9, 0.4);
        let n = 60;
        let vl = [Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
        let vr = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let left = Vector4::from_fn(|i, _| (vl[i / 2] * vl[i % 2].conj()).re);
        let right = Vector4::from_fn(|i, _| (vr[i / 2] * vr[i % 2].conj()).re);
        let theta = |i: usize| if i % 2 == 0 { a } else { b };
        let contract = |site: Option<usize>| {
            let mut v = left.transpose();
            for i in 0..n {
                let mask = if Some(i) == site { R } else { ALL };
                v *= transfer(theta(i), mask);
            }
            (v * right)[(0, 0)]
        };
        let z = contract(None);
        let mid = n / 2;
        let obs = ansatz_observables(AnsatzAngles { theta_a: a, theta_b: b }).unwrap();
        assert!((contract(Some(mid)) / z - obs.density_a).abs() < 1e-6);
        assert!((contract(Some(mid + 1)) / z - obs.density_b).abs() < 1e-6);
    }

    #[test]
    fn crystal_revival_frequency() {
        let traj = integrate_eom(AnsatzAngles::CRYSTAL, 12.0, 1e-3).unwrap();
        let t = eom_trajectory(&traj).unwrap();
        let dw = t.column("dw_density").unwrap();
        let est = oscillation_from_extrema(t.times(), &dw, 1e-3).unwrap();
        let ratio = 1.0 / est.revival_frequency;
        assert!((ratio - 1.51).abs() / 1.51 < 0.02, "Ω/ω = {ratio}");
        // the motion swaps the two sublattices half-way through a revival
        let (_, mid) = traj[(est.extrema[1] / 1e-3).round() as usize];
        assert!((mid.theta_b.abs() - FRAC_PI_2).abs() < 0.35, "{mid:?}");
    }

    #[test]
    fn extremum_finder_on_cosine() {
        let times: Vec<f64> = (0..2000).map(|k| k as f64 * 0.01).collect();
        let vals: Vec<f64> = times.iter().map(|t| (1.3 * t + 0.4).cos()).collect();
        let est = oscillation_from_extrema(&times, &vals, 0.1).unwrap();
        assert!((est.signal_period - 2.0 * PI / 1.3).abs() < 1e-4);
    }
}
