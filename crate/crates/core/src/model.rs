//! Atom geometry, pair interactions and time-dependent drive schedules.
//!
//! All angular frequencies are stored in rad/μs and all times in μs. A
//! frequency quoted as "2 MHz" enters the code as `mhz(2.0) = 2π·2` rad/μs.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TAU: f64 = std::f64::consts::TAU;

/// Nearest-neighbour interaction used for the Z₂ arrays (MHz).
pub const V_NN_Z2_MHZ: f64 = 24.0;
/// Nearest-neighbour interaction used for the long-range-tail quench studies (MHz).
pub const V_NN_TAIL_MHZ: f64 = 25.6;
/// Lattice spacings (μm) producing Z₂, Z₃ and Z₄ order at `V_NN_Z2_MHZ` calibration.
pub const SPACING_Z2_UM: f64 = 5.74;
pub const SPACING_Z3_UM: f64 = 3.57;
pub const SPACING_Z4_UM: f64 = 2.87;
/// Spacing of effectively non-interacting atoms (μm).
pub const SPACING_ISOLATED_UM: f64 = 23.0;
/// Default Rabi frequency (MHz).
pub const OMEGA_MHZ: f64 = 2.0;

/// MHz to angular frequency in rad/μs.
#[inline]
pub fn mhz(f: f64) -> f64 {
    TAU * f
}

/// Angular frequency in rad/μs to MHz.
#[inline]
pub fn to_mhz(w: f64) -> f64 {
    w / TAU
}

/// Van der Waals coefficient (rad/μs · μm⁶) reproducing interaction `v` at `distance`.
pub fn c6_from_pair(distance_um: f64, v: f64) -> f64 {
    v * distance_um.powi(6)
}

/// Effective two-level Rabi frequency of a far-detuned two-photon drive.
pub fn two_photon_rabi(omega_blue: f64, omega_red: f64, intermediate_detuning: f64) -> f64 {
    omega_blue * omega_red / (2.0 * intermediate_detuning)
}

/// Pair interaction matrix `V_ij = c6 / |x_i - x_j|⁶`, zero on the diagonal.
pub fn build_interactions(positions: &[f64], c6: f64) -> Result<DMatrix<f64>> {
    if positions.is_empty() {
        return Err(Error::Invalid("at least one atom position is required".into()));
    }
    if !(c6 > 0.0) || !c6.is_finite() {
        return Err(Error::Invalid(format!("c6 must be positive, got {c6}")));
    }
    for (k, w) in positions.windows(2).enumerate() {
        if w[1] == w[0] {
            return Err(Error::DegenerateGeometry(format!(
                "atoms {k} and {} share position {} μm",
                k + 1,
                w[0]
            )));
        }
        if w[1] < w[0] {
            return Err(Error::Invalid(format!(
                "positions must be strictly increasing (index {})",
                k + 1
            )));
        }
    }
    let n = positions.len();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            c6 / (positions[i] - positions[j]).abs().powi(6)
        }
    }))
}

/// Distance at which the pair interaction equals the drive strength.
pub fn blockade_radius(c6: f64, omega: f64) -> Result<f64> {
    if !(c6 > 0.0) || !(omega > 0.0) {
        return Err(Error::Invalid(format!(
            "blockade radius needs c6 > 0 and omega > 0 (got {c6}, {omega})"
        )));
    }
    Ok((c6 / omega).powf(1.0 / 6.0))
}

/// A one-dimensional array of atoms with van der Waals pair interactions.
#[derive(Clone, Debug)]
pub struct AtomArray {
    positions: Vec<f64>,
    c6: f64,
    v: DMatrix<f64>,
}

impl AtomArray {
    pub fn new(positions: Vec<f64>, c6: f64) -> Result<Self> {
        let v = build_interactions(&positions, c6)?;
        Ok(Self { positions, c6, v })
    }

    /// Evenly spaced chain whose nearest-neighbour interaction equals `v_nn`.
    pub fn uniform(n_atoms: usize, spacing_um: f64, v_nn: f64) -> Result<Self> {
        if n_atoms == 0 {
            return Err(Error::Invalid("n_atoms must be positive".into()));
        }
        if !(spacing_um > 0.0) {
            return Err(Error::Invalid(format!("spacing must be positive, got {spacing_um}")));
        }
        let positions = (0..n_atoms).map(|i| i as f64 * spacing_um).collect();
        Self::new(positions, c6_from_pair(spacing_um, v_nn))
    }

    pub fn n_atoms(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn c6(&self) -> f64 {
        self.c6
    }

    pub fn interactions(&self) -> &DMatrix<f64> {
        &self.v
    }

    #[inline]
    pub fn v(&self, i: usize, j: usize) -> f64 {
        self.v[(i, j)]
    }

    /// Copy with every coupling beyond `range` sites set to zero.
    pub fn truncated(&self, range: usize) -> Self {
        let mut v = self.v.clone();
        let n = self.n_atoms();
        for i in 0..n {
            for j in 0..n {
                if i.abs_diff(j) > range {
                    v[(i, j)] = 0.0;
                }
            }
        }
        Self { positions: self.positions.clone(), c6: self.c6, v }
    }

    /// Interaction between atoms 0 and 1 (zero for a single atom).
    pub fn nearest_neighbour(&self) -> f64 {
        if self.n_atoms() > 1 {
            self.v[(0, 1)]
        } else {
            0.0
        }
    }
}

/// Parameters of the clipped cubic or tangent detuning sweep (rad/μs, μs).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub t0: f64,
    pub delta_min: f64,
    pub delta_max: f64,
}

impl SweepParams {
    /// Cubic sweep from `start` at t = 0 to `end` at t = `duration` with
    /// inflection point `(t0, c)` and slope `slope` there. The cubic
    /// coefficient is the smallest one that reaches both window edges; the
    /// curve is clipped beyond them.
    pub fn cubic_through(start: f64, end: f64, duration: f64, t0: f64, c: f64, slope: f64) -> Result<Self> {
        if !(start < c && c < end) || !(t0 > 0.0 && t0 < duration) {
            return Err(Error::Invalid(format!(
                "cubic sweep needs start < c < end and 0 < t0 < duration (got {start}, {c}, {end}; t0 = {t0})"
            )));
        }
        if !(slope >= 0.0) {
            return Err(Error::Invalid(format!("sweep slope must be nonnegative, got {slope}")));
        }
        let a_for = |u: f64, r: f64| (r - slope * u) / (u * u * u);
        let a = a_for(-t0, start - c).max(a_for(duration - t0, end - c)).max(0.0);
        Ok(Self { a, b: slope, c, t0, delta_min: start, delta_max: end })
    }

    /// Tangent sweep with inflection `(t0, c)` and rate `b`; the amplitude
    /// is the smallest one reaching both window edges inside the pulse.
    pub fn tangent_through(start: f64, end: f64, duration: f64, t0: f64, c: f64, b: f64) -> Result<Self> {
        if !(start < c && c < end) || !(t0 > 0.0 && t0 < duration) {
            return Err(Error::Invalid(format!(
                "tangent sweep needs start < c < end and 0 < t0 < duration (got {start}, {c}, {end}; t0 = {t0})"
            )));
        }
        let half_pi = std::f64::consts::FRAC_PI_2;
        if !(b > 0.0) || b * t0.max(duration - t0) >= half_pi {
            return Err(Error::Invalid(format!("tangent rate b = {b} must be positive with b·|t − t0| < π/2")));
        }
        let a = ((c - start) / (b * t0).tan()).max((end - c) / (b * (duration - t0)).tan());
        Ok(Self { a, b, c, t0, delta_min: start, delta_max: end })
    }

    fn cubic(&self, t: f64) -> f64 {
        let u = t - self.t0;
        (self.a * u * u * u + self.b * u + self.c).clamp(self.delta_min, self.delta_max)
    }

    fn tangent(&self, t: f64) -> f64 {
        (self.a * (self.b * (t - self.t0)).tan() + self.c).clamp(self.delta_min, self.delta_max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum DetuningShape {
    Constant { delta: f64 },
    Cubic(SweepParams),
    Tangent(SweepParams),
}

impl DetuningShape {
    fn eval(&self, t: f64) -> f64 {
        match self {
            DetuningShape::Constant { delta } => *delta,
            DetuningShape::Cubic(p) => p.cubic(t),
            DetuningShape::Tangent(p) => p.tangent(t),
        }
    }
}

/// One piece of a schedule: constant Rabi frequency and a detuning shape in
/// segment-local time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub omega: f64,
    pub duration: f64,
    pub detuning: DetuningShape,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Constant,
    CubicSweep,
    TangentSweep,
    QuenchComposite,
}

/// Time-dependent drive `Ω(t)`, `Δ(t)` on `[0, duration]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    kind: ScheduleKind,
    segments: Vec<Segment>,
}

impl PulseSchedule {
    pub fn constant(omega: f64, delta: f64, duration: f64) -> Result<Self> {
        check_pulse(omega, duration)?;
        Ok(Self {
            kind: ScheduleKind::Constant,
            segments: vec![Segment { omega, duration, detuning: DetuningShape::Constant { delta } }],
        })
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Segment boundaries `[0, t1, ..., duration]`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = vec![0.0];
        let mut t = 0.0;
        for s in &self.segments {
            t += s.duration;
            out.push(t);
        }
        out
    }

    fn locate(&self, t: f64) -> Option<(&Segment, f64)> {
        if t < 0.0 || t > self.duration() {
            return None;
        }
        let mut start = 0.0;
        let last = self.segments.len() - 1;
        for (k, s) in self.segments.iter().enumerate() {
            if t < start + s.duration || k == last {
                return Some((s, t - start));
            }
            start += s.duration;
        }
        None
    }

    /// Rabi frequency; zero outside the pulse.
    pub fn omega(&self, t: f64) -> f64 {
        self.locate(t).map_or(0.0, |(s, _)| s.omega)
    }

    /// Detuning; held at the boundary values outside the pulse.
    pub fn delta(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.duration());
        self.locate(t).map_or(0.0, |(s, local)| s.detuning.eval(local))
    }

    /// Piecewise-linear table on a uniform grid (default 1 ns).
    pub fn sample(&self, grid_dt: f64) -> Result<SampledSchedule> {
        if !(grid_dt > 0.0) {
            return Err(Error::Invalid("grid step must be positive".into()));
        }
        let n = (self.duration() / grid_dt).ceil().max(1.0) as usize;
        let step = self.duration() / n as f64;
        let times: Vec<f64> = (0..=n).map(|k| k as f64 * step).collect();
        Ok(SampledSchedule {
            step,
            omega: times.iter().map(|&t| self.omega(t)).collect(),
            delta: times.iter().map(|&t| self.delta(t)).collect(),
        })
    }
}

fn check_pulse(omega: f64, duration: f64) -> Result<()> {
    if !(omega >= 0.0) || !omega.is_finite() {
        return Err(Error::Invalid(format!("omega must be finite and nonnegative, got {omega}")));
    }
    if !(duration > 0.0) {
        return Err(Error::Invalid(format!("duration must be positive, got {duration}")));
    }
    Ok(())
}

fn check_window(p: &SweepParams) -> Result<()> {
    if !(p.delta_min < p.delta_max) {
        return Err(Error::Invalid(format!(
            "sweep window requires delta_min < delta_max (got {}, {})",
            p.delta_min, p.delta_max
        )));
    }
    Ok(())
}

/// Square pulse of strength `omega0` with a clipped cubic detuning chirp.
pub fn cubic_sweep(params: SweepParams, duration: f64, omega0: f64) -> Result<PulseSchedule> {
    check_pulse(omega0, duration)?;
    check_window(&params)?;
    if params.a < 0.0 || params.b < 0.0 {
        return Err(Error::Invalid("cubic sweep needs a >= 0 and b >= 0 to be nondecreasing".into()));
    }
    Ok(PulseSchedule {
        kind: ScheduleKind::CubicSweep,
        segments: vec![Segment { omega: omega0, duration, detuning: DetuningShape::Cubic(params) }],
    })
}

/// Square pulse of strength `omega0` with a clipped tangent detuning chirp.
pub fn tangent_sweep(params: SweepParams, duration: f64, omega0: f64) -> Result<PulseSchedule> {
    check_pulse(omega0, duration)?;
    check_window(&params)?;
    if params.a * params.b < 0.0 {
        return Err(Error::Invalid("tangent sweep needs a·b >= 0 to be nondecreasing".into()));
    }
    let half_pi = std::f64::consts::FRAC_PI_2;
    for t in [0.0, duration] {
        if (params.b * (t - params.t0)).abs() >= half_pi {
            return Err(Error::Invalid(format!(
                "tangent argument b(t - t0) leaves (-π/2, π/2) at t = {t}"
            )));
        }
    }
    Ok(PulseSchedule {
        kind: ScheduleKind::TangentSweep,
        segments: vec![Segment { omega: omega0, duration, detuning: DetuningShape::Tangent(params) }],
    })
}

/// Duration of the default Z₂ preparation sweep (μs).
pub const Z2_SWEEP_US: f64 = 2.0;

/// Default Z₂ preparation: square `Ω = 2π×2 MHz` pulse with a cubic chirp
/// from `−2π×10` to `2π×14 MHz`, inflecting at `2π×2 MHz` halfway through
/// with slope `2π×4 MHz/μs`. Tuned so a 7-atom chain ends in the crystal with
/// probability ≈ 0.77.
pub fn z2_sweep() -> Result<PulseSchedule> {
    let p = SweepParams::cubic_through(mhz(-10.0), mhz(14.0), Z2_SWEEP_US, 0.5 * Z2_SWEEP_US, mhz(2.0), mhz(4.0))?;
    cubic_sweep(p, Z2_SWEEP_US, mhz(OMEGA_MHZ))
}

/// Tangent counterpart of [`z2_sweep`] over the same window.
pub fn z2_tangent_sweep() -> Result<PulseSchedule> {
    let p = SweepParams::tangent_through(mhz(-10.0), mhz(14.0), Z2_SWEEP_US, 0.5 * Z2_SWEEP_US, mhz(2.0), 1.4)?;
    tangent_sweep(p, Z2_SWEEP_US, mhz(OMEGA_MHZ))
}

/// Appends a constant-detuning hold after `prep`, keeping the final Rabi
/// frequency of the preparation pulse.
pub fn quench_schedule(prep: &PulseSchedule, hold_delta: f64, hold_duration: f64) -> Result<PulseSchedule> {
    if !(hold_duration >= 0.0) {
        return Err(Error::Invalid(format!("hold duration must be >= 0, got {hold_duration}")));
    }
    if hold_duration == 0.0 {
        return Ok(prep.clone());
    }
    let omega = prep.segments.last().map_or(0.0, |s| s.omega);
    let mut segments = prep.segments.clone();
    segments.push(Segment {
        omega,
        duration: hold_duration,
        detuning: DetuningShape::Constant { delta: hold_delta },
    });
    Ok(PulseSchedule { kind: ScheduleKind::QuenchComposite, segments })
}

/// Uniformly sampled drive table with linear interpolation.
#[derive(Clone, Debug)]
pub struct SampledSchedule {
    step: f64,
    omega: Vec<f64>,
    delta: Vec<f64>,
}

impl SampledSchedule {
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    fn interp(&self, table: &[f64], t: f64) -> f64 {
        let x = (t / self.step).clamp(0.0, (table.len() - 1) as f64);
        let k = (x.floor() as usize).min(table.len().saturating_sub(2));
        let frac = x - k as f64;
        if table.len() == 1 {
            return table[0];
        }
        table[k] * (1.0 - frac) + table[k + 1] * frac
    }

    pub fn omega(&self, t: f64) -> f64 {
        self.interp(&self.omega, t)
    }

    pub fn delta(&self, t: f64) -> f64 {
        self.interp(&self.delta, t)
    }
}
