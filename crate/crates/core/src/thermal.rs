//! Classical thermal ensemble of the deep-Z₂ regime.
//!
//! `H_cl = −Δ Σ n_i + V₁ Σ n_i n_{i+1} + V₂ Σ n_i n_{i+2}` on an open chain,
//! with the all-ground configuration at zero energy. Sites are grouped in
//! blocks `(2k, 2k+1)`, so range-2 couplings only connect consecutive blocks
//! and a single block kernel carries the whole chain. Odd chains are padded
//! with a phantom site frozen in |g⟩ that couples to nothing and carries no
//! wall terms.
//!
//! With a detection channel every site carries a (true, observed) pair and
//! the kernel grows from 4×4 to 16×16; observables then act on observed bits.
//!
//! Contractions are done in the log domain: each kernel is scaled by its
//! largest entry and each propagated vector by its largest component.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::basis::Configuration;
use crate::detection::DetectionModel;
use crate::error::{Error, Result};
use crate::observables::DomainWallDistribution;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalModel {
    pub n_atoms: usize,
    pub delta: f64,
    pub v1: f64,
    pub v2: f64,
    pub beta: f64,
}

impl ThermalModel {
    pub fn new(n_atoms: usize, delta: f64, v1: f64, v2: f64, beta: f64) -> Result<Self> {
        let m = Self { n_atoms, delta, v1, v2, beta };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_atoms == 0 {
            return Err(Error::Invalid("thermal chain needs at least one atom".into()));
        }
        if !(self.v2 >= 0.0 && self.v1 > self.v2) {
            return Err(Error::Invalid(format!("need V1 > V2 >= 0 (got {}, {})", self.v1, self.v2)));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() || !self.delta.is_finite() {
            return Err(Error::Invalid(format!("need finite β > 0 and finite Δ (got β = {}, Δ = {})", self.beta, self.delta)));
        }
        Ok(())
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        Self { beta, ..*self }
    }

    /// Classical energy of a configuration.
    pub fn energy(&self, c: &Configuration) -> f64 {
        let n = c.len();
        let b = |i: usize| c.get(i) as u8 as f64;
        let mut e = 0.0;
        for i in 0..n {
            e -= self.delta * b(i);
            if i + 1 < n {
                e += self.v1 * b(i) * b(i + 1);
            }
            if i + 2 < n {
                e += self.v2 * b(i) * b(i + 2);
            }
        }
        e
    }
}

/// Multiplicative weights applied to a contraction, keyed by observed bits:
/// `site[i][b]` for site `i` in state `b`, `pair[i][same]` for the
/// neighbours `(i, i+1)`, `same = 1` when they agree.
#[derive(Clone, Debug)]
struct Insertions {
    site: Vec<[Complex64; 2]>,
    pair: Vec<[Complex64; 2]>,
}

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

impl Insertions {
    fn identity(n: usize) -> Self {
        Self { site: vec![[ONE; 2]; n], pair: vec![[ONE; 2]; n.saturating_sub(1)] }
    }

    fn excited(mut self, i: usize) -> Self {
        self.site[i][0] = ZERO;
        self
    }

    fn same_pair(mut self, i: usize) -> Self {
        self.pair[i][0] = ZERO;
        self
    }

    fn ground_edge(mut self, i: usize) -> Self {
        self.site[i][1] = ZERO;
        self
    }

    /// Every wall term picks up `z`.
    fn wall_twist(mut self, z: Complex64) -> Self {
        let n = self.site.len();
        self.site[0][0] *= z;
        self.site[n - 1][0] *= z;
        for p in &mut self.pair {
            p[1] *= z;
        }
        self
    }
}

/// Thermal ensemble, optionally seen through a detection channel.
#[derive(Clone, Debug)]
pub struct Ensemble {
    model: ThermalModel,
    channel: Option<DetectionModel>,
    // (log scale, residual) of the plain partition sum
    z: (f64, Complex64),
}

impl Ensemble {
    pub fn new(model: &ThermalModel) -> Result<Self> {
        Self::build(model, None)
    }

    pub fn dressed(model: &ThermalModel, channel: &DetectionModel) -> Result<Self> {
        Self::build(model, Some(*channel))
    }

    fn build(model: &ThermalModel, channel: Option<DetectionModel>) -> Result<Self> {
        model.validate()?;
        let mut e = Self { model: *model, channel, z: (0.0, ONE) };
        e.z = e.contract(&Insertions::identity(model.n_atoms))?;
        Ok(e)
    }

    pub fn model(&self) -> &ThermalModel {
        &self.model
    }

    pub fn log_partition(&self) -> f64 {
        self.z.0 + self.z.1.re.ln()
    }

    fn q(&self) -> usize {
        if self.channel.is_some() {
            4
        } else {
            2
        }
    }

    // local state x → (true bit, observed bit)
    #[inline]
    fn split(&self, x: usize) -> (usize, usize) {
        if self.channel.is_some() {
            (x >> 1, x & 1)
        } else {
            (x, x)
        }
    }

    fn log_site(&self, i: usize, x: usize) -> f64 {
        let (t, o) = self.split(x);
        if i >= self.model.n_atoms {
            return if x == 0 { 0.0 } else { f64::NEG_INFINITY };
        }
        let mut w = self.model.beta * self.model.delta * t as f64;
        if let Some(ch) = &self.channel {
            w += ch.likelihood(t == 1, o == 1).ln();
        }
        w
    }

    fn log_pair(&self, i: usize, j: usize, x: usize, y: usize) -> f64 {
        if j >= self.model.n_atoms {
            return 0.0;
        }
        let (tx, _) = self.split(x);
        let (ty, _) = self.split(y);
        let v = if j == i + 1 { self.model.v1 } else { self.model.v2 };
        -self.model.beta * v * (tx * ty) as f64
    }

    fn site_mult(&self, ins: &Insertions, i: usize, x: usize) -> Complex64 {
        if i >= self.model.n_atoms {
            return ONE;
        }
        ins.site[i][self.split(x).1]
    }

    fn pair_mult(&self, ins: &Insertions, i: usize, x: usize, y: usize) -> Complex64 {
        if i + 1 >= self.model.n_atoms {
            return ONE;
        }
        ins.pair[i][(self.split(x).1 == self.split(y).1) as usize]
    }

    fn blocks(&self) -> usize {
        self.model.n_atoms.div_ceil(2)
    }

    /// Log-scaled weights of the first block.
    fn first_block(&self, ins: &Insertions) -> (f64, Vec<Complex64>) {
        let q = self.q();
        let mut logw = vec![0.0; q * q];
        for xa in 0..q {
            for xb in 0..q {
                logw[xa * q + xb] = self.log_site(0, xa) + self.log_site(1, xb) + self.log_pair(0, 1, xa, xb);
            }
        }
        let m = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let v = (0..q * q)
            .map(|s| {
                let (xa, xb) = (s / q, s % q);
                let w = (logw[s] - m).exp();
                if w == 0.0 {
                    ZERO
                } else {
                    self.site_mult(ins, 0, xa) * self.site_mult(ins, 1, xb) * self.pair_mult(ins, 0, xa, xb) * w
                }
            })
            .collect();
        (m, v)
    }

    /// Log-scaled kernel from block `k` to block `k+1`, row-major `[s][s']`.
    fn kernel(&self, k: usize, ins: &Insertions) -> (f64, Vec<Complex64>) {
        let q = self.q();
        let d = q * q;
        let (i, j) = (2 * k, 2 * k + 2);
        let mut logw = vec![0.0; d * d];
        for s in 0..d {
            let (xa, xb) = (s / q, s % q);
            for t in 0..d {
                let (ya, yb) = (t / q, t % q);
                logw[s * d + t] = self.log_site(j, ya)
                    + self.log_site(j + 1, yb)
                    + self.log_pair(j, j + 1, ya, yb)
                    + self.log_pair(i + 1, j, xb, ya)
                    + self.log_pair(i, j, xa, ya)
                    + self.log_pair(i + 1, j + 1, xb, yb);
            }
        }
        let m = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut out = vec![ZERO; d * d];
        for s in 0..d {
            let xb = s % q;
            for t in 0..d {
                let (ya, yb) = (t / q, t % q);
                let w = (logw[s * d + t] - m).exp();
                if w == 0.0 {
                    continue;
                }
                out[s * d + t] = self.site_mult(ins, j, ya)
                    * self.site_mult(ins, j + 1, yb)
                    * self.pair_mult(ins, j, ya, yb)
                    * self.pair_mult(ins, i + 1, xb, ya)
                    * w;
            }
        }
        (m, out)
    }

    /// Weighted sum over all configurations as `exp(scale) · value`.
    fn contract(&self, ins: &Insertions) -> Result<(f64, Complex64)> {
        let d = self.q() * self.q();
        let (mut scale, mut v) = self.first_block(ins);
        let mut next = vec![ZERO; d];
        for k in 0..self.blocks() - 1 {
            let (m, t) = self.kernel(k, ins);
            scale += m;
            next.iter_mut().for_each(|x| *x = ZERO);
            for s in 0..d {
                if v[s] == ZERO {
                    continue;
                }
                for u in 0..d {
                    next[u] += v[s] * t[s * d + u];
                }
            }
            let top = next.iter().map(|x| x.norm()).fold(0.0, f64::max);
            if top == 0.0 {
                return Ok((scale, ZERO));
            }
            if !top.is_finite() {
                return Err(Error::Numeric("transfer-matrix contraction overflowed".into()));
            }
            scale += top.ln();
            for (a, b) in v.iter_mut().zip(&next) {
                *a = b / top;
            }
        }
        let total: Complex64 = v.iter().sum();
        if !(scale.is_finite() && total.re.is_finite() && total.im.is_finite()) {
            return Err(Error::Numeric("transfer-matrix contraction is not finite".into()));
        }
        Ok((scale, total))
    }

    fn ratio(&self, ins: &Insertions) -> Result<Complex64> {
        let (s, v) = self.contract(ins)?;
        Ok(v / self.z.1 * (s - self.z.0).exp())
    }

    fn real_ratio(&self, ins: Insertions) -> Result<f64> {
        Ok(self.ratio(&ins)?.re)
    }

    fn base(&self) -> Insertions {
        Insertions::identity(self.model.n_atoms)
    }

    /// `⟨n_i⟩` (observed bits when dressed).
    pub fn density(&self, i: usize) -> Result<f64> {
        self.real_ratio(self.base().excited(i))
    }

    /// `⟨n_i n_j⟩`.
    pub fn joint_density(&self, i: usize, j: usize) -> Result<f64> {
        if i == j {
            return self.density(i);
        }
        self.real_ratio(self.base().excited(i).excited(j))
    }

    pub fn mean_domain_walls(&self) -> Result<f64> {
        let n = self.model.n_atoms;
        let mut total = self.real_ratio(self.base().ground_edge(0))? + self.real_ratio(self.base().ground_edge(n - 1))?;
        for i in 0..n - 1 {
            total += self.real_ratio(self.base().same_pair(i))?;
        }
        Ok(total)
    }

    pub fn densities(&self) -> Result<Vec<f64>> {
        (0..self.model.n_atoms).map(|i| self.density(i)).collect()
    }

    /// Connected correlator matrix `g²_ij`.
    pub fn g2_matrix(&self) -> Result<nalgebra::DMatrix<f64>> {
        let n = self.model.n_atoms;
        let dens = self.densities()?;
        let mut g = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.joint_density(i, j)? - dens[i] * dens[j];
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        Ok(g)
    }

    /// `g²(d)` for `d = 0..=d_max` (clamped to the chain).
    pub fn g2_of_distance(&self, d_max: usize) -> Result<Vec<f64>> {
        let g = self.g2_matrix()?;
        let mut all = crate::observables::g2_of_distance(&g);
        all.truncate(d_max + 1);
        Ok(all)
    }

    /// Mean energy of the true configurations.
    pub fn energy(&self) -> Result<f64> {
        let n = self.model.n_atoms;
        let mut e = 0.0;
        if self.channel.is_some() {
            return Err(Error::Invalid("energy is defined on the undressed ensemble only".into()));
        }
        for i in 0..n {
            e -= self.model.delta * self.density(i)?;
            if i + 1 < n {
                e += self.model.v1 * self.joint_density(i, i + 1)?;
            }
            if i + 2 < n && self.model.v2 != 0.0 {
                e += self.model.v2 * self.joint_density(i, i + 2)?;
            }
        }
        Ok(e)
    }

    /// Wall-count distribution by discrete Fourier inversion of the
    /// phase-twisted partition sums.
    pub fn wall_distribution(&self) -> Result<DomainWallDistribution> {
        let n = self.model.n_atoms;
        let slots = n + 2;
        let twisted: Vec<Complex64> = (0..slots)
            .map(|k| {
                let theta = std::f64::consts::TAU * k as f64 / slots as f64;
                self.ratio(&self.base().wall_twist(Complex64::from_polar(1.0, -theta)))
            })
            .collect::<Result<_>>()?;
        let mut p = Vec::with_capacity(slots);
        for m in 0..slots {
            let s: Complex64 = twisted
                .iter()
                .enumerate()
                .map(|(k, z)| z * Complex64::from_polar(1.0, std::f64::consts::TAU * (k * m % slots) as f64 / slots as f64))
                .sum::<Complex64>()
                / slots as f64;
            if s.im.abs() > 1e-8 {
                return Err(Error::Numeric(format!("counting statistics keep imaginary part {:.3e} at n = {m}", s.im)));
            }
            if s.re < -1e-8 {
                return Err(Error::Numeric(format!("counting statistics give p_{m} = {:.3e}", s.re)));
            }
            p.push(if s.re.abs() < 1e-10 { 0.0 } else { s.re.max(0.0) });
        }
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= total);
        DomainWallDistribution::new(n, p, None)
    }

    /// Draws true configurations (undressed ensemble only).
    pub fn sample<R: Rng + ?Sized>(&self, n_shots: usize, rng: &mut R) -> Result<Vec<Configuration>> {
        if self.channel.is_some() {
            return Err(Error::Invalid("sample the undressed ensemble and apply the channel separately".into()));
        }
        let n = self.model.n_atoms;
        let ins = self.base();
        let nb = self.blocks();
        let kernels: Vec<Vec<f64>> = (0..nb - 1).map(|k| self.kernel(k, &ins).1.iter().map(|c| c.re).collect()).collect();
        // right environments, each normalized to unit maximum
        let mut right = vec![vec![1.0; 4]; nb];
        for k in (0..nb - 1).rev() {
            let mut r = vec![0.0; 4];
            for (s, rs) in r.iter_mut().enumerate() {
                *rs = (0..4).map(|u| kernels[k][s * 4 + u] * right[k + 1][u]).sum();
            }
            let top = r.iter().copied().fold(0.0, f64::max);
            r.iter_mut().for_each(|x| *x /= top);
            right[k] = r;
        }
        let first: Vec<f64> = self.first_block(&ins).1.iter().map(|c| c.re).collect();
        let pick = |w: &[f64], rng: &mut R| -> usize {
            let total: f64 = w.iter().sum();
            let mut u = rng.random::<f64>() * total;
            for (k, &x) in w.iter().enumerate() {
                if u < x {
                    return k;
                }
                u -= x;
            }
            w.iter().rposition(|&x| x > 0.0).unwrap_or(0)
        };
        let mut out = Vec::with_capacity(n_shots);
        for _ in 0..n_shots {
            let mut bits = Vec::with_capacity(2 * nb);
            let w0: Vec<f64> = (0..4).map(|s| first[s] * right[0][s]).collect();
            let mut s = pick(&w0, rng);
            bits.extend([s >> 1 == 1, s & 1 == 1]);
            for k in 0..nb - 1 {
                let w: Vec<f64> = (0..4).map(|u| kernels[k][s * 4 + u] * right[k + 1][u]).collect();
                s = pick(&w, rng);
                bits.extend([s >> 1 == 1, s & 1 == 1]);
            }
            bits.truncate(n);
            out.push(Configuration::from_bits(&bits)?);
        }
        Ok(out)
    }
}

pub fn log_partition(model: &ThermalModel) -> Result<f64> {
    Ok(Ensemble::new(model)?.log_partition())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalObservables {
    pub log_z: f64,
    pub mean_dw: f64,
    pub density: f64,
    pub energy: f64,
    /// `s/k_B = (β⟨E⟩ + ln Z)/N`.
    pub entropy_per_atom: f64,
    /// `g²(d)` for `d = 0..=d_max`.
    pub g2: Vec<f64>,
}

pub fn thermal_observables(model: &ThermalModel, d_max: usize) -> Result<ThermalObservables> {
    let e = Ensemble::new(model)?;
    let n = model.n_atoms as f64;
    let energy = e.energy()?;
    let log_z = e.log_partition();
    Ok(ThermalObservables {
        log_z,
        mean_dw: e.mean_domain_walls()?,
        density: e.densities()?.iter().sum::<f64>() / n,
        energy,
        entropy_per_atom: (model.beta * energy + log_z) / n,
        g2: e.g2_of_distance(d_max)?,
    })
}

pub fn domain_wall_fcs(model: &ThermalModel) -> Result<DomainWallDistribution> {
    Ensemble::new(model)?.wall_distribution()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DressedObservable {
    DomainWalls,
    Density,
    G2 { d_max: usize },
    Fcs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DressedValue {
    Scalar(f64),
    Vector(Vec<f64>),
    Distribution(DomainWallDistribution),
}

impl DressedValue {
    pub fn scalar(&self) -> Option<f64> {
        match self {
            DressedValue::Scalar(x) => Some(*x),
            _ => None,
        }
    }
}

/// Expectation over observed configurations of the thermal state.
pub fn dressed_expectation(model: &ThermalModel, channel: &DetectionModel, observable: DressedObservable) -> Result<DressedValue> {
    let e = Ensemble::dressed(model, channel)?;
    Ok(match observable {
        DressedObservable::DomainWalls => DressedValue::Scalar(e.mean_domain_walls()?),
        DressedObservable::Density => DressedValue::Scalar(e.densities()?.iter().sum::<f64>() / model.n_atoms as f64),
        DressedObservable::G2 { d_max } => DressedValue::Vector(e.g2_of_distance(d_max)?),
        DressedObservable::Fcs => DressedValue::Distribution(e.wall_distribution()?),
    })
}

fn dressed_walls(model: &ThermalModel, channel: &DetectionModel, beta: f64) -> Result<f64> {
    Ensemble::dressed(&model.with_beta(beta), channel)?.mean_domain_walls()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaCalibration {
    pub beta: f64,
    pub achieved: f64,
}

/// Finds β whose dressed mean wall count equals `target` (bisection in ln β;
/// the dressed count decreases monotonically with β).
pub fn calibrate_beta(model: &ThermalModel, channel: &DetectionModel, target: f64) -> Result<BetaCalibration> {
    let scale = model.delta.abs().max(model.v1).max(1e-12);
    let (mut lo, mut hi) = ((1e-6 / scale).ln(), (1e4 / scale).ln());
    let f_lo = dressed_walls(model, channel, lo.exp())?;
    let f_hi = dressed_walls(model, channel, hi.exp())?;
    if !(target <= f_lo && target >= f_hi) {
        return Err(Error::Range { target, low: f_hi, high: f_lo });
    }
    let mut best = BetaCalibration { beta: lo.exp(), achieved: f_lo };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f = dressed_walls(model, channel, mid.exp())?;
        best = BetaCalibration { beta: mid.exp(), achieved: f };
        if (f - target).abs() < 1e-4 && hi - lo < 1e-12 {
            break;
        }
        if f > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    if (best.achieved - target).abs() >= 1e-4 {
        return Err(Error::Numeric(format!(
            "β calibration stalled at ⟨⟨D⟩⟩ = {} for target {target}",
            best.achieved
        )));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::mhz;
    use crate::observables::domain_walls_word;

    fn paper(n: usize) -> ThermalModel {
        let d = mhz(14.0);
        ThermalModel::new(n, d, mhz(24.0), mhz(0.38), 3.44 / d).unwrap()
    }

    // Σ over all 2^N configurations, weights exp(−βE)·f(config)
    fn brute<F: Fn(u64) -> f64>(m: &ThermalModel, f: F) -> (f64, f64) {
        let n = m.n_atoms;
        let mut z = 0.0;
        let mut acc = 0.0;
        for w in 0..1u64 << n {
            let c = Configuration::from_word(w, n).unwrap();
            let p = (-m.beta * m.energy(&c)).exp();
            z += p;
            acc += p * f(w);
        }
        (z, acc / z)
    }

    #[test]
    fn log_partition_matches_enumeration() {
        for n in [1, 2, 3, 4, 7, 10, 13, 16] {
            let m = paper(n);
            let (z, _) = brute(&m, |_| 0.0);
            let lz = log_partition(&m).unwrap();
            assert!((lz - z.ln()).abs() < 1e-10, "N={n}: {lz} vs {}", z.ln());
        }
    }

    #[test]
    fn infinite_temperature_and_free_sites() {
        let m = ThermalModel::new(11, 1.0, 2.0, 0.5, 1e-14).unwrap();
        assert!((log_partition(&m).unwrap() - 11.0 * 2f64.ln()).abs() < 1e-9);
        let free = ThermalModel { n_atoms: 9, delta: 0.8, v1: 0.0, v2: 0.0, beta: 1.3 };
        let e = Ensemble { model: free, channel: None, z: (0.0, ONE) };
        let (s, v) = e.contract(&e.base()).unwrap();
        let expected = 9.0 * (1.0 + (1.3f64 * 0.8).exp()).ln();
        assert!((s + v.re.ln() - expected).abs() < 1e-12);
    }

    #[test]
    fn observables_match_enumeration() {
        for n in [3, 6, 9] {
            let m = paper(n).with_beta(0.9 / mhz(14.0));
            let obs = thermal_observables(&m, n - 1).unwrap();
            let (_, dw) = brute(&m, |w| domain_walls_word(w, n) as f64);
            let (_, e) = brute(&m, |w| m.energy(&Configuration::from_word(w, n).unwrap()));
            assert!((obs.mean_dw - dw).abs() < 1e-10);
            assert!((obs.energy - e).abs() < 1e-9 * e.abs().max(1.0));
            for d in 0..n {
                let mut g = 0.0;
                for i in 0..n - d {
                    let j = i + d;
                    let bi = |w: u64| ((w >> (n - 1 - i)) & 1) as f64;
                    let bj = |w: u64| ((w >> (n - 1 - j)) & 1) as f64;
                    let (_, nij) = brute(&m, |w| bi(w) * bj(w));
                    let (_, ni) = brute(&m, bi);
                    let (_, nj) = brute(&m, bj);
                    g += nij - ni * nj;
                }
                assert!((obs.g2[d] - g / (n - d) as f64).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn energy_is_log_partition_derivative() {
        let m = paper(21);
        let h = 1e-6 * m.beta;
        let lp = log_partition(&m.with_beta(m.beta + h)).unwrap();
        let lm = log_partition(&m.with_beta(m.beta - h)).unwrap();
        let fd = -(lp - lm) / (2.0 * h);
        let e = Ensemble::new(&m).unwrap().energy().unwrap();
        assert!(((fd - e) / e).abs() < 1e-6);
    }

    #[test]
    fn fcs_matches_enumeration() {
        for n in [1, 2, 5, 8, 13] {
            let m = paper(n).with_beta(0.7 / mhz(14.0));
            let p = domain_wall_fcs(&m).unwrap();
            let mut exact = vec![0.0; n + 2];
            let (z, _) = brute(&m, |_| 0.0);
            for w in 0..1u64 << n {
                let c = Configuration::from_word(w, n).unwrap();
                exact[domain_walls_word(w, n)] += (-m.beta * m.energy(&c)).exp() / z;
            }
            for k in 0..n + 2 {
                assert!((p.probabilities[k] - exact[k]).abs() < 1e-10, "N={n} k={k}");
            }
        }
    }

    #[test]
    fn dressed_with_perfect_detection_is_undressed() {
        let m = paper(15);
        let perfect = DetectionModel::new(1.0, 1.0).unwrap();
        let a = dressed_expectation(&m, &perfect, DressedObservable::DomainWalls).unwrap().scalar().unwrap();
        let b = Ensemble::new(&m).unwrap().mean_domain_walls().unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn dressed_matches_enumeration() {
        let n = 6;
        let m = paper(n).with_beta(1.5 / mhz(14.0));
        let ch = DetectionModel::new(0.9, 0.8).unwrap();
        let got = dressed_expectation(&m, &ch, DressedObservable::DomainWalls).unwrap().scalar().unwrap();
        let (z, _) = brute(&m, |_| 0.0);
        let mut expect = 0.0;
        for t in 0..1u64 << n {
            let pt = (-m.beta * m.energy(&Configuration::from_word(t, n).unwrap())).exp() / z;
            for o in 0..1u64 << n {
                let mut lam = 1.0;
                for i in 0..n {
                    lam *= ch.likelihood((t >> i) & 1 == 1, (o >> i) & 1 == 1);
                }
                expect += pt * lam * domain_walls_word(o, n) as f64;
            }
        }
        assert!((got - expect).abs() < 1e-10);
    }

    #[test]
    fn calibration_round_trip() {
        let m = paper(21);
        let ch = DetectionModel::new(0.99, 0.93).unwrap();
        let beta_star = 2.9 / m.delta;
        let target = dressed_walls(&m, &ch, beta_star).unwrap();
        let cal = calibrate_beta(&m, &ch, target).unwrap();
        assert!(((cal.beta - beta_star) / beta_star).abs() < 1e-6);
        let top = dressed_walls(&m, &ch, 1e-6 / m.delta).unwrap();
        assert!(matches!(calibrate_beta(&m, &ch, top + 0.5), Err(Error::Range { .. })));
    }

    #[test]
    fn zero_temperature_limit() {
        let m = paper(51).with_beta(400.0 / mhz(14.0));
        let obs = thermal_observables(&m, 4).unwrap();
        assert!(obs.mean_dw < 1e-6);
        assert!(obs.entropy_per_atom.abs() < 1e-6);
    }

    #[test]
    fn sampling_reproduces_mean_walls() {
        use rand::SeedableRng;
        let m = paper(25);
        let e = Ensemble::new(&m).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let shots = e.sample(20_000, &mut rng).unwrap();
        let mean = shots.iter().map(crate::observables::count_domain_walls).sum::<usize>() as f64 / 20_000.0;
        let fcs = e.wall_distribution().unwrap();
        let sd = fcs.variance().sqrt() / (20_000f64).sqrt();
        assert!((mean - fcs.mean()).abs() < 5.0 * sd, "{mean} vs {}", fcs.mean());
    }
}
