//! Measurement-side quantities: densities, domain walls, correlations,
//! histograms, and projective sampling.
//!
//! Domain walls follow the Z₂ convention: a wall sits between two neighbours
//! found in the same state, and at each edge whose atom is in |g⟩. A chain of
//! N atoms has N + 1 wall slots, and the domain-wall density divides the
//! count by N + 1.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::basis::{bit, Configuration};
use crate::error::{Error, Result};
use crate::hamiltonian::StateVector;

/// Wall count of a packed word of `n` sites.
#[inline]
pub fn domain_walls_word(word: u64, n: usize) -> usize {
    let shifted_xnor = !(word ^ (word >> 1));
    let pair_mask = if n >= 2 { (1u64 << (n - 1)) - 1 } else { 0 };
    let pairs = (shifted_xnor & pair_mask).count_ones() as usize;
    let first = !bit(word, n, 0) as usize;
    let last = !bit(word, n, n - 1) as usize;
    pairs + first + last
}

pub fn count_domain_walls(config: &Configuration) -> usize {
    domain_walls_word(config.word(), config.len())
}

/// Number of wall slots, used to normalize densities.
pub fn wall_slots(n_atoms: usize) -> usize {
    n_atoms + 1
}

/// Quantities recorded along a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Observable {
    /// Instantaneous Δ(t) in rad/μs, column `delta_rad_per_us`.
    Detuning,
    /// `n_0 … n_{N−1}`.
    SiteDensities,
    /// Mean Rydberg density, column `density`.
    RydbergDensity,
    /// ⟨D⟩/(N+1), column `dw_density`.
    DomainWallDensity,
    /// Var(D), column `dw_variance`.
    DomainWallVariance,
    /// Von Neumann entropy of sites `0..cut`, column `S_cut<cut>_nats`.
    Entropy { cut: usize },
    /// Probability of one configuration, column `p_<bits>`.
    Probability { config: String },
    /// Probability of more than one excitation, column `p_multi`.
    MultiExcitation,
}

impl Observable {
    pub fn columns(&self, n_atoms: usize) -> Vec<String> {
        match self {
            Observable::Detuning => vec!["delta_rad_per_us".into()],
            Observable::SiteDensities => (0..n_atoms).map(|i| format!("n_{i}")).collect(),
            Observable::RydbergDensity => vec!["density".into()],
            Observable::DomainWallDensity => vec!["dw_density".into()],
            Observable::DomainWallVariance => vec!["dw_variance".into()],
            Observable::Entropy { cut } => vec![format!("S_cut{cut}_nats")],
            Observable::Probability { config } => vec![format!("p_{config}")],
            Observable::MultiExcitation => vec!["p_multi".into()],
        }
    }

    pub fn validate(&self, n_atoms: usize) -> Result<()> {
        match self {
            Observable::Entropy { cut } if *cut == 0 || *cut >= n_atoms => {
                Err(Error::Invalid(format!("entropy cut {cut} outside 1..{n_atoms}")))
            }
            Observable::Probability { config } => {
                let c: Configuration = config.parse()?;
                if c.len() != n_atoms {
                    return Err(Error::Shape(format!("probe configuration {config} has {} sites, chain has {n_atoms}", c.len())));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn crystal_probability(n_atoms: usize) -> Self {
        Observable::Probability { config: Configuration::crystal(n_atoms).to_string() }
    }

    pub fn ground_probability(n_atoms: usize) -> Self {
        Observable::Probability { config: Configuration::all_ground(n_atoms).to_string() }
    }
}

pub fn columns_for(observables: &[Observable], n_atoms: usize) -> Vec<String> {
    observables.iter().flat_map(|o| o.columns(n_atoms)).collect()
}

/// Evaluates `observables` on a state vector at drive detuning `delta`.
pub fn measure_state(state: &StateVector, observables: &[Observable], delta: f64) -> Result<Vec<f64>> {
    let n = state.n_atoms();
    let mut row = Vec::new();
    for o in observables {
        match o {
            Observable::Detuning => row.push(delta),
            Observable::SiteDensities => row.extend(state.site_densities()),
            Observable::RydbergDensity => row.push(state.site_densities().iter().sum::<f64>() / n as f64),
            Observable::DomainWallDensity => {
                let m = state.expect_diagonal(|w| domain_walls_word(w, n) as f64);
                row.push(m / wall_slots(n) as f64);
            }
            Observable::DomainWallVariance => {
                let m = state.expect_diagonal(|w| domain_walls_word(w, n) as f64);
                let m2 = state.expect_diagonal(|w| (domain_walls_word(w, n) as f64).powi(2));
                row.push((m2 - m * m).max(0.0));
            }
            Observable::Entropy { cut } => row.push(state.entanglement_entropy(*cut)?),
            Observable::Probability { config } => row.push(state.probability_of(&config.parse()?)?),
            Observable::MultiExcitation => row.push(state.expect_diagonal(|w| (w.count_ones() > 1) as u8 as f64)),
        }
    }
    Ok(row)
}

/// Descriptive data attached to a set of shots.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ShotMetadata {
    pub delta: Option<f64>,
    pub schedule_id: Option<String>,
    pub seed: Option<u64>,
}

/// Measured or simulated bit strings of one chain length.
#[derive(Clone, Debug, PartialEq)]
pub struct ShotSet {
    n_atoms: usize,
    shots: Vec<Configuration>,
    pub metadata: ShotMetadata,
}

impl ShotSet {
    pub fn new(n_atoms: usize, shots: Vec<Configuration>) -> Result<Self> {
        if let Some(bad) = shots.iter().find(|s| s.len() != n_atoms) {
            return Err(Error::Shape(format!("shot {bad} has {} sites, expected {n_atoms}", bad.len())));
        }
        Ok(Self { n_atoms, shots, metadata: ShotMetadata::default() })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn shots(&self) -> &[Configuration] {
        &self.shots
    }

    pub fn len(&self) -> usize {
        self.shots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shots.is_empty()
    }

    pub fn site_densities(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_atoms];
        for s in &self.shots {
            for (i, o) in out.iter_mut().enumerate() {
                *o += s.get(i) as u8 as f64;
            }
        }
        let k = self.shots.len().max(1) as f64;
        out.iter_mut().for_each(|o| *o /= k);
        out
    }

    pub fn wall_counts(&self) -> Vec<usize> {
        self.shots.iter().map(count_domain_walls).collect()
    }

    /// One shot per line, '0'/'1' characters.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        for s in &self.shots {
            writeln!(w, "{s}")?;
        }
        Ok(())
    }

    pub fn read_from(r: impl BufRead) -> Result<Self> {
        let mut shots = Vec::new();
        for (k, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let c: Configuration = line
                .parse()
                .map_err(|e| Error::Invalid(format!("shot file line {}: {e}", k + 1)))?;
            shots.push(c);
        }
        let n = shots.first().map(|s| s.len()).ok_or_else(|| Error::Empty("shot file has no shots".into()))?;
        Self::new(n, shots)
    }
}

/// Probability of each wall count `0..=N+1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainWallDistribution {
    pub n_atoms: usize,
    pub probabilities: Vec<f64>,
    /// Number of shots behind an empirical distribution; `None` when exact.
    pub n_shots: Option<usize>,
}

impl DomainWallDistribution {
    pub fn new(n_atoms: usize, probabilities: Vec<f64>, n_shots: Option<usize>) -> Result<Self> {
        if probabilities.len() != n_atoms + 2 {
            return Err(Error::Shape(format!(
                "{} wall-count bins for {n_atoms} atoms (expected {})",
                probabilities.len(),
                n_atoms + 2
            )));
        }
        if probabilities.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::Invalid("wall-count probabilities must be nonnegative".into()));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid(format!("wall-count probabilities sum to {total}")));
        }
        Ok(Self { n_atoms, probabilities, n_shots })
    }

    pub fn from_counts(n_atoms: usize, counts: &[usize]) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Empty("no wall counts".into()));
        }
        let mut hist = vec![0usize; n_atoms + 2];
        for &c in counts {
            if c > n_atoms + 1 {
                return Err(Error::Invalid(format!("wall count {c} exceeds {} slots", n_atoms + 1)));
            }
            hist[c] += 1;
        }
        let k = counts.len() as f64;
        Ok(Self { n_atoms, probabilities: hist.iter().map(|&h| h as f64 / k).collect(), n_shots: Some(counts.len()) })
    }

    pub fn mean(&self) -> f64 {
        self.probabilities.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.probabilities.iter().enumerate().map(|(n, p)| (n as f64 - m).powi(2) * p).sum()
    }

    pub fn density(&self) -> f64 {
        self.mean() / wall_slots(self.n_atoms) as f64
    }

    pub fn total_variation(&self, other: &Self) -> f64 {
        0.5 * self.probabilities.iter().zip(&other.probabilities).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }
}

/// Empirical wall statistics with parametric-bootstrap 68% intervals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainWallStats {
    pub mean: f64,
    pub variance: f64,
    pub distribution: DomainWallDistribution,
    pub mean_ci: (f64, f64),
    pub variance_ci: (f64, f64),
}

pub fn domain_wall_stats<R: Rng + ?Sized>(shots: &ShotSet, n_resamples: usize, rng: &mut R) -> Result<DomainWallStats> {
    if shots.is_empty() {
        return Err(Error::Empty("domain-wall statistics need at least one shot".into()));
    }
    let counts = shots.wall_counts();
    let k = counts.len() as f64;
    let mean = counts.iter().sum::<usize>() as f64 / k;
    let variance = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / k;
    let distribution = DomainWallDistribution::from_counts(shots.n_atoms(), &counts)?;
    let mut means = Vec::with_capacity(n_resamples);
    let mut vars = Vec::with_capacity(n_resamples);
    for _ in 0..n_resamples {
        let draw = multinomial(rng, counts.len() as u64, &distribution.probabilities);
        let p: Vec<f64> = draw.iter().map(|&c| c as f64 / k).collect();
        let m: f64 = p.iter().enumerate().map(|(n, q)| n as f64 * q).sum();
        means.push(m);
        vars.push(p.iter().enumerate().map(|(n, q)| (n as f64 - m).powi(2) * q).sum());
    }
    let ci = |v: &mut Vec<f64>, centre: f64| {
        if v.is_empty() {
            (centre, centre)
        } else {
            (quantile(v, 0.16), quantile(v, 0.84))
        }
    };
    Ok(DomainWallStats {
        mean,
        variance,
        mean_ci: ci(&mut means, mean),
        variance_ci: ci(&mut vars, variance),
        distribution,
    })
}

/// Multinomial draw by sequential conditional binomials.
pub fn multinomial<R: Rng + ?Sized>(rng: &mut R, n: u64, probs: &[f64]) -> Vec<u64> {
    let mut out = vec![0u64; probs.len()];
    let mut left = n;
    let mut mass = 1.0f64;
    for (k, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if k + 1 == probs.len() {
            out[k] = left;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let c = Binomial::new(left, q).expect("probability clamped to [0,1]").sample(rng);
        out[k] = c;
        left -= c;
        mass -= p;
    }
    out
}

/// Linear-interpolated sample quantile; sorts `v` in place.
pub fn quantile(v: &mut [f64], q: f64) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let x = q * (v.len() - 1) as f64;
    let (lo, hi) = (x.floor() as usize, x.ceil() as usize);
    v[lo] + (v[hi] - v[lo]) * (x - lo as f64)
}

/// `g²_ij = ⟨n_i n_j⟩ − ⟨n_i⟩⟨n_j⟩` over shots.
pub fn g2_matrix(shots: &ShotSet) -> Result<DMatrix<f64>> {
    if shots.len() < 2 {
        return Err(Error::Empty("correlations need at least two shots".into()));
    }
    let n = shots.n_atoms();
    let mut pair = DMatrix::<f64>::zeros(n, n);
    let mut single = vec![0.0; n];
    for s in shots.shots() {
        let bits: Vec<usize> = (0..n).filter(|&i| s.get(i)).collect();
        for &i in &bits {
            single[i] += 1.0;
            for &j in &bits {
                pair[(i, j)] += 1.0;
            }
        }
    }
    let k = shots.len() as f64;
    Ok(DMatrix::from_fn(n, n, |i, j| pair[(i, j)] / k - single[i] * single[j] / (k * k)))
}

/// Distance average `1/(N−d) Σ_i g²_{i,i+d}` for `d = 0..N−1`.
pub fn g2_of_distance(g2: &DMatrix<f64>) -> Vec<f64> {
    let n = g2.nrows();
    (0..n)
        .map(|d| (0..n - d).map(|i| g2[(i, i + d)]).sum::<f64>() / (n - d) as f64)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationFit {
    /// Decay length in sites.
    pub xi: f64,
    pub amplitude: f64,
    /// RMS residual of the log-scale fit.
    pub residual: f64,
    /// Whether g²(d) showed the (−1)^d sign pattern on the fitted range.
    pub alternating: bool,
    pub points: usize,
}

/// Least-squares fit of `ln|g²(d)| = ln A − d/ξ` on `d ∈ [1, d_max]`,
/// skipping points with `|g²| ≤ noise_floor`.
pub fn fit_correlation_length(g2_by_distance: &[f64], d_max: usize, noise_floor: f64) -> Result<CorrelationFit> {
    let hi = d_max.min(g2_by_distance.len().saturating_sub(1));
    let pts: Vec<(f64, f64, f64)> = (1..=hi)
        .filter(|&d| g2_by_distance[d].abs() > noise_floor && g2_by_distance[d].is_finite())
        .map(|d| (d as f64, g2_by_distance[d].abs().ln(), g2_by_distance[d]))
        .collect();
    if pts.len() < 4 {
        return Err(Error::Fit(format!("{} usable distance points, need at least 4", pts.len())));
    }
    let alternating = pts.iter().all(|&(d, _, g)| {
        let expected = if (d as usize) % 2 == 0 { 1.0 } else { -1.0 };
        g * expected > 0.0
    });
    let k = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (mx, my) = (sx / k, sy / k);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    if !(slope < 0.0) {
        return Err(Error::Fit(format!("correlations do not decay (log slope {slope:.3e})")));
    }
    let residual = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / k).sqrt();
    Ok(CorrelationFit { xi: -1.0 / slope, amplitude: intercept.exp(), residual, alternating, points: pts.len() })
}

/// Most frequent configurations, ties broken by lexicographic order.
pub fn state_histogram(shots: &ShotSet, top_k: usize) -> Result<Vec<(Configuration, usize)>> {
    if shots.is_empty() {
        return Err(Error::Empty("histogram of an empty shot set".into()));
    }
    let mut counts: HashMap<Configuration, usize> = HashMap::new();
    for s in shots.shots() {
        *counts.entry(*s).or_default() += 1;
    }
    let mut v: Vec<(Configuration, usize)> = counts.into_iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v.truncate(top_k);
    Ok(v)
}

/// Anything that can be projectively measured in the computational basis.
pub trait ShotSource {
    fn n_atoms(&self) -> usize;
    fn sample<R: Rng + ?Sized>(&self, n_shots: usize, rng: &mut R) -> Result<Vec<Configuration>>;
}

impl ShotSource for StateVector {
    fn n_atoms(&self) -> usize {
        StateVector::n_atoms(self)
    }

    fn sample<R: Rng + ?Sized>(&self, n_shots: usize, rng: &mut R) -> Result<Vec<Configuration>> {
        let mut cdf = Vec::with_capacity(self.amplitudes().len());
        let mut acc = 0.0;
        for a in self.amplitudes() {
            acc += a.norm_sqr();
            cdf.push(acc);
        }
        let n = StateVector::n_atoms(self);
        let basis = self.basis();
        Ok((0..n_shots)
            .map(|_| {
                let u: f64 = rng.random::<f64>() * acc;
                let k = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
                Configuration::from_word(basis.words()[k], n).expect("basis word fits")
            })
            .collect())
    }
}

pub fn sample_shots<S: ShotSource, R: Rng + ?Sized>(state: &S, n_shots: usize, rng: &mut R) -> Result<ShotSet> {
    ShotSet::new(state.n_atoms(), state.sample(n_shots, rng)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisSet;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn cfg(s: &str) -> Configuration {
        s.parse().unwrap()
    }

    fn set(lines: &[&str]) -> ShotSet {
        ShotSet::new(lines[0].len(), lines.iter().map(|s| cfg(s)).collect()).unwrap()
    }

    #[test]
    fn wall_counting_examples() {
        assert_eq!(count_domain_walls(&cfg("1010101")), 0);
        assert_eq!(count_domain_walls(&cfg("000")), 4);
        assert_eq!(count_domain_walls(&cfg("010")), 2);
        assert_eq!(count_domain_walls(&cfg("1")), 0);
        assert_eq!(count_domain_walls(&cfg("0")), 2);
        assert_eq!(count_domain_walls(&cfg("11")), 1);
    }

    #[test]
    fn wall_parity_exhaustive() {
        for n in (1..=15).step_by(2) {
            for w in 0..1u64 << n {
                assert_eq!(domain_walls_word(w, n) % 2, 0, "N={n} word={w:b}");
            }
        }
    }

    #[test]
    fn crystal_shots_have_no_walls() {
        let s = set(&["10101"; 20]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let st = domain_wall_stats(&s, 50, &mut rng).unwrap();
        assert_eq!((st.mean, st.variance), (0.0, 0.0));
        assert_eq!(st.distribution.probabilities[0], 1.0);
        assert_eq!(st.distribution.mean(), st.mean);
    }

    #[test]
    fn empty_stats_rejected() {
        let s = ShotSet::new(3, vec![]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(domain_wall_stats(&s, 10, &mut rng), Err(Error::Empty(_))));
    }

    #[test]
    fn g2_of_identical_shots_vanishes() {
        let g = g2_matrix(&set(&["1001"; 5])).unwrap();
        assert!(g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn g2_independent_coins() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let shots: Vec<Configuration> = (0..40_000)
            .map(|_| Configuration::from_word(rng.random::<u64>() & 0xff, 8).unwrap())
            .collect();
        let s = ShotSet::new(8, shots).unwrap();
        let g = g2_matrix(&s).unwrap();
        let d = g2_of_distance(&g);
        assert!((d[0] - 0.25).abs() < 0.01);
        for x in &d[1..] {
            assert!(x.abs() < 5.0 * 0.25 / (40_000f64).sqrt() * 2.0);
        }
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(g[(i, j)], g[(j, i)]);
            }
        }
    }

    #[test]
    fn exact_exponential_recovered() {
        let g: Vec<f64> = (0..20).map(|d| 0.2 * (-1f64).powi(d) * (-(d as f64) / 3.0).exp()).collect();
        let f = fit_correlation_length(&g, 12, 0.0).unwrap();
        assert!((f.xi - 3.0).abs() < 1e-10);
        assert!((f.amplitude - 0.2).abs() < 1e-10);
        assert!(f.alternating);
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn noisy_correlations_fail_or_fit_badly() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g: Vec<f64> = (0..20).map(|_| 1e-3 * (rng.random::<f64>() - 0.5)).collect();
        match fit_correlation_length(&g, 12, 0.0) {
            Err(Error::Fit(_)) => {}
            Ok(f) => assert!(f.residual > 0.3 || !f.alternating, "{f:?}"),
            Err(e) => panic!("{e}"),
        }
        assert!(matches!(fit_correlation_length(&[0.1, -0.1, 0.05], 12, 0.0), Err(Error::Fit(_))));
    }

    #[test]
    fn histogram_ordering() {
        let s = set(&["01", "10", "10", "00", "01"]);
        let h = state_histogram(&s, 10).unwrap();
        let got: Vec<(String, usize)> = h.iter().map(|(c, k)| (c.to_string(), *k)).collect();
        assert_eq!(got, [("01".to_string(), 2), ("10".to_string(), 2), ("00".to_string(), 1)]);
        assert_eq!(state_histogram(&set(&["11"; 3]), 5).unwrap().len(), 1);
    }

    #[test]
    fn state_vector_sampling() {
        let basis = Arc::new(BasisSet::enumerate(2, true).unwrap());
        let z = Complex64::new(0.0, 0.0);
        let o = Complex64::new(1.0, 0.0);
        let psi = StateVector::from_amplitudes(basis.clone(), vec![z, o, o]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let shots = sample_shots(&psi, n, &mut rng).unwrap();
        let k = shots.shots().iter().filter(|c| c.to_string() == "01").count() as f64;
        let sigma = (0.25 / n as f64).sqrt();
        assert!((k / n as f64 - 0.5).abs() < 5.0 * sigma);
        assert!(shots.shots().iter().all(|c| c.to_string() != "00"));

        let g = StateVector::from_configuration(basis, &cfg("00")).unwrap();
        assert!(sample_shots(&g, 100, &mut rng).unwrap().shots().iter().all(|c| c.word() == 0));
    }

    #[test]
    fn shot_file_round_trip() {
        let s = set(&["0101", "1000"]);
        let mut buf = Vec::new();
        s.write_to(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "0101\n1000\n");
        let back = ShotSet::read_from(&buf[..]).unwrap();
        assert_eq!(back.shots(), s.shots());
        assert!(ShotSet::read_from(&b"01\n012\n"[..]).is_err());
        assert!(ShotSet::read_from(&b"01\n011\n"[..]).is_err());
    }

    #[test]
    fn multinomial_preserves_total() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = multinomial(&mut rng, 1000, &[0.2, 0.0, 0.5, 0.3]);
        assert_eq!(d.iter().sum::<u64>(), 1000);
        assert_eq!(d[1], 0);
    }
}
