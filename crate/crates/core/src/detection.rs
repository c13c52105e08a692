//! Imperfect state detection and its inversion.
//!
//! Each atom is read out independently: |g⟩ is reported correctly with
//! probability `f_g`, |r⟩ with probability `f_r`. The response matrix maps a
//! distribution of true wall counts to observed wall counts; the parent
//! distribution is recovered by weighted least squares on the simplex.
//!
//! The ensemble behind each response column is uniform over configurations
//! with the given wall count and no run of three equal neighbours, i.e.
//! walls never touch. Columns are sampled exactly with a counting recursion
//! rather than by rejection.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::Configuration;
use crate::error::{Error, Result};
use crate::observables::{count_domain_walls, multinomial, quantile, DomainWallDistribution, ShotSet};
use crate::seeding::SeedTree;

/// Largest chain for the exhaustive response construction.
pub const EXACT_RESPONSE_CAP: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionModel {
    pub f_g: f64,
    pub f_r: f64,
}

impl DetectionModel {
    pub fn new(f_g: f64, f_r: f64) -> Result<Self> {
        for (name, f) in [("f_g", f_g), ("f_r", f_r)] {
            if !(f > 0.5 && f <= 1.0) {
                return Err(Error::Invalid(format!("{name} must lie in (0.5, 1], got {f}")));
            }
        }
        Ok(Self { f_g, f_r })
    }

    pub fn perfect() -> Self {
        Self { f_g: 1.0, f_r: 1.0 }
    }

    /// `λ(observed | true)` for one atom.
    #[inline]
    pub fn likelihood(&self, true_excited: bool, observed_excited: bool) -> f64 {
        match (true_excited, observed_excited) {
            (false, false) => self.f_g,
            (false, true) => 1.0 - self.f_g,
            (true, true) => self.f_r,
            (true, false) => 1.0 - self.f_r,
        }
    }

    pub fn observe<R: Rng + ?Sized>(&self, config: &Configuration, rng: &mut R) -> Configuration {
        let bits: Vec<bool> = config
            .bits()
            .map(|b| {
                let keep = if b { self.f_r } else { self.f_g };
                if keep >= 1.0 || rng.random::<f64>() < keep {
                    b
                } else {
                    !b
                }
            })
            .collect();
        Configuration::from_bits(&bits).expect("same length as input")
    }
}

/// Passes every shot through the channel.
pub fn apply_channel<R: Rng + ?Sized>(shots: &ShotSet, model: &DetectionModel, rng: &mut R) -> ShotSet {
    let observed = shots.shots().iter().map(|c| model.observe(c, rng)).collect();
    let mut out = ShotSet::new(shots.n_atoms(), observed).expect("lengths preserved");
    out.metadata = shots.metadata.clone();
    out
}

/// Wall counts allowed by parity: `D ≡ N − 1 (mod 2)`.
pub fn allowed_counts(n_atoms: usize) -> Vec<usize> {
    (0..=n_atoms + 1).filter(|d| d % 2 == (n_atoms + 1) % 2).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ResponseMethod {
    ExactEnumeration,
    MonteCarlo { samples: usize, seed: u64 },
}

/// `m[(k, l)] = p(observed count = rows[k] | true count = columns[l])`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResponseMatrix {
    pub n_atoms: usize,
    pub rows: Vec<usize>,
    pub columns: Vec<usize>,
    pub m: DMatrix<f64>,
    pub method: ResponseMethod,
}

impl ResponseMatrix {
    /// Observed distribution (over `rows`) produced by a parent over `columns`.
    pub fn forward(&self, parent: &[f64]) -> Vec<f64> {
        (&self.m * DVector::from_column_slice(parent)).iter().copied().collect()
    }

    /// Embeds a parent over `columns` into a full wall-count distribution.
    pub fn parent_distribution(&self, parent: &[f64]) -> Result<DomainWallDistribution> {
        let mut p = vec![0.0; self.n_atoms + 2];
        for (&l, &x) in self.columns.iter().zip(parent) {
            p[l] = x;
        }
        DomainWallDistribution::new(self.n_atoms, p, None)
    }

    /// Restricts a full wall-count distribution to `rows`.
    pub fn observed_vector(&self, d: &DomainWallDistribution) -> Result<Vec<f64>> {
        if d.n_atoms != self.n_atoms {
            return Err(Error::Shape(format!("distribution for {} atoms, matrix for {}", d.n_atoms, self.n_atoms)));
        }
        Ok(self.rows.iter().map(|&k| d.probabilities[k]).collect())
    }
}

// counts[i][b][run-1][w]: completions of sites i+1.. given site i holds bit b
// in a run of length `run`, producing exactly w further walls (incl. the far edge)
struct WallCounter {
    n: usize,
    table: Vec<[[Vec<u128>; 2]; 2]>,
}

impl WallCounter {
    fn new(n: usize) -> Self {
        let w = n + 2;
        let mut table: Vec<[[Vec<u128>; 2]; 2]> = (0..n)
            .map(|_| [[vec![0; w], vec![0; w]], [vec![0; w], vec![0; w]]])
            .collect();
        for b in 0..2 {
            for run in 0..2 {
                table[n - 1][b][run][(b == 0) as usize] = 1;
            }
        }
        for i in (0..n - 1).rev() {
            for b in 0..2 {
                for run in 0..2 {
                    let mut row = vec![0u128; w];
                    for nb in 0..2 {
                        let same = nb == b;
                        if same && run == 1 {
                            continue;
                        }
                        let nrun = if same { 1 } else { 0 };
                        let wall = same as usize;
                        for (k, slot) in row.iter_mut().enumerate().skip(wall) {
                            *slot += table[i + 1][nb][nrun][k - wall];
                        }
                    }
                    table[i][b][run] = row;
                }
            }
        }
        Self { n, table }
    }

    fn total(&self, walls: usize) -> u128 {
        (0..2)
            .map(|b| {
                let edge = (b == 0) as usize;
                if walls < edge {
                    0
                } else {
                    self.table[0][b][0][walls - edge]
                }
            })
            .sum()
    }

    /// Uniform draw among separated-wall configurations with `walls` walls.
    fn sample<R: Rng + ?Sized>(&self, walls: usize, rng: &mut R) -> Configuration {
        let pick = |w0: u128, w1: u128, rng: &mut R| -> usize {
            let total = w0 + w1;
            let u = rng.random_range(0..total);
            (u >= w0) as usize
        };
        let first = |b: usize| {
            let edge = (b == 0) as usize;
            if walls < edge {
                0
            } else {
                self.table[0][b][0][walls - edge]
            }
        };
        let mut b = pick(first(0), first(1), rng);
        let mut run = 0;
        let mut left = walls - (b == 0) as usize;
        let mut bits = vec![b == 1];
        for i in 0..self.n - 1 {
            let weight = |nb: usize| -> u128 {
                let same = nb == b;
                if same && run == 1 {
                    return 0;
                }
                let wall = same as usize;
                if left < wall {
                    0
                } else {
                    self.table[i + 1][nb][same as usize][left - wall]
                }
            };
            let nb = pick(weight(0), weight(1), rng);
            let same = nb == b;
            left -= same as usize;
            run = same as usize;
            b = nb;
            bits.push(b == 1);
        }
        Configuration::from_bits(&bits).expect("length n")
    }
}

fn has_triple(word: u64, n: usize) -> bool {
    if n < 3 {
        return false;
    }
    let mask = (1u64 << (n - 2)) - 1;
    let eq1 = !(word ^ (word >> 1));
    let eq2 = !((word >> 1) ^ (word >> 2));
    (eq1 & eq2 & mask) != 0
}

/// Exact observed-count distribution for one true configuration.
fn observed_distribution(config: &Configuration, model: &DetectionModel) -> Vec<f64> {
    let n = config.len();
    let w = n + 2;
    // p[o][k]: last observed bit o, k walls so far
    let mut p = [vec![0.0; w], vec![0.0; w]];
    let t0 = config.get(0);
    for o in 0..2 {
        p[o][(o == 0) as usize] += model.likelihood(t0, o == 1);
    }
    for i in 1..n {
        let t = config.get(i);
        let mut q = [vec![0.0; w], vec![0.0; w]];
        for prev in 0..2 {
            for k in 0..w {
                let x = p[prev][k];
                if x == 0.0 {
                    continue;
                }
                for o in 0..2 {
                    let wall = (o == prev) as usize;
                    q[o][k + wall] += x * model.likelihood(t, o == 1);
                }
            }
        }
        p = q;
    }
    let mut out = vec![0.0; w];
    for o in 0..2 {
        for k in 0..w {
            let kk = k + (o == 0) as usize;
            if kk < w {
                out[kk] += p[o][k];
            }
        }
    }
    out
}

/// Builds the response matrix for `n_atoms`. With `columns = None` every
/// realizable true count is used.
pub fn build_response_matrix(
    n_atoms: usize,
    model: &DetectionModel,
    method: ResponseMethod,
    columns: Option<&[usize]>,
) -> Result<ResponseMatrix> {
    if n_atoms == 0 || n_atoms > 63 {
        return Err(Error::Invalid(format!("response matrix needs 1..=63 atoms, got {n_atoms}")));
    }
    let counter = WallCounter::new(n_atoms);
    let rows = allowed_counts(n_atoms);
    let columns: Vec<usize> = match columns {
        Some(c) => {
            for &l in c {
                if l > n_atoms + 1 || counter.total(l) == 0 {
                    return Err(Error::Structural { n_atoms, walls: l });
                }
            }
            c.to_vec()
        }
        None => rows.iter().copied().filter(|&l| counter.total(l) > 0).collect(),
    };
    let row_of = |k: usize| rows.iter().position(|&r| r == k);
    let mut m = DMatrix::zeros(rows.len(), columns.len());
    match method {
        ResponseMethod::ExactEnumeration => {
            if n_atoms > EXACT_RESPONSE_CAP {
                return Err(Error::Resource {
                    what: "exact response enumeration chain length".into(),
                    requested: n_atoms,
                    cap: EXACT_RESPONSE_CAP,
                });
            }
            let mut sums = vec![vec![0.0; n_atoms + 2]; n_atoms + 2];
            let mut members = vec![0usize; n_atoms + 2];
            for w in 0..1u64 << n_atoms {
                if has_triple(w, n_atoms) {
                    continue;
                }
                let c = Configuration::from_word(w, n_atoms)?;
                let l = count_domain_walls(&c);
                members[l] += 1;
                for (s, x) in sums[l].iter_mut().zip(observed_distribution(&c, model)) {
                    *s += x;
                }
            }
            for (j, &l) in columns.iter().enumerate() {
                for (k, &x) in sums[l].iter().enumerate() {
                    if x != 0.0 {
                        let r = row_of(k).expect("parity preserved by the channel");
                        m[(r, j)] = x / members[l] as f64;
                    }
                }
            }
        }
        ResponseMethod::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::Invalid("Monte Carlo response needs at least one sample".into()));
            }
            let tree = SeedTree::new(seed);
            let cols: Vec<Vec<usize>> = columns
                .par_iter()
                .map(|&l| {
                    let mut rng = tree.child("response-column", l as u64).stream(crate::seeding::RESPONSE);
                    let mut hist = vec![0usize; n_atoms + 2];
                    for _ in 0..samples {
                        let c = counter.sample(l, &mut rng);
                        hist[count_domain_walls(&model.observe(&c, &mut rng))] += 1;
                    }
                    hist
                })
                .collect();
            for (j, hist) in cols.iter().enumerate() {
                for (k, &h) in hist.iter().enumerate() {
                    if h > 0 {
                        let r = row_of(k).expect("parity preserved by the channel");
                        m[(r, j)] = h as f64 / samples as f64;
                    }
                }
            }
        }
    }
    Ok(ResponseMatrix { n_atoms, rows, columns, m, method })
}

/// Per-bin 68% half-widths of multinomially resampled frequencies.
pub fn bootstrap_sigma<R: Rng + ?Sized>(observed: &[f64], n_shots: usize, n_resamples: usize, rng: &mut R) -> Result<Vec<f64>> {
    if n_shots == 0 {
        return Err(Error::Invalid("bootstrap needs n_shots >= 1".into()));
    }
    if n_resamples < 2 {
        return Err(Error::Invalid("bootstrap needs at least two resamples".into()));
    }
    let total: f64 = observed.iter().sum();
    let probs: Vec<f64> = observed.iter().map(|p| p / total).collect();
    let mut draws = vec![Vec::with_capacity(n_resamples); probs.len()];
    for _ in 0..n_resamples {
        for (d, c) in draws.iter_mut().zip(multinomial(rng, n_shots as u64, &probs)) {
            d.push(c as f64 / n_shots as f64);
        }
    }
    Ok(draws.iter_mut().map(|d| 0.5 * (quantile(d, 0.84) - quantile(d, 0.16))).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructOptions {
    pub n_restarts: usize,
    /// Lower bound applied to every σ, typically `1/(2·n_shots)`.
    pub sigma_floor: f64,
    pub max_iterations: usize,
    /// TV distance within which restarts count as agreeing.
    pub agreement: f64,
}

impl ReconstructOptions {
    pub fn for_shots(n_shots: usize) -> Self {
        Self { n_restarts: 8, sigma_floor: 0.5 / n_shots.max(1) as f64, max_iterations: 20_000, agreement: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub parent: DomainWallDistribution,
    pub cost: f64,
    pub restarts_agree: bool,
    /// Parent vectors (over response columns) from every restart.
    pub solutions: Vec<Vec<f64>>,
    pub costs: Vec<f64>,
}

/// Minimizes `Σ_k ((W_o − M p)_k / σ_k)²` over the probability simplex.
pub fn reconstruct_parent<R: Rng + ?Sized>(
    observed: &[f64],
    sigma: &[f64],
    response: &ResponseMatrix,
    opts: ReconstructOptions,
    rng: &mut R,
) -> Result<Reconstruction> {
    let (rows, cols) = response.m.shape();
    if observed.len() != rows || sigma.len() != rows {
        return Err(Error::Shape(format!(
            "observed/σ have {}/{} bins, response has {rows} rows",
            observed.len(),
            sigma.len()
        )));
    }
    if opts.n_restarts == 0 {
        return Err(Error::Invalid("need at least one restart".into()));
    }
    let floor = opts.sigma_floor.max(f64::MIN_POSITIVE);
    let w: Vec<f64> = sigma.iter().map(|&s| 1.0 / s.max(floor)).collect();
    let a = DMatrix::from_fn(rows, cols, |k, l| response.m[(k, l)] * w[k]);
    let b = DVector::from_iterator(rows, observed.iter().zip(&w).map(|(o, wk)| o * wk));
    let gram = a.transpose() * &a;
    let atb = a.transpose() * &b;
    let btb = b.dot(&b);
    let cost = |p: &DVector<f64>| (p.dot(&(&gram * p)) - 2.0 * p.dot(&atb) + btb).max(0.0);
    let lipschitz = 2.0 * gram.clone().symmetric_eigen().eigenvalues.max().max(1e-300);

    let mut solutions = Vec::with_capacity(opts.n_restarts);
    let mut costs = Vec::with_capacity(opts.n_restarts);
    let dirichlet = Gamma::new(1.0, 1.0).expect("valid shape");
    for _ in 0..opts.n_restarts {
        let start: Vec<f64> = (0..cols).map(|_| dirichlet.sample(rng)).collect();
        let s: f64 = start.iter().sum();
        let mut p = DVector::from_iterator(cols, start.iter().map(|x| x / s));
        let mut y = p.clone();
        let mut t = 1.0f64;
        let mut prev_cost = cost(&p);
        for _ in 0..opts.max_iterations {
            let grad = 2.0 * (&gram * &y - &atb);
            let next = project_simplex(&(&y - grad / lipschitz));
            let c = cost(&next);
            if c > prev_cost {
                // adaptive restart of the momentum
                t = 1.0;
                y = p.clone();
                continue;
            }
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            y = &next + (&next - &p) * ((t - 1.0) / t_next);
            let step = (&next - &p).abs().sum();
            p = next;
            prev_cost = c;
            t = t_next;
            if step < 1e-15 {
                break;
            }
        }
        let p = polish(&gram, &atb, p, &cost);
        costs.push(cost(&p));
        solutions.push(p.iter().copied().collect::<Vec<f64>>());
    }
    let best = (0..solutions.len())
        .min_by(|&i, &j| costs[i].total_cmp(&costs[j]))
        .expect("at least one restart");
    let tv = |x: &[f64], y: &[f64]| 0.5 * x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum::<f64>();
    let restarts_agree = solutions.iter().all(|s| tv(s, &solutions[best]) <= opts.agreement);
    Ok(Reconstruction {
        parent: response.parent_distribution(&renormalized(&solutions[best]))?,
        cost: costs[best],
        restarts_agree,
        solutions,
        costs,
    })
}

fn renormalized(p: &[f64]) -> Vec<f64> {
    let s: f64 = p.iter().map(|x| x.max(0.0)).sum();
    p.iter().map(|x| x.max(0.0) / s).collect()
}

/// Euclidean projection onto `{p ≥ 0, Σp = 1}`.
pub fn project_simplex(v: &DVector<f64>) -> DVector<f64> {
    let mut u: Vec<f64> = v.iter().copied().collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.map(|x| (x - theta).max(0.0))
}

// Solves the equality-constrained problem on the current support and keeps
// the result when it is feasible and no worse.
fn polish(gram: &DMatrix<f64>, atb: &DVector<f64>, p: DVector<f64>, cost: &dyn Fn(&DVector<f64>) -> f64) -> DVector<f64> {
    let support: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 1e-10).collect();
    let s = support.len();
    if s == 0 {
        return p;
    }
    let mut kkt = DMatrix::zeros(s + 1, s + 1);
    let mut rhs = DVector::zeros(s + 1);
    for (a, &i) in support.iter().enumerate() {
        for (b, &j) in support.iter().enumerate() {
            kkt[(a, b)] = 2.0 * gram[(i, j)];
        }
        kkt[(a, s)] = 1.0;
        kkt[(s, a)] = 1.0;
        rhs[a] = 2.0 * atb[i];
    }
    rhs[s] = 1.0;
    let Some(sol) = kkt.lu().solve(&rhs) else {
        return p;
    };
    if sol.iter().take(s).any(|&x| !(x >= 0.0)) {
        return p;
    }
    let mut q = DVector::zeros(p.len());
    for (a, &i) in support.iter().enumerate() {
        q[i] = sol[a];
    }
    if cost(&q) <= cost(&p) {
        q
    } else {
        p
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundStateCorrection {
    pub value: f64,
    /// Set when the raw ratio exceeded 1 and was clipped.
    pub clipped: bool,
}

/// `p_exp / (f_r^{(N+1)/2} f_g^{(N−1)/2})` for the Z₂ crystal of an odd chain.
pub fn correct_ground_state_prob(p_exp: f64, n_atoms: usize, model: &DetectionModel) -> Result<GroundStateCorrection> {
    if n_atoms % 2 == 0 {
        return Err(Error::Invalid(format!("ground-state correction assumes odd N, got {n_atoms}")));
    }
    if !(0.0..=1.0).contains(&p_exp) {
        return Err(Error::Invalid(format!("probability {p_exp} outside [0, 1]")));
    }
    let n_r = (n_atoms as i32 + 1) / 2;
    let n_g = (n_atoms as i32 - 1) / 2;
    let raw = p_exp / (model.f_r.powi(n_r) * model.f_g.powi(n_g));
    Ok(GroundStateCorrection { value: raw.min(1.0), clipped: raw > 1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lab_channel() -> DetectionModel {
        DetectionModel::new(0.99, 0.93).unwrap()
    }

    #[test]
    fn fidelity_bounds() {
        assert!(DetectionModel::new(0.5, 0.9).is_err());
        assert!(DetectionModel::new(0.9, 1.01).is_err());
        assert!(DetectionModel::new(1.0, 1.0).is_ok());
    }

    #[test]
    fn perfect_channel_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let shots = ShotSet::new(5, vec!["10101".parse().unwrap(), "00100".parse().unwrap()]).unwrap();
        assert_eq!(apply_channel(&shots, &DetectionModel::perfect(), &mut rng), shots);
    }

    #[test]
    fn flip_rates_are_binomial() {
        let m = DetectionModel::new(0.9, 0.8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials = 1_000_000usize;
        let g = Configuration::from_word(0, 1).unwrap();
        let r = Configuration::from_word(1, 1).unwrap();
        let fg = (0..trials).filter(|_| m.observe(&g, &mut rng).get(0)).count() as f64 / trials as f64;
        let fr = (0..trials).filter(|_| !m.observe(&r, &mut rng).get(0)).count() as f64 / trials as f64;
        assert!((fg - 0.1).abs() < 5.0 * (0.09 / trials as f64).sqrt());
        assert!((fr - 0.2).abs() < 5.0 * (0.16 / trials as f64).sqrt());
    }

    #[test]
    fn counter_matches_enumeration() {
        for n in 1..=12 {
            let c = WallCounter::new(n);
            for l in 0..=n + 1 {
                let brute = (0..1u64 << n)
                    .filter(|&w| !has_triple(w, n))
                    .filter(|&w| count_domain_walls(&Configuration::from_word(w, n).unwrap()) == l)
                    .count() as u128;
                assert_eq!(c.total(l), brute, "n={n} l={l}");
            }
        }
    }

    #[test]
    fn counter_sampling_is_uniform() {
        let n = 7;
        let c = WallCounter::new(n);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let total = c.total(4) as usize;
        let draws = 20_000 * total;
        let mut hist = std::collections::HashMap::new();
        for _ in 0..draws {
            let s = c.sample(4, &mut rng);
            assert_eq!(count_domain_walls(&s), 4);
            assert!(!has_triple(s.word(), n));
            *hist.entry(s).or_insert(0usize) += 1;
        }
        assert_eq!(hist.len(), total);
        let p = 1.0 / total as f64;
        let sd = (p * (1.0 - p) / draws as f64).sqrt();
        for &k in hist.values() {
            assert!((k as f64 / draws as f64 - p).abs() < 5.0 * sd);
        }
    }

    #[test]
    fn identity_channel_response_is_identity() {
        let r = build_response_matrix(9, &DetectionModel::perfect(), ResponseMethod::ExactEnumeration, None).unwrap();
        assert_eq!(r.columns, vec![0, 2, 4, 6]);
        for (j, &l) in r.columns.iter().enumerate() {
            for (i, &k) in r.rows.iter().enumerate() {
                assert_eq!(r.m[(i, j)], (k == l) as u8 as f64);
            }
        }
    }

    #[test]
    fn exact_columns_are_distributions() {
        let r = build_response_matrix(11, &lab_channel(), ResponseMethod::ExactEnumeration, None).unwrap();
        for j in 0..r.columns.len() {
            assert!((r.m.column(j).sum() - 1.0).abs() < 1e-12);
        }
        // near-perfect detection: mass concentrated on l and l ± 2
        let r = build_response_matrix(11, &DetectionModel::new(0.999, 0.995).unwrap(), ResponseMethod::ExactEnumeration, None).unwrap();
        for (j, &l) in r.columns.iter().enumerate() {
            let near: f64 = r.rows.iter().enumerate().filter(|(_, &k)| k + 2 >= l && k <= l + 2).map(|(i, _)| r.m[(i, j)]).sum();
            assert!(near > 0.999, "column {l}: {near}");
        }
    }

    #[test]
    fn monte_carlo_agrees_with_exact() {
        let exact = build_response_matrix(9, &lab_channel(), ResponseMethod::ExactEnumeration, None).unwrap();
        let samples = 200_000;
        let mc = build_response_matrix(9, &lab_channel(), ResponseMethod::MonteCarlo { samples, seed: 17 }, None).unwrap();
        assert_eq!(exact.columns, mc.columns);
        for (e, m) in exact.m.iter().zip(mc.m.iter()) {
            let sd = (e * (1.0 - e) / samples as f64).sqrt().max(1.0 / samples as f64);
            assert!((e - m).abs() < 5.0 * sd, "{e} vs {m}");
        }
    }

    #[test]
    fn unreachable_column_is_structural_error() {
        // N = 3 cannot hold four separated walls
        assert!(matches!(
            build_response_matrix(3, &lab_channel(), ResponseMethod::ExactEnumeration, Some(&[4])),
            Err(Error::Structural { n_atoms: 3, walls: 4 })
        ));
    }

    #[test]
    fn bootstrap_widths() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = bootstrap_sigma(&[0.5, 0.5], 10_000, 2_000, &mut rng).unwrap();
        for x in &s {
            assert!((x - 0.005).abs() < 0.0008, "{x}");
        }
        let point = bootstrap_sigma(&[0.0, 1.0, 0.0], 10_000, 200, &mut rng).unwrap();
        assert_eq!(point, vec![0.0, 0.0, 0.0]);
        let wide = bootstrap_sigma(&[0.5, 0.5], 2_500, 2_000, &mut rng).unwrap();
        assert!((wide[0] / s[0] - 2.0).abs() < 0.3);
    }

    #[test]
    fn identity_reconstruction_returns_observation() {
        let r = build_response_matrix(7, &DetectionModel::perfect(), ResponseMethod::ExactEnumeration, None).unwrap();
        let obs = vec![0.5, 0.3, 0.2, 0.0, 0.0];
        let sigma = vec![0.01; 5];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rec = reconstruct_parent(&obs, &sigma, &r, ReconstructOptions::for_shots(10_000), &mut rng).unwrap();
        let got = r.observed_vector(&rec.parent).unwrap();
        for (a, b) in got.iter().zip(&obs) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(rec.restarts_agree);
    }

    #[test]
    fn representable_observation_is_recovered() {
        let r = build_response_matrix(11, &lab_channel(), ResponseMethod::ExactEnumeration, None).unwrap();
        let mut parent = vec![0.0; r.columns.len()];
        parent[0] = 0.4;
        parent[1] = 0.35;
        parent[2] = 0.25;
        let obs = r.forward(&parent);
        let sigma = vec![0.003; obs.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rec = reconstruct_parent(&obs, &sigma, &r, ReconstructOptions::for_shots(20_000), &mut rng).unwrap();
        let truth = r.parent_distribution(&parent).unwrap();
        assert!(rec.parent.total_variation(&truth) < 1e-6, "{}", rec.parent.total_variation(&truth));
        assert!(rec.restarts_agree);
    }

    #[test]
    fn ground_state_correction_values() {
        let c = correct_ground_state_prob(0.54, 7, &DetectionModel::new(0.98, 0.93).unwrap()).unwrap();
        assert!((c.value - 0.77).abs() < 0.005);
        let c = correct_ground_state_prob(0.0011, 51, &lab_channel()).unwrap();
        assert!((c.value - 0.009).abs() < 0.0005);
        assert_eq!(correct_ground_state_prob(0.3, 9, &DetectionModel::perfect()).unwrap().value, 0.3);
        let clip = correct_ground_state_prob(0.99, 51, &lab_channel()).unwrap();
        assert!(clip.clipped && clip.value == 1.0);
        assert!(correct_ground_state_prob(0.5, 8, &lab_channel()).is_err());
    }

    #[test]
    fn forward_map_preserves_parity() {
        let r = build_response_matrix(9, &lab_channel(), ResponseMethod::ExactEnumeration, None).unwrap();
        assert!(r.rows.iter().all(|k| k % 2 == 0));
        let parent = vec![1.0 / r.columns.len() as f64; r.columns.len()];
        assert!((r.forward(&parent).iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
