//! Sparse action of the Rydberg Hamiltonian on a bit-packed basis.
//!
//! `H = Σ (Ω/2) σx − Δ Σ n + Σ_{i<j} V_ij n_i n_j` in the full space. The
//! constrained modes act on the blockade-free subspace, where the drive term
//! carries projectors onto |g⟩ for both neighbours.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{bit, blockade_free, BasisSet, Configuration};
use crate::error::{Error, Result};
use crate::model::AtomArray;

/// Which interaction terms are kept and which basis they act on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianMode {
    /// Every pair interaction, full 2^N space.
    Full,
    /// PXP drive only; no diagonal interaction terms.
    ConstrainedNn,
    /// PXP drive plus all pair interactions beyond nearest neighbours.
    ConstrainedWithTail,
}

impl HamiltonianMode {
    pub fn is_constrained(self) -> bool {
        !matches!(self, HamiltonianMode::Full)
    }
}

#[derive(Clone, Debug)]
pub struct HamiltonianSpec {
    pub array: AtomArray,
    pub mode: HamiltonianMode,
}

impl HamiltonianSpec {
    pub fn new(array: AtomArray, mode: HamiltonianMode) -> Self {
        Self { array, mode }
    }

    pub fn n_atoms(&self) -> usize {
        self.array.n_atoms()
    }

    /// Basis matching the mode.
    pub fn basis(&self) -> Result<BasisSet> {
        BasisSet::enumerate(self.n_atoms(), self.mode.is_constrained())
    }

    /// Classical interaction energy of a configuration under this mode.
    pub fn interaction_energy(&self, word: u64) -> f64 {
        let n = self.n_atoms();
        let min_gap = match self.mode {
            HamiltonianMode::Full => 1,
            HamiltonianMode::ConstrainedNn => return 0.0,
            HamiltonianMode::ConstrainedWithTail => 2,
        };
        let mut e = 0.0;
        for i in 0..n {
            if !bit(word, n, i) {
                continue;
            }
            for j in i + min_gap..n {
                if bit(word, n, j) {
                    e += self.array.v(i, j);
                }
            }
        }
        e
    }
}

/// A Hamiltonian compiled against a concrete basis. The drive and detuning
/// enter only at application time, so one instance serves a whole schedule.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    spec: HamiltonianSpec,
    basis: Arc<BasisSet>,
    interaction: Vec<f64>,
    excitations: Vec<f64>,
    // constrained modes: CSR list of basis ordinals reachable by one σx
    flip_offsets: Vec<usize>,
    flip_targets: Vec<u32>,
}

impl Hamiltonian {
    pub fn new(spec: HamiltonianSpec) -> Result<Self> {
        let basis = Arc::new(spec.basis()?);
        Self::with_basis(spec, basis)
    }

    pub fn with_basis(spec: HamiltonianSpec, basis: Arc<BasisSet>) -> Result<Self> {
        if basis.n_atoms() != spec.n_atoms() {
            return Err(Error::Shape(format!(
                "basis has {} atoms, array has {}",
                basis.n_atoms(),
                spec.n_atoms()
            )));
        }
        if basis.is_constrained() != spec.mode.is_constrained() {
            return Err(Error::Shape(format!(
                "{:?} mode needs a {} basis",
                spec.mode,
                if spec.mode.is_constrained() { "constrained" } else { "full" }
            )));
        }
        let n = spec.n_atoms();
        let words = basis.words();
        let interaction: Vec<f64> = words.par_iter().map(|&w| spec.interaction_energy(w)).collect();
        let excitations = words.iter().map(|w| w.count_ones() as f64).collect();
        let (mut flip_offsets, mut flip_targets) = (Vec::new(), Vec::new());
        if basis.is_constrained() {
            flip_offsets.reserve(words.len() + 1);
            flip_offsets.push(0);
            for &w in words {
                for i in 0..n {
                    let target = w ^ (1u64 << (n - 1 - i));
                    if blockade_free(target) {
                        let k = basis.index_of_word(target).expect("blockade-free word is in basis");
                        flip_targets.push(k as u32);
                    }
                }
                flip_offsets.push(flip_targets.len());
            }
        }
        Ok(Self { spec, basis, interaction, excitations, flip_offsets, flip_targets })
    }

    pub fn spec(&self) -> &HamiltonianSpec {
        &self.spec
    }

    pub fn basis(&self) -> &Arc<BasisSet> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Diagonal entry `k` at detuning `delta`.
    #[inline]
    pub fn diagonal(&self, k: usize, delta: f64) -> f64 {
        self.interaction[k] - delta * self.excitations[k]
    }

    /// `out = H(Ω, Δ) · psi`. Each row is a gather in fixed order, so the
    /// result does not depend on the thread count.
    pub fn apply_into(&self, omega: f64, delta: f64, psi: &[Complex64], out: &mut [Complex64]) {
        let half = 0.5 * omega;
        let n = self.spec.n_atoms();
        if self.basis.is_constrained() {
            out.par_iter_mut().enumerate().with_min_len(1024).for_each(|(k, o)| {
                let mut acc = Complex64::new(0.0, 0.0);
                for &j in &self.flip_targets[self.flip_offsets[k]..self.flip_offsets[k + 1]] {
                    acc += psi[j as usize];
                }
                *o = psi[k] * self.diagonal(k, delta) + acc * half;
            });
        } else {
            out.par_iter_mut().enumerate().with_min_len(1024).for_each(|(k, o)| {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..n {
                    acc += psi[k ^ (1usize << (n - 1 - i))];
                }
                *o = psi[k] * self.diagonal(k, delta) + acc * half;
            });
        }
    }

    pub fn apply(&self, omega: f64, delta: f64, state: &StateVector) -> Result<Vec<Complex64>> {
        self.check_state(state)?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        self.apply_into(omega, delta, &state.amplitudes, &mut out);
        Ok(out)
    }

    /// `⟨ψ|H|ψ⟩` (real for Hermitian H).
    pub fn expectation(&self, omega: f64, delta: f64, state: &StateVector) -> Result<f64> {
        let h = self.apply(omega, delta, state)?;
        Ok(state.amplitudes.iter().zip(&h).map(|(a, b)| (a.conj() * b).re).sum())
    }

    /// Dense real-symmetric matrix, for small-N cross-checks.
    pub fn to_dense(&self, omega: f64, delta: f64) -> Result<DMatrix<f64>> {
        let d = self.dim();
        if d > 1 << 13 {
            return Err(Error::Resource { what: "dense Hamiltonian dimension".into(), requested: d, cap: 1 << 13 });
        }
        let mut m = DMatrix::zeros(d, d);
        let mut e = vec![Complex64::new(0.0, 0.0); d];
        let mut col = vec![Complex64::new(0.0, 0.0); d];
        for j in 0..d {
            e[j] = Complex64::new(1.0, 0.0);
            self.apply_into(omega, delta, &e, &mut col);
            for i in 0..d {
                m[(i, j)] = col[i].re;
            }
            e[j] = Complex64::new(0.0, 0.0);
        }
        Ok(m)
    }

    /// Upper bound on the spectral radius (Gershgorin).
    pub fn norm_bound(&self, omega: f64, delta: f64) -> f64 {
        let n = self.spec.n_atoms() as f64;
        (0..self.dim())
            .map(|k| self.diagonal(k, delta).abs())
            .fold(0.0, f64::max)
            + 0.5 * omega.abs() * n
    }

    fn check_state(&self, state: &StateVector) -> Result<()> {
        if state.basis.n_atoms() != self.basis.n_atoms()
            || state.basis.is_constrained() != self.basis.is_constrained()
            || state.amplitudes.len() != self.dim()
        {
            return Err(Error::Shape("state vector does not live in this Hamiltonian's basis".into()));
        }
        Ok(())
    }
}

/// Complex amplitudes over a basis, kept normalized.
#[derive(Clone, Debug)]
pub struct StateVector {
    basis: Arc<BasisSet>,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn from_configuration(basis: Arc<BasisSet>, config: &Configuration) -> Result<Self> {
        let k = basis.index_of(config)?.ok_or_else(|| {
            Error::Invalid(format!("configuration {config} is not in the {} basis", basis_label(&basis)))
        })?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); basis.len()];
        amplitudes[k] = Complex64::new(1.0, 0.0);
        Ok(Self { basis, amplitudes })
    }

    /// Wraps and normalizes `amplitudes`.
    pub fn from_amplitudes(basis: Arc<BasisSet>, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != basis.len() {
            return Err(Error::Shape(format!(
                "{} amplitudes for a basis of {} states",
                amplitudes.len(),
                basis.len()
            )));
        }
        let norm = l2(&amplitudes);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Invalid("state vector has zero or non-finite norm".into()));
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Ok(Self { basis, amplitudes })
    }

    pub fn basis(&self) -> &Arc<BasisSet> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut Vec<Complex64> {
        &mut self.amplitudes
    }

    pub fn n_atoms(&self) -> usize {
        self.basis.n_atoms()
    }

    pub fn norm(&self) -> f64 {
        l2(&self.amplitudes)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn probability_of(&self, config: &Configuration) -> Result<f64> {
        Ok(self.basis.index_of(config)?.map_or(0.0, |k| self.amplitudes[k].norm_sqr()))
    }

    pub fn overlap(&self, other: &StateVector) -> Result<Complex64> {
        if self.amplitudes.len() != other.amplitudes.len() {
            return Err(Error::Shape("overlap of states in different bases".into()));
        }
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    /// `⟨n_i⟩` for every site.
    pub fn site_densities(&self) -> Vec<f64> {
        let n = self.n_atoms();
        let mut out = vec![0.0; n];
        for (w, a) in self.basis.words().iter().zip(&self.amplitudes) {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                if bit(*w, n, i) {
                    *o += p;
                }
            }
        }
        out
    }

    /// Expectation of any function of the configuration.
    pub fn expect_diagonal(&self, f: impl Fn(u64) -> f64) -> f64 {
        self.basis
            .words()
            .iter()
            .zip(&self.amplitudes)
            .map(|(&w, a)| a.norm_sqr() * f(w))
            .sum()
    }

    /// Von Neumann entropy (nats) of sites `0..cut`.
    pub fn entanglement_entropy(&self, cut: usize) -> Result<f64> {
        let n = self.n_atoms();
        if cut == 0 || cut >= n {
            return Err(Error::Invalid(format!("cut {cut} outside 1..{n}")));
        }
        let constrained = self.basis.is_constrained();
        let left = BasisSet::enumerate_with_cap(cut, constrained, 64)?;
        let right = BasisSet::enumerate_with_cap(n - cut, constrained, 64)?;
        let mask = (1u64 << (n - cut)) - 1;
        let mut m = faer::Mat::<Complex64>::zeros(left.len(), right.len());
        for (&w, a) in self.basis.words().iter().zip(&self.amplitudes) {
            let l = left.index_of_word(w >> (n - cut)).expect("prefix of a basis word");
            let r = right.index_of_word(w & mask).expect("suffix of a basis word");
            m[(l, r)] = *a;
        }
        let s = m
            .singular_values()
            .map_err(|e| Error::Numeric(format!("singular value decomposition failed: {e:?}")))?;
        Ok(entropy_from_singular_values(&s))
    }
}

pub(crate) fn entropy_from_singular_values(s: &[f64]) -> f64 {
    let total: f64 = s.iter().map(|x| x * x).sum();
    s.iter()
        .map(|x| x * x / total)
        .filter(|&p| p > 1e-300)
        .map(|p| -p * p.ln())
        .sum()
}

fn basis_label(b: &BasisSet) -> &'static str {
    if b.is_constrained() {
        "constrained"
    } else {
        "full"
    }
}

pub(crate) fn l2(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Dense `exp(−i H t)` applied to `psi` via the real-symmetric eigenbasis.
pub fn dense_propagate(h: &DMatrix<f64>, psi: &[Complex64], t: f64) -> Vec<Complex64> {
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let re = DVector::from_iterator(psi.len(), psi.iter().map(|a| a.re));
    let im = DVector::from_iterator(psi.len(), psi.iter().map(|a| a.im));
    let (cr, ci) = (v.transpose() * re, v.transpose() * im);
    let mut out_re = DVector::zeros(psi.len());
    let mut out_im = DVector::zeros(psi.len());
    for k in 0..psi.len() {
        let phase = Complex64::from_polar(1.0, -eig.eigenvalues[k] * t);
        let c = Complex64::new(cr[k], ci[k]) * phase;
        out_re += v.column(k) * c.re;
        out_im += v.column(k) * c.im;
    }
    (0..psi.len()).map(|k| Complex64::new(out_re[k], out_im[k])).collect()
}
