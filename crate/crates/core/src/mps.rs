//! Matrix product states and TEBD for long chains.
//!
//! Interactions are kept up to next-nearest neighbours. One time step is a
//! symmetric second-order sweep: a forward pass of half-step gates in the
//! order
//!
//! `NN(0,1), NNN(0,2), NN(1,2), NNN(1,3), …, NN(N−2,N−1)`
//!
//! followed by the same gates in reverse order (or the reverse pass first, on
//! alternate steps). Each NNN gate is sandwiched between swaps so every gate
//! acts on two adjacent tensors; consecutive gates on one bond are fused. On-site drive and detuning terms are shared
//! equally among the NN bonds that contain the site.
//!
//! Between steps the orthogonality centre sits on site 0 and every other
//! tensor is right-canonical. Entropies are in nats.

use faer::Mat;
use nalgebra::Matrix4;
use num_complex::Complex64;
use rand::Rng;

use crate::basis::{BasisSet, Configuration};
use crate::detection::DetectionModel;
use crate::error::{Error, Result};
use crate::exact::step_plan;
use crate::hamiltonian::{entropy_from_singular_values, StateVector};
use crate::model::{AtomArray, PulseSchedule};
use crate::observables::{columns_for, wall_slots, Observable, ShotSource};
use crate::trajectory::Trajectory;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
// relative singular-value cutoff for exact (non-truncating) re-gauging
const GAUGE_CUTOFF: f64 = 1e-14;

/// One site tensor `A[l, s, r]`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
struct Site {
    dl: usize,
    dr: usize,
    data: Vec<Complex64>,
}

impl Site {
    #[inline]
    fn at(&self, l: usize, s: usize, r: usize) -> Complex64 {
        self.data[(l * 2 + s) * self.dr + r]
    }

    /// `(dl·2) × dr` view.
    fn left_matrix(&self) -> Mat<Complex64> {
        Mat::from_fn(self.dl * 2, self.dr, |i, j| self.data[i * self.dr + j])
    }

    /// `dl × (2·dr)` view.
    fn right_matrix(&self) -> Mat<Complex64> {
        Mat::from_fn(self.dl, 2 * self.dr, |i, j| self.data[i * 2 * self.dr + j])
    }

    fn from_left_matrix(m: &Mat<Complex64>) -> Self {
        let (rows, dr) = (m.nrows(), m.ncols());
        let mut data = Vec::with_capacity(rows * dr);
        for i in 0..rows {
            for j in 0..dr {
                data.push(m[(i, j)]);
            }
        }
        Self { dl: rows / 2, dr, data }
    }

    fn from_right_matrix(m: &Mat<Complex64>) -> Self {
        let (dl, cols) = (m.nrows(), m.ncols());
        let mut data = Vec::with_capacity(dl * cols);
        for i in 0..dl {
            for j in 0..cols {
                data.push(m[(i, j)]);
            }
        }
        Self { dl, dr: cols / 2, data }
    }

    /// `A^s` as a `dl × dr` matrix.
    fn slice(&self, s: usize) -> Mat<Complex64> {
        Mat::from_fn(self.dl, self.dr, |l, r| self.at(l, s, r))
    }
}

/// A chain state with bounded bond dimension.
#[derive(Clone, Debug)]
pub struct MpsState {
    sites: Vec<Site>,
    center: usize,
}

/// Truncated singular value decomposition result.
struct Split {
    u: Mat<Complex64>,
    s: Vec<f64>,
    v_adj: Mat<Complex64>,
    discarded: f64,
}

fn svd_split(m: &Mat<Complex64>, d_max: usize, trunc_eps: f64) -> Result<Split> {
    let svd = m
        .thin_svd()
        .map_err(|e| Error::Numeric(format!("singular value decomposition failed: {e:?}")))?;
    let s_all: Vec<f64> = svd.S().column_vector().iter().map(|x| x.re).collect();
    let total: f64 = s_all.iter().map(|x| x * x).sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Numeric("two-site tensor has zero or non-finite norm".into()));
    }
    // smallest rank whose discarded weight stays below trunc_eps
    let mut keep = s_all.len();
    let mut tail = 0.0;
    while keep > 1 {
        let w = s_all[keep - 1] * s_all[keep - 1] / total;
        if tail + w > trunc_eps && s_all[keep - 1] > GAUGE_CUTOFF * s_all[0] {
            break;
        }
        tail += w;
        keep -= 1;
    }
    while keep > d_max {
        tail += s_all[keep - 1] * s_all[keep - 1] / total;
        keep -= 1;
    }
    let kept_norm = (s_all[..keep].iter().map(|x| x * x).sum::<f64>()).sqrt();
    let u = svd.U().subcols(0, keep).to_owned();
    let v = svd.V().subcols(0, keep);
    let v_adj = Mat::from_fn(keep, v.nrows(), |i, j| v[(j, i)].conj());
    Ok(Split { u, s: s_all[..keep].iter().map(|x| x / kept_norm).collect(), v_adj, discarded: tail })
}

fn axpy(dst: &mut Mat<Complex64>, src: &Mat<Complex64>, c: f64) {
    if c == 0.0 {
        return;
    }
    for j in 0..dst.ncols() {
        for i in 0..dst.nrows() {
            dst[(i, j)] += src[(i, j)] * c;
        }
    }
}

fn scale_rows(m: &mut Mat<Complex64>, s: &[f64]) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            m[(i, j)] *= s[i];
        }
    }
}

fn scale_cols(m: &mut Mat<Complex64>, s: &[f64]) {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            m[(i, j)] *= s[j];
        }
    }
}

impl MpsState {
    /// Bond-dimension-1 product state.
    pub fn from_product(config: &Configuration) -> Self {
        let sites = config
            .bits()
            .map(|b| {
                let mut data = vec![ZERO; 2];
                data[b as usize] = ONE;
                Site { dl: 1, dr: 1, data }
            })
            .collect();
        Self { sites, center: 0 }
    }

    /// Exact MPS of a state vector (small chains).
    pub fn from_state_vector(psi: &StateVector) -> Result<Self> {
        let n = psi.n_atoms();
        let mut full = vec![ZERO; 1usize << n];
        for (&w, a) in psi.basis().words().iter().zip(psi.amplitudes()) {
            full[w as usize] = *a;
        }
        let mut sites = Vec::with_capacity(n);
        let mut rest = Mat::from_fn(1, full.len(), |_, j| full[j]);
        for _ in 0..n - 1 {
            let dl = rest.nrows();
            let cols = rest.ncols() / 2;
            let m = Mat::from_fn(dl * 2, cols, |i, j| rest[(i / 2, (i % 2) * cols + j)]);
            let sp = svd_split(&m, usize::MAX, 0.0)?;
            let mut next = sp.v_adj;
            scale_rows(&mut next, &sp.s);
            sites.push(Site::from_left_matrix(&sp.u));
            rest = next;
        }
        sites.push(Site::from_right_matrix(&rest));
        let mut out = Self { sites, center: n - 1 };
        out.move_center(0)?;
        Ok(out)
    }

    pub fn n_atoms(&self) -> usize {
        self.sites.len()
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites.iter().take(self.sites.len() - 1).map(|s| s.dr).collect()
    }

    pub fn max_bond_dim(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn norm(&self) -> f64 {
        self.sites[self.center].data.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn normalize_center(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.sites[self.center].data.iter_mut().for_each(|a| *a /= n);
        }
    }

    /// Shifts the orthogonality centre with exact (untruncated) splits.
    pub fn move_center(&mut self, target: usize) -> Result<()> {
        if target >= self.n_atoms() {
            return Err(Error::Invalid(format!("centre {target} outside the chain")));
        }
        while self.center < target {
            let c = self.center;
            let sp = svd_split(&self.sites[c].left_matrix(), usize::MAX, 0.0)?;
            let mut carry = sp.v_adj;
            scale_rows(&mut carry, &sp.s);
            let next = &carry * self.sites[c + 1].right_matrix();
            self.sites[c] = Site::from_left_matrix(&sp.u);
            self.sites[c + 1] = Site::from_right_matrix(&next);
            self.center += 1;
        }
        while self.center > target {
            let c = self.center;
            let sp = svd_split(&self.sites[c].right_matrix(), usize::MAX, 0.0)?;
            let mut carry = sp.u;
            scale_cols(&mut carry, &sp.s);
            let prev = self.sites[c - 1].left_matrix() * &carry;
            self.sites[c] = Site::from_right_matrix(&sp.v_adj);
            self.sites[c - 1] = Site::from_left_matrix(&prev);
            self.center -= 1;
        }
        Ok(())
    }

    /// Schmidt values across the bond between sites `cut − 1` and `cut`.
    pub fn schmidt_values(&mut self, cut: usize) -> Result<Vec<f64>> {
        let n = self.n_atoms();
        if cut == 0 || cut >= n {
            return Err(Error::Invalid(format!("cut {cut} outside 1..{n}")));
        }
        self.move_center(cut - 1)?;
        let s = self.sites[cut - 1]
            .left_matrix()
            .singular_values()
            .map_err(|e| Error::Numeric(format!("singular value decomposition failed: {e:?}")))?;
        Ok(s)
    }

    /// Von Neumann entropy (nats) of sites `0..cut`.
    pub fn entanglement_entropy(&mut self, cut: usize) -> Result<f64> {
        Ok(entropy_from_singular_values(&self.schmidt_values(cut)?))
    }

    /// Applies a two-site gate `g[(s1 s2'), (s1 s2)]` on `(pos, pos+1)`,
    /// leaving the centre on `pos` (`center_right = false`) or `pos + 1`.
    fn apply_two_site(
        &mut self,
        pos: usize,
        gate: &Matrix4<Complex64>,
        center_right: bool,
        d_max: usize,
        trunc_eps: f64,
    ) -> Result<f64> {
        debug_assert!(self.center == pos || self.center == pos + 1);
        let a = &self.sites[pos];
        let b = &self.sites[pos + 1];
        let (dl, dr) = (a.dl, b.dr);
        let theta = a.left_matrix() * b.right_matrix();
        // theta[(l·2 + s1), (s2·dr + r)]
        let mut out = Mat::<Complex64>::zeros(dl * 2, 2 * dr);
        for l in 0..dl {
            for r in 0..dr {
                let mut v = [ZERO; 4];
                for s1 in 0..2 {
                    for s2 in 0..2 {
                        v[s1 * 2 + s2] = theta[(l * 2 + s1, s2 * dr + r)];
                    }
                }
                for p in 0..4 {
                    let mut acc = ZERO;
                    for (q, vq) in v.iter().enumerate() {
                        acc += gate[(p, q)] * vq;
                    }
                    out[(l * 2 + p / 2, (p % 2) * dr + r)] = acc;
                }
            }
        }
        let sp = svd_split(&out, d_max, trunc_eps)?;
        let (mut u, mut vh) = (sp.u, sp.v_adj);
        if center_right {
            scale_rows(&mut vh, &sp.s);
            self.center = pos + 1;
        } else {
            scale_cols(&mut u, &sp.s);
            self.center = pos;
        }
        self.sites[pos] = Site::from_left_matrix(&u);
        self.sites[pos + 1] = Site::from_right_matrix(&vh);
        Ok(sp.discarded)
    }

    fn apply_one_site(&mut self, i: usize, gate: &[[Complex64; 2]; 2]) {
        let s = &mut self.sites[i];
        for l in 0..s.dl {
            for r in 0..s.dr {
                let (x0, x1) = (s.at(l, 0, r), s.at(l, 1, r));
                s.data[(l * 2) * s.dr + r] = gate[0][0] * x0 + gate[0][1] * x1;
                s.data[(l * 2 + 1) * s.dr + r] = gate[1][0] * x0 + gate[1][1] * x1;
            }
        }
    }

    /// `⟨n_i⟩` for every site.
    pub fn site_densities(&mut self) -> Result<Vec<f64>> {
        self.move_center(0)?;
        let n = self.n_atoms();
        let mut env = Mat::<Complex64>::identity(1, 1);
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let site = &self.sites[i];
            let mut next = Mat::<Complex64>::zeros(site.dr, site.dr);
            let mut weights = [0.0; 2];
            for (s, w) in weights.iter_mut().enumerate() {
                let a = site.slice(s);
                let t = a.adjoint() * &env * &a;
                *w = (0..site.dr).map(|k| t[(k, k)].re).sum();
                next += &t;
            }
            out.push(weights[1] / (weights[0] + weights[1]));
            env = next;
        }
        Ok(out)
    }

    /// First and second moments of the wall count, optionally as seen
    /// through a detection channel: environments are carried per (last
    /// observed bit, moment order).
    pub fn domain_wall_moments(&mut self, channel: Option<&DetectionModel>) -> Result<(f64, f64)> {
        self.move_center(0)?;
        let n = self.n_atoms();
        let lam = |t: usize, o: usize| match channel {
            Some(c) => c.likelihood(t == 1, o == 1),
            None => (t == o) as u8 as f64,
        };
        // env[o][k]
        let mut env: Vec<[Mat<Complex64>; 3]> = Vec::new();
        for i in 0..n {
            let site = &self.sites[i];
            let d = site.dr;
            let mut next: Vec<[Mat<Complex64>; 3]> = (0..2).map(|_| std::array::from_fn(|_| Mat::zeros(d, d))).collect();
            let slices = [site.slice(0), site.slice(1)];
            for (o, nx) in next.iter_mut().enumerate() {
                for (t, a) in slices.iter().enumerate() {
                    let p = lam(t, o);
                    if p == 0.0 {
                        continue;
                    }
                    let sandwich = |m: &Mat<Complex64>| a.adjoint() * m * a;
                    if i == 0 {
                        let delta = (o == 0) as u8 as f64;
                        let base = sandwich(&Mat::identity(1, 1));
                        axpy(&mut nx[0], &base, p);
                        axpy(&mut nx[1], &base, p * delta);
                        axpy(&mut nx[2], &base, p * delta * delta);
                        continue;
                    }
                    for (prev, e) in env.iter().enumerate() {
                        let delta = (prev == o) as u8 as f64;
                        let m0 = sandwich(&e[0]);
                        let m1 = sandwich(&e[1]);
                        let m2 = sandwich(&e[2]);
                        axpy(&mut nx[0], &m0, p);
                        axpy(&mut nx[1], &m1, p);
                        axpy(&mut nx[1], &m0, p * delta);
                        axpy(&mut nx[2], &m2, p);
                        axpy(&mut nx[2], &m1, 2.0 * p * delta);
                        axpy(&mut nx[2], &m0, p * delta * delta);
                    }
                }
            }
            env = next;
        }
        let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for (o, e) in env.iter().enumerate() {
            let edge = (o == 0) as u8 as f64;
            let tr = |m: &Mat<Complex64>| m[(0, 0)].re;
            z += tr(&e[0]);
            m1 += tr(&e[1]) + edge * tr(&e[0]);
            m2 += tr(&e[2]) + 2.0 * edge * tr(&e[1]) + edge * edge * tr(&e[0]);
        }
        let mean = m1 / z;
        Ok((mean, (m2 / z - mean * mean).max(0.0)))
    }

    /// Full amplitude vector over the full 2^N basis (small chains).
    pub fn to_state_vector(&self) -> Result<StateVector> {
        let n = self.n_atoms();
        let basis = std::sync::Arc::new(BasisSet::enumerate(n, false)?);
        let mut amps = Vec::with_capacity(basis.len());
        for &w in basis.words() {
            let mut v = Mat::<Complex64>::identity(1, 1);
            for (i, site) in self.sites.iter().enumerate() {
                let s = ((w >> (n - 1 - i)) & 1) as usize;
                v = &v * site.slice(s);
            }
            amps.push(v[(0, 0)]);
        }
        StateVector::from_amplitudes(basis, amps)
    }
}

impl ShotSource for MpsState {
    fn n_atoms(&self) -> usize {
        self.sites.len()
    }

    /// Sequential conditional sampling from the right-canonical form.
    fn sample<R: Rng + ?Sized>(&self, n_shots: usize, rng: &mut R) -> Result<Vec<Configuration>> {
        let mut state = self.clone();
        state.move_center(0)?;
        state.normalize_center();
        let mut out = Vec::with_capacity(n_shots);
        for _ in 0..n_shots {
            let mut v = vec![ONE];
            let mut bits = Vec::with_capacity(state.sites.len());
            for site in &state.sites {
                let branch = |s: usize| -> Vec<Complex64> {
                    (0..site.dr).map(|r| v.iter().enumerate().map(|(l, x)| x * site.at(l, s, r)).sum()).collect()
                };
                let (c0, c1) = (branch(0), branch(1));
                let p0: f64 = c0.iter().map(|x| x.norm_sqr()).sum();
                let p1: f64 = c1.iter().map(|x| x.norm_sqr()).sum();
                let excited = rng.random::<f64>() * (p0 + p1) >= p0;
                let (chosen, p) = if excited { (c1, p1) } else { (c0, p0) };
                let scale = p.sqrt();
                v = chosen.into_iter().map(|x| x / scale).collect();
                bits.push(excited);
            }
            out.push(Configuration::from_bits(&bits)?);
        }
        Ok(out)
    }
}

/// Numerical controls for TEBD.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TebdOptions {
    pub dt: f64,
    pub d_max: usize,
    /// Largest discarded weight per bond update.
    pub trunc_eps: f64,
    /// Hard limit on the discarded weight summed over one time step.
    pub weight_ceiling: f64,
}

impl TebdOptions {
    pub fn new(dt: f64, d_max: usize) -> Self {
        Self { dt, d_max, trunc_eps: 1e-16, weight_ceiling: 1e-4 }
    }
}

/// Range-2 couplings extracted from an atom array.
#[derive(Clone, Debug)]
pub struct ChainCouplings {
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
}

impl ChainCouplings {
    pub fn from_array(array: &AtomArray) -> Self {
        let n = array.n_atoms();
        Self {
            v1: (0..n.saturating_sub(1)).map(|i| array.v(i, i + 1)).collect(),
            v2: (0..n.saturating_sub(2)).map(|i| array.v(i, i + 2)).collect(),
        }
    }
}

fn expm_hermitian4(h: &Matrix4<f64>, tau: f64) -> Matrix4<Complex64> {
    let eig = h.symmetric_eigen();
    let v = eig.eigenvectors;
    let mut out = Matrix4::<Complex64>::zeros();
    for k in 0..4 {
        let ph = Complex64::from_polar(1.0, -eig.eigenvalues[k] * tau);
        for i in 0..4 {
            for j in 0..4 {
                out[(i, j)] += ph * v[(i, k)] * v[(j, k)];
            }
        }
    }
    out
}

fn swap_gate() -> Matrix4<Complex64> {
    let mut s = Matrix4::zeros();
    s[(0, 0)] = ONE;
    s[(1, 2)] = ONE;
    s[(2, 1)] = ONE;
    s[(3, 3)] = ONE;
    s
}

struct Gates {
    nn: Vec<Matrix4<Complex64>>,
    nnn: Vec<Matrix4<Complex64>>,
}

fn bond_hamiltonian(n: usize, i: usize, c: &ChainCouplings, omega: f64, delta: f64) -> Matrix4<f64> {
    let share = |k: usize| if k == 0 || k == n - 1 { 1.0 } else { 0.5 };
    let (wa, wb) = (share(i), share(i + 1));
    let mut h = Matrix4::zeros();
    for s in 0..4 {
        let (a, b) = (s >> 1, s & 1);
        h[(s, s)] = -delta * (wa * a as f64 + wb * b as f64) + c.v1[i] * (a * b) as f64;
        h[(s, s ^ 2)] += 0.5 * omega * wa;
        h[(s, s ^ 1)] += 0.5 * omega * wb;
    }
    h
}

fn build_gates(n: usize, c: &ChainCouplings, omega: f64, delta: f64, tau: f64) -> Gates {
    let nn = (0..n - 1).map(|i| expm_hermitian4(&bond_hamiltonian(n, i, c, omega, delta), tau)).collect();
    let nnn = c
        .v2
        .iter()
        .map(|&v| {
            let mut g = Matrix4::identity();
            g[(3, 3)] = Complex64::from_polar(1.0, -v * tau);
            g
        })
        .collect();
    Gates { nn, nnn }
}

/// One symmetric second-order step of length `dt` with frozen `(Ω, Δ)`.
/// `mirrored` runs the reverse pass first; alternating it between steps
/// cancels the leading left-right asymmetry of the sweep ordering.
/// Returns the discarded weight summed over all bond updates.
pub fn tebd_step(
    state: &mut MpsState,
    c: &ChainCouplings,
    omega: f64,
    delta: f64,
    dt: f64,
    mirrored: bool,
    opts: &TebdOptions,
) -> Result<f64> {
    let n = state.n_atoms();
    state.move_center(0)?;
    if n == 1 {
        let h = [[-delta, 0.5 * omega], [0.5 * omega, 0.0]];
        let hm = nalgebra::Matrix2::new(h[1][1], h[1][0], h[0][1], h[0][0]);
        let eig = hm.symmetric_eigen();
        let mut g = [[ZERO; 2]; 2];
        for k in 0..2 {
            let ph = Complex64::from_polar(1.0, -eig.eigenvalues[k] * dt);
            for (i, row) in g.iter_mut().enumerate() {
                for (j, x) in row.iter_mut().enumerate() {
                    *x += ph * eig.eigenvectors[(i, k)] * eig.eigenvectors[(j, k)];
                }
            }
        }
        state.apply_one_site(0, &g);
        return Ok(0.0);
    }
    let gates = build_gates(n, c, omega, delta, 0.5 * dt);
    let swap = swap_gate();
    // (position, gate) in application order
    let mut fwd: Vec<(usize, Matrix4<Complex64>)> = vec![(0, gates.nn[0])];
    let mut rev: Vec<(usize, Matrix4<Complex64>)> = Vec::with_capacity(3 * n);
    for i in 0..n.saturating_sub(2) {
        fwd.push((i + 1, swap));
        fwd.push((i, gates.nnn[i]));
        fwd.push((i + 1, gates.nn[i + 1] * swap));
    }
    for i in (0..n.saturating_sub(2)).rev() {
        rev.push((i + 1, swap * gates.nn[i + 1]));
        rev.push((i, gates.nnn[i]));
        rev.push((i + 1, swap));
    }
    rev.push((0, gates.nn[0]));
    let ordered = if mirrored { rev.into_iter().chain(fwd) } else { fwd.into_iter().chain(rev) };
    // consecutive gates on one bond fuse into a single update
    let mut seq: Vec<(usize, Matrix4<Complex64>)> = Vec::with_capacity(6 * n);
    for (pos, g) in ordered {
        match seq.last_mut() {
            Some((p, prev)) if *p == pos => *prev = g * *prev,
            _ => seq.push((pos, g)),
        }
    }
    let mut discarded = 0.0;
    for k in 0..seq.len() {
        let (pos, gate) = &seq[k];
        let center_right = seq.get(k + 1).is_some_and(|(next, _)| *next > *pos);
        if state.center != *pos && state.center != pos + 1 {
            state.move_center(*pos)?;
        }
        discarded += state.apply_two_site(*pos, gate, center_right, opts.d_max, opts.trunc_eps)?;
    }
    if discarded > opts.weight_ceiling {
        return Err(Error::Accuracy { weight: discarded, ceiling: opts.weight_ceiling });
    }
    state.normalize_center();
    Ok(discarded)
}

/// Result of a TEBD run.
#[derive(Clone, Debug)]
pub struct MpsRun {
    pub trajectory: Trajectory,
    pub final_state: MpsState,
    pub max_step_discarded: f64,
    pub max_norm_drift: f64,
}

/// Evaluates trajectory observables on an MPS.
pub fn measure_mps(state: &mut MpsState, observables: &[Observable], delta: f64) -> Result<Vec<f64>> {
    let n = state.n_atoms();
    let mut row = Vec::new();
    let mut moments = None;
    for o in observables {
        match o {
            Observable::Detuning => row.push(delta),
            Observable::SiteDensities => row.extend(state.site_densities()?),
            Observable::RydbergDensity => row.push(state.site_densities()?.iter().sum::<f64>() / n as f64),
            Observable::DomainWallDensity | Observable::DomainWallVariance => {
                let (m, v) = match moments {
                    Some(x) => x,
                    None => {
                        let x = state.domain_wall_moments(None)?;
                        moments = Some(x);
                        x
                    }
                };
                row.push(if matches!(o, Observable::DomainWallDensity) { m / wall_slots(n) as f64 } else { v });
            }
            Observable::Entropy { cut } => row.push(state.entanglement_entropy(*cut)?),
            Observable::Probability { config } => {
                let c: Configuration = config.parse()?;
                row.push(state.amplitude(&c)?.norm_sqr());
            }
            Observable::MultiExcitation => {
                return Err(Error::Invalid("p_multi is only available for state vectors".into()));
            }
        }
    }
    state.move_center(0)?;
    Ok(row)
}

impl MpsState {
    /// `⟨config|ψ⟩`, assuming a normalized state.
    pub fn amplitude(&self, config: &Configuration) -> Result<Complex64> {
        if config.len() != self.n_atoms() {
            return Err(Error::Shape(format!("configuration has {} sites, state has {}", config.len(), self.n_atoms())));
        }
        let mut v = Mat::<Complex64>::identity(1, 1);
        for (i, site) in self.sites.iter().enumerate() {
            v = &v * site.slice(config.get(i) as usize);
        }
        Ok(v[(0, 0)])
    }
}

/// TEBD under `schedule` with observables recorded at `sample_times`.
/// A `bond_dim_max` column is appended.
pub fn tebd_evolve(
    initial: MpsState,
    array: &AtomArray,
    schedule: &PulseSchedule,
    observables: &[Observable],
    sample_times: &[f64],
    opts: TebdOptions,
) -> Result<MpsRun> {
    let n = initial.n_atoms();
    if array.n_atoms() != n {
        return Err(Error::Shape(format!("state has {n} sites, array has {}", array.n_atoms())));
    }
    if !(opts.dt > 0.0) || opts.d_max == 0 {
        return Err(Error::Invalid("TEBD needs dt > 0 and D_max >= 1".into()));
    }
    for o in observables {
        o.validate(n)?;
    }
    let couplings = ChainCouplings::from_array(array);
    let mut columns = columns_for(observables, n);
    columns.push("bond_dim_max".into());
    let mut trajectory = Trajectory::new(columns);
    let mut state = initial;
    state.move_center(0)?;
    let (mut t, mut max_disc, mut max_drift) = (0.0, 0.0f64, 0.0f64);
    let mut parity = false;
    for &ts in sample_times {
        if ts > t + 1e-12 {
            for (mid, h) in step_plan(schedule, t, ts, opts.dt)? {
                let before = state.norm();
                let d = tebd_step(&mut state, &couplings, schedule.omega(mid), schedule.delta(mid), h, parity, &opts)?;
                parity = !parity;
                max_disc = max_disc.max(d);
                max_drift = max_drift.max((before - 1.0).abs());
            }
            t = ts;
        }
        let mut row = measure_mps(&mut state, observables, schedule.delta(ts))?;
        row.push(state.max_bond_dim() as f64);
        trajectory.push(ts, row);
    }
    Ok(MpsRun { trajectory, final_state: state, max_step_discarded: max_disc, max_norm_drift: max_drift })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{propagate, PropagationOptions};
    use crate::hamiltonian::{Hamiltonian, HamiltonianMode, HamiltonianSpec};
    use crate::model::{mhz, SPACING_Z2_UM, V_NN_Z2_MHZ};
    use rand::SeedableRng;
    use std::sync::Arc;

    fn cfg(s: &str) -> Configuration {
        s.parse().unwrap()
    }

    #[test]
    fn product_state_basics() {
        let mut m = MpsState::from_product(&cfg("10101"));
        assert_eq!(m.max_bond_dim(), 1);
        assert_eq!(m.site_densities().unwrap(), vec![1.0, 0.0, 1.0, 0.0, 1.0]);
        for cut in 1..5 {
            assert_eq!(m.entanglement_entropy(cut).unwrap(), 0.0);
        }
        assert_eq!(m.domain_wall_moments(None).unwrap(), (0.0, 0.0));
        let mut g = MpsState::from_product(&cfg("000"));
        assert_eq!(g.domain_wall_moments(None).unwrap().0, 4.0);
    }

    #[test]
    fn bell_pair_entropy_is_ln2() {
        let basis = Arc::new(BasisSet::enumerate(2, false).unwrap());
        let psi = StateVector::from_amplitudes(basis, vec![ZERO, ONE, ONE, ZERO]).unwrap();
        let mut m = MpsState::from_state_vector(&psi).unwrap();
        assert!((m.entanglement_entropy(1).unwrap() - 2f64.ln()).abs() < 1e-12);
    }

    fn random_state(n: usize, seed: u64) -> StateVector {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let basis = Arc::new(BasisSet::enumerate(n, false).unwrap());
        let amps = (0..basis.len()).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        StateVector::from_amplitudes(basis, amps).unwrap()
    }

    #[test]
    fn moments_match_state_vector() {
        let psi = random_state(7, 1);
        let mut m = MpsState::from_state_vector(&psi).unwrap();
        let n = 7;
        let dw = |w: u64| crate::observables::domain_walls_word(w, n) as f64;
        let mean = psi.expect_diagonal(dw);
        let var = psi.expect_diagonal(|w| dw(w).powi(2)) - mean * mean;
        let (m1, v1) = m.domain_wall_moments(None).unwrap();
        assert!((m1 - mean).abs() < 1e-10 && (v1 - var).abs() < 1e-10);
        let dens = m.site_densities().unwrap();
        for (a, b) in dens.iter().zip(psi.site_densities()) {
            assert!((a - b).abs() < 1e-12);
        }
        for cut in 1..n {
            let a = m.entanglement_entropy(cut).unwrap();
            let b = psi.entanglement_entropy(cut).unwrap();
            assert!((a - b).abs() < 1e-10);
        }
        let back = m.to_state_vector().unwrap();
        assert!(back.overlap(&psi).unwrap().norm() > 1.0 - 1e-12);
    }

    #[test]
    fn dressed_moments_match_enumeration() {
        let n = 6;
        let psi = random_state(n, 2);
        let mut m = MpsState::from_state_vector(&psi).unwrap();
        let ch = DetectionModel::new(0.9, 0.75).unwrap();
        let (mut e1, mut e2) = (0.0, 0.0);
        for (t, a) in psi.amplitudes().iter().enumerate() {
            for o in 0..1u64 << n {
                let mut lam = a.norm_sqr();
                for i in 0..n {
                    lam *= ch.likelihood((t >> i) & 1 == 1, (o >> i) & 1 == 1);
                }
                let d = crate::observables::domain_walls_word(o, n) as f64;
                e1 += lam * d;
                e2 += lam * d * d;
            }
        }
        let (m1, v1) = m.domain_wall_moments(Some(&ch)).unwrap();
        assert!((m1 - e1).abs() < 1e-10);
        assert!((v1 - (e2 - e1 * e1)).abs() < 1e-10);
    }

    fn z2_array(n: usize) -> AtomArray {
        AtomArray::uniform(n, SPACING_Z2_UM, mhz(V_NN_Z2_MHZ)).unwrap().truncated(2)
    }

    #[test]
    fn tebd_matches_exact_at_small_n() {
        for n in [1, 2, 3, 6] {
            let array = z2_array(n);
            let sched = PulseSchedule::constant(mhz(2.0), mhz(3.0), 0.4).unwrap();
            let init = cfg(&"0".repeat(n));
            let opts = TebdOptions::new(0.002, 64);
            let run = tebd_evolve(MpsState::from_product(&init), &array, &sched, &[Observable::SiteDensities], &[0.4], opts).unwrap();
            let h = Hamiltonian::new(HamiltonianSpec::new(array, HamiltonianMode::Full)).unwrap();
            let mut psi = StateVector::from_configuration(h.basis().clone(), &init).unwrap();
            propagate(&h, &mut psi, &sched, 0.0, 0.4, PropagationOptions::new(0.002)).unwrap();
            let exact = psi.site_densities();
            let row = &run.trajectory.rows()[0];
            for i in 0..n {
                assert!((row[i] - exact[i]).abs() < 5e-5, "N={n} site {i}: {} vs {}", row[i], exact[i]);
            }
        }
    }

    #[test]
    fn sampling_agrees_with_state_vector() {
        let psi = random_state(5, 3);
        let m = MpsState::from_state_vector(&psi).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let shots = 200_000;
        let draws = m.sample(shots, &mut rng).unwrap();
        let mut hist = vec![0usize; 32];
        for d in draws {
            hist[d.word() as usize] += 1;
        }
        let mut chi2 = 0.0;
        for (k, a) in psi.amplitudes().iter().enumerate() {
            let e = a.norm_sqr() * shots as f64;
            chi2 += (hist[k] as f64 - e).powi(2) / e;
        }
        // 31 degrees of freedom; 99.99th percentile is about 70
        assert!(chi2 < 70.0, "chi2 = {chi2}");
    }

    #[test]
    fn truncation_ceiling_raises() {
        let array = z2_array(8);
        let sched = PulseSchedule::constant(mhz(2.0), 0.0, 0.5).unwrap();
        let mut opts = TebdOptions::new(0.01, 1);
        opts.weight_ceiling = 1e-12;
        let r = tebd_evolve(MpsState::from_product(&cfg("00000000")), &array, &sched, &[], &[0.5], opts);
        assert!(matches!(r, Err(Error::Accuracy { .. })));
    }

    #[test]
    fn trotter_error_is_second_order() {
        let n = 6;
        let array = z2_array(n);
        let sched = PulseSchedule::constant(mhz(2.0), mhz(3.0), 0.4).unwrap();
        let init = cfg("000000");
        let h = Hamiltonian::new(HamiltonianSpec::new(array.clone(), HamiltonianMode::Full)).unwrap();
        let mut psi = StateVector::from_configuration(h.basis().clone(), &init).unwrap();
        propagate(&h, &mut psi, &sched, 0.0, 0.4, PropagationOptions::new(0.4)).unwrap();
        let exact = psi.site_densities();
        let err = |dt: f64| {
            let run = tebd_evolve(MpsState::from_product(&init), &array, &sched, &[Observable::SiteDensities], &[0.4], TebdOptions::new(dt, 64)).unwrap();
            run.trajectory.rows()[0].iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        let (e1, e2, e3) = (err(0.004), err(0.002), err(0.001));
        for r in [e1 / e2, e2 / e3] {
            assert!((3.5..4.5).contains(&r), "ratio {r}");
        }
    }
}
