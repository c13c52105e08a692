//! `exp(−i H t) ψ` for Hermitian `H` via Lanczos with full reorthogonalization.
//!
//! The Krylov basis does not depend on `t`, so one Lanczos pass serves every
//! sub-step size tried by the adaptive loop; only the small tridiagonal
//! exponential is recomputed.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::l2;

pub const DEFAULT_KRYLOV_DIM: usize = 20;
pub const DEFAULT_TOLERANCE: f64 = 1e-12;
// sub-steps shorter than this fraction of the requested step count as failure
const MIN_STEP_FRACTION: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovOptions {
    pub dim: usize,
    pub tolerance: f64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self { dim: DEFAULT_KRYLOV_DIM, tolerance: DEFAULT_TOLERANCE }
    }
}

/// Diagnostics from one call of [`expm_apply`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KrylovStats {
    pub substeps: usize,
    pub matvecs: usize,
    pub max_error_estimate: f64,
}

/// Replaces `psi` by `exp(−i H t) psi`, where `apply(x, y)` writes `H x` into `y`.
pub fn expm_apply<F>(apply: F, psi: &mut [Complex64], t: f64, opts: KrylovOptions) -> Result<KrylovStats>
where
    F: Fn(&[Complex64], &mut [Complex64]),
{
    if opts.dim < 2 {
        return Err(Error::Invalid("Krylov dimension must be at least 2".into()));
    }
    let n = psi.len();
    let m = opts.dim.min(n.max(1));
    let mut stats = KrylovStats::default();
    let mut remaining = t;
    let mut basis: Vec<Vec<Complex64>> = (0..=m).map(|_| vec![Complex64::new(0.0, 0.0); n]).collect();
    let mut w = vec![Complex64::new(0.0, 0.0); n];

    while remaining.abs() > 0.0 {
        let beta0 = l2(psi);
        if beta0 == 0.0 {
            return Ok(stats);
        }
        for (b, p) in basis[0].iter_mut().zip(psi.iter()) {
            *b = p / beta0;
        }
        let mut alpha = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        let mut happy = false;
        let mut k_eff = m;
        for j in 0..m {
            apply(&basis[j], &mut w);
            stats.matvecs += 1;
            let a: f64 = dot(&basis[j], &w).re;
            alpha.push(a);
            // two passes of classical Gram-Schmidt against the whole basis
            for _ in 0..2 {
                for v in basis.iter().take(j + 1) {
                    let c = dot(v, &w);
                    axpy(-c, v, &mut w);
                }
            }
            let b = l2(&w);
            let scale = a.abs() + beta.last().copied().unwrap_or(0.0) + 1.0;
            if b <= 1e-13 * scale {
                happy = true;
                k_eff = j + 1;
                beta.push(0.0);
                break;
            }
            beta.push(b);
            for (x, y) in basis[j + 1].iter_mut().zip(&w) {
                *x = y / b;
            }
        }

        let eig = tridiagonal(&alpha[..k_eff], &beta[..k_eff - 1]).symmetric_eigen();
        let coefficients = |tau: f64| -> Vec<Complex64> {
            // c = V exp(−iΛτ) Vᵀ e₁
            (0..k_eff)
                .map(|r| {
                    (0..k_eff)
                        .map(|q| {
                            let v = &eig.eigenvectors;
                            Complex64::from_polar(v[(r, q)] * v[(0, q)], -eig.eigenvalues[q] * tau)
                        })
                        .sum()
                })
                .collect()
        };

        let mut tau = remaining;
        let mut c = coefficients(tau);
        let mut err = if happy { 0.0 } else { beta[k_eff - 1] * c[k_eff - 1].norm() };
        while err > opts.tolerance {
            tau *= 0.5;
            if tau.abs() < t.abs() * MIN_STEP_FRACTION {
                return Err(Error::Convergence { residual: err, tolerance: opts.tolerance });
            }
            c = coefficients(tau);
            err = beta[k_eff - 1] * c[k_eff - 1].norm();
        }
        if !err.is_finite() {
            return Err(Error::Convergence { residual: err, tolerance: opts.tolerance });
        }
        psi.iter_mut().for_each(|p| *p = Complex64::new(0.0, 0.0));
        for (ck, v) in c.iter().zip(&basis) {
            axpy(ck * beta0, v, psi);
        }
        stats.substeps += 1;
        stats.max_error_estimate = stats.max_error_estimate.max(err);
        remaining -= tau;
        if (remaining / t).abs() < 1e-14 {
            break;
        }
    }
    Ok(stats)
}

fn tridiagonal(alpha: &[f64], beta: &[f64]) -> DMatrix<f64> {
    let k = alpha.len();
    let mut t = DMatrix::from_diagonal(&DVector::from_column_slice(alpha));
    for j in 0..k.saturating_sub(1) {
        t[(j, j + 1)] = beta[j];
        t[(j + 1, j)] = beta[j];
    }
    t
}

#[inline]
fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[inline]
fn axpy(c: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::dense_propagate;

    fn dense_apply(h: &DMatrix<f64>) -> impl Fn(&[Complex64], &mut [Complex64]) + '_ {
        move |x, y| {
            for i in 0..h.nrows() {
                y[i] = (0..h.ncols()).map(|j| x[j] * h[(i, j)]).sum();
            }
        }
    }

    #[test]
    fn matches_dense_exponential() {
        let n = 40;
        let h = DMatrix::from_fn(n, n, |i, j| ((i * 7 + j * 7 + i * j) % 11) as f64 - 5.0);
        let h = (&h + h.transpose()) * 0.5;
        let psi0: Vec<Complex64> = (0..n).map(|k| Complex64::new(1.0 / (1.0 + k as f64), 0.1 * k as f64)).collect();
        let norm = l2(&psi0);
        let psi0: Vec<Complex64> = psi0.iter().map(|a| a / norm).collect();
        let mut psi = psi0.clone();
        let stats = expm_apply(dense_apply(&h), &mut psi, 0.7, KrylovOptions::default()).unwrap();
        assert!(stats.substeps >= 1);
        let exact = dense_propagate(&h, &psi0, 0.7);
        let diff: f64 = psi.iter().zip(&exact).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(diff < 1e-10, "diff {diff}");
    }

    #[test]
    fn happy_breakdown_on_small_space() {
        let h = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let mut psi = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        expm_apply(dense_apply(&h), &mut psi, std::f64::consts::FRAC_PI_2, KrylovOptions::default()).unwrap();
        assert!(psi[0].norm() < 1e-14);
        assert!((psi[1] - Complex64::new(0.0, -1.0)).norm() < 1e-14);
    }
}
